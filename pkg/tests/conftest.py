import numpy as np
import pytest

from dctmask import dataio


@pytest.fixture(scope="session")
def synthetic_corpus():
    """Mixed-curvature corpus shared by the slower tests."""
    return dataio.generate_synthetic_corpus(seed=1234, count=24)


@pytest.fixture(scope="session")
def synthetic_polygons(synthetic_corpus):
    return [
        inst.polygon
        for rec in synthetic_corpus
        for inst in rec.instances
    ]


def random_convex_polygon(rng: np.random.Generator, n_vertices: int = 8, radius: float = 50.0):
    """Convex hull of random points in a disk (>= 3 hull vertices guaranteed)."""
    from scipy.spatial import ConvexHull

    from dctmask.geometry import Polygon

    while True:
        cloud = rng.uniform(-radius, radius, size=(max(n_vertices, 4), 2))
        hull = ConvexHull(cloud)
        if len(hull.vertices) >= 3:
            return Polygon(cloud[hull.vertices] + 100)
