import numpy as np
import pytest

from dctmask.geometry import (
    Box,
    DegeneratePolygonWarning,
    EmptyKernelError,
    Polygon,
    bounding_box,
    clip_to_box,
    polygon_iou,
    rasterize_polygon,
    shrink_polygon,
)

from conftest import random_convex_polygon


def oracle_point_in_polygon(vertices, x, y):
    """Independent even-odd ray cast, scalar loop form."""
    inside = False
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xs = (x1 - x0) * (y - y0) / (y1 - y0) + x0
            if x < xs:
                inside = not inside
    return inside


class TestRasterize:
    def test_full_cover_square(self):
        mask = rasterize_polygon(Polygon([(0, 0), (8, 0), (8, 8), (0, 8)]), 8, 8)
        assert mask.foreground() == 64

    def test_quadrant_square(self):
        mask = rasterize_polygon(Polygon([(0, 0), (4, 0), (4, 4), (0, 4)]), 8, 8)
        assert mask.foreground() == 16
        assert mask.grid[:4, :4].sum() == 16

    def test_triangle_matches_center_enumeration_oracle(self):
        tri = [(0, 0), (8, 0), (0, 8)]
        mask = rasterize_polygon(Polygon(tri), 8, 8)
        expected = sum(
            oracle_point_in_polygon(tri, j + 0.5, i + 0.5)
            for i in range(8)
            for j in range(8)
        )
        assert mask.foreground() == expected
        for i in range(8):
            for j in range(8):
                assert bool(mask.grid[i, j]) == oracle_point_in_polygon(tri, j + 0.5, i + 0.5)

    def test_degenerate_polygon_warns_and_is_empty(self):
        degenerate = Polygon([(0, 0), (5, 5), (10, 10)])
        with pytest.warns(DegeneratePolygonWarning):
            mask = rasterize_polygon(degenerate, 8, 8)
        assert mask.foreground() == 0

    def test_area_ratio_property(self, synthetic_polygons):
        # foreground fraction tracks polygon area within 2% once the shape
        # spans at least ~32 cells per side
        checked = 0
        for poly in synthetic_polygons:
            box = bounding_box(poly)
            if min(box.width, box.height) < 32:
                continue
            w, h = 640, 640
            mask = rasterize_polygon(poly, w, h)
            assert abs(mask.foreground() / (w * h) - poly.area / (w * h)) < 0.02
            checked += 1
        assert checked > 0


class TestShrink:
    def test_square_exact_offset(self):
        shrunk = shrink_polygon(Polygon([(0, 0), (8, 0), (8, 8), (0, 8)]), 0.5)
        # d = 64 * (1 - 0.25) / 32 = 1.5
        assert sorted(map(tuple, shrunk.vertices.tolist())) == [
            (1.5, 1.5),
            (1.5, 6.5),
            (6.5, 1.5),
            (6.5, 6.5),
        ]

    def test_rate_one_is_identity(self, synthetic_polygons):
        poly = synthetic_polygons[0]
        shrunk = shrink_polygon(poly, 1.0)
        assert np.allclose(np.sort(shrunk.vertices, axis=0), np.sort(poly.vertices, axis=0))

    def test_convex_matches_half_plane_oracle(self):
        # inward parallel offset of a convex polygon equals the intersection
        # of its inward-offset edge half-planes; verify via dense sampling
        rng = np.random.default_rng(42)
        for _ in range(20):
            poly = random_convex_polygon(rng).normalized()
            d = poly.area * (1 - 0.25) / poly.perimeter
            shrunk = shrink_polygon(poly, 0.5)
            v = poly.vertices
            edges = list(zip(v, np.roll(v, -1, axis=0)))
            pts = np.random.default_rng(1).uniform(40, 160, size=(500, 2))
            oracle = np.ones(len(pts), dtype=bool)
            for (a, b) in edges:
                t = b - a
                nrm = np.array([-t[1], t[0]]) / np.hypot(*t)  # inward for CCW
                oracle &= (pts - a) @ nrm >= d - 1e-9
            got = shrunk.contains_points(pts)
            boundary_slack = np.zeros(len(pts), dtype=bool)
            for (a, b) in edges:
                t = b - a
                nrm = np.array([-t[1], t[0]]) / np.hypot(*t)
                boundary_slack |= np.abs((pts - a) @ nrm - d) < 1e-6
            assert np.array_equal(got[~boundary_slack], oracle[~boundary_slack])

    def test_thin_rectangle_contained(self):
        rect = Polygon([(0, 0), (100, 0), (100, 2), (0, 2)])
        shrunk = shrink_polygon(rect, 0.5)
        # d = 150 / 204
        samples = _boundary_samples(shrunk, 64)
        assert rect.contains_points(samples).all()

    def test_sampled_containment_random_convex(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            poly = random_convex_polygon(rng, n_vertices=int(rng.integers(4, 12)))
            shrunk = shrink_polygon(poly, 0.5)
            assert shrunk.area < poly.area
            samples = _boundary_samples(shrunk, 64)
            assert poly.contains_points(samples).all()

    def test_zero_area_input_raises(self):
        with pytest.raises(EmptyKernelError):
            shrink_polygon(Polygon([(0, 0), (5, 5), (10, 10)]), 0.5)

    def test_split_offset_keeps_largest_piece(self):
        # dumbbell: two fat lobes joined by a neck thinner than the offset,
        # the raw offset splits and the larger lobe's kernel is kept
        dumbbell = Polygon(
            [
                (0, 0), (40, 0), (40, 18), (70, 18), (70, 10), (100, 10),
                (100, 40), (70, 40), (70, 32), (40, 32), (40, 50), (0, 50),
            ]
        )
        shrunk = shrink_polygon(dumbbell, 0.5)
        samples = _boundary_samples(shrunk, 64)
        assert dumbbell.contains_points(samples).all()
        # the surviving piece sits in the larger (left) lobe
        assert shrunk.vertices[:, 0].max() < 45

    def test_bad_rate_rejected(self):
        sq = Polygon([(0, 0), (8, 0), (8, 8), (0, 8)])
        for rate in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError):
                shrink_polygon(sq, rate)


def _boundary_samples(poly: Polygon, count: int) -> np.ndarray:
    v = np.vstack([poly.vertices, poly.vertices[:1]])
    seg = np.hypot(*np.diff(v, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    at = np.linspace(0, cum[-1], count, endpoint=False)
    return np.stack([np.interp(at, cum, v[:, 0]), np.interp(at, cum, v[:, 1])], axis=1)


class TestPolygonIou:
    def test_identical(self):
        sq = Polygon([(0, 0), (5, 0), (5, 5), (0, 5)])
        assert polygon_iou(sq, sq) == 1.0

    def test_disjoint(self):
        a = Polygon([(0, 0), (2, 0), (2, 2), (0, 2)])
        b = Polygon([(10, 10), (12, 10), (12, 12), (10, 12)])
        assert polygon_iou(a, b) == 0.0

    def test_rectangle_pair_exact_arithmetic(self):
        # intersection 2, union 6
        a = Polygon([(0, 0), (2, 0), (2, 2), (0, 2)])
        b = Polygon([(1, 0), (3, 0), (3, 2), (1, 2)])
        assert abs(polygon_iou(a, b) - 1 / 3) < 1e-3

    def test_symmetry(self, synthetic_polygons):
        a, b = synthetic_polygons[0], synthetic_polygons[1]
        assert polygon_iou(a, b) == polygon_iou(b, a)

    def test_axis_aligned_rect_pairs_match_area_arithmetic(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            ax0, ay0 = rng.uniform(0, 50, 2)
            aw, ah = rng.uniform(5, 60, 2)
            bx0, by0 = rng.uniform(0, 50, 2)
            bw, bh = rng.uniform(5, 60, 2)
            a = Polygon([(ax0, ay0), (ax0 + aw, ay0), (ax0 + aw, ay0 + ah), (ax0, ay0 + ah)])
            b = Polygon([(bx0, by0), (bx0 + bw, by0), (bx0 + bw, by0 + bh), (bx0, by0 + bh)])
            ix = max(0.0, min(ax0 + aw, bx0 + bw) - max(ax0, bx0))
            iy = max(0.0, min(ay0 + ah, by0 + bh) - max(ay0, by0))
            inter = ix * iy
            union = aw * ah + bw * bh - inter
            assert abs(polygon_iou(a, b) - inter / union) < 1e-3


class TestBoundingBox:
    def test_triangle(self):
        box = bounding_box(Polygon([(0, 0), (4, 0), (0, 6)]))
        assert (box.x_min, box.y_min, box.x_max, box.y_max) == (0, 0, 4, 6)

    def test_square_is_itself(self):
        box = bounding_box(Polygon([(2, 3), (7, 3), (7, 9), (2, 9)]))
        assert (box.x_min, box.y_min, box.x_max, box.y_max) == (2, 3, 7, 9)

    def test_matches_brute_force_scan(self, synthetic_polygons):
        for poly in synthetic_polygons[:10]:
            box = bounding_box(poly)
            xs = [x for x, _ in poly.vertices]
            ys = [y for _, y in poly.vertices]
            assert box.x_min == min(xs) and box.x_max == max(xs)
            assert box.y_min == min(ys) and box.y_max == max(ys)


class TestHelpers:
    def test_polygon_validation(self):
        with pytest.raises(ValueError):
            Polygon([(0, 0), (1, 1)])
        with pytest.raises(ValueError):
            Polygon([(0, 0), (1, np.nan), (2, 2)])

    def test_box_validation(self):
        with pytest.raises(ValueError):
            Box(5, 0, 1, 2)

    def test_clip_to_box(self):
        sq = Polygon([(-5, -5), (5, -5), (5, 5), (-5, 5)])
        clipped = clip_to_box(sq, Box(0, 0, 10, 10))
        assert clipped is not None
        assert clipped.area == pytest.approx(25.0)
        assert clip_to_box(sq, Box(20, 20, 30, 30)) is None

    def test_orientation_normalization(self):
        cw = Polygon([(0, 0), (0, 8), (8, 8), (8, 0)])
        assert cw.signed_area() < 0
        assert cw.normalized().signed_area() > 0
