"""Mesh tests: Delaunay property, seeding, smoothing, quality, contours."""

import math

import numpy as np
import pytest

from _oracles import circumcircle_violations, euler_characteristic, triangle_min_angles
from dsmkit.errors import ConfigError, DataError
from dsmkit.geometry import Rect
from dsmkit.mesh import (
    TriMesh,
    delaunay_triangulate,
    extract_contours,
    laplacian_smooth,
    mesh_quality,
    seed_region,
)


class TestTriMesh:
    def test_clockwise_rejected(self):
        with pytest.raises(DataError):
            TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])

    def test_degenerate_rejected(self):
        with pytest.raises(DataError):
            TriMesh([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])

    def test_index_out_of_range(self):
        with pytest.raises(DataError):
            TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 3]])

    def test_boundary_flags_computed(self):
        # square fan around a center vertex: 4 hull vertices, center interior
        m = TriMesh(
            [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]],
            [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
        )
        assert m.boundary_flags.tolist() == [True, True, True, True, False]

    def test_immutable(self):
        m = TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
        with pytest.raises(ValueError):
            m.vertices[0, 0] = 5.0

    def test_edges_and_neighbors(self):
        m = TriMesh([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2], [0, 2, 3]])
        assert m.edges().tolist() == [[0, 1], [0, 2], [0, 3], [1, 2], [2, 3]]
        indptr, indices = m.vertex_neighbors()
        assert indices[indptr[0] : indptr[1]].tolist() == [1, 2, 3]


class TestDelaunay:
    def test_single_triangle(self):
        m = delaunay_triangulate([(0, 0), (1, 0), (0, 1)])
        assert m.n_triangles == 1
        assert sorted(m.triangles[0]) == [0, 1, 2]

    def test_unit_square_two_triangles(self):
        m = delaunay_triangulate([(0, 0), (1, 0), (1, 1), (0, 1)])
        assert m.n_triangles == 2
        # either diagonal is a valid cocircular resolution; the shared edge
        # must be one of them
        e = {tuple(x) for x in m.edges().tolist()}
        assert ((0, 2) in e) != ((1, 3) in e)

    def test_duplicates_deduplicated_with_report(self, caplog):
        with caplog.at_level("WARNING", logger="dsmkit.mesh"):
            m = delaunay_triangulate([(0, 0), (1, 0), (0, 1), (0, 0), (1, 0)])
        assert m.n_vertices == 3
        assert any("deduplicated" in r.message for r in caplog.records)

    def test_too_few_points(self):
        with pytest.raises(DataError):
            delaunay_triangulate([(0, 0), (1, 1)])

    def test_collinear_rejected(self):
        with pytest.raises(DataError):
            delaunay_triangulate([(0, 0), (1, 0), (2, 0), (3, 0)])

    def test_random_points_empty_circumcircle(self):
        # derived oracle: brute-force circumcenter check over all pairs
        rng = np.random.default_rng(2024)
        pts = rng.uniform(0, 100, size=(200, 2))
        m = delaunay_triangulate(pts)
        assert circumcircle_violations(m.vertices, m.triangles) == 0
        assert euler_characteristic(m.n_vertices, m.triangles) == 2

    def test_structured_grid_with_cocircular_ties(self):
        xs, ys = np.meshgrid(np.arange(8.0), np.arange(6.0))
        pts = np.column_stack([xs.ravel(), ys.ravel()])
        m = delaunay_triangulate(pts)
        assert m.n_triangles == 2 * 7 * 5
        assert circumcircle_violations(m.vertices, m.triangles) == 0
        assert euler_characteristic(m.n_vertices, m.triangles) == 2

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        pts = rng.uniform(-10, 10, size=(150, 2))
        m1 = delaunay_triangulate(pts)
        m2 = delaunay_triangulate(pts)
        assert np.array_equal(m1.triangles, m2.triangles)
        assert np.array_equal(m1.vertices, m2.vertices)

    def test_near_degenerate_cluster(self):
        # tight cluster plus far points: exact predicates must not crash
        pts = [(0, 0), (1e-12, 0), (0, 1e-12), (1, 0), (0, 1), (1, 1)]
        m = delaunay_triangulate(pts)
        assert circumcircle_violations(m.vertices, m.triangles) == 0

    def test_hull_flags_match_convex_hull(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(0, 1, size=(60, 2))
        m = delaunay_triangulate(pts)
        # hull vertices are exactly those on boundary edges (edges with one triangle)
        t = m.triangles
        edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        expected = np.zeros(m.n_vertices, dtype=bool)
        expected[uniq[counts == 1].ravel()] = True
        assert np.array_equal(m.boundary_flags, expected)


class TestSeedRegion:
    def test_counting_oracle(self):
        pts = seed_region(Rect(0, 0, 300, 400), 100.0, strategy="grid")
        assert len(pts) == 4 * 5

    def test_corners_present(self):
        rect = Rect(377676.932, 5397926.333, 377950.404, 5398332.260)
        for strategy in ("grid", "jittered"):
            pts = seed_region(rect, 50.0, strategy=strategy)
            for corner in rect.corners():
                assert any(np.all(p == corner) for p in pts)

    def test_boundary_exactly_on_edges(self):
        rect = Rect(0, 0, 10, 8)
        pts = seed_region(rect, 2.0, strategy="jittered", seed=3)
        on_edge = (
            (pts[:, 0] == rect.x_min)
            | (pts[:, 0] == rect.x_max)
            | (pts[:, 1] == rect.y_min)
            | (pts[:, 1] == rect.y_max)
        )
        # a 6x5 grid has 18 boundary nodes
        assert on_edge.sum() == 18
        inside = ~on_edge
        assert np.all(pts[inside, 0] > rect.x_min) and np.all(pts[inside, 0] < rect.x_max)

    def test_jitter_deterministic(self):
        rect = Rect(0, 0, 10, 10)
        a = seed_region(rect, 1.0, strategy="jittered", seed=42)
        b = seed_region(rect, 1.0, strategy="jittered", seed=42)
        assert np.array_equal(a, b)
        c = seed_region(rect, 1.0, strategy="jittered", seed=43)
        assert not np.array_equal(a, c)

    def test_jitter_bounded(self):
        rect = Rect(0, 0, 10, 10)
        grid = seed_region(rect, 1.0, strategy="grid")
        jit = seed_region(rect, 1.0, strategy="jittered", seed=1)
        assert np.all(np.abs(jit - grid) <= 0.3 + 1e-12)

    def test_spacing_too_large(self):
        with pytest.raises(ConfigError):
            seed_region(Rect(0, 0, 10, 10), 50.0)


def _square_fan(center=(0.2, 0.3)):
    return TriMesh(
        [[0, 0], [1, 0], [1, 1], [0, 1], list(center)],
        [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
    )


class TestLaplacianSmooth:
    def test_single_interior_vertex_to_centroid(self):
        m = laplacian_smooth(_square_fan((0.2, 0.3)), 1)
        assert m.vertices[4].tolist() == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_fixed_point(self):
        m0 = _square_fan((0.5, 0.5))
        m1 = laplacian_smooth(m0, 5)
        assert np.array_equal(m0.vertices, m1.vertices)

    def test_zero_iterations_is_identity(self):
        m0 = _square_fan()
        assert laplacian_smooth(m0, 0) is m0

    def test_boundary_bit_exact_no_inversion_quality_improves(self):
        pts = seed_region(Rect(0, 0, 19, 19), 1.0, strategy="jittered", seed=42)
        m0 = delaunay_triangulate(pts)
        m1 = laplacian_smooth(m0, 10)
        # boundary untouched, bit for bit
        bmask = m0.boundary_flags
        assert np.array_equal(m0.vertices[bmask], m1.vertices[bmask])
        # connectivity unchanged
        assert np.array_equal(m0.triangles, m1.triangles)
        # no inversion: TriMesh construction already enforces CCW, but check
        # against the independent per-triangle recomputation too
        a = m1.vertices[m1.triangles[:, 0]]
        b = m1.vertices[m1.triangles[:, 1]]
        c = m1.vertices[m1.triangles[:, 2]]
        area2 = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
            c[:, 0] - a[:, 0]
        )
        assert np.all(area2 > 0)
        # mean smallest angle must not decrease
        q0 = triangle_min_angles(m0.vertices, m0.triangles).mean()
        q1 = triangle_min_angles(m1.vertices, m1.triangles).mean()
        assert q1 >= q0

    def test_planar_only(self):
        m = TriMesh([[0, 0, 1], [1, 0, 2], [0, 1, 3]], [[0, 1, 2]])
        with pytest.raises(DataError):
            laplacian_smooth(m, 1)


class TestMeshQuality:
    def test_equilateral(self):
        m = TriMesh([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]], [[0, 1, 2]])
        q = mesh_quality(m)
        assert q.min_angle == pytest.approx(60.0, abs=1e-9)
        assert q.worst_aspect_ratio == pytest.approx(math.sqrt(3), rel=1e-9)

    def test_right_isoceles(self):
        m = TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
        assert mesh_quality(m).min_angle == pytest.approx(45.0, abs=1e-9)

    def test_matches_independent_recomputation(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(0, 50, size=(120, 2))
        m = delaunay_triangulate(pts)
        q = mesh_quality(m)
        ref = triangle_min_angles(m.vertices, m.triangles)
        assert q.min_angle == pytest.approx(ref.min(), abs=1e-9)
        assert q.mean_min_angle == pytest.approx(ref.mean(), abs=1e-9)

    def test_3d_mesh_quality(self):
        m = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 1]], [[0, 1, 2]])
        q = mesh_quality(m)
        assert 0 < q.min_angle <= 60.0


def _lifted_grid(f, half=200.0, spacing=10.0):
    n = int(2 * half / spacing) + 1
    xs = np.linspace(-half, half, n)
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    planar = delaunay_triangulate(pts)
    z = np.array([f(x, y) for x, y in planar.vertices])
    return planar.with_vertices(np.column_stack([planar.vertices, z]))


class TestContours:
    def test_linear_field_single_line(self):
        # grid vertices sit exactly on the level, so the 1e-9 nudge applies
        m = _lifted_grid(lambda x, y: x, half=0.5, spacing=0.25)
        polys = extract_contours(m, [0.0])[0]
        pts = np.vstack(polys)
        assert np.allclose(pts[:, 0], 0.0, atol=1e-6)
        ys = np.concatenate([[p[0, 1], p[-1, 1]] for p in polys])
        assert ys.min() == pytest.approx(-0.5) and ys.max() == pytest.approx(0.5)

    def test_constant_field_no_contours(self):
        m = _lifted_grid(lambda x, y: 7.0, half=1.0, spacing=0.5)
        assert extract_contours(m, [3.0]) == [[]]
        assert extract_contours(m, [7.0]) == [[]]  # exact hits nudged away

    def test_empty_levels(self):
        m = _lifted_grid(lambda x, y: x, half=1.0, spacing=0.5)
        assert extract_contours(m, []) == []

    def test_gaussian_ring_radius(self):
        base, amp, sigma = 400.0, 50.0, 60.0
        m = _lifted_grid(
            lambda x, y: base + amp * math.exp(-(x * x + y * y) / (2 * sigma**2))
        )
        level = base + amp / 2.0
        polys = extract_contours(m, [level])[0]
        assert len(polys) == 1
        ring = polys[0]
        # closed loop around the analytic half-maximum circle
        assert np.array_equal(ring[0], ring[-1])
        r_expected = sigma * math.sqrt(2.0 * math.log(2.0))
        radii = np.hypot(ring[:, 0], ring[:, 1])
        edge_len = 10.0 * math.sqrt(2.0)
        assert np.all(np.abs(radii - r_expected) <= edge_len)

    def test_endpoints_interpolate_to_level(self):
        # every polyline point must sit on a mesh edge at exactly the level
        m = _lifted_grid(lambda x, y: 0.01 * x + 0.02 * y + 5.0, half=50.0, spacing=25.0)
        level = 5.3
        polys = extract_contours(m, [level])[0]
        verts = m.vertices
        for poly in polys:
            for px, py in poly:
                # find an edge whose plan segment contains the point
                found = False
                for u, v in m.edges():
                    a, b = verts[u], verts[v]
                    seg = b[:2] - a[:2]
                    L2 = seg @ seg
                    t = ((px - a[0]) * seg[0] + (py - a[1]) * seg[1]) / L2
                    if -1e-9 <= t <= 1 + 1e-9:
                        q = a[:2] + t * seg
                        if abs(q[0] - px) < 1e-9 and abs(q[1] - py) < 1e-9:
                            z = a[2] + t * (b[2] - a[2])
                            if abs(z - level) <= 1e-9 * max(1.0, abs(level)):
                                found = True
                                break
                assert found

    def test_requires_3d(self):
        m = TriMesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
        with pytest.raises(DataError):
            extract_contours(m, [0.5])
