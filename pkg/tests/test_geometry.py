import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochwave.geometry import (
    Disk,
    Interval,
    LeafCurve,
    SpaceTimeDomain,
    UnitSquare,
    domain_from_config,
    leaf_normal,
    leaf_point,
    sample_boundary,
    sample_interior,
    trace_grid,
)

UNIT = SpaceTimeDomain(Interval(0.0, 1.0))
DISK = SpaceTimeDomain(Disk((0.0, 0.0), 1.0))
LEAF = SpaceTimeDomain(LeafCurve())
SQUARE = SpaceTimeDomain(UnitSquare())


def _leaf_polar_ok(p, tol=1e-12):
    r = np.hypot(p[:, 0], p[:, 1])
    th = np.arctan2(p[:, 1], p[:, 0])
    return np.all(r < np.sin(2 * th) + tol)


class TestConstruction:
    def test_interval_order(self):
        with pytest.raises(ValueError):
            Interval(1.0, 0.0)

    def test_disk_radius(self):
        with pytest.raises(ValueError):
            Disk((0.0, 0.0), 0.0)

    def test_time_horizon(self):
        with pytest.raises(ValueError):
            SpaceTimeDomain(Interval(0.0, 1.0), T=0.0)

    @pytest.mark.parametrize("dom, n", [(UNIT, 1), (DISK, 2), (LEAF, 2), (SQUARE, 2)])
    def test_dimension(self, dom, n):
        assert dom.n == n

    @pytest.mark.parametrize(
        "cfg, kind",
        [
            ({"shape": "interval", "a": 0, "b": 2}, Interval),
            ({"shape": "disk", "radius": 2.0}, Disk),
            ({"shape": "leaf"}, LeafCurve),
            ({"shape": "square"}, UnitSquare),
        ],
    )
    def test_from_config(self, cfg, kind):
        assert isinstance(domain_from_config(cfg).shape, kind)

    def test_from_config_unknown(self):
        with pytest.raises(ValueError):
            domain_from_config({"shape": "torus"})


class TestInterior:
    def test_interval_three_points(self):
        np.testing.assert_allclose(sample_interior(UNIT, 3).ravel(), [0.25, 0.5, 0.75])

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            sample_interior(UNIT, 0)

    @pytest.mark.parametrize("n", [1, 10, 57, 300])
    def test_disk_membership(self, n):
        p = sample_interior(DISK, n)
        assert len(p) >= n
        assert np.all(p[:, 0] ** 2 + p[:, 1] ** 2 < 1.0)

    @pytest.mark.parametrize("n", [1, 10, 57, 300])
    def test_leaf_membership(self, n):
        p = sample_interior(LEAF, n)
        assert len(p) >= n
        assert _leaf_polar_ok(p)

    @pytest.mark.parametrize("n", [1, 9, 50])
    def test_square_membership(self, n):
        p = sample_interior(SQUARE, n)
        assert np.all((p > 0) & (p < 1))

    def test_deterministic(self):
        np.testing.assert_array_equal(sample_interior(LEAF, 80), sample_interior(LEAF, 80))

    @pytest.mark.parametrize("dom, nb", [(UNIT, 2), (DISK, 40), (LEAF, 41), (SQUARE, 40)])
    def test_disjoint_from_boundary(self, dom, nb):
        a = sample_interior(dom, 200)
        b = sample_boundary(dom, nb).x
        d = np.min(np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1))
        assert d > 1e-9


class TestBoundary:
    def test_interval_endpoints(self):
        b = sample_boundary(UNIT, 2)
        np.testing.assert_array_equal(b.x.ravel(), [0.0, 1.0])
        np.testing.assert_array_equal(b.nu.ravel(), [-1.0, 1.0])

    def test_interval_count(self):
        with pytest.raises(ValueError):
            sample_boundary(UNIT, 3)

    def test_disk_four(self):
        b = sample_boundary(DISK, 4)
        expect = np.array([[1, 0], [0, 1], [-1, 0], [0, -1]], dtype=float)
        np.testing.assert_allclose(b.x, expect, atol=1e-15)
        np.testing.assert_allclose(b.nu, b.x, atol=1e-15)

    def test_too_few(self):
        with pytest.raises(ValueError):
            sample_boundary(DISK, 1)

    def test_square_multiple_of_four(self):
        with pytest.raises(ValueError):
            sample_boundary(SQUARE, 10)

    def test_leaf_at_quarter_pi(self):
        np.testing.assert_allclose(leaf_point(math.pi / 4), [math.sqrt(2) / 2, math.sqrt(2) / 2], atol=1e-15)
        # odd counts put a sample exactly at theta = pi/4
        b = sample_boundary(LEAF, 5)
        np.testing.assert_allclose(b.x[2], [math.sqrt(2) / 2, math.sqrt(2) / 2], atol=1e-15)

    def test_leaf_excludes_cusp(self):
        b = sample_boundary(LEAF, 64)
        assert np.all(np.hypot(b.x[:, 0], b.x[:, 1]) > 1e-3)

    @pytest.mark.parametrize("theta", [0.2, 0.6, math.pi / 4, 1.1, 1.4])
    def test_leaf_normal_against_fd_tangent(self, theta):
        h = 1e-6
        tangent = (leaf_point(theta + h) - leaf_point(theta - h)) / (2 * h)
        tangent /= np.linalg.norm(tangent)
        nu = leaf_normal(theta)
        np.testing.assert_allclose(nu, [tangent[1], -tangent[0]], atol=1e-8)

    def test_leaf_normal_outward(self):
        b = sample_boundary(LEAF, 33)
        assert not np.any(LEAF.shape.contains(b.x + 1e-4 * b.nu))
        assert np.all(LEAF.shape.contains(b.x - 1e-4 * b.nu))

    @pytest.mark.parametrize("dom, nb", [(DISK, 17), (LEAF, 17), (SQUARE, 16)])
    def test_unit_normals(self, dom, nb):
        b = sample_boundary(dom, nb)
        np.testing.assert_allclose(np.linalg.norm(b.nu, axis=1), 1.0, atol=1e-12)

    def test_on_curve(self):
        b = sample_boundary(LEAF, 50)
        r = np.hypot(b.x[:, 0], b.x[:, 1])
        th = np.arctan2(b.x[:, 1], b.x[:, 0])
        np.testing.assert_allclose(r, np.sin(2 * th), atol=1e-10)
        d = sample_boundary(DISK, 50)
        np.testing.assert_allclose(np.hypot(d.x[:, 0], d.x[:, 1]), 1.0, atol=1e-12)

    @given(st.integers(min_value=2, max_value=200))
    @settings(max_examples=25, deadline=None)
    def test_disk_normal_is_radial(self, n):
        dom = SpaceTimeDomain(Disk((0.3, -0.2), 2.0))
        b = sample_boundary(dom, n)
        np.testing.assert_allclose(b.nu, (b.x - np.array([0.3, -0.2])) / 2.0, atol=1e-12)


def _polygon_area(p):
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def test_leaf_area_converges_quadratically():
    exact = math.pi / 8
    errs = []
    for n in (100, 200):
        pts = np.vstack([[0.0, 0.0], sample_boundary(LEAF, n).x])
        errs.append(abs(_polygon_area(pts) - exact))
    assert LEAF.shape.area() == pytest.approx(exact)
    assert 3.0 < errs[0] / errs[1] < 5.0


class TestTraceGrid:
    def test_interval_product(self):
        g = trace_grid(UNIT, 2, 3)
        assert len(g) == 6
        pts = sorted(zip(g.x.ravel(), g.t))
        assert pts == [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (1.0, 0.0), (1.0, 0.5), (1.0, 1.0)]

    def test_disk_count(self):
        assert len(trace_grid(DISK, 4, 2)) == 8

    @pytest.mark.parametrize("dom, nb", [(UNIT, 2), (DISK, 12), (LEAF, 9), (SQUARE, 8)])
    def test_time_range(self, dom, nb):
        g = trace_grid(dom, nb, 7)
        assert g.t.min() == 0.0 and g.t.max() == dom.T

    def test_boundary_major(self):
        g = trace_grid(DISK, 5, 4)
        np.testing.assert_array_equal(g.times, [0.0, 1 / 3, 2 / 3, 1.0])
        np.testing.assert_array_equal(g.x[3], g.x[0])
        assert not np.array_equal(g.x[4], g.x[0])

    def test_needs_two_levels(self):
        with pytest.raises(ValueError):
            trace_grid(UNIT, 2, 1)
