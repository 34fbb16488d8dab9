import math

import numpy as np
import pytest

import ldp_hull as lh
from ldp_hull import solver
from ldp_hull.errors import (
    NoCandidateError,
    NotFullPlaneError,
    NotSymmetricError,
    OutOfRangeError,
)


def drift_phi(a: float) -> float:
    """Independent scalar bisection of (2 phi - sin 2 phi) / (8 phi^2 cos^2 phi) = a."""
    f = lambda p: (2 * p - math.sin(2 * p)) / (8 * p * p * math.cos(p) ** 2) - a
    lo, hi = 1e-9, math.pi / 2 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def drift_rate_reference(a: float) -> float:
    phi = drift_phi(a)
    return 4 * a * phi - 0.5 * math.tan(phi) ** 2


def test_symmetric_level_isotropic(iso):
    # E(alpha) = 2 pi alpha, so the level equation gives alpha = pi * a
    for a in (0.3, 1.0, 2.0):
        assert lh.symmetric_level(iso, a) == pytest.approx(math.pi * a, rel=1e-6)


def test_symmetric_level_wide_gaussian():
    # K(u) = |u|^2: E(alpha) = pi * alpha, alpha = pi * a / 2
    wide = lh.gaussian([0, 0], 2.0 * np.eye(2))
    assert lh.symmetric_level(wide, 1.0) == pytest.approx(math.pi / 2, rel=1e-6)


def test_symmetric_level_monotone_in_area(iso):
    grid = [lh.symmetric_level(iso, a) for a in (0.01, 0.1, 0.5, 1.0)]
    assert all(x < y for x, y in zip(grid, grid[1:]))
    assert grid[0] < 0.1


def test_symmetric_level_errors(drift, square_atoms):
    with pytest.raises(NotSymmetricError):
        lh.symmetric_level(drift, 1.0)
    # bounded support: hull of {max_i u.p_i <= 1} is the diamond |x|+|y| <= 1/2
    # of area 1/2, so the attainable range ends at a_max = 1/(2 * 1/2) = 1;
    # the carried value is a quadrature-limited estimate (near-polygonal level
    # sets bias the arc mass at first order in the angular step)
    with pytest.raises(OutOfRangeError) as exc:
        lh.symmetric_level(square_atoms, 2.0)
    assert exc.value.a_max == pytest.approx(1.0, rel=1e-2)


def test_candidate_directions_symmetric_sentinel(iso, square_atoms):
    assert lh.candidate_directions(iso, 1.0) is lh.ALL_DIRECTIONS
    assert lh.candidate_directions(square_atoms, 1.0) is lh.ALL_DIRECTIONS


def test_candidate_directions_drifted(drift):
    found = lh.candidate_directions(drift, 1.0, k=256)
    assert len(found) == 4
    for ell, tau in found:
        assert abs(ell[0]) <= 1e-9 and abs(abs(ell[1]) - 1.0) <= 1e-9
        assert tau in (+1, -1)
    ells = sorted(round(e[1], 6) for e, _ in found)
    assert ells == [-1.0, -1.0, 1.0, 1.0]


def test_candidate_directions_resolution_stable(drift):
    a = lh.candidate_directions(drift, 0.8, k=64)
    b = lh.candidate_directions(drift, 0.8, k=512)
    ta = sorted(math.atan2(e[1], e[0]) % math.pi for e, _ in a)
    tb = sorted(math.atan2(e[1], e[0]) % math.pi for e, _ in b)
    assert len(ta) == len(tb)
    assert np.allclose(ta, tb, atol=1e-6)


def test_build_trajectory_geometry(iso):
    alpha = math.pi  # the level for a = 1
    traj = lh.build_trajectory(iso, alpha, [1.0, 0.0], +1, n=512)
    np.testing.assert_array_equal(traj.points[0], [0.0, 0.0])
    # h' is grad K on the arc, perpendicular to the arc tangent
    arc = lh.arc_parametrization(iso, alpha, [1.0, 0.0], +1, n=512)
    dots = np.einsum("ij,ij->i", traj.derivs, arc.derivs)
    scale = np.linalg.norm(traj.derivs, axis=1) * np.linalg.norm(arc.derivs, axis=1)
    assert np.max(np.abs(dots) / scale) <= 1e-12
    assert lh.hull_area(traj.points) == pytest.approx(1.0, rel=1e-4)


def test_rate_of_area_isotropic_scaling(iso):
    for a in (0.25, 2.0):
        res = lh.rate_of_area(iso, a)
        assert res.rate == pytest.approx(math.pi * a, rel=1e-4)
        assert res.rate == min(c.energy for c in res.candidates)


def test_rate_of_area_orientation_symmetry(iso, square_atoms):
    for model, a in ((iso, 1.0), (square_atoms, 0.2)):
        res = lh.rate_of_area(model, a)
        taus = sorted(c.tau for c in res.candidates)
        assert taus == [-1, 1]
        e = [c.energy for c in res.candidates]
        assert abs(e[0] - e[1]) <= 1e-8 * max(e)


def test_rate_of_area_drifted_candidates(drift):
    res = lh.rate_of_area(drift, 1.0)
    assert res.rate == pytest.approx(drift_rate_reference(1.0), rel=1e-3)
    winners = [c for c in res.candidates if c.energy <= res.rate * (1 + 1e-9)]
    assert len(winners) == 2
    # the winning candidates use the smaller of the two arcs
    for c in winners:
        small = lh.half_area(res.model, c.alpha, c.ell, c.tau)
        assert small < 0.5 * lh.sublevel_area(res.model, c.alpha)
    # every trajectory meets the area constraint
    for c in res.candidates:
        assert lh.hull_area(c.trajectory.points) == pytest.approx(res.area, rel=1e-4)


def test_rate_monotone_in_area(drift):
    rates = [lh.rate_of_area(drift, a).rate for a in (0.3, 0.6, 1.0, 1.5)]
    assert all(x < y for x, y in zip(rates, rates[1:]))


def test_green_formula_on_returned_trajectories(iso, drift):
    for model, a in ((iso, 1.0), (drift, 0.5)):
        res = lh.rate_of_area(model, a)
        for c in res.candidates:
            signed = lh.signed_area_integral(c.trajectory)
            assert abs(signed) == pytest.approx(lh.hull_area(c.trajectory.points), rel=1e-4)


def test_el_residual_small_on_candidates(iso, drift):
    for model, a in ((iso, 1.0), (drift, 1.0)):
        res = lh.rate_of_area(model, a)
        for c in res.candidates:
            assert lh.euler_lagrange_residual(res.model, c.trajectory, c.multiplier) <= 1e-5


def test_el_residual_detects_perturbation(iso):
    res = lh.rate_of_area(iso, 1.0)
    c = res.candidates[0]
    bumped = lh.Trajectory(c.trajectory.times, c.trajectory.points, c.trajectory.derivs.copy())
    bumped.derivs[len(bumped.derivs) // 2] += [0.1, 0.0]
    assert lh.euler_lagrange_residual(res.model, bumped, c.multiplier) > 0.05


def test_el_residual_drift_line(drift):
    # the constant-drift line satisfies the equation only with multiplier 0,
    # which never certifies a candidate (admissible multipliers are non-zero)
    t = np.linspace(0, 1, 65)
    mu = lh.drift(drift)
    line = lh.Trajectory(t, np.outer(t, mu), np.tile(mu, (65, 1)))
    assert lh.euler_lagrange_residual(drift, line, 0.0) <= 1e-10


def test_graph_trajectory_gaussian(graph_gauss):
    for a in (0.25, 1.0):
        sol = lh.graph_trajectory(graph_gauss, a)
        assert sol.rate == pytest.approx(6 * a * a, abs=1e-12)
        t = sol.plus.times
        np.testing.assert_allclose(sol.plus.points[:, 1], 6 * a * (t * t - t), atol=1e-12)
        np.testing.assert_allclose(sol.minus.points[:, 1], -6 * a * (t * t - t), atol=1e-12)
        assert sol.a_max == math.inf


def test_graph_trajectory_endpoint_and_area(graph_pm1):
    sol = lh.graph_trajectory(graph_pm1, 0.2, n=2048)
    np.testing.assert_allclose(sol.plus.points[-1], [1.0, 0.0], atol=1e-12)
    assert lh.hull_area(sol.plus.points) == pytest.approx(0.2, abs=1e-6)
    assert sol.plus.energy == pytest.approx(sol.minus.energy, rel=1e-12)


def test_graph_trajectory_out_of_range(graph_pm1):
    with pytest.raises(OutOfRangeError) as exc:
        lh.graph_trajectory(graph_pm1, 0.25)
    assert exc.value.a_max == 0.25
    with pytest.raises(OutOfRangeError):
        lh.graph_trajectory(graph_pm1, 0.3)


def test_graph_el_residual(graph_pm1, graph_gauss):
    for model, a in ((graph_pm1, 0.2), (graph_gauss, 0.7)):
        sol = lh.graph_trajectory(model, a)
        rp = lh.euler_lagrange_residual_1d(model, sol.plus, sol.multiplier_plus)
        rm = lh.euler_lagrange_residual_1d(model, sol.minus, sol.multiplier_minus)
        assert rp <= 1e-5 and rm <= 1e-5


def test_rate_of_area_dispatches_graph(graph_gauss):
    res = lh.rate_of_area(graph_gauss, 0.5)
    assert res.rate == pytest.approx(1.5, abs=1e-12)
    assert len(res.candidates) == 2
    assert res.candidates[0].alpha is None and res.candidates[0].ell is None


def test_rate_of_area_proper_subset_paths(two_atoms):
    # non-symmetric proper subset: explicit regularization required
    with pytest.raises(NotFullPlaneError):
        lh.rate_of_area(two_atoms, 0.1)
    res = lh.rate_of_area(two_atoms, 0.1, eps=0.05)
    assert res.eps_applied == 0.05
    assert res.rate > 0 and res.ladder is None


def test_rate_of_area_symmetric_ladder():
    # symmetric line-supported atoms: the built-in regularization ladder runs
    model = lh.atoms([[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5])
    assert lh.support_class(model).tag == "proper_subset"
    res = lh.rate_of_area(model, 0.05)
    assert res.ladder is not None and len(res.ladder) == 3
    assert [e for e, _ in res.ladder] == [1e-1, 1e-2, 1e-3]
    assert res.eps_applied == 1e-3
    assert res.rate == res.ladder[-1][1]


def test_rate_of_area_no_candidate(triangle_atoms):
    # bounded support and a huge target area: no admissible level exists
    with pytest.raises((NoCandidateError, OutOfRangeError)):
        lh.rate_of_area(triangle_atoms, 50.0)


def test_rate_of_area_rejects_bad_area(iso):
    with pytest.raises(ValueError):
        lh.rate_of_area(iso, 0.0)
