import numpy as np
import pytest
from hypothesis import given, strategies as st

from kdvlab.field import FrequencyGrid, SpectralField, Trajectory, hs_norm, l2_norm
from kdvlab.quadrature import QuadConfig
from kdvlab.semigroup import apply_semigroup, verify_linear_xnorm
from kdvlab.symbol import SymbolSpec, builtin
from kdvlab.wellposed import (
    ConvergenceError,
    WeightedNormParams,
    apply_nonlinearity,
    duhamel_nl,
    duhamel_trajectory,
    estimate_bilinear_constant,
    evolve,
    horizon,
    interpolate,
    linear_trajectory,
    nonlinear_regularity_check,
    picard_map,
    picard_solve,
    snapshot_times,
    weighted_norm,
    xts_norm,
    yts_norm,
)

from conftest import gaussian, random_real_field

GRID = FrequencyGrid(16.0, 256)


@pytest.fixture(scope="module")
def small_solution():
    spec = builtin("kdvks")
    v0 = gaussian(GRID, -1.0, 0.1)
    params = WeightedNormParams(-1.0, 4.0, "X")
    traj, rep = picard_solve(spec, v0, params, tol=1e-10, trials=4)
    return spec, v0, params, traj, rep


def test_params_validation():
    with pytest.raises(ValueError):
        WeightedNormParams(-1.0, 4.0, "Z")
    WeightedNormParams(-1.0, 4.0, "X").check_solver_range()
    with pytest.raises(ValueError, match="requires s > -2"):
        WeightedNormParams(-2.0, 4.0, "X").check_solver_range()
    with pytest.raises(ValueError, match="requires s > -1"):
        WeightedNormParams(-1.0, 4.0, "Y").check_solver_range()
    with pytest.raises(ValueError, match="s <= 0"):
        WeightedNormParams(0.5, 4.0, "X").check_solver_range()
    assert WeightedNormParams(-1.0, 4.0, "X").gain == 0.25
    assert WeightedNormParams(-0.5, 4.0, "Y").gain == 0.125


def test_norm_single_snapshot_at_zero(rng):
    f = random_real_field(rng, GRID)
    tr = Trajectory.from_fields([0.0], [f])
    assert xts_norm(tr, WeightedNormParams(-1.0, 4.0, "X")) == pytest.approx(hs_norm(f, -1.0))
    assert xts_norm(tr, WeightedNormParams(0.0, 4.0, "X")) == pytest.approx(2 * l2_norm(f))
    assert yts_norm(tr, WeightedNormParams(-0.5, 4.0, "Y")) == pytest.approx(hs_norm(f, -0.5))


def test_norms_of_zero_trajectory():
    tr = Trajectory(GRID, [0.0, 0.5], np.zeros((2, GRID.n)))
    assert xts_norm(tr, WeightedNormParams(-1.0, 4.0, "X")) == 0.0
    assert yts_norm(tr, WeightedNormParams(-0.5, 4.0, "Y")) == 0.0


def test_norm_variant_mismatch(rng):
    tr = Trajectory.from_fields([0.0], [random_real_field(rng, GRID)])
    with pytest.raises(ValueError):
        xts_norm(tr, WeightedNormParams(-0.5, 4.0, "Y"))
    with pytest.raises(ValueError):
        yts_norm(tr, WeightedNormParams(-0.5, 4.0, "X"))


def test_weight_formula_by_hand(rng):
    f = random_real_field(rng, GRID)
    tr = Trajectory.from_fields([0.0, 0.25], [f, 0.5 * f])
    px = WeightedNormParams(-1.0, 4.0, "X")
    expected = max(hs_norm(f, -1), hs_norm(0.5 * f, -1) + 0.25**0.25 * l2_norm(0.5 * f))
    assert xts_norm(tr, px) == pytest.approx(expected, rel=1e-14)
    py = WeightedNormParams(-0.5, 4.0, "Y")
    d = (0.5 * f).derivative()
    expected = max(hs_norm(f, -0.5), hs_norm(0.5 * f, -0.5) + 0.25 ** (1.5 / 4) * l2_norm(d))
    assert yts_norm(tr, py) == pytest.approx(expected, rel=1e-14)


def test_linear_trajectory_norm_below_linear_constant():
    from kdvlab.illposed import CounterexampleParams, counterexample_data, counterexample_grid

    spec = builtin("kdvks")
    P = CounterexampleParams(50, 1.0, -1.5)
    v0 = counterexample_data(P, counterexample_grid(P, 16, high_band=False))
    lb = verify_linear_xnorm(spec, v0, -1.5, 1.0)
    tr = linear_trajectory(spec, v0, snapshot_times(1.0, 64))
    val = xts_norm(tr, WeightedNormParams(-1.5, 4.0, "X"))
    assert np.isfinite(val) and val <= lb.refined_constant * hs_norm(v0, -1.5) * (1 + 1e-12)


def test_duhamel_zero_and_empty():
    spec = builtin("kdvks")
    tr = Trajectory(GRID, [0.0, 0.1], np.zeros((2, GRID.n)), True)
    assert np.all(duhamel_nl(spec, tr, 0.1, "derivative_of_square").coeffs == 0)
    f = gaussian(GRID, 0.0, 1.0)
    tr = linear_trajectory(spec, f, [0.0, 0.1])
    assert np.all(duhamel_nl(spec, tr, 0.0, "derivative_of_square").coeffs == 0)
    with pytest.raises(ValueError):
        duhamel_nl(spec, tr, 0.2, "derivative_of_square")
    with pytest.raises(ValueError):
        duhamel_nl(spec, tr, 0.05, "cube")


def test_duhamel_single_mode_closed_form():
    # constant delta-like mode at xi = 1: its self-convolution sits at xi = 2
    spec = builtin("kdvb")
    g = FrequencyGrid(4.0, 64)
    c = np.zeros(g.n, dtype=complex)
    c[g.index_of(1.0)] = 1.0 / g.dxi
    f = SpectralField(g, c)
    t = 0.7
    tr = Trajectory.from_fields([0.0, t], [f, f])
    out = duhamel_nl(spec, tr, t, "derivative_of_square", QuadConfig(interp="linear"))
    lam = 8j - 4.0
    exact = 2j * (np.exp(lam * t) - 1) / lam / g.dxi
    assert out.coeffs[g.index_of(2.0)] == pytest.approx(exact, rel=1e-8)
    others = np.delete(out.coeffs, g.index_of(2.0))
    assert np.max(np.abs(others)) == 0.0


def test_duhamel_snapshot_vs_offgrid_time():
    spec = builtin("kdvks")
    f = gaussian(GRID, -1.0, 0.5)
    tr = linear_trajectory(spec, f, snapshot_times(0.01, 16))
    q = QuadConfig()
    a = duhamel_nl(spec, tr, float(tr.times[9]), "derivative_of_square", q)
    b = duhamel_nl(spec, lambda t: apply_semigroup(spec, f, t), float(tr.times[9]), "derivative_of_square",
                   QuadConfig(panels=8, levels=40))
    assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-11 * np.max(np.abs(b.coeffs))
    mid = 0.5 * (tr.times[9] + tr.times[10])
    c = duhamel_nl(spec, tr, mid, "derivative_of_square", q)
    d = duhamel_nl(spec, lambda t: apply_semigroup(spec, f, t), mid, "derivative_of_square",
                   QuadConfig(panels=8, levels=40))
    assert np.max(np.abs(c.coeffs - d.coeffs)) <= 1e-11 * np.max(np.abs(d.coeffs))


def test_duhamel_check_raises_on_coarse_rule():
    spec = builtin("kdvks")
    f = gaussian(GRID, -1.0, 0.5)
    V = lambda t: apply_semigroup(spec, f, t)
    with pytest.raises(ConvergenceError):
        duhamel_nl(spec, V, 0.05, "derivative_of_square", QuadConfig(panels=2, order=2, levels=0, check=True))
    duhamel_nl(spec, V, 0.05, "derivative_of_square", QuadConfig(panels=8, levels=40, check=True, tol=1e-9))


def test_propagated_interpolation_exact_for_free_flow():
    spec = builtin("kdvks")
    f = gaussian(GRID, -1.0, 0.5)
    tr = linear_trajectory(spec, f, snapshot_times(0.01, 8))
    ts = np.array([1e-5, 3.3e-3, 7.7e-3])
    got = interpolate(spec, tr, ts)
    for row, t in zip(got, ts):
        np.testing.assert_allclose(row, apply_semigroup(spec, f, t).coeffs, atol=1e-14)
    with pytest.raises(ValueError):
        interpolate(spec, tr, [0.02])


def test_nonlinearities_conserve_mean(rng):
    f = random_real_field(rng, GRID, band=4)
    k0 = GRID.n // 2
    assert apply_nonlinearity(f, "derivative_of_square").coeffs[k0] == 0
    # (u_x)^2 has a nonnegative mean
    assert apply_nonlinearity(f, "square_of_gradient").coeffs[k0].real >= 0


def test_picard_zero_data():
    spec = builtin("kdvks")
    traj, rep = picard_solve(spec, SpectralField.zeros(GRID), WeightedNormParams(-1.0, 4.0, "X"))
    assert rep.converged and rep.iterates == [(1, 0.0)] and np.all(traj.coeffs == 0)


def test_picard_rejects_inadmissible():
    spec = builtin("kdvks")
    f = gaussian(GRID, -1.0, 0.1)
    with pytest.raises(ValueError, match="requires"):
        picard_solve(spec, f, WeightedNormParams(-2.5, 4.0, "X"))
    with pytest.raises(ValueError, match="p > 3"):
        picard_solve(builtin("kdvb"), f, WeightedNormParams(-0.5, 2.0, "X"))


def test_picard_large_data_horizon_underflow():
    spec = builtin("kdvks")
    f = gaussian(GRID, -1.0, 1e6)
    with pytest.raises(ValueError, match="horizon"):
        picard_solve(spec, f, WeightedNormParams(-1.0, 4.0, "X"), c_hat=1.0)


def test_horizon_rule():
    T = horizon(2.0, 0.1, 0.25)
    assert 2.0 * T**0.25 * (4 * 2.0 * 0.1) == pytest.approx(0.25)
    assert horizon(1e-3, 1e-3, 0.25) == 1.0


def test_first_iterate_is_linear_minus_duhamel():
    spec = builtin("kdvks")
    v0 = gaussian(GRID, -1.0, 0.1)
    params = WeightedNormParams(-1.0, 4.0, "X")
    lin = linear_trajectory(spec, v0, snapshot_times(1e-3, 16))
    v1 = picard_map(spec, v0, lin, params)
    D = duhamel_trajectory(spec, lin, "derivative_of_square", None, params)
    assert np.max(np.abs((v1.coeffs - lin.coeffs) + D.coeffs)) <= 1e-13


def test_contraction_report(small_solution):
    spec, v0, params, traj, rep = small_solution
    d = [x for _, x in rep.iterates]
    assert rep.converged and all(b < a for a, b in zip(d, d[1:]))
    assert rep.ratio_max <= 0.6
    assert rep.residual < 1e-8
    assert 0 < rep.T <= 1
    assert rep.r == pytest.approx(4 * rep.c * hs_norm(v0, -1.0))
    assert rep.c * rep.T**rep.alpha_or_theta * rep.r == pytest.approx(0.25)


def test_solution_stays_in_ball(small_solution):
    spec, v0, params, traj, rep = small_solution
    assert weighted_norm(traj, params) <= rep.r


def test_contraction_on_sampled_pairs(small_solution, rng):
    spec, v0, params, traj, rep = small_solution
    lin = linear_trajectory(spec, v0, traj.times)
    for _ in range(3):
        pert = []
        for _k in range(2):
            f = random_real_field(rng, GRID, band=6)
            pl = linear_trajectory(spec, f, traj.times)
            scale = 0.5 * rep.r / weighted_norm(pl, params)
            pert.append(Trajectory(GRID, traj.times, traj.coeffs + scale * pl.coeffs, True))
        for p_ in pert:
            assert weighted_norm(p_, params) <= 2 * rep.r
        a, b = pert
        num = weighted_norm(picard_map(spec, v0, a, params, None, lin) - picard_map(spec, v0, b, params, None, lin), params)
        assert num <= 0.6 * weighted_norm(a - b, params)


def test_evolve_agrees_with_picard(small_solution):
    spec, v0, params, traj, rep = small_solution
    ev = evolve(spec, v0, rep.T, rep.T / 400)
    assert hs_norm(ev.final - traj.final, -1.0) < 1e-6
    assert l2_norm(ev.final - traj.final) < 1e-6


def test_bilinear_constant_scale_invariant():
    spec = builtin("kdvks")
    params = WeightedNormParams(-1.0, 4.0, "X")
    g = FrequencyGrid(8.0, 64)
    a = estimate_bilinear_constant(spec, params, trials=2, grid=g, m=8)
    b = estimate_bilinear_constant(spec, params, trials=2, grid=g, m=8, scale=7.5)
    assert np.isfinite(a) and a > 0
    assert b == pytest.approx(a, rel=1e-10)


def test_evolve_zero_and_linear_only(rng):
    spec = builtin("kdvks")
    z = evolve(spec, SpectralField.zeros(GRID), 1e-3, 1e-4)
    assert np.all(z.coeffs == 0)
    f = random_real_field(rng, GRID)
    tr = evolve(spec, f, 0.01, 1e-3, linear_only=True)
    for i, t in enumerate(tr.times):
        np.testing.assert_allclose(tr.coeffs[i], apply_semigroup(spec, f, t).coeffs, atol=1e-15)
    with pytest.raises(ValueError):
        evolve(spec, f, 0.01, 0.0)


def test_evolve_instability_detected():
    spec = builtin("kdvks")
    big = gaussian(FrequencyGrid(16.0, 128), 0.0, 1e8)
    with pytest.raises(FloatingPointError):
        evolve(spec, big, 0.1, 0.05)


def test_inviscid_conservation():
    spec = SymbolSpec(p=4.0, eta=0.0, allow_inviscid=True)
    g = FrequencyGrid(12.0, 192)
    f = gaussian(g, 0.0, 1.0, width=1.0) + SpectralField.from_function(
        g, lambda x: 0.3 * np.exp(-((np.abs(x) - 2) ** 2)) + 0j)
    k0 = g.n // 2
    drift = []
    for dt in (2e-3, 1e-3):
        tr = evolve(spec, f, 0.2, dt)
        assert tr.coeffs[-1, k0] == f.coeffs[k0]  # int v dx untouched
        drift.append(abs(l2_norm(tr.final) - l2_norm(f)) / l2_norm(f))
    assert drift[1] <= drift[0] / 3 or drift[1] < 1e-12


def test_regularity_check(small_solution):
    spec, v0, params, traj, rep = small_solution
    ts = np.linspace(0, rep.T, 5)
    r = nonlinear_regularity_check(spec, traj, -1.0, 4 / 2 - 0.1, ts, quad=QuadConfig(panels=2, levels=4))
    assert r.finite and r.continuous and r.vanishes_at_zero and r.norms[0] == 0.0
    r0 = nonlinear_regularity_check(spec, traj, -1.0, 0.0, ts, quad=QuadConfig(panels=2, levels=4))
    assert np.all(r0.norms <= r.norms + 1e-300)
    with pytest.raises(ValueError):
        nonlinear_regularity_check(spec, traj, -1.0, 2.0, ts)


def test_derivative_relation():
    spec = builtin("kdvks")
    g = FrequencyGrid(16.0, 256)
    u0 = gaussian(g, -0.5, 0.1)
    v0 = u0.derivative()
    pu, pv = WeightedNormParams(-0.5, 4.0, "Y"), WeightedNormParams(-1.5, 4.0, "X")
    T = 1e-4
    u, ru = picard_solve(spec, u0, pu, T=T, c_hat=1.0, tol=1e-12)
    v, rv = picard_solve(spec, v0, pv, T=T, c_hat=1.0, tol=1e-12)
    diff = np.max(np.abs(u.derivative().coeffs - v.coeffs))
    assert diff <= 1e-6 * np.max(np.abs(v.coeffs))
