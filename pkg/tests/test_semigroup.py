import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from kdvlab.field import FrequencyGrid, SpectralField, hermitian_defect, hs_norm, l2_norm
from kdvlab.illposed import CounterexampleParams, counterexample_data, counterexample_grid
from kdvlab.semigroup import (
    apply_semigroup,
    dispersion_phase,
    kernel_exponent,
    kernel_l2,
    kernel_weighted_l2,
    multiplier,
    regularity_gain_demo,
    verify_linear_xnorm,
)
from kdvlab.symbol import builtin, sup_phi

from conftest import random_real_field


def test_identity_at_zero(rng, kdvks):
    f = random_real_field(rng, FrequencyGrid(8.0, 64))
    assert apply_semigroup(kdvks, f, 0.0) is f


def test_single_mode_burgers():
    g = FrequencyGrid(4.0, 16)
    c = np.zeros(16, dtype=complex)
    k = g.index_of(1.0)
    c[k] = 1.0
    out = apply_semigroup(builtin("kdvb"), SpectralField(g, c), 1.0)
    assert out.coeffs[k] == pytest.approx(np.exp(1j - 1.0), abs=1e-15)
    assert abs(out.coeffs[k]) == pytest.approx(0.36788, abs=1e-5)


def test_negative_time_rejected(kdvks):
    with pytest.raises(ValueError):
        apply_semigroup(kdvks, SpectralField.zeros(FrequencyGrid(1.0, 8)), -0.1)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["kdvb", "ost", "kdvks"]))
def test_composition_law(seed, name):
    rng = np.random.default_rng(seed)
    spec = builtin(name)
    f = random_real_field(rng, FrequencyGrid(6.0, 96))
    a = apply_semigroup(spec, apply_semigroup(spec, f, 0.7), 0.3)
    b = apply_semigroup(spec, f, 1.0)
    assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-12


@given(st.floats(0.0, 1.0), st.sampled_from(["kdvb", "ost", "kdvks"]))
def test_modulus_bound(t, name):
    spec = builtin(name)
    xi = np.linspace(-30, 30, 4001)
    assert np.all(np.abs(multiplier(spec, xi, t)) <= np.exp(t * sup_phi(spec)) * (1 + 1e-14))


def test_reality_preserved(rng, kdvks):
    f = random_real_field(rng, FrequencyGrid(6.0, 96))
    out = apply_semigroup(kdvks, f, 0.37)
    assert out.real and hermitian_defect(out.grid, out.coeffs) <= 1e-12


@pytest.mark.skipif(np.finfo(np.longdouble).eps > 1e-18, reason="long double is plain double here")
def test_phase_reduction_matches_extended_precision():
    xi = np.array([1234.5, -987.25, 2000.0, -3000.5])
    t = 0.1
    got = dispersion_phase(xi, t)
    with mpmath.workdps(40):
        for x, g in zip(xi, got):
            theta = mpmath.mpf(t) * mpmath.mpf(float(x)) ** 3
            ref = mpmath.fmod(theta, 2 * mpmath.pi)
            # reduced entries carry long-double rounding of |theta|, the rest float64 rounding
            tol = (2e-19 if abs(theta) > 1e8 else 4e-16) * float(abs(theta))
            err = abs(mpmath.exp(1j * g) - mpmath.exp(1j * ref))
            assert err < tol


def test_linear_xnorm_zero_field(kdvks):
    lb = verify_linear_xnorm(kdvks, SpectralField.zeros(FrequencyGrid(2.0, 16)), -1.0)
    assert lb.constant == 0.0 and lb.stable


def test_linear_xnorm_pure_dissipation_single_mode():
    spec = builtin("kdvb")
    g = FrequencyGrid(4.0, 16)
    c = np.zeros(16, dtype=complex)
    c[g.index_of(1.5)] = 1.0
    f = SpectralField(g, c)
    # each piece contracts; at s = 0 the norm is the sum of two equal L^2 terms
    ts = np.linspace(0, 1, 101)
    assert max(l2_norm(apply_semigroup(spec, f, t)) for t in ts) <= l2_norm(f) * (1 + 1e-9)
    lb = verify_linear_xnorm(spec, f, 0.0, 1.0)
    assert lb.constant <= 2 * (1 + 1e-9)


def test_linear_xnorm_counterexample_data_stable(kdvks):
    P = CounterexampleParams(50, 1.0, -2.0)
    f = counterexample_data(P, counterexample_grid(P, 16, high_band=False))
    lb = verify_linear_xnorm(kdvks, f, -2.0, 1.0)
    assert np.isfinite(lb.constant) and lb.stable
    lb2 = verify_linear_xnorm(kdvks, f, -2.0, 1.0, t_grid=np.concatenate([[0], np.geomspace(1e-12, 1, 800)]))
    assert lb2.constant <= lb.refined_constant * 1.01


def test_kernel_exponents_and_admissibility():
    assert kernel_exponent("xi_bracket_s", -1.0, 4.0) == 0.25
    assert kernel_exponent("bracket_s_only", -0.5, 4.0) == pytest.approx(0.125)
    assert kernel_exponent("xi_only", 0.0, 4.0) == pytest.approx(3.01 / 8)
    with pytest.raises(ValueError, match=r"s > -p/2"):
        kernel_exponent("xi_bracket_s", -2.0, 4.0)
    with pytest.raises(ValueError, match=r"s > 1-p/2"):
        kernel_exponent("bracket_s_only", -1.0, 4.0)
    with pytest.raises(ValueError, match="unknown weight"):
        kernel_exponent("other", -1.0, 4.0)


@pytest.mark.parametrize("weight,s,tau", [("xi_bracket_s", -1.0, 1e-3), ("bracket_s_only", -0.5, 0.1),
                                          ("xi_only", 0.0, 1.0), ("xi_bracket_s", -1.0, 1.0)])
def test_kernel_l2_against_mpmath(kdvks, weight, s, tau):
    def dens(x):
        w2 = {"xi_bracket_s": x * x * (1 + x * x) ** s, "bracket_s_only": (1 + x * x) ** s, "xi_only": x * x}[weight]
        return w2 * mpmath.exp(2 * tau * (-x**4 + x**2))

    ref = mpmath.sqrt(2 * mpmath.quad(dens, [0, 1, 4, mpmath.inf]))
    assert kernel_l2(kdvks, s, weight, tau) == pytest.approx(float(ref), rel=1e-10)


def test_kernel_report_tau_one_entry_is_plain_norm(kdvks):
    rep = kernel_weighted_l2(kdvks, -1.0, "xi_bracket_s", np.geomspace(1e-4, 1, 20))
    assert rep.weighted_values[-1] == rep.kernel_norms[-1]
    assert rep.sup_constant == max(rep.weighted_values)
    assert len(rep.tau_values) == len(rep.weighted_values) == len(rep.kernel_norms)
    assert rep.stable and rep.monotone_tail_ok


def test_kernel_report_rejects_bad_tau(kdvks):
    with pytest.raises(ValueError):
        kernel_weighted_l2(kdvks, -1.0, "xi_bracket_s", [0.0, 0.5])


def test_regularity_gain():
    spec = builtin("kdvks")
    g = FrequencyGrid(200.0, 8000)
    s = -1.0
    rough = SpectralField.from_function(g, lambda x: (1 + x * x) ** ((-0.5 - s - 0.01) / 2) + 0j)
    assert regularity_gain_demo(spec, rough, s, 0.0, 0.0) == pytest.approx(hs_norm(rough, s))
    assert hs_norm(rough, s + 2) > 1e3 * hs_norm(rough, s)
    val = regularity_gain_demo(spec, rough, s, 2.0, 0.1)
    assert np.isfinite(val) and val < hs_norm(rough, s + 2)


def test_regularity_gain_monotone_for_pure_dissipation(rng):
    spec = builtin("kdvb")
    f = random_real_field(rng, FrequencyGrid(8.0, 128))
    vals = [regularity_gain_demo(spec, f, -1.0, 1.5, t) for t in np.linspace(0, 1, 11)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
