"""The linear propagator V(t) and numerical checks of its smoothing bounds.

V(t) multiplies v_hat(xi) by exp(i t xi^3 + eta t Phi(xi)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import SpectralField, hs_norm, l2_norm
from .symbol import SymbolSpec, compute_threshold_M, sup_phi

_TWO_PI_LD = 2 * np.longdouble("3.14159265358979323846264338327950288")
PHASE_REDUCE_ABOVE = 1e8


def reduce_phase(theta_ld) -> np.ndarray:
    """Extended-precision angle(s) reduced into (-2pi, 2pi), returned as float64."""
    return np.fmod(np.asarray(theta_ld, dtype=np.longdouble), _TWO_PI_LD).astype(float)


def dispersion_phase(xi, t: float) -> np.ndarray:
    """t * xi^3, reduced mod 2pi in long double where |t xi^3| > 1e8."""
    xi = np.asarray(xi, dtype=float)
    theta = t * xi**3
    big = np.abs(theta) > PHASE_REDUCE_ABOVE
    if np.any(big):
        xl = xi[big].astype(np.longdouble)
        theta = theta.copy()
        theta[big] = reduce_phase(np.longdouble(t) * xl * xl * xl)
    return theta


def multiplier(spec: SymbolSpec, xi, t: float) -> np.ndarray:
    """exp(i t xi^3 + eta t Phi(xi))."""
    xi = np.asarray(xi, dtype=float)
    with np.errstate(under="ignore"):
        return np.exp(spec.eta * t * spec.phi(xi)) * np.exp(1j * dispersion_phase(xi, t))


def apply_semigroup(spec: SymbolSpec, f: SpectralField, t: float) -> SpectralField:
    if t < 0:
        raise ValueError(f"semigroup defined for t >= 0 only, got t={t}")
    if t == 0:
        return f
    out = f.coeffs * multiplier(spec, f.grid.nodes, t)
    return SpectralField(f.grid, out, f.real and spec.is_even)


def regularity_gain_demo(spec: SymbolSpec, f0: SpectralField, s: float, mu: float,
                         t: float) -> float:
    """||V(t) f0||_{H^{s+mu}}, which is finite for every t > 0."""
    val = hs_norm(apply_semigroup(spec, f0, t), s + mu)
    if not np.isfinite(val):
        raise FloatingPointError("H^{s+mu} norm of V(t) f0 is not finite")
    return val


# ---------------------------------------------------------------------------
# linear X_T^s estimate


@dataclass
class LinearBound:
    """Empirical constant of ||V(t) f||_{X_T^s} <= K ||f||_{H^s}.

    ``constant`` is K as measured; ``scaled`` is K / e^{C_M T}, the form
    with the low-frequency growth factored out.  ``stable`` is False when
    refining the t-grid raised K by more than 1%.
    """

    constant: float
    scaled: float
    growth: float
    refined_constant: float
    stable: bool


def default_t_grid(T: float, count: int = 200) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(1e-12 * T, T, count)])


def _xnorm_ratio(spec, f, s, t_grid):
    base = hs_norm(f, s)
    w = abs(s) / spec.p if s < 0 else 0.0
    best = 0.0
    for t in t_grid:
        g = apply_semigroup(spec, f, float(t))
        best = max(best, (hs_norm(g, s) + t**w * l2_norm(g)) / base)
    return best


def verify_linear_xnorm(spec: SymbolSpec, f: SpectralField, s: float, T: float = 1.0,
                        t_grid=None) -> LinearBound:
    """Measure sup_t [||V(t)f||_{H^s} + t^{|s|/p} ||V(t)f||_2] / ||f||_{H^s}.

    For s > 0 the time weight exponent is 0.  A zero field returns K = 0.
    """
    if not 0 < T <= 1:
        raise ValueError("need 0 < T <= 1")
    growth = float(np.exp(max(sup_phi(spec), 0.0) * spec.eta * T))
    if hs_norm(f, s) == 0.0:
        return LinearBound(0.0, 0.0, growth, 0.0, True)
    t_grid = default_t_grid(T) if t_grid is None else np.asarray(t_grid, dtype=float)
    t_grid = np.unique(np.clip(t_grid, 0.0, T))
    K = _xnorm_ratio(spec, f, s, t_grid)
    mids = 0.5 * (t_grid[1:] + t_grid[:-1])
    K_ref = max(K, _xnorm_ratio(spec, f, s, mids))
    return LinearBound(K, K / growth, growth, K_ref, K_ref <= 1.01 * K)


# ---------------------------------------------------------------------------
# weighted L^2 kernel bounds

WEIGHTS = ("xi_bracket_s", "bracket_s_only", "xi_only")


@dataclass
class SmoothingReport:
    weight: str
    s: float
    exponent: float
    tau_values: np.ndarray
    kernel_norms: np.ndarray
    weighted_values: np.ndarray
    sup_constant: float
    refined_sup: float
    stable: bool
    monotone_tail_ok: bool

    def rows(self):
        return list(zip(self.tau_values, self.kernel_norms, self.weighted_values))

    def summary(self) -> dict:
        return {
            "weight": self.weight,
            "s": self.s,
            "a": self.exponent,
            "sup_constant": self.sup_constant,
            "refined_sup_constant": self.refined_sup,
            "stable": self.stable,
            "monotone_tail_ok": self.monotone_tail_ok,
        }


def kernel_exponent(weight: str, s: float, p: float, eps: float = 0.01) -> float:
    """The power a in ||w e^{tau Phi}||_2 <~ tau^{-a}; refuses inadmissible s."""
    if weight == "xi_bracket_s":
        if not s > -p / 2:
            raise ValueError(f"inadmissible s={s}: requires s > -p/2 = {-p / 2}")
        return 0.5 + s / p
    if weight == "bracket_s_only":
        if not s > 1 - p / 2:
            raise ValueError(f"inadmissible s={s}: requires s > 1-p/2 = {1 - p / 2}")
        return (p - 2 + 2 * s) / (2 * p)
    if weight == "xi_only":
        if not eps > 0:
            raise ValueError("the 3+ exponent needs eps > 0")
        return (3.0 + eps) / (2 * p)
    raise ValueError(f"unknown weight {weight!r}; choose from {WEIGHTS}")


def _weight_sq(weight, s, xi):
    br2 = 1.0 + xi * xi
    if weight == "xi_bracket_s":
        return xi * xi * br2**s
    if weight == "bracket_s_only":
        return br2**s
    return xi * xi


def _half_line_rule(M, tau, p, order=20):
    """Composite GL nodes on [0, L] where e^{-tau xi^p} is negligible past L."""
    L = max(2.0 * M, 2.0 * (80.0 / tau) ** (1.0 / p))
    inner = np.linspace(0.0, M, 17)
    outer = np.geomspace(M, L, max(8, int(np.ceil(np.log(L / M) / np.log(1.2)))))
    bp = np.unique(np.concatenate([inner, outer]))
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = bp[:-1], bp[1:]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
    return nodes.ravel(), (half[:, None] * w[None, :]).ravel()


def kernel_l2(spec: SymbolSpec, s: float, weight: str, tau: float, M: float | None = None) -> float:
    """||w(xi) e^{tau eta Phi(xi)}||_{L^2(R)} by composite Gauss-Legendre."""
    if M is None:
        M = compute_threshold_M(spec)
    nodes, wts = _half_line_rule(M, spec.eta * tau, spec.p)
    total = 0.0
    for sgn in (1.0, -1.0):
        xi = sgn * nodes
        with np.errstate(under="ignore"):
            dens = _weight_sq(weight, s, xi) * np.exp(2.0 * tau * spec.eta * spec.phi(xi))
        total += float(np.dot(wts, dens))
    return float(np.sqrt(total))


def kernel_weighted_l2(spec: SymbolSpec, s: float, weight: str, tau_grid, a: float | None = None,
                       eps: float = 0.01) -> SmoothingReport:
    """tau^a ||w e^{tau Phi}||_2 over a tau grid in (0, 1], with stability checks.

    Stability: the sup over the same-size log grid with a tenfold lower floor
    must agree within 1%.  Tail check: below tau = 1/M^p the weighted values
    vary by less than a factor 4 within any decade.
    """
    a_def = kernel_exponent(weight, s, spec.p, eps)
    a = a_def if a is None else a
    tau = np.asarray(tau_grid, dtype=float)
    if tau.size == 0 or np.any(tau <= 0) or np.any(tau > 1):
        raise ValueError("tau values must lie in (0, 1]")
    M = compute_threshold_M(spec)
    norms = np.array([kernel_l2(spec, s, weight, t, M) for t in tau])
    weighted = tau**a * norms
    sup = float(weighted.max())

    tau_ref = np.geomspace(tau.min() / 10.0, tau.max(), tau.size)
    ref = tau_ref**a * np.array([kernel_l2(spec, s, weight, t, M) for t in tau_ref])
    sup_ref = max(sup, float(ref.max()))
    stable = abs(sup_ref - sup) <= 0.01 * sup

    cut = 1.0 / M**spec.p
    small = tau < cut
    tail_ok = True
    ts, vs = tau[small], weighted[small]
    for i, t0 in enumerate(ts):
        win = (ts >= t0) & (ts <= 10 * t0)
        if win.sum() >= 2:
            v = vs[win]
            tail_ok &= bool(v.max() < 4.0 * v.min())
    return SmoothingReport(weight, s, a, tau, norms, weighted, sup, sup_ref, bool(stable), bool(tail_ok))
