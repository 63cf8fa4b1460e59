"""Duhamel maps, weighted time norms, the Picard solver and an exponential marcher.

The two nonlinear problems are

    v_t + v_xxx + eta L v + (v^2)_x = 0      (nl = "derivative_of_square")
    u_t + u_xxx + eta L u + (u_x)^2 = 0      (nl = "square_of_gradient")

written as v(t) = V(t) v0 - int_0^t V(t - t') N(v(t')) dt'.  Products are
taken as plain frequency convolutions, so N(v)^ = i xi (v^ * v^) and
N(u)^ = (i xi u^) * (i xi u^).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .field import (
    FrequencyGrid,
    GridMismatch,
    SpectralField,
    Trajectory,
    hs_norm,
    l2_norm,
    symmetrize,
)
from .quadrature import QuadConfig, grading_exponent, graded_rule
from .semigroup import PHASE_REDUCE_ABOVE, reduce_phase, verify_linear_xnorm
from .symbol import SymbolSpec

NONLINEARITIES = ("derivative_of_square", "square_of_gradient")
T_FLOOR = 1e-6


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# weighted norms


@dataclass(frozen=True)
class WeightedNormParams:
    s: float
    p: float
    variant: str = "X"

    def __post_init__(self):
        if self.variant not in ("X", "Y"):
            raise ValueError(f"variant must be 'X' or 'Y', got {self.variant!r}")
        if not self.p > 0:
            raise ValueError("p must be positive")

    @property
    def weight_exponent(self) -> float:
        a = abs(min(self.s, 0.0))
        return a / self.p if self.variant == "X" else (1.0 + a) / self.p

    @property
    def gain(self) -> float:
        """alpha = (2s+p)/(2p) for X, theta = (p-2+2s)/(2p) for Y."""
        if self.variant == "X":
            return (2 * self.s + self.p) / (2 * self.p)
        return (self.p - 2 + 2 * self.s) / (2 * self.p)

    @property
    def nl(self) -> str:
        return "derivative_of_square" if self.variant == "X" else "square_of_gradient"

    def check_solver_range(self):
        if self.s > 0:
            raise ValueError(
                f"s={self.s} > 0: the weighted-norm solver covers s <= 0 only; "
                "positive regularity is handled by classical energy methods"
            )
        lo = -self.p / 2 if self.variant == "X" else 1 - self.p / 2
        if not self.s > lo:
            raise ValueError(f"inadmissible s={self.s}: variant {self.variant} requires s > {lo}")


def _snapshot_norms(grid, times, coeffs, params: WeightedNormParams):
    xi = grid.nodes
    w = grid.weights
    hs = np.sqrt(np.abs(coeffs) ** 2 @ (w * (1.0 + xi * xi) ** params.s))
    if params.variant == "X":
        second = np.sqrt(np.abs(coeffs) ** 2 @ w)
    else:
        second = np.sqrt(np.abs(coeffs) ** 2 @ (w * xi * xi))
    return hs + times**params.weight_exponent * second


def weighted_norm(traj: Trajectory, params: WeightedNormParams) -> float:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return float(np.max(_snapshot_norms(traj.grid, traj.times, traj.coeffs, params)))


def xts_norm(traj: Trajectory, params: WeightedNormParams) -> float:
    """sup_t [||f||_{H^s} + t^{|s|/p} ||f||_2] over the snapshots."""
    if params.variant != "X":
        raise ValueError("xts_norm needs variant X")
    return weighted_norm(traj, params)


def yts_norm(traj: Trajectory, params: WeightedNormParams) -> float:
    """sup_t [||f||_{H^s} + t^{(1+|s|)/p} ||f_x||_2] over the snapshots."""
    if params.variant != "Y":
        raise ValueError("yts_norm needs variant Y")
    return weighted_norm(traj, params)


# ---------------------------------------------------------------------------
# nonlinear terms


def _symbol_rate(spec, xi):
    return spec.eta * spec.phi(xi)


def propagator_table(spec: SymbolSpec, xi, taus) -> np.ndarray:
    """exp(i tau xi^3 + eta tau Phi(xi)) for each tau (rows) and xi (columns)."""
    taus = np.asarray(taus, dtype=float).reshape(-1, 1)
    xi = np.asarray(xi, dtype=float)
    rate = _symbol_rate(spec, xi)[None, :]
    theta = taus * (xi**3)[None, :]
    big = np.abs(theta) > PHASE_REDUCE_ABOVE
    if np.any(big):
        rows, cols = np.nonzero(big)
        xl = xi[cols].astype(np.longdouble)
        theta[big] = reduce_phase(taus[rows, 0].astype(np.longdouble) * xl * xl * xl)
    with np.errstate(under="ignore"):
        return np.exp(taus * rate) * (np.cos(theta) + 1j * np.sin(theta))


def nonlinear_term(U, V, grid: FrequencyGrid, nl: str, method: str = "auto") -> np.ndarray:
    """Symmetric bilinear form N(u, v) on coefficient rows; N(v) = N(v, v)."""
    xi = grid.nodes
    if nl == "derivative_of_square":
        return 1j * xi * _kernels.conv_trapezoid_rows(U, V, grid.dxi, method)
    if nl == "square_of_gradient":
        return _kernels.conv_trapezoid_rows(1j * xi * U, 1j * xi * V, grid.dxi, method)
    raise ValueError(f"unknown nonlinearity {nl!r}; choose from {NONLINEARITIES}")


def apply_nonlinearity(f: SpectralField, nl: str, method: str = "auto") -> SpectralField:
    out = nonlinear_term(f.coeffs, f.coeffs, f.grid, nl, method)
    if f.real:
        out = symmetrize(f.grid, out)
    return SpectralField(f.grid, out, f.real)


# ---------------------------------------------------------------------------
# trajectory interpolation


def interpolate(spec: SymbolSpec, traj: Trajectory, times, mode: str = "propagated") -> np.ndarray:
    """Coefficient rows of the trajectory at ``times`` (inside its span).

    ``linear`` interpolates the coefficients.  ``propagated`` uses
    v(t') = V(t'-t_a) v_a + theta (v_b - V(t_b-t_a) v_a), which is exact
    whenever the trajectory is a free evolution V(t) v0.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    tt = traj.times
    if times.size and (times.min() < tt[0] - 1e-15 or times.max() > tt[-1] * (1 + 1e-14) + 1e-300):
        raise ValueError("interpolation time outside the trajectory span")
    if len(traj) == 1:
        return np.repeat(traj.coeffs[:1], times.size, axis=0)
    idx = np.clip(np.searchsorted(tt, times, side="right") - 1, 0, len(tt) - 2)
    ta, tb = tt[idx], tt[idx + 1]
    theta = np.clip((times - ta) / (tb - ta), 0.0, 1.0)
    va, vb = traj.coeffs[idx], traj.coeffs[idx + 1]
    if mode == "linear":
        return (1.0 - theta)[:, None] * va + theta[:, None] * vb
    if mode != "propagated":
        raise ValueError(f"unknown interpolation mode {mode!r}")
    xi = traj.grid.nodes
    out = np.empty((times.size, xi.size), dtype=complex)
    for r in range(times.size):
        e_part = propagator_table(spec, xi, [times[r] - ta[r]])[0]
        e_full = propagator_table(spec, xi, [tb[r] - ta[r]])[0]
        out[r] = e_part * va[r] + theta[r] * (vb[r] - e_full * va[r])
    return out


def _interval_rows(spec, traj, a, b, j, nodes, mode):
    """Interpolated rows for nodes inside snapshot interval j = [t_j, t_{j+1}]."""
    va, vb = traj.coeffs[j], traj.coeffs[j + 1]
    theta = (nodes - a) / (b - a)
    if mode == "linear":
        return (1.0 - theta)[:, None] * va + theta[:, None] * vb
    if mode != "propagated":
        raise ValueError(f"unknown interpolation mode {mode!r}")
    xi = traj.grid.nodes
    E = propagator_table(spec, xi, nodes - a)
    gap = vb - propagator_table(spec, xi, [b - a])[0] * va
    return E * va[None, :] + theta[:, None] * gap[None, :]


# ---------------------------------------------------------------------------
# Duhamel integrals


def _gradings(params: WeightedNormParams | None, spec: SymbolSpec, s: float | None):
    """Power-grading exponents (left: t'=0 end, right: t'=t end)."""
    if params is not None:
        s, variant = params.s, params.variant
    elif s is not None:
        variant = "X"
    else:
        return 2.0, 2.0
    a = abs(min(s, 0.0))
    beta_r = min(max(0.5 + s / spec.p, 0.0), 0.99)
    beta_l = 2 * a / spec.p if variant == "X" else 2 * (1 + a) / spec.p
    return grading_exponent(min(beta_l, 0.99)), grading_exponent(beta_r)


def _duhamel_rows(spec, rows_fn, grid, a, b, nl, quad, qs, method, pair=None):
    """int_a^b V(b - t') N(v(t')) dt' as one coefficient row."""
    nodes, wts, dist = graded_rule(a, b, quad, *qs, with_distance=True)
    if nodes.size == 0:
        return np.zeros(grid.n, dtype=complex)
    U = rows_fn(nodes)
    W = pair(nodes) if pair is not None else U
    N = nonlinear_term(U, W, grid, nl, method)
    E = propagator_table(spec, grid.nodes, dist)
    return (wts[:, None] * E * N).sum(axis=0)


def duhamel_trajectory(spec: SymbolSpec, traj: Trajectory, nl: str, quad: QuadConfig | None = None,
                       params: WeightedNormParams | None = None, other: Trajectory | None = None,
                       method: str = "auto") -> Trajectory:
    """D(t_j) = int_0^{t_j} V(t_j - t') N(v(t')) dt' at every snapshot.

    Built interval by interval: D_j = V(t_j - t_{j-1}) D_{j-1} + the
    integral over [t_{j-1}, t_j], with the trajectory interpolated inside
    each interval.  With ``other`` the bilinear form N(v, other) is used.
    """
    quad = quad or QuadConfig()
    if other is not None and (other.grid != traj.grid or not np.array_equal(other.times, traj.times)):
        raise GridMismatch("bilinear partner must share grid and times")
    grid, tt = traj.grid, traj.times
    qs = _gradings(params, spec, None)
    out = np.zeros((len(tt), grid.n), dtype=complex)
    if tt[0] > 0:
        raise ValueError("duhamel_trajectory needs the trajectory to start at t = 0")
    xi = grid.nodes
    for j in range(1, len(tt)):
        a, b = tt[j - 1], tt[j]
        rows = lambda nodes, j=j, a=a, b=b: _interval_rows(spec, traj, a, b, j - 1, nodes, quad.interp)
        pair = None
        if other is not None:
            pair = lambda nodes, j=j, a=a, b=b: _interval_rows(spec, other, a, b, j - 1, nodes, quad.interp)
        step = _duhamel_rows(spec, rows, grid, a, b, nl, quad, qs, method, pair)
        out[j] = propagator_table(spec, xi, [b - a])[0] * out[j - 1] + step
    real = traj.real and spec.is_even and (other is None or other.real)
    if real:
        out = np.stack([symmetrize(grid, r) for r in out])
    return Trajectory(grid, tt, out, real)


def duhamel_nl(spec: SymbolSpec, traj, t: float, nl: str, quad: QuadConfig | None = None,
               params: WeightedNormParams | None = None, s: float | None = None,
               method: str = "auto") -> SpectralField:
    """int_0^t V(t - t') N(v(t')) dt' as a field.

    ``traj`` is a Trajectory (interpolated between snapshots, per-interval
    graded rules) or a callable t' -> SpectralField evaluated exactly on a
    single mesh over [0, t] graded toward both ends.  With ``quad.check``
    the result is recomputed on ``quad.refined()`` and a ConvergenceError
    is raised when the two differ by more than ``quad.tol`` relative.
    """
    quad = quad or QuadConfig()
    if nl not in NONLINEARITIES:
        raise ValueError(f"unknown nonlinearity {nl!r}; choose from {NONLINEARITIES}")
    out = _duhamel_once(spec, traj, t, nl, quad, params, s, method)
    if quad.check and t > 0:
        ref = _duhamel_once(spec, traj, t, nl, quad.refined(), params, s, method)
        scale = max(float(np.max(np.abs(ref.coeffs))), 1e-300)
        err = float(np.max(np.abs(ref.coeffs - out.coeffs))) / scale
        if err > quad.tol:
            raise ConvergenceError(f"time quadrature not converged: refinement changed the result by {err:.2e}")
        return ref
    return out


def _duhamel_once(spec, traj, t, nl, quad, params, s, method):
    if callable(traj) and not isinstance(traj, Trajectory):
        f0 = traj(0.0)
        grid, real = f0.grid, f0.real and spec.is_even
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0:
            return SpectralField.zeros(grid, real)
        rows = lambda nodes: np.stack([traj(float(x)).coeffs for x in nodes])
        qs = _gradings(params, spec, s)
        acc = _duhamel_rows(spec, rows, grid, 0.0, t, nl, quad, qs, method)
        return SpectralField(grid, symmetrize(grid, acc) if real else acc, real)

    tt = traj.times
    if t < 0 or t > tt[-1] * (1 + 1e-14) or t < tt[0]:
        raise ValueError(f"t={t} outside trajectory span [{tt[0]}, {tt[-1]}]")
    grid = traj.grid
    if t == 0:
        return SpectralField.zeros(grid, traj.real)
    k = int(np.searchsorted(tt, t, side="left"))
    if k < len(tt) and np.isclose(tt[k], t, rtol=1e-14, atol=0.0):
        sub = Trajectory(grid, tt[:k + 1], traj.coeffs[:k + 1], traj.real)
    else:
        row = interpolate(spec, traj, [t], quad.interp)[0]
        sub = Trajectory(grid, np.append(tt[:k], t), np.vstack([traj.coeffs[:k], row]), traj.real)
    if sub.times[0] > 0:
        raise ValueError("trajectory must start at t = 0")
    return duhamel_trajectory(spec, sub, nl, quad, params, method=method).final


# ---------------------------------------------------------------------------
# Picard iteration


def snapshot_times(T: float, m: int) -> np.ndarray:
    """t_j = T (j/m)^2, j = 0..m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return T * (np.arange(m + 1) / m) ** 2


def linear_trajectory(spec: SymbolSpec, v0: SpectralField, times) -> Trajectory:
    times = np.asarray(times, dtype=float)
    E = propagator_table(spec, v0.grid.nodes, times)
    real = v0.real and spec.is_even
    coeffs = E * v0.coeffs[None, :]
    if real:
        coeffs = np.stack([symmetrize(v0.grid, r) for r in coeffs])
    return Trajectory(v0.grid, times, coeffs, real)


def picard_map(spec: SymbolSpec, v0: SpectralField, traj: Trajectory, params: WeightedNormParams,
               quad: QuadConfig | None = None, linear: Trajectory | None = None,
               method: str = "auto") -> Trajectory:
    """Psi(v)(t_j) = V(t_j) v0 - int_0^{t_j} V(t_j - t') N(v(t')) dt'."""
    lin = linear if linear is not None else linear_trajectory(spec, v0, traj.times)
    return lin - duhamel_trajectory(spec, traj, params.nl, quad, params, method=method)


@dataclass
class ContractionReport:
    r: float
    T: float
    c_hat: float
    c: float
    alpha_or_theta: float
    iterates: list = dc_field(default_factory=list)
    converged: bool = False
    ratio_max: float = 0.0
    residual: float = float("nan")
    linear_constant: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "T": self.T,
            "c_hat": self.c_hat,
            "c": self.c,
            "alpha_or_theta": self.alpha_or_theta,
            "linear_constant": self.linear_constant,
            "iterates": [[k, d] for k, d in self.iterates],
            "converged": self.converged,
            "ratio_max": self.ratio_max,
            "residual": self.residual,
        }


def horizon(c: float, norm_v0: float, gain: float) -> float:
    """T from c T^gain r = 1/4 with r = 4 c ||v0||, capped at 1."""
    if norm_v0 == 0.0:
        return 1.0
    return min(1.0, (1.0 / (16.0 * c * c * norm_v0)) ** (1.0 / gain))


def picard_solve(spec: SymbolSpec, v0: SpectralField, params: WeightedNormParams, tol: float = 1e-10,
                 max_iter: int = 50, m: int = 64, quad: QuadConfig | None = None,
                 T: float | None = None, c_hat: float | None = None, trials: int = 8,
                 seed: int = 42, method: str = "auto"):
    """Fixed point of Psi on [0, T]; returns (Trajectory, ContractionReport).

    Unless given, T comes from the ball rule r = 4 c ||v0||_{H^s},
    c T^gain r = 1/4 with c = max(linear constant, 2 c_hat), where c_hat
    is ``estimate_bilinear_constant``.  Distances are measured in the
    weighted norm of ``params.variant``.
    """
    params.check_solver_range()
    if abs(params.p - spec.p) > 1e-12:
        raise ValueError("params.p must equal the symbol order p")
    if not params.p > 3:
        raise ValueError("the contraction argument needs p > 3")
    quad = quad or QuadConfig()
    norm0 = hs_norm(v0, params.s)
    gain = params.gain
    if norm0 == 0.0:
        T_use = 1.0 if T is None else T
        times = snapshot_times(T_use, m)
        zero = Trajectory(v0.grid, times, np.zeros((m + 1, v0.grid.n)), v0.real)
        rep = ContractionReport(0.0, T_use, 0.0, 0.0, gain, [(1, 0.0)], True, 0.0, 0.0, 0.0)
        return zero, rep

    if c_hat is None:
        c_hat = estimate_bilinear_constant(spec, params, trials=trials, seed=seed, grid=v0.grid)
    K_lin = verify_linear_xnorm(spec, v0, params.s, 1.0).refined_constant
    c = max(K_lin, 2.0 * c_hat)
    if T is None:
        T = horizon(c, norm0, gain)
        if T < T_FLOOR:
            raise ValueError(f"horizon T={T:.3e} below {T_FLOOR:g}: data norm {norm0:.3e} too large")
    elif not 0 < T <= 1:
        raise ValueError("T must lie in (0, 1]")
    r = 4.0 * c * norm0
    times = snapshot_times(T, m)
    lin = linear_trajectory(spec, v0, times)
    rep = ContractionReport(r, T, c_hat, c, gain, linear_constant=K_lin)

    v = lin
    dists = []
    for k in range(1, max_iter + 1):
        new = picard_map(spec, v0, v, params, quad, lin, method)
        d = weighted_norm(new - v, params)
        dists.append(d)
        rep.iterates.append((k, d))
        v = new
        if d < tol:
            rep.converged = True
            break
    ratios = [dists[i + 1] / dists[i] for i in range(len(dists) - 1) if dists[i] > 0]
    rep.ratio_max = max(ratios) if ratios else 0.0
    if not rep.converged:
        raise ConvergenceError(
            f"Picard iteration did not reach tol={tol:g} in {max_iter} steps "
            f"(last distance {dists[-1]:.3e}, ratio_max {rep.ratio_max:.3f})"
        )
    rep.residual = weighted_norm(v - picard_map(spec, v0, v, params, quad, lin, method), params)
    return v, rep


def estimate_bilinear_constant(spec: SymbolSpec, params: WeightedNormParams, trials: int = 20,
                               seed: int = 42, grid: FrequencyGrid | None = None,
                               T_values=(1.0, 0.1, 0.01), m: int = 16, band: float | None = None,
                               quad: QuadConfig | None = None, scale: float = 1.0) -> float:
    """max over random pairs of ||int V N(u,v)||_W / (T^gain ||u||_W ||v||_W).

    Pairs are free evolutions of real band-limited random data, and the
    maximum is also taken over the horizons in ``T_values``.  ``scale``
    multiplies both inputs (the ratio is invariant under it).
    """
    params.check_solver_range()
    if trials < 1:
        raise ValueError("need at least one trial")
    grid = grid or FrequencyGrid(16.0, 256)
    band = band if band is not None else min(grid.xi_max / 4.0, 8.0)
    quad = quad or QuadConfig(panels=2, order=8, levels=2)
    rng = np.random.default_rng(seed)
    xi = grid.nodes
    mask = np.abs(xi) <= band
    best = 0.0
    for _ in range(trials):
        pair = []
        for _k in range(2):
            c = np.where(mask, rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n), 0.0)
            c = symmetrize(grid, c) * scale
            pair.append(SpectralField(grid, c, True))
        for T in T_values:
            times = snapshot_times(T, m)
            U = linear_trajectory(spec, pair[0], times)
            W = linear_trajectory(spec, pair[1], times)
            den = T**params.gain * weighted_norm(U, params) * weighted_norm(W, params)
            if den == 0.0:
                continue
            D = duhamel_trajectory(spec, U, params.nl, quad, params, other=W)
            best = max(best, weighted_norm(D, params) / den)
    return best


# ---------------------------------------------------------------------------
# exponential midpoint marcher


def _phi1(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.expm1(zs) / zs
    return np.where(small, 1.0 + 0.5 * z, out)


def evolve(spec: SymbolSpec, v0: SpectralField, T: float, dt: float, nl: str = "derivative_of_square",
           linear_only: bool = False, method: str = "auto") -> Trajectory:
    """Exponential midpoint rule on a uniform step, second order.

    v_half = E(dt/2) v_n - (dt/2) phi1(L dt/2) N(v_n),
    v_{n+1} = E(dt) v_n - dt E(dt/2) N(v_half),
    with E(tau) the exact linear propagator.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not T > 0:
        raise ValueError("T must be positive")
    steps = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / steps
    grid = v0.grid
    xi = grid.nodes
    lam = 1j * xi**3 + _symbol_rate(spec, xi)
    E_half = propagator_table(spec, xi, [h / 2])[0]
    E_full = propagator_table(spec, xi, [h])[0]
    P_half = _phi1(lam * h / 2)
    real = v0.real and spec.is_even
    coeffs = np.empty((steps + 1, grid.n), dtype=complex)
    coeffs[0] = v0.coeffs
    v = v0.coeffs.copy()
    times = np.linspace(0.0, T, steps + 1)
    for k in range(steps):
        if linear_only:
            new = propagator_table(spec, xi, [times[k + 1]])[0] * v0.coeffs
        else:
            mid = E_half * v - (h / 2) * P_half * nonlinear_term(v, v, grid, nl, method)
            new = E_full * v - h * E_half * nonlinear_term(mid, mid, grid, nl, method)
        if real:
            new = symmetrize(grid, new)
        before = np.sqrt(np.sum(np.abs(v) ** 2))
        after = np.sqrt(np.sum(np.abs(new) ** 2))
        if not np.all(np.isfinite(new)) or (before > 0 and after > 10.0 * before):
            raise FloatingPointError(f"step {k + 1}: norm grew from {before:.3e} to {after:.3e}")
        v = new
        coeffs[k + 1] = v
    return Trajectory(grid, times, coeffs, real)


# ---------------------------------------------------------------------------
# regularity of the Duhamel term


@dataclass
class RegularityReport:
    s: float
    mu: float
    t_values: np.ndarray
    norms: np.ndarray
    finite: bool
    max_jump: float
    refined_max_jump: float
    continuous: bool
    vanishes_at_zero: bool


def nonlinear_regularity_check(spec: SymbolSpec, traj: Trajectory, s: float, mu: float, t_grid,
                               nl: str = "derivative_of_square", quad: QuadConfig | None = None
                               ) -> RegularityReport:
    """H^{s+mu} norms of int_0^t V(t-t') N(v) dt' along ``t_grid``.

    Continuity is judged by the largest jump between neighbouring samples
    shrinking when midpoints are added; the value at the smallest positive
    time must be below the largest value by a factor of 10 or more.
    """
    if not 0 <= mu < spec.p / 2:
        raise ValueError(f"mu must satisfy 0 <= mu < p/2 = {spec.p / 2}")
    t_grid = np.unique(np.asarray(t_grid, dtype=float))
    t_grid = t_grid[(t_grid >= 0) & (t_grid <= traj.times[-1])]
    if t_grid.size < 2:
        raise ValueError("need at least two admissible times")

    def norms_at(ts):
        return np.array([hs_norm(duhamel_nl(spec, traj, float(t), nl, quad, s=s), s + mu) for t in ts])

    vals = norms_at(t_grid)
    mids = 0.5 * (t_grid[1:] + t_grid[:-1])
    mid_vals = norms_at(mids)
    jump = float(np.max(np.abs(np.diff(vals))))
    fine = np.empty(2 * t_grid.size - 1)
    fine[0::2], fine[1::2] = vals, mid_vals
    jump_ref = float(np.max(np.abs(np.diff(fine))))
    finite = bool(np.all(np.isfinite(vals)))
    pos = vals[t_grid > 0]
    vanish = bool(vals[0] == 0.0 if t_grid[0] == 0 else pos[0] <= 0.1 * max(pos.max(), 1e-300))
    return RegularityReport(s, mu, t_grid, vals, finite, jump, jump_ref,
                            bool(finite and jump_ref <= jump * (1 + 1e-12)), vanish)
