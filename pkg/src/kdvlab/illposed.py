"""Norm inflation from frequency-box data.

The data v0_hat = N^{-s} gamma^{-1/2} [chi_{[N, N+2gamma]} + chi_{-[N, N+2gamma]}]
has H^s norm of order one, while the second Picard iterate

    f(t) = int_0^t V(t - t') d_x [V(t') v0]^2 dt'

has a low-frequency piece whose H^s norm scales like N^{-2s-p}.  The time
integral is done in closed form; only the xi_1 integral is discretized,
by the trapezoid rule on the nodes of the data grid.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .field import FrequencyGrid, SpectralField, hs_norm, hs_norm_window, symmetrize
from .semigroup import PHASE_REDUCE_ABOVE, dispersion_phase, reduce_phase
from .symbol import SymbolSpec, compute_threshold_M

WHICH = ("derivative_nl", "gradient_nl")
NODES_PER_GAMMA = 64
MIN_NODES_PER_GAMMA = 16
INCONCLUSIVE_RESIDUAL = 0.15


@dataclass(frozen=True)
class CounterexampleParams:
    N: float
    gamma: float = 1.0
    s: float = -2.5
    t_eval: float = 0.1

    def __post_init__(self):
        if not self.N > 0:
            raise ValueError("N must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0 < self.t_eval <= 1:
            raise ValueError(f"t_eval must lie in (0, 1], got {self.t_eval}")

    def check_large(self, spec: SymbolSpec):
        need = 10.0 * max(1.0, compute_threshold_M(spec))
        if not self.N > need:
            raise ValueError(f"N={self.N} too small: need N > 10 max(1, M) = {need:.4g}")


def resonance(xi, xi1):
    """3 xi xi1 (xi1 - xi), equal to -xi^3 + xi1^3 + (xi - xi1)^3."""
    xi = np.asarray(xi, dtype=float)
    xi1 = np.asarray(xi1, dtype=float)
    out = 3.0 * xi * xi1 * (xi1 - xi)
    return float(out) if out.ndim == 0 else out


def counterexample_grid(params: CounterexampleParams, nodes_per_gamma: int = NODES_PER_GAMMA,
                        high_band: bool = True) -> FrequencyGrid:
    """Grid with spacing gamma / nodes_per_gamma on which N and N + 2 gamma are nodes.

    With ``high_band`` it reaches 2N + 4 gamma + 1 so the whole convolution
    support fits; otherwise N + 2 gamma + 1.
    """
    dxi = params.gamma / nodes_per_gamma
    k = params.N / dxi
    if abs(k - round(k)) > 1e-9 * max(1.0, k):
        raise ValueError(f"N={params.N} is not a multiple of gamma/{nodes_per_gamma}")
    reach = (2 * params.N + 4 * params.gamma + 1) if high_band else (params.N + 2 * params.gamma + 1)
    return FrequencyGrid.from_spacing(dxi, int(math.ceil(reach / dxi - 1e-9)))


def counterexample_data(params: CounterexampleParams, grid: FrequencyGrid | None = None) -> SpectralField:
    """Real, even box data; nodes exactly on a box edge get half the height."""
    grid = grid or counterexample_grid(params)
    N, g = params.N, params.gamma
    if grid.xi_max < N + 2 * g + 1:
        raise ValueError(f"grid reaches {grid.xi_max}, needs >= N + 2 gamma + 1 = {N + 2 * g + 1}")
    if g / grid.dxi < MIN_NODES_PER_GAMMA - 1e-9:
        raise ValueError(f"grid too coarse: {g / grid.dxi:.2f} nodes per gamma, need {MIN_NODES_PER_GAMMA}")
    a = np.abs(grid.nodes)
    tol = 1e-9 * grid.dxi
    val = np.where((a > N - tol) & (a < N + 2 * g + tol), 1.0, 0.0)
    edge = (np.abs(a - N) <= tol) | (np.abs(a - N - 2 * g) <= tol)
    val[edge] = 0.5
    amp = N ** (-params.s) * g ** (-0.5)
    return SpectralField(grid, amp * val + 0j, True)


# ---------------------------------------------------------------------------
# closed-form second iterate


def _pair_phase(t, res):
    ph = t * res
    big = np.abs(ph) > PHASE_REDUCE_ABOVE
    if np.any(big):
        ph = ph.copy()
        ph[big] = reduce_phase(np.longdouble(t) * res[big].astype(np.longdouble))
    return ph


def second_iterate(spec: SymbolSpec, params: CounterexampleParams, grid_out: FrequencyGrid | None = None,
                   which: str = "derivative_nl", data: SpectralField | None = None,
                   chunk: int = 512) -> SpectralField:
    """f(t_eval) for the derivative nonlinearity or g(t_eval) for the gradient one.

    f_hat(xi) = i xi e^{it xi^3} sum_j w v0(xi - xi_j) v0(xi_j) Q,
    g_hat(xi) = - e^{it xi^3} sum_j w xi_j (xi - xi_j) v0(xi - xi_j) v0(xi_j) Q,
    Q = (exp(t[Phi(xi_j) + Phi(xi - xi_j)] + i t R) - exp(t Phi(xi))) / z,
    z = Phi(xi_j) + Phi(xi - xi_j) - Phi(xi) + i R, R = 3 xi xi_j (xi_j - xi),
    with eta multiplying every Phi.  The xi_j run over the nonzero nodes of
    the data.  Output nodes that no pair can reach are left at zero.
    """
    if which not in WHICH:
        raise ValueError(f"unknown variant {which!r}; choose from {WHICH}")
    v0 = data if data is not None else counterexample_data(params)
    dgrid = v0.grid
    grid_out = grid_out or dgrid
    t = params.t_eval
    support = np.flatnonzero(v0.coeffs != 0)
    out = np.zeros(grid_out.n, dtype=complex)
    if support.size == 0:
        return SpectralField(grid_out, out, v0.real)

    xi1 = dgrid.nodes[support]
    a = v0.coeffs[support]
    h = dgrid.dxi
    aligned = abs(grid_out.dxi - h) <= 1e-12 * h and abs(
        (grid_out.xi_max - dgrid.xi_max) / h - round((grid_out.xi_max - dgrid.xi_max) / h)
    ) <= 1e-9
    lo_sum, hi_sum = 2 * xi1.min(), 2 * xi1.max()
    xo = grid_out.nodes
    reach = (xo >= lo_sum - h / 2) & (xo <= hi_sum + h / 2)
    if aligned:
        # keep only outputs that are sums of two support nodes
        sums = np.unique((support[:, None] + support[None, :]).ravel() - dgrid.n // 2)
        shift = int(round((dgrid.xi_max - grid_out.xi_max) / h))
        idx = sums - shift
        idx = idx[(idx >= 0) & (idx < grid_out.n)]
        keep = np.zeros(grid_out.n, dtype=bool)
        keep[idx] = True
        reach &= keep
    rows = np.flatnonzero(reach)

    eta = spec.eta
    phi1 = eta * spec.phi(xi1)
    for start in range(0, rows.size, chunk):
        k = rows[start:start + chunk]
        xi = xo[k]
        diff = xi[:, None] - xi1[None, :]
        if aligned:
            pos = np.rint((diff + dgrid.xi_max) / h).astype(np.int64)
            inside = (pos >= 0) & (pos < dgrid.n)
            b = np.where(inside, v0.coeffs[np.clip(pos, 0, dgrid.n - 1)], 0.0)
        else:
            b = np.interp(diff, dgrid.nodes, v0.coeffs.real) + 1j * np.interp(diff, dgrid.nodes, v0.coeffs.imag)
        res = resonance(xi[:, None], xi1[None, :])
        phi_pair = phi1[None, :] + eta * spec.phi(diff)
        phi_out = eta * spec.phi(xi)
        if which == "gradient_nl":
            mult = -(xi1[None, :] * diff) + 0j
        else:
            mult = np.ones_like(b)
        s = _kernels.pair_sum(t, phi_out, phi_pair, res, _pair_phase(t, res), a, b, mult)
        pre = np.exp(1j * dispersion_phase(xi, t)) * h
        if which == "derivative_nl":
            pre = pre * 1j * xi
        out[k] = pre * s
    real = v0.real and spec.is_even
    if real:
        out = symmetrize(grid_out, out)
    return SpectralField(grid_out, out, real)


# ---------------------------------------------------------------------------
# diagnostics


def denominator_bands(spec: SymbolSpec, params: CounterexampleParams,
                      nodes_per_gamma: int = NODES_PER_GAMMA) -> dict:
    """Check the size of z = Phi(xi1) - Phi(xi) + Phi(xi - xi1) + i R on K.

    For |xi| <= gamma/2 and xi1 in K (both factors inside the boxes):
    |Re z| in [N^p/4, 4 N^p]; |Im z| in [N^2 gamma/4, 4 N^2 gamma (1 + 2gamma/N)]
    where |xi| >= gamma/12 (Im z vanishes linearly at xi = 0); the node
    measure of K is at least gamma; exp(-t N^p) <= exp(-t gamma^p / 2) / 2.
    """
    N, g, t, p = params.N, params.gamma, params.t_eval, spec.p
    h = g / nodes_per_gamma
    xi = np.arange(-nodes_per_gamma // 2, nodes_per_gamma // 2 + 1) * h
    box = N + np.arange(2 * nodes_per_gamma + 1) * h
    xi1_all = np.concatenate([-box[::-1], box])
    eta = spec.eta
    re_lo, re_hi = N**p / 4, 4 * N**p
    im_lo, im_hi = N * N * g / 4, 4 * N * N * g * (1 + 2 * g / N)
    re_ok = im_ok = measure_ok = True
    worst_re = [np.inf, 0.0]
    worst_im = [np.inf, 0.0]
    min_measure = np.inf
    for x in xi:
        other = np.abs(x - xi1_all)
        inK = (other >= N - 1e-9 * h) & (other <= N + 2 * g + 1e-9 * h) & (np.sign(x - xi1_all) != np.sign(xi1_all))
        x1 = xi1_all[inK]
        re = np.abs(eta * (spec.phi(x1) - spec.phi(x) + spec.phi(x - x1)))
        worst_re = [min(worst_re[0], re.min()), max(worst_re[1], re.max())]
        re_ok &= bool(re.min() >= re_lo and re.max() <= re_hi)
        if abs(x) >= g / 12:
            im = np.abs(resonance(x, x1))
            worst_im = [min(worst_im[0], im.min()), max(worst_im[1], im.max())]
            im_ok &= bool(im.min() >= im_lo and im.max() <= im_hi)
        measure = max(inK.sum() - 2, 0) * h
        min_measure = min(min_measure, measure)
        measure_ok &= measure >= g
    with np.errstate(under="ignore"):
        n_min_ok = bool(np.exp(-t * N**p) <= 0.5 * np.exp(-t * g**p / 2))
    return {
        "re_band": [re_lo, re_hi],
        "re_observed": worst_re,
        "re_ok": re_ok,
        "im_band": [im_lo, im_hi],
        "im_observed": worst_im,
        "im_ok": im_ok,
        "min_K_measure": float(min_measure),
        "measure_ok": measure_ok,
        "n_min_ok": n_min_ok,
        "ok": bool(re_ok and im_ok and measure_ok and n_min_ok),
    }


def predicted_slope(s: float, p: float, which: str) -> float:
    return -2 * s - p + (2.0 if which == "gradient_nl" else 0.0)


@dataclass
class SweepResult:
    N_values: list
    norm_values: list
    full_norms: list
    data_norms: list
    fitted_slope: float
    fit_residual: float
    predicted_slope: float
    inconclusive: bool
    denominator_band_ok: bool
    bands: list = dc_field(default_factory=list)

    def summary(self) -> dict:
        return {
            "fitted_slope": self.fitted_slope,
            "predicted_slope": self.predicted_slope,
            "residual": self.fit_residual,
            "inconclusive": self.inconclusive,
            "denominator_band_ok": self.denominator_band_ok,
        }


def fit_loglog(x, y):
    """Least-squares slope of log y on log x and the max relative deviation of the fit."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    slope, icept = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(np.exp(ly - (slope * lx + icept)) - 1.0)))
    return float(slope), float(icept), resid


def _sweep_point(args):
    spec, s, gamma, t_eval, N, which, npg = args
    params = CounterexampleParams(N, gamma, s, t_eval)
    grid = counterexample_grid(params, npg)
    v0 = counterexample_data(params, grid)
    f = second_iterate(spec, params, grid, which, data=v0)
    return (
        hs_norm_window(f, s, gamma / 2),
        hs_norm(f, s),
        hs_norm(v0, s),
        denominator_bands(spec, params, npg),
    )


def inflation_sweep(spec: SymbolSpec, s: float, gamma: float, t_eval: float, N_list,
                    which: str = "derivative_nl", nodes_per_gamma: int = NODES_PER_GAMMA,
                    jobs: int | None = None) -> SweepResult:
    """Window H^s norm (|xi| <= gamma/2) of the second iterate for each N, and its log-log slope."""
    N_list = [float(n) for n in N_list]
    if len(N_list) < 4:
        raise ValueError("need at least 4 N values")
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N values must be increasing")
    if spec.p < 2:
        raise ValueError("the inflation scaling is stated for p >= 2")
    for N in N_list:
        CounterexampleParams(N, gamma, s, t_eval).check_large(spec)
    tasks = [(spec, s, gamma, t_eval, N, which, nodes_per_gamma) for N in N_list]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(a) for a in tasks]
    win = [r[0] for r in results]
    slope, _, resid = fit_loglog(N_list, win)
    bands = [r[3] for r in results]
    return SweepResult(
        N_values=N_list,
        norm_values=win,
        full_norms=[r[1] for r in results],
        data_norms=[r[2] for r in results],
        fitted_slope=slope,
        fit_residual=resid,
        predicted_slope=predicted_slope(s, spec.p, which),
        inconclusive=resid > INCONCLUSIVE_RESIDUAL,
        denominator_band_ok=all(b["ok"] for b in bands),
        bands=bands,
    )


@dataclass
class FlowmapWitness:
    N_values: list
    ratios: list
    slope: float
    increasing: bool
    unbounded: bool


def c2_flowmap_witness(spec: SymbolSpec, s: float, gamma: float, t_eval: float, N_list,
                       which: str = "derivative_nl", nodes_per_gamma: int = NODES_PER_GAMMA,
                       jobs: int | None = None) -> FlowmapWitness:
    """Ratios ||v2(t)||_{H^s} / ||v0||^2_{H^s} with v2 = 2 * second iterate.

    A positive log-log slope with increasing ratios means the bilinear bound
    a C^2 flow map would force is violated along the sweep.
    """
    sw = inflation_sweep(spec, s, gamma, t_eval, N_list, which, nodes_per_gamma, jobs)
    ratios = [2.0 * w / d**2 for w, d in zip(sw.norm_values, sw.data_norms)]
    slope, _, _ = fit_loglog(sw.N_values, ratios)
    inc = all(b > a for a, b in zip(ratios, ratios[1:]))
    return FlowmapWitness(sw.N_values, ratios, slope, inc, bool(inc and slope > 0))
