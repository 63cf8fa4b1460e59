"""The dissipation symbol Phi(xi) = -|xi|^p + Phi1(xi).

Phi1 is restricted to the polynomial form sum c * xi**i * |xi|**j.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

THRESHOLD_CAP = 1e6
_THRESHOLD_RTOL = 1e-10


@dataclass(frozen=True)
class SymbolSpec:
    """Leading order ``p``, perturbation terms ``(c, i, j)``, strength ``eta``.

    ``q_bound`` is the declared growth order of Phi1 and must satisfy
    ``max(i + j) <= q_bound < p``.  ``eta = 0`` is rejected unless
    ``allow_inviscid`` is set; that switch exists for conservation tests of
    the pure dispersive flow and nothing else.
    """

    p: float
    phi1_terms: tuple = ()
    eta: float = 1.0
    q_bound: float = 0.0
    name: str | None = None
    allow_inviscid: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self):
        terms = tuple((float(c), int(i), int(j)) for c, i, j in self.phi1_terms)
        object.__setattr__(self, "phi1_terms", terms)
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if self.eta < 0 or (self.eta == 0 and not self.allow_inviscid):
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.q_bound < self.p:
            raise ValueError(f"q_bound={self.q_bound} must be < p={self.p}")
        if self.q_bound < 0:
            raise ValueError("q_bound must be nonnegative")
        for c, i, j in terms:
            if i < 0 or j < 0:
                raise ValueError(f"term exponents must be nonnegative: {(c, i, j)}")
            if i + j > self.q_bound:
                raise ValueError(
                    f"term {(c, i, j)} has order {i + j} > q_bound={self.q_bound}"
                )

    @property
    def is_even(self) -> bool:
        return all(i % 2 == 0 for _, i, _ in self.phi1_terms)

    def phi1(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        a = np.abs(xi)
        for c, i, j in self.phi1_terms:
            out = out + c * xi**i * a**j
        return out

    def phi(self, xi):
        xi = np.asarray(xi, dtype=float)
        return -np.abs(xi) ** self.p + self.phi1(xi)

    def __call__(self, xi):
        return self.phi(xi)


BUILTINS = {
    # KdV-Burgers: Phi = -|xi|^2
    "kdvb": SymbolSpec(p=2.0, phi1_terms=(), q_bound=0.0, name="kdvb"),
    # Ostrovsky-Stepanyams-Tsimring: Phi = -|xi|^3 + |xi|
    "ost": SymbolSpec(p=3.0, phi1_terms=((1.0, 0, 1),), q_bound=1.0, name="ost"),
    # KdV-Kuramoto-Sivashinsky: Phi = -|xi|^4 + |xi|^2
    "kdvks": SymbolSpec(p=4.0, phi1_terms=((1.0, 2, 0),), q_bound=2.0, name="kdvks"),
}


def builtin(name: str) -> SymbolSpec:
    try:
        return BUILTINS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown builtin symbol {name!r}; choose from {sorted(BUILTINS)}") from None


def eval_phi(spec: SymbolSpec, xi):
    """Phi(xi) = -|xi|^p + sum c xi^i |xi|^j, scalar in, scalar out."""
    val = spec.phi(xi)
    return float(val) if np.ndim(val) == 0 else val


def _tail_ok(spec: SymbolSpec, x):
    """Pointwise check of the three high-frequency inequalities at +-x."""
    x = np.asarray(x, dtype=float)
    ok = np.ones(x.shape, dtype=bool)
    xp = x**spec.p
    for sgn in (1.0, -1.0):
        phi = spec.phi(sgn * x)
        ok &= phi < -1.0
        ok &= spec.phi1(sgn * x) / xp <= 0.5
        ok &= np.abs(phi) >= 0.5 * xp
    return ok


def compute_threshold_M(spec: SymbolSpec) -> float:
    """Smallest M >= 1 with Phi < -1, Phi1/|xi|^p <= 1/2, |Phi| >= |xi|^p/2 on |xi| >= M.

    A geometric scan brackets the last failure, bisection pins the boundary
    to relative tolerance 1e-10, and the inequalities are re-checked on
    10^4 samples in [M, 10 M].
    """
    scan = np.geomspace(1.0, THRESHOLD_CAP, 14000)
    ok = _tail_ok(spec, scan)
    if not ok[-1]:
        raise ValueError(
            f"no threshold M <= {THRESHOLD_CAP:g}: the high-frequency bounds fail "
            "at the cap (is q_bound < p honoured by the terms?)"
        )
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        M = 1.0
    else:
        lo, hi = scan[bad[-1]], scan[bad[-1] + 1]
        while hi - lo > _THRESHOLD_RTOL * hi:
            mid = 0.5 * (lo + hi)
            if _tail_ok(spec, mid):
                hi = mid
            else:
                lo = mid
        M = hi
    samples = np.linspace(M, 10.0 * M, 10_000)
    if not _tail_ok(spec, samples).all():
        raise ValueError("threshold postcondition failed on the sample grid beyond M")
    return float(M)


def sup_phi(spec: SymbolSpec, M: float | None = None) -> float:
    """Numerical upper bound C_M of Phi on [-M, M].

    Dense grid of 100001 nodes, then repeated local refinement around the
    argmax, halving the spacing until the maximum moves by less than 1e-9.
    Beyond M, Phi < -1, so the value bounds Phi globally whenever it is
    >= -1 (which continuity at M guarantees).
    """
    if M is None:
        M = compute_threshold_M(spec)
    xs = np.linspace(-M, M, 100_001)
    vals = spec.phi(xs)
    k = int(np.argmax(vals))
    best, x0 = float(vals[k]), float(xs[k])
    h = xs[1] - xs[0]
    for _ in range(60):
        h *= 0.5
        local = np.clip(x0 + h * np.arange(-8, 9), -M, M)
        lv = spec.phi(local)
        kk = int(np.argmax(lv))
        new = max(best, float(lv[kk]))
        x0 = float(local[kk]) if lv[kk] >= best else x0
        change, best = new - best, new
        if change < 1e-9 and h < 1e-9 * max(1.0, M):
            break
    return best


def power_exp_max(a: float, b: float) -> float:
    """max over t >= 0 of t^a e^{t b} for a > 0, b < 0: (a/|b|)^a e^{-a}."""
    if not (a > 0 and b < 0):
        raise ValueError("need a > 0 and b < 0")
    return (a / abs(b)) ** a * np.exp(-a)
