"""Canonical cusp catastrophe: potential, equilibria and stationary density.

The potential is ``V(y) = -(alpha*y + beta*y**2/2 - y**4/4)`` and the
stochastic cusp density is ``exp(-V(y)) / psi(alpha, beta)``.  Throughout
the module ``f(y) = -V(y)`` is called the log-kernel.

Two routes compute ``log psi``:

* :func:`log_normalizer` - scalar, adaptive Gauss-Kronrod (7/15) with
  interval halving.  Used for diagnostics and as a reference.
* :func:`log_normalizer_batch` - vectorized trapezoid rule on per-sample
  windows, also returning the first four moments.  The kernel is analytic
  and decays faster than any Gaussian, so the trapezoid rule converges
  exponentially once the step resolves the narrowest mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Log-kernel drop (nats) below the global maximum at which the window is cut.
TAIL_NATS = 46.0
# Trapezoid step as a fraction of the narrowest half-nat width.
STEP_FRACTION = 0.5
MAX_GRID = 1 << 15
# Cap on total kernel evaluations per batch call.
MAX_WORK = 1 << 22


class CuspNumericalError(ArithmeticError):
    """Quadrature of the normalizing constant failed to converge."""

    def __init__(self, msg, alpha=None, beta=None, index=None):
        super().__init__(msg)
        self.alpha = alpha
        self.beta = beta
        self.index = index


@dataclass(frozen=True)
class CuspParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError(f"cusp parameters must be finite, got {self.alpha}, {self.beta}")


@dataclass(frozen=True)
class EquilibriumSet:
    roots: tuple
    stability: tuple
    discriminant: float

    def __len__(self):
        return len(self.roots)

    @property
    def stable(self):
        return tuple(r for r, s in zip(self.roots, self.stability) if s == "stable")


def _ab(p):
    return float(p.alpha), float(p.beta)


def log_kernel(y, alpha, beta):
    """``alpha*y + beta*y**2/2 - y**4/4`` (broadcasting)."""
    y2 = y * y
    return alpha * y + 0.5 * beta * y2 - 0.25 * y2 * y2


def potential(y, p: CuspParams):
    """Cusp potential ``V(y; alpha, beta)``."""
    alpha, beta = _ab(p)
    return -log_kernel(np.asarray(y, dtype=float) if not np.isscalar(y) else float(y), alpha, beta)


def discriminant(p: CuspParams) -> float:
    """Cardan discriminant ``27 alpha^2 - 4 beta^3``.

    Positive: one real equilibrium.  Negative: three.  Zero: degenerate.
    """
    alpha, beta = _ab(p)
    return 27.0 * alpha * alpha - 4.0 * beta ** 3


def _is_degenerate(alpha, beta, delta):
    scale = 27.0 * alpha * alpha + 4.0 * abs(beta) ** 3
    return abs(delta) <= 1e-12 * scale


def _newton(r, alpha, beta):
    d = 3.0 * r * r - beta
    if d != 0.0:
        r = r - (r ** 3 - beta * r - alpha) / d
    return r


def equilibria(p: CuspParams) -> EquilibriumSet:
    """Real roots of ``y^3 - beta*y - alpha = 0`` with stability labels.

    Roots come from the closed-form (trigonometric or Cardano) solution,
    refined by one Newton step.  A root is stable when ``V''(r) = 3r^2 - beta``
    is positive.  At the cusp point the triple root 0 is a minimum of V and
    is labelled stable; a double root on the bifurcation set is reported
    once and labelled unstable.
    """
    alpha, beta = _ab(p)
    delta = discriminant(p)
    if alpha == 0.0 and beta == 0.0:
        return EquilibriumSet((0.0,), ("stable",), 0.0)
    if _is_degenerate(alpha, beta, delta):
        # double root at -sign(alpha)*sqrt(beta/3), simple root at twice the opposite
        s = math.copysign(1.0, alpha)
        q = math.sqrt(beta / 3.0)
        double, simple = -s * q, 2.0 * s * q
        roots = sorted([(double, "unstable"), (_newton(simple, alpha, beta), "stable")])
        return EquilibriumSet(
            tuple(r for r, _ in roots), tuple(l for _, l in roots), delta
        )
    if delta < 0:
        m = 2.0 * math.sqrt(beta / 3.0)
        c = (3.0 * alpha / (2.0 * beta)) * math.sqrt(3.0 / beta)
        theta = math.acos(max(-1.0, min(1.0, c)))
        roots = sorted(
            _newton(m * math.cos(theta / 3.0 - 2.0 * math.pi * k / 3.0), alpha, beta)
            for k in range(3)
        )
    else:
        roots = [_newton(_cardano_single(alpha, beta), alpha, beta)]
    labels = tuple("stable" if 3.0 * r * r - beta > 0 else "unstable" for r in roots)
    return EquilibriumSet(tuple(roots), labels, delta)


def _cardano_single(alpha, beta):
    delta = 27.0 * alpha * alpha - 4.0 * beta ** 3
    s = 1.0 if alpha >= 0 else -1.0
    u = np.cbrt(alpha / 2.0 + s * math.sqrt(delta / 108.0))
    if u == 0.0:
        return 0.0
    return float(u + beta / (3.0 * u))


# ---------------------------------------------------------------------------
# vectorized helpers shared by both quadrature routes

def outer_modes(alpha, beta):
    """Smallest and largest stable equilibria (local maxima of the kernel).

    Returns arrays ``(lo, hi)``; they coincide when only one equilibrium exists.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    alpha, beta = np.broadcast_arrays(alpha, beta)
    delta = 27.0 * alpha * alpha - 4.0 * beta ** 3
    three = delta < 0
    lo = np.empty(alpha.shape)
    hi = np.empty(alpha.shape)

    if np.any(three):
        a, b = alpha[three], beta[three]
        m = 2.0 * np.sqrt(b / 3.0)
        c = np.clip((3.0 * a / (2.0 * b)) * np.sqrt(3.0 / b), -1.0, 1.0)
        th = np.arccos(c) / 3.0
        hi[three] = m * np.cos(th)
        lo[three] = m * np.cos(th - 4.0 * np.pi / 3.0)
    one = ~three
    if np.any(one):
        a, b = alpha[one], beta[one]
        d = np.maximum(27.0 * a * a - 4.0 * b ** 3, 0.0)
        s = np.where(a >= 0, 1.0, -1.0)
        u = np.cbrt(a / 2.0 + s * np.sqrt(d / 108.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(u != 0.0, u + b / (3.0 * u), 0.0)
        lo[one] = r
        hi[one] = r
    for r in (lo, hi):
        d = 3.0 * r * r - beta
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0, (r ** 3 - beta * r - alpha) / d, 0.0)
        r -= np.where(np.isfinite(step), step, 0.0)
    return lo, hi


def _drop_distance(curv, r_out, target, iters=24):
    """Distance ``d`` at which the kernel has fallen ``target`` nats from a mode.

    ``curv = 3r^2 - beta >= 0`` is the mode's curvature and ``r_out`` its
    coordinate times the outward direction sign.  Outward of an outermost
    mode the drop ``curv*d^2/2 + r_out*d^3 + d^4/4`` is increasing in d.
    """
    curv = np.maximum(curv, 0.0)
    hi = np.maximum(8.0 * np.abs(r_out), (8.0 * target) ** 0.25)
    lo = np.zeros_like(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        drop = mid * mid * (0.5 * curv + mid * (r_out + 0.25 * mid))
        big = drop >= target
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
    return hi


def _solve_upper(curv, a, target, iters=16):
    # largest d with curv*d^2/2 + a*d^3 + d^4/4 <= target; that polynomial bounds
    # the drop on both sides of a mode, so d under-estimates the peak width
    curv = np.maximum(curv, 0.0)
    hi = np.full(np.shape(curv), (4.0 * target) ** 0.25)
    lo = np.zeros_like(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        drop = mid * mid * (0.5 * curv + mid * (a + 0.25 * mid))
        big = drop >= target
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
    return lo


def integration_window(alpha, beta, tail=TAIL_NATS):
    """Window ``[left, right]`` outside which the kernel is ``tail`` nats below its max.

    Also returns the kernel maximum and the narrowest half-nat width, used to
    pick the trapezoid step.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    lo, hi = outer_modes(alpha, beta)
    f_lo, f_hi = log_kernel(lo, alpha, beta), log_kernel(hi, alpha, beta)
    fmax = np.maximum(f_lo, f_hi)
    c_lo = 3.0 * lo * lo - beta
    c_hi = 3.0 * hi * hi - beta
    # extra drop needed from each outer mode to sit `tail` nats below the global max
    need_lo = tail + (fmax - f_lo)
    need_hi = tail + (fmax - f_hi)
    left = lo - _drop_distance(c_lo, -lo, need_lo)
    right = hi + _drop_distance(c_hi, hi, need_hi)
    width = np.minimum(_solve_upper(c_lo, np.abs(lo), 0.5), _solve_upper(c_hi, np.abs(hi), 0.5))
    return left, right, fmax, width


def log_normalizer_batch(alpha, beta, moments=0):
    """Vectorized ``log psi`` with optional raw moments ``E[y^k]``, k=1..moments.

    Returns ``log_psi`` alone when ``moments == 0``, else ``(log_psi, m)``
    where ``m`` has shape ``(moments, n)``.

    Raises
    ------
    CuspNumericalError
        If a sample needs more than ``MAX_GRID`` nodes; ``index`` names the
        first offending sample.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    alpha, beta = np.broadcast_arrays(alpha, beta)
    n = alpha.shape[0]
    bad = ~(np.isfinite(alpha) & np.isfinite(beta))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise CuspNumericalError("non-finite cusp parameters", alpha[i], beta[i], i)
    left, right, fmax, width = integration_window(alpha, beta)
    h_max = STEP_FRACTION * width
    need = np.ceil((right - left) / h_max) + 1
    if np.any(~np.isfinite(need) | (need > MAX_GRID)):
        i = int(np.flatnonzero(~np.isfinite(need) | (need > MAX_GRID))[0])
        raise CuspNumericalError(
            f"normalizer grid for sample {i} exceeds {MAX_GRID} nodes", alpha[i], beta[i], i
        )
    grid = np.maximum(64, 2 ** np.ceil(np.log2(np.maximum(need, 2)))).astype(int)
    if grid.sum() > MAX_WORK:
        i = int(np.argmax(grid))
        raise CuspNumericalError(
            f"normalizer batch needs {int(grid.sum())} nodes (cap {MAX_WORK})", alpha[i], beta[i], i
        )
    log_psi = np.empty(n)
    mom = np.empty((moments, n))
    for size in np.unique(grid):
        idx = np.flatnonzero(grid == size)
        chunk = max(1, (1 << 22) // int(size))
        for s in range(0, idx.size, chunk):
            sel = idx[s:s + chunk]
            t = np.linspace(0.0, 1.0, int(size))
            span = (right[sel] - left[sel])[:, None]
            y = left[sel][:, None] + span * t
            g = np.exp(log_kernel(y, alpha[sel][:, None], beta[sel][:, None]) - fmax[sel][:, None])
            g[:, 0] *= 0.5
            g[:, -1] *= 0.5
            total = g.sum(axis=1)
            h = span[:, 0] / (size - 1)
            log_psi[sel] = fmax[sel] + np.log(total * h)
            yk = np.ones_like(y)
            for k in range(moments):
                yk = yk * y
                mom[k, sel] = (g * yk).sum(axis=1) / total
    if moments:
        return log_psi, mom
    return log_psi


# ---------------------------------------------------------------------------
# scalar adaptive Gauss-Kronrod route

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5 of _XGK plus the centre)
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5]] = _WG[:3]
_GWEIGHTS[[13, 11, 9]] = _WG[:3]
_GWEIGHTS[7] = _WG[3]


def _gk15(fun, a, b):
    c, hw = 0.5 * (a + b), 0.5 * (b - a)
    v = fun(c + hw * _NODES)
    k = hw * np.dot(_KWEIGHTS, v)
    g = hw * np.dot(_GWEIGHTS, v)
    # QUADPACK-style rescaling of the raw Kronrod-Gauss difference
    resasc = hw * np.dot(_KWEIGHTS, np.abs(v - k / (2.0 * hw))) if hw > 0 else 0.0
    err = abs(k - g)
    if resasc > 0 and err > 0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return k, err


def log_normalizer(p: CuspParams, abs_tol=1e-10, max_intervals=4000) -> float:
    """``log psi(alpha, beta)`` by adaptive Gauss-Kronrod quadrature.

    The kernel is shifted by its maximum before integration so that large
    ``|alpha|``, ``|beta|`` do not overflow; the interval whose error
    estimate is largest is halved until the summed estimate meets the
    tolerance (``abs_tol`` on psi, floored at a few ulps of the integral).
    """
    alpha, beta = _ab(p)
    left, right, fmax, _ = integration_window(np.array([alpha]), np.array([beta]))
    left, right, fmax = float(left[0]), float(right[0]), float(fmax[0])

    def g(y):
        return np.exp(log_kernel(y, alpha, beta) - fmax)

    # start from pieces around the modes so a narrow peak cannot slip between nodes
    lo, hi = outer_modes(alpha, beta)
    cuts = sorted({left, float(lo), float(hi), right})
    intervals = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            k, e = _gk15(g, a, b)
            intervals.append([e, a, b, k])
    tol_shifted = abs_tol * math.exp(-fmax) if fmax > -700 else math.inf
    while True:
        total = sum(iv[3] for iv in intervals)
        err = sum(iv[0] for iv in intervals)
        if err <= max(tol_shifted, 50.0 * np.finfo(float).eps * total):
            break
        if len(intervals) >= max_intervals:
            raise CuspNumericalError(
                f"adaptive quadrature did not converge for alpha={alpha}, beta={beta}",
                alpha,
                beta,
            )
        j = max(range(len(intervals)), key=lambda i: intervals[i][0])
        _, a, b, _ = intervals.pop(j)
        m = 0.5 * (a + b)
        for a2, b2 in ((a, m), (m, b)):
            k, e = _gk15(g, a2, b2)
            intervals.append([e, a2, b2, k])
    pieces = np.array([iv[3] for iv in intervals])
    with np.errstate(divide="ignore"):
        return fmax + float(np.logaddexp.reduce(np.log(pieces[pieces > 0])))


@lru_cache(maxsize=256)
def _cached_log_normalizer(alpha, beta):
    # pointwise calls (e.g. from an outer quadrature) reuse one normalizer
    return log_normalizer(CuspParams(alpha, beta))


def density(y, p: CuspParams, log_psi=None):
    """Stochastic cusp density ``exp(-V(y)) / psi``; never returns inf."""
    alpha, beta = _ab(p)
    if log_psi is None:
        log_psi = _cached_log_normalizer(alpha, beta)
    y = np.asarray(y, dtype=float)
    out = np.exp(np.minimum(log_kernel(y, alpha, beta) - log_psi, 700.0))
    return float(out) if out.ndim == 0 else out


def sample(p: CuspParams, size, rng=None):
    """Draw from the cusp density by inverse-CDF on a fine trapezoid grid."""
    rng = np.random.default_rng(rng)
    alpha = np.broadcast_to(np.asarray(p.alpha, dtype=float), np.shape(size) or (size,))
    beta = np.broadcast_to(np.asarray(p.beta, dtype=float), alpha.shape)
    return sample_conditional(alpha, beta, rng)


def sample_conditional(alpha, beta, rng=None, nodes=4097):
    """One draw per ``(alpha[t], beta[t])`` pair (used to simulate cusp regressions)."""
    rng = np.random.default_rng(rng)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    left, right, fmax, _ = integration_window(alpha, beta)
    t = np.linspace(0.0, 1.0, nodes)
    y = left[:, None] + (right - left)[:, None] * t
    g = np.exp(log_kernel(y, alpha[:, None], beta[:, None]) - fmax[:, None])
    cdf = np.concatenate(
        [np.zeros((len(alpha), 1)), np.cumsum(0.5 * (g[:, 1:] + g[:, :-1]), axis=1)], axis=1
    )
    cdf /= cdf[:, -1:]
    u = rng.uniform(size=len(alpha))
    out = np.empty(len(alpha))
    for i in range(len(alpha)):
        out[i] = np.interp(u[i], cdf[i], y[i])
    return out
