"""Maximum-likelihood fitting of the stochastic cusp regression model.

The state and the two control parameters are linear in the data::

    y[t]     = w[0] + w[1]*Y[t,1] + ... + w[q]*Y[t,q]
    alpha[t] = a[0] + a[1]*X[t,1] + ...
    beta[t]  = b[0] + b[1]*X[t,1] + ...

and each ``y[t]`` is taken to follow the cusp density with parameters
``(alpha[t], beta[t])``.  With a single state column the state map is fixed
to the identity (``w = (0, 1)``), which leaves ``a`` and ``b`` free; the
negative log-likelihood is then convex in the free coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cusp_model import CuspNumericalError, log_kernel, log_normalizer_batch
from .dataset import OUTCOME, Dataset
from .optimize import bfgs

N_STARTS = 5
PERTURBATION = 0.5
MAX_ITER = 500
REL_GTOL = 1e-6


class CuspFitError(RuntimeError):
    """Every start of a fit failed to produce a finite likelihood."""


@dataclass(frozen=True)
class CuspRegressionSpec:
    """Column wiring of a cusp regression; ids follow :class:`Dataset` (0 = outcome)."""

    state_cols: tuple = (OUTCOME,)
    alpha_cols: tuple = ()
    beta_cols: tuple = ()

    def __post_init__(self):
        for name in ("state_cols", "alpha_cols", "beta_cols"):
            cols = tuple(int(c) for c in getattr(self, name))
            if not cols:
                raise ValueError(f"{name} must not be empty")
            if len(set(cols)) != len(cols):
                raise ValueError(f"{name} has duplicate ids")
            object.__setattr__(self, name, cols)
        s, a, b = set(self.state_cols), set(self.alpha_cols), set(self.beta_cols)
        if s & a or s & b or a & b:
            raise ValueError("state, alpha and beta columns must be pairwise disjoint")

    @property
    def free_state(self) -> bool:
        return len(self.state_cols) > 1

    @property
    def n_params(self) -> int:
        nw = len(self.state_cols) + 1 if self.free_state else 0
        return nw + len(self.alpha_cols) + 1 + len(self.beta_cols) + 1

    def split(self, theta):
        """Split a flat parameter vector into ``(w, a, b)``; fixed w is returned too."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {theta.shape}")
        i = 0
        if self.free_state:
            nw = len(self.state_cols) + 1
            w = theta[:nw]
            i = nw
        else:
            w = np.array([0.0, 1.0])
        na = len(self.alpha_cols) + 1
        a = theta[i:i + na]
        b = theta[i + na:]
        return w, a, b


def default_spec(beta_feature: int, asymmetry_feature: int) -> CuspRegressionSpec:
    """Outcome as state, one bifurcation feature, one asymmetry feature."""
    return CuspRegressionSpec((OUTCOME,), (asymmetry_feature,), (beta_feature,))


@dataclass(frozen=True)
class CuspFit:
    w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    loglik: float
    k: int
    aic: float
    converged: bool
    iterations: int
    grad_norm: float
    spec: CuspRegressionSpec = field(default=None, compare=False)
    n_samples: int = 0

    @property
    def params(self) -> np.ndarray:
        parts = [self.a, self.b]
        if self.spec is not None and self.spec.free_state:
            parts.insert(0, self.w)
        return np.concatenate(parts)


def _with_intercept(cols):
    return np.column_stack([np.ones(cols.shape[0]), cols])


class _Problem:
    """Design matrices of one (dataset, spec) pair with NLL/gradient/Hessian."""

    def __init__(self, ds: Dataset, spec: CuspRegressionSpec):
        self.spec = spec
        self.Y = _with_intercept(np.column_stack([ds.column(c) for c in spec.state_cols]))
        self.XA = _with_intercept(np.column_stack([ds.column(c) for c in spec.alpha_cols]))
        self.XB = _with_intercept(np.column_stack([ds.column(c) for c in spec.beta_cols]))
        self.n = self.Y.shape[0]

    def state(self, w):
        return self.Y @ w

    def controls(self, a, b):
        return self.XA @ a, self.XB @ b

    def nll(self, theta):
        w, a, b = self.spec.split(theta)
        y = self.state(w)
        alpha, beta = self.controls(a, b)
        log_psi = log_normalizer_batch(alpha, beta)
        return float(np.sum(log_psi - log_kernel(y, alpha, beta)))

    def nll_grad(self, theta, hessian=False):
        w, a, b = self.spec.split(theta)
        y = self.state(w)
        alpha, beta = self.controls(a, b)
        log_psi, m = log_normalizer_batch(alpha, beta, moments=4 if hessian else 2)
        f = float(np.sum(log_psi - log_kernel(y, alpha, beta)))
        # d logpsi/d alpha = E[y], d logpsi/d beta = E[y^2]/2
        d_alpha = m[0] - y
        d_beta = 0.5 * (m[1] - y * y)
        parts = [self.XA.T @ d_alpha, self.XB.T @ d_beta]
        if self.spec.free_state:
            d_y = -(alpha + beta * y - y ** 3)
            parts.insert(0, self.Y.T @ d_y)
        g = np.concatenate(parts)
        if not hessian:
            return f, g
        v11 = m[1] - m[0] ** 2
        v12 = 0.5 * (m[2] - m[0] * m[1])
        v22 = 0.25 * (m[3] - m[1] ** 2)
        Haa = self.XA.T @ (v11[:, None] * self.XA)
        Hab = self.XA.T @ (v12[:, None] * self.XB)
        Hbb = self.XB.T @ (v22[:, None] * self.XB)
        H = np.block([[Haa, Hab], [Hab.T, Hbb]])
        if self.spec.free_state:
            nw = self.Y.shape[1]
            d2 = 3.0 * y * y - beta
            Hww = self.Y.T @ (np.abs(d2)[:, None] * self.Y)
            H = np.block([
                [Hww, np.zeros((nw, H.shape[0]))],
                [np.zeros((H.shape[0], nw)), H],
            ])
        return f, g, H

    def initial(self):
        """Least-squares-informed start built from a Gaussian approximation.

        A covariate-free start (intercepts from the marginal moments only) is
        also built; whichever has the lower NLL is returned.  This guards
        against a covariate that nearly reproduces the state, which would
        otherwise drive the residual variance, and hence ``b``, to extremes.
        """
        spec = self.spec
        if spec.free_state:
            q = self.Y.shape[1] - 1
            w = np.concatenate([[0.0], np.full(q, 1.0 / q)])
        else:
            w = np.array([0.0, 1.0])
        best, best_f = None, np.inf
        for use_covariates in (True, False):
            theta = self._moment_start(w, use_covariates)
            try:
                f = self.nll(theta)
            except ArithmeticError:
                continue
            if f < best_f:
                best, best_f = theta, f
        return theta if best is None else best

    def _moment_start(self, w, use_covariates):
        spec = self.spec
        y = self.state(w)
        if use_covariates:
            design = np.column_stack([self.XA, self.XB[:, 1:]])
        else:
            design = np.ones((self.n, 1))
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        mu = design @ coef
        resid = y - mu
        s2 = max(float(np.mean(resid ** 2)), 1e-8 * max(float(np.var(y)), 1e-12), 1e-12)
        # kernel curvature at the mean should match the residual variance
        b0 = 3.0 * float(np.mean(mu ** 2)) - 1.0 / s2
        b = np.zeros(self.XB.shape[1])
        b[0] = b0
        for j in range(1, self.XB.shape[1] if use_covariates else 1):
            x = self.XB[:, j]
            if np.std(x) > 0 and np.std(y * y) > 0:
                b[j] = np.corrcoef(x, y * y)[0, 1] / s2
        # stationarity at the mean: alpha = mu^3 - beta*mu, projected on the alpha design
        beta = self.XB @ b
        target = mu ** 3 - beta * mu
        a, *_ = np.linalg.lstsq(self.XA, target, rcond=None)
        parts = [a, b]
        if spec.free_state:
            parts.insert(0, w)
        return np.concatenate(parts)


def negative_log_likelihood(ds: Dataset, spec: CuspRegressionSpec, params) -> float:
    """Negative log-likelihood of the cusp regression at ``params``.

    ``params`` is the flat vector ``[w (only if several state columns), a, b]``.

    Raises
    ------
    CuspNumericalError
        With ``index`` set to the sample whose normalizer failed.
    """
    return _Problem(ds, spec).nll(params)


def nll_gradient(ds: Dataset, spec: CuspRegressionSpec, params):
    """``(nll, gradient)`` at ``params``."""
    return _Problem(ds, spec).nll_grad(params)


def _inverse(H):
    H = 0.5 * (H + H.T)
    vals, vecs = np.linalg.eigh(H)
    floor = max(float(np.max(np.abs(vals))) * 1e-12, 1e-300)
    vals = np.maximum(vals, floor)
    return (vecs / vals) @ vecs.T


def fit(ds: Dataset, spec: CuspRegressionSpec, init=None, seed=0,
        n_starts=N_STARTS, perturbation=PERTURBATION, max_iter=MAX_ITER) -> CuspFit:
    """Multistart quasi-Newton maximum-likelihood fit.

    The first start is ``init`` when given, else a least-squares-informed
    guess; the remaining ``n_starts - 1`` starts perturb it by Gaussian noise
    of relative scale ``perturbation``.  Each start seeds BFGS with the
    inverse of the exact Hessian at its starting point.

    Returns the converged start with the highest likelihood, or the best
    non-converged one with ``converged=False``.

    Raises
    ------
    CuspFitError
        If no start yields a finite likelihood.
    """
    prob = _Problem(ds, spec)
    rng = np.random.default_rng(seed)
    base = prob.initial() if init is None else np.asarray(init, dtype=float)
    if base.shape != (spec.n_params,):
        raise ValueError(f"init must have {spec.n_params} entries")
    starts = [base]
    scale = np.maximum(np.abs(base), 1.0)
    for _ in range(n_starts - 1):
        starts.append(base + perturbation * scale * rng.standard_normal(base.size))

    best = None
    for x0 in starts:
        try:
            _, _, H = prob.nll_grad(x0, hessian=True)
            H0 = _inverse(H)
        except (ArithmeticError, np.linalg.LinAlgError):
            H0 = None
        res = bfgs(prob.nll_grad, x0, inv_hess0=H0, max_iter=max_iter, rel_gtol=REL_GTOL)
        if not math.isfinite(res.fun):
            continue
        key = (not res.converged, res.fun)
        if best is None or key < (not best.converged, best.fun):
            best = res
    if best is None:
        raise CuspFitError(f"all {n_starts} starts diverged for spec {spec}")
    w, a, b = spec.split(best.x)
    loglik = -best.fun
    k = spec.n_params
    return CuspFit(
        w=np.array(w), a=np.array(a), b=np.array(b),
        loglik=loglik, k=k, aic=-2.0 * loglik + 2.0 * k,
        converged=best.converged, iterations=best.iterations,
        grad_norm=best.grad_norm, spec=spec, n_samples=prob.n,
    )


def aic_of(fit: CuspFit) -> float:
    """Akaike information criterion ``-2 loglik + 2k``."""
    return -2.0 * fit.loglik + 2.0 * fit.k


def simulate(a, b, X_alpha, X_beta, rng=None):
    """Draw a state vector from the cusp regression with coefficients ``a``, ``b``."""
    from .cusp_model import sample_conditional

    XA = _with_intercept(np.asarray(X_alpha, dtype=float).reshape(len(X_alpha), -1))
    XB = _with_intercept(np.asarray(X_beta, dtype=float).reshape(len(X_beta), -1))
    return sample_conditional(XA @ np.asarray(a), XB @ np.asarray(b), rng)
