"""BFGS with Armijo backtracking, tuned for smooth convex-ish likelihoods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    converged: bool
    iterations: int
    n_evals: int
    message: str

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.grad))


def bfgs(fun_grad, x0, inv_hess0=None, max_iter=500, rel_gtol=1e-6, c1=1e-4, max_backtracks=60):
    """Minimize ``fun_grad(x) -> (f, g)``.

    Stops when ``||g|| <= rel_gtol * (1 + |f|)``.  ``fun_grad`` may return a
    non-finite ``f`` (or raise ``ArithmeticError``) for points outside the
    usable domain; the line search then backtracks.

    Parameters
    ----------
    inv_hess0 : ndarray, optional
        Initial inverse-Hessian approximation.  Defaults to a scaled identity
        chosen after the first gradient evaluation.
    """
    x = np.array(x0, dtype=float)
    n_evals = 0

    def evaluate(z):
        nonlocal n_evals
        n_evals += 1
        try:
            f, g = fun_grad(z)
        except ArithmeticError:
            return np.inf, None
        if not np.isfinite(f) or g is None or not np.all(np.isfinite(g)):
            return np.inf, None
        return float(f), np.asarray(g, dtype=float)

    f, g = evaluate(x)
    if not np.isfinite(f):
        return OptimizeResult(x, np.inf, np.full_like(x, np.nan), False, 0, n_evals,
                              "objective not finite at start")
    n = x.size
    if inv_hess0 is None:
        gn = np.linalg.norm(g)
        H0 = np.eye(n) * (1.0 / gn if gn > 0 else 1.0)
    else:
        H0 = np.array(inv_hess0, dtype=float)
    H = H0.copy()
    eye = np.eye(n)
    message = "maximum iterations reached"
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(g) <= rel_gtol * (1.0 + abs(f)):
            return OptimizeResult(x, f, g, True, it - 1, n_evals, "gradient tolerance met")
        p = -H @ g
        slope = float(g @ p)
        if not slope < 0:
            H = H0.copy()
            p = -H @ g
            slope = float(g @ p)
            if not slope < 0:
                message = "no descent direction"
                break
        step = 1.0
        for _ in range(max_backtracks):
            x_new = x + step * p
            f_new, g_new = evaluate(x_new)
            if f_new <= f + c1 * step * slope:
                break
            step *= 0.5
        else:
            if np.linalg.norm(g) <= 10 * rel_gtol * (1.0 + abs(f)):
                message = "line search stalled near tolerance"
            else:
                message = "line search failed"
            break
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        x, f, g = x_new, f_new, g_new
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            rho = 1.0 / sy
            V = eye - rho * np.outer(s, yv)
            H = V @ H @ V.T + rho * np.outer(s, s)
    converged = bool(np.linalg.norm(g) <= rel_gtol * (1.0 + abs(f)))
    if converged:
        message = "gradient tolerance met"
    return OptimizeResult(x, f, g, converged, it, n_evals, message)
