"""Damped least squares (Levenberg-Marquardt) with forward-difference Jacobians.

Small bespoke loop rather than a library call because the solvers need two
hooks a generic interface does not offer: a step filter (ball projection /
interior backtracking applied to every trial step) and a re-centering
callback fired after each accepted step so rotation charts stay based at
the current iterate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    cost: float          # squared residual norm
    n_iter: int
    n_eval: int
    converged: bool
    reason: str


def levenberg_marquardt(
    fun: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    scale: np.ndarray,
    max_iter: int = 60,
    fd_step: float = 1e-5,
    cost_tol: float = 1e-24,
    step_tol: float = 1e-11,
    lam0: float = 1e-3,
    step_filter: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    on_accept: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> LMResult:
    """Minimize |fun(x)|^2.

    scale sets per-parameter units; finite-difference steps are
    fd_step * scale. step_filter(x_old, x_trial) may project or shrink a
    trial step before evaluation. on_accept(x) runs after each accepted
    step and may re-express x in new coordinates (chart re-centering); the
    residual is assumed unchanged by that re-expression.
    """
    x = np.asarray(x0, dtype=float).copy()
    scale = np.asarray(scale, dtype=float)
    n = x.size
    r = fun(x)
    cost = float(r @ r)
    n_eval = 1
    lam = lam0
    reason = "max_iter"
    it = 0
    for it in range(1, max_iter + 1):
        if cost <= cost_tol:
            reason = "cost_tol"
            break
        jac = np.empty((r.size, n))
        for j in range(n):
            h = fd_step * scale[j]
            xj = x.copy()
            xj[j] += h
            jac[:, j] = (fun(xj) - r) / h
            n_eval += 1
        grad = jac.T @ r
        jtj = jac.T @ jac
        diag = np.clip(np.diag(jtj).copy(), 1e-12, None)

        accepted = False
        x_new = x
        r_new = r
        cost_new = cost
        for _ in range(30):
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_try = x + delta
            if step_filter is not None:
                x_try = step_filter(x, x_try)
            r_try = fun(x_try)
            n_eval += 1
            cost_try = float(r_try @ r_try)
            if cost_try < cost:
                x_new, r_new, cost_new = x_try, r_try, cost_try
                accepted = True
                break
            lam *= 4.0
            if lam > 1e14:
                break
        if not accepted:
            reason = "stalled"
            break

        step_size = float(np.linalg.norm((x_new - x) / scale))
        rel_drop = (cost - cost_new) / max(cost, 1e-300)
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam * 0.25, 1e-12)
        if on_accept is not None:
            x = on_accept(x)
        if cost <= cost_tol:
            reason = "cost_tol"
            break
        if step_size < step_tol:
            reason = "step_tol"
            break
        if rel_drop < 1e-12:
            reason = "flat"
            break

    converged = reason in ("cost_tol", "step_tol", "flat")
    return LMResult(x=x, residual=r, cost=cost, n_iter=it, n_eval=n_eval,
                    converged=converged, reason=reason)
