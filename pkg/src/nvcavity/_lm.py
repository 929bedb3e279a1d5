"""Damped least-squares core shared by the fitting routines.

A plain Levenberg-Marquardt loop with Marquardt diagonal scaling. Callers
supply residuals together with the analytic Jacobian; simple bound
constraints go through a projection callback, so the core stays free of any
model knowledge. Steps are accepted only when they lower the cost, which
makes the accepted-residual sequence monotone by construction.
"""
from __future__ import annotations

import math

import numpy as np

# escalation limit for the damping parameter within one outer iteration
_MAX_RETRIES = 30


def levenberg_marquardt(
    residual_jac,
    x0,
    max_iter: int = 200,
    tol: float = 1e-10,
    lam0: float = 1e-3,
    project=None,
    on_accept=None,
):
    """Minimize ||r(x)||^2 for r, J = residual_jac(x).

    project, if given, maps a proposed x back into the feasible region
    before evaluation. on_accept, if given, sees every accepted iterate and
    may raise to abort (used for structural degeneracy checks).

    Returns (x, residual_norm, converged, iterations). converged means the
    relative cost decrease of the last accepted step fell below tol, the
    residual hit exact zero, or no improving step exists anymore; running
    out of iterations leaves it False.
    """
    x = np.asarray(x0, dtype=float).copy()
    if project is not None:
        x = project(x)
    r, jac = residual_jac(x)
    cost = float(r @ r)
    lam = lam0
    iterations = 0
    converged = cost == 0.0

    while iterations < max_iter and not converged:
        iterations += 1
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        floor = diag.max() if diag.max() > 0 else 1.0
        diag[diag <= 0] = floor  # flat directions get pure damping

        accepted = False
        for _ in range(_MAX_RETRIES):
            step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            x_new = x + step
            if project is not None:
                x_new = project(x_new)
            r_new, jac_new = residual_jac(x_new)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                accepted = True
                break
            lam *= 10.0

        if not accepted:
            # no downhill step at any damping: numerically at a minimum
            converged = True
            break

        rel_drop = (cost - cost_new) / cost
        x, r, jac, cost = x_new, r_new, jac_new, cost_new
        if on_accept is not None:
            on_accept(x)
        lam = max(lam / 3.0, 1e-14)
        if cost == 0.0 or rel_drop < tol:
            converged = True

    return x, math.sqrt(cost), converged, iterations
