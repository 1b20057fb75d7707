"""Numerical back-ends: bordered KKT solves, a generic IRLS driver, and a
convex QP reference solver used as a test oracle.

Every training problem in this package reduces to a bordered (saddle point)
system

    [ 0   u^T ] [ b     ]   [ rhs0 ]
    [ u   M   ] [ alpha ] = [ rhs  ]

solved by direct LU factorization with partial pivoting. Iterative schemes
(IRLS, graduated non-convexity) call back into these solves with refreshed
weights.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.linalg import get_lapack_funcs


class NumericalError(RuntimeError):
    """A solve failed or missed its accuracy contract."""


class IllConditionedError(NumericalError):
    """Condition estimate beyond the trust threshold."""


COND_LIMIT = 1e14


@dataclass(frozen=True)
class KKTSystem:
    """Bordered system data: border u, inner block M, right-hand side (rhs0, rhs)."""

    M: np.ndarray
    u: np.ndarray
    rhs0: float
    rhs: np.ndarray

    def assemble(self) -> np.ndarray:
        N = self.M.shape[0]
        A = np.zeros((N + 1, N + 1))
        A[0, 1:] = self.u
        A[1:, 0] = self.u
        A[1:, 1:] = self.M
        return A


@dataclass
class SolveReport:
    """Solution of a solve plus accuracy bookkeeping."""

    b: float
    vector: np.ndarray
    residual_norm: float
    iterations: int = 1
    converged: bool = True


def solve_kkt(system: KKTSystem) -> SolveReport:
    """Solve the bordered system by LU with partial pivoting.

    Raises IllConditionedError when the 1-norm condition estimate exceeds
    1e14 (remedy: increase the diagonal shift, i.e. lower gamma / raise the
    ridge on M). One step of iterative refinement is applied if the raw
    residual misses the 1e-8 * (1 + ||rhs||_inf) contract.
    """
    A = system.assemble()
    rhs = np.concatenate([[system.rhs0], system.rhs])
    n = A.shape[0]

    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    anorm = np.linalg.norm(A, 1)
    (gecon,) = get_lapack_funcs(("gecon",), (A,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0 or 1.0 / rcond > COND_LIMIT:
        cond = np.inf if rcond <= 0 else 1.0 / rcond
        raise IllConditionedError(
            f"bordered system condition estimate {cond:.2e} exceeds {COND_LIMIT:.0e}; "
            "increase the diagonal shift (larger 1/gamma or ridge on the inner block)"
        )

    z = scipy.linalg.lu_solve((lu, piv), rhs)
    tol = 1e-8 * (1.0 + np.linalg.norm(rhs, np.inf))
    r = rhs - A @ z
    iters = 1
    if np.linalg.norm(r, np.inf) > tol:
        z = z + scipy.linalg.lu_solve((lu, piv), r)
        r = rhs - A @ z
        iters = 2
        if np.linalg.norm(r, np.inf) > tol:
            raise NumericalError(
                f"bordered solve residual {np.linalg.norm(r, np.inf):.2e} "
                f"exceeds contract {tol:.2e} after refinement"
            )
    return SolveReport(
        b=float(z[0]), vector=z[1:], residual_norm=float(np.linalg.norm(r, np.inf)),
        iterations=iters,
    )


@dataclass
class IrlsResult:
    """Last (best) iterate of an IRLS run with its objective trace."""

    state: object
    objective: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


def irls_minimize(
    solve_weighted: Callable[[np.ndarray], object],
    objective: Callable[[object], float],
    reweight: Callable[[object], np.ndarray],
    weights0: np.ndarray,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> IrlsResult:
    """Iteratively reweighted least squares driver.

    `solve_weighted(w)` must return the minimizer of the weighted quadratic
    surrogate for fixed weights w; `reweight(state)` refreshes the weights
    from the current residuals. Stops when the relative objective change
    drops to `tol`; with tol = inf that is immediately after the first
    solve. Hitting max_iter returns the best iterate flagged non-converged.
    """
    weights = np.asarray(weights0, dtype=np.float64)
    if np.any(weights <= 0):
        raise ValueError("initial IRLS weights must be strictly positive")
    best_state, best_J = None, np.inf
    trace = []
    J_prev = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        state = solve_weighted(weights)
        J = objective(state)
        trace.append(J)
        if not np.isfinite(J):
            raise NumericalError("IRLS objective became non-finite")
        if J < best_J:
            best_J, best_state = J, state
        if abs(J_prev - J) <= tol * (1.0 + abs(J)):
            converged = True
            break
        weights = reweight(state)
        J_prev = J
    return IrlsResult(
        state=best_state, objective=best_J, iterations=it, converged=converged, trace=trace
    )


# -- convex QP reference (test oracle) --------------------------------------

ORACLE_MAX_N = 10
ORACLE_MAX_D = 3


@dataclass
class QPReference:
    alpha: np.ndarray
    b: float
    objective: float


def solve_component_qp_reference(
    omegas: np.ndarray,
    Y: np.ndarray,
    xi: float,
    penalty: str = "l1",
    val_omegas: Optional[np.ndarray] = None,
    solver: Optional[str] = None,
) -> QPReference:
    """Reference solution of the component-penalized training problem.

    Minimizes  0.5 * sum_d pen(Omega^d a) [+ 0.5 * sum_d pen(Omega^(v)d a)]
             + (xi / 2) * ||Y - Omega a - b||^2    s.t.  sum(a) = 0,

    with pen either the L1 norm ("l1") or the squared L2 norm ("l2"),
    delegated to a disciplined convex solver. Small instances only - this
    exists to cross-check the IRLS path, not to train models.
    """
    import cvxpy as cp

    omegas = np.asarray(omegas, dtype=np.float64)
    D, N, _ = omegas.shape
    if N > ORACLE_MAX_N or D > ORACLE_MAX_D:
        raise ValueError(
            f"reference QP capped at N <= {ORACLE_MAX_N}, D <= {ORACLE_MAX_D}; got N={N}, D={D}"
        )
    if penalty not in ("l1", "l2"):
        raise ValueError("penalty must be 'l1' or 'l2'")

    omega = omegas.sum(axis=0)
    a = cp.Variable(N)
    b = cp.Variable()
    blocks = [omegas[d] for d in range(D)]
    if val_omegas is not None:
        val_omegas = np.asarray(val_omegas, dtype=np.float64)
        blocks += [val_omegas[d] for d in range(D)]
    if penalty == "l1":
        pen = sum(cp.norm1(B @ a) for B in blocks)
    else:
        pen = sum(cp.sum_squares(B @ a) for B in blocks)
    obj = 0.5 * pen + 0.5 * xi * cp.sum_squares(Y - omega @ a - b)
    prob = cp.Problem(cp.Minimize(obj), [cp.sum(a) == 0])
    kwargs = {}
    if solver is None:
        solver = "CLARABEL"
    prob.solve(solver=solver, **kwargs)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NumericalError(f"reference QP solver returned status {prob.status}")
    return QPReference(alpha=np.asarray(a.value), b=float(b.value), objective=float(prob.value))
