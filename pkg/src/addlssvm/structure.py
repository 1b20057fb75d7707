"""Sparse-component schemes over the additive-regularization substrate.

The substrate replaces the single Tikhonov trade-off by a per-sample
regularization vector c, giving the Omega + I system with shifted targets.
On top of it sit two component-sparsity schemes sharing one inner engine:

* an L1 penalty on each component's training outputs (convex), solved by
  iteratively reweighted least squares, and
* a bounded smoothly-thresholding penalty (non-convex), solved by weighted
  graduated non-convexity.

Both reduce, for fixed weights, to an equality-constrained weighted least
squares over (alpha, b). That inner problem is solved in stacked
least-squares form (orthonormal basis of the zero-sum constraint, QR-based
lstsq): the reweighting drives per-entry weights across eight orders of
magnitude and normal equations lose monotone descent there.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lstsq as _lstsq

from . import wgnc
from .kernels import ComponentGrams
from .lssvm import REGRESSION, TrainedModel
from .solvers import KKTSystem, irls_minimize, solve_kkt

# mean-absolute component output below this multiple of std(Y) counts as sparse
DEFAULT_PRUNE_SCALE = 1e-4


@dataclass
class ComponentOutputs:
    """Per-component fitted outputs Omega^d alpha on training (and validation) inputs."""

    train: np.ndarray                    # (D, N)
    val: Optional[np.ndarray] = None     # (D, n)


@dataclass
class SparsityResult:
    """Retained component set with the norms and threshold that produced it."""

    retained: tuple                      # sorted 1-based indices
    norms_l1: np.ndarray                 # (D,) ||Yhat^d||_1
    mean_abs: np.ndarray                 # (D,) ||Yhat^d||_1 / N
    threshold: float                     # cut on mean_abs
    quad_forms: Optional[np.ndarray] = None   # (D,) alpha^T Omega^d alpha diagnostics


@dataclass
class ComponentFitResult:
    alpha: np.ndarray
    b: float
    c: np.ndarray                       # substrate regularization vector, c = e - alpha
    outputs: ComponentOutputs
    sparsity: SparsityResult
    objective: float
    iterations: int
    converged: bool
    model: TrainedModel


def solve_areg_substrate(omega: np.ndarray, Y, c):
    """Substrate solve: bordered system with M = Omega + I and targets Y - c.

    Returns (alpha, b, e) with e = alpha + c. Any fixed regularization
    vector c yields one linear solve; schemes differ only in how they pick c.
    """
    Y = np.asarray(Y, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    N = omega.shape[0]
    if Y.shape != (N,) or c.shape != (N,):
        raise ValueError("Y and c must be N-vectors matching Omega")
    rep = solve_kkt(KKTSystem(M=omega + np.eye(N), u=np.ones(N), rhs0=0.0, rhs=Y - c))
    alpha = rep.vector
    return alpha, rep.b, alpha + c


def prune_components(train_outputs: np.ndarray, tau: float) -> SparsityResult:
    """Retain components whose mean absolute training output exceeds tau."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    train_outputs = np.asarray(train_outputs, dtype=np.float64)
    norms = np.abs(train_outputs).sum(axis=1)
    mean_abs = norms / train_outputs.shape[1]
    retained = tuple(int(d + 1) for d in np.flatnonzero(mean_abs > tau))
    return SparsityResult(
        retained=retained, norms_l1=norms, mean_abs=mean_abs, threshold=float(tau)
    )


def stp_penalty(v, lam: float, a: float):
    """Smoothly-thresholding penalty lam * a * v / (1 + a * v) at norm value v >= 0."""
    v_arr = np.asarray(v, dtype=np.float64)
    if np.any(v_arr < 0):
        raise ValueError("penalty argument must be non-negative")
    out = wgnc.smooth_threshold(lam, a).value(v_arr)
    return float(out) if np.isscalar(v) else out


class ComponentLsProblem:
    """Equality-constrained weighted LS over (alpha, b) for component fits.

    minimize  sum_k w_k r_k(alpha)^2 + (xi/2) ||Y - Omega alpha - b||^2
    s.t.      sum(alpha) = 0,

    where r stacks the component outputs Omega^d alpha (and the validation
    blocks Omega^(v)d alpha when requested). The intercept is eliminated
    through the centering projector; alpha is parameterized on an
    orthonormal basis of the zero-sum subspace and found by QR least
    squares on the stacked, row-scaled system.
    """

    def __init__(self, grams: ComponentGrams, Y, xi: float, with_validation: bool = False):
        if xi <= 0:
            raise ValueError("data weight xi must be positive")
        if with_validation and not grams.has_validation:
            raise ValueError("validation Gram blocks are required but absent")
        self.grams = grams
        self.Y = np.asarray(Y, dtype=np.float64)
        self.xi = xi
        D, N = grams.n_components, grams.n_train

        # orthonormal basis Z of {a : sum(a) = 0} via one Householder reflection
        w = np.ones(N) / np.sqrt(N) - np.eye(N)[0]
        w /= np.linalg.norm(w)
        Z = (np.eye(N) - 2.0 * np.outer(w, w))[:, 1:]
        self._Z = Z

        centered = grams.omega - grams.omega.mean(axis=0, keepdims=True)
        self._CY = self.Y - self.Y.mean()
        self._COZ = centered @ Z

        blocks = [grams.omegas[d] for d in range(D)]
        if with_validation:
            blocks += [grams.val_omegas[d] for d in range(D)]
        self._block_rows = np.concatenate([blk @ Z for blk in blocks], axis=0)
        self._blocks = np.concatenate(blocks, axis=0)
        self.n_residuals = self._blocks.shape[0]
        self.with_validation = with_validation

        rows = self.n_residuals + N
        self._B = np.empty((rows, N - 1))
        self._B[self.n_residuals:] = np.sqrt(xi) * self._COZ
        self._rhs = np.zeros(rows)
        self._rhs[self.n_residuals:] = np.sqrt(xi) * self._CY

    def solve_weighted(self, weights):
        w = np.broadcast_to(np.asarray(weights, dtype=np.float64), (self.n_residuals,))
        s = np.sqrt(2.0 * w)
        np.multiply(self._block_rows, s[:, None], out=self._B[: self.n_residuals])
        u, *_ = _lstsq(self._B, self._rhs, lapack_driver="gelsy", check_finite=False)
        alpha = self._Z @ u
        b = float(np.mean(self.Y - self.grams.omega @ alpha))
        return _FitState(alpha, b, self._blocks @ alpha, self)

    def residuals(self, state):
        return state.stacked

    def data_term(self, state) -> float:
        e = self.Y - self.grams.omega @ state.alpha - state.b
        return 0.5 * self.xi * float(e @ e)


class _FitState:
    __slots__ = ("alpha", "b", "stacked", "problem")

    def __init__(self, alpha, b, stacked, problem):
        self.alpha = alpha
        self.b = b
        self.stacked = stacked
        self.problem = problem


def _finish(problem: ComponentLsProblem, state, objective, iterations, converged, prune_scale):
    grams = problem.grams
    D, N = grams.n_components, grams.n_train
    alpha, b = state.alpha, state.b
    train = grams.omegas @ alpha
    val = grams.val_omegas @ alpha if problem.with_validation else None

    # hard-threshold pass: zero out entries at the reweighting clamp floor,
    # so components pinned there report exact zeros
    train = np.where(np.abs(train) < wgnc.RESIDUAL_CLAMP, 0.0, train)
    if val is not None:
        val = np.where(np.abs(val) < wgnc.RESIDUAL_CLAMP, 0.0, val)

    tau = prune_scale * float(np.std(problem.Y))
    sparsity = prune_components(train, tau)
    sparsity.quad_forms = np.array([alpha @ grams.omegas[d] @ alpha for d in range(D)])
    retained = sparsity.retained if sparsity.retained else tuple(range(1, D + 1))
    model = TrainedModel(
        task=REGRESSION, spec=grams.spec, X=grams.X, alpha=alpha, b=b, retained=retained
    )
    e = problem.Y - grams.omega @ alpha - b
    return ComponentFitResult(
        alpha=alpha,
        b=b,
        c=e - alpha,
        outputs=ComponentOutputs(train=train, val=val),
        sparsity=sparsity,
        objective=objective,
        iterations=iterations,
        converged=converged,
        model=model,
    )


def fit_l1_components(
    grams: ComponentGrams,
    Y,
    xi: float,
    tol: float = 1e-10,
    max_iter: int = 400,
    prune_scale: float = DEFAULT_PRUNE_SCALE,
    with_validation: bool = False,
) -> ComponentFitResult:
    """L1 component regularization: 0.5 sum_d ||Omega^d alpha||_1 + (xi/2)||e||^2.

    Convex; solved by IRLS with the absolute-penalty majorizer weights
    refreshed from the current component outputs. When `with_validation`
    is set, the validation component outputs join the L1 term (the fusion
    variant); the returned outputs then carry the validation blocks too.
    """
    problem = ComponentLsProblem(grams, Y, xi, with_validation=with_validation)
    pen = wgnc.SeparablePenalty(wgnc.absolute(), scale=0.5)

    def objective(state):
        return problem.data_term(state) + pen.value(state.stacked)

    res = irls_minimize(
        solve_weighted=problem.solve_weighted,
        objective=objective,
        reweight=lambda state: pen.weights(state.stacked, 0.0),
        weights0=pen.weights(np.zeros(problem.n_residuals), 1.0),
        tol=tol,
        max_iter=max_iter,
    )
    return _finish(problem, res.state, res.objective, res.iterations, res.converged, prune_scale)


def fit_stp_components(
    grams: ComponentGrams,
    Y,
    lam: float,
    a: float = 3.7,
    schedule: wgnc.RelaxationSchedule = wgnc.DEFAULT_SCHEDULE,
    inner_tol: float = 1e-9,
    max_inner: int = 50,
    prune_scale: float = DEFAULT_PRUNE_SCALE,
) -> ComponentFitResult:
    """Smoothly-thresholded component selection (non-convex), via WGNC.

    Objective 0.5 sum_d pen(||Omega^d alpha||_1) + 0.5 ||e||^2 with the
    bounded penalty pen = lam a v / (1 + a v). The graduated path starts
    from the squared-norm warm start and relaxes toward the target; the
    returned iterate is the best seen, so its target objective never
    exceeds the warm start's.
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    problem = ComponentLsProblem(grams, Y, xi=1.0)
    D, N = grams.n_components, grams.n_train
    if lam == 0.0:
        # penalty vanishes: plain least squares through the substrate
        state = problem.solve_weighted(np.zeros(problem.n_residuals))
        return _finish(problem, state, problem.data_term(state), 1, True, prune_scale)
    pen = wgnc.GroupedNormPenalty(
        wgnc.smooth_threshold(lam, a), group_sizes=[N] * D, scale=0.5
    )
    res = wgnc.wgnc_minimize(
        problem, pen, schedule=schedule, inner_tol=inner_tol, max_inner=max_inner
    )
    total_inner = sum(row.inner_iterations for row in res.trace)
    return _finish(
        problem, res.state, res.objective, total_inner, res.converged, prune_scale
    )
