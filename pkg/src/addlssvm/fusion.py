"""Validation-driven tuning: grid fusion for the Tikhonov trade-off, the
component-selection problem over training plus validation outputs, the
per-component trade-off model, and its alternating least squares fusion.

Collapsing hyperparameter tuning and training into one problem is convex
only under additive regularization; the plain trade-off search stays a
grid (the joint problem is non-convex), while the per-component trade-offs
are handled by alternating least squares on the bilinear constraint tying
the additive-regularization vector to the trade-off weights.
"""

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from .kernels import ComponentGrams, build_grams
from .lssvm import REGRESSION, TrainedModel, train_regressor_grams
from .solvers import KKTSystem, NumericalError, solve_kkt
from .structure import ComponentFitResult, fit_l1_components

ETA_FLOOR = 1e-10
ETA_PRUNE_REL = 1e-3


@dataclass
class ValidationSplit:
    """Held-out inputs/targets, disjoint from the training rows."""

    X: np.ndarray          # (D, n)
    Y: np.ndarray          # (n,)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.Y = np.asarray(self.Y, dtype=np.float64)
        if self.X.ndim != 2 or self.Y.ndim != 1 or self.X.shape[1] != self.Y.shape[0]:
            raise ValueError("validation split needs X (D, n) and Y (n,)")
        if self.Y.shape[0] < 1:
            raise ValueError("validation split must contain at least one point")


@dataclass
class GridPointReport:
    gamma: float
    val_sse: Optional[float]
    error: Optional[str] = None


def tune_gamma_grid(X, Y, split: ValidationSplit, spec, gamma_grid: Sequence[float]):
    """Pick the trade-off constant minimizing validation squared error over a grid.

    Ties resolve to the smallest gamma. Grid points whose training solve
    fails are skipped and recorded. Returns (gamma, model, reports).
    """
    gammas = sorted(float(g) for g in gamma_grid)
    if not gammas or any(g <= 0 for g in gammas):
        raise ValueError("gamma grid must be non-empty and positive")
    grams = build_grams(np.asarray(X, dtype=np.float64), spec, X_val=split.X)
    Y = np.asarray(Y, dtype=np.float64)

    best = None
    reports = []
    for gamma in gammas:
        try:
            model = train_regressor_grams(grams, Y, gamma)
        except NumericalError as ex:
            reports.append(GridPointReport(gamma=gamma, val_sse=None, error=str(ex)))
            continue
        pred = grams.val_omega @ model.alpha + model.b
        sse = float(np.sum((pred - split.Y) ** 2))
        reports.append(GridPointReport(gamma=gamma, val_sse=sse))
        if best is None or sse < best[0]:
            best = (sse, gamma, model)
    if best is None:
        raise NumericalError("every gamma grid point failed to train")
    return best[1], best[2], reports


def fuse_areg_select(
    grams: ComponentGrams, Y, Y_val, xi: float, **fit_kwargs
) -> ComponentFitResult:
    """Component selection fused with the validation set.

    Stacks the validation component outputs into the L1 term next to the
    training ones (driving both toward zero for irrelevant components) and
    runs the same reweighted path as the training-only fit. With an empty
    validation set this reduces to fit_l1_components exactly.
    """
    Y_val = np.asarray(Y_val, dtype=np.float64)
    if grams.has_validation and grams.val_omegas.shape[1] != Y_val.shape[0]:
        raise ValueError("Y_val length does not match the validation Gram blocks")
    with_val = grams.has_validation
    return fit_l1_components(grams, Y, xi, with_validation=with_val, **fit_kwargs)


def train_eta_model(grams: ComponentGrams, Y, eta) -> TrainedModel:
    """Componentwise-Tikhonov training: one trade-off weight per component.

    Solves the bordered system with inner block sum_d eta_d Omega^d + I.
    Predictions weight every component's kernel evaluations by its eta_d.
    """
    eta = np.asarray(eta, dtype=np.float64)
    D, N = grams.n_components, grams.n_train
    if eta.shape != (D,):
        raise ValueError(f"eta must have one entry per component ({D})")
    if np.any(eta <= 0):
        raise ValueError("eta entries must be strictly positive")
    Y = np.asarray(Y, dtype=np.float64)
    M = np.tensordot(eta, grams.omegas, axes=1) + np.eye(N)
    rep = solve_kkt(KKTSystem(M=M, u=np.ones(N), rhs0=0.0, rhs=Y))
    return TrainedModel(
        task=REGRESSION,
        spec=grams.spec,
        X=grams.X,
        alpha=rep.vector,
        b=rep.b,
        retained=tuple(range(1, D + 1)),
        eta=eta,
    )


@dataclass
class AlsTraceRow:
    iteration: int
    val_mse: float
    eta: np.ndarray


@dataclass
class AlsResult:
    eta: np.ndarray
    alpha: np.ndarray
    c: np.ndarray
    model: TrainedModel
    val_mse: float
    trace: list
    stalled: bool
    deselected: tuple    # 1-based components with near-zero trade-off


def _als_alpha_step(grams: ComponentGrams, Y, eta):
    """Substrate coefficients consistent with trade-offs eta (bias-free).

    Eliminating the per-component dual gives (I + Omega_eta) Omega alpha =
    Omega_eta Y with Omega_eta = sum_d eta_d Omega^d; alpha then determines
    c through the substrate equation.
    """
    N = grams.n_train
    omega_eta = np.tensordot(eta, grams.omegas, axes=1)
    A = (np.eye(N) + omega_eta) @ grams.omega
    rhs = omega_eta @ Y
    try:
        alpha = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        alpha = np.linalg.lstsq(A, rhs, rcond=None)[0]
    return alpha


def _als_eta_step(grams: ComponentGrams, Y, alpha):
    """Non-negative least squares on the bilinear constraint, floored at ETA_FLOOR."""
    target = Y - grams.omega @ alpha         # = alpha + c
    G = np.stack([grams.omegas[d] @ target for d in range(grams.n_components)], axis=1)
    rhs = grams.omega @ alpha - ETA_FLOOR * G.sum(axis=1)
    shifted, _ = nnls(G, rhs)
    return shifted + ETA_FLOOR


def fuse_eta_als(
    grams: ComponentGrams,
    Y,
    Y_val,
    init_eta,
    max_outer: int = 50,
    tol: float = 1e-6,
) -> AlsResult:
    """Alternating least squares over (alpha, eta) against validation error.

    The bias term stays out of the alternation (refit afterwards through
    the full bordered system). Each round fixes eta and solves the linear
    alpha system, then fixes alpha and restores the bilinear constraint by
    non-negative least squares on eta. Rounds are accepted only when the
    validation objective ||Omega^(v) alpha - Y^(v)||^2 improves; the best
    iterate is returned, so accepted validation errors never increase.
    Near-ties prefer the smaller ||eta||_1.
    """
    if not grams.has_validation:
        raise ValueError("fuse_eta_als needs validation Gram blocks")
    Y = np.asarray(Y, dtype=np.float64)
    Y_val = np.asarray(Y_val, dtype=np.float64)
    eta = np.asarray(init_eta, dtype=np.float64).copy()
    if np.any(eta <= 0):
        raise ValueError("init_eta must be strictly positive")
    n = Y_val.shape[0]

    def val_mse(alpha):
        r = grams.val_omega @ alpha - Y_val
        return float(r @ r) / n

    alpha = _als_alpha_step(grams, Y, eta)
    best = (val_mse(alpha), eta.copy(), alpha.copy())
    trace = [AlsTraceRow(0, best[0], eta.copy())]
    stalled = False

    for it in range(1, max_outer + 1):
        eta_new = _als_eta_step(grams, Y, best[2])
        alpha_new = _als_alpha_step(grams, Y, eta_new)
        mse = val_mse(alpha_new)
        trace.append(AlsTraceRow(it, mse, eta_new.copy()))
        tie = abs(mse - best[0]) <= 1e-12 * (1.0 + best[0])
        if mse < best[0] - tol * (1.0 + best[0]):
            best = (mse, eta_new.copy(), alpha_new.copy())
        elif tie and np.sum(np.abs(eta_new)) < np.sum(np.abs(best[1])):
            best = (best[0], eta_new.copy(), alpha_new.copy())
        else:
            stalled = mse >= best[0]
            break

    mse, eta, alpha = best
    c = Y - (grams.omega + np.eye(grams.n_train)) @ alpha
    model = train_eta_model(grams, Y, eta)
    cut = max(ETA_PRUNE_REL * float(eta.max()), 10.0 * ETA_FLOOR)
    deselected = tuple(int(d + 1) for d in np.flatnonzero(eta <= cut))
    retained = tuple(d for d in range(1, grams.n_components + 1) if d not in deselected)
    if retained:
        model.retained = tuple(retained)
    return AlsResult(
        eta=eta, alpha=alpha, c=c, model=model, val_mse=mse, trace=trace,
        stalled=stalled, deselected=deselected,
    )


def als_trace_to_csv(trace, path) -> None:
    """Write an ALS tuning trace as CSV (iteration, validation MSE, eta vector)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        D = len(trace[0].eta) if trace else 0
        writer.writerow(["iteration", "val_mse"] + [f"eta{d + 1}" for d in range(D)])
        for row in trace:
            writer.writerow([row.iteration, repr(row.val_mse)] + [repr(float(v)) for v in row.eta])
