"""Componentwise LS-SVM training (regression and classification), prediction,
per-component prediction, and the linear smoother matrix.

Training solves one bordered linear system over the dual variables: for
regression M = Omega + I/gamma bordered by ones, for classification the
label-weighted Gram bordered by the labels. Component indices are 1-based
everywhere user-facing (d = 1..D), matching the input naming x1..xD.
"""

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .kernels import ComponentGrams, KernelSpec, build_grams, kernel_vector
from .solvers import KKTSystem, NumericalError, solve_kkt

REGRESSION = "regression"
CLASSIFICATION = "classification"


@dataclass
class TrainedModel:
    """A fitted additive kernel model in dual form.

    alpha and b come from the bordered solve; retained lists the 1-based
    components used for prediction (all of them unless a sparsity scheme
    pruned some); eta holds optional per-component trade-off weights
    (defaults to 1 for every component when absent). Classification models
    keep their training labels since the dual expansion carries alpha_k y_k.
    """

    task: str
    spec: KernelSpec
    X: np.ndarray                      # (D, N) training inputs
    alpha: np.ndarray                  # (N,)
    b: float
    retained: tuple                    # sorted 1-based component indices
    eta: Optional[np.ndarray] = None   # (D,) positive weights
    Y: Optional[np.ndarray] = None     # (N,) labels, classification only

    def __post_init__(self):
        self.retained = tuple(sorted(int(d) for d in self.retained))
        D = self.X.shape[0]
        if not self.retained:
            raise ValueError("retained component set must not be empty")
        if any(d < 1 or d > D for d in self.retained):
            raise ValueError(f"retained components must lie in 1..{D}")
        if self.task == CLASSIFICATION and self.Y is None:
            raise ValueError("classification model needs its training labels")

    @property
    def n_components(self) -> int:
        return self.X.shape[0]

    def _dual_coeff(self) -> np.ndarray:
        if self.task == CLASSIFICATION:
            return self.alpha * self.Y
        return self.alpha

    def decision_function(self, x) -> np.ndarray:
        """Raw additive score sum_k coeff_k sum_{d in S} eta_d K^d(x_k^d, x^d) + b.

        x is one point (D,) or a batch (D, m); returns (m,) scores.
        """
        kv = kernel_vector(self.spec, self.X, x)        # (D, m, N)
        coeff = self._dual_coeff()
        idx = np.array([d - 1 for d in self.retained])
        eta = np.ones(self.n_components) if self.eta is None else self.eta
        weighted = kv[idx] * eta[idx][:, None, None]
        return weighted.sum(axis=0) @ coeff + self.b

    def predict(self, x):
        """Predicted response; classification returns labels in {-1, +1}.

        A decision score of exactly zero maps to +1.
        """
        score = self.decision_function(x)
        if self.task == CLASSIFICATION:
            out = np.where(score >= 0.0, 1.0, -1.0)
        else:
            out = score
        if np.asarray(x).ndim == 1:
            return float(out[0])
        return out

    def predict_component(self, d: int, u) -> np.ndarray:
        """Contribution of component d (1-based) at scalar input(s) u.

        The intercept belongs to the global model, so component curves carry
        no share of b; pruned components contribute exactly zero.
        """
        if not 1 <= d <= self.n_components:
            raise ValueError(f"component {d} out of range 1..{self.n_components}")
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        if d not in self.retained:
            return np.zeros(u.shape)
        entry = self.spec.entries[d - 1]
        from .kernels import eval_kernel  # local import avoids cycle at module load

        K = np.array([[eval_kernel(entry, float(ui), xk) for xk in self.X[d - 1]] for ui in u])
        eta_d = 1.0 if self.eta is None else float(self.eta[d - 1])
        return eta_d * (K @ self._dual_coeff())


def _solve_ridge_system(omega: np.ndarray, Y: np.ndarray, gamma: float):
    N = omega.shape[0]
    M = omega + np.eye(N) / gamma
    rep = solve_kkt(KKTSystem(M=M, u=np.ones(N), rhs0=0.0, rhs=np.asarray(Y, dtype=np.float64)))
    return rep.b, rep.vector


def train_regressor_grams(grams: ComponentGrams, Y, gamma: float) -> TrainedModel:
    """Regression training from prebuilt Grams (the cheap path for tuning loops)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.shape[0] != grams.n_train:
        raise ValueError("Y length does not match the Gram dimension")
    b, alpha = _solve_ridge_system(grams.omega, Y, gamma)
    return TrainedModel(
        task=REGRESSION,
        spec=grams.spec,
        X=grams.X,
        alpha=alpha,
        b=b,
        retained=tuple(range(1, grams.n_components + 1)),
    )


def train_regressor(X, Y, spec: KernelSpec, gamma: float) -> TrainedModel:
    """Componentwise LS-SVM regression: one bordered solve with M = Omega + I/gamma."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("X must be (D, N) with N >= 2")
    return train_regressor_grams(build_grams(X, spec), Y, gamma)


def train_classifier(X, Y, spec: KernelSpec, gamma: float) -> TrainedModel:
    """Componentwise LS-SVM classification on labels in {-1, +1}.

    Solves the bordered system with border Y and inner block
    Omega_y + I/gamma, Omega_y[k,l] = y_k y_l sum_d K^d.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    labels = np.unique(Y)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("classification labels must be -1 or +1")
    if labels.size < 2:
        raise ValueError("training data contains a single class")
    grams = build_grams(X, spec)
    N = Y.shape[0]
    omega_y = np.outer(Y, Y) * grams.omega
    rep = solve_kkt(
        KKTSystem(M=omega_y + np.eye(N) / gamma, u=Y, rhs0=0.0, rhs=np.ones(N))
    )
    return TrainedModel(
        task=CLASSIFICATION,
        spec=spec,
        X=X,
        alpha=rep.vector,
        b=rep.b,
        retained=tuple(range(1, X.shape[0] + 1)),
        Y=Y,
    )


def smoother_matrix(omega: np.ndarray, gamma: float) -> np.ndarray:
    """Linear smoother S = Omega (Omega + I/gamma)^{-1} (bias term omitted)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    N = omega.shape[0]
    M = omega + np.eye(N) / gamma
    try:
        # S = Omega M^{-1}  <=>  M^T S^T = Omega^T; M symmetric here
        return np.linalg.solve(M, omega.T).T
    except np.linalg.LinAlgError as ex:
        raise NumericalError(f"smoother system singular: {ex}") from ex


# -- serialization ------------------------------------------------------------


def model_to_json(model: TrainedModel) -> dict:
    """Fixed-schema JSON document for a trained model.

    X is serialized row-major with one row per training point (N rows of D
    values); S_D uses 1-based component indices.
    """
    doc = {
        "task": model.task,
        "D": int(model.n_components),
        "N": int(model.X.shape[1]),
        "alpha": [float(a) for a in model.alpha],
        "b": float(model.b),
        "S_D": [int(d) for d in model.retained],
        "kernel": model.spec.to_json(),
        "X": [[float(v) for v in row] for row in model.X.T],
    }
    if model.eta is not None:
        doc["eta"] = [float(v) for v in model.eta]
    if model.Y is not None:
        doc["Y"] = [float(v) for v in model.Y]
    return doc


def model_from_json(doc: dict) -> TrainedModel:
    X = np.asarray(doc["X"], dtype=np.float64).T
    if X.shape != (doc["D"], doc["N"]):
        raise ValueError("model document X shape disagrees with D/N fields")
    return TrainedModel(
        task=doc["task"],
        spec=KernelSpec.from_json(doc["kernel"]),
        X=X,
        alpha=np.asarray(doc["alpha"], dtype=np.float64),
        b=float(doc["b"]),
        retained=tuple(doc["S_D"]),
        eta=np.asarray(doc["eta"], dtype=np.float64) if "eta" in doc else None,
        Y=np.asarray(doc["Y"], dtype=np.float64) if "Y" in doc else None,
    )


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=1)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))
