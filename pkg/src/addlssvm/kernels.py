"""Per-component scalar kernels and Gram matrix assembly.

An additive model carries one scalar kernel per input component. Training
needs the D component Gram matrices Omega^d (N x N) plus their sum; tuning
against a validation set additionally needs the cross blocks Omega^(v)d
(n x N) between validation and training inputs.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _accel

RBF = "rbf"
LINEAR = "linear"

_FAMILY_CODE = {RBF: _accel.FAMILY_RBF, LINEAR: _accel.FAMILY_LINEAR}


@dataclass(frozen=True)
class KernelEntry:
    """One component's kernel: family plus bandwidth (RBF only).

    The RBF form is exp(-(u - v)^2 / sigma^2). Some conventions divide by
    2 sigma^2 instead; this package does not.
    """

    family: str
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.family not in (RBF, LINEAR):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == RBF:
            if self.sigma is None or not np.isfinite(self.sigma) or self.sigma <= 0:
                raise ValueError("rbf kernel needs a bandwidth sigma > 0")
        elif self.sigma is not None:
            raise ValueError("linear kernel takes no bandwidth")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel assignment for all D components of a model."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValueError("kernel spec needs at least one component entry")

    @property
    def n_components(self) -> int:
        return len(self.entries)

    @classmethod
    def shared_rbf(cls, n_components: int, sigma: float) -> "KernelSpec":
        """Every component an RBF with one shared bandwidth (the default setup)."""
        return cls(tuple(KernelEntry(RBF, float(sigma)) for _ in range(n_components)))

    @classmethod
    def from_families(cls, families: Sequence[str], sigma: float) -> "KernelSpec":
        """Mixed spec; `sigma` applies to the RBF entries."""
        return cls(
            tuple(
                KernelEntry(RBF, float(sigma)) if f == RBF else KernelEntry(LINEAR)
                for f in families
            )
        )

    def to_json(self):
        return [
            {"family": e.family, "sigma": e.sigma} if e.family == RBF else {"family": e.family}
            for e in self.entries
        ]

    @classmethod
    def from_json(cls, obj) -> "KernelSpec":
        return cls(tuple(KernelEntry(d["family"], d.get("sigma")) for d in obj))

    def _codes(self):
        fams = np.array([_FAMILY_CODE[e.family] for e in self.entries], dtype=np.int64)
        sigs = np.array(
            [e.sigma if e.sigma is not None else 1.0 for e in self.entries], dtype=np.float64
        )
        return fams, sigs


def eval_kernel(entry: KernelEntry, u: float, v: float) -> float:
    """Evaluate one component kernel at a pair of scalar inputs."""
    if not (np.isfinite(u) and np.isfinite(v)):
        raise ValueError("kernel inputs must be finite")
    if entry.family == RBF:
        d = u - v
        return float(np.exp(-(d * d) / (entry.sigma * entry.sigma)))
    return float(u * v)


@dataclass
class ComponentGrams:
    """Component Gram matrices for a training set, optionally with validation blocks.

    omegas[d] is the N x N training Gram of component d, omega their sum.
    When validation inputs were supplied, val_omegas[d] holds the n x N
    cross block and val_omega their sum. The training inputs and spec are
    kept so models fitted from these grams can predict on new points.
    """

    spec: KernelSpec
    X: np.ndarray                      # (D, N) training inputs
    omegas: np.ndarray                 # (D, N, N)
    omega: np.ndarray                  # (N, N)
    X_val: Optional[np.ndarray] = None         # (D, n)
    val_omegas: Optional[np.ndarray] = None    # (D, n, N)
    val_omega: Optional[np.ndarray] = None     # (n, N)

    @property
    def n_components(self) -> int:
        return self.omegas.shape[0]

    @property
    def n_train(self) -> int:
        return self.omegas.shape[1]

    @property
    def has_validation(self) -> bool:
        return self.val_omegas is not None and self.val_omegas.shape[1] > 0


def build_grams(
    X_train: np.ndarray, spec: KernelSpec, X_val: Optional[np.ndarray] = None
) -> ComponentGrams:
    """Assemble the component Grams Omega^d, their sum, and validation blocks.

    X_train is (D, N): one row per component. X_val, when given, is (D, n).
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    if X_train.ndim != 2:
        raise ValueError("X_train must be a (D, N) array")
    D = X_train.shape[0]
    if spec.n_components != D:
        raise ValueError(f"kernel spec has {spec.n_components} entries for {D} components")
    if not np.all(np.isfinite(X_train)):
        raise ValueError("X_train contains non-finite values")

    fams, sigs = spec._codes()
    omegas, omega = _accel.component_grams(X_train, X_train, fams, sigs)

    val_omegas = val_omega = None
    if X_val is not None:
        X_val = np.asarray(X_val, dtype=np.float64)
        if X_val.ndim != 2 or X_val.shape[0] != D:
            raise ValueError("X_val must be (D, n) with the same D as X_train")
        if not np.all(np.isfinite(X_val)):
            raise ValueError("X_val contains non-finite values")
        val_omegas, val_omega = _accel.component_grams(X_train, X_val, fams, sigs)

    return ComponentGrams(
        spec=spec,
        X=X_train,
        omegas=omegas,
        omega=omega,
        X_val=X_val,
        val_omegas=val_omegas,
        val_omega=val_omega,
    )


def kernel_vector(spec: KernelSpec, X_train: np.ndarray, x_new: np.ndarray) -> np.ndarray:
    """Per-component kernel evaluations between new points and the training set.

    x_new is (D,) or (D, m); returns (D, m, N).
    """
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim == 1:
        x_new = x_new[:, None]
    if x_new.shape[0] != X_train.shape[0]:
        raise ValueError(
            f"point has {x_new.shape[0]} components, model expects {X_train.shape[0]}"
        )
    if not np.all(np.isfinite(x_new)):
        raise ValueError("prediction inputs must be finite")
    fams, sigs = spec._codes()
    omegas, _ = _accel.component_grams(X_train, x_new, fams, sigs)
    return omegas


def full_rbf_gram(
    X: np.ndarray, sigma: float, Z: Optional[np.ndarray] = None
) -> np.ndarray:
    """Single multivariate RBF Gram exp(-||x - z||^2 / sigma^2) over (D, N) inputs.

    This is the non-additive baseline kernel; Z defaults to X.
    """
    X = np.asarray(X, dtype=np.float64)
    Z = X if Z is None else np.asarray(Z, dtype=np.float64)
    sq = ((Z[:, :, None] - X[:, None, :]) ** 2).sum(axis=0)
    return np.exp(-sq / (sigma * sigma))


def mixed_library(X: np.ndarray, sigma: float):
    """Offer every input twice: once with an RBF kernel, once linear.

    Returns (X_expanded (2D, N), spec, labels) where labels[j] = (family,
    input_index) with input_index 1-based. Component j in the expanded
    problem reads the same input row it was duplicated from.
    """
    X = np.asarray(X, dtype=np.float64)
    D = X.shape[0]
    X_expanded = np.vstack([X, X])
    families = [RBF] * D + [LINEAR] * D
    labels = [(RBF, d + 1) for d in range(D)] + [(LINEAR, d + 1) for d in range(D)]
    return X_expanded, KernelSpec.from_families(families, sigma), labels
