"""Synthetic benchmark generation, CSV ingestion, preprocessing, splits, and
k-fold cross-validation orchestration.

All randomness flows through numpy's PCG64 generator with explicit seeds;
Gaussian noise is drawn by the Box-Muller transform on that stream so the
noise sequence is pinned down to the bit.
"""

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

TRUE_COMPONENTS = (1, 2, 3, 4)


@dataclass
class Dataset:
    """Column-componentized inputs X (D, N) with targets Y.

    For classification Y holds labels in {-1, +1}. noiseless carries the
    noise-free targets when the data came from the synthetic generator.
    """

    X: np.ndarray
    Y: np.ndarray
    names: tuple
    task: str = "regression"
    noiseless: Optional[np.ndarray] = None
    preprocessing: Optional[dict] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.Y = np.asarray(self.Y, dtype=np.float64)
        if self.X.ndim != 2 or self.Y.ndim != 1 or self.X.shape[1] != self.Y.shape[0]:
            raise ValueError("Dataset needs X (D, N) and Y (N,)")
        if self.X.shape[1] < 2:
            raise ValueError("Dataset needs at least two points")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y))):
            raise ValueError("Dataset contains non-finite values")
        if self.task == "classification" and not np.all(np.isin(self.Y, (-1.0, 1.0))):
            raise ValueError("classification targets must be -1 or +1")
        self.names = tuple(self.names)
        if len(self.names) != self.X.shape[0]:
            raise ValueError("one name per component required")

    @property
    def n_components(self) -> int:
        return self.X.shape[0]

    @property
    def n_points(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            X=self.X[:, idx],
            Y=self.Y[idx],
            names=self.names,
            task=self.task,
            noiseless=None if self.noiseless is None else self.noiseless[idx],
            preprocessing=self.preprocessing,
        )


def gaussian_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """Standard normal draws via Box-Muller on the generator's uniform stream."""
    u1 = rng.random(n)
    u2 = rng.random(n)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def sinc(u):
    """sin(u)/u with sinc(0) = 1 (the unnormalized convention).

    Note this is not numpy's sinc, which is sin(pi u)/(pi u); the choice
    changes the first synthetic component.
    """
    u = np.asarray(u, dtype=np.float64)
    return np.sinc(u / np.pi)


def vapnik_function(X: np.ndarray) -> np.ndarray:
    """Noise-free additive target: 10 sinc(x1) + 20 (x2 - 1/2)^2 + 10 x3 + 5 x4."""
    return 10.0 * sinc(X[0]) + 20.0 * (X[1] - 0.5) ** 2 + 10.0 * X[2] + 5.0 * X[3]


def generate_vapnik(
    n: int, d: int = 10, noise_sd: float = 1.0, seed: int = 0
) -> Dataset:
    """Synthetic additive benchmark: inputs uniform on [0, 1]^d, four active components.

    Only x1..x4 enter the target; the remaining d - 4 inputs are noise
    dimensions. Returns the noisy targets plus the noiseless ones for
    test-error computation.
    """
    if n < 10:
        raise ValueError("need at least 10 points")
    if d < 4:
        raise ValueError("the target uses four components; d must be >= 4")
    rng = np.random.default_rng(seed)
    X = rng.random((d, n))
    f = vapnik_function(X)
    e = gaussian_noise(rng, n)
    return Dataset(
        X=X,
        Y=f + noise_sd * e,
        names=tuple(f"x{i + 1}" for i in range(d)),
        task="regression",
        noiseless=f,
    )


# -- CSV ingestion ------------------------------------------------------------


class CsvFormatError(ValueError):
    pass


def load_csv(
    path,
    target: str,
    label_map: Optional[dict] = None,
) -> Dataset:
    """Read a rectangular numeric CSV with a header row into a Dataset.

    Columns other than `target` become components. With `label_map`
    (e.g. {"spam": 1, "ham": -1}) the target is treated as classification
    labels; otherwise it must be numeric. Malformed cells raise errors
    naming the offending row and column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target not in header:
            raise CsvFormatError(f"{path}: target column {target!r} not in header {header}")
        t_idx = header.index(target)
        feat_idx = [i for i in range(len(header)) if i != t_idx]
        rows = []
        for r, row in enumerate(reader, start=2):   # header is line 1
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: row {r} has {len(row)} cells, expected {len(header)}"
                )
            rows.append(row)

    if not rows:
        raise CsvFormatError(f"{path}: no data rows")

    n = len(rows)
    X = np.empty((len(feat_idx), n))
    Y = np.empty(n)
    for r, row in enumerate(rows):
        for j, i in enumerate(feat_idx):
            try:
                X[j, r] = float(row[i])
            except ValueError:
                raise CsvFormatError(
                    f"{path}: row {r + 2}, column {header[i]!r}: "
                    f"non-numeric value {row[i]!r}"
                ) from None
        cell = row[t_idx].strip()
        if label_map is not None:
            if cell not in label_map:
                raise CsvFormatError(
                    f"{path}: row {r + 2}, column {target!r}: unmapped label {cell!r}"
                )
            Y[r] = float(label_map[cell])
        else:
            try:
                Y[r] = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"{path}: row {r + 2}, column {target!r}: non-numeric value {cell!r}"
                ) from None

    task = "classification" if label_map is not None else "regression"
    if task == "classification" and not np.all(np.isin(Y, (-1.0, 1.0))):
        raise CsvFormatError(f"{path}: label_map must send every label to -1 or +1")
    return Dataset(X=X, Y=Y, names=tuple(header[i] for i in feat_idx), task=task)


# -- preprocessing ------------------------------------------------------------


def preprocess_log_standardize(ds: Dataset, log: bool = True) -> Dataset:
    """Per column: log(1 + x) (for non-negative columns), center, scale to unit sd.

    Sample standard deviation (ddof=1). Zero-variance columns are centered
    only and flagged. The fitted constants are recorded on the returned
    dataset so the same transform can be applied to new data.
    """
    X = ds.X.copy()
    record = {"log": [], "mean": [], "sd": [], "flagged": []}
    for j in range(X.shape[0]):
        col = X[j]
        use_log = bool(log) and np.all(col >= 0)
        if use_log:
            col = np.log1p(col)
        m = float(col.mean())
        s = float(col.std(ddof=1))
        col = col - m
        if s > 0:
            col = col / s
        else:
            record["flagged"].append(ds.names[j])
        X[j] = col
        record["log"].append(use_log)
        record["mean"].append(m)
        record["sd"].append(s)
    return replace(ds, X=X, preprocessing=record)


def apply_preprocessing(X: np.ndarray, record: dict) -> np.ndarray:
    """Apply previously fitted per-column transform constants to new inputs."""
    X = np.asarray(X, dtype=np.float64).copy()
    for j in range(X.shape[0]):
        col = X[j]
        if record["log"][j]:
            col = np.log1p(col)
        col = col - record["mean"][j]
        if record["sd"][j] > 0:
            col = col / record["sd"][j]
        X[j] = col
    return X


# -- error metrics ------------------------------------------------------------


def error_metrics(pred: np.ndarray, truth: np.ndarray) -> dict:
    """L2 (mean squared), L1 (mean absolute), Linf (max absolute) errors."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    diff = pred - truth
    return {
        "l2": float(np.mean(diff**2)),
        "l1": float(np.mean(np.abs(diff))),
        "linf": float(np.max(np.abs(diff))) if diff.size else 0.0,
    }


# -- cross-validation ---------------------------------------------------------


@dataclass(frozen=True)
class CVPlan:
    """Fold assignment for k-fold cross-validation."""

    k: int
    assignment: np.ndarray     # (N,) fold index per point
    seed: int

    @classmethod
    def make(cls, n: int, k: int = 10, seed: int = 0) -> "CVPlan":
        if not 2 <= k <= n:
            raise ValueError("need 2 <= k <= N folds")
        rng = np.random.default_rng(seed)
        perm = rng.permutation(n)
        assignment = np.empty(n, dtype=np.int64)
        assignment[perm] = np.arange(n) % k
        return cls(k=k, assignment=assignment, seed=seed)

    def folds(self):
        for f in range(self.k):
            val = np.flatnonzero(self.assignment == f)
            train = np.flatnonzero(self.assignment != f)
            yield train, val


@dataclass
class CVRecord:
    params: dict
    mean_score: float
    fold_scores: list
    valid: bool
    error: Optional[str] = None

    @property
    def se_score(self) -> float:
        s = np.asarray(self.fold_scores, dtype=np.float64)
        if s.size < 2:
            return 0.0
        return float(s.std(ddof=1) / math.sqrt(s.size))


def kfold_cv(
    ds: Dataset,
    plan: CVPlan,
    trainer: Callable[[Dataset, dict], object],
    hyper_grid: Sequence[dict],
    score: Callable[[object, Dataset], float],
) -> tuple:
    """Mean held-out score per grid point; returns (best_params, records).

    The best point is the argmin of the mean score, ties resolving to the
    first grid entry. A trainer failure on any fold marks that grid point
    invalid but does not abort the sweep.
    """
    if not hyper_grid:
        raise ValueError("hyper grid is empty")
    records = []
    best = None
    for params in hyper_grid:
        fold_scores = []
        err = None
        for train_idx, val_idx in plan.folds():
            try:
                model = trainer(ds.subset(train_idx), params)
                fold_scores.append(float(score(model, ds.subset(val_idx))))
            except Exception as ex:   # trainer failures poison the grid point only
                err = f"{type(ex).__name__}: {ex}"
                break
        valid = err is None
        mean = float(np.mean(fold_scores)) if valid else math.inf
        rec = CVRecord(
            params=dict(params), mean_score=mean, fold_scores=fold_scores,
            valid=valid, error=err,
        )
        records.append(rec)
        if valid and (best is None or mean < best[0]):
            best = (mean, rec)
    if best is None:
        raise RuntimeError("every grid point failed cross-validation")
    return dict(best[1].params), records


def one_se_pick(records: Sequence[CVRecord], complexity: Callable[[dict], float]) -> dict:
    """Parsimony rule: among points within one standard error of the best
    mean score, pick the one minimizing `complexity` (ties: first in grid order)."""
    valid = [r for r in records if r.valid]
    if not valid:
        raise RuntimeError("no valid grid points")
    best = min(valid, key=lambda r: r.mean_score)
    cut = best.mean_score + best.se_score
    eligible = [r for r in valid if r.mean_score <= cut]
    chosen = min(eligible, key=lambda r: complexity(r.params))
    return dict(chosen.params)


def save_score_table(records: Sequence[CVRecord], path, fmt: str = "csv") -> None:
    """Persist CV results as CSV or JSON."""
    rows = [
        {
            **r.params,
            "mean_score": r.mean_score,
            "se_score": r.se_score,
            "valid": r.valid,
            "error": r.error or "",
        }
        for r in records
    ]
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(rows, fh, indent=1)
            fh.write("\n")
        return
    keys = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        writer.writerows(rows)
