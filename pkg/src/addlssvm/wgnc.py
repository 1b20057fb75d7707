"""Weighted graduated non-convexity: homotopy from squared loss to an
arbitrary symmetric penalty via per-residual quadratic majorizers.

Each residual e gets a quadratic surrogate (nu e)^2 + mu matching the
penalty's value and slope at the current iterate; a strictly decreasing
relaxation sequence zeta blends the target penalty with the squared loss,
so early steps are convex and the target is reached at zeta = 0. The
intercepts mu never enter the weighted solves; they are kept for the
tangency diagnostics.
"""

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .solvers import NumericalError

RESIDUAL_CLAMP = 1e-8


@dataclass(frozen=True)
class Penalty:
    """Symmetric scalar penalty ell(|e|) with derivative d ell / d|e|."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    symmetric: bool = True


def squared() -> Penalty:
    return Penalty("squared", lambda v: v * v, lambda v: 2.0 * v)


def absolute() -> Penalty:
    return Penalty("absolute", lambda v: v, lambda v: np.ones_like(v))


def smooth_threshold(lam: float, a: float) -> Penalty:
    """Bounded sparsity penalty lam * a * v / (1 + a * v); saturates at lam."""
    if lam <= 0 or a <= 0:
        raise ValueError("smooth threshold penalty needs lam > 0 and a > 0")

    def value(v):
        return lam * a * v / (1.0 + a * v)

    def deriv(v):
        return lam * a / (1.0 + a * v) ** 2

    return Penalty(f"stp(lam={lam:g},a={a:g})", value, deriv)


def bridge(p: float, lam: float = 1.0) -> Penalty:
    """lam * v^p; concave (sparsity-inducing) for p < 1. Test-only penalty."""
    if p <= 0 or lam <= 0:
        raise ValueError("bridge penalty needs p > 0 and lam > 0")

    def value(v):
        return lam * np.power(v, p)

    def deriv(v):
        return lam * p * np.power(np.maximum(v, RESIDUAL_CLAMP), p - 1.0)

    return Penalty(f"bridge(p={p:g})", value, deriv)


def hard_threshold(lam: float) -> Penalty:
    """lam^2 - (v - lam)^2 below lam, flat lam^2 beyond. Test-only penalty."""
    if lam <= 0:
        raise ValueError("hard threshold penalty needs lam > 0")

    def value(v):
        return np.where(v < lam, lam * lam - (v - lam) ** 2, lam * lam)

    def deriv(v):
        return np.where(v < lam, 2.0 * (lam - v), 0.0)

    return Penalty(f"hard(lam={lam:g})", value, deriv)


def reweight(e, penalty: Penalty):
    """Quadratic majorizer coefficients (nu^2, mu) anchored at residuals e.

    Solves the 2x2 tangency system: (nu e)^2 + mu = ell(e) and
    2 nu^2 e = ell'(e), with |e| floored at 1e-8 against the singularity
    at zero. Negative nu^2 (non-monotone penalty) is an error.
    """
    e = np.asarray(e, dtype=np.float64)
    v = np.maximum(np.abs(e), RESIDUAL_CLAMP)
    nu2 = penalty.deriv(v) / (2.0 * v)
    if np.any(nu2 < 0):
        raise NumericalError(
            f"penalty {penalty.name} is non-monotone (negative weight) at |e|={v[nu2 < 0].min():g}"
        )
    mu = penalty.value(v) - nu2 * v * v
    return nu2, mu


# -- residual penalties as seen by the engine --------------------------------


class SeparablePenalty:
    """Entrywise penalty scale * sum_k ell(|r_k|)."""

    def __init__(self, penalty: Penalty, scale: float = 1.0):
        self.penalty = penalty
        self.scale = scale

    def value(self, r) -> float:
        return self.scale * float(np.sum(self.penalty.value(np.abs(r))))

    def relaxed_value(self, r, zeta: float) -> float:
        quad = float(np.sum(r * r))
        return self.scale * ((1.0 - zeta) * float(np.sum(self.penalty.value(np.abs(r)))) + zeta * quad)

    def weights(self, r, zeta: float) -> np.ndarray:
        nu2, _ = reweight(r, self.penalty)
        return self.scale * ((1.0 - zeta) * nu2 + zeta)


class GroupedNormPenalty:
    """Penalty scale * sum_g ell(||r_g||_1) over contiguous groups of residuals.

    The outer penalty is linearized at the current group norms (valid as a
    majorizer for concave ell), then each |r_k| takes the usual quadratic
    majorizer, giving per-entry weights ell'(v_g) / (2 |r_k|).
    """

    def __init__(self, outer: Penalty, group_sizes: Sequence[int], scale: float = 1.0):
        self.outer = outer
        self.sizes = np.asarray(group_sizes, dtype=np.int64)
        self.bounds = np.concatenate([[0], np.cumsum(self.sizes)])
        self.scale = scale

    def _group_norms(self, r):
        return np.add.reduceat(np.abs(r), self.bounds[:-1])

    def value(self, r) -> float:
        return self.scale * float(np.sum(self.outer.value(self._group_norms(r))))

    def relaxed_value(self, r, zeta: float) -> float:
        return self.scale * (
            (1.0 - zeta) * float(np.sum(self.outer.value(self._group_norms(r))))
            + zeta * float(np.sum(r * r))
        )

    def weights(self, r, zeta: float) -> np.ndarray:
        v = self._group_norms(r)
        slope = self.outer.deriv(v)
        if np.any(slope < 0):
            raise NumericalError(f"penalty {self.outer.name} is non-monotone at a group norm")
        per_entry = np.repeat(slope, self.sizes)
        nu2 = per_entry / (2.0 * np.maximum(np.abs(r), RESIDUAL_CLAMP))
        return self.scale * ((1.0 - zeta) * nu2 + zeta)


# -- relaxation schedule ------------------------------------------------------


@dataclass(frozen=True)
class RelaxationSchedule:
    """Strictly decreasing zeta sequence: 1 = zeta_0 > ... > 0, ending at 0."""

    zetas: tuple

    def __post_init__(self):
        z = tuple(float(v) for v in self.zetas)
        object.__setattr__(self, "zetas", z)
        if not z or z[0] != 1.0 or z[-1] != 0.0:
            raise ValueError("schedule must start at 1.0 and end at 0.0")
        if any(b >= a for a, b in zip(z, z[1:])):
            raise ValueError("schedule must be strictly decreasing")

    @classmethod
    def geometric(cls, ratio: float = 0.7, floor: float = 1e-3) -> "RelaxationSchedule":
        if not 0 < ratio < 1:
            raise ValueError("ratio must be in (0, 1)")
        zetas = [1.0]
        z = ratio
        while z >= floor:
            zetas.append(z)
            z *= ratio
        zetas.append(0.0)
        return cls(tuple(zetas))


DEFAULT_SCHEDULE = RelaxationSchedule.geometric()


@dataclass
class WgncTraceRow:
    step: int
    zeta: float
    objective: float            # relaxed objective at the step's converged iterate
    inner_iterations: int
    target_objective: float


@dataclass
class WgncResult:
    state: object
    objective: float            # target objective at the returned iterate
    trace: list
    converged: bool


def wgnc_minimize(
    problem,
    penalty,
    schedule: RelaxationSchedule = DEFAULT_SCHEDULE,
    inner_tol: float = 1e-9,
    max_inner: int = 50,
) -> WgncResult:
    """Deform a squared loss into the target penalty along the schedule.

    `problem` provides n_residuals, solve_weighted(weights) -> state,
    residuals(state), and data_term(state); `penalty` provides value /
    relaxed_value / weights over the residual vector. Each relaxation step
    runs an inner IRLS loop (capped at max_inner) on the relaxed objective.
    The returned iterate is the best seen under the target objective, which
    therefore never exceeds the squared-loss warm start's.
    """
    # warm start: zeta = 1 makes the weights residual-independent
    state = problem.solve_weighted(penalty.weights(np.zeros(problem.n_residuals), 1.0))
    r = problem.residuals(state)

    def target(state, r):
        return problem.data_term(state) + penalty.value(r)

    best_state = state
    best_J = target(state, r)
    trace = [WgncTraceRow(0, 1.0, problem.data_term(state) + penalty.relaxed_value(r, 1.0), 1, best_J)]
    converged = True

    for step, zeta in enumerate(schedule.zetas[1:], start=1):
        J_prev = np.inf
        inner = 0
        step_converged = False
        for inner in range(1, max_inner + 1):
            w = penalty.weights(r, zeta)
            state = problem.solve_weighted(w)
            r = problem.residuals(state)
            J_rel = problem.data_term(state) + penalty.relaxed_value(r, zeta)
            if not np.isfinite(J_rel):
                raise NumericalError(f"relaxed objective non-finite at zeta={zeta:g}")
            if abs(J_prev - J_rel) <= inner_tol * (1.0 + abs(J_rel)):
                step_converged = True
                break
            J_prev = J_rel
        J_t = target(state, r)
        trace.append(WgncTraceRow(step, zeta, J_rel, inner, J_t))
        if J_t < best_J:
            best_J, best_state = J_t, state
        converged = converged and step_converged

    return WgncResult(state=best_state, objective=best_J, trace=trace, converged=converged)


def trace_to_csv(trace, path) -> None:
    """Write a WGNC trace as CSV (step, zeta, objective, inner_iterations)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "zeta", "objective", "inner_iterations"])
        for row in trace:
            writer.writerow([row.step, repr(row.zeta), repr(row.objective), row.inner_iterations])
