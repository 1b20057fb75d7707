import numpy as np
import pytest

from addlssvm.solvers import NumericalError
from addlssvm import wgnc
from addlssvm.wgnc import (
    GroupedNormPenalty,
    Penalty,
    RelaxationSchedule,
    SeparablePenalty,
    absolute,
    bridge,
    hard_threshold,
    reweight,
    smooth_threshold,
    squared,
    wgnc_minimize,
)


class TestReweight:
    def test_squared_penalty_is_its_own_majorizer(self, rng):
        e = rng.normal(size=20) * 5
        nu2, mu = reweight(e, squared())
        assert np.allclose(nu2, 1.0, atol=1e-12)
        assert np.allclose(mu, 0.0, atol=1e-12)

    def test_absolute_at_two(self):
        nu2, mu = reweight(np.array([2.0]), absolute())
        assert nu2[0] == pytest.approx(0.25, abs=1e-15)
        assert mu[0] == pytest.approx(1.0, abs=1e-15)

    def test_absolute_symmetry(self):
        n1, m1 = reweight(np.array([-2.0]), absolute())
        n2, m2 = reweight(np.array([2.0]), absolute())
        assert n1[0] == n2[0] and m1[0] == m2[0]

    def test_tangency_identities_random_pairs(self, rng):
        # value and slope of the quadratic match the penalty at the anchor
        penalties = [
            absolute(),
            squared(),
            smooth_threshold(1.3, 3.7),
            smooth_threshold(5.0, 0.2),
            bridge(0.6),
            hard_threshold(2.0),
        ]
        for _ in range(1000):
            pen = penalties[int(rng.integers(len(penalties)))]
            e = float(rng.normal() * 3)
            if abs(e) < 1e-6:
                continue
            nu2, mu = reweight(np.array([e]), pen)
            v = abs(e)
            assert nu2[0] * e * e + mu[0] == pytest.approx(
                float(pen.value(np.array([v]))[0]), abs=1e-10
            )
            slope = 2.0 * nu2[0] * v
            assert slope == pytest.approx(float(pen.deriv(np.array([v]))[0]), abs=1e-10)

    def test_non_monotone_penalty_is_an_error(self):
        bad = Penalty("decreasing", lambda v: -v, lambda v: -np.ones_like(v))
        with pytest.raises(NumericalError, match="decreasing"):
            reweight(np.array([1.0]), bad)

    def test_clamp_at_zero_residual(self):
        nu2, _ = reweight(np.array([0.0]), absolute())
        assert nu2[0] == pytest.approx(1.0 / (2.0 * 1e-8))


class TestPenalties:
    def test_smooth_threshold_bounds_and_monotonicity(self, rng):
        for _ in range(1000):
            lam = float(rng.random() * 10 + 1e-3)
            a = float(rng.random() * 5 + 1e-3)
            v = float(rng.random() * 100)
            pen = smooth_threshold(lam, a)
            val = float(pen.value(np.array([v]))[0])
            assert 0.0 <= val < lam
            bigger = float(pen.value(np.array([v + 1e-3]))[0])
            assert bigger > val

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            smooth_threshold(0.0, 1.0)
        with pytest.raises(ValueError):
            bridge(0.0)
        with pytest.raises(ValueError):
            hard_threshold(-1.0)


class TestSchedule:
    def test_default_geometric(self):
        z = wgnc.DEFAULT_SCHEDULE.zetas
        assert z[0] == 1.0 and z[-1] == 0.0
        assert all(b < a for a, b in zip(z, z[1:]))
        assert z[1] == pytest.approx(0.7)
        assert min(v for v in z if v > 0) >= 1e-3

    def test_invalid_schedules_rejected(self):
        with pytest.raises(ValueError):
            RelaxationSchedule((1.0, 0.5, 0.5, 0.0))
        with pytest.raises(ValueError):
            RelaxationSchedule((0.9, 0.5, 0.0))
        with pytest.raises(ValueError):
            RelaxationSchedule((1.0, 0.5))


class ScalarLocation:
    """min_theta sum_k pen(y_k - theta): weighted solves are weighted means."""

    def __init__(self, y):
        self.y = np.asarray(y, dtype=np.float64)
        self.n_residuals = len(self.y)
        self.solve_log = []

    def solve_weighted(self, w):
        w = np.broadcast_to(np.asarray(w), (self.n_residuals,))
        theta = float(np.sum(w * self.y) / np.sum(w))
        self.solve_log.append(theta)
        return theta

    def residuals(self, theta):
        return self.y - theta

    def data_term(self, theta):
        return 0.0


class TestWgncMinimize:
    def test_squared_target_equals_warm_start(self):
        prob = ScalarLocation([1.0, 2.0, 6.0])
        res = wgnc_minimize(prob, SeparablePenalty(squared()))
        assert res.state == pytest.approx(np.mean(prob.y), abs=1e-12)

    def test_l1_location_reaches_median_objective(self):
        y = np.array([1.0, 2.0, 9.0])
        prob = ScalarLocation(y)
        res = wgnc_minimize(prob, SeparablePenalty(absolute()))
        J_median = float(np.sum(np.abs(y - np.median(y))))
        assert abs(res.objective - J_median) <= 1e-6

    def test_relaxed_objective_descends_within_steps_for_convex_target(self):
        y = np.array([0.0, 1.0, 2.0, 10.0, -4.0])
        prob = ScalarLocation(y)
        pen = SeparablePenalty(absolute())

        log = []
        orig = prob.solve_weighted

        def wrapped(w):
            theta = orig(w)
            log.append(theta)
            return theta

        prob.solve_weighted = wrapped
        res = wgnc_minimize(prob, pen)
        # recompute each step's relaxed objective along the logged iterates
        # (the engine solves once per inner iteration)
        idx = 1  # skip the warm start solve
        for step_row in res.trace[1:]:
            inner = step_row.inner_iterations
            js = []
            for theta in log[idx : idx + inner]:
                r = prob.residuals(theta)
                js.append(pen.relaxed_value(r, step_row.zeta))
            idx += inner
            diffs = np.diff(js)
            assert np.all(diffs <= 1e-9 * (1.0 + np.abs(np.array(js[:-1]))))

    def test_stp_location_beats_random_multistart(self, rng):
        # one-sided oracle: engine objective must not exceed the best of
        # 10^4 random candidate locations (plus slack)
        y = np.array([0.2, 0.25, 0.3, 4.0, 4.1, -2.0])
        prob = ScalarLocation(y)
        pen = SeparablePenalty(smooth_threshold(1.0, 3.7))
        res = wgnc_minimize(prob, pen)

        def J(theta):
            return float(np.sum(pen.penalty.value(np.abs(y - theta))))

        lo, hi = y.min() - 1, y.max() + 1
        candidates = rng.random(10_000) * (hi - lo) + lo
        best = min(J(t) for t in candidates)
        assert res.objective <= best + 1e-4

    def test_trace_csv_export(self, tmp_path):
        prob = ScalarLocation([1.0, 2.0, 9.0])
        res = wgnc_minimize(prob, SeparablePenalty(absolute()))
        path = tmp_path / "trace.csv"
        wgnc.trace_to_csv(res.trace, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "step,zeta,objective,inner_iterations"
        assert len(lines) == len(res.trace) + 1


class TestGroupedPenalty:
    def test_group_value_and_weights_consistency(self, rng):
        pen = GroupedNormPenalty(smooth_threshold(2.0, 0.5), [3, 2], scale=0.5)
        r = rng.normal(size=5)
        v1 = float(np.sum(np.abs(r[:3])))
        v2 = float(np.sum(np.abs(r[3:])))
        want = 0.5 * (2.0 * 0.5 * v1 / (1 + 0.5 * v1) + 2.0 * 0.5 * v2 / (1 + 0.5 * v2))
        assert pen.value(r) == pytest.approx(want, rel=1e-12)
        w = pen.weights(r, zeta=0.0)
        slope1 = 2.0 * 0.5 / (1 + 0.5 * v1) ** 2
        assert w[0] == pytest.approx(0.5 * slope1 / (2 * abs(r[0])), rel=1e-12)

    def test_zeta_one_weights_are_uniform(self, rng):
        pen = GroupedNormPenalty(smooth_threshold(2.0, 0.5), [3, 2], scale=0.5)
        w = pen.weights(rng.normal(size=5), zeta=1.0)
        assert np.allclose(w, 0.5)
