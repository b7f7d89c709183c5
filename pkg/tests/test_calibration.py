import math

import numpy as np
import pytest
from scipy.special import expit

from psrcal.calibration import (
    AffineModel,
    TrainConfig,
    apply,
    bfgs,
    default_init,
    objective_of_model,
    train,
)
from psrcal.errors import DegenerateInputError, DomainError, TrialFileError
from psrcal.objective import ObjectiveParams, TrialSet, expected_cost
from psrcal.psr import ClosedFormRule
from psrcal.synth import SynthConfig, synth_generate

SHAPES = [r.value for r in ClosedFormRule]
LOGREG = ObjectiveParams.of(1, 1, 0.0)


@pytest.fixture(scope="module")
def warped():
    return synth_generate(SynthConfig(mu=2.0, n_tar=100_000, n_non=100_000, warp=(2.0, -1.0), seed=123))


@pytest.fixture(scope="module")
def small():
    return synth_generate(SynthConfig(mu=2.0, n_tar=3000, n_non=4000, warp=(0.7, 0.4), seed=9)).scores


class TestApply:
    @pytest.mark.parametrize(
        "A,B,scores,expected",
        [(1, 0, [-2, 0, 3], [-2, 0, 3]), (2, -1, [0, 1], [-1, 1]), (-1, 0, [1, 2], [-1, -2])],
    )
    def test_examples(self, A, B, scores, expected):
        np.testing.assert_array_equal(apply(AffineModel(A, B), scores), expected)

    def test_trialset(self):
        out = apply(AffineModel(2, 1), TrialSet([1.0], [0.0]))
        assert out.tar[0] == 3.0 and out.non[0] == 1.0

    def test_non_finite_params(self):
        with pytest.raises(DomainError):
            AffineModel(math.nan, 0)


class TestObjectiveOfModel:
    @pytest.mark.parametrize("shape", SHAPES)
    def test_finite_differences(self, shape, small):
        rng = np.random.default_rng(1)
        h = 1e-6
        for _ in range(3):
            params = ObjectiveParams.of(*shape, rng.uniform(-2, 2))
            A, B = rng.uniform(0.3, 1.5), rng.uniform(-1, 1)
            _, dA, dB = objective_of_model(AffineModel(A, B), small, params)
            fA = (objective_of_model(AffineModel(A + h, B), small, params)[0]
                  - objective_of_model(AffineModel(A - h, B), small, params)[0]) / (2 * h)
            fB = (objective_of_model(AffineModel(A, B + h), small, params)[0]
                  - objective_of_model(AffineModel(A, B - h), small, params)[0]) / (2 * h)
            assert dA == pytest.approx(fA, rel=1e-6)
            assert dB == pytest.approx(fB, rel=1e-6)

    def test_zero_scores_kill_dA(self):
        _, dA, dB = objective_of_model(AffineModel(1.3, 0.2), TrialSet(np.zeros(5), np.zeros(7)), LOGREG)
        assert dA == 0.0 and dB != 0.0

    def test_value_is_expected_cost(self, small):
        m = AffineModel(0.9, -0.3)
        assert objective_of_model(m, small, LOGREG)[0] == expected_cost(LOGREG, apply(m, small))

    @pytest.mark.slow
    def test_stationary_at_truth(self):
        # calibrated data: the gradient at the identity map is pure sampling noise
        n = 100_000
        res = synth_generate(SynthConfig(mu=2.0, n_tar=n, n_non=n, seed=77))
        llrs = res.llrs
        _, dA, dB = objective_of_model(AffineModel(1, 0), llrs, LOGREG)
        g_tar = -0.5 * expit(-llrs.tar)
        g_non = 0.5 * expit(llrs.non)
        se_A = math.sqrt(((g_tar * llrs.tar).var() + (g_non * llrs.non).var()) / n)
        se_B = math.sqrt((g_tar.var() + g_non.var()) / n)
        assert abs(dA) <= 3 * se_A
        assert abs(dB) <= 3 * se_B


class TestTrain:
    def test_recovers_warp(self, warped):
        report = train(warped.scores, TrainConfig(LOGREG))
        assert report.converged and report.gradient_norm <= 1e-8
        assert report.model.A == pytest.approx(2.0, abs=0.05)
        assert report.model.B == pytest.approx(-1.0, abs=0.05)

    def test_already_calibrated(self, warped):
        report = train(warped.llrs, TrainConfig(LOGREG))
        assert report.model.A == pytest.approx(1.0, abs=0.05)
        assert report.model.B == pytest.approx(0.0, abs=0.05)

    def test_init_independent(self, warped):
        a = train(warped.scores, TrainConfig(LOGREG, AffineModel(1, 0)))
        b = train(warped.scores, TrainConfig(LOGREG, AffineModel(5, 5)))
        assert abs(a.final_objective - b.final_objective) <= 1e-8

    @pytest.mark.parametrize("shape", SHAPES)
    def test_descent_and_improvement(self, shape, small):
        cfg = TrainConfig(ObjectiveParams.of(*shape, -1.0))
        report = train(small, cfg)
        assert report.converged
        assert all(b <= a for a, b in zip(report.history, report.history[1:]))
        init_value = expected_cost(cfg.objective, apply(default_init(small), small))
        assert report.final_objective <= init_value
        assert report.final_objective == pytest.approx(report.history[-1])

    @pytest.mark.parametrize("shape", SHAPES)
    def test_shift_equivariance(self, shape, small):
        cfg = TrainConfig(ObjectiveParams.of(*shape, 0.5))
        c = 3.25
        base = train(small, cfg)
        shifted = train(small.map(lambda s: s + c), cfg)
        assert shifted.model.A == pytest.approx(base.model.A, abs=1e-6)
        assert shifted.model.B == pytest.approx(base.model.B - base.model.A * c, abs=1e-6)
        assert shifted.final_objective == pytest.approx(base.final_objective, abs=1e-6)

    @pytest.mark.parametrize("shape", SHAPES)
    def test_scale_equivariance(self, shape, small):
        cfg = TrainConfig(ObjectiveParams.of(*shape, -0.5))
        k = 4.0
        base = train(small, cfg)
        scaled = train(small.map(lambda s: k * s), cfg)
        assert scaled.model.A == pytest.approx(base.model.A / k, abs=1e-6)
        assert scaled.model.B == pytest.approx(base.model.B, abs=1e-6)
        assert scaled.final_objective == pytest.approx(base.final_objective, abs=1e-6)

    def test_zero_variance(self):
        with pytest.raises(DegenerateInputError):
            train(TrialSet([1.0, 1.0], [1.0]), TrainConfig(LOGREG))

    def test_empty_class(self):
        with pytest.raises(DomainError):
            train(TrialSet([1.0, 2.0], []), TrainConfig(LOGREG))

    def test_max_iters_respected(self, small):
        report = train(small, TrainConfig(LOGREG, max_iters=1))
        assert report.iterations == 1 and not report.converged

    def test_bad_config(self):
        with pytest.raises(DomainError):
            TrainConfig(LOGREG, grad_tol=0)
        with pytest.raises(DomainError):
            TrainConfig(LOGREG, max_iters=0)

    def test_boosting_with_outlier(self):
        # one far non-target: large A overflows exp(l/2), which the line search must step back from
        scores = synth_generate(SynthConfig(mu=2.0, n_tar=500, n_non=500, seed=4)).scores
        scores = TrialSet(scores.tar, np.r_[scores.non, 2000.0])
        report = train(scores, TrainConfig(ObjectiveParams.of(0.5, 0.5, 0), AffineModel(0.3, 0.0)))
        assert math.isfinite(report.final_objective)
        assert report.final_objective <= report.history[0]


class TestBfgs:
    def test_rosenbrock(self):
        def fg(p):
            x, y = p
            f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
            g = np.array([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)])
            return f, g

        x, f, g, it, converged, hist = bfgs(fg, [-1.2, 1.0], grad_tol=1e-8, max_iters=500)
        assert converged
        np.testing.assert_allclose(x, [1, 1], atol=1e-6)
        assert all(b <= a for a, b in zip(hist, hist[1:]))

    def test_non_finite_start(self):
        with pytest.raises(FloatingPointError):
            bfgs(lambda x: (math.inf, np.zeros(1)), [0.0])

    def test_infinite_region_is_avoided(self):
        # f = x^2 for x < 2, inf beyond; start where the first full step lands in the wall
        def fg(p):
            x = p[0]
            if x > 2:
                return math.inf, np.array([math.nan])
            return (x - 1.9) ** 2, np.array([2 * (x - 1.9)])

        x, f, *_ = bfgs(fg, [-50.0], grad_tol=1e-10)
        assert x[0] == pytest.approx(1.9, abs=1e-8)


class TestPersistence:
    def test_round_trip_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = AffineModel(rng.normal() * 10.0 ** rng.integers(-5, 5), rng.normal())
            obj = ObjectiveParams.of(rng.uniform(0.1, 3), rng.uniform(0.1, 3), rng.normal())
            m2, obj2 = AffineModel.from_json(m.to_json(obj))
            assert m2 == m and obj2 == obj

    def test_format_tag(self):
        text = AffineModel(1.5, 0.25).to_json()
        assert '"format": "psrcal-affine/1"' in text
        m, obj = AffineModel.from_json(text)
        assert obj is None and m == AffineModel(1.5, 0.25)

    @pytest.mark.parametrize("text", ["nope", '{"format": "other"}', '{"format": "psrcal-affine/1", "A": 1}'])
    def test_bad_documents(self, text):
        with pytest.raises(TrialFileError):
            AffineModel.from_json(text)
