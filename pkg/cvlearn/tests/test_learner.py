import numpy as np
import pytest
import scipy.stats
from cvlearn.exceptions import ShapeError, UnsupportedClassError, ValidationError
from cvlearn.gg import GGState, make_cat_state
from cvlearn.learner import (
    EncodedTask,
    EncodingPoly,
    ErmConfig,
    HypothesisParam,
    Probe,
    SampleDistribution,
    TrainingSample,
    draw_task_samples,
    draw_training_set,
    empirical_loss,
    erm_search,
    evaluate_generalization,
    grid_oracle,
    misclassification_error,
    param_count,
    sample_losses,
    task_learning_run,
)
from cvlearn.optimize import OptimizerConfig
from cvlearn.symplectic import (
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    validate_channel,
    validate_state,
)

SMALL_SEARCH = OptimizerConfig(
    population=12, parents=3, generations=15, restarts=0, max_evaluations=600
)


def test_losses():
    np.testing.assert_allclose(sample_losses(np.array([0.7]), np.array([1]), "quadratic"), [0.09])
    np.testing.assert_allclose(sample_losses(np.array([0.7]), np.array([1]), "linear"), [0.3])
    assert misclassification_error(1.0, 0.7) == pytest.approx(0.3)
    with pytest.raises(ValidationError):
        sample_losses(np.array([0.5]), np.array([1]), "hinge")


@pytest.mark.parametrize(
    "kind,count", [("gaussian-state", 6), ("gaussian-channel", 10), ("gg-fixed-coeff", 5)]
)
def test_param_count_single_mode(kind, count):
    assert param_count(kind, 1) == count


def test_decoded_hypotheses_are_physical(rng):
    for n in (1, 2):
        for _ in range(5):
            state = HypothesisParam.random("gaussian-state", n, rng, scale=2.0).decode()
            assert validate_state(state).ok
            channel = HypothesisParam.random("gaussian-channel", n, rng, scale=2.0).decode()
            assert validate_channel(channel).ok


def test_fixed_coefficient_identity():
    cat = make_cat_state(1.0)
    decoded = HypothesisParam("gg-fixed-coeff", 1, np.zeros(5), template=cat).decode()
    assert isinstance(decoded, GGState)
    np.testing.assert_allclose(decoded.means, cat.means, atol=1e-12)
    np.testing.assert_allclose(decoded.covs, cat.covs, atol=1e-12)


def test_hypothesis_shape_errors():
    with pytest.raises(ShapeError):
        HypothesisParam("gaussian-state", 1, np.zeros(4))
    with pytest.raises(UnsupportedClassError):
        HypothesisParam("neural-net", 1, np.zeros(4))
    with pytest.raises(ValidationError):
        HypothesisParam("gg-fixed-coeff", 1, np.zeros(5))


def test_training_sample_outcome_is_bit():
    with pytest.raises(ValidationError):
        TrainingSample(Probe(effect=GeneralDyneEffect.heterodyne([0.0, 0.0])), 2)


def test_fixed_probe_outcomes():
    probe = Probe(
        channel=GaussianChannel.identity(), effect=GeneralDyneEffect.heterodyne([0.0, 0.0])
    )
    dist = SampleDistribution("heterodyne", fixed_probe=probe, seed=1)
    samples = draw_training_set(GaussianState.vacuum(), dist, 20)
    assert all(s.outcome == 1 for s in samples)


def test_training_set_reproducible():
    dist = SampleDistribution("heterodyne", seed=5)
    first = draw_training_set(GaussianState.coherent(0.5), dist, 30)
    second = draw_training_set(GaussianState.coherent(0.5), dist, 30)
    assert [s.outcome for s in first] == [s.outcome for s in second]


@pytest.mark.parametrize(
    "kind", ["heterodyne", "gaussian-general-dyne", "gaussian-photocount", "half-space"]
)
def test_batched_loss_matches_loop(kind):
    dist = SampleDistribution(kind, seed=3)
    samples = draw_training_set(GaussianState.coherent(0.4), dist, 25)
    hyp = GaussianState.squeezed(0.2, alpha=0.1)
    summary = empirical_loss(hyp, samples, "quadratic")
    expected = [(s.probe.probability(hyp, "state") - s.outcome) ** 2 for s in samples]
    np.testing.assert_allclose(summary.per_sample, expected, atol=1e-10)
    assert summary.total == pytest.approx(sum(expected))
    assert summary.maximum == pytest.approx(max(expected))


def test_gg_effect_distribution():
    dist = SampleDistribution("gg-fixed-coefficients", seed=2)
    samples = draw_training_set(GaussianState.vacuum(), dist, 10)
    summary = empirical_loss(GaussianState.vacuum(), samples, "linear")
    assert 0.0 <= summary.mean <= 1.0


def test_erm_search_state():
    target = GaussianState.coherent(0.6)
    dist = SampleDistribution("heterodyne", outcome_range=1.5, seed=4)
    samples = draw_training_set(target, dist, 60)
    config = ErmConfig(loss="quadratic", objective="sum", optimizer=SMALL_SEARCH, seed=9)
    hyp, report = erm_search("gaussian-state", samples, "state", config)
    assert hyp.kind == "gaussian-state"
    assert validate_state(hyp.decode()).ok
    assert report.evaluations <= SMALL_SEARCH.max_evaluations
    assert 0.0 <= report.mean_loss <= report.eta <= 1.0
    gap = evaluate_generalization(hyp, target, dist, n_test=100, gammas=[0.1], seed=10)
    assert 0.0 <= gap.quantiles["q50"] <= gap.quantiles["q95"] <= 1.0
    assert 0.0 <= gap.exceedance[0.1] <= 1.0
    report.gap = gap
    assert report.to_dict()["gap"]["quantiles"] == gap.quantiles


def test_erm_search_role_mismatch():
    dist = SampleDistribution("heterodyne", seed=1)
    samples = draw_training_set(GaussianState.vacuum(), dist, 5)
    with pytest.raises(UnsupportedClassError):
        erm_search("gaussian-channel", samples, "state")


def test_generalization_of_target_is_zero():
    dist = SampleDistribution("gaussian-general-dyne", seed=6)
    target = GaussianState.coherent(0.3)
    gap = evaluate_generalization(target, target, dist, n_test=100, seed=1)
    assert gap.quantiles["q95"] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValidationError):
        evaluate_generalization(target, target, dist, n_test=50)


def test_coherent_discrimination_with_identity():
    task = EncodedTask.coherent_discrimination(0.5)
    expected = scipy.stats.norm.cdf(np.sqrt(2) * 0.5)
    assert task.expected_success(GaussianChannel.identity()) == pytest.approx(expected)


def test_task_samples_have_unit_outcomes(rng):
    task = EncodedTask.coherent_discrimination(0.5)
    samples = draw_task_samples(task, 12, rng)
    assert len(samples) == 12
    assert all(s.outcome == 1 for s in samples)
    assert all(s.probe.channel is None for s in samples)


def test_encoding_shapes():
    with pytest.raises(ShapeError):
        EncodingPoly(2, [[0.0, 1.0]])
    with pytest.raises(ShapeError):
        EncodedTask(1, EncodingPoly(0, [[0.0]]), EncodingPoly(0, [[1.0], [0.0], [0.0]]), [0.0])
    poly = EncodingPoly(2, [[1.0, 0.0, 2.0]])
    np.testing.assert_allclose(poly(3.0), [19.0])


def test_grid_oracle():
    task = EncodedTask.coherent_discrimination(0.5)
    axes = {0: [-0.5, 0.0, 0.5]}
    best, theta = grid_oracle(task, axes)
    assert theta[0] in axes[0]
    base_value = task.expected_success(
        HypothesisParam("gaussian-channel", 1, np.zeros(10)).decode()
    )
    assert best >= base_value - 1e-12


def test_task_learning_run():
    task = EncodedTask.coherent_discrimination(1.0)
    config = ErmConfig(loss="total-variation", objective="sum", optimizer=SMALL_SEARCH, seed=3)
    report = task_learning_run(task, 40, config=config, seed=3, grid_axes={9: [0.0, 2.0]})
    assert 0.0 <= report.success_probability <= 1.0
    assert report.heldout_loss == pytest.approx(1 - report.success_probability)
    assert report.grid_optimum is not None
    with pytest.raises(UnsupportedClassError):
        task_learning_run(task, 10, kind="gaussian-state")
