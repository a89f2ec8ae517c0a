import math
import numpy as np
import pytest
import sympy
from cvlearn.exceptions import EngineError, ValidationError
from cvlearn.fock import oracle_probability
from cvlearn.photodetection import (
    HermiteIndex,
    PhotoCountEffect,
    gp_coarse_probability,
    gp_outcome_probability,
    hermite_multi,
    photon_number_distribution,
    photon_tail_bound,
)
from cvlearn.symplectic import ClampLog, GaussianChannel, GaussianState, random_physical_instance


def test_coherent_state_is_poissonian():
    probs = photon_number_distribution(GaussianState.coherent(1.0), None, 6)
    expected = [math.exp(-1) / math.factorial(k) for k in range(7)]
    np.testing.assert_allclose(probs, expected, atol=1e-10)


def test_thermal_state_is_geometric():
    probs = photon_number_distribution(GaussianState.thermal(1.0), None, 5)
    np.testing.assert_allclose(probs, [0.5 ** (k + 1) for k in range(6)], atol=1e-10)


def test_squeezed_vacuum_has_no_odd_counts():
    r = 0.5
    probs = photon_number_distribution(GaussianState.squeezed(r), None, 10)
    np.testing.assert_allclose(probs[1::2], 0.0, atol=1e-8)
    assert probs[0] == pytest.approx(1 / math.cosh(r), abs=1e-10)
    assert probs[2] == pytest.approx(math.tanh(r) ** 2 / (2 * math.cosh(r)), abs=1e-10)


def test_two_mode_squeezed_is_correlated():
    r = 0.4
    probs = photon_number_distribution(GaussianState.two_mode_squeezed(r), None, 4)
    lam = math.tanh(r) ** 2
    for k in range(5):
        assert probs[k, k] == pytest.approx((1 - lam) * lam**k, abs=1e-10)
    assert probs[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_outcome_probability_through_loss():
    # a coherent state stays coherent with amplitude sqrt(eta) alpha
    state = GaussianState.coherent(2.0)
    ch = GaussianChannel.loss(0.25)
    prob = gp_outcome_probability(state, ch, [1])
    assert prob == pytest.approx(math.exp(-1.0), abs=1e-10)


def test_hermite_multi_zero_index():
    assert hermite_multi(np.eye(2), [0.3, -0.2], [0]) == pytest.approx(1.0)


def test_hermite_multi_first_order():
    assert hermite_multi(np.eye(2), [1.0, 2.0], [1]) == pytest.approx(2.0)


def test_hermite_multi_against_symbolic_derivative():
    v_mat = np.array([[1.0, 0.3], [0.3, 0.8]])
    point = np.array([0.4, -0.7])
    x, y = sympy.symbols("x y")
    vec = sympy.Matrix([x, y])
    inv = sympy.Matrix(np.linalg.inv(v_mat).tolist())
    gauss = sympy.exp(-(vec.T * inv * vec)[0] / 2)
    deriv = sympy.diff(gauss, x, 2, y, 2)
    value = float((deriv / gauss).subs({x: point[0], y: point[1]}))
    assert hermite_multi(v_mat, point, [2]) == pytest.approx(value, rel=1e-9)


def test_coarse_vacuum_projector():
    prob = gp_coarse_probability(
        GaussianState.vacuum(), GaussianChannel.identity(), PhotoCountEffect.single(0)
    )
    assert prob == pytest.approx(1.0)


def test_uniform_effect_weights():
    effect = PhotoCountEffect.uniform(2, 1)
    assert sum(effect.weights.values()) == pytest.approx(1.0)
    prob = gp_coarse_probability(
        GaussianState.vacuum(2), GaussianChannel.identity(2), effect
    )
    assert prob == pytest.approx(0.25)


def test_effect_weights_above_one():
    with pytest.raises(ValidationError):
        PhotoCountEffect(1, {(0,): 0.7, (1,): 0.6})


def test_effect_outcome_beyond_cutoff():
    with pytest.raises(ValidationError):
        PhotoCountEffect(2, {(3,): 1.0})


def test_tail_bound():
    assert photon_tail_bound(GaussianState.vacuum(), 3) == pytest.approx(0.0)
    assert 0 < photon_tail_bound(GaussianState.coherent(2.0), 3) <= 1


def test_clamp_log():
    log = ClampLog()
    values = log.clamp(np.array([-1e-12, 0.5]))
    assert log.count == 1
    np.testing.assert_array_equal(values, [0.0, 0.5])
    with pytest.raises(EngineError):
        log.clamp(np.array([-0.1]))
    assert log.most_negative == pytest.approx(-1e-12)


def test_clamp_log_above_one():
    log = ClampLog()
    values = log.clamp(np.array([1 + 1e-9, 0.3]), "probability")
    assert log.count == 1
    assert log.largest == pytest.approx(1 + 1e-9)
    np.testing.assert_array_equal(values, [1.0, 0.3])
    with pytest.raises(EngineError):
        log.clamp(np.array([1.01]))


def test_negative_photon_number():
    with pytest.raises(ValidationError):
        HermiteIndex((1, -1))
    assert HermiteIndex([2, 0]).interleaved == (2, 2, 0, 0)


@pytest.mark.parametrize("seed", range(100))
def test_photocount_agrees_with_fock_oracle(seed):
    state, ch, _ = random_physical_instance(1, 0.5, seed)
    k = seed % 4
    assert gp_outcome_probability(state, ch, [k]) == pytest.approx(
        oracle_probability(state, ch, PhotoCountEffect.single(k)), abs=1e-6
    )
