import math
import numpy as np
import pytest
from cvlearn.exceptions import EngineError, InvalidStateError, ShapeError, SingularityError
from cvlearn.symplectic import (
    ClampLog,
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    HalfSpaceEffect,
    apply_gaussian_channel,
    compose_channels,
    gaussian_density,
    gaussian_effect_probability,
    gaussian_outcome_density,
    half_space_probability,
    random_gaussian_state,
    random_physical_instance,
    random_symplectic,
    validate_channel,
    validate_state,
    validate_symplectic,
)


def test_vacuum_heterodyne_density():
    state = GaussianState.vacuum()
    effect = GeneralDyneEffect.heterodyne([0.0, 0.0])
    ch = GaussianChannel.identity()
    assert gaussian_outcome_density(state, ch, effect) == pytest.approx(1 / (2 * math.pi))
    assert gaussian_effect_probability(state, ch, effect) == pytest.approx(1.0)


def test_coherent_heterodyne_at_origin():
    # |<0|alpha=1>|^2 = e^-1
    state = GaussianState.coherent(1.0)
    effect = GeneralDyneEffect.heterodyne([0.0, 0.0])
    ch = GaussianChannel.identity()
    density = gaussian_outcome_density(state, ch, effect)
    assert density == pytest.approx(0.058550, abs=1e-6)
    assert gaussian_effect_probability(state, ch, effect) == pytest.approx(math.exp(-1))


def test_validate_state_uncertainty():
    assert validate_state(GaussianState.vacuum(2)).ok
    diag = validate_state(GaussianState(np.zeros(2), np.eye(2) / 4))
    assert not diag.ok
    assert diag.min_eigenvalue == pytest.approx(-0.25)
    assert "uncertainty" in diag.message


def test_validate_channel():
    assert validate_channel(GaussianChannel.loss(0.3, nbar=0.2)).ok
    noiseless_amplifier = GaussianChannel(np.zeros(2), 2 * np.eye(2), np.zeros((2, 2)))
    assert not validate_channel(noiseless_amplifier).ok


def test_compose_losses():
    composed = compose_channels(GaussianChannel.loss(0.5), GaussianChannel.loss(0.5))
    expected = GaussianChannel.loss(0.25)
    np.testing.assert_allclose(composed.x_mat, expected.x_mat)
    np.testing.assert_allclose(composed.y_mat, expected.y_mat)


def test_apply_rejects_invalid_state():
    bad = GaussianState(np.zeros(2), np.eye(2) / 4)
    with pytest.raises(InvalidStateError):
        apply_gaussian_channel(bad, GaussianChannel.identity())


def test_mode_mismatch():
    with pytest.raises(ShapeError):
        apply_gaussian_channel(GaussianState.vacuum(2), GaussianChannel.identity(1))


def test_half_space_symmetric():
    prob = half_space_probability(
        GaussianState.vacuum(),
        GaussianChannel.identity(),
        HalfSpaceEffect([1.0, 0.0], 0.0),
    )
    assert prob == pytest.approx(0.5)


def test_half_space_shifted_mean():
    state = GaussianState.coherent(3.0)
    prob = half_space_probability(
        state, GaussianChannel.identity(), HalfSpaceEffect([1.0, 0.0], 0.0)
    )
    assert prob > 0.999


def test_singular_density():
    with pytest.raises(SingularityError):
        gaussian_density([0.0, 0.0], np.zeros((2, 2)), [0.0, 0.0])


def test_random_symplectic(rng):
    for n in (1, 3):
        assert validate_symplectic(random_symplectic(n, rng))


def test_random_state_energy(rng):
    for _ in range(10):
        state = random_gaussian_state(2, 1.5, rng)
        assert validate_state(state).ok
        assert np.linalg.norm(state.mean) <= 1.5 + 1e-12
        assert np.trace(state.cov) - state.n <= 1.5 + 1e-9


def test_random_instance_reproducible():
    state, ch, eff = random_physical_instance(2, 1.0, seed=11)
    state2, ch2, eff2 = random_physical_instance(2, 1.0, seed=11)
    np.testing.assert_array_equal(state.cov, state2.cov)
    np.testing.assert_array_equal(ch.x_mat, ch2.x_mat)
    np.testing.assert_array_equal(eff.outcome, eff2.outcome)
    assert validate_state(state).ok
    assert validate_channel(ch).ok
    assert 0.0 <= gaussian_effect_probability(state, ch, eff) <= 1.0


def test_effect_probability_above_one():
    # an effect narrower than the vacuum overshoots 1 for the vacuum state
    vacuum, identity = GaussianState.vacuum(), GaussianChannel.identity()
    log = ClampLog()
    slightly = GeneralDyneEffect([0.0, 0.0], 0.4999995 * np.eye(2))
    assert gaussian_effect_probability(vacuum, identity, slightly, log) == 1.0
    assert log.count == 1
    assert log.largest > 1.0
    with pytest.raises(EngineError):
        gaussian_effect_probability(vacuum, identity, GeneralDyneEffect([0.0, 0.0], 0.4 * np.eye(2)))
