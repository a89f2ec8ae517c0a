import math
import numpy as np
import pytest
from cvlearn.exceptions import CutoffError, UnsupportedChannelError
from cvlearn.fock import (
    cat_density,
    coherent_projector,
    fidelity,
    fock_apply_gaussian_channel,
    fock_from_gaussian,
    fock_from_gg,
    fock_probability,
    fock_projector,
    fock_wigner,
    oracle_probability,
    parity_operator,
)
from cvlearn.gg import (
    GGState,
    gg_outcome_probability,
    make_cat_state,
    make_fock_approx,
    make_gkp_state,
)
from cvlearn.learner import circuit_probability
from cvlearn.photodetection import PhotoCountEffect, fock_elements_from_gaussian
from cvlearn.symplectic import (
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    amplitudes_to_mean,
    random_physical_instance,
)


def test_vacuum_wigner_at_origin():
    rho = fock_from_gaussian(GaussianState.vacuum(), cutoff=10)
    assert fock_wigner(rho, [0.0, 0.0]) == pytest.approx(1 / math.pi)


def test_coherent_density_diagonal():
    rho = fock_from_gaussian(GaussianState.coherent(1.0))
    diag = np.diag(rho.mat).real[:5]
    expected = [math.exp(-1) / math.factorial(k) for k in range(5)]
    np.testing.assert_allclose(diag, expected, atol=1e-9)
    assert rho.trace == pytest.approx(1.0, abs=1e-9)
    assert rho.validate_density().ok


def test_squeezed_density_matches_hermite_elements():
    state = GaussianState.squeezed(0.3, alpha=0.4)
    via_unitaries = fock_from_gaussian(state, cutoff=20)
    via_hermite = fock_elements_from_gaussian(state.mean, state.cov, 19)
    np.testing.assert_allclose(via_unitaries.mat, via_hermite, atol=1e-6)


def test_cat_density_matches_gg_state():
    rho = fock_from_gg(make_cat_state(1.0, -1), cutoff=24)
    assert fidelity(rho, cat_density(1.0, -1, 24)) == pytest.approx(1.0, abs=1e-8)
    parity = fock_probability(rho, parity_operator(1, 24))
    assert parity == pytest.approx(-1.0, abs=1e-8)


def test_cat_without_ket_uses_complex_gaussians():
    cat = make_cat_state(1.0, 1)
    bare = GGState(cat.coeffs, cat.means, cat.covs)
    assert bare.superposition is None
    rho = fock_from_gg(bare, cutoff=24)
    assert fidelity(rho, cat_density(1.0, 1, 24)) == pytest.approx(1.0, abs=1e-8)


def test_coherent_mixture_density():
    means = np.stack([amplitudes_to_mean([0.5]), amplitudes_to_mean([-0.5j])])
    mixture = GGState([0.25, 0.75], means, [np.eye(2) / 2] * 2)
    rho = fock_from_gg(mixture, cutoff=16)
    expected = 0.25 * coherent_projector([0.5], 16).mat + 0.75 * coherent_projector([-0.5j], 16).mat
    np.testing.assert_allclose(rho.mat, expected, atol=1e-9)


def test_loss_channel_on_coherent_state():
    rho = fock_from_gaussian(GaussianState.coherent(1.0), cutoff=24)
    out = fock_apply_gaussian_channel(rho, GaussianChannel.loss(0.5))
    expected = coherent_projector([math.sqrt(0.5)], 24)
    assert fidelity(out, expected) == pytest.approx(1.0, abs=1e-6)


def test_reflecting_channel_unsupported():
    rho = fock_from_gaussian(GaussianState.vacuum(), cutoff=10)
    flip = GaussianChannel(np.zeros(2), np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(UnsupportedChannelError):
        fock_apply_gaussian_channel(rho, flip)


def test_cutoff_too_small():
    with pytest.raises(CutoffError) as excinfo:
        fock_from_gaussian(GaussianState.coherent(2.0), cutoff=3)
    assert excinfo.value.suggested_cutoff > 3


def test_projector_probability():
    rho = fock_from_gaussian(GaussianState.thermal(1.0), cutoff=30)
    assert fock_probability(rho, fock_projector([2], 30)) == pytest.approx(0.125, abs=1e-9)


@pytest.mark.parametrize("seed", range(100))
def test_oracle_agrees_with_gaussian_engine(seed):
    state, ch, eff = random_physical_instance(1, 0.5, seed)
    assert oracle_probability(state, ch, eff) == pytest.approx(
        circuit_probability(state, ch, eff), abs=1e-6
    )


@pytest.mark.parametrize("seed", range(50))
def test_two_mode_oracle_agrees_with_gaussian_engine(seed):
    state, ch, eff = random_physical_instance(2, 0.5, seed)
    assert oracle_probability(state, ch, eff) == pytest.approx(
        circuit_probability(state, ch, eff), abs=1e-6
    )


def test_oracle_agrees_with_gg_engine():
    cat = make_cat_state(1.0, 1)
    effect = GeneralDyneEffect.heterodyne([0.5, 0.2])
    ch = GaussianChannel.loss(0.8)
    assert oracle_probability(cat, ch, effect) == pytest.approx(
        gg_outcome_probability(cat, ch, effect), abs=1e-6
    )


def test_oracle_agrees_on_fock_approximation():
    state = make_fock_approx(2, 0.3)
    effect = GeneralDyneEffect.heterodyne([0.4, -0.7])
    assert oracle_probability(state, None, effect) == pytest.approx(
        gg_outcome_probability(state, None, effect), abs=1e-6
    )


def test_oracle_agrees_on_gkp_state():
    state = make_gkp_state(0.2, 2)
    effect = GeneralDyneEffect.heterodyne([0.5, 0.2])
    assert oracle_probability(state, None, effect, cutoff=40) == pytest.approx(
        gg_outcome_probability(state, None, effect), abs=1e-6
    )


def test_oracle_photocount():
    state = GaussianState.coherent(1.0)
    effect = PhotoCountEffect(2, {(1,): 1.0, (2,): 0.5})
    expected = math.exp(-1) * (1 + 0.25)
    assert oracle_probability(state, None, effect) == pytest.approx(expected, abs=1e-8)


def test_fock_approximation_fidelity_improves_as_ring_shrinks():
    one_photon = fock_projector([1], 20)
    wide = fidelity(fock_from_gg(make_fock_approx(1, 0.2), cutoff=20), one_photon)
    narrow = fidelity(fock_from_gg(make_fock_approx(1, 0.1), cutoff=20), one_photon)
    assert wide < narrow <= 1 + 1e-9
