import math
import numpy as np
import pytest
from cvlearn.exceptions import (
    ComponentOverflowError,
    InvalidStateError,
    UndefinedStateError,
    ValidationError,
)
from cvlearn.gg import (
    GGChannel,
    GGEffect,
    GGState,
    gg_apply_channel,
    gg_b_constants,
    gg_decompose_terms,
    gg_outcome_probability,
    gg_photocount_probability,
    gg_photon_number_distribution,
    gg_wigner_eval,
    gkp_b_constants,
    lattice_geometry,
    make_cat_state,
    make_fock_approx,
    make_gkp_state,
)
from cvlearn.learner import HypothesisParam
from cvlearn.photodetection import PhotoCountEffect
from cvlearn.symplectic import (
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    gaussian_effect_probability,
    random_gaussian_channel,
    random_physical_instance,
    random_symplectic,
)

EVEN_CAT_VACUUM = 2 * math.exp(-1) / (1 + math.exp(-2))
ODD_CAT_ONE_PHOTON = 2 * math.exp(-1) / (1 - math.exp(-2))


def test_gaussian_triples_agree_with_gaussian_engine():
    for seed in range(3):
        state, ch, eff = random_physical_instance(1, 1.0, seed)
        assert gg_outcome_probability(state, ch, eff) == pytest.approx(
            gaussian_effect_probability(state, ch, eff), abs=1e-12
        )


def test_cat_state_is_normalized():
    for sign in (1, -1):
        cat = make_cat_state(1.0, sign)
        assert len(cat) == 4
        assert cat.coefficient_sum == pytest.approx(1.0)
        assert cat.validate().ok


def test_even_cat_vacuum_overlap():
    cat = make_cat_state(1.0, 1)
    assert gg_outcome_probability(cat, None, None) == pytest.approx(EVEN_CAT_VACUUM)
    assert gg_photocount_probability(
        cat, None, PhotoCountEffect.single(0)
    ) == pytest.approx(EVEN_CAT_VACUUM)


def test_cat_parity():
    even = gg_photon_number_distribution(make_cat_state(1.0, 1), None, 5)
    odd = gg_photon_number_distribution(make_cat_state(1.0, -1), None, 5)
    np.testing.assert_allclose(even[1::2], 0.0, atol=1e-12)
    np.testing.assert_allclose(odd[::2], 0.0, atol=1e-12)
    assert odd[1] == pytest.approx(ODD_CAT_ONE_PHOTON)


def test_cat_wigner_negative_at_origin():
    assert gg_wigner_eval(make_cat_state(1.5, -1), [0.0, 0.0]) < 0


def test_odd_cat_undefined_at_zero():
    with pytest.raises(UndefinedStateError):
        make_cat_state(0.0, -1)


def test_fock_approximation():
    state = make_fock_approx(1, 0.1)
    prob = gg_photocount_probability(state, None, PhotoCountEffect.single(1, cutoff=3))
    assert prob > 0.999
    with pytest.raises(ValidationError):
        make_fock_approx(2, 1.0)


def test_gkp_state():
    state = make_gkp_state(0.1, 2)
    assert len(state) == 9
    assert state.coefficient_sum == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValidationError):
        make_gkp_state(0.6, 2)


def test_decomposition_recomposes():
    cat = make_cat_state(0.8, 1)
    effect = GeneralDyneEffect.heterodyne([0.3, -0.2])
    ch = GaussianChannel.loss(0.7)
    terms = gg_decompose_terms(cat, ch, effect)
    assert 2 * math.pi * terms.recompose() == pytest.approx(
        gg_outcome_probability(cat, ch, effect)
    )
    assert terms.weights.sum() == pytest.approx(1.0)


def test_channel_mixture():
    state = GaussianState.coherent(0.5)
    effect = GeneralDyneEffect.heterodyne([0.0, 0.0])
    first, second = GaussianChannel.loss(0.9), GaussianChannel.loss(0.4)
    mixture = GGChannel.mixture([0.25, 0.75], [first, second])
    expected = 0.25 * gaussian_effect_probability(
        state, first, effect
    ) + 0.75 * gaussian_effect_probability(state, second, effect)
    assert gg_outcome_probability(state, mixture, effect) == pytest.approx(expected)


def test_apply_channel_component_count():
    mixture = GGChannel.mixture([0.5, 0.5], [GaussianChannel.identity()] * 2)
    out = gg_apply_channel(make_cat_state(1.0), mixture)
    assert len(out) == 8
    assert out.coefficient_sum == pytest.approx(1.0)


def test_component_limit():
    cat = make_cat_state(1.0)
    with pytest.raises(ComponentOverflowError):
        GGState(cat.coeffs, cat.means, cat.covs, component_limit=3)


def test_invalid_coefficients():
    cat = make_cat_state(1.0)
    doubled = GGState(2 * cat.coeffs, cat.means, cat.covs)
    assert not doubled.validate().ok


def test_non_hermitian_triple():
    state = GGState([1.0], [[0.0, 0.0]], [np.eye(2) / 2])
    effect = GGEffect([1j], [[0.0, 0.0]], [np.eye(2) / 2])
    with pytest.raises(InvalidStateError):
        gg_outcome_probability(state, None, effect)


def test_b_constants():
    constants = gg_b_constants(make_cat_state(1.0))
    assert constants.b2 >= 1.0
    assert constants.b3 > 0
    assert constants.ratio == pytest.approx(constants.b2 / constants.b3)


@pytest.mark.parametrize("seed", range(100))
def test_fixed_coefficient_decomposition_recomposes(seed):
    rng = np.random.default_rng(seed)
    template = make_cat_state(rng.uniform(0.3, 1.5), int(rng.choice([-1, 1])))
    state = HypothesisParam.random("gg-fixed-coeff", 1, rng, template=template).decode()
    ch = random_gaussian_channel(1, 0.5, rng)
    effect = GGEffect.admissible(
        make_cat_state(1.0, 1), random_symplectic(1, rng, max_squeezing=0.3), rng.uniform(-1, 1, 2)
    )
    terms = gg_decompose_terms(state, ch, effect)
    assert 2 * math.pi * terms.recompose() == pytest.approx(
        gg_outcome_probability(state, ch, effect), abs=1e-9
    )


def test_gkp_superposition_is_kept():
    state = make_gkp_state(0.1, 4)
    assert state.superposition is not None
    assert state.superposition.weights.size == 5
    assert len(state) == 25


@pytest.mark.parametrize("epsilon", [0.05, 0.1])
def test_gkp_lattice_geometry(epsilon):
    for lattice in (2, 4, 8):
        lam_min, m_max = lattice_geometry(make_gkp_state(epsilon, lattice))
        assert lam_min >= 0.5 * epsilon * (1 - 1e-9)
        assert m_max <= (1 - 2 * epsilon) * 2 * lattice


def test_gkp_constants_scale_with_lattice():
    constants = {lattice: gkp_b_constants(0.1, lattice) for lattice in (2, 4, 8)}
    for small, large in ((2, 4), (4, 8)):
        b1_growth = constants[large].b1 / constants[small].b1
        b2_growth = constants[large].b2 / constants[small].b2
        assert 0.5 <= b1_growth / 2 <= 2
        assert 0.5 <= b2_growth / 8 <= 2
    assert constants[4].b1 == pytest.approx(113.4370464576, rel=1e-6)
    assert constants[4].b2 == pytest.approx(141.796308, rel=1e-6)
    assert constants[4].b3 == pytest.approx(gg_b_constants(make_gkp_state(0.1, 4)).b3)


def test_separated_cat_coefficient_mass():
    assert gg_b_constants(make_cat_state(3.0, -1)).b2 == pytest.approx(1.0, abs=1e-3)


def test_fock_approx_coefficient_mass_grows_as_ring_shrinks():
    masses = [gg_b_constants(make_fock_approx(2, r)).b2 for r in (0.4, 0.2, 0.1)]
    assert masses[0] < masses[1] < masses[2]
