import math
import pytest
from cvlearn.bounds import (
    b_tilde,
    covering_bound,
    gg_covering_bound,
    pdim_upper_bound,
    poly_pdim,
    sample_complexity_bound,
)
from cvlearn.exceptions import UnsupportedClassError, ValidationError
from cvlearn.gg import GGConstraintConstants


@pytest.mark.parametrize(
    "tag,kwargs,expected",
    [
        ("f_d", {}, 27.51),
        ("f_quad", {}, 51.70),
        ("f_p", {"K": 5}, 71.29),
    ],
)
def test_single_mode_pdim(tag, kwargs, expected):
    assert pdim_upper_bound(tag, 1, **kwargs) == pytest.approx(expected, abs=0.01)


def test_composite_pdim():
    f_g = pdim_upper_bound("f_g", 2)
    assert f_g == pytest.approx(pdim_upper_bound("f_quad", 2) + 2 * pdim_upper_bound("f_d", 2))
    assert pdim_upper_bound("f_g", 2, ell=3) == pytest.approx(3 * f_g)
    assert pdim_upper_bound("F_GP", 1, K=2) > pdim_upper_bound("f_g", 1)
    assert pdim_upper_bound("f_const", 4) == 1.0


def test_pdim_errors():
    with pytest.raises(UnsupportedClassError):
        pdim_upper_bound("f_gg", 1)
    with pytest.raises(UnsupportedClassError):
        pdim_upper_bound("f_unknown", 1)
    with pytest.raises(ValidationError):
        pdim_upper_bound("f_p", 1)
    with pytest.raises(ValidationError):
        pdim_upper_bound("f_d", 0)


def test_poly_pdim():
    assert poly_pdim(3, 2) == pytest.approx(6 * math.log2(24))


def test_covering_bound():
    assert covering_bound(1, 1.0, 0.5, 1) == pytest.approx(math.log2(4 * math.e))
    assert covering_bound(20, 1.0, 0.5, 1) == 0.0
    with pytest.raises(ValidationError):
        covering_bound(1, 1.0, 0.5, 1, formula="gg")
    with pytest.raises(ValidationError):
        covering_bound(1, 1.0, 0.0, 1)


def test_gg_covering_bound_grows_with_k():
    constants = GGConstraintConstants(b1=1.0, b2=2.0, b3=1.0)
    assert b_tilde(constants) == pytest.approx(math.log2(22))
    small = gg_covering_bound(1, constants, 0.5, 10)
    large = gg_covering_bound(1, constants, 0.5, 1000)
    assert 0 < small < large


def test_gaussian_single_mode_value():
    result = sample_complexity_bound("g", 1, 0.1, 1.0)
    assert result.dimension == pytest.approx(1.0)
    assert result.T == pytest.approx(100 * math.log2(10) ** 2)
    assert result.growth == "polynomial"


def test_photodetection_cutoff_doubling():
    small = sample_complexity_bound("gp", 1, 0.1, 1.0, K=2)
    large = sample_complexity_bound("gp", 1, 0.1, 1.0, K=4)
    assert large.T / small.T == pytest.approx(1.5)


def test_measurement_learning_is_exponential():
    result = sample_complexity_bound("gp-measurement", 2, 0.1, 0.05, K=1)
    assert result.dimension == 4
    assert "exponential" in result.growth
    three = sample_complexity_bound("gp-measurement", 3, 0.1, 0.05, K=1)
    assert three.dimension == 8


def test_encoding_order_multiplies_dimension():
    plain = sample_complexity_bound("g", 2, 0.1, 0.05)
    encoded = sample_complexity_bound("g", 2, 0.1, 0.05, ell=3)
    assert encoded.dimension == pytest.approx(3 * plain.dimension)
    assert sample_complexity_bound("g", 2, 0.1, 0.05, ell=0).dimension == plain.dimension


def test_gg_setting():
    with pytest.raises(ValidationError):
        sample_complexity_bound("gg", 1, 0.1, 0.05)
    constants = GGConstraintConstants(b1=1.0, b2=2.0, b3=1.0)
    result = sample_complexity_bound("gg", 1, 0.1, 0.05, constants=constants)
    assert result.terms["B"] == pytest.approx(2.0)
    assert result.terms["B_tilde"] == pytest.approx(math.log2(22))
    loose = sample_complexity_bound("gg", 1, 0.1, 0.05, constants=constants, nu=0.5)
    assert loose.T > result.T


def test_agnostic_needs_margin():
    with pytest.raises(ValidationError):
        sample_complexity_bound("agnostic", 1, 0.1, 0.05)
    assert sample_complexity_bound("agnostic", 1, 0.1, 0.05, gamma=0.1).T > 0


def test_bound_decreases_with_eps():
    loose = sample_complexity_bound("g", 2, 0.2, 0.05, dimension="proof")
    tight = sample_complexity_bound("g", 2, 0.05, 0.05, dimension="proof")
    assert tight.T > loose.T
    assert loose.dimension == pytest.approx(pdim_upper_bound("f_g", 2))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"setting": "quantum"},
        {"eps": 1.5},
        {"delta": 0.0},
        {"nu": 2.0},
        {"dimension": "loose"},
    ],
)
def test_invalid_arguments(kwargs):
    args = {"setting": "g", "n": 1, "eps": 0.1, "delta": 0.05, **kwargs}
    with pytest.raises(ValidationError):
        sample_complexity_bound(**args)


SETTING_ARGS = {
    "g": {},
    "gp": {"K": 2},
    "gg": {"constants": GGConstraintConstants(b1=1.0, b2=2.0, b3=1.0)},
    "gp-measurement": {"K": 1},
    "agnostic": {"gamma": 0.1},
}


@pytest.mark.parametrize("setting", sorted(SETTING_ARGS))
def test_bound_grows_with_modes(setting):
    Ts = [
        sample_complexity_bound(setting, n, 0.1, 0.01, **SETTING_ARGS[setting]).T
        for n in range(1, 7)
    ]
    assert all(a < b for a, b in zip(Ts, Ts[1:]))


@pytest.mark.parametrize("setting", sorted(SETTING_ARGS))
def test_bound_grows_as_eps_shrinks(setting):
    Ts = [
        sample_complexity_bound(setting, 2, eps, 0.01, **SETTING_ARGS[setting]).T
        for eps in (0.4, 0.2, 0.1, 0.05)
    ]
    assert all(a < b for a, b in zip(Ts, Ts[1:]))


def test_bound_grows_with_cutoff():
    Ts = [sample_complexity_bound("gp", 2, 0.1, 0.01, K=K).T for K in (1, 2, 4, 8)]
    assert all(a < b for a, b in zip(Ts, Ts[1:]))


def test_bound_grows_with_coefficient_mass():
    Ts = [
        sample_complexity_bound(
            "gg", 1, 0.1, 0.01, constants=GGConstraintConstants(b1=1.0, b2=b2, b3=1.0)
        ).T
        for b2 in (1.0, 2.0, 4.0, 8.0)
    ]
    assert all(a < b for a, b in zip(Ts, Ts[1:]))


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_gaussian_bound_at_least_quadruples(n):
    single = sample_complexity_bound("g", n, 0.1, 0.01).T
    double = sample_complexity_bound("g", 2 * n, 0.1, 0.01).T
    assert double >= 4 * single
