"""Closed-form complexity bounds: pseudo-dimension upper bounds of the circuit function
classes, covering-number bounds and sample-complexity expressions.

All logarithms are base 2. Asymptotic statements are evaluated with the explicit
constants that appear in their derivations, and sums of classes use the plain sum of
pseudo-dimensions.
"""
import math
import typing as ty
import attrs
from .exceptions import UnsupportedClassError, ValidationError
from .gg import GGConstraintConstants

SETTINGS = ("g", "gp", "gg", "gp-measurement", "agnostic")
DIMENSION_FORMS = ("table", "proof")
COVER_FORMULAS = ("pdim", "gg")


def _need(value: ty.Optional[int], name: str, tag: str) -> int:
    if value is None or value < 1:
        raise ValidationError(f"'{tag}' needs a positive '{name}', found {value}")
    return int(value)


def _f_d(n: int) -> float:
    return 2 * (2 * n**2 + n) * math.log2(24 * n)


def _f_quad(n: int) -> float:
    return 2 * (2 * n**2 + 3 * n) * math.log2(12 * (4 * n - 1))


def _f_p(n: int, K: int) -> float:
    return 2 * (2 * n**2 + 3 * n) * math.log2(28 * n * K)


def _re_f_e(n: int) -> float:
    return 4 * (4 * n**2 + 2 * n) * math.log2(12 * (4 * n + 1))


def _abs_f_d_sq(n: int) -> float:
    return 16 * n**2 * math.log2(48 * n)


def _re_f_d(n: int) -> float:
    return 16 * n**2 * math.log2(24 * n)


def poly_pdim(params: int, order: int) -> float:
    "Polynomials of degree `order` in `params` real parameters: 2 d log(12 l)"
    if params < 1 or order < 1:
        raise ValidationError(f"Need params >= 1 and order >= 1, found {params}, {order}")
    return 2 * params * math.log2(12 * order)


PDIM_TAGS = (
    "f_d",
    "f_quad",
    "f_p",
    "f_g",
    "f_gp",
    "poly",
    "re_f_e",
    "abs_f_d_sq",
    "re_f_d",
    "f_exp",
    "f_im",
    "f_ang",
    "f_const",
    "f_trig",
    "f_gg",
)


def pdim_upper_bound(
    tag: str,
    n: int,
    K: int | None = None,
    ell: int | None = None,
    params: int | None = None,
) -> float:
    """Upper bound on the pseudo-dimension of the class named by `tag`

    Parameters
    ----------
    tag : str
        one of PDIM_TAGS (case-insensitive)
    n : int
        number of modes
    K : int, optional
        photon-number cutoff, needed by "f_p" and "f_gp"
    ell : int, optional
        order of a polynomial encoding composed with "f_g"/"f_gp" (the parameter count
        grows by this factor), or the polynomial order for "poly"
    params : int, optional
        number of real parameters for "poly"

    Raises
    ------
    UnsupportedClassError
        for unknown tags and for "f_gg", which has no finite pseudo-dimension bound and
        is handled through `covering_bound`
    """
    tag = tag.lower()
    if tag not in PDIM_TAGS:
        raise UnsupportedClassError(f"Unknown class tag '{tag}', expected one of {PDIM_TAGS}")
    if tag == "f_gg":
        raise UnsupportedClassError(
            "The GG class has no pseudo-dimension bound, use its covering-number bound"
        )
    if tag == "poly":
        return poly_pdim(_need(params, "params", tag), _need(ell, "ell", tag))
    if n < 1:
        raise ValidationError(f"Need at least one mode, found {n}")
    encoding = max(ell or 1, 1)
    if tag == "f_d":
        return _f_d(n)
    if tag == "f_quad":
        return _f_quad(n)
    if tag == "f_p":
        return _f_p(n, _need(K, "K", tag))
    if tag == "f_g":
        return encoding * (_f_quad(n) + 2 * _f_d(n))
    if tag == "f_gp":
        return encoding * (_f_quad(n) + 2 * _f_d(n) + _f_p(n, _need(K, "K", tag)))
    if tag in ("re_f_e", "f_im"):
        return _re_f_e(n)
    if tag == "abs_f_d_sq":
        return _abs_f_d_sq(n)
    if tag == "re_f_d":
        return _re_f_d(n)
    if tag == "f_exp":
        return _re_f_e(n) + _abs_f_d_sq(n)
    if tag == "f_ang":
        return _re_f_d(n) + _abs_f_d_sq(n)
    if tag == "f_const":
        return 1.0
    # f_trig: cosine is monotone-free but 1-Lipschitz, bounded by its argument class
    return _re_f_e(n) + _re_f_d(n) + _abs_f_d_sq(n) + 1.0


def covering_bound(
    d: float,
    B: float,
    eps: float,
    k: int,
    B_tilde: float | None = None,
    formula: str = "pdim",
) -> float:
    """log2 of the uniform covering number at scale k

    "pdim": d log(2 e B k / (d eps)) for a class of pseudo-dimension d and range [0, B].
    "gg": ceil((2B/eps)^2) d log(2 e k B_tilde / (d eps)) for fixed-coefficient GG
    classes with B = b2/b3.

    Negative values (arguments below one) are clamped to zero.
    """
    if formula not in COVER_FORMULAS:
        raise ValidationError(f"Unknown covering formula '{formula}', expected {COVER_FORMULAS}")
    if eps <= 0 or B <= 0 or k < 1 or d < 1:
        raise ValidationError(
            f"Need eps > 0, B > 0, k >= 1 and d >= 1, found eps={eps}, B={B}, k={k}, d={d}"
        )
    if formula == "pdim":
        return max(0.0, d * math.log2(2 * math.e * B * k / (d * eps)))
    if B_tilde is None or B_tilde <= 0:
        raise ValidationError(f"The GG covering bound needs B_tilde > 0, found {B_tilde}")
    rounds = math.ceil((2 * B / eps) ** 2)
    return max(0.0, rounds * d * math.log2(2 * math.e * k * B_tilde / (d * eps)))


def b_tilde(constants: GGConstraintConstants) -> float:
    "log(2 + (b1 + 9) B), the range constant of the phase classes"
    return math.log2(2 + (constants.b1 + 9) * constants.ratio)


def gg_covering_bound(
    n: int, constants: GGConstraintConstants, eps: float, k: int
) -> float:
    """covering_bound for the fixed-coefficient GG class on n modes with measured
    constraint constants"""
    return covering_bound(
        pdim_upper_bound("f_exp", n),
        constants.ratio,
        eps,
        k,
        B_tilde=b_tilde(constants),
        formula="gg",
    )


def agnostic_bound(d: float, eps: float, gamma: float, delta: float) -> float:
    "(1/eps) (d log^2(d / (gamma eps)) + log(1/delta)), d the fat dimension at gamma/8"
    _check_accuracy(eps, delta, gamma=gamma)
    return (d * math.log2(d / (gamma * eps)) ** 2 + math.log2(1 / delta)) / eps


def prediction_bound(d: float, eps: float, delta: float) -> float:
    "(1/eps^2) (d log^2(1/eps) + log(1/delta)), d the fat dimension at eps/10"
    _check_accuracy(eps, delta)
    return (d * math.log2(1 / eps) ** 2 + math.log2(1 / delta)) / eps**2


def measurement_parameter_count(n: int, K: int) -> int:
    "Weights of a coarse-grained photodetection effect on n modes with cutoff K"
    return (K + 1) ** n


def _check_accuracy(eps: float, delta: float, gamma: float | None = None, nu: float = 1.0) -> None:
    if not 0 < eps < 1:
        raise ValidationError(f"Need 0 < eps < 1, found {eps}")
    if not 0 < delta <= 1:
        raise ValidationError(f"Need 0 < delta <= 1, found {delta}")
    if gamma is not None and not 0 < gamma < 1:
        raise ValidationError(f"Need 0 < gamma < 1, found {gamma}")
    if not 0 < nu <= 1:
        raise ValidationError(f"Need 0 < nu <= 1, found {nu}")


@attrs.frozen
class SampleComplexity:
    """Evaluated sample-complexity bound

    `terms` holds the pieces of the formula so that callers can see exactly what was
    fixed: the effective dimension, the accuracy prefactor and the confidence term.
    """

    setting: str
    n: int
    T: float
    dimension: float
    growth: str
    formula: str
    terms: dict[str, float] = attrs.field(factory=dict)

    def to_dict(self) -> dict[str, ty.Any]:
        return attrs.asdict(self)


def _dimension(setting: str, n: int, K: int | None, form: str) -> float:
    if form not in DIMENSION_FORMS:
        raise ValidationError(f"Unknown dimension form '{form}', expected {DIMENSION_FORMS}")
    if setting == "gp":
        K = _need(K, "K", setting)
        if form == "proof":
            return pdim_upper_bound("f_gp", n, K=K)
        return n**2 * math.log2(2 * n * K)
    if form == "proof":
        return pdim_upper_bound("f_exp" if setting == "gg" else "f_g", n)
    return n**2 * math.log2(2 * n)


def sample_complexity_bound(
    setting: str,
    n: int,
    eps: float,
    delta: float,
    gamma: float | None = None,
    K: int | None = None,
    ell: int | None = None,
    constants: GGConstraintConstants | None = None,
    nu: float = 1.0,
    dimension: str = "table",
) -> SampleComplexity:
    """Number of samples sufficient for learning in the given setting

    Parameters
    ----------
    setting : str
        "g" (Gaussian circuits), "gp" (Gaussian plus photodetection with cutoff K),
        "gg" (fixed-coefficient GG circuits with constraint `constants`),
        "gp-measurement" (learning a photodetection effect, (K+1)^n parameters) or
        "agnostic" (Gaussian class under the generic agnostic bound with margin gamma)
    n : int
        number of modes
    eps, delta : float
        accuracy and confidence
    gamma : float, optional
        margin, required by "agnostic"
    K : int, optional
        photon-number cutoff
    ell : int, optional
        order of a polynomial encoding (task learning), multiplies the dimension
    constants : GGConstraintConstants, optional
        b1, b2, b3 of the GG class
    nu : float
        lower bound on the probability scale, appearing as 1/nu^4
    dimension : str
        "table" uses n^2 log(2n) (n^2 log(2nK) with photodetection) as effective
        dimension, "proof" the pseudo-dimension upper bounds

    Returns
    -------
    SampleComplexity
    """
    if setting not in SETTINGS:
        raise ValidationError(f"Unknown setting '{setting}', expected one of {SETTINGS}")
    if n < 1:
        raise ValidationError(f"Need at least one mode, found {n}")
    _check_accuracy(eps, delta, gamma if setting == "agnostic" else None, nu)
    encoding = max(ell or 1, 1)
    confidence = math.log2(1 / delta)
    growth = "polynomial"
    if setting == "gp-measurement":
        d = float(measurement_parameter_count(n, _need(K, "K", setting)))
        growth = "exponential in the number of modes"
    else:
        d = encoding * _dimension(setting, n, K, dimension)
    if setting == "gg":
        if constants is None:
            raise ValidationError("The 'gg' setting needs b-constants")
        B = constants.ratio
        bt = b_tilde(constants)
        eps_p = nu**2 * eps
        prefactor = d * B**2 / eps_p**4
        log_term = math.log2(2 + B * bt / (eps_p * d))
        confidence_term = confidence / eps_p**2
        T = prefactor * log_term + confidence_term
        terms = {
            "d": d,
            "B": B,
            "B_tilde": bt,
            "eps_prime": eps_p,
            "prefactor": prefactor,
            "log_term": log_term,
            "confidence_term": confidence_term,
        }
        formula = "(d B^2/eps'^4) log(2 + B B~/(eps' d)) + (1/eps'^2) log(1/delta)"
    elif setting == "agnostic":
        assert gamma is not None
        T = agnostic_bound(d, eps, gamma, delta)
        terms = {"d": d, "log_term": math.log2(d / (gamma * eps)) ** 2}
        formula = "(1/eps)(d log^2(d/(gamma eps)) + log(1/delta))"
    else:
        prefactor = 1 / (nu**4 * eps**2)
        log_term = math.log2(1 / (nu * eps)) ** 2
        T = prefactor * (d * log_term + confidence)
        terms = {
            "d": d,
            "prefactor": prefactor,
            "log_term": log_term,
            "dimension_term": d * log_term,
            "confidence_term": confidence,
        }
        formula = "(1/(nu^4 eps^2))(d log^2(1/(nu eps)) + log(1/delta))"
    return SampleComplexity(
        setting=setting, n=n, T=T, dimension=d, growth=growth, formula=formula, terms=terms
    )
