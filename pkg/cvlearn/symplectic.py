"""Gaussian states, channels and general-dyne effects in the quadrature picture.

Conventions: hbar = 1, quadratures ordered (x1, p1, x2, p2, ...), the vacuum has
covariance I/2 and a coherent amplitude alpha sits at mean sqrt(2) (Re alpha, Im alpha).
"""
import typing as ty
import attrs
import numpy as np
import scipy.linalg
import scipy.stats
from typing_extensions import Self
from .exceptions import (
    EngineError,
    InvalidStateError,
    ShapeError,
    SingularityError,
    ValidationError,
)
from .utils import logger, as_real_vector, as_real_matrix

TOL = 1e-9
CONDITION_LIMIT = 1e12

# Probabilities may leave [0, 1] by this much through round-off before it is an error
CLAMP_TOLERANCE = 1e-6


@attrs.define
class ClampLog:
    """Counts probabilities that left [0, 1] through round-off and were clamped back"""

    count: int = 0
    most_negative: float = 0.0
    largest: float = 1.0

    def clamp(self, values: ty.Any, what: str = "probability") -> np.ndarray:
        values = np.asarray(values, dtype=float)
        lowest = float(np.min(values)) if values.size else 0.0
        highest = float(np.max(values)) if values.size else 0.0
        if lowest < -CLAMP_TOLERANCE or highest > 1 + CLAMP_TOLERANCE:
            raise EngineError(
                f"Computed {what} outside [0, 1] beyond round-off: "
                f"range [{lowest:.3g}, {highest:.3g}]"
            )
        outside = (values < 0) | (values > 1)
        if outside.any():
            self.count += int(outside.sum())
            self.most_negative = min(self.most_negative, lowest)
            self.largest = max(self.largest, highest)
            logger.warning(
                "Clamped %d %s values into [0, 1] (range [%.3g, %.3g])",
                int(outside.sum()),
                what,
                lowest,
                highest,
            )
        return np.clip(values, 0.0, 1.0)  # type: ignore[no-any-return]


def symplectic_form(n: int) -> np.ndarray:
    "Block-diagonal symplectic form with [[0, 1], [-1, 0]] blocks"
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@attrs.frozen(eq=False)
class SymplecticForm:

    n: int = attrs.field(validator=attrs.validators.gt(0))

    @property
    def omega(self) -> np.ndarray:
        return symplectic_form(self.n)


@attrs.frozen
class Diagnostic:
    """Result of a validity check

    Parameters
    ----------
    ok : bool
        whether the object passed
    min_eigenvalue : float
        smallest eigenvalue of the Hermitian matrix that has to be positive
    message : str
        reason for failure, empty when ok
    """

    ok: bool
    min_eigenvalue: float
    message: str = ""

    def to_dict(self) -> dict[str, ty.Any]:
        return {
            "ok": self.ok,
            "min_eigenvalue": self.min_eigenvalue,
            "message": self.message,
        }


def _check_square(mat: np.ndarray, size: int, name: str) -> None:
    if mat.shape != (size, size):
        raise ShapeError(f"{name} has shape {mat.shape}, expected ({size}, {size})")


def _quadrature_count(vec: np.ndarray, name: str) -> int:
    if vec.ndim != 1 or vec.size == 0 or vec.size % 2:
        raise ShapeError(
            f"{name} must be a non-empty vector of even length (two quadratures per "
            f"mode), found shape {vec.shape}"
        )
    return vec.size


@attrs.frozen(eq=False)
class GaussianState:
    """An n-mode Gaussian state described by its first and second moments"""

    mean: np.ndarray = attrs.field(converter=as_real_vector)
    cov: np.ndarray = attrs.field(converter=as_real_matrix)

    def __attrs_post_init__(self) -> None:
        _check_square(self.cov, _quadrature_count(self.mean, "mean"), "cov")

    @property
    def n(self) -> int:
        return self.mean.size // 2

    @classmethod
    def vacuum(cls, n: int = 1) -> Self:
        return cls(np.zeros(2 * n), np.eye(2 * n) / 2)

    @classmethod
    def coherent(cls, alpha: complex | ty.Sequence[complex]) -> Self:
        alphas = np.atleast_1d(np.asarray(alpha, dtype=complex))
        return cls(amplitudes_to_mean(alphas), np.eye(2 * alphas.size) / 2)

    @classmethod
    def squeezed(cls, r: float, phi: float = 0.0, alpha: complex = 0.0) -> Self:
        """Single-mode squeezed (and optionally displaced) vacuum, r > 0 squeezes x
        when phi = 0"""
        rot = rotation(phi / 2)
        cov = rot @ np.diag([np.exp(-2 * r), np.exp(2 * r)]) @ rot.T / 2
        return cls(amplitudes_to_mean([alpha]), cov)

    @classmethod
    def thermal(cls, nbar: float | ty.Sequence[float]) -> Self:
        nbars = np.atleast_1d(np.asarray(nbar, dtype=float))
        return cls(np.zeros(2 * nbars.size), np.diag(np.repeat(nbars + 0.5, 2)))

    @classmethod
    def two_mode_squeezed(cls, r: float) -> Self:
        c, s = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
        z = np.diag([1.0, -1.0])
        cov = np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
        return cls(np.zeros(4), cov)

    def tensor(self, other: "GaussianState") -> "GaussianState":
        return GaussianState(
            np.concatenate([self.mean, other.mean]),
            scipy.linalg.block_diag(self.cov, other.cov),
        )

    @property
    def mean_photon_number(self) -> float:
        return float((np.trace(self.cov) + self.mean @ self.mean - self.n) / 2)

    @property
    def photon_number_variance(self) -> float:
        "Variance of the total photon number operator"
        return float(
            np.trace(self.cov @ self.cov) / 2
            - self.n / 4
            + self.mean @ self.cov @ self.mean
        )


@attrs.frozen(eq=False)
class GaussianChannel:
    """Gaussian CPTP map m -> X m + d, V -> X V X^T + Y"""

    disp: np.ndarray = attrs.field(converter=as_real_vector)
    x_mat: np.ndarray = attrs.field(converter=as_real_matrix)
    y_mat: np.ndarray = attrs.field(converter=as_real_matrix)

    def __attrs_post_init__(self) -> None:
        size = _quadrature_count(self.disp, "disp")
        _check_square(self.x_mat, size, "x_mat")
        _check_square(self.y_mat, size, "y_mat")

    @property
    def n(self) -> int:
        return self.disp.size // 2

    @classmethod
    def identity(cls, n: int = 1) -> Self:
        return cls(np.zeros(2 * n), np.eye(2 * n), np.zeros((2 * n, 2 * n)))

    @classmethod
    def loss(cls, eta: float, nbar: float = 0.0, n: int = 1) -> Self:
        "Thermal-loss channel of transmissivity eta (pure loss for nbar = 0)"
        if not 0.0 <= eta <= 1.0:
            raise ValidationError(f"Transmissivity must be in [0, 1], found {eta}")
        return cls(
            np.zeros(2 * n),
            np.sqrt(eta) * np.eye(2 * n),
            (1 - eta) * (nbar + 0.5) * np.eye(2 * n),
        )

    @classmethod
    def additive_noise(cls, variance: float, n: int = 1) -> Self:
        return cls(np.zeros(2 * n), np.eye(2 * n), variance * np.eye(2 * n))

    @classmethod
    def unitary(cls, symplectic: np.ndarray, disp: ty.Any = None) -> Self:
        symplectic = as_real_matrix(symplectic)
        if disp is None:
            disp = np.zeros(symplectic.shape[0])
        return cls(disp, symplectic, np.zeros_like(symplectic))

    @classmethod
    def displacement(cls, disp: ty.Any) -> Self:
        disp = as_real_vector(disp)
        return cls(disp, np.eye(disp.size), np.zeros((disp.size, disp.size)))

    def then(self, after: "GaussianChannel") -> "GaussianChannel":
        "The channel applying `self` first and `after` second"
        return compose_channels(after, self)

    def tensor(self, other: "GaussianChannel") -> "GaussianChannel":
        return GaussianChannel(
            np.concatenate([self.disp, other.disp]),
            scipy.linalg.block_diag(self.x_mat, other.x_mat),
            scipy.linalg.block_diag(self.y_mat, other.y_mat),
        )


@attrs.frozen(eq=False)
class GeneralDyneEffect:
    """General-dyne measurement operator with outcome m' and covariance V'"""

    outcome: np.ndarray = attrs.field(converter=as_real_vector)
    cov: np.ndarray = attrs.field(converter=as_real_matrix)

    def __attrs_post_init__(self) -> None:
        _check_square(self.cov, _quadrature_count(self.outcome, "outcome"), "cov")

    @property
    def n(self) -> int:
        return self.outcome.size // 2

    @classmethod
    def heterodyne(cls, outcome: ty.Any) -> Self:
        outcome = as_real_vector(outcome)
        return cls(outcome, np.eye(outcome.size) / 2)

    @classmethod
    def homodyne(cls, outcome: ty.Any, squeezing: float = 3.0, phi: float = 0.0) -> Self:
        "Finitely squeezed single-mode homodyne effect measuring the rotated x quadrature"
        rot = rotation(phi)
        cov = rot @ np.diag([np.exp(-2 * squeezing), np.exp(2 * squeezing)]) @ rot.T / 2
        return cls(outcome, cov)

    def tensor(self, other: "GeneralDyneEffect") -> "GeneralDyneEffect":
        return GeneralDyneEffect(
            np.concatenate([self.outcome, other.outcome]),
            scipy.linalg.block_diag(self.cov, other.cov),
        )


@attrs.frozen(eq=False)
class HalfSpaceEffect:
    """Binary readout of a general-dyne measurement: success when the outcome lies on
    the positive side of the hyperplane direction . r = threshold"""

    direction: np.ndarray = attrs.field(converter=as_real_vector)
    threshold: float = attrs.field(default=0.0, converter=float)
    cov: np.ndarray = attrs.field(default=None)

    def __attrs_post_init__(self) -> None:
        size = _quadrature_count(self.direction, "direction")
        if self.cov is None:
            object.__setattr__(self, "cov", np.eye(size) / 2)
        else:
            object.__setattr__(self, "cov", as_real_matrix(self.cov))
        _check_square(self.cov, size, "cov")
        if not np.any(self.direction):
            raise ValidationError("Half-space direction must be non-zero")

    @property
    def n(self) -> int:
        return self.direction.size // 2


def amplitudes_to_mean(alphas: ty.Sequence[complex]) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=complex)
    return np.sqrt(2) * np.column_stack([alphas.real, alphas.imag]).reshape(-1)


def mean_to_amplitudes(mean: np.ndarray) -> np.ndarray:
    pairs = np.asarray(mean).reshape(-1, 2)
    return (pairs[:, 0] + 1j * pairs[:, 1]) / np.sqrt(2)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def passive_symplectic(unitary: np.ndarray) -> np.ndarray:
    """Orthogonal symplectic matrix of the passive transformation a -> U a"""
    unitary = np.asarray(unitary, dtype=complex)
    n = unitary.shape[0]
    out = np.empty((2 * n, 2 * n))
    out[0::2, 0::2] = unitary.real
    out[0::2, 1::2] = -unitary.imag
    out[1::2, 0::2] = unitary.imag
    out[1::2, 1::2] = unitary.real
    return out


def squeezer(r: ty.Sequence[float]) -> np.ndarray:
    r = np.atleast_1d(np.asarray(r, dtype=float))
    return np.diag(np.exp(np.stack([-r, r], axis=1).reshape(-1)))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 1:
        return np.exp(1j * rng.uniform(0, 2 * np.pi, (1, 1)))  # type: ignore[no-any-return]
    return scipy.stats.unitary_group.rvs(n, random_state=rng)  # type: ignore[no-any-return]


def random_symplectic(
    n: int, rng: np.random.Generator, max_squeezing: float = 0.5
) -> np.ndarray:
    "Random symplectic matrix in the Bloch-Messiah form O1 Z(r) O2"
    o1, o2 = (passive_symplectic(random_unitary(n, rng)) for _ in range(2))
    r = rng.uniform(0, max_squeezing, n)
    return o1 @ squeezer(r) @ o2  # type: ignore[no-any-return]


def _hermitian_min_eigenvalue(mat: np.ndarray) -> float:
    herm = (mat + mat.conj().T) / 2
    return float(np.linalg.eigvalsh(herm)[0])


def _symmetry_defect(mat: np.ndarray) -> float:
    return float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0


def _covariance_diagnostic(cov: np.ndarray, tol: float, name: str) -> Diagnostic:
    n = cov.shape[0] // 2
    min_eig = _hermitian_min_eigenvalue(cov + 0.5j * symplectic_form(n))
    if _symmetry_defect(cov) > tol:
        return Diagnostic(False, min_eig, f"{name} is not symmetric")
    if min_eig < -tol:
        return Diagnostic(
            False, min_eig, f"{name} violates the uncertainty principle ({min_eig:.3g})"
        )
    return Diagnostic(True, min_eig)


def validate_state(state: GaussianState, tol: float = TOL) -> Diagnostic:
    """Checks V + (i/2) Omega >= 0, reporting the smallest eigenvalue"""
    return _covariance_diagnostic(state.cov, tol, "covariance")


def validate_effect(effect: GeneralDyneEffect, tol: float = TOL) -> Diagnostic:
    return _covariance_diagnostic(effect.cov, tol, "effect covariance")


def validate_channel(ch: GaussianChannel, tol: float = TOL) -> Diagnostic:
    """Checks the complete-positivity condition Y + (i/2)(Omega - X Omega X^T) >= 0"""
    omega = symplectic_form(ch.n)
    min_eig = _hermitian_min_eigenvalue(
        ch.y_mat + 0.5j * (omega - ch.x_mat @ omega @ ch.x_mat.T)
    )
    if _symmetry_defect(ch.y_mat) > tol:
        return Diagnostic(False, min_eig, "noise matrix Y is not symmetric")
    if min_eig < -tol:
        return Diagnostic(
            False, min_eig, f"channel is not completely positive ({min_eig:.3g})"
        )
    return Diagnostic(True, min_eig)


def validate_symplectic(mat: np.ndarray, tol: float = 1e-8) -> bool:
    omega = symplectic_form(mat.shape[0] // 2)
    return bool(np.allclose(mat @ omega @ mat.T, omega, atol=tol))


def _require(diag: Diagnostic, what: str, error: type[ValidationError]) -> None:
    if not diag.ok:
        raise error(f"Invalid {what}: {diag.message}")


def _require_same_modes(*objs: ty.Any) -> None:
    modes = {o.n for o in objs}
    if len(modes) != 1:
        raise ShapeError(f"Mode counts differ between arguments: {sorted(modes)}")


def apply_gaussian_channel(
    state: GaussianState, ch: GaussianChannel, validate: bool = True
) -> GaussianState:
    """Returns the output state (X m + d, X V X^T + Y)"""
    _require_same_modes(state, ch)
    if validate:
        _require(validate_state(state), "state", InvalidStateError)
        _require(validate_channel(ch), "channel", ValidationError)
    cov = ch.x_mat @ state.cov @ ch.x_mat.T + ch.y_mat
    return GaussianState(ch.x_mat @ state.mean + ch.disp, (cov + cov.T) / 2)


def compose_channels(second: GaussianChannel, first: GaussianChannel) -> GaussianChannel:
    "Single channel equivalent to applying `first` then `second`"
    _require_same_modes(first, second)
    return GaussianChannel(
        second.x_mat @ first.disp + second.disp,
        second.x_mat @ first.x_mat,
        second.x_mat @ first.y_mat @ second.x_mat.T + second.y_mat,
    )


def _checked_cholesky(cov: np.ndarray) -> tuple[np.ndarray, bool]:
    cond = float(np.linalg.cond(cov))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularityError(
            f"Covariance is singular to working precision (condition number {cond:.3g})",
            condition_number=cond,
        )
    try:
        return scipy.linalg.cho_factor(cov)  # type: ignore[no-any-return]
    except np.linalg.LinAlgError as e:
        raise SingularityError(
            f"Covariance is not positive definite: {e}", condition_number=cond
        )


def gaussian_density(mean: ty.Any, cov: ty.Any, point: ty.Any) -> float:
    """Normalized Gaussian exp(-(r-m)^T V^-1 (r-m)/2) / sqrt(det(2 pi V))"""
    mean, cov, point = as_real_vector(mean), as_real_matrix(cov), as_real_vector(point)
    _check_square(cov, mean.size, "cov")
    if point.shape != mean.shape:
        raise ShapeError(f"Point shape {point.shape} does not match mean {mean.shape}")
    factor = _checked_cholesky(cov)
    diff = point - mean
    quad = diff @ scipy.linalg.cho_solve(factor, diff)
    log_det = 2 * np.sum(np.log(np.diag(factor[0])))
    return float(np.exp(-quad / 2 - (log_det + mean.size * np.log(2 * np.pi)) / 2))


def gaussian_density_batch(means: ty.Any, covs: ty.Any, points: ty.Any) -> np.ndarray:
    """Vectorized (and complex-capable) Gaussian densities over leading batch axes.

    The square root of the determinant is taken eigenvalue by eigenvalue with the
    principal branch, so it stays continuous along paths of complex covariances with
    positive-definite real part."""
    means = np.asarray(means)
    covs = np.asarray(covs)
    points = np.asarray(points)
    size = means.shape[-1]
    diff = points - means
    covs_b = np.broadcast_to(covs, diff.shape[:-1] + (size, size))
    sol = np.linalg.solve(covs_b, diff[..., None])[..., 0]
    quad = np.einsum("...i,...i->...", diff, sol)
    return np.exp(-quad / 2) / sqrt_det(2 * np.pi * covs_b)  # type: ignore[no-any-return]


def sqrt_det(mats: np.ndarray) -> np.ndarray:
    "Branch-consistent square root of determinants over leading batch axes"
    eigs = np.linalg.eigvals(mats)
    if np.isrealobj(mats) and np.all(eigs.real > 0):
        return np.sqrt(np.prod(eigs.real, axis=-1))  # type: ignore[no-any-return]
    return np.prod(np.sqrt(eigs.astype(complex)), axis=-1)  # type: ignore[no-any-return]


def gaussian_outcome_density(
    state: GaussianState, ch: GaussianChannel, eff: GeneralDyneEffect
) -> float:
    """Outcome density G_{m_out, V_out + V'}(m') of a general-dyne measurement"""
    _require_same_modes(state, ch, eff)
    _require(validate_effect(eff), "effect", ValidationError)
    out = apply_gaussian_channel(state, ch)
    return gaussian_density(out.mean, out.cov + eff.cov, eff.outcome)


def gaussian_effect_probability(
    state: GaussianState,
    ch: GaussianChannel,
    eff: GeneralDyneEffect,
    clamp_log: ClampLog | None = None,
) -> float:
    """Probability tr(M rho_out) of the binary effect M, i.e. (2 pi)^n times the
    outcome density"""
    prob = (2 * np.pi) ** state.n * gaussian_outcome_density(state, ch, eff)
    return float((clamp_log or ClampLog()).clamp([prob])[0])


def half_space_probability(
    state: GaussianState, ch: GaussianChannel, eff: HalfSpaceEffect
) -> float:
    """Probability that the general-dyne outcome lands on the positive side of the
    effect's hyperplane"""
    _require_same_modes(state, ch, eff)
    out = apply_gaussian_channel(state, ch)
    u = eff.direction
    spread = float(np.sqrt(u @ (out.cov + eff.cov) @ u))
    return float(scipy.stats.norm.cdf((u @ out.mean - eff.threshold) / spread))


def _random_covariance(
    n: int, rng: np.random.Generator, excess_bound: float
) -> np.ndarray:
    symp = random_symplectic(n, rng)
    thermal = rng.uniform(0, 1, n)
    scale = 1.0
    for _ in range(64):
        cov = symp @ np.diag(np.repeat(0.5 + scale * thermal, 2)) @ symp.T
        if np.trace(cov) - n <= excess_bound:
            break
        # halve the squeezing: (S S^T)^(1/4) is the positive symplectic with r/2
        symp = np.real(scipy.linalg.fractional_matrix_power(symp @ symp.T, 0.25))
        scale /= 2
    else:
        cov = np.eye(2 * n) / 2
    return (cov + cov.T) / 2  # type: ignore[no-any-return]


def random_gaussian_state(
    n: int, energy_bound: float, rng: np.random.Generator
) -> GaussianState:
    """Random valid state with ||m|| <= energy_bound and tr V - n <= energy_bound"""
    direction = rng.normal(size=2 * n)
    direction /= np.linalg.norm(direction)
    mean = direction * rng.uniform(0, energy_bound)
    return GaussianState(mean, _random_covariance(n, rng, energy_bound))


def random_gaussian_channel(
    n: int, energy_bound: float, rng: np.random.Generator
) -> GaussianChannel:
    "Random channel X = sqrt(eta) S, Y = (1 - eta) V_E with S symplectic"
    eta = rng.uniform(0.3, 1.0)
    symp = random_symplectic(n, rng, max_squeezing=0.3)
    env = _random_covariance(n, rng, energy_bound)
    disp = rng.normal(scale=min(1.0, energy_bound) / 2, size=2 * n)
    return GaussianChannel(disp, np.sqrt(eta) * symp, (1 - eta) * env)


def random_physical_instance(
    n: int, energy_bound: float, seed: int | None
) -> tuple[GaussianState, GaussianChannel, GeneralDyneEffect]:
    """A valid (state, channel, effect) triple, deterministic per seed.

    Mean vector norms are at most `energy_bound`, as is the noise energy tr V - n of
    every covariance above the vacuum."""
    if n < 1 or energy_bound <= 0:
        raise ValidationError(
            f"Need n >= 1 and energy_bound > 0, found n={n}, energy_bound={energy_bound}"
        )
    rng = np.random.default_rng(seed)
    state = random_gaussian_state(n, energy_bound, rng)
    channel = random_gaussian_channel(n, energy_bound, rng)
    out = apply_gaussian_channel(state, channel, validate=False)
    offset = rng.normal(scale=0.5, size=2 * n)
    outcome = out.mean + offset
    norm = np.linalg.norm(outcome)
    if norm > energy_bound:
        outcome *= energy_bound / norm
    effect = GeneralDyneEffect(outcome, _random_covariance(n, rng, energy_bound))
    logger.debug("Drew random %d-mode instance for seed %s", n, seed)
    return state, channel, effect
