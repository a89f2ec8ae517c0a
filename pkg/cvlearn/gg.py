"""Generalized-Gaussian (GG) states, effects and channels.

A GG object is a complex linear combination of complex Gaussians,
W(r) = sum_i c_i G_{m_i, V_i}(r), where the means and covariances may be complex.
Outcome probabilities are the triple sums

    P = (2 pi)^n sum_{i,j,k} c_i c'_j c''_k G_{X_k m_i + d_k, X_k V_i X_k^T + Y_k + V'_j}(m'_j)

over state components i, effect components j and channel branches k.
"""
import math
import typing as ty
import attrs
import numpy as np
from typing_extensions import Self
from .exceptions import (
    ComponentOverflowError,
    InvalidStateError,
    ShapeError,
    SingularityError,
    UndefinedStateError,
    ValidationError,
)
from .photodetection import PhotoCountEffect, photon_number_diagonal
from .symplectic import (
    CONDITION_LIMIT,
    ClampLog,
    TOL,
    Diagnostic,
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    amplitudes_to_mean,
    sqrt_det,
    symplectic_form,
)
from .utils import CliTyped, logger

COMPONENT_LIMIT = 4096

# Reality of sums of many complex terms is judged relative to their total magnitude
REALITY_TOL = 1e-9
LOG_UNDERFLOW = -700.0


def _complex_array(value: ty.Any) -> np.ndarray:
    return np.asarray(value, dtype=complex)


@attrs.frozen(eq=False)
class GGComponent:

    coeff: complex = attrs.field(converter=complex)
    mean: np.ndarray = attrs.field(converter=_complex_array)
    cov: np.ndarray = attrs.field(converter=_complex_array)


def _check_count(count: int, limit: int) -> None:
    if count > limit:
        raise ComponentOverflowError(
            f"{count} components exceed the configured limit of {limit}"
        )


def _real_array(value: ty.Any) -> np.ndarray:
    return np.asarray(value, dtype=float)


@attrs.frozen(eq=False)
class GaussianSuperposition:
    """Unnormalized ket sum_s w_s D(m_s)|psi_0>, where |psi_0> is the pure zero-mean
    Gaussian with covariance `cov`"""

    weights: np.ndarray = attrs.field(converter=_complex_array)
    means: np.ndarray = attrs.field(converter=_real_array)
    cov: np.ndarray = attrs.field(converter=_real_array)

    def __attrs_post_init__(self) -> None:
        dim = self.cov.shape[0]
        if (
            self.weights.ndim != 1
            or self.means.shape != (self.weights.size, dim)
            or self.cov.shape != (dim, dim)
            or dim % 2
        ):
            raise ShapeError(
                f"Inconsistent superposition arrays: weights {self.weights.shape}, "
                f"means {self.means.shape}, cov {self.cov.shape}"
            )

    @property
    def n(self) -> int:
        return self.cov.shape[0] // 2


@attrs.frozen(eq=False)
class _GGObject:
    """Components stored as stacked arrays: coeffs (N,), means (N, 2n), covs (N, 2n, 2n).

    Objects built from a superposition of displaced pure Gaussians keep it as
    `superposition`, which the Fock-space oracle uses to build the ket directly."""

    coeffs: np.ndarray = attrs.field(converter=_complex_array)
    means: np.ndarray = attrs.field(converter=_complex_array)
    covs: np.ndarray = attrs.field(converter=_complex_array)
    component_limit: int = attrs.field(default=COMPONENT_LIMIT, kw_only=True)
    superposition: GaussianSuperposition | None = attrs.field(default=None, kw_only=True)

    def __attrs_post_init__(self) -> None:
        count = self.coeffs.shape[0] if self.coeffs.ndim == 1 else -1
        if (
            count < 1
            or self.means.ndim != 2
            or self.means.shape[0] != count
            or self.means.shape[1] % 2
            or self.covs.shape != (count,) + (self.means.shape[1],) * 2
        ):
            raise ShapeError(
                f"Inconsistent component arrays: coeffs {self.coeffs.shape}, "
                f"means {self.means.shape}, covs {self.covs.shape}"
            )
        _check_count(count, self.component_limit)

    @property
    def n(self) -> int:
        return self.means.shape[1] // 2

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    @property
    def components(self) -> list[GGComponent]:
        return [GGComponent(c, m, v) for c, m, v in zip(self.coeffs, self.means, self.covs)]

    @classmethod
    def from_components(cls, components: ty.Sequence[GGComponent], **kwargs: ty.Any) -> Self:
        return cls(
            [c.coeff for c in components],
            np.stack([c.mean for c in components]),
            np.stack([c.cov for c in components]),
            **kwargs,
        )

    @property
    def coefficient_sum(self) -> complex:
        return complex(np.sum(self.coeffs))

    @property
    def abs_coefficient_sum(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def tensor(self, other: Self) -> Self:
        "Product object on the modes of `self` followed by those of `other`"
        n1, n2 = 2 * self.n, 2 * other.n
        count = len(self) * len(other)
        _check_count(count, self.component_limit)
        coeffs = np.outer(self.coeffs, other.coeffs).reshape(-1)
        means = np.concatenate(
            [
                np.repeat(self.means, len(other), axis=0),
                np.tile(other.means, (len(self), 1)),
            ],
            axis=1,
        )
        covs = np.zeros((count, n1 + n2, n1 + n2), dtype=complex)
        covs[:, :n1, :n1] = np.repeat(self.covs, len(other), axis=0)
        covs[:, n1:, n1:] = np.tile(other.covs, (len(self), 1, 1))
        return type(self)(coeffs, means, covs, component_limit=self.component_limit)

    def _real_part_diagnostic(self, tol: float) -> Diagnostic | None:
        herm = (self.covs.real + np.swapaxes(self.covs.real, 1, 2)) / 2
        lowest = float(np.min(np.linalg.eigvalsh(herm)))
        if lowest < -tol:
            return Diagnostic(
                False, lowest, f"a component has indefinite Re V ({lowest:.3g})"
            )
        return None

    def _uncertainty_diagnostic(self, tol: float) -> tuple[float, Diagnostic | None]:
        total = np.sum(self.covs, axis=0) + 0.5j * symplectic_form(self.n)
        herm = (total + total.conj().T) / 2
        lowest = float(np.linalg.eigvalsh(herm)[0])
        if lowest < -tol:
            return lowest, Diagnostic(
                False, lowest, f"summed covariances violate uncertainty ({lowest:.3g})"
            )
        return lowest, None

    def _reality_diagnostic(self, points: int, seed: int) -> Diagnostic | None:
        rng = np.random.default_rng(seed)
        spread = 1.0 + float(np.max(np.abs(self.means.real)))
        samples = rng.uniform(-spread, spread, size=(points, 2 * self.n))
        for point in samples:
            try:
                wigner_terms(self, point)
            except InvalidStateError as e:
                return Diagnostic(False, float("nan"), e.msg)
        return None


@attrs.frozen(eq=False)
class GGState(_GGObject):
    """Generalized-Gaussian state, sum of coefficients equal to one"""

    @classmethod
    def from_gaussian(cls, state: GaussianState) -> Self:
        return cls([1.0], state.mean[None, :], state.cov[None, :, :])

    def validate(self, tol: float = TOL, points: int = 100, seed: int = 0) -> Diagnostic:
        total = self.coefficient_sum
        if abs(total - 1) > max(tol, 1e-8 * self.abs_coefficient_sum):
            return Diagnostic(False, float("nan"), f"coefficients sum to {total:.6g}")
        lowest, diag = self._uncertainty_diagnostic(tol)
        return (
            diag
            or self._real_part_diagnostic(tol)
            or self._reality_diagnostic(points, seed)
            or Diagnostic(True, lowest)
        )


@attrs.frozen(eq=False)
class GGEffect(_GGObject):
    """Generalized-Gaussian measurement operator M with tr(M) = sum of coefficients,
    which may be smaller than one"""

    @classmethod
    def from_gaussian(cls, effect: GeneralDyneEffect) -> Self:
        return cls([1.0], effect.outcome[None, :], effect.cov[None, :, :])

    @classmethod
    def from_state(cls, state: "GGState") -> Self:
        "Projector |psi><psi| onto a pure GG state"
        return cls(
            state.coeffs,
            state.means,
            state.covs,
            component_limit=state.component_limit,
            superposition=state.superposition,
        )

    @classmethod
    def admissible(
        cls, state: "GGState", symplectic: np.ndarray, disp: ty.Any = None
    ) -> Self:
        """M(U) = U^dag |psi><psi| U for the Gaussian unitary U acting as
        r -> S r + d, with fixed projection state psi"""
        symplectic = np.asarray(symplectic, dtype=float)
        disp = np.zeros(symplectic.shape[0]) if disp is None else np.asarray(disp)
        inv = np.linalg.inv(symplectic)
        means = (state.means - disp) @ inv.T
        covs = inv @ state.covs @ inv.T
        return cls(state.coeffs, means, covs, component_limit=state.component_limit)

    def validate(self, tol: float = TOL, points: int = 100, seed: int = 0) -> Diagnostic:
        total = self.coefficient_sum
        slack = max(tol, 1e-8 * self.abs_coefficient_sum)
        if total.real > 1 + slack or abs(total.imag) > slack:
            return Diagnostic(False, float("nan"), f"trace {total:.6g} exceeds one")
        return (
            self._real_part_diagnostic(tol)
            or self._reality_diagnostic(points, seed)
            or Diagnostic(True, float("nan"))
        )


@attrs.frozen(eq=False)
class GGChannel:
    """Complex combination of Gaussian branches (c'', d, X, Y)"""

    coeffs: np.ndarray = attrs.field(converter=_complex_array)
    disps: np.ndarray = attrs.field(converter=_complex_array)
    x_mats: np.ndarray = attrs.field(converter=_complex_array)
    y_mats: np.ndarray = attrs.field(converter=_complex_array)

    def __attrs_post_init__(self) -> None:
        count = self.coeffs.shape[0] if self.coeffs.ndim == 1 else -1
        size = self.disps.shape[-1] if self.disps.ndim == 2 else -1
        if (
            count < 1
            or self.disps.shape != (count, size)
            or self.x_mats.shape != (count, size, size)
            or self.y_mats.shape != (count, size, size)
        ):
            raise ShapeError(
                f"Inconsistent branch arrays: coeffs {self.coeffs.shape}, disps "
                f"{self.disps.shape}, x {self.x_mats.shape}, y {self.y_mats.shape}"
            )

    @property
    def n(self) -> int:
        return self.disps.shape[1] // 2

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    @property
    def branches(self) -> list[tuple[complex, np.ndarray, np.ndarray, np.ndarray]]:
        return list(zip(self.coeffs, self.disps, self.x_mats, self.y_mats))

    @classmethod
    def from_gaussian(cls, ch: GaussianChannel) -> "GGChannel":
        return cls([1.0], ch.disp[None], ch.x_mat[None], ch.y_mat[None])

    @classmethod
    def identity(cls, n: int = 1) -> "GGChannel":
        return cls.from_gaussian(GaussianChannel.identity(n))

    @classmethod
    def mixture(
        cls, weights: ty.Sequence[complex], channels: ty.Sequence[GaussianChannel]
    ) -> "GGChannel":
        return cls(
            weights,
            np.stack([c.disp for c in channels]),
            np.stack([c.x_mat for c in channels]),
            np.stack([c.y_mat for c in channels]),
        )

    def validate(self, tol: float = TOL) -> Diagnostic:
        total = complex(np.sum(self.coeffs))
        if abs(total - 1) > tol:
            return Diagnostic(False, float("nan"), f"branch weights sum to {total:.6g}")
        return Diagnostic(True, float("nan"))


GGLike = ty.Union[GGState, GaussianState]
GGEffectLike = ty.Union[GGEffect, GeneralDyneEffect]
GGChannelLike = ty.Union[GGChannel, GaussianChannel]


def as_gg_state(state: GGLike) -> GGState:
    return GGState.from_gaussian(state) if isinstance(state, GaussianState) else state


def as_gg_effect(effect: GGEffectLike | None, n: int) -> GGEffect:
    if effect is None:
        return GGEffect.from_gaussian(GeneralDyneEffect.heterodyne(np.zeros(2 * n)))
    if isinstance(effect, GeneralDyneEffect):
        return GGEffect.from_gaussian(effect)
    return effect


def as_gg_channel(ch: GGChannelLike | None, n: int) -> GGChannel:
    if ch is None:
        return GGChannel.identity(n)
    if isinstance(ch, GaussianChannel):
        return GGChannel.from_gaussian(ch)
    return ch


def _require_same_modes(*objs: ty.Any) -> None:
    modes = {o.n for o in objs}
    if len(modes) != 1:
        raise ShapeError(f"Mode counts differ between arguments: {sorted(modes)}")


def wigner_terms(obj: _GGObject, point: ty.Any) -> complex:
    """Complex component sum at a phase-space point, raising if it is not real"""
    point = np.asarray(point, dtype=float)
    if point.shape != (2 * obj.n,):
        raise ShapeError(f"Point of shape {point.shape} for a {obj.n}-mode object")
    terms = obj.coeffs * _complex_gaussians(obj.means, obj.covs, point[None, :])
    total = complex(np.sum(terms))
    scale = max(1.0, float(np.sum(np.abs(terms))))
    if abs(total.imag) > REALITY_TOL * scale:
        raise InvalidStateError(
            f"Wigner function is not real at {point.tolist()}: imaginary part "
            f"{total.imag:.3g}"
        )
    return total


def _complex_gaussians(means: np.ndarray, covs: np.ndarray, points: np.ndarray) -> np.ndarray:
    diff = points - means
    sol = np.linalg.solve(covs, diff[..., None])[..., 0]
    quad = np.einsum("...i,...i->...", diff, sol)
    return np.exp(-quad / 2) / sqrt_det(2 * np.pi * covs)  # type: ignore[no-any-return]


def gg_wigner_eval(state: GGLike, point: ty.Any) -> float:
    """Wigner function sum_i c_i G_{m_i, V_i}(r) of a GG state at r"""
    return wigner_terms(as_gg_state(state), point).real


def gg_apply_channel(
    state: GGLike, ch: GGChannelLike, component_limit: int | None = None
) -> GGState:
    """Component-wise channel action; output component (i, k) has coefficient
    c_i c''_k, mean X_k m_i + d_k and covariance X_k V_i X_k^T + Y_k"""
    state = as_gg_state(state)
    ch = as_gg_channel(ch, state.n)
    _require_same_modes(state, ch)
    limit = component_limit or state.component_limit
    _check_count(len(state) * len(ch), limit)
    coeffs = np.outer(state.coeffs, ch.coeffs).reshape(-1)
    means = np.einsum("kab,ib->ika", ch.x_mats, state.means) + ch.disps[None, :, :]
    covs = (
        np.einsum("kab,ibc,kdc->ikad", ch.x_mats, state.covs, ch.x_mats)
        + ch.y_mats[None, :, :, :]
    )
    size = 2 * state.n
    logger.debug(
        "Applied %d-branch channel to %d components", len(ch), len(state)
    )
    return GGState(
        coeffs,
        means.reshape(-1, size),
        covs.reshape(-1, size, size),
        component_limit=limit,
    )


@attrs.frozen(eq=False)
class _TermArrays:
    """Per-term quantities over the (i, j, k) grid, shaped (N_state, N_effect, N_branch)"""

    coeffs: np.ndarray
    exponents: np.ndarray
    sqrt_dets: np.ndarray
    quad_forms: np.ndarray


def _term_arrays(state: GGLike, ch: GGChannelLike | None, eff: GGEffectLike | None) -> _TermArrays:
    state = as_gg_state(state)
    ch = as_gg_channel(ch, state.n)
    eff = as_gg_effect(eff, state.n)
    _require_same_modes(state, ch, eff)
    n_i, n_k = len(state), len(ch)
    out = gg_apply_channel(state, ch)
    size = 2 * state.n
    out_means = out.means.reshape(n_i, n_k, size)
    out_covs = out.covs.reshape(n_i, n_k, size, size)
    # broadcast to (i, j, k)
    s_mats = out_covs[:, None, :, :, :] + eff.covs[None, :, None, :, :]
    diffs = eff.means[None, :, None, :] - out_means[:, None, :, :]
    conds = np.linalg.cond(s_mats)
    bad = ~np.isfinite(conds) | (conds > CONDITION_LIMIT)
    if bad.any():
        i, j, k = (int(v) for v in np.argwhere(bad)[0])
        raise SingularityError(
            f"Term (i={i}, j={j}, k={k}) has singular V_out + V' "
            f"(condition number {conds[i, j, k]:.3g})",
            condition_number=float(conds[i, j, k]),
        )
    sol = np.linalg.solve(s_mats, diffs[..., None])[..., 0]
    quad = np.einsum("...a,...a->...", diffs, sol)
    coeffs = (
        state.coeffs[:, None, None] * eff.coeffs[None, :, None] * ch.coeffs[None, None, :]
    )
    return _TermArrays(
        coeffs=coeffs,
        exponents=quad / 2,
        sqrt_dets=sqrt_det(2 * np.pi * s_mats),
        quad_forms=quad,
    )


def gg_outcome_probability(
    state: GGLike,
    ch: GGChannelLike | None,
    eff: GGEffectLike | None,
    clamp_log: ClampLog | None = None,
) -> float:
    """tr(M Phi(rho)) for GG (or Gaussian) state, channel and effect"""
    terms = _term_arrays(state, ch, eff)
    values = terms.coeffs * np.exp(-terms.exponents) / terms.sqrt_dets
    total = complex(np.sum(values))
    n = as_gg_state(state).n
    scale = max(1.0, float(np.sum(np.abs(values))))
    if abs(total.imag) > REALITY_TOL * scale:
        raise InvalidStateError(
            f"Outcome probability has imaginary part {total.imag:.3g}; the triple is "
            "not Hermitian"
        )
    prob = (2 * np.pi) ** n * total.real
    return float((clamp_log or ClampLog()).clamp(np.array([prob]))[0])


@attrs.frozen(eq=False)
class GGTermDecomposition:
    """Radial/angular split of every (i, j, k) term:

        c c' c'' G(m') = b2 p exp(-R) / M * exp(i (theta - I - A))

    Parameters
    ----------
    radial : np.ndarray
        R, real part of the exponent
    imaginary : np.ndarray
        I, imaginary part of the exponent
    radial_norm : np.ndarray
        M, modulus of sqrt(det 2 pi (V_out + V'))
    angular_norm : np.ndarray
        A, phase of the same square root
    weights : np.ndarray
        p = |c c' c''| / b2
    phases : np.ndarray
        theta, phase of c c' c'' in [0, 2 pi)
    b2 : float
        total coefficient mass
    """

    radial: np.ndarray
    imaginary: np.ndarray
    radial_norm: np.ndarray
    angular_norm: np.ndarray
    weights: np.ndarray
    phases: np.ndarray
    b2: float

    def recompose(self) -> float:
        return float(
            self.b2
            * np.sum(
                self.weights
                * np.exp(-self.radial)
                / self.radial_norm
                * np.cos(self.imaginary + self.angular_norm - self.phases)
            )
        )


def gg_decompose_terms(
    state: GGLike, ch: GGChannelLike | None, eff: GGEffectLike | None
) -> GGTermDecomposition:
    terms = _term_arrays(state, ch, eff)
    magnitudes = np.abs(terms.coeffs)
    b2 = float(np.sum(magnitudes))
    return GGTermDecomposition(
        radial=terms.exponents.real,
        imaginary=terms.exponents.imag,
        radial_norm=np.abs(terms.sqrt_dets),
        angular_norm=np.angle(terms.sqrt_dets),
        weights=magnitudes / b2,
        phases=np.mod(np.angle(terms.coeffs), 2 * np.pi),
        b2=b2,
    )


def _float(value: ty.Any) -> float:
    return float(value)


@attrs.frozen
class GGConstraintConstants(CliTyped):
    """Constants bounding the exponent magnitudes (b1), total coefficient mass (b2)
    and smallest normalization sqrt|det 2 pi (V_out + V')| (b3) of a GG triple"""

    b1: float = attrs.field(converter=_float)
    b2: float = attrs.field(converter=_float)
    b3: float = attrs.field(converter=_float)

    def __attrs_post_init__(self) -> None:
        if self.b1 < 0 or self.b2 < 0 or self.b3 <= 0:
            raise ValidationError(
                f"Need b1, b2 >= 0 and b3 > 0, found ({self.b1}, {self.b2}, {self.b3})"
            )

    @property
    def ratio(self) -> float:
        "B = b2 / b3 of the covering-number bound"
        return self.b2 / self.b3


def gg_b_constants(
    state: GGLike, ch: GGChannelLike | None = None, eff: GGEffectLike | None = None
) -> GGConstraintConstants:
    """Measured constants of a GG triple (identity channel and heterodyne at the origin
    when the channel or effect is omitted)"""
    terms = _term_arrays(state, ch, eff)
    return GGConstraintConstants(
        b1=float(np.max(np.abs(terms.quad_forms))),
        b2=float(np.sum(np.abs(terms.coeffs))),
        b3=float(np.min(np.abs(terms.sqrt_dets))),
    )


def gg_photon_number_distribution(
    state: GGLike,
    ch: GGChannelLike | None,
    cutoff: int,
    clamp_log: ClampLog | None = None,
) -> np.ndarray:
    """P(k) over {0..cutoff}^n for GG states, summing the complex-Gaussian diagonals"""
    out = gg_apply_channel(as_gg_state(state), as_gg_channel(ch, as_gg_state(state).n))
    total = np.zeros((cutoff + 1,) * out.n, dtype=complex)
    for coeff, mean, cov in zip(out.coeffs, out.means, out.covs):
        total += coeff * photon_number_diagonal(mean, cov, cutoff)
    scale = max(1.0, out.abs_coefficient_sum)
    if np.max(np.abs(total.imag), initial=0.0) > REALITY_TOL * scale:
        raise InvalidStateError("Photon-number distribution is not real")
    return (clamp_log or ClampLog()).clamp(total.real)


def gg_photocount_probability(
    state: GGLike,
    ch: GGChannelLike | None,
    eff: PhotoCountEffect,
    clamp_log: ClampLog | None = None,
) -> float:
    probs = gg_photon_number_distribution(state, ch, eff.cutoff, clamp_log)
    return float(np.sum(probs * eff.as_array()))


def log_pure_overlap(
    mean_bra: np.ndarray, mean_ket: np.ndarray, cov: np.ndarray
) -> complex:
    """log <psi_bra|psi_ket> for pure Gaussians sharing the covariance `cov`, with the
    phase convention of displaced states D(m)|psi_0>"""
    delta = mean_ket - mean_bra
    omega = symplectic_form(mean_ket.size // 2)
    return complex(
        -delta @ np.linalg.solve(cov, delta) / 8 + 0.5j * mean_bra @ omega @ mean_ket
    )


def gaussian_superposition(
    weights: ty.Sequence[complex],
    means: np.ndarray,
    cov: np.ndarray,
    component_limit: int = COMPONENT_LIMIT,
) -> GGState:
    """GG state of the normalized superposition sum_s w_s D(m_s)|psi_0> of displaced
    copies of a pure Gaussian with covariance `cov`.

    The Wigner function of |psi_s><psi_t| is a Gaussian with covariance `cov` and complex
    mean (m_s + m_t)/2 + i V Omega (m_s - m_t), weighted by <psi_t|psi_s>. Pairs whose
    weight underflows double precision are left out: their Gaussians would overflow by
    the same factor, so neither can be represented."""
    weights = np.asarray(weights, dtype=complex)
    means = np.asarray(means, dtype=float)
    cov = np.asarray(cov, dtype=float)
    count = weights.size
    if np.any(weights == 0):
        raise ValidationError("Superposition weights must be non-zero")
    omega = symplectic_form(means.shape[1] // 2)
    log_raw = np.array(
        [
            [
                np.log(weights[s]) + np.log(weights[t].conjugate())
                + log_pure_overlap(means[t], means[s], cov)
                for t in range(count)
            ]
            for s in range(count)
        ]
    ).reshape(-1)
    shift = float(np.max(log_raw.real))
    norm = complex(np.sum(np.exp(log_raw - shift)))
    if abs(norm) < 1e-12:
        raise UndefinedStateError(
            "Superposition has zero norm (the weighted components cancel)"
        )
    log_coeffs = log_raw - shift - np.log(norm.real)
    keep = np.flatnonzero(log_coeffs.real > LOG_UNDERFLOW)
    _check_count(keep.size, component_limit)
    s_idx, t_idx = np.divmod(keep, count)
    delta = means[s_idx] - means[t_idx]
    comp_means = (means[s_idx] + means[t_idx]) / 2 + 1j * delta @ (cov @ omega).T
    covs = np.broadcast_to(cov, (keep.size,) + cov.shape).astype(complex)
    if keep.size < count * count:
        logger.debug(
            "Left out %d of %d superposition pairs below double precision",
            count * count - keep.size,
            count * count,
        )
    return GGState(
        np.exp(log_coeffs[keep]),
        comp_means,
        covs,
        component_limit=component_limit,
        superposition=GaussianSuperposition(weights, means, cov),
    )


def make_cat_state(alpha: complex, sign: int = 1) -> GGState:
    """Cat state proportional to |alpha> + sign |-alpha>, as four GG components"""
    if sign not in (1, -1):
        raise ValidationError(f"Cat sign must be +1 or -1, found {sign}")
    if sign == -1 and abs(alpha) == 0:
        raise UndefinedStateError("The '-' cat state is undefined for alpha = 0")
    mean = amplitudes_to_mean([alpha])
    if abs(alpha) == 0:
        return GGState.from_gaussian(GaussianState.vacuum())
    return gaussian_superposition(
        [1.0, float(sign)], np.stack([mean, -mean]), np.eye(2) / 2
    )


def gkp_peak_positions(epsilon: float, lattice: int) -> np.ndarray:
    """Position peaks of the finite-energy logical-zero GKP state: the square-root-pi
    lattice points 2 sqrt(pi) s inside |x| <= 2 L, contracted by the damping (1 - 2 eps)"""
    spacing = 2 * math.sqrt(math.pi)
    s_max = int(math.floor(lattice / math.sqrt(math.pi)))
    return (1 - 2 * epsilon) * spacing * np.arange(-s_max, s_max + 1)  # type: ignore[no-any-return]


def make_gkp_state(epsilon: float, lattice: int) -> GGState:
    """Finite-energy GKP state as a superposition of position-squeezed peaks with
    covariance diag(eps, 1/eps)/2 under a Gaussian envelope exp(-eps x^2 / 2).

    The lattice extent L caps the peak positions at |x| <= 2 L before the (1 - 2 eps)
    contraction, giving 2 floor(L / sqrt(pi)) + 1 peaks and the square of that many
    terms before underflowing interference terms are pruned."""
    if not 0 < epsilon < 0.5 or lattice < 1:
        raise ValidationError(
            f"GKP needs 0 < eps < 1/2 and L >= 1, found eps={epsilon}, L={lattice}"
        )
    peaks = gkp_peak_positions(epsilon, lattice)
    means = np.column_stack([peaks, np.zeros_like(peaks)])
    cov = np.diag([epsilon, 1 / epsilon]) / 2
    weights = np.exp(-epsilon * peaks**2 / 2)
    logger.debug("GKP state with %d peaks (eps=%s, L=%s)", peaks.size, epsilon, lattice)
    return gaussian_superposition(weights, means, cov)


def lattice_geometry(state: GGLike) -> tuple[float, float]:
    """Smallest eigenvalue of Re V_i and largest |Re m_i| over the components"""
    state = as_gg_state(state)
    herm = (state.covs.real + np.swapaxes(state.covs.real, 1, 2)) / 2
    lam_min = float(np.min(np.linalg.eigvalsh(herm)))
    m_max = float(np.max(np.linalg.norm(state.means.real, axis=1)))
    return lam_min, m_max


def gkp_b_constants(epsilon: float, lattice: int) -> GGConstraintConstants:
    """Constraint constants of the finite-energy GKP family read off its lattice.

    The normalized superposition has sum |c_i| = 1 up to the tiny interference terms, so
    the measured coefficient mass does not see the lattice. The family constants bound
    it by the unnormalized lattice sum instead: b1 = max |m_i| / lambda_min(V_i),
    b2 = (number of terms) * max |m_i|, never below the measured mass, and b3 the
    measured normalization of the heterodyne at the origin."""
    state = make_gkp_state(epsilon, lattice)
    measured = gg_b_constants(state)
    lam_min, m_max = lattice_geometry(state)
    return GGConstraintConstants(
        b1=m_max / lam_min,
        b2=max(measured.b2, len(state) * m_max),
        b3=measured.b3,
    )


def make_fock_approx(photons: int, r: float) -> GGState:
    """Approximate Fock state |K> as a superposition of K + 1 coherent states on a ring of
    radius r with phases exp(-i K phi_j); the error is O(r^(K+1))"""
    if photons < 0:
        raise ValidationError(f"Photon number must be non-negative, found {photons}")
    if photons == 0:
        return GGState.from_gaussian(GaussianState.vacuum())
    if not 0 < r < 1 / math.sqrt(photons):
        raise ValidationError(
            f"Ring radius must satisfy 0 < r < 1/sqrt(K) = {1 / math.sqrt(photons):.4g}, "
            f"found {r}"
        )
    count = photons + 1
    phis = 2 * np.pi * np.arange(count) / count
    alphas = r * np.exp(1j * phis)
    means = np.stack([amplitudes_to_mean([a]) for a in alphas])
    return gaussian_superposition(np.exp(-1j * photons * phis), means, np.eye(2) / 2)
