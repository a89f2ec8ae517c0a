"""Truncated Fock-space simulator used as a brute-force oracle for the analytic engines.

Everything here uses dense matrices and matrix exponentials of ladder-operator
expressions, sharing no formulas with the phase-space code paths beyond the Gaussian
parameters themselves. Two exceptions: GG objects without a ket description or
physical Gaussian components use the complex-Gaussian Fock amplitudes, and noisy
multi-mode channels on Gaussian inputs whose dilation exceeds the dimension cap
are applied to the covariance matrix before moving to Fock space.
"""
import math
import typing as ty
import attrs
import numpy as np
import scipy.linalg
import scipy.special
from .exceptions import (
    CutoffError,
    InvalidStateError,
    ShapeError,
    UnsupportedChannelError,
    UnsupportedClassError,
)
from .gg import (
    GaussianSuperposition,
    GGChannel,
    GGEffect,
    GGLike,
    GGState,
    as_gg_state,
    gg_apply_channel,
)
from .photodetection import PhotoCountEffect, fock_elements_from_gaussian, suggested_cutoff
from .symplectic import (
    Diagnostic,
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    TOL,
    apply_gaussian_channel,
    mean_to_amplitudes,
    symplectic_form,
    validate_state,
    validate_symplectic,
)
from .utils import logger

# Extra levels simulated above the requested cutoff before cropping
PAD = 8
# Largest Hilbert-space dimension the oracle will build (system plus ancillas)
DIMENSION_CAP = 4096


@attrs.frozen(eq=False)
class FockOperator:
    """Operator on n modes truncated to `cutoff` levels (0..cutoff-1) per mode"""

    n: int
    cutoff: int
    mat: np.ndarray = attrs.field(converter=lambda m: np.asarray(m, dtype=complex))

    def __attrs_post_init__(self) -> None:
        dim = self.cutoff**self.n
        if self.mat.shape != (dim, dim):
            raise ShapeError(
                f"Matrix of shape {self.mat.shape} for {self.n} modes at cutoff "
                f"{self.cutoff}, expected ({dim}, {dim})"
            )

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.mat - self.mat.conj().T)))

    def crop(self, cutoff: int) -> "FockOperator":
        if cutoff > self.cutoff:
            raise ShapeError(f"Cannot crop cutoff {self.cutoff} up to {cutoff}")
        tensor = self.mat.reshape((self.cutoff,) * (2 * self.n))
        cropped = tensor[(slice(0, cutoff),) * (2 * self.n)]
        dim = cutoff**self.n
        return FockOperator(self.n, cutoff, cropped.reshape(dim, dim))

    def diagonal(self) -> np.ndarray:
        "Photon-number probabilities as an array indexed (k1, k2, ...)"
        return np.diag(self.mat).real.reshape((self.cutoff,) * self.n)  # type: ignore[no-any-return]

    def validate_density(self, tol: float = 1e-6) -> Diagnostic:
        herm = (self.mat + self.mat.conj().T) / 2
        lowest = float(np.linalg.eigvalsh(herm)[0])
        if self.hermiticity_defect() > tol:
            return Diagnostic(False, lowest, "density matrix is not Hermitian")
        if abs(self.trace - 1) > tol:
            return Diagnostic(False, lowest, f"trace {self.trace:.6g} differs from 1")
        if lowest < -tol:
            return Diagnostic(False, lowest, "density matrix is not positive")
        return Diagnostic(True, lowest)

    def validate_effect(self, tol: float = 1e-6) -> Diagnostic:
        herm = (self.mat + self.mat.conj().T) / 2
        eigs = np.linalg.eigvalsh(herm)
        if self.hermiticity_defect() > tol:
            return Diagnostic(False, float(eigs[0]), "effect is not Hermitian")
        if eigs[0] < -tol or eigs[-1] > 1 + tol:
            return Diagnostic(False, float(eigs[0]), "effect spectrum leaves [0, 1]")
        return Diagnostic(True, float(eigs[0]))


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def mode_operators(n: int, dim: int) -> list[np.ndarray]:
    "Annihilation operator of every mode on the n-mode space"
    single = annihilation(dim)
    eye = np.eye(dim)
    ops = []
    for i in range(n):
        factors = [single if j == i else eye for j in range(n)]
        op = factors[0]
        for f in factors[1:]:
            op = np.kron(op, f)
        ops.append(op)
    return ops


def _quadratures(ops: list[np.ndarray]) -> list[np.ndarray]:
    "(x1, p1, x2, p2, ...) with x = (a + a^dag)/sqrt 2 and p = (a - a^dag)/(i sqrt 2)"
    out = []
    for a in ops:
        out.append((a + a.conj().T) / np.sqrt(2))
        out.append((a - a.conj().T) / (1j * np.sqrt(2)))
    return out


def required_cutoff(mean_photons: float, variance: float) -> int:
    return suggested_cutoff(mean_photons, variance)


def _resolve_cutoff(cutoff: int | None, mean_photons: float, variance: float) -> int:
    needed = required_cutoff(mean_photons, variance)
    if cutoff is None:
        return needed
    if cutoff < needed:
        raise CutoffError(
            f"Cutoff {cutoff} leaves a non-negligible tail for mean photon number "
            f"{mean_photons:.3g}; use at least {needed}",
            suggested_cutoff=needed,
        )
    return cutoff


def _check_dimension(n: int, dim: int) -> None:
    if dim**n > DIMENSION_CAP:
        raise CutoffError(
            f"{n} modes at {dim} levels exceed the oracle's dimension cap "
            f"({DIMENSION_CAP})",
            suggested_cutoff=int(DIMENSION_CAP ** (1 / n)),
        )


def williamson(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symplectic eigenvalues nu and symplectic S with cov = S diag(nu, nu) S^T"""
    n = cov.shape[0] // 2
    root = np.real(scipy.linalg.sqrtm(cov))
    root_inv = np.linalg.inv(root)
    antisym = root_inv @ symplectic_form(n) @ root_inv
    schur, basis = scipy.linalg.schur(antisym, output="real")
    for i in range(n):
        if schur[2 * i, 2 * i + 1] < 0:
            basis[:, [2 * i, 2 * i + 1]] = basis[:, [2 * i + 1, 2 * i]]
            schur[[2 * i, 2 * i + 1], :] = schur[[2 * i + 1, 2 * i], :]
            schur[:, [2 * i, 2 * i + 1]] = schur[:, [2 * i + 1, 2 * i]]
    nu = 1 / np.array([schur[2 * i, 2 * i + 1] for i in range(n)])
    symp = root @ basis @ np.diag(np.repeat(np.sqrt(nu), 2))
    return nu, symp


def _passive_unitary(ops: list[np.ndarray], orthogonal: np.ndarray) -> np.ndarray:
    """Unitary exp(-i a^dag h a) realizing a -> u a, with u read off the orthogonal
    symplectic matrix"""
    u = orthogonal[0::2, 0::2] + 1j * orthogonal[1::2, 0::2]
    h = 1j * scipy.linalg.logm(u)
    gen = sum(
        h[i, j] * ops[i].conj().T @ ops[j] for i in range(len(ops)) for j in range(len(ops))
    )
    return scipy.linalg.expm(-1j * gen)  # type: ignore[no-any-return]


def _quadratic_unitary(ops: list[np.ndarray], symp: np.ndarray) -> np.ndarray:
    """Unitary exp(-i r^T H r / 2) with exp(Omega H) = symp, for symp positive definite"""
    n = len(ops)
    ham = -symplectic_form(n) @ np.real(scipy.linalg.logm(symp))
    ham = (ham + ham.T) / 2
    quads = _quadratures(ops)
    gen = sum(
        ham[a, b] * quads[a] @ quads[b] for a in range(2 * n) for b in range(2 * n)
    )
    return scipy.linalg.expm(-0.5j * gen)  # type: ignore[no-any-return]


def symplectic_unitary(ops: list[np.ndarray], symp: np.ndarray) -> np.ndarray:
    "Fock-space unitary of a symplectic matrix through its polar decomposition S = P O"
    orthogonal, positive = scipy.linalg.polar(symp, side="left")
    return _quadratic_unitary(ops, positive) @ _passive_unitary(ops, orthogonal)


def displacement_unitary(ops: list[np.ndarray], mean: np.ndarray) -> np.ndarray:
    alphas = mean_to_amplitudes(mean)
    gen = sum(al * a.conj().T - np.conj(al) * a for al, a in zip(alphas, ops))
    return scipy.linalg.expm(gen)  # type: ignore[no-any-return]


def _thermal(nbars: np.ndarray, dim: int) -> np.ndarray:
    out = np.ones((1, 1))
    for nbar in nbars:
        q = nbar / (nbar + 1)
        out = np.kron(out, np.diag((1 - q) * q ** np.arange(dim)))
    return out


def _gaussian_density(state: GaussianState, dim: int) -> np.ndarray:
    ops = mode_operators(state.n, dim)
    nu, symp = williamson(state.cov)
    rho = _thermal(np.clip(nu - 0.5, 0.0, None), dim).astype(complex)
    if not np.allclose(symp, np.eye(2 * state.n), atol=1e-12):
        u_s = symplectic_unitary(ops, symp)
        rho = u_s @ rho @ u_s.conj().T
    if np.any(state.mean):
        disp = displacement_unitary(ops, state.mean)
        rho = disp @ rho @ disp.conj().T
    return rho


def fock_from_gaussian(state: GaussianState, cutoff: int | None = None) -> FockOperator:
    """Density matrix of a Gaussian state, composed from a thermal state, a symplectic
    unitary and a displacement"""
    diag = validate_state(state)
    if not diag.ok:
        raise InvalidStateError(f"Invalid state: {diag.message}")
    cutoff = _resolve_cutoff(cutoff, state.mean_photon_number, state.photon_number_variance)
    work = cutoff + PAD
    _check_dimension(state.n, work)
    logger.debug("Building %d-mode Gaussian density at %d levels", state.n, work)
    rho = FockOperator(state.n, work, _gaussian_density(state, work)).crop(cutoff)
    return FockOperator(rho.n, rho.cutoff, (rho.mat + rho.mat.conj().T) / 2)


def _elements_to_matrix(elements: np.ndarray, n: int, dim: int) -> np.ndarray:
    "(k1, l1, k2, l2, ...) -> matrix with rows (k1, k2, ...) and columns (l1, l2, ...)"
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    return elements.transpose(order).reshape(dim**n, dim**n)  # type: ignore[no-any-return]


def gg_photon_moments(state: GGState) -> tuple[float, float]:
    "Mean and variance of the total photon number of a GG state"
    n = state.n
    traces = np.trace(state.covs, axis1=1, axis2=2)
    sq = np.einsum("ia,ia->i", state.means, state.means)
    means = (traces + sq - n) / 2
    variances = (
        np.einsum("iab,iba->i", state.covs, state.covs) / 2
        - n / 4
        + np.einsum("ia,iab,ib->i", state.means, state.covs, state.means)
    )
    mean = complex(np.sum(state.coeffs * means)).real
    second = complex(np.sum(state.coeffs * (variances + means**2))).real
    return mean, max(second - mean**2, 0.0)


def fock_from_superposition(sup: GaussianSuperposition, cutoff: int) -> FockOperator:
    """Normalized projector onto sum_s w_s D(m_s) U_S |0>, with U_S the squeezing
    unitary of the shared covariance"""
    n = sup.n
    work = cutoff + PAD
    _check_dimension(n, work)
    ops = mode_operators(n, work)
    nu, symp = williamson(sup.cov)
    if np.any(np.abs(nu - 0.5) > 1e-8):
        raise UnsupportedClassError("Superposition of mixed Gaussians has no ket")
    base = np.zeros(work**n, dtype=complex)
    base[0] = 1.0
    if not np.allclose(symp, np.eye(2 * n), atol=1e-12):
        base = symplectic_unitary(ops, symp) @ base
    ket = sum(w * (displacement_unitary(ops, m) @ base) for w, m in zip(sup.weights, sup.means))
    norm = float(np.vdot(ket, ket).real)
    if norm < 1e-12:
        raise InvalidStateError("Superposition has zero norm in Fock space")
    ket = ket.reshape((work,) * n)[(slice(0, cutoff),) * n].reshape(-1)
    return FockOperator(n, cutoff, np.outer(ket, ket.conj()) / norm)


def _real_gaussian_components(state: GGState) -> list[GaussianState] | None:
    "Components as physical Gaussian states, or None when any is complex or unphysical"
    if np.any(np.abs(state.means.imag) > 1e-12) or np.any(np.abs(state.covs.imag) > 1e-12):
        return None
    comps = [GaussianState(m.real, v.real) for m, v in zip(state.means, state.covs)]
    if not all(validate_state(c).ok for c in comps):
        return None
    return comps


def fock_from_gg(state: GGLike, cutoff: int | None = None) -> FockOperator:
    """Operator sum_i c_i rho_i of a GG state.

    Superpositions of displaced pure Gaussians are built as kets, and combinations of
    physical Gaussian states from their Fock-space unitaries. Anything else falls back
    to the complex-Gaussian Fock amplitudes of the components."""
    state = as_gg_state(state)
    mean_n, var_n = gg_photon_moments(state)
    cutoff = _resolve_cutoff(cutoff, mean_n, var_n)
    _check_dimension(state.n, cutoff)
    if state.superposition is not None:
        logger.debug("Building GG density from its %d-term ket", state.superposition.weights.size)
        return fock_from_superposition(state.superposition, cutoff)
    comps = _real_gaussian_components(state)
    total = np.zeros((cutoff**state.n,) * 2, dtype=complex)
    if comps is not None:
        work = cutoff + PAD
        _check_dimension(state.n, work)
        for coeff, comp in zip(state.coeffs, comps):
            block = FockOperator(comp.n, work, _gaussian_density(comp, work)).crop(cutoff)
            total += coeff * block.mat
    else:
        logger.debug("GG state without a ket description, using complex-Gaussian amplitudes")
        for coeff, mean, cov in zip(state.coeffs, state.means, state.covs):
            elements = fock_elements_from_gaussian(mean, cov, cutoff - 1)
            total += coeff * _elements_to_matrix(elements, state.n, cutoff)
    defect = float(np.max(np.abs(total - total.conj().T)))
    if defect > 1e-8 * max(1.0, state.abs_coefficient_sum):
        raise InvalidStateError(
            f"GG operator is not Hermitian in Fock space (deviation {defect:.3g})"
        )
    return FockOperator(state.n, cutoff, (total + total.conj().T) / 2)


def fock_probability(rho: FockOperator, eff: FockOperator) -> float:
    """tr(M rho)"""
    if (rho.n, rho.cutoff) != (eff.n, eff.cutoff):
        raise ShapeError(
            f"State ({rho.n} modes, cutoff {rho.cutoff}) and effect ({eff.n} modes, "
            f"cutoff {eff.cutoff}) live on different spaces"
        )
    return float(np.einsum("ij,ji->", eff.mat, rho.mat).real)


def _partial_trace_env(joint: np.ndarray, n: int, dim: int) -> np.ndarray:
    "Trace out the last n modes of a 2n-mode operator"
    tensor = joint.reshape((dim**n, dim**n, dim**n, dim**n))
    return np.einsum("aebe->ab", tensor)  # type: ignore[no-any-return]


def fock_apply_gaussian_channel(
    rho: FockOperator, ch: GaussianChannel, cutoff: int | None = None, tol: float = 1e-9
) -> FockOperator:
    """Channel action through a Stinespring dilation.

    Supports X = sqrt(eta) S with S symplectic: the system first passes the unitary of
    S, then a beam splitter of transmissivity eta with an environment prepared in the
    Gaussian state of covariance Y / (1 - eta), which is traced out, then the
    displacement d. eta = 0 is the replacement channel and eta = 1 needs Y = 0."""
    if ch.n != rho.n:
        raise ShapeError(f"Channel on {ch.n} modes applied to {rho.n}-mode operator")
    n, dim = rho.n, rho.cutoff
    cutoff = cutoff or dim
    det = float(np.linalg.det(ch.x_mat))
    if np.allclose(ch.x_mat, 0, atol=tol):
        fixed = fock_from_gaussian(GaussianState(ch.disp, ch.y_mat), dim)
        return FockOperator(n, dim, rho.trace * fixed.mat).crop(cutoff)
    if det <= tol:
        raise UnsupportedChannelError("Channel with singular or reflecting X")
    eta = det ** (1 / n)
    symp = ch.x_mat / np.sqrt(eta)
    if not validate_symplectic(symp, tol=1e-7):
        raise UnsupportedChannelError("X is not proportional to a symplectic matrix")
    ops = mode_operators(n, dim)
    mat = rho.mat
    if not np.allclose(symp, np.eye(2 * n), atol=1e-12):
        u_s = symplectic_unitary(ops, symp)
        mat = u_s @ mat @ u_s.conj().T
    if abs(eta - 1) <= tol:
        if not np.allclose(ch.y_mat, 0, atol=tol):
            raise UnsupportedChannelError("Noise added without loss is not dilated here")
    else:
        env_state = GaussianState(np.zeros(2 * n), ch.y_mat / (1 - eta))
        if not validate_state(env_state, TOL).ok:
            raise UnsupportedChannelError(
                "Y / (1 - eta) is not a valid environment covariance"
            )
        _check_dimension(2 * n, dim)
        env = FockOperator(n, dim, _gaussian_density(env_state, dim))
        joint = np.kron(mat, env.mat)
        joint_ops = mode_operators(2 * n, dim)
        theta = math.acos(math.sqrt(eta))
        gen = sum(
            joint_ops[i].conj().T @ joint_ops[n + i] - joint_ops[i] @ joint_ops[n + i].conj().T
            for i in range(n)
        )
        bs = scipy.linalg.expm(theta * gen)
        mat = _partial_trace_env(bs @ joint @ bs.conj().T, n, dim)
    if np.any(ch.disp):
        disp = displacement_unitary(ops, ch.disp)
        mat = disp @ mat @ disp.conj().T
    return FockOperator(n, dim, (mat + mat.conj().T) / 2).crop(cutoff)


def coherent_vector(alphas: ty.Sequence[complex], cutoff: int) -> np.ndarray:
    "Truncated amplitudes of the product coherent state |alpha_1, ..., alpha_n>"
    ks = np.arange(cutoff)
    log_fact = scipy.special.gammaln(ks + 1) / 2
    vec = np.ones(1, dtype=complex)
    for alpha in alphas:
        if alpha == 0:
            amps = (ks == 0).astype(complex)
        else:
            amps = np.exp(-abs(alpha) ** 2 / 2 + ks * np.log(complex(alpha)) - log_fact)
        vec = np.kron(vec, amps)
    return vec


def coherent_projector(alphas: ty.Sequence[complex], cutoff: int) -> FockOperator:
    vec = coherent_vector(alphas, cutoff)
    return FockOperator(len(alphas), cutoff, np.outer(vec, vec.conj()))


def cat_density(alpha: complex, sign: int, cutoff: int) -> FockOperator:
    "Normalized cat state (|alpha> + sign |-alpha>) / sqrt(2 + 2 sign exp(-2|alpha|^2))"
    vec = coherent_vector([alpha], cutoff) + sign * coherent_vector([-alpha], cutoff)
    norm = 2 + 2 * sign * math.exp(-2 * abs(alpha) ** 2)
    return FockOperator(1, cutoff, np.outer(vec, vec.conj()) / norm)


def fock_projector(k: ty.Sequence[int], cutoff: int) -> FockOperator:
    vec = np.ones(1)
    for ki in k:
        vec = np.kron(vec, np.eye(cutoff)[ki])
    return FockOperator(len(k), cutoff, np.outer(vec, vec))


def parity_operator(n: int, cutoff: int) -> FockOperator:
    single = np.diag((-1.0) ** np.arange(cutoff))
    mat = np.ones((1, 1))
    for _ in range(n):
        mat = np.kron(mat, single)
    return FockOperator(n, cutoff, mat)


def identity_operator(n: int, cutoff: int) -> FockOperator:
    return FockOperator(n, cutoff, np.eye(cutoff**n))


def general_dyne_operator(effect: GeneralDyneEffect, cutoff: int | None = None) -> FockOperator:
    """Effect whose Wigner function is G_{m', V'}: the density operator of the Gaussian
    state (m', V'), so that tr(M rho) = (2 pi)^n int W_M W_rho"""
    return fock_from_gaussian(GaussianState(effect.outcome, effect.cov), cutoff)


def fock_wigner(rho: FockOperator, point: ty.Any) -> float:
    """Wigner function pi^-n tr(rho D(r) Pi D(r)^dag) by displaced parity"""
    point = np.asarray(point, dtype=float)
    ops = mode_operators(rho.n, rho.cutoff)
    disp = displacement_unitary(ops, point)
    parity = parity_operator(rho.n, rho.cutoff).mat
    value = np.trace(rho.mat @ disp @ parity @ disp.conj().T)
    return float(value.real / np.pi**rho.n)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.conj().T) / 2)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T  # type: ignore[no-any-return]


def fidelity(rho: FockOperator, sigma: FockOperator) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2"""
    if (rho.n, rho.cutoff) != (sigma.n, sigma.cutoff):
        raise ShapeError("Fidelity between operators on different spaces")
    root = _psd_sqrt(rho.mat)
    inner = _psd_sqrt(root @ sigma.mat @ root)
    return float(np.trace(inner).real ** 2)


def _branch_channels(ch: GaussianChannel | GGChannel) -> list[tuple[complex, GaussianChannel]]:
    if isinstance(ch, GaussianChannel):
        return [(1.0, ch)]
    out = []
    for coeff, disp, x_mat, y_mat in ch.branches:
        if any(np.any(np.abs(a.imag) > 1e-12) for a in (disp, x_mat, y_mat)):
            raise UnsupportedChannelError("Channel branches with complex parameters")
        out.append((complex(coeff), GaussianChannel(disp.real, x_mat.real, y_mat.real)))
    return out


def _output_moments(state: GGLike, ch: GaussianChannel | GGChannel | None) -> tuple[float, float]:
    out = gg_apply_channel(state, ch) if ch is not None else as_gg_state(state)
    return gg_photon_moments(out)


def _effect_operator(effect: ty.Any, n: int, cutoff: int) -> FockOperator:
    if isinstance(effect, GeneralDyneEffect):
        return general_dyne_operator(effect, cutoff)
    if isinstance(effect, GGEffect):
        return fock_from_gg(ty.cast(GGState, effect), cutoff)
    if isinstance(effect, PhotoCountEffect):
        if effect.cutoff >= cutoff:
            raise CutoffError(
                f"Photo-count outcomes reach {effect.cutoff} photons, beyond cutoff {cutoff}",
                suggested_cutoff=effect.cutoff + 1,
            )
        mat = np.zeros((cutoff**n,) * 2, dtype=complex)
        for k, q in effect.weights.items():
            mat += q * fock_projector(k, cutoff).mat
        return FockOperator(n, cutoff, mat)
    raise UnsupportedClassError(f"No Fock representation for {type(effect).__name__}")


def _effect_moments(effect: ty.Any) -> tuple[float, float]:
    if isinstance(effect, GeneralDyneEffect):
        state = GaussianState(effect.outcome, effect.cov)
        return state.mean_photon_number, state.photon_number_variance
    if isinstance(effect, GGEffect):
        return gg_photon_moments(ty.cast(GGState, effect))
    if isinstance(effect, PhotoCountEffect):
        return float(effect.cutoff), 0.0
    return 0.0, 0.0


def oracle_probability(
    state: GGLike,
    ch: GaussianChannel | GGChannel | None,
    effect: ty.Any,
    cutoff: int | None = None,
) -> float:
    """tr(M Phi(rho)) computed entirely in the truncated Fock space.

    Without an explicit cutoff the largest of the cutoffs needed by the input, the
    output and the effect is used, so the truncated tails stay negligible."""
    n = state.n
    if cutoff is None:
        in_moments = gg_photon_moments(as_gg_state(state))
        cutoff = max(
            required_cutoff(*in_moments),
            required_cutoff(*_output_moments(state, ch)),
            required_cutoff(*_effect_moments(effect)),
        )
    if (
        isinstance(state, GaussianState)
        and isinstance(ch, GaussianChannel)
        and cutoff ** (2 * n) > DIMENSION_CAP
    ):
        logger.debug(
            "Dilating %d modes at cutoff %d exceeds the cap, building the Gaussian output",
            n,
            cutoff,
        )
        state, ch = apply_gaussian_channel(state, ch), None
    if isinstance(state, GaussianState):
        rho = fock_from_gaussian(state, cutoff)
    else:
        rho = fock_from_gg(state, cutoff)
    if ch is not None:
        mat = np.zeros_like(rho.mat)
        for coeff, branch in _branch_channels(ch):
            mat = mat + coeff * fock_apply_gaussian_channel(rho, branch).mat
        rho = FockOperator(n, cutoff, (mat + mat.conj().T) / 2)
    logger.debug("Oracle probability at cutoff %d on %d mode(s)", cutoff, n)
    return fock_probability(rho, _effect_operator(effect, n, cutoff))
