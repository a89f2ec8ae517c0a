"""Photon-counting statistics of Gaussian (and complex-Gaussian) operators.

Fock matrix elements come from the Bargmann generating function

    sum_{k,l} <k|rho|l> a^k b^l / sqrt(k! l!) = F0 exp(-z^T A z / 2 + y^T z)

with z interleaving the bra variable a and the ket variable b of every mode. The
derivatives of the right-hand side at z = 0 are multivariate Hermite polynomials,
evaluated here by index recurrence over a box of indices.
"""
import itertools
import math
import typing as ty
import attrs
import numpy as np
from .exceptions import EngineError, ShapeError, SingularityError, ValidationError
from .symplectic import (
    ClampLog,
    GaussianChannel,
    GaussianState,
    CONDITION_LIMIT,
    TOL,
    apply_gaussian_channel,
    sqrt_det,
)
from .utils import logger, as_real_matrix, as_real_vector

# Quadrature -> Bargmann variables for a single mode, r = T z
_T_BLOCK = np.array([[1.0, 1.0], [1.0j, -1.0j]]) / np.sqrt(2)
_J_BLOCK = np.array([[0.0, 1.0], [1.0, 0.0]])


def _k_converter(k: ty.Iterable[int] | int) -> tuple[int, ...]:
    return tuple(int(i) for i in np.atleast_1d(k))


@attrs.frozen
class HermiteIndex:
    """Per-mode photon numbers k"""

    k: tuple[int, ...] = attrs.field(converter=_k_converter)

    @k.validator
    def _check_k(self, _: attrs.Attribute, value: tuple[int, ...]) -> None:
        if not value or any(i < 0 for i in value):
            raise ValidationError(f"Photon numbers must be non-negative, found {value}")

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def interleaved(self) -> tuple[int, ...]:
        "Derivative orders (k1, k1, k2, k2, ...) for the diagonal element <k|rho|k>"
        return tuple(i for i in self.k for _ in range(2))

    def check_cutoff(self, cutoff: int) -> None:
        if max(self.k) > cutoff:
            raise ValidationError(f"Photon numbers {self.k} exceed the cutoff {cutoff}")


def _weights_converter(
    weights: ty.Mapping[ty.Any, float] | ty.Iterable[tuple[ty.Any, float]]
) -> dict[tuple[int, ...], float]:
    items = weights.items() if isinstance(weights, ty.Mapping) else weights
    return {_k_converter(k): float(q) for k, q in items}


@attrs.frozen
class PhotoCountEffect:
    """Coarse-grained photodetection effect M_q = sum_k q_k |k><k|

    Parameters
    ----------
    cutoff : int
        maximum number of photons counted per mode
    weights : dict[tuple[int, ...], float]
        weight q_k of every outcome vector k that contributes
    """

    cutoff: int = attrs.field(converter=int)
    weights: dict[tuple[int, ...], float] = attrs.field(converter=_weights_converter)

    def __attrs_post_init__(self) -> None:
        if self.cutoff < 0:
            raise ValidationError(f"Cutoff must be non-negative, found {self.cutoff}")
        if not self.weights:
            raise ValidationError("Photo-count effect needs at least one weighted outcome")
        modes = {len(k) for k in self.weights}
        if len(modes) != 1:
            raise ShapeError(f"Outcome vectors have differing lengths {sorted(modes)}")
        for k, q in self.weights.items():
            HermiteIndex(k).check_cutoff(self.cutoff)
            if q < 0:
                raise ValidationError(f"Negative weight {q} for outcome {k}")
        total = sum(self.weights.values())
        if total > 1 + TOL:
            raise ValidationError(f"Weights sum to {total} > 1")

    @property
    def n(self) -> int:
        return len(next(iter(self.weights)))

    @classmethod
    def single(cls, k: ty.Iterable[int] | int, cutoff: int | None = None) -> "PhotoCountEffect":
        key = _k_converter(k)
        return cls(max(key) if cutoff is None else cutoff, {key: 1.0})

    @classmethod
    def uniform(cls, n: int, cutoff: int) -> "PhotoCountEffect":
        outcomes = list(itertools.product(range(cutoff + 1), repeat=n))
        return cls(cutoff, {k: 1.0 / len(outcomes) for k in outcomes})

    def as_array(self) -> np.ndarray:
        "Weights laid out on the box {0..K}^n"
        arr = np.zeros((self.cutoff + 1,) * self.n)
        for k, q in self.weights.items():
            arr[k] = q
        return arr


def bargmann_parameters(
    mean: np.ndarray, cov: np.ndarray
) -> tuple[complex, np.ndarray, np.ndarray]:
    """Generating-function parameters (F0, A, y) of the operator whose Wigner function
    is the (possibly complex) Gaussian G_{mean, cov}"""
    n = mean.size // 2
    t_mat = np.kron(np.eye(n), _T_BLOCK)
    s_mat = cov + np.eye(2 * n) / 2
    s_inv = np.linalg.inv(s_mat)
    a_mat = t_mat.T @ s_inv @ t_mat - np.kron(np.eye(n), _J_BLOCK)
    y_vec = t_mat.T @ s_inv @ mean
    f0 = np.exp(-0.5 * mean @ s_inv @ mean) / sqrt_det(s_mat)
    return complex(f0), (a_mat + a_mat.T) / 2, y_vec


def hermite_table(
    a_mat: np.ndarray, y_vec: np.ndarray, shape: ty.Sequence[int], normalized: bool = False
) -> np.ndarray:
    """All multivariate Hermite values H_nu(A, y) for nu inside the box `shape`.

    With `normalized` the values are divided by sqrt(nu!), which keeps them bounded for
    large indices and turns the table into Fock matrix elements."""
    dim = len(shape)
    table = np.zeros(tuple(shape), dtype=complex)
    table[(0,) * dim] = 1.0
    for nu in np.ndindex(*shape):
        j = next((i for i, v in enumerate(nu) if v), None)
        if j is None:
            continue
        prev = list(nu)
        prev[j] -= 1
        value = y_vec[j] * table[tuple(prev)]
        for l_idx in range(dim):
            if prev[l_idx]:
                lower = list(prev)
                lower[l_idx] -= 1
                weight = np.sqrt(prev[l_idx]) if normalized else prev[l_idx]
                value -= a_mat[j, l_idx] * weight * table[tuple(lower)]
        table[nu] = value / np.sqrt(nu[j]) if normalized else value
    return table


def hermite_multi(v_mat: ty.Any, m: ty.Any, k: HermiteIndex | ty.Sequence[int]) -> float:
    """Multivariate Hermite polynomial G_{0,V}(m)^-1 prod_i (-d/dm_{2i-1})^{k_i}
    (-d/dm_{2i})^{k_i} G_{0,V}(m)"""
    v_mat, m = as_real_matrix(v_mat), as_real_vector(m)
    if not isinstance(k, HermiteIndex):
        k = HermiteIndex(k)
    if v_mat.shape != (2 * k.n, 2 * k.n) or m.size != 2 * k.n:
        raise ShapeError(
            f"Hermite index for {k.n} modes does not match V {v_mat.shape} / m {m.shape}"
        )
    cond = np.linalg.cond(v_mat)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularityError(
            f"V is singular (condition number {cond:.3g})", condition_number=cond
        )
    a_mat = np.linalg.inv(v_mat)
    nu = k.interleaved
    table = hermite_table(a_mat, a_mat @ m, [i + 1 for i in nu])
    return float(table[nu].real)


def fock_elements_from_gaussian(
    mean: np.ndarray, cov: np.ndarray, cutoff: int
) -> np.ndarray:
    """Matrix elements <k|rho|l> (k, l <= cutoff per mode) of the operator with
    Gaussian Wigner function G_{mean, cov}, as an array of shape (D, D, D, D, ...)
    indexed (k1, l1, k2, l2, ...)"""
    f0, a_mat, y_vec = bargmann_parameters(mean, cov)
    return f0 * hermite_table(a_mat, y_vec, [cutoff + 1] * mean.size, normalized=True)


def photon_number_diagonal(mean: np.ndarray, cov: np.ndarray, cutoff: int) -> np.ndarray:
    "Diagonal <k|rho|k> over the box {0..cutoff}^n (complex for complex Gaussians)"
    n = mean.size // 2
    elems = fock_elements_from_gaussian(mean, cov, cutoff)
    diag = elems
    for _ in range(n):
        # the diagonal of the leading (k_i, l_i) pair is appended as the last axis
        diag = np.diagonal(diag, axis1=0, axis2=1)
    return diag  # type: ignore[no-any-return]


def photon_number_distribution(
    state: GaussianState,
    ch: GaussianChannel | None,
    cutoff: int,
    clamp_log: ClampLog | None = None,
) -> np.ndarray:
    """Probabilities P(k) of every photon-count vector k in {0..cutoff}^n"""
    out = state if ch is None else apply_gaussian_channel(state, ch)
    probs = photon_number_diagonal(out.mean, out.cov, cutoff)
    if np.max(np.abs(probs.imag), initial=0.0) > 1e-9:
        raise EngineError("Photon-number probabilities acquired an imaginary part")
    return (clamp_log or ClampLog()).clamp(probs.real)


def gp_outcome_probability(
    state: GaussianState,
    ch: GaussianChannel,
    k: HermiteIndex | ty.Sequence[int],
    clamp_log: ClampLog | None = None,
) -> float:
    """Probability of counting k photons at the output of the channel,
    F0 H_nu(A, y) / prod_i k_i! with nu = (k1, k1, k2, k2, ...)"""
    if not isinstance(k, HermiteIndex):
        k = HermiteIndex(k)
    if k.n != state.n:
        raise ShapeError(f"Photon-count vector {k.k} does not match {state.n} modes")
    out = apply_gaussian_channel(state, ch)
    f0, a_mat, y_vec = bargmann_parameters(out.mean, out.cov)
    nu = k.interleaved
    table = hermite_table(a_mat, y_vec, [i + 1 for i in nu], normalized=True)
    prob = f0 * table[nu]
    log = clamp_log or ClampLog()
    return float(log.clamp(np.array([prob.real]))[0])


def gp_coarse_probability(
    state: GaussianState,
    ch: GaussianChannel,
    eff: PhotoCountEffect,
    clamp_log: ClampLog | None = None,
) -> float:
    """tr(M_q rho_out) = sum_k q_k P(k)"""
    if eff.n != state.n:
        raise ShapeError(f"Effect acts on {eff.n} modes, state has {state.n}")
    probs = photon_number_distribution(state, ch, eff.cutoff, clamp_log)
    return float(np.sum(probs * eff.as_array()))


def photon_tail_bound(state: GaussianState, cutoff: int) -> float:
    """Upper bound on the probability that some mode holds more than `cutoff` photons,
    from Markov and Chebyshev inequalities on every single-mode marginal"""
    total = 0.0
    for i in range(state.n):
        sl = slice(2 * i, 2 * i + 2)
        marginal = GaussianState(state.mean[sl], state.cov[sl, sl])
        mean_n = marginal.mean_photon_number
        var_n = marginal.photon_number_variance
        bound = min(1.0, mean_n / (cutoff + 1))
        if cutoff + 1 > mean_n:
            bound = min(bound, var_n / (cutoff + 1 - mean_n) ** 2)
        total += max(bound, 0.0)
    return min(total, 1.0)


def suggested_cutoff(mean_photons: float, variance: float) -> int:
    "Per-mode cutoff leaving a negligible Gaussian-like tail"
    return int(math.ceil(mean_photons + 8 * math.sqrt(max(variance, 0.0)) + 10))
