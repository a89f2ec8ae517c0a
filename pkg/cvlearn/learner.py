"""Learning protocols: training-set sampling, empirical losses, empirical risk
minimisation over physical hypothesis classes, generalisation statistics and task
learning with polynomial encodings.

Hypotheses are searched through an unconstrained parameter vector `theta` that decodes
to a physical object:

* covariances as S diag(nu) S^T with S = O1 Z(r) O2 in Bloch-Messiah form (passive
  unitaries from Hermitian generators, squeezing r = 1.5 tanh(.)) and symplectic
  eigenvalues nu = 1/2 + softplus(.)
* channels as X = sqrt(eta) S and Y = (1 - eta) V_E, with eta a logistic function and V_E
  a decoded covariance, which satisfies the channel condition by construction
* fixed-coefficient GG states as a Gaussian unitary (S, d) applied to a template
"""
import itertools
import time
import typing as ty
import attrs
import numpy as np
import scipy.linalg
import scipy.special
import scipy.stats
from .exceptions import (
    EngineError,
    ShapeError,
    UnsupportedClassError,
    ValidationError,
)
from .gg import (
    GGChannel,
    GGEffect,
    GGState,
    gg_outcome_probability,
    gg_photocount_probability,
    make_cat_state,
)
from .optimize import OptimizerConfig, minimize
from .photodetection import PhotoCountEffect, gp_coarse_probability
from .symplectic import (
    ClampLog,
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    HalfSpaceEffect,
    apply_gaussian_channel,
    gaussian_effect_probability,
    half_space_probability,
    passive_symplectic,
    random_gaussian_channel,
    random_gaussian_state,
    random_symplectic,
    squeezer,
)
from .utils import logger

HYPOTHESIS_KINDS = ("gaussian-state", "gaussian-channel", "gg-fixed-coeff", "gaussian-effect")
ROLES = ("state", "channel", "measurement")
LOSS_KINDS = ("quadratic", "linear", "total-variation")
OBJECTIVES = ("max", "sum")
DISTRIBUTION_KINDS = (
    "heterodyne",
    "gaussian-general-dyne",
    "gaussian-photocount",
    "gg-fixed-coefficients",
    "half-space",
)
SQUEEZE_LIMIT = 1.5
PROBABILITY_TOL = 1e-9
MIN_TEST_SAMPLES = 100

ROLE_HYPOTHESES = {
    "state": ("gaussian-state", "gg-fixed-coeff"),
    "channel": ("gaussian-channel",),
    "measurement": ("gaussian-effect",),
}


def _softplus(x: ty.Any) -> ty.Any:
    return np.logaddexp(0.0, x)


def _sigmoid(x: float) -> float:
    return float(scipy.special.expit(x))


def _symplectic_size(n: int) -> int:
    return n + 2 * n * n


def _covariance_size(n: int) -> int:
    return _symplectic_size(n) + n


def param_count(kind: str, n: int) -> int:
    "Length of the parameter vector decoding to an n-mode hypothesis of `kind`"
    if kind in ("gaussian-state", "gaussian-effect"):
        return 2 * n + _covariance_size(n)
    if kind == "gaussian-channel":
        return 2 * n + _symplectic_size(n) + 1 + _covariance_size(n)
    if kind == "gg-fixed-coeff":
        return 2 * n + _symplectic_size(n)
    raise UnsupportedClassError(f"Unknown hypothesis class '{kind}'")


def _hermitian(params: np.ndarray, n: int) -> np.ndarray:
    herm = np.diag(params[:n]).astype(complex)
    upper = np.triu_indices(n, k=1)
    count = len(upper[0])
    herm[upper] = params[n : n + count] + 1j * params[n + count : n + 2 * count]
    return herm + np.triu(herm, k=1).conj().T  # type: ignore[no-any-return]


def _decode_symplectic(params: np.ndarray, n: int) -> np.ndarray:
    r = SQUEEZE_LIMIT * np.tanh(params[:n])
    u1 = scipy.linalg.expm(1j * _hermitian(params[n : n + n * n], n))
    u2 = scipy.linalg.expm(1j * _hermitian(params[n + n * n :], n))
    return passive_symplectic(u1) @ squeezer(r) @ passive_symplectic(u2)  # type: ignore[no-any-return]


def _decode_covariance(params: np.ndarray, n: int) -> np.ndarray:
    split = _symplectic_size(n)
    symp = _decode_symplectic(params[:split], n)
    nu = 0.5 + _softplus(params[split:])
    cov = symp @ np.diag(np.repeat(nu, 2)) @ symp.T
    return (cov + cov.T) / 2  # type: ignore[no-any-return]


@attrs.frozen(eq=False)
class HypothesisParam:
    """Unconstrained parameter vector of a hypothesis together with its class

    Parameters
    ----------
    kind : str
        one of "gaussian-state", "gaussian-channel", "gg-fixed-coeff", "gaussian-effect"
    n : int
        number of modes
    theta : np.ndarray
        parameters, see `param_count` for their number
    template : GGState, optional
        the fixed-coefficient state that "gg-fixed-coeff" hypotheses transform
    """

    kind: str = attrs.field()
    n: int = attrs.field(converter=int)
    theta: np.ndarray = attrs.field(converter=lambda t: np.asarray(t, dtype=float).reshape(-1))
    template: ty.Optional[GGState] = attrs.field(default=None)

    @kind.validator
    def _check_kind(self, _: attrs.Attribute, value: str) -> None:
        if value not in HYPOTHESIS_KINDS:
            raise UnsupportedClassError(
                f"Unknown hypothesis class '{value}', expected one of {HYPOTHESIS_KINDS}"
            )

    def __attrs_post_init__(self) -> None:
        expected = param_count(self.kind, self.n)
        if self.theta.size != expected:
            raise ShapeError(
                f"'{self.kind}' on {self.n} modes needs {expected} parameters, "
                f"found {self.theta.size}"
            )
        if self.kind == "gg-fixed-coeff":
            if self.template is None:
                raise ValidationError("'gg-fixed-coeff' hypotheses need a template state")
            if self.template.n != self.n:
                raise ShapeError(
                    f"Template acts on {self.template.n} modes, hypothesis on {self.n}"
                )

    @classmethod
    def random(
        cls,
        kind: str,
        n: int,
        rng: np.random.Generator,
        template: GGState | None = None,
        scale: float = 0.5,
    ) -> "HypothesisParam":
        return cls(kind, n, scale * rng.normal(size=param_count(kind, n)), template)

    def with_theta(self, theta: np.ndarray) -> "HypothesisParam":
        return HypothesisParam(self.kind, self.n, theta, self.template)

    def decode(self) -> ty.Union[GaussianState, GaussianChannel, GeneralDyneEffect, GGState]:
        n, theta = self.n, self.theta
        if self.kind == "gaussian-state":
            return GaussianState(theta[: 2 * n], _decode_covariance(theta[2 * n :], n))
        if self.kind == "gaussian-effect":
            return GeneralDyneEffect(theta[: 2 * n], _decode_covariance(theta[2 * n :], n))
        if self.kind == "gaussian-channel":
            split = 2 * n + _symplectic_size(n)
            symp = _decode_symplectic(theta[2 * n : split], n)
            eta = _sigmoid(theta[split])
            env = _decode_covariance(theta[split + 1 :], n)
            return GaussianChannel(theta[: 2 * n], np.sqrt(eta) * symp, (1 - eta) * env)
        assert self.template is not None
        disp = theta[: 2 * n]
        symp = _decode_symplectic(theta[2 * n :], n)
        tmpl = self.template
        return GGState(
            tmpl.coeffs,
            tmpl.means @ symp.T + disp,
            np.einsum("ab,ibc,dc->iad", symp, tmpl.covs, symp),
            component_limit=tmpl.component_limit,
        )


AnyState = ty.Union[GaussianState, GGState]
AnyChannel = ty.Union[GaussianChannel, GGChannel]
AnyEffect = ty.Union[GeneralDyneEffect, GGEffect, PhotoCountEffect, HalfSpaceEffect]


def circuit_probability(
    state: AnyState,
    channel: AnyChannel | None,
    effect: AnyEffect,
    clamp_log: ClampLog | None = None,
) -> float:
    """Probability of the binary effect at the output of the channel, dispatched to the
    Gaussian, photodetection, half-space or GG engine by the types involved"""
    n = state.n
    gaussian = isinstance(state, GaussianState) and not isinstance(channel, GGChannel)
    if isinstance(effect, PhotoCountEffect):
        if gaussian:
            return gp_coarse_probability(
                state, channel or GaussianChannel.identity(n), effect, clamp_log  # type: ignore[arg-type]
            )
        return gg_photocount_probability(state, channel, effect, clamp_log)
    if isinstance(effect, HalfSpaceEffect):
        if not gaussian:
            raise UnsupportedClassError("Half-space readouts need Gaussian states and channels")
        return half_space_probability(
            state, channel or GaussianChannel.identity(n), effect  # type: ignore[arg-type]
        )
    if gaussian and isinstance(effect, GeneralDyneEffect):
        return gaussian_effect_probability(
            state, channel or GaussianChannel.identity(n), effect, clamp_log  # type: ignore[arg-type]
        )
    return gg_outcome_probability(state, channel, effect, clamp_log)


@attrs.frozen(eq=False)
class Probe:
    """The known parts of a circuit; the slot named by the learning role is left empty
    and filled by the target or a hypothesis"""

    state: ty.Optional[AnyState] = None
    channel: ty.Optional[AnyChannel] = None
    effect: ty.Optional[AnyEffect] = None

    def complete(self, obj: ty.Any, role: str) -> tuple[ty.Any, ty.Any, ty.Any]:
        if role == "state":
            return obj, self.channel, self.effect
        if role == "channel":
            return self.state, obj, self.effect
        if role == "measurement":
            return self.state, self.channel, obj
        raise ValidationError(f"Unknown learning role '{role}', expected one of {ROLES}")

    def probability(self, obj: ty.Any, role: str, clamp_log: ClampLog | None = None) -> float:
        state, channel, effect = self.complete(obj, role)
        prob = circuit_probability(state, channel, effect, clamp_log)
        if prob < -PROBABILITY_TOL or prob > 1 + PROBABILITY_TOL:
            raise EngineError(f"Probability {prob} lies outside [0, 1]")
        return min(max(prob, 0.0), 1.0)


def _outcome_converter(value: ty.Any) -> int:
    value = int(value)
    if value not in (0, 1):
        raise ValidationError(f"Outcomes are bits, found {value}")
    return value


@attrs.frozen(eq=False)
class TrainingSample:

    probe: Probe
    outcome: int = attrs.field(converter=_outcome_converter)


@attrs.define
class SampleDistribution:
    """Distribution Q over probes

    Parameters
    ----------
    kind : str
        "heterodyne" (heterodyne effects at uniform outcomes), "gaussian-general-dyne"
        (random general-dyne effects), "gaussian-photocount" (photon-number projectors),
        "gg-fixed-coefficients" (admissible projections onto the template state) or
        "half-space" (thresholded general-dyne readouts)
    n : int
        number of modes
    energy_bound : float
        bound on mean norms and excess covariance energy of random states and channels
    outcome_range : float
        outcomes, displacements and thresholds are drawn from [-range, range]
    cutoff : int
        photon-number cutoff of photo-count effects
    random_channel : bool
        whether probes carry random Gaussian channels instead of the identity
    template : GGState, optional
        projection state of "gg-fixed-coefficients" effects, the '+' cat with alpha = 1
        by default
    fixed_probe : Probe, optional
        always return this probe (for consistency checks)
    seed : int, optional
        seed of the probe and outcome generator
    """

    kind: str = attrs.field()
    n: int = 1
    energy_bound: float = 1.0
    outcome_range: float = 2.0
    cutoff: int = 4
    random_channel: bool = False
    template: ty.Optional[GGState] = None
    fixed_probe: ty.Optional[Probe] = None
    seed: ty.Optional[int] = None

    @kind.validator
    def _check_kind(self, _: attrs.Attribute, value: str) -> None:
        if value not in DISTRIBUTION_KINDS:
            raise ValidationError(
                f"Unknown sample distribution '{value}', expected one of {DISTRIBUTION_KINDS}"
            )

    def _effect(self, rng: np.random.Generator) -> AnyEffect:
        n, span = self.n, self.outcome_range
        if self.kind == "heterodyne":
            return GeneralDyneEffect.heterodyne(rng.uniform(-span, span, 2 * n))
        if self.kind == "gaussian-general-dyne":
            cov = random_gaussian_state(n, self.energy_bound, rng).cov
            return GeneralDyneEffect(rng.uniform(-span, span, 2 * n), cov)
        if self.kind == "gaussian-photocount":
            k = tuple(int(i) for i in rng.integers(0, self.cutoff + 1, n))
            return PhotoCountEffect(self.cutoff, {k: 1.0})
        if self.kind == "half-space":
            direction = rng.normal(size=2 * n)
            return HalfSpaceEffect(
                direction / np.linalg.norm(direction), rng.uniform(-span / 2, span / 2)
            )
        template = self.template
        if template is None:
            template = make_cat_state(1.0, 1)
        return GGEffect.admissible(
            template, random_symplectic(n, rng, max_squeezing=0.3), rng.uniform(-span, span, 2 * n)
        )

    def _channel(self, rng: np.random.Generator) -> GaussianChannel:
        if self.random_channel:
            return random_gaussian_channel(self.n, self.energy_bound, rng)
        return GaussianChannel.identity(self.n)

    def draw_probe(self, rng: np.random.Generator, role: str = "state") -> Probe:
        if self.fixed_probe is not None:
            return self.fixed_probe
        if role == "state":
            return Probe(channel=self._channel(rng), effect=self._effect(rng))
        if role == "channel":
            state = random_gaussian_state(self.n, self.energy_bound, rng)
            return Probe(state=state, effect=self._effect(rng))
        if role == "measurement":
            state = random_gaussian_state(self.n, self.energy_bound, rng)
            return Probe(state=state, channel=self._channel(rng))
        raise ValidationError(f"Unknown learning role '{role}', expected one of {ROLES}")

    def draw_probes(self, count: int, rng: np.random.Generator, role: str = "state") -> list[Probe]:
        return [self.draw_probe(rng, role) for _ in range(count)]


def draw_training_set(
    target: ty.Any,
    dist: SampleDistribution,
    count: int,
    role: str = "state",
    seed: int | None = None,
) -> list[TrainingSample]:
    """Draws `count` i.i.d. probes from the distribution and a Bernoulli outcome for each
    with the target's probability"""
    if count < 1:
        raise ValidationError(f"Need at least one training sample, found {count}")
    rng = np.random.default_rng(dist.seed if seed is None else seed)
    if dist.fixed_probe is not None:
        probes = [dist.fixed_probe] * count
        probs = np.full(count, dist.fixed_probe.probability(target, role))
    else:
        probes = dist.draw_probes(count, rng, role)
        clamp_log = ClampLog()
        probs = np.array([p.probability(target, role, clamp_log) for p in probes])
    outcomes = rng.random(count) < probs
    logger.debug("Drew %d training samples (mean outcome %.4f)", count, outcomes.mean())
    return [TrainingSample(p, int(b)) for p, b in zip(probes, outcomes)]


@attrs.frozen(eq=False)
class _GaussianBatch:
    """Probe parameters stacked along a leading axis for vectorised evaluation of
    Gaussian hypotheses"""

    role: str
    readout: str
    means: ty.Optional[np.ndarray] = None
    covs: ty.Optional[np.ndarray] = None
    disps: ty.Optional[np.ndarray] = None
    x_mats: ty.Optional[np.ndarray] = None
    y_mats: ty.Optional[np.ndarray] = None
    points: ty.Optional[np.ndarray] = None
    thresholds: ty.Optional[np.ndarray] = None
    eff_covs: ty.Optional[np.ndarray] = None

    @classmethod
    def build(cls, probes: ty.Sequence[Probe], role: str) -> ty.Optional["_GaussianBatch"]:
        kwargs: dict[str, ty.Any] = {}
        if role in ("state", "channel"):
            effects = [p.effect for p in probes]
            if all(isinstance(e, GeneralDyneEffect) for e in effects):
                readout = "general-dyne"
                kwargs["points"] = np.stack([e.outcome for e in effects])  # type: ignore[union-attr]
            elif all(isinstance(e, HalfSpaceEffect) for e in effects):
                readout = "half-space"
                kwargs["points"] = np.stack([e.direction for e in effects])  # type: ignore[union-attr]
                kwargs["thresholds"] = np.array([e.threshold for e in effects])  # type: ignore[union-attr]
            else:
                return None
            kwargs["eff_covs"] = np.stack([e.cov for e in effects])  # type: ignore[union-attr]
        else:
            readout = "general-dyne"
        if role == "state":
            channels = [p.channel or GaussianChannel.identity(probes[0].effect.n) for p in probes]  # type: ignore[union-attr]
            if not all(isinstance(c, GaussianChannel) for c in channels):
                return None
            kwargs["disps"] = np.stack([c.disp for c in channels])
            kwargs["x_mats"] = np.stack([c.x_mat for c in channels])
            kwargs["y_mats"] = np.stack([c.y_mat for c in channels])
        elif role == "channel":
            if not all(isinstance(p.state, GaussianState) for p in probes):
                return None
            kwargs["means"] = np.stack([p.state.mean for p in probes])  # type: ignore[union-attr]
            kwargs["covs"] = np.stack([p.state.cov for p in probes])  # type: ignore[union-attr]
        else:
            if not all(
                isinstance(p.state, GaussianState)
                and (p.channel is None or isinstance(p.channel, GaussianChannel))
                for p in probes
            ):
                return None
            outs = [
                p.state if p.channel is None else apply_gaussian_channel(p.state, p.channel)  # type: ignore[arg-type]
                for p in probes
            ]
            kwargs["means"] = np.stack([o.mean for o in outs])  # type: ignore[union-attr]
            kwargs["covs"] = np.stack([o.cov for o in outs])  # type: ignore[union-attr]
        return cls(role=role, readout=readout, **kwargs)

    def probabilities(self, obj: ty.Any) -> np.ndarray:
        if self.role == "state":
            out_means = np.einsum("tab,b->ta", self.x_mats, obj.mean) + self.disps
            out_covs = np.einsum("tab,bc,tdc->tad", self.x_mats, obj.cov, self.x_mats) + self.y_mats
        elif self.role == "channel":
            out_means = self.means @ obj.x_mat.T + obj.disp
            out_covs = np.einsum("ab,tbc,dc->tad", obj.x_mat, self.covs, obj.x_mat) + obj.y_mat
        else:
            out_means, out_covs = self.means, self.covs
        if self.role == "measurement":
            points = np.broadcast_to(obj.outcome, out_means.shape)
            totals = out_covs + obj.cov
        else:
            points = self.points
            totals = out_covs + self.eff_covs
        if self.readout == "half-space":
            centre = np.einsum("ta,ta->t", points, out_means) - self.thresholds
            spread = np.sqrt(np.einsum("ta,tab,tb->t", points, totals, points))
            return scipy.stats.norm.cdf(centre / spread)  # type: ignore[no-any-return]
        diff = points - out_means
        sol = np.linalg.solve(totals, diff[..., None])[..., 0]
        quad = np.einsum("ta,ta->t", diff, sol)
        _, logdet = np.linalg.slogdet(totals)
        return np.minimum(np.exp(-quad / 2 - logdet / 2), 1.0)  # type: ignore[no-any-return]


class _Predictor:
    """Probabilities of a hypothesis on a fixed list of probes"""

    def __init__(self, probes: ty.Sequence[Probe], role: str):
        self.probes = list(probes)
        self.role = role
        self.batch = _GaussianBatch.build(self.probes, role)

    def __call__(self, obj: ty.Any) -> np.ndarray:
        if self.batch is not None and isinstance(
            obj, (GaussianState, GaussianChannel, GeneralDyneEffect)
        ):
            return self.batch.probabilities(obj)
        clamp_log = ClampLog()
        return np.array([p.probability(obj, self.role, clamp_log) for p in self.probes])


def _as_object(hyp: ty.Any) -> ty.Any:
    return hyp.decode() if isinstance(hyp, HypothesisParam) else hyp


def sample_losses(probs: np.ndarray, outcomes: np.ndarray, kind: str) -> np.ndarray:
    "Per-sample losses of predicted probabilities against observed bits"
    if kind not in LOSS_KINDS:
        raise ValidationError(f"Unknown loss '{kind}', expected one of {LOSS_KINDS}")
    diff = np.asarray(probs, dtype=float) - np.asarray(outcomes, dtype=float)
    if kind == "quadratic":
        return diff**2  # type: ignore[no-any-return]
    return np.abs(diff)  # type: ignore[no-any-return]


def misclassification_error(target_prob: ty.Any, hyp_prob: ty.Any) -> ty.Any:
    """Expected |h - b| for b ~ Bernoulli(f): f (1 - h) + (1 - f) h"""
    f = np.asarray(target_prob, dtype=float)
    h = np.asarray(hyp_prob, dtype=float)
    return f * (1 - h) + (1 - f) * h


@attrs.frozen(eq=False)
class LossSummary:

    per_sample: np.ndarray
    maximum: float
    mean: float
    total: float

    @classmethod
    def from_losses(cls, losses: np.ndarray) -> "LossSummary":
        return cls(losses, float(np.max(losses)), float(np.mean(losses)), float(np.sum(losses)))


def empirical_loss(
    hyp: ty.Any,
    samples: ty.Sequence[TrainingSample],
    kind: str = "linear",
    role: str = "state",
) -> LossSummary:
    """Per-sample losses of a hypothesis (parameters or decoded object) with their
    maximum, mean and cumulative total"""
    predictor = _Predictor([s.probe for s in samples], role)
    outcomes = np.array([s.outcome for s in samples])
    return LossSummary.from_losses(sample_losses(predictor(_as_object(hyp)), outcomes, kind))


@attrs.define
class ErmConfig:
    """Settings of empirical risk minimisation

    `objective` "max" minimises the largest per-sample loss, "sum" the cumulative loss.
    """

    loss: str = "quadratic"
    objective: str = "sum"
    optimizer: OptimizerConfig = attrs.field(factory=OptimizerConfig)
    seed: ty.Optional[int] = None
    template: ty.Optional[GGState] = None

    def __attrs_post_init__(self) -> None:
        if self.loss not in LOSS_KINDS:
            raise ValidationError(f"Unknown loss '{self.loss}', expected one of {LOSS_KINDS}")
        if self.objective not in OBJECTIVES:
            raise ValidationError(
                f"Unknown objective '{self.objective}', expected one of {OBJECTIVES}"
            )


@attrs.define
class GapStatistics:
    """Distribution of the true loss |P_hyp - P_target| over held-out probes"""

    losses: np.ndarray
    quantiles: dict[str, float]
    exceedance: dict[float, float]
    eta: float

    def to_dict(self) -> dict[str, ty.Any]:
        return {
            "quantiles": self.quantiles,
            "exceedance": {str(g): f for g, f in self.exceedance.items()},
            "eta": self.eta,
            "mean": float(np.mean(self.losses)),
        }


@attrs.define
class LearningReport:

    eta: float
    mean_loss: float
    objective_value: float
    converged: bool
    evaluations: int
    trace: list[float]
    seed: ty.Optional[int]
    wall_time: float
    gap: ty.Optional[GapStatistics] = None

    def to_dict(self) -> dict[str, ty.Any]:
        return {
            "eta": self.eta,
            "mean_loss": self.mean_loss,
            "objective_value": self.objective_value,
            "converged": self.converged,
            "evaluations": self.evaluations,
            "trace": self.trace,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "gap": self.gap.to_dict() if self.gap is not None else None,
        }


def _infer_modes(samples: ty.Sequence[TrainingSample]) -> int:
    probe = samples[0].probe
    for part in (probe.state, probe.channel, probe.effect):
        if part is not None:
            return int(part.n)
    raise ValidationError("Training probe carries no circuit element")


def erm_search(
    kind: str,
    samples: ty.Sequence[TrainingSample],
    role: str = "state",
    config: ErmConfig | None = None,
) -> tuple[HypothesisParam, LearningReport]:
    """Searches the hypothesis class for the parameters minimising the empirical
    objective. The best point found is returned even when the optimiser does not
    converge; the report then carries `converged=False`."""
    if not samples:
        raise ValidationError("Empirical risk minimisation needs at least one sample")
    if kind not in ROLE_HYPOTHESES.get(role, ()):
        raise UnsupportedClassError(f"Class '{kind}' cannot be learned in the '{role}' role")
    config = config or ErmConfig()
    n = _infer_modes(samples)
    rng = np.random.default_rng(config.seed)
    predictor = _Predictor([s.probe for s in samples], role)
    outcomes = np.array([s.outcome for s in samples], dtype=float)
    reduce = np.max if config.objective == "max" else np.mean
    start = HypothesisParam.random(kind, n, rng, template=config.template)

    def objective(theta: np.ndarray) -> float:
        obj = start.with_theta(theta).decode()
        return float(reduce(sample_losses(predictor(obj), outcomes, config.loss)))

    result = minimize(objective, start.theta.size, config.optimizer, rng, x0=start.theta)
    best = start.with_theta(result.x)
    summary = empirical_loss(best, samples, "linear", role)
    if not result.converged:
        logger.warning(
            "Search over '%s' did not converge; best objective %.4g", kind, result.value
        )
    logger.info(
        "Learned '%s' hypothesis from %d samples: max linear loss %.4f, mean %.4f",
        kind,
        len(samples),
        summary.maximum,
        summary.mean,
    )
    report = LearningReport(
        eta=summary.maximum,
        mean_loss=summary.mean,
        objective_value=result.value,
        converged=result.converged,
        evaluations=result.evaluations,
        trace=result.trace,
        seed=config.seed,
        wall_time=result.wall_time,
    )
    return best, report


def evaluate_generalization(
    hyp: ty.Any,
    target: ty.Any,
    dist: SampleDistribution,
    n_test: int = 500,
    gammas: ty.Sequence[float] = (0.05, 0.1, 0.2),
    eta: float = 0.0,
    role: str = "state",
    seed: int | None = None,
) -> GapStatistics:
    """Empirical distribution of the true loss |P_hyp - P_target| on fresh probes and
    the fraction of probes on which it exceeds eta + gamma"""
    if n_test < MIN_TEST_SAMPLES:
        raise ValidationError(
            f"Need at least {MIN_TEST_SAMPLES} held-out probes, found {n_test}"
        )
    rng = np.random.default_rng(seed)
    probes = dist.draw_probes(n_test, rng, role)
    predictor = _Predictor(probes, role)
    losses = np.sort(np.abs(predictor(_as_object(hyp)) - predictor(_as_object(target))))
    quantiles = {
        f"q{int(q * 100)}": float(np.quantile(losses, q)) for q in (0.5, 0.9, 0.95)
    }
    exceedance = {float(g): float(np.mean(losses > eta + g)) for g in gammas}
    return GapStatistics(losses=losses, quantiles=quantiles, exceedance=exceedance, eta=eta)


def _coeffs_converter(value: ty.Any) -> np.ndarray:
    return np.atleast_2d(np.asarray(value, dtype=float))


@attrs.frozen(eq=False)
class EncodingPoly:
    """Polynomials of degree <= order mapping a scalar input x to circuit parameters;
    row i of `coeffs` holds the coefficients of output i in increasing powers of x"""

    order: int = attrs.field(converter=int)
    coeffs: np.ndarray = attrs.field(converter=_coeffs_converter)

    def __attrs_post_init__(self) -> None:
        if self.order < 0 or self.coeffs.shape[1] != self.order + 1:
            raise ShapeError(
                f"Order {self.order} encoding needs {self.order + 1} coefficients per "
                f"output, found {self.coeffs.shape[1]}"
            )

    @property
    def outputs(self) -> int:
        return self.coeffs.shape[0]

    def __call__(self, x: float) -> np.ndarray:
        return self.coeffs @ (float(x) ** np.arange(self.order + 1))  # type: ignore[no-any-return]


@attrs.frozen(eq=False)
class EncodedTask:
    """Discrimination or synthesis task: input x selects the state rho_x (mean encoded
    polynomially, fixed covariance) and the half-space readout M_x whose success is
    wanted (direction and threshold encoded polynomially)"""

    n: int
    state_mean: EncodingPoly
    readout: EncodingPoly
    inputs: np.ndarray = attrs.field(converter=lambda v: np.asarray(v, dtype=float).reshape(-1))
    weights: np.ndarray = attrs.field(
        default=None, converter=lambda v: None if v is None else np.asarray(v, dtype=float)
    )
    state_cov: np.ndarray = attrs.field(default=None)

    def __attrs_post_init__(self) -> None:
        if self.weights is None:
            object.__setattr__(self, "weights", np.full(self.inputs.size, 1 / self.inputs.size))
        if self.state_cov is None:
            object.__setattr__(self, "state_cov", np.eye(2 * self.n) / 2)
        if self.state_mean.outputs != 2 * self.n or self.readout.outputs != 2 * self.n + 1:
            raise ShapeError(
                f"Encodings must output {2 * self.n} mean and {2 * self.n + 1} readout "
                f"parameters, found {self.state_mean.outputs} and {self.readout.outputs}"
            )
        if self.weights.shape != self.inputs.shape or abs(self.weights.sum() - 1) > 1e-9:
            raise ValidationError("Input weights must match the inputs and sum to one")

    @property
    def order(self) -> int:
        return max(self.state_mean.order, self.readout.order)

    def pair(self, x: float) -> tuple[GaussianState, HalfSpaceEffect]:
        readout = self.readout(x)
        return (
            GaussianState(self.state_mean(x), self.state_cov),
            HalfSpaceEffect(readout[:-1], readout[-1]),
        )

    def draw_inputs(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.inputs, size=count, p=self.weights)  # type: ignore[no-any-return]

    def expected_success(self, channel: GaussianChannel) -> float:
        "E_x P(M_x | channel, rho_x) over the input distribution"
        total = 0.0
        for x, weight in zip(self.inputs, self.weights):
            state, effect = self.pair(x)
            total += weight * half_space_probability(state, channel, effect)
        return total

    @classmethod
    def coherent_discrimination(cls, alpha: float, n: int = 1) -> "EncodedTask":
        """Tell |alpha> (x = 1) from |-alpha> (x = 0) on the first mode by the sign of
        a heterodyne x-quadrature outcome"""
        mean = np.zeros((2 * n, 2))
        mean[0] = [-np.sqrt(2) * alpha, 2 * np.sqrt(2) * alpha]
        readout = np.zeros((2 * n + 1, 2))
        readout[0] = [-1.0, 2.0]
        return cls(n, EncodingPoly(1, mean), EncodingPoly(1, readout), [0.0, 1.0])


def draw_task_samples(
    task: EncodedTask, count: int, rng: np.random.Generator
) -> list[TrainingSample]:
    """Samples (rho_x, M_x) with the trivial target concept f = 1, so every outcome is 1
    and the total-variation loss of a channel is sum_t (1 - P(M_x_t | channel, rho_x_t))"""
    samples = []
    for x in task.draw_inputs(count, rng):
        state, effect = task.pair(x)
        samples.append(TrainingSample(Probe(state=state, effect=effect), 1))
    return samples


@attrs.define
class TaskReport:

    hypothesis: HypothesisParam
    report: LearningReport
    heldout_loss: float
    success_probability: float
    grid_optimum: ty.Optional[float] = None

    def to_dict(self) -> dict[str, ty.Any]:
        return {
            "heldout_loss": self.heldout_loss,
            "success_probability": self.success_probability,
            "grid_optimum": self.grid_optimum,
            "report": self.report.to_dict(),
        }


def grid_oracle(
    task: EncodedTask,
    axes: ty.Mapping[int, ty.Sequence[float]],
    base: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Exhaustive search of the channel class over a grid on the parameter coordinates
    named in `axes`, others held at `base`; returns the best expected success and its
    parameters"""
    size = param_count("gaussian-channel", task.n)
    base = np.zeros(size) if base is None else np.asarray(base, dtype=float)
    indices = list(axes)
    best_value, best_theta = -np.inf, base
    for values in itertools.product(*(axes[i] for i in indices)):
        theta = base.copy()
        theta[indices] = values
        channel = HypothesisParam("gaussian-channel", task.n, theta).decode()
        value = task.expected_success(channel)  # type: ignore[arg-type]
        if value > best_value:
            best_value, best_theta = value, theta
    return best_value, best_theta


def task_learning_run(
    task: EncodedTask,
    count: int,
    kind: str = "gaussian-channel",
    config: ErmConfig | None = None,
    seed: int | None = None,
    grid_axes: ty.Mapping[int, ty.Sequence[float]] | None = None,
) -> TaskReport:
    """Learns a channel minimising the cumulative loss sum_t (1 - P(M_x|channel, rho_x))
    from `count` sampled inputs, and reports its exact expected loss over the input
    distribution (and the grid optimum when axes are given)"""
    if kind != "gaussian-channel":
        raise UnsupportedClassError(f"Task learning trains channels, not '{kind}'")
    config = config or ErmConfig(loss="total-variation", objective="sum", seed=seed)
    rng = np.random.default_rng(seed)
    start = time.monotonic()
    samples = draw_task_samples(task, count, rng)
    hyp, report = erm_search(kind, samples, "channel", config)
    success = task.expected_success(hyp.decode())  # type: ignore[arg-type]
    grid = grid_oracle(task, grid_axes)[0] if grid_axes else None
    logger.info(
        "Task learning from %d samples reached success %.4f in %.1fs",
        count,
        success,
        time.monotonic() - start,
    )
    return TaskReport(
        hypothesis=hyp,
        report=report,
        heldout_loss=1 - success,
        success_probability=success,
        grid_optimum=grid,
    )
