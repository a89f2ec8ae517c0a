"""Experiment configurations (TOML), their execution over a thread pool and the
CSV/JSON result records they produce."""
import csv
import datetime
import sys
import time
import traceback
import typing as ty
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
import attrs
import numpy as np
import scipy.stats
from tqdm import tqdm
from . import __version__
from .bounds import DIMENSION_FORMS, SETTINGS, pdim_upper_bound, sample_complexity_bound
from .dimensions import (
    METRICS,
    FunctionClassHandle,
    constant_class,
    cover_profile,
    displacement_class,
    cat_family_class,
    fat_shattering_lower_bound,
    gaussian_state_class,
    sine_class,
)
from .exceptions import ConfigError, CvLearnError, InsufficientGridError
from .gg import GGConstraintConstants, make_cat_state, make_gkp_state
from .learner import (
    DISTRIBUTION_KINDS,
    HYPOTHESIS_KINDS,
    LOSS_KINDS,
    MIN_TEST_SAMPLES,
    OBJECTIVES,
    ROLE_HYPOTHESES,
    ROLES,
    EncodedTask,
    EncodingPoly,
    ErmConfig,
    SampleDistribution,
    circuit_probability,
    draw_training_set,
    erm_search,
    evaluate_generalization,
    task_learning_run,
)
from .optimize import OptimizerConfig
from .serialization import canonical_json, config_hash, from_dict, load, to_dict
from .symplectic import (
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    random_gaussian_state,
)
from .utils import logger, worker_count

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENT_KINDS = ("prob", "sample", "learn-state", "learn-task", "bound", "dims", "sweep")
SWEEP_COLUMNS = ("setting", "n", "T", "seed", "eta", "gap_q50", "gap_q95", "exceed_frac", "wall_ms")
MIN_GRID_POINTS = 3


def _from_table(klass: type, table: ty.Any, where: str) -> ty.Any:
    """Instantiates an attrs class from a TOML table, rejecting unknown keys"""
    if not isinstance(table, dict):
        raise ConfigError(f"'{where}' must be a table, found {type(table).__name__}")
    fields = {f.name: f for f in attrs.fields(klass)}
    kwargs = {}
    for key, value in table.items():
        name = key.replace("-", "_")
        if name == "class":
            name = "class_"
        if name not in fields:
            raise ConfigError(
                f"Unknown key '{key}' in '{where}', expected one of "
                f"{sorted(f.replace('_', '-').rstrip('-') for f in fields)}"
            )
        nested = fields[name].type
        if isinstance(nested, type) and attrs.has(nested):
            value = _from_table(nested, value, f"{where}.{key}")
        kwargs[name] = value
    try:
        return klass(**kwargs)
    except (TypeError, ValueError, CvLearnError) as e:
        raise ConfigError(f"Invalid '{where}' settings: {e}")


_positive = attrs.validators.gt(0)
_probability = attrs.validators.and_(attrs.validators.gt(0), attrs.validators.lt(1))

STATE_SHORTHANDS = ("vacuum", "random", "cat+", "cat-", "gkp")
CHANNEL_SHORTHANDS = ("identity",)
EFFECT_SHORTHANDS = ("heterodyne",)


def _object_ref(shorthands: ty.Sequence[str]) -> ty.Callable[[ty.Any, attrs.Attribute, ty.Any], None]:
    "Validator for config entries naming an object by shorthand, file or inline document"

    def check(_: ty.Any, attribute: attrs.Attribute, value: ty.Any) -> None:
        if isinstance(value, dict):
            return
        if value not in shorthands:
            raise ValueError(
                f"'{attribute.name}' must be one of {shorthands} or a table, found {value!r}"
            )

    return check


def _positive_ints(_: ty.Any, attribute: attrs.Attribute, value: ty.Any) -> None:
    if not value or not all(isinstance(v, int) and v > 0 for v in value):
        raise ValueError(f"'{attribute.name}' must be a list of positive integers, found {value!r}")


@attrs.define
class DistributionSettings:

    kind: str = attrs.field(default="heterodyne", validator=attrs.validators.in_(DISTRIBUTION_KINDS))
    energy_bound: float = attrs.field(default=1.0, validator=_positive)
    outcome_range: float = attrs.field(default=2.0, validator=_positive)
    cutoff: int = attrs.field(default=4, validator=_positive)
    random_channel: bool = False

    def build(self, n: int, seed: int | None) -> SampleDistribution:
        return SampleDistribution(
            self.kind,
            n=n,
            energy_bound=self.energy_bound,
            outcome_range=self.outcome_range,
            cutoff=self.cutoff,
            random_channel=self.random_channel,
            seed=seed,
        )


@attrs.define
class ProbSettings:

    state: ty.Any = attrs.field(default="vacuum", validator=_object_ref(STATE_SHORTHANDS))
    channel: ty.Any = attrs.field(default="identity", validator=_object_ref(CHANNEL_SHORTHANDS))
    effect: ty.Any = attrs.field(default="heterodyne", validator=_object_ref(EFFECT_SHORTHANDS))
    n: int = attrs.field(default=1, validator=_positive)


@attrs.define
class SampleSettings:

    target: ty.Any = attrs.field(default="vacuum", validator=_object_ref(STATE_SHORTHANDS))
    n: int = attrs.field(default=1, validator=_positive)
    role: str = attrs.field(default="state", validator=attrs.validators.in_(ROLES))
    T: int = attrs.field(default=100, validator=_positive)
    distribution: DistributionSettings = attrs.field(factory=DistributionSettings)


@attrs.define
class LearnStateSettings:

    target: ty.Any = attrs.field(default="vacuum", validator=_object_ref(STATE_SHORTHANDS))
    n: int = attrs.field(default=1, validator=_positive)
    role: str = attrs.field(default="state", validator=attrs.validators.in_(ROLES))
    hypothesis: str = attrs.field(
        default="gaussian-state", validator=attrs.validators.in_(HYPOTHESIS_KINDS)
    )
    T: int = attrs.field(default=2000, validator=_positive)
    loss: str = attrs.field(default="quadratic", validator=attrs.validators.in_(LOSS_KINDS))
    objective: str = attrs.field(default="sum", validator=attrs.validators.in_(OBJECTIVES))
    n_test: int = attrs.field(default=500, validator=attrs.validators.ge(MIN_TEST_SAMPLES))
    gamma: float = attrs.field(default=0.1, validator=_positive)
    eta_ref: float = 0.0
    setting: str = attrs.field(default="g", validator=attrs.validators.in_(SETTINGS))
    distribution: DistributionSettings = attrs.field(factory=DistributionSettings)
    optimizer: OptimizerConfig = attrs.field(factory=OptimizerConfig)

    def __attrs_post_init__(self) -> None:
        if self.hypothesis not in ROLE_HYPOTHESES[self.role]:
            raise ValueError(
                f"Hypothesis '{self.hypothesis}' cannot play the '{self.role}' role, "
                f"expected one of {ROLE_HYPOTHESES[self.role]}"
            )


@attrs.define
class LearnTaskSettings:

    alpha: float = 0.5
    n: int = attrs.field(default=1, validator=_positive)
    hypothesis: str = attrs.field(
        default="gaussian-channel", validator=attrs.validators.in_(HYPOTHESIS_KINDS)
    )
    encoding: ty.Optional[dict[str, ty.Any]] = None
    T: int = attrs.field(default=500, validator=_positive)
    grid_axes: ty.Optional[dict[str, list[float]]] = None
    optimizer: OptimizerConfig = attrs.field(factory=OptimizerConfig)

    def task(self) -> EncodedTask:
        if self.encoding is None:
            return EncodedTask.coherent_discrimination(self.alpha, self.n)
        enc = dict(self.encoding)
        try:
            order = int(enc.pop("order"))
            task = EncodedTask(
                self.n,
                EncodingPoly(order, enc.pop("state_mean")),
                EncodingPoly(order, enc.pop("readout")),
                enc.pop("inputs"),
                weights=enc.pop("weights", None),
            )
        except KeyError as e:
            raise ConfigError(f"Task encoding is missing {e}")
        if enc:
            raise ConfigError(f"Unknown keys in task encoding: {sorted(enc)}")
        return task

    def axes(self) -> dict[int, list[float]] | None:
        if not self.grid_axes:
            return None
        return {int(k): [float(v) for v in vals] for k, vals in self.grid_axes.items()}


@attrs.define
class BoundSettings:

    setting: str = attrs.field(default="g", validator=attrs.validators.in_(SETTINGS))
    n: list[int] = attrs.field(
        factory=lambda: [1],
        converter=lambda v: [v] if isinstance(v, int) else list(v),
        validator=_positive_ints,
    )
    eps: float = attrs.field(default=0.1, validator=_probability)
    delta: float = attrs.field(default=0.01, validator=_probability)
    gamma: ty.Optional[float] = attrs.field(default=None, validator=attrs.validators.optional(_positive))
    K: ty.Optional[int] = attrs.field(default=None, validator=attrs.validators.optional(_positive))
    ell: ty.Optional[int] = attrs.field(
        default=None, validator=attrs.validators.optional(attrs.validators.ge(0))
    )
    nu: float = attrs.field(default=1.0, validator=_positive)
    dimension: str = attrs.field(default="table", validator=attrs.validators.in_(DIMENSION_FORMS))
    b: ty.Optional[list[float]] = None


DIMENSION_CLASSES: dict[str, ty.Callable[[int], FunctionClassHandle]] = {
    "constant": lambda n: constant_class(),
    "sine": lambda n: sine_class(),
    "f_g-displacement": lambda n: displacement_class(n),
    "f_g": lambda n: gaussian_state_class(n),
    "f_gg-cat": lambda n: cat_family_class(),
}


@attrs.define
class DimsSettings:

    class_: str = attrs.field(
        default="f_g-displacement", validator=attrs.validators.in_(DIMENSION_CLASSES)
    )
    n: int = attrs.field(default=1, validator=_positive)
    gamma: float = attrs.field(default=0.1, validator=_positive)
    k_max: int = attrs.field(default=4, validator=_positive)
    budget: int = attrs.field(default=20_000, validator=_positive)
    eps: list[float] = attrs.field(
        factory=lambda: [0.1],
        validator=attrs.validators.deep_iterable(_positive, attrs.validators.instance_of(list)),
    )
    k: int = attrs.field(default=8, validator=_positive)
    sample_budget: int = attrs.field(default=1000, validator=_positive)
    metric: str = attrs.field(default="euclidean", validator=attrs.validators.in_(METRICS))


@attrs.define
class SweepSettings:

    ns: list[int] = attrs.field(factory=lambda: [1, 2, 3], validator=_positive_ints)
    Ts: list[int] = attrs.field(factory=lambda: [250, 1000, 4000], validator=_positive_ints)
    target: ty.Any = attrs.field(default="random", validator=_object_ref(STATE_SHORTHANDS))
    hypothesis: str = attrs.field(
        default="gaussian-state", validator=attrs.validators.in_(HYPOTHESIS_KINDS)
    )
    setting: str = attrs.field(default="g", validator=attrs.validators.in_(SETTINGS))
    loss: str = attrs.field(default="quadratic", validator=attrs.validators.in_(LOSS_KINDS))
    objective: str = attrs.field(default="sum", validator=attrs.validators.in_(OBJECTIVES))
    n_test: int = attrs.field(default=300, validator=attrs.validators.ge(MIN_TEST_SAMPLES))
    gamma: float = attrs.field(default=0.1, validator=_positive)
    gap_target: float = attrs.field(default=0.1, validator=_positive)
    bootstrap: int = attrs.field(default=1000, validator=_positive)
    distribution: DistributionSettings = attrs.field(factory=DistributionSettings)
    optimizer: OptimizerConfig = attrs.field(factory=OptimizerConfig)


_SECTIONS: dict[str, type] = {
    "prob": ProbSettings,
    "sample": SampleSettings,
    "learn-state": LearnStateSettings,
    "learn-task": LearnTaskSettings,
    "bound": BoundSettings,
    "dims": DimsSettings,
    "sweep": SweepSettings,
}


@attrs.define
class ExperimentConfig:
    """Validated experiment: the kind, its section of settings and the run options

    `base_dir` is where relative object files and the output directory are resolved.
    """

    kind: str
    settings: ty.Any
    seeds: list[int] = attrs.field(factory=lambda: [0])
    name: str = "results"
    output_dir: ty.Optional[str] = None
    threads: ty.Optional[int] = attrs.field(default=None, validator=attrs.validators.optional(_positive))
    time_budget: ty.Optional[float] = attrs.field(
        default=None, validator=attrs.validators.optional(_positive)
    )
    base_dir: Path = attrs.field(factory=Path.cwd, converter=Path)

    @property
    def out_dir(self) -> Path:
        out = Path(self.output_dir) if self.output_dir else Path("results")
        return out if out.is_absolute() else self.base_dir / out

    def canonical(self) -> dict[str, ty.Any]:
        dct = attrs.asdict(self)
        dct.pop("base_dir")
        return ty.cast(dict[str, ty.Any], _jsonable(dct))

    @property
    def hash(self) -> str:
        return config_hash(self.canonical())


def _jsonable(value: ty.Any) -> ty.Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value


def parse_config(raw: dict[str, ty.Any], base_dir: Path | str = ".") -> ExperimentConfig:
    raw = dict(raw)
    kind = raw.pop("kind", None)
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"Config 'kind' must be one of {EXPERIMENT_KINDS}, found {kind!r}")
    section = _from_table(_SECTIONS[kind], raw.pop(kind, {}), kind)
    kwargs: dict[str, ty.Any] = {}
    for key in ("seeds", "name", "output_dir", "threads", "time_budget"):
        alias = key.replace("_", "-")
        if key in raw or alias in raw:
            kwargs[key] = raw.pop(key if key in raw else alias)
    if raw:
        raise ConfigError(f"Unknown top-level keys in config: {sorted(raw)}")
    seeds = kwargs.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = kwargs["seeds"] = [seeds]
    if not isinstance(seeds, list) or not all(isinstance(s, int) for s in seeds):
        raise ConfigError(f"Config 'seeds' must be a list of integers, found {seeds!r}")
    if not seeds:
        raise ConfigError("Config needs at least one seed")
    try:
        return ExperimentConfig(kind=kind, settings=section, base_dir=Path(base_dir), **kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid run options in config: {e}")


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Could not parse '{path}' as TOML: {e}")
    except OSError as e:
        raise ConfigError(f"Could not read config '{path}': {e}")
    return parse_config(raw, base_dir=path.parent)


def resolve_object(ref: ty.Any, what: str, n: int, base_dir: Path, seed: int | None = None) -> ty.Any:
    """Object named by a config entry: a shorthand string, a {file = "..."} table or an
    inline serialized document"""
    if isinstance(ref, dict):
        if "file" in ref:
            path = Path(ref["file"])
            return load(path if path.is_absolute() else base_dir / path)
        return from_dict(ref)
    if not isinstance(ref, str):
        raise ConfigError(f"Cannot interpret {ref!r} as a {what}")
    if what == "state":
        if ref == "vacuum":
            return GaussianState.vacuum(n)
        if ref == "random":
            return random_gaussian_state(n, 1.0, np.random.default_rng(seed))
        if ref in ("cat+", "cat-") and n == 1:
            return make_cat_state(1.0, 1 if ref == "cat+" else -1)
        if ref == "gkp" and n == 1:
            return make_gkp_state(0.1, 2)
    elif what == "channel" and ref == "identity":
        return GaussianChannel.identity(n)
    elif what == "effect" and ref == "heterodyne":
        return GeneralDyneEffect.heterodyne(np.zeros(2 * n))
    raise ConfigError(f"Unknown {what} shorthand '{ref}' for {n} mode(s)")


@attrs.define
class ResultRecord:
    """Everything needed to trace a result file back to its configuration"""

    kind: str
    config_hash: str
    config: dict[str, ty.Any]
    version: str
    started: str
    finished: str
    wall_time: float
    rows: list[dict[str, ty.Any]]
    artifacts: list[dict[str, ty.Any]] = attrs.field(factory=list)
    summary: ty.Optional[dict[str, ty.Any]] = None
    failures: int = 0

    def to_dict(self) -> dict[str, ty.Any]:
        return ty.cast(dict[str, ty.Any], _jsonable(attrs.asdict(self)))


def write_csv(rows: ty.Sequence[dict[str, ty.Any]], path: Path, columns: ty.Sequence[str] | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(rows[0]) if rows else []
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _derived_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence([int(e) for e in entropy]).generate_state(1)[0])


def _run_parallel(
    tasks: ty.Sequence[tuple[ty.Any, ...]],
    func: ty.Callable[..., dict[str, ty.Any]],
    threads: int | None,
    raise_errors: bool,
    desc: str,
) -> tuple[list[dict[str, ty.Any]], int]:
    """Runs `func(*task)` for every task on a bounded thread pool; results come back in
    task order and failures are logged and counted unless `raise_errors`"""
    workers = worker_count(threads)
    results: list[dict[str, ty.Any] | None] = [None] * len(tasks)
    failures = 0
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(func, *task) for task in tasks]
        for index, future in enumerate(tqdm(futures, desc=desc, disable=len(tasks) < 2)):
            try:
                results[index] = future.result()
            except Exception as e:
                if raise_errors:
                    raise
                failures += 1
                logger.error(
                    f"Run {index} {tasks[index][:3]} failed: \"{e}\"\n{traceback.format_exc()}\n\n"
                )
    return [r for r in results if r is not None], failures


def _with_budget(optimizer: OptimizerConfig, budget: float | None) -> OptimizerConfig:
    return attrs.evolve(optimizer, time_budget=budget) if budget is not None else optimizer


def _learn_row(
    settings: ty.Union[LearnStateSettings, SweepSettings],
    config: ExperimentConfig,
    n: int,
    T: int,
    seed: int,
) -> dict[str, ty.Any]:
    start = time.monotonic()
    run_seed = _derived_seed(seed, n, T)
    role = getattr(settings, "role", "state")
    target = resolve_object(settings.target, "state", n, config.base_dir, seed=_derived_seed(seed, n))
    dist = settings.distribution.build(n, run_seed)
    samples = draw_training_set(target, dist, T, role=role)
    template = make_cat_state(1.0, 1) if settings.hypothesis == "gg-fixed-coeff" else None
    erm = ErmConfig(
        loss=settings.loss,
        objective=settings.objective,
        optimizer=_with_budget(settings.optimizer, config.time_budget),
        seed=run_seed,
        template=template,
    )
    hyp, report = erm_search(settings.hypothesis, samples, role, erm)
    eta_ref = getattr(settings, "eta_ref", 0.0)
    gap = evaluate_generalization(
        hyp,
        target,
        dist,
        n_test=settings.n_test,
        gammas=[settings.gamma],
        eta=eta_ref,
        role=role,
        seed=run_seed + 1,
    )
    report.gap = gap
    return {
        "setting": settings.setting,
        "n": n,
        "T": T,
        "seed": seed,
        "eta": report.eta,
        "gap_q50": gap.quantiles["q50"],
        "gap_q95": gap.quantiles["q95"],
        "exceed_frac": gap.exceedance[float(settings.gamma)],
        "wall_ms": int(1000 * (time.monotonic() - start)),
        "_artifact": {
            "n": n,
            "T": T,
            "seed": seed,
            "hypothesis": to_dict(hyp),
            "report": report.to_dict(),
        },
    }


def _split_artifacts(rows: list[dict[str, ty.Any]]) -> tuple[list[dict[str, ty.Any]], list[dict[str, ty.Any]]]:
    artifacts = [r.pop("_artifact") for r in rows if "_artifact" in r]
    return rows, artifacts


@attrs.define
class ScalingSummary:
    """Log-log fits of the sweep: samples needed against modes, and held-out gap
    against samples, each with a bootstrap confidence interval"""

    n_slope: ty.Optional[float] = None
    n_slope_ci: ty.Optional[tuple[float, float]] = None
    gap_slope: ty.Optional[float] = None
    gap_slope_ci: ty.Optional[tuple[float, float]] = None
    needed: list[dict[str, ty.Any]] = attrs.field(factory=list)

    def to_dict(self) -> dict[str, ty.Any]:
        return ty.cast(dict[str, ty.Any], _jsonable(attrs.asdict(self)))


def _bootstrap_slope(
    x: np.ndarray, y: np.ndarray, resamples: int, rng: np.random.Generator
) -> tuple[float, tuple[float, float]]:
    slope = float(scipy.stats.linregress(x, y).slope)
    slopes = []
    for _ in range(resamples):
        idx = rng.integers(0, len(x), size=len(x))
        if np.unique(x[idx]).size < 2:
            slopes.append(slope)
            continue
        slopes.append(float(scipy.stats.linregress(x[idx], y[idx]).slope))
    return slope, (float(np.percentile(slopes, 2.5)), float(np.percentile(slopes, 97.5)))


def sweep_scaling(
    rows: ty.Sequence[dict[str, ty.Any]],
    gap_target: float,
    resamples: int = 1000,
    seed: int | None = 0,
) -> ScalingSummary:
    """Fits log T_needed against log n, where T_needed is the smallest sample count whose
    95% held-out gap reaches `gap_target` (twice the largest count when none does), and
    log gap_q50 against log T. An axis is fitted when it has at least three distinct
    values; a grid where neither has raises InsufficientGridError."""
    ns = sorted({int(r["n"]) for r in rows})
    Ts = sorted({int(r["T"]) for r in rows})
    if len(ns) < MIN_GRID_POINTS and len(Ts) < MIN_GRID_POINTS:
        raise InsufficientGridError(
            f"Scaling fits need at least {MIN_GRID_POINTS} distinct values of n or T, "
            f"found n={ns}, T={Ts}"
        )
    rng = np.random.default_rng(seed)
    summary = ScalingSummary()
    if len(ns) >= MIN_GRID_POINTS:
        by_run: dict[tuple[int, int], list[dict[str, ty.Any]]] = {}
        for r in rows:
            by_run.setdefault((int(r["n"]), int(r["seed"])), []).append(r)
        for (n, s), runs in sorted(by_run.items()):
            reached = [int(r["T"]) for r in runs if r["gap_q95"] <= gap_target]
            summary.needed.append(
                {"n": n, "seed": s, "T_needed": min(reached) if reached else 2 * max(Ts)}
            )
        x = np.log([d["n"] for d in summary.needed])
        y = np.log([d["T_needed"] for d in summary.needed])
        summary.n_slope, summary.n_slope_ci = _bootstrap_slope(x, y, resamples, rng)
    if len(Ts) >= MIN_GRID_POINTS:
        x = np.log([float(r["T"]) for r in rows])
        y = np.log([max(float(r["gap_q50"]), 1e-12) for r in rows])
        summary.gap_slope, summary.gap_slope_ci = _bootstrap_slope(x, y, resamples, rng)
    logger.info(
        "Scaling fits: T_needed ~ n^%s, gap ~ T^%s", summary.n_slope, summary.gap_slope
    )
    return summary


def _prob_rows(config: ExperimentConfig) -> list[dict[str, ty.Any]]:
    s: ProbSettings = config.settings
    state = resolve_object(s.state, "state", s.n, config.base_dir, seed=config.seeds[0])
    channel = resolve_object(s.channel, "channel", s.n, config.base_dir)
    effect = resolve_object(s.effect, "effect", s.n, config.base_dir)
    prob = circuit_probability(state, channel, effect)
    return [
        {
            "state": type(state).__name__,
            "channel": type(channel).__name__,
            "effect": type(effect).__name__,
            "n": s.n,
            "probability": prob,
        }
    ]


def _sample_rows(config: ExperimentConfig) -> tuple[list[dict[str, ty.Any]], list[dict[str, ty.Any]]]:
    s: SampleSettings = config.settings
    rows, artifacts = [], []
    for seed in config.seeds:
        target = resolve_object(s.target, "state", s.n, config.base_dir, seed=seed)
        dist = s.distribution.build(s.n, seed)
        samples = draw_training_set(target, dist, s.T, role=s.role)
        for index, sample in enumerate(samples):
            rows.append({"seed": seed, "index": index, "outcome": sample.outcome})
            probe = sample.probe
            artifacts.append(
                {
                    "seed": seed,
                    "index": index,
                    "outcome": sample.outcome,
                    "probe": {
                        part: to_dict(getattr(probe, part))
                        for part in ("state", "channel", "effect")
                        if getattr(probe, part) is not None
                    },
                }
            )
    return rows, artifacts


def _task_row(s: LearnTaskSettings, config: ExperimentConfig, seed: int) -> dict[str, ty.Any]:
    start = time.monotonic()
    erm = ErmConfig(
        loss="total-variation",
        objective="sum",
        optimizer=_with_budget(s.optimizer, config.time_budget),
        seed=_derived_seed(seed, s.T),
    )
    report = task_learning_run(
        s.task(), s.T, kind=s.hypothesis, config=erm, seed=seed, grid_axes=s.axes()
    )
    return {
        "seed": seed,
        "T": s.T,
        "success": report.success_probability,
        "heldout_loss": report.heldout_loss,
        "grid_optimum": report.grid_optimum,
        "eta": report.report.eta,
        "wall_ms": int(1000 * (time.monotonic() - start)),
        "_artifact": {"seed": seed, "hypothesis": to_dict(report.hypothesis), **report.to_dict()},
    }


def _bound_rows(config: ExperimentConfig) -> list[dict[str, ty.Any]]:
    s: BoundSettings = config.settings
    constants = GGConstraintConstants(*s.b) if s.b is not None else None
    rows = []
    for n in s.n:
        result = sample_complexity_bound(
            s.setting,
            n,
            s.eps,
            s.delta,
            gamma=s.gamma,
            K=s.K,
            ell=s.ell,
            constants=constants,
            nu=s.nu,
            dimension=s.dimension,
        )
        rows.append(
            {
                "setting": s.setting,
                "n": n,
                "T": result.T,
                "dimension": result.dimension,
                "growth": result.growth,
            }
        )
    return rows


def function_class(name: str, n: int = 1) -> FunctionClassHandle:
    try:
        return DIMENSION_CLASSES[name](n)
    except KeyError:
        raise ConfigError(f"Unknown function class '{name}', expected one of {sorted(DIMENSION_CLASSES)}")


def _dims_rows(config: ExperimentConfig) -> tuple[list[dict[str, ty.Any]], list[dict[str, ty.Any]]]:
    s: DimsSettings = config.settings
    handle = function_class(s.class_, s.n)
    bound = pdim_upper_bound(handle.pdim_tag, handle.n) if handle.pdim_tag else None
    rows, artifacts = [], []
    for seed in config.seeds:
        result = fat_shattering_lower_bound(handle, s.gamma, s.k_max, s.budget, seed=seed)
        covers = cover_profile(handle, s.eps, s.k, s.sample_budget, seed=seed, metric=s.metric)
        rows.append(
            {
                "class": handle.tag,
                "n": handle.n,
                "gamma": s.gamma,
                "seed": seed,
                "k_certified": result.k_certified,
                "bound_value": bound,
            }
        )
        artifacts.append(
            {"seed": seed, **result.to_dict(), "covers": [c.to_dict() for c in covers]}
        )
    return rows, artifacts


def execute(config: ExperimentConfig, raise_errors: bool = False) -> tuple[ResultRecord, list[Path]]:
    """Runs a validated configuration and writes `<name>.csv` and `<name>.json` to its
    output directory"""
    started = datetime.datetime.now(datetime.timezone.utc)
    tick = time.monotonic()
    artifacts: list[dict[str, ty.Any]] = []
    summary = None
    failures = 0
    columns: ty.Sequence[str] | None = None
    s = config.settings
    if config.kind == "prob":
        rows = _prob_rows(config)
    elif config.kind == "sample":
        rows, artifacts = _sample_rows(config)
    elif config.kind == "bound":
        rows = _bound_rows(config)
    elif config.kind == "dims":
        rows, artifacts = _dims_rows(config)
    elif config.kind == "learn-task":
        tasks = [(s, config, seed) for seed in config.seeds]
        rows, failures = _run_parallel(tasks, _task_row, config.threads, raise_errors, "learn-task")
        rows, artifacts = _split_artifacts(rows)
    else:
        if config.kind == "learn-state":
            grid = [(s.n, s.T, seed) for seed in config.seeds]
        else:
            grid = [(n, T, seed) for n in s.ns for T in s.Ts for seed in config.seeds]
        tasks = [(s, config, n, T, seed) for n, T, seed in grid]
        rows, failures = _run_parallel(tasks, _learn_row, config.threads, raise_errors, config.kind)
        rows, artifacts = _split_artifacts(rows)
        columns = SWEEP_COLUMNS
        if config.kind == "sweep":
            summary = sweep_scaling(rows, s.gap_target, s.bootstrap, seed=config.seeds[0]).to_dict()
    record = ResultRecord(
        kind=config.kind,
        config_hash=config.hash,
        config=config.canonical(),
        version=__version__,
        started=started.isoformat(),
        finished=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        wall_time=time.monotonic() - tick,
        rows=rows,
        artifacts=artifacts,
        summary=summary,
        failures=failures,
    )
    out_dir = config.out_dir
    csv_path = out_dir / f"{config.name}.csv"
    json_path = out_dir / f"{config.name}.json"
    write_csv(rows, csv_path, columns)
    json_path.write_text(canonical_json(record.to_dict()))
    logger.info(
        "Wrote %d rows of '%s' results to %s (config %s)",
        len(rows),
        config.kind,
        out_dir,
        record.config_hash[:12],
    )
    return record, [csv_path, json_path]


def run_config(path: Path | str, raise_errors: bool = False) -> tuple[int, list[Path]]:
    """Loads, validates and runs a config file. Returns the exit code (0 ok, 1 runtime
    error or failed runs, 2 invalid config) and the files written."""
    try:
        config = load_config(path)
        record, files = execute(config, raise_errors=raise_errors)
    except ConfigError as e:
        if raise_errors:
            raise
        logger.error(f"Invalid configuration '{path}': {e}")
        return 2, []
    except Exception as e:
        if raise_errors:
            raise
        logger.error(f"Running '{path}' failed: \"{e}\"\n{traceback.format_exc()}\n\n")
        return 1, []
    return (1 if record.failures else 0), files
