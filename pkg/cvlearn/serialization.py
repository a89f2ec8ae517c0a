"""JSON documents for states, channels, effects, Fock operators and hypotheses.

Every document carries a "type" tag. Real arrays are nested lists in row-major order;
complex arrays are nested lists whose innermost entries are [re, im] pairs. Floats are
written with the shortest repr that round-trips exactly.
"""
import hashlib
import json
import typing as ty
from pathlib import Path
import numpy as np
from .exceptions import ConfigError
from .fock import FockOperator
from .gg import GGChannel, GGEffect, GGState
from .learner import HypothesisParam
from .photodetection import PhotoCountEffect
from .utils import add_exc_note
from .symplectic import (
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    HalfSpaceEffect,
)


def _real(arr: ty.Any) -> ty.Any:
    return np.asarray(arr, dtype=float).tolist()


def _complex(arr: ty.Any) -> ty.Any:
    arr = np.asarray(arr, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _from_complex(value: ty.Any) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ConfigError(f"Complex entries must be [re, im] pairs, found shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]  # type: ignore[no-any-return]


def to_dict(obj: ty.Any) -> dict[str, ty.Any]:
    """Tagged JSON-compatible dictionary for any serializable domain object"""
    if isinstance(obj, GaussianState):
        return {"type": "gaussian-state", "n": obj.n, "mean": _real(obj.mean), "cov": _real(obj.cov)}
    if isinstance(obj, GaussianChannel):
        return {
            "type": "gaussian-channel",
            "n": obj.n,
            "disp": _real(obj.disp),
            "x": _real(obj.x_mat),
            "y": _real(obj.y_mat),
        }
    if isinstance(obj, GeneralDyneEffect):
        return {
            "type": "general-dyne",
            "n": obj.n,
            "outcome": _real(obj.outcome),
            "cov": _real(obj.cov),
        }
    if isinstance(obj, HalfSpaceEffect):
        return {
            "type": "half-space",
            "n": obj.n,
            "direction": _real(obj.direction),
            "threshold": obj.threshold,
            "cov": _real(obj.cov),
        }
    if isinstance(obj, PhotoCountEffect):
        return {
            "type": "photocount",
            "n": obj.n,
            "cutoff": obj.cutoff,
            "weights": [[list(k), q] for k, q in sorted(obj.weights.items())],
        }
    if isinstance(obj, (GGState, GGEffect)):
        return {
            "type": "gg-state" if isinstance(obj, GGState) else "gg-effect",
            "n": obj.n,
            "coeffs": _complex(obj.coeffs),
            "means": _complex(obj.means),
            "covs": _complex(obj.covs),
        }
    if isinstance(obj, GGChannel):
        return {
            "type": "gg-channel",
            "n": obj.n,
            "coeffs": _complex(obj.coeffs),
            "disps": _complex(obj.disps),
            "x": _complex(obj.x_mats),
            "y": _complex(obj.y_mats),
        }
    if isinstance(obj, FockOperator):
        return {
            "type": "fock-operator",
            "n": obj.n,
            "cutoff": obj.cutoff,
            "mat": _complex(obj.mat),
        }
    if isinstance(obj, HypothesisParam):
        dct: dict[str, ty.Any] = {
            "type": "hypothesis",
            "kind": obj.kind,
            "n": obj.n,
            "theta": _real(obj.theta),
        }
        if obj.template is not None:
            dct["template"] = to_dict(obj.template)
        return dct
    raise ConfigError(f"Don't know how to serialize objects of type {type(obj).__name__}")


def _build(type_: str, dct: dict[str, ty.Any]) -> ty.Any:
    if type_ == "gaussian-state":
        return GaussianState(dct["mean"], dct["cov"])
    if type_ == "gaussian-channel":
        return GaussianChannel(dct["disp"], dct["x"], dct["y"])
    if type_ == "general-dyne":
        return GeneralDyneEffect(dct["outcome"], dct["cov"])
    if type_ == "half-space":
        return HalfSpaceEffect(dct["direction"], dct.get("threshold", 0.0), dct.get("cov"))
    if type_ == "photocount":
        return PhotoCountEffect(dct["cutoff"], [(tuple(k), q) for k, q in dct["weights"]])
    if type_ in ("gg-state", "gg-effect"):
        klass = GGState if type_ == "gg-state" else GGEffect
        return klass(
            _from_complex(dct["coeffs"]),
            _from_complex(dct["means"]),
            _from_complex(dct["covs"]),
        )
    if type_ == "gg-channel":
        return GGChannel(
            _from_complex(dct["coeffs"]),
            _from_complex(dct["disps"]),
            _from_complex(dct["x"]),
            _from_complex(dct["y"]),
        )
    if type_ == "fock-operator":
        return FockOperator(dct["n"], dct["cutoff"], _from_complex(dct["mat"]))
    if type_ == "hypothesis":
        template = from_dict(dct["template"]) if "template" in dct else None
        return HypothesisParam(dct["kind"], dct["n"], dct["theta"], template=template)
    raise ConfigError(f"Unrecognised object type '{type_}'")


def from_dict(dct: ty.Mapping[str, ty.Any]) -> ty.Any:
    try:
        type_ = dct["type"]
    except KeyError:
        raise ConfigError(f"Object document has no 'type' tag (keys: {sorted(dct)})")
    try:
        return _build(type_, dict(dct))
    except KeyError as e:
        raise ConfigError(f"'{type_}' document is missing the {e} field")


def canonical_json(value: ty.Any) -> str:
    "Key-sorted, whitespace-free JSON used for hashing"
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def config_hash(value: ty.Any) -> str:
    return hashlib.sha256(canonical_json(value).encode()).hexdigest()


def dump(obj: ty.Any, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_dict(obj), indent=2))


def load(path: Path | str) -> ty.Any:
    path = Path(path)
    try:
        dct = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"Could not parse '{path}' as JSON: {e}")
    try:
        return from_dict(dct)
    except ConfigError as e:
        raise add_exc_note(e, f"while loading '{path}'")
