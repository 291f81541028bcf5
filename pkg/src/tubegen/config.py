"""Run configuration: a strict JSON file shared by all CLI commands.

Keys are hyphenated to match the command-line surface. Parsing is
strict: unknown keys anywhere in the tree are rejected with their full
path, and every value is validated by the same constructors the
library API uses, so a config that loads is a config that runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConfigError, InvalidParameterError
from .frangi import FrangiParams
from .maskgen import LocationPrior, TubeSpec, default_priors
from .optimize import TargetResponse
from .render import SmoothedMaskParams

__all__ = ["RunConfig", "load_config", "parse_config"]

_TOP_KEYS = {"seed", "image-size", "threads", "frangi", "priors", "render", "inpaint"}
_FRANGI_KEYS = {
    "sigmas", "beta", "c", "gamma", "polarity", "combine",
    "softmax-temperature", "blobness-form",
}
_PRIOR_KEYS = {"builtin", "name", "polygon", "entry-edge", "tube"}
_TUBE_KEYS = {"n-control-points", "width-range", "samples-per-segment", "max-turn-angle"}
_RENDER_KEYS = {"smoothed", "hand-drawn"}
_SMOOTHED_KEYS = {"amplitude", "blur-sigma"}
_HAND_DRAWN_KEYS = {
    "profile-blur-sigma", "border-gain", "centerline-gain",
    "distortion-amplitude", "distortion-wavelength", "local-intensity-gain",
}
_INPAINT_KEYS = {
    "target", "lambda2", "smoothness-weight", "steps", "step-rule",
    "learning-rate", "momentum-decays", "delta-bound",
}
_TARGET_KEYS = {"mu", "sigma"}


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one CLI invocation."""

    seed: int = 0
    image_size: tuple = (512, 512)
    threads: int = 1
    frangi: FrangiParams = FrangiParams()
    priors: tuple = ()
    smoothed: SmoothedMaskParams = SmoothedMaskParams()
    hand_drawn: dict = None
    inpaint: dict = None

    def __post_init__(self):
        if self.hand_drawn is None:
            object.__setattr__(self, "hand_drawn", {})


def _expect_dict(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object, got {type(obj).__name__}")
    return obj


def _reject_unknown(obj: dict, allowed: set, path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _get_int(obj: dict, key: str, default, path: str, minimum=None):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {v}")
    return v


def _get_number(obj: dict, key: str, default, path: str):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _get_str(obj: dict, key: str, default, path: str):
    if key not in obj:
        return default
    v = obj[key]
    if v is not None and not isinstance(v, str):
        raise ConfigError(f"{path}.{key}: expected a string, got {v!r}")
    return v


def _wrap(path: str, builder):
    try:
        return builder()
    except InvalidParameterError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_frangi(obj, path: str) -> FrangiParams:
    obj = _expect_dict(obj, path)
    _reject_unknown(obj, _FRANGI_KEYS, path)
    kwargs = {}
    if "sigmas" in obj:
        if not isinstance(obj["sigmas"], list):
            raise ConfigError(f"{path}.sigmas: expected a list of scales")
        kwargs["sigmas"] = tuple(obj["sigmas"])
    for key, name in (
        ("beta", "beta"), ("c", "c"), ("gamma", "gamma"),
        ("softmax-temperature", "softmax_temperature"),
    ):
        v = _get_number(obj, key, None, path)
        if v is not None:
            kwargs[name] = v
    for key, name in (
        ("polarity", "polarity"), ("combine", "combine"), ("blobness-form", "blobness_form"),
    ):
        v = _get_str(obj, key, None, path)
        if v is not None:
            kwargs[name] = v
    return _wrap(path, lambda: FrangiParams(**kwargs))


def _parse_tube(obj, path: str) -> TubeSpec:
    obj = _expect_dict(obj, path)
    _reject_unknown(obj, _TUBE_KEYS, path)
    kwargs = {}
    v = _get_int(obj, "n-control-points", None, path)
    if v is not None:
        kwargs["n_control_points"] = v
    if "width-range" in obj:
        wr = obj["width-range"]
        if not isinstance(wr, list) or len(wr) != 2:
            raise ConfigError(f"{path}.width-range: expected [w_min, w_max]")
        kwargs["width_range"] = tuple(wr)
    v = _get_int(obj, "samples-per-segment", None, path)
    if v is not None:
        kwargs["samples_per_segment"] = v
    v = _get_number(obj, "max-turn-angle", None, path)
    if v is not None:
        kwargs["max_turn_angle_deg"] = v
    return _wrap(path, lambda: TubeSpec(**kwargs))


def _parse_prior(obj, path: str):
    obj = _expect_dict(obj, path)
    _reject_unknown(obj, _PRIOR_KEYS, path)
    tube = _parse_tube(obj.get("tube", {}), f"{path}.tube")
    if "builtin" in obj:
        if "polygon" in obj or "name" in obj or "entry-edge" in obj:
            raise ConfigError(f"{path}: 'builtin' cannot be combined with explicit geometry")
        name = obj["builtin"]
        known = default_priors()
        if name not in known:
            raise ConfigError(f"{path}.builtin: unknown prior {name!r}; have {sorted(known)}")
        return known[name], tube
    if "polygon" not in obj:
        raise ConfigError(f"{path}: needs either 'builtin' or a 'polygon'")
    name = _get_str(obj, "name", "custom", path)
    entry = _get_str(obj, "entry-edge", None, path)
    prior = _wrap(path, lambda: LocationPrior(name, obj["polygon"], entry_edge=entry))
    return prior, tube


def _parse_smoothed(obj, path: str) -> SmoothedMaskParams:
    obj = _expect_dict(obj, path)
    _reject_unknown(obj, _SMOOTHED_KEYS, path)
    kwargs = {}
    v = _get_number(obj, "amplitude", None, path)
    if v is not None:
        kwargs["amplitude"] = v
    v = _get_number(obj, "blur-sigma", None, path)
    if v is not None:
        kwargs["blur_sigma"] = v
    return _wrap(path, lambda: SmoothedMaskParams(**kwargs))


def _parse_hand_drawn(obj, path: str) -> dict:
    obj = _expect_dict(obj, path)
    _reject_unknown(obj, _HAND_DRAWN_KEYS, path)
    mapping = {
        "profile-blur-sigma": "profile_blur_sigma",
        "border-gain": "border_gain",
        "centerline-gain": "centerline_gain",
        "distortion-amplitude": "distortion_amplitude",
        "distortion-wavelength": "distortion_wavelength",
        "local-intensity-gain": "local_intensity_gain",
    }
    out = {}
    for key, name in mapping.items():
        v = _get_number(obj, key, None, path)
        if v is not None:
            out[name] = v
    return out


def _parse_inpaint(obj, path: str) -> dict:
    obj = _expect_dict(obj, path)
    _reject_unknown(obj, _INPAINT_KEYS, path)
    out = {"target": None}
    if "target" in obj:
        tgt = _expect_dict(obj["target"], f"{path}.target")
        _reject_unknown(tgt, _TARGET_KEYS, f"{path}.target")
        if "mu" not in tgt:
            raise ConfigError(f"{path}.target: missing 'mu'")
        mu = _get_number(tgt, "mu", None, f"{path}.target")
        sigma = _get_number(tgt, "sigma", 0.0, f"{path}.target")
        out["target"] = _wrap(f"{path}.target", lambda: TargetResponse(mu, sigma))
    for key, name in (
        ("lambda2", "lambda2"), ("smoothness-weight", "smoothness_weight"),
        ("learning-rate", "learning_rate"), ("delta-bound", "delta_bound"),
    ):
        v = _get_number(obj, key, None, path)
        if v is not None:
            out[name] = v
    v = _get_int(obj, "steps", None, path)
    if v is not None:
        out["steps"] = v
    v = _get_str(obj, "step-rule", None, path)
    if v is not None:
        out["step_rule"] = v
    if "momentum-decays" in obj:
        md = obj["momentum-decays"]
        if not isinstance(md, list) or len(md) != 2:
            raise ConfigError(f"{path}.momentum-decays: expected [b1, b2]")
        out["momentum_decays"] = tuple(md)
    return out


def parse_config(raw: dict, path: str = "config") -> RunConfig:
    """Validate a parsed JSON object into a RunConfig."""
    raw = _expect_dict(raw, path)
    _reject_unknown(raw, _TOP_KEYS, path)
    seed = _get_int(raw, "seed", 0, path, minimum=0)
    threads = _get_int(raw, "threads", 1, path, minimum=1)
    size = raw.get("image-size", [512, 512])
    if (
        not isinstance(size, list) or len(size) != 2
        or any(isinstance(v, bool) or not isinstance(v, int) or v < 2 for v in size)
    ):
        raise ConfigError(f"{path}.image-size: expected [height, width] integers >= 2")
    frangi = _parse_frangi(raw.get("frangi", {}), f"{path}.frangi")
    priors = []
    raw_priors = raw.get("priors", [])
    if not isinstance(raw_priors, list):
        raise ConfigError(f"{path}.priors: expected a list")
    for i, entry in enumerate(raw_priors):
        priors.append(_parse_prior(entry, f"{path}.priors[{i}]"))
    render_obj = _expect_dict(raw.get("render", {}), f"{path}.render")
    _reject_unknown(render_obj, _RENDER_KEYS, f"{path}.render")
    smoothed = _parse_smoothed(render_obj.get("smoothed", {}), f"{path}.render.smoothed")
    hand_drawn = _parse_hand_drawn(render_obj.get("hand-drawn", {}), f"{path}.render.hand-drawn")
    inpaint = _parse_inpaint(raw.get("inpaint", {}), f"{path}.inpaint") if "inpaint" in raw else None
    return RunConfig(
        seed=seed,
        image_size=(size[0], size[1]),
        threads=threads,
        frangi=frangi,
        priors=tuple(priors),
        smoothed=smoothed,
        hand_drawn=hand_drawn,
        inpaint=inpaint,
    )


def load_config(path) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(raw, str(path))
