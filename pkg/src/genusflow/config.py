"""Experiment configuration files.

A config is a JSON object with these optional sections (unknown keys are
rejected so typos surface early)::

    {
      "surface": {"kind": "torus", "R": 2.0, "rho": 0.2, "z0": 0.0},
      "family":  {"base": "torus-shrinker", "delta0": -0.1, "delta1": 0.1,
                  "mode": 1, "mode_eps": 0.0, "two_mode": false, "samples": 9,
                  "resample": 0.00390625},
      "run":     {"h": 0.015625, "t_max": 1.2, "frame_dt": 0.01, "cfl": 0.2,
                  "reinit_every": 100, "event_every": 10, "margin": 0.375,
                  "post_frames": 3, "archive_dt": 0.05, "workers": 1, "seed": 0},
      "bisect":  {"tol": 0.015625},
      "entropy": {"grid": 16, "max_iter": 200, "restarts": 4},
      "validate": {"n": 32, "descent_n": 16, "slices": 6}
    }

Surface kinds: ``sphere`` (radius, z0), ``cylinder`` (radius, length, z0),
``torus`` (R, rho, z0) and ``offset`` (base, delta, mode, eps). A ``base``
is ``"torus-shrinker"``, a surface object of kind torus, or
``{"profile_csv": path}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

from .exceptions import ConfigurationError
from .grid import Cylinder, FamilySpec, OffsetOfProfile, Sphere, Torus, torus_profile, validate_surface
from .harness import RunConfig

SECTIONS = ("surface", "family", "run", "bisect", "entropy", "validate")

_SURFACE_KEYS = {
    "sphere": ("radius", "z0"),
    "cylinder": ("radius", "length", "z0"),
    "torus": ("R", "rho", "z0"),
    "offset": ("base", "delta", "mode", "eps"),
}
_FAMILY_KEYS = ("base", "delta0", "delta1", "mode", "mode_eps", "two_mode", "samples", "resample")
_DEFAULTS = {
    "bisect": {"tol": 1 / 64},
    "entropy": {"grid": 16, "max_iter": 200, "restarts": 4},
    "validate": {"n": 32, "descent_n": 16, "slices": 6},
}


def _check_keys(section, data, allowed):
    extra = set(data) - set(allowed)
    if extra:
        raise ConfigurationError(f"unknown keys in {section}: {sorted(extra)}")


def load_base(spec, resample=1 / 256):
    """Closed base profile named by a config value."""
    if spec == "torus-shrinker":
        from .shrinker import find_torus_shrinker
        return find_torus_shrinker().profile.resampled(resample)
    if isinstance(spec, dict) and "profile_csv" in spec:
        from .shrinker import read_profile_csv
        return read_profile_csv(spec["profile_csv"]).resampled(resample)
    if isinstance(spec, dict) and spec.get("kind") == "torus":
        return parse_surface(spec)
    raise ConfigurationError(f"unknown base {spec!r}")


def parse_surface(data):
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigurationError("surface needs a 'kind'")
    kind = data["kind"]
    if kind not in _SURFACE_KEYS:
        raise ConfigurationError(f"unknown surface kind {kind!r}")
    args = {k: v for k, v in data.items() if k != "kind"}
    _check_keys(f"surface[{kind}]", args, _SURFACE_KEYS[kind])
    if kind == "sphere":
        spec = Sphere(**args)
    elif kind == "cylinder":
        spec = Cylinder(**args)
    elif kind == "torus":
        spec = Torus(**args)
    else:
        base = load_base(args.pop("base", "torus-shrinker"))
        if isinstance(base, Torus):
            base = torus_profile(base)
        spec = OffsetOfProfile(base, **args)
    return validate_surface(spec)


def parse_family(data):
    _check_keys("family", data, _FAMILY_KEYS)
    args = dict(data)
    resample = args.pop("resample", 1 / 256)
    base = load_base(args.pop("base", "torus-shrinker"), resample)
    return FamilySpec(base, **{"delta0": -0.1, "delta1": 0.1, **args})


def parse_run(data):
    names = {f.name for f in fields(RunConfig)}
    _check_keys("run", data, names)
    return RunConfig(**data)


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.raw, dict):
            raise ConfigurationError("config must be a JSON object")
        _check_keys("config", self.raw, SECTIONS)
        for name, allowed in (("bisect", ("tol",)), ("entropy", ("grid", "max_iter", "restarts")),
                              ("validate", ("n", "descent_n", "slices"))):
            _check_keys(name, self.raw.get(name, {}), allowed)
        self.run  # validate eagerly

    @classmethod
    def load(cls, path=None):
        if path is None:
            return cls({})
        try:
            with open(path) as fh:
                return cls(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc

    def section(self, name):
        return {**_DEFAULTS.get(name, {}), **self.raw.get(name, {})}

    @property
    def run(self):
        return parse_run(self.raw.get("run", {}))

    def surface(self):
        if "surface" not in self.raw:
            raise ConfigurationError("config has no surface section")
        return parse_surface(self.raw["surface"])

    def family(self):
        return parse_family(self.raw.get("family", {}))

    def with_overrides(self, seed=None, h=None, n=None, workers=None):
        raw = json.loads(json.dumps(self.raw))
        run = raw.setdefault("run", {})
        if seed is not None:
            run["seed"] = int(seed)
        if h is not None:
            run["h"] = float(h)
        if workers is not None:
            run["workers"] = int(workers)
        if n is not None:
            raw.setdefault("validate", {})["n"] = int(n)
        return replace(self, raw=raw)

    def dumps(self):
        return json.dumps(self.raw, indent=2, sort_keys=True) + "\n"
