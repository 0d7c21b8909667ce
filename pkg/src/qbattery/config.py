"""Run configuration: presets, YAML config files and ``key=value`` overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .model import SystemParams

MODES = ("simulate", "sweep", "parametric", "reduced")
SWEEP_AXES = ("alpha", "Delta", "g", "zeta", "kappa", "gamma")
PARAMETRIC_X = ("energy", "fluctuation", "both")
METHODS = ("adaptive_rk", "expm_superop")

# config name -> SystemParams field; Delta is resolved into omega_c
PARAM_KEYS = {
    "alpha": "alpha",
    "Delta": "Delta",
    "lambda": "lam",
    "g": "g",
    "zeta": "zeta",
    "kappa": "kappa",
    "gamma": "gamma",
    "omega_c": "omega_c",
    "omega_q": "omega_q",
    "n_cavity": "n_cavity",
}
PARAM_ALIASES = {"delta": "Delta", "lam": "lambda"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioPreset:
    """Base parameters plus the figure's sweep variants.

    Each variant is a dict of overrides; ``axis`` names the entry used to
    label output files (fig_d varies kappa and gamma together).
    """

    name: str
    base: dict
    axis: str
    variants: tuple
    zeta_values: tuple = (0.0, 1.0)

    @property
    def axis_values(self) -> tuple:
        return tuple(v[self.axis] for v in self.variants)


_CLOSED = {"Delta": 0.0, "g": 1.0, "kappa": 0.0, "gamma": 0.0, "alpha": 2.0, "zeta": 0.0}

PRESETS = {
    "fig_a": ScenarioPreset("fig_a", _CLOSED, "alpha", ({"alpha": 0.5}, {"alpha": 2.0}, {"alpha": 3.0})),
    "fig_b": ScenarioPreset("fig_b", _CLOSED, "Delta", ({"Delta": 0.0}, {"Delta": 1.0}, {"Delta": 4.0})),
    "fig_c": ScenarioPreset("fig_c", _CLOSED, "g", ({"g": 0.3}, {"g": 1.0}, {"g": 2.0})),
    "fig_d": ScenarioPreset(
        "fig_d", {**_CLOSED, "alpha": 1.0}, "kappa",
        ({"kappa": 0.0, "gamma": 0.0}, {"kappa": 0.6, "gamma": 0.4}),
    ),
}
PRESET_ALIASES = {f"fig2{c}": f"fig_{c}" for c in "abcd"}


def get_preset(name: str) -> ScenarioPreset:
    key = PRESET_ALIASES.get(name, name)
    if key not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)} (aliases fig2a-fig2d)")
    return PRESETS[key]


@dataclass(frozen=True)
class RunConfig:
    mode: str = "simulate"
    preset: str = "fig_a"
    params: SystemParams = field(default_factory=SystemParams)
    t_max: float = 15.0
    n_points: int = 600
    sweep_axis: str | None = None
    sweep_values: tuple | None = None
    zeta_values: tuple | None = None
    window: tuple = (0.0, 1.3)
    parametric_x: str = "both"
    reduced_n: int | None = None
    method: str = "adaptive_rk"
    workers: int = 1
    output_dir: str = "qbattery_out"
    emit_plots: bool = False
    # merged raw parameter inputs; sweep points are rebuilt from these so an
    # alpha change re-derives n_cavity unless n_cavity was given explicitly
    param_values: dict = field(default_factory=dict)

    def point_params(self, **overrides) -> SystemParams:
        return build_params({**self.param_values, **overrides})

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d["params"] = self.params.as_dict()
        d["param_values"] = {k: (str(v) if isinstance(v, complex) else v) for k, v in self.param_values.items()}
        for k in ("sweep_values", "zeta_values", "window"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


RUN_KEYS = [f.name for f in dataclasses.fields(RunConfig) if f.name != "param_values"]


def _valid_keys() -> str:
    return ", ".join(RUN_KEYS + [f"params.{k}" for k in PARAM_KEYS])


def _coerce_value(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value {text!r}: {exc}") from None


def _split_flag(flag: str) -> tuple[str, object]:
    if "=" not in flag:
        raise ConfigError(f"override {flag!r} is not of the form key=value")
    key, value = flag.split("=", 1)
    return key.strip(), _coerce_value(value.strip())


def _param_name(key: str) -> str | None:
    key = PARAM_ALIASES.get(key, key)
    return key if key in PARAM_KEYS else None


def _merge(run: dict, params: dict, key: str, value):
    if key.startswith("params."):
        name = _param_name(key[len("params."):])
        if name is None:
            raise ConfigError(f"unknown parameter {key!r}; valid keys: {_valid_keys()}")
        params[name] = value
    elif key == "params":
        if not isinstance(value, dict):
            raise ConfigError("'params' must be a mapping of parameter names to values")
        for k, v in value.items():
            _merge(run, params, f"params.{k}", v)
    elif key in RUN_KEYS:
        run[key] = value
    elif _param_name(key) is not None:
        params[_param_name(key)] = value
    else:
        raise ConfigError(f"unknown key {key!r}; valid keys: {_valid_keys()}")


def _number(name, value, kind=float):
    if isinstance(value, bool) or value is None:
        raise ConfigError(f"{name} must be a number, got {value!r}")
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if kind is int and out != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return out


def build_params(values: dict) -> SystemParams:
    values = dict(values)
    kw = {}
    delta = values.pop("Delta", None)
    for name, value in values.items():
        field_name = PARAM_KEYS[name]
        if name == "alpha":
            kw["alpha"] = complex(value) if isinstance(value, (complex, str)) else _number(name, value)
        elif name == "n_cavity":
            kw["n_cavity"] = None if value is None else _number(name, value, int)
        else:
            kw[field_name] = _number(name, value)
    if delta is not None:
        omega_q = kw.get("omega_q", 1.0)
        omega_c = omega_q + _number("Delta", delta)
        if "omega_c" in kw and abs(kw["omega_c"] - omega_c) > 1e-12:
            raise ConfigError("omega_c and Delta are both set and disagree (Delta = omega_c - omega_q)")
        kw["omega_c"] = omega_c
    if "zeta" in kw and not -1.0 <= kw["zeta"] <= 1.0:
        raise ConfigError(f"params.zeta = {kw['zeta']} is outside the anisotropy range zeta in [-1, 1]")
    try:
        return SystemParams(**kw)
    except ValueError as exc:
        raise ConfigError(f"invalid params: {exc}") from None


def _as_tuple(name, value, length=None):
    if value is None:
        return None
    if not isinstance(value, (list, tuple)):
        value = [value]
    out = tuple(_number(name, v) for v in value)
    if length is not None and len(out) != length:
        raise ConfigError(f"{name} must have {length} entries, got {len(out)}")
    return out


def load_config_file(path) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a key-value mapping")
    return data


def parse_config(file_path=None, flag_overrides=(), **direct) -> RunConfig:
    """Build a validated :class:`RunConfig`.

    Precedence, lowest first: built-in defaults, the preset's base
    parameters, the config file, ``flag_overrides`` (``"key=value"``
    strings), then ``direct`` keyword overrides (used by the CLI for the
    subcommand and dedicated flags).
    """
    run: dict = {}
    params: dict = {}
    file_data = load_config_file(file_path)
    for k, v in file_data.items():
        _merge(run, params, k, v)
    for flag in flag_overrides:
        _merge(run, params, *_split_flag(flag))
    for k, v in direct.items():
        if v is not None:
            _merge(run, params, k, v)

    preset = get_preset(str(run.get("preset", RunConfig.preset)))
    merged_params = {**preset.base, **params}
    if "omega_c" in params and "Delta" not in params:
        merged_params.pop("Delta", None)
    run["preset"] = preset.name
    run["params"] = build_params(merged_params)
    run["param_values"] = merged_params

    mode = run.get("mode", RunConfig.mode)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    run["t_max"] = _number("t_max", run.get("t_max", RunConfig.t_max))
    run["n_points"] = _number("n_points", run.get("n_points", RunConfig.n_points), int)
    if run["t_max"] <= 0 or run["n_points"] < 2:
        raise ConfigError("t_max must be > 0 and n_points >= 2")
    axis = run.get("sweep_axis")
    if axis is not None:
        axis = PARAM_ALIASES.get(axis, axis)
        if axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}, got {axis!r}")
        run["sweep_axis"] = axis
    run["sweep_values"] = _as_tuple("sweep_values", run.get("sweep_values"))
    if run["sweep_values"] is not None and axis is None:
        raise ConfigError("sweep_values given without sweep_axis")
    run["zeta_values"] = _as_tuple("zeta_values", run.get("zeta_values"))
    for z in run["zeta_values"] or ():
        if not -1.0 <= z <= 1.0:
            raise ConfigError(f"zeta_values entry {z} is outside zeta in [-1, 1]")
    if axis == "zeta":
        for z in run["sweep_values"] or ():
            if not -1.0 <= z <= 1.0:
                raise ConfigError(f"sweep_values entry {z} is outside zeta in [-1, 1]")
    window = _as_tuple("window", run.get("window", RunConfig.window), 2)
    if not 0.0 <= window[0] <= window[1] <= run["t_max"]:
        raise ConfigError(f"window {list(window)} must satisfy 0 <= lo <= hi <= t_max = {run['t_max']}")
    run["window"] = window
    px = run.get("parametric_x", RunConfig.parametric_x)
    if px not in PARAMETRIC_X:
        raise ConfigError(f"parametric_x must be one of {PARAMETRIC_X}, got {px!r}")
    if run.get("reduced_n") is not None:
        run["reduced_n"] = _number("reduced_n", run["reduced_n"], int)
        if run["reduced_n"] < 1:
            raise ConfigError("reduced_n must be >= 1")
    method = run.get("method", RunConfig.method)
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    run["workers"] = _number("workers", run.get("workers", RunConfig.workers), int)
    if run["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    run["output_dir"] = str(run.get("output_dir", RunConfig.output_dir))
    if not isinstance(run.get("emit_plots", False), bool):
        raise ConfigError("emit_plots must be true or false")
    return RunConfig(**run)
