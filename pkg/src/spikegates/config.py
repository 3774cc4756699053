"""Key-value config and weights files.

One ``key = value`` per line, ``#`` starts a comment.  Keys are dotted:
``neuron.<field>``, ``energy.<field>``, ``weights.<field>``,
``decode.<field>`` and ``run.current_pa`` / ``run.dt``.  Kinetics pairs are
written as ``tau_r, tau_d``.  A weights file is a config that only holds
``weights.*`` keys plus optional provenance keys under ``calibration.``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .circuit import WeightSet
from .energy import EnergyParams
from .errors import ConfigError
from .neuron import NeuronParams
from .stimulus import DecodeConfig


@dataclass(frozen=True)
class Config:
    neuron: NeuronParams = field(default_factory=NeuronParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    weights: WeightSet | None = None
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    current_pa: float = 4.0
    dt: float = 0.5
    extra: dict = field(default_factory=dict)


_SECTIONS = {
    "neuron": NeuronParams,
    "energy": EnergyParams,
    "weights": WeightSet,
    "decode": DecodeConfig,
}
_TAUS = ("tau_and", "tau_exc", "tau_inh")


def _fields(cls):
    return {f.name: f for f in dataclasses.fields(cls)}


def _value(section, key, raw, lineno):
    raw = raw.strip()
    try:
        if section == "weights" and key in _TAUS:
            parts = [float(x) for x in raw.split(",")]
            if len(parts) != 2:
                raise ValueError("need two values")
            return tuple(parts)
        if section == "decode" and key == "spike_threshold":
            return int(raw)
        if section == "decode" and key == "windows":
            raise ConfigError(f"line {lineno}: decode windows cannot be set from a config file")
        if raw.lower() == "none":
            return None
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {section}.{key}: {raw!r} ({exc})") from None


def parse_config(text: str, base: Config | None = None) -> Config:
    base = base or Config()
    groups = {name: {} for name in _SECTIONS}
    run, extra = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        section, _, name = key.partition(".")
        if section in _SECTIONS:
            if name not in _fields(_SECTIONS[section]):
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            groups[section][name] = _value(section, name, value, lineno)
        elif section == "run" and name in ("current_pa", "dt"):
            run[name] = _value(section, name, value, lineno)
        elif section == "calibration" and name:
            extra[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    try:
        neuron = dataclasses.replace(base.neuron, **groups["neuron"])
        energy = dataclasses.replace(base.energy, **groups["energy"])
        decode = dataclasses.replace(base.decode, **groups["decode"])
        weights = base.weights
        if groups["weights"]:
            weights = dataclasses.replace(weights or WeightSet(), **groups["weights"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return Config(neuron, energy, weights, decode,
                  run.get("current_pa", base.current_pa), run.get("dt", base.dt),
                  {**base.extra, **extra})


def load_config(path, base: Config | None = None) -> Config:
    return parse_config(Path(path).read_text(), base)


def _fmt(v):
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return "none" if v is None else repr(v)


def format_weights(weights: WeightSet, extra: dict | None = None) -> str:
    lines = [f"weights.{f.name} = {_fmt(getattr(weights, f.name))}"
             for f in dataclasses.fields(WeightSet)]
    for k, v in (extra or {}).items():
        lines.append(f"{k if k.startswith('calibration.') else 'calibration.' + k} = {v}")
    return "\n".join(lines) + "\n"


def format_config(cfg: Config) -> str:
    out = []
    for section, obj in (("neuron", cfg.neuron), ("energy", cfg.energy)):
        out += [f"{section}.{f.name} = {_fmt(getattr(obj, f.name))}" for f in dataclasses.fields(obj)]
    out += [f"decode.settle_fraction = {cfg.decode.settle_fraction!r}",
            f"decode.spike_threshold = {cfg.decode.spike_threshold}",
            f"run.current_pa = {cfg.current_pa!r}",
            f"run.dt = {cfg.dt!r}"]
    text = "\n".join(out) + "\n"
    if cfg.weights is not None:
        text += format_weights(cfg.weights, cfg.extra)
    return text


def load_weights(path) -> WeightSet:
    cfg = load_config(path)
    if cfg.weights is None:
        raise ConfigError(f"{path}: no weights.* keys")
    return cfg.weights


def save_weights(path, weights: WeightSet, extra: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(format_weights(weights, extra))
    return path
