"""Experiment configuration as plain ``key = value`` text."""

import dataclasses
import os
from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    output_dir: str = "run_output"
    input_dir: str = None  # None: generate a synthetic store
    codebook_path: str = None  # None: train a codebook
    pbr: float = 240.0
    codebook_size: int = 12
    restarts: int = 20
    sample_cap: int = 200_000
    seed: int = 0
    measure: str = "dcross_cont"
    compressor: str = "seq_dict"
    predictor: str = "ppmc"
    order: int = 5
    block_sort_cmd: str = None
    d: int = 4
    tau: int = 1
    horizon: int = 1
    radius: int = 8
    filter_size: int = 1000
    normalize: bool = False
    jobs: int = field(default_factory=lambda: int(os.environ.get("SIMSCORE_JOBS", "1")))
    synth_sets: int = 10
    synth_covers: int = 3
    synth_length: int = 160
    synth_transpose: int = 5
    synth_jitter: float = 0.1
    synth_noise: float = 0.05

    def __post_init__(self):
        if self.pbr <= 0:
            raise ConfigError("pbr must be positive")
        if self.codebook_size < 1 or self.restarts < 1 or self.filter_size < 1 or self.jobs < 1:
            raise ConfigError("codebook_size, restarts, filter_size and jobs must be >= 1")
        if min(self.d, self.tau, self.horizon) < 1 or self.radius < 0:
            raise ConfigError("d, tau, horizon must be >= 1 and radius >= 0")
        if not 0 <= self.synth_jitter <= 0.5:
            raise ConfigError("synth_jitter must lie in [0, 0.5]")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_text(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if value is None else _format(value)}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return dataclasses.asdict(self)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(name, raw, typ):
    raw = raw.strip()
    if raw == "" or raw.lower() == "none":
        return None
    try:
        if typ in (bool, "bool"):
            if raw.lower() in ("true", "on", "yes", "1"):
                return True
            if raw.lower() in ("false", "off", "no", "0"):
                return False
            raise ValueError(raw)
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_overrides(pairs):
    """Turn ``key=value`` strings (or ``(key, value)`` tuples) into typed overrides."""
    out = {}
    for item in pairs:
        key, sep, raw = item.partition("=") if isinstance(item, str) else (item[0], "=", item[1])
        key = key.strip().replace("-", "_")
        if not sep or key not in _TYPES:
            raise ConfigError(f"unknown config entry {item!r}")
        out[key] = _coerce(key, str(raw), _TYPES[key])
    return out


def parse_config(text):
    pairs = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            pairs.append(line)
    return ExperimentConfig(**parse_overrides(pairs))


def load_config(path, overrides=()):
    with open(path) as fh:
        cfg = parse_config(fh.read())
    return cfg.replace(**parse_overrides(overrides)) if overrides else cfg
