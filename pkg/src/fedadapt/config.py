"""Flat ``key = value`` experiment configuration.

One dataclass holds every hyperparameter and toggle; files are plain UTF-8
lines with ``#`` comments, diff-friendly and trivially parseable. Unknown
keys are rejected, missing keys take the documented defaults, and a config
survives parse -> serialize -> parse unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Dict

from .errors import ConfigError


@dataclass
class ExperimentConfig:
    """Every knob of the pipeline, with working desk-scale defaults."""

    seed: int = 0
    e: int = 8
    f_enc: int = 8
    d: int = 4
    adapter_layers: int = 1
    rounds: int = 30
    fraction: float = 0.5
    eta_c: float = 0.05
    eta_s: float = 0.01
    n_negatives: int = 4
    local_steps: int = 3
    pap_epochs: int = 30
    pap_eta: float = 0.002
    baseline_eta_s: float = 0.5
    target_fit_epochs: int = 10
    k: int = 10
    candidate_size: int = 0
    threads: int = 1
    dp_clip: float = 1.0
    dp_sigma: float = 0.0
    use_pt: bool = True
    use_fat: bool = True
    use_pap: bool = True
    n_users: int = 20
    n_items: int = 50
    min_user_core: int = 20
    min_item_core: int = 30
    dataset_path: str = ""
    table_path: str = ""
    toy_encoder: bool = True

    def __post_init__(self) -> None:
        for key in ("eta_c", "eta_s", "pap_eta", "baseline_eta_s"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        if not (0.0 < self.fraction <= 1.0):
            raise ConfigError(f"fraction must be in (0, 1], got {self.fraction}")
        for key in ("e", "f_enc", "d", "adapter_layers", "k", "n_users", "n_items"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1, got {getattr(self, key)}")
        for key in ("rounds", "n_negatives", "local_steps", "pap_epochs", "target_fit_epochs", "candidate_size"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0, got {getattr(self, key)}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.dp_clip <= 0:
            raise ConfigError(f"dp_clip must be positive, got {self.dp_clip}")
        if self.dp_sigma < 0:
            raise ConfigError(f"dp_sigma must be nonnegative, got {self.dp_sigma}")


_FIELD_TYPES: Dict[str, type] = {f.name: f.type if isinstance(f.type, type) else type(f.default) for f in fields(ExperimentConfig)}


def _parse_value(key: str, raw: str, line_no: int):
    typ = _FIELD_TYPES[key]
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"line {line_no}: key {key!r} expects {typ.__name__}, got {raw!r}") from None


def parse_config_text(text: str) -> ExperimentConfig:
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {line.strip()!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, line_no)
    return ExperimentConfig(**values)


def parse_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config_text(text)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; floats use repr so round-trips are exact."""
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
