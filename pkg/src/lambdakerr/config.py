"""Run configuration: presets and the ``key = value`` file format."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .model import EffectiveModel
from .state import CoherentSpec, Truncation, auto_truncation, fixed_truncation

MEASURES = ("inversion", "vn_entropy", "linear_entropy", "number_phase", "quadrature")
PRESETS = {
    "fig-a": dict(delta2_over_g=0.0, delta3_over_g=0.0, chi_over_g=0.0),
    "fig-b": dict(delta2_over_g=7.0, delta3_over_g=15.0, chi_over_g=0.0),
    "fig-c": dict(delta2_over_g=0.0, delta3_over_g=0.0, chi_over_g=0.4),
    "fig-d": dict(delta2_over_g=7.0, delta3_over_g=15.0, chi_over_g=0.4),
}


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


@dataclass(frozen=True)
class RunConfig:
    alpha1_sq: float = 10.0
    alpha2_sq: float = 10.0
    alpha1_phase: float = 0.0
    alpha2_phase: float = 0.0
    gamma: float = 1.0
    delta: float = 0.0
    chi_over_g: float = 0.0
    delta2_over_g: float = 0.0
    delta3_over_g: float = 0.0
    n_max: int = 42
    tau_max: float = 25.0
    tau_steps: int = 501
    phase_points: int = 256
    quad_points: int = 2048
    measures: tuple[str, ...] = MEASURES

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            ("tau_steps", self.tau_steps >= 2, "must be >= 2"),
            ("tau_max", self.tau_max > 0, "must be positive"),
            ("alpha1_sq", self.alpha1_sq >= 0, "must be non-negative"),
            ("alpha2_sq", self.alpha2_sq >= 0, "must be non-negative"),
            ("chi_over_g", self.chi_over_g >= 0, "must be non-negative"),
            ("delta", abs(self.delta) != 1.0, "must not be +-1"),
            ("n_max", self.n_max >= 0, "must be non-negative (0 = auto)"),
            ("phase_points", self.phase_points >= 8, "must be >= 8"),
            ("quad_points", self.quad_points >= 16, "must be >= 16"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{name} {msg}")
        for name in ("alpha1_sq", "alpha2_sq", "gamma", "delta", "chi_over_g", "tau_max"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        unknown = set(self.measures) - set(MEASURES)
        if unknown:
            raise ConfigError(f"measures: unknown {sorted(unknown)}")

    def effective(self) -> EffectiveModel:
        return EffectiveModel(
            mu=math.sqrt(1.0 + self.delta**2),
            gamma=self.gamma,
            delta2=self.delta2_over_g,
            delta3=self.delta3_over_g,
            chi=self.chi_over_g,
        )

    def coherent(self) -> CoherentSpec:
        return CoherentSpec.from_intensities(self.alpha1_sq, self.alpha2_sq, self.alpha1_phase, self.alpha2_phase)

    def truncation(self) -> Truncation:
        spec = self.coherent()
        if self.n_max == 0:
            return auto_truncation(spec)
        return fixed_truncation(spec, self.n_max, self.n_max)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {','.join(v) if f.name == 'measures' else v}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, raw: str):
    kind = _TYPES[key]
    if key == "measures":
        return tuple(m.strip() for m in raw.split(",") if m.strip())
    if kind == "int":
        return int(raw)
    return float(raw)


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines on top of ``base`` (defaults if omitted)."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {raw!r}") from None
    base = base or RunConfig()
    try:
        return replace(base, **values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, base)


def preset(name: str, gamma: float = 1.0) -> RunConfig:
    """Configuration for one of the four parameter regimes ``fig-a`` .. ``fig-d``."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    if gamma not in (1, 2):
        raise ConfigError("preset gamma must be 1 or 2")
    return RunConfig(gamma=float(gamma), **PRESETS[name])


def as_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)
