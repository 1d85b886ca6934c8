"""Renderer inputs: per-reaction voice parameters and the crowd descriptor.

Voice constants are dataclass defaults so experiments can override any of
them, either in code or through a key=value config file with dotted keys
(e.g. ``clap.resonator_center_hz = 900``). Ranges are written ``lo,hi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..state import AudienceError

SUPPORTED_SAMPLE_RATES = (44100, 48000)


class InvalidParams(AudienceError):
    """Crowd descriptor violates its own constraints."""


class ConfigError(AudienceError):
    """Voice config file could not be parsed or fails validation."""


@dataclass(frozen=True)
class ClapConfig:
    burst_ms: float = 5.0
    resonator_center_hz: float = 1100.0
    resonator_q: float = 6.0
    claps_per_sec_mean: float = 4.0
    claps_per_sec_jitter: float = 0.5
    gain: float = 1.2


@dataclass(frozen=True)
class WhistleConfig:
    carrier_hz_range: tuple[float, float] = (1500.0, 3000.0)
    vibrato_hz_range: tuple[float, float] = (5.0, 7.0)
    vibrato_depth: float = 0.02
    gain: float = 0.11


@dataclass(frozen=True)
class BooConfig:
    pitch_hz_range: tuple[float, float] = (150.0, 250.0)
    drift_hz_per_s: float = 20.0
    lowpass_hz: float = 1200.0
    gain: float = 0.17


@dataclass(frozen=True)
class LaughConfig:
    syllables_per_sec_range: tuple[float, float] = (4.0, 6.0)
    pitch_hz_range: tuple[float, float] = (180.0, 280.0)
    aspiration_mix: float = 0.3
    gain: float = 0.2


@dataclass(frozen=True)
class VoiceBankConfig:
    clap: ClapConfig = field(default_factory=ClapConfig)
    whistle: WhistleConfig = field(default_factory=WhistleConfig)
    boo: BooConfig = field(default_factory=BooConfig)
    laugh: LaughConfig = field(default_factory=LaughConfig)

    def validate(self, sample_rate: int) -> None:
        nyquist = sample_rate / 2
        for lo, hi in (
            self.whistle.carrier_hz_range,
            self.whistle.vibrato_hz_range,
            self.boo.pitch_hz_range,
            self.laugh.syllables_per_sec_range,
            self.laugh.pitch_hz_range,
        ):
            if not 0 < lo <= hi:
                raise ConfigError(f"range ({lo}, {hi}) is empty or negative")
            if hi >= nyquist:
                raise ConfigError(f"range bound {hi} Hz at or above Nyquist {nyquist}")
        for f in (
            self.clap.resonator_center_hz,
            self.boo.lowpass_hz,
        ):
            if not 0 < f < nyquist:
                raise ConfigError(f"frequency {f} Hz outside (0, Nyquist)")
        if self.clap.burst_ms <= 0 or self.clap.resonator_q <= 0:
            raise ConfigError("clap burst and resonator Q must be positive")
        if self.clap.claps_per_sec_mean <= self.clap.claps_per_sec_jitter:
            raise ConfigError("clap rate jitter must stay below the mean rate")
        if not 0 <= self.laugh.aspiration_mix <= 1:
            raise ConfigError("aspiration mix must lie in [0, 1]")


@dataclass(frozen=True)
class SynthesisParams:
    """What the crowd is doing: active counts per reaction plus audience size."""

    counts: tuple[int, int, int, int] = (0, 0, 0, 0)
    total: int = 0
    sample_rate: int = 48000
    seed: int = 0
    max_voices_per_reaction: int = 64

    def __post_init__(self) -> None:
        if len(self.counts) != 4:
            raise InvalidParams("need exactly four reaction counts")
        for c in self.counts:
            if c < 0:
                raise InvalidParams(f"negative count {c}")
            if c > self.total:
                raise InvalidParams(f"count {c} exceeds total {self.total}")
        if self.sample_rate not in SUPPORTED_SAMPLE_RATES:
            raise InvalidParams(
                f"sample rate {self.sample_rate} not in {SUPPORTED_SAMPLE_RATES}"
            )
        if self.max_voices_per_reaction < 1:
            raise InvalidParams("need at least one voice per reaction")
        if self.seed < 0:
            raise InvalidParams("seed must be non-negative")


def params_from_summary(summary, *, sample_rate: int = 48000, seed: int = 0,
                        max_voices: int = 64) -> SynthesisParams:
    return SynthesisParams(
        counts=tuple(summary.counts),
        total=summary.total,
        sample_rate=sample_rate,
        seed=seed,
        max_voices_per_reaction=max_voices,
    )


def _parse_value(raw: str, like) -> object:
    if isinstance(like, tuple):
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 2:
            raise ValueError("ranges take exactly two comma-separated numbers")
        return (float(parts[0]), float(parts[1]))
    return float(raw)


def load_voice_config(path: str | Path) -> VoiceBankConfig:
    """Read dotted key=value overrides on top of the defaults."""
    cfg = VoiceBankConfig()
    sections = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    overrides: dict[str, dict[str, object]] = {name: {} for name in sections}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if "." not in key:
            raise ConfigError(f"{path}:{lineno}: key must be <reaction>.<field>")
        section_name, field_name = key.split(".", 1)
        section = sections.get(section_name)
        if section is None:
            raise ConfigError(f"{path}:{lineno}: unknown reaction {section_name!r}")
        if not hasattr(section, field_name):
            raise ConfigError(f"{path}:{lineno}: unknown field {key!r}")
        try:
            value = _parse_value(raw, getattr(section, field_name))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
        overrides[section_name][field_name] = value
    return replace(
        cfg,
        **{
            name: replace(sections[name], **vals)
            for name, vals in overrides.items()
            if vals
        },
    )
