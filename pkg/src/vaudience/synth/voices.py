"""Per-person sound generators, one class per reaction.

Each voice renders successive blocks from its own random stream and keeps
whatever phase, filter, and scheduler state continuity needs. A voice's
output depends only on (its rng seed, its parameters, the block-size
sequence), never on how many other voices exist, which is what lets a
bigger crowd be a strict superset of a smaller one.

Recipes, deliberately cheap enough for dozens of voices in real time:
  clap    - sparse noise bursts through a resonant bandpass (hand cavity)
  whistle - sine carrier with slow vibrato, phase-accumulated
  boo     - drifting low sawtooth, lowpassed, gated into phrases
  laugh   - trains of voiced syllables with a breathy noise component
"""

from __future__ import annotations

import numpy as np
from scipy.signal import butter, iirpeak, lfilter, sosfilt

from ..state import ReactionKind
from .config import BooConfig, ClapConfig, LaughConfig, VoiceBankConfig, WhistleConfig

TWO_PI = 2.0 * np.pi
GOLDEN = 0.6180339887498949


def ramp_toward(level: float, target: float, step: float, n: int) -> tuple[np.ndarray, float]:
    """Linear per-sample ramp from level toward target, clamped at target."""
    if level == target or step <= 0.0:
        return np.full(n, level), level
    if target > level:
        g = np.minimum(level + step * np.arange(1, n + 1), target)
    else:
        g = np.maximum(level - step * np.arange(1, n + 1), target)
    return g, float(g[-1])


def _spread(stratum: float, rng: np.random.Generator) -> float:
    # low-discrepancy position plus a little personal jitter
    return (stratum + 0.06 * (rng.random() - 0.5)) % 1.0


class ClapVoice:
    """One clapper: bursts of decaying noise exciting a resonator."""

    def __init__(self, cfg: ClapConfig, sample_rate: int, rng: np.random.Generator, stratum: float):
        self.rng = rng
        rate = cfg.claps_per_sec_mean + cfg.claps_per_sec_jitter * (2.0 * rng.random() - 1.0)
        self.period = sample_rate / rate
        self.burst_len = max(8, int(cfg.burst_ms / 1000.0 * sample_rate))
        self.tau = self.burst_len / 4.0
        self.b, self.a = iirpeak(cfg.resonator_center_hz, cfg.resonator_q, fs=sample_rate)
        self.zi = np.zeros(2)
        self.gain = cfg.gain
        self.t = 0
        self.next_onset = int(self.period * rng.random())
        self.burst_age: int | None = None
        self.burst_amp = 0.0

    def _write_burst(self, exc: np.ndarray, offset: int, age: int) -> int:
        m = min(len(exc) - offset, self.burst_len - age)
        k = np.arange(age, age + m)
        exc[offset : offset + m] += (
            self.burst_amp * np.exp(-k / self.tau) * self.rng.standard_normal(m)
        )
        return age + m

    def render(self, n: int) -> np.ndarray:
        exc = np.zeros(n)
        end = self.t + n
        if self.burst_age is not None:
            age = self._write_burst(exc, 0, self.burst_age)
            self.burst_age = age if age < self.burst_len else None
        while self.next_onset < end:
            self.burst_amp = 0.55 + 0.45 * self.rng.random()
            age = self._write_burst(exc, self.next_onset - self.t, 0)
            self.burst_age = age if age < self.burst_len else None
            gap = self.period * (0.6 + 0.8 * self.rng.random())
            self.next_onset += max(self.burst_len, int(gap))
        self.t = end
        out, self.zi = lfilter(self.b, self.a, exc, zi=self.zi)
        return self.gain * out


class WhistleVoice:
    """One whistler: frequency-modulated sine, slow amplitude wobble."""

    def __init__(self, cfg: WhistleConfig, sample_rate: int, rng: np.random.Generator, stratum: float):
        lo, hi = cfg.carrier_hz_range
        self.carrier = lo + (hi - lo) * _spread(stratum, rng)
        vlo, vhi = cfg.vibrato_hz_range
        self.vib_rate = vlo + (vhi - vlo) * rng.random()
        self.depth = cfg.vibrato_depth
        self.sr = sample_rate
        self.phase = TWO_PI * rng.random()
        self.vib_phase = TWO_PI * rng.random()
        self.wob_rate = 0.15 + 0.4 * rng.random()
        self.wob_phase = TWO_PI * rng.random()
        self.gain = cfg.gain

    def render(self, n: int) -> np.ndarray:
        k = np.arange(n)
        vib = np.sin(self.vib_phase + TWO_PI * self.vib_rate * k / self.sr)
        phase = self.phase + np.cumsum(TWO_PI * self.carrier * (1.0 + self.depth * vib) / self.sr)
        wobble = 0.85 + 0.15 * np.sin(self.wob_phase + TWO_PI * self.wob_rate * k / self.sr)
        self.phase = float(phase[-1] % TWO_PI)
        self.vib_phase = (self.vib_phase + TWO_PI * self.vib_rate * n / self.sr) % TWO_PI
        self.wob_phase = (self.wob_phase + TWO_PI * self.wob_rate * n / self.sr) % TWO_PI
        return self.gain * wobble * np.sin(phase)


class _PhraseGate:
    """On/off gate with linear ramps; segment lengths drawn per segment.

    Off segments are kept shorter than one second so any one-second window
    of a phrase-gated voice carries energy.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        on_range_s: tuple[float, float],
        off_range_s: tuple[float, float],
        ramp_s: float,
        sample_rate: int,
    ):
        self.rng = rng
        self.on_range = on_range_s
        self.off_range = off_range_s
        self.step = 1.0 / max(1, int(ramp_s * sample_rate))
        self.sr = sample_rate
        self.gate_on = True
        self.level = 1.0
        # start part-way through an on segment so voices are not synchronized
        self.remaining = max(1, int(self._draw(on_range_s) * sample_rate * rng.random()))

    def _draw(self, bounds: tuple[float, float]) -> float:
        lo, hi = bounds
        return lo + (hi - lo) * self.rng.random()

    def render(self, n: int) -> np.ndarray:
        out = np.empty(n)
        i = 0
        while i < n:
            if self.remaining == 0:
                self.gate_on = not self.gate_on
                bounds = self.on_range if self.gate_on else self.off_range
                self.remaining = max(1, int(self._draw(bounds) * self.sr))
            m = min(n - i, self.remaining)
            target = 1.0 if self.gate_on else 0.0
            out[i : i + m], self.level = ramp_toward(self.level, target, self.step, m)
            self.remaining -= m
            i += m
        return out


class BooVoice:
    """One booer: drifting sawtooth through a lowpass, phrased on and off."""

    def __init__(self, cfg: BooConfig, sample_rate: int, rng: np.random.Generator, stratum: float):
        lo, hi = cfg.pitch_hz_range
        self.pitch_lo, self.pitch_hi = lo, hi
        self.f0 = lo + (hi - lo) * _spread(stratum, rng)
        self.drift = cfg.drift_hz_per_s
        self.sos = butter(2, cfg.lowpass_hz, fs=sample_rate, output="sos")
        self.zi = np.zeros((self.sos.shape[0], 2))
        self.phase = rng.random()
        self.gate = _PhraseGate(rng, (0.9, 1.5), (0.2, 0.4), 0.06, sample_rate)
        self.gain = cfg.gain
        self.sr = sample_rate
        self.rng = rng

    def render(self, n: int) -> np.ndarray:
        f_next = self.f0 + self.drift * (n / self.sr) * (2.0 * self.rng.random() - 1.0)
        f_next = min(max(f_next, self.pitch_lo), self.pitch_hi)
        freqs = np.linspace(self.f0, f_next, n)
        self.f0 = f_next
        phase = self.phase + np.cumsum(freqs / self.sr)
        saw = 2.0 * np.mod(phase, 1.0) - 1.0
        self.phase = float(phase[-1] % 1.0)
        out, self.zi = sosfilt(self.sos, saw, zi=self.zi)
        return self.gain * self.gate.render(n) * out


class LaughVoice:
    """One laugher: bouts of pitched ha-syllables with aspiration noise."""

    def __init__(self, cfg: LaughConfig, sample_rate: int, rng: np.random.Generator, stratum: float):
        plo, phi = cfg.pitch_hz_range
        self.pitch = plo + (phi - plo) * _spread(stratum, rng)
        slo, shi = cfg.syllables_per_sec_range
        self.period = int(sample_rate / (slo + (shi - slo) * rng.random()))
        self.mix = cfg.aspiration_mix
        self.gain = cfg.gain
        self.sr = sample_rate
        self.rng = rng
        self.t = 0
        self.next_onset = int(rng.random() * 0.4 * sample_rate)
        self.bout_len = int(rng.integers(3, 9))
        self.bout_pos = 0
        self.tail = np.zeros(0)
        # one-pole lowpass coefficient for the breath component
        self.asp_alpha = float(np.exp(-TWO_PI * 1800.0 / sample_rate))

    def _syllable(self) -> np.ndarray:
        dur = max(16, int(self.period * 0.55))
        k = np.arange(dur)
        attack = max(1, int(0.015 * self.sr))
        env = np.minimum(k / attack, 1.0) * (1.0 - k / dur)
        # pitch falls across the bout and slides down within each syllable
        bout_drop = 1.0 - 0.06 * (self.bout_pos / max(1, self.bout_len - 1))
        f = self.pitch * bout_drop * (1.0 + 0.04 * (self.rng.random() - 0.5))
        freqs = f * (1.0 - 0.05 * k / dur)
        phase = TWO_PI * np.cumsum(freqs) / self.sr
        voiced = (np.sin(phase) + 0.5 * np.sin(2 * phase) + 0.3 * np.sin(3 * phase)) / 1.8
        noise = self.rng.standard_normal(dur)
        alpha = self.asp_alpha
        breath, _ = lfilter([1.0 - alpha], [1.0, -alpha], noise, zi=np.zeros(1))
        return env * ((1.0 - self.mix) * voiced + self.mix * 2.0 * breath)

    def render(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        if len(self.tail):
            m = min(len(self.tail), n)
            out[:m] += self.tail[:m]
            self.tail = self.tail[m:]
        end = self.t + n
        while self.next_onset < end:
            seg = self._syllable()
            offset = self.next_onset - self.t
            m = min(len(seg), n - offset)
            out[offset : offset + m] += seg[:m]
            if m < len(seg):
                self.tail = seg[m:].copy()
            self.bout_pos += 1
            if self.bout_pos < self.bout_len:
                jitter = 1.0 + 0.16 * (self.rng.random() - 0.5)
                self.next_onset += max(len(seg), int(self.period * jitter))
            else:
                pause = (0.3 + 0.6 * self.rng.random()) * self.sr
                self.next_onset += int(self.period + pause)
                self.bout_len = int(self.rng.integers(3, 9))
                self.bout_pos = 0
        self.t = end
        return self.gain * out


VOICE_CLASSES = {
    ReactionKind.CLAP: ClapVoice,
    ReactionKind.WHISTLE: WhistleVoice,
    ReactionKind.BOO: BooVoice,
    ReactionKind.LAUGH: LaughVoice,
}


def reaction_config(config: VoiceBankConfig, kind: ReactionKind):
    return (config.clap, config.whistle, config.boo, config.laugh)[int(kind)]


def make_voice(config: VoiceBankConfig, kind: ReactionKind, sample_rate: int, seed: int, index: int):
    rng = np.random.default_rng([seed, int(kind), index])
    stratum = (0.5 + GOLDEN * index) % 1.0
    return VOICE_CLASSES[kind](reaction_config(config, kind), sample_rate, rng, stratum)
