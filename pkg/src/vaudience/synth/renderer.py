"""Crowd renderer: mixes per-reaction voice banks into one continuous signal.

Count changes never cut audio hard: each voice fades linearly over the
crossfade window, and because a voice's signal is independent of the crowd
size, per-voice fades are exactly the linear blend of the old and new
mixes. Counts above the voice cap scale the layer by sqrt(count/voices),
so perceived loudness keeps growing without unbounded CPU.
"""

from __future__ import annotations

import math

import numpy as np

from ..audio_io import AudioBlock
from ..state import ReactionKind
from .config import InvalidParams, SynthesisParams, VoiceBankConfig
from .voices import make_voice, ramp_toward

DEFAULT_CROSSFADE_MS = 50.0
MASTER_GAIN = 0.85
LIMIT_KNEE = 0.6
LIMIT_CEILING = 0.99


def soft_limit(x: np.ndarray, knee: float = LIMIT_KNEE, ceiling: float = LIMIT_CEILING) -> np.ndarray:
    """Squash peaks above the knee below the ceiling; identity under the knee.

    The curve has slope <= 1 everywhere, so it never widens a
    sample-to-sample step, and it maps 0 to exactly 0.
    """
    ax = np.abs(x)
    over = ax > knee
    if not over.any():
        return x
    span = ceiling - knee
    y = x.copy()
    y[over] = np.sign(x[over]) * (knee + span * np.tanh((ax[over] - knee) / span))
    return y


class _Slot:
    __slots__ = ("voice", "gain", "target")

    def __init__(self) -> None:
        self.voice = None
        self.gain = 0.0
        self.target = 0.0


class ReactionLayer:
    """Voice bank for one reaction, with per-voice fade gains."""

    def __init__(self, kind: ReactionKind, config: VoiceBankConfig, sample_rate: int,
                 seed: int, max_voices: int):
        self.kind = kind
        self.config = config
        self.sample_rate = sample_rate
        self.seed = seed
        self.max_voices = max_voices
        self.slots: list[_Slot] = []
        self.count = 0
        self.scale = 1.0
        self.scale_target = 1.0
        self.fade_step = 1.0
        self.scale_step = 0.0

    def set_count(self, count: int, fade_samples: int) -> None:
        active = min(count, self.max_voices)
        self.fade_step = 1.0 / max(1, fade_samples)
        while len(self.slots) < active:
            self.slots.append(_Slot())
        for j, slot in enumerate(self.slots):
            slot.target = 1.0 if j < active else 0.0
            if slot.target > 0.0 and slot.voice is None:
                slot.voice = make_voice(self.config, self.kind, self.sample_rate, self.seed, j)
        self.scale_target = math.sqrt(count / active) if count > active else 1.0
        self.scale_step = abs(self.scale_target - self.scale) / max(1, fade_samples)
        self.count = count

    def settle(self) -> None:
        """Jump every gain straight to its target (initialization only)."""
        for slot in self.slots:
            slot.gain = slot.target
        self.scale = self.scale_target

    def render(self, n: int) -> np.ndarray | None:
        if not any(slot.gain > 0.0 or slot.target > 0.0 for slot in self.slots):
            self.scale = self.scale_target
            return None
        out = np.zeros(n)
        for slot in self.slots:
            if slot.gain == 0.0 and slot.target == 0.0:
                slot.voice = None  # fully faded: free the generator state
                continue
            sig = slot.voice.render(n)
            if slot.gain != slot.target:
                g, slot.gain = ramp_toward(slot.gain, slot.target, self.fade_step, n)
                out += sig * g
            elif slot.gain == 1.0:
                out += sig
            else:
                out += sig * slot.gain
        if self.scale != self.scale_target:
            s, self.scale = ramp_toward(self.scale, self.scale_target, self.scale_step, n)
            out *= s
        elif self.scale != 1.0:
            out *= self.scale
        return out


class CrowdRenderer:
    """Stateful block renderer for one listener's joint audience sound."""

    def __init__(self, params: SynthesisParams, config: VoiceBankConfig | None = None,
                 crossfade_ms: float = DEFAULT_CROSSFADE_MS):
        config = config or VoiceBankConfig()
        config.validate(params.sample_rate)
        self.config = config
        self.params = params
        self.sample_rate = params.sample_rate
        self.crossfade_ms = crossfade_ms
        self.layers = [
            ReactionLayer(kind, config, params.sample_rate, params.seed,
                          params.max_voices_per_reaction)
            for kind in ReactionKind
        ]
        for kind in ReactionKind:
            self.layers[kind].set_count(params.counts[kind], 1)
            self.layers[kind].settle()

    def _check_compatible(self, params: SynthesisParams) -> None:
        if params.sample_rate != self.params.sample_rate:
            raise InvalidParams("sample rate cannot change mid-stream")
        if params.seed != self.params.seed:
            raise InvalidParams("seed cannot change mid-stream")
        if params.max_voices_per_reaction != self.params.max_voices_per_reaction:
            raise InvalidParams("voice cap cannot change mid-stream")

    def transition(self, new_params: SynthesisParams, crossfade_ms: float | None = None) -> None:
        """Retarget the crowd; output blends linearly over the crossfade."""
        self._check_compatible(new_params)
        if new_params == self.params:
            return
        fade = crossfade_ms if crossfade_ms is not None else self.crossfade_ms
        fade_samples = max(1, int(fade / 1000.0 * self.sample_rate))
        for kind in ReactionKind:
            if new_params.counts[kind] != self.layers[kind].count:
                self.layers[kind].set_count(new_params.counts[kind], fade_samples)
        self.params = new_params

    def render_block(self, n_samples: int, params: SynthesisParams | None = None) -> AudioBlock:
        """Render the next n_samples, transitioning first if params moved."""
        if n_samples <= 0:
            raise InvalidParams("block length must be positive")
        if params is not None and params != self.params:
            self.transition(params)
        mix = None
        for layer in self.layers:
            out = layer.render(n_samples)
            if out is None:
                continue
            mix = out if mix is None else mix + out
        if mix is None:
            return AudioBlock(np.zeros(n_samples), self.sample_rate)
        return AudioBlock(soft_limit(MASTER_GAIN * mix), self.sample_rate)
