"""Optional text-to-audio backend path with a procedural fallback.

The backend is an HTTP endpoint: POST a JSON body {"prompt": str,
"duration_s": number}; the response is JSON {"sample_rate": int,
"audio_pcm16": base64 little-endian 16-bit mono PCM}. Whatever comes back
is resampled to the requested rate and cut or padded to the exact block
length. Any failure falls back to the local renderer, so the audience
sound never goes missing because a model endpoint is down.
"""

from __future__ import annotations

import base64
import json
import logging
import math
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.signal import resample_poly

from ..audio_io import AudioBlock, pcm16_to_float
from ..state import AudienceError
from .config import SynthesisParams, VoiceBankConfig
from .renderer import CrowdRenderer

log = logging.getLogger(__name__)


class BackendUnavailable(AudienceError):
    """Backend call failed; callers normally see the fallback instead."""


class TextToAudioBackend(Protocol):
    def generate(self, prompt: str, duration_s: float) -> tuple[np.ndarray, int]:
        """Return (mono float samples, sample rate) for a prompt."""
        ...


@dataclass
class HttpTextToAudioBackend:
    endpoint: str
    timeout_s: float = 10.0

    def generate(self, prompt: str, duration_s: float) -> tuple[np.ndarray, int]:
        body = json.dumps({"prompt": prompt, "duration_s": duration_s}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, OSError, ValueError) as exc:
            raise BackendUnavailable(f"backend {self.endpoint}: {exc}") from exc
        try:
            rate = int(payload["sample_rate"])
            samples = pcm16_to_float(base64.b64decode(payload["audio_pcm16"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendUnavailable(f"backend returned malformed audio: {exc}") from exc
        return samples, rate


def resample(samples: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    if src_rate == dst_rate:
        return samples
    g = math.gcd(src_rate, dst_rate)
    return resample_poly(samples, dst_rate // g, src_rate // g)


def _fit_length(samples: np.ndarray, n: int) -> np.ndarray:
    if len(samples) >= n:
        return samples[:n]
    return np.concatenate([samples, np.zeros(n - len(samples))])


def synthesize_via_backend(
    prompt: str,
    backend: TextToAudioBackend | None,
    params: SynthesisParams,
    duration_s: float,
    config: VoiceBankConfig | None = None,
) -> AudioBlock:
    """Render a prompt through the backend, or locally when that fails.

    An empty prompt means silence and never touches the backend.
    """
    n = int(round(duration_s * params.sample_rate))
    if not prompt:
        return AudioBlock(np.zeros(n), params.sample_rate)
    if backend is not None:
        try:
            samples, rate = backend.generate(prompt, duration_s)
            samples = resample(np.asarray(samples, dtype=np.float64), rate, params.sample_rate)
            return AudioBlock(_fit_length(samples, n), params.sample_rate)
        except BackendUnavailable as exc:
            log.warning("text-to-audio backend failed, using procedural render: %s", exc)
    renderer = CrowdRenderer(params, config)
    return renderer.render_block(n)
