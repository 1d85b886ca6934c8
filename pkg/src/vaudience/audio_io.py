"""Audio buffers and sinks: mono float blocks, 16-bit WAV files, playback devices."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .state import AudienceError


class SinkFailure(AudienceError):
    """The audio sink could not be opened or written."""


@dataclass(frozen=True)
class AudioBlock:
    """Fixed-length mono buffer, amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __len__(self) -> int:
        return len(self.samples)


def float_to_pcm16(samples: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(samples * 32767.0), -32768, 32767).astype("<i2")


def pcm16_to_float(raw: bytes) -> np.ndarray:
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(float_to_pcm16(samples).tobytes())


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    with wave.open(str(path), "rb") as wav:
        if wav.getnchannels() != 1 or wav.getsampwidth() != 2:
            raise SinkFailure(f"{path} is not 16-bit mono")
        raw = wav.readframes(wav.getnframes())
        return pcm16_to_float(raw), wav.getframerate()


class WavFileSink:
    """Streams blocks into a RIFF/WAVE file, 16-bit mono."""

    def __init__(self, path: str | Path, sample_rate: int = 48000):
        self.path = Path(path)
        self.sample_rate = sample_rate
        try:
            # open the file ourselves: wave.open's partially constructed
            # writer raises confusing errors from __del__ on failure
            self._file = open(self.path, "wb")
        except OSError as exc:
            raise SinkFailure(f"cannot open {self.path}: {exc}") from exc
        self._wav = wave.open(self._file, "wb")
        self._wav.setnchannels(1)
        self._wav.setsampwidth(2)
        self._wav.setframerate(sample_rate)
        self.frames_written = 0

    def write(self, block: AudioBlock) -> None:
        if block.sample_rate != self.sample_rate:
            raise SinkFailure(
                f"block rate {block.sample_rate} != sink rate {self.sample_rate}"
            )
        try:
            self._wav.writeframes(float_to_pcm16(block.samples).tobytes())
        except OSError as exc:
            raise SinkFailure(f"write to {self.path} failed: {exc}") from exc
        self.frames_written += len(block)

    def close(self) -> None:
        self._wav.close()
        self._file.close()


class NullSink:
    """Discards audio; used by headless simulated clients."""

    def __init__(self, sample_rate: int = 48000):
        self.sample_rate = sample_rate
        self.frames_written = 0

    def write(self, block: AudioBlock) -> None:
        self.frames_written += len(block)

    def close(self) -> None:
        pass


class DeviceSink:
    """Plays blocks on the default output device; needs the sounddevice package."""

    def __init__(self, sample_rate: int = 48000):
        try:
            import sounddevice
        except ImportError as exc:
            raise SinkFailure(
                "playback needs the optional sounddevice package; use a .wav sink instead"
            ) from exc
        self.sample_rate = sample_rate
        self.frames_written = 0
        self._stream = sounddevice.OutputStream(
            samplerate=sample_rate, channels=1, dtype="float32"
        )
        self._stream.start()

    def write(self, block: AudioBlock) -> None:
        self._stream.write(block.samples.astype(np.float32))
        self.frames_written += len(block)

    def close(self) -> None:
        self._stream.stop()
        self._stream.close()


def open_sink(spec: str | None, sample_rate: int = 48000):
    """Map a CLI sink spec to a sink: 'none', 'device', or a .wav path."""
    if spec is None or spec == "none":
        return NullSink(sample_rate)
    if spec == "device":
        return DeviceSink(sample_rate)
    return WavFileSink(spec, sample_rate)
