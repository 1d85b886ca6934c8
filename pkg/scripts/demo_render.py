"""Render a 12-second offline demo of the crowd synthesizer to demo.wav.

Sweeps through an applause swell, whistles joining, a boo wave, and a
laughing finish, exercising the same transition path the live client uses.
"""

import numpy as np

from vaudience.audio_io import write_wav
from vaudience.synth import CrowdRenderer, SynthesisParams

SR = 48000

SCRIPT = [
    # (seconds, clap, whistle, boo, laugh)
    (2.0, 4, 0, 0, 0),
    (2.0, 16, 2, 0, 0),
    (2.0, 6, 4, 0, 0),
    (2.0, 0, 0, 8, 0),
    (2.0, 0, 0, 2, 6),
    (2.0, 0, 0, 0, 0),
]


def main():
    renderer = CrowdRenderer(SynthesisParams(sample_rate=SR, seed=7))
    chunks = []
    for seconds, clap, whistle, boo, laugh in SCRIPT:
        counts = (clap, whistle, boo, laugh)
        params = SynthesisParams(counts=counts, total=max(counts), sample_rate=SR, seed=7)
        renderer.transition(params, crossfade_ms=400)
        chunks.append(renderer.render_block(int(seconds * SR)).samples)
    audio = np.concatenate(chunks)
    write_wav("demo.wav", audio, SR)
    print(f"wrote demo.wav: {len(audio) / SR:.1f} s, peak {np.max(np.abs(audio)):.3f}")


if __name__ == "__main__":
    main()
