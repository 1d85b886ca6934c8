"""Exploratory checks of the renderer's level, spectrum, and continuity behavior."""

import numpy as np

from vaudience.state import ReactionKind
from vaudience.synth import CrowdRenderer, SynthesisParams

SR = 48000


def params(clap=0, whistle=0, boo=0, laugh=0, seed=42):
    counts = (clap, whistle, boo, laugh)
    return SynthesisParams(counts=counts, total=max(counts) or 0, sample_rate=SR, seed=seed)


def rms(x):
    return float(np.sqrt(np.mean(x * x)))


def band_energy(x, lo, hi):
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1 / SR)
    total = spec.sum()
    band = spec[(freqs >= lo) & (freqs <= hi)].sum()
    return band / total


def main():
    print("== silence ==")
    r = CrowdRenderer(params())
    out = r.render_block(480).samples
    print("all zero:", np.all(out == 0.0))

    print("== determinism ==")
    a = CrowdRenderer(params(clap=3, laugh=2)).render_block(SR).samples
    b = CrowdRenderer(params(clap=3, laugh=2)).render_block(SR).samples
    print("bit identical:", np.array_equal(a, b))

    print("== monotone RMS per reaction ==")
    for kind in ReactionKind:
        values = []
        for count in (1, 2, 4, 8, 16, 32):
            kw = {kind.name.lower(): count}
            out = CrowdRenderer(params(**kw)).render_block(SR).samples
            values.append(rms(out))
        ok = all(values[i] < values[i + 1] for i in range(len(values) - 1))
        print(f"{kind.name:8s} {['%.4f' % v for v in values]} strict={ok}")

    print("== per-voice peaks and deltas (single voice, 2 s) ==")
    for kind in ReactionKind:
        kw = {kind.name.lower(): 1}
        out = CrowdRenderer(params(**kw)).render_block(2 * SR).samples
        print(f"{kind.name:8s} peak={np.max(np.abs(out)):.3f} maxdelta={np.max(np.abs(np.diff(out))):.3f} rms={rms(out):.4f}")

    print("== band energy ==")
    w = CrowdRenderer(params(whistle=4)).render_block(SR).samples
    print("whistle in 1.2-3.5k:", band_energy(w, 1200, 3500))
    b4 = CrowdRenderer(params(boo=4)).render_block(SR).samples
    print("boo below 1.5k:", band_energy(b4, 0, 1500))

    print("== clap crest ==")
    c = CrowdRenderer(params(clap=4)).render_block(SR).samples
    print("crest(4):", np.max(np.abs(c)) / rms(c))
    c1 = CrowdRenderer(params(clap=1)).render_block(SR).samples
    print("crest(1):", np.max(np.abs(c1)) / rms(c1))

    print("== limiter at extreme counts ==")
    big = SynthesisParams(counts=(65535,) * 4, total=65535, sample_rate=SR, seed=42)
    out = CrowdRenderer(big).render_block(SR).samples
    print("peak:", np.max(np.abs(out)))

    print("== transition continuity ==")
    r = CrowdRenderer(params(clap=4))
    pre = r.render_block(SR // 2).samples
    r.transition(params(clap=0))
    post = r.render_block(SR // 2).samples
    joined = np.concatenate([pre, post])
    print("clap4->0 maxdelta:", np.max(np.abs(np.diff(joined))))
    decay_at = len(pre) + int(0.2 * SR)
    print("silent after 200ms:", np.all(joined[decay_at:] == 0.0))

    r = CrowdRenderer(params())
    pre = r.render_block(SR // 2).samples
    r.transition(params(laugh=2))
    post = r.render_block(SR // 2).samples
    joined = np.concatenate([pre, post])
    print("silence->laugh2 maxdelta:", np.max(np.abs(np.diff(joined))))

    print("== crowd deltas at moderate counts ==")
    out = CrowdRenderer(params(clap=8, whistle=8, boo=8, laugh=8)).render_block(SR).samples
    print("mixed 8s: peak", np.max(np.abs(out)), "maxdelta", np.max(np.abs(np.diff(out))))


if __name__ == "__main__":
    main()
