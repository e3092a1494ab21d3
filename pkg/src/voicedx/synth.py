"""Synthetic four-class corpus generator.

Real clinical recordings are private, so desk-scale runs use harmonic
signals whose class signatures are fixed by the table below. The classes
are separable by construction; nothing here claims to model pathology.

Class parameter table (documented contract, tested):

    class        F0 band (Hz)   jitter  shimmer  tilt (dB/oct)
    fd           170 - 200      0.004   0.03     -12
    neoplasm     120 - 145      0.030   0.12      -3
    phonotrauma  215 - 255      0.012   0.06      -7
    vocalpalsy    90 - 112      0.008   0.20     -16

jitter/shimmer are cycle-to-cycle relative perturbations of period and
amplitude; tilt is the roll-off of harmonic amplitudes. White noise is
mixed over the voiced segment at the requested SNR, then 200 ms of
digital silence is prepended and appended so the VAD has work to do.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (
    ALL_LABELS,
    DisorderLabel,
    Manifest,
    ManifestEntry,
    UtteranceKind,
    save_manifest,
    write_wav,
)
from .tensor import make_rng

PAD_S = 0.2
EDGE_RAMP_S = 0.01
PEAK_LEVEL = 0.9
MAX_HARMONICS = 24


@dataclass(frozen=True)
class ClassParams:
    f0_low: float
    f0_high: float
    jitter: float
    shimmer: float
    tilt_db_per_oct: float


CLASS_PARAMS: dict[DisorderLabel, ClassParams] = {
    DisorderLabel.FD: ClassParams(170.0, 200.0, 0.004, 0.03, -12.0),
    DisorderLabel.NEOPLASM: ClassParams(120.0, 145.0, 0.030, 0.12, -3.0),
    DisorderLabel.PHONOTRAUMA: ClassParams(215.0, 255.0, 0.012, 0.06, -7.0),
    DisorderLabel.VOCAL_PALSY: ClassParams(90.0, 112.0, 0.008, 0.20, -16.0),
}


@dataclass
class SynthSpec:
    """Generator configuration. kind 'sentence' adds a slow F0 contour;
    'vowel' is stationary (the acceptance harness uses 0.8 s vowels)."""

    n_per_class: int
    sample_rate: int = 16000
    duration_s: float = 2.0
    snr_db: float = 20.0
    seed: int = 0
    kind: str = "sentence"  # 'sentence' | 'vowel'
    sentence_index: int = 1

    def __post_init__(self):
        if self.n_per_class < 5:
            raise ValueError(f"n_per_class {self.n_per_class} < 5")
        if self.duration_s < 0.5:
            raise ValueError(f"duration_s {self.duration_s} too short")
        if self.kind not in ("sentence", "vowel"):
            raise ValueError(f"kind {self.kind!r} must be 'sentence' or 'vowel'")


def render_utterance(params: ClassParams, spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """One padded utterance: harmonic source + noise, peak-normalized, zero pads."""
    fs = spec.sample_rate
    n = int(round(spec.duration_s * fs))
    t = np.arange(n) / fs

    f0 = rng.uniform(params.f0_low, params.f0_high)
    if spec.kind == "sentence":
        # slow F0 contour standing in for syllable-to-syllable pitch movement
        mod_hz = rng.uniform(2.0, 4.0)
        mod_depth = rng.uniform(0.08, 0.15)
        phase0 = rng.uniform(0.0, 2 * np.pi)
        contour = 1.0 + mod_depth * np.sin(2 * np.pi * mod_hz * t + phase0)
    else:
        contour = np.ones(n)

    # per-cycle multipliers for jitter (period) and shimmer (amplitude)
    n_cycles = int(spec.duration_s * params.f0_high * 1.3) + 8
    jit = 1.0 + params.jitter * rng.uniform(-1.0, 1.0, size=n_cycles)
    shim = 1.0 + params.shimmer * rng.uniform(-1.0, 1.0, size=n_cycles)
    cycle_ends = np.cumsum(jit / f0)
    cycle_idx = np.searchsorted(cycle_ends, t)

    f_inst = f0 * contour * jit[cycle_idx]
    phase = 2 * np.pi * np.cumsum(f_inst) / fs

    n_harm = min(MAX_HARMONICS, int(0.45 * fs / params.f0_high))
    h = np.arange(1, n_harm + 1)
    amps = h ** (params.tilt_db_per_oct / 6.0206)  # dB/octave as a power law
    voiced = (np.sin(np.outer(h, phase)).T * amps).sum(axis=1)
    voiced *= shim[cycle_idx]

    ramp = int(EDGE_RAMP_S * fs)
    env = np.ones(n)
    env[:ramp] = np.linspace(0.0, 1.0, ramp, endpoint=False)
    env[-ramp:] = np.linspace(1.0, 0.0, ramp)
    voiced *= env

    sig_power = np.mean(voiced ** 2)
    noise_power = sig_power / 10 ** (spec.snr_db / 10)
    noisy = voiced + rng.normal(0.0, np.sqrt(noise_power), size=n)

    noisy *= PEAK_LEVEL / np.max(np.abs(noisy))  # common scale keeps the SNR

    pad = np.zeros(int(PAD_S * fs))
    return np.concatenate([pad, noisy, pad])


def synth_corpus(spec: SynthSpec, out_dir) -> Manifest:
    """Generate WAVs under out_dir/wav/<class>/ plus out_dir/manifest.csv.

    Deterministic under spec.seed: parameter draws happen in label-code
    order, utterance index order, so equal seeds give bit-identical files.
    """
    out_dir = Path(out_dir)
    rng = make_rng(spec.seed)
    kind = (UtteranceKind(vowel=True) if spec.kind == "vowel"
            else UtteranceKind(vowel=False, sentence_index=spec.sentence_index))

    entries = []
    for label in ALL_LABELS:
        class_dir = out_dir / "wav" / label.key
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(spec.n_per_class):
            speaker = f"syn-{label.key}-{i:03d}"
            samples = render_utterance(CLASS_PARAMS[label], spec, rng)
            rel = f"wav/{label.key}/{speaker}.wav"
            write_wav(out_dir / rel, samples, spec.sample_rate)
            entries.append(ManifestEntry(path=rel, speaker_id=speaker, label=label, kind=kind))

    manifest = Manifest(entries=entries, root_dir=out_dir)
    save_manifest(manifest, out_dir / "manifest.csv")
    return manifest
