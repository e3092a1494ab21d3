"""Dataset layer: disorder labels, WAV ingest, manifests, speaker-disjoint splits.

WAV support is deliberately narrow: RIFF PCM, 16-bit, mono, little-endian,
at 16 kHz or 44.1 kHz. Anything else is rejected at ingest; there is no
resampling and no codec support.
"""

from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicatePath,
    InconsistentSpeakerLabel,
    InsufficientSpeakers,
    MalformedWav,
    MissingField,
    TruncatedData,
    UnknownLabel,
    UnsupportedChannels,
    UnsupportedEncoding,
    UnsupportedSampleRate,
)
from .tensor import make_rng

ACCEPTED_SAMPLE_RATES = (16000, 44100)
N_FOLDS = 5

MANIFEST_FIELDS = ("path", "speaker_id", "label", "utterance_kind")


class DisorderLabel(enum.IntEnum):
    """The four target classes; integer codes are a stable bijection."""

    FD = 0
    NEOPLASM = 1
    PHONOTRAUMA = 2
    VOCAL_PALSY = 3

    @property
    def key(self) -> str:
        """Serialized form: lowercase name without separators."""
        return self.name.replace("_", "").lower()

    @classmethod
    def from_key(cls, text: str) -> "DisorderLabel":
        try:
            return _LABEL_BY_KEY[text.strip().lower()]
        except KeyError:
            raise UnknownLabel(f"unknown disorder label {text!r}; expected one of "
                               f"{sorted(_LABEL_BY_KEY)}") from None


_LABEL_BY_KEY = {lab.key: lab for lab in DisorderLabel}

ALL_LABELS = tuple(DisorderLabel)


@dataclass(frozen=True)
class UtteranceKind:
    """Either the sustained vowel or one of the seven script sentences."""

    vowel: bool
    sentence_index: int = 0  # 1..7 when vowel is False

    def __post_init__(self):
        if not self.vowel and not 1 <= self.sentence_index <= 7:
            raise ValueError(f"sentence index {self.sentence_index} outside 1..7")

    @property
    def key(self) -> str:
        return "vowel" if self.vowel else f"sentence{self.sentence_index}"

    @classmethod
    def from_key(cls, text: str) -> "UtteranceKind":
        text = text.strip().lower()
        if text == "vowel":
            return cls(vowel=True)
        if text.startswith("sentence") and text[len("sentence"):].isdigit():
            return cls(vowel=False, sentence_index=int(text[len("sentence"):]))
        raise MissingField(f"bad utterance kind {text!r}; expected 'vowel' or 'sentence1'..'sentence7'")


VOWEL = UtteranceKind(vowel=True)


@dataclass
class Waveform:
    """Mono PCM audio normalized to [-1, 1]."""

    samples: np.ndarray
    sample_rate: int
    speaker_id: str = ""
    label: DisorderLabel | None = None
    kind: UtteranceKind = VOWEL

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    speaker_id: str
    label: DisorderLabel
    kind: UtteranceKind


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    root_dir: Path

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.root_dir / entry.path

    def speakers(self) -> list[str]:
        seen = dict.fromkeys(e.speaker_id for e in self.entries)
        return list(seen)


@dataclass
class SplitPlan:
    """Speaker-disjoint train/test assignment plus five training folds."""

    train_speakers: set[str]
    test_speakers: set[str]
    folds: dict[str, int]  # train speaker -> fold 0..4

    def fold_speakers(self, fold: int) -> set[str]:
        return {s for s, f in self.folds.items() if f == fold}

    def to_json_dict(self) -> dict:
        return {
            "train_speakers": sorted(self.train_speakers),
            "test_speakers": sorted(self.test_speakers),
            "folds": dict(sorted(self.folds.items())),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SplitPlan":
        return cls(
            train_speakers=set(d["train_speakers"]),
            test_speakers=set(d["test_speakers"]),
            folds={k: int(v) for k, v in d["folds"].items()},
        )


# --- WAV I/O ----------------------------------------------------------------

def read_wav(path) -> Waveform:
    """Read a RIFF PCM 16-bit mono file; samples come back as int16/32768."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise MalformedWav(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise MalformedWav(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            if len(body) < size:
                raise TruncatedData(f"{path}: data chunk declares {size} bytes, "
                                    f"file holds {len(body)}")
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or data is None:
        raise MalformedWav(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format != 1:
        raise UnsupportedEncoding(f"{path}: audio format tag {audio_format}, only PCM (1) supported")
    if channels != 1:
        raise UnsupportedChannels(f"{path}: {channels} channels, only mono supported")
    if bits != 16:
        raise UnsupportedEncoding(f"{path}: {bits}-bit samples, only 16-bit supported")
    if sample_rate not in ACCEPTED_SAMPLE_RATES:
        raise UnsupportedSampleRate(f"{path}: {sample_rate} Hz, accepted rates are "
                                    f"{ACCEPTED_SAMPLE_RATES}")
    if len(data) % 2:
        raise TruncatedData(f"{path}: odd data chunk length {len(data)}")

    ints = np.frombuffer(data, dtype="<i2")
    if ints.size == 0:
        raise MalformedWav(f"{path}: empty data chunk")
    return Waveform(samples=ints.astype(np.float64) / 32768.0, sample_rate=sample_rate)


def write_wav(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float samples in [-1, 1] as RIFF PCM 16-bit mono."""
    path = Path(path)
    ints = np.clip(np.rint(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    data = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16, 1, 1, sample_rate, sample_rate * 2, 2, 16,
        b"data", len(data),
    )
    path.write_bytes(header + data)


# --- manifests ---------------------------------------------------------------

def load_manifest(path) -> Manifest:
    """Parse a CSV manifest with header path,speaker_id,label,utterance_kind."""
    path = Path(path)
    entries: list[ManifestEntry] = []
    seen_paths: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [f for f in MANIFEST_FIELDS if f not in (reader.fieldnames or ())]
        if missing:
            raise MissingField(f"{path}: manifest header lacks {missing}")
        for lineno, row in enumerate(reader, start=2):
            for f in MANIFEST_FIELDS:
                if row.get(f) in (None, ""):
                    raise MissingField(f"{path}:{lineno}: missing field {f!r}")
            if row["path"] in seen_paths:
                raise DuplicatePath(f"{path}:{lineno}: duplicate path {row['path']!r}")
            seen_paths.add(row["path"])
            entries.append(ManifestEntry(
                path=row["path"],
                speaker_id=row["speaker_id"],
                label=DisorderLabel.from_key(row["label"]),
                kind=UtteranceKind.from_key(row["utterance_kind"]),
            ))
    return Manifest(entries=entries, root_dir=path.parent)


def save_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for e in manifest.entries:
            writer.writerow([e.path, e.speaker_id, e.label.key, e.kind.key])


# --- splitting ----------------------------------------------------------------

def _speakers_by_class(manifest: Manifest) -> dict[DisorderLabel, dict[str, int]]:
    """Per class: speaker -> utterance count. Speakers must be single-label."""
    speaker_label: dict[str, DisorderLabel] = {}
    table: dict[DisorderLabel, dict[str, int]] = {lab: {} for lab in ALL_LABELS}
    for e in manifest.entries:
        prev = speaker_label.get(e.speaker_id)
        if prev is not None and prev != e.label:
            raise InconsistentSpeakerLabel(
                f"speaker {e.speaker_id!r} appears with labels {prev.key} and {e.label.key}")
        speaker_label[e.speaker_id] = e.label
        table[e.label][e.speaker_id] = table[e.label].get(e.speaker_id, 0) + 1
    return {lab: spk for lab, spk in table.items() if spk}


def make_split(manifest: Manifest, test_fraction: float, seed: int) -> SplitPlan:
    """Speaker-disjoint split, stratified per class.

    Per class, speakers are shuffled by the seeded generator and moved into
    the test set greedily until the class's test utterance count reaches
    test_fraction of its total; the remaining speakers are dealt round-robin
    into the five training folds. Deterministic in (manifest, seed).
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction {test_fraction} outside (0, 1)")
    rng = make_rng(seed)
    train: set[str] = set()
    test: set[str] = set()
    folds: dict[str, int] = {}
    by_class = _speakers_by_class(manifest)

    for label in ALL_LABELS:
        per_class = by_class.get(label)
        if per_class is None:
            continue
        speakers = sorted(per_class)
        if len(speakers) < 2:
            raise InsufficientSpeakers(
                f"class {label.key} has {len(speakers)} speaker(s); "
                f"need at least 2 for a speaker-disjoint split")
        order = [speakers[i] for i in rng.permutation(len(speakers))]
        target = test_fraction * sum(per_class.values())
        count = 0
        picked: list[str] = []
        for spk in order:
            if count >= target or len(picked) == len(order) - 1:
                break  # keep at least one train speaker per class
            picked.append(spk)
            count += per_class[spk]
        test.update(picked)
        rest = [s for s in order if s not in picked]
        train.update(rest)
        for i, spk in enumerate(rest):
            folds[spk] = i % N_FOLDS

    return SplitPlan(train_speakers=train, test_speakers=test, folds=folds)


def filter_entries(manifest: Manifest, speakers: set[str]) -> list[ManifestEntry]:
    return [e for e in manifest.entries if e.speaker_id in speakers]
