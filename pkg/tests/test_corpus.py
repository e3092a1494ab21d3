import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voicedx import corpus, synth
from voicedx.errors import (
    DuplicatePath,
    InsufficientSpeakers,
    MissingField,
    TruncatedData,
    UnknownLabel,
    UnsupportedChannels,
    UnsupportedSampleRate,
)


def write_manifest(path, rows):
    lines = ["path,speaker_id,label,utterance_kind"] + rows
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestWav:
    def test_int16_scaling(self, tmp_path):
        p = tmp_path / "a.wav"
        corpus.write_wav(p, np.array([0.0, 0.5, -1.0]), 16000)
        w = corpus.read_wav(p)
        np.testing.assert_array_equal(w.samples, [0.0, 0.5, -1.0])
        assert w.sample_rate == 16000

    def test_44100_accepted(self, tmp_path):
        p = tmp_path / "a.wav"
        corpus.write_wav(p, np.zeros(64), 44100)
        assert corpus.read_wav(p).sample_rate == 44100

    def test_odd_rate_rejected(self, tmp_path):
        p = tmp_path / "a.wav"
        corpus.write_wav(p, np.zeros(64), 8000)
        with pytest.raises(UnsupportedSampleRate):
            corpus.read_wav(p)

    def test_stereo_rejected(self, tmp_path):
        p = tmp_path / "st.wav"
        data = struct.pack("<4sI4s4sIHHIIHH4sI", b"RIFF", 36 + 8, b"WAVE",
                           b"fmt ", 16, 1, 2, 16000, 64000, 4, 16,
                           b"data", 8) + b"\x00" * 8
        p.write_bytes(data)
        with pytest.raises(UnsupportedChannels):
            corpus.read_wav(p)

    def test_truncated_data_chunk(self, tmp_path):
        p = tmp_path / "tr.wav"
        corpus.write_wav(p, np.zeros(100), 16000)
        whole = p.read_bytes()
        p.write_bytes(whole[:-20])  # drop tail samples but keep declared size
        with pytest.raises(TruncatedData):
            corpus.read_wav(p)

    def test_not_riff(self, tmp_path):
        p = tmp_path / "x.wav"
        p.write_bytes(b"garbage bytes here")
        with pytest.raises(corpus.MalformedWav):
            corpus.read_wav(p)

    @settings(max_examples=30, deadline=None)
    @given(ints=st.lists(st.integers(min_value=-32768, max_value=32767), min_size=1, max_size=200))
    def test_roundtrip_identity_on_int16(self, ints, tmp_path_factory):
        p = tmp_path_factory.mktemp("wav") / "rt.wav"
        arr = np.array(ints, dtype=np.int16)
        corpus.write_wav(p, arr.astype(np.float64) / 32768.0, 16000)
        back = corpus.read_wav(p).samples * 32768.0
        np.testing.assert_array_equal(back.astype(np.int16), arr)


class TestLabels:
    def test_code_bijection(self):
        assert [l.value for l in corpus.ALL_LABELS] == [0, 1, 2, 3]
        names = [l.key for l in corpus.ALL_LABELS]
        assert names == ["fd", "neoplasm", "phonotrauma", "vocalpalsy"]
        for l in corpus.ALL_LABELS:
            assert corpus.DisorderLabel.from_key(l.key) is l

    def test_unknown(self):
        with pytest.raises(UnknownLabel):
            corpus.DisorderLabel.from_key("polyp")


class TestManifest:
    def test_parse_entry(self, tmp_path):
        m = tmp_path / "m.csv"
        write_manifest(m, ["a/001.wav,spk7,phonotrauma,sentence2"])
        man = corpus.load_manifest(m)
        assert len(man) == 1
        e = man.entries[0]
        assert e.label is corpus.DisorderLabel.PHONOTRAUMA
        assert e.kind.sentence_index == 2 and not e.kind.vowel
        assert man.resolve(e) == tmp_path / "a/001.wav"

    def test_duplicate_path(self, tmp_path):
        m = tmp_path / "m.csv"
        write_manifest(m, ["a.wav,s1,fd,vowel", "a.wav,s2,fd,vowel"])
        with pytest.raises(DuplicatePath):
            corpus.load_manifest(m)

    def test_unknown_label(self, tmp_path):
        m = tmp_path / "m.csv"
        write_manifest(m, ["a.wav,s1,polyp,vowel"])
        with pytest.raises(UnknownLabel):
            corpus.load_manifest(m)

    def test_missing_field(self, tmp_path):
        m = tmp_path / "m.csv"
        write_manifest(m, ["a.wav,s1,fd"])
        with pytest.raises(MissingField):
            corpus.load_manifest(m)

    def test_save_load_roundtrip(self, tmp_path):
        m = tmp_path / "m.csv"
        write_manifest(m, ["a.wav,s1,fd,vowel", "b.wav,s2,vocalpalsy,sentence7"])
        man = corpus.load_manifest(m)
        corpus.save_manifest(man, tmp_path / "m2.csv")
        again = corpus.load_manifest(tmp_path / "m2.csv")
        assert again.entries == man.entries


def single_class_manifest(tmp_path, n_speakers, n_utts_each=1, label="fd"):
    rows = []
    for s in range(n_speakers):
        for u in range(n_utts_each):
            rows.append(f"wav/{s}_{u}.wav,spk{s},{label},vowel")
    m = tmp_path / "m.csv"
    write_manifest(m, rows)
    return corpus.load_manifest(m)


class TestSplit:
    def test_exact_fraction_single_class(self, tmp_path):
        man = single_class_manifest(tmp_path, 10)
        for seed in (0, 1, 99):
            plan = corpus.make_split(man, 0.2, seed)
            assert len(plan.test_speakers) == 2
            assert len(plan.train_speakers) == 8

    def test_deterministic(self, tmp_path):
        man = single_class_manifest(tmp_path, 10)
        a = corpus.make_split(man, 0.2, 7)
        b = corpus.make_split(man, 0.2, 7)
        assert a.to_json_dict() == b.to_json_dict()

    def test_single_speaker_class_rejected(self, tmp_path):
        m = tmp_path / "m.csv"
        write_manifest(m, ["a.wav,s1,fd,vowel", "b.wav,s2,neoplasm,vowel",
                           "c.wav,s3,neoplasm,vowel"])
        with pytest.raises(InsufficientSpeakers):
            corpus.make_split(corpus.load_manifest(m), 0.2, 0)

    def test_disjoint_and_fold_balance(self, tmp_path):
        rows = []
        for li, label in enumerate(["fd", "neoplasm", "phonotrauma", "vocalpalsy"]):
            for s in range(9 + li):
                rows.append(f"w/{label}{s}.wav,{label}-s{s},{label},sentence1")
        m = tmp_path / "m.csv"
        write_manifest(m, rows)
        man = corpus.load_manifest(m)
        for seed in range(5):
            plan = corpus.make_split(man, 0.2, seed)
            assert not plan.train_speakers & plan.test_speakers
            assert plan.train_speakers | plan.test_speakers == set(man.speakers())
            assert set(plan.folds) == plan.train_speakers
            # fold sizes differ by at most one speaker per class
            for label in ["fd", "neoplasm", "phonotrauma", "vocalpalsy"]:
                sizes = [sum(1 for s, f in plan.folds.items()
                             if f == k and s.startswith(label)) for k in range(5)]
                assert max(sizes) - min(sizes) <= 1

    def test_mixed_label_speaker_rejected(self, tmp_path):
        m = tmp_path / "m.csv"
        write_manifest(m, ["a.wav,s1,fd,vowel", "b.wav,s1,neoplasm,vowel",
                           "c.wav,s2,fd,vowel"])
        with pytest.raises(corpus.InconsistentSpeakerLabel):
            corpus.make_split(corpus.load_manifest(m), 0.2, 0)


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    spec = synth.SynthSpec(n_per_class=5, duration_s=1.0, seed=3)
    manifest = synth.synth_corpus(spec, out)
    return spec, manifest, out


class TestSynth:
    def test_counts(self, small_corpus):
        _, manifest, _ = small_corpus
        assert len(manifest) == 20
        per = {}
        for e in manifest.entries:
            per[e.label] = per.get(e.label, 0) + 1
        assert all(v == 5 for v in per.values())
        speakers = manifest.speakers()
        assert len(speakers) == 20  # unique synthetic speaker per utterance

    def test_files_load_and_have_pads(self, small_corpus):
        spec, manifest, out = small_corpus
        w = corpus.read_wav(manifest.resolve(manifest.entries[0]))
        pad = int(0.2 * spec.sample_rate)
        assert np.all(w.samples[:pad] == 0.0)
        assert np.all(w.samples[-pad:] == 0.0)
        assert np.max(np.abs(w.samples)) <= 1.0
        assert w.duration_s == pytest.approx(1.0 + 0.4, abs=0.01)

    def test_bit_reproducible(self, tmp_path, small_corpus):
        spec, manifest, out = small_corpus
        again = synth.synth_corpus(spec, tmp_path / "again")
        for e1, e2 in zip(manifest.entries, again.entries):
            b1 = (out / e1.path).read_bytes()
            b2 = (tmp_path / "again" / e2.path).read_bytes()
            assert b1 == b2

    def test_different_seed_differs(self, tmp_path, small_corpus):
        spec, manifest, out = small_corpus
        other = synth.SynthSpec(n_per_class=5, duration_s=1.0, seed=4)
        synth.synth_corpus(other, tmp_path / "other")
        b1 = (out / manifest.entries[0].path).read_bytes()
        b2 = (tmp_path / "other" / manifest.entries[0].path).read_bytes()
        assert b1 != b2

    def test_spectral_tilt_ordering(self, tmp_path):
        # quiet vowel corpus: no F0 contour, so harmonic energies sit in
        # clean windows and the regression recovers the documented tilt
        spec = synth.SynthSpec(n_per_class=5, duration_s=1.0, snr_db=30.0,
                               seed=11, kind="vowel")
        manifest = synth.synth_corpus(spec, tmp_path)
        fs = spec.sample_rate
        pad = int(0.2 * fs)
        slopes = {}
        for e in manifest.entries:
            w = corpus.read_wav(manifest.resolve(e))
            x = w.samples[pad:-pad]
            spec_pow = np.abs(np.fft.rfft(x)) ** 2
            freqs = np.fft.rfftfreq(len(x), 1 / fs)
            low = (freqs >= 70) & (freqs <= 280)
            f0 = freqs[low][np.argmax(spec_pow[low])]
            levels = []
            for h in range(1, 7):
                sel = (freqs >= (h - 0.35) * f0) & (freqs <= (h + 0.35) * f0)
                levels.append(10 * np.log10(np.sum(spec_pow[sel]) + 1e-30))
            slope = np.polyfit(np.log2(np.arange(1, 7)), levels, 1)[0]
            slopes.setdefault(e.label, []).append(slope)
        mean_slope = {lab: np.mean(v) for lab, v in slopes.items()}
        ordered = sorted(mean_slope, key=mean_slope.get, reverse=True)
        expect = sorted(synth.CLASS_PARAMS,
                        key=lambda lab: synth.CLASS_PARAMS[lab].tilt_db_per_oct,
                        reverse=True)
        assert ordered == expect

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            synth.SynthSpec(n_per_class=4)
        with pytest.raises(ValueError):
            synth.SynthSpec(n_per_class=5, kind="humming")
