import numpy as np
import pytest

from conftest import dft_projection_energy, latched_codes, padded

from dtmf_drive.decoder import (
    DetectorConfig,
    analyze_window,
    band_energies,
    classify,
    stream_detect,
)
from dtmf_drive.signal import (
    HIGH_GROUP_HZ,
    KEYS,
    LOW_GROUP_HZ,
    SampleBuffer,
    dual_tone,
    synthesize,
    tone_spec,
)

CFG = DetectorConfig.for_rate(8000)


def window_of(samples, start=0):
    return SampleBuffer(8000, samples[start : start + CFG.window_samples])


class TestDetectorConfig:
    def test_defaults(self):
        assert CFG.window_samples == 102
        assert CFG.hop_samples == 51
        assert CFG.rel_freq_tolerance == 0.02
        assert CFG.dominance_margin_db == 8.0
        assert CFG.twist_limit_db == 8.0
        assert CFG.signal_floor == 0.5

    def test_replication_profile(self):
        rep = DetectorConfig.for_rate(8000, "paper-replication")
        assert rep.rel_freq_tolerance == 0.06
        assert rep.tolerance_up == 0.03

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            DetectorConfig.for_rate(8000, "bogus")

    def test_invariants(self):
        with pytest.raises(ValueError):
            DetectorConfig(window_samples=32)
        with pytest.raises(ValueError):
            DetectorConfig(hop_samples=200)
        with pytest.raises(ValueError):
            DetectorConfig(rel_freq_tolerance=0.2)


class TestBandEnergies:
    def test_pure_697_concentrates_in_first_low_bin(self):
        n = CFG.window_samples
        x = 0.4 * np.sin(2 * np.pi * 697 * np.arange(n) / 8000)
        e = band_energies(window_of(x), CFG)
        assert int(np.argmax(e.e_low)) == 0
        assert e.e_low[0] >= 0.9 * np.sum(e.e_low)
        # no high bin anywhere near the low peak
        margin_db = 10 * np.log10(e.e_low[0] / np.max(e.e_high))
        assert margin_db > CFG.dominance_margin_db

    def test_key8_peaks_at_852_and_1336(self):
        buf = synthesize("8", 100.0, 8000)
        e = band_energies(window_of(buf.samples), CFG)
        assert int(np.argmax(e.e_low)) == LOW_GROUP_HZ.index(852)
        assert int(np.argmax(e.e_high)) == HIGH_GROUP_HZ.index(1336)

    def test_matches_dft_oracle_on_random_windows(self, rng):
        freqs = list(LOW_GROUP_HZ) + list(HIGH_GROUP_HZ)
        for _ in range(300):
            x = rng.uniform(-0.9, 0.9, CFG.window_samples)
            e = band_energies(window_of(x), CFG)
            got = np.concatenate([e.e_low, e.e_high])
            want = np.array([dft_projection_energy(x, f, 8000) for f in freqs])
            assert np.all(np.abs(got - want) <= 0.01 * np.maximum(want, 1e-12))

    def test_wrong_window_length_rejected(self):
        with pytest.raises(ValueError, match="window length"):
            band_energies(SampleBuffer(8000, np.zeros(50)), CFG)

    def test_total_energy_is_mean_square(self, rng):
        x = rng.uniform(-0.5, 0.5, CFG.window_samples)
        e = band_energies(window_of(x), CFG)
        assert e.total_energy == pytest.approx(np.mean(x**2))


class TestClassify:
    def test_clean_key6(self):
        buf = synthesize("6", 100.0, 8000)
        e = band_energies(window_of(buf.samples), CFG)
        assert classify(e, CFG) == "6"

    @pytest.mark.parametrize("key", KEYS)
    def test_all_keys_clean(self, key):
        buf = synthesize(key, 100.0, 8000)
        e = band_energies(window_of(buf.samples), CFG)
        assert classify(e, CFG) == key

    def test_single_low_tone_absent(self):
        n = CFG.window_samples
        x = 0.4 * np.sin(2 * np.pi * 697 * np.arange(n) / 8000)
        assert classify(band_energies(window_of(x), CFG), CFG) is None

    def test_single_high_tone_absent(self):
        n = CFG.window_samples
        x = 0.4 * np.sin(2 * np.pi * 1336 * np.arange(n) / 8000)
        assert classify(band_energies(window_of(x), CFG), CFG) is None

    def test_two_low_tones_absent(self):
        n = CFG.window_samples
        t = np.arange(n) / 8000
        x = 0.3 * np.sin(2 * np.pi * 697 * t) + 0.3 * np.sin(2 * np.pi * 770 * t)
        assert classify(band_energies(window_of(x), CFG), CFG) is None

    def test_silence_absent(self):
        assert classify(band_energies(window_of(np.zeros(102)), CFG), CFG) is None

    def test_twist_boundary(self):
        over = synthesize("5", 100.0, 8000, 0.3, CFG.twist_limit_db + 2.0)
        under = synthesize("5", 100.0, 8000, 0.3, CFG.twist_limit_db - 2.0)
        assert classify(band_energies(window_of(over.samples), CFG), CFG) is None
        assert classify(band_energies(window_of(under.samples), CFG), CFG) == "5"

    def test_negative_twist_boundary(self):
        over = synthesize("5", 100.0, 8000, 0.3, -(CFG.twist_limit_db + 2.0))
        under = synthesize("5", 100.0, 8000, 0.3, -(CFG.twist_limit_db - 2.0))
        assert classify(band_energies(window_of(over.samples), CFG), CFG) is None
        assert classify(band_energies(window_of(under.samples), CFG), CFG) == "5"


class TestStreamDetect:
    def test_silence_tone_silence_shape(self):
        buf = padded(synthesize("2", 100.0, 8000).samples, 8000)
        frames = stream_detect(buf, CFG)
        kinds = [f.est_active for f in frames]
        assert not kinds[0]
        assert any(kinds)
        assert not kinds[-1]
        active = [f for f in frames if f.est_active]
        assert {f.candidate for f in active} == {"2"}
        # activity is one contiguous run
        first = kinds.index(True)
        last = len(kinds) - 1 - kinds[::-1].index(True)
        assert all(kinds[first : last + 1])

    def test_all_silence(self):
        frames = stream_detect(SampleBuffer(8000, np.zeros(4000)), CFG)
        assert all(not f.est_active for f in frames)

    def test_frames_time_ordered_one_per_hop(self):
        buf = SampleBuffer(8000, np.zeros(1020))
        frames = stream_detect(buf, CFG)
        assert len(frames) == (1020 - 102) // 51 + 1
        times = [f.t_ms for f in frames]
        assert times == sorted(times)
        assert times[0] == pytest.approx(102 / 8000 * 1000)

    def test_short_buffer_rejected(self):
        with pytest.raises(ValueError):
            stream_detect(SampleBuffer(8000, np.zeros(50)), CFG)

    def test_matches_per_window_classify(self):
        buf = padded(synthesize("9", 90.0, 8000).samples, 8000, 30.0, 30.0)
        frames = stream_detect(buf, CFG)
        for i, frame in enumerate(frames):
            start = i * CFG.hop_samples
            w = window_of(buf.samples, start)
            expect = classify(band_energies(w, CFG), CFG)
            assert (frame.candidate == expect) and (frame.est_active == (expect is not None))

    def test_noise_only_rarely_fires(self, rng):
        # tone-level white noise across a million windows, chunked
        cfg_dense = DetectorConfig(window_samples=102, hop_samples=102)
        hits = 0
        total = 0
        for _ in range(50):
            x = rng.normal(0.0, 0.28, 20000 * CFG.window_samples).clip(-1, 1)
            frames = stream_detect(SampleBuffer(8000, x), cfg_dense)
            hits += sum(1 for f in frames if f.est_active)
            total += len(frames)
        assert total == 1_000_000
        assert hits / total <= 0.001


class TestFrequencyTolerance:
    @pytest.mark.parametrize("key", ["2", "5", "#"])
    @pytest.mark.parametrize("scale", [0.981, 0.99, 1.01, 1.019])
    def test_within_tolerance_classifies(self, key, scale):
        spec = tone_spec(key)
        buf = dual_tone(spec.f_low * scale, spec.f_high * scale, 100.0, 8000)
        e = band_energies(window_of(buf.samples), CFG)
        assert classify(e, CFG) == key

    @pytest.mark.parametrize("key", ["2", "5", "#"])
    @pytest.mark.parametrize("scale", [0.941, 0.955, 1.045, 1.059])
    def test_beyond_double_tolerance_rejects(self, key, scale):
        spec = tone_spec(key)
        buf = dual_tone(spec.f_low * scale, spec.f_high * scale, 100.0, 8000)
        e = band_energies(window_of(buf.samples), CFG)
        assert classify(e, CFG) is None


class TestCompleteness:
    @pytest.mark.parametrize("rate", [8000, 16000, 44100])
    def test_every_key_every_rate(self, rate):
        cfg = DetectorConfig.for_rate(rate)
        for key in KEYS:
            buf = synthesize(key, 60.0, rate)
            frames = stream_detect(buf, cfg)
            # all fully covered windows must carry the candidate
            full = [
                f
                for i, f in enumerate(frames)
                if i * cfg.hop_samples + cfg.window_samples <= len(buf)
            ]
            assert full, "no fully covered window"
            assert all(f.candidate == key for f in full)


class TestSoundness:
    def test_single_sinusoid_never_classifies(self):
        # Coarse sweep here; the acceptance suite runs the 10 Hz grid.
        for f in range(300, 3401, 50):
            n = 480
            x = 0.5 * np.sin(2 * np.pi * f * np.arange(n) / 8000)
            win = window_of(x)
            assert classify(band_energies(win, CFG), CFG) is None, f"fired at {f} Hz"


class TestReplicationProfile:
    EXP_ROWS = {
        "2": (672.0, 1320.0),
        "4": (731.0, 1201.0),
        "6": (731.0, 1475.0),
        "8": (855.0, 1322.0),
        "5": (735.0, 1325.0),
    }

    @pytest.mark.parametrize("key", list(EXP_ROWS))
    def test_deviated_pairs_decode(self, key):
        f_low, f_high = self.EXP_ROWS[key]
        buf = padded(dual_tone(f_low, f_high, 100.0, 8000).samples, 8000)
        codes = latched_codes(buf, profile="paper-replication")
        from dtmf_drive.steering import CODE_OF

        assert codes == [CODE_OF[key]]
