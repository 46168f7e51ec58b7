import numpy as np
import pytest

from conftest import latched_codes, padded

from dtmf_drive.decoder import DetectorConfig, ToneFrame, stream_detect
from dtmf_drive.signal import KEYS, KeyEvent, render_script, synthesize
from dtmf_drive.steering import (
    CODE_OF,
    LATCHED,
    RELEASED,
    SteeringConfig,
    SteeringState,
    code_bits,
    code_hex,
    code_of,
    key_of,
    run,
    step,
)

SCFG = SteeringConfig()


def frames_for(pattern, dt_ms=5.0, strength=1.0):
    """Hand-built frame sequence: pattern is a string of key chars or '.'"""
    out = []
    for i, ch in enumerate(pattern):
        t = (i + 1) * dt_ms
        if ch == ".":
            out.append(ToneFrame(t_ms=t, est_active=False, strength=0.0))
        else:
            out.append(ToneFrame(t_ms=t, est_active=True, candidate=ch, strength=strength))
    return out


class TestCodeMap:
    def test_16_entry_map_bijective(self):
        assert len(CODE_OF) == 16
        assert sorted(CODE_OF.values()) == list(range(16))

    @pytest.mark.parametrize(
        "key,code",
        [("2", 0b0010), ("8", 0b1000), ("4", 0b0100), ("6", 0b0110), ("5", 0b0101),
         ("0", 0b1010), ("D", 0b0000), ("1", 0b0001), ("9", 0b1001), ("*", 0b1011),
         ("#", 0b1100), ("A", 0b1101), ("C", 0b1111)],
    )
    def test_rows(self, key, code):
        assert code_of(key) == code
        assert key_of(code) == key

    def test_formatting(self):
        assert code_bits(0b0010) == "0010"
        assert code_hex(0b1010) == "0x0a"

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            code_of("x")
        with pytest.raises(ValueError):
            key_of(16)


class TestStep:
    def test_resolution_precondition(self):
        state = SteeringState.initial()
        frame = frames_for("2")[0]
        with pytest.raises(ValueError):
            step(state, frame, 10.0, SCFG)  # > 27/4
        with pytest.raises(ValueError):
            step(state, frame, 0.0, SCFG)

    def test_charge_and_latch_once(self):
        # 50 ms burst at dt 5: charge crosses 27 ms on the 6th frame
        events = run(frames_for("2" * 10 + "." * 12), SCFG)
        latches = [e for e in events if e.kind == LATCHED]
        assert len(latches) == 1
        assert latches[0].code == 0b0010
        assert latches[0].t_ms == pytest.approx(30.0)

    def test_short_burst_no_event(self):
        events = run(frames_for("22" + "." * 10), SCFG)  # 10 ms
        assert events == []

    def test_two_bursts_with_gap(self):
        # 60 ms '4', 60 ms gap, 60 ms '6' at dt 5
        pattern = "4" * 12 + "." * 12 + "6" * 12 + "." * 12
        events = run(frames_for(pattern), SCFG)
        assert [e.kind for e in events] == [LATCHED, RELEASED, LATCHED, RELEASED]
        assert events[0].code == 0b0100
        assert events[2].code == 0b0110

    def test_flicker_never_latches(self):
        events = run(frames_for("2." * 40), SCFG)
        assert events == []

    def test_latched_value_persists_after_release(self):
        state = SteeringState.initial()
        for frame in frames_for("8" * 10 + "." * 12):
            state, _ = step(state, frame, 5.0, SCFG)
        assert not state.std_active
        assert state.latched == 0b1000

    def test_repeat_key_latches_again(self):
        pattern = "7" * 10 + "." * 12 + "7" * 10 + "." * 12
        events = run(frames_for(pattern), SCFG)
        latches = [e for e in events if e.kind == LATCHED]
        assert [e.code for e in latches] == [0b0111, 0b0111]

    def test_candidate_change_resets_charge(self):
        # 25 ms of '2' then 25 ms of '3': neither span alone reaches 27 ms
        events = run(frames_for("2" * 5 + "3" * 5 + "." * 10), SCFG)
        assert events == []

    def test_back_to_back_keys_release_then_latch(self):
        pattern = "2" * 10 + "3" * 10 + "." * 12
        events = run(frames_for(pattern), SCFG)
        kinds = [e.kind for e in events]
        assert kinds == [LATCHED, RELEASED, LATCHED, RELEASED]
        assert events[0].code == 0b0010
        assert events[2].code == 0b0011

    def test_events_alternate_starting_with_latched(self, rng):
        for _ in range(30):
            pattern = "".join(
                rng.choice(list("25..")) for _ in range(rng.integers(20, 120))
            )
            events = run(frames_for(pattern + "." * 12), SCFG)
            for i, ev in enumerate(events):
                assert ev.kind == (LATCHED if i % 2 == 0 else RELEASED)

    def test_vc_monotone_during_stable_candidate(self):
        state = SteeringState.initial()
        last = 0.0
        for frame in frames_for("5" * 20):
            state, _ = step(state, frame, 5.0, SCFG)
            assert state.v_c >= last - 1e-12
            last = state.v_c
        for frame in frames_for("." * 20):
            state, _ = step(state, frame, 5.0, SCFG)
            assert state.v_c <= last + 1e-12
            last = state.v_c

    def test_vc_bounds(self, rng):
        state = SteeringState.initial()
        for frame in frames_for("".join(rng.choice(list("19."), size=300))):
            state, _ = step(state, frame, 5.0, SCFG)
            assert 0.0 <= state.v_c <= 1.0
            assert (not state.std_active) or (state.latched is not None)


class TestRun:
    def test_empty(self):
        assert run([], SCFG) == []

    def test_latch_time_near_onset_plus_guard(self):
        buf = padded(synthesize("5", 100.0, 8000).samples, 8000, lead_ms=100.0)
        cfg = DetectorConfig.for_rate(8000)
        events = run(stream_detect(buf, cfg), SCFG)
        latches = [e for e in events if e.kind == LATCHED]
        assert len(latches) == 1
        assert latches[0].code == 0b0101
        onset = 100.0
        hop = cfg.hop_ms
        assert onset + SCFG.t_gtp_ms <= latches[0].t_ms <= onset + SCFG.t_gtp_ms + 2.5 * hop

    def test_unordered_frames_rejected(self):
        frames = frames_for("222")
        frames = [frames[1], frames[0], frames[2]]
        with pytest.raises(ValueError):
            run(frames, SCFG)

    def test_single_frame_needs_dt(self):
        with pytest.raises(ValueError):
            run(frames_for("2"), SCFG)
        assert run(frames_for("2"), SCFG, dt_ms=5.0) == []


class TestGuardTimeProperty:
    """Burst-length bounds via the full pipeline (module-scale version)."""

    def _latch_count(self, key, burst_ms, offset_ms):
        burst = synthesize(key, burst_ms, 8000)
        lead = np.zeros(round(8000 * offset_ms / 1000.0))
        samples = np.concatenate([lead, burst.samples, np.zeros(800)])
        from dtmf_drive.signal import SampleBuffer

        buf = SampleBuffer(8000, samples)
        return len([c for c in latched_codes(buf)])

    def test_bursts_below_guard_never_latch(self, rng):
        for _ in range(60):
            key = KEYS[rng.integers(0, 16)]
            burst = float(rng.uniform(1.0, 26.99))
            offset = float(rng.uniform(30.0, 60.0))
            assert self._latch_count(key, burst, offset) == 0

    def test_bursts_above_guard_plus_hop_latch_once(self, rng):
        for _ in range(60):
            key = KEYS[rng.integers(0, 16)]
            burst = float(rng.uniform(33.375, 100.0))
            offset = float(rng.uniform(30.0, 60.0))
            assert self._latch_count(key, burst, offset) == 1


class TestPipelineGolden:
    def test_two_script_keys_produce_two_codes(self):
        script = [KeyEvent("4", 0.0, 100.0), KeyEvent("6", 140.0, 100.0)]
        buf = render_script(script, 8000, tail_ms=120.0)
        assert latched_codes(buf) == [0b0100, 0b0110]
