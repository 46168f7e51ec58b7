"""End-to-end orchestration: call lifecycle, tick loop, traces, scenarios.

One tick equals one decoder hop. Each tick the engine synthesizes the hop
of audio implied by the current key state, passes it through the channel
impairments, slides the analysis window, advances the guard-time latch,
updates the output port, and finally integrates the chassis pose across
the tick. Scenario playback and the live service drive the same engine,
so a live session's event log replayed as a scenario reproduces the trace
byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from dtmf_drive import decoder, steering
from dtmf_drive.channel import ChannelConfig, Interferer
from dtmf_drive.decoder import BandEnergies, DetectorConfig, ToneFrame
from dtmf_drive.drivetrain import (
    Direction,
    DriverEnables,
    WheelDrive,
    control_decision,
    driver_outputs,
)
from dtmf_drive.signal import (
    DEFAULT_AMPLITUDE,
    DEFAULT_RATE_HZ,
    KeyEvent,
    dual_tone_samples,
    split_amplitudes,
    tone_spec,
    validate_script,
)
from dtmf_drive.steering import SteeringConfig, SteeringState
from dtmf_drive.vehicle import VehicleParams, VehiclePose, integrate

TRACE_HEADER = "t_ms,call,key,est,latched_hex,port_hex,left,right,x,y,theta"

_DEFAULT_TAIL_MS = 400.0


class CallState(Enum):
    IDLE = "idle"
    RINGING = "ringing"
    ANSWERED = "answered"


@dataclass(frozen=True)
class Scenario:
    """Everything needed for a deterministic run."""

    script: tuple[KeyEvent, ...] = ()
    duration_ms: Optional[float] = None
    rate_hz: int = DEFAULT_RATE_HZ
    amplitude: float = DEFAULT_AMPLITUDE
    twist_db: float = 0.0
    channel: ChannelConfig = ChannelConfig()
    profile: str = "standard"
    detector: Optional[DetectorConfig] = None
    steering: SteeringConfig = SteeringConfig()
    vehicle: VehicleParams = VehicleParams()
    enables: DriverEnables = DriverEnables()
    strict_codes: bool = False
    seed: int = 0
    ring_ticks: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "script", tuple(self.script))
        validate_script(self.script)
        split_amplitudes(self.amplitude, self.twist_db)  # clipping check
        if self.ring_ticks < 0:
            raise ValueError("ring_ticks must be >= 0")
        if self.duration_ms is not None and self.duration_ms <= 0:
            raise ValueError("duration_ms must be positive")

    def detector_config(self) -> DetectorConfig:
        if self.detector is not None:
            return self.detector
        return DetectorConfig.for_rate(self.rate_hz, self.profile)

    @property
    def tick_ms(self) -> float:
        cfg = self.detector_config()
        return 1000.0 * cfg.hop_samples / self.rate_hz

    def resolved_duration_ms(self) -> float:
        if self.duration_ms is not None:
            return self.duration_ms
        end = max([ev.release_at_ms for ev in self.script], default=0.0)
        return end + _DEFAULT_TAIL_MS

    def n_ticks(self) -> int:
        return max(1, math.ceil(round(self.resolved_duration_ms() / self.tick_ms, 9)))

    def to_dict(self) -> dict:
        interferer = self.channel.interferer
        return {
            "script": [
                {"key": ev.key, "press_at_ms": ev.press_at_ms, "hold_ms": ev.hold_ms}
                for ev in self.script
            ],
            "duration_ms": self.duration_ms,
            "rate_hz": self.rate_hz,
            "amplitude": self.amplitude,
            "twist_db": self.twist_db,
            "channel": {
                "gain_db": self.channel.gain_db,
                "snr_db": self.channel.snr_db,
                "freq_scale": self.channel.freq_scale,
                "interferer": (
                    None
                    if interferer is None
                    else {"freq_hz": interferer.freq_hz, "level_db": interferer.level_db}
                ),
            },
            "profile": self.profile,
            "detector": (
                None
                if self.detector is None
                else {
                    "window_samples": self.detector.window_samples,
                    "hop_samples": self.detector.hop_samples,
                    "rate_hz": self.detector.rate_hz,
                    "rel_freq_tolerance": self.detector.rel_freq_tolerance,
                    "rel_freq_tolerance_up": self.detector.rel_freq_tolerance_up,
                    "twist_limit_db": self.detector.twist_limit_db,
                    "dominance_margin_db": self.detector.dominance_margin_db,
                    "signal_floor": self.detector.signal_floor,
                }
            ),
            "steering": {
                "t_gtp_ms": self.steering.t_gtp_ms,
                "t_gta_ms": self.steering.t_gta_ms,
            },
            "vehicle": {
                "wheel_speed_mps": self.vehicle.wheel_speed_mps,
                "track_width_m": self.vehicle.track_width_m,
                "dt_s": self.vehicle.dt_s,
            },
            "enables": {"en1": self.enables.en1, "en2": self.enables.en2},
            "strict_codes": self.strict_codes,
            "seed": self.seed,
            "ring_ticks": self.ring_ticks,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise ValueError("scenario document must be a JSON object")
        known = {
            "script",
            "duration_ms",
            "rate_hz",
            "amplitude",
            "twist_db",
            "channel",
            "profile",
            "detector",
            "steering",
            "vehicle",
            "enables",
            "strict_codes",
            "seed",
            "ring_ticks",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")

        script = tuple(
            KeyEvent(ev["key"], float(ev["press_at_ms"]), float(ev["hold_ms"]))
            for ev in data.get("script", [])
        )
        ch = data.get("channel", {}) or {}
        interferer = ch.get("interferer")
        channel = ChannelConfig(
            gain_db=float(ch.get("gain_db", 0.0)),
            snr_db=None if ch.get("snr_db") is None else float(ch["snr_db"]),
            freq_scale=float(ch.get("freq_scale", 1.0)),
            interferer=(
                None
                if interferer is None
                else Interferer(float(interferer["freq_hz"]), float(interferer["level_db"]))
            ),
        )
        det = data.get("detector")
        detector_cfg = (
            None
            if det is None
            else DetectorConfig(
                window_samples=int(det["window_samples"]),
                hop_samples=int(det["hop_samples"]),
                rate_hz=int(det.get("rate_hz", data.get("rate_hz", DEFAULT_RATE_HZ))),
                rel_freq_tolerance=float(det.get("rel_freq_tolerance", 0.02)),
                rel_freq_tolerance_up=(
                    None
                    if det.get("rel_freq_tolerance_up") is None
                    else float(det["rel_freq_tolerance_up"])
                ),
                twist_limit_db=float(det.get("twist_limit_db", 8.0)),
                dominance_margin_db=float(det.get("dominance_margin_db", 8.0)),
                signal_floor=float(det.get("signal_floor", 0.5)),
            )
        )
        st = data.get("steering", {}) or {}
        veh = data.get("vehicle", {}) or {}
        en = data.get("enables", {}) or {}
        duration = data.get("duration_ms")
        return cls(
            script=script,
            duration_ms=None if duration is None else float(duration),
            rate_hz=int(data.get("rate_hz", DEFAULT_RATE_HZ)),
            amplitude=float(data.get("amplitude", DEFAULT_AMPLITUDE)),
            twist_db=float(data.get("twist_db", 0.0)),
            channel=channel,
            profile=str(data.get("profile", "standard")),
            detector=detector_cfg,
            steering=SteeringConfig(
                t_gtp_ms=float(st.get("t_gtp_ms", 27.0)),
                t_gta_ms=float(st.get("t_gta_ms", 27.0)),
            ),
            vehicle=VehicleParams(
                wheel_speed_mps=float(veh.get("wheel_speed_mps", 0.2)),
                track_width_m=float(veh.get("track_width_m", 0.2)),
                dt_s=float(veh.get("dt_s", 0.001)),
            ),
            enables=DriverEnables(
                en1=bool(en.get("en1", True)), en2=bool(en.get("en2", True))
            ),
            strict_codes=bool(data.get("strict_codes", False)),
            seed=int(data.get("seed", 0)),
            ring_ticks=int(data.get("ring_ticks", 1)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"scenario is not valid JSON: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class TraceRecord:
    """State snapshot for one tick.

    ``t_ms`` is the tick start. The pose is the pose at tick start; the
    decode fields (est, latched, port, wheels) reflect the analysis window
    that ends with this tick, so a freshly latched code changes the port on
    its own tick while its motion appears from the next tick on.
    """

    t_ms: float
    call: CallState
    key: Optional[str]
    est: bool
    latched: Optional[int]
    port: int
    drive: WheelDrive
    x: float
    y: float
    theta: float


def trace_to_csv(records: Sequence[TraceRecord]) -> str:
    lines = [TRACE_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    repr(float(r.t_ms)),
                    r.call.value,
                    r.key or "",
                    "1" if r.est else "0",
                    "" if r.latched is None else f"0x{r.latched:02x}",
                    f"0x{r.port:02x}",
                    r.drive.left.value,
                    r.drive.right.value,
                    repr(float(r.x)),
                    repr(float(r.y)),
                    repr(float(r.theta)),
                ]
            )
        )
    return "\n".join(lines) + "\n"


class TickEngine:
    """Deterministic per-hop simulation core shared by batch and live modes.

    Key state is sampled once per tick: ``tick(key)`` renders that tick's
    audio with phase-continuous synthesis, so a key held across ticks forms
    one unbroken tone. Key transitions are logged with their tick index.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.det = scenario.detector_config()
        if self.det.rate_hz != scenario.rate_hz:
            raise ValueError("detector rate_hz must match scenario rate_hz")
        self.rate = scenario.rate_hz
        self.hop = self.det.hop_samples
        self.window = self.det.window_samples
        self.tick_s = self.hop / self.rate
        self.tick_ms = 1000.0 * self.hop / self.rate
        if self.tick_ms > scenario.steering.max_dt_ms() + 1e-9:
            raise ValueError(
                "hop duration exceeds the guard-time resolution bound; "
                "use finer hops or longer guard times"
            )
        self._a_low, self._a_high = split_amplitudes(
            scenario.amplitude, scenario.twist_db
        )
        self._gain = 10.0 ** (scenario.channel.gain_db / 20.0)
        self._freq_scale = scenario.channel.freq_scale
        self._rng = np.random.default_rng(scenario.seed)
        self._noise_std = self._nominal_noise_std()

        self._window_buf = np.zeros(self.window)
        self.tick_index = 0
        self.call = CallState.RINGING
        self.active_key: Optional[str] = None
        self._press_sample = 0
        self.steer = SteeringState.initial()
        self.port = 0x00
        self.pose = VehiclePose()
        self.last_energies: Optional[BandEnergies] = None
        self.events: list[dict] = []
        self._prev_candidate: Optional[str] = None

    def _nominal_noise_std(self) -> float:
        snr = self.scenario.channel.snr_db
        if snr is None:
            return 0.0
        # Streaming form: noise sized against the nominal tone power rather
        # than a measurement over the (not yet known) active spans.
        p_sig = 0.5 * (self._a_low**2 + self._a_high**2) * self._gain**2
        return float(np.sqrt(p_sig * 10.0 ** (-snr / 10.0)))

    def _render_tick_audio(self, key: Optional[str]) -> np.ndarray:
        k = self.tick_index
        idx = np.arange(k * self.hop, (k + 1) * self.hop)
        if key is None:
            chunk = np.zeros(self.hop)
        else:
            spec = tone_spec(key)
            chunk = dual_tone_samples(
                spec.f_low * self._freq_scale,
                spec.f_high * self._freq_scale,
                idx - self._press_sample,
                self.rate,
                self._a_low,
                self._a_high,
            )
        if self._gain != 1.0:
            chunk = chunk * self._gain
        interferer = self.scenario.channel.interferer
        if interferer is not None:
            chunk = chunk + interferer.amplitude * np.sin(
                2.0 * np.pi * interferer.freq_hz * idx / self.rate
            )
        if self._noise_std > 0.0:
            chunk = chunk + self._rng.normal(0.0, self._noise_std, self.hop)
        return np.clip(chunk, -1.0, 1.0)

    def _apply_key(self, key: Optional[str]) -> None:
        if key == self.active_key:
            return
        if self.active_key is not None:
            self.events.append({"tick": self.tick_index, "type": "key_up"})
        if key is not None:
            tone_spec(key)
            self.events.append(
                {"tick": self.tick_index, "type": "key_down", "key": key}
            )
            self._press_sample = self.tick_index * self.hop
        self.active_key = key

    def _analyze(self) -> ToneFrame:
        k = self.tick_index
        t_end_ms = 1000.0 * (k + 1) * self.hop / self.rate
        warm = (k + 1) * self.hop >= self.window
        if not warm or self.call is not CallState.ANSWERED:
            self.last_energies = None
            self._prev_candidate = None
            return ToneFrame(t_ms=t_end_ms, est_active=False, strength=0.0)
        be = decoder.analyze_window(self._window_buf, self.rate)
        self.last_energies = be
        pair = decoder._selected_pair(be, self.det)
        if pair is None:
            self._prev_candidate = None
            return ToneFrame(t_ms=t_end_ms, est_active=False, strength=0.0)
        candidate = decoder.KEY_FOR_PAIR[pair]
        strength = decoder.frame_strength(
            be, pair, self._prev_candidate != candidate, self.det
        )
        self._prev_candidate = candidate
        return ToneFrame(
            t_ms=t_end_ms,
            est_active=True,
            candidate=candidate,
            strength=strength,
        )

    def tick(self, key: Optional[str]) -> TraceRecord:
        if self.call is not CallState.IDLE and self.tick_index >= self.scenario.ring_ticks:
            self.call = CallState.ANSWERED
        self._apply_key(key)

        chunk = self._render_tick_audio(self.active_key)
        self._window_buf = np.concatenate([self._window_buf[self.hop :], chunk])

        frame = self._analyze()
        self.steer, event = steering.step(
            self.steer, frame, self.tick_ms, self.scenario.steering
        )
        if event is not None and event.kind == steering.LATCHED:
            self.port = control_decision(
                event.code, self.port, strict=self.scenario.strict_codes
            )
        drive = driver_outputs(self.port, self.scenario.enables)

        record = TraceRecord(
            t_ms=self.tick_index * self.tick_ms,
            call=self.call,
            key=self.active_key,
            est=frame.est_active,
            latched=self.steer.latched,
            port=self.port,
            drive=drive,
            x=self.pose.x,
            y=self.pose.y,
            theta=self.pose.theta,
        )
        self.pose = integrate(self.pose, drive, self.scenario.vehicle, self.tick_s)
        self.tick_index += 1
        return record


def script_key_timeline(scenario: Scenario, n_ticks: int) -> list[Optional[str]]:
    """Per-tick key state implied by the scenario's script.

    Event times are quantized to tick boundaries by rounding, matching how
    live key events land on the tick at which they are received.
    """
    tick_ms = scenario.tick_ms
    timeline: list[Optional[str]] = [None] * n_ticks
    for ev in scenario.script:
        start = round(ev.press_at_ms / tick_ms)
        end = round(ev.release_at_ms / tick_ms)
        for k in range(max(0, start), min(n_ticks, end)):
            timeline[k] = ev.key
    return timeline


def run_scenario(scenario: Scenario) -> tuple[list[TraceRecord], VehiclePose]:
    """Run a scenario to completion; deterministic for a fixed seed."""
    engine = TickEngine(scenario)
    n = scenario.n_ticks()
    timeline = script_key_timeline(scenario, n)
    records = [engine.tick(timeline[k]) for k in range(n)]
    return records, engine.pose


def script_from_events(events: Sequence[dict], tick_ms: float, end_tick: int) -> tuple[KeyEvent, ...]:
    """Convert a live session's key event log back into a script."""
    out: list[KeyEvent] = []
    down_tick: Optional[int] = None
    down_key: Optional[str] = None
    for ev in events:
        if ev["type"] == "key_down":
            if down_key is not None:
                out.append(
                    KeyEvent(down_key, down_tick * tick_ms, (ev["tick"] - down_tick) * tick_ms)
                )
            down_tick = int(ev["tick"])
            down_key = ev["key"]
        elif ev["type"] == "key_up":
            if down_key is not None and ev["tick"] > down_tick:
                out.append(
                    KeyEvent(down_key, down_tick * tick_ms, (ev["tick"] - down_tick) * tick_ms)
                )
            down_key = None
            down_tick = None
    if down_key is not None and end_tick > down_tick:
        out.append(KeyEvent(down_key, down_tick * tick_ms, (end_tick - down_tick) * tick_ms))
    return tuple(out)


def replay_scenario(scenario: Scenario, events: Sequence[dict], n_ticks: int) -> Scenario:
    """Scenario that replays a live session's logged key events."""
    return replace(
        scenario,
        script=script_from_events(events, scenario.tick_ms, n_ticks),
        duration_ms=n_ticks * scenario.tick_ms,
    )
