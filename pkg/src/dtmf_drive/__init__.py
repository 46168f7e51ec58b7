"""Software model of a phone-keypad-steered vehicle.

The pipeline mirrors the signal path of a tone-dialed remote control rig:
dual-tone synthesis, an impaired audio channel, a band-split tone decoder
with guard-time validation, microcontroller decision logic driving an
H-bridge, and a differential-drive chassis integrated in the plane.
"""

from dtmf_drive.signal import (
    KEYS,
    KEY_TONES,
    KeyEvent,
    SampleBuffer,
    ToneSpec,
    dual_tone,
    read_wav,
    render_script,
    synthesize,
    tone_spec,
    write_wav,
)
from dtmf_drive.channel import ChannelConfig, Interferer, apply
from dtmf_drive.decoder import (
    BandEnergies,
    DetectorConfig,
    ToneFrame,
    band_energies,
    classify,
    stream_detect,
)
from dtmf_drive.steering import (
    SteeringConfig,
    SteeringEvent,
    SteeringState,
    code_of,
    key_of,
    run,
    step,
)
from dtmf_drive.drivetrain import (
    Direction,
    DriverEnables,
    WheelDrive,
    control_decision,
    decision_label,
    driver_outputs,
)
from dtmf_drive.vehicle import VehicleParams, VehiclePose, side_velocity, step_pose
from dtmf_drive.session import (
    CallState,
    Scenario,
    TraceRecord,
    run_scenario,
    trace_to_csv,
)

__version__ = "0.1.0"
