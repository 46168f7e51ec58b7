"""Closed-form design equations for the decoder's analog support circuitry.

Everything is in SI base units (ohm, farad, second, hertz, volt); display
conversion to kilo-ohm/nanofarad/millisecond belongs to the CLI layer.
"""

from __future__ import annotations

import math


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if value <= 0:
            raise ValueError(f"{name} must be positive (got {value})")


def guard_time(r_ohm: float, c_farad: float, vdd_volt: float, v_tst_volt: float) -> float:
    """Charge-form guard time: R*C*ln(Vdd/Vtst), in seconds."""
    _require_positive(r_ohm=r_ohm, c_farad=c_farad, vdd_volt=vdd_volt, v_tst_volt=v_tst_volt)
    if v_tst_volt >= vdd_volt:
        raise ValueError("v_tst_volt must be below vdd_volt")
    return r_ohm * c_farad * math.log(vdd_volt / v_tst_volt)


def guard_time_discharge(
    r_ohm: float, c_farad: float, vdd_volt: float, v_tst_volt: float
) -> float:
    """Discharge-form guard time: R*C*ln(Vdd/(Vdd-Vtst)), in seconds."""
    _require_positive(r_ohm=r_ohm, c_farad=c_farad, vdd_volt=vdd_volt, v_tst_volt=v_tst_volt)
    if v_tst_volt >= vdd_volt:
        raise ValueError("v_tst_volt must be below vdd_volt")
    return r_ohm * c_farad * math.log(vdd_volt / (vdd_volt - v_tst_volt))


def parallel_resistance(r1_ohm: float, r2_ohm: float) -> float:
    """R1*R2/(R1+R2), in ohms."""
    _require_positive(r1_ohm=r1_ohm, r2_ohm=r2_ohm)
    return r1_ohm * r2_ohm / (r1_ohm + r2_ohm)


def input_impedance(r_ohm: float, c_farad: float, f_hz: float) -> float:
    """Differential input impedance sqrt(R^2 + (1/(2*pi*f*C))^2), in ohms."""
    _require_positive(r_ohm=r_ohm, c_farad=c_farad, f_hz=f_hz)
    x_c = 1.0 / (2.0 * math.pi * f_hz * c_farad)
    return math.hypot(r_ohm, x_c)


def amplifier_gain_db(r_f_ohm: float, r_ohm: float, tau_s: float, f_hz: float) -> float:
    """Front-end gain in dB: resistor ratio term plus the high-pass rolloff.

    20*log10(Rf/R) + 20*log10(w*tau / sqrt((w*tau)^2 + 1)) with w = 2*pi*f.
    """
    _require_positive(r_f_ohm=r_f_ohm, r_ohm=r_ohm, tau_s=tau_s, f_hz=f_hz)
    wt = 2.0 * math.pi * f_hz * tau_s
    return 20.0 * math.log10(r_f_ohm / r_ohm) + 20.0 * math.log10(
        wt / math.sqrt(wt * wt + 1.0)
    )


def solve_time_constant(target_atten_db: float, f_hz: float) -> float:
    """Input time constant giving the target high-pass attenuation at f.

    Inverts the rolloff term of :func:`amplifier_gain_db` in closed form;
    the target must be negative (0 dB is reached only asymptotically).
    Returns seconds.
    """
    _require_positive(f_hz=f_hz)
    if target_atten_db >= 0:
        raise ValueError("target_atten_db must be negative")
    ratio = 10.0 ** (target_atten_db / 20.0)
    wt = ratio / math.sqrt(1.0 - ratio * ratio)
    return wt / (2.0 * math.pi * f_hz)


def voltage_gain(r5_ohm: float, r1_ohm: float) -> float:
    """Non-inverting stage voltage gain R5/R1, unitless."""
    _require_positive(r5_ohm=r5_ohm, r1_ohm=r1_ohm)
    return r5_ohm / r1_ohm
