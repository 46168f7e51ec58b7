"""Command-line surface: encode, decode, calc, simulate, report, serve.

Exit codes: 0 success, 1 usage error, 2 data error (bad files, failed
golden checks, decode problems).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from dtmf_drive.decoder import PROFILES, DetectorConfig
from dtmf_drive.session import Scenario, run_scenario, trace_to_csv
from dtmf_drive.signal import (
    KEYS,
    KeyEvent,
    WavFormatError,
    read_wav,
    render_script,
    write_wav,
)
from dtmf_drive.steering import LATCHED, SteeringConfig, code_hex, key_of, run as steering_run

PROFILE_ENV = "DTMF_DRIVE_PROFILE"


class DataError(click.ClickException):
    exit_code = 2


def _default_profile() -> str:
    profile = os.environ.get(PROFILE_ENV, "standard")
    if profile not in PROFILES:
        raise DataError(
            f"{PROFILE_ENV}={profile!r} is not a known profile {PROFILES}"
        )
    return profile


@click.group()
def cli() -> None:
    """Keypad-tone vehicle toolkit: signaling, decoding, design math,
    simulation, and the live teleoperation service."""


@cli.command()
@click.option("--keys", "keys_", required=True, help="Key symbols to send, e.g. 2486.")
@click.option("--hold-ms", default=100.0, show_default=True, help="Tone duration per key.")
@click.option("--gap-ms", default=80.0, show_default=True, help="Silence between keys.")
@click.option("--rate-hz", default=8000, show_default=True, type=int)
@click.option("--amplitude", default=0.4, show_default=True)
@click.option("--twist-db", default=0.0, show_default=True)
@click.option("--tail-ms", default=100.0, show_default=True, help="Trailing silence.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Machine-readable summary.")
def encode(keys_, hold_ms, gap_ms, rate_hz, amplitude, twist_db, tail_ms, out_path, as_json):
    """Render a key sequence to a WAV file."""
    bad = [k for k in keys_ if k not in KEYS]
    if bad:
        raise click.UsageError(f"unknown key symbols: {bad}")
    try:
        script = [
            KeyEvent(k, i * (hold_ms + gap_ms), hold_ms) for i, k in enumerate(keys_)
        ]
        buf = render_script(script, rate_hz, amplitude, twist_db, tail_ms)
        write_wav(out_path, buf)
    except (ValueError, OSError) as exc:
        raise DataError(str(exc)) from exc
    summary = {
        "out": str(out_path),
        "keys": keys_,
        "rate_hz": rate_hz,
        "duration_ms": buf.duration_ms,
    }
    if as_json:
        click.echo(json.dumps(summary))
    else:
        click.echo(f"wrote {out_path}: {len(buf)} samples at {rate_hz} Hz")


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--profile", type=click.Choice(PROFILES), default=None,
              help=f"Detector profile (default from ${PROFILE_ENV} or standard).")
@click.option("--t-gtp-ms", default=27.0, show_default=True)
@click.option("--t-gta-ms", default=27.0, show_default=True)
@click.option("--events", "events_path", type=click.Path(dir_okay=False),
              help="Write latch/release events as CSV.")
@click.option("--json", "as_json", is_flag=True)
def decode(in_path, profile, t_gtp_ms, t_gta_ms, events_path, as_json):
    """Decode a WAV file into latched key codes."""
    from dtmf_drive.decoder import stream_detect

    profile = profile or _default_profile()
    try:
        buf = read_wav(in_path)
        cfg = DetectorConfig.for_rate(buf.rate_hz, profile)
        frames = stream_detect(buf, cfg)
        events = steering_run(frames, SteeringConfig(t_gtp_ms, t_gta_ms))
    except (WavFormatError, ValueError) as exc:
        raise DataError(str(exc)) from exc

    rows = []
    for ev in events:
        if ev.kind == LATCHED:
            rows.append((ev.t_ms, "latched", code_hex(ev.code), key_of(ev.code)))
        else:
            rows.append((ev.t_ms, "released", "", ""))
    if events_path:
        lines = ["t_ms,kind,code_hex,key"]
        lines += [f"{t!r},{kind},{code},{key}" for t, kind, code, key in rows]
        Path(events_path).write_text("\n".join(lines) + "\n")
    keys_seen = "".join(key for _, kind, _, key in rows if kind == "latched")
    if as_json:
        click.echo(
            json.dumps(
                {
                    "profile": profile,
                    "keys": keys_seen,
                    "events": [
                        {"t_ms": t, "kind": kind, "code": code or None, "key": key or None}
                        for t, kind, code, key in rows
                    ],
                }
            )
        )
    else:
        for t, kind, code, key in rows:
            suffix = f" {code} key {key}" if kind == "latched" else ""
            click.echo(f"t={t:9.3f} ms  {kind}{suffix}")
        click.echo(f"keys: {keys_seen}")


@cli.group()
def calc() -> None:
    """Design formula evaluations (inputs in kOhm/nF/ms for convenience)."""


def _emit(values: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(values))
    else:
        for name, value in values.items():
            click.echo(f"{name}: {value:.6g}" if isinstance(value, float) else f"{name}: {value}")


@calc.command("guard-time")
@click.option("--r-kohm", default=390.0, show_default=True)
@click.option("--c-nf", default=100.0, show_default=True)
@click.option("--vdd", default=5.0, show_default=True)
@click.option("--v-tst", default=2.5, show_default=True)
@click.option("--discharge", is_flag=True, help="Use the discharge form.")
@click.option("--json", "as_json", is_flag=True)
def calc_guard_time(r_kohm, c_nf, vdd, v_tst, discharge, as_json):
    """Guard time of the steering RC network."""
    from dtmf_drive import design_calc

    try:
        fn = design_calc.guard_time_discharge if discharge else design_calc.guard_time
        seconds = fn(r_kohm * 1e3, c_nf * 1e-9, vdd, v_tst)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _emit({"guard_time_ms": seconds * 1e3, "form": "discharge" if discharge else "charge"}, as_json)


@calc.command("impedance")
@click.option("--r-kohm", default=100.0, show_default=True)
@click.option("--c-nf", default=10.0, show_default=True)
@click.option("--f-hz", default=685.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def calc_impedance(r_kohm, c_nf, f_hz, as_json):
    """Differential input impedance."""
    from dtmf_drive import design_calc

    try:
        ohms = design_calc.input_impedance(r_kohm * 1e3, c_nf * 1e-9, f_hz)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _emit({"impedance_kohm": ohms / 1e3}, as_json)


@calc.command("gain")
@click.option("--r-f-kohm", default=220.0, show_default=True)
@click.option("--r-kohm", default=220.0, show_default=True)
@click.option("--tau-ms", default=1.52, show_default=True)
@click.option("--f-hz", default=685.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def calc_gain(r_f_kohm, r_kohm, tau_ms, f_hz, as_json):
    """Front-end amplifier gain in dB."""
    from dtmf_drive import design_calc

    try:
        db = design_calc.amplifier_gain_db(r_f_kohm * 1e3, r_kohm * 1e3, tau_ms * 1e-3, f_hz)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _emit({"gain_db": db}, as_json)


@calc.command("tau")
@click.option("--atten-db", default=-0.1, show_default=True)
@click.option("--f-hz", default=685.0, show_default=True)
@click.option("--r-kohm", type=float, default=None,
              help="Also derive the capacitor C = tau/R.")
@click.option("--json", "as_json", is_flag=True)
def calc_tau(atten_db, f_hz, r_kohm, as_json):
    """Input time constant for a target pass-band attenuation."""
    from dtmf_drive import design_calc

    try:
        tau = design_calc.solve_time_constant(atten_db, f_hz)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    values = {"tau_ms": tau * 1e3}
    if r_kohm is not None:
        values["c_nf"] = tau / (r_kohm * 1e3) * 1e9
    _emit(values, as_json)


@calc.command("parallel")
@click.option("--r1-kohm", default=39.0, show_default=True)
@click.option("--r2-kohm", default=100.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def calc_parallel(r1_kohm, r2_kohm, as_json):
    """Parallel resistor combination."""
    from dtmf_drive import design_calc

    try:
        ohms = design_calc.parallel_resistance(r1_kohm * 1e3, r2_kohm * 1e3)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _emit({"parallel_kohm": ohms / 1e3}, as_json)


@cli.command()
@click.option("--scenario", "scenario_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False),
              help="Write the tick trace as CSV.")
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False),
              help="Write a trajectory figure (PNG).")
@click.option("--json", "as_json", is_flag=True)
def simulate(scenario_path, trace_path, plot_path, as_json):
    """Run a scenario file through the full pipeline."""
    try:
        scenario = Scenario.from_json(Path(scenario_path).read_text())
        records, pose = run_scenario(scenario)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise DataError(f"scenario error: {exc}") from exc
    if trace_path:
        Path(trace_path).write_text(trace_to_csv(records))
    if plot_path:
        from dtmf_drive.report import render_trace_plot

        render_trace_plot(records, Path(plot_path))
    latched = [r.latched for r in records if r.latched is not None]
    codes = []
    for code in latched:
        if not codes or codes[-1] != code:
            codes.append(code)
    summary = {
        "ticks": len(records),
        "final_pose": {"x": pose.x, "y": pose.y, "theta": pose.theta},
        "latched_codes": [code_hex(c) for c in codes],
    }
    if as_json:
        click.echo(json.dumps(summary))
    else:
        click.echo(
            f"{summary['ticks']} ticks; final pose "
            f"x={pose.x:.4f} y={pose.y:.4f} theta={pose.theta:.4f}; "
            f"codes {' '.join(summary['latched_codes']) or '(none)'}"
        )


@cli.command()
@click.option("--tables", is_flag=True, default=True, show_default=True,
              help="Check the decode table and worked design values.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write CSV tables and PNG figures here.")
@click.option("--json", "as_json", is_flag=True)
def report(tables, out_dir, as_json):
    """Reproduce the reference tables; exit 0 only if all rows match."""
    from dtmf_drive import report as report_mod

    groups = {
        "decode_table": report_mod.decode_table_rows(),
        "worked_values": report_mod.worked_value_rows(),
        "deviated_readings": report_mod.deviated_reading_rows(),
    }
    all_ok = all(row.ok for rows in groups.values() for row in rows)

    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "decode_table.csv").write_text(report_mod.rows_to_csv(groups["decode_table"]))
        (out / "design_values.csv").write_text(report_mod.rows_to_csv(groups["worked_values"]))
        (out / "deviated_readings.csv").write_text(
            report_mod.rows_to_csv(groups["deviated_readings"])
        )
        report_mod.render_figures(out)

    if as_json:
        click.echo(
            json.dumps(
                {
                    "ok": all_ok,
                    "groups": {
                        name: [
                            {
                                "name": r.name,
                                "computed": r.computed,
                                "expected": r.expected,
                                "ok": r.ok,
                                "note": r.note,
                            }
                            for r in rows
                        ]
                        for name, rows in groups.items()
                    },
                }
            )
        )
    else:
        for name, rows in groups.items():
            click.echo(f"[{name}]")
            for r in rows:
                mark = "PASS" if r.ok else "FAIL"
                note = f"  ({r.note})" if r.note else ""
                click.echo(f"  {mark}  {r.name}: {r.computed} vs {r.expected}{note}")
    if not all_ok:
        raise DataError("one or more golden rows did not match")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False),
              help="Scenario JSON supplying channel/detector/vehicle defaults.")
@click.option("--static-dir", type=click.Path(file_okay=False, exists=True),
              help="Directory of built UI assets to serve at /.")
@click.option("--broadcast-every", default=4, show_default=True, type=int,
              help="Ticks between state frames.")
@click.option("--speed", default=1.0, show_default=True,
              help="Wall-clock pacing multiplier (simulation unchanged).")
@click.option("--record-dir", type=click.Path(file_okay=False),
              help="Write per-session trace/event/scenario files here.")
def serve(host, port, scenario_path, static_dir, broadcast_every, speed, record_dir):
    """Run the live teleoperation service."""
    import logging

    from dtmf_drive.server import serve as run_server

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    defaults = None
    if scenario_path:
        try:
            defaults = Scenario.from_json(Path(scenario_path).read_text())
        except (ValueError, OSError) as exc:
            raise DataError(f"scenario error: {exc}") from exc
    run_server(
        host=host,
        port=port,
        scenario_defaults=defaults,
        static_dir=Path(static_dir) if static_dir else None,
        broadcast_every=broadcast_every,
        speed=speed,
        record_dir=Path(record_dir) if record_dir else None,
    )


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except DataError as exc:
        click.echo(f"error: {exc.message}", err=True)
        return 2
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
