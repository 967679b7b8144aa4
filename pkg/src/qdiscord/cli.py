"""Command-line scenario runner.

Usage::

    qdiscord run CONFIG [--out-dir DIR] [--threads N] [--seed S]
    qdiscord validate CONFIG
    qdiscord list

``CONFIG`` is a TOML file or the name of a bundled configuration
(``fig1``, ``fig2``, ...). Exit codes: 0 success, 2 configuration error,
3 numerical non-convergence, 4 unwritable output path.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .channels import (DephasingChannel, MarkovDephasing, NoiseSide, RTNDephasing,
                       SpectralDephasing)
from .correlations import BellDiagonalState
from .dephasing import DephasingProfile, OhmicSpectrum, PulseSequence, Temperature
from .errors import (InvalidChannelError, InvalidStateError, QuadratureError,
                     ShortcutInvalidError, UnsupportedParameterError)
from .phenomena import (RegionScan, TransitionReport, detect_transitions,
                        scan_time_invariant_region, simulate_trajectory)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_WRITE = 4

CONFIG_DIR = Path(__file__).parent / "configs"
TRAJECTORY_HEADER = ("t", "p_or_nu", "c1", "c2", "c3", "I", "C", "Q", "E")

_ALLOWED = {
    "": {"title", "state", "channel", "pulses", "time", "outputs"},
    "state": {"c"},
    "channel": {"kind", "side", "gamma", "a", "tau", "s", "omega_c", "temperature", "theta_T"},
    "pulses": {"interval", "horizon", "instants"},
    "time": {"t_max", "p_max", "nu_max", "samples"},
    "outputs": {"kind", "file", "s_grid", "c_grid", "criterion", "horizon", "closest_states"},
}


class ConfigError(ValueError):
    """Invalid scenario configuration; ``line`` points into the file when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


def fmt(x: float) -> str:
    return format(float(x), ".17g")


class _Locator:
    """Maps ``(table, key)`` to the 1-based line where the key is set."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def line(self, table: str, key: Optional[str] = None, index: int = 0) -> Optional[int]:
        current, seen = "", -1
        header = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.]+)\s*\]\]?")
        for number, raw in enumerate(self.lines, start=1):
            m = header.match(raw)
            if m:
                current = m.group(1)
                if current == table:
                    seen += 1
                    if key is None and seen == index:
                        return number
                continue
            if key and current == table and seen == index \
                    and re.match(rf"^\s*{re.escape(key)}\s*=", raw):
                return number
        return None


@dataclass
class OutputSpec:
    kind: str
    file: str
    options: dict = field(default_factory=dict)


@dataclass
class Scenario:
    """Parsed configuration ready to run."""

    title: str
    state: Optional[BellDiagonalState]
    channel: Optional[DephasingChannel]
    spectrum: Optional[OhmicSpectrum]
    side: NoiseSide
    pulses: Optional[PulseSequence]
    times: Optional[np.ndarray]
    outputs: list[OutputSpec]


def _number(value: Any, where: str, line: Optional[int], positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}", line)
    if positive and not value > 0:
        raise ConfigError(f"{where} must be positive, got {value!r}", line)
    return float(value)


def _grid(value: Any, where: str, line: Optional[int]) -> np.ndarray:
    """A list of numbers or a table ``{start, stop, step}`` (stop inclusive)."""
    if isinstance(value, list):
        grid = np.array([_number(v, where, line) for v in value])
    elif isinstance(value, dict) and set(value) == {"start", "stop", "step"}:
        start, stop, step = (_number(value[k], where, line) for k in ("start", "stop", "step"))
        if step <= 0 or stop < start:
            raise ConfigError(f"{where} needs step > 0 and stop >= start", line)
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        grid = np.round(start + step * np.arange(count), 12)
    else:
        raise ConfigError(f"{where} must be a list or {{start, stop, step}}", line)
    if grid.size == 0:
        raise ConfigError(f"{where} is empty", line)
    return grid


def _check_keys(data: dict, table: str, loc: _Locator, index: int = 0) -> None:
    for key in data:
        if key not in _ALLOWED[table]:
            name = f"[{table}]" if table else "top level"
            raise ConfigError(f"unknown key {key!r} in {name}",
                              loc.line(table, key, index) if table else None)


def _build_channel(ch: dict, loc: _Locator):
    kind = ch.get("kind")
    line = loc.line("channel", "kind")
    try:
        if kind == "markov":
            return MarkovDephasing(_number(ch.get("gamma", 1.0), "gamma",
                                           loc.line("channel", "gamma"))), None
        if kind == "rtn":
            for key in ("a", "tau"):
                if key not in ch:
                    raise ConfigError(f"rtn channel requires {key!r}", line)
            return RTNDephasing(_number(ch["a"], "a", loc.line("channel", "a")),
                                _number(ch["tau"], "tau", loc.line("channel", "tau"))), None
        if kind == "spectral":
            spec = OhmicSpectrum(
                _number(ch.get("s", 1.0), "s", loc.line("channel", "s")),
                _number(ch.get("omega_c", 1.0), "omega_c", loc.line("channel", "omega_c")),
                Temperature(ch.get("temperature", "zero")),
                _number(ch.get("theta_T", 10.0), "theta_T", loc.line("channel", "theta_T")))
            return None, spec
    except (InvalidChannelError, UnsupportedParameterError) as exc:
        raise ConfigError(str(exc), line) from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), loc.line("channel", "temperature")) from exc
    raise ConfigError(f"unknown channel kind {kind!r}; expected markov, rtn or spectral", line)


def _build_pulses(data: dict, loc: _Locator) -> Optional[PulseSequence]:
    if not data:
        return None
    line = loc.line("pulses")
    try:
        if "instants" in data:
            if "interval" in data:
                raise ConfigError("give either instants or interval, not both", line)
            return PulseSequence(tuple(_number(x, "pulse instant", line)
                                       for x in data["instants"]))
        if "interval" not in data:
            raise ConfigError("[pulses] requires interval or instants", line)
        return PulseSequence.periodic(
            _number(data["interval"], "interval", loc.line("pulses", "interval"), True),
            _number(data.get("horizon", 25.0), "horizon", loc.line("pulses", "horizon"), True))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), line) from exc


def _build_times(data: dict, channel: Optional[DephasingChannel], loc: _Locator) -> np.ndarray:
    keys = [k for k in ("t_max", "p_max", "nu_max") if k in data]
    if len(keys) != 1:
        raise ConfigError("[time] needs exactly one of t_max, p_max, nu_max", loc.line("time"))
    key = keys[0]
    line = loc.line("time", key)
    value = _number(data[key], key, line, positive=True)
    samples = data.get("samples", 2000)
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < 2:
        raise ConfigError("samples must be an integer >= 2", loc.line("time", "samples"))
    native = np.linspace(0.0, value, samples)
    if key == "p_max":
        if not isinstance(channel, MarkovDephasing):
            raise ConfigError("p_max is only meaningful for the markov channel", line)
        if value >= 1.0:
            raise ConfigError("p_max must be below 1", line)
        return np.array([channel.time_for_p(p) for p in native])
    if key == "nu_max":
        if not isinstance(channel, RTNDephasing):
            raise ConfigError("nu_max is only meaningful for the rtn channel", line)
        return native * channel.time_for_nu(1.0)
    return native


def parse_config(text: str) -> Scenario:
    """Parse and validate a TOML scenario; raises :class:`ConfigError`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None) from exc
    loc = _Locator(text)
    _check_keys(data, "", loc)
    for table in ("state", "channel", "pulses", "time"):
        if table in data and not isinstance(data[table], dict):
            raise ConfigError(f"{table} must be a table")
        _check_keys(data.get(table, {}), table, loc)
    outputs_raw = data.get("outputs", [])
    if not isinstance(outputs_raw, list):
        raise ConfigError("outputs must be an array of tables ([[outputs]])")
    outputs = []
    for i, out in enumerate(outputs_raw):
        _check_keys(out, "outputs", loc, i)
        line = loc.line("outputs", None, i)
        kind = out.get("kind")
        if kind not in ("trajectory", "transitions", "region_scan"):
            raise ConfigError(f"unknown output kind {kind!r}; expected trajectory, "
                              "transitions or region_scan", loc.line("outputs", "kind", i) or line)
        name = out.get("file")
        if not isinstance(name, str) or not name:
            raise ConfigError("output requires a file name", line)
        options = {k: v for k, v in out.items() if k not in ("kind", "file")}
        if kind == "region_scan":
            for key in ("s_grid", "c_grid"):
                if key not in out:
                    raise ConfigError(f"region_scan requires {key}", line)
                options[key] = _grid(out[key], key, loc.line("outputs", key, i))
            if np.any(options["c_grid"] <= 0) or np.any(options["c_grid"] >= 1):
                raise ConfigError("c_grid values must lie in (0, 1)", loc.line("outputs", "c_grid", i))
            if np.any(options["s_grid"] <= 0):
                raise ConfigError("s_grid values must be positive", loc.line("outputs", "s_grid", i))
            if "horizon" in out:
                options["horizon"] = _number(out["horizon"], "horizon",
                                             loc.line("outputs", "horizon", i), True)
        outputs.append(OutputSpec(kind, name, options))

    if "channel" not in data:
        raise ConfigError("missing [channel] table")
    ch = data["channel"]
    channel, spectrum = _build_channel(ch, loc)
    try:
        side = NoiseSide.parse(ch.get("side", "both"))
    except ValueError as exc:
        raise ConfigError(str(exc), loc.line("channel", "side")) from exc
    pulses = _build_pulses(data.get("pulses", {}), loc)
    if pulses and spectrum is None:
        raise ConfigError("pulses require the spectral channel", loc.line("pulses"))
    if spectrum is not None:
        channel = SpectralDephasing(DephasingProfile(spectrum, pulses))

    needs_trajectory = any(o.kind in ("trajectory", "transitions") for o in outputs)
    if any(o.kind == "region_scan" for o in outputs) and spectrum is None:
        raise ConfigError("region_scan outputs require the spectral channel",
                          loc.line("channel", "kind"))
    state = None
    if "state" in data:
        c = data["state"].get("c")
        line = loc.line("state", "c")
        if not (isinstance(c, list) and len(c) == 3):
            raise ConfigError("state.c must be a list of three numbers", line)
        try:
            state = BellDiagonalState(*(_number(x, "state.c", line) for x in c))
        except InvalidStateError as exc:
            raise ConfigError(str(exc), line) from exc
    elif needs_trajectory:
        raise ConfigError("trajectory and transitions outputs require a [state] table")
    times = None
    if "time" in data:
        times = _build_times(data["time"], channel, loc)
    elif needs_trajectory:
        raise ConfigError("trajectory and transitions outputs require a [time] table")
    return Scenario(str(data.get("title", "")), state, channel, spectrum, side, pulses, times,
                    outputs)


def resolve_config(name: str) -> Path:
    """Return a path for ``name``: a file on disk, or a bundled configuration."""
    path = Path(name)
    if path.exists():
        return path
    bundled = CONFIG_DIR / (name if name.endswith(".toml") else f"{name}.toml")
    if bundled.exists():
        return bundled
    raise ConfigError(f"config {name!r} not found (bundled: {', '.join(bundled_configs())})")


def bundled_configs() -> list[str]:
    return sorted(p.stem for p in CONFIG_DIR.glob("*.toml"))


# --- emitters -----------------------------------------------------------------------

def _native_times(channel: DephasingChannel, times: np.ndarray) -> np.ndarray:
    return np.array([channel.native_time(t) for t in times])


def emit_trajectory(traj, path: Path) -> None:
    native = _native_times(traj.channel, traj.times)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for k in range(len(traj.times)):
            writer.writerow([fmt(traj.times[k]), fmt(native[k]),
                             *(fmt(x) for x in traj.coefficients[:, k]),
                             fmt(traj.mutual_info[k]), fmt(traj.classical[k]),
                             fmt(traj.discord[k]), fmt(traj.entanglement[k])])


def _dump_json(obj: dict, path: Path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_transitions(report: TransitionReport, channel: DephasingChannel, path: Path,
                     title: str = "") -> None:
    payload = report.to_dict()
    to_native = channel.native_time
    payload["native"] = {
        "sudden_changes": [to_native(t) for t in report.sudden_changes],
        "sudden_death_time": (None if report.sudden_death_time is None
                              else to_native(report.sudden_death_time)),
        "transition_time": (None if report.transition_time is None
                            else to_native(report.transition_time)),
    }
    if report.closest_axes is not None:
        payload["closest_axes"] = report.closest_axes
    payload["title"] = title
    payload["version"] = __version__
    _dump_json(payload, path)


def emit_region_scan(scan: RegionScan, path) -> None:
    """Write ``s,c,flag`` rows to ``path`` and the metadata to ``path`` + ``.json``."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("s", "c", "flag"))
        for i, s in enumerate(scan.s_grid):
            for j, c in enumerate(scan.c_grid):
                writer.writerow((fmt(s), fmt(c), scan.flags[i, j]))
    meta = scan.metadata()
    meta["version"] = __version__
    meta["s_count"] = int(len(scan.s_grid))
    meta["c_count"] = int(len(scan.c_grid))
    _dump_json(meta, path.with_name(path.name + ".json"))


def run_scenario(scenario: Scenario, out_dir: Path, threads: int = 1) -> list[Path]:
    """Execute every output of ``scenario``; returns the files written."""
    written: list[Path] = []
    if not scenario.outputs:
        return written
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = None
    for out in scenario.outputs:
        path = out_dir / out.file
        if out.kind in ("trajectory", "transitions") and traj is None:
            traj = simulate_trajectory(scenario.state, scenario.channel, scenario.side,
                                       scenario.times)
        if out.kind == "trajectory":
            emit_trajectory(traj, path)
            written.append(path)
        elif out.kind == "transitions":
            report = detect_transitions(traj, track_closest=bool(out.options.get("closest_states")))
            emit_transitions(report, scenario.channel, path, scenario.title)
            written.append(path)
        else:
            scan = scan_time_invariant_region(
                out.options["s_grid"], out.options["c_grid"], scenario.spectrum,
                pulses=scenario.pulses, side=scenario.side,
                horizon=out.options.get("horizon"), criterion=out.options.get("criterion"),
                workers=threads)
            emit_region_scan(scan, path)
            written.extend([path, path.with_name(path.name + ".json")])
    return written


def _report(path: str, exc: Exception, line: Optional[int] = None) -> None:
    where = f"{path}:{line}" if line else path
    print(f"{where}: error: {exc}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdiscord", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and write its outputs")
    run.add_argument("config")
    run.add_argument("--out-dir", default=".", type=Path)
    run.add_argument("--threads", default=1, type=int)
    run.add_argument("--seed", default=None, type=int,
                     help="reserved; every computation is deterministic")
    val = sub.add_parser("validate", help="parse a scenario without running it")
    val.add_argument("config")
    sub.add_parser("list", help="list bundled configurations")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("\n".join(bundled_configs()))
        return EXIT_OK
    try:
        path = resolve_config(args.config)
        scenario = parse_config(path.read_text(encoding="utf-8"))
    except ConfigError as exc:
        _report(args.config, exc, exc.line)
        return EXIT_CONFIG
    except OSError as exc:
        _report(args.config, exc)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"{path}: ok ({len(scenario.outputs)} outputs)")
        return EXIT_OK
    if args.threads < 1:
        _report(args.config, ValueError("--threads must be at least 1"))
        return EXIT_CONFIG
    try:
        for written in run_scenario(scenario, args.out_dir, args.threads):
            print(written)
    except (QuadratureError, ShortcutInvalidError) as exc:
        _report(str(path), exc)
        return EXIT_NUMERIC
    except OSError as exc:
        _report(str(path), exc)
        return EXIT_WRITE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
