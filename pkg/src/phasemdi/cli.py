"""Command-line front end: configure a sweep, run it and write a CSV curve.

Exit status: 0 on success, 1 on I/O failure, 2 on a configuration error and
3 when the computation finished but no distance has a positive key rate.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

from .channel_models import CONVERTER_EFFICIENCY, Placement, Scheme
from .presets import PRESETS, Preset
from .quantum_states import DELTA0, ModulatorModel
from .security_bounds import FlawVariant
from .sweep import KeyRatePoint, NoPositiveRateError, SweepSpec, cutoff_distance, sweep

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_NO_KEY = 3

CSV_COLUMNS = (
    "distance_km",
    "key_rate",
    "alpha_star",
    "delta_cap",
    "delta_y_prime_bound",
    "gain",
    "qber",
)

_SCHEME_NAMES = {"1": Scheme.I, "I": Scheme.I, "2": Scheme.II, "II": Scheme.II}

CONFIG_SECTION = "run"
DEVICE_KEYS = ("p_dark", "eta_det", "e_ali", "xi", "f_ec")
DELTA_KEYS = ("delta", "delta_frac", "eta_ex")
CONFIG_KEYS = (
    ("scheme", "placement", "preset", "flaw", "dist", "out", "alpha", "converter")
    + ("alpha_min", "alpha_max", "workers")
    + DEVICE_KEYS
    + DELTA_KEYS
)


class ConfigError(ValueError):
    """Invalid run configuration; ``problems`` lists every violation found."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one key-rate curve."""

    scheme: Scheme
    placement: Placement
    preset: str
    device: Preset
    modulator: ModulatorModel
    flaw_variant: FlawVariant
    distances: tuple[float, ...]
    out: Path | None = None
    alpha: float | None = None
    converter: float = CONVERTER_EFFICIENCY
    alpha_bounds: tuple[float, float] = (1e-7, 1.0)
    workers: int = 1

    def sweep_spec(self) -> SweepSpec:
        return SweepSpec(
            scheme=self.scheme,
            placement=self.placement,
            distances=self.distances,
            device=self.device,
            modulator=self.modulator,
            flaw_variant=self.flaw_variant,
            alpha_bounds=self.alpha_bounds,
            converter=self.converter,
            fixed_alpha=self.alpha,
        )

    def describe(self) -> str:
        d = self.device
        return (
            f"scheme={int(self.scheme)} placement={self.placement.value} preset={self.preset} "
            f"delta={self.modulator.delta:.6g} eta_ex={self.modulator.eta_ex:.4g} "
            f"flaw={self.flaw_variant.value} p_dark={d.p_dark:g} eta_det={d.eta_det:g} "
            f"e_ali={d.e_ali:g} dist={self.distances[0]:g}..{self.distances[-1]:g} km"
        )


def parse_distance_grid(text: str) -> tuple[float, ...]:
    """Parse ``start:stop:step`` (km, stop inclusive) or a single distance."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"distance grid {text!r} is not start:stop:step") from None
    if len(values) == 1:
        values = [values[0], values[0], 1.0]
    if len(values) != 3:
        raise ValueError(f"distance grid {text!r} is not start:stop:step")
    start, stop, step = values
    if not all(math.isfinite(v) for v in values):
        raise ValueError("distance grid values must be finite")
    if start < 0:
        raise ValueError("distance grid must start at a non-negative distance")
    if step <= 0:
        raise ValueError("distance step must be positive")
    if stop < start:
        raise ValueError("distance grid stop lies before start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(n))


def load_config_file(path: str | Path) -> dict[str, str]:
    """Read an INI file with a single ``[run]`` section of key = value lines."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError([f"{path}: line {exc.lineno}: expected a [{CONFIG_SECTION}] header"]) from None
    except configparser.ParsingError as exc:
        raise ConfigError(
            [f"{path}: line {lineno}: cannot parse {line.strip()!r}" for lineno, line in exc.errors]
        ) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError([f"{path}: line {exc.lineno}: duplicate key {exc.option!r}"]) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError([f"{path}: line {exc.lineno}: duplicate section [{exc.section}]"]) from None
    problems = [f"{path}: unknown section [{s}]" for s in parser.sections() if s != CONFIG_SECTION]
    values: dict[str, str] = {}
    if parser.has_section(CONFIG_SECTION):
        for key, value in parser.items(CONFIG_SECTION):
            if key not in CONFIG_KEYS:
                problems.append(f"{path}: [{CONFIG_SECTION}] unknown key {key!r}")
            values[key] = value
    if problems:
        raise ConfigError(problems)
    return values


def resolve_config(values: Mapping[str, object]) -> RunConfig:
    """Validate raw key/value settings and apply preset defaults.

    Values may be strings (from a file or flags) or already typed.  Every
    problem is collected before raising, so one error lists them all.
    """
    raw = {k: v for k, v in values.items() if v is not None and v != ""}
    problems = [f"unknown key {k!r}" for k in raw if k not in CONFIG_KEYS]

    def number(key: str) -> float | None:
        if key not in raw:
            return None
        try:
            x = float(raw[key])
        except (TypeError, ValueError):
            problems.append(f"{key}: expected a number, got {raw[key]!r}")
            return None
        if not math.isfinite(x):
            problems.append(f"{key}: must be finite")
            return None
        return x

    scheme = None
    if "scheme" not in raw:
        problems.append("scheme: missing (expected 1 or 2)")
    else:
        scheme = _SCHEME_NAMES.get(str(raw["scheme"]).strip().upper())
        if scheme is None:
            problems.append(f"scheme: expected 1 or 2, got {raw['scheme']!r}")

    placement = None
    try:
        placement = Placement(str(raw.get("placement", "at-bob")).lower())
    except ValueError:
        problems.append(f"placement: expected at-bob or midpoint, got {raw['placement']!r}")

    preset_name = str(raw.get("preset", "gys")).lower()
    device = PRESETS.get(preset_name)
    if device is None:
        problems.append(f"preset: unknown {preset_name!r} (known: {', '.join(PRESETS)})")
    else:
        updates = {}
        for key in DEVICE_KEYS:
            x = number(key)
            if x is None:
                continue
            if key in ("p_dark", "eta_det", "e_ali") and not 0 <= x <= 1:
                problems.append(f"{key}: must lie in [0, 1]")
            elif key == "xi" and x < 0:
                problems.append("xi: must be non-negative")
            elif key == "f_ec" and x < 1:
                problems.append("f_ec: must be at least 1")
            else:
                updates[key] = x
        device = dataclasses.replace(device, **updates)

    given = [k for k in DELTA_KEYS if k in raw]
    modulator = ModulatorModel.ideal()
    if len(given) > 1:
        problems.append(f"conflicting phase-error settings: {', '.join(given)} (give at most one)")
    elif given:
        key = given[0]
        x = number(key)
        if x is not None:
            if key == "delta":
                modulator = ModulatorModel.from_phase_error(x)
            elif key == "delta_frac":
                if x < 0:
                    problems.append("delta_frac: must be non-negative")
                else:
                    # delta_frac = k means delta0 / k; 0 selects an ideal modulator
                    modulator = ModulatorModel.from_phase_error(DELTA0 / x if x else 0.0)
            elif x < 0:
                problems.append("eta_ex: must be non-negative")
            else:
                modulator = ModulatorModel.from_extinction_ratio(x)

    flaw = None
    try:
        flaw = FlawVariant(str(raw.get("flaw", "original")).lower())
    except ValueError:
        problems.append(f"flaw: expected original or erratum, got {raw['flaw']!r}")

    distances: tuple[float, ...] = ()
    if "dist" not in raw:
        problems.append("dist: missing (expected start:stop:step in km)")
    else:
        try:
            d = raw["dist"]
            distances = parse_distance_grid(d) if isinstance(d, str) else tuple(map(float, d))
        except ValueError as exc:
            problems.append(f"dist: {exc}")

    alpha = number("alpha")
    if alpha is not None and alpha < 0:
        problems.append("alpha: must be non-negative")
    converter = number("converter")
    if converter is None:
        converter = CONVERTER_EFFICIENCY
    elif not 0 < converter <= 1:
        problems.append("converter: must lie in (0, 1]")
    a_lo, a_hi = number("alpha_min"), number("alpha_max")
    bounds = (a_lo if a_lo is not None else 1e-7, a_hi if a_hi is not None else 1.0)
    if not 0 < bounds[0] < bounds[1]:
        problems.append(f"alpha_min/alpha_max: need 0 < min < max, got {bounds}")
    workers = 1
    if "workers" in raw:
        try:
            workers = int(raw["workers"])
            if workers < 1:
                raise ValueError
        except (TypeError, ValueError):
            problems.append(f"workers: expected a positive integer, got {raw['workers']!r}")

    if problems:
        raise ConfigError(problems)
    out = raw.get("out")
    return RunConfig(
        scheme=scheme,
        placement=placement,
        preset=preset_name,
        device=device,
        modulator=modulator,
        flaw_variant=flaw,
        distances=distances,
        out=Path(out) if out is not None else None,
        alpha=alpha,
        converter=converter,
        alpha_bounds=bounds,
        workers=workers,
    )


def parse_config(
    path: str | Path | None = None, flags: Mapping[str, object] | None = None
) -> RunConfig:
    """Merge a config file and command-line values (flags win) and resolve them."""
    values: dict[str, object] = dict(load_config_file(path)) if path is not None else {}
    for key, value in (flags or {}).items():
        if value is not None:
            values[key] = value
    return resolve_config(values)


def format_row(point: KeyRatePoint) -> list[str]:
    fields = (
        point.total_distance_km,
        point.key_rate,
        point.alpha_star,
        point.delta_cap,
        point.delta_y_prime_bound,
        point.gain,
        point.qber,
    )
    return [format(float(x), ".17g") for x in fields]


def write_csv(points: Iterable[KeyRatePoint], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in points:
        writer.writerow(format_row(p))


def read_csv(stream: TextIO) -> list[KeyRatePoint]:
    """Parse a file written by ``write_csv`` back into points."""
    reader = csv.reader(stream)
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header!r}")
    points = []
    for row in reader:
        d, g, a, cap, dyp, gain, qber = map(float, row)
        points.append(KeyRatePoint(d, a, g, dyp, cap, gain, qber))
    return points


def csv_text(points: Iterable[KeyRatePoint]) -> str:
    buf = io.StringIO()
    write_csv(points, buf)
    return buf.getvalue()


def summarize(config: RunConfig, points: Sequence[KeyRatePoint]) -> tuple[str, int]:
    """Summary line and exit status for a finished sweep."""
    best = max(points, key=lambda p: p.key_rate)
    if best.key_rate <= 0:
        return "no positive key rate at any distance", EXIT_NO_KEY
    try:
        cut = cutoff_distance(config.sweep_spec(), points)
    except NoPositiveRateError:  # pragma: no cover - guarded above
        return "no positive key rate at any distance", EXIT_NO_KEY
    return (
        f"cutoff {cut:.1f} km; peak rate {best.key_rate:.6g} at {best.total_distance_km:g} km "
        f"(alpha_A = {best.alpha_star:.6g})",
        EXIT_OK,
    )


def run(config: RunConfig, stdout: TextIO | None = None) -> int:
    """Run one curve, write its CSV and print the summary; returns the exit status."""
    stdout = stdout or sys.stdout
    points = sweep(config.sweep_spec(), workers=config.workers)
    text = csv_text(points)
    if config.out is None:
        stdout.write(text)
        summary_stream = sys.stderr
    else:
        try:
            config.out.parent.mkdir(parents=True, exist_ok=True)
            with open(config.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {config.out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_IO
        summary_stream = stdout
    summary, status = summarize(config, points)
    print(summary, file=summary_stream)
    return status


@dataclass(frozen=True)
class Scenario:
    """A named group of curves reproducing one published figure setting."""

    name: str
    title: str
    curves: tuple[tuple[str, Mapping[str, object]], ...]

    def configs(self) -> list[tuple[str, RunConfig]]:
        return [(label, resolve_config(values)) for label, values in self.curves]


def _curves(common: Mapping[str, object], variants: Sequence[tuple[str, Mapping[str, object]]]):
    out = []
    for placement in ("at-bob", "midpoint"):
        for label, extra in variants:
            values = {**common, "placement": placement, **extra}
            out.append((f"{placement}_{label}", values))
    return tuple(out)


def _frac_label(k: float) -> str:
    return "delta0" if k == 1 else ("delta0-over-%g" % k if k else "delta-0")


def _build_scenarios() -> dict[str, Scenario]:
    s1_gys = {"scheme": 1, "preset": "gys", "dist": "0:30:0.5"}
    s1_eali = _curves(s1_gys, [(f"e_ali-{e}", {"e_ali": e}) for e in (0.033, 0.040)])
    s1_delta = _curves(s1_gys, [(_frac_label(k), {"delta_frac": k}) for k in (3, 5)])
    s1_up = _curves(
        {"scheme": 1, "preset": "upgraded", "dist": "0:120:1", "flaw": "erratum"},
        [(_frac_label(1), {"delta_frac": 1})],
    )
    s2_gys = _curves(
        {"scheme": 2, "preset": "gys", "dist": "0:200:1"},
        [(_frac_label(k), {"delta_frac": k}) for k in (0, 50, 20, 10)],
    )
    s2_up = _curves(
        {"scheme": 2, "preset": "upgraded-2x", "dist": "0:20:0.25", "flaw": "erratum"},
        [(_frac_label(1), {"delta_frac": 1})],
    )
    rate, alpha = "key rate vs distance", "optimal alpha_A vs distance"
    table = [
        ("fig4", rate, s1_eali),
        ("fig5", alpha, s1_eali),
        ("fig6", rate, s1_delta),
        ("fig7", alpha, s1_delta),
        ("fig8", rate, s1_up),
        ("fig9", alpha, s1_up),
        ("fig10", rate, s2_gys),
        ("fig11", alpha, s2_gys),
        ("fig12", rate, s2_up),
        ("fig13", alpha, s2_up),
    ]
    return {name: Scenario(name, title, curves) for name, title, curves in table}


SCENARIOS = _build_scenarios()


def list_scenarios() -> str:
    lines = []
    for sc in SCENARIOS.values():
        lines.append(f"{sc.name}: {sc.title}")
        for label, cfg in sc.configs():
            lines.append(f"  {label}: {cfg.describe()}")
    return "\n".join(lines) + "\n"


def run_scenario(name: str, out_dir: Path | None, stdout: TextIO | None = None) -> int:
    """Run every curve of a scenario; CSVs go to ``out_dir/<name>_<curve>.csv``."""
    stdout = stdout or sys.stdout
    if name not in SCENARIOS:
        raise ConfigError([f"scenario: unknown {name!r} (known: {', '.join(SCENARIOS)})"])
    statuses = []
    for label, cfg in SCENARIOS[name].configs():
        out = out_dir / f"{name}_{label}.csv" if out_dir is not None else None
        if out is None:
            points = sweep(cfg.sweep_spec(), workers=cfg.workers)
            summary, status = summarize(cfg, points)
            print(f"{label}: {summary}", file=stdout)
        else:
            print(f"{label}: writing {out}", file=stdout)
            status = run(dataclasses.replace(cfg, out=out), stdout)
        if status == EXIT_IO:
            return EXIT_IO
        statuses.append(status)
    return EXIT_OK if EXIT_OK in statuses else EXIT_NO_KEY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasemdi",
        description="Key rates of phase-encoding MDI-QKD with imperfect state preparation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="compute one key-rate curve (or a named scenario)")
    r.add_argument("--config", help="INI file with a [run] section")
    r.add_argument("--scenario", help="named figure scenario (see 'scenarios')")
    r.add_argument("--scheme", choices=["1", "2"])
    r.add_argument("--placement", choices=[p.value for p in Placement])
    r.add_argument("--preset", choices=list(PRESETS))
    d = r.add_mutually_exclusive_group()
    d.add_argument("--delta", help="phase-modulation error in radians")
    d.add_argument("--delta-frac", dest="delta_frac", help="k, meaning delta0 / k (0: ideal)")
    d.add_argument("--eta-ex", dest="eta_ex", help="extinction ratio")
    r.add_argument("--flaw", choices=[f.value for f in FlawVariant])
    r.add_argument("--dist", help="distance grid start:stop:step in km")
    r.add_argument("--out", help="CSV path (a directory for --scenario); default stdout")
    r.add_argument("--alpha", help="fixed Alice intensity instead of optimizing")
    r.add_argument("--converter", help="converter success probability (scheme II)")
    r.add_argument("--alpha-min", dest="alpha_min")
    r.add_argument("--alpha-max", dest="alpha_max")
    r.add_argument("--workers", help="parallel worker processes")
    for key in DEVICE_KEYS:
        r.add_argument(f"--{key.replace('_', '-')}", dest=key, help=f"override preset {key}")

    sub.add_parser("scenarios", help="list the named figure scenarios")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "scenarios":
        sys.stdout.write(list_scenarios())
        return EXIT_OK
    try:
        if args.scenario:
            return run_scenario(args.scenario, Path(args.out) if args.out else None)
        flags = {k: getattr(args, k) for k in CONFIG_KEYS}
        config = parse_config(args.config, flags)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
