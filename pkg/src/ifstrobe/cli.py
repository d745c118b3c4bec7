"""Command-line front end: analyses as subcommands, results as CSV.

Subcommands
-----------
limits        firing-rate limits and the 1-spike window for one (A, d)
classify      spiking-region label for one (A, d)
sweep         firing-rate staircase over T (--mode width|amplitude)
scan          attractor period / firing-number over a (d, 1/A) grid
bif           one border-collision solve (--solve A|T, --side R|L|zero)
adding-check  period-adding/Farey report for a previously swept CSV

Model parameters may come from a flat ``key=value`` config file (``--config``,
'#' comments); explicit command-line flags override file values.  Exact
rationals are serialized as integer numerator/denominator column pairs so
that re-reading a CSV reproduces them bit-exactly; reals are written with 12
significant digits.  Exit codes: 0 success, 2 configuration error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path

from .bifurcation import BifurcationNotFound, Side, bif_A, bif_T, rate_limits
from .model import IntegrationError, LinearModel, classify_region, validate_hypotheses
from .strobe import OrbitOptions, SpikeRunawayError
from .sweep import (
    AmplitudeCorrection,
    StaircaseSample,
    WidthCorrection,
    scan_plane,
    sweep_T,
    verify_adding,
)

__all__ = ["main", "run", "parse_config", "ExperimentConfig", "ConfigError", "read_staircase_csv"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SWEEP_COLUMNS = (
    "T",
    "eta_num",
    "eta_den",
    "rho_num",
    "rho_den",
    "rate",
    "word",
    "period",
    "converged",
    "contraction_ok",
)

SCAN_COLUMNS = ("d", "invA", "period", "eta", "capped", "failed")


class ConfigError(ValueError):
    """Invalid configuration file or parameter combination."""


@dataclass
class ExperimentConfig:
    """Flat bag of experiment parameters; None means "not provided"."""

    a: float | None = None
    b: float | None = None
    theta: float | None = None
    A: float | None = None
    d: float | None = None
    T: float | None = None
    Q: float | None = None
    delta: float | None = None
    tmin: float | None = None
    tmax: float | None = None
    n: int | None = None
    mode: str | None = None
    side: str | None = None
    solve: str | None = None
    spikes: int | None = None
    cap: int | None = None
    workers: int | None = None
    out: str | None = None
    refine: bool | None = None
    transient: int | None = None
    max_period: int | None = None
    tol_time: float | None = None
    tol_state: float | None = None


_INT_KEYS = {"n", "spikes", "cap", "workers", "transient", "max_period"}
_STR_KEYS = {"mode", "side", "solve", "out"}
_BOOL_KEYS = {"refine"}


def parse_config(path: str | Path) -> ExperimentConfig:
    """Read a flat key=value config file ('#' starts a comment).

    Unknown keys, malformed values and out-of-domain parameters raise
    :class:`ConfigError` with the offending line number.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    cfg = ExperimentConfig()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if key in _STR_KEYS:
                parsed: object = value
            elif key in _BOOL_KEYS:
                if value.lower() not in {"true", "false", "0", "1"}:
                    raise ValueError(value)
                parsed = value.lower() in {"true", "1"}
            elif key in _INT_KEYS:
                parsed = int(value)
            else:
                parsed = float(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: malformed value for {key}: {value!r}") from exc
        setattr(cfg, key, parsed)
    _validate_config(cfg, str(path))
    return cfg


def _validate_config(cfg: ExperimentConfig, origin: str) -> None:
    if cfg.d is not None and not (0.0 < cfg.d < 1.0):
        raise ConfigError(f"{origin}: d must lie in the open interval (0, 1), got {cfg.d}")
    if cfg.theta is not None and cfg.theta <= 0.0:
        raise ConfigError(f"{origin}: theta must be strictly positive, got {cfg.theta}")
    if cfg.T is not None and cfg.T <= 0.0:
        raise ConfigError(f"{origin}: T must be strictly positive, got {cfg.T}")
    if cfg.a is not None and cfg.b is not None and cfg.theta is not None:
        report = validate_hypotheses(LinearModel(a=cfg.a, b=cfg.b, theta=cfg.theta))
        if not report.passed:
            first = report.failures[0]
            raise ConfigError(f"{origin}: model hypothesis violated: {first.detail}")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _model_from(args: argparse.Namespace) -> LinearModel:
    missing = [name for name in ("a", "b", "theta") if getattr(args, name) is None]
    if missing:
        raise ConfigError(f"missing model parameter(s): {', '.join(missing)}")
    model = LinearModel(a=args.a, b=args.b, theta=args.theta)
    report = validate_hypotheses(model)
    if not report.passed:
        raise ConfigError(f"model hypothesis violated: {report.failures[0].detail}")
    return model


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"missing required parameter(s): {', '.join(missing)}")


def _orbit_opts(args: argparse.Namespace) -> OrbitOptions:
    base = OrbitOptions()
    return OrbitOptions(
        transient=args.transient if args.transient is not None else base.transient,
        max_period=args.max_period if args.max_period is not None else base.max_period,
        state_tol=args.tol_state if args.tol_state is not None else base.state_tol,
    )


def _write_csv(path: str, header: tuple[str, ...], rows: list[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _sweep_rows(samples: list[StaircaseSample]) -> list[tuple]:
    return [
        (
            _fmt(s.T),
            s.eta.numerator,
            s.eta.denominator,
            s.rho.numerator,
            s.rho.denominator,
            _fmt(s.rate),
            s.word,
            s.period_p,
            int(s.converged),
            int(s.contraction_ok),
        )
        for s in samples
    ]


def read_staircase_csv(path: str | Path) -> list[StaircaseSample]:
    """Reconstruct sweep samples (rationals exactly) from an emitted CSV."""
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            samples.append(
                StaircaseSample(
                    T=float(row["T"]),
                    eta=Fraction(int(row["eta_num"]), int(row["eta_den"])),
                    rho=Fraction(int(row["rho_num"]), int(row["rho_den"])),
                    rate=float(row["rate"]),
                    word=row["word"],
                    period_p=int(row["period"]),
                    converged=bool(int(row["converged"])),
                    contraction_ok=bool(int(row["contraction_ok"])),
                )
            )
    return samples


def _cmd_limits(args: argparse.Namespace) -> int:
    model = _model_from(args)
    _require(args, "A", "d")
    lim = rate_limits(model, args.A, args.d)
    t0 = "none" if lim.T0 is None else _fmt(lim.T0)
    min_at = "T->0" if lim.r_min_is_infimum else _fmt(lim.r_min_at) if lim.r_min_at else "0<T<T0"
    print(
        f"r_infinity={_fmt(lim.r_infinity)} r_zero={_fmt(lim.r_zero)} T0={t0} "
        f"T1R={_fmt(lim.T1R)} T1L={_fmt(lim.T1L)} "
        f"r_max={_fmt(lim.r_max)}@T={_fmt(lim.r_max_at)} r_min={_fmt(lim.r_min)}@{min_at}"
    )
    if args.out:
        _write_csv(
            args.out,
            ("r_infinity", "r_zero", "T0", "T1R", "T1L", "r_max", "r_max_at", "r_min"),
            [
                (
                    _fmt(lim.r_infinity),
                    _fmt(lim.r_zero),
                    t0,
                    _fmt(lim.T1R),
                    _fmt(lim.T1L),
                    _fmt(lim.r_max),
                    _fmt(lim.r_max_at),
                    _fmt(lim.r_min),
                )
            ],
        )
    return EXIT_OK


def _cmd_classify(args: argparse.Namespace) -> int:
    model = _model_from(args)
    _require(args, "A", "d")
    region = classify_region(model, args.A, args.d)
    flags = []
    if region.on_amplitude_boundary:
        flags.append("on-amplitude-boundary")
    if region.on_dose_boundary:
        flags.append("on-dose-boundary")
    print(region.kind + (f" ({', '.join(flags)})" if flags else ""))
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    model = _model_from(args)
    _require(args, "mode", "tmin", "tmax", "n")
    if args.mode == "width":
        _require(args, "A", "d")
        mode = WidthCorrection(A=args.A, d=args.d)
    elif args.mode == "amplitude":
        _require(args, "delta", "Q")
        mode = AmplitudeCorrection(delta=args.delta, Q=args.Q)
    else:
        raise ConfigError(f"unknown sweep mode {args.mode!r}")
    samples = sweep_T(
        model,
        mode,
        (args.tmin, args.tmax),
        args.n,
        refine=bool(args.refine),
        opts=_orbit_opts(args),
        workers=args.workers or 1,
    )
    if args.out:
        _write_csv(args.out, SWEEP_COLUMNS, _sweep_rows(samples))
    spiking = sum(1 for s in samples if s.eta > 0)
    print(
        f"sweep: {len(samples)} samples on T in [{_fmt(samples[0].T)}, {_fmt(samples[-1].T)}], "
        f"{spiking} spiking, max rate {_fmt(max(s.rate for s in samples))}"
        + (f", wrote {args.out}" if args.out else "")
    )
    return EXIT_OK


def _cmd_scan(args: argparse.Namespace) -> int:
    model = _model_from(args)
    _require(args, "T")
    d_grid = _linspace(args.dmin, args.dmax, args.dn, "d")
    a_grid = _linspace(args.iamin, args.iamax, args.ian, "invA")
    scan = scan_plane(
        model,
        args.T,
        d_grid,
        a_grid,
        period_cap=args.cap if args.cap is not None else 20,
        opts=_orbit_opts(args),
        workers=args.workers or 1,
    )
    rows = []
    for i, d in enumerate(scan.d_grid):
        for j, inva in enumerate(scan.invA_grid):
            rows.append(
                (
                    _fmt(d),
                    _fmt(inva),
                    int(scan.period[i, j]),
                    _fmt(scan.eta[i, j]),
                    int(scan.capped[i, j]),
                    int(scan.failed[i, j]),
                )
            )
    if args.out:
        _write_csv(args.out, SCAN_COLUMNS, rows)
    print(
        f"scan: {len(rows)} nodes at T={_fmt(args.T)}, "
        f"{int(scan.capped.sum())} capped, {int(scan.failed.sum())} failed"
        + (f", wrote {args.out}" if args.out else "")
    )
    return EXIT_OK


def _linspace(lo: float | None, hi: float | None, n: int | None, name: str) -> list[float]:
    if lo is None or hi is None or n is None:
        raise ConfigError(f"missing {name} grid bounds/count")
    if n < 1:
        raise ConfigError(f"{name} grid needs at least one node")
    if n == 1:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n - 1)] + [hi]


def _cmd_bif(args: argparse.Namespace) -> int:
    model = _model_from(args)
    _require(args, "solve", "side", "spikes", "d")
    side = {"r": Side.R, "l": Side.L, "zero": Side.ZERO}.get(args.side.lower())
    if side is None:
        raise ConfigError(f"side must be R, L or zero, got {args.side!r}")
    time_tol = args.tol_time if args.tol_time is not None else 1e-14
    if args.solve == "A":
        _require(args, "T")
        point = bif_A(model, args.spikes, side, args.d, args.T, time_tol=time_tol)
    elif args.solve == "T":
        _require(args, "A")
        point = bif_T(model, args.spikes, side, args.A, args.d, time_tol=time_tol)
    else:
        raise ConfigError(f"--solve must be A or T, got {args.solve!r}")
    print(
        f"n={point.n} side={point.side.value} d={_fmt(point.d)} T={_fmt(point.T)} "
        f"A={_fmt(point.A)} residual={point.residual:.3e}"
        + (" (at amplitude resolution limit)" if point.at_resolution else "")
    )
    if args.out:
        _write_csv(
            args.out,
            ("n", "side", "d", "T", "A", "residual", "xbar"),
            [
                (
                    point.n,
                    point.side.value,
                    _fmt(point.d),
                    _fmt(point.T),
                    _fmt(point.A),
                    f"{point.residual:.6e}",
                    _fmt(point.xbar),
                )
            ],
        )
    return EXIT_OK


def _cmd_adding_check(args: argparse.Namespace) -> int:
    samples = read_staircase_csv(args.input)
    report = verify_adding(samples)
    print(
        f"adding-check: {len(report.windows)} windows, {len(report.checks)} mediant checks, "
        f"{len(report.violations)} violations, {len(report.unresolved)} unresolved"
    )
    for check in report.violations:
        print(
            f"  violation between eta={check.left.eta} and eta={check.right.eta} "
            f"on T in ({_fmt(check.left.t_hi)}, {_fmt(check.right.t_lo)}): {check.detail}"
        )
    return EXIT_OK


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--a", type=float, default=None, help="linear decay rate (a < 0)")
    sub.add_argument("--b", type=float, default=None, help="linear bias (b > 0)")
    sub.add_argument("--theta", type=float, default=None, help="threshold (> 0)")


def _add_global_flags(parser: argparse.ArgumentParser, top_level: bool) -> None:
    # the same flags are accepted before or after the subcommand; the
    # subparser copies use SUPPRESS so they only override when given
    default = None if top_level else argparse.SUPPRESS
    parser.add_argument("--config", default=default, help="key=value config file")
    parser.add_argument(
        "--workers", type=int, default=default, help="parallel workers for grids"
    )
    parser.add_argument("--tol-time", dest="tol_time", type=float, default=default)
    parser.add_argument("--tol-state", dest="tol_state", type=float, default=default)
    parser.add_argument(
        "--transient", type=int, default=default, help="attractor burn-in budget"
    )
    parser.add_argument(
        "--max-period", dest="max_period", type=int, default=default, help="attractor period cap"
    )
    parser.add_argument("-o", "--out", default=default, help="output CSV path")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ifstrobe",
        description="Analyses of periodically pulsed integrate-and-fire models",
    )
    _add_global_flags(parser, top_level=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("limits", help="firing-rate limits for one (A, d)")
    _add_global_flags(p, top_level=False)
    _add_model_flags(p)
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--d", type=float, default=None)
    p.set_defaults(handler=_cmd_limits)

    p = sub.add_parser("classify", help="spiking-region label for one (A, d)")
    _add_global_flags(p, top_level=False)
    _add_model_flags(p)
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--d", type=float, default=None)
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("sweep", help="firing-rate staircase over T")
    _add_global_flags(p, top_level=False)
    _add_model_flags(p)
    p.add_argument("--mode", choices=("width", "amplitude"), default=None)
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--d", type=float, default=None)
    p.add_argument("--delta", type=float, default=None, help="pulse duration (amplitude mode)")
    p.add_argument("--Q", type=float, default=None, help="dose (amplitude mode)")
    p.add_argument("--tmin", type=float, default=None)
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--n", type=int, default=None, help="grid resolution")
    p.add_argument("--refine", action="store_const", const=True, default=None)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("scan", help="period/firing-number over a (d, 1/A) grid")
    _add_global_flags(p, top_level=False)
    _add_model_flags(p)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--dmin", type=float, default=None)
    p.add_argument("--dmax", type=float, default=None)
    p.add_argument("--dn", type=int, default=None)
    p.add_argument("--iamin", type=float, default=None)
    p.add_argument("--iamax", type=float, default=None)
    p.add_argument("--ian", type=int, default=None)
    p.add_argument("--cap", type=int, default=None, help="period cap (default 20)")
    p.set_defaults(handler=_cmd_scan)

    p = sub.add_parser("bif", help="one border-collision solve")
    _add_global_flags(p, top_level=False)
    _add_model_flags(p)
    p.add_argument("--solve", choices=("A", "T"), default=None)
    p.add_argument("--side", default=None, help="R, L or zero")
    p.add_argument("--spikes", type=int, default=None, help="spike count n")
    p.add_argument("--A", type=float, default=None)
    p.add_argument("--d", type=float, default=None)
    p.add_argument("--T", type=float, default=None)
    p.set_defaults(handler=_cmd_bif)

    p = sub.add_parser("adding-check", help="period-adding report for a swept CSV")
    _add_global_flags(p, top_level=False)
    p.add_argument("-i", "--input", required=True, help="CSV produced by the sweep subcommand")
    p.set_defaults(handler=_cmd_adding_check)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    cfg = parse_config(args.config)
    for f in fields(cfg):
        if hasattr(args, f.name) and getattr(args, f.name) is None:
            setattr(args, f.name, getattr(cfg, f.name))


def run(argv: list[str] | None = None) -> int:
    """Parse arguments, execute one subcommand, return the exit code."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        if getattr(args, "d", None) is not None and not (0.0 < args.d < 1.0):
            raise ConfigError(f"d must lie in the open interval (0, 1), got {args.d}")
        return args.handler(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BifurcationNotFound, IntegrationError, SpikeRunawayError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv: list[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    raise SystemExit(main())
