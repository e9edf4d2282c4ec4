"""
volstat command line.

Exit status: 0 success, 2 usage error, 3 input error (missing/malformed
files, bad chain), 4 computation error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
from pathlib import Path

from . import reports
from . import svmodels as sv
from .emit import render
from .errors import ComputationError, InputError, VolstatError
from .fitting import COMPOSITE_FAMILIES, CORE_FAMILIES, Family
from .implied import parse_chain_text
from .marketdata import PERIODS, CsvFormat, IndexKind, parse_date, parse_index_csv, parse_price_csv

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3, 4
DATA_ENV = "VOLSTAT_DATA_DIR"


class UsageError(Exception):
    pass


def resolve_path(path: str) -> Path:
    """Use ``path`` if it exists, else try it under $VOLSTAT_DATA_DIR."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    base = os.environ.get(DATA_ENV)
    if base and (Path(base) / p).exists():
        return Path(base) / p
    return p


def _read(path: str, label: str) -> tuple[Path, str]:
    p = resolve_path(path)
    try:
        return p, p.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise InputError(f"{label} file {path}: {exc.strerror or exc}") from None


def _fmt(args, value_column: str) -> CsvFormat:
    return CsvFormat(date_column=args.date_column, value_column=value_column,
                     date_format=args.date_format)


def _with_context(path, fn):
    try:
        return fn()
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_prices(args, report):
    if not args.prices:
        raise UsageError("--prices is required")
    path, text = _read(args.prices, "prices")
    series = _with_context(path, lambda: parse_price_csv(text, _fmt(args, args.price_column)))
    report["prices"] = path
    return series


def load_index(args, report, path_arg=None, kind=None, label="index"):
    path_arg = path_arg or args.index
    if not path_arg:
        raise UsageError("--index is required")
    kind = kind or IndexKind(args.kind.upper())
    path, text = _read(path_arg, label)
    series = _with_context(path, lambda: parse_index_csv(text, kind, _fmt(args, args.index_column)))
    report[label] = path
    return series


def period_of(args):
    if args.period:
        return PERIODS[args.period]
    if args.start is None and args.end is None:
        return None
    try:
        start = parse_date(args.start) if args.start else dt.date.min
        end = parse_date(args.end) if args.end else dt.date.max
    except (ValueError, InputError) as exc:
        raise UsageError(f"bad --from/--to date: {exc}") from None
    if not start < end:
        raise UsageError("--from must be before --to")
    return start, end


def _families(text: str | None, default):
    if not text:
        return default
    names = {f.value.lower(): f for f in Family}
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok == "core":
            out.extend(CORE_FAMILIES)
        elif tok == "composite":
            out.extend(COMPOSITE_FAMILIES)
        elif tok in names:
            out.append(names[tok])
        else:
            raise UsageError(f"unknown family {tok!r}")
    return tuple(dict.fromkeys(out))


def sv_params(args) -> sv.SVParams:
    if args.preset:
        base = sv.PRESETS[args.preset]
    else:
        key = "table6-mult" if args.model == "mult" else "table6-heston"
        base = sv.PRESETS[key]
    return sv.SVParams(
        args.theta if args.theta is not None else base.theta,
        args.gamma if args.gamma is not None else base.gamma,
        args.kappa if args.kappa is not None else base.kappa,
        sv.Model(args.model) if args.model else base.model,
    )


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _config(args) -> dict:
    skip = {"func", "out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}


# -- command handlers ---------------------------------------------------------

def cmd_rv(args):
    inputs = {}
    prices = load_prices(args, inputs)
    return reports.rv_report(prices, args.n, period_of(args), _config(args)), inputs


def cmd_ratio(args):
    inputs = {}
    prices = load_prices(args, inputs)
    index = load_index(args, inputs)
    rep = reports.ratio_report(prices, index, args.n, args.alignment, period_of(args),
                               _families(args.families, CORE_FAMILIES), args.invert,
                               _config(args))
    return rep, inputs


def cmd_compare(args):
    inputs = {}
    prices = load_prices(args, inputs)
    index = load_index(args, inputs)
    rep = reports.compare_report(prices, index, args.n, args.scaling, args.alignment,
                                 period_of(args), _config(args))
    return rep, inputs


def cmd_vix(args):
    inputs = {}
    chains = []
    for i, path_arg in enumerate(args.chain):
        path, text = _read(path_arg, "chain")
        chains.extend(_with_context(path, lambda: parse_chain_text(text)))
        inputs[f"chain{i}"] = path
    chains.sort(key=lambda c: c.expiry_time_years)
    return reports.vix_report(chains, args.target_days, _config(args)), inputs


def cmd_simulate(args):
    rep = reports.simulate_report(sv_params(args), args.v0, args.dt, args.steps, args.seed,
                                  args.paths, args.sample_every, _config(args))
    return rep, {}


def cmd_varrv(args):
    horizons = _int_list(args.horizons)
    rep = reports.varrv_report(sv_params(args), horizons, args.paths, args.dt, args.seed,
                               config=_config(args))
    return rep, {}


def cmd_report(args):
    inputs = {}
    name = args.name
    cfg = _config(args)
    prices = load_prices(args, inputs)

    def indices():
        vix = load_index(args, inputs, args.vix, IndexKind.VIX, "vix") if args.vix else None
        vxo = load_index(args, inputs, args.vxo, IndexKind.VXO, "vxo") if args.vxo else None
        if args.index and vix is None and vxo is None:
            kind = IndexKind(args.kind.upper())
            s = load_index(args, inputs, args.index, kind, "index")
            vix, vxo = (s, None) if kind is IndexKind.VIX else (None, s)
        return vix, vxo

    if name == "table1":
        rep = reports.table1(prices, *indices(), n=args.n, config=cfg)
    elif name == "table2":
        rep = reports.table2(prices, *indices(), n=args.n, config=cfg)
    elif name in ("table3-concurrent", "table-preceding"):
        align = "concurrent" if name == "table3-concurrent" else "preceding"
        periods = {args.period: PERIODS[args.period]} if args.period else None
        rep = reports.ratio_fits(prices, *indices(), n=args.n, alignment=align,
                                 families=_families(args.families, CORE_FAMILIES),
                                 periods=periods, config=cfg, name=name)
    elif name == "fig2-slope":
        fams = _families(args.families, ()) if args.families else ()
        rep = reports.fig2_slope(prices, range(1, args.max_n + 1),
                                 _int_list(args.fit_n) if args.fit_n else (), fams,
                                 period_of(args), cfg)
    elif name == "fig13":
        rep = reports.fig13(prices, horizons=_int_list(args.horizons) if args.horizons else None,
                            split=args.split, period=period_of(args), config=cfg)
    else:
        rep = reports.fig14(prices, gamma=args.gamma if args.gamma is not None else 0.041,
                            horizons=_int_list(args.horizons) if args.horizons else None,
                            split=args.split, period=period_of(args), config=cfg)
    return rep, inputs


# -- parser -------------------------------------------------------------------

def _common_io(p):
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _data_args(p, index=True):
    p.add_argument("--prices", help="price CSV (Date, Close)")
    if index:
        p.add_argument("--index", help="index level CSV (Date, Close)")
        p.add_argument("--kind", choices=("vix", "vxo", "other"), default="vix")
    p.add_argument("--from", dest="start", help="first date (YYYY-MM-DD)")
    p.add_argument("--to", dest="end", help="last date (YYYY-MM-DD)")
    p.add_argument("--period", choices=sorted(PERIODS), help="named period")
    p.add_argument("--n", type=int, default=21, help="window length in trading days")
    p.add_argument("--date-column", default="Date")
    p.add_argument("--price-column", default="Close")
    p.add_argument("--index-column", default="Close")
    p.add_argument("--date-format", choices=("iso", "us"), default="iso")


def _sv_args(p):
    p.add_argument("--model", choices=("heston", "mult"))
    p.add_argument("--preset", choices=sorted(sv.PRESETS))
    p.add_argument("--theta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volstat", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rv", help="realized variance over n-day windows")
    _data_args(p, index=False)
    _common_io(p)
    p.set_defaults(func=cmd_rv)

    p = sub.add_parser("ratio", help="RV^2 / index^2 ratio sample and family fits")
    _data_args(p)
    p.add_argument("--alignment", choices=("concurrent", "preceding"), default="concurrent")
    p.add_argument("--families", help="comma list of families, or core/composite")
    p.add_argument("--invert", action="store_true", help="fit index^2 / RV^2 instead")
    _common_io(p)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("compare", help="two-sample KS of scaled RV^2 against index^2")
    _data_args(p)
    p.add_argument("--scaling", choices=reports.SCALING_MODES, default="empirical_mean_ratio")
    p.add_argument("--alignment", choices=("concurrent", "preceding"), default="concurrent")
    _common_io(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("vix", help="model-free implied variance from option chain files")
    p.add_argument("--chain", action="append", required=True, help="chain file (repeatable)")
    p.add_argument("--target-days", type=float, default=30.0)
    _common_io(p)
    p.set_defaults(func=cmd_vix)

    p = sub.add_parser("simulate", help="Euler paths of a stochastic-variance model")
    _sv_args(p)
    p.add_argument("--v0", type=float)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--sample-every", type=float, default=1.0, help="output spacing in days")
    _common_io(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("varrv", help="variance of realized variance: theory, reduced, Monte Carlo")
    _sv_args(p)
    p.add_argument("--horizons", default="1,5,10,21,42,63,126,252")
    p.add_argument("--paths", type=int, default=0, help="Monte Carlo paths (0 = theory only)")
    _common_io(p)
    p.set_defaults(func=cmd_varrv)

    p = sub.add_parser("report", help="named table/figure dataset")
    p.add_argument("name", choices=reports.NAMED_REPORTS)
    _data_args(p)
    p.add_argument("--vix", help="VIX level CSV")
    p.add_argument("--vxo", help="VXO level CSV")
    p.add_argument("--families", help="comma list of families, or core/composite")
    p.add_argument("--max-n", type=int, default=21)
    p.add_argument("--fit-n", help="fig2-slope: n values to fit families on")
    p.add_argument("--horizons", help="fig13/fig14: comma list of horizons in days")
    p.add_argument("--split", type=float, help="fig13/fig14: branch split in days")
    p.add_argument("--gamma", type=float, help="fig14: relaxation rate per day")
    _common_io(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        rep, inputs = args.func(args)
        for label, path in inputs.items():
            rep.add_input(label, path)
        text = render(rep, args.format)
    except UsageError as exc:
        print(f"volstat: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"volstat: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ComputationError, VolstatError, ValueError) as exc:
        print(f"volstat: computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
