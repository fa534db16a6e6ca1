"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 size cap exceeded.
Diagnostics go to standard error; results go to standard output or the
requested files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import reference
from .bounds import model_bounds, wolf_estimate
from .cycles import census
from .decode import ber_sim, format_ber_csv
from .errors import CapError, GmError
from .extract import (
    alg1_reduce_tanner,
    alg3_extract_gtg,
    alg4_extract_gm,
    write_ext_meta,
)
from .fixtures import fixtures, get_fixture
from .gf2codes import BinaryMatrix, LinearCode, format_alist, parse_alist, read_alist, write_alist
from .model import (
    GraphicalModel,
    build_gtg,
    build_tanner_graph,
    format_gmf,
    parse_gmf,
    realized_code,
    verify_qm,
    write_gmf,
)
from .parallel import default_workers
from .transform import format_trace, read_trace, replay

log = logging.getLogger("gmcodes")

FORMATS = {"alist": 1, "gmf": 1, "trace": 1, "ext-meta": 1}

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _version() -> str:
    try:
        v = version("artifact")
    except PackageNotFoundError:  # pragma: no cover - running from a source tree
        v = "0+unknown"
    fmts = ", ".join(f"{k} {v}" for k, v in FORMATS.items())
    return f"gmcodes {v} (formats: {fmts})"


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise GmError(f"cannot read {path}: {exc.strerror}") from None


def _load_matrix(args) -> BinaryMatrix:
    if getattr(args, "fixture", None):
        return get_fixture(args.fixture).parity_check
    if not args.inp:
        raise UsageError("give --in or --fixture")
    return parse_alist(_read_text(args.inp))


def _load_any(path: str) -> GraphicalModel | BinaryMatrix:
    """A model for GMF files, otherwise a parity-check matrix read as alist."""
    text = _read_text(path)
    if text.lstrip().startswith("gmf"):
        return parse_gmf(text)
    return parse_alist(text)


def _as_model(obj) -> GraphicalModel:
    return obj if isinstance(obj, GraphicalModel) else build_tanner_graph(obj)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _parse_snrs(spec: str) -> list[float]:
    """``a:step:b`` (inclusive), or a comma-separated list."""
    try:
        if ":" in spec:
            a, step, b = (float(x) for x in spec.split(":"))
            if step <= 0:
                raise ValueError
            count = int(np.floor((b - a) / step + 1e-9)) + 1
            return [round(a + i * step, 10) for i in range(count)]
        return [float(x) for x in spec.split(",") if x]
    except ValueError:
        raise UsageError(f"bad SNR list {spec!r}") from None


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


def cmd_count_cycles(args) -> int:
    obj = _load_any(args.inp)
    print(census(obj, args.max_len).csv_row())
    return EXIT_OK


def cmd_extract(args) -> int:
    h = _load_matrix(args)
    if args.kind == "tg":
        h2, trace = alg1_reduce_tanner(h, workers=args.workers)
        _write(args.out, format_alist(h2))
        if args.trace:
            _write(args.trace, format_trace(trace))
        log.info("N4 %s", trace.checkpoints.get(len(trace)))
        return EXIT_OK
    if args.kind == "gtg":
        hx, ext, trace = alg3_extract_gtg(h)
        _write(args.out, format_alist(hx))
        if args.ext_meta:
            write_ext_meta(ext, args.ext_meta)
        if args.trace:
            _write(args.trace, format_trace(trace))
        print(f"degree={ext.degree}", file=sys.stderr)
        return EXIT_OK
    if args.max_m is None:
        raise UsageError("extract gm needs --max-m")
    if args.reduce:
        h, _ = alg1_reduce_tanner(h, workers=args.workers)
    gm, trace = alg4_extract_gm(build_tanner_graph(h), args.max_m, workers=args.workers)
    _write(args.out, format_gmf(gm))
    if args.trace:
        _write(args.trace, format_trace(trace))
    return EXIT_OK


def cmd_bounds(args) -> int:
    gm = _as_model(_load_any(args.inp))
    rs = args.r or None
    rep = model_bounds(gm, args.m, args.t_lower, rs)
    print("\n".join(rep.lines()))
    return EXIT_OK


def cmd_sim(args) -> int:
    snrs = _parse_snrs(args.snr)
    gm = _as_model(_load_any(args.inp))
    recs = ber_sim(
        gm,
        snrs,
        min_bit_errors=args.min_errors,
        max_bits=args.max_bits,
        iterations=args.iters,
        seed=args.seed,
        workers=args.workers,
    )
    _write(args.out, format_ber_csv(recs))
    return EXIT_OK


def cmd_transform(args) -> int:
    """Replay a trace on a model; an alist input is first read as its Tanner graph."""
    gm = _as_model(_load_any(args.inp))
    out = replay(gm, read_trace(args.replay)) if args.replay else gm
    _write(args.out, format_gmf(out))
    return EXIT_OK


def cmd_verify(args) -> int:
    gm = parse_gmf(_read_text(args.model))
    h = parse_alist(_read_text(args.code))
    code = realized_code(gm)
    target = LinearCode.from_parity(h, gm.visibles)
    if not code.same_code(target):
        print("realized code differs", file=sys.stderr)
        return EXIT_DATA
    print("realized code matches")
    if args.m is not None:
        rep = verify_qm(gm, args.m)
        print(f"m={rep.m} limit={args.m} {'ok' if rep.ok else 'exceeded'}")
        if not rep.ok:
            return EXIT_DATA
    return EXIT_OK


def cmd_table1(args) -> int:
    names = list(reference.GTG_DEGREES) if args.code == "all" else [args.code]
    print("code,degree,reference_hc,reference_km,reference_sv,band")
    for name in names:
        if name not in reference.GTG_DEGREES:
            raise GmError(f"no reference degrees for {name!r}")
        _, ext, _ = alg3_extract_gtg(get_fixture(name).parity_check)
        ref = reference.GTG_DEGREES[name]
        grade = reference.band(ext.degree, ref["hc"])
        print(f"{name},{ext.degree},{ref['hc']},{ref['km']},{ref['sv']},{grade}")
    return EXIT_OK


def _row(label: str, c, ref) -> str:
    got = (c.n(4), c.n(6), c.n(8))
    if ref is None:
        grade, ref_txt = "-", "-,-,-"
    else:
        key = 0 if ref[0] else 1  # grade on N4, or on N6 when N4 is zero
        grade = reference.band(got[key], ref[key])
        ref_txt = ",".join(str(x) for x in ref)
    return f"{label},{got[0]},{got[1]},{got[2]},{ref_txt},{grade}"


def cmd_table3(args) -> int:
    name = args.code
    refs = reference.CENSUS.get(name, {})
    h = get_fixture(name).parity_check
    print("model,N4,N6,N8,ref_N4,ref_N6,ref_N8,band")
    print(_row("tg", census(h, 8), refs.get("tg")))
    h2, _ = alg1_reduce_tanner(h, workers=args.workers)
    print(_row("tg_reduced", census(h2, 8), refs.get("tg_reduced")))
    hx, ext, _ = alg3_extract_gtg(h2)
    print(_row(f"gtg(degree={ext.degree})", census(hx, 8), refs.get("gtg")))
    ms = args.m or sorted(int(k[1:]) for k in refs if k.startswith("m"))
    tg = build_tanner_graph(h2)
    for m in ms:
        gm, _ = alg4_extract_gm(tg, m, workers=args.workers)
        print(_row(f"m{m}", census(gm, 8), refs.get(f"m{m}")))
    return EXIT_OK


def cmd_fixtures(args) -> int:
    if args.show:
        f = get_fixture(args.show)
        sys.stdout.write(format_alist(f.parity_check))
        return EXIT_OK
    for f in fixtures().values():
        print(f"{f.name}\tn={f.n}\tk={f.k}\td={f.d}\t{f.provenance}")
    return EXIT_OK


def cmd_wolf(args) -> int:
    print(wolf_estimate(args.n, args.k, args.bits))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--workers", type=int, default=default_workers(), help="worker processes")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    p = _Parser(prog="gmcodes", description="Graphical models of binary linear codes.")
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    s = sub.add_parser("count-cycles", parents=[common], help="girth and short-cycle counts")
    s.add_argument("--in", dest="inp", required=True, help="GMF model or alist matrix")
    s.add_argument("--max-len", type=int, default=8, choices=[4, 6, 8])
    s.set_defaults(func=cmd_count_cycles)

    s = sub.add_parser("extract", parents=[common], help="greedy model extraction")
    s.add_argument("kind", choices=["tg", "gtg", "gm"])
    s.add_argument("--in", dest="inp", help="alist parity-check matrix")
    s.add_argument("--fixture", help="built-in matrix instead of --in")
    s.add_argument("--out", help="output file (default stdout)")
    s.add_argument("--trace", help="write the extraction trace here")
    s.add_argument("--ext-meta", help="gtg: write partial-parity definitions here")
    s.add_argument("--max-m", type=int, help="gm: complexity limit m*")
    s.add_argument("--reduce", action="store_true", help="gm: apply row operations first")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("bounds", parents=[common], help="tree-inducing cut bounds")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--m", type=int, help="alphabet exponent (default: measured)")
    s.add_argument("--t-lower", type=int, help="assumed tree complexity")
    s.add_argument("--r", type=int, action="append", help="cut size for an m threshold (repeatable)")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("sim", parents=[common], help="BER simulation, BPSK over AWGN")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--snr", required=True, help="Eb/N0 list in dB: a:step:b or a,b,c")
    s.add_argument("--iters", type=int, default=50)
    s.add_argument("--min-errors", type=int, default=100)
    s.add_argument("--max-bits", type=float, default=1e6)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("transform", parents=[common], help="replay a trace, or convert alist to GMF")
    s.add_argument("--in", dest="inp", required=True, help="GMF model or alist matrix")
    s.add_argument("--replay", help="trace to apply (omit to convert only)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("verify", parents=[common], help="check a model realizes a code")
    s.add_argument("--model", required=True)
    s.add_argument("--code", required=True, help="alist parity-check matrix")
    s.add_argument("--m", type=int, help="also check the model is 2^m-ary")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("table1", parents=[common], help="partial-parity degrees against reference values")
    s.add_argument("--code", default="all", choices=["all", *reference.GTG_DEGREES])
    s.set_defaults(func=cmd_table1)

    s = sub.add_parser("table3", parents=[common], help="short cycles of extracted models")
    s.add_argument("--code", default="ebch32_21", choices=sorted(reference.CENSUS))
    s.add_argument("--m", type=int, action="append", help="2^m-ary models to extract (repeatable)")
    s.set_defaults(func=cmd_table3)

    s = sub.add_parser("fixtures", parents=[common], help="list built-in codes")
    s.add_argument("--show", help="print this fixture's parity-check matrix as alist")
    s.set_defaults(func=cmd_fixtures)

    s = sub.add_parser("wolf", parents=[common], help="redundancy-based tree complexity estimate")
    s.add_argument("n", type=int)
    s.add_argument("k", type=int)
    s.add_argument("--bits", type=int, default=1, help="bits per symbol")
    s.set_defaults(func=cmd_wolf)
    return p


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"gmcodes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("gmcodes: error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gmcodes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapError as exc:
        print(f"gmcodes: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (GmError, ValueError) as exc:
        print(f"gmcodes: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
