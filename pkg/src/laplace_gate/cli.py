"""laplace-gate: check, invert, solve and catalog workflows.

Exit codes: 0 success/admissible, 1 usage/parse/runtime error,
2 inadmissible (or a failed round trip), 3 inconclusive or unverified,
4 tolerance unachievable under the truncation cap.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .admissibility import ADMISSIBLE, INADMISSIBLE, AdmissibilityReport, ProbeSettings, assess
from .core import DomainError, TimeSignal, TransformFunction, catalog
from .expr import (
    NotQuasiPolynomial,
    ParseError,
    laplace_of_terms,
    parse_expr,
    quasi_terms,
    tail_from_text,
    time_function,
    transform_function,
)
from .forward import signal_transform
from .hypersingular import DEFAULT_RESIDUAL_P, solve
from .inversion import (
    DEFAULT_NEGATIVE_T,
    InversionSettings,
    NotAdmissibleError,
    TruncationError,
    choose_truncation,
    invert,
    verify_conclusions,
)

log = logging.getLogger("laplace_gate")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INADMISSIBLE = 2
EXIT_INCONCLUSIVE = 3
EXIT_UNACHIEVABLE = 4

_VERDICT_EXIT = {ADMISSIBLE: EXIT_OK, INADMISSIBLE: EXIT_INADMISSIBLE}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- serialization -------------------------------------------------------

def _plain(obj):
    """Convert to JSON-safe builtins; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(obj.real), _plain(obj.imag)]
    if dataclasses.is_dataclass(obj):
        return _plain(dataclasses.asdict(obj))
    return obj


def dump_json(doc: dict) -> str:
    return json.dumps(_plain(doc), indent=2) + "\n"


def _num(x: float) -> str:
    # repr gives the shortest string that round-trips, always '.'-separated
    x = float(x)
    return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def signal_csv(signal: TimeSignal) -> str:
    err = signal.err_bound if signal.err_bound is not None else np.zeros(signal.t_grid.size)
    lines = ["t,re,im,err_bound"]
    for t, v, e in zip(signal.t_grid, signal.values, err):
        lines.append(",".join((_num(t), _num(v.real), _num(v.imag), _num(e))))
    return "\n".join(lines) + "\n"


def read_signal_csv(path: str) -> TimeSignal:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "t" not in rows[0]:
        raise UsageError(f"{path}: expected a CSV with a 't' column")
    t = np.array([float(r["t"]) for r in rows])
    if "re" in rows[0]:
        v = np.array([complex(float(r["re"]), float(r.get("im") or 0.0)) for r in rows])
    elif "f" in rows[0]:
        v = np.array([float(r["f"]) for r in rows], dtype=complex)
    else:
        raise UsageError(f"{path}: expected 're' (and optionally 'im') or 'f' columns")
    return TimeSignal(t, v)


def envelope(command: str, settings: dict, report: Optional[AdmissibilityReport], signals, residuals, verdict: str) -> dict:
    return {
        "tool_version": __version__,
        "command": command,
        "settings": settings,
        "report": report.to_dict() if report is not None else None,
        "signals": signals,
        "residuals": residuals,
        "verdict": verdict,
    }


# --- argument helpers -----------------------------------------------------

def parse_range(text: str) -> np.ndarray:
    """``start:stop:step`` inclusive of stop (to within step/1e6)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"bad range {text!r}: expected start:stop:step")
    try:
        a, b, h = (float(x) for x in parts)
    except ValueError:
        raise UsageError(f"bad range {text!r}: expected numbers") from None
    if not h > 0 or b < a:
        raise UsageError(f"bad range {text!r}: need step > 0 and stop >= start")
    n = int(math.floor((b - a) / h + 1e-6))
    t = a + h * np.arange(n + 1)
    # strip representation noise such as 0.30000000000000004
    return np.round(t, 12)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None


def _probe_settings(args) -> ProbeSettings:
    kw = {"seed": args.seed}
    if args.eta_max is not None:
        kw["eta_max"] = args.eta_max
    if args.eta_min is not None:
        kw["eta_min"] = args.eta_min
    try:
        return ProbeSettings(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _inversion_settings(args) -> InversionSettings:
    kw = {}
    if args.tol is not None:
        kw["tol"] = args.tol
    if args.h_max is not None:
        kw["H_max"] = args.h_max
    try:
        return InversionSettings(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _settings_doc(probe: Optional[ProbeSettings], inv: Optional[InversionSettings], **extra) -> dict:
    doc = {}
    if probe is not None:
        d = dataclasses.asdict(probe)
        d.pop("growth_s_grid")
        d.pop("growth_eta_grid")
        d["growth_s_range"] = [min(probe.growth_s_grid), max(probe.growth_s_grid)]
        d["growth_eta_range"] = [min(probe.growth_eta_grid), max(probe.growth_eta_grid)]
        doc["probe"] = d
    if inv is not None:
        doc["inversion"] = dataclasses.asdict(inv)
    doc.update(extra)
    return doc


class _Output:
    """Routes CSV and JSON to files or stdout per --out / --json."""

    def __init__(self, args, stdout):
        self.args = args
        self.stdout = stdout

    def emit(self, csv_text: Optional[str], json_doc: dict, sidecar: bool = True) -> None:
        """Write outputs; ``csv_text=None`` means a JSON-only result.

        With ``sidecar`` a JSON-only result also lands next to ``--out`` as
        ``.json`` (the CSV path itself is left untouched).
        """
        out = self.args.out
        js = dump_json(json_doc)
        if csv_text is None:
            if out and not sidecar:
                Path(out).write_text(js, encoding="utf-8", newline="\n")
                return
            if out:
                Path(out).with_suffix(".json").write_text(js, encoding="utf-8", newline="\n")
            self.stdout.write(js)
            return
        if out:
            Path(out).write_text(csv_text, encoding="utf-8", newline="\n")
            Path(out).with_suffix(".json").write_text(js, encoding="utf-8", newline="\n")
            if self.args.json:
                self.stdout.write(js)
        elif self.args.json:
            self.stdout.write(js)
        else:
            self.stdout.write(csv_text)


# --- commands -------------------------------------------------------------

def run_check(args, stdout) -> int:
    F = transform_function(args.expr)
    probe = _probe_settings(args)
    report = assess(F, probe)
    doc = envelope("check", _settings_doc(probe, None, expr=args.expr), report, [], [], report.verdict)
    _Output(args, stdout).emit(None, doc, sidecar=False)
    return _VERDICT_EXIT.get(report.verdict, EXIT_INCONCLUSIVE)


def run_invert(args, stdout) -> int:
    F = transform_function(args.expr)
    probe = _probe_settings(args)
    inv = _inversion_settings(args)
    t = parse_range(args.t)
    report = assess(F, probe)
    settings_doc = _settings_doc(probe, inv, expr=args.expr, t=args.t, force=args.force)
    if report.verdict != ADMISSIBLE and not args.force:
        doc = envelope("invert", settings_doc, report, [], [], report.verdict)
        _Output(args, stdout).emit(None, doc)
        print(f"refused: transform judged {report.verdict}; pass --force to invert anyway", file=sys.stderr)
        return _VERDICT_EXIT.get(report.verdict, EXIT_INCONCLUSIVE)
    signal = invert(F, t, inv, report, force=args.force)
    check = verify_conclusions(F, signal, DEFAULT_NEGATIVE_T, inv)
    summary = {
        "b_hat": report.b_hat,
        "c_hat": report.c_hat,
        "H": signal.info["H"],
        "achieved_tol": signal.info["achieved_tol"],
        "low_confidence": signal.info["low_confidence"],
        "sup_estimate": signal.sup_estimate,
        "conclusions": check.to_dict(),
    }
    verdict = report.verdict if report.verdict != ADMISSIBLE else ("verified" if check.all_ok else "unverified")
    doc = envelope("invert", settings_doc, report, [summary], [], verdict)
    _Output(args, stdout).emit(signal_csv(signal), doc)
    if report.verdict == ADMISSIBLE and not check.all_ok:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _source_transform(args):
    """Transform of the right-hand side f, from --F, --f or --f-csv."""
    given = [x for x in (args.F, args.f, args.f_csv) if x is not None]
    if len(given) != 1:
        raise UsageError("give exactly one of --f, --F or --f-csv")
    if args.F is not None:
        return transform_function(args.F), {"F": args.F}
    if args.f is not None:
        node = parse_expr(args.f, "t")
        try:
            terms = quasi_terms(node)
            return laplace_of_terms(terms), {"f": args.f, "transform": "closed-form"}
        except NotQuasiPolynomial as exc:
            if args.tail is None:
                raise UsageError(f"--f {args.f!r} has no closed-form transform ({exc}); sample it via --f-csv with --tail") from None
            tail = tail_from_text(args.tail)
            horizon = tail.horizon(0.0, 1e-10) if tail.converges_at(0.0) else 50.0
            grid = np.linspace(0.0, horizon, int(horizon / 0.01) + 1)
            sig = TimeSignal(grid, time_function(args.f)(grid), tail_bound=tail)
            return _sampled_transform(sig), {"f": args.f, "transform": "sampled", "tail": args.tail}
    sig = read_signal_csv(args.f_csv)
    if args.tail is None:
        raise UsageError("--f-csv needs a --tail declaration")
    sig.tail_bound = tail_from_text(args.tail)
    return _sampled_transform(sig), {"f_csv": args.f_csv, "transform": "sampled", "tail": args.tail}


def _sampled_transform(sig: TimeSignal):
    def F(p):
        p = np.asarray(p, dtype=complex)
        return signal_transform(sig, p.ravel()).reshape(p.shape)

    return TransformFunction(F, label="L[samples]")


def run_solve(args, stdout) -> int:
    lam = args.lam
    if lam == 0 or not abs(lam) < 2:
        raise UsageError("lambda must be nonzero, |lambda|<2")
    F_f, source = _source_transform(args)
    probe = _probe_settings(args)
    inv = _inversion_settings(args)
    t = parse_range(args.t)
    p_samples = _parse_floats(args.p_samples)
    settings_doc = _settings_doc(
        probe, inv, **source, **{"lambda": lam, "t": args.t, "p_samples": p_samples, "residual_tol": args.residual_tol}
    )
    try:
        res = solve(F_f, lam, t, inv, p_samples, probe, args.residual_tol)
    except NotAdmissibleError as exc:
        doc = envelope("solve", settings_doc, exc.report, [], [], exc.report.verdict)
        _Output(args, stdout).emit(None, doc)
        print(f"refused: {exc}", file=sys.stderr)
        return _VERDICT_EXIT.get(exc.report.verdict, EXIT_INCONCLUSIVE)
    residuals = [
        {"p": p, "residual": r, "bound": b} for (p, r), b in zip(res.residuals, res.residual_bounds)
    ]
    verdict = "verified" if res.verified else "unverified"
    doc = envelope("solve", settings_doc, res.Q_report, [res.summary()], residuals, verdict)
    _Output(args, stdout).emit(signal_csv(res.q), doc)
    return EXIT_OK if res.verified else EXIT_INCONCLUSIVE


def run_pairs(args, stdout) -> int:
    pairs = catalog()
    if not args.roundtrip:
        rows = [
            {
                "name": pr.name,
                "f": pr.f_text,
                "F": pr.F_text,
                "b_true": pr.b_true,
                "sup_true": pr.sup_true,
                "admissible": pr.admissible,
                "note": pr.note,
            }
            for pr in pairs
        ]
        if args.json:
            stdout.write(dump_json(envelope("pairs", {}, None, rows, [], "listed")))
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["name", "f", "F", "b_true", "admissible"])
            for r in rows:
                w.writerow([r["name"], r["f"], r["F"], _num(r["b_true"]), "yes" if r["admissible"] else "no"])
            stdout.write(buf.getvalue())
        return EXIT_OK

    tol = args.tol if args.tol is not None else 1e-4
    inv = _inversion_settings(args)
    inv = dataclasses.replace(inv, tol=tol)
    probe = _probe_settings(args)
    t = parse_range(args.t)
    plan = []
    for pr in pairs:
        if not pr.admissible:
            continue
        report = assess(pr.F_closed, probe)
        try:
            H, achieved = choose_truncation(report, inv)
        except TruncationError:
            H, achieved = math.nan, math.inf
        plan.append((pr, report, H, achieved))
    capped = [pr.name for pr, _, _, achieved in plan if not achieved <= inv.tol / 2 * (1 + 1e-9)]
    if capped:
        print(f"tolerance unachievable with H_max={inv.H_max:g}: {', '.join(capped)}", file=sys.stderr)
        return EXIT_UNACHIEVABLE
    rows = []
    ok = True
    for pr, report, H, achieved in plan:
        if report.verdict != ADMISSIBLE:
            rows.append({"name": pr.name, "verdict": report.verdict, "max_error": None, "H": H, "pass": False})
            ok = False
            continue
        sig = invert(pr.F_closed, t, inv, report)
        err = float(np.max(np.abs(sig.values - pr.f_closed(t))))
        passed = err <= tol
        ok &= passed
        rows.append({"name": pr.name, "verdict": report.verdict, "max_error": err, "H": H, "pass": passed})
    if args.json:
        stdout.write(dump_json(envelope("pairs", _settings_doc(probe, inv, t=args.t), None, rows, [], "pass" if ok else "fail")))
    else:
        stdout.write("name,max_error,H,pass\n")
        for r in rows:
            me = "nan" if r["max_error"] is None else _num(r["max_error"])
            stdout.write(f"{r['name']},{me},{_num(r['H'])},{'yes' if r['pass'] else 'no'}\n")
    return EXIT_OK if ok else EXIT_INADMISSIBLE


# --- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="inversion tolerance (default 1e-4)")
    common.add_argument("--seed", type=int, default=0, help="seed for the analyticity loops")
    common.add_argument("--eta-min", type=float, default=None, help="start of the axis decay window")
    common.add_argument("--eta-max", type=float, default=None, help="end of the axis decay window")
    common.add_argument("--h-max", type=float, default=None, help="cap on the truncation frequency")
    common.add_argument("--json", action="store_true", help="write the JSON report to stdout")
    common.add_argument("--out", default=None, help="output file (CSV; JSON sidecar next to it)")
    common.add_argument("--force", action="store_true", help="invert even if not judged admissible")

    parser = _Parser(prog="laplace-gate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="assess admissibility of F(p)")
    p.add_argument("expr", help="transform expression in p")

    p = sub.add_parser("invert", parents=[common], help="invert F(p) on a t grid")
    p.add_argument("expr", help="transform expression in p")
    p.add_argument("--t", default="0:10:0.1", help="time grid start:stop:step")

    p = sub.add_parser("solve", parents=[common], help="solve the Volterra equation of order lambda")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="kernel order, 0 < |lambda| < 2")
    p.add_argument("--f", default=None, help="right-hand side f(t) as an expression in t")
    p.add_argument("--F", default=None, help="right-hand side given by its transform in p")
    p.add_argument("--f-csv", default=None, help="sampled right-hand side (columns t,f or t,re,im)")
    p.add_argument("--tail", default=None, help="tail envelope of f, e.g. '2*exp(-0.5*t)'")
    p.add_argument("--t", default="0:10:0.05", help="time grid start:stop:step")
    p.add_argument(
        "--p-samples",
        default=",".join(str(x) for x in DEFAULT_RESIDUAL_P),
        help="comma-separated points (Re p > 0) for the transform-domain residual",
    )
    p.add_argument("--residual-tol", type=float, default=5e-3, help="largest accepted residual magnitude")

    p = sub.add_parser("pairs", parents=[common], help="list the reference catalog or run round trips")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--list", action="store_true")
    g.add_argument("--roundtrip", action="store_true")
    p.add_argument("--t", default="0:10:0.05", help="round-trip time grid")
    return parser


def _glue_negative_values(argv: Sequence[str]) -> list[str]:
    # "--t -2:0:0.5" would otherwise be read as an unknown option
    out = []
    it = iter(argv)
    for a in it:
        if a in ("--t", "--tail", "--f", "--F", "--p-samples"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-"):
                out.append(f"{a}={nxt}")
                continue
            out.append(a)
            if nxt is not None:
                out.append(nxt)
            continue
        out.append(a)
    return out


_COMMANDS = {"check": run_check, "invert": run_invert, "solve": run_solve, "pairs": run_pairs}


def main(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(_glue_negative_values(argv))
        return _COMMANDS[args.command](args, stdout)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # runtime failures still map to a defined exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
