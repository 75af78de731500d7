"""Command-line front end.

Every command builds a JSON-able report first; the human-readable output
is rendered from that report.  Exit codes: 0 success or property holds,
2 property refuted or verification failed, 3 inconclusive, 1 usage or
internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .backtest import TestInconclusive, backward_flatness_test
from .flatout import (
    DerivationFailed,
    VerificationFailed,
    candidate_from_dict,
    derive_forward_flat_output,
    verify_flat_output,
)
from .geomtest import forward_flatness_test
from .jacrank import (
    build_extended_jacobian,
    check_mirror_correspondence,
    check_rank_conditions,
    jacobian_columns,
    mirror_parameterization,
)
from .sysmodel import InvalidSystem, InversionError, RankError, build_associated, load_system
from .trajcheck import check_correspondence, check_parameterization_roundtrip

OK, INTERNAL, REFUTED, INCONCLUSIVE = 0, 1, 2, 3
SCHEMA = 1


class _Timer:
    def __init__(self, enabled):
        self.enabled = enabled
        self.data = {}

    def __call__(self, key):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                if timer.enabled:
                    timer.data[key] = round(time.perf_counter() - self.t0, 4)

        return _Ctx()


def _default_seed():
    raw = os.environ.get("FLATNESS_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"FLATNESS_SEED must be an integer, got {raw!r}")


def _load(path, entry):
    """Load a system into ``entry``; returns the system or an exit code."""
    try:
        s = load_system(Path(path))
    except OSError as exc:
        entry["error"] = f"cannot read {path}: {exc.strerror or exc}"
        return INTERNAL
    except json.JSONDecodeError as exc:
        entry["error"] = f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        return INTERNAL
    except RankError as exc:
        entry["validation"] = {"ok": False, "condition": exc.condition, "rank": exc.rank, "required": exc.required, "message": str(exc)}
        return REFUTED
    except InversionError as exc:
        entry["validation"] = {"ok": False, "message": str(exc)}
        return INCONCLUSIVE
    except InvalidSystem as exc:
        entry["validation"] = {"ok": False, "message": str(exc)}
        return REFUTED
    entry["name"] = s.name
    entry["validation"] = {"ok": True, "n": s.n, "m": s.m}
    return s


def _param_block(s, p, mode, seed, trajectories=True):
    rank = check_rank_conditions(p, mode)
    cand = p.candidate
    q1, q2 = cand.windows(s)
    out = p.to_dict()
    out["Q1"], out["Q2"] = list(q1), list(q2)
    out["jacobian_columns"] = [str(v) for v in jacobian_columns(p)]
    out["ranks"] = rank.to_dict()
    if trajectories:
        out["roundtrip_check"] = check_parameterization_roundtrip(s, p, N=10, seeds=10, seed=seed).to_dict()
    return out


def _forward(s, args, timer):
    with timer("forward"):
        rec = forward_flatness_test(s)
    block = rec.to_dict()
    if args.derive and rec.forward_flat:
        with timer("forward_derive"):
            try:
                cand, p = derive_forward_flat_output(s, rec, max_degree=args.max_degree)
            except DerivationFailed as exc:
                block["output"] = {"derived": False, "reason": str(exc)}
            else:
                block["output"] = {"derived": True, **_param_block(rec.system, p, "forward", args.seed)}
    return block, rec.forward_flat


def _backward(s, args, timer):
    with timer("backward"):
        v = backward_flatness_test(s, derive=args.derive, max_degree=args.max_degree)
    rec = v.forward_record
    block = {
        "verdict": v.verdict,
        "associated": v.associated.to_dict(),
        "dims": list(rec.dims),
        "k_bar": rec.k_bar,
        "E": [e.to_strings() for e in rec.E],
        "D": [d.to_strings() for d in rec.D],
        "warnings": list(rec.warnings),
    }
    if args.derive and v.backward_flat:
        if v.parameterization is None:
            block["output"] = {"derived": False, "reason": v.derivation_error}
        else:
            with timer("backward_checks"):
                out = {"derived": True, **_param_block(v.parameterization.system, v.parameterization, "backward", args.seed)}
                ph = v.associated_parameterization
                out["associated_output"] = {
                    **ph.to_dict(),
                    "ranks": check_rank_conditions(ph, "forward").to_dict(),
                }
                mirrored = mirror_parameterization(v.parameterization, v.associated, ph.names)
                out["mirror"] = {
                    "parameterization_matches": (mirrored.F_x, mirrored.F_u, mirrored.F_g) == (ph.F_x, ph.F_u, ph.F_g),
                    "jacobian_matches": check_mirror_correspondence(v.parameterization, ph),
                }
                out["correspondence_check"] = check_correspondence(
                    s, N=10, seeds=20, seed=args.seed, associated=v.associated
                ).to_dict()
            block["output"] = out
    return block, v.backward_flat


def run_test(path, args):
    timer = _Timer(args.timings)
    entry = {"file": str(path)}
    s = _load(path, entry)
    if isinstance(s, int):
        return entry, s
    held, inconclusive = False, False
    modes = ["forward", "backward"] if args.mode == "both" else [args.mode]
    for mode in modes:
        try:
            block, ok = (_forward if mode == "forward" else _backward)(s, args, timer)
        except (TestInconclusive, InversionError) as exc:
            entry[mode] = {"verdict": "inconclusive", "reason": str(exc)}
            inconclusive = True
            continue
        entry[mode] = block
        held = held or ok
    if timer.enabled:
        entry["timings"] = timer.data
    if held:
        return entry, OK
    return entry, INCONCLUSIVE if inconclusive else REFUTED


def run_validate(path, args):
    entry = {"file": str(path)}
    s = _load(path, entry)
    return entry, s if isinstance(s, int) else OK


def run_verify(path, args):
    entry = {"file": str(path), "candidate_file": str(args.output)}
    s = _load(path, entry)
    if isinstance(s, int):
        return entry, s
    try:
        cand = candidate_from_dict(json.loads(Path(args.output).read_text(encoding="utf-8")), s)
    except (OSError, json.JSONDecodeError, InvalidSystem) as exc:
        entry["error"] = f"bad candidate file: {exc}"
        return entry, INTERNAL
    entry["candidate"] = cand.to_strings()
    try:
        p = verify_flat_output(s, cand, args.max_back, args.max_fwd)
    except VerificationFailed as exc:
        entry["verification"] = {
            "ok": False,
            "status": "refuted" if exc.refuted else "not-verified",
            "reason": str(exc),
            "residual": [str(e) for e in exc.residual],
        }
        return entry, REFUTED
    except InversionError as exc:
        entry["verification"] = {"ok": False, "status": "inconclusive", "reason": str(exc)}
        return entry, INCONCLUSIVE
    entry["verification"] = {"ok": True, **_param_block(p.system, p, "general", args.seed)}
    entry["verification"]["jacobian"] = [[str(e) for e in row] for row in build_extended_jacobian(p).rows]
    return entry, OK


def run_associated(path, args):
    entry = {"file": str(path)}
    s = _load(path, entry)
    if isinstance(s, int):
        return entry, s
    try:
        entry["associated"] = build_associated(s).to_dict()
    except InversionError as exc:
        entry["error"] = str(exc)
        return entry, INCONCLUSIVE
    return entry, OK


def run_simcheck(path, args):
    entry = {"file": str(path)}
    s = _load(path, entry)
    if isinstance(s, int):
        return entry, s
    try:
        res = check_correspondence(s, N=args.horizon, seeds=args.seeds, seed=args.seed)
    except InversionError as exc:
        entry["error"] = str(exc)
        return entry, INCONCLUSIVE
    entry["correspondence_check"] = res.to_dict()
    return entry, OK if res.ok else REFUTED


COMMANDS = {
    "validate": run_validate,
    "test": run_test,
    "verify": run_verify,
    "associated": run_associated,
    "simcheck": run_simcheck,
}


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for refuted properties
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(INTERNAL, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dflat", description="Forward and backward flatness of discrete-time systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("files", nargs="+", type=Path, help="system files (JSON)")
        p.add_argument("--json", action="store_true", help="emit the JSON report")
        p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
        if seed:
            p.add_argument("--seed", type=int, default=None, help="PRNG seed (default: $FLATNESS_SEED or 0)")

    common(sub.add_parser("validate", help="check a system file"), seed=False)
    p = sub.add_parser("test", help="run the flatness tests")
    common(p)
    p.add_argument("--mode", choices=["forward", "backward", "both"], default="both")
    p.add_argument("--derive", action="store_true", help="derive, verify and check a flat output")
    p.add_argument("--max-degree", type=int, default=3)
    p = sub.add_parser("verify", help="verify a flat-output candidate")
    common(p)
    p.add_argument("--output", type=Path, required=True, help="candidate file (JSON)")
    p.add_argument("--max-back", type=int, default=None)
    p.add_argument("--max-fwd", type=int, default=None)
    common(sub.add_parser("associated", help="print the associated system"), seed=False)
    p = sub.add_parser("simcheck", help="trajectory correspondence check")
    common(p)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--seeds", type=int, default=100)
    return parser


def _render(report) -> str:
    lines = []
    for entry in report["results"]:
        lines.append(f"== {entry.get('name', entry['file'])} ({entry['file']})")
        if "error" in entry:
            lines.append(f"error: {entry['error']}")
        val = entry.get("validation")
        if val is not None:
            if val["ok"]:
                lines.append("valid: yes")
            else:
                cond = f"{val['condition']}: " if "condition" in val else ""
                lines.append(f"valid: no ({cond}{val['message']})")
        for mode in ("forward", "backward"):
            block = entry.get(mode)
            if block is None:
                continue
            verdict = block["verdict"]
            word = {"forward-flat": "YES", "backward-flat": "YES", "inconclusive": "INCONCLUSIVE"}.get(verdict, "NO")
            dims = block.get("dims")
            lines.append(f"{mode}: {word}" + (f"  dims={tuple(dims)} k_bar={block['k_bar']}" if dims else ""))
            out = block.get("output")
            if out is not None:
                if out["derived"]:
                    lines.append(f"  y = ({', '.join(out['outputs'])})  R1={tuple(out['R1'])} R2={tuple(out['R2'])}")
                    r = out["ranks"]
                    ranks = (r["rank_x_deepest"], r["rank_g_deepest"], r["rank_x_top"], r["rank_u_top"])
                    lines.append(f"  ranks={ranks} top_ranks_equal={r['ranks_equal']}")
                else:
                    lines.append(f"  flat output not derived: {out['reason']}")
        ver = entry.get("verification")
        if ver is not None:
            if ver["ok"]:
                lines.append(f"verified: R1={tuple(ver['R1'])} R2={tuple(ver['R2'])}")
                for name, e in zip(("x", "u"), (ver["F_x"], ver["F_u"])):
                    lines.append(f"  F_{name} = [{', '.join(e)}]")
                r = ver["ranks"]
                lines.append(f"  ranks=({r['rank_x_deepest']}, {r['rank_g_deepest']}, {r['rank_x_top']}, {r['rank_u_top']})")
            else:
                lines.append(f"verification failed ({ver['status']}): {ver['reason']}")
        if "associated" in entry and "forward" not in entry:
            lines.append(json.dumps(entry["associated"], indent=2))
        if "correspondence_check" in entry:
            c = entry["correspondence_check"]
            lines.append(f"correspondence: {'pass' if c['ok'] else 'FAIL'} (N={c['N']}, seeds={c['seeds']}, seed={c['seed']})")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", 0) is None:
        args.seed = _default_seed()
    if args.command == "verify" and len(args.files) != 1:
        parser.error("verify takes exactly one system file")
    run = COMMANDS[args.command]
    report = {"schema": SCHEMA, "tool": "dflat", "version": __version__, "command": args.command}
    if hasattr(args, "seed"):
        report["seed"] = args.seed
    results, codes = [], []
    for path in args.files:
        try:
            entry, code = run(path, args)
        except Exception as exc:  # report, do not crash the batch
            entry, code = {"file": str(path), "error": f"internal error: {type(exc).__name__}: {exc}"}, INTERNAL
        entry["exit_code"] = code
        results.append(entry)
        codes.append(code)
    report["results"] = results
    if args.command == "associated" and not args.json and len(results) == 1 and "associated" in results[0]:
        print(json.dumps(results[0]["associated"], indent=2))
    elif args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(_render(report))
    for worst in (INTERNAL, REFUTED, INCONCLUSIVE):
        if worst in codes:
            return worst
    return OK


if __name__ == "__main__":
    sys.exit(main())
