"""Command-line front end: check VMT invariant problems, check NRA
formulas, and run the benchmark harness.

Exit codes: 0 SAFE/unsat, 1 UNSAFE/sat, 2 UNKNOWN, 3 usage or internal
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import backend, cegar, nra, refinement, terms, vmt
from .cegar import CegarConfig
from .nra import NraConfig


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nlmc",
        description="Invariant checking for nonlinear real transition systems "
                    "via abstraction to linear arithmetic with uninterpreted "
                    "functions.")
    sub = p.add_subparsers(dest="mode", required=True)

    def common(q):
        q.add_argument("--solver-cmd", default=None,
                       help="external LRA+EUF solver command (default: the "
                            "bundled solver process)")
        q.add_argument("--nra-solver-cmd", default=None,
                       help="optional complete NRA solver command (QF_NRA, "
                            "SMT-LIB2)")
        q.add_argument("--model-finder", choices=["eval", "lines", "nra"],
                       default="lines")
        q.add_argument("--timeout", type=float, default=600.0,
                       help="wall-clock budget in seconds")
        q.add_argument("--max-refinements", type=int, default=100)
        q.add_argument("--all-tangent-points", action="store_true",
                       help="also instantiate the literal reciprocal tangent "
                            "points")
        q.add_argument("--rounding-threshold", type=int,
                       default=refinement.ROUNDING_THRESHOLD_DEFAULT,
                       help="numerator/denominator size that triggers "
                            "floor/ceil tangent-point splitting")
        q.add_argument("--no-sign-axioms", action="store_true",
                       help="drop the static sign axioms")
        q.add_argument("--commutativity-axioms", action="store_true",
                       help="emit the (structurally reflexive) commutativity "
                            "instances for fidelity measurements")
        q.add_argument("--dump-lemmas", metavar="PATH", default=None,
                       help="append every refinement lemma to this log")
        q.add_argument("--stats", action="store_true",
                       help="print run statistics to stderr")

    def vmt_flags(q):
        q.add_argument("--engine",
                       choices=["bmc", "kind", "kind-houdini", "external"],
                       default="kind-houdini")
        q.add_argument("--engine-cmd", default=None,
                       help="external abstract checker: argv gets a VMT path; "
                            "stdout 'safe' | 'unsafe <k>' | 'unknown'")
        q.add_argument("--max-k", type=int, default=50)
        q.add_argument("--constrain-mode", choices=["none", "bool", "full"],
                       default="none")
        q.add_argument("--axioms-everywhere", action="store_true",
                       help="also add init-frame axioms to the transition "
                            "relation")
        q.add_argument("--no-reduce-axioms", action="store_true",
                       help="skip the unsat-core axiom filter")

    cv = sub.add_parser("check-vmt", help="check a .vmt invariant problem")
    cv.add_argument("file")
    common(cv)
    vmt_flags(cv)

    cs = sub.add_parser("check-smt", help="check satisfiability of a .smt2 "
                                          "NRA formula")
    cs.add_argument("file")
    cs.add_argument("--max-iterations", type=int, default=100)
    common(cs)

    b = sub.add_parser("bench", help="run every .vmt/.smt2 file in a directory")
    b.add_argument("dir")
    b.add_argument("--jobs", type=int, default=1)
    common(b)
    vmt_flags(b)
    b.add_argument("--max-iterations", type=int, default=100)
    return p


def _cegar_config(args) -> CegarConfig:
    return CegarConfig(
        engine=args.engine,
        engine_cmd=args.engine_cmd,
        solver_cmd=args.solver_cmd or backend.DEFAULT_SOLVER_CMD,
        nra_solver_cmd=args.nra_solver_cmd,
        model_finder=args.model_finder,
        max_k=args.max_k,
        max_refinements=args.max_refinements,
        timeout=args.timeout,
        constrain_mode=args.constrain_mode,
        all_tangent_points=args.all_tangent_points,
        axioms_everywhere=args.axioms_everywhere,
        sign_axioms=not args.no_sign_axioms,
        commutativity_axioms=args.commutativity_axioms,
        rounding_threshold=args.rounding_threshold,
        reduce_axioms=not args.no_reduce_axioms,
        dump_lemmas=args.dump_lemmas,
    )


def _nra_config(args) -> NraConfig:
    return NraConfig(
        solver_cmd=args.solver_cmd or backend.DEFAULT_SOLVER_CMD,
        nra_solver_cmd=args.nra_solver_cmd,
        model_finder=args.model_finder,
        max_iterations=args.max_iterations,
        timeout=args.timeout,
        all_tangent_points=args.all_tangent_points,
        rounding_threshold=args.rounding_threshold,
        sign_axioms=not args.no_sign_axioms,
        commutativity_axioms=args.commutativity_axioms,
        dump_lemmas=args.dump_lemmas,
    )


def _print_stats(stats: dict, wall: float) -> None:
    parts = [f"wall={wall:.2f}s"]
    for k in sorted(stats):
        parts.append(f"{k}={stats[k]}")
    print("stats: " + " ".join(parts), file=sys.stderr)


def _value_str(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def check_vmt_file(path: str, config: CegarConfig) -> tuple[str, cegar.McVerdict]:
    ts = vmt.parse_vmt(Path(path).read_text())
    if not ts.properties:
        raise vmt.ParseError("no invariant property in the input")
    worst = None
    for prop in ts.properties:
        v = cegar.vmt_nra_check(ts, prop, config)
        if v.status == "unsafe":
            return "UNSAFE", v
        if v.status == "unknown" and worst is None:
            worst = v
    if worst is not None:
        return "UNKNOWN", worst
    return "SAFE", cegar.McVerdict("safe")


def run_check_vmt(args) -> int:
    config = _cegar_config(args)
    t0 = time.monotonic()
    verdict, v = check_vmt_file(args.file, config)
    wall = time.monotonic() - t0
    print(verdict)
    if verdict == "UNSAFE" and v.trace is not None:
        ts = vmt.parse_vmt(Path(args.file).read_text())
        for i, st in enumerate(v.trace.states):
            print(f"step {i}:")
            for var in ts.variables:
                print(f"  {var.data} = {_value_str(st.vars[var.data])}")
    if args.stats:
        _print_stats(config.stats, wall)
    return {"SAFE": 0, "UNSAFE": 1, "UNKNOWN": 2}[verdict]


def run_check_smt(args) -> int:
    config = _nra_config(args)
    t0 = time.monotonic()
    f = vmt.parse_smt2_assertions(Path(args.file).read_text())
    v = nra.smt_nra_check(f, config)
    wall = time.monotonic() - t0
    print(v.status)
    if args.stats:
        config.stats["iterations"] = v.iterations
        _print_stats(config.stats, wall)
    return {"unsat": 0, "sat": 1, "unknown": 2}[v.status]


# ---------------------------------------------------------------------------
# bench harness


def _bench_one(path: str, args_dict: dict) -> dict:
    args = argparse.Namespace(**args_dict)
    t0 = time.monotonic()
    row = {"file": Path(path).name, "verdict": "ERROR", "expected": "",
           "time": 0.0, "iterations": 0, "lemmas": 0}
    expected = Path(path).with_suffix(Path(path).suffix + ".expected")
    if expected.exists():
        row["expected"] = expected.read_text().strip()
    try:
        if path.endswith(".smt2"):
            config = _nra_config(args)
            f = vmt.parse_smt2_assertions(Path(path).read_text())
            v = nra.smt_nra_check(f, config)
            row["verdict"] = v.status
            row["iterations"] = v.iterations
        else:
            config = _cegar_config(args)
            verdict, v = check_vmt_file(path, config)
            row["verdict"] = verdict
            row["iterations"] = v.iterations
        row["lemmas"] = sum(n for k, n in config.stats.items()
                            if k.startswith("lemmas_"))
    except Exception as e:  # recorded, never aborts the sweep
        row["verdict"] = "ERROR"
        row["error"] = str(e)
    row["time"] = round(time.monotonic() - t0, 3)
    return row


def run_bench(args) -> int:
    root = Path(args.dir)
    files = sorted(str(p) for p in list(root.glob("*.vmt")) +
                   list(root.glob("*.smt2")))
    args_dict = dict(vars(args))
    args_dict.pop("mode", None)
    rows = []
    if args.jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_one, files,
                                 [args_dict] * len(files)))
    else:
        rows = [_bench_one(f, args_dict) for f in files]
    rows.sort(key=lambda r: r["file"])

    out = io.StringIO()
    w = csv.writer(out)
    w.writerow(["file", "verdict", "expected", "time", "iterations", "lemmas",
                "status"])
    mismatches = 0
    errors = 0
    solved_safe = solved_unsafe = 0
    for r in rows:
        status = ""
        if r["verdict"] == "ERROR":
            errors += 1
            status = "ERROR"
        elif r["expected"] and r["verdict"] != r["expected"]:
            mismatches += 1
            status = "MISMATCH"
        if r["verdict"] in ("SAFE", "unsat"):
            solved_safe += 1
        elif r["verdict"] in ("UNSAFE", "sat"):
            solved_unsafe += 1
        w.writerow([r["file"], r["verdict"], r["expected"], r["time"],
                    r["iterations"], r["lemmas"], status])
    sys.stdout.write(out.getvalue())
    print(f"# solved {solved_safe}/{solved_unsafe} "
          f"(safe/unsafe of {len(rows)}); "
          f"{mismatches} mismatches, {errors} errors")
    return 1 if (mismatches or errors) else 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 3 if e.code not in (0,) else 0
    try:
        if args.mode == "check-vmt":
            return run_check_vmt(args)
        if args.mode == "check-smt":
            return run_check_smt(args)
        return run_bench(args)
    except (vmt.ParseError, OSError, backend.SolverError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except cegar.InternalError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
