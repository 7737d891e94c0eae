"""Command line pipeline: validate | solve | report.

Exit codes: 0 success, 1 assumption or verification failure, 2 usage or
configuration error, 3 solver did not converge.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .discretization import h_inner_product, load_field, save_field
from .errors import (BreatherError, ConfigError, EmptyRegularSet, FieldFormatError,
                     MaxIterExceeded, NoDescentDirection)
from .functional import energy
from .kernels import regular_set, subharmonic_restrict, validate_assumptions
from .reconstruction import assemble_fields, default_lattice, profile_from_u, write_fields_csv
from .solver import AssumptionViolation, aligned_distance, ground_state, minimal_period
from .verification import invariant_suite, residual_report

log = logging.getLogger("breather")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2, 3
FIELD_FILE = "u.field"
PROFILE_FILE = "w.field"
SOLVE_REPORT = "solve_report.json"
FIELDS_CSV = "fields.csv"
RESIDUAL_REPORT = "residual_report.json"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, default=_json_default))


def _say(args, *msg):
    if not args.quiet:
        print(*msg)


def _thread_limit():
    raw = os.environ.get("BREATHER_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"BREATHER_THREADS must be a positive integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _parse_list(s: str) -> list[int]:
    try:
        out = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not out or any(n < 1 for n in out):
        raise argparse.ArgumentTypeError("subharmonic indices must be positive")
    return out


def _load(args) -> RunConfig:
    rc = load_config(args.config, geometry=args.geometry, seed=args.seed)
    if getattr(args, "subharmonics", None):
        rc.subharmonics = args.subharmonics
        rc.K_kernel = max(rc.K_kernel, 3 * rc.K * max(rc.subharmonics))
    return rc


# -- validate ---------------------------------------------------------------

def cmd_validate(args) -> int:
    rc = _load(args)
    spec = rc.spec()
    grid = rc.grid()
    try:
        modes = regular_set(spec.nu, rc.K, geometry=spec.geometry)
    except EmptyRegularSet as exc:
        _say(args, f"FAIL regular set: {exc}")
        return EXIT_VERIFY
    rep = validate_assumptions(spec, rc.K, x=grid.x, modes=modes)
    for key, v in rep.verdicts.items():
        _say(args, f"{key}: {v.status} {v.message} {json.dumps(v.witness, default=_json_default)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump({"regular_set": list(modes.regular), "assumptions": rep.to_dict()}, out / "validate.json")
    return EXIT_OK if rep.hard_ok else EXIT_VERIFY


# -- solve ------------------------------------------------------------------

def _solve_one(rc: RunConfig, spec, out: Path, args) -> tuple[int, dict]:
    problem = rc.problem(spec)
    rep = ground_state(problem, rc.solver)
    pair = profile_from_u(rep.u, problem, rc.K_sing)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"seed": rc.solver.seed, "T": spec.T, "c": spec.c, "variant": spec.variant,
            "subharmonic": spec.meta.get("subharmonic", 1)}
    save_field(rep.u, out / FIELD_FILE, rc.K, meta)
    save_field(pair.w, out / PROFILE_FILE, meta={**meta, "profile": "w"})
    report = rep.to_dict()
    report.update({"seed": rc.solver.seed, "grid": problem.grid.to_dict(), "K": rc.K, "M": rc.M,
                   "regular_set": list(problem.modes.regular),
                   "minimal_period": minimal_period(rep.u, spec.T),
                   "solver_config": rc.solver.to_dict()})
    _dump(report, out / SOLVE_REPORT)
    lat = rc.output.get("lattice", {})
    lattice = default_lattice(problem, **lat) if lat else None
    fs = assemble_fields(pair, problem, lattice)
    write_fields_csv(fs, out / FIELDS_CSV)
    rr = residual_report(rep.u, problem, pair)
    suite = invariant_suite({"problem": problem, "u": rep.u, "pair": pair,
                             "field_path": out / FIELD_FILE, "tol_grad": rc.solver.tol_grad,
                             "assumptions": rep.assumption_report})
    doc = rr.to_dict()
    doc["field_meta"] = fs.meta
    doc["suite"] = suite
    _dump(doc, out / RESIDUAL_REPORT)
    _say(args, f"[{out}] J = {rep.energy.total:.12g}, iterations = {rep.iterations}, "
               f"suite {'pass' if suite['ok'] else 'FAIL'}")
    for k, v in suite["verdicts"].items():
        if v["status"] == "fail":
            _say(args, f"  fail {k}: value={v['value']} threshold={v['threshold']} {v['message']}")
    return (EXIT_OK if suite["ok"] else EXIT_VERIFY), {"report": rep, "problem": problem}


def cmd_solve(args) -> int:
    rc = _load(args)
    out = Path(args.out or rc.output.get("dir") or "breather_out")
    spec = rc.spec()
    ns = rc.subharmonics
    if ns == [1]:
        code, _ = _solve_one(rc, spec, out, args)
        return code
    codes, results = [], {}
    for n in ns:
        try:
            sub = subharmonic_restrict(spec, n)
        except EmptyRegularSet as exc:
            _say(args, f"n={n}: skipped ({exc})")
            results[n] = None
            continue
        code, res = _solve_one(rc, sub, out / f"n{n}", args)
        codes.append(code)
        results[n] = res
    pairs = []
    done = [(n, r) for n, r in results.items() if r is not None]
    for i, (na, a) in enumerate(done):
        for nb, b in done[i + 1:]:
            pa = minimal_period(a["report"].u, spec.T, na)
            pb = minimal_period(b["report"].u, spec.T, nb)
            fa = {na * k: a["report"].u.mode(k) for k in a["report"].u.ks}
            fb = {nb * k: b["report"].u.mode(k) for k in b["report"].u.ks}
            dist = aligned_distance(fa, fb, a["problem"].grid)
            pairs.append({"n": [na, nb], "minimal_periods": [pa, pb],
                          "distinct_by_period": not np.isclose(pa, pb, rtol=1e-12, atol=0),
                          "aligned_distance": dist})
    _dump({"members": {str(n): (None if r is None else {
        "energy": r["report"].energy.total, "period": spec.T / n,
        "minimal_period": minimal_period(r["report"].u, spec.T, n)}) for n, r in results.items()},
        "pairs": pairs}, out / "family.json")
    for p in pairs:
        _say(args, f"n={p['n']}: minimal periods {p['minimal_periods']}, "
                   f"distinct by period: {p['distinct_by_period']}")
    return max(codes) if codes else EXIT_VERIFY


# -- report -----------------------------------------------------------------

def cmd_report(args) -> int:
    src = Path(args.out or "breather_out")
    field_path = src / FIELD_FILE
    if not field_path.exists() or not (src / SOLVE_REPORT).exists():
        raise FileNotFoundError(f"no solve artifacts in {src}")
    u, side = load_field(field_path)
    stored = json.loads((src / SOLVE_REPORT).read_text())
    summary = {"source": str(src), "stored_energy": stored["energy"]["total"],
               "stored_quarter_norm_sq": stored["quarter_norm_sq"]}
    if args.config:
        rc = _load(args)
        problem = rc.problem()
        q = h_inner_product(u, u, problem)
        J = energy(u, problem).total
        summary.update({"J": J, "quarter_norm_sq": 0.25 * q, "defect": abs(J - 0.25 * q)})
    else:
        J, qq = stored["energy"]["total"], stored["quarter_norm_sq"]
        summary.update({"J": J, "quarter_norm_sq": qq, "defect": abs(J - qq)})
    if (src / RESIDUAL_REPORT).exists():
        rr = json.loads((src / RESIDUAL_REPORT).read_text())
        summary["profile_residual"] = rr.get("extra", {}).get("relative_profile_residual")
        summary["suite_ok"] = rr.get("suite", {}).get("ok")

    dest = Path(args.report_dir) if args.report_dir else src / "report"
    dest.mkdir(parents=True, exist_ok=True)
    w = u.grid.weights
    rows = sorted(((abs(k), k, float(np.sqrt(2 * np.sum(w * np.abs(u.mode(k)) ** 2))),
                    float(np.abs(u.mode(k)).max())) for k in u.ks))
    with open(dest / "mode_amplitudes.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "l2_norm", "max_abs"])
        for _, k, l2, mx in rows:
            wr.writerow([k, repr(l2), repr(mx)])
    cols = ["x"] + [f"{p}_{k}" for k in u.ks for p in ("re", "im")]
    data = [u.grid.x] + [part for k in u.ks for part in (u.mode(k).real, u.mode(k).imag)]
    np.savetxt(dest / "profiles.csv", np.column_stack(data), delimiter=",", header=",".join(cols),
               comments="", fmt="%.17g")
    _dump(summary, dest / "summary.json")
    _say(args, f"J = {summary['J']:.12g}")
    _say(args, f"1/4 |u|_H^2 = {summary['quarter_norm_sq']:.12g}")
    _say(args, f"defect = {summary['defect']:.3g}")
    _say(args, f"tables written to {dest}")
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="breather", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_config=True):
        p.add_argument("--config", required=need_config, help="run configuration (JSON)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="override the solver seed")
        p.add_argument("--geometry", choices=["slab", "cylindrical"], help="override geometry")
        p.add_argument("--subharmonics", type=_parse_list, help="comma-separated n values, e.g. 1,2")
        p.add_argument("--quiet", action="store_true")

    common(sub.add_parser("validate", help="check the material assumptions"))
    common(sub.add_parser("solve", help="compute a ground state and export artifacts"))
    rp = sub.add_parser("report", help="summarize artifacts from a previous solve")
    common(rp, need_config=False)
    rp.add_argument("--report-dir", help="where to write tables (default OUT/report)")
    return ap


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "report": cmd_report}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssumptionViolation as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (MaxIterExceeded, NoDescentDirection) as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (FileNotFoundError, FieldFormatError) as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_VERIFY if isinstance(exc, FieldFormatError) else EXIT_USAGE
    except BreatherError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
