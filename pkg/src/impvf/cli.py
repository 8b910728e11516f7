"""Command line: ``impvf solve | certify | depend | gronwall | rerun``.

Exit codes: 0 ok, 1 input error, 2 non-convergence, 3 infeasible
certificate, 4 a bound is violated by the measured quantity.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .certificates import (DEFAULT_GAMMA_RANGE, ContractionCertificate, certify, contraction_constant,
                           dependence_inputs, eps_dependence_bound, gronwall_dependence_bound,
                           po_dependence_bound)
from .core import Bielecki, Chebyshev, Trajectory, norm, traj_distance
from .dsl.problem import ProblemSpec, load_problem
from .errors import (CertificateInfeasible, EvalError, ImpvfError, InsufficientResolution,
                     KernelEvalError, OracleDivergence)
from .gronwall import (BOUND_NAMES, GronwallInstance, extrapolated_oracle, instance_stream,
                       load_gronwall, verify_bounds)
from .semigroup import estimate_semigroup_bound
from .solver import picard_solve, problem_grid, residual_report

log = logging.getLogger("impvf")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONVERGED = 2
EXIT_INFEASIBLE = 3
EXIT_VIOLATION = 4


def fmt(x) -> str:
    """17 significant digits, ``.`` decimal point."""
    return format(float(x), ".17g")


class Output:
    """CSV files of one command plus the manifest sidecar that reproduces them."""

    def __init__(self, out: Optional[str]):
        self.base = Path(out).resolve() if out else None
        self.files: list[str] = []

    def path(self, suffix: str = "") -> Path:
        if not suffix:
            return self.base
        return self.base.with_name(self.base.stem + suffix + self.base.suffix)

    def write_csv(self, header: Sequence[str], rows: Sequence[Sequence[str]], suffix: str = "") -> None:
        text = ",".join(header) + "\n" + "".join(",".join(r) + "\n" for r in rows)
        if self.base is None:
            if not suffix:
                sys.stdout.write(text)
            return
        p = self.path(suffix)
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.files.append(str(p))

    def write_manifest(self, command: str, argv: list[str], inputs: list[str], params: dict,
                       started: float) -> None:
        if self.base is None:
            return
        manifest = {
            "command": command,
            "argv": argv,
            "inputs": inputs,
            "parameters": params,
            "outputs": self.files,
            "version": __version__,
            "duration_s": round(time.perf_counter() - started, 6),
        }
        p = Path(str(self.base) + ".manifest.json")
        p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _abs(path: str) -> str:
    return str(Path(path).resolve())


def _traj_rows(traj: Trajectory) -> list[list[str]]:
    rows = []
    grid = traj.grid
    pos = {int(i): k for k, i in enumerate(grid.impulse_index)}
    for i, t in enumerate(grid.nodes):
        k = pos.get(i)
        vals = [fmt(v) for v in traj.values[i]]
        if k is None:
            rows.append([fmt(t), "node", *vals])
        else:
            rows.append([fmt(t), "left", *vals])
            rows.append([fmt(t), "right", *(fmt(v) for v in traj.right_limits[k])])
    return rows


# -- solve ---------------------------------------------------------------------

def cmd_solve(args) -> int:
    started = time.perf_counter()
    p = load_problem(args.problem)
    grid = problem_grid(p, args.h)
    res = picard_solve(p, grid, gamma=args.gamma, tol=args.tol, max_iter=args.max_iter)
    w = res.solution
    try:
        rep = residual_report(p, w)
        deriv, trunc = rep.derivative_residual_sup, rep.truncation_estimate
        defect, jump = rep.integral_defect_sup, rep.jump_violation
    except InsufficientResolution as exc:
        log.warning("derivative residual skipped: %s", exc)
        from .solver import integral_defect, jump_violation
        deriv = trunc = math.nan
        defect, jump = integral_defect(p, w).sup, jump_violation(p, w)

    out = Output(args.out)
    out.write_csv(["tau", "side", *(f"w_{i}" for i in range(p.d))], _traj_rows(w))
    ratios = res.ratios()
    out.write_csv(["iteration", "step_bielecki", "ratio"],
                  [[str(m + 1), fmt(s), fmt(ratios[m - 1]) if m else ""]
                   for m, s in enumerate(res.step_history)], ".iterations")
    summary = [("converged", str(int(res.converged))), ("iterations", str(res.iterations)),
               ("final_step_bielecki", fmt(res.final_step_norm)), ("gamma", fmt(res.gamma_used)),
               ("integral_defect_sup", fmt(defect)), ("derivative_residual_sup", fmt(deriv)),
               ("jump_violation", fmt(jump)), ("truncation_estimate", fmt(trunc))]
    out.write_csv(["quantity", "value"], [list(r) for r in summary], ".residuals")
    params = {"h": args.h, "tol": args.tol, "gamma": res.gamma_used, "max_iter": args.max_iter}
    argv = ["solve", _abs(args.problem), "--h", repr(args.h), "--tol", repr(args.tol),
            "--gamma", repr(res.gamma_used), "--max-iter", str(args.max_iter)]
    if out.base is not None:
        argv += ["--out", str(out.base)]
    out.write_manifest("solve", argv, [_abs(args.problem)], params, started)

    stream = sys.stderr if out.base is None else sys.stdout
    for key, val in summary:
        print(f"{key}: {val}", file=stream)
    print("w(b): " + " ".join(fmt(v) for v in w.values[-1]), file=stream)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


# -- certify -------------------------------------------------------------------

def cmd_certify(args) -> int:
    started = time.perf_counter()
    p = load_problem(args.problem)
    if p.lipschitz is None:
        print("error: problem has no [lipschitz] section", file=sys.stderr)
        return EXIT_INPUT
    cert, sg = certify(p, tuple(args.gamma_range), samples=args.samples)
    rows = [("gamma", fmt(cert.gamma)), ("L_R", fmt(cert.L_R)), ("feasible", str(int(cert.feasible))),
            ("M", fmt(sg.M)), ("omega", fmt(sg.omega)), ("semigroup_samples", str(sg.samples)),
            ("tau_at_max", fmt(sg.tau_at_max))]
    out = Output(args.out)
    if out.base is not None:
        out.write_csv(["quantity", "value"], [list(r) for r in rows])
    lo, hi = args.gamma_range
    argv = ["certify", _abs(args.problem), "--gamma-range", repr(lo), repr(hi),
            "--samples", str(args.samples)]
    if out.base is not None:
        argv += ["--out", str(out.base)]
    out.write_manifest("certify", argv, [_abs(args.problem)],
                       {"gamma_range": [lo, hi], "samples": args.samples}, started)
    for key, val in rows:
        print(f"{key}: {val}")
    return EXIT_OK if cert.feasible else EXIT_INFEASIBLE


# -- depend --------------------------------------------------------------------

def _same_schedule(a: ProblemSpec, b: ProblemSpec) -> bool:
    return a.b == b.b and a.impulse_times == b.impulse_times and a.d == b.d


def cmd_depend(args) -> int:
    started = time.perf_counter()
    base = load_problem(args.base)
    pert = load_problem(args.perturbed)
    if not _same_schedule(base, pert):
        print("error: base and perturbed problems need the same d, b and impulse times", file=sys.stderr)
        return EXIT_INPUT
    if not np.array_equal(base.A, pert.A):
        print("error: base and perturbed problems need the same generator A", file=sys.stderr)
        return EXIT_INPUT
    L = base.lipschitz
    if L is None:
        print("error: base problem has no [lipschitz] section", file=sys.stderr)
        return EXIT_INPUT
    mu = max(L.mu, pert.lipschitz.mu if pert.lipschitz else 0.0)
    eta = max(L.eta, pert.lipschitz.eta if pert.lipschitz else 0.0)
    h = args.coarse_h if args.mode == "eps" else args.h
    grid = problem_grid(base, h)
    sg = estimate_semigroup_bound(base.A, base.b)
    rows: list[tuple[str, str]] = []
    gamma = None

    if args.mode == "po":
        cert, _ = certify(base)
        L_hat = pert.lipschitz.hatted() if pert.lipschitz is not None else L.hatted()
        L_R_hat = contraction_constant(L_hat, sg.M, base.b, base.n, cert.gamma)
        rows += [("gamma", fmt(cert.gamma)), ("L_R", fmt(cert.L_R)), ("L_R_perturbed", fmt(L_R_hat))]
        if not (cert.feasible and L_R_hat < 1.0):
            for key, val in rows:
                print(f"{key}: {val}")
            print("error: contraction certificate infeasible; po bound undefined", file=sys.stderr)
            return EXIT_INFEASIBLE
        gamma = cert.gamma

    sol_b = picard_solve(base, grid, tol=args.tol, max_iter=args.max_iter)
    sol_p = picard_solve(pert, grid, tol=args.tol, max_iter=args.max_iter)
    if not (sol_b.converged and sol_p.converged):
        print("error: Picard iteration did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    wb, wp = sol_b.solution, sol_p.solution
    inp = dependence_inputs(base, pert, sg.M, mu, eta)
    cheb = traj_distance(wb, wp, Chebyshev())
    rows += [("M", fmt(sg.M)), ("delta_w0", fmt(inp.delta_w0)), ("mu", fmt(mu)), ("eta", fmt(eta)),
             ("distance_chebyshev", fmt(cheb))]
    if args.mode == "po":
        measured = traj_distance(wb, wp, Bielecki(gamma))
        bound = po_dependence_bound(inp, max(cert.L_R, L_R_hat))
        rows.append(("distance_bielecki", fmt(measured)))
    elif args.mode == "gronwall":
        measured = cheb
        bound = gronwall_dependence_bound(inp, L)
    else:
        from .solver import derivative_residual
        eps1 = derivative_residual(base, wb).sup
        eps2 = derivative_residual(pert, wp).sup
        measured = cheb
        bound = eps_dependence_bound(eps1, eps2, inp, L)
        rows += [("eps_base", fmt(eps1)), ("eps_perturbed", fmt(eps2))]
    # exact zero distance is attained by identical inputs; 1e-9 absorbs solver tolerance
    passed = measured <= bound + 1e-9
    tightness = measured / bound if bound > 0 else (0.0 if measured == 0 else math.inf)
    rows += [("mode", args.mode), ("measured", fmt(measured)), ("bound", fmt(bound)),
             ("tightness", fmt(tightness)), ("pass", str(int(passed)))]

    out = Output(args.out)
    if out.base is not None:
        out.write_csv(["quantity", "value"], [list(r) for r in rows])
    argv = ["depend", _abs(args.base), _abs(args.perturbed), "--mode", args.mode, "--h", repr(args.h),
            "--coarse-h", repr(args.coarse_h), "--tol", repr(args.tol), "--max-iter", str(args.max_iter)]
    if out.base is not None:
        argv += ["--out", str(out.base)]
    out.write_manifest("depend", argv, [_abs(args.base), _abs(args.perturbed)],
                       {"mode": args.mode, "h": h, "tol": args.tol, "gamma": gamma}, started)
    for key, val in rows:
        print(f"{key}: {val}")
    return EXIT_OK if passed else EXIT_VIOLATION


# -- gronwall ------------------------------------------------------------------

@dataclass(frozen=True)
class _Row:
    index: int
    name: str
    status: str
    oracle_max: float
    oracle_end: float
    reports: dict


def _gronwall_job(job: tuple[int, GronwallInstance, float]) -> _Row:
    index, inst, h = job
    try:
        grid = inst.grid(h)
        u = extrapolated_oracle(inst, grid)
        reps = verify_bounds(inst, grid, oracle=u)
    except OracleDivergence as exc:
        return _Row(index, inst.name, f"diverged: {exc}", math.nan, math.nan, {})
    except (EvalError, ImpvfError) as exc:
        return _Row(index, inst.name, f"error: {exc}", math.nan, math.nan, {})
    top = max(float(u.values.max()), float(u.right_limits.max(initial=-math.inf)))
    return _Row(index, inst.name, "ok", top, float(u.values[-1, 0]), {r.name: r for r in reps})


def _gronwall_header() -> list[str]:
    cols = ["instance", "name", "status", "oracle_max", "oracle_end"]
    for b in BOUND_NAMES:
        cols += [f"{b}_end", f"{b}_tightness", f"{b}_max_violation", f"{b}_pass"]
    return cols


def _gronwall_cells(row: _Row) -> list[str]:
    status = row.status.replace(",", ";").replace("\n", " ")
    cells = [str(row.index), row.name, status, fmt(row.oracle_max), fmt(row.oracle_end)]
    for b in BOUND_NAMES:
        r = row.reports.get(b)
        if r is None:
            cells += ["", "", "", ""]
        else:
            cells += [fmt(r.bound_at_end), fmt(r.tightness), fmt(r.max_violation), str(int(r.passed))]
    return cells


def cmd_gronwall(args) -> int:
    started = time.perf_counter()
    if (args.instance is None) == (args.random is None):
        print("error: give exactly one of an instance file or --random N", file=sys.stderr)
        return EXIT_INPUT
    if args.instance is not None:
        instances = [load_gronwall(args.instance)]
        h = args.h if args.h is not None else 1e-3
    else:
        if args.random < 1:
            print("error: --random needs a positive count", file=sys.stderr)
            return EXIT_INPUT
        instances = instance_stream(args.seed, args.random, volterra_only=args.volterra_only)
        h = args.h if args.h is not None else 1e-2
    jobs = [(i, inst, h) for i, inst in enumerate(instances)]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_gronwall_job, jobs, chunksize=max(1, len(jobs) // (4 * args.workers))))
    else:
        rows = [_gronwall_job(j) for j in jobs]
    rows.sort(key=lambda r: r.index)

    out = Output(args.out)
    out.write_csv(_gronwall_header(), [_gronwall_cells(r) for r in rows])
    sound_fail = sum(1 for r in rows for b, rep in r.reports.items() if not rep.advisory and not rep.passed)
    verbatim_fail = sum(1 for r in rows if "mixed" in r.reports and not r.reports["mixed"].passed)
    diverged = sum(1 for r in rows if r.status != "ok")
    argv = ["gronwall"]
    inputs = []
    if args.instance is not None:
        argv.append(_abs(args.instance))
        inputs.append(_abs(args.instance))
    else:
        argv += ["--random", str(args.random), "--seed", str(args.seed)]
        if args.volterra_only:
            argv.append("--volterra-only")
    argv += ["--h", repr(h), "--workers", str(args.workers)]
    if args.paper_verbatim_advisory:
        argv.append("--paper-verbatim-advisory")
    if out.base is not None:
        argv += ["--out", str(out.base)]
    out.write_manifest("gronwall", argv, inputs,
                       {"h": h, "seed": args.seed, "random": args.random,
                        "volterra_only": args.volterra_only,
                        "paper_verbatim_advisory": args.paper_verbatim_advisory}, started)

    stream = sys.stderr if out.base is None else sys.stdout
    print(f"instances: {len(rows)}", file=stream)
    print(f"sound bound violations: {sound_fail}", file=stream)
    print(f"verbatim mixed bound violations: {verbatim_fail}"
          + (" (advisory)" if args.paper_verbatim_advisory else ""), file=stream)
    print(f"oracle failures: {diverged}", file=stream)
    for r in rows:
        rep = r.reports.get("mixed")
        if rep is not None and not rep.passed:
            print(f"  instance {r.index} {r.name}: mixed bound violated, oracle {fmt(rep.observed_at_end)}"
                  f" vs bound {fmt(rep.bound_at_end)} at tau=b", file=stream)
    failed = sound_fail > 0 or (verbatim_fail > 0 and not args.paper_verbatim_advisory)
    return EXIT_VIOLATION if failed else EXIT_OK


# -- rerun ---------------------------------------------------------------------

def cmd_rerun(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        argv = list(manifest["argv"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: cannot read manifest {args.manifest}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out is not None:
        if "--out" in argv:
            i = argv.index("--out")
            argv[i + 1] = args.out
        else:
            argv += ["--out", args.out]
    return main(argv)


# -- parser --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="impvf", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"impvf {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="Picard-solve a problem file")
    s.add_argument("problem")
    s.add_argument("--h", type=float, default=1e-3, help="max grid spacing")
    s.add_argument("--tol", type=float, default=1e-10, help="Bielecki step tolerance")
    s.add_argument("--gamma", type=float, default=None, help="Bielecki weight (default 1/b)")
    s.add_argument("--max-iter", type=int, default=500)
    s.add_argument("--out", help="trajectory CSV path (sidecars derive from it)")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("certify", help="optimize the contraction certificate")
    c.add_argument("problem")
    c.add_argument("--gamma-range", type=float, nargs=2, default=list(DEFAULT_GAMMA_RANGE),
                   metavar=("LO", "HI"))
    c.add_argument("--samples", type=int, default=200, help="semigroup-norm samples")
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    d = sub.add_parser("depend", help="measured distance vs data-dependence bound")
    d.add_argument("base")
    d.add_argument("perturbed")
    d.add_argument("--mode", choices=("po", "gronwall", "eps"), default="gronwall")
    d.add_argument("--h", type=float, default=1e-3)
    d.add_argument("--coarse-h", type=float, default=0.05, help="grid spacing in eps mode")
    d.add_argument("--tol", type=float, default=1e-10)
    d.add_argument("--max-iter", type=int, default=500)
    d.add_argument("--out")
    d.set_defaults(func=cmd_depend)

    g = sub.add_parser("gronwall", help="check Gronwall bounds against the equality oracle")
    g.add_argument("instance", nargs="?")
    g.add_argument("--random", type=int, default=None, metavar="N")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--volterra-only", action="store_true", help="random instances with k2 = 0")
    g.add_argument("--h", type=float, default=None)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--paper-verbatim-advisory", action="store_true",
                   help="report verbatim mixed-bound failures without failing the run")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gronwall)

    r = sub.add_parser("rerun", help="repeat a run from its manifest")
    r.add_argument("manifest")
    r.add_argument("--out", help="write to a different path")
    r.set_defaults(func=cmd_rerun)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CertificateInfeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except KernelEvalError as exc:
        print(f"error: evaluation failed: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ImpvfError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
