"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 reproduction mismatch,
4 capability guard (input too large for the requested solver).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io as _io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from stratrelease import __version__
from stratrelease import io as sio
from stratrelease.best_response import (
    br_bruteforce,
    br_interval_uniform,
    br_linear_2d,
    br_submodular_approx,
    br_threshold_scan,
)
from stratrelease.core import AbsoluteCost, Instance
from stratrelease.distributions import RNG_ALGORITHM, sample
from stratrelease.errors import StratReleaseError, SupportTooLargeError
from stratrelease.instances import (
    example_claim_fpr,
    example_table1,
    example_thresholds,
    random_interval_instance,
    random_linear_instance,
    random_threshold_instance,
)
from stratrelease.learner import (
    compute_cutoff,
    generate_subset_sum_instance,
    has_equal_split,
    interval_cutoff,
    optimal_interval_release,
    optimize_release_bruteforce,
    optimize_release_uniform,
    release_fnr,
    release_fpr,
    release_utility,
)
from stratrelease.oracle import Region, make_oracle

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH, EXIT_CAPABILITY = 0, 2, 3, 4
CSV_DIGITS = 12
GEN_KINDS = ("table1", "example2", "claim-fpr", "subset-sum", "random-1d", "random-2d", "interval")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return f"{float(v):.{CSV_DIGITS}g}"
    return str(v)


def write_csv(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def thread_cap() -> int:
    raw = os.environ.get("STRATRELEASE_THREADS", "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise StratReleaseError(f"STRATRELEASE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise StratReleaseError(f"STRATRELEASE_THREADS must be a positive integer, got {raw!r}")
    return n


@dataclass
class RunManifest:
    command: list
    instance_sha256: str | None
    seed: int | None
    version: str
    wall_clock_seconds: float
    outputs: list = field(default_factory=list)
    rng: str = RNG_ALGORITHM
    threads: int = 1


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Run:
    """Collects output files for one command and writes the manifest."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.start = time.perf_counter()
        self.outputs = []
        self.out = Path(args.out) if getattr(args, "out", None) else None
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)
        self.instance_digest = None

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.outputs.append({"path": str(path), "sha256": _sha256(data)})
        return path

    def add_file(self, path: Path):
        self.outputs.append({"path": str(path), "sha256": _sha256(path.read_bytes())})

    def finish(self):
        target = getattr(self.args, "manifest", None)
        if target is None and self.out is not None:
            target = self.out / "manifest.json"
        if target is None:
            return
        m = RunManifest(
            command=self.argv,
            instance_sha256=self.instance_digest,
            seed=getattr(self.args, "seed", None),
            version=__version__,
            wall_clock_seconds=round(time.perf_counter() - self.start, 6),
            outputs=self.outputs,
            threads=thread_cap(),
        )
        Path(target).write_text(json.dumps(asdict(m), indent=2) + "\n", encoding="utf-8")


def _load(run: Run, path: str) -> Instance:
    data = Path(path).read_bytes()
    run.instance_digest = _sha256(data)
    return sio.loads(data.decode("utf-8"))


def _ints(text: str | None):
    if text is None:
        return None
    text = text.strip()
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise StratReleaseError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise StratReleaseError(f"expected comma-separated numbers, got {text!r}") from None


def _release(inst: Instance, text: str | None):
    if inst.is_interval_prior:
        if text is None:
            return (inst.prior.a, inst.prior.b)
        vals = _floats(text)
        if len(vals) != 2:
            raise StratReleaseError("interval release must be given as c,d")
        return tuple(vals)
    if text is None:
        return tuple(range(inst.prior.n))
    return tuple(_ints(text))


def _agent(inst: Instance, text: str):
    vals = _floats(text)
    if inst.kind == "linear":
        if len(vals) != 2:
            raise StratReleaseError("planar agents are given as x,y")
        return (vals[0], vals[1])
    if len(vals) != 1:
        raise StratReleaseError("expected a single agent coordinate")
    return vals[0]


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


# -- reproduce -------------------------------------------------------------------


def _reproduce_rows(target: str, a):
    rows = []

    def check(name, computed, expected, tol=1e-9):
        if isinstance(expected, (bool, str, tuple)):
            ok = computed == expected
        else:
            ok = computed is not None and abs(computed - expected) <= tol
        rows.append((name, expected, computed, tol, ok))

    if target == "table1":
        inst = example_table1()
        check("U({h1})", release_utility(inst, (0,)), 2 / 3)
        check("U({h1,h2})", release_utility(inst, (0, 1)), 1.0)
        check("optimal release", ";".join(map(str, optimize_release_bruteforce(inst).released)), "0;1")
    elif target == "example2":
        inst = example_thresholds()
        check("U({h2})", release_utility(inst, (1,)), 0.55)
        check("U(support)", release_utility(inst, (0, 1)), 1.0)
        check("cutoff({h2})", compute_cutoff(inst, (1,)), 1.0)
    elif target == "claim-fpr":
        inst = example_claim_fpr()
        k = inst.cost.k
        for name, x, rel, want in (
            ("BR(x1,{h2})", 0.0, (1,), 0.5),
            ("BR(x1,H)", 0.0, (0, 1, 2), 0.7),
            ("BR(x1,{h1,h2})", 0.0, (0, 1), 0.1),
            ("BR(x2,{h1,h2})", 0.4, (0, 1), 0.5),
        ):
            check(name, br_threshold_scan(x, inst.posterior(rel), k).target, want, 0.0)
        check("FPR({h2})", release_fpr(inst, (1,)), 1.0)
        check("FPR(H)", release_fpr(inst, (0, 1, 2)), 1.0)
        check("FPR({h1,h2})", release_fpr(inst, (0, 1)), 0.0)
    elif target == "subset-sum":
        a = a or [3, 1, 2]
        inst = generate_subset_sum_instance(a)
        feasible = has_equal_split(a)
        u = optimize_release_bruteforce(inst).utility
        check("feasible", feasible, feasible)
        check("perfect utility iff feasible", u >= 1 - 1e-9, feasible)
    else:
        raise StratReleaseError(f"unknown reproduction target {target!r}")
    return rows


def cmd_reproduce(args, run: Run) -> int:
    rows = _reproduce_rows(args.target, _ints(args.a))
    width = max(len(r[0]) for r in rows)
    lines = [f"{'quantity':<{width}}  {'expected':>12}  {'computed':>14}  verdict"]
    for name, want, got, _, ok in rows:
        lines.append(f"{name:<{width}}  {fmt(want):>12}  {fmt(got):>14}  {'pass' if ok else 'FAIL'}")
    sys.stdout.write("\n".join(lines) + "\n")
    if run.out:
        run.write("reproduce.csv", write_csv(("quantity", "expected", "computed", "tolerance", "pass"), rows))
    return EXIT_OK if all(r[4] for r in rows) else EXIT_MISMATCH


# -- evaluate / best response / project ------------------------------------------


def cmd_evaluate(args, run: Run) -> int:
    inst = _load(run, args.instance)
    rel = _release(inst, args.release)
    if inst.is_interval_prior:
        cutoff = interval_cutoff(rel[0], rel[1], inst.h, inst.cost.k)
    elif inst.kind == "threshold":
        cutoff = compute_cutoff(inst, rel)
    else:
        cutoff = None
    out = {"released": list(rel), "cutoff": cutoff, "utility": release_utility(inst, rel)}
    for key, fn in (("fpr", release_fpr), ("fnr", release_fnr)):
        try:
            out[key] = fn(inst, rel)
        except StratReleaseError:
            out[key] = None
    _emit(out)
    if run.out:
        run.write("evaluate.json", json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_best_response(args, run: Run) -> int:
    inst = _load(run, args.instance)
    x = _agent(inst, args.agent)
    rel = _release(inst, args.release)
    if inst.is_interval_prior:
        res = br_interval_uniform(x, rel[0], rel[1], inst.cost.k)
    else:
        post = inst.posterior(rel)
        solver = args.solver or {"threshold": "scan", "linear": "arrangement", "table": "brute"}[inst.kind]
        if solver == "brute":
            res = br_bruteforce(x, post, inst.cost, inst.domain)
        elif solver == "scan":
            if inst.kind != "threshold":
                raise StratReleaseError("the scan solver needs a threshold instance")
            res = br_threshold_scan(x, post, inst.cost.k)
        elif solver == "arrangement":
            if inst.kind != "linear":
                raise StratReleaseError("the arrangement solver needs a planar instance")
            res = br_linear_2d(x, post, inst.domain, inst.cost)
        else:
            res = br_submodular_approx(x, post, inst.cost, args.epsilon, args.seed, inst.domain)
    out = res.to_dict()
    _emit(out)
    if run.out:
        run.write("best_response.json", json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_project(args, run: Run) -> int:
    inst = _load(run, args.instance)
    if inst.is_interval_prior:
        raise StratReleaseError("projections need a finite classifier list")
    x = _agent(inst, args.agent)
    oracle = make_oracle(list(inst.prior.support), inst.cost, inst.domain)
    proj = oracle(x, Region(_ints(args.positive) or (), _ints(args.negative) or ()))
    point = list(proj.point) if isinstance(proj.point, tuple) else proj.point
    out = {
        "point": point,
        "cost": proj.cost if proj.feasible else None,
        "feasible": proj.feasible,
        "retracted": proj.retracted,
        "unbounded": proj.unbounded,
    }
    _emit(out)
    if run.out:
        run.write("projection.json", json.dumps(out, indent=2) + "\n")
    return EXIT_OK


# -- optimize / sweep ------------------------------------------------------------------

CANDIDATE_HEADER = ("candidate_id", "released_indices", "i", "l", "j", "cutoff", "utility", "rejected_reason")


def candidate_csv(report) -> str:
    rows = []
    for c in report.candidates:
        rel = "" if c.released is None else ";".join(fmt(v) for v in c.released)
        rows.append((c.candidate_id, rel, c.i, c.l, c.j, c.cutoff, c.utility, c.rejected_reason))
    return write_csv(CANDIDATE_HEADER, rows)


def cmd_optimize(args, run: Run) -> int:
    inst = _load(run, args.instance)
    method = args.method
    if method is None:
        method = "interval" if inst.is_interval_prior else "brute"
    if method == "interval":
        if not inst.is_interval_prior:
            raise StratReleaseError("the interval method needs a continuous uniform prior")
        if args.objective != "accuracy":
            raise StratReleaseError("the interval method optimises accuracy only")
        p = inst.prior
        report = optimal_interval_release(p.a, p.b, inst.f, inst.h, inst.data, inst.cost.k)
    elif method == "uniform":
        if args.objective != "accuracy":
            raise StratReleaseError("the uniform method optimises accuracy only")
        report = optimize_release_uniform(inst)
    else:
        report = optimize_release_bruteforce(inst, args.objective)
    out = report.to_dict()
    _emit(out)
    if run.out:
        run.write("report.json", json.dumps(out, indent=2) + "\n")
        run.write("candidates.csv", candidate_csv(report))
    return EXIT_OK


def sweep_values(inst: Instance, param: str, start: float, stop: float, steps: int, release=None):
    if steps < 1:
        raise StratReleaseError("steps must be at least 1")
    grid = [start] if steps == 1 else list(np.linspace(start, stop, steps))
    ys = []
    for v in grid:
        v = float(v)
        if param == "d":
            if not inst.is_interval_prior:
                raise StratReleaseError("sweeping d needs a continuous uniform prior")
            d = min(max(v, inst.h), inst.prior.b)
            ys.append(release_utility(inst, (inst.h, d)))
        else:
            if v <= 0:
                raise StratReleaseError("cost scale must be positive")
            scaled = _with_k(inst, v)
            if inst.is_interval_prior:
                p = inst.prior
                ys.append(optimal_interval_release(p.a, p.b, inst.f, inst.h, inst.data, v).utility)
            else:
                rel = tuple(range(inst.prior.n)) if release is None else release
                ys.append(release_utility(scaled, rel))
    return [float(v) for v in grid], ys


def _with_k(inst: Instance, k: float) -> Instance:
    if inst.kind != "threshold":
        raise StratReleaseError("sweeping k needs a threshold instance")
    return Instance(inst.domain, inst.ground_truth, inst.deployed, inst.prior, inst.data, AbsoluteCost(k))


def cmd_sweep(args, run: Run) -> int:
    inst = _load(run, args.instance)
    release = None if args.release is None or inst.is_interval_prior else _release(inst, args.release)
    xs, ys = sweep_values(inst, args.param, args.start, args.stop, args.steps, release)
    text = write_csv((args.param, "utility"), zip(xs, ys))
    if run.out:
        run.write("sweep.csv", text)
        from stratrelease.plotting import render_curve

        svg = run.out / "sweep.svg"
        render_curve(xs, ys, svg, args.param, "learner utility", f"utility versus {args.param}")
        run.add_file(svg)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- gen / sample --------------------------------------------------------------------


def cmd_gen(args, run: Run) -> int:
    kind = args.kind
    if kind == "table1":
        inst = example_table1()
    elif kind == "example2":
        inst = example_thresholds()
    elif kind == "claim-fpr":
        inst = example_claim_fpr()
    elif kind == "subset-sum":
        inst = generate_subset_sum_instance(_ints(args.a) or [3, 1, 2])
    elif kind == "random-1d":
        inst = random_threshold_instance(args.n, args.seed)
    elif kind == "random-2d":
        inst = random_linear_instance(args.n, args.seed)
    else:
        inst = random_interval_instance(args.seed)
    text = sio.dumps(inst)
    sys.stdout.write(text)
    if run.out:
        run.write("instance.json", text)
    return EXIT_OK


def cmd_sample(args, run: Run) -> int:
    inst = _load(run, args.instance)
    if args.count < 0:
        raise StratReleaseError("count must be non-negative")
    pts = sample(inst.data, args.count, args.seed)
    if pts.ndim != 1:
        raise StratReleaseError("sampling to CSV supports one-dimensional data only")
    text = write_csv(("x",), ((float(v),) for v in pts))
    if run.out:
        run.write("samples.csv", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for output files and manifest.json")
    common.add_argument("--manifest", help="write the run manifest to this path")

    p = argparse.ArgumentParser(prog="stratrelease", description="Strategic classification with partial information release.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reproduce", parents=[common], help="check worked examples against known values")
    r.add_argument("target", choices=("table1", "example2", "claim-fpr", "subset-sum"))
    r.add_argument("--a", help="comma-separated positive integers for subset-sum")
    r.set_defaults(func=cmd_reproduce)

    e = sub.add_parser("evaluate", parents=[common], help="utility, cutoff, FPR and FNR of a release")
    e.add_argument("--instance", required=True)
    e.add_argument("--release", help="support indices (comma-separated) or c,d for interval priors")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("best-response", parents=[common], help="agent best response")
    b.add_argument("--instance", required=True)
    b.add_argument("--agent", required=True, help="agent position; x,y in the plane")
    b.add_argument("--release")
    b.add_argument("--solver", choices=("brute", "scan", "arrangement", "submodular"))
    b.add_argument("--epsilon", type=float, default=0.05)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_best_response)

    o = sub.add_parser("optimize", parents=[common], help="optimal release")
    o.add_argument("--instance", required=True)
    o.add_argument("--objective", choices=("accuracy", "fpr", "fnr"), default="accuracy")
    o.add_argument("--method", choices=("brute", "uniform", "interval"))
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("sweep", parents=[common], help="utility as a parameter varies; CSV plus SVG")
    s.add_argument("--instance", required=True)
    s.add_argument("--param", choices=("d", "k"), default="d")
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--release", help="fixed release for k sweeps on finite priors")
    s.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("project", parents=[common], help="run the projection oracle once")
    pr.add_argument("--instance", required=True)
    pr.add_argument("--agent", required=True)
    pr.add_argument("--positive", default="")
    pr.add_argument("--negative", default="")
    pr.set_defaults(func=cmd_project)

    g = sub.add_parser("gen", parents=[common], help="emit an instance as JSON")
    g.add_argument("--kind", choices=GEN_KINDS, required=True)
    g.add_argument("--n", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--a")
    g.set_defaults(func=cmd_gen)

    sm = sub.add_parser("sample", parents=[common], help="draw agents from the data distribution as CSV")
    sm.add_argument("--instance", required=True)
    sm.add_argument("--count", type=int, default=1000)
    sm.add_argument("--seed", type=int, default=0)
    sm.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        thread_cap()
        run = Run(args, ["stratrelease"] + argv)
        code = args.func(args, run)
        run.finish()
        return code
    except SupportTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (StratReleaseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
