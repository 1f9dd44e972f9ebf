"""Command line front end: ``osmm run | sweep | gradcheck``.

Exit codes: 0 success, 1 bad arguments, 2 the solver ended without
converging (or failed), 3 gradient check above threshold.
"""

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys

from . import problems
from .oracle import StencilLeftDomain, gradient_check
from .solver import SolverConfig, Status, solve

log = logging.getLogger("osmm")

CSV_COLUMNS = ("iter", "time_s", "f", "g", "h", "lower_bound", "gap", "rms_residual", "t",
               "lambda", "mu", "r1", "f_evals")
GRADCHECK_THRESHOLD = 1e-4
OK_STATUSES = (Status.GAP, Status.RESIDUAL)

# flag name -> (SolverConfig field or None, type)
FLAGS = {
    "problem": (None, str), "n": (None, int), "num_samples": (None, int), "seed": (None, int),
    "out_dir": (None, str), "rank": ("rank", int), "memory": ("memory", int),
    "max_iter": ("max_iters", int), "eps_gap_abs": ("eps_gap_abs", float),
    "eps_gap_rel": ("eps_gap_rel", float), "eps_res_abs": ("eps_res_abs", float),
    "eps_res_rel": ("eps_res_rel", float), "use_validation": ("use_validation", bool),
}
for _f in dataclasses.fields(SolverConfig):
    if _f.name not in ("box", "floor"):
        FLAGS.setdefault(_f.name, (_f.name, type(_f.default)))


class BadSpec(ValueError):
    pass


def _to_bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise BadSpec(f"not a boolean: {text!r}")


def read_config(path):
    """``key = value`` lines; ``#`` starts a comment; dashes in keys allowed."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise BadSpec(f"cannot read config {path}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadSpec(f"{path}:{num}: expected key=value")
        key, val = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in FLAGS:
            raise BadSpec(f"{path}:{num}: unknown key {key!r}")
        out[key] = val
    return out


def resolve(args):
    """Merge flags with the config file; returns ``(settings, SolverConfig)``."""
    settings = {k: getattr(args, k) for k in FLAGS if getattr(args, k, None) is not None}
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    cfg_kwargs = {}
    for key, val in list(settings.items()):
        field, kind = FLAGS[key]
        try:
            val = _to_bool(val) if kind is bool else kind(val)
        except (TypeError, ValueError) as exc:
            raise BadSpec(f"bad value for {key}: {val!r}") from exc
        settings[key] = val
        if field is not None:
            cfg_kwargs[field] = val
    if settings.get("problem") not in problems.BUILDERS:
        raise BadSpec(f"unknown problem {settings.get('problem')!r}; "
                      f"choose from {sorted(problems.BUILDERS)}")
    try:
        cfg = SolverConfig(**cfg_kwargs)
    except (TypeError, ValueError) as exc:
        raise BadSpec(str(exc)) from exc
    settings.setdefault("seed", 0)
    settings.setdefault("out_dir", ".")
    return settings, cfg


def build_instance(settings, validation=False):
    try:
        return problems.generate(settings["problem"], settings.get("n"),
                                 settings.get("num_samples"), settings["seed"],
                                 validation=validation)
    except ValueError as exc:
        raise BadSpec(str(exc)) from exc


def _fmt(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def _json_number(x):
    return x if math.isfinite(x) else _fmt(float(x))


def write_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(v) for v in (r.k, r.time_s, r.f, r.g, r.h, r.lower_bound, r.gap,
                                          r.rms_residual, r.t, r.lam, r.mu, r.r1, r.f_evals)])


def summary_dict(report):
    out = report.summary()
    for key in ("h_final", "lower_bound", "gap", "wall_time_s"):
        out[key] = _json_number(float(out[key]))
    return out


def _prepare_out(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise BadSpec(f"cannot create output directory {out_dir}: {exc}") from exc
    if not os.access(out_dir, os.W_OK):
        raise BadSpec(f"output directory {out_dir} is not writable")


def _stem(settings, cfg):
    return f"{settings['problem']}_seed{settings['seed']}_r{cfg.rank}_M{cfg.memory}"


def run_once(settings, cfg):
    """Solve one instance and write its CSV and JSON; returns ``(report, exit_code)``."""
    inst = build_instance(settings, validation=cfg.use_validation)
    stem = os.path.join(settings["out_dir"], _stem(settings, cfg))
    try:
        report = solve(inst.oracle, inst.g, inst.x0, cfg)
    except Exception as exc:  # solver failure: report and map to exit 2
        log.error("solver failed: %s", exc)
        with open(stem + ".json", "w") as fh:
            json.dump({"status": "Failed", "error": str(exc)}, fh, indent=2)
        return None, 2
    if inst.name == "density":
        problems.density.box_binding(report.x)
    write_csv(stem + ".csv", report.records)
    with open(stem + ".json", "w") as fh:
        json.dump(summary_dict(report), fh, indent=2)
    print(json.dumps(summary_dict(report)))
    return report, 0 if report.status in OK_STATUSES else 2


def cmd_run(args):
    settings, cfg = resolve(args)
    _prepare_out(settings["out_dir"])
    _, code = run_once(settings, cfg)
    return code


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise BadSpec(f"bad integer list {text!r}") from exc
    if not vals:
        raise BadSpec("empty list")
    return vals


def cmd_sweep(args):
    settings, cfg = resolve(args)
    _prepare_out(settings["out_dir"])
    ranks, memories = _int_list(args.ranks), _int_list(args.memories)
    rows = []
    for r in ranks:
        for m in memories:
            one = dataclasses.replace(cfg, rank=r, memory=m)
            report, code = run_once(settings, one)
            if code == 1 or report is None:
                return code
            hit = report.status in OK_STATUSES
            iters = report.iters
            rows.append({
                "rank": r, "memory": m,
                "iterations": iters if hit else one.max_iters,
                "hit_tolerance": hit,
                "time_s": report.wall_time_s,
                "mean_f_evals_per_iter": report.f_value_calls / max(iters, 1),
                "status": report.status.value,
            })
    path = os.path.join(settings["out_dir"], f"{settings['problem']}_sweep.csv")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})
    for row in rows:
        flag = "" if row["hit_tolerance"] else "  (max_iters, tolerance not reached)"
        print(f"r={row['rank']:>3} M={row['memory']:>3} iters={row['iterations']:>4} "
              f"time={row['time_s']:.3f}s evals/iter={row['mean_f_evals_per_iter']:.2f}{flag}")
    return 0


def cmd_gradcheck(args):
    settings, _ = resolve(args)
    inst = build_instance(settings)
    worst = 0.0
    try:
        for x in problems.interior_points(inst, args.points, settings["seed"]):
            worst = max(worst, gradient_check(inst.oracle, x).error)
    except StencilLeftDomain as exc:
        print(f"gradient check left the domain: {exc}")
        return 3
    print(f"{inst.name}: max relative gradient error {worst:.3e} over {args.points} points")
    if not inst.oracle.smooth:
        print("nonsmooth oracle: reported only, exempt from the threshold")
        return 0
    return 0 if worst <= GRADCHECK_THRESHOLD else 3


def _add_common(p):
    p.add_argument("--problem", choices=sorted(problems.BUILDERS))
    p.add_argument("--n", type=int, help="assets / stocks / products (problem dependent)")
    p.add_argument("--num-samples", dest="num_samples", type=int,
                   help="sample count N (grid points for density)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rank", type=int)
    p.add_argument("--memory", type=int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--eps-gap-abs", dest="eps_gap_abs", type=float)
    p.add_argument("--eps-gap-rel", dest="eps_gap_rel", type=float)
    p.add_argument("--eps-res-abs", dest="eps_res_abs", type=float)
    p.add_argument("--eps-res-rel", dest="eps_res_rel", type=float)
    p.add_argument("--use-validation", dest="use_validation", action="store_true", default=None)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--config", help="key=value file; its entries override flags")


def make_parser():
    parser = argparse.ArgumentParser(prog="osmm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve one instance")
    _add_common(run)
    run.set_defaults(func=cmd_run)
    sweep = sub.add_parser("sweep", help="solve over a grid of ranks and memories")
    _add_common(sweep)
    sweep.add_argument("--ranks", default="0,20,50")
    sweep.add_argument("--memories", default="1,20,50")
    sweep.set_defaults(func=cmd_sweep)
    grad = sub.add_parser("gradcheck", help="finite-difference check of the oracle gradient")
    _add_common(grad)
    grad.add_argument("--points", type=int, default=20)
    grad.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BadSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
