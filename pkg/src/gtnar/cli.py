"""``gtnar`` command line: generate | fit | select | benchmark | metrics.

Exit status is 0 on success, 1 for model or estimation failures and 2 for
bad input (missing files, malformed configs or data).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .estimator import FitResult, assemble_normal_system, fit, fit_oracle, make_design
from .exceptions import GTNARError
from .experiment import ExperimentConfig, generate_dataset, run_benchmark
from .inference import (
    Replicate,
    coefficient_inference,
    simulation_metrics,
    write_metric_csv,
)
from .io import dump_json, read_dataset, validate_json
from .networks import GroupAssignment
from .selection import default_kappa, select

logger = logging.getLogger("gtnar")

EXIT_OK, EXIT_MODEL, EXIT_INPUT = 0, 1, 2


def _int_list(text: str) -> tuple:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"entries must be positive, got {text!r}")
    return vals


def _groups(values, order, flag):
    if values is None:
        raise ValueError(f"{flag} is required")
    if len(values) == 1:
        values = values * order
    if len(values) != order:
        raise ValueError(f"{flag} needs {order} entries, got {len(values)}")
    return tuple(values)


def _out_dir(args, default: Path) -> Path:
    out = Path(args.out) if args.out else default
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fit_options(args) -> dict:
    return {"max_iter": args.max_iter, "n_trials": args.trials}


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        if args.dims is None or args.n_times is None or args.g is None:
            raise ValueError("give --config or all of --dims, --n-times and --g")
        cfg = ExperimentConfig(
            dims=args.dims,
            n_times=args.n_times,
            n_groups=_groups(args.g, len(args.dims), "--g"),
            n_covariates=None if args.p is None else _groups_p(args.p, len(args.dims)),
        )
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "noise_sd", None) is not None:
        updates["noise_sd"] = args.noise_sd
    if getattr(args, "replicates", None) is not None:
        updates["replicates"] = args.replicates
    if getattr(args, "kappa", None) is not None:
        updates["kappa"] = args.kappa
    if getattr(args, "g_max", None) is not None:
        updates["g_max"] = _groups(args.g_max, len(cfg.dims), "--g-max")
        updates["select"] = True
    if updates:
        d = cfg.to_dict()
        d.update(updates)
        cfg = ExperimentConfig(**d)
    return cfg


def _groups_p(text, order):
    vals = tuple(int(v) for v in text.split(","))
    if len(vals) == 1:
        vals = vals * order
    if len(vals) != order or any(v < 0 for v in vals):
        raise ValueError(f"--p needs {order} non-negative entries")
    return vals


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    out = args.out or cfg.out
    if out is None:
        raise ValueError("--out is required (or set 'out' in the config)")
    path = generate_dataset(cfg, out)
    print(f"wrote {path}")
    return EXIT_OK


def _load(args):
    if not args.manifest:
        raise ValueError("--manifest is required")
    data = read_dataset(args.manifest)
    return data, make_design(data.series, data.networks, data.covariates)


def cmd_fit(args) -> int:
    data, design = _load(args)
    out = _out_dir(args, Path(args.manifest).parent)
    if args.oracle:
        if not data.has_truth:
            raise ValueError("--oracle needs truth memberships in the manifest")
        res = fit_oracle(design, data.memberships)
    else:
        g = _groups(args.g, design.order, "--g")
        res = fit(design, g, seed=args.seed, **_fit_options(args))
    inf = coefficient_inference(res)
    doc = res.to_dict()
    doc["oracle"] = bool(args.oracle)
    validate_json(doc, "fit")
    dump_json(doc, out / "fit.json")
    inf_doc = inf.to_dict()
    validate_json(inf_doc, "inference")
    dump_json(inf_doc, out / "inference.json")
    table = inf.table()
    (out / "coefficients.txt").write_text(table + "\n")
    print(f"objective {res.q_value:.6g} after {res.n_iter} iterations (converged: {res.converged})")
    print(table)
    return EXIT_OK


def cmd_select(args) -> int:
    _, design = _load(args)
    out = _out_dir(args, Path(args.manifest).parent)
    g_max = _groups(args.g_max, design.order, "--g-max")
    kappa = default_kappa(design.n_times, args.C) if args.kappa is None else args.kappa
    sel = select(design, g_max, kappa=kappa, seed=args.seed, **_fit_options(args))
    doc = sel.to_dict()
    validate_json(doc, "selection")
    dump_json(doc, out / "selection.json")
    table = sel.table()
    (out / "selection.txt").write_text(table + "\n")
    print(table)
    print(f"chosen G = ({', '.join(map(str, sel.chosen))}), kappa = {kappa:.6g}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, Path(cfg.out) if cfg.out else Path("."))
    jobs = args.jobs or os.cpu_count() or 1
    results = run_benchmark(cfg, jobs=jobs, fit_options=_fit_options(args))
    rows, settings, timing = [], [], []
    for r in results:
        rows.extend(r.metrics.rows(r.dims, r.n_times))
        md = r.metrics.to_dict()
        validate_json(md, "metrics")
        settings.append({"dims": list(r.dims), "n_times": r.n_times, "metrics": md, "failures": r.failures})
        timing.append(
            f"dims={','.join(map(str, r.dims))} T={r.n_times} R={cfg.replicates} "
            f"failures={r.failures} seconds={r.seconds:.2f} per_replicate={r.seconds / cfg.replicates:.3f}"
        )
    write_metric_csv(rows, out / "metrics.csv")
    doc = {"settings": settings, "config": cfg.to_dict()}
    validate_json(doc, "benchmark")
    dump_json(doc, out / "benchmark.json")
    # wall-clock numbers stay out of the JSON/CSV so those remain reproducible
    (out / "timing.txt").write_text("\n".join(timing) + "\n")
    _print_rows(rows)
    print("\n".join(timing))
    return EXIT_OK


def _print_rows(rows):
    cols = list(rows[0].keys())
    print("  ".join(f"{c:>12}" for c in cols))
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(f"{v:>12.4f}" if isinstance(v, float) else f"{v!s:>12}")
        print("  ".join(cells))


def load_fit(path, design) -> FitResult:
    """Rebuild a FitResult from its JSON document on the original data."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"fit file not found: {path}")
    with path.open() as fh:
        doc = json.load(fh)
    validate_json(doc, "fit")
    n_groups = tuple(doc["n_groups"])
    mem = [GroupAssignment(np.asarray(m) - 1, g) for m, g in zip(doc["memberships"], n_groups)]
    system = assemble_normal_system(design, mem, allow_empty=True)
    xi = np.asarray(doc["xi"], dtype=float)
    if xi.size != system.b.size:
        raise ValueError(f"{path}: {xi.size} coefficients, data imply {system.b.size}")
    trace = [(t["objective"], t["changes"]) for t in doc["trace"]]
    return FitResult(
        xi, mem, float(doc["objective"]), system, trace, doc["converged"], doc["n_iter"], design.n_obs, design.tss
    )


def cmd_metrics(args) -> int:
    data, design = _load(args)
    if not data.has_truth:
        raise ValueError("metrics need truth memberships and parameters in the manifest")
    if not args.fit:
        raise ValueError("--fit is required")
    out = _out_dir(args, Path(args.manifest).parent)
    reps = []
    for path in args.fit:
        res = load_fit(path, design)
        inf = coefficient_inference(res) if res.n_groups == data.params.n_groups else None
        orc = fit_oracle(design, data.memberships)
        reps.append(Replicate(res, inf, orc, None, None))
    report = simulation_metrics(reps, data.params, data.memberships)
    doc = report.to_dict()
    validate_json(doc, "metrics")
    dump_json(doc, out / "metrics.json")
    rows = report.rows(design.dims, design.n_times)
    write_metric_csv(rows, out / "metrics.csv")
    _print_rows(rows)
    for l, (m, c) in enumerate(zip(report.misclustering, report.chi_error)):
        print(f"mode {l + 1}: misclustering {m:.4f}, chi error {c:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gtnar", description="Grouped tensor network autoregression toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifest=True):
        if manifest:
            p.add_argument("--manifest", help="dataset manifest JSON")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--max-iter", type=int, default=100)
        p.add_argument("--trials", type=int, default=3, help="starts per initialization kind")

    def config_flags(p):
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--dims", type=_int_list, help="mode sizes, e.g. 40,30")
        p.add_argument("--n-times", type=int)
        p.add_argument("--g", type=_int_list, help="true group counts")
        p.add_argument("--p", help="covariates per mode, e.g. 3,3")
        p.add_argument("--noise-sd", type=float)

    p = sub.add_parser("generate", help="simulate a dataset bundle")
    common(p, manifest=False)
    config_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit at given group counts")
    common(p)
    p.add_argument("--g", type=_int_list, help="group counts per mode (comma list)")
    p.add_argument("--oracle", action="store_true", help="fit at the true memberships")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="choose group counts by QIC")
    common(p)
    p.add_argument("--g-max", type=_int_list, required=True)
    p.add_argument("--kappa", type=float)
    p.add_argument("--C", type=float, default=40.0, help="constant in the default penalty")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("benchmark", help="Monte Carlo replicates and metric table")
    common(p, manifest=False)
    config_flags(p)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--replicates", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--g-max", type=_int_list, help="also run selection over this grid")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("metrics", help="score fits against the manifest truth")
    common(p)
    p.add_argument("--fit", action="append", help="fit JSON (repeatable)")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("GTNAR_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GTNARError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (OSError, ValueError, KeyError, jsonschema.ValidationError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
