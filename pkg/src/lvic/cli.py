"""Command-line front end: ``lvic fit | criteria | replicate | compare | simulate``.

Every subcommand accepts ``--config FILE`` (YAML) whose keys mirror the
long flags; flags given on the command line win.  JSON output keeps full
precision, CSV tables use 6 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .criteria import CRITERIA, CriterionResult, compare_models, evaluate, exact_loo_cv
from .data import ClusteredDataset, read_csv, write_csv
from .datasets import BUILTIN_DATA, CFA_TRUTH, RASCH_TRUTH, SMALL_RASCH_TRUTH, VC_TRUTH, load_builtin
from .errors import ConvergenceError, LvicError, ParseError, QuadratureConvergenceError
from .models import CFA_PATTERNS, build_model, simulate
from .quadrature import select_M, write_trace
from .sampler import ChainConfig, DrawMatrix, run_mcmc

log = logging.getLogger("lvic")

EXIT_ERROR = 1
EXIT_CONVERGENCE = 2

ALL_CRITERIA = CRITERIA + ("exact-loo",)
_ALIASES = {
    "dic": "dic-spiegelhalter",
    "loo": "psis-loo",
    "loco": "psis-loo",
    "luo": "psis-loo",
    "psis-loco": "psis-loo",
    "psis-luo": "psis-loo",
    "exact-loco": "exact-loo",
    "exact-luo": "exact-loo",
}
_SUFFIX_MODE = {"c": "conditional", "m": "marginal"}


# --- configuration ----------------------------------------------------------


def load_config(path) -> dict:
    """Read a YAML mapping; syntax errors carry the offending line."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ParseError(f"invalid config: {exc.problem}", line=line, path=str(path)) from None
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}", path=str(path)) from None
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise ParseError("config must be a key/value mapping", line=1, path=str(path))
    return cfg


def _merged(args, cfg: dict, key: str, default=None):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    return cfg.get(key, cfg.get(key.replace("_", "-"), default))


def load_data(spec, seed: int = 0) -> ClusteredDataset:
    """Built-in name (``eight-schools[:scale]``, ``synthetic-cfa`` ...) or CSV path."""
    spec = str(spec)
    name, _, arg = spec.partition(":")
    if name in BUILTIN_DATA:
        if name == "eight-schools":
            return load_builtin(name, scale=float(arg or 1.0))
        return load_builtin(name, seed=int(arg) if arg else seed)
    return read_csv(spec)


def default_model_for(data_spec: str) -> str | None:
    name, _, arg = str(data_spec).partition(":")
    return {
        "eight-schools": f"eight-schools:{arg}" if arg else "eight-schools",
        "synthetic-vc": "vc",
        "synthetic-cfa": "cfa:2",
        "synthetic-rasch": "rasch:4",
        "small-rasch": "rasch:1",
    }.get(name)


def chain_config(cfg: dict, seed: int | None) -> ChainConfig:
    base = ChainConfig.from_mapping(cfg.get("chains"))
    return replace(base, seed=int(seed)) if seed is not None else base


def parse_criteria(items, modes) -> list[tuple[str, str]]:
    """Expand ``waic``/``waic-m``/``psis-loco`` style names into (criterion, mode) pairs."""
    out = []
    for raw in items:
        for tok in str(raw).split(","):
            tok = tok.strip().lower()
            if not tok:
                continue
            mode = None
            if tok in ("psis-loco", "exact-loco", "loco"):
                mode = "marginal"
            elif tok in ("psis-luo", "exact-luo", "luo"):
                mode = "conditional"
            name = _ALIASES.get(tok, tok)
            if name not in ALL_CRITERIA and tok[-2:-1] == "-" and tok[-1] in _SUFFIX_MODE:
                name, mode = _ALIASES.get(tok[:-2], tok[:-2]), _SUFFIX_MODE[tok[-1]]
            if name not in ALL_CRITERIA:
                raise LvicError(f"unknown criterion {tok!r}; choose from {ALL_CRITERIA}")
            for m in [mode] if mode else modes:
                if (name, m) not in out:
                    out.append((name, m))
    return out


def parse_modes(value) -> list[str]:
    if value is None or value == "both":
        return ["conditional", "marginal"]
    if isinstance(value, str):
        value = value.split(",")
    modes = []
    for v in value:
        v = {"c": "conditional", "m": "marginal"}.get(v.strip(), v.strip())
        if v not in ("conditional", "marginal"):
            raise LvicError(f"mode must be conditional, marginal or both, got {v!r}")
        modes.append(v)
    return modes


def parse_quad(value):
    if value is None or str(value).lower() == "auto":
        return "auto"
    M = int(value)
    if M < 1:
        raise LvicError("--quad-points must be 'auto' or a positive integer")
    return M


# --- output -----------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.6g}"
    return str(v)


def write_table(rows: list[dict], path, columns=None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, allow_nan=True)
        fh.write("\n")


RESULT_COLUMNS = ["criterion", "mode", "value", "p_eff", "mcerr_value", "mcerr_p"]


def _result_row(r: CriterionResult, **extra) -> dict:
    return {**extra, "criterion": r.name, "mode": r.mode, "value": r.value, "p_eff": r.p_eff,
            "mcerr_value": r.mcerr_value, "mcerr_p": r.mcerr_p}


# --- pipeline pieces --------------------------------------------------------


def compute_criteria(model, data, draws, requested, quad="auto", select_target="dic",
                     chains_cfg=None, max_folds=None, seed=0, out_dir=None):
    """Evaluate (criterion, mode) pairs on one fit; returns results in request order."""
    model = model.prepare(data)
    results = {}
    M = None
    need_marginal = any(m == "marginal" and c != "exact-loo" for c, m in requested)
    if need_marginal:
        if quad == "auto":
            if not model.has_closed_marginal:
                M, trace = select_M(model, data, draws, target=select_target)
                if out_dir is not None:
                    write_trace(trace, Path(out_dir) / "quad_trace.csv")
        else:
            M = quad
    for mode in ("conditional", "marginal"):
        names = [c for c, m in requested if m == mode and c != "exact-loo"]
        if names:
            for r in evaluate(model, data, draws, criteria=names, modes=(mode,), M=M, seed=seed):
                results[(r.name, mode)] = r
    for c, mode in requested:
        if c == "exact-loo":
            fold = "unit" if mode == "conditional" else "cluster"
            n = data.N if fold == "unit" else data.J
            folds = None if max_folds is None or max_folds >= n else list(range(int(max_folds)))
            results[(c, mode)] = exact_loo_cv(model, data, chains_cfg, fold=fold, folds=folds, M=M or 31)
    order = []
    for c, m in requested:
        for (name, mode), r in results.items():
            if mode == m and (name == c or name.startswith(c)) and r not in order:
                order.append(r)
    if M is not None:
        for r in order:
            if r.mode == "marginal":
                r.diagnostics.setdefault("quad_points", M)
    return order


# --- subcommands ------------------------------------------------------------


def _setup(args):
    cfg = load_config(args.config)
    seed = _merged(args, cfg, "seed", 0)
    data_spec = _merged(args, cfg, "data")
    if data_spec is None:
        raise LvicError("--data is required (built-in name or CSV path)")
    data = load_data(data_spec, seed=int(seed))
    model_spec = _merged(args, cfg, "model") or default_model_for(data_spec)
    if model_spec is None:
        raise LvicError("--model is required for CSV data")
    model = build_model(model_spec, data)
    out = Path(_merged(args, cfg, "out", "lvic-out"))
    out.mkdir(parents=True, exist_ok=True)
    return cfg, int(seed), data, model, out


def cmd_fit(args) -> int:
    cfg, seed, data, model, out = _setup(args)
    config = chain_config(cfg, seed)
    status = 0
    try:
        draws = run_mcmc(model, data, config)
    except ConvergenceError as exc:
        draws, status = exc.draws, EXIT_CONVERGENCE
        log.error("%s", exc)
    draws.to_csv(out / "draws.csv")
    report = {
        "converged": bool(draws.info.get("converged", status == 0)),
        "max_rhat": draws.info.get("max_rhat"),
        "rhat": draws.info.get("rhat", {}),
        "ess": draws.ess(),
        "acceptance": draws.info.get("acceptance", {}),
        "extensions": draws.info.get("extensions", 0),
        "seed": seed,
        "n_chains": draws.n_chains,
        "n_keep": draws.n_iter,
    }
    write_json(report, out / "convergence.json")
    print(f"wrote {out / 'draws.csv'} ({draws.S} draws); max R-hat {report['max_rhat']:.4f}")
    return status


def cmd_criteria(args) -> int:
    cfg, seed, data, model, out = _setup(args)
    draws_path = _merged(args, cfg, "draws")
    if draws_path is None:
        raise LvicError("--draws is required (CSV written by 'lvic fit')")
    draws = DrawMatrix.from_csv(draws_path, model.names)
    modes = parse_modes(_merged(args, cfg, "mode"))
    requested = parse_criteria(_merged(args, cfg, "criteria", list(CRITERIA)), modes)
    results = compute_criteria(
        model, data, draws, requested,
        quad=parse_quad(_merged(args, cfg, "quad_points")),
        select_target=cfg.get("select_target", "dic"),
        chains_cfg=chain_config(cfg, seed),
        max_folds=cfg.get("max_folds"),
        seed=seed,
        out_dir=out,
    )
    write_json([r.to_dict(pointwise=True) for r in results], out / "criteria.json")
    write_table([_result_row(r) for r in results], out / "criteria.csv", RESULT_COLUMNS)
    for r in results:
        print(f"{r.name:>18} {r.mode:<11} {r.value:12.4f}  p={r.p_eff:9.4f}  mcerr={r.mcerr_value:.4f}")
    return 0


def _replicate_job(job):
    rep, label, model_spec, data_spec, data_seed, chains, seed, requested, quad = job
    data = load_data(data_spec, seed=data_seed)
    model = build_model(model_spec, data)
    config = replace(ChainConfig.from_mapping(chains), seed=seed)
    try:
        draws = run_mcmc(model, data, config)
        flag = ""
    except ConvergenceError as exc:
        draws, flag = exc.draws, "not-converged"
    try:
        results = compute_criteria(model, data, draws, requested, quad=quad, chains_cfg=config, seed=seed)
    except LvicError as exc:
        return [{"rep": rep, "model": label, "criterion": c, "mode": m, "value": math.nan, "p_eff": math.nan,
                 "mcerr": math.nan, "flag": f"failed: {exc}"} for c, m in requested]
    return [
        {"rep": rep, "model": label, "criterion": r.name, "mode": r.mode, "value": r.value,
         "p_eff": r.p_eff, "mcerr": r.mcerr_p, "flag": flag}
        for r in results
    ]


def replicate_seed(seed: int, rep: int, model_index: int) -> int:
    return int(np.random.SeedSequence((seed, rep, model_index)).generate_state(1)[0] % (2**31))


def cmd_replicate(args) -> int:
    cfg = load_config(args.config)
    seed = int(_merged(args, cfg, "seed", 0))
    reps = int(_merged(args, cfg, "reps", 10))
    out = Path(_merged(args, cfg, "out", "lvic-out"))
    out.mkdir(parents=True, exist_ok=True)
    data_spec = _merged(args, cfg, "data", "synthetic-cfa")
    suite = _merged(args, cfg, "model")
    if suite == "cfa-suite" or (suite is None and data_spec == "synthetic-cfa"):
        models = [f"cfa:{p}" for p in CFA_PATTERNS]
    elif suite is None:
        models = [default_model_for(data_spec)]
    else:
        models = suite if isinstance(suite, list) else str(suite).split(",")
    modes = parse_modes(_merged(args, cfg, "mode"))
    requested = parse_criteria(_merged(args, cfg, "criteria", ["dic-spiegelhalter"]), modes)
    quad = parse_quad(_merged(args, cfg, "quad_points"))
    chains = cfg.get("chains")
    jobs = [
        (rep, spec, spec, data_spec, seed, chains, replicate_seed(seed, rep, k), requested, quad)
        for rep in range(1, reps + 1)
        for k, spec in enumerate(models)
    ]
    workers = int(os.environ.get("LVIC_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_replicate_job, jobs))
    else:
        chunks = [_replicate_job(j) for j in jobs]
    rows = [row for chunk in chunks for row in chunk]
    write_table(rows, out / "replicates.csv", ["rep", "model", "criterion", "mode", "value", "p_eff", "mcerr", "flag"])
    print(f"wrote {out / 'replicates.csv'} ({len(rows)} rows)")
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    seed = int(_merged(args, cfg, "seed", 0))
    data_spec = _merged(args, cfg, "data")
    if data_spec is None:
        raise LvicError("--data is required")
    data = load_data(data_spec, seed=seed)
    specs = _merged(args, cfg, "model")
    if not specs or len(specs) < 2:
        raise LvicError("compare needs at least two --model options")
    out = Path(_merged(args, cfg, "out", "lvic-out"))
    out.mkdir(parents=True, exist_ok=True)
    modes = parse_modes(_merged(args, cfg, "mode", "marginal"))
    requested = parse_criteria(_merged(args, cfg, "criteria", ["waic"]), modes)
    quad = parse_quad(_merged(args, cfg, "quad_points"))
    config = chain_config(cfg, seed)
    per_model = {}
    status = 0
    for spec in specs:
        model = build_model(spec, data)
        try:
            draws = run_mcmc(model, data, config)
        except ConvergenceError as exc:
            log.error("%s: %s", spec, exc)
            draws, status = exc.draws, EXIT_CONVERGENCE
        per_model[spec] = compute_criteria(model, data, draws, requested, quad=quad, chains_cfg=config, seed=seed)
    rows, report = [], []
    for i, (crit, mode) in enumerate(requested):
        cmp = compare_models([per_model[s][i] for s in specs], names=specs)
        for row in cmp.table():
            rows.append({"criterion": cmp.results[0].name, "mode": mode, **row})
        report.append({"criterion": cmp.results[0].name, "mode": mode, "table": cmp.table(), "pairs": cmp.pairs})
    write_json(report, out / "compare.json")
    write_table(rows, out / "compare.csv", ["criterion", "mode", "model", "value", "delta", "p_eff", "mcerr_value"])
    for row in rows:
        print(f"{row['criterion']:>18} {row['mode']:<11} {row['model']:<16} {row['value']:12.4f} {row['delta']:+10.4f}")
    return status


_TRUTHS = {"synthetic-vc": VC_TRUTH, "synthetic-cfa": CFA_TRUTH, "synthetic-rasch": RASCH_TRUTH,
           "small-rasch": SMALL_RASCH_TRUTH}


def cmd_simulate(args) -> int:
    """Write a dataset: a built-in generator, or replicate data at the
    posterior mean of a draws file."""
    cfg = load_config(args.config)
    seed = int(_merged(args, cfg, "seed", 0))
    data_spec = _merged(args, cfg, "data")
    if data_spec is None:
        raise LvicError("--data is required")
    out = Path(_merged(args, cfg, "out", "lvic-out"))
    out.mkdir(parents=True, exist_ok=True)
    reps = int(_merged(args, cfg, "reps", 1))
    draws_path = _merged(args, cfg, "draws")
    data = load_data(data_spec, seed=seed)
    paths = []
    for r in range(reps):
        if draws_path is None:
            name = str(data_spec).partition(":")[0]
            sim = data if name == "eight-schools" or name not in BUILTIN_DATA else load_data(name, seed=seed + r)
        else:
            model = build_model(_merged(args, cfg, "model") or default_model_for(data_spec), data)
            draws = DrawMatrix.from_csv(draws_path, model.names)
            sim = simulate(model, draws.flat_theta.mean(axis=0), seed=seed + r, data=data)
        path = out / (f"data_{r + 1}.csv" if reps > 1 else "data.csv")
        write_csv(sim, path)
        paths.append(str(path))
    print("wrote " + ", ".join(paths))
    return 0


# --- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lvic", description="Conditional and marginal information criteria for latent variable models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, multi_model=False):
        sp.add_argument("--config", help="YAML file with defaults for any flag")
        if multi_model:
            sp.add_argument("--model", action="append", help="model spec, repeatable")
        else:
            sp.add_argument("--model", help="model spec, e.g. vc, cfa:2a, rasch:4, eight-schools:4")
        sp.add_argument("--data", help=f"CSV path or built-in: {', '.join(sorted(BUILTIN_DATA))}")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")

    def crit(sp):
        sp.add_argument("--criteria", action="append",
                        help="comma list: dic-spiegelhalter, dic-plummer, waic, psis-loo, exact-loo "
                             "(suffix -c/-m selects a mode)")
        sp.add_argument("--mode", help="conditional, marginal or both")
        sp.add_argument("--quad-points", dest="quad_points", help="auto or a fixed number of points")

    sp = sub.add_parser("fit", help="run the sampler and write draws")
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("criteria", help="evaluate criteria on a draws file")
    common(sp)
    sp.add_argument("--draws", help="draws CSV")
    crit(sp)
    sp.set_defaults(func=cmd_criteria)

    sp = sub.add_parser("replicate", help="repeat seeded fits and tabulate criteria")
    common(sp)
    sp.add_argument("--reps", type=int)
    crit(sp)
    sp.set_defaults(func=cmd_replicate)

    sp = sub.add_parser("compare", help="fit several models and rank them")
    common(sp, multi_model=True)
    crit(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("simulate", help="write synthetic or posterior-predictive data")
    common(sp)
    sp.add_argument("--draws", help="draws CSV; simulate at its posterior mean")
    sp.add_argument("--reps", type=int)
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except QuadratureConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (LvicError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
