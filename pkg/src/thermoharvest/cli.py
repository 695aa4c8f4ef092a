"""Command-line entry point.

Subcommands: simulate, spectrum, sweep, dataset, train, predict, optimize,
validate, report.  All randomness derives from the config's master seed;
every output file embeds the master seed, the calibration ledger version and
the artifact version.
"""

from __future__ import annotations

import argparse
import functools
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import DEFAULT_CALIBRATION
from .config import ConfigError, RunConfig, load_config, output_header_meta, parse_config
from .designs import DESIGN_COLUMNS, DesignPoint, default_design, to_metasurface
from .moo import NsgaConfig, ParetoFront, device_objectives, evolve
from .oracles import run_all
from .optics import absorptance_spectrum, default_wavelength_grid, spectrum_rows
from .pipeline import (DATASET_HEADER, METRIC_COLUMNS, evaluate_design, generate_dataset,
                       read_dataset_csv, write_dataset_csv, write_dataset_sidecar)
from .surrogate import cross_validate, gpr_predict, load_model, save_model, tune_hyperparameters
from .svgplot import line_plot, scatter_plot

WORKERS_ENV_VAR = "THERMOHARVEST_WORKERS"


class CliError(RuntimeError):
    pass


def _meta_comment(config: RunConfig) -> str:
    meta = output_header_meta(config)
    return " ".join(f"{k}={v}" for k, v in meta.items())


def _write_csv(path, header_comment: str, columns, rows) -> None:
    lines = [f"# {header_comment}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (int, float, np.floating))
                              else str(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, payload: dict, config: RunConfig) -> None:
    document = {"meta": output_header_meta(config), **payload}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_workers(args, config: RunConfig) -> int:
    if getattr(args, "workers", None):
        return args.workers
    env_value = os.environ.get(WORKERS_ENV_VAR)
    if env_value:
        return max(1, int(env_value))
    return config.workers


def _load_run_config(args) -> RunConfig:
    if args.config:
        config = load_config(args.config)
    else:
        config = parse_config("{}")
    for line in config.provenance:
        if args.verbose:
            print(f"config: {line}", file=sys.stderr)
    for line in config.warnings:
        print(f"warning: {line}", file=sys.stderr)
    return config


def _out_dir(args, config: RunConfig) -> Path:
    out = Path(args.out_dir) if getattr(args, "out_dir", None) else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    config = _load_run_config(args)
    out = _out_dir(args, config)
    metrics = evaluate_design(config.design, config.environment, config.incident)
    payload = {
        "design": dict(zip(DESIGN_COLUMNS, config.design.to_array().tolist())),
        "max_enh": metrics.max_enhancement,
        "pabs_W": metrics.absorbed_power,
        "dT_K": metrics.delta_T_eff,
        "voc_V": metrics.v_oc,
        "pout_W": metrics.p_out,
        "tdev_m": metrics.device_thickness,
    }
    path = out / "simulate.json"
    _write_json(path, payload, config)
    print(path)
    return 0


def cmd_spectrum(args) -> int:
    config = _load_run_config(args)
    out = _out_dir(args, config)
    grid = default_wavelength_grid()
    spectrum = absorptance_spectrum(to_metasurface(config.design), grid)
    csv_path = out / "spectrum.csv"
    _write_csv(csv_path, _meta_comment(config),
               ["wavelength_m", "absorptance", "reflectance"], spectrum_rows(spectrum))
    svg_path = out / "spectrum.svg"
    line_plot(svg_path, grid * 1e6,
              [spectrum.absorptance, spectrum.reflectance],
              ["absorptance", "reflectance"],
              x_label="wavelength (um)", y_label="fraction",
              title="Metasurface absorption spectrum",
              comment=_meta_comment(config))
    print(csv_path)
    print(svg_path)
    return 0


SWEEPABLE = dict(zip(DESIGN_COLUMNS,
                     ["arm_length_1", "arm_length_2", "arm_length_3", "flare_angle",
                      "gap", "metal_thickness", "spacer_thickness", "te_height", "te_width"]))


def cmd_sweep(args) -> int:
    config = _load_run_config(args)
    out = _out_dir(args, config)
    if args.param not in SWEEPABLE:
        raise CliError(f"unknown sweep parameter '{args.param}'; choose from {list(SWEEPABLE)}")
    field_name = SWEEPABLE[args.param]
    lo = args.min if args.min is not None else getattr(config.bounds, field_name)[0]
    hi = args.max if args.max is not None else getattr(config.bounds, field_name)[1]
    values = np.linspace(lo, hi, args.steps)
    rows = []
    for value in values:
        base = dict(zip(DESIGN_COLUMNS, config.design.to_array()))
        base[args.param] = float(value)
        design = DesignPoint.from_array([base[c] for c in DESIGN_COLUMNS])
        metrics = evaluate_design(design, config.environment, config.incident)
        rows.append((value,) + metrics.to_row())
    path = out / f"sweep_{args.param}.csv"
    _write_csv(path, _meta_comment(config), [args.param, *METRIC_COLUMNS], rows)
    print(path)
    return 0


def cmd_dataset(args) -> int:
    config = _load_run_config(args)
    out = _out_dir(args, config)
    n = args.n or config.sampler.n
    workers = _resolve_workers(args, config)
    dataset = generate_dataset(config.bounds, n, config.child_seed("dataset"),
                               config.environment, config.incident, workers=workers)
    csv_path = out / "dataset.csv"
    write_dataset_csv(dataset, csv_path, header_meta=output_header_meta(config))
    write_dataset_sidecar(dataset, out / "dataset.meta.json", master_seed=config.master_seed)
    print(csv_path)
    return 0


def cmd_train(args) -> int:
    config = _load_run_config(args)
    out = _out_dir(args, config)
    dataset = read_dataset_csv(args.dataset, bounds=config.bounds)
    targets = args.targets.split(",") if args.targets else ["dT_K", "pout_W"]
    report = {}
    for target in targets:
        if target not in METRIC_COLUMNS:
            raise CliError(f"unknown target '{target}'; choose from {METRIC_COLUMNS}")
        seed = config.child_seed(f"train:{target}")
        model = tune_hyperparameters(dataset.design_matrix(), dataset.metric_column(target),
                                     restarts=config.gpr.restarts, seed=seed,
                                     noise_variance=config.gpr.noise_variance)
        model_path = out / f"gpr_{target}.json"
        save_model(model, model_path, meta=output_header_meta(config))
        cv = cross_validate(dataset, folds=config.gpr.folds, target=target, seed=seed,
                            tune_restarts=config.gpr.restarts)
        report[target] = {
            "model_file": model_path.name,
            "cv_r_squared": cv.r_squared,
            "cv_rmse": cv.rmse,
            "log_marginal_likelihood": model.log_marginal_likelihood,
        }
        print(f"{target}: cv R^2 = {cv.r_squared:.4f}, rmse = {cv.rmse:.4e}")
    _write_json(out / "train_metrics.json", {"targets": report}, config)
    print(out / "train_metrics.json")
    return 0


def cmd_predict(args) -> int:
    config = _load_run_config(args)
    out = _out_dir(args, config)
    model = load_model(args.model)
    designs = _read_design_rows(args.designs)
    X = np.array([d.to_array() for d in designs])
    mean, variance = gpr_predict(model, X)
    rows = [tuple(x) + (m, v) for x, m, v in zip(X, mean, variance)]
    path = out / "predictions.csv"
    _write_csv(path, _meta_comment(config),
               [*DESIGN_COLUMNS, "prediction", "variance"], rows)
    print(path)
    return 0


def _read_design_rows(path) -> list[DesignPoint]:
    designs = []
    with open(path, encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                if header[: len(DESIGN_COLUMNS)] != list(DESIGN_COLUMNS):
                    raise CliError(
                        f"design input must start with columns {','.join(DESIGN_COLUMNS)}"
                    )
                continue
            values = [float(v) for v in line.split(",")[: len(DESIGN_COLUMNS)]]
            designs.append(DesignPoint.from_array(values))
    if not designs:
        raise CliError(f"no design rows found in {path}")
    return designs


def _surrogate_objective(design: DesignPoint, dt_model, pout_model) -> np.ndarray:
    x = design.to_array()
    dt_mean, _ = gpr_predict(dt_model, x)
    pout_mean, _ = gpr_predict(pout_model, x)
    thickness = design.metal_thickness + design.spacer_thickness + design.te_height
    return np.array([-dt_mean, -pout_mean, thickness])


def _direct_objective(design: DesignPoint, env, incident) -> np.ndarray:
    return device_objectives(evaluate_design(design, env, incident))


def cmd_optimize(args) -> int:
    config = _load_run_config(args)
    out = _out_dir(args, config)
    workers = _resolve_workers(args, config)
    nsga = NsgaConfig(
        population=config.nsga.population,
        generations=config.nsga.generations,
        crossover_prob=config.nsga.crossover_prob,
        sbx_eta=config.nsga.sbx_eta,
        mutation_prob_per_var=config.nsga.mutation_prob_per_var,
        mutation_eta=config.nsga.mutation_eta,
        seed=config.child_seed("optimize"),
        evaluator=config.nsga.evaluator,
    )
    if nsga.evaluator == "surrogate":
        if not (args.model_dt and args.model_pout):
            raise CliError("surrogate mode needs --model-dt and --model-pout")
        objective = functools.partial(
            _surrogate_objective,
            dt_model=load_model(args.model_dt),
            pout_model=load_model(args.model_pout),
        )
    else:
        objective = functools.partial(
            _direct_objective, env=config.environment, incident=config.incident
        )

    front, log = evolve(config.bounds, nsga, objective, workers=workers)

    # re-evaluate with the physics model before export, guarding against
    # surrogate optimism
    re_rows = []
    dt_values, pout_values = [], []
    for member in front.members:
        metrics = evaluate_design(member.design, config.environment, config.incident)
        re_rows.append(
            tuple(member.design.to_array())
            + (metrics.delta_T_eff, metrics.p_out, metrics.device_thickness,
               member.rank, member.crowding)
        )
        dt_values.append(metrics.delta_T_eff)
        pout_values.append(metrics.p_out)

    front_path = out / "front.csv"
    _write_csv(front_path, _meta_comment(config),
               [*DESIGN_COLUMNS, "dT_K", "pout_W", "tdev_m", "rank", "crowding"], re_rows)

    log_path = out / "generations.csv"
    _write_csv(log_path, _meta_comment(config),
               ["generation", "hypervolume", "best_dT_K", "best_pout_W",
                "best_tdev_m", "archive_size"],
               [(rec.generation, rec.hypervolume, -rec.best_objectives[0],
                 -rec.best_objectives[1], rec.best_objectives[2], rec.archive_size)
                for rec in log])

    knee = _knee_point_index(dt_values, pout_values)
    svg_path = out / "front.svg"
    scatter_plot(svg_path, dt_values, np.array(pout_values) * 1e6,
                 x_label="temperature gradient (K)", y_label="power per junction (uW)",
                 title="Pareto front: gradient vs output power",
                 comment=_meta_comment(config), highlight=knee)
    print(front_path)
    print(log_path)
    print(svg_path)
    return 0


def _knee_point_index(dt_values, pout_values) -> int | None:
    """Member closest to the normalized ideal corner (max dT, max P)."""
    if not dt_values:
        return None
    dt = np.asarray(dt_values, float)
    pp = np.asarray(pout_values, float)
    dt_span = dt.max() - dt.min() or 1.0
    pp_span = pp.max() - pp.min() or 1.0
    distance = ((dt.max() - dt) / dt_span) ** 2 + ((pp.max() - pp) / pp_span) ** 2
    return int(np.argmin(distance))


def cmd_validate(args) -> int:
    config = _load_run_config(args)
    results = run_all(seed=config.child_seed("validate") % (2**31))
    width = max(len(r.name) for r in results)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name.ljust(width)}  {r.detail}")
        failed += 0 if r.passed else 1
    return 0 if failed == 0 else 1


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def cmd_report(args) -> int:
    config = _load_run_config(args)
    out = _out_dir(args, config)
    manifest = []
    for name in sorted(os.listdir(out)):
        path = out / name
        if path.is_file() and name != "report.json":
            manifest.append({"file": name, "sha256": _sha256(path), "bytes": path.stat().st_size})
    payload: dict = {"manifest": manifest}

    front_path = out / "front.csv"
    if front_path.exists():
        rows = _read_front_rows(front_path)
        if rows:
            dt = [r["dT_K"] for r in rows]
            pout = [r["pout_W"] for r in rows]
            knee = _knee_point_index(dt, pout)
            payload["selected_design"] = rows[knee]
    _write_json(out / "report.json", payload, config)
    print(out / "report.json")
    return 0


def _read_front_rows(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append({k: float(v) for k, v in zip(header, line.split(","))})
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoharvest",
        description="Design toolkit for plasmonically heated wearable thermoelectric harvesters",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration file")
        p.add_argument("--out-dir", help="output directory (default from config)")
        p.add_argument("--workers", type=int, default=None,
                       help=f"worker processes (fallback: ${WORKERS_ENV_VAR}, then config)")
        p.add_argument("--verbose", action="store_true", help="echo applied config defaults")
        return p

    common(sub.add_parser("simulate", help="evaluate the configured design")) \
        .set_defaults(func=cmd_simulate)
    common(sub.add_parser("spectrum", help="export the absorptance spectrum")) \
        .set_defaults(func=cmd_spectrum)

    sweep = common(sub.add_parser("sweep", help="scan one design parameter"))
    sweep.add_argument("--param", required=True, choices=sorted(DESIGN_COLUMNS))
    sweep.add_argument("--min", type=float, default=None)
    sweep.add_argument("--max", type=float, default=None)
    sweep.add_argument("--steps", type=int, default=25)
    sweep.set_defaults(func=cmd_sweep)

    dataset = common(sub.add_parser("dataset", help="generate a sampled dataset"))
    dataset.add_argument("--n", type=int, default=None, help="sample count (default from config)")
    dataset.set_defaults(func=cmd_dataset)

    train = common(sub.add_parser("train", help="fit surrogate models on a dataset"))
    train.add_argument("--dataset", required=True)
    train.add_argument("--targets", default=None, help="comma-separated metric columns")
    train.set_defaults(func=cmd_train)

    predict = common(sub.add_parser("predict", help="batch-predict designs with a model"))
    predict.add_argument("--model", required=True)
    predict.add_argument("--designs", required=True, help="CSV with the design columns")
    predict.set_defaults(func=cmd_predict)

    optimize = common(sub.add_parser("optimize", help="run the multi-objective search"))
    optimize.add_argument("--model-dt", default=None, help="surrogate model for dT_K")
    optimize.add_argument("--model-pout", default=None, help="surrogate model for pout_W")
    optimize.set_defaults(func=cmd_optimize)

    common(sub.add_parser("validate", help="run the oracle suite")) \
        .set_defaults(func=cmd_validate)
    common(sub.add_parser("report", help="bundle prior outputs with checksums")) \
        .set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
