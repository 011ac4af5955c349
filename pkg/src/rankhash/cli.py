"""Command line pipeline: preprocess, train, eval, benchmark.

Every command reads a flat `key = value` config file (# comments allowed),
takes `--out` for its output directory, and is a pure function of the config,
its input files, and the seed, so reruns are byte-identical. Failures exit
nonzero with a single `error:<category>: message` line on stderr.

Metrics CSVs use the schema `method,L_bits,K,seed,metric,value`, with
summary rows using seed = "mean" and "std". L_bits is the packed bit budget
L * ceil(log2 K), which makes rows comparable across methods.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .core import (
    Dataset,
    FormatError,
    HashModel,
    Hyperparams,
    RankHashError,
    ValidationError,
    child_seed,
    load_model,
    save_model,
    seeded_rng,
)
from .data import (
    apply_pca,
    calibrate_groundtruth,
    calibrate_pair_threshold,
    fit_pca,
    groundtruth_from_labels,
    load_csv,
    load_fvec,
    make_pairs,
    make_pairs_from_labels,
    row_normalize,
    save_fvec,
    split_dataset,
    synth_clusters,
)
from .evaluation import (
    aggregate_runs,
    average_precision,
    build_table,
    knn_hamming,
    knn_weighted,
    pr_curve_by_radius,
)
from .hashers import (
    encode_dataset,
    lsh_as_rsh,
    make_lsh_spec,
    make_wta_spec,
    symbol_bits,
    wta_as_rsh,
)
from .learning import TrainLog, train_rsh, train_srsh

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "main"]

KNOWN_METHODS = ("rsh", "srsh", "wta", "lsh")

# Fixed child-seed indices for the pipeline's independent random streams;
# per-run seeds start at _SEED_RUN0 so they never collide with these.
_SEED_DATA = 1
_SEED_PAIRS = 2
_SEED_RUN0 = 100


class ConfigError(RankHashError):
    """A config file entry is missing, unknown, or out of range."""


@dataclass(frozen=True)
class ExperimentConfig:
    # data source: either a file to split or a synthetic cluster spec
    input: str = ""
    synthetic: bool = False
    clusters: int = 4
    per_cluster: int = 100
    dim: int = 16
    separation: float = 10.0
    noise_sigma: float = 1.0
    query_per_cluster: int = 50
    train_count: int = 1000
    query_count: int = 3000
    # preprocessing
    center: bool = True
    pca: int = 0
    # methods and hyperparameters
    methods: tuple = ("rsh",)
    K: int = 4
    L: int = 8
    rho: float = 1.0
    lam: float = 1.0
    eta: float = 0.1
    epochs: int = 50
    tol: float = 1e-4
    eps_min: float = 1e-4
    seed: int = 0
    # supervision
    max_pairs: int = 20000
    pos_fraction: float = 0.3
    neighbor_avg: float = 50.0
    # (rho, lam) sweep
    sweep: bool = False
    rho_grid: tuple = ()
    lambda_grid: tuple = ()
    # evaluation
    radius_list: tuple = (2, 3)
    k_list: tuple = (50, 100)
    seeds: int = 10
    # benchmark code-length sweep
    L_list: tuple = ()
    # stage wiring (default: the --out directory itself)
    data_dir: str = ""
    models_dir: str = ""


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_int(raw: str) -> int:
    return int(raw.strip())


def _parse_float(raw: str) -> float:
    return float(raw.strip())


def _parse_str(raw: str) -> str:
    return raw.strip()


def _split_list(raw: str):
    return [part.strip() for part in raw.split(",") if part.strip()]


def _parse_ints(raw: str) -> tuple:
    return tuple(int(p) for p in _split_list(raw))


def _parse_floats(raw: str) -> tuple:
    return tuple(float(p) for p in _split_list(raw))


def _parse_strs(raw: str) -> tuple:
    return tuple(p.lower() for p in _split_list(raw))


# config key -> (dataclass field, parser); "lambda" and "pca" keep their
# natural config spellings.
_CONFIG_KEYS = {
    "input": ("input", _parse_str),
    "synthetic": ("synthetic", _parse_bool),
    "clusters": ("clusters", _parse_int),
    "per_cluster": ("per_cluster", _parse_int),
    "dim": ("dim", _parse_int),
    "separation": ("separation", _parse_float),
    "noise_sigma": ("noise_sigma", _parse_float),
    "query_per_cluster": ("query_per_cluster", _parse_int),
    "train_count": ("train_count", _parse_int),
    "query_count": ("query_count", _parse_int),
    "center": ("center", _parse_bool),
    "pca": ("pca", _parse_int),
    "methods": ("methods", _parse_strs),
    "K": ("K", _parse_int),
    "L": ("L", _parse_int),
    "rho": ("rho", _parse_float),
    "lambda": ("lam", _parse_float),
    "eta": ("eta", _parse_float),
    "epochs": ("epochs", _parse_int),
    "tol": ("tol", _parse_float),
    "eps_min": ("eps_min", _parse_float),
    "seed": ("seed", _parse_int),
    "max_pairs": ("max_pairs", _parse_int),
    "pos_fraction": ("pos_fraction", _parse_float),
    "neighbor_avg": ("neighbor_avg", _parse_float),
    "sweep": ("sweep", _parse_bool),
    "rho_grid": ("rho_grid", _parse_floats),
    "lambda_grid": ("lambda_grid", _parse_floats),
    "radius_list": ("radius_list", _parse_ints),
    "k_list": ("k_list", _parse_ints),
    "seeds": ("seeds", _parse_int),
    "L_list": ("L_list", _parse_ints),
    "data_dir": ("data_dir", _parse_str),
    "models_dir": ("models_dir", _parse_str),
}

_DEFAULT_GRID = (0.5, 1.0, 2.0)


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat `key = value` config text with # comments."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        field_name, parser = _CONFIG_KEYS[key]
        try:
            values[field_name] = parser(raw_value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def validate_config(cfg: ExperimentConfig, command: str) -> None:
    def bad(field_name: str, why: str):
        raise ConfigError(f"{field_name}: {why}")

    if not cfg.methods:
        bad("methods", "must list at least one method")
    for method in cfg.methods:
        if method not in KNOWN_METHODS:
            bad("methods", f"unknown method {method!r}; choose from {', '.join(KNOWN_METHODS)}")
    if cfg.K < 2:
        bad("K", "must be >= 2")
    if cfg.L < 1:
        bad("L", "must be >= 1")
    if cfg.rho < 0:
        bad("rho", "must be >= 0")
    if cfg.lam < 0:
        bad("lambda", "must be >= 0")
    if cfg.eta <= 0:
        bad("eta", "must be > 0")
    if cfg.epochs < 1:
        bad("epochs", "must be >= 1")
    if cfg.tol < 0:
        bad("tol", "must be >= 0")
    if not 0 < cfg.eps_min < 0.5:
        bad("eps_min", "must lie strictly between 0 and 0.5")
    if cfg.seed < 0:
        bad("seed", "must be >= 0")
    if cfg.max_pairs < 1:
        bad("max_pairs", "must be >= 1")
    if not 0 < cfg.pos_fraction < 1:
        bad("pos_fraction", "must lie strictly between 0 and 1")
    if cfg.neighbor_avg < 1:
        bad("neighbor_avg", "must be >= 1")
    if cfg.seeds < 1:
        bad("seeds", "must be >= 1")
    if not cfg.radius_list:
        bad("radius_list", "must list at least one radius")
    for R in cfg.radius_list:
        if R < 0:
            bad("radius_list", "radii must be >= 0")
    for k in cfg.k_list:
        if k < 1:
            bad("k_list", "cutoffs must be >= 1")
    if cfg.synthetic:
        if cfg.clusters < 1:
            bad("clusters", "must be >= 1")
        if cfg.per_cluster < 1:
            bad("per_cluster", "must be >= 1")
        if cfg.query_per_cluster < 1:
            bad("query_per_cluster", "must be >= 1")
        if cfg.dim < 1:
            bad("dim", "must be >= 1")
        if cfg.separation < 0:
            bad("separation", "must be >= 0")
        if cfg.noise_sigma < 0:
            bad("noise_sigma", "must be >= 0")
    elif command in ("preprocess", "benchmark"):
        if not cfg.input:
            bad("input", "required unless synthetic = true")
        if cfg.train_count < 1:
            bad("train_count", "must be >= 1")
        if cfg.query_count < 1:
            bad("query_count", "must be >= 1")
    if cfg.pca < 0:
        bad("pca", "must be >= 0 (0 disables)")
    if cfg.sweep or cfg.rho_grid or cfg.lambda_grid:
        for name, grid in (("rho_grid", cfg.rho_grid or _DEFAULT_GRID),
                           ("lambda_grid", cfg.lambda_grid or _DEFAULT_GRID)):
            for value in grid:
                if value < 0:
                    bad(name, "entries must be >= 0")
    for L in cfg.L_list:
        if L < 1:
            bad("L_list", "entries must be >= 1")


def _grid_cells(cfg: ExperimentConfig):
    if cfg.sweep or cfg.rho_grid or cfg.lambda_grid:
        rhos = cfg.rho_grid or _DEFAULT_GRID
        lams = cfg.lambda_grid or _DEFAULT_GRID
        return [(float(r), float(l)) for r in rhos for l in lams]
    return [(float(cfg.rho), float(cfg.lam))]


def _run_seed(cfg: ExperimentConfig, run: int) -> int:
    return child_seed(cfg.seed, _SEED_RUN0 + run)


def _load_input(cfg: ExperimentConfig) -> Dataset:
    path = Path(cfg.input)
    if path.suffix == ".csv":
        return load_csv(path)
    if path.suffix == ".rshv":
        return load_fvec(path)
    raise ConfigError(f"input: unsupported extension {path.suffix!r} (use .csv or .rshv)")


def _source_data(cfg: ExperimentConfig):
    """Produce (train, query, train_labels, query_labels); labels are None
    for file-backed data."""
    if cfg.synthetic:
        per = cfg.per_cluster + cfg.query_per_cluster
        rng = seeded_rng(child_seed(cfg.seed, _SEED_DATA))
        full, labels = synth_clusters(
            cfg.clusters, per, cfg.dim, cfg.separation, cfg.noise_sigma, rng
        )
        block = np.arange(cfg.clusters)[:, None] * per
        train_rows = (block + np.arange(cfg.per_cluster)).ravel()
        query_rows = (block + cfg.per_cluster + np.arange(cfg.query_per_cluster)).ravel()
        return (
            full.subset(train_rows),
            full.subset(query_rows),
            labels[train_rows],
            labels[query_rows],
        )
    full = _load_input(cfg)
    rng = seeded_rng(child_seed(cfg.seed, _SEED_DATA))
    train, query = split_dataset(full, cfg.train_count, cfg.query_count, rng)
    return train, query, None, None


def _transform(cfg: ExperimentConfig, train: Dataset, query: Dataset):
    """Center on the training mean, optionally project with PCA, then
    row-normalize; fit everything on the training split only."""
    artifacts = {}
    if cfg.center:
        mean = train.features.mean(axis=0)
        artifacts["center_mean"] = mean
        train = Dataset(train.features - mean, train.ids)
        query = Dataset(query.features - mean, query.ids)
    if cfg.pca > 0:
        if cfg.pca > min(train.n, train.dim):
            raise ConfigError(f"pca: {cfg.pca} exceeds min(N, d) = {min(train.n, train.dim)}")
        basis = fit_pca(train, cfg.pca)
        artifacts["pca_mean"] = basis.mean
        artifacts["pca_components"] = basis.components
        train = apply_pca(basis, train)
        query = apply_pca(basis, query)
    if cfg.center:
        train = row_normalize(train)
        query = row_normalize(query)
    return train, query, artifacts


def _config_dict(cfg: ExperimentConfig) -> dict:
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_preprocess(cfg: ExperimentConfig, out: Path) -> None:
    train, query, train_labels, query_labels = _source_data(cfg)
    train, query, artifacts = _transform(cfg, train, query)
    save_fvec(train, out / "train.rshv")
    save_fvec(query, out / "query.rshv")
    written = {"train": "train.rshv", "query": "query.rshv"}
    if train_labels is not None:
        np.save(out / "train_labels.npy", train_labels)
        np.save(out / "query_labels.npy", query_labels)
        written["train_labels"] = "train_labels.npy"
        written["query_labels"] = "query_labels.npy"
    for name, arr in artifacts.items():
        np.save(out / f"{name}.npy", arr)
        written[name] = f"{name}.npy"
    manifest = {
        "config": _config_dict(cfg),
        "outputs": written,
        "shapes": {"train": [train.n, train.dim], "query": [query.n, query.dim]},
    }
    _write_json(out / "manifest.json", manifest)


def _load_stage_data(cfg: ExperimentConfig, out: Path):
    data_dir = Path(cfg.data_dir) if cfg.data_dir else out
    train = load_fvec(data_dir / "train.rshv")
    query = load_fvec(data_dir / "query.rshv")
    train_labels = query_labels = None
    if (data_dir / "train_labels.npy").exists():
        train_labels = np.load(data_dir / "train_labels.npy")
        query_labels = np.load(data_dir / "query_labels.npy")
    return train, query, train_labels, query_labels


def _build_pairs(cfg: ExperimentConfig, train: Dataset, train_labels):
    rng = seeded_rng(child_seed(cfg.seed, _SEED_PAIRS))
    if train_labels is not None:
        return make_pairs_from_labels(train_labels, cfg.max_pairs, cfg.pos_fraction, rng)
    threshold = calibrate_pair_threshold(train, cfg.neighbor_avg)
    return make_pairs(train, threshold, cfg.max_pairs, cfg.pos_fraction, rng)


def _model_name(method: str, cell, run: int) -> str:
    if method in ("rsh", "srsh"):
        rho, lam = cell
        return f"model_{method}_rho{rho:g}_lam{lam:g}_seed{run}.rshm"
    return f"model_{method}_seed{run}.rshm"


def _fit_model(cfg: ExperimentConfig, method: str, cell, run: int, train: Dataset,
               pairs, L: int, log: TrainLog | None = None) -> HashModel:
    run_seed = _run_seed(cfg, run)
    if method in ("rsh", "srsh"):
        rho, lam = cell
        hyper = Hyperparams(
            K=cfg.K, L=L, rho=rho, lam=lam, eta=cfg.eta, epochs=cfg.epochs,
            tol=cfg.tol, seed=run_seed, eps_min=cfg.eps_min,
        )
        trainer = train_rsh if method == "rsh" else train_srsh
        return trainer(train, pairs, hyper, log=log)
    if method == "wta":
        spec = make_wta_spec(L, cfg.K, train.dim, seeded_rng(run_seed))
        model = wta_as_rsh(spec)
    else:
        bits = L * symbol_bits(cfg.K)
        spec = make_lsh_spec(bits, train.dim, seeded_rng(run_seed))
        model = lsh_as_rsh(spec)
    return HashModel(model.projections, None, replace(model.hyper, seed=run_seed))


def cmd_train(cfg: ExperimentConfig, out: Path) -> None:
    train, _, train_labels, _ = _load_stage_data(cfg, out)
    pairs = _build_pairs(cfg, train, train_labels)
    cells = _grid_cells(cfg)
    epoch_rows = []
    boost_rows = []
    for method in cfg.methods:
        method_cells = cells if method in ("rsh", "srsh") else [None]
        for cell in method_cells:
            for run in range(cfg.seeds):
                log = TrainLog()
                model = _fit_model(cfg, method, cell, run, train, pairs, cfg.L, log=log)
                save_model(model, out / _model_name(method, cell, run))
                rho, lam = cell if cell else ("", "")
                for trace in log.bits:
                    for epoch, (surr, emp) in enumerate(
                        zip(trace.objective_trace, trace.empirical_trace)
                    ):
                        epoch_rows.append(
                            f"{method},{rho},{lam},{run},{trace.bit},{epoch},{surr!r},{emp!r}"
                        )
                    if trace.eps is not None:
                        boost_rows.append(
                            f"{method},{rho},{lam},{run},{trace.bit},"
                            f"{trace.eps!r},{trace.theta!r},{trace.alpha_sum!r},{trace.alpha_min!r}"
                        )
    header = "method,rho,lambda,seed,bit,epoch,surrogate,empirical"
    (out / "train_log.csv").write_text(
        "\n".join([header] + epoch_rows) + "\n", encoding="utf-8"
    )
    if boost_rows:
        header = "method,rho,lambda,seed,bit,eps,theta,alpha_sum,alpha_min"
        (out / "boost_log.csv").write_text(
            "\n".join([header] + boost_rows) + "\n", encoding="utf-8"
        )


def _make_groundtruth(cfg: ExperimentConfig, train, query, train_labels, query_labels):
    if train_labels is not None:
        return groundtruth_from_labels(train.ids, train_labels, query_labels)
    return calibrate_groundtruth(train, query, cfg.neighbor_avg)


def _evaluate_model(cfg: ExperimentConfig, model: HashModel, db: Dataset,
                    query: Dataset, gt) -> dict:
    """Metric name -> value for one trained model on one query set."""
    for R in cfg.radius_list:
        if R > model.L:
            raise ConfigError(f"radius_list: radius {R} exceeds code length {model.L}")
    for k in cfg.k_list:
        if k > db.n:
            raise ConfigError(f"k_list: cutoff {k} exceeds the database size {db.n}")
    db_codes = encode_dataset(db, model)
    q_codes = encode_dataset(query, model)
    table = build_table(db_codes, db.ids, model.K)
    curve = pr_curve_by_radius(table, q_codes, gt)
    metrics = {}
    for R in cfg.radius_list:
        metrics[f"precision_r{R}"] = curve[R][1]
    for k in cfg.k_list:
        per_query = []
        for q in range(query.n):
            relevant = gt.neighbor_lists[q]
            if relevant.size == 0:
                continue
            if model.weights is not None:
                hits = knn_weighted(db_codes, db.ids, q_codes[q], model.weights, k)
            else:
                hits = knn_hamming(db_codes, db.ids, q_codes[q], k)
            per_query.append(np.isin(hits, relevant).sum() / k)
        metrics[f"precision_k{k}"] = float(np.mean(per_query))
    metrics["ap"] = average_precision(curve)
    return metrics


def _metric_names(cfg: ExperimentConfig):
    return (
        [f"precision_r{R}" for R in cfg.radius_list]
        + [f"precision_k{k}" for k in cfg.k_list]
        + ["ap"]
    )


def _csv_rows(method: str, L_bits: int, K: int, metric_names, per_seed: dict, n_seeds: int):
    """Per-seed rows followed by mean/std summary rows."""
    rows = []
    for run in range(n_seeds):
        for name in metric_names:
            # repr of a builtin float round-trips; numpy scalars would not
            rows.append(f"{method},{L_bits},{K},{run},{name},{float(per_seed[name][run])!r}")
    summary = aggregate_runs(per_seed, n_seeds)
    for name in metric_names:
        mean, std = summary[name]
        rows.append(f"{method},{L_bits},{K},mean,{name},{float(mean)!r}")
        rows.append(f"{method},{L_bits},{K},std,{name},{float(std)!r}")
    return rows


def cmd_eval(cfg: ExperimentConfig, out: Path) -> None:
    train, query, train_labels, query_labels = _load_stage_data(cfg, out)
    models_dir = Path(cfg.models_dir) if cfg.models_dir else out
    gt = _make_groundtruth(cfg, train, query, train_labels, query_labels)
    cells = _grid_cells(cfg)
    metric_names = _metric_names(cfg)
    rows = [_CSV_HEADER]
    summary: dict = {}
    for method in cfg.methods:
        method_cells = cells if method in ("rsh", "srsh") else [None]
        by_cell = {}
        for cell in method_cells:
            per_seed = {name: [] for name in metric_names}
            for run in range(cfg.seeds):
                path = models_dir / _model_name(method, cell, run)
                model = load_model(path)
                metrics = _evaluate_model(cfg, model, train, query, gt)
                for name in metric_names:
                    per_seed[name].append(metrics[name])
            by_cell[cell] = per_seed
        # winner: best mean AP, grid order breaking ties
        best_cell = max(
            by_cell,
            key=lambda c: (np.mean(by_cell[c]["ap"]), -method_cells.index(c)),
        )
        per_seed = by_cell[best_cell]
        model_K = cfg.K if method != "lsh" else 2
        model_L = cfg.L if method != "lsh" else cfg.L * symbol_bits(cfg.K)
        L_bits = model_L * symbol_bits(model_K)
        rows.extend(_csv_rows(method, L_bits, model_K, metric_names, per_seed, cfg.seeds))
        agg = aggregate_runs(per_seed, cfg.seeds)
        summary[method] = {
            "selected_cell": {"rho": best_cell[0], "lambda": best_cell[1]} if best_cell else None,
            "cells_swept": len(method_cells),
            "metrics": {
                name: {"mean": agg[name][0], "std": agg[name][1], "per_seed": per_seed[name]}
                for name in metric_names
            },
        }
    (out / "metrics.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    _write_json(out / "summary.json", {"config": _config_dict(cfg), "methods": summary})


_CSV_HEADER = "method,L_bits,K,seed,metric,value"


def cmd_benchmark(cfg: ExperimentConfig, out: Path) -> None:
    """Code-length sweep at an equal packed-bit budget for every method."""
    train, query, train_labels, query_labels = _source_data(cfg)
    train, query, _ = _transform(cfg, train, query)
    pairs = _build_pairs(cfg, train, train_labels)
    gt = _make_groundtruth(cfg, train, query, train_labels, query_labels)
    L_values = cfg.L_list if cfg.L_list else (cfg.L,)
    cell = (float(cfg.rho), float(cfg.lam))
    metric_names = _metric_names(cfg)
    rows = [_CSV_HEADER]
    summary: dict = {}
    for L in L_values:
        for method in cfg.methods:
            per_seed = {name: [] for name in metric_names}
            for run in range(cfg.seeds):
                model = _fit_model(
                    cfg, method, cell if method in ("rsh", "srsh") else None,
                    run, train, pairs, L,
                )
                metrics = _evaluate_model(cfg, model, train, query, gt)
                for name in metric_names:
                    per_seed[name].append(metrics[name])
            model_K = cfg.K if method != "lsh" else 2
            model_L = L if method != "lsh" else L * symbol_bits(cfg.K)
            L_bits = model_L * symbol_bits(model_K)
            rows.extend(_csv_rows(method, L_bits, model_K, metric_names, per_seed, cfg.seeds))
            agg = aggregate_runs(per_seed, cfg.seeds)
            summary[f"{method}_L{L}"] = {
                "method": method,
                "L": L,
                "L_bits": L_bits,
                "metrics": {name: {"mean": agg[name][0], "std": agg[name][1]} for name in metric_names},
            }
    (out / "metrics.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    _write_json(out / "summary.json", {"config": _config_dict(cfg), "results": summary})


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "eval": cmd_eval,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rankhash",
        description="Train and evaluate rank-order hash codes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("preprocess", "split, transform, and write train/query data"),
        ("train", "train models on preprocessed data"),
        ("eval", "evaluate trained models and pick sweep winners"),
        ("benchmark", "end-to-end code-length sweep at equal bit budgets"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--out", required=True, help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        validate_config(cfg, args.command)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](cfg, out)
        return 0
    except ConfigError as exc:
        print(f"error:config: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"error:format: {exc}", file=sys.stderr)
        return 4
    except RankHashError as exc:
        print(f"error:data: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
