"""Study pipeline: generate, fit, evaluate, report.

Artifacts under the output directory:

    datasets/<cond>/rep<NNN>.csv    item_1..item_K integer responses
    truth/<cond>/rep<NNN>.json      generating parameters + provenance
    estimates/<cond>/rep<NNN>.json  fitted parameters + EM diagnostics
    results.csv                     per-condition family bias/RMSE
    bias.svg, rmse.svg              faceted recovery plots
    manifest.json                   config echo, stage records, timings

Reproducibility: every replication derives its own generator from
SeedSequence((master_seed, condition_index, replication_index)) and
consumes it in a fixed order, so any subset of the study can be redone
in isolation. With a fixed config the numeric artifacts are
byte-identical across runs and thread counts; manifest.json records
wall-clock timings and is excluded from that guarantee.

A replication whose fit raises is recorded in the manifest with its
error and excluded from aggregation; it does not abort the stage.
"""

from __future__ import annotations

import json
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .design import (
    Condition,
    SimulationDesign,
    draw_abilities,
    draw_item_parameters,
    expand_conditions,
    simulate_dataset,
)
from .errors import ConfigError, EstimationError, UsageError
from .estimation import EmConfig, FitResult, fit, fix_reflection
from .grm import ItemParams, TestForm
from .metrics import aggregate, evaluate_replication
from .report import (
    build_results_table,
    read_results_csv,
    save_plots,
    write_results_csv,
)

_CONFIG_KEYS = {
    "seed",
    "test_lengths",
    "rhos",
    "n_persons",
    "n_reps",
    "slope_ranges",
    "intercept_range",
    "quadrature",
    "tolerance",
    "max_cycles",
}
_QUADRATURE_KEYS = {"points_per_dim", "bounds"}


@dataclass
class RunConfig:
    """Everything one pipeline invocation needs."""

    design: SimulationDesign
    em: EmConfig
    out_dir: Path
    threads: int = 1
    force: bool = False
    save_abilities: bool = False

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def derive_stream(
    master_seed: int, condition_index: int, replication_index: int
) -> np.random.Generator:
    """Independent PCG64 stream for one replication of one condition."""
    seq = np.random.SeedSequence((master_seed, condition_index, replication_index))
    return np.random.Generator(np.random.PCG64(seq))


def load_config(
    path: str | Path | None = None,
    *,
    out_dir: str | Path = "grmsim-run",
    threads: int = 1,
    reps: int | None = None,
    seed: int | None = None,
    force: bool = False,
    save_abilities: bool = False,
) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus overrides.

    Recognized file keys: seed, test_lengths, rhos, n_persons, n_reps,
    slope_ranges, intercept_range, quadrature {points_per_dim, bounds},
    tolerance, max_cycles. Anything else is rejected. Missing keys fall
    back to the reference design defaults.
    """
    raw: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(
            f"unknown config key(s) {unknown}; allowed: {sorted(_CONFIG_KEYS)}"
        )

    design_kwargs: dict = {}
    if "seed" in raw:
        design_kwargs["master_seed"] = _expect_int(raw["seed"], "seed")
    if "test_lengths" in raw:
        design_kwargs["test_lengths"] = _expect_list(raw["test_lengths"], "test_lengths")
    if "rhos" in raw:
        design_kwargs["rhos"] = _expect_list(raw["rhos"], "rhos")
    if "n_persons" in raw:
        design_kwargs["n_persons"] = _expect_int(raw["n_persons"], "n_persons")
    if "n_reps" in raw:
        design_kwargs["n_reps"] = _expect_int(raw["n_reps"], "n_reps")
    if "slope_ranges" in raw:
        ranges = _expect_list(raw["slope_ranges"], "slope_ranges")
        design_kwargs["slope_ranges"] = tuple(
            tuple(_expect_pair(r, f"slope_ranges[{i}]")) for i, r in enumerate(ranges)
        )
    if "intercept_range" in raw:
        design_kwargs["intercept_range"] = _expect_pair(
            raw["intercept_range"], "intercept_range"
        )
    if reps is not None:
        if reps < 1:
            raise ConfigError("reps: must be >= 1")
        design_kwargs["n_reps"] = int(reps)
    if seed is not None:
        design_kwargs["master_seed"] = int(seed)

    em_kwargs: dict = {}
    if "quadrature" in raw:
        quad = raw["quadrature"]
        if not isinstance(quad, dict):
            raise ConfigError("quadrature: must be an object")
        unknown_q = sorted(set(quad) - _QUADRATURE_KEYS)
        if unknown_q:
            raise ConfigError(
                f"quadrature: unknown key(s) {unknown_q}; "
                f"allowed: {sorted(_QUADRATURE_KEYS)}"
            )
        if "points_per_dim" in quad:
            em_kwargs["points_per_dim"] = _expect_int(
                quad["points_per_dim"], "quadrature.points_per_dim"
            )
        if "bounds" in quad:
            em_kwargs["bounds"] = _expect_pair(quad["bounds"], "quadrature.bounds")
    if "tolerance" in raw:
        tol = raw["tolerance"]
        if not isinstance(tol, (int, float)) or isinstance(tol, bool):
            raise ConfigError("tolerance: must be a number")
        em_kwargs["tol"] = float(tol)
    if "max_cycles" in raw:
        em_kwargs["max_cycles"] = _expect_int(raw["max_cycles"], "max_cycles")

    try:
        design = SimulationDesign(**design_kwargs)
        expand_conditions(design)  # surface unallocatable test lengths now
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        em = EmConfig(**em_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        return RunConfig(
            design=design,
            em=em,
            out_dir=Path(out_dir),
            threads=int(threads),
            force=bool(force),
            save_abilities=bool(save_abilities),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _expect_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: must be an integer, got {value!r}")
    return value


def _expect_list(value, key: str) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: must be a non-empty list")
    return value


def _expect_pair(value, key: str) -> tuple[float, float]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(f"{key}: must be a [low, high] pair of numbers")
    return (float(value[0]), float(value[1]))


def _config_echo(cfg: RunConfig) -> dict:
    return {
        "seed": cfg.design.master_seed,
        "test_lengths": list(cfg.design.test_lengths),
        "rhos": list(cfg.design.rhos),
        "n_persons": cfg.design.n_persons,
        "n_reps": cfg.design.n_reps,
        "slope_ranges": [list(r) for r in cfg.design.slope_ranges],
        "intercept_range": list(cfg.design.intercept_range),
        "n_categories": cfg.design.n_categories,
        "quadrature": {
            "points_per_dim": cfg.em.points_per_dim,
            "bounds": list(cfg.em.bounds),
        },
        "tolerance": cfg.em.tol,
        "max_cycles": cfg.em.max_cycles,
        "prior_correlation": cfg.em.prior_correlation,
        "factorize": cfg.em.factorize,
    }


def _load_manifest(out_dir: Path) -> dict:
    path = out_dir / "manifest.json"
    if path.exists():
        return json.loads(path.read_text())
    return {"package": f"grmsim {__version__}", "stages": {}}


def _write_manifest(out_dir: Path, manifest: dict) -> None:
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _condition_records(conditions: list[Condition]) -> list[dict]:
    return [
        {
            "index": ci,
            "label": cond.label(),
            "test_length": cond.test_length,
            "rho": cond.rho,
            "n_persons": cond.n_persons,
            "n_reps": cond.n_reps,
            "allocation": list(cond.allocation),
        }
        for ci, cond in enumerate(conditions)
    ]


def _rep_name(rep: int) -> str:
    return f"rep{rep:03d}"


def _refuse_or_clear(path: Path, force: bool, stage: str) -> None:
    """Stage outputs are never silently overwritten."""
    if not path.exists():
        return
    occupied = path.is_file() or any(path.iterdir())
    if not occupied:
        return
    if not force:
        raise UsageError(
            f"{stage}: output {path} already exists; pass --force to overwrite"
        )
    if path.is_file():
        path.unlink()
    else:
        shutil.rmtree(path)


def _write_dataset_csv(path: Path, values: np.ndarray) -> None:
    header = ",".join(f"item_{j + 1}" for j in range(values.shape[1]))
    np.savetxt(path, values, fmt="%d", delimiter=",", header=header, comments="")


def _read_dataset_csv(path: Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)


def _truth_payload(cond: Condition, rep: int, seed: int, form: TestForm) -> dict:
    return {
        "condition": {
            "test_length": cond.test_length,
            "rho": cond.rho,
            "n_persons": cond.n_persons,
        },
        "replication": rep,
        "seed": seed,
        "allocation": list(cond.allocation),
        "slopes": form.slope_matrix.tolist(),
        "intercepts": form.intercept_matrix.tolist(),
    }


def _form_from_arrays(
    slopes: list[list[float]], intercepts: list[list[float]], allocation: list[int]
) -> TestForm:
    loading = np.repeat(np.arange(len(allocation)), allocation)
    items = [
        ItemParams(np.asarray(s, dtype=float), np.asarray(d, dtype=float), int(dim))
        for s, d, dim in zip(slopes, intercepts, loading)
    ]
    return TestForm(
        items, n_dims=len(allocation), n_categories=len(intercepts[0]) + 1
    )


def generate_stage(cfg: RunConfig) -> None:
    """Draw parameters, abilities, and responses for every replication."""
    conditions = expand_conditions(cfg.design)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    datasets = cfg.out_dir / "datasets"
    truth = cfg.out_dir / "truth"
    _refuse_or_clear(datasets, cfg.force, "generate")
    _refuse_or_clear(truth, cfg.force, "generate")
    if cfg.save_abilities:
        _refuse_or_clear(cfg.out_dir / "abilities", cfg.force, "generate")
    count = 0
    for ci, cond in enumerate(conditions):
        d_dir = datasets / cond.label()
        t_dir = truth / cond.label()
        d_dir.mkdir(parents=True)
        t_dir.mkdir(parents=True)
        for rep in range(cond.n_reps):
            rng = derive_stream(cfg.design.master_seed, ci, rep)
            form = draw_item_parameters(cond, cfg.design, rng)
            abilities = draw_abilities(cond, rng)
            responses = simulate_dataset(
                form,
                abilities,
                rng,
                condition=cond,
                replication=rep,
                seed=cfg.design.master_seed,
            )
            _write_dataset_csv(d_dir / f"{_rep_name(rep)}.csv", responses.values)
            payload = _truth_payload(cond, rep, cfg.design.master_seed, form)
            (t_dir / f"{_rep_name(rep)}.json").write_text(
                json.dumps(payload, indent=2) + "\n"
            )
            if cfg.save_abilities:
                a_dir = cfg.out_dir / "abilities" / cond.label()
                a_dir.mkdir(parents=True, exist_ok=True)
                head = ",".join(f"theta_{d + 1}" for d in range(cond.n_dims))
                np.savetxt(
                    a_dir / f"{_rep_name(rep)}.csv",
                    abilities.values,
                    fmt="%.17g",
                    delimiter=",",
                    header=head,
                    comments="",
                )
            count += 1
    manifest = _load_manifest(cfg.out_dir)
    manifest["config"] = _config_echo(cfg)
    manifest["conditions"] = _condition_records(conditions)
    manifest["stages"]["generate"] = {"completed": True, "n_datasets": count}
    _write_manifest(cfg.out_dir, manifest)


def _em_config_payload(em: EmConfig) -> dict:
    return {
        "points_per_dim": em.points_per_dim,
        "bounds": list(em.bounds),
        "tolerance": em.tol,
        "max_cycles": em.max_cycles,
        "prior_correlation": em.prior_correlation,
        "factorize": em.factorize,
    }


def _fit_one(args: tuple) -> dict:
    """Fit a single replication; returns a manifest record. Top level so
    it pickles into worker processes."""
    (ci, rep, dataset_path, truth_path, est_path, em_kwargs) = args
    started = time.perf_counter()
    record = {
        "condition_index": ci,
        "replication": rep,
        "estimate": None,
        "converged": None,
        "n_cycles": None,
        "loglik": None,
        "error": None,
        "elapsed_seconds": None,
    }
    try:
        em = EmConfig(**em_kwargs)
        x = _read_dataset_csv(Path(dataset_path))
        truth = json.loads(Path(truth_path).read_text())
        allocation = tuple(truth["allocation"])
        n_categories = len(truth["intercepts"][0]) + 1
        result = fix_reflection(fit(x, allocation, em, n_categories=n_categories))
        payload = {
            "slopes": result.estimates.slope_matrix.tolist(),
            "intercepts": result.estimates.intercept_matrix.tolist(),
            "loglik": result.loglik,
            "n_cycles": result.n_cycles,
            "converged": result.converged,
            "loglik_trace": list(result.loglik_trace),
            "config": _em_config_payload(em),
        }
        Path(est_path).parent.mkdir(parents=True, exist_ok=True)
        Path(est_path).write_text(json.dumps(payload, indent=2) + "\n")
        record.update(
            estimate=str(est_path),
            converged=result.converged,
            n_cycles=result.n_cycles,
            loglik=result.loglik,
        )
    except Exception as exc:  # record-and-continue per replication
        record["error"] = f"{type(exc).__name__}: {exc}"
    record["elapsed_seconds"] = time.perf_counter() - started
    return record


def fit_stage(cfg: RunConfig) -> None:
    """Calibrate every generated dataset, in parallel when threads > 1."""
    conditions = expand_conditions(cfg.design)
    datasets = cfg.out_dir / "datasets"
    truth = cfg.out_dir / "truth"
    if not datasets.is_dir() or not truth.is_dir():
        raise UsageError("fit: no datasets/truth found; run generate first")
    estimates = cfg.out_dir / "estimates"
    _refuse_or_clear(estimates, cfg.force, "fit")
    tasks = []
    em_kwargs = {
        "points_per_dim": cfg.em.points_per_dim,
        "bounds": cfg.em.bounds,
        "tol": cfg.em.tol,
        "max_cycles": cfg.em.max_cycles,
        "prior_correlation": cfg.em.prior_correlation,
        "factorize": cfg.em.factorize,
        "max_grid_nodes": cfg.em.max_grid_nodes,
    }
    for ci, cond in enumerate(conditions):
        for rep in range(cond.n_reps):
            d_path = datasets / cond.label() / f"{_rep_name(rep)}.csv"
            t_path = truth / cond.label() / f"{_rep_name(rep)}.json"
            if not d_path.exists() or not t_path.exists():
                raise UsageError(
                    f"fit: missing {d_path if not d_path.exists() else t_path}; "
                    f"rerun generate with this config"
                )
            e_path = estimates / cond.label() / f"{_rep_name(rep)}.json"
            tasks.append((ci, rep, str(d_path), str(t_path), str(e_path), em_kwargs))
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            records = list(pool.map(_fit_one, tasks))
    else:
        records = [_fit_one(t) for t in tasks]
    records.sort(key=lambda r: (r["condition_index"], r["replication"]))
    manifest = _load_manifest(cfg.out_dir)
    manifest.setdefault("config", _config_echo(cfg))
    manifest.setdefault("conditions", _condition_records(conditions))
    manifest["stages"]["fit"] = {
        "completed": True,
        "threads": cfg.threads,
        "n_fits": len(records),
        "n_failed": sum(1 for r in records if r["error"] is not None),
        "records": records,
    }
    _write_manifest(cfg.out_dir, manifest)


def evaluate_stage(cfg: RunConfig) -> None:
    """Aggregate bias/RMSE per condition and family into results.csv."""
    conditions = expand_conditions(cfg.design)
    truth_dir = cfg.out_dir / "truth"
    est_dir = cfg.out_dir / "estimates"
    if not est_dir.is_dir():
        raise UsageError("evaluate: no estimates found; run fit first")
    if not truth_dir.is_dir():
        raise UsageError("evaluate: no truth found; run generate first")
    results_path = cfg.out_dir / "results.csv"
    _refuse_or_clear(results_path, cfg.force, "evaluate")
    all_metrics = []
    skipped = {}
    for ci, cond in enumerate(conditions):
        per_rep = []
        n_nonconverged = 0
        n_skipped = 0
        for rep in range(cond.n_reps):
            t_path = truth_dir / cond.label() / f"{_rep_name(rep)}.json"
            e_path = est_dir / cond.label() / f"{_rep_name(rep)}.json"
            if not t_path.exists():
                raise UsageError(f"evaluate: missing {t_path}; rerun generate")
            if not e_path.exists():
                n_skipped += 1
                continue
            t_doc = json.loads(t_path.read_text())
            e_doc = json.loads(e_path.read_text())
            truth_form = _form_from_arrays(
                t_doc["slopes"], t_doc["intercepts"], t_doc["allocation"]
            )
            est_form = _form_from_arrays(
                e_doc["slopes"], e_doc["intercepts"], t_doc["allocation"]
            )
            result = FitResult(
                estimates=est_form,
                loglik=e_doc["loglik"],
                loglik_trace=e_doc.get("loglik_trace", []),
                n_cycles=e_doc["n_cycles"],
                converged=e_doc["converged"],
            )
            if not result.converged:
                n_nonconverged += 1
            per_rep.append(
                evaluate_replication(result, truth_form, tuple(t_doc["allocation"]))
            )
        if not per_rep:
            raise EstimationError(
                f"evaluate: condition {cond.label()} has no successful fits"
            )
        skipped[cond.label()] = n_skipped
        all_metrics.append(aggregate(cond, per_rep, n_nonconverged=n_nonconverged))
    table = build_results_table(all_metrics)
    write_results_csv(table, results_path)
    manifest = _load_manifest(cfg.out_dir)
    manifest["stages"]["evaluate"] = {
        "completed": True,
        "results": str(results_path),
        "skipped_failed_fits": skipped,
        "nonconverged_included": {
            m.condition.label(): m.n_nonconverged for m in all_metrics
        },
    }
    _write_manifest(cfg.out_dir, manifest)


def report_stage(cfg: RunConfig) -> None:
    """Render bias.svg and rmse.svg from results.csv."""
    results_path = cfg.out_dir / "results.csv"
    if not results_path.exists():
        raise UsageError("report: no results.csv found; run evaluate first")
    for name in ("bias.svg", "rmse.svg"):
        _refuse_or_clear(cfg.out_dir / name, cfg.force, "report")
    table = read_results_csv(results_path)
    paths = save_plots(table, cfg.out_dir)
    manifest = _load_manifest(cfg.out_dir)
    manifest["stages"]["report"] = {
        "completed": True,
        "plots": {k: str(v) for k, v in paths.items()},
    }
    _write_manifest(cfg.out_dir, manifest)


def run_pipeline(cfg: RunConfig) -> None:
    """All four stages in order against one output directory."""
    generate_stage(cfg)
    fit_stage(cfg)
    evaluate_stage(cfg)
    report_stage(cfg)
