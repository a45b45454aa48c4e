"""Experiment orchestration: the acquisition loop, many realizations, output files."""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import os
import tempfile
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from ._accel import backend
from .acquire import (
    STRATEGIES,
    AcquisitionError,
    AcquisitionRequest,
    KernelSpec,
    PoolView,
    TrainView,
    needs_attribute_model,
    select,
)
from .data_model import (
    IHDP_LIKE_COLUMNS,
    CovariateTable,
    load_covariates,
    synthesize_covariates,
)
from .estimators.attribute import fit_attribute_model
from .estimators.effect import ESTIMATORS, EstimatorError, fit_estimator
from .evaluate import (
    AcquisitionTrace,
    MetricsRecord,
    Summary,
    evaluate_model,
    optimal_reference,
    pca_export,
    summarize,
    threshold_for,
    variance_stop,
)
from .simulate import Oracle, OracleError, SimulationConfig, SimulationError, World, build_world

log = logging.getLogger(__name__)

WORKERS_ENV = "CONFACQ_WORKERS"
STOP_RULES = (None, "eps_ate", "sqrt_pehe", "both")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    hyperparams: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def parse(cls, item) -> "EstimatorSpec":
        if isinstance(item, str):
            return cls(item)
        if isinstance(item, Mapping) and "kind" in item:
            return cls(item["kind"], dict(item.get("hyperparams") or {}))
        raise ConfigError(f"estimator entry must be a kind or {{kind, hyperparams}}: {item!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    data: Mapping[str, Any] = field(default_factory=lambda: {"source": "synthetic", "n": 747})
    simulation: Mapping[str, Any] = field(default_factory=dict)
    estimators: tuple[EstimatorSpec, ...] = (EstimatorSpec("dr"),)
    strategies: tuple[str, ...] = ("random", "oe")
    batch_size: int = 10
    max_iterations: int | None = None
    sigma_ate_sq: float | None = None
    stop_at_optimal: str | None = None
    kernel_bandwidth: float | str = "median_heuristic"
    scoring_mode: str = "independent"
    attribute_model: Mapping[str, Any] = field(default_factory=dict)
    pca_iterations: tuple[int, ...] = ()
    n_realizations: int = 1
    seed: int = 0
    output_dir: str | None = None
    workers: int | None = None

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        if "estimators" in d:
            d["estimators"] = tuple(EstimatorSpec.parse(e) for e in d["estimators"])
        for key in ("strategies", "pca_iterations"):
            if key in d:
                d[key] = tuple(d[key])
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = asdict(self)
        out["estimators"] = [{"kind": e.kind, "hyperparams": dict(e.hyperparams)} for e in self.estimators]
        out["strategies"] = list(self.strategies)
        out["pca_iterations"] = list(self.pca_iterations)
        out["data"] = dict(self.data)
        out["simulation"] = dict(self.simulation)
        out["attribute_model"] = dict(self.attribute_model)
        return out

    def sim_config(self) -> SimulationConfig:
        try:
            return SimulationConfig.from_dict(self.simulation)
        except (SimulationError, TypeError, ValueError) as exc:
            raise ConfigError(f"simulation block: {exc}") from exc

    def request(self, strategy: str) -> AcquisitionRequest:
        return AcquisitionRequest(strategy, self.batch_size, KernelSpec(bandwidth=self.kernel_bandwidth),
                                  self.scoring_mode)

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(isinstance(self.batch_size, int) and self.batch_size >= 1, "batch_size must be an integer >= 1")
        need(isinstance(self.n_realizations, int) and self.n_realizations >= 1,
             "n_realizations must be an integer >= 1")
        need(isinstance(self.seed, int) and self.seed >= 0, "seed must be a non-negative integer")
        need(self.max_iterations is None or (isinstance(self.max_iterations, int) and self.max_iterations >= 0),
             "max_iterations must be null or a non-negative integer")
        need(self.sigma_ate_sq is None or self.sigma_ate_sq >= 0, "sigma_ate_sq must be non-negative")
        need(self.stop_at_optimal in STOP_RULES, f"stop_at_optimal must be one of {STOP_RULES}")
        need(self.workers is None or (isinstance(self.workers, int) and self.workers >= 1),
             "workers must be a positive integer")
        need(len(self.strategies) > 0, "no strategies configured")
        need(len(self.estimators) > 0, "no estimators configured")
        for s in self.strategies:
            need(s in STRATEGIES, f"unknown strategy {s!r}; choose from {list(STRATEGIES)}")
        need(len(set(self.strategies)) == len(self.strategies), "duplicate strategies")
        kinds = [e.kind for e in self.estimators]
        need(len(set(kinds)) == len(kinds), "duplicate estimator kinds")
        for spec in self.estimators:
            need(spec.kind in ESTIMATORS, f"unknown estimator {spec.kind!r}; choose from {sorted(ESTIMATORS)}")
            cls = ESTIMATORS[spec.kind]
            if "oe" in self.strategies and not getattr(cls, "predicts_factual_outcome", False):
                raise ConfigError(f"strategy 'oe' needs factual outcome predictions, "
                                  f"which estimator {spec.kind!r} does not provide")
        try:
            self.request(self.strategies[0])
        except AcquisitionError as exc:
            raise ConfigError(str(exc)) from exc
        try:
            self.sim_config().validate()
        except SimulationError as exc:
            raise ConfigError(f"simulation block: {exc}") from exc
        src = self.data.get("source", "synthetic")
        need(src in ("synthetic", "file"), "data.source must be 'synthetic' or 'file'")
        if src == "file":
            need("path" in self.data, "data.path is required for file input")
        else:
            n = self.data.get("n", 747)
            need(isinstance(n, int) and n >= 8, "data.n must be an integer >= 8")


def apply_overrides(d: dict, overrides: Sequence[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values are parsed as JSON when possible."""
    d = copy.deepcopy(d)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = d
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return d


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------

def _key(name: str) -> int:
    return zlib.crc32(name.encode())


def realization_seed(base_seed: int, index: int) -> int:
    return int(base_seed) + int(index)


def stream(seed: int, *path) -> np.random.SeedSequence:
    """Child seed for a named purpose; independent of the order things run in."""
    key = tuple(_key(p) if isinstance(p, str) else int(p) for p in path)
    return np.random.SeedSequence(int(seed), spawn_key=key)


# ---------------------------------------------------------------------------
# One realization
# ---------------------------------------------------------------------------

def load_data(cfg: ExperimentConfig) -> CovariateTable:
    src = cfg.data.get("source", "synthetic")
    if src == "file":
        schema = cfg.data.get("schema")
        if schema is None:
            schema = {c.name: c.kind for c in IHDP_LIKE_COLUMNS}
        return load_covariates(cfg.data["path"], schema)
    return synthesize_covariates(int(cfg.data.get("n", 747)), IHDP_LIKE_COLUMNS,
                                 int(cfg.data.get("seed", 0)))


def _per_realization_covariates(cfg: ExperimentConfig, base: CovariateTable, seed: int) -> CovariateTable:
    # a synthetic cohort can be redrawn per realization; a file is always reused
    if cfg.data.get("source", "synthetic") == "synthetic" and cfg.data.get("resample", False):
        ss = stream(seed, "covariates")
        return synthesize_covariates(base.n_samples, IHDP_LIKE_COLUMNS, np.random.default_rng(ss))
    return base


@dataclass
class RealizationResult:
    index: int
    seed: int
    traces: list[AcquisitionTrace]
    optimal: dict[str, tuple[float, float]]
    pca_rows: list[tuple]
    sizes: dict[str, int]
    timings: dict[str, float]


def _record(iteration, n_acq, n_train, model, world: World, test, nt, nc) -> MetricsRecord:
    truth = world.truth
    e, p = evaluate_model(model, world.x[test], truth.a[test], truth.y0[test], truth.y1[test])
    return MetricsRecord(iteration, n_acq, n_train, e, p, nt, nc)


def run_trace(world: World, initial, strategy: str, est_spec: EstimatorSpec, cfg: ExperimentConfig,
              seed: int, optimal: tuple[float, float] | None = None, pca_rows: list | None = None,
              index: int = 0) -> AcquisitionTrace:
    """Run the acquisition loop for one (strategy, estimator) pair on one world."""
    part = initial.copy()
    oracle = Oracle(world.truth.a, part.pool_rows())
    request = cfg.request(strategy)
    test = part.test_rows()
    est_seed = stream(seed, "estimator", est_spec.kind)
    attr_seed = stream(seed, "attribute", strategy, est_spec.kind)
    trace = AcquisitionTrace(index, seed, strategy, est_spec.kind)
    if optimal is not None:
        trace.optimal_eps_ate, trace.optimal_sqrt_pehe = optimal
    n_total = part.n_total
    nt = nc = 0
    hit = {"eps_ate": False, "sqrt_pehe": False}

    def fit(rows):
        return fit_estimator(est_spec.kind, world.x[rows], part.train_a(), world.t[rows], world.y[rows],
                             dict(est_spec.hyperparams), est_seed)

    def should_stop(rec: MetricsRecord) -> bool:
        if cfg.sigma_ate_sq is not None and variance_stop([r.eps_ate for r in trace.records], cfg.sigma_ate_sq):
            return True
        if cfg.stop_at_optimal is None or optimal is None:
            return False
        hit["eps_ate"] |= rec.eps_ate <= threshold_for(optimal[0])
        hit["sqrt_pehe"] |= rec.sqrt_pehe <= threshold_for(optimal[1])
        if cfg.stop_at_optimal == "both":
            return hit["eps_ate"] and hit["sqrt_pehe"]
        return hit[cfg.stop_at_optimal]

    def export_pca(iteration):
        if pca_rows is None or iteration not in cfg.pca_iterations:
            return
        rows = part.train_rows()
        feats = np.column_stack([world.x[rows], part.train_a()])
        if len(rows) < 3:
            return
        coords = pca_export(feats).coords
        for r, (c1, c2) in zip(rows, coords):
            pca_rows.append((index, strategy, est_spec.kind, iteration, world.ids[r],
                             float(c1), float(c2), int(world.t[r])))

    try:
        rows = part.train_rows()
        model = fit(rows)
        rec = _record(0, 0, len(rows), model, world, test, 0, 0)
        trace.records.append(rec)
        export_pca(0)
        iteration = 0
        stop = should_stop(rec)
        while part.pool and not stop:
            if cfg.max_iterations is not None and iteration >= cfg.max_iterations:
                break
            rows = part.train_rows()
            train = TrainView(rows, world.x[rows], part.train_a(), world.t[rows], world.y[rows])
            pool_rows = part.pool_rows()
            pool = PoolView(pool_rows, world.x[pool_rows], world.t[pool_rows], world.y[pool_rows])
            attr = None
            if needs_attribute_model(strategy):
                attr = fit_attribute_model(train.x, train.t, train.a, attr_seed, **dict(cfg.attribute_model))
            batch = select(request, pool, train, attr, model, stream(seed, "select", strategy, est_spec.kind,
                                                                     iteration))
            revealed = oracle.reveal(batch)
            part.acquire([r for r, _ in revealed], [a for _, a in revealed])
            part.check(n_total)
            iteration += 1
            step = [(int(r), world.ids[r], int(world.t[r])) for r in batch]
            trace.acquired.append(step)
            nt += sum(1 for _, _, t in step if t == 1)
            nc += sum(1 for _, _, t in step if t == 0)
            rows = part.train_rows()
            model = fit(rows)
            rec = _record(iteration, nt + nc, len(rows), model, world, test, nt, nc)
            trace.records.append(rec)
            export_pca(iteration)
            stop = should_stop(rec)
    except (EstimatorError, AcquisitionError, OracleError, ValueError, FloatingPointError) as exc:
        trace.failed = f"{type(exc).__name__}: {exc}"
        log.warning("realization %d, %s/%s failed: %s", index, strategy, est_spec.kind, trace.failed)
    return trace


def run_realization(cfg: ExperimentConfig, seed: int, covariates: CovariateTable | None = None,
                    index: int = 0) -> RealizationResult:
    """Simulate one world and run every (estimator, strategy) pair on it.

    All pairs share the world and the initial partition, so strategy
    comparisons within a realization are paired.
    """
    timings = {}
    t0 = time.perf_counter()
    base = covariates if covariates is not None else load_data(cfg)
    cov = _per_realization_covariates(cfg, base, seed)
    world, initial = build_world(cov, cfg.sim_config(), stream(seed, "world"))
    timings["simulate"] = time.perf_counter() - t0
    sizes = {"train": len(initial.train), "pool": len(initial.pool), "test": len(initial.test)}

    traces, optimal, pca_rows = [], {}, []
    for spec in cfg.estimators:
        t1 = time.perf_counter()
        try:
            opt = optimal_reference(world, initial, spec.kind, dict(spec.hyperparams),
                                    stream(seed, "estimator", spec.kind))
        except (EstimatorError, ValueError) as exc:
            log.warning("realization %d: optimal reference for %s failed: %s", index, spec.kind, exc)
            opt = None
        optimal[spec.kind] = opt if opt is not None else (float("nan"), float("nan"))
        timings[f"optimal/{spec.kind}"] = time.perf_counter() - t1
        for strategy in cfg.strategies:
            t1 = time.perf_counter()
            tr = run_trace(world, initial, strategy, spec, cfg, seed, opt, pca_rows, index)
            if opt is None and tr.failed is None:
                tr.failed = "optimal reference unavailable"
            traces.append(tr)
            timings[f"{strategy}/{spec.kind}"] = time.perf_counter() - t1
    return RealizationResult(index, seed, traces, optimal, pca_rows, sizes, timings)


# ---------------------------------------------------------------------------
# Many realizations
# ---------------------------------------------------------------------------

def _worker(args):
    cfg_dict, seed, index, cov = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return run_realization(cfg, seed, cov, index)


def resolve_workers(cfg: ExperimentConfig) -> int:
    if cfg.workers is not None:
        return cfg.workers
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return 1


def run_realizations(cfg: ExperimentConfig) -> list[RealizationResult]:
    cfg.validate()
    cov = load_data(cfg)
    jobs = [(cfg.to_dict(), realization_seed(cfg.seed, i), i, cov) for i in range(cfg.n_realizations)]
    workers = min(resolve_workers(cfg), len(jobs))
    if workers <= 1:
        results = [_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_worker, jobs))
    return sorted(results, key=lambda r: r.index)


@dataclass
class RunManifest:
    config: dict
    seeds: list[int]
    version: str
    backend: str
    sizes: list[dict]
    timings: dict[str, float]
    failed_traces: list[dict]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def run_experiment(cfg: ExperimentConfig, output_dir=None) -> tuple[Summary, RunManifest]:
    """Run every realization, aggregate, and write all outputs under ``output_dir``."""
    cfg.validate()
    out = Path(output_dir or cfg.output_dir or "results")
    prepare_output_dir(out)
    t0 = time.perf_counter()
    results = run_realizations(cfg)
    t_run = time.perf_counter() - t0
    traces = [tr for res in results for tr in res.traces]
    t1 = time.perf_counter()
    ok = [tr for tr in traces if tr.failed is None]
    min_traces = 2 if cfg.n_realizations >= 2 else 1
    summary = summarize(ok, min_traces=min_traces)
    write_outputs(out, results, summary)
    timings = {"realizations": t_run, "aggregate": time.perf_counter() - t1}
    for res in results:
        for k, v in res.timings.items():
            timings[f"phase/{k}"] = timings.get(f"phase/{k}", 0.0) + v
    manifest = RunManifest(
        config=cfg.to_dict(),
        seeds=[res.seed for res in results],
        version=__version__,
        backend=backend(),
        sizes=[res.sizes for res in results],
        timings=timings,
        failed_traces=[{"realization": tr.realization, "strategy": tr.strategy, "estimator": tr.estimator,
                        "reason": tr.failed} for tr in traces if tr.failed is not None],
    )
    atomic_write(out / "manifest.json", manifest.to_json() + "\n")
    return summary, manifest


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

TRACE_HEADER = ("realization", "strategy", "estimator", "iteration", "n_acquired", "eps_ate",
                "pehe", "sqrt_pehe", "n_treated", "n_control")


def prepare_output_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trace_rows(traces):
    for tr in traces:
        for r in tr.records:
            yield (tr.realization, tr.strategy, tr.estimator, r.iteration, r.n_acquired, r.eps_ate,
                   r.pehe, r.sqrt_pehe, r.n_treated_acquired, r.n_control_acquired)


def _pm(mean, ci) -> str:
    if math.isnan(mean):
        return "censored"
    return f"{mean:.3f} ± {ci:.3f}" if not math.isnan(ci) else f"{mean:.3f}"


def write_summary(out: Path, summary: Summary) -> None:
    atomic_write(out / "summary.csv", csv_text(
        ("estimator", "strategy", "metric", "mean_samples", "ci_half_width", "n_realizations", "n_censored"),
        [(r.estimator, r.strategy, r.metric, r.mean, r.ci_half_width, r.n_realizations, r.n_censored)
         for r in summary.efficiency]))
    # samples-to-threshold table: one row per (metric, estimator), one column per strategy
    strategies = sorted({r.strategy for r in summary.efficiency})
    rows = []
    for metric in ("eps_ate", "sqrt_pehe"):
        for est in sorted({r.estimator for r in summary.efficiency}):
            cells = []
            for s in strategies:
                try:
                    r = summary.lookup(est, s, metric)
                    cells.append(_pm(r.mean, r.ci_half_width))
                except KeyError:
                    cells.append("")
            rows.append((metric, est, *cells))
    atomic_write(out / "table_samples_to_optimal.csv", csv_text(("metric", "estimator", *strategies), rows))
    atomic_write(out / "table_optimal.csv", csv_text(
        ("estimator", "metric", "mean", "ci_half_width", "n_realizations"), summary.optimal))
    atomic_write(out / "curves.csv", csv_text(
        ("estimator", "strategy", "metric", "iteration", "mean_n_acquired", "mean", "ci_half_width", "n"),
        summary.curves))
    atomic_write(out / "significance.csv", csv_text(
        ("estimator", "metric", "strategy_a", "strategy_b", "welch_p", "significant"), summary.significance))


def write_outputs(out: Path, results: Sequence[RealizationResult], summary: Summary) -> None:
    traces = [tr for res in results for tr in res.traces]
    atomic_write(out / "traces.csv", csv_text(TRACE_HEADER, trace_rows(traces)))
    acq = [(tr.realization, tr.strategy, tr.estimator, it + 1, ident, t)
           for tr in traces for it, step in enumerate(tr.acquired) for (_, ident, t) in step]
    atomic_write(out / "acquisitions.csv", csv_text(
        ("realization", "strategy", "estimator", "iteration", "id", "t"), acq))
    opt = [(res.index, est, e, p) for res in results for est, (e, p) in res.optimal.items()]
    atomic_write(out / "optimal.csv", csv_text(("realization", "estimator", "opt_eps_ate", "opt_sqrt_pehe"), opt))
    pca = [row for res in results for row in res.pca_rows]
    if pca:
        atomic_write(out / "pca.csv", csv_text(
            ("realization", "strategy", "estimator", "iteration", "id", "pc1", "pc2", "arm"), pca))
    write_summary(out, summary)


def read_traces(out: Path) -> list[AcquisitionTrace]:
    """Rebuild traces from ``traces.csv``, ``optimal.csv`` and (if present) ``acquisitions.csv``."""
    out = Path(out)
    try:
        with open(out / "traces.csv", newline="") as fh:
            trace_recs = list(csv.DictReader(fh))
        with open(out / "optimal.csv", newline="") as fh:
            opt_recs = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read traces from {out}: {exc}") from exc
    optimal = {(int(r["realization"]), r["estimator"]): (float(r["opt_eps_ate"]), float(r["opt_sqrt_pehe"]))
               for r in opt_recs}
    traces: dict[tuple, AcquisitionTrace] = {}
    for r in trace_recs:
        key = (int(r["realization"]), r["strategy"], r["estimator"])
        tr = traces.get(key)
        if tr is None:
            e, p = optimal.get((key[0], key[2]), (float("nan"), float("nan")))
            tr = traces[key] = AcquisitionTrace(key[0], key[0], key[1], key[2],
                                                optimal_eps_ate=e, optimal_sqrt_pehe=p)
        tr.records.append(MetricsRecord(int(r["iteration"]), int(r["n_acquired"]), -1, float(r["eps_ate"]),
                                        float(r["pehe"]), int(r["n_treated"]), int(r["n_control"])))
    acq_path = out / "acquisitions.csv"
    if acq_path.exists():
        with open(acq_path, newline="") as fh:
            for r in csv.DictReader(fh):
                tr = traces.get((int(r["realization"]), r["strategy"], r["estimator"]))
                if tr is None:
                    continue
                it = int(r["iteration"])
                while len(tr.acquired) < it:
                    tr.acquired.append([])
                tr.acquired[it - 1].append((-1, r["id"], int(r["t"])))
    for tr in traces.values():
        if any(math.isnan(v) for v in (tr.optimal_eps_ate, tr.optimal_sqrt_pehe)):
            tr.failed = "optimal reference unavailable"
    return [traces[k] for k in sorted(traces)]


__all__ = [
    "ConfigError", "EstimatorSpec", "ExperimentConfig", "RealizationResult", "RunManifest",
    "apply_overrides", "atomic_write", "load_config", "load_data", "read_traces", "run_experiment",
    "run_realization", "run_realizations", "run_trace", "write_summary",
]
