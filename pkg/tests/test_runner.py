import math

import numpy as np
import pytest

from confacq.data_model import DataPartition
from confacq.estimators import effect
from confacq.runner import (
    ConfigError,
    EstimatorSpec,
    ExperimentConfig,
    apply_overrides,
    read_traces,
    run_experiment,
    run_realization,
    run_trace,
)
from confacq.simulate import SimulationConfig, build_world

FAST = {"kind": "dr", "hyperparams": {"epochs": 40}}


def small_cfg(**kw):
    base = dict(data={"source": "synthetic", "n": 120}, estimators=[FAST], strategies=["random", "oe"],
                batch_size=10, simulation={"mask_fraction": 0.8}, seed=3)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def toy_world(cohort):
    from confacq.data_model import synthesize_covariates, IHDP_LIKE_COLUMNS

    cov = synthesize_covariates(20, IHDP_LIKE_COLUMNS, seed=1)
    world, _ = build_world(cov, SimulationConfig(mask_fraction=0.5), 2)
    t = world.t
    treated, control = np.flatnonzero(t == 1), np.flatnonzero(t == 0)
    train = {int(treated[0]), int(treated[1]), int(control[0]), int(control[1])}
    rest = [r for r in range(20) if r not in train]
    test, pool = set(rest[:3]), set(rest[3:])
    part = DataPartition(train, pool, frozenset(test), {r: int(world.truth.a[r]) for r in train})
    return world, part


@pytest.mark.parametrize("batch", [1, 3, 7])
def test_random_trace_length(cohort, batch):
    world, part = toy_world(cohort)
    cfg = small_cfg(batch_size=batch, strategies=["random"])
    tr = run_trace(world, part, "random", EstimatorSpec("dr", {"epochs": 20}), cfg, 0)
    assert tr.failed is None
    assert len(tr.records) == math.ceil(len(part.pool) / batch) + 1
    assert tr.records[-1].n_acquired == len(part.pool)
    tr.check(batch_size=batch)


def test_batch_larger_than_pool_single_step(cohort):
    world, part = toy_world(cohort)
    cfg = small_cfg(batch_size=500, strategies=["random"])
    tr = run_trace(world, part, "random", EstimatorSpec("dr", {"epochs": 20}), cfg, 0)
    assert len(tr.records) == 2


def test_zero_iterations_only_initial_record(cohort):
    world, part = toy_world(cohort)
    cfg = small_cfg(max_iterations=0)
    tr = run_trace(world, part, "oe", EstimatorSpec("dr", {"epochs": 20}), cfg, 0)
    assert len(tr.records) == 1 and tr.records[0].n_acquired == 0


def test_initial_partition_untouched(cohort):
    world, part = toy_world(cohort)
    before = (set(part.train), set(part.pool))
    run_trace(world, part, "cb", EstimatorSpec("dr", {"epochs": 20}), small_cfg(), 0)
    assert (part.train, part.pool) == before


def test_realization_paired_and_deterministic():
    cfg = small_cfg(strategies=["random", "oe", "cb", "uncertainty"], max_iterations=3)
    a = run_realization(cfg, 11)
    b = run_realization(cfg, 11)
    assert [tr.records for tr in a.traces] == [tr.records for tr in b.traces]
    first = {tr.records[0] for tr in a.traces}
    assert len(first) == 1  # every strategy starts from the same fitted state
    c = run_realization(cfg, 12)
    assert a.traces[0].records != c.traces[0].records


def test_full_run_ends_at_optimal():
    cfg = small_cfg(strategies=["random"], batch_size=40)
    res = run_realization(cfg, 5)
    tr = res.traces[0]
    assert tr.records[-1].eps_ate == res.optimal["dr"][0]
    assert tr.records[-1].sqrt_pehe == pytest.approx(res.optimal["dr"][1], rel=1e-12)


def test_stop_at_optimal_truncates():
    full = run_realization(small_cfg(strategies=["random"]), 5).traces[0]
    cut = run_realization(small_cfg(strategies=["random"], stop_at_optimal="eps_ate"), 5).traces[0]
    assert len(cut.records) <= len(full.records)
    assert cut.records == full.records[:len(cut.records)]
    assert cut.records[-1].eps_ate <= 1.01 * cut.optimal_eps_ate or cut.records[-1].eps_ate < 1e-3


def test_pca_rows_exported():
    res = run_realization(small_cfg(strategies=["cb"], pca_iterations=[0, 2], max_iterations=2), 5)
    its = {row[3] for row in res.pca_rows}
    assert its == {0, 2}


@pytest.mark.parametrize("bad", [dict(batch_size=0), dict(strategies=["magic"]), dict(n_realizations=0),
                                 dict(estimators=["cf"]), dict(unknown_key=1), dict(stop_at_optimal="x"),
                                 dict(simulation={"mask_fraction": 1.5}), dict(data={"source": "file"})])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        small_cfg(**bad)


def test_capability_gate(monkeypatch):
    class NoFactual(effect.DoublyRobustEstimator):
        kind = "plugin"
        predicts_factual_outcome = False

    monkeypatch.setitem(effect.ESTIMATORS, "plugin", NoFactual)
    with pytest.raises(ConfigError, match="factual"):
        small_cfg(estimators=["plugin"], strategies=["oe"])
    small_cfg(estimators=["plugin"], strategies=["random"])


def test_overrides():
    d = apply_overrides({"a": {"b": 1}}, ["a.b=2", "a.c=[1, 2]", "name=text"])
    assert d == {"a": {"b": 2, "c": [1, 2]}, "name": "text"}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["nokey"])


def test_experiment_outputs_roundtrip(tmp_path):
    cfg = small_cfg(n_realizations=2, max_iterations=2)
    summary, manifest = run_experiment(cfg, tmp_path)
    for name in ("traces.csv", "optimal.csv", "summary.csv", "table_samples_to_optimal.csv",
                 "table_optimal.csv", "curves.csv", "significance.csv", "manifest.json", "acquisitions.csv"):
        assert (tmp_path / name).exists(), name
    assert manifest.seeds == [3, 4]
    traces = read_traces(tmp_path)
    assert len(traces) == 4
    assert [r.eps_ate for r in traces[0].records] == [r.eps_ate for r in
                                                      sorted(traces, key=lambda t: (t.realization, t.strategy))[0].records]
    assert not list(tmp_path.glob(".*.tmp"))


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigError):
        run_experiment(small_cfg(max_iterations=0, n_realizations=2), blocker / "sub")
