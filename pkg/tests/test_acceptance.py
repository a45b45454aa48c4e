"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The long Monte-Carlo reproductions (criteria 6-8) take several minutes on a
single core. Set CONFACQ_IHDP_CSV to a covariate file (``id`` column plus the
IHDP covariate names) to run them on real covariates; criterion 9 needs it.
"""

from __future__ import annotations

import math
import os
import time

import numpy as np
import pytest
from helpers import ACCEPTANCE_LINES, linear_world

from confacq.acquire import BalanceState, KernelSpec, PoolView, TrainView, expected_mmd_scores, mmd
from confacq.cli import main as cli_main
from confacq.data_model import IHDP_LIKE_COLUMNS, CovariateTable, normalize, synthesize_covariates
from confacq.estimators import GaussianProcessRegressor, fit_estimator
from confacq.estimators.effect import DoublyRobustEstimator
from confacq.evaluate import (
    early_control_fraction,
    eps_ate,
    pehe,
    samples_to_within,
    trace_samples_to_within,
    welch_pvalue,
)
from confacq.runner import ExperimentConfig, run_realization, run_realizations
from confacq.simulate import (
    AVariantConfig,
    apply_a_variant,
    apply_mnar_mask,
    draw_treatment_params,
    treatment_probabilities,
)

IHDP_CSV = os.environ.get("CONFACQ_IHDP_CSV")


def report(n: int, ok: bool, detail: str, seconds: float | None = None):
    took = f" [{seconds:.1f}s]" if seconds is not None else ""
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}{took}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


def data_block():
    if IHDP_CSV:
        return {"source": "file", "path": IHDP_CSV}
    return {"source": "synthetic", "n": 747}


def naive_rbf(P, Q, bw):
    d2 = ((P[:, None, :] - Q[None, :, :]) ** 2).sum(-1)
    return np.exp(-d2 / (2.0 * bw * bw))


def naive_mmd(U, V, bw):
    """From-scratch V-statistic MMD, written without the package kernels."""
    sq = naive_rbf(U, U, bw).mean() + naive_rbf(V, V, bw).mean() - 2.0 * naive_rbf(U, V, bw).mean()
    return math.sqrt(max(sq, 0.0))


# ---------------------------------------------------------------------------

def test_criterion_1_mmd_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    checks = []
    for _ in range(20):
        U = rng.normal(size=(int(rng.integers(1, 8)), 3))
        V = rng.normal(size=(int(rng.integers(1, 8)), 3)) + rng.normal()
        bw = float(rng.uniform(0.3, 3))
        m_uv, m_vu = mmd(U, V, bw), mmd(V, U, bw)
        checks.append(m_uv >= 0 and abs(m_uv - m_vu) <= 1e-12 and mmd(U, U, bw) <= 1e-7)
    props_ok = all(checks)
    single = mmd([[0.0]], [[1.0]], 1.0)
    single_ok = abs(single - math.sqrt(2 - 2 * math.exp(-0.5))) <= 1e-10 and abs(single - 0.8871) < 1e-4

    # 50-step acquisition run with the cached kernel sums checked against scratch
    x = rng.normal(size=(160, 3))
    a = rng.integers(0, 2, 160).astype(float)
    t = rng.integers(0, 2, 160)
    feats = np.column_stack([x, a])
    train = list(range(10))
    t[:2] = [0, 1]
    pool = list(range(10, 160))
    bw = 1.4
    state = BalanceState(feats[[r for r in train if t[r] == 1]], feats[[r for r in train if t[r] == 0]], bw)
    p_a1 = rng.random(160)
    worst = 0.0
    for step in range(50):
        rows = np.array(pool)
        scores = expected_mmd_scores(state, x[rows], t[rows], p_a1[rows])
        T = feats[[r for r in train if t[r] == 1]]
        C = feats[[r for r in train if t[r] == 0]]
        for k, r in enumerate(rows[:: max(1, len(rows) // 15)]):
            z1, z0 = np.append(x[r], 1.0)[None], np.append(x[r], 0.0)[None]
            if t[r] == 1:
                want = p_a1[r] * naive_mmd(np.vstack([T, z1]), C, bw) + (1 - p_a1[r]) * naive_mmd(np.vstack([T, z0]), C, bw)
            else:
                want = p_a1[r] * naive_mmd(T, np.vstack([C, z1]), bw) + (1 - p_a1[r]) * naive_mmd(T, np.vstack([C, z0]), bw)
            worst = max(worst, abs(scores[list(rows).index(r)] - want))
        pick = int(rows[np.argmin(scores)])
        state.add(feats[pick][None], int(t[pick]))
        pool.remove(pick)
        train.append(pick)
        T = feats[[r for r in train if t[r] == 1]]
        C = feats[[r for r in train if t[r] == 0]]
        worst = max(worst, abs(state.mmd() - naive_mmd(T, C, bw)))
    secs = time.perf_counter() - t0
    ok = props_ok and single_ok and worst <= 1e-10 and secs < 10
    report(1, ok, f"properties={props_ok}, singleton={single:.10f}, max incremental error={worst:.2e}", secs)


def test_criterion_2_expected_mmd_exact():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    n = 30
    x = rng.normal(size=(n, 2))
    a = rng.integers(0, 2, n).astype(float)
    t = np.array([0, 1] * 15)
    train, pool = np.arange(10), np.arange(10, 30)
    feats = np.column_stack([x, a])
    T, C = feats[train][t[train] == 1], feats[train][t[train] == 0]
    bw = KernelSpec().resolve(feats[train])
    state = BalanceState(T, C, bw)
    p = rng.random(n)
    got = expected_mmd_scores(state, x[pool], t[pool], p[pool])
    worst = 0.0
    for k, r in enumerate(pool):
        branches = []
        for av in (0.0, 1.0):
            z = np.append(x[r], av)[None]
            branches.append(naive_mmd(np.vstack([T, z]), C, bw) if t[r] == 1 else naive_mmd(T, np.vstack([C, z]), bw))
        want = (1 - p[r]) * branches[0] + p[r] * branches[1]
        worst = max(worst, abs(got[k] - want))
    secs = time.perf_counter() - t0
    report(2, worst <= 1e-12 and secs < 5, f"max |expected - brute force| = {worst:.2e} over {len(pool)} candidates",
           secs)


def test_criterion_3_simulation_conformance():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    counts_ok = all(len(apply_mnar_mask(rng.integers(0, 2, n), 0.95, n)) == math.ceil(0.95 * n)
                    for n in (20, 100, 560, 747, 1001))
    table, _ = normalize(synthesize_covariates(2000, IHDP_LIKE_COLUMNS, 5))
    probs = [treatment_probabilities(table, draw_treatment_params(table, seed=s, xi_high=h))
             for s in range(5) for h in (0.2, 2.0, 20.0)]
    extreme = CovariateTable(("s",), ("continuous",), np.array([[1.7], [-3.0], [0.0]]), ("0", "1", "2"))
    from confacq.simulate import TreatmentParams

    p_ext = treatment_probabilities(extreme, TreatmentParams(("s",), [1.0]))
    clip_ok = all(p.min() >= 0.005 and p.max() <= 0.995 for p in probs) and \
        np.allclose(p_ext, [0.995, 0.005, 0.005])
    a = rng.integers(0, 2, 500)
    order_ok = True
    for k in (50, 200, 400):
        masked = set(apply_mnar_mask(a, k / 500, 1, noise_scale=0.0).tolist())
        zeros, ones = set(np.flatnonzero(a == 0).tolist()), set(np.flatnonzero(a == 1).tolist())
        order_ok &= masked <= zeros if k <= len(zeros) else zeros <= masked
    cov = synthesize_covariates(20000, IHDP_LIKE_COLUMNS, 6)
    corr, prop = [], []
    for rho in (0.0, 0.4, 0.8):
        out, z = apply_a_variant(cov, AVariantConfig("bivariate_gaussian", rho=rho), 7, return_latent=True)
        corr.append(float(np.corrcoef(z, out.column("bw"))[0, 1]))
        prop.append(abs(out.column("momwhite").mean() - cov.column("momwhite").mean()))
    corr_ok = all(abs(c - r) <= 0.03 for c, r in zip(corr, (0.0, 0.4, 0.8)))
    prop_ok = all(d <= 1 / 20000 for d in prop)
    secs = time.perf_counter() - t0
    ok = counts_ok and clip_ok and order_ok and corr_ok and prop_ok and secs < 30
    report(3, ok, f"mask counts={counts_ok}, clip={clip_ok}, A=0 first={order_ok}, "
                  f"corr={[round(c, 3) for c in corr]}, max proportion shift={max(prop):.1e}", secs)


def test_criterion_4_estimator_oracles():
    t0 = time.perf_counter()
    ates = []
    for s in range(20):
        x, a, t, y, _ = linear_world(2000, tau=2.0, seed=s)
        ates.append(fit_estimator("dr", x, a, t, y, seed=s).estimate_ate(x, a))
    mean_ate = float(np.mean(ates))
    recover_ok = abs(mean_ate - 2.0) <= 0.1

    def dr_arm(**kw):
        vals = []
        for s in range(20):
            x, a, t, y, _ = linear_world(5000, tau=2.0, seed=100 + s)
            m = DoublyRobustEstimator(seed=s, **kw).fit(x, a, t, y)
            vals.append(m.estimate_ate(x, a, t, y))
        vals = np.array(vals)
        half = 1.96 * vals.std(ddof=1) / math.sqrt(len(vals))
        return float(vals.mean()), float(half)

    m_out, h_out = dr_arm(outcome_model="mean")
    m_prop, h_prop = dr_arm(propensity_model="marginal")
    naive = []
    for s in range(20):
        x, a, t, y, _ = linear_world(5000, tau=2.0, seed=100 + s)
        naive.append(y[t == 1].mean() - y[t == 0].mean())
    dr_ok = abs(m_out - 2.0) <= h_out and abs(m_prop - 2.0) <= h_prop

    xs = np.linspace(0, 2 * np.pi, 50)[:, None]
    gp = GaussianProcessRegressor(noise_variance=1e-6).fit(xs, np.sin(xs[:, 0]))
    rmse = float(np.sqrt(np.mean((gp.predict(xs) - np.sin(xs[:, 0])) ** 2)))

    iso_ok = True
    for kind in ("dr", "gp_multi", "mlp_multi"):
        x, a, t, y, _ = linear_world(200, seed=9)
        y2 = y.copy()
        y2[t == 0] += 5.0
        y3 = y.copy()
        y3[t == 1] -= 5.0
        p = fit_estimator(kind, x, a, t, y, seed=1).predict_potential(x, a)
        p2 = fit_estimator(kind, x, a, t, y2, seed=1).predict_potential(x, a)
        p3 = fit_estimator(kind, x, a, t, y3, seed=1).predict_potential(x, a)
        iso_ok &= np.array_equal(p[1], p2[1]) and np.array_equal(p[0], p3[0])
    secs = time.perf_counter() - t0
    ok = recover_ok and dr_ok and rmse < 0.05 and iso_ok and secs < 300
    report(4, ok, f"DR mean ATE={mean_ate:.3f}; misspecified outcome {m_out:.3f}±{h_out:.3f}, "
                  f"misspecified propensity {m_prop:.3f}±{h_prop:.3f} (naive {np.mean(naive):.3f}); "
                  f"GP RMSE={rmse:.1e}; arm isolation={iso_ok}", secs)


def test_criterion_5_metric_oracles():
    t0 = time.perf_counter()
    fixtures_ok = eps_ate([0, 0], [1, 3], [0, 0], [0, 2]) == 1.0 and pehe([0, 0], [1, 3], [0, 0], [0, 2]) == 1.0
    walk_ok = (samples_to_within([2.0, 1.2, 1.005, 1.0], [0, 10, 20, 30], 1.0) == 20
               and samples_to_within([0.9, 2.0], [0, 10], 1.0) == 0
               and samples_to_within([2.0, 1.5], [0, 10], 1.0) is None)
    cfg = ExperimentConfig.from_dict({"data": {"source": "synthetic", "n": 200},
                                      "estimators": ["dr", "gp_multi", "mlp_multi"],
                                      "strategies": ["random", "oe", "cb", "uncertainty"],
                                      "batch_size": 20, "max_iterations": 4})
    n_rec, worst = 0, 0.0
    for seed in (1, 2):
        for tr in run_realization(cfg, seed).traces:
            for r in tr.records:
                n_rec += 1
                worst = min(worst, r.pehe - r.eps_ate ** 2)
    jensen_ok = n_rec > 0 and worst >= -1e-9
    ok = fixtures_ok and walk_ok and jensen_ok
    report(5, ok, f"fixtures={fixtures_ok}, hand walks={walk_ok}, PEHE >= eps^2 on {n_rec} records",
           time.perf_counter() - t0)


def _samples_to_optimal(cfg_dict):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    hits = {s: [] for s in cfg.strategies}
    failed = 0
    for res in run_realizations(cfg):
        for tr in res.traces:
            if tr.failed is not None:
                failed += 1
                continue
            hits[tr.strategy].append(trace_samples_to_within(tr, "eps_ate"))
    return hits, failed


@pytest.mark.slow
def test_criterion_6_outcome_error_beats_random():
    t0 = time.perf_counter()
    hits, failed = _samples_to_optimal({
        "data": data_block(), "strategies": ["random", "oe"], "n_realizations": 50, "seed": 6000,
        "stop_at_optimal": "eps_ate"})
    oe = np.array([h for h in hits["oe"] if h is not None], float)
    rnd = np.array([h for h in hits["random"] if h is not None], float)
    p = welch_pvalue(oe, rnd, alternative="less")
    reduction = 1.0 - oe.mean() / rnd.mean()
    secs = time.perf_counter() - t0
    ok = len(oe) >= 50 and len(rnd) >= 50 and p < 0.05 and reduction >= 0.2 and secs < 1800
    report(6, ok, f"OE {oe.mean():.1f} vs Random {rnd.mean():.1f} samples (n={len(oe)}/{len(rnd)}, "
                  f"failed={failed}); reduction {reduction:.0%}, one-sided Welch p={p:.4f}", secs)


@pytest.mark.slow
def test_criterion_7_outcome_error_prefers_controls_early():
    t0 = time.perf_counter()
    probe = ExperimentConfig.from_dict({"data": data_block(), "strategies": ["random"], "max_iterations": 0})
    pool_size = run_realization(probe, 7000).sizes["pool"]
    share = 0.2
    iters = math.ceil(share * pool_size / 10)
    cfg = ExperimentConfig.from_dict({"data": data_block(), "strategies": ["cb", "oe"], "n_realizations": 50,
                                      "seed": 7000, "max_iterations": iters})
    frac = {"cb": [], "oe": []}
    for res in run_realizations(cfg):
        for tr in res.traces:
            if tr.failed is None:
                frac[tr.strategy].append(early_control_fraction(tr, share, res.sizes["pool"]))
    p = welch_pvalue(frac["oe"], frac["cb"], alternative="greater")
    secs = time.perf_counter() - t0
    ok = min(len(frac["oe"]), len(frac["cb"])) >= 50 and np.mean(frac["oe"]) > np.mean(frac["cb"]) and p < 0.05
    report(7, ok, f"control share in first {share:.0%}: OE {np.mean(frac['oe']):.3f} vs CB "
                  f"{np.mean(frac['cb']):.3f} (n={len(frac['oe'])}), one-sided Welch p={p:.2e}", secs)


@pytest.mark.slow
def test_criterion_8_robust_to_confounder_dependence():
    t0 = time.perf_counter()
    rows, ok = [], True
    for k, rho in enumerate((0.0, 0.4, 0.8)):
        hits, failed = _samples_to_optimal({
            "data": data_block(), "strategies": ["random", "oe"], "n_realizations": 30, "seed": 8000 + 100 * k,
            "stop_at_optimal": "eps_ate",
            "simulation": {"a_variant": {"mode": "bivariate_gaussian", "rho": rho}}})
        oe = [h for h in hits["oe"] if h is not None]
        rnd = [h for h in hits["random"] if h is not None]
        ok &= min(len(oe), len(rnd)) >= 30 and np.mean(oe) <= np.mean(rnd)
        rows.append(f"rho={rho}: OE {np.mean(oe):.1f} vs Random {np.mean(rnd):.1f}")
    report(8, bool(ok), "; ".join(rows), time.perf_counter() - t0)


def test_criterion_9_optimal_sanity_band():
    if not IHDP_CSV:
        line = "criterion 9: SKIP - needs IHDP covariates (set CONFACQ_IHDP_CSV)"
        ACCEPTANCE_LINES.append(line)
        pytest.skip(line)
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict({"data": data_block(), "strategies": ["random"], "max_iterations": 0,
                                      "n_realizations": 10, "seed": 9000})
    opt = [res.optimal["dr"][0] for res in run_realizations(cfg)]
    mean = float(np.mean(opt))
    report(9, 0.1 < mean < 3.0, f"DR optimal eps_ate {mean:.3f} over {len(opt)} realizations",
           time.perf_counter() - t0)


def test_criterion_10_run_is_byte_identical(tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "c.json"
    cfg.write_text('{"data": {"source": "synthetic", "n": 200}, "strategies": ["random", "oe", "cb"],'
                   ' "batch_size": 15, "n_realizations": 2, "max_iterations": 5}')
    for name in ("a", "b"):
        assert cli_main(["run", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path / name)]) == 0
    same = (tmp_path / "a" / "traces.csv").read_bytes() == (tmp_path / "b" / "traces.csv").read_bytes()
    report(10, same, "trace CSVs of two identical runs are byte-identical" if same else "trace CSVs differ",
           time.perf_counter() - t0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
