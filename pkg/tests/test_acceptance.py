"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict (printed in the terminal
summary) before asserting.
"""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from matchforge.core import MatchedPairs
from matchforge.encoders import build_encoder, distances_to, mahalanobis_encoder, pair_distance
from matchforge.core import Encoder
from matchforge.linalg import inverse_cholesky_factor, ols_fit, pseudo_inverse
from matchforge.matcher import apply_caliper, brute_force_match, greedy_match, visit_order
from matchforge.runner import common_support_level, run_confounding_experiment, run_pruning_sweep
from matchforge.scenarios import (
    builtin_scenario,
    builtin_scenarios,
    common_support_fraction,
    gen_king_nielson,
    in_common_support,
    king_nielson,
    memo_scenario,
)
from matchforge.theory import BiasCheckReport, TheoremCheckReport, run_theorem_checks

from conftest import make_sample, record_criterion

pytestmark = pytest.mark.slow

MEMO_SHIFTS = (1.5, 2.5, 3.5)


@pytest.fixture(scope="module")
def theorem_reports():
    t0 = time.perf_counter()
    reports = run_theorem_checks(replications=100_000, seed=2024, bias_n=100_000)
    return reports, time.perf_counter() - t0


def test_criterion_01_confounding_intervals():
    t0 = time.perf_counter()
    res = run_confounding_experiment(n=200, runs=1000, master_seed=2024)
    elapsed = time.perf_counter() - t0
    (ulo, uhi), (mlo, mhi) = res.unmatched, res.matched
    ok = (
        abs(ulo - 0.09) <= 0.06
        and abs(uhi - 0.29) <= 0.06
        and mlo <= 0.0 <= mhi
        and abs(mlo + 0.13) <= 0.06
        and abs(mhi - 0.04) <= 0.06
        and elapsed < 30
    )
    record_criterion(1, "confounding intervals", ok,
                     f"unmatched=({ulo:.3f}, {uhi:.3f}) matched=({mlo:.3f}, {mhi:.3f}) "
                     f"dropped={res.dropped} {elapsed:.1f}s")
    assert ok


def test_criterion_02_scenario_att_recovery():
    t0 = time.perf_counter()
    worst, details = 0.0, []
    for spec in builtin_scenarios():
        k = common_support_level(spec)
        res = run_pruning_sweep(spec, runs=100, prune_grid=(k,), master_seed=2024, with_variance=False)
        for row in res.rows:
            worst = max(worst, abs(row.mean_estimate - 2.0))
        details.append(f"s{spec.name}@{k}:" + "/".join(f"{r.mean_estimate:.2f}" for r in res.rows))
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.25 and elapsed < 300
    record_criterion(2, "ATT recovery on scenarios 1-9", ok,
                     f"max |mean - 2| = {worst:.3f}, {elapsed:.0f}s; " + " ".join(details))
    assert ok


def test_criterion_03_common_support():
    spec = king_nielson(2, [1, 1], 2.0, n_control=10, n_treated=100_000)
    exact = common_support_fraction(spec)
    s, _ = gen_king_nielson(spec, 2024)
    share = float(in_common_support(spec, s.covariates[s.treated_indices]).mean())
    ok = exact == 0.64 and abs(share - 0.64) <= 0.01
    record_criterion(3, "common-support fraction", ok, f"formula={exact!r} empirical={share:.4f}")
    assert ok


def test_criterion_04_memo_identity():
    atts, means = [], []
    for eta in MEMO_SHIFTS:
        spec = memo_scenario(eta)
        k = common_support_level(spec)
        res = run_pruning_sweep(spec, ("mahalanobis",), runs=100, prune_grid=(k,), master_seed=2024,
                                with_variance=False)
        atts.append(spec.att)
        means.append(res.rows[0].mean_estimate)
    exact = all(a == eta - 1 for a, eta in zip(atts, MEMO_SHIFTS))
    close = all(abs(m - a) <= 0.2 for m, a in zip(means, atts))
    slope = float(np.polyfit(atts, means, 1)[0])
    ok = exact and close and abs(slope - 1) <= 0.1
    record_criterion(4, "memo identity", ok,
                     f"att={atts} estimates={[round(m, 3) for m in means]} slope={slope:.3f}")
    assert ok


def _theorem_group(reports, prefix):
    return [(name, rep) for name, rep in reports if name.startswith(prefix)]


def test_criterion_05_noise_folding_mdm(theorem_reports):
    reports, elapsed = theorem_reports
    group = _theorem_group(reports, "mdm-")
    rank_def = any(name in ("mdm-rank1-K-empty", "mdm-rankdef4-K1") for name, _ in group)
    worst = max(abs(r.formula_value - r.monte_carlo_value) / max(r.mc_standard_error, 1e-300) for _, r in group
                if r.mc_standard_error > 0)
    ok = (len(group) >= 6 and rank_def and all(r.passed and r.replications == 100_000 for _, r in group)
          and elapsed < 60)
    record_criterion(5, "noise folding (Mahalanobis)", ok,
                     f"{sum(r.passed for _, r in group)}/{len(group)} within 4 se, worst z={worst:.2f}, "
                     f"all checks {elapsed:.1f}s")
    assert ok


def test_criterion_06_noise_folding_odm(theorem_reports):
    reports, _ = theorem_reports
    group = _theorem_group(reports, "odm-")
    zero_shift = [r for name, r in group if name == "odm-no-shift"]
    ok = (len(group) >= 4 and zero_shift and zero_shift[0].formula_value == 0.0
          and all(r.passed for _, r in group))
    record_criterion(6, "noise folding (ODM)", ok,
                     f"{sum(r.passed for _, r in group)}/{len(group)} within 4 se; omega=0 gives "
                     f"{zero_shift[0].monte_carlo_value if zero_shift else 'n/a'}")
    assert ok


def test_criterion_07_coefficient_bias(theorem_reports):
    reports, _ = theorem_reports
    group = [(n, r) for n, r in reports if isinstance(r, BiasCheckReport)]
    ok = (len(group) == 3 and all(r.n == 100_000 for _, r in group)
          and all(r.cosine > 0.99 and abs(r.magnitude_ratio - 1) < 0.05 and r.support_ok for _, r in group))
    record_criterion(7, "regression bias direction", ok,
                     " ".join(f"{n}: cos={r.cosine:.4f} ratio={r.magnitude_ratio:.4f} support={r.support_ok}"
                              for n, r in group))
    assert ok


def test_criterion_08_model_dependence_ordering():
    shares = {}
    for number in (2, 3):
        spec = builtin_scenario(number)
        k = common_support_level(spec)
        res = run_pruning_sweep(spec, runs=100, prune_grid=(k,), master_seed=2024)
        v = {m: res.spec_variances[m][:, 0] for m in ("propensity", "mahalanobis", "odm")}
        shares[number] = (float(np.mean(v["odm"] <= v["mahalanobis"])),
                          float(np.mean(v["mahalanobis"] <= v["propensity"])), k)
    ok = all(a >= 0.8 and b >= 0.8 for a, b, _ in shares.values())
    record_criterion(8, "spec-variance ordering ODM <= MDM <= PSM", ok,
                     " ".join(f"scenario {n} (k={k}): odm<=mdm {a:.2f}, mdm<=psm {b:.2f}"
                              for n, (a, b, k) in shares.items()))
    assert ok


def _random_small_sample(seed):
    rng = np.random.default_rng(seed)
    n_t, n_c, p = int(rng.integers(1, 13)), int(rng.integers(1, 25)), int(rng.integers(1, 4))
    X = rng.normal(size=(n_t + n_c, p))
    if seed % 4 == 0:
        X = np.round(X)
    t = rng.permutation(np.r_[np.ones(n_t), np.zeros(n_c)])
    return make_sample(X, t, rng.normal(size=n_t + n_c))


def test_criterion_09_greedy_equals_brute_force():
    agree = 0
    for seed in range(100):
        s = _random_small_sample(seed)
        kind = ("identity", "mahalanobis", "propensity")[seed % 3]
        enc = build_encoder(kind, s)
        fast = greedy_match(s, enc, seed)
        slow = brute_force_match(s, enc, visit_order(s, seed))
        agree += (fast.treated.tolist() == slow.treated.tolist()
                  and fast.control.tolist() == slow.control.tolist()
                  and np.allclose(fast.distance, slow.distance, rtol=1e-12, atol=1e-12))
    record_criterion(9, "greedy == brute force", agree == 100, f"{agree}/100 samples identical")
    assert agree == 100


CLI_CONFIGS = {
    "sweep": "scenario=3\nruns=4\nprune_grid=0,10,30\nseed=11\n",
    "confounding": "runs=150\nn=200\nseed=11\n",
    "theorem-check": "replications=3000\nseed=11\n",
    "scenario-dump": "scenario=2\nseed=11\n",
    "match": "seed=11\nmethod=odm\ncaliper=0.5\ninput_path={dump}\n",
}


def _run_cli(command, cfg, out, threads):
    env = dict(os.environ, MATCHFORGE_THREADS=str(threads))
    proc = subprocess.run([sys.executable, "-m", "matchforge", command, "--config", str(cfg), "--out", str(out)],
                          env=env, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out.read_bytes()


def test_criterion_10_cli_determinism(tmp_path):
    dump = tmp_path / "dump.csv"
    identical = {}
    for command in ("scenario-dump", "sweep", "confounding", "theorem-check", "match"):
        cfg = tmp_path / f"{command}.cfg"
        cfg.write_text(CLI_CONFIGS[command].format(dump=dump))
        outputs = [_run_cli(command, cfg, tmp_path / f"{command}-{i}.csv", threads)
                   for i, threads in enumerate((1, 1, 4))]
        if command == "scenario-dump":
            dump.write_bytes(outputs[0])
        identical[command] = outputs[0] == outputs[1] == outputs[2] and len(outputs[0]) > 0
    ok = all(identical.values())
    record_criterion(10, "CLI determinism", ok,
                     " ".join(f"{c}={'same' if v else 'DIFFERENT'}" for c, v in identical.items())
                     + " (threads 1, 1, 4)")
    assert ok


def test_criterion_11_property_suites():
    rng = np.random.default_rng(2024)
    failures = {}

    def fail(name):
        failures[name] = failures.get(name, 0) + 1

    for trial in range(200):
        p, k = int(rng.integers(1, 5)), None
        k = int(rng.integers(1, p + 1))
        enc = Encoder(rng.normal(size=(p, k)), "mahalanobis")
        x, y, z = rng.normal(size=(3, p)) * 3
        dxy = pair_distance(enc, x, y)
        if not (pair_distance(enc, x, x) == 0 and dxy >= 0 and np.isclose(dxy, pair_distance(enc, y, x), rtol=1e-12)
                and dxy <= pair_distance(enc, x, z) + pair_distance(enc, z, y) + 1e-9):
            fail("pseudo-metric")

        X = rng.normal(size=(40, 3))
        M = rng.normal(size=(3, 3)) + 2 * np.eye(3)
        if np.linalg.cond(M) < 1e3:
            t = np.arange(40) % 2
            d0 = distances_to(mahalanobis_encoder(make_sample(X, t)), X[0], X[1:])
            c = rng.normal(size=3) * 10
            d1 = distances_to(mahalanobis_encoder(make_sample(X @ M + c, t)), X[0] @ M + c, X[1:] @ M + c)
            if not np.allclose(d1, d0, rtol=1e-6, atol=0):
                fail("affine invariance")

        D = np.column_stack([np.ones(30), rng.normal(size=(30, 4))])
        yv = rng.normal(size=30) * 5
        coef = ols_fit(D, yv).coefficients
        if np.max(np.abs(D.T @ (yv - D @ coef))) > 1e-8:
            fail("OLS orthogonality")

        r = int(rng.integers(1, 5))
        A = rng.normal(size=(4, r))
        S = A @ A.T
        P = pseudo_inverse(S)
        R = inverse_cholesky_factor(S)
        scale = max(1.0, np.abs(P).max())
        if not (np.allclose(R @ R.T, P, atol=1e-8 * scale) and np.allclose(S @ P @ S, S, atol=1e-8 * max(1.0, np.abs(S).max()))
                and np.allclose(P, np.linalg.pinv(S, rcond=1e-10, hermitian=True), atol=1e-8 * scale)):
            fail("Cholesky / pseudo-inverse reconstruction")

        dist = rng.exponential(size=10)
        pairs = MatchedPairs.from_tuples([(20 + i, i, d) for i, d in enumerate(dist)])
        lo, hi = np.sort(rng.exponential(size=2))
        if not set(apply_caliper(pairs, lo).treated) <= set(apply_caliper(pairs, hi).treated):
            fail("caliper monotonicity")

    ok = not failures
    record_criterion(11, "property suites", ok, f"200 randomized trials each; failures: {failures or 'none'}")
    assert ok
