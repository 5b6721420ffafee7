"""End-to-end acceptance checks. Each test records one PASS/FAIL line, printed
in the pytest terminal summary under "acceptance criteria".

Criteria that need the measured table use it when available (see
``canonical_dataset_path``); otherwise the campaign runs on the synthetic
stand-in and the line says so.
"""
import itertools
import math
import time

import numpy as np
import pytest
from scipy import integrate, stats

from genforge import cvae, metrics
from genforge.campaign import STANDIN, CampaignConfig, run_campaign
from genforge.cvae import CvaeConfig
from genforge.data import (FeatureBounds, fit_standardizer, load_dataset, percentile)
from genforge.sbo import SboConfig, run_sbo
from genforge.standin import make_standin_dataset
from genforge.surrogate import SurrogateConfig, train_mlp_surrogate

from conftest import canonical_dataset_path

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SEEDS = range(5)
CANONICAL = canonical_dataset_path()
DATASET = str(CANONICAL) if CANONICAL else STANDIN
LABEL = "measured table" if CANONICAL else "synthetic stand-in"


def load_active():
    return load_dataset(CANONICAL) if CANONICAL else make_standin_dataset()


@pytest.fixture(scope="module")
def campaigns(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    return {s: run_campaign(CampaignConfig(dataset=DATASET, seed=s, out_dir=str(root / f"seed{s}")))
            for s in SEEDS}


# 1 -----------------------------------------------------------------------------

def _relative_errors(model, x, c, eps, h=1e-6):
    def loss():
        return cvae.elbo_loss(model, x, c, epsilon=eps)[0].total

    _, grads = cvae.elbo_loss(model, x, c, epsilon=eps)
    analytic = np.concatenate([g.ravel() for g in grads.as_list()])
    numeric = []
    for p in model.params():
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            up = loss()
            p[i] = old - h
            down = loss()
            p[i] = old
            numeric.append((up - down) / (2 * h))
    numeric = np.array(numeric)
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)


def test_gradient_correctness(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(20):
        d_x, d_z, d_c = (int(v) for v in rng.integers(1, 17, size=3))
        hidden = tuple(int(v) for v in rng.integers(1, 17, size=rng.integers(1, 3)))
        model = cvae.build_model(CvaeConfig(input_dim=d_x, latent_dim=d_z, condition_dim=d_c,
                                            hidden=hidden, beta=float(rng.uniform(0.1, 2)), seed=k))
        for net in (model.encoder, model.decoder):
            for layer in net.layers:
                layer.biases[:] = rng.normal(scale=0.1, size=layer.out_dim)
        n = int(rng.integers(1, 9))
        x, c, eps = rng.normal(size=(n, d_x)), rng.normal(size=(n, d_c)), rng.normal(size=(n, d_z))
        worst = max(worst, _relative_errors(model, x, c, eps).max())
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 60
    acceptance_log(1, ok, f"max relative gradient error {worst:.2e} (< 1e-4), {elapsed:.1f} s (< 60 s)")
    assert ok


# 2 -----------------------------------------------------------------------------

def test_kl_matches_integration(acceptance_log):
    rng = np.random.default_rng(7)
    worst = 0.0
    for mu, lv in zip(rng.uniform(-3, 3, 50), rng.uniform(-4, 4, 50)):
        sd = math.exp(lv / 2)
        p, q = stats.norm(mu, sd), stats.norm(0, 1)
        lo, hi = min(mu - 40 * sd, -40), max(mu + 40 * sd, 40)
        ref, _ = integrate.quad(lambda t: p.pdf(t) * (p.logpdf(t) - q.logpdf(t)), lo, hi,
                                points=[mu], limit=400, epsabs=1e-12, epsrel=1e-12)
        got = cvae.kl_divergence_diag_gaussian([[mu]], [[lv]])[0]
        worst = max(worst, abs(got - ref))
    ok = worst < 1e-6
    acceptance_log(2, ok, f"max |closed form - quadrature| {worst:.1e} over 50 pairs (< 1e-6)")
    assert ok


# 3 -----------------------------------------------------------------------------

def test_dataset_fidelity(acceptance_log):
    if CANONICAL is None:
        acceptance_log(3, False, "measured table not found (set GENFORGE_DATASET or add "
                                 "data/airfoil_self_noise.dat); cannot check record count or 10th percentile")
        pytest.fail("measured dataset file is not available")
    ds = load_dataset(CANONICAL)
    z = fit_standardizer(ds).transform(ds.table)
    mean_err = np.abs(z.mean(axis=0)).max()
    std_err = np.abs(z.std(axis=0) - 1).max()
    p10 = percentile(ds.y, 10)
    ok = ds.X.shape == (1503, 5) and mean_err < 1e-9 and std_err < 1e-9 and abs(p10 - 115.08) <= 0.5
    acceptance_log(3, ok, f"{ds.X.shape[0]} x {ds.X.shape[1]}, |mean| {mean_err:.1e}, |std-1| {std_err:.1e}, "
                          f"p10 {p10:.2f} dB (115.08 +- 0.5)")
    assert ok


# 4 -----------------------------------------------------------------------------

def test_oracle_quality(acceptance_log):
    ds = load_active()
    start = time.perf_counter()
    oracle = train_mlp_surrogate(ds, fit_standardizer(ds), SurrogateConfig())
    elapsed = time.perf_counter() - start
    ok = oracle.train_r2 > 0.85 and elapsed < 300
    acceptance_log(4, ok, f"oracle training R2 {oracle.train_r2:.4f} (> 0.85) in {elapsed:.1f} s (< 300 s) "
                          f"on the {LABEL}")
    assert ok


# 5 -----------------------------------------------------------------------------

def test_validity_rate(campaigns, acceptance_log):
    rates = [campaigns[s]["validity"]["validity_rate"] for s in SEEDS]
    ok = min(rates) >= 0.80 and max(rates) >= 0.90
    acceptance_log(5, ok, "validity rates " + ", ".join(f"{r:.3f}" for r in rates)
                   + f" (all >= 0.80, one >= 0.90) on the {LABEL}")
    assert ok


# 6 -----------------------------------------------------------------------------

def test_portfolio_superiority(campaigns, acceptance_log):
    fractions, gaps = [], []
    for s in SEEDS:
        r = campaigns[s]
        perf = r["performance"]
        fractions.append(perf["fraction_below_threshold"] if perf else 0.0)
        gaps.append(r["sbo_baseline"]["predicted_db"] - perf["mean"] if perf else -math.inf)
    wins_fraction = sum(f >= 0.50 for f in fractions)
    wins_gap = sum(g >= 3.0 for g in gaps)
    ok = wins_fraction >= 4 and wins_gap >= 4
    acceptance_log(6, ok, "fraction below SBO baseline " + ", ".join(f"{f:.3f}" for f in fractions)
                   + f" ({wins_fraction}/5 >= 0.50); baseline minus portfolio mean "
                   + ", ".join(f"{g:+.2f}" for g in gaps) + f" dB ({wins_gap}/5 >= 3 dB) on the {LABEL}")
    assert ok


# 7 -----------------------------------------------------------------------------

def test_sbo_baseline_sanity(acceptance_log):
    ds = load_active()
    std = fit_standardizer(ds)
    best = [run_sbo(ds, SboConfig(20, 70, s), std).best_true_value for s in range(20)]
    median = float(np.median(best))
    exhaustive = run_sbo(ds, SboConfig(20, len(ds), 0), std).best_true_value
    ok = 102 <= median <= 112 and exhaustive == ds.y.min()
    acceptance_log(7, ok, f"median best true value {median:.2f} dB over 20 seeds (in [102, 112]); "
                          f"full-budget best {exhaustive:.3f} vs dataset minimum {ds.y.min():.3f} on the {LABEL}")
    assert ok


# 8 -----------------------------------------------------------------------------

def _brute_histogram(values, bins):
    lo, hi = min(values), max(values)
    if lo == hi:  # numpy widens a degenerate range to +-0.5
        lo, hi = lo - 0.5, hi + 0.5
    width = (hi - lo) / bins
    counts = [0] * bins
    for v in values:
        k = min(int((v - lo) / width), bins - 1)
        counts[k] += 1
    return counts


def test_metric_oracles(acceptance_log):
    rng = np.random.default_rng(99)
    scale = np.array([10000, 10, 0.15, 40, 0.03])
    bounds = FeatureBounds(np.zeros(5), scale, 0.05 * scale)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(1, 11))
        designs = rng.uniform(-0.1, 1.1, size=(n, 5)) * scale
        pred = rng.uniform(95, 140, size=n)
        threshold = float(rng.uniform(95, 140))
        bins = int(rng.integers(1, 31))

        rep = metrics.check_validity(designs, bounds)
        flags = [all(-0.05 * s <= v <= 1.05 * s for v, s in zip(row, scale)) for row in designs.tolist()]
        mismatches += rep.flags.tolist() != flags or rep.valid_count != sum(flags)

        if n >= 2:
            pairs = [math.dist(a, b) for a, b in itertools.combinations(designs.tolist(), 2)]
            mismatches += abs(metrics.diversity(designs).value - sum(pairs) / len(pairs)) > 1e-9

        ps = metrics.performance_stats(pred, threshold)
        vals = pred.tolist()
        mean = sum(vals) / n
        sd = math.sqrt(sum((v - mean) ** 2 for v in vals) / n)
        below = sum(v < threshold for v in vals)
        mismatches += (abs(ps.mean - mean) > 1e-9 or abs(ps.std - sd) > 1e-9 or ps.min != min(vals)
                       or ps.max != max(vals) or ps.count_below_threshold != below)

        mismatches += metrics.build_histogram(pred, bins).counts.tolist() != _brute_histogram(vals, bins)
    ok = mismatches == 0
    acceptance_log(8, ok, f"{mismatches} mismatches against brute-force metrics on 100 random portfolios")
    assert ok


# 9 -----------------------------------------------------------------------------

def test_determinism(campaigns, tmp_path, acceptance_log):
    again = run_campaign(CampaignConfig(dataset=DATASET, seed=0, out_dir=str(tmp_path / "repeat")))
    ok = again["designs"] == campaigns[0]["designs"]
    acceptance_log(9, ok, f"repeat run with master seed 0 reproduces all {len(again['designs'])} design rows")
    assert ok


# 10 ----------------------------------------------------------------------------

def test_diversity_sanity(campaigns, acceptance_log):
    div = campaigns[0]["diversity"]
    value = div["value"] if div else 0.0
    ok = value > 0 and 249.16 <= value <= 24916
    acceptance_log(10, ok, f"diversity {value:.1f} raw units (within [249.16, 24916]) on the {LABEL}")
    assert ok
