"""Acceptance criteria, one test each; the terminal summary prints a PASS/FAIL line per criterion."""

import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

import cutoff_lab.experiments as ex
import cutoff_lab.spectral_bounds as sb
from cutoff_lab.cli import main
from cutoff_lab.exact_engine import (
    brute_force_x_distribution,
    evolve_x_distribution,
    iter_y_distributions,
    s_distribution,
    tv_curve,
    tv_to_uniform,
    y_distribution,
)
from cutoff_lab.rng import RngStream
from cutoff_lab.walk_core import make_config, sample_S, sample_x_final, sigma2_S, theory_report

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
PM1 = {-1: 0.5, 1: 0.5}
LAWS = [{1: 1.0}, PM1, {-1: 0.2, 0: 0.3, 2: 0.5}]


def test_01_oracle_equivalence(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for n, law, p in itertools.product(range(3, 16, 2), LAWS, (0.1, 0.5, 0.9)):
        cfg = make_config(n, law, p=p)
        for t in range(0, 9):
            a = evolve_x_distribution(cfg, t).probs
            b = brute_force_x_distribution(cfg, t).probs
            worst = max(worst, float(np.abs(a - b).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 10
    acceptance(1, "oracle equivalence", ok, f"max err {worst:.2e}, {dt:.1f}s (limit 1e-12, 10s)")
    assert ok


def test_02_fourier_equivalence(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for n, law in itertools.product((5, 101, 301), LAWS):
        cfg = make_config(n, law, alpha=0.5)
        s = s_distribution(cfg)
        for k in range(0, 11):
            a = sb.fourier_y_distribution(cfg, k).probs
            worst = max(worst, float(np.abs(a - y_distribution(cfg, k, s).probs).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 30
    acceptance(2, "Fourier equivalence", ok, f"max err {worst:.2e}, {dt:.1f}s (limit 1e-10, 30s)")
    assert ok


def test_03_closed_forms(acceptance):
    cfg = make_config(5, {1: 1}, p=0.5)
    err = float(np.abs(s_distribution(cfg).probs - np.array([16, 8, 4, 2, 1]) / 31).max())
    var = sigma2_S(cfg)
    draws = sample_S(cfg, 10**6, RngStream(2024)).astype(float)
    v = draws.var()
    se = math.sqrt((np.mean((draws - draws.mean()) ** 4) - v * v) / draws.size)
    ok = err <= 1e-12 and abs(var - 2.0) < 1e-12 and abs(v - var) <= 3 * se
    acceptance(3, "closed forms", ok,
               f"S law err {err:.1e}; sigma2={var!r}; MC var {v:.4f} ({abs(v - var) / se:.2f} SE)")
    assert ok


def test_04_sandwich(acceptance):
    t0 = time.perf_counter()
    spec = ex.load_spec(CONFIGS / "sandwich.yaml")
    assert spec.n == [101, 301, 1001] and spec.alpha == [0.5, 0.75] and spec.k_extra == 8
    rows = ex.cmd_sandwich(spec)
    bad = [r for r in rows if not (r["tv_lower"] <= r["tv_exact"] + 1e-9 <= r["tv_upper"] + 2e-9)]
    dt = time.perf_counter() - t0
    ok = not bad and len(rows) > 0 and dt < 300
    acceptance(4, "sandwich ordering", ok, f"{len(rows)} rows, {len(bad)} violations, {dt:.1f}s")
    assert ok


def test_05_cutoff_shape(acceptance):
    cfg = make_config(10001, PM1, alpha=0.5)
    K = math.ceil(theory_report(cfg).T_n)
    s = s_distribution(cfg)
    tv = [tv_to_uniform(d) for d in iter_y_distributions(cfg, K + 11, s)]
    ub = sb.fourier_upper_bound_curve(cfg, K + 10)
    ratios = {c: float(ub[K + c - 1] / ub[K + c - 2]) for c in range(4, 11)}
    coth = {c: sb.coth_asymptote(c + 1, 2, 1) / sb.coth_asymptote(c, 2, 1) for c in range(4, 11)}
    before, after = tv[K - 4], tv[K + 8]
    ok_before, ok_after = before >= 0.9, after <= 0.1
    ok_ratio = all(0.35 <= q <= 0.65 for q in ratios.values())
    ok = ok_before and ok_after and ok_ratio
    acceptance(5, "cutoff shape at n=10001", ok,
               f"TV(Y_K-4)={before:.4f} (>=0.9), TV(Y_K+8)={after:.2e} (<=0.1), "
               f"upper ratios {[round(q, 3) for q in ratios.values()]} (need [0.35,0.65]); "
               f"coth comparator ratios {[round(q, 3) for q in coth.values()]}")
    assert ok


@pytest.fixture(scope="module")
def x_profiles():
    out = {}
    for n in (101, 501, 1001):
        cfg = make_config(n, PM1, alpha=0.5)
        th = theory_report(cfg)
        t_hi = math.ceil(th.time_right(10.0))
        t0 = time.perf_counter()
        prof = tv_curve(cfg, range(0, t_hi + 1), "X", check_monotone=False)
        out[n] = (cfg, th, prof, time.perf_counter() - t0)
    return out


def test_06_precutoff_bracket(acceptance, x_profiles):
    lines, ok = [], True
    total = 0.0
    for n, (cfg, th, prof, dt) in x_profiles.items():
        total += dt
        ratio = prof.mixing_times[0.25] / (n**0.5 * th.T_n)
        t_left = max(0, round(th.time_left(4.0)))  # clamps to 0 when the window overshoots
        t_right = round(th.time_right(10.0))
        tv_l, tv_r = prof.tv[t_left], prof.tv[t_right]
        good = 2 * math.log(2) - 0.5 <= ratio <= 2.5 and tv_l >= 0.5 and tv_r <= 0.25
        ok &= good
        lines.append(f"n={n}: ratio {ratio:.3f}, TV(left) {tv_l:.3f}, TV(right) {tv_r:.3f}")
    ok &= total < 900
    acceptance(6, "pre-cutoff bracket", ok, "; ".join(lines) + f"; {total:.1f}s")
    assert ok


def test_07_x_prime_scaling(acceptance):
    cfg = make_config(10001, PM1, alpha=0.5)
    th = theory_report(cfg)
    vals = {}
    for c in (2, 4, 6):
        t = round(th.time_left(c))
        x = sample_x_final(cfg, t, 10**4, RngStream(77, c), unreduced=True)
        vals[c] = float(np.mean(np.abs(x.astype(float)))) / (cfg.n * math.exp(-c))
    spread = max(vals.values()) / min(vals.values())
    ok = spread < 2
    acceptance(7, "e^-c scaling of E|X'|", ok,
               f"normalized {[round(v, 3) for v in vals.values()]}, spread {spread:.2f} (<2)")
    assert ok


def test_08_drift_contrast(acceptance):
    spec = ex.load_spec(CONFIGS / "drift.yaml")
    _, summary = ex.cmd_drift_contrast(spec)
    s = summary[0.5]
    ok = s["n_max"] == 10001 and s["ratio_mu1"] < s["ratio_mu0"] and s["separation"] >= 0.15
    acceptance(8, "drift contrast", ok,
               f"mu=0 {s['ratio_mu0']:.3f}, mu=1 {s['ratio_mu1']:.3f}, separation {s['separation']:.3f} (>=0.15)")
    assert ok


def test_09_monotonicity(acceptance, x_profiles):
    worst = -math.inf
    for cfg, _, prof, _ in x_profiles.values():
        worst = max(worst, float(np.max(np.diff(prof.tv))))
    spec = ex.load_spec(CONFIGS / "profile.yaml")
    for cfg in spec.configs():
        t_hi = math.ceil(theory_report(cfg).time_right(10.0))
        tv_curve(cfg, range(0, t_hi + 1, 7), "X", check_monotone=True)
    ok = worst <= 1e-12
    acceptance(9, "TV(X_t) non-increasing", ok, f"largest increment {worst:.2e} (slack 1e-12)")
    assert ok


def test_10_coth_identity(acceptance):
    errs = {}
    for x in (0.1, 1.0, 10.0):
        val, _ = sb.coth_series(x, 10**6)
        errs[x] = abs(val - 1 / math.tanh(x))
    r = sb.coth_asymptote(30, 2, 0) / sb.coth_asymptote_leading(30, 2, 0)
    ok = max(errs.values()) <= 1e-6 and abs(r - 1) <= 1e-3
    acceptance(10, "coth identity", ok, f"series err {max(errs.values()):.1e}; asymptote ratio at c=30 {r:.8f}")
    assert ok


def test_11_determinism(acceptance, tmp_path):
    runs = [("profile", "profile.yaml"), ("sandwich", "sandwich.yaml"),
            ("jump-count", "jump_count.yaml"), ("drift-contrast", "drift.yaml")]
    mismatches = []
    for cmd, cfg_file in runs:
        blobs = []
        for threads in (1, 4):
            d = tmp_path / f"{cmd}-{threads}"
            assert main([cmd, "--config", str(CONFIGS / cfg_file), "--threads", str(threads), "--out", str(d)]) == 0
            blobs.append(sorted((p.name, p.read_bytes()) for p in d.iterdir()))
        if blobs[0] != blobs[1]:
            mismatches.append(cmd)
    ok = not mismatches
    acceptance(11, "thread-count determinism", ok,
               f"{len(runs)} experiments compared at 1 and 4 threads, mismatches: {mismatches or 'none'}")
    assert ok
