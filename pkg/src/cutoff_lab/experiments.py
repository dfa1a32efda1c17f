"""Experiment orchestration: sweeps, result rows, CSV/JSON and SVG output."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import time
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy import stats

from .errors import ConfigError, NoJumps, SandwichViolation, WindowTooWide
from .exact_engine import (
    DistVector,
    brute_force_x_distribution,
    evolve_x_distribution,
    iter_x_distributions,
    iter_y_distributions,
    locate_mixing_times,
    s_distribution,
    tv_curve,
    tv_to_uniform,
    y_distribution,
)
from .rng import RngStream, replica_blocks
from .spectral_bounds import (
    fourier_upper_bound_curve,
    fourier_y_distribution,
    plancherel_gap,
    u_n_curve,
    window_radius,
    y_lower_bound,
    y_moments,
)
from .walk_core import (
    StepDistribution,
    WalkConfig,
    mean_S,
    round_half_up,
    sample_S,
    sample_x_final,
    sample_y,
    sigma2_S,
    simulate_x,
    simulate_x_unreduced,
    theory_report,
    validate_config,
)

log = logging.getLogger(__name__)

SCHEMA_HEADER = "# cutoff-lab v1"
RESULT_COLUMNS = [
    "n", "alpha", "beta", "step", "chain", "t", "tv_exact", "tv_upper", "tv_lower",
    "t_mix", "T_n", "T_n_L", "T_n_R", "w_n_L", "w_n_R", "sigma2_S", "seed",
]
# Exact X evolution is used while t_max * n * |B| stays under this.
EXACT_X_UPDATES = 5 * 10**9
SLACK = 1e-9

DEFAULT_STEPS = [
    {"id": "pm1", "support": [[-1, 0.5], [1, 0.5]]},
    {"id": "plus1", "support": [[1, 1.0]]},
]


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    n: list[int] = field(default_factory=lambda: [101])
    alpha: list[float] = field(default_factory=lambda: [0.5])
    beta: list[float] = field(default_factory=lambda: [2.0])
    p: list[float | None] = field(default_factory=lambda: [None])
    multiplier: int = 2
    steps: list[dict] = field(default_factory=lambda: [dict(s) for s in DEFAULT_STEPS])
    chains: list[str] = field(default_factory=lambda: ["X", "Y"])
    times: dict = field(default_factory=dict)
    eps: list[float] = field(default_factory=lambda: [0.25])
    c: list[float] = field(default_factory=lambda: [2.0, 4.0, 6.0])
    k_extra: int = 8
    replicas: int = 10_000
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        problems = []
        if not self.n or any(int(v) % 2 == 0 for v in self.n):
            problems.append(("EvenModulus", f"every n must be odd, got {self.n}"))
        if self.replicas < 1:
            problems.append(("BadReplicas", "replica count must be >= 1"))
        for chain, grid in self.times.items():
            if isinstance(grid, Sequence) and not isinstance(grid, str) and len(grid) == 0:
                problems.append(("EmptyGrid", f"time grid for {chain} is empty"))
        if problems:
            from .walk_core import _error_for

            raise _error_for(problems)

    def configs(self) -> list[WalkConfig]:
        """Validated configs, sorted by sweep key."""
        out = []
        for n, a, b, p, st in itertools.product(self.n, self.alpha, self.beta, self.p, self.steps):
            out.append(validate_config({
                "n": n, "alpha": a, "beta": b, "p": p, "multiplier": self.multiplier,
                "seed": self.seed, "step": st,
            }))
        out.sort(key=lambda c: (c.n, c.alpha, c.beta, c.p, c.step_id))
        return out


def _listify(v):
    if v is None:
        return None
    return list(v) if isinstance(v, (list, tuple)) else [v]


def spec_from_mapping(raw: Mapping, **overrides) -> ExperimentSpec:
    """Accepts both experiment files and single-chain config files."""
    raw = dict(raw)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    kw = {}
    for key in ("n", "alpha", "beta", "eps", "c"):
        if key in raw:
            kw[key] = _listify(raw[key])
    if "p" in raw:
        kw["p"] = _listify(raw["p"])
    if "steps" in raw:
        kw["steps"] = list(raw["steps"])
    elif "step" in raw:
        kw["steps"] = [raw["step"]]
    for key in ("name", "multiplier", "chains", "times", "k_extra", "replicas", "seed", "out"):
        if key in raw:
            kw[key] = raw[key]
    if "chains" in kw:
        kw["chains"] = _listify(kw["chains"])
    unknown = set(raw) - {"n", "alpha", "beta", "p", "eps", "c", "steps", "step", "name",
                          "multiplier", "chains", "times", "k_extra", "replicas", "seed", "out"}
    if unknown:
        raise ConfigError([("UnknownField", f"unknown fields {sorted(unknown)}")])
    return ExperimentSpec(**kw)


def load_spec(path: str | Path | None, **overrides) -> ExperimentSpec:
    if path is None:
        return spec_from_mapping({}, **overrides)
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, Mapping):
        raise ConfigError([("MalformedFile", f"{path} does not hold a mapping")])
    return spec_from_mapping(raw, **overrides)


# ---------------------------------------------------------------------------
# rows and grids


def base_row(cfg: WalkConfig, chain: str, t, seed: int) -> dict:
    row = dict.fromkeys(RESULT_COLUMNS)
    row.update(n=cfg.n, alpha=cfg.alpha, beta=cfg.beta, step=cfg.step_id, chain=chain, t=t, seed=seed)
    try:
        th = theory_report(cfg)
    except (NoJumps, ArithmeticError):
        return row
    row.update(T_n=th.T_n, T_n_L=th.T_n_L, T_n_R=th.T_n_R, w_n_L=th.w_n_L, w_n_R=th.w_n_R,
               sigma2_S=th.sigma2_S)
    return row


def resolve_grid(grid, cfg: WalkConfig, chain: str) -> list[int]:
    """Turn a grid description into sorted, non-negative integer times."""
    if grid is None:
        th = theory_report(cfg)
        if chain == "Y":
            return list(range(0, math.ceil(th.T_n) + 11))
        return list(range(0, math.ceil(th.time_right(10.0)) + 1))
    if isinstance(grid, Mapping):
        if "offsets" in grid:
            th = theory_report(cfg)
            anchor_name = grid.get("around", "T_n" if chain == "Y" else "T_n_R")
            anchor = {"T_n": th.T_n, "T_n_L": th.T_n_L, "T_n_R": th.T_n_R}[anchor_name]
            base = math.ceil(anchor) if anchor_name == "T_n" else round_half_up(anchor)
            times = [base + int(o) for o in grid["offsets"]]
        else:
            times = list(range(int(grid.get("start", 0)), int(grid["stop"]) + 1, int(grid.get("step", 1))))
    else:
        times = [int(t) for t in grid]
    times = sorted({t for t in times if t >= 0})
    if not times:
        raise ConfigError([("EmptyGrid", f"time grid for {chain} is empty after resolution")])
    return times


def run_jobs(fn: Callable, jobs: Sequence, threads: int = 1) -> list:
    """Map preserving input order, so output never depends on scheduling."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))


def _stream(spec: ExperimentSpec, idx: int) -> RngStream:
    return RngStream(spec.seed, idx)


# ---------------------------------------------------------------------------
# Monte Carlo fallback


def mc_tv_curve(cfg: WalkConfig, times: Sequence[int], replicas: int, stream: RngStream) -> list[float]:
    """Plug-in TV of the empirical law of X_t; biased upward by sampling noise."""
    times = sorted(times)
    wanted = set(times)
    hist = {t: np.zeros(cfg.n) for t in times}
    values, probs = cfg.step.arrays()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    n, m, p = cfg.n, cfg.multiplier, cfg.p
    for bstream, size in replica_blocks(stream, replicas):
        gen = bstream.generator()
        x = np.zeros(size, dtype=np.int64)
        if 0 in wanted:
            hist[0] += np.bincount(x, minlength=n)
        for t in range(1, times[-1] + 1):
            jump = gen.random(size) < p
            inc = values[np.searchsorted(cdf, gen.random(size), side="right")]
            x = np.where(jump, (x * m) % n, (x + inc) % n)
            if t in wanted:
                hist[t] += np.bincount(x, minlength=n)
    return [tv_to_uniform(DistVector(hist[t] / replicas)) for t in times]


# ---------------------------------------------------------------------------
# profile


def _profile_one(args):
    spec, idx, cfg, chain = args
    times = resolve_grid(spec.times.get(chain), cfg, chain)
    rows = []
    method = "exact"
    if chain == "Y":
        if cfg.p == 0.0:
            raise NoJumps("chain Y is undefined when p = 0 (the walk never jumps)")
        th = theory_report(cfg)
        k_max = times[-1]
        s = s_distribution(cfg) if cfg.n <= 20001 else s_distribution(cfg, method="fourier")
        dists = {}
        for k, d in enumerate(iter_y_distributions(cfg, k_max, s)):
            if k in times:
                dists[k] = d
        tv = [tv_to_uniform(dists[k]) for k in times]
        upper = fourier_upper_bound_curve(cfg, k_max) if k_max >= 1 else np.zeros(0)
        first, interp = locate_mixing_times(times, tv, spec.eps)
        for k, v in zip(times, tv):
            row = base_row(cfg, "Y", k, spec.seed)
            row["tv_exact"] = v
            row["tv_upper"] = float(upper[k - 1]) if k >= 1 else 1.0
            c = th.T_n - k
            if k >= 1 and window_radius(c) < 0.5:
                row["tv_lower"] = y_lower_bound(cfg, c, d=dists[k]).tv_lower
            row["t_mix"] = first[spec.eps[0]]
            row["method"] = method
            row["t_mix_interp"] = interp[spec.eps[0]]
            rows.append(row)
    else:
        updates = times[-1] * cfg.n * len(cfg.step.values)
        if updates <= EXACT_X_UPDATES:
            prof = tv_curve(cfg, times, "X", eps=spec.eps)
            tv = prof.tv
        else:
            method = "mc"
            log.warning("exact X evolution needs %.3g updates; using Monte Carlo TV (biased upward)", updates)
            tv = mc_tv_curve(cfg, times, spec.replicas, _stream(spec, idx))
        first, interp = locate_mixing_times(times, tv, spec.eps)
        for t, v in zip(times, tv):
            row = base_row(cfg, "X", t, spec.seed)
            row["tv_exact"] = v
            row["t_mix"] = first[spec.eps[0]]
            row["method"] = method
            row["t_mix_interp"] = interp[spec.eps[0]]
            rows.append(row)
    return rows


def cmd_profile(spec: ExperimentSpec, threads: int = 1):
    """Exact TV curves; returns (rows, {svg filename: svg text})."""
    jobs = [(spec, i, cfg, ch) for i, cfg in enumerate(spec.configs()) for ch in spec.chains]
    results = run_jobs(_profile_one, jobs, threads)
    rows = [r for block in results for r in block]
    svgs = {}
    for (_, _, cfg, ch), block in zip(jobs, results):
        svgs[svg_name(cfg, ch)] = render_svg(block)
    return rows, svgs


def svg_name(cfg: WalkConfig, chain: str) -> str:
    safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in cfg.step_id)
    return f"profile_n{cfg.n}_a{cfg.alpha:g}_b{cfg.beta:g}_{safe}_{chain}.svg"


# ---------------------------------------------------------------------------
# sandwich


def _sandwich_one(args):
    spec, idx, cfg = args
    th = theory_report(cfg)
    k_max = math.ceil(th.T_n) + spec.k_extra
    upper = fourier_upper_bound_curve(cfg, k_max)
    raw = np.sqrt(0.25 * u_n_curve(cfg, k_max))
    s = s_distribution(cfg)
    rows = []
    for k, d in enumerate(iter_y_distributions(cfg, k_max, s)):
        if k == 0:
            continue
        row = base_row(cfg, "Y", k, spec.seed)
        c = th.T_n - k
        tv = tv_to_uniform(d)
        row["tv_exact"] = tv
        row["tv_upper"] = float(upper[k - 1])
        gap = None
        if window_radius(c) < 0.5:
            rep = y_lower_bound(cfg, c, d=d)
            row["tv_lower"] = rep.tv_lower
            gap = rep.witness_gap
        else:
            row["tv_lower"] = 0.0
        row["c"] = c
        row["witness_gap"] = gap
        row["upper_raw"] = float(raw[k - 1])
        row["upper_ratio"] = float(upper[k - 1] / upper[k - 2]) if k >= 2 and upper[k - 2] > 0 else None
        lo_ok = row["tv_lower"] <= tv + SLACK and (gap is None or gap <= tv + SLACK)
        if not (lo_ok and tv <= row["tv_upper"] + SLACK):
            raise SandwichViolation(
                f"n={cfg.n} step={cfg.step_id} k={k}: lower={row['tv_lower']!r} "
                f"exact={tv!r} upper={row['tv_upper']!r}")
        rows.append(row)
    return rows


def cmd_sandwich(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    jobs = [(spec, i, cfg) for i, cfg in enumerate(spec.configs())]
    return [r for block in run_jobs(_sandwich_one, jobs, threads) for r in block]


# ---------------------------------------------------------------------------
# jump count


def sample_kth_jump_time(cfg: WalkConfig, k: int, replicas: int, stream: RngStream) -> np.ndarray:
    """Draws of tau_k as a sum of k Geometric(p) inter-jump times."""
    out = []
    for bstream, size in replica_blocks(stream, replicas):
        gen = bstream.generator()
        out.append(gen.geometric(cfg.p, (size, k)).sum(axis=1))
    return np.concatenate(out)


def jump_tail(cfg: WalkConfig, t: int, k: int) -> float:
    """P(fewer than k jumps by time t) = P(Binomial(t, p) <= k - 1)."""
    return float(stats.binom.cdf(k - 1, t, cfg.p))


def _jump_one(args):
    spec, idx, cfg = args
    th = theory_report(cfg)
    k_top = math.ceil(th.T_n + max(spec.c))
    s = s_distribution(cfg)
    tv_y = [tv_to_uniform(d) for d in iter_y_distributions(cfg, k_top, s)]
    plan = []
    for c in spec.c:
        plan.append((c, round_half_up(th.time_right(c)), math.ceil(th.T_n + c)))
    t_top = max(t for _, t, _ in plan)
    tv_x = {}
    if t_top * cfg.n * len(cfg.step.values) <= EXACT_X_UPDATES:
        wanted = {t for _, t, _ in plan}
        for t, d in enumerate(iter_x_distributions(cfg, t_top)):
            if t in wanted:
                tv_x[t] = tv_to_uniform(d)
    rows = []
    stream = _stream(spec, idx)
    for j, (c, t, K) in enumerate(plan):
        tail = jump_tail(cfg, t, K)
        taus = sample_kth_jump_time(cfg, K, spec.replicas, stream.substream(j))
        mc = float(np.mean(taus > t))
        se = math.sqrt(max(mc * (1.0 - mc), 1e-300) / spec.replicas)
        row = base_row(cfg, "X", t, spec.seed)
        row["tv_exact"] = tv_x.get(t)
        row["tv_upper"] = tv_y[K] + tail
        row.update(c=c, K=K, tv_y=tv_y[K], tail_exact=tail, tail_mc=mc, tail_mc_se=se,
                   tail_poisson=float(stats.poisson.cdf(K - 1, t * cfg.p)),
                   chebyshev_limit=1.0 / c**2 if c else None)
        row["holds"] = None if row["tv_exact"] is None else bool(row["tv_exact"] <= row["tv_upper"] + SLACK)
        rows.append(row)
    return rows


def cmd_jump_count(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    jobs = [(spec, i, cfg) for i, cfg in enumerate(spec.configs())]
    return [r for block in run_jobs(_jump_one, jobs, threads) for r in block]


# ---------------------------------------------------------------------------
# drift contrast


def y_mixing_time(cfg: WalkConfig, eps: float = 0.25, k_cap: int = 200) -> tuple[int, float]:
    s = s_distribution(cfg) if cfg.n <= 20001 else s_distribution(cfg, method="fourier")
    for k, d in enumerate(iter_y_distributions(cfg, k_cap, s)):
        v = tv_to_uniform(d)
        if v <= eps:
            return k, v
    raise RuntimeError(f"Y did not mix to {eps} within {k_cap} jumps")


def _drift_one(args):
    spec, idx, cfg = args
    eps = spec.eps[0]
    k, v = y_mixing_time(cfg, eps)
    row = base_row(cfg, "Y", k, spec.seed)
    row["tv_exact"] = v
    row["t_mix"] = k
    row["mu"] = cfg.mu
    row["ratio"] = k / math.log2(cfg.n)
    row["target"] = (1.0 - cfg.alpha / 2.0) if cfg.mu == 0.0 else (1.0 - cfg.alpha)
    return [row]


def cmd_drift_contrast(spec: ExperimentSpec, threads: int = 1):
    """Rows per (n, law) plus a summary of the two ratio series."""
    jobs = [(spec, i, cfg) for i, cfg in enumerate(spec.configs())]
    rows = [r for block in run_jobs(_drift_one, jobs, threads) for r in block]
    summary = {}
    for a in sorted({r["alpha"] for r in rows}):
        sub = [r for r in rows if r["alpha"] == a]
        n_top = max(r["n"] for r in sub)
        zero = [r for r in sub if r["mu"] == 0.0]
        drift = [r for r in sub if r["mu"] != 0.0]
        top0 = [r["ratio"] for r in zero if r["n"] == n_top]
        top1 = [r["ratio"] for r in drift if r["n"] == n_top]
        summary[a] = {
            "n_max": n_top,
            "ratio_mu0": top0[0] if top0 else None,
            "ratio_mu1": top1[0] if top1 else None,
            "separation": (top0[0] - top1[0]) if top0 and top1 else None,
            "drift_mixes_first": (top1[0] <= top0[0]) if top0 and top1 else None,
        }
    return rows, summary


# ---------------------------------------------------------------------------
# validate


def _check(name, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # surfaced as a failed check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return {"check": name, "passed": bool(ok), "detail": detail, "seconds": round(time.perf_counter() - t0, 3)}


def _small_laws():
    return [
        StepDistribution.from_support({1: 1.0}),
        StepDistribution.from_support({-1: 0.5, 1: 0.5}),
        StepDistribution.from_support({0: 0.2, 1: 0.5, 2: 0.3}),
    ]


def validation_checks(spec: ExperimentSpec | None = None) -> list[tuple[str, Callable]]:
    seed = spec.seed if spec else 0
    laws = _small_laws()

    def oracle():
        worst = 0.0
        for n in (3, 5, 7, 9, 11, 13, 15):
            for st in laws:
                for p in (0.1, 0.5, 0.9):
                    cfg = WalkConfig(n, st, p=p)
                    for t in range(0, 7):
                        a = evolve_x_distribution(cfg, t).probs
                        b = brute_force_x_distribution(cfg, t).probs
                        worst = max(worst, float(np.abs(a - b).max()))
        return worst <= 1e-12, f"max |evolve - brute| = {worst:.3g}"

    def fourier():
        worst = 0.0
        for n in (5, 101, 301):
            for st in laws[:2]:
                cfg = WalkConfig(n, st, alpha=0.5)
                s = s_distribution(cfg)
                for k, d in enumerate(iter_y_distributions(cfg, 10, s)):
                    worst = max(worst, float(np.abs(d.probs - fourier_y_distribution(cfg, k).probs).max()))
        return worst <= 1e-10, f"max |conv - fourier| = {worst:.3g}"

    def plancherel():
        worst = 0.0
        for n in (101, 301):
            cfg = WalkConfig(n, laws[1], alpha=0.5)
            for k in (1, 3, 6, 9):
                lhs, rhs = plancherel_gap(cfg, k)
                worst = max(worst, abs(lhs - rhs))
        return worst <= 1e-8, f"max Plancherel gap = {worst:.3g}"

    def coupling():
        cfg = WalkConfig(101, laws[2], alpha=0.5, seed=seed)
        for sid in range(5):
            st = RngStream(seed, sid)
            red = simulate_x(cfg, 500, st)
            unr = simulate_x_unreduced(cfg, 500, st)
            if any(int(r) != u % cfg.n for r, u in zip(red, unr)):
                return False, f"stream {sid}: reduced path differs from X' mod n"
        return True, "X == X' mod n on 5 streams x 500 steps"

    def moments():
        cfg = WalkConfig(101, laws[2], alpha=0.5, seed=seed)
        x = sample_S(cfg, 200_000, RngStream(seed, 99)).astype(float)
        m, v = x.mean(), x.var()
        se_m = math.sqrt(v / x.size)
        m4 = np.mean((x - m) ** 4)
        se_v = math.sqrt((m4 - v * v) / x.size)
        zm = abs(m - mean_S(cfg)) / se_m
        zv = abs(v - sigma2_S(cfg)) / se_v
        return zm < 4 and zv < 4, f"z(mean) = {zm:.2f}, z(var) = {zv:.2f}"

    def sandwich():
        sub = ExperimentSpec(n=[101, 301], alpha=[0.5, 0.75], seed=seed)
        rows = cmd_sandwich(sub)
        return True, f"{len(rows)} (config, k) points ordered"

    def monotone():
        for st in laws[:2]:
            cfg = WalkConfig(101, st, alpha=0.5)
            tv_curve(cfg, range(0, 1200), "X")
        return True, "TV(X_t) non-increasing for t < 1200"

    return [
        ("oracle_equivalence", oracle),
        ("fourier_equivalence", fourier),
        ("plancherel", plancherel),
        ("coupling", coupling),
        ("moments", moments),
        ("sandwich", sandwich),
        ("monotonicity", monotone),
    ]


def cmd_validate(spec: ExperimentSpec | None = None) -> list[dict]:
    if spec is not None:
        spec.configs()  # configuration errors propagate
    return [_check(name, fn) for name, fn in validation_checks(spec)]


def cmd_theory(spec: ExperimentSpec) -> list[dict]:
    rows = []
    for cfg in spec.configs():
        th = theory_report(cfg, spec.c)
        row = {"n": cfg.n, "alpha": cfg.alpha, "beta": cfg.beta, "p": cfg.p, "step": cfg.step_id,
               "mu": cfg.mu, "sigma2": cfg.sigma2}
        for key, val in th.as_dict().items():
            if key != "m_n":
                row[key] = val
        for c, (lo, hi) in th.m_n.items():
            row[f"m_n(-{c:g})"] = lo
            row[f"m_n(+{c:g})"] = hi
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# serialization


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def row_columns(rows: Sequence[Mapping]) -> list[str]:
    """ResultRow columns first for result rows, then extras in first-seen order."""
    cols = list(RESULT_COLUMNS) if rows and all(c in rows[0] for c in RESULT_COLUMNS) else []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    return cols


def rows_to_csv(rows: Sequence[Mapping]) -> str:
    cols = row_columns(rows)
    buf = io.StringIO()
    buf.write(SCHEMA_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def _parse(v: str):
    if v == "":
        return None
    if v in ("true", "false"):
        return v == "true"
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def csv_to_rows(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [{k: _parse(v) for k, v in r.items()} for r in reader]


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def rows_to_json(rows: Sequence[Mapping], extra: Mapping | None = None) -> str:
    doc = {"schema": "cutoff-lab v1", "rows": [{k: _jsonable(v) for k, v in r.items()} for r in rows]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=False, default=_jsonable) + "\n"


# ---------------------------------------------------------------------------
# SVG


def render_svg(rows: Sequence[Mapping], width: int = 640, height: int = 400) -> str:
    """Static line plot of tv_exact (and bounds, when present) against t."""
    rows = [r for r in rows if r.get("tv_exact") is not None]
    if not rows:
        return '<svg xmlns="http://www.w3.org/2000/svg" width="10" height="10"/>\n'
    first = rows[0]
    chain = first["chain"]
    ml, mr, mt, mb = 60, 20, 30, 45
    ts = [float(r["t"]) for r in rows]
    t0, t1 = min(ts), max(ts)
    if t1 == t0:
        t1 = t0 + 1.0

    def X(t):
        return ml + (float(t) - t0) / (t1 - t0) * (width - ml - mr)

    def Y(v):
        return mt + (1.0 - float(v)) * (height - mt - mb)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{ml}" y1="{Y(0):.2f}" x2="{width - mr}" y2="{Y(0):.2f}" stroke="black"/>',
           f'<line x1="{ml}" y1="{Y(0):.2f}" x2="{ml}" y2="{Y(1):.2f}" stroke="black"/>']
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<text x="{ml - 8}" y="{Y(v) + 4:.2f}" font-size="11" text-anchor="end">{v:g}</text>')
    for t in (t0, (t0 + t1) / 2, t1):
        out.append(f'<text x="{X(t):.2f}" y="{height - mb + 16}" font-size="11" text-anchor="middle">{t:g}</text>')
    xlabel = "k (jumps)" if chain == "Y" else "t (steps)"
    out.append(f'<text x="{(ml + width - mr) / 2:.2f}" y="{height - 8}" font-size="12" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{(mt + height - mb) / 2:.2f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {(mt + height - mb) / 2:.2f})">TV to uniform</text>')
    title = f"n={first['n']} alpha={first['alpha']} beta={first['beta']} {first['step']} chain {chain}"
    out.append(f'<text x="{width / 2:.2f}" y="18" font-size="13" text-anchor="middle">{title}</text>')
    marks = [("T_n", first.get("T_n"))] if chain == "Y" else [("T_n^L", first.get("T_n_L")), ("T_n^R", first.get("T_n_R"))]
    for label, val in marks:
        if val is not None and t0 <= float(val) <= t1:
            out.append(f'<line x1="{X(val):.2f}" y1="{Y(1):.2f}" x2="{X(val):.2f}" y2="{Y(0):.2f}" '
                       f'stroke="gray" stroke-dasharray="4 3"/>')
            out.append(f'<text x="{X(val) + 3:.2f}" y="{Y(1) + 12:.2f}" font-size="11">{label}</text>')
    for key, color in (("tv_exact", "black"), ("tv_upper", "crimson"), ("tv_lower", "steelblue")):
        pts = [(X(r["t"]), Y(min(1.0, r[key]))) for r in rows if r.get(key) is not None]
        if len(pts) >= 2:
            d = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_from_csv(text: str) -> dict[tuple, str]:
    """Re-render one SVG per (config, chain) from profile CSV text."""
    rows = csv_to_rows(text)
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r["n"], r["alpha"], r["beta"], r["step"], r["chain"]), []).append(r)
    return {key: render_svg(block) for key, block in groups.items()}
