"""Configuration, closed-form theory and Monte Carlo simulation of the walk.

The chain lives on Z_n (n odd).  At every time step it either adds an
increment drawn from a finite step law (probability 1 - p) or multiplies
the current state by a fixed multiplier, 2 by default (probability p).
``X'`` is the same walk run on Z without reduction, and ``Y`` is ``X``
observed right after each jump.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path

import numpy as np
import yaml

from .errors import (
    BadProbabilities,
    ConfigError,
    DegenerateVariance,
    EvenModulus,
    MultiplierNotInvertible,
    NoJumps,
    ReducibleStepSet,
)
from .rng import RngStream, replica_blocks

_PROB_TOL = 1e-12
# |X'| above this switches the batch simulator from int64 to Python ints.
_INT64_SAFE = 1 << 56


def _as_prob(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x.strip()))
    return float(x)


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class StepDistribution:
    """Finite law of the additive increment."""

    values: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        problems = _step_violations(self.values, self.probs)
        if problems:
            raise BadProbabilities(problems)

    @classmethod
    def from_support(cls, support) -> "StepDistribution":
        """Build from ``[(value, prob), ...]`` or a ``{value: prob}`` mapping."""
        items = support.items() if isinstance(support, Mapping) else support
        values, probs = [], []
        for item in items:
            v, q = item
            if int(v) != v:
                raise BadProbabilities([("BadProbabilities", f"step value {v!r} is not an integer")])
            values.append(int(v))
            probs.append(_as_prob(q))
        return cls(tuple(values), tuple(probs))

    @property
    def support(self) -> list[tuple[int, float]]:
        return list(zip(self.values, self.probs))

    @property
    def mean(self) -> float:
        return math.fsum(v * q for v, q in self.support)

    @property
    def variance(self) -> float:
        mu = self.mean
        return math.fsum(q * (v - mu) ** 2 for v, q in self.support)

    @property
    def b(self) -> int:
        """Smallest b >= 0 with the support inside [-2^b, 2^b]."""
        m = max(abs(v) for v in self.values)
        b = 0
        while (1 << b) < m:
            b += 1
        return b

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.values, dtype=np.int64), np.asarray(self.probs, dtype=float)


def _step_violations(values, probs) -> list[tuple[str, str]]:
    out = []
    if len(values) == 0:
        out.append(("BadProbabilities", "step support is empty"))
        return out
    if len(values) != len(probs):
        out.append(("BadProbabilities", "values and probabilities differ in length"))
    if len(set(values)) != len(values):
        out.append(("BadProbabilities", "step support values are not distinct"))
    if any(not (0.0 < q <= 1.0) for q in probs):
        out.append(("BadProbabilities", "step probabilities must lie in (0, 1]"))
    total = math.fsum(probs)
    if abs(total - 1.0) > _PROB_TOL:
        out.append(("BadProbabilities", f"step probabilities sum to {total!r}, not 1"))
    return out


@dataclass(frozen=True)
class WalkConfig:
    """One validated chain instance.

    ``p`` defaults to ``1 / (beta * n**alpha)``.  An explicit ``p`` may be
    anywhere in [0, 1] so that the degenerate controls (pure rotation,
    pure doubling) remain expressible.
    """

    n: int
    step: StepDistribution
    alpha: float = 0.5
    beta: float = 2.0
    p: float | None = None
    multiplier: int = 2
    seed: int = 0
    step_id: str = field(default="", compare=False)

    def __post_init__(self):
        if self.p is None:
            object.__setattr__(self, "p", jump_probability(self.n, self.alpha, self.beta))
        else:
            object.__setattr__(self, "p", float(self.p))
        problems = _config_violations(self)
        if problems:
            raise _error_for(problems)
        if not self.step_id:
            object.__setattr__(self, "step_id", step_law_id(self.step))

    @property
    def mu(self) -> float:
        return self.step.mean

    @property
    def sigma2(self) -> float:
        return self.step.variance

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def with_p(self, p: float) -> "WalkConfig":
        return WalkConfig(self.n, self.step, self.alpha, self.beta, p, self.multiplier, self.seed, self.step_id)


def jump_probability(n: int, alpha: float, beta: float) -> float:
    return 1.0 / (beta * n**alpha)


def step_law_id(step: StepDistribution) -> str:
    parts = []
    for v, q in step.support:
        parts.append(f"{v}" if len(step.values) == 1 else f"{v}:{q:g}")
    return "B{" + ",".join(parts) + "}"


def _config_violations(cfg: WalkConfig) -> list[tuple[str, str]]:
    out = []
    n = cfg.n
    if int(n) != n or n < 3:
        out.append(("EvenModulus" if n % 2 == 0 else "BadModulus", f"n={n} must be an odd integer >= 3"))
    elif n % 2 == 0:
        out.append(("EvenModulus", f"n={n} is even"))
    if cfg.alpha < 0:
        out.append(("BadProbabilities", f"alpha={cfg.alpha} must be >= 0"))
    if not cfg.beta > 0:
        out.append(("BadProbabilities", f"beta={cfg.beta} must be > 0"))
    if not (0.0 <= cfg.p <= 1.0) or math.isnan(cfg.p):
        out.append(("BadProbabilities", f"jump probability p={cfg.p} is outside [0, 1]"))
    g = reduce(math.gcd, (abs(v) for v in cfg.step.values), 0)
    if n >= 1 and math.gcd(n, g) != 1:
        out.append(("ReducibleStepSet", f"gcd(n, gcd(B)) = {math.gcd(n, g)}; steps generate a proper subgroup"))
    if cfg.multiplier < 2:
        out.append(("MultiplierNotInvertible", f"multiplier {cfg.multiplier} must be >= 2"))
    elif n >= 1 and math.gcd(n, cfg.multiplier) != 1:
        out.append(("MultiplierNotInvertible", f"gcd(n, {cfg.multiplier}) != 1"))
    if not 0 <= cfg.seed < (1 << 64):
        out.append(("BadSeed", f"seed {cfg.seed} is not a 64-bit unsigned integer"))
    return out


_ERROR_TYPES = {
    "EvenModulus": EvenModulus,
    "BadProbabilities": BadProbabilities,
    "ReducibleStepSet": ReducibleStepSet,
    "MultiplierNotInvertible": MultiplierNotInvertible,
}


def _error_for(problems) -> ConfigError:
    cls = _ERROR_TYPES.get(problems[0][0], ConfigError)
    return cls(problems)


def validate_config(raw: Mapping) -> WalkConfig:
    """Validate a raw key/value mapping and return a :class:`WalkConfig`.

    Raises a :class:`ConfigError` subclass named after the first failed
    check; ``err.violations`` lists all of them.
    """
    problems = []
    for key in ("n", "step"):
        if key not in raw:
            problems.append(("MissingField", f"missing required field {key!r}"))
    if problems:
        raise ConfigError(problems)
    step_raw = raw["step"]
    support = step_raw.get("support") if isinstance(step_raw, Mapping) else step_raw
    step_id = step_raw.get("id", "") if isinstance(step_raw, Mapping) else ""
    try:
        values = tuple(int(v) for v, _ in support)
        probs = tuple(_as_prob(q) for _, q in support)
    except (TypeError, ValueError) as exc:
        raise BadProbabilities([("BadProbabilities", f"malformed step.support: {exc}")]) from None
    problems = _step_violations(values, probs)
    if problems:
        raise BadProbabilities(problems)
    step = StepDistribution(values, probs)
    p = raw.get("p")
    return WalkConfig(
        n=int(raw["n"]),
        step=step,
        alpha=float(raw.get("alpha", 0.5)),
        beta=float(raw.get("beta", 2.0)),
        p=None if p is None else _as_prob(p),
        multiplier=int(raw.get("multiplier", 2)),
        seed=int(raw.get("seed", 0)),
        step_id=str(step_id),
    )


def load_config(path: str | Path) -> WalkConfig:
    """Read a single-chain YAML/JSON config file."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, Mapping):
        raise ConfigError([("MalformedFile", f"{path} does not hold a mapping")])
    return validate_config(raw)


def config_to_dict(cfg: WalkConfig) -> dict:
    return {
        "n": cfg.n,
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "p": cfg.p,
        "multiplier": cfg.multiplier,
        "seed": cfg.seed,
        "step": {"id": cfg.step_id, "support": [[v, q] for v, q in cfg.step.support]},
    }


def make_config(n: int, support, **kwargs) -> WalkConfig:
    """Shorthand: ``make_config(101, {-1: 0.5, 1: 0.5}, alpha=0.5)``."""
    return WalkConfig(n=n, step=StepDistribution.from_support(support), **kwargs)


# ---------------------------------------------------------------------------
# closed-form quantities


def sigma2_S(cfg: WalkConfig) -> float:
    """Variance of the displacement accumulated between consecutive jumps."""
    p = cfg.p
    if p == 0.0:
        raise NoJumps("p = 0: there are no jump epochs")
    return (1.0 - p) * (cfg.mu**2 + p * cfg.sigma2) / p**2


def mean_S(cfg: WalkConfig) -> float:
    if cfg.p == 0.0:
        raise NoJumps("p = 0: there are no jump epochs")
    return cfg.mu * (1.0 / cfg.p - 1.0)


@dataclass(frozen=True)
class TheoryReport:
    sigma2_S: float
    T_n: float
    T_n_int: int
    T_n_asymptotic: float
    T_n_L: float
    T_n_R: float
    w_n_L: float
    w_n_R: float
    m_n: dict[float, tuple[float, float]]

    def time_left(self, c: float) -> float:
        return self.T_n_L - c * self.w_n_L

    def time_right(self, c: float) -> float:
        return self.T_n_R + c * self.w_n_R

    def as_dict(self) -> dict:
        return {
            "sigma2_S": self.sigma2_S,
            "T_n": self.T_n,
            "T_n_int": self.T_n_int,
            "T_n_asymptotic": self.T_n_asymptotic,
            "T_n_L": self.T_n_L,
            "T_n_R": self.T_n_R,
            "w_n_L": self.w_n_L,
            "w_n_R": self.w_n_R,
            "m_n": {str(c): {"minus": lo, "plus": hi} for c, lo, hi in
                    ((c, *v) for c, v in self.m_n.items())},
        }


def theory_report(cfg: WalkConfig, offsets: Sequence[float] = ()) -> TheoryReport:
    """Cutoff time, pre-cutoff windows and expected jump counts for ``cfg``.

    The X windows are written in terms of the mean inter-jump time 1/p;
    with p = 1/(2 n^alpha) they are the usual (2 ln 2) n^alpha T_n,
    2 n^alpha T_n, 2 n^alpha and 2 n^alpha sqrt(T_n).
    """
    if cfg.p == 0.0:
        raise NoJumps("p = 0: T_n is undefined")
    s2 = sigma2_S(cfg)
    if s2 <= 0.0:
        raise DegenerateVariance(f"sigma^2_S' = {s2}: p = 1 or the step law is the point mass at 0")
    sigma_S = math.sqrt(s2)
    T = math.log2(cfg.n / sigma_S)
    if cfg.mu == 0.0:
        T_asym = math.log2(cfg.n * math.sqrt(cfg.p) / math.sqrt(cfg.sigma2))
    else:
        T_asym = math.log2(cfg.n * cfg.p / abs(cfg.mu))
    inv_p = 1.0 / cfg.p
    T_L = math.log(2.0) * inv_p * T
    T_R = inv_p * T
    w_L = inv_p
    w_R = inv_p * math.sqrt(max(T, 0.0))
    m_n = {float(c): (cfg.p * (T_L - c * w_L), cfg.p * (T_R + c * w_R)) for c in offsets}
    return TheoryReport(s2, T, round_half_up(T), T_asym, T_L, T_R, w_L, w_R, m_n)


# ---------------------------------------------------------------------------
# simulation


def _step_sampler(step: StepDistribution):
    values, probs = step.arrays()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0

    def draw(u):
        return values[np.searchsorted(cdf, u, side="right")]

    return draw


def _draw_moves(cfg: WalkConfig, t_max: int, gen: np.random.Generator):
    jumps = gen.random(t_max) < cfg.p
    incs = _step_sampler(cfg.step)(gen.random(t_max))
    return jumps, incs


def simulate_x(cfg: WalkConfig, t_max: int, stream: RngStream, final_only: bool = False):
    """One path X_0..X_{t_max} on Z_n started at 0 (int64 array)."""
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    jumps, incs = _draw_moves(cfg, t_max, stream.generator())
    n, m = cfg.n, cfg.multiplier
    path = np.empty(t_max + 1, dtype=np.int64)
    x = 0
    path[0] = 0
    for t in range(t_max):
        x = (m * x) % n if jumps[t] else (x + int(incs[t])) % n
        path[t + 1] = x
    return int(path[-1]) if final_only else path


def simulate_x_unreduced(cfg: WalkConfig, t_max: int, stream: RngStream, final_only: bool = False):
    """One path of X' on Z; a list of Python ints (no overflow)."""
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    jumps, incs = _draw_moves(cfg, t_max, stream.generator())
    m = cfg.multiplier
    x = 0
    path = [0]
    for t in range(t_max):
        x = m * x if jumps[t] else x + int(incs[t])
        path.append(x)
    return path[-1] if final_only else path


def _widen(x: np.ndarray) -> np.ndarray:
    if x.dtype != object and x.size and np.abs(x).max() > _INT64_SAFE:
        return x.astype(object)
    return x


def sample_x_final(cfg: WalkConfig, t: int, replicas: int, stream: RngStream,
                   unreduced: bool = False) -> np.ndarray:
    """Independent draws of X_t (or X'_t when ``unreduced``).

    Unreduced draws come back as int64 unless some magnitude outgrows it,
    in which case the array holds Python ints.
    """
    draw_step = _step_sampler(cfg.step)
    n, m, p = cfg.n, cfg.multiplier, cfg.p
    out = []
    for bstream, size in replica_blocks(stream, replicas):
        gen = bstream.generator()
        x = np.zeros(size, dtype=np.int64)
        for _ in range(t):
            jump = gen.random(size) < p
            inc = draw_step(gen.random(size))
            if unreduced:
                x = _widen(x)
                x = np.where(jump, x * m, x + inc)
            else:
                x = np.where(jump, (x * m) % n, (x + inc) % n)
        out.append(x)
    if not out:
        return np.zeros(0, dtype=np.int64)
    if any(a.dtype == object for a in out):
        return np.concatenate([a.astype(object) for a in out])
    return np.concatenate(out)


def _sample_S_block(step: StepDistribution, p: float, size: int, gen: np.random.Generator) -> np.ndarray:
    values, probs = step.arrays()
    nsteps = gen.geometric(p, size) - 1
    if len(values) == 1:
        return nsteps.astype(np.int64) * values[0]
    counts = gen.multinomial(nsteps, probs)
    return counts @ values


def sample_S(cfg: WalkConfig, replicas: int, stream: RngStream) -> np.ndarray:
    """Draws of S'_1: the sum of the Geometric(p) - 1 steps before a jump."""
    if cfg.p == 0.0:
        raise NoJumps("p = 0: S' is infinite")
    parts = [_sample_S_block(cfg.step, cfg.p, size, bs.generator())
             for bs, size in replica_blocks(stream, replicas)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def sample_y(cfg: WalkConfig, k: int, replicas: int, stream: RngStream,
             method: str = "geometric", unreduced: bool = False) -> np.ndarray:
    """Independent draws of Y_k, the state right after the k-th jump.

    ``method="direct"`` runs X step by step until the k-th jump;
    ``method="geometric"`` samples the k inter-jump displacements directly
    and applies Y'_j = multiplier * (Y'_{j-1} + S'_j).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > 0 and cfg.p == 0.0:
        raise NoJumps("p = 0: the chain never jumps")
    n, m = cfg.n, cfg.multiplier
    out = []
    for bstream, size in replica_blocks(stream, replicas):
        gen = bstream.generator()
        if method == "geometric":
            y = np.zeros(size, dtype=np.int64)
            for _ in range(k):
                s = _sample_S_block(cfg.step, cfg.p, size, gen)
                if unreduced:
                    y = _widen(y)
                    y = m * (y + s)
                else:
                    y = (m * ((y + s) % n)) % n
        elif method == "direct":
            y = _direct_y_block(cfg, k, size, gen, unreduced)
        else:
            raise ValueError(f"unknown method {method!r}")
        out.append(y)
    if not out:
        return np.zeros(0, dtype=np.int64)
    if any(a.dtype == object for a in out):
        return np.concatenate([a.astype(object) for a in out])
    return np.concatenate(out)


def _direct_y_block(cfg, k, size, gen, unreduced):
    draw_step = _step_sampler(cfg.step)
    n, m, p = cfg.n, cfg.multiplier, cfg.p
    x = np.zeros(size, dtype=np.int64)
    jumps_left = np.full(size, k, dtype=np.int64)
    while True:
        live = jumps_left > 0
        if not live.any():
            return x
        jump = (gen.random(size) < p) & live
        inc = np.where(live & ~jump, draw_step(gen.random(size)), 0)
        if unreduced:
            x = _widen(x)
            x = np.where(jump, x * m, x + inc)
        else:
            x = np.where(jump, (x * m) % n, (x + inc) % n)
        jumps_left = jumps_left - jump


def simulate_y(cfg: WalkConfig, k: int, stream: RngStream, method: str = "direct") -> int:
    """A single draw of Y_k."""
    return int(sample_y(cfg, k, 1, stream, method=method)[0])
