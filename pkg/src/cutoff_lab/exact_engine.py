"""Exact evolution of probability vectors on Z_n.

Everything here is deterministic: no random numbers are drawn.  The
brute-force enumerator at the bottom deliberately shares no code with the
kernel-based evolution so that it can serve as an oracle.
"""

from __future__ import annotations

import io
import itertools
import math
import struct
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleExact, MonotonicityViolation, MultiplierNotInvertible, NoJumps, TooLarge
from .walk_core import StepDistribution, WalkConfig

_NEG_CLAMP = 1e-15
_FFT_NEG_TOL = 1e-12
MAGIC = b"CLDV\x01\x00\x00\x00"
# Upper bound on geometric-series terms in s_distribution before refusing.
MAX_SERIES_TERMS = 2_000_000


@dataclass
class DistVector:
    probs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.probs, dtype=float)
        if a.ndim != 1:
            raise ValueError("DistVector needs a 1-d array")
        if a.size and a.min() < -_NEG_CLAMP:
            raise ValueError(f"negative probability {a.min()!r}")
        self.probs = np.where(a < 0.0, 0.0, a)

    @property
    def n(self) -> int:
        return self.probs.size

    @classmethod
    def point_mass(cls, n: int, at: int = 0) -> "DistVector":
        a = np.zeros(n)
        a[at % n] = 1.0
        return cls(a)

    @classmethod
    def uniform(cls, n: int) -> "DistVector":
        return cls(np.full(n, 1.0 / n))

    def mass(self) -> float:
        return math.fsum(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,prob\n")
        for i, q in enumerate(self.probs):
            buf.write(f"{i},{float(q)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DistVector":
        lines = [ln for ln in text.strip().splitlines() if ln and not ln.startswith("#")]
        if lines and lines[0].replace(" ", "") == "index,prob":
            lines = lines[1:]
        pairs = [ln.split(",") for ln in lines]
        n = len(pairs)
        a = np.zeros(n)
        for i, q in pairs:
            a[int(i)] = float(q)
        return cls(a)

    def to_bytes(self) -> bytes:
        """``MAGIC`` (8 bytes), n as uint64 LE, then n float64 LE."""
        return MAGIC + struct.pack("<Q", self.n) + self.probs.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "DistVector":
        if data[:8] != MAGIC:
            raise ValueError("not a DistVector blob (bad magic)")
        (n,) = struct.unpack("<Q", data[8:16])
        body = data[16:]
        if len(body) != 8 * n:
            raise ValueError(f"expected {8 * n} payload bytes, got {len(body)}")
        return cls(np.frombuffer(body, dtype="<f8").astype(float))


def step_convolve(d: DistVector, step: StepDistribution) -> DistVector:
    """Law of ``X + xi mod n`` for X ~ d."""
    out = np.zeros(d.n)
    for a, q in step.support:
        out += q * np.roll(d.probs, a)
    return DistVector(out)


def _perm(n: int, m: int) -> np.ndarray:
    if math.gcd(n, m) != 1:
        raise MultiplierNotInvertible([("MultiplierNotInvertible", f"gcd({n}, {m}) != 1")])
    return (m * np.arange(n, dtype=np.int64)) % n


def doubling_pushforward(d: DistVector, multiplier: int = 2) -> DistVector:
    """Law of ``multiplier * X mod n``; a permutation of the entries."""
    out = np.empty(d.n)
    out[_perm(d.n, multiplier)] = d.probs
    return DistVector(out)


def circular_convolve(a: DistVector, b: DistVector) -> DistVector:
    """Law of ``U + V mod n`` for independent U ~ a, V ~ b."""
    n = a.n
    if n <= 128:
        out = np.zeros(n)
        for i in np.flatnonzero(a.probs):
            out += a.probs[i] * np.roll(b.probs, i)
        return DistVector(out)
    out = np.fft.irfft(np.fft.rfft(a.probs) * np.fft.rfft(b.probs), n)
    if out.min() < -_FFT_NEG_TOL:
        raise ArithmeticError(f"FFT convolution produced {out.min()!r}")
    return DistVector(np.where(out < 0.0, 0.0, out))


def iter_x_distributions(cfg: WalkConfig, t_max: int) -> Iterator[DistVector]:
    """Yield u_0, u_1, ..., u_{t_max}."""
    n, p = cfg.n, cfg.p
    perm = _perm(n, cfg.multiplier)
    support = cfg.step.support
    u = np.zeros(n)
    u[0] = 1.0
    yield DistVector(u.copy())
    for _ in range(t_max):
        stepped = np.zeros(n)
        for a, q in support:
            stepped += q * np.roll(u, a)
        jumped = np.empty(n)
        jumped[perm] = u
        u = (1.0 - p) * stepped + p * jumped
        yield DistVector(u.copy())


def evolve_x_distribution(cfg: WalkConfig, t: int) -> DistVector:
    """Exact law of X_t, at cost O(t * n * |B|)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    for d in iter_x_distributions(cfg, t):
        pass
    return d


def series_terms(p: float, tol: float) -> int:
    """Number of geometric-series terms kept by :func:`s_distribution`."""
    if p >= 1.0:
        return 1
    return max(1, math.ceil(math.log(tol) / math.log1p(-p)))


def s_distribution(cfg: WalkConfig, tol: float = 1e-12, method: str = "series") -> DistVector:
    """Law of S_1 = S'_1 mod n.

    ``series`` sums p * sum_m (1-p)^m * (step law)^{*m} until the dropped
    tail (1-p)^{m+1} falls below ``tol`` and renormalizes; its cost grows
    like n^alpha.  ``fourier`` inverts the closed-form transform instead.
    """
    if not 0.0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    p = cfg.p
    if p == 0.0:
        raise NoJumps("p = 0: S' is infinite")
    if method == "fourier":
        from .spectral_bounds import fourier_s_distribution

        return fourier_s_distribution(cfg)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    n_terms = series_terms(p, tol)
    if n_terms > MAX_SERIES_TERMS:
        raise InfeasibleExact(f"{n_terms} series terms needed; use method='fourier'")
    q = 1.0 - p
    term = np.zeros(cfg.n)
    term[0] = p
    acc = term.copy()
    weight = p
    support = cfg.step.support
    while weight * q / p >= tol:
        nxt = np.zeros(cfg.n)
        for a, w in support:
            nxt += w * np.roll(term, a)
        term = q * nxt
        weight *= q
        acc += term
    return DistVector(acc / math.fsum(acc))


def y_distribution(cfg: WalkConfig, k: int, s_dist: DistVector | None = None) -> DistVector:
    """Exact law of Y_k.

    Each epoch first adds an independent copy of S_1 and then multiplies,
    Y_j = multiplier * (Y_{j-1} + S_j), which unrolls to
    Y_k = sum_i multiplier^{k+1-i} S_i.
    """
    for d in iter_y_distributions(cfg, k, s_dist):
        pass
    return d


def iter_y_distributions(cfg: WalkConfig, k_max: int, s_dist: DistVector | None = None):
    if k_max < 0:
        raise ValueError("k must be >= 0")
    d = DistVector.point_mass(cfg.n)
    yield d
    if k_max == 0:
        return
    s = s_dist if s_dist is not None else s_distribution(cfg)
    for _ in range(k_max):
        d = doubling_pushforward(circular_convolve(d, s), cfg.multiplier)
        yield d


def tv_to_uniform(d: DistVector) -> float:
    return 0.5 * float(np.abs(d.probs - 1.0 / d.n).sum())


@dataclass
class MixingProfile:
    chain: str
    times: list[int]
    tv: list[float]
    mixing_times: dict[float, int | None] = field(default_factory=dict)
    mixing_times_interp: dict[float, float | None] = field(default_factory=dict)


def locate_mixing_times(times: Sequence[int], tv: Sequence[float], eps: Sequence[float]):
    """First grid time with tv <= eps, plus a linearly interpolated crossing."""
    first, interp = {}, {}
    for e in eps:
        first[e] = interp[e] = None
        for i, (t, v) in enumerate(zip(times, tv)):
            if v <= e:
                first[e] = int(t)
                if i == 0 or tv[i - 1] == v:
                    interp[e] = float(t)
                else:
                    t0, v0 = times[i - 1], tv[i - 1]
                    interp[e] = t0 + (v0 - e) * (t - t0) / (v0 - v)
                break
    return first, interp


def tv_curve(cfg: WalkConfig, times: Sequence[int], chain: str = "X",
             eps: Sequence[float] = (0.25,), check_monotone: bool = True,
             slack: float = 1e-12) -> MixingProfile:
    """Exact TV-to-uniform at each requested time of the X or Y chain."""
    times = [int(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be sorted ascending")
    if not times:
        return MixingProfile(chain, [], [])
    wanted = set(times)
    t_max = times[-1]
    if chain == "X":
        it = iter_x_distributions(cfg, t_max)
    elif chain == "Y":
        if cfg.p == 0.0:
            raise NoJumps("chain Y is undefined when p = 0")
        it = iter_y_distributions(cfg, t_max)
    else:
        raise ValueError(f"chain must be 'X' or 'Y', not {chain!r}")
    # TV is checked at every time, not only grid times.
    by_time = {}
    prev = None
    for t, d in enumerate(it):
        v = tv_to_uniform(d)
        if check_monotone and prev is not None and v > prev + slack:
            raise MonotonicityViolation(f"TV rose from {prev!r} to {v!r} at t={t}")
        prev = v
        if t in wanted:
            by_time[t] = v
    tv = [by_time[t] for t in times]
    first, interp = locate_mixing_times(times, tv, eps)
    return MixingProfile(chain, times, tv, first, interp)


def brute_force_x_distribution(cfg: WalkConfig, t: int, limit: int = 10**7) -> DistVector:
    """Enumerate every length-t move sequence and add up terminal masses."""
    moves = len(cfg.step.values) + 1
    if moves**t > limit:
        raise TooLarge(f"{moves}^{t} move sequences exceed the limit {limit}")
    n = cfg.n
    # move index 0 is the jump; 1.. are the step values
    move_prob = np.array([cfg.p] + [(1.0 - cfg.p) * q for q in cfg.step.probs])
    move_val = [None] + list(cfg.step.values)
    if t == 0:
        seqs = np.zeros((1, 0), dtype=np.int64)
    else:
        seqs = np.array(list(itertools.product(range(moves), repeat=t)), dtype=np.int64)
    state = np.zeros(len(seqs), dtype=np.int64)
    weight = np.ones(len(seqs))
    for col in range(t):
        mv = seqs[:, col]
        weight = weight * move_prob[mv]
        nxt = (state * cfg.multiplier) % n
        for idx in range(1, moves):
            sel = mv == idx
            nxt[sel] = (state[sel] + move_val[idx]) % n
        state = nxt
    out = np.zeros(n)
    np.add.at(out, state, weight)
    return DistVector(out)
