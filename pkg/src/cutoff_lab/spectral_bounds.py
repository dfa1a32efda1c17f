"""Fourier-side bounds and reconstructions for the subsampled chain.

Characters of Z_n are x -> exp(2 pi i s x / n).  The transform of the law of
Y_k at character s is the product over epochs j = 1..k of G_S'(omega_{s,j})
with omega_{s,j} = exp(2 pi i m^j s / n), m the multiplier.  Squaring and
summing over s >= 1 gives the upper bound on TV^2; inverting gives the law
itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NearSingular, NoJumps, NonNegligibleImaginary, VacuousBound, WindowTooWide
from .exact_engine import DistVector, evolve_x_distribution, tv_to_uniform, y_distribution
from .walk_core import StepDistribution, WalkConfig, mean_S, round_half_up, sigma2_S, theory_report

TWO_PI = 2.0 * math.pi
# n * t above this skips the exact witness evaluation in x_lower_bound.
EXACT_X_BUDGET = 5 * 10**8
EXACT_Y_MAX_N = 10**6


@dataclass(frozen=True)
class CharacterPoint:
    n: int
    s: int
    j: int
    multiplier: int = 2

    @property
    def residue(self) -> int:
        return (pow(self.multiplier, self.j, self.n) * self.s) % self.n

    @property
    def value(self) -> complex:
        theta = TWO_PI * self.residue / self.n
        return complex(math.cos(theta), math.sin(theta))


def multiplier_powers(n: int, k: int, multiplier: int = 2) -> np.ndarray:
    """m^j mod n for j = 0..k, by repeated multiplication."""
    out = np.empty(k + 1, dtype=np.int64)
    r = 1 % n
    for j in range(k + 1):
        out[j] = r
        r = (r * multiplier) % n
    return out


def pgf_xi(step: StepDistribution, z) -> complex | np.ndarray:
    """E[z^xi] for |z| = 1; negative exponents use conjugate powers."""
    z = np.asarray(z, dtype=complex)
    acc = np.zeros_like(z)
    for a, q in step.support:
        acc = acc + q * (z**a if a >= 0 else np.conj(z) ** (-a))
    return acc if acc.ndim else complex(acc)


def pgf_xi_at_residues(step: StepDistribution, n: int, r: np.ndarray) -> np.ndarray:
    """G_xi(exp(2 pi i r / n)) with a * r reduced mod n before the exponential."""
    r = np.asarray(r, dtype=np.int64)
    acc = np.zeros(r.shape, dtype=complex)
    for a, q in step.support:
        ang = TWO_PI * ((a * r) % n) / n
        acc += q * (np.cos(ang) + 1j * np.sin(ang))
    return acc


def pgf_s(cfg: WalkConfig, omega) -> complex:
    """G_S'(omega) = p / (1 - (1-p) G_xi(omega))."""
    p = cfg.p
    g = pgf_xi(cfg.step, omega)
    den = 1.0 - (1.0 - p) * g
    if abs(den) < 1e-12 and abs(complex(omega) - 1.0) > 1e-15:
        raise NearSingular(f"|1 - (1-p) G_xi(omega)| = {abs(den)!r}")
    return complex(p / den)


def _pgf_s_residues(cfg: WalkConfig, r: np.ndarray) -> np.ndarray:
    g = pgf_xi_at_residues(cfg.step, cfg.n, r)
    return cfg.p / (1.0 - (1.0 - cfg.p) * g)


def _phi_from_g(p: float, g: np.ndarray) -> np.ndarray:
    q = 1.0 - p
    return p * p / (1.0 - 2.0 * q * g.real + q * q * (g.real**2 + g.imag**2))


def phi(cfg: WalkConfig, s: int, j: int) -> float:
    """Per-epoch contraction |G_S'(omega_{s,j})|^2, written out in real terms."""
    if not 1 <= s <= cfg.n - 1:
        raise ValueError("s must lie in 1..n-1")
    r = CharacterPoint(cfg.n, s, j, cfg.multiplier).residue
    g = pgf_xi_at_residues(cfg.step, cfg.n, np.array([r]))
    return float(_phi_from_g(cfg.p, g)[0])


def phi_table(cfg: WalkConfig, k: int) -> np.ndarray:
    """phi(s, j) for s = 1..n-1 (rows) and j = 1..k (columns)."""
    n = cfg.n
    s = np.arange(1, n, dtype=np.int64)
    pw = multiplier_powers(n, k, cfg.multiplier)
    out = np.empty((n - 1, k))
    for j in range(1, k + 1):
        g = pgf_xi_at_residues(cfg.step, n, (pw[j] * s) % n)
        out[:, j - 1] = _phi_from_g(cfg.p, g)
    return out


def _check_p(cfg):
    if cfg.p == 0.0:
        raise NoJumps("the subsampled chain needs p > 0")


def u_n_curve(cfg: WalkConfig, k_max: int, log_space: bool | None = None) -> np.ndarray:
    """sum_{s>=1} prod_{j<=k} phi(s, j) for k = 1..k_max (index k-1)."""
    _check_p(cfg)
    if k_max < 1:
        return np.zeros(0)
    tab = phi_table(cfg, k_max)
    if log_space is None:
        log_space = bool(tab.min() < 1e-300) or k_max * math.log(max(tab.min(), 1e-320)) < -690
    if log_space:
        prods = np.exp(np.cumsum(np.log(tab), axis=1))
    else:
        prods = np.cumprod(tab, axis=1)
    # np.sum reduces pairwise in a fixed order.
    return prods.sum(axis=0)


def u_n(cfg: WalkConfig, k: int, log_space: bool | None = None) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(u_n_curve(cfg, k, log_space)[-1])


def fourier_upper_bound_raw(cfg: WalkConfig, k: int) -> float:
    return math.sqrt(0.25 * u_n(cfg, k))


def fourier_upper_bound(cfg: WalkConfig, k: int) -> float:
    """TV upper bound for Y_k, clamped at 1."""
    return min(1.0, fourier_upper_bound_raw(cfg, k))


def fourier_upper_bound_curve(cfg: WalkConfig, k_max: int) -> np.ndarray:
    """Clamped bounds for k = 1..k_max (index k-1)."""
    return np.minimum(1.0, np.sqrt(0.25 * u_n_curve(cfg, k_max)))


def y_fourier_coefficients(cfg: WalkConfig, k: int) -> np.ndarray:
    """hat P_k(s) = sum_x P(Y_k = x) exp(2 pi i s x / n), s = 0..n-1."""
    n = cfg.n
    s = np.arange(n, dtype=np.int64)
    coef = np.ones(n, dtype=complex)
    if k > 0:
        _check_p(cfg)
    pw = multiplier_powers(n, k, cfg.multiplier)
    for j in range(1, k + 1):
        coef *= _pgf_s_residues(cfg, (pw[j] * s) % n)
    return coef


def _invert(coef: np.ndarray) -> DistVector:
    # P(x) = (1/n) sum_s hat P(s) exp(-2 pi i s x / n)
    vals = np.fft.fft(coef) / coef.size
    worst = float(np.abs(vals.imag).max())
    if worst > 1e-8:
        raise NonNegligibleImaginary(f"inverse transform has imaginary part {worst!r}")
    re = vals.real
    if re.min() < -1e-12:
        raise NonNegligibleImaginary(f"inverse transform has negative mass {re.min()!r}")
    return DistVector(np.where(re < 0.0, 0.0, re))


def fourier_y_distribution(cfg: WalkConfig, k: int) -> DistVector:
    if k < 0:
        raise ValueError("k must be >= 0")
    return _invert(y_fourier_coefficients(cfg, k))


def fourier_s_distribution(cfg: WalkConfig) -> DistVector:
    """Law of S_1 mod n recovered from G_S' at all n characters."""
    _check_p(cfg)
    return _invert(_pgf_s_residues(cfg, np.arange(cfg.n, dtype=np.int64)))


def plancherel_gap(cfg: WalkConfig, k: int, d: DistVector | None = None) -> tuple[float, float]:
    """(1/4 u_n(k), 1/4 (n sum P^2 - 1)); the two must agree."""
    if d is None:
        d = y_distribution(cfg, k)
    lhs = 0.25 * u_n(cfg, k)
    rhs = 0.25 * (cfg.n * float(np.dot(d.probs, d.probs)) - 1.0)
    return lhs, rhs


# ---------------------------------------------------------------------------
# lower bounds


def circular_distance(z, center: float, n: int) -> np.ndarray:
    diff = np.mod(np.asarray(z, dtype=float) - center, n)
    return np.minimum(diff, n - diff)


@dataclass
class BoundReport:
    chain: str
    time: int
    c: float
    tv_lower: float
    tv_upper: float | None = None
    tv_exact: float | None = None
    closed_form: float | None = None
    witness_gap: float | None = None
    rigorous_lower: bool = True
    witness: dict = field(default_factory=dict)

    def check(self, slack: float = 1e-9) -> bool:
        if self.tv_exact is None:
            return self.tv_upper is None or self.tv_lower <= self.tv_upper + slack
        ok = self.tv_lower <= self.tv_exact + slack
        if self.witness_gap is not None:
            ok = ok and self.witness_gap <= self.tv_exact + slack
        if self.tv_upper is not None:
            ok = ok and self.tv_exact <= self.tv_upper + slack
        return ok

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def y_moments(cfg: WalkConfig, k: int) -> tuple[float, float]:
    """E[Y'_k] and Var[Y'_k] for Y'_k = sum_i m^{k+1-i} S'_i."""
    m = cfg.multiplier
    geo = (m ** (k + 1) - m) / (m - 1)
    geo2 = m * m * (m ** (2 * k) - 1) / (m * m - 1)
    return float(geo) * mean_S(cfg), float(geo2) * sigma2_S(cfg)


def window_radius(c: float) -> float:
    """d_c = (4^{1-c} / 3)^{1/3}, the Chebyshev-optimal half-width."""
    return (4.0 ** (1.0 - c) / 3.0) ** (1.0 / 3.0)


def y_closed_form(c: float, n: int) -> float:
    d = window_radius(c)
    return 1.0 - 2.0 * d - 1.0 / n - 4.0 ** (1.0 - c) / (3.0 * d * d)


def y_lower_bound(cfg: WalkConfig, c: float, exact: bool | None = None,
                  d: DistVector | None = None) -> BoundReport:
    """Chebyshev witness for Y at k = round(T_n - c).

    ``tv_lower`` is the finite-n Chebyshev bound built from the exact
    variance of Y'_k, so it is a genuine lower bound for every n.
    ``closed_form`` is the asymptotic expression in c alone.
    """
    th = theory_report(cfg)
    k = round_half_up(th.T_n - c)
    if k < 1:
        raise ValueError(f"T_n - c = {th.T_n - c:.3f} gives k < 1")
    dc = window_radius(c)
    if dc >= 0.5:
        raise WindowTooWide(f"d_c = {dc:.4f} >= 1/2 at c = {c}")
    n = cfg.n
    ey, vy = y_moments(cfg, k)
    radius = dc * n
    center = ey % n
    cheb = 1.0 - 2.0 * dc - 1.0 / n - vy / radius**2
    closed = y_closed_form(c, n) if cfg.multiplier == 2 else None
    sgn = (cfg.mu > 0) - (cfg.mu < 0)
    witness = {
        "set": "A_n(c): circular distance from center > radius",
        "center": center,
        "radius": radius,
        "excluded_arc": [math.ceil(center - radius) % n, math.floor(center + radius) % n],
        "d_c": dc,
        "k": k,
        "mean_Y": ey,
        "var_Y": vy,
        "mean_Y_asymptotic": sgn * 2.0 ** (1.0 - c) * n,
        "chebyshev_bound": cheb,
    }
    if exact is None:
        exact = n <= EXACT_Y_MAX_N
    gap = tv = None
    if exact or d is not None:
        if d is None:
            d = y_distribution(cfg, k)
        in_a = circular_distance(np.arange(n), center, n) > radius
        gap = float(in_a.sum()) / n - float(d.probs[in_a].sum())
        tv = tv_to_uniform(d)
        witness["pi_A"] = float(in_a.sum()) / n
    lower = max(0.0, cheb, gap if gap is not None else 0.0)
    return BoundReport("Y", k, c, lower, None, tv, closed, gap, True, witness)


def default_a(cfg: WalkConfig) -> float:
    """Expected-modulus constant: 2^{b+1}|mu| with drift, 12 without."""
    if cfg.mu != 0.0:
        return 2.0 ** (cfg.step.b + 1) * abs(cfg.mu)
    return 12.0


def x_lower_bound(cfg: WalkConfig, c: float, a_estimate: float | None = None,
                  exact: bool | None = None) -> BoundReport:
    """Markov witness for X at t = round(T_n^L - c w_n^L).

    The closed form rests on E|X'_t| <= a n e^{-c}, which only holds
    asymptotically, so it is flagged non-rigorous; when the exact law is
    computed, ``tv_lower`` is the exact witness gap instead.
    """
    th = theory_report(cfg)
    t = round_half_up(th.time_left(c))
    if t < 1:
        raise ValueError(f"T_n^L - c w_n^L = {th.time_left(c):.3f} gives t < 1")
    a = default_a(cfg) if a_estimate is None else float(a_estimate)
    if not a > 0:
        raise ValueError("a_estimate must be > 0")
    n = cfg.n
    closed = 1.0 - (2.0 + a) * math.exp(-c / 2.0) - 1.0 / n
    if closed <= 0.0:
        raise VacuousBound(f"1 - (2 + a) e^(-c/2) - 1/n = {closed:.4f} <= 0")
    radius = math.exp(-c / 2.0) * n
    witness = {
        "set": "D_n(c): circular distance from 0 > radius",
        "center": 0,
        "radius": radius,
        "excluded_arc": [math.ceil(-radius) % n, math.floor(radius) % n],
        "a": a,
        "t": t,
    }
    if exact is None:
        exact = n * t <= EXACT_X_BUDGET
    if exact:
        d = evolve_x_distribution(cfg, t)
        in_d = circular_distance(np.arange(n), 0.0, n) > radius
        gap = float(in_d.sum()) / n - float(d.probs[in_d].sum())
        witness["pi_D"] = float(in_d.sum()) / n
        return BoundReport("X", t, c, max(0.0, gap), None, tv_to_uniform(d), closed, gap, True, witness)
    return BoundReport("X", t, c, closed, None, None, closed, None, False, witness)


# ---------------------------------------------------------------------------
# coth comparator


def x_coth_x_minus_1(x: float) -> float:
    """x coth(x) - 1 without cancellation for small x."""
    x = abs(x)
    if x < 1e-2:
        x2 = x * x
        return x2 / 3.0 - x2 * x2 / 45.0 + 2.0 * x2**3 / 945.0 - x2**4 / 4725.0
    return x / math.tanh(x) - 1.0


def coth_asymptote(c: float, L: int, b: int) -> float:
    """2^{L+b} (y coth y - 1) with y = 2^{L+b-(1+c)}."""
    if L < 0 or b < 0:
        raise ValueError("L and b must be >= 0")
    y = 2.0 ** (L + b - (1.0 + c))
    return 2.0 ** (L + b) * x_coth_x_minus_1(y)


def coth_asymptote_leading(c: float, L: int, b: int) -> float:
    """Leading small-y term 2^{L+b} 4^{L+b-(1+c)} / 3."""
    return 2.0 ** (L + b) * 4.0 ** (L + b - (1.0 + c)) / 3.0


def coth_series(x: float, terms: int = 10**6, tail_correction: bool = True) -> tuple[float, float]:
    """1/x + 2x sum_{r=1}^R 1/(x^2 + pi^2 r^2) and the tail bound 2x/(pi^2 R).

    With ``tail_correction`` the dropped tail is replaced by its midpoint
    integral (2/pi) arctan(x / (pi (R + 1/2))), accurate to O(x / R^3).
    """
    if x <= 0:
        raise ValueError("x must be > 0")
    r = np.arange(1, terms + 1, dtype=float)
    terms_ = 1.0 / (x * x + (math.pi * r) ** 2)
    # sum smallest terms first
    total = 1.0 / x + 2.0 * x * math.fsum(terms_[::-1])
    if tail_correction:
        total += (2.0 / math.pi) * math.atan(x / (math.pi * (terms + 0.5)))
    return total, 2.0 * x / (math.pi**2 * terms)
