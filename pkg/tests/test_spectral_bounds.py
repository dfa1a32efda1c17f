import cmath
import math

import numpy as np
import pytest

import cutoff_lab.spectral_bounds as sb
from cutoff_lab.errors import NearSingular, NonNegligibleImaginary, VacuousBound, WindowTooWide
from cutoff_lab.exact_engine import s_distribution, tv_to_uniform, y_distribution
from cutoff_lab.rng import RngStream
from cutoff_lab.walk_core import make_config, sample_y, sigma2_S, theory_report

PM1 = {-1: 0.5, 1: 0.5}
LAWS = [{1: 1.0}, PM1, {-1: 0.2, 0: 0.3, 2: 0.5}]


class TestCharacters:
    def test_unit_modulus_and_order(self):
        for s, j in [(0, 0), (1, 1), (37, 12), (100, 60)]:
            w = sb.CharacterPoint(101, s, j).value
            assert abs(abs(w) - 1) < 1e-12
            assert abs(w**101 - 1) < 1e-9

    def test_powers_by_doubling(self):
        pw = sb.multiplier_powers(1001, 80)
        assert [int(v) for v in pw] == [pow(2, j, 1001) for j in range(81)]
        assert sb.CharacterPoint(1001, 5, 77).residue == (5 * pow(2, 77, 1001)) % 1001


class TestPGF:
    def test_xi(self):
        theta = 0.731
        z = cmath.exp(1j * theta)
        from cutoff_lab.walk_core import StepDistribution

        assert sb.pgf_xi(StepDistribution.from_support(PM1), 1.0) == pytest.approx(1.0)
        assert sb.pgf_xi(StepDistribution.from_support(PM1), z) == pytest.approx(math.cos(theta), abs=1e-15)
        assert sb.pgf_xi(StepDistribution.from_support({1: 1}), z) == pytest.approx(z, abs=1e-15)

    def test_s_at_one(self):
        assert sb.pgf_s(make_config(5, {1: 1}, p=0.5), 1.0) == pytest.approx(1.0)

    def test_s_matches_dft(self):
        cfg = make_config(5, {1: 1}, p=0.5)
        w = cmath.exp(2j * math.pi / 5)
        direct = sum(q * w**a for a, q in enumerate(np.array([16, 8, 4, 2, 1]) / 31))
        # the exact law mod 5 has the same transform as S' at 5th roots of unity
        assert sb.pgf_s(cfg, w) == pytest.approx(direct, abs=1e-12)
        assert sb.pgf_s(cfg, w) == pytest.approx(0.5 / (1 - 0.5 * w), abs=1e-15)

    def test_real_pgf_contracts(self):
        cfg = make_config(11, PM1, p=0.1)
        for s in range(1, 11):
            w = cmath.exp(2j * math.pi * s / 11)
            assert abs(sb.pgf_s(cfg, w)) < 1

    def test_near_singular(self):
        cfg = make_config(5, {1: 1}, p=1e-14)
        with pytest.raises(NearSingular):
            sb.pgf_s(cfg, cmath.exp(1j * 1e-14))


class TestPhi:
    def test_collapse_to_one(self):
        # a step that is a multiple of n has G_xi = 1, which forces phi = 1
        g = np.array([1.0 + 0j])
        assert sb._phi_from_g(0.3, g)[0] == pytest.approx(1.0, abs=1e-15)
        assert sb.phi(make_config(5, {1: 0.5, 6: 0.5}, p=0.3), 1, 0) < 1
        assert 0 < sb.phi(make_config(7, {7: 0.5, 1: 0.5}, p=0.3), 3, 2) <= 1

    def test_hand_value(self):
        cfg = make_config(5, {1: 1}, p=0.5)
        w = cmath.exp(2j * math.pi * 1 / 5)
        assert sb.phi(cfg, 1, 0) == pytest.approx(abs(0.5 / (1 - 0.5 * w)) ** 2, rel=1e-14)

    def test_identity_with_pgf(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.choice([5, 7, 101, 301, 1001]))
            law = LAWS[int(rng.integers(3))]
            cfg = make_config(n, law, p=float(rng.uniform(0.001, 0.9)))
            s = int(rng.integers(1, n))
            j = int(rng.integers(0, 40))
            w = sb.CharacterPoint(n, s, j).value
            assert sb.phi(cfg, s, j) == pytest.approx(abs(sb.pgf_s(cfg, w)) ** 2, abs=1e-12)

    def test_bounded_by_one(self):
        rng = np.random.default_rng(1)
        count = 0
        while count < 10_000:
            n = int(rng.choice([5, 9, 101, 301]))
            cfg = make_config(n, LAWS[int(rng.integers(3))], p=float(rng.uniform(1e-4, 0.99)))
            tab = sb.phi_table(cfg, 12)
            assert np.all(tab > 0) and np.all(tab <= 1 + 1e-15)
            count += tab.size


class TestUn:
    def test_non_increasing(self):
        for law in LAWS:
            u = sb.u_n_curve(make_config(301, law, alpha=0.5), 30)
            assert np.all(np.diff(u) <= 1e-15 * u[:-1])

    def test_small_example_two_paths(self):
        cfg = make_config(5, {1: 1}, p=0.5)
        direct = sum(sb.phi(cfg, s, 1) for s in range(1, 5))
        assert sb.u_n(cfg, 1) == pytest.approx(direct, rel=1e-14)
        assert sb.fourier_upper_bound(cfg, 1) == pytest.approx(min(1, math.sqrt(direct / 4)), rel=1e-14)

    def test_decay_at_least_4_pow_minus_c(self):
        cfg = make_config(101, PM1, alpha=0.5)
        K = math.ceil(theory_report(cfg).T_n)
        u = [0.25 * sb.u_n(cfg, K + c) for c in range(2, 9)]
        ratios = [b / a for a, b in zip(u, u[1:])]
        assert all(r <= 0.25 for r in ratios)

    def test_log_space_matches_direct(self):
        cfg = make_config(301, PM1, alpha=0.5)
        a = sb.u_n_curve(cfg, 12, log_space=False)
        b = sb.u_n_curve(cfg, 12, log_space=True)
        assert np.allclose(a, b, rtol=1e-9, atol=0)

    def test_log_space_no_underflow(self):
        cfg = make_config(101, PM1, p=1e-3)
        u = sb.u_n_curve(cfg, 400)
        assert np.all(np.isfinite(u)) and np.all(u >= 0)

    def test_plancherel(self):
        for law in LAWS:
            cfg = make_config(301, law, alpha=0.5)
            for k in (1, 4, 8):
                lhs, rhs = sb.plancherel_gap(cfg, k)
                assert lhs == pytest.approx(rhs, abs=1e-8)


class TestUpperBound:
    @pytest.mark.parametrize("law", LAWS)
    @pytest.mark.parametrize("n", [5, 101, 301])
    def test_dominates_exact(self, n, law):
        cfg = make_config(n, law, alpha=0.5)
        ub = sb.fourier_upper_bound_curve(cfg, 30)
        s = s_distribution(cfg)
        for k in range(1, 31):
            d = y_distribution(cfg, k, s)
            assert tv_to_uniform(d) <= ub[k - 1] + 1e-12

    def test_small_bound_implies_small_tv(self):
        cfg = make_config(301, PM1, alpha=0.5)
        for k in range(1, 40):
            if sb.fourier_upper_bound(cfg, k) < 1e-3:
                assert tv_to_uniform(y_distribution(cfg, k)) < 1e-3
                break
        else:
            pytest.fail("bound never dropped below 1e-3")

    def test_clamped(self):
        cfg = make_config(1001, PM1, alpha=0.5)
        assert sb.fourier_upper_bound_raw(cfg, 1) > 1
        assert sb.fourier_upper_bound(cfg, 1) == 1.0

    def test_non_increasing(self):
        ub = sb.fourier_upper_bound_curve(make_config(1001, {1: 1}, alpha=0.75), 25)
        assert np.all(np.diff(ub) <= 0)


class TestFourierY:
    def test_k0(self):
        d = sb.fourier_y_distribution(make_config(7, PM1, p=0.2), 0)
        assert np.allclose(d.probs, [1, 0, 0, 0, 0, 0, 0], atol=1e-15)

    def test_k1_example(self):
        d = sb.fourier_y_distribution(make_config(5, {1: 1}, p=0.5), 1)
        assert np.abs(d.probs - np.array([16, 2, 8, 1, 4]) / 31).max() < 1e-12

    @pytest.mark.parametrize("law", LAWS)
    def test_matches_convolution(self, law):
        cfg = make_config(101, law, alpha=0.5)
        s = s_distribution(cfg)
        for k in range(0, 11):
            assert np.abs(sb.fourier_y_distribution(cfg, k).probs - y_distribution(cfg, k, s).probs).max() < 1e-10

    def test_imaginary_guard(self):
        coef = np.ones(5, dtype=complex)
        coef[1] = 1j
        with pytest.raises(NonNegligibleImaginary):
            sb._invert(coef)


class TestYLowerBound:
    def test_closed_form_simplifies(self):
        for c in (2.0, 3.0, 5.5, 9.0):
            n = 1001
            assert sb.y_closed_form(c, n) == pytest.approx(1 - 1 / n - (9 / 4 ** (c - 1)) ** (1 / 3), abs=1e-14)
            assert sb.y_closed_form(c, n) + 1 / n >= 1 - 4 ** (1 - c / 3) - 1e-15

    def test_exact_witness_beats_closed_form(self):
        rep = sb.y_lower_bound(make_config(1001, PM1, alpha=0.5), 3.0)
        assert rep.witness_gap >= rep.closed_form
        assert rep.witness_gap <= rep.tv_exact
        assert rep.check()
        assert rep.witness["d_c"] == pytest.approx((4 ** (-2) / 3) ** (1 / 3))

    def test_variance_formula_monte_carlo(self):
        cfg = make_config(101, PM1, alpha=0.5)
        k = 4
        y = sample_y(cfg, k, 10**5, RngStream(12), unreduced=True).astype(float)
        _, var = sb.y_moments(cfg, k)
        assert var == pytest.approx(4 * (4**k - 1) * sigma2_S(cfg) / 3, rel=1e-14)
        v = y.var()
        se = math.sqrt((np.mean((y - y.mean()) ** 4) - v * v) / y.size)
        assert abs(v - var) < 3 * se

    def test_mean_formula(self):
        cfg = make_config(101, {1: 0.7, -1: 0.3}, alpha=0.5)
        k = 3
        y = sample_y(cfg, k, 10**5, RngStream(13), unreduced=True).astype(float)
        mean, var = sb.y_moments(cfg, k)
        assert mean == pytest.approx((2 ** (k + 1) - 2) * cfg.mu * (1 / cfg.p - 1))
        assert abs(y.mean() - mean) < 3 * math.sqrt(var / y.size)

    def test_window_too_wide(self):
        with pytest.raises(WindowTooWide):
            sb.y_lower_bound(make_config(1001, PM1, alpha=0.5), 1.0)

    def test_json(self):
        import json

        rep = sb.y_lower_bound(make_config(301, PM1, alpha=0.5), 2.5)
        doc = json.loads(rep.to_json())
        assert doc["witness"]["radius"] == pytest.approx(rep.witness["d_c"] * 301)
        assert len(doc["witness"]["excluded_arc"]) == 2


class TestXLowerBound:
    def test_closed_form_limit(self):
        n = 10001
        a = 12.0
        vals = [1 - (2 + a) * math.exp(-c / 2) - 1 / n for c in (10, 20, 40, 80)]
        assert vals[-1] == pytest.approx(1 - 1 / n, abs=1e-15)
        assert vals == sorted(vals)

    def test_exact_gap_below_tv(self):
        cfg = make_config(10001, PM1, alpha=0.5)
        rep = sb.x_lower_bound(cfg, 2.0, a_estimate=0.6)
        assert rep.witness_gap <= rep.tv_exact
        assert rep.rigorous_lower and rep.check()
        assert rep.time == round(theory_report(cfg).time_left(2.0))

    def test_vacuous(self):
        with pytest.raises(VacuousBound):
            sb.x_lower_bound(make_config(1001, PM1, alpha=0.5), 1.0)

    def test_default_constants(self):
        assert sb.default_a(make_config(11, PM1, p=0.1)) == 12.0
        assert sb.default_a(make_config(11, {3: 1}, p=0.1)) == 2 ** 3 * 3


class TestCoth:
    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
    def test_series(self, x):
        val, tail = sb.coth_series(x, 10**6)
        assert abs(val - 1 / math.tanh(x)) < 1e-6
        raw, _ = sb.coth_series(x, 10**6, tail_correction=False)
        assert abs(raw - 1 / math.tanh(x)) <= tail

    def test_small_y_asymptote(self):
        for c in (20, 30, 40):
            r = sb.coth_asymptote(c, 2, 0) / sb.coth_asymptote_leading(c, 2, 0)
            assert abs(r - 1) < 1e-3

    def test_quarter_decay(self):
        for c in range(20, 30):
            r = sb.coth_asymptote(c + 1, 2, 1) / sb.coth_asymptote(c, 2, 1)
            assert 0.2499 <= r <= 0.2501

    def test_stable_small_argument(self):
        for y in (1e-3, 5e-3, 1e-2, 2e-2):
            taylor = y**2 / 3 - y**4 / 45 + 2 * y**6 / 945 - y**8 / 4725
            assert sb.x_coth_x_minus_1(y) == pytest.approx(taylor, rel=1e-12)
