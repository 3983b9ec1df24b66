import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bifbm.covariance import ProcessParams
from bifbm.errors import DomainError, InsufficientData
from bifbm.sampling import DyadicGrid, sample_matrix, sample_paths
from bifbm.schauder import (
    SchauderCoeffs,
    bes_criterion,
    besov_seq_norm,
    direct_besov_norm,
    holder_norm,
    level_terms,
    reconstruct,
    schauder_coeffs,
)


def grid(J):
    return DyadicGrid(J).points


def random_coeffs(J, rng):
    return SchauderCoeffs(
        rng.standard_normal(), rng.standard_normal(),
        [rng.standard_normal(2**j) for j in range(J)],
    )


def brute_seq_norm(c, gamma, p):
    terms = []
    for j, row in enumerate(c.levels):
        s = math.fsum(abs(float(v)) ** p for v in row)
        terms.append(2.0 ** (-j * (0.5 - gamma + 1.0 / p)) * s ** (1.0 / p))
    return max([abs(float(c.f0)), abs(float(c.f1))] + terms), terms


class TestCoefficients:
    def test_constant(self):
        c = schauder_coeffs(np.full(2**6 + 1, 2.5))
        assert c.f0 == 2.5 and c.f1 == 0.0
        assert all(np.all(r == 0) for r in c.levels)

    def test_identity_function(self):
        c = schauder_coeffs(grid(7))
        assert c.f0 == 0.0 and c.f1 == 1.0
        assert all(np.all(r == 0) for r in c.levels)

    def test_level_sizes(self):
        c = schauder_coeffs(grid(5))
        assert [r.size for r in c.levels] == [1, 2, 4, 8, 16]

    def test_hat_function(self):
        J, j0, k0 = 6, 3, 5
        t = grid(J)
        left, mid, right = (2 * k0 - 2) / 2 ** (j0 + 1), (2 * k0 - 1) / 2 ** (j0 + 1), 2 * k0 / 2 ** (j0 + 1)
        height = 2 ** (-j0 / 2) / 2
        f = np.where((t >= left) & (t <= right), height * (1 - np.abs(t - mid) / (mid - left)), 0.0)
        c = schauder_coeffs(f)
        flat = c.flat()
        assert c.levels[j0][k0 - 1] == pytest.approx(1.0, rel=1e-15)
        others = np.delete(flat, 2 + 2**j0 - 1 + k0 - 1)
        assert np.max(np.abs(others)) <= 1e-15

    def test_direct_formula(self):
        rng = np.random.default_rng(0)
        f = rng.standard_normal(2**4 + 1)
        c = schauder_coeffs(f)
        for j in range(4):
            for k in range(1, 2**j + 1):
                i = lambda num: num * 2 ** (4 - j - 1)
                expected = 2 * 2 ** (j / 2) * (f[i(2 * k - 1)] - 0.5 * f[i(2 * k)] - 0.5 * f[i(2 * k - 2)])
                assert c.levels[j][k - 1] == pytest.approx(expected, abs=1e-14)

    def test_accepts_path_sample(self):
        s = sample_paths(ProcessParams(0.5, 0.5), DyadicGrid(4), 1, seed=0)[0]
        assert np.array_equal(schauder_coeffs(s).flat(), schauder_coeffs(s.values).flat())

    def test_batch(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((3, 2**5 + 1))
        c = schauder_coeffs(f)
        for i in range(3):
            assert np.array_equal(c.flat()[i], schauder_coeffs(f[i]).flat())

    @pytest.mark.parametrize("n", [0, 1, 2, 4, 10, 2**5])
    def test_bad_length(self, n):
        with pytest.raises(DomainError):
            schauder_coeffs(np.zeros(n))

    def test_bad_level_size(self):
        with pytest.raises(DomainError):
            SchauderCoeffs(0.0, 0.0, [np.zeros(1), np.zeros(3)])


class TestReconstruct:
    def test_zero(self):
        c = SchauderCoeffs(0.0, 0.0, [np.zeros(2**j) for j in range(5)])
        assert np.array_equal(reconstruct(c), np.zeros(33))

    def test_affine(self):
        c = SchauderCoeffs(0.0, 1.0, [np.zeros(2**j) for j in range(6)])
        assert np.array_equal(reconstruct(c, 6), grid(6))

    def test_random_round_trip(self):
        rng = np.random.default_rng(7)
        c = random_coeffs(8, rng)
        back = schauder_coeffs(reconstruct(c))
        assert np.max(np.abs(back.flat() - c.flat())) <= 1e-12

    def test_path_round_trip(self):
        f = sample_matrix(ProcessParams(0.3, 0.7), DyadicGrid(10), 2, seed=1)
        assert np.max(np.abs(reconstruct(schauder_coeffs(f)) - f)) <= 1e-12

    def test_level_too_deep(self):
        with pytest.raises(DomainError):
            reconstruct(random_coeffs(3, np.random.default_rng(0)), 4)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 9), st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, J, seed, a, b):
        rng = np.random.default_rng(seed)
        f, g = rng.standard_normal((2, 2**J + 1))
        lhs = schauder_coeffs(a * f + b * g).flat()
        rhs = a * schauder_coeffs(f).flat() + b * schauder_coeffs(g).flat()
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 10), st.floats(-5, 5), st.floats(-5, 5))
    def test_affine_has_no_wavelet_part(self, J, a, b):
        c = schauder_coeffs(a + b * grid(J))
        assert max(np.max(np.abs(r)) for r in c.levels) <= 1e-12 * (1 + abs(a) + abs(b))


class TestSequenceNorm:
    def test_zero(self):
        c = SchauderCoeffs(0.0, 0.0, [np.zeros(2**j) for j in range(5)])
        assert besov_seq_norm(c, 0.6, 3).seq_norm == 0.0

    @pytest.mark.parametrize("j", [0, 2, 5])
    def test_single_coefficient(self, j):
        levels = [np.zeros(2**i) for i in range(6)]
        levels[j][-1] = 1.0
        gamma, p = 0.7, 4.0
        r = besov_seq_norm(SchauderCoeffs(0.0, 0.0, levels), gamma, p)
        assert r.seq_norm == pytest.approx(2 ** (-j * (0.5 - gamma + 1 / p)), rel=1e-15)

    @pytest.mark.parametrize("gamma,p", [(0.6, 3.0), (0.3, 5.0), (0.58, 40.0), (0.9, 1.5)])
    def test_against_brute_force(self, gamma, p):
        c = random_coeffs(6, np.random.default_rng(42))
        norm, terms = brute_seq_norm(c, gamma, p)
        r = besov_seq_norm(c, gamma, p)
        assert r.seq_norm == pytest.approx(norm, rel=1e-13)
        assert np.allclose(r.level_terms, terms, rtol=1e-13, atol=0)

    def test_large_p_does_not_overflow(self):
        c = SchauderCoeffs(0.0, 0.0, [np.full(2**j, 1e10) for j in range(4)])
        r = besov_seq_norm(c, 0.9, 60.0)
        assert np.all(np.isfinite(r.level_terms))

    def test_embedding_identity(self):
        c = random_coeffs(8, np.random.default_rng(5))
        p, g, g2 = 4.0, 0.4, 0.7
        T, T2 = level_terms(c, g, p), level_terms(c, g2, p)
        j = np.arange(8)
        assert np.allclose(T, T2 * 2.0 ** (-j * (g2 - g)), rtol=1e-14, atol=0)

    @pytest.mark.parametrize("gamma,p", [(0.2, 4.0), (1.0, 4.0), (0.5, 1.0), (0.5, np.inf), (0.5, 0.5)])
    def test_range(self, gamma, p):
        c = random_coeffs(4, np.random.default_rng(0))
        with pytest.raises(DomainError):
            besov_seq_norm(c, gamma, p)

    def test_batch_matches_single(self):
        f = sample_matrix(ProcessParams(0.6, 0.6), DyadicGrid(6), 4, seed=3)
        batch = besov_seq_norm(schauder_coeffs(f), 0.5, 4)
        for i in range(4):
            single = besov_seq_norm(schauder_coeffs(f[i]), 0.5, 4)
            assert batch.seq_norm[i] == pytest.approx(single.seq_norm, rel=1e-15)


class TestBesCriterion:
    def test_affine_is_member(self):
        r = bes_criterion(schauder_coeffs(grid(8)), 0.6, 3)
        assert np.all(r.level_terms == 0)
        assert r.slope == -np.inf and r.in_bes

    def test_constant_terms_are_flat(self):
        gamma, p, J = 0.6, 3.0, 9
        levels = [np.full(2**j, 2 ** (j * (0.5 - gamma + 1 / p)) * 2 ** (-j / p)) for j in range(J)]
        r = bes_criterion(SchauderCoeffs(0.0, 0.0, levels), gamma, p)
        assert np.allclose(r.level_terms, 1.0, rtol=1e-13)
        assert abs(r.slope) <= 1e-12
        assert r.verdict == "flat" and not r.in_bes

    def test_decaying_and_growing(self):
        gamma, p, J = 0.6, 3.0, 9
        for rate, verdict in ((-0.1, "member"), (0.1, "growing")):
            levels = [np.full(2**j, 2 ** (j * (0.5 - gamma + rate))) for j in range(J)]
            r = bes_criterion(SchauderCoeffs(0.0, 0.0, levels), gamma, p)
            assert r.slope == pytest.approx(rate, abs=1e-12)
            assert r.verdict == verdict

    def test_needs_four_levels(self):
        with pytest.raises(InsufficientData):
            bes_criterion(schauder_coeffs(grid(3)), 0.6, 3)

    def test_sampled_path_below_index(self):
        P = ProcessParams(0.8, 0.8)
        f = sample_matrix(P, DyadicGrid(12), 1, seed=4)[0]
        r = bes_criterion(schauder_coeffs(f), P.hurst - 0.15, 8)
        assert r.slope < 0


def affine_direct_norm(J, gamma, p):
    # f(t) = t: every shift by s = m h has integrand s^p on a set of measure 1 - s
    N = 2**J
    h = 1.0 / N
    lp = (h * sum((i * h) ** p for i in range(N))) ** (1 / p)
    best, modulus = 0.0, 0.0
    for m in range(1, N + 1):
        s = m * h
        modulus = max(modulus, s * (1 - s) ** (1 / p))
        best = max(best, modulus / s**gamma)
    return lp + best


class TestDirectNorm:
    def test_zero(self):
        assert direct_besov_norm(np.zeros(65), 0.5, 2) == 0.0

    @pytest.mark.parametrize("gamma,p", [(0.5, 2.0), (0.3, 1.0), (0.8, 5.0)])
    def test_affine(self, gamma, p):
        value = direct_besov_norm(grid(8), gamma, p)
        assert value == pytest.approx(affine_direct_norm(8, gamma, p), rel=1e-12)
        # close to the continuum value at fine resolution
        cont_lp = (1 / (p + 1)) ** (1 / p)
        assert abs(value - affine_direct_norm(8, gamma, p)) < 1e-12
        assert value < cont_lp + 1.0 + 1e-12

    def test_shift_invariant_modulus(self):
        f = sample_matrix(ProcessParams(0.5, 1.0), DyadicGrid(6), 1, seed=0)[0]
        lp = (np.sum(np.abs(f[:-1]) ** 2) / 64) ** 0.5
        assert direct_besov_norm(f + 1.0, 0.5, 2) - direct_besov_norm(f, 0.5, 2) == pytest.approx(
            (np.sum(np.abs(f[:-1] + 1) ** 2) / 64) ** 0.5 - lp, abs=1e-12
        )

    def test_domain(self):
        with pytest.raises(DomainError):
            direct_besov_norm(np.zeros(5), 1.0, 2)
        with pytest.raises(DomainError):
            direct_besov_norm(np.zeros(5), 0.5, 0.5)


# ratio of direct to sequence norm, bBm (0.6, 0.9), J = 10, gamma 0.5, p = 6,
# 100 paths from seed 11
RATIO_LO, RATIO_HI = 0.7944002661100722, 1.9696622976443827


@pytest.mark.slow
class TestNormEquivalence:
    def ratios(self, seed):
        X = sample_matrix(ProcessParams(0.6, 0.9), DyadicGrid(10), 100, seed=seed)
        return direct_besov_norm(X, 0.5, 6) / besov_seq_norm(schauder_coeffs(X), 0.5, 6).seq_norm

    def test_recorded_bracket(self):
        r = self.ratios(11)
        assert r.min() == pytest.approx(RATIO_LO, rel=1e-9)
        assert r.max() == pytest.approx(RATIO_HI, rel=1e-9)

    def test_fresh_paths_stay_in_bracket(self):
        r = self.ratios(12)
        print(f"ratio range on fresh paths: [{r.min():.4f}, {r.max():.4f}]")
        assert RATIO_LO / 1.25 <= r.min() and r.max() <= RATIO_HI * 1.25


class TestHolderNorm:
    def test_zero(self):
        assert holder_norm(np.zeros(17), 0.5) == 0.0

    def test_identity_function(self):
        assert holder_norm(grid(8), 0.5) == pytest.approx(2.0, rel=1e-15)

    def test_brute_force(self):
        rng = np.random.default_rng(9)
        f = rng.standard_normal(2**5 + 1)
        t = grid(5)
        best = max(abs(f[i] - f[l]) / abs(t[i] - t[l]) ** 0.4
                   for i in range(33) for l in range(33) if i != l)
        assert holder_norm(f, 0.4) == pytest.approx(np.max(np.abs(f)) + best, rel=1e-14)

    def test_monotone_in_gamma(self):
        f = sample_matrix(ProcessParams(0.7, 0.9), DyadicGrid(8), 1, seed=2)[0]
        values = [holder_norm(f, g) for g in (0.01, 0.2, 0.4, 0.6)]
        assert values == sorted(values)
        # small gamma approaches sup |f| + oscillation
        osc = np.max(f) - np.min(f)
        assert values[0] == pytest.approx(np.max(np.abs(f)) + osc, rel=0.05)

    def test_trend_in_resolution(self):
        P = ProcessParams(0.8, 0.7)
        x = sample_matrix(P, DyadicGrid(11), 4, seed=3)
        coarse, fine = x[:, ::16], x
        below = holder_norm(fine, P.hurst - 0.25) / holder_norm(coarse, P.hurst - 0.25)
        above = holder_norm(fine, P.hurst + 0.2) / holder_norm(coarse, P.hurst + 0.2)
        print(f"growth from J=7 to J=11: below index {below.mean():.3f}, above {above.mean():.3f}")
        assert below.mean() <= 1.2
        assert above.mean() >= 1.4
