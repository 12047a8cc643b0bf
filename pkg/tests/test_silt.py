import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from andersonlab.paths import sample_paths
from andersonlab.silt import (
    RegionDescriptor,
    exp_moment,
    expected_silt,
    silt_chi,
    silt_mollified,
    tail_rate,
)


class TestRegions:
    def test_validation(self):
        with pytest.raises(ValueError):
            RegionDescriptor.triangle(0.5, 0.2)
        with pytest.raises(ValueError):
            RegionDescriptor.rectangle(0.0, 0.5, 0.8, 0.6)
        with pytest.raises(ValueError):
            RegionDescriptor("disk", (0.0, 1.0))

    def test_guard_reports_required_steps(self):
        pe = sample_paths("bridge", 1.0, 2, 100, 4, seed=0)
        with pytest.raises(ValueError, match="n_t >= 1000"):
            silt_chi(pe, 0.01, RegionDescriptor.triangle(0, 1))

    def test_off_grid_region(self):
        pe = sample_paths("bridge", 1.0, 2, 100, 4, seed=0)
        with pytest.raises(ValueError, match="time grid"):
            silt_chi(pe, 0.2, RegionDescriptor.triangle(0, 0.5034))

    def test_single_ensemble_rectangle_ordering(self):
        pe = sample_paths("bridge", 1.0, 2, 100, 4, seed=0)
        with pytest.raises(ValueError, match="b <= c"):
            silt_chi(pe, 0.2, RegionDescriptor.rectangle(0.0, 0.6, 0.3, 1.0))


class TestChi:
    def test_flat_kernel_limit(self):
        # eps = 10 t: every kernel value is ~ p_eps(0), chi ~ t^2/(4 pi eps);
        # the ensemble mean lands within 2%, single paths deviate a bit more
        t, eps = 0.8, 8.0
        pe = sample_paths("bridge", t, 2, 64, 200, seed=5)
        chi = silt_chi(pe, eps, RegionDescriptor.triangle(0, t))
        flat = t**2 / (4 * math.pi * eps)
        assert abs(chi.mean() - flat) < 0.02 * flat
        assert np.all(np.abs(chi - flat) < 0.05 * flat)

    def test_multi_eps_columns_match_single(self):
        pe = sample_paths("bridge", 1.0, 2, 80, 16, seed=6)
        tri = RegionDescriptor.triangle(0, 1)
        both = silt_chi(pe, [0.4, 0.2], tri)
        assert np.allclose(both[:, 0], silt_chi(pe, 0.4, tri), rtol=0, atol=0)
        assert np.allclose(both[:, 1], silt_chi(pe, 0.2, tri), rtol=0, atol=0)

    def test_mutual_requires_matching_shape(self):
        a = sample_paths("motion", 1.0, 2, 50, 8, seed=1)
        b = sample_paths("motion", 1.0, 2, 25, 8, seed=2)
        with pytest.raises(ValueError, match="match"):
            silt_chi(a, 0.3, RegionDescriptor.rectangle(0, 0.5, 0, 1.0), second_ensemble=b)

    def test_silt_mollified_samples(self):
        pe = sample_paths("bridge", 1.0, 2, 50, 12, seed=3)
        tri = RegionDescriptor.triangle(0, 1)
        samples = silt_mollified(pe, 0.3, tri)
        assert len(samples) == 12
        ref = expected_silt("bridge", 1.0, 0.3, tri)
        for s in samples:
            assert s.chi >= 0
            assert s.renorm == ref
            assert math.isfinite(s.zeta)


class TestExpectedSilt:
    def test_motion_triangle_value(self):
        # (1/2pi) [(1.01) ln(101) - 1] = 0.582709492560415...
        got = expected_silt("motion", 1.0, 0.01, RegionDescriptor.triangle(0, 1))
        ref = (1.01 * math.log(101.0) - 1.0) / (2 * math.pi)
        assert abs(got - ref) < 1e-14
        assert abs(got - 0.5827094925604152) < 1e-12

    def test_degenerate_triangle(self):
        for process in ("motion", "bridge"):
            assert expected_silt(process, 1.0, 0.05, RegionDescriptor.triangle(0.4, 0.4)) == 0.0

    def test_bridge_full_triangle_asymptote(self):
        # as eps -> 0 the full-triangle mean approaches (t/2pi)(log(1/eps) + log t)
        for t in (0.7, 1.0, 2.3):
            gaps = []
            for eps in (1e-3, 1e-5, 1e-7):
                exact = expected_silt("bridge", t, eps, RegionDescriptor.triangle(0, t))
                asym = t * (math.log(1 / eps) + math.log(t)) / (2 * math.pi)
                gaps.append(abs(exact - asym))
            assert gaps[0] > gaps[1] > gaps[2]
            assert gaps[2] < 1e-5

    def test_motion_renormalization_consistency(self):
        # E[beta(triangle)] - (D/2pi)(log eps^-1 + log D - 1) -> 0, decreasing
        delta = 0.8
        prev = math.inf
        for eps in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
            exact = expected_silt("motion", 1.0, eps, RegionDescriptor.triangle(0.1, 0.9))
            asym = delta * (math.log(1 / eps) + math.log(delta) - 1) / (2 * math.pi)
            gap = abs(exact - asym)
            assert gap < prev
            prev = gap
        assert prev < 1e-5

    def test_invalid_region_order(self):
        with pytest.raises(ValueError):
            expected_silt("motion", 1.0, 0.1, RegionDescriptor.rectangle(0.0, 0.6, 0.3, 0.9))

    def test_region_exceeds_horizon(self):
        with pytest.raises(ValueError):
            expected_silt("bridge", 1.0, 0.1, RegionDescriptor.triangle(0.0, 1.5))

    def test_quadrature_oracle_spot(self):
        # independent dblquad of the defining integrand (full matrix in acceptance)
        from scipy import integrate

        t, eps = 1.0, 1e-3
        val, _ = integrate.dblquad(
            lambda s, r: 1.0 / (2 * math.pi * (eps + (s - r) - (s - r) ** 2 / t)),
            0.2, 0.7, lambda r: r, lambda r: 0.7, epsabs=1e-13, epsrel=1e-13,
        )
        got = expected_silt("bridge", t, eps, RegionDescriptor.triangle(0.2, 0.7))
        assert abs(got - val) / val < 1e-10


@settings(max_examples=60, deadline=None)
@given(
    process=st.sampled_from(["motion", "bridge"]),
    t=st.floats(0.3, 3.0),
    eps=st.floats(1e-6, 0.5),
    cuts=st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0)),
)
def test_expected_silt_additivity(process, t, eps, cuts):
    # triangle(a,c) = triangle(a,b) + triangle(b,c) + rectangle(a,b,b,c):
    # the closed forms must satisfy the exact decomposition of the region
    a, b, c = sorted(v * t for v in cuts)
    whole = expected_silt(process, t, eps, RegionDescriptor.triangle(a, c))
    parts = (
        expected_silt(process, t, eps, RegionDescriptor.triangle(a, b))
        + expected_silt(process, t, eps, RegionDescriptor.triangle(b, c))
        + expected_silt(process, t, eps, RegionDescriptor.rectangle(a, b, b, c))
    )
    assert abs(whole - parts) <= 1e-11 * max(1.0, abs(whole))


class TestDistributionalIdentities:
    def test_triangle_scaling(self):
        # chi^t(triangle(0,t)) equals t * chi^1_{eps/t}(triangle(0,1)) in law
        t, eps, m, n_t = 2.0, 0.1, 10_000, 400
        a = sample_paths("bridge", t, 2, n_t, m, seed=31)
        s1 = silt_chi(a, eps, RegionDescriptor.triangle(0, t))
        b = sample_paths("bridge", 1.0, 2, n_t, m, seed=32)
        s2 = t * silt_chi(b, eps / t, RegionDescriptor.triangle(0, 1))
        assert stats.ks_2samp(s1, s2).pvalue > 0.01

    def test_reversibility(self):
        # chi(rect(a,b,c,d)) = chi(rect(t-d, t-c, t-b, t-a)) in law for bridges
        t, eps, m, n_t = 1.0, 0.08, 10_000, 125
        a = sample_paths("bridge", t, 2, n_t, m, seed=41)
        b = sample_paths("bridge", t, 2, n_t, m, seed=42)
        r1 = RegionDescriptor.rectangle(0.0, 0.4, 0.6, 0.92)
        r2 = RegionDescriptor.rectangle(t - 0.92, t - 0.6, t - 0.4, t - 0.0)
        s1 = silt_chi(a, eps, r1)
        s2 = silt_chi(b, eps, r2)
        assert stats.ks_2samp(s1, s2).pvalue > 0.01

    def test_alpha_beta_mean_identity(self):
        # E[beta(rect(a,b,b,d))] = E[alpha([0,b-a] x [0,d-b])] within 3 sigma
        t, eps, m, n_t = 1.0, 0.08, 20_000, 200
        a_, b_, d_ = 0.2, 0.5, 0.9
        mot = sample_paths("motion", t, 2, n_t, m, seed=51)
        beta = silt_chi(mot, eps, RegionDescriptor.rectangle(a_, b_, b_, d_))
        m1 = sample_paths("motion", t, 2, n_t, m, seed=52)
        m2 = sample_paths("motion", t, 2, n_t, m, seed=53)
        alpha = silt_chi(
            m1, eps, RegionDescriptor.rectangle(0.0, b_ - a_, 0.0, d_ - b_), second_ensemble=m2
        )
        se = math.hypot(beta.std(ddof=1) / math.sqrt(m), alpha.std(ddof=1) / math.sqrt(m))
        assert abs(beta.mean() - alpha.mean()) < 3 * se
        # and the exact mutual closed form agrees with the motion rectangle form
        ref_beta = expected_silt("motion", t, eps, RegionDescriptor.rectangle(a_, b_, b_, d_))
        ref_alpha = expected_silt(
            "mutual", t, eps, RegionDescriptor.rectangle(0.0, b_ - a_, 0.0, d_ - b_)
        )
        assert abs(ref_beta - ref_alpha) < 1e-14

    def test_moment_comparison_motion_below_bridge(self):
        # sample moments 1..3 of the motion triangle sit below the bridge's
        t, eps, m, n_t = 1.0, 0.05, 40_000, 200
        tri = RegionDescriptor.triangle(0, t)
        mot = silt_chi(sample_paths("motion", t, 2, n_t, m, seed=61), eps, tri)
        bri = silt_chi(sample_paths("bridge", t, 2, n_t, m, seed=62), eps, tri)
        for p in (1, 2, 3):
            a, b = mot**p, bri**p
            se = math.hypot(a.std(ddof=1), b.std(ddof=1)) / math.sqrt(m)
            assert a.mean() < b.mean() + 3 * se


class TestExpMoment:
    def test_zero_parameter(self):
        res = exp_moment(np.random.default_rng(0).normal(size=1000), 0.0)
        assert res.estimate == 1.0 and res.lo == 1.0 and res.hi == 1.0

    def test_jensen(self):
        zeta = np.random.default_rng(1).normal(size=20_000)
        for tp in (0.3, 1.0):
            res = exp_moment(zeta, tp)
            assert res.estimate >= math.exp(tp * zeta.mean()) - (res.hi - res.lo)

    def test_overflow_reported(self):
        res = exp_moment(np.array([1.0, 2000.0]), 1.0)
        assert res.overflow and res.estimate == math.inf

    def test_heavy_tail_flag(self):
        z = np.zeros(1000)
        z[0] = 50.0
        assert exp_moment(z, 1.0).heavy_tail
        assert not exp_moment(np.zeros(1000), 1.0).heavy_tail

    def test_empty(self):
        with pytest.raises(ValueError):
            exp_moment(np.array([]), 1.0)


@pytest.mark.slow
def test_tail_rate_trend_toward_critical(bridge_zeta_criterion2, kappa22):
    # fitted rate is negative and moves toward -1/kappa as the ladder slides
    # right (the asymptote itself is not reachable at desk scale)
    chi, renorm = bridge_zeta_criterion2
    zeta = chi - renorm
    kinv = 1.0 / kappa22.kappa
    left = tail_rate(zeta, np.linspace(0.2, 0.5, 4))
    right = tail_rate(zeta, np.linspace(0.5, 0.9, 4))
    assert right.rate < left.rate < 0
    assert abs(right.rate + kinv) < abs(left.rate + kinv)


@pytest.mark.slow
def test_exp_moment_stable_under_eps_halving():
    # E[e^{t zeta_eps}] at t = 0.5 moves less than the combined bootstrap
    # intervals when eps -> eps/2 (same paths, both scales in one pass)
    from andersonlab.experiments import zeta_ensemble

    chi, renorms = zeta_ensemble(1.0, [0.005, 0.0025], 20_000, master_seed=4321)
    res = [exp_moment(chi[:, j] - renorms[j], 0.5, seed=1) for j in range(2)]
    assert not (res[0].hi < res[1].lo or res[1].hi < res[0].lo)


class TestTailRate:
    def test_synthetic_exponential(self):
        rate = 2.5
        z = np.random.default_rng(5).exponential(1 / rate, size=200_000)
        fit = tail_rate(z, np.linspace(0.2, 1.6, 8))
        assert abs(fit.rate + rate) < 2 * max(fit.stderr, 0.01)

    def test_degenerate_ladder_rejected(self):
        z = np.random.default_rng(6).exponential(1.0, size=1000) + 5.0
        with pytest.raises(ValueError, match="attained counts"):
            tail_rate(z, [0.5, 1.0, 2.0])  # all below the sample minimum

    def test_insufficient_exceedances(self):
        z = np.random.default_rng(7).exponential(1.0, size=200)
        with pytest.raises(ValueError):
            tail_rate(z, [5.0, 6.0])
