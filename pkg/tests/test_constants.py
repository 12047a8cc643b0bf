import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from andersonlab.constants import (
    _Quotient,
    cubic_ground_state,
    intersection_rate_constant,
    kappa_shooting_oracle,
    m_from_kappa,
    optimize_kappa,
    rate_constants,
    relation_residual,
    rho_from_kappa,
    riesz_fourier_constant,
)


class TestFormulas:
    def test_rho_sigma0(self):
        assert rho_from_kappa(2, 0.0, 0.7) == 0.7  # exponents collapse, 0^0 = 1

    def test_rho_sigma2(self):
        assert abs(rho_from_kappa(2, 2.0, 0.6) - 0.3) < 1e-15

    def test_rho_11_golden(self):
        # kappa(1,1) = 1/sqrt(3) reproduces rho(1,1) = 3/(8 sqrt(2))
        got = rho_from_kappa(1, 1.0, 1 / math.sqrt(3))
        assert abs(got - 3 / (8 * math.sqrt(2))) < 1e-12

    def test_m_sigma0(self):
        assert m_from_kappa(3, 0.0, 1.0) == 1.0
        assert rho_from_kappa(3, 0.0, 1.0) == m_from_kappa(3, 0.0, 1.0) ** 2

    def test_m_sigma2(self):
        kappa = 0.42
        assert abs(m_from_kappa(2, 2.0, kappa) - 0.5 * kappa) < 1e-15
        assert relation_residual(2, 2.0, kappa) < 1e-15

    def test_m_11_closure(self):
        kappa = 1 / math.sqrt(3)
        ref = (3 / 4) * (1 / 2) ** (1 / 3) * kappa ** (2 / 3)
        assert abs(m_from_kappa(1, 1.0, kappa) - ref) < 1e-15
        assert relation_residual(1, 1.0, kappa) < 1e-12

    def test_fourier_constant(self):
        # C_{2,1} = 1/(2 pi): the planar Coulomb kernel transform
        assert abs(riesz_fourier_constant(2, 1.0) - 1 / (2 * math.pi)) < 1e-15

    def test_domain_guards(self):
        with pytest.raises(ValueError):
            rho_from_kappa(2, 1.0, -1.0)
        with pytest.raises(ValueError):
            riesz_fourier_constant(2, 2.0)


@settings(max_examples=80, deadline=None)
@given(
    d=st.integers(1, 3),
    frac=st.floats(0.0, 1.0),
    kappa=st.floats(0.01, 100.0),
)
def test_relation_closure_property(d, frac, kappa):
    sigma = frac * min(2, d)
    assert relation_residual(d, sigma, kappa) <= 1e-12


class TestOptimizer:
    def test_sigma0_trivial(self):
        for d in (1, 2, 3):
            res = optimize_kappa(d, 0.0)
            assert res.kappa == 1.0 and res.rho == 1.0 and res.M == 1.0

    def test_kappa22_vs_shooting(self, kappa22):
        oracle = kappa_shooting_oracle()
        assert abs(kappa22.kappa - oracle) / oracle < 1e-3

    def test_kappa11_inverts_rho(self):
        res = optimize_kappa(1, 1.0, resolution=400)
        assert abs(res.kappa - 1 / math.sqrt(3)) * math.sqrt(3) < 1e-3

    def test_monotone_refinement_and_cauchy(self, kappa22):
        for vc in (kappa22, optimize_kappa(2, 1.0, resolution=400),
                   optimize_kappa(1, 0.5, resolution=400)):
            levels = vc.levels
            assert all(b >= a - 1e-10 * vc.kappa for a, b in zip(levels, levels[1:]))
            assert abs(levels[-1] - levels[-2]) / vc.kappa < 1e-3

    def test_scale_invariance(self):
        # J is exactly invariant under f -> c f and under dilating the grid
        # together with the profile
        prob = _Quotient(2, 1.0, 200, 12.0)
        phi = np.exp(-prob.r ** 2 / 3) * (1 + 0.2 * np.sin(prob.r))
        J1 = prob.value(phi)
        assert abs(prob.value(3.7 * phi) - J1) < 1e-12 * J1
        c = 1.9
        prob2 = _Quotient(2, 1.0, 200, c * 12.0)
        J2 = prob2.value(np.exp(-((prob2.r / c) ** 2) / 3) * (1 + 0.2 * np.sin(prob2.r / c)))
        assert abs(J2 - J1) < 1e-12 * J1

    def test_invalid_domain(self):
        with pytest.raises(ValueError):
            optimize_kappa(2, 2.5)
        with pytest.raises(ValueError):
            optimize_kappa(4, 1.0)


class TestShooting:
    def test_ground_state_height(self):
        a_star, r, phi = cubic_ground_state(bisections=60)
        assert 2.2 < a_star < 2.21
        assert phi[0] == pytest.approx(a_star, rel=1e-6)
        assert np.all(np.diff(phi) < 1e-9)  # monotone decay

    def test_pohozaev_identities(self):
        # for the planar cubic ground state: |grad Q|^2 = |Q|^2 = |Q|^4/2
        _, r, phi = cubic_ground_state(bisections=60)
        i2 = np.trapezoid(phi**2 * r, r)
        i4 = np.trapezoid(phi**4 * r, r)
        igrad = np.trapezoid(np.gradient(phi, r) ** 2 * r, r)
        assert abs(igrad - i2) / i2 < 1e-3
        assert abs(i4 - 2 * i2) / i4 < 1e-3

    def test_oracle_vs_mass_formula(self):
        # quotient route equals 2 / ||Q||_2^2
        _, r, phi = cubic_ground_state(bisections=60)
        i2 = np.trapezoid(phi**2 * r, r)
        assert abs(kappa_shooting_oracle() - 1 / (math.pi * i2)) / kappa_shooting_oracle() < 2e-3


class TestRateConstants:
    def test_exponent_sigma1(self):
        rc = rate_constants(2, 1.0, 1.0, kappa=1.27)
        assert rc.lifshitz_exponent == 1.5

    def test_lifshitz_constant_11(self):
        # 1/(2 rho(1,1)) = 4 sqrt(2) / 3
        rc = rate_constants(1, 1.0, 1.0, kappa=1 / math.sqrt(3))
        assert abs(rc.lifshitz_constant - 4 * math.sqrt(2) / 3) < 1e-12

    def test_white_noise_plane(self):
        # (d, sigma) = (2, 2), nu = 1: the tail constant is 1/kappa itself
        kappa = 0.1709
        rc = rate_constants(2, 2.0, 1.0, kappa=kappa)
        assert abs(rc.lifshitz_constant - 1 / kappa) < 1e-12
        assert rc.lifshitz_exponent == 1.0
        assert rc.intersection_rate is None

    def test_sigma2_intersection_domain_error(self):
        with pytest.raises(ValueError):
            intersection_rate_constant(2, 2.0, 0.5)

    def test_3d_conjecture(self):
        kappa = 0.8
        rc = rate_constants(3, 3.0, 1.0, kappa=kappa)
        assert abs(rc.lifshitz_constant - 2 * math.sqrt(2) / (3 * math.sqrt(3) * kappa)) < 1e-15
        assert rc.lifshitz_exponent == 0.5
        assert rc.intersection_rate is None

    def test_guards(self):
        with pytest.raises(ValueError):
            rate_constants(2, 1.0, -1.0, 0.5)
        with pytest.raises(ValueError):
            rate_constants(3, 2.5, 1.0, 0.5)
