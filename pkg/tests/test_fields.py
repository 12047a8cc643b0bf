import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from andersonlab.fields import (
    mollify,
    renorm_constant,
    sample_mollified,
    sample_white_noise,
)
from andersonlab.grids import GridSpec


def heat_kernel(x2, eps):
    # continuum p_{eps/2}(x): convolution kernel of the mollifier
    return np.exp(-x2 / eps) / (math.pi * eps)


class TestGridSpec:
    def test_spacing(self):
        g = GridSpec(1.0, 3)
        assert g.h == 0.25
        assert np.allclose(g.coords(), [-0.25, 0.0, 0.25])

    def test_invalid(self):
        with pytest.raises(ValueError):
            GridSpec(-1.0, 3)
        with pytest.raises(ValueError):
            GridSpec(1.0, 0)


class TestWhiteNoise:
    def test_std_scaling(self):
        # grid(L=1, n=3): std should be 1/h = 4
        g = GridSpec(1.0, 3)
        draws = np.stack([sample_white_noise(g, s) for s in range(4000)])
        assert abs(draws.std() - 4.0) < 0.08

    def test_determinism(self):
        g = GridSpec(2.0, 8)
        a = sample_white_noise(g, 123)
        b = sample_white_noise(g, 123)
        assert np.array_equal(a, b)

    def test_node_independence(self):
        # empirical correlation between distinct nodes ~ N(0, 1/sqrt(n_draws))
        g = GridSpec(1.0, 3)
        draws = np.stack([sample_white_noise(g, s).ravel() for s in range(10_000)])
        corr = np.corrcoef(draws.T)
        off = corr[~np.eye(9, dtype=bool)]
        assert np.abs(off).max() < 3.0 / math.sqrt(10_000)


class TestRenormConstant:
    def test_unit(self):
        assert renorm_constant(1.0) == 0.0

    def test_forced_value(self):
        assert abs(renorm_constant(math.exp(-2 * math.pi)) - 1.0) < 1e-14

    def test_high_precision(self):
        # (ln 100) / (2 pi) = 0.732935598879427740... (30-digit evaluation)
        assert abs(renorm_constant(0.01) - 0.732935598879427741) < 1e-12

    def test_domain(self):
        with pytest.raises(ValueError):
            renorm_constant(0.0)
        with pytest.raises(ValueError):
            renorm_constant(-1.0)


class TestMollify:
    def test_constant_preserved(self):
        g = GridSpec(2.0, 33)
        field = np.full((33, 33), 3.7)
        out = mollify(field, g, eps=0.05)
        assert np.allclose(out.values, 3.7, atol=1e-12)

    def test_large_eps_kills_fluctuations(self):
        g = GridSpec(2.0, 33)
        raw = sample_white_noise(g, 7)
        out = mollify(raw, g, eps=3.0)
        # spatial mean survives, fluctuations are tiny next to the raw field's
        assert out.values.std() < 0.05 * raw.std()

    def test_resolution_guard(self):
        g = GridSpec(1.0, 63)
        with pytest.raises(ValueError, match="4 h\\^2"):
            mollify(np.zeros((63, 63)), g, eps=0.5 * 4 * g.h**2)

    @pytest.mark.parametrize("eps_factor", [10.0, 100.0])
    def test_impulse_matches_heat_kernel(self, eps_factor):
        # single-node impulse -> h^2 p_{eps/2} at interior nodes within 1%
        g = GridSpec(2.0, 127)
        eps = eps_factor * g.h**2
        raw = np.zeros((127, 127))
        c = 63
        raw[c, c] = 1.0
        out = mollify(raw, g, eps).values
        x = g.coords()
        x2 = (x[:, None] - x[c]) ** 2 + (x[None, :] - x[c]) ** 2
        ref = g.h**2 * heat_kernel(x2, eps)
        mask = ref > 0.01 * ref.max()
        rel = np.abs(out[mask] - ref[mask]) / ref[mask]
        assert rel.max() < 0.01

    def test_mass_preserved(self):
        g = GridSpec(2.0, 64)
        raw = sample_white_noise(g, 11)
        out = mollify(raw, g, eps=0.05)
        assert abs(out.values.sum() - raw.sum()) <= 1e-10 * abs(raw.sum())

    def test_determinism_triple(self):
        g = GridSpec(2.0, 16)
        a = sample_mollified(g, 0.2, 99)
        b = sample_mollified(g, 0.2, 99)
        assert np.array_equal(a.values, b.values)
        assert a.c_eps == b.c_eps

    def test_centered_over_realizations(self):
        g = GridSpec(2.0, 16)
        means = np.array([sample_mollified(g, 0.1, s).values.mean() for s in range(3000)])
        se = means.std(ddof=1) / math.sqrt(means.size)
        assert abs(means.mean()) < 3 * se


class TestVarianceLaw:
    @pytest.mark.parametrize("eps_pick", ["fine", "coarse"])
    def test_interior_variance(self, eps_pick):
        # interior variance matches 1/(2 pi eps) within 5% for
        # eps in [10 h^2, L^2/100]
        g = GridSpec(2.0, 63)
        eps = 10 * g.h**2 if eps_pick == "fine" else g.L**2 / 100
        margin = 2.0 * math.sqrt(eps)
        mask = g.boundary_distance() >= margin
        assert mask.any()
        acc = 0.0
        n_draws = 1500
        for s in range(n_draws):
            vals = sample_mollified(g, eps, s).values
            acc += float((vals[mask] ** 2).sum())
        var = acc / (n_draws * mask.sum())
        target = 1.0 / (2 * math.pi * eps)
        assert abs(var - target) / target < 0.05

    def test_shift_covariance(self):
        # covariance between interior nodes depends only on the lag
        g = GridSpec(2.0, 63)
        eps = 0.004
        margin = 5.0 * math.sqrt(eps)
        dist = g.boundary_distance()
        lag = 2
        draws = np.stack([sample_mollified(g, eps, s).values for s in range(4000)])
        prods = draws[:, :, :-lag] * draws[:, :, lag:]
        ok = (dist[:, :-lag] >= margin) & (dist[:, lag:] >= margin)
        i, j = np.nonzero(ok)
        half = len(i) // 2
        a = prods[:, i[:half], j[:half]].mean(axis=1)
        b = prods[:, i[half:], j[half:]].mean(axis=1)
        diff = a - b
        se = diff.std(ddof=1) / math.sqrt(len(diff))
        assert abs(diff.mean()) < 3 * se + 1e-12


@settings(max_examples=20, deadline=None)
@given(
    n=st.integers(8, 32),
    seed=st.integers(0, 2**63 - 1),
    eps_mult=st.floats(4.0, 50.0),
)
def test_mollified_determinism_property(n, seed, eps_mult):
    g = GridSpec(1.5, n)
    eps = eps_mult * g.h**2
    a = sample_mollified(g, eps, seed)
    b = sample_mollified(g, eps, seed)
    assert np.array_equal(a.values, b.values)
    assert np.all(np.isfinite(a.values))
