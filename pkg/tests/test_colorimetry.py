import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chromastat.colorimetry import (
    DECODE_KNOT,
    DEFAULT_EPS,
    ENCODE_KNOT,
    M_RGB_TO_XYZ,
    M_XYZ_TO_RGB,
    ColorMatchingFunctions,
    LinearRgb,
    SpectralDistribution,
    Tristimulus,
    UnitRgb,
    gamma_decode,
    gamma_encode,
    integrate_tristimulus,
    linear_rgb_to_xyz,
    load_cmf,
    read_cmf_csv,
    read_spd_csv,
    srgb_to_xyz,
    xyz_to_linear_rgb,
    xyz_to_srgb,
)
from chromastat.errors import DataFormatError, DomainError

import oracles

# Frozen from oracles.riemann_tristimulus_y100(*oracles.ramp_spd()) at 0.1 nm.
RAMP_XYZ_Y100 = (104.44886332854274, 100.0, 59.21846893704071)

# upper end of the sliver above the encode knot where the power branch
# still lies below the linear branch's value at the knot
GAMMA_OVERLAP_END = 0.00313080224491396


def flat_cmf(lo, hi, n=2, x=1.0, y=1.0, z=1.0):
    wl = np.linspace(lo, hi, n)
    return ColorMatchingFunctions.from_arrays(wl, np.full(n, x), np.full(n, y), np.full(n, z))


class TestSpectralDistribution:
    def test_rejects_unsorted(self):
        with pytest.raises(DomainError):
            SpectralDistribution([400, 400, 500], [1, 1, 1])

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            SpectralDistribution([400, 500], [1, -0.1])

    @pytest.mark.parametrize("wl,vals", [([400], [1]), ([400, 500], [1])])
    def test_rejects_bad_lengths(self, wl, vals):
        with pytest.raises(DomainError):
            SpectralDistribution(wl, vals)

    def test_cmf_grid_must_match(self):
        a = SpectralDistribution([400, 500], [1, 1])
        b = SpectralDistribution([400, 510], [1, 1])
        with pytest.raises(DomainError):
            ColorMatchingFunctions(a, a, b)


class TestIntegrate:
    def test_constant_over_300nm(self):
        spd = SpectralDistribution([400, 700], [1, 1])
        t = integrate_tristimulus(spd, flat_cmf(400, 700))
        assert t.y == pytest.approx(300.0, rel=1e-15)

    def test_linear_integrand_exact(self):
        spd = SpectralDistribution([0, 1], [0, 1])
        t = integrate_tristimulus(spd, flat_cmf(0, 1))
        assert t.x == 0.5

    def test_piecewise_linear_product_exact(self):
        # phi linear on each CMF interval, CMF constant: product piecewise linear
        wl = np.array([400.0, 450.0, 520.0, 600.0, 700.0])
        phi = SpectralDistribution(wl, [0.1, 2.0, 0.5, 1.5, 0.3])
        cmf = ColorMatchingFunctions.from_arrays(wl, np.full(5, 2.0), np.full(5, 1.0), np.full(5, 0.5))
        exact = sum((wl[i + 1] - wl[i]) * (phi.values[i] + phi.values[i + 1]) / 2 for i in range(4))
        t = integrate_tristimulus(phi, cmf)
        np.testing.assert_allclose(t.as_array(), [2 * exact, exact, 0.5 * exact], rtol=1e-12)

    def test_ramp_against_riemann_oracle(self, cmf):
        wl, vals = oracles.ramp_spd()
        t = integrate_tristimulus(SpectralDistribution(wl, vals), cmf, normalization="Y100")
        np.testing.assert_allclose(t.as_array(), RAMP_XYZ_Y100, rtol=1e-3)

    def test_frozen_ramp_values_match_live_oracle(self):
        wl, vals = oracles.ramp_spd()
        np.testing.assert_allclose(oracles.riemann_tristimulus_y100(wl, vals), RAMP_XYZ_Y100, rtol=1e-12)

    def test_spd_narrower_than_cmf(self, cmf):
        # spd support inside the CMF range, endpoints off the 1 nm grid
        spd = SpectralDistribution([500.5, 600.25], [1.0, 1.0])
        wl, ch = oracles.read_cmf_table()
        want = oracles.riemann_product([500.5, 600.25], [1.0, 1.0], wl, ch[1], step=0.01)
        assert integrate_tristimulus(spd, cmf).y == pytest.approx(want, rel=1e-4)

    def test_k_scales(self, cmf):
        spd = SpectralDistribution([400, 700], [1, 1])
        a = integrate_tristimulus(spd, cmf, k=1.0).as_array()
        b = integrate_tristimulus(spd, cmf, k=2.5).as_array()
        np.testing.assert_allclose(b, 2.5 * a, rtol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-3, 1e3))
    def test_homogeneity(self, alpha):
        cmf = load_cmf()
        wl, vals = oracles.ramp_spd()
        spd = SpectralDistribution(wl, vals)
        a = integrate_tristimulus(spd, cmf).as_array()
        b = integrate_tristimulus(spd.scaled(alpha), cmf).as_array()
        np.testing.assert_allclose(b, alpha * a, rtol=1e-12)

    def test_additivity(self, cmf, rng):
        wl = np.arange(380.0, 781.0, 5.0)
        p1, p2 = rng.random(wl.size), rng.random(wl.size)
        t1 = integrate_tristimulus(SpectralDistribution(wl, p1), cmf).as_array()
        t2 = integrate_tristimulus(SpectralDistribution(wl, p2), cmf).as_array()
        t12 = integrate_tristimulus(SpectralDistribution(wl, p1 + p2), cmf).as_array()
        np.testing.assert_allclose(t12, t1 + t2, rtol=1e-12)

    def test_no_overlap(self, cmf):
        with pytest.raises(DomainError, match="overlap"):
            integrate_tristimulus(SpectralDistribution([900, 1000], [1, 1]), cmf)

    def test_zero_channel_is_out_of_domain(self, cmf):
        # z-bar is zero beyond ~ 650 nm
        with pytest.raises(DomainError, match="Z"):
            integrate_tristimulus(SpectralDistribution([700, 800], [1, 1]), cmf)

    def test_zero_spectrum(self, cmf):
        with pytest.raises(DomainError):
            integrate_tristimulus(SpectralDistribution([400, 700], [0, 0]), cmf)

    def test_bad_normalization(self, cmf):
        with pytest.raises(DomainError):
            integrate_tristimulus(SpectralDistribution([400, 700], [1, 1]), cmf, normalization="Y1")


class TestMatrix:
    def test_published_first_row(self):
        assert list(M_XYZ_TO_RGB[0]) == [3.2406, -1.5372, -0.4986]

    def test_inverse(self):
        np.testing.assert_allclose(M_XYZ_TO_RGB @ M_RGB_TO_XYZ, np.eye(3), atol=1e-12)

    def test_ones_gives_row_sums(self):
        c = xyz_to_linear_rgb(Tristimulus(1, 1, 1))
        np.testing.assert_allclose(c.as_array(), [1.2048, 0.9484, 0.9087], atol=1e-14)

    def test_row_sums_back_to_ones(self):
        t = linear_rgb_to_xyz(LinearRgb(1.2048, 0.9484, 0.9087))
        np.testing.assert_allclose(t.as_array(), [1, 1, 1], rtol=1e-12)

    def test_inverse_of_m123(self):
        c = LinearRgb(*(M_XYZ_TO_RGB @ [1.0, 2.0, 3.0]))
        np.testing.assert_allclose(linear_rgb_to_xyz(c).as_array(), [1, 2, 3], rtol=1e-12)

    def test_zero_limit(self):
        np.testing.assert_array_equal(M_XYZ_TO_RGB @ np.zeros(3), 0.0)

    def test_negative_xyz_rejected(self):
        with pytest.raises(DomainError):
            linear_rgb_to_xyz(LinearRgb(-1.0, 0.0, 0.0))

    def test_round_trip(self, rng):
        for xyz in rng.uniform(0.01, 2.0, (100, 3)):
            back = linear_rgb_to_xyz(xyz_to_linear_rgb(Tristimulus(*xyz))).as_array()
            np.testing.assert_allclose(back, xyz, rtol=1e-10)

    def test_linearity(self, rng):
        for _ in range(100):
            x, y = rng.uniform(0.01, 2.0, (2, 3))
            a, b = rng.uniform(0.1, 3.0, 2)
            lhs = xyz_to_linear_rgb(Tristimulus(*(a * x + b * y))).as_array()
            rhs = a * xyz_to_linear_rgb(Tristimulus(*x)).as_array() + b * xyz_to_linear_rgb(
                Tristimulus(*y)
            ).as_array()
            np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


class TestGamma:
    def test_endpoints(self):
        assert gamma_encode(0.0) == 0.0
        assert gamma_encode(1.0) == 1.0
        assert gamma_decode(0.0) == 0.0
        assert gamma_decode(1.0) == 1.0

    def test_knot(self):
        lin = 323 * 0.0031308 / 25
        assert gamma_encode(0.0031308) == lin
        assert lin == pytest.approx(0.0404500, abs=1e-7)
        power = (211 * 0.0031308 ** (5 / 12) - 11) / 200
        assert abs(power - lin) <= 1e-4

    def test_decode_knot_is_derived(self):
        assert DECODE_KNOT == gamma_encode(ENCODE_KNOT)

    def test_mid_gray(self):
        assert gamma_encode(0.2) == pytest.approx(0.4845, abs=5e-5)

    def test_round_trips_on_grid(self):
        g = np.linspace(0.0, 1.0, 10_001)
        assert np.abs(gamma_decode(gamma_encode(g)) - g).max() <= 1e-12
        assert np.abs(gamma_encode(gamma_decode(g)) - g).max() <= 1e-12

    def test_round_trip_half(self):
        assert gamma_decode(gamma_encode(0.5)) == pytest.approx(0.5, abs=1e-12)

    @given(st.floats(0.0, 1.0))
    def test_round_trip_property(self, u):
        if ENCODE_KNOT < u <= GAMMA_OVERLAP_END:
            # power branch dips ~2.9e-8 below the linear branch here; not injective
            assert abs(gamma_decode(gamma_encode(u)) - u) < 3e-9
        else:
            assert abs(gamma_decode(gamma_encode(u)) - u) <= 1e-12
        assert abs(gamma_encode(gamma_decode(u)) - u) <= 1e-12

    def test_increasing_on_grid(self):
        g = np.linspace(0.0, 1.0, 10_001)
        assert np.all(np.diff(gamma_encode(g)) > 0)

    def test_overlap_sliver(self):
        # documented non-monotone sliver just above the knot
        assert gamma_encode(GAMMA_OVERLAP_END * (1 - 1e-12)) < gamma_encode(ENCODE_KNOT)
        assert gamma_encode(GAMMA_OVERLAP_END * (1 + 1e-9)) > gamma_encode(ENCODE_KNOT)

    @pytest.mark.parametrize("bad", [-1e-9, 1.0000001, math.nan])
    def test_out_of_range(self, bad):
        with pytest.raises(DomainError):
            gamma_encode(bad)
        with pytest.raises(DomainError):
            gamma_decode(bad)


class TestSrgb:
    def test_interior_round_trip(self, rng):
        for xyz in rng.uniform(0.05, 0.3, (200, 3)):
            t = Tristimulus(*xyz)
            if not xyz_to_linear_rgb(t).in_gamut:
                continue
            c = xyz_to_srgb(t)
            assert not c.clamped
            np.testing.assert_allclose(srgb_to_xyz(c).as_array(), xyz, rtol=1e-9)

    def test_out_of_gamut_flag(self):
        # pure spectral-ish green: negative linear red
        c = xyz_to_srgb(Tristimulus(0.1, 0.6, 0.1))
        assert c.clamped
        assert 0 < c.u < 1

    def test_bright_clamped_to_open_interval(self):
        c = xyz_to_srgb(Tristimulus(5, 5, 5))
        assert c.clamped
        np.testing.assert_allclose(c.as_array(), 1 - DEFAULT_EPS)

    def test_gray_04(self):
        lin = M_XYZ_TO_RGB @ [0.4, 0.4, 0.4]
        want = [(211 * v ** (5 / 12) - 11) / 200 for v in lin]
        np.testing.assert_allclose(xyz_to_srgb(Tristimulus(0.4, 0.4, 0.4)).as_array(), want, rtol=1e-15)


class TestUnitRgb:
    def test_clamps_on_construction(self):
        c = UnitRgb(0.0, 1.0, 0.5)
        assert c.clamped
        assert (c.u, c.v, c.w) == (DEFAULT_EPS, 1 - DEFAULT_EPS, 0.5)

    def test_interior_untouched(self):
        c = UnitRgb(1e-9, 0.5, 0.999999999)
        assert not c.clamped and c.u == 1e-9

    def test_nan_rejected(self):
        with pytest.raises(DomainError):
            UnitRgb(math.nan, 0.5, 0.5)

    def test_tristimulus_positive(self):
        with pytest.raises(DomainError):
            Tristimulus(0.0, 1.0, 1.0)


class TestFiles:
    def test_bundled_cmf(self, cmf):
        assert cmf.wavelengths[0] == 360 and cmf.wavelengths[-1] == 830
        i = int(np.flatnonzero(cmf.wavelengths == 555)[0])
        assert cmf.ybar.values[i] == 1.0

    def test_env_override(self, tmp_path, monkeypatch):
        p = tmp_path / "c.csv"
        p.write_text("wavelength_nm,xbar,ybar,zbar\n400,1,1,1\n700,1,1,1\n")
        monkeypatch.setenv("CHROMASTAT_CMF", str(p))
        assert load_cmf().wavelengths.tolist() == [400, 700]

    def test_bad_header(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("wl,x,y,z\n400,1,1,1\n700,1,1,1\n")
        with pytest.raises(DataFormatError, match="line 1"):
            read_cmf_csv(p)

    def test_bad_row_reports_line(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("wavelength_nm,value\n400,1\n500,abc\n")
        with pytest.raises(DataFormatError, match="line 3"):
            read_spd_csv(p)

    def test_nonmonotone(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("wavelength_nm,value\n500,1\n400,1\n")
        with pytest.raises(DataFormatError):
            read_spd_csv(p)
