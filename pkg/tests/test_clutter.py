import numpy as np
import pytest

from subpixdet.clutter import (
    NoiseField, IndefiniteCovarianceError, sample_white, synthesize_fbm,
    remove_mean, estimate_autocovariance, assemble_window_covariance,
    white_covariance, write_pgm,
)


class TestSampleWhite:
    def test_reproducible(self):
        a = sample_white(1.0, (16, 16), seed=7)
        b = sample_white(1.0, (16, 16), seed=7)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.kind == "white" and a.sigma == 1.0

    def test_scale_equivariant(self):
        a = sample_white(1.0, (16, 16), seed=7)
        b = sample_white(2.5, (16, 16), seed=7)
        np.testing.assert_allclose(b.values, 2.5 * a.values, rtol=1e-15)

    def test_moments(self):
        f = sample_white(3.0, (512, 512), seed=0)
        assert abs(f.values.mean()) < 0.05
        assert f.values.std() == pytest.approx(3.0, rel=0.01)

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            sample_white(0.0, (8, 8), seed=0)
        with pytest.raises(ValueError):
            sample_white(-1.0, (8, 8), seed=0)


def radial_psd_slope(field):
    """Log-log slope of the radially binned power spectrum."""
    n = field.shape[0]
    spec = np.abs(np.fft.fft2(field)) ** 2
    f = np.fft.fftfreq(n)
    radius = np.hypot(f[:, None], f[None, :])
    mask = (radius > 2 / n) & (radius < 0.25)
    bins = np.linspace(np.log(2 / n), np.log(0.25), 12)
    which = np.digitize(np.log(radius[mask]), bins)
    logr, logp = [], []
    for b in range(1, len(bins)):
        sel = which == b
        if sel.sum() > 10:
            logr.append(np.log(radius[mask][sel]).mean())
            logp.append(np.log(spec[mask][sel].mean()))
    return np.polyfit(logr, logp, 1)[0]


class TestSynthesizeFbm:
    def test_standardized(self):
        f = synthesize_fbm(0.7, size=256, seed=3)
        assert f.values.shape == (256, 256)
        assert f.values.mean() == pytest.approx(0.0, abs=1e-12)
        assert f.values.std() == pytest.approx(1.0, rel=1e-12)
        assert f.kind == "fractal" and f.hurst == 0.7

    def test_crop(self):
        f = synthesize_fbm(0.7, size=256, seed=3, crop=200)
        assert f.values.shape == (200, 200)
        assert f.values.mean() == pytest.approx(0.0, abs=1e-12)
        assert f.values.std() == pytest.approx(1.0, rel=1e-12)

    def test_reproducible(self):
        a = synthesize_fbm(0.5, size=64, seed=11)
        b = synthesize_fbm(0.5, size=64, seed=11)
        np.testing.assert_array_equal(a.values, b.values)

    def test_psd_slope_tracks_hurst(self):
        # PSD ~ f^-(2H+2): slope -3.4 at H=0.7, -3.0 at H=0.5, averaged
        # over realizations to tame spectral estimation noise
        for hurst in (0.5, 0.7):
            slopes = [radial_psd_slope(synthesize_fbm(hurst, 256, seed=s).values)
                      for s in range(6)]
            assert np.mean(slopes) == pytest.approx(-(2 * hurst + 2), abs=0.15)

    def test_rougher_field_has_shallower_slope(self):
        s_low = radial_psd_slope(synthesize_fbm(0.2, 256, seed=1).values)
        s_high = radial_psd_slope(synthesize_fbm(0.9, 256, seed=1).values)
        assert s_low > s_high

    def test_validation(self):
        for hurst in (0.0, 1.0, -0.3):
            with pytest.raises(ValueError):
                synthesize_fbm(hurst, size=64, seed=0)
        with pytest.raises(ValueError):
            synthesize_fbm(0.7, size=100, seed=0)


class TestRemoveMean:
    def test_zero_mean_and_idempotent(self):
        f = NoiseField(values=np.arange(12.0).reshape(3, 4) + 5.0, kind="white",
                       sigma=1.0)
        g = remove_mean(f)
        assert g.values.mean() == pytest.approx(0.0, abs=1e-13)
        np.testing.assert_allclose(remove_mean(g).values, g.values, atol=1e-13)
        assert g.kind == f.kind and g.sigma == f.sigma


def acf_direct(x, max_lag):
    """Brute-force biased autocovariance oracle."""
    x = x - x.mean()
    h, w = x.shape
    out = np.zeros((2 * max_lag + 1, 2 * max_lag + 1))
    for l1 in range(-max_lag, max_lag + 1):
        for l2 in range(-max_lag, max_lag + 1):
            total = 0.0
            for i in range(h):
                for j in range(w):
                    if 0 <= i + l1 < h and 0 <= j + l2 < w:
                        total += x[i, j] * x[i + l1, j + l2]
            out[l1 + max_lag, l2 + max_lag] = total / x.size
    return out


class TestEstimateAutocovariance:
    def test_matches_direct_oracle(self, rng):
        x = rng.standard_normal((14, 17))
        f = NoiseField(values=x, kind="white", sigma=1.0)
        got = estimate_autocovariance(f, max_lag=4)
        ref = acf_direct(x, max_lag=4)
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_center_is_variance(self, rng):
        x = rng.standard_normal((32, 32))
        f = NoiseField(values=x, kind="white", sigma=1.0)
        acf = estimate_autocovariance(f, max_lag=3)
        assert acf[3, 3] == pytest.approx(np.var(x), rel=1e-12)

    def test_even_symmetry(self, rng):
        x = rng.standard_normal((24, 24))
        acf = estimate_autocovariance(NoiseField(x, "white", 1.0), max_lag=5)
        np.testing.assert_allclose(acf, acf[::-1, ::-1], atol=1e-13)

    def test_separable_exponential_field(self):
        # AR(1) x AR(1) process: acf(l1, l2) ~ var * a^|l1| * a^|l2|
        a, n = 0.6, 4096
        rng = np.random.default_rng(99)
        e = rng.standard_normal((n, 64))
        x = np.empty_like(e)
        x[0] = e[0] / np.sqrt(1 - a**2)
        for i in range(1, n):
            x[i] = a * x[i - 1] + e[i]
        for j in range(1, 64):
            x[:, j] = a * x[:, j - 1] + np.sqrt(1 - a**2) * x[:, j]
        f = NoiseField(values=x[:, 32:], kind="white", sigma=1.0)
        acf = estimate_autocovariance(f, max_lag=2)
        ratio = acf / acf[2, 2]
        l = np.arange(-2, 3)
        expect = a ** np.abs(l[:, None]) * a ** np.abs(l[None, :])
        np.testing.assert_allclose(ratio, expect, atol=0.03)

    def test_max_lag_validation(self):
        f = NoiseField(values=np.zeros((10, 10)), kind="white", sigma=1.0)
        with pytest.raises(ValueError):
            estimate_autocovariance(f, max_lag=5)


class TestWhiteCovariance:
    def test_matrix_and_services(self, rng):
        cov = white_covariance(2.0, w=1)
        np.testing.assert_array_equal(cov.matrix, 4.0 * np.eye(9))
        y = rng.standard_normal(9)
        np.testing.assert_allclose(cov.solve(y), y / 4.0, rtol=1e-15)
        assert cov.quad(y, y) == pytest.approx(float(y @ y) / 4.0, rel=1e-13)
        np.testing.assert_allclose(cov.whiten(y), y / 2.0, rtol=1e-15)
        assert cov.size == 9

    def test_validation(self):
        with pytest.raises(ValueError):
            white_covariance(0.0, w=2)


class TestAssembleWindowCovariance:
    def test_delta_acf_gives_scaled_identity(self):
        acf = np.zeros((9, 9))
        acf[4, 4] = 2.0
        cov = assemble_window_covariance(acf, w=2, lam=1e-6)
        np.testing.assert_allclose(cov.matrix, 2.0 * (1 + 1e-6) * np.eye(25),
                                   atol=1e-15)

    def test_entries_follow_lag_table(self, rng):
        # build a guaranteed-PD stationary acf from a random spectral mix
        w = 1
        base = rng.standard_normal((12, 12))
        acf = estimate_autocovariance(NoiseField(base, "white", 1.0), 2 * w)
        cov = assemble_window_covariance(acf, w=w, lam=0.05)
        coords = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]
        for a, (i1, j1) in enumerate(coords):
            for b, (i2, j2) in enumerate(coords):
                expect = acf[i1 - i2 + 2 * w, j1 - j2 + 2 * w]
                if a == b:
                    expect = expect + 0.05 * acf[2 * w, 2 * w]
                assert cov.matrix[a, b] == pytest.approx(expect, rel=1e-12)

    def test_solve_inverts(self, rng):
        acf = np.zeros((5, 5))
        acf[2, 2] = 1.0
        acf[2, 1] = acf[2, 3] = acf[1, 2] = acf[3, 2] = 0.3
        cov = assemble_window_covariance(acf, w=1, lam=1e-8)
        y = rng.standard_normal(9)
        np.testing.assert_allclose(cov.matrix @ cov.solve(y), y, atol=1e-10)
        # whiten is a matrix square-root inverse: |Whiten(y)|^2 = quad
        assert float(cov.whiten(y) @ cov.whiten(y)) == pytest.approx(
            cov.quad(y, y), rel=1e-12)

    def test_indefinite_raises(self):
        acf = np.zeros((5, 5))
        acf[2, 2] = 1.0
        acf[2, 1] = acf[2, 3] = 0.9
        acf[1, 2] = acf[3, 2] = 0.9
        acf[1, 1] = acf[3, 3] = acf[1, 3] = acf[3, 1] = -0.8
        with pytest.raises(IndefiniteCovarianceError):
            assemble_window_covariance(acf, w=1, lam=1e-9)

    def test_short_acf_rejected(self):
        with pytest.raises(ValueError):
            assemble_window_covariance(np.eye(5), w=2, lam=1e-6)


class TestWritePgm:
    def test_header_and_payload(self, tmp_path, rng):
        f = NoiseField(values=rng.standard_normal((7, 5)), kind="white", sigma=1.0)
        path = tmp_path / "out.pgm"
        write_pgm(f, path)
        data = path.read_bytes()
        assert data.startswith(b"P5\n5 7\n255\n")
        assert len(data) == len(b"P5\n5 7\n255\n") + 35

    def test_constant_field(self, tmp_path):
        f = NoiseField(values=np.ones((3, 3)), kind="white", sigma=1.0)
        path = tmp_path / "flat.pgm"
        write_pgm(f, path)
        assert path.read_bytes().endswith(bytes(9))
