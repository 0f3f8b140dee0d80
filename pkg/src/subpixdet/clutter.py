"""Noise environments and window covariance models.

Two backgrounds are supported: i.i.d. Gaussian white noise, and fractal
cloud clutter synthesized as fractional Brownian motion by spectral
shaping of white noise.  For correlated backgrounds the detector window
covariance is assembled from the empirical autocovariance of the image,
giving a block-Toeplitz matrix with Toeplitz blocks.
"""

import numpy as np
from dataclasses import dataclass
from scipy.linalg import cho_factor, cho_solve, eigvalsh

__all__ = [
    "NoiseField",
    "CovarianceModel",
    "IndefiniteCovarianceError",
    "sample_white",
    "synthesize_fbm",
    "remove_mean",
    "estimate_autocovariance",
    "assemble_window_covariance",
    "white_covariance",
    "write_pgm",
]


class IndefiniteCovarianceError(Exception):
    """Raised when the assembled window covariance is not positive definite."""


@dataclass(frozen=True)
class NoiseField:
    """A rectangular noise image plus the parameters that generated it."""

    values: np.ndarray
    kind: str                 # "white" | "fractal"
    sigma: float = None       # white only
    hurst: float = None       # fractal only

    @property
    def shape(self):
        return self.values.shape


def sample_white(sigma, shape, seed):
    """I.i.d. zero-mean Gaussian field, reproducible from the seed.

    The generator draws unit normals and scales by sigma, so fields with
    the same seed are exact scalar multiples of each other.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    rng = np.random.default_rng(seed)
    return NoiseField(values=sigma * rng.standard_normal(shape), kind="white", sigma=sigma)


def synthesize_fbm(hurst, size=256, seed=None, crop=None):
    """Fractional-Brownian-motion clutter by spectral synthesis.

    White Gaussian noise is shaped in the Fourier domain by the
    power-law amplitude (f1^2 + f2^2)^(-(H+1)/2), i.e. power spectral
    density proportional to f^-(2H+2), the DC coefficient is zeroed, and
    the inverse FFT is standardized to zero mean and unit variance.
    Optionally cropped to crop x crop pixels (the paper-style cloud
    image is 256 cropped to 200).
    """
    if not 0 < hurst < 1:
        raise ValueError(f"Hurst parameter must be in (0, 1), got {hurst}")
    if size & (size - 1) != 0:
        raise ValueError(f"size must be a power of two, got {size}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((size, size))
    f1 = np.fft.fftfreq(size)
    radius2 = f1[:, None] ** 2 + f1[None, :] ** 2
    with np.errstate(divide="ignore"):
        amp = np.where(radius2 > 0, radius2 ** (-(hurst + 1) / 2), 0.0)
    field = np.fft.ifft2(np.fft.fft2(noise) * amp).real
    field = (field - field.mean()) / field.std()
    if crop is not None:
        field = field[:crop, :crop].copy()
        field = (field - field.mean()) / field.std()
    return NoiseField(values=field, kind="fractal", hurst=hurst)


def remove_mean(field):
    """Subtract the scalar empirical mean (idempotent)."""
    return NoiseField(
        values=field.values - field.values.mean(),
        kind=field.kind, sigma=field.sigma, hurst=field.hurst,
    )


def estimate_autocovariance(field, max_lag):
    """Biased (divide-by-N) sample autocovariance of the mean-removed field.

    Returns a (2*max_lag+1, 2*max_lag+1) table indexed by lags
    [-max_lag, max_lag] on both axes; entry [max_lag, max_lag] is the
    sample variance.  The biased normalization keeps the implied
    spectral density nonnegative.
    """
    h, wdt = field.values.shape
    if not (max_lag < min(h, wdt) / 2):
        raise ValueError(f"max_lag {max_lag} too large for a {h}x{wdt} field")
    x = field.values - field.values.mean()
    # full linear autocorrelation via zero-padded FFT
    fh, fw = 2 * h, 2 * wdt
    spec = np.fft.rfft2(x, s=(fh, fw))
    corr = np.fft.irfft2(spec * np.conj(spec), s=(fh, fw)) / x.size
    lags = np.arange(-max_lag, max_lag + 1)
    return corr[np.ix_(lags % fh, lags % fw)]


def white_covariance(sigma, w):
    """Exact white-noise covariance R = sigma^2 I for a (2w+1)^2 window."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    n = (2 * w + 1) ** 2
    return CovarianceModel(w=w, form="white", matrix=sigma**2 * np.eye(n),
                           sigma2=sigma**2, _factor=None)


def assemble_window_covariance(acf, w, lam=1e-6):
    """Window covariance from a stationary autocovariance table.

    R[(i,j),(k,l)] = acf(i-k, j-l) over the row-major (2w+1)^2 window
    pixels, plus ridge lam * acf(0,0) on the diagonal.  Raises
    IndefiniteCovarianceError if the result is not positive definite.
    """
    acf = np.asarray(acf, dtype=float)
    max_lag = (acf.shape[0] - 1) // 2
    if max_lag < 2 * w:
        raise ValueError(f"acf covers lags up to {max_lag}, need {2 * w}")
    coords = np.arange(-w, w + 1)
    ii, jj = np.meshgrid(coords, coords, indexing="ij")
    pi, pj = ii.ravel(), jj.ravel()
    di = pi[:, None] - pi[None, :]
    dj = pj[:, None] - pj[None, :]
    matrix = acf[di + max_lag, dj + max_lag]
    matrix = matrix + lam * acf[max_lag, max_lag] * np.eye(len(matrix))
    try:
        factor = cho_factor(matrix, lower=True)
    except np.linalg.LinAlgError:
        smallest = eigvalsh(matrix)[0]
        raise IndefiniteCovarianceError(
            f"window covariance not positive definite after ridge {lam} "
            f"(smallest eigenvalue {smallest:.3e})"
        )
    return CovarianceModel(w=w, form="empirical", matrix=matrix,
                           sigma2=None, _factor=factor)


@dataclass(frozen=True)
class CovarianceModel:
    """Window noise covariance with solve / quadratic-form services.

    Immutable after construction; the Cholesky factor is stored so every
    statistic shares numerically identical solves.
    """

    w: int
    form: str            # "white" | "empirical"
    matrix: np.ndarray
    sigma2: float
    _factor: tuple

    @property
    def size(self):
        return (2 * self.w + 1) ** 2

    def solve(self, y):
        """R^{-1} y for a vector or a (n, k) stack of columns."""
        y = np.asarray(y, dtype=float)
        if self.form == "white":
            return y / self.sigma2
        return cho_solve(self._factor, y)

    def quad(self, x, y):
        """Quadratic form x^T R^{-1} y."""
        return float(np.dot(np.asarray(x, dtype=float), self.solve(y)))

    def whiten(self, y):
        """L^{-1} y with R = L L^T; white noise maps to unit white noise."""
        y = np.asarray(y, dtype=float)
        if self.form == "white":
            return y / np.sqrt(self.sigma2)
        from scipy.linalg import solve_triangular
        return solve_triangular(self._factor[0], y, lower=True)


def write_pgm(field, path):
    """8-bit PGM, min-max scaled, for eyeballing the clutter texture."""
    vals = field.values
    lo, hi = vals.min(), vals.max()
    scaled = np.zeros_like(vals) if hi == lo else (vals - lo) / (hi - lo)
    img = np.round(255 * scaled).astype(np.uint8)
    h, wdt = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{wdt} {h}\n255\n".encode())
        fh.write(img.tobytes())
