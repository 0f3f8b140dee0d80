"""Airy optics model and pixel-integrated target signatures.

The imaging system is a diffraction-limited circular aperture with
incoherent illumination.  Its point spread function is the Airy disk,
parameterized by a single dimensionless number ``r_c`` (optical cutoff
frequency over sampling frequency).  A point source at subpixel offset
``(eps1, eps2)`` deposits in pixel ``(i, j)`` the integral of the PSF
over that pixel's unit square; the resulting patch of pixel values is
the target *signature*.
"""

import csv
import itertools

import numpy as np
from dataclasses import dataclass, field
from numpy.polynomial.legendre import leggauss
from scipy import special

__all__ = [
    "PsfModel",
    "Signature",
    "SignatureBank",
    "BoundBank",
    "DEFAULT_QUAD_ORDER",
    "bessel_j1",
    "psf_value",
    "render_signature",
    "render_signature_batch",
    "average_energy",
    "build_signature_bank",
    "save_bank_csv",
    "load_bank_csv",
    "alrt_offsets",
    "build_alrt_bank",
]

# Gauss-Legendre order per pixel; the Airy integrand is smooth so this
# is far past the 1e-6 relative accuracy the renderer promises.
DEFAULT_QUAD_ORDER = 16


def bessel_j1(x):
    """Bessel function of the first kind J1.

    Absolute error <= 1e-10 over |x| <= 500 (verified against a power
    series oracle in the test suite).  Accepts scalars or arrays.
    """
    return special.j1(x)


@dataclass(frozen=True)
class PsfModel:
    """Airy PSF with normalized cutoff frequency r_c > 0.

    r_c = 2.44 is the common sensor design (pixel width equals the main
    lobe, heavily aliased); r_c = 0.5 is the correctly sampled design.
    """

    r_c: float

    def __post_init__(self):
        if not (self.r_c > 0):
            raise ValueError(f"r_c must be > 0, got {self.r_c}")


def psf_value(model, u, v):
    """Airy PSF h(u, v) = (1/pi) * [J1(pi*rho*r_c)/rho]^2, rho = |(u,v)|.

    Vectorized over u, v.  The removable singularity at rho = 0 takes
    its analytic limit pi * r_c**2 / 4.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    rho = np.hypot(u, v)
    t = np.pi * rho * model.r_c
    # J1(t)/t -> 1/2 as t -> 0; divide only where safe.
    ratio = np.where(t > 0, special.j1(np.where(t > 0, t, 1.0)) / np.where(t > 0, t, 1.0), 0.5)
    out = np.pi * model.r_c**2 * ratio**2
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Signature:
    """Pixel-integrated spot for one subpixel offset.

    values[i + w, j + w] is the fraction of source intensity landing in
    pixel (i, j) for i, j in [-w, w].  Values are nonnegative and sum to
    at most 1 (the full-plane sum is exactly 1).
    """

    values: np.ndarray
    offset: tuple
    w: int
    r_c: float

    @property
    def vector(self):
        """Row-major flattening, index order (i, j)."""
        return self.values.ravel()


def _check_offset(eps):
    e1, e2 = float(eps[0]), float(eps[1])
    if not (-0.5 <= e1 < 0.5 and -0.5 <= e2 < 0.5):
        raise ValueError(f"subpixel offset {eps} outside [-0.5, 0.5[^2")
    return e1, e2


def _quad_points(w, q):
    """Per-axis quadrature abscissas/weights covering pixels [-w, w].

    Returns (coords, weights) of length (2w+1)*q; coords[k] is an
    absolute sample position, weights fold back per pixel.
    """
    nodes, weights = leggauss(q)
    centers = np.arange(-w, w + 1)
    coords = (centers[:, None] + 0.5 * nodes[None, :]).ravel()
    wts = np.tile(0.5 * weights, 2 * w + 1)
    return coords, wts


def render_signature_batch(model, offsets, w, q=DEFAULT_QUAD_ORDER, chunk=None):
    """Render signatures for many offsets at once.

    offsets: array of shape (N, 2).  Returns an (N, (2w+1)**2) array of
    row-major flattened signature values.  Offsets are not range-checked
    here (the ALRT quadrature needs the boundary value +0.5 exactly);
    use render_signature for the validated single-offset contract.
    """
    offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
    n_pix = 2 * w + 1
    coords, wts = _quad_points(w, q)
    if chunk is None:
        # keep the (chunk, Pq, Pq) PSF grid around 2e7 doubles
        chunk = max(1, int(2e7) // (len(coords) * len(coords)))
    out = np.empty((len(offsets), n_pix * n_pix))
    for lo in range(0, len(offsets), chunk):
        eps = offsets[lo:lo + chunk]
        du = coords[None, :] - eps[:, 0][:, None]   # (c, Pq)
        dv = coords[None, :] - eps[:, 1][:, None]
        h = psf_value(model, du[:, :, None], dv[:, None, :])  # (c, Pq, Pq)
        h = h.reshape(len(eps), n_pix, len(wts) // n_pix, n_pix, len(wts) // n_pix)
        vals = np.einsum("a,b,niajb->nij", wts[:len(wts) // n_pix], wts[:len(wts) // n_pix], h)
        out[lo:lo + chunk] = vals.reshape(len(eps), -1)
    return out


def render_signature(model, eps, w, q=DEFAULT_QUAD_ORDER):
    """Pixel-integrate the PSF over a (2w+1) x (2w+1) window.

    Each value is the tensor-product Gauss-Legendre approximation (order
    q per axis per pixel) of the PSF integral over the pixel's unit
    square, for a source at subpixel offset eps.
    """
    if w < 1:
        raise ValueError("window half-width must be >= 1")
    if q < 2:
        raise ValueError("quadrature order must be >= 2")
    e1, e2 = _check_offset(eps)
    vec = render_signature_batch(model, [(e1, e2)], w, q)[0]
    n_pix = 2 * w + 1
    return Signature(values=vec.reshape(n_pix, n_pix), offset=(e1, e2), w=w, r_c=model.r_c)


def _grid_offsets(grid_size):
    """Cell-center nodes of an even partition of [-0.5, 0.5[^2, row-major."""
    e = (np.arange(grid_size) + 0.5) / grid_size - 0.5
    e1, e2 = np.meshgrid(e, e, indexing="ij")
    return np.column_stack([e1.ravel(), e2.ravel()])


def average_energy(model, w=25, grid_size=20, q=DEFAULT_QUAD_ORDER):
    """Average spot energy E = mean over offsets of sum_ij s[i,j]^2.

    Approximates the integral over the offset square by the grid_size^2
    cell-center average.  w = 25 captures essentially the whole spot for
    both sensor designs, so this matches the full-plane value.
    """
    vecs = render_signature_batch(model, _grid_offsets(grid_size), w, q)
    return float(np.mean(np.sum(vecs**2, axis=1)))


@dataclass(frozen=True)
class SignatureBank:
    """Signatures rendered on the offset grid, plus the exact (0, 0) node.

    Node order: the grid_size^2 cell centers in row-major (eps1 outer,
    eps2 inner) order, then the appended (0, 0) node.  All detector and
    estimator searches scan this fixed ordering, so argmax ties resolve
    to the first node deterministically.
    """

    offsets: np.ndarray          # (K, 2)
    vectors: np.ndarray          # (K, (2w+1)^2)
    w: int
    r_c: float
    grid_size: int
    q: int = DEFAULT_QUAD_ORDER
    center_index: int = field(default=-1)

    @property
    def n_nodes(self):
        return len(self.offsets)

    @property
    def grid_indices(self):
        """Indices of the plain grid nodes (the ELRT/PM quadrature set)."""
        return np.arange(self.grid_size**2)

    def bind(self, cov):
        """Precompute whitened products against a covariance model."""
        whitened = cov.solve(self.vectors.T).T          # R^{-1} s_k, per row
        gram = np.einsum("kn,kn->k", self.vectors, whitened)
        if np.any(gram <= 0):
            raise ValueError("non-positive signature quadratic form; covariance not PD")
        return BoundBank(bank=self, cov=cov, whitened=whitened, gram=gram)


@dataclass(frozen=True)
class BoundBank:
    """SignatureBank with cached R^{-1} s_k and s_k^T R^{-1} s_k."""

    bank: SignatureBank
    cov: object
    whitened: np.ndarray   # (K, n)
    gram: np.ndarray       # (K,)


def build_signature_bank(model, grid_size=20, w=2, q=DEFAULT_QUAD_ORDER):
    """Render the offset-grid signature bank used by all detectors.

    grid_size must be even so the cell centers tile [-0.5, 0.5[ without
    touching the excluded +0.5 boundary; the exact (0, 0) node is then
    appended so the GLRT search set contains the GPMF hypothesis.
    """
    if grid_size < 2 or grid_size % 2 != 0:
        raise ValueError("grid_size must be even and >= 2")
    offsets = _grid_offsets(grid_size)
    offsets = np.vstack([offsets, [0.0, 0.0]])
    vectors = render_signature_batch(model, offsets, w, q)
    return SignatureBank(
        offsets=offsets, vectors=vectors, w=w, r_c=model.r_c,
        grid_size=grid_size, q=q, center_index=len(offsets) - 1,
    )


def save_bank_csv(bank, path):
    """Write a bank cache: header comments, then eps1,eps2,values... rows."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# r_c={bank.r_c!r} w={bank.w} grid_size={bank.grid_size} q={bank.q}\n")
        writer = csv.writer(fh)
        for eps, vec in zip(bank.offsets, bank.vectors):
            writer.writerow([repr(float(eps[0])), repr(float(eps[1]))] + [repr(float(v)) for v in vec])


def load_bank_csv(path):
    """Reload a bank written by save_bank_csv (bit-exact round trip)."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing bank header line")
        meta = dict(tok.split("=") for tok in header[1:].split())
        rows = [[float(x) for x in row] for row in csv.reader(fh)]
    arr = np.array(rows)
    bank = SignatureBank(
        offsets=arr[:, :2], vectors=arr[:, 2:],
        w=int(meta["w"]), r_c=float(meta["r_c"]),
        grid_size=int(meta["grid_size"]), q=int(meta["q"]),
        center_index=len(arr) - 1,
    )
    return bank


def alrt_offsets():
    """The nine half-pixel offsets of the coarse trapezoidal quadrature."""
    return np.array(list(itertools.product((-0.5, 0.0, 0.5), repeat=2)))


def build_alrt_bank(model, w=2, q=DEFAULT_QUAD_ORDER):
    """Bank over the 3x3 half-pixel nodes, rendered exactly.

    The +0.5 boundary lies outside the half-open offset set but the
    trapezoidal rule needs its value; it equals the -0.5 signature
    shifted by one pixel.
    """
    offsets = alrt_offsets()
    vectors = render_signature_batch(model, offsets, w, q)
    return SignatureBank(
        offsets=offsets, vectors=vectors, w=w, r_c=model.r_c,
        grid_size=3, q=q, center_index=4,
    )
