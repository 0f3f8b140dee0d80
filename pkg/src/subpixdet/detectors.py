"""The five detection statistics for a single data window.

All detectors score a mean-removed window vector z against a signature
bank bound to a covariance model.  GPMF assumes a pixel-centered target;
GLRT maximizes over the offset grid; ELRT marginalizes the offset by
grid quadrature of the flat-amplitude-prior likelihood ratio; ALRT is
the same integral on a coarse 3x3 half-pixel trapezoidal rule; SM-GLRT
replaces the signature family by its leading singular subspace.

ELRT and ALRT scores are reported in the log domain: the likelihood
ratio integrand grows like exp(t^2/2) and overflows at high amplitude,
and the log is a monotone transform so thresholding is unaffected.
"""

import numpy as np
from dataclasses import dataclass
from scipy.special import logsumexp

__all__ = [
    "DetectorScore",
    "SubspaceModel",
    "DETECTOR_IDS",
    "matched_statistic",
    "gpmf",
    "glrt",
    "elrt",
    "alrt",
    "ALRT_WEIGHTS",
    "build_subspace",
    "sm_glrt",
    "batch_statistics",
    "batch_scores",
]

DETECTOR_IDS = ("GPMF", "GLRT", "ELRT", "ALRT", "SM-GLRT")

# trapezoidal rule on [-0.5, 0.5]^2 with nodes {-0.5, 0, 0.5}:
# (1/4, 1/2, 1/4) per axis, tensorized; sums to 1.
ALRT_WEIGHTS = np.outer([0.25, 0.5, 0.25], [0.25, 0.5, 0.25]).ravel()


@dataclass(frozen=True)
class DetectorScore:
    """A named statistic value plus optional amplitude/offset byproducts."""

    detector: str
    score: float
    alpha_hat: float = None
    eps_hat: tuple = None


@dataclass(frozen=True)
class SubspaceModel:
    """Leading singular subspace of the raw signature family.

    basis has shape (n, P) with orthonormal columns; sign convention:
    each column's largest-magnitude entry is positive.
    """

    basis: np.ndarray
    singular_values: np.ndarray

    @property
    def order(self):
        return self.basis.shape[1]


def _node_index(bound, eps):
    match = np.all(np.isclose(bound.bank.offsets, np.asarray(eps, dtype=float),
                              rtol=0, atol=1e-12), axis=1)
    idx = np.flatnonzero(match)
    if len(idx) == 0:
        raise ValueError(f"offset {eps} is not a bank node")
    return idx[0]


def matched_statistic(z, eps, bound):
    """Matched filter T_eps(z) = s_eps^T R^{-1} z at a bank node."""
    k = _node_index(bound, eps)
    return float(bound.whitened[k] @ np.asarray(z, dtype=float))


def gpmf(z, bound):
    """Generalized pixel matched filter: amplitude-ML filter at eps = (0, 0).

    score = |s0^T R^{-1} z|^2 / (s0^T R^{-1} s0); alpha_hat is the ML
    amplitude, whose sign is not identified by the modulus-squared score.
    """
    k = bound.bank.center_index
    t = float(bound.whitened[k] @ np.asarray(z, dtype=float))
    return DetectorScore(detector="GPMF", score=float(t * t / bound.gram[k]),
                         alpha_hat=float(t / bound.gram[k]),
                         eps_hat=(float(bound.bank.offsets[k][0]), float(bound.bank.offsets[k][1])))


def glrt(z, bound):
    """GLRT: maximize the amplitude-ML filter over the whole node set.

    Ties resolve to the first node in bank order (np.argmax convention).
    """
    t = bound.whitened @ np.asarray(z, dtype=float)
    ratios = t * t / bound.gram
    k = int(np.argmax(ratios))
    return DetectorScore(detector="GLRT", score=float(ratios[k]),
                         alpha_hat=float(t[k] / bound.gram[k]),
                         eps_hat=(float(bound.bank.offsets[k][0]), float(bound.bank.offsets[k][1])))


def _log_integrand(z, bound, indices):
    t = bound.whitened[indices] @ np.asarray(z, dtype=float)
    d = bound.gram[indices]
    return t * t / (2 * d) - 0.5 * np.log(d)


def elrt(z, bound, quad_indices=None):
    """ELRT: log of the offset-marginalized likelihood ratio.

    Averages the integrand exp(t_k^2 / (2 d_k)) / sqrt(d_k) uniformly
    over the offset-grid nodes (default: the full grid, excluding the
    appended exact-center node), stabilized by log-sum-exp.
    """
    if quad_indices is None:
        quad_indices = bound.bank.grid_indices
    quad_indices = np.asarray(quad_indices)
    if len(quad_indices) == 0:
        raise ValueError("ELRT quadrature grid is empty")
    a = _log_integrand(z, bound, quad_indices)
    return DetectorScore(detector="ELRT",
                         score=float(logsumexp(a) - np.log(len(quad_indices))))


def alrt(z, bound9):
    """ALRT: the ELRT integral on the 3x3 half-pixel trapezoidal rule.

    bound9 must be a bound bank over the nine exact half-pixel offsets
    (see optics.build_alrt_bank).
    """
    if bound9.bank.n_nodes != 9:
        raise ValueError("ALRT needs the 9-node half-pixel bank")
    a = _log_integrand(z, bound9, np.arange(9))
    return DetectorScore(detector="ALRT",
                         score=float(logsumexp(a, b=ALRT_WEIGHTS)))


def build_subspace(bank, order=1):
    """SVD of the raw (unwhitened) signature family, top singular vectors.

    The subspace is noise-independent; whitening enters only through the
    SM-GLRT quadratic form.
    """
    if not 1 <= order <= bank.n_nodes:
        raise ValueError(f"subspace order must be in [1, {bank.n_nodes}]")
    u, s, _ = np.linalg.svd(bank.vectors.T, full_matrices=False)
    basis = u[:, :order].copy()
    for p in range(order):
        if basis[np.argmax(np.abs(basis[:, p])), p] < 0:
            basis[:, p] = -basis[:, p]
    return SubspaceModel(basis=basis, singular_values=s[:order].copy())


def sm_glrt(z, subspace, cov):
    """Subspace-model GLRT statistic D(z).

    D(z) = z^T R^{-1} S (S^T R^{-1} S)^{-1} S^T R^{-1} z.  For order 1
    this reduces algebraically to the GPMF formula with the leading
    singular vector in place of the centered signature.
    """
    z = np.asarray(z, dtype=float)
    wh = cov.solve(subspace.basis)             # R^{-1} S, (n, P)
    gram = subspace.basis.T @ wh               # S^T R^{-1} S
    t = wh.T @ z
    try:
        coeff = np.linalg.solve(gram, t)
    except np.linalg.LinAlgError:
        raise ValueError("S^T R^{-1} S is singular; subspace basis degenerate")
    return DetectorScore(detector="SM-GLRT", score=float(t @ coeff))


# ---------------------------------------------------------------------------
# Vectorized scoring used by the Monte Carlo harness.

def batch_statistics(windows, bound):
    """Per-node amplitude-ML filter values for a stack of windows.

    windows: (N, n).  Returns (t, ratios) with t = windows @ (R^{-1}S)^T
    of shape (N, K) and ratios = t^2 / gram.
    """
    t = np.asarray(windows, dtype=float) @ bound.whitened.T
    return t, t * t / bound.gram[None, :]


def batch_scores(windows, bound, bound9=None, subspace=None,
                 detectors=DETECTOR_IDS):
    """Score a stack of windows with the selected detectors.

    Returns a dict detector -> (N,) score array.  Each column matches
    the single-window functions to floating-point roundoff.
    """
    windows = np.asarray(windows, dtype=float)
    out = {}
    need_full = any(d in detectors for d in ("GPMF", "GLRT", "ELRT"))
    if need_full:
        t, ratios = batch_statistics(windows, bound)
    if "GPMF" in detectors:
        out["GPMF"] = ratios[:, bound.bank.center_index]
    if "GLRT" in detectors:
        out["GLRT"] = ratios.max(axis=1)
    if "ELRT" in detectors:
        gi = bound.bank.grid_indices
        a = ratios[:, gi] / 2 - 0.5 * np.log(bound.gram[gi])[None, :]
        out["ELRT"] = logsumexp(a, axis=1) - np.log(len(gi))
    if "ALRT" in detectors:
        if bound9 is None:
            raise ValueError("ALRT selected but no 9-node bank supplied")
        t9, r9 = batch_statistics(windows, bound9)
        a9 = r9 / 2 - 0.5 * np.log(bound9.gram)[None, :]
        out["ALRT"] = logsumexp(a9, b=ALRT_WEIGHTS[None, :], axis=1)
    if "SM-GLRT" in detectors:
        if subspace is None:
            raise ValueError("SM-GLRT selected but no subspace supplied")
        wh = bound.cov.solve(subspace.basis)
        gram = subspace.basis.T @ wh
        tsub = windows @ wh                    # (N, P)
        out["SM-GLRT"] = np.einsum("np,np->n", tsub,
                                   np.linalg.solve(gram, tsub.T).T)
    return out
