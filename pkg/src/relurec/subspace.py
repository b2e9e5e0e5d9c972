"""Column-space extraction and alignment diagnostics for low-rank estimates.

The reconstruction error of a rank-``k`` matrix estimate is usually
summarised through its leading left singular subspace: how far is the
span of the top-``k`` left singular vectors of the estimate from that of
the truth?  This module provides the truncated SVD, the principal-angle
(sin-theta) distance, the best orthogonal alignment between two bases,
and a perturbation bound that controls the alignment error in terms of
the perturbation's Frobenius norm and the truth's spectral gap.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "RankDeficiencyWarning",
    "alignment_error_bound",
    "procrustes_align",
    "sin_theta_distance",
    "truncated_svd",
]


class RankDeficiencyWarning(UserWarning):
    """The requested rank exceeds the numerical rank of the matrix."""


def truncated_svd(M: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-``k`` singular triplets ``(U, S, V)`` with ``U`` d x k and ``V`` n x k.

    Warns when the ``k``-th singular value is numerically zero, since the
    trailing basis directions are then arbitrary.
    """
    M = np.asarray(M, dtype=float)
    if not 1 <= k <= min(M.shape):
        raise ValueError(f"rank k={k} must lie in [1, {min(M.shape)}] for shape {M.shape}")
    U, S, Vt = np.linalg.svd(M, full_matrices=False)
    if S[k - 1] < 1e-12:
        warnings.warn(
            f"singular value {k} is {S[k - 1]:.3g}; matrix has numerical rank below {k}",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return U[:, :k], S[:k], Vt[:k].T


def sin_theta_distance(U: np.ndarray, U_hat: np.ndarray) -> float:
    """Frobenius sin-theta distance between two k-dimensional subspaces.

    Equals ``sqrt(k - ||U^T U_hat||_F^2)`` for orthonormal bases: zero
    when the spans coincide, ``sqrt(k)`` when they are orthogonal.
    """
    U = np.asarray(U, dtype=float)
    U_hat = np.asarray(U_hat, dtype=float)
    if U.shape != U_hat.shape:
        raise ValueError(f"basis shapes differ: {U.shape} vs {U_hat.shape}")
    k = U.shape[1]
    overlap = np.linalg.norm(U.T @ U_hat) ** 2
    return float(np.sqrt(max(k - overlap, 0.0)))


def procrustes_align(U: np.ndarray, U_hat: np.ndarray) -> tuple[np.ndarray, float]:
    """Best orthogonal map of ``U_hat`` onto ``U`` and the residual it leaves.

    Returns the orthogonal ``O`` minimising ``||U - U_hat O||_F``
    together with that minimum.  The minimiser is ``P Q^T`` from the SVD
    ``U_hat^T U = P Sigma Q^T``.
    """
    U = np.asarray(U, dtype=float)
    U_hat = np.asarray(U_hat, dtype=float)
    if U.shape != U_hat.shape:
        raise ValueError(f"basis shapes differ: {U.shape} vs {U_hat.shape}")
    P, _, Qt = np.linalg.svd(U_hat.T @ U)
    O = P @ Qt
    residual = float(np.linalg.norm(U - U_hat @ O))
    return O, residual


def alignment_error_bound(M: np.ndarray, E: np.ndarray, k: int) -> float:
    """Perturbation bound on the aligned basis error of ``M + E`` versus ``M``.

    For a truth ``M`` with singular values ``s_1 >= s_2 >= ...`` and a
    perturbation ``E``, the aligned top-``k`` basis error is at most::

        2^{3/2} (2 s_1 + ||E||_F) ||E||_F / (s_k^2 - s_{k+1}^2)

    Raises when the spectral gap in the denominator is not positive.
    """
    M = np.asarray(M, dtype=float)
    sv = np.linalg.svd(M, compute_uv=False)
    if not 1 <= k <= sv.size:
        raise ValueError(f"rank k={k} out of range for {sv.size} singular values")
    tail = sv[k] if sv.size > k else 0.0
    gap = sv[k - 1] ** 2 - tail**2
    if gap <= 0.0:
        raise ValueError(
            f"spectral gap s_{k}^2 - s_{k + 1}^2 = {gap:.3g} is not positive"
        )
    fro = float(np.linalg.norm(E))
    return float(2.0**1.5 * (2.0 * sv[0] + fro) * fro / gap)
