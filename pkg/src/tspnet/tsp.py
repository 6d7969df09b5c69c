"""Simplicial Fourier transform, filtering and Hodge decomposition.

The spectral routines use a dense symmetric eigensolver and cost O(N_k^3);
they are meant for analysis and for checking the polynomial (spatial) path,
which only needs sparse matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .complex import HodgeTriple, SimplicialComplex, hodge_laplacians
from .errors import ConvergenceFailure, DimensionMismatch

__all__ = [
    "HodgeParts",
    "SpectralBasis",
    "hodge_decompose",
    "ideal_highpass",
    "ideal_lowpass",
    "sft_basis",
    "sft_forward",
    "sft_inverse",
    "spatial_filter",
    "spectral_filter",
    "zero_tolerance",
]

NEG_CLAMP = 1e-10


def zero_tolerance(lam_max: float) -> float:
    """Eigenvalues at or below this count as zero."""
    return 1e-8 * max(1.0, float(lam_max))


@dataclass(frozen=True)
class SpectralBasis:
    """Eigenpairs of a symmetric operator, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    def eigenspaces(self) -> list[np.ndarray]:
        """Index groups of numerically equal eigenvalues."""
        lam = self.eigenvalues
        if lam.size == 0:
            return []
        tol = zero_tolerance(lam[-1])
        breaks = np.flatnonzero(np.diff(lam) > tol) + 1
        return np.split(np.arange(lam.size), breaks)

    def projector(self, idx: np.ndarray) -> np.ndarray:
        U = self.eigenvectors[:, idx]
        return U @ U.T

    def kernel(self) -> np.ndarray:
        """Orthonormal basis (columns) of the numerical null space."""
        lam = self.eigenvalues
        if lam.size == 0:
            return self.eigenvectors[:, :0]
        return self.eigenvectors[:, lam <= zero_tolerance(lam[-1])]


def _dense(L) -> np.ndarray:
    if isinstance(L, HodgeTriple):
        L = L.full
    A = L.toarray() if sp.issparse(L) else np.asarray(L, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    return A


def sft_basis(L) -> SpectralBasis:
    """Eigendecomposition ``L = U diag(lam) U^T`` with a deterministic sign convention.

    Each eigenvector is flipped so that its largest-magnitude entry (lowest
    index on ties) is positive. Eigenvalues in ``[-1e-10, 0)`` are clamped to 0.
    """
    A = _dense(L)
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0.0))):
        raise ValueError("sft_basis requires a symmetric matrix")
    try:
        lam, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    lam = np.where((lam < 0) & (lam >= -NEG_CLAMP), 0.0, lam)
    if U.size:
        mag = np.abs(U)
        lead = np.argmax(mag >= mag.max(axis=0) - 1e-12, axis=0)
        signs = np.sign(U[lead, np.arange(U.shape[1])])
        U = U * np.where(signs == 0, 1.0, signs)
    return SpectralBasis(lam, U)


def _check_rows(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[:1] != (n,):
        raise DimensionMismatch(f"signal has {x.shape[0] if x.ndim else 0} rows, operator expects {n}")
    return x


def sft_forward(basis: SpectralBasis, x) -> np.ndarray:
    """Spectral coefficients ``U^T x``."""
    x = _check_rows(x, basis.size)
    return basis.eigenvectors.T @ x


def sft_inverse(basis: SpectralBasis, coeffs) -> np.ndarray:
    """Back to the simplex domain, ``U c``."""
    c = _check_rows(coeffs, basis.size)
    return basis.eigenvectors @ c


def spectral_filter(L, h: Callable[[float], float], x) -> np.ndarray:
    """Apply the frequency response ``h`` as ``sum_lambda h(lambda) P_lambda x``.

    ``L`` may be a matrix, a :class:`HodgeTriple` (its full Laplacian is used)
    or a precomputed :class:`SpectralBasis`. ``h`` is evaluated once per
    eigenspace, at the mean eigenvalue of the cluster, so the result does not
    depend on how a degenerate eigenspace was orthogonalised.
    """
    basis = L if isinstance(L, SpectralBasis) else sft_basis(L)
    x = _check_rows(x, basis.size)
    response = np.empty(basis.size)
    for idx in basis.eigenspaces():
        response[idx] = float(h(float(basis.eigenvalues[idx].mean())))
    if not np.all(np.isfinite(response)):
        raise ValueError("filter response is not finite on the spectrum")
    coeffs = basis.eigenvectors.T @ x
    scale = response.reshape((-1,) + (1,) * (x.ndim - 1))
    return basis.eigenvectors @ (scale * coeffs)


def spatial_filter(L, coeffs: Sequence[float], x) -> np.ndarray:
    """Polynomial filter ``sum_j w_j L^j x`` via repeated sparse products."""
    if isinstance(L, HodgeTriple):
        L = L.full
    w = [float(c) for c in coeffs]
    if not w:
        raise ValueError("need at least one coefficient")
    x = _check_rows(x, L.shape[0])
    out = w[0] * x
    v = x
    for wj in w[1:]:
        v = L @ v
        out = out + wj * v
    return out


def ideal_lowpass(cutoff: float) -> Callable[[float], float]:
    return lambda lam: 1.0 if lam < cutoff else 0.0


def ideal_highpass(cutoff: float) -> Callable[[float], float]:
    return lambda lam: 0.0 if lam < cutoff else 1.0


@dataclass(frozen=True)
class HodgeParts:
    """``x = harmonic + lower_induced + upper_induced``.

    ``lower_induced`` lies in the range of ``B_k^T`` (gradient part),
    ``upper_induced`` in the range of ``B_{k+1}`` (curl part).
    """

    harmonic: np.ndarray
    lower_induced: np.ndarray
    upper_induced: np.ndarray


def _range_projection(M: sp.spmatrix | None, x: np.ndarray) -> np.ndarray:
    if M is None:
        return np.zeros_like(x)
    basis = sft_basis(M)
    lam = basis.eigenvalues
    keep = lam > zero_tolerance(lam[-1] if lam.size else 0.0)
    U = basis.eigenvectors[:, keep]
    return U @ (U.T @ x)


def hodge_decompose(K: SimplicialComplex, k: int, x) -> HodgeParts:
    """Orthogonal split of a ``k``-cochain into harmonic, gradient and curl parts."""
    triple = hodge_laplacians(K, k)
    x = _check_rows(x, triple.size)
    lower = _range_projection(triple.lower, x)
    upper = _range_projection(triple.upper, x)
    return HodgeParts(x - lower - upper, lower, upper)
