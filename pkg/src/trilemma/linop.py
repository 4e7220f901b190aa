"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Functions that must return Hermitian output symmetrize it before
returning so that rounding drift does not accumulate over long chains
of compositions.
"""

from typing import NamedTuple, Tuple

import numpy as np

from .errors import InvalidInput, NotPositiveSemidefinite
from .tolerances import TOL_HERM, TOL_PSD


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # real, ascending
    eigenvectors: np.ndarray  # columns, unitary


def as_matrix(m, name="matrix"):
    """Validate ``m`` as a finite 2-d complex array and return a copy."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInput(f"{name} must be a non-empty 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    return a


def as_square(m, name="matrix"):
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {a.shape}")
    return a


def hermitian_residual(m):
    return float(np.max(np.abs(m - m.conj().T)))


def hermitize(m):
    return (m + m.conj().T) / 2


def as_hermitian(m, name="matrix", atol=TOL_HERM):
    """Validate Hermiticity (relative to the matrix scale) and symmetrize."""
    a = as_square(m, name)
    scale = max(1.0, float(np.max(np.abs(a))))
    res = hermitian_residual(a)
    if res > atol * scale:
        raise InvalidInput(f"{name} is not Hermitian (residual {res:.3g})")
    return hermitize(a)


def hermitian_eig(m):
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    a = as_hermitian(m)
    w, v = np.linalg.eigh(a)
    return SpectralDecomposition(w, v)


def min_eigenvalue(m):
    return float(np.linalg.eigvalsh(as_hermitian(m))[0])


def _checked_spectrum(m, tol):
    w, v = hermitian_eig(m)
    if w[0] < -tol:
        raise NotPositiveSemidefinite(f"minimum eigenvalue {w[0]:.3g} below -{tol:g}")
    return np.clip(w, 0.0, None), v


def matrix_sqrt(m, tol=TOL_PSD):
    """Positive square root; eigenvalues in ``[-tol, 0)`` are clipped to zero."""
    w, v = _checked_spectrum(m, tol)
    return hermitize((v * np.sqrt(w)) @ v.conj().T)


def matrix_log_on_support(m, tol=TOL_PSD):
    """Natural log on the support of ``m``; eigenvalues ``<= tol`` map to 0.

    This realizes the ``0 ln 0 = 0`` convention used by every entropy.
    """
    w, v = _checked_spectrum(m, tol)
    logw = np.zeros_like(w)
    keep = w > tol
    logw[keep] = np.log(w[keep])
    return hermitize((v * logw) @ v.conj().T)


def kron(a, b):
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def partial_trace(m, dims: Tuple[int, int], keep: int):
    """Trace out one factor of a bipartite operator.

    Args:
        m: operator on ``C^dA (x) C^dB``.
        dims: ``(dA, dB)``.
        keep: 0 keeps the first factor, 1 keeps the second.
    """
    d_a, d_b = (int(d) for d in dims)
    a = as_matrix(m)
    if d_a < 1 or d_b < 1 or a.shape != (d_a * d_b, d_a * d_b):
        raise InvalidInput(f"shape {a.shape} does not match dims {(d_a, d_b)}")
    t = a.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        return np.einsum("ikjk->ij", t)
    if keep == 1:
        return np.einsum("kikj->ij", t)
    raise InvalidInput(f"keep must be 0 or 1, got {keep!r}")


def basis_projector(dim, index):
    p = np.zeros((dim, dim), dtype=np.complex128)
    p[index, index] = 1.0
    return p


def matrix_units(dim):
    """Yield ``(i, j, |i><j|)`` for the standard operator basis."""
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=np.complex128)
            e[i, j] = 1.0
            yield i, j, e


def is_unitary(u, atol=1e-9):
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= atol)


def max_abs(m):
    return float(np.max(np.abs(m))) if np.size(m) else 0.0
