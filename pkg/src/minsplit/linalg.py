"""Dense float64 linear algebra used by the rest of the package.

Vectors are 1-d ``numpy.ndarray`` of float64, matrices are 2-d.  Everything
is validated to be finite on the way in, and the decompositions come with
explicit residual contracts so the callers can rely on them in tests.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError, ShapeError, SingularMatrixError


def as_vector(x, name="vector"):
    """Coerce to a finite, non-empty 1-d float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ShapeError(f"{name} must be a non-empty 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_matrix(x, name="matrix"):
    """Coerce to a finite 2-d float64 array."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ShapeError(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


@dataclass(frozen=True)
class SvdResult:
    """Thin singular value decomposition ``u @ diag(sigma) @ vt``.

    ``sigma`` is sorted in descending order and nonnegative; the columns of
    ``u`` and the rows of ``vt`` are orthonormal to 1e-10.
    """

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray

    def reconstruct(self):
        return (self.u * self.sigma) @ self.vt


def svd(x):
    """Thin SVD with a reconstruction guarantee.

    Parameters
    ----------
    x : array_like
        Matrix to decompose.

    Returns
    -------
    SvdResult
        Factors with ``||u @ diag(s) @ vt - x||_F <= 1e-10 * (1 + ||x||_F)``.

    Raises
    ------
    DecompositionError
        If the underlying iteration fails to converge.
    """
    x = as_matrix(x)
    try:
        u, s, vt = np.linalg.svd(x, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise DecompositionError(f"svd did not converge: {exc}") from exc
    return SvdResult(u=u, sigma=s, vt=vt)


def op_norm(x):
    """Largest singular value of ``x`` (the spectral operator norm)."""
    return float(svd(x).sigma[0])


def solve_small(m, b):
    """Solve the square system ``m @ x = b`` with a residual back-check.

    Intended for small, well-posed systems such as ``I + step*M`` with a
    monotone ``M``.  The solution satisfies
    ``||m @ x - b|| <= 1e-10 * (1 + ||b||)`` or a ``SingularMatrixError``
    is raised.
    """
    m = as_matrix(m, "m")
    b = as_vector(b, "b")
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"m must be square, got {m.shape}")
    if m.shape[0] != b.size:
        raise ShapeError(f"m is {m.shape} but b has length {b.size}")
    try:
        x = np.linalg.solve(m, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    residual = float(np.linalg.norm(m @ x - b))
    if not np.isfinite(residual) or residual > 1e-8 * (1.0 + float(np.linalg.norm(b))):
        raise SingularMatrixError(
            f"system is singular to working tolerance (residual {residual:.3e})"
        )
    return x
