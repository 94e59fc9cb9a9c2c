"""Minimal dense complex linear-algebra kernel.

Orthonormal column bases, orthogonal projection against a column subset, and
least-squares solves: exactly what the pursuit and certificate code needs.
Projections go through least squares; the explicit m x m projector is never
formed.
"""

import numpy as np

from .errors import RankDeficientSupport, ZeroMatrix

# Numerical rank: singular values above DEFAULT_RTOL times the largest count.
DEFAULT_RTOL = 1e-10
# Absolute floor below which a matrix counts as zero.
ABS_ZERO_FLOOR = 1e-14


def as_complex_matrix(M):
    """Coerce to a 2-d complex ndarray; 1-d input becomes a single column."""
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError("expected a nonempty matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


def _column_subset(A, S):
    """Validated, sorted column indices into A."""
    items = [int(g) for g in S]
    idx = sorted(set(items))
    if len(idx) != len(items):
        raise ValueError("support indices must be distinct")
    if idx and (idx[0] < 0 or idx[-1] >= A.shape[1]):
        raise ValueError("support index out of range")
    return idx


def _require_full_column_rank(B, rtol):
    s = np.linalg.svd(B, compute_uv=False)
    if s[0] <= ABS_ZERO_FLOOR or s[-1] <= rtol * s[0]:
        raise RankDeficientSupport(
            "selected columns are numerically rank deficient "
            f"(min/max singular value {s[-1]:.3e}/{s[0]:.3e})"
        )


def orthonormal_basis(M, rtol=DEFAULT_RTOL):
    """Orthonormal basis of the column space of M.

    The numerical rank r counts singular values above ``rtol`` times the
    largest one; the result is m x r with U^H U = I to ~1e-15.

    Raises ZeroMatrix when every entry of M sits below the absolute floor.
    """
    if rtol <= 0:
        raise ValueError("rtol must be positive")
    M = as_complex_matrix(M)
    if np.max(np.abs(M)) < ABS_ZERO_FLOOR:
        raise ZeroMatrix("cannot orthonormalize a zero matrix")
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    rank = int(np.count_nonzero(s > rtol * s[0]))
    return U[:, :rank]


def project_out(A, S, M, rtol=DEFAULT_RTOL):
    """Project the columns of M onto the orthogonal complement of span(A_S).

    Computed as M - A_S (A_S^+ M) via a least-squares solve.  An empty S
    returns M unchanged.  Raises RankDeficientSupport when A_S is numerically
    rank deficient.
    """
    A = as_complex_matrix(A)
    M = as_complex_matrix(M)
    idx = _column_subset(A, S)
    if not idx:
        return M.copy()
    AS = A[:, idx]
    _require_full_column_rank(AS, rtol)
    coef, *_ = np.linalg.lstsq(AS, M, rcond=None)
    return M - AS @ coef


def least_squares(A_S, Y, rtol=DEFAULT_RTOL):
    """Least-squares solution X minimizing ||Y - A_S X||_F.

    A_S must have full column rank; the residual is orthogonal to its
    columns.
    """
    A_S = as_complex_matrix(A_S)
    Y = as_complex_matrix(Y)
    if A_S.shape[0] != Y.shape[0]:
        raise ValueError("row counts of A_S and Y differ")
    _require_full_column_rank(A_S, rtol)
    X, *_ = np.linalg.lstsq(A_S, Y, rcond=None)
    return X
