"""Small dense-matrix utilities and bracketed scalar root finding.

Everything here operates on plain numpy arrays.  Matrices are tiny
(p x p with p <= ~8), so clarity wins over asymptotics; the heavy
lifting is delegated to LAPACK through numpy.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .exceptions import DimensionMismatch, NoBracket, NoConvergence

DEFAULT_TOL = 1e-10

_SYM_RTOL = 1e-12


def as_sym_matrix(entries) -> np.ndarray:
    """Validate a square symmetric matrix and return its exact symmetrization.

    Asymmetry beyond 1e-12 relative to the largest entry magnitude is
    rejected; smaller asymmetry (round-off) is averaged away.
    """
    M = np.asarray(entries, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if float(np.max(np.abs(M - M.T))) > _SYM_RTOL * scale:
        raise ValueError("matrix is not symmetric within 1e-12 relative tolerance")
    return 0.5 * (M + M.T)


def solve_root_bracketed(f: Callable[[float], float], lo: float, hi: float,
                         tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Find a root of f on the bracket [lo, hi].

    Alternates secant steps with bisection so the bracket width is
    guaranteed to halve at least every other iteration.  Returns x with
    |f(x)| <= tol or bracket width <= tol; the result always lies in
    [lo, hi].  Deterministic for identical inputs.
    """
    if not lo < hi:
        raise NoBracket(f"invalid bracket: lo={lo!r} must be < hi={hi!r}")
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise NoBracket(f"f({lo})={fa} and f({hi})={fb} have the same sign")
    x = a
    for k in range(max_iter):
        if k % 2 == 0 and fb != fa:
            x = b - fb * (b - a) / (fb - fa)
            if not a < x < b:
                x = 0.5 * (a + b)
        else:
            x = 0.5 * (a + b)
        fx = float(f(x))
        if abs(fx) <= tol or (b - a) <= tol:
            return x
        if (fx > 0.0) == (fa > 0.0):
            a, fa = x, fx
        else:
            b, fb = x, fx
    raise NoConvergence(f"no root to tolerance {tol} within {max_iter} iterations")


def sym_rank(M, tol: float = DEFAULT_TOL) -> int:
    """Rank of a symmetric matrix: eigenvalues above tol * max(1, |lambda|_max)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_sym_matrix(M)
    vals = np.abs(np.linalg.eigvalsh(M))
    cut = tol * max(1.0, float(vals.max()))
    return int(np.count_nonzero(vals > cut))


def general_rank(M, tol: float = DEFAULT_TOL) -> int:
    """Rank of an arbitrary matrix via singular values, same cutoff rule."""
    svals = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if svals.size == 0:
        return 0
    cut = tol * max(1.0, float(svals.max()))
    return int(np.count_nonzero(svals > cut))


def generalized_inverse(M, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues with magnitude at most tol * max(1, |lambda|_max) are
    treated as zero.  For a regular matrix this is the ordinary inverse.
    """
    M = as_sym_matrix(M)
    vals, vecs = np.linalg.eigh(M)
    cut = tol * max(1.0, float(np.max(np.abs(vals))))
    keep = np.abs(vals) > cut
    inv_vals = np.zeros_like(vals)
    inv_vals[keep] = 1.0 / vals[keep]
    G = (vecs * inv_vals) @ vecs.T
    return 0.5 * (G + G.T)


def loewner_geq(M1, M2, tol: float = DEFAULT_TOL) -> bool:
    """True iff M1 - M2 is positive semidefinite up to tol on the spectrum."""
    A = as_sym_matrix(M1)
    B = as_sym_matrix(M2)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return float(np.linalg.eigvalsh(A - B).min()) >= -tol
