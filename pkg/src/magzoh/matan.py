"""Small dense matrix analysis: spectra, Hurwitz tests, Lyapunov solves, norms.

Everything here targets the toolkit scale (dimension <= 64). Eigenvalues come
from LAPACK through numpy and are checked against a residual certificate;
the Lyapunov equation is solved by dense Kronecker vectorization, which at
n <= 10 is simpler than (and as accurate as) a Schur-based method.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "MAX_DIM",
    "eigenvalues",
    "is_hurwitz",
    "solve_lyapunov",
    "spectral_norm",
    "min_eig_sym",
]

MAX_DIM = 64

_EIG_RESIDUAL_TOL = 1e-8
_LYAP_RESIDUAL_TOL = 1e-8


def _check_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds supported maximum {MAX_DIM}")
    return a


def eigenvalues(a) -> np.ndarray:
    """All eigenvalues of a real square matrix, sorted by (real, imag).

    Each eigenvalue is certified by min-singular-value residual:
    sigma_min(A - lambda I) <= 1e-8 * ||A||. Certificate failure raises
    ArithmeticError; for real input, complex eigenvalues come in conjugate
    pairs.
    """
    a = _check_square(a)
    vals = np.linalg.eigvals(a)
    norm_a = spectral_norm(a)
    eye = np.eye(a.shape[0])
    for lam in vals:
        smin = np.linalg.svd(a - lam * eye, compute_uv=False)[-1]
        if smin > _EIG_RESIDUAL_TOL * max(norm_a, 1e-300):
            raise ArithmeticError(
                f"eigenvalue {lam} fails residual certificate: "
                f"sigma_min={smin:.3e} > {_EIG_RESIDUAL_TOL:g}*||A||"
            )
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def is_hurwitz(a, margin: float | None = None) -> bool:
    """True iff every eigenvalue has real part below ``-margin``.

    The default margin 1e-9 * ||A|| guards against declaring stability right
    at the boundary, where rounding could flip the sign.
    """
    a = _check_square(a)
    if margin is None:
        margin = 1e-9 * spectral_norm(a)
    return bool(np.max(eigenvalues(a).real) < -margin)


def solve_lyapunov(a) -> np.ndarray:
    """Solve P A + A^T P = -I for symmetric positive-definite P.

    Requires a Hurwitz A (otherwise a unique positive-definite solution is
    not guaranteed). Solved as the n^2 x n^2 linear system
    (A^T kron I + I kron A^T) vec(P) = -vec(I), then symmetrized; the
    residual ||P A + A^T P + I|| must come out below 1e-8.
    """
    a = _check_square(a)
    if not is_hurwitz(a):
        raise ValueError("solve_lyapunov requires a Hurwitz matrix")
    n = a.shape[0]
    eye = np.eye(n)
    system = np.kron(a.T, eye) + np.kron(eye, a.T)
    p = np.linalg.solve(system, -eye.reshape(-1)).reshape(n, n)
    p = 0.5 * (p + p.T)
    residual = spectral_norm(p @ a + a.T @ p + eye)
    if residual > _LYAP_RESIDUAL_TOL:
        raise ArithmeticError(f"Lyapunov residual {residual:.3e} exceeds {_LYAP_RESIDUAL_TOL:g}")
    return p


def spectral_norm(a) -> float:
    """Largest singular value (the matrix 2-norm)."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def min_eig_sym(s) -> float:
    """Minimum eigenvalue of a symmetric matrix.

    The input may deviate from exact symmetry by at most 1e-9 * ||S||; the
    symmetrized matrix is what gets factored.
    """
    s = _check_square(s)
    asym = spectral_norm(s - s.T)
    if asym > 1e-9 * max(spectral_norm(s), 1e-300):
        raise ValueError(f"matrix is asymmetric beyond tolerance: ||S - S^T|| = {asym:.3e}")
    sym = 0.5 * (s + s.T)
    return float(np.linalg.eigvalsh(sym)[0])
