"""Small dense complex linear algebra used by the estimator.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The Hermitian
eigensolver is a cyclic complex Jacobi method and the small general
eigensolver works from the characteristic polynomial, so neither relies on
LAPACK's ``eig``/``eigh``. Least squares and the pseudo-inverse sit on top of
numpy's QR and SVD.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple

import numpy as np

from .errors import DefectiveMatrix, DidNotConverge, NonHermitian, RankDeficient

__all__ = [
    "EigenPair",
    "as_matrix",
    "eig_hermitian",
    "eig_general_small",
    "lstsq",
    "pinv",
    "char_poly",
    "poly_roots",
]

_EPS = np.finfo(float).eps


class EigenPair(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex array."""
    m = np.array(a, dtype=complex)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _normalize_phase(v: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made real positive
    idx = np.argmax(np.abs(v), axis=0)
    piv = v[idx, np.arange(v.shape[1])]
    ph = np.where(np.abs(piv) > 0, piv / np.where(piv == 0, 1, np.abs(piv)), 1)
    return v / ph


def eig_hermitian(a, max_sweeps: int = 60) -> EigenPair:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns real eigenvalues in descending order and orthonormal eigenvectors
    as columns, each rotated so its largest-magnitude entry is real positive.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError("matrix must be square")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.conj().T) > 1e-9 * scale:
        raise NonHermitian("matrix is not Hermitian")
    if scale == 0.0:
        return EigenPair(np.zeros(n), np.eye(n, dtype=complex))

    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    tol = _EPS * scale
    pairs = list(itertools.combinations(range(n), 2))
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        off = np.linalg.norm(a[offdiag])
        if off <= tol:
            break
        for p, q in pairs:
            apq = a[p, q]
            mag = abs(apq)
            if mag <= 0.1 * tol / n:
                continue
            # unitary 2x2 rotation zeroing a[p, q]: a phase on q makes the
            # pivot real, then a real Givens rotation finishes the job
            ph = apq / mag
            app = a[p, p].real
            aqq = a[q, q].real
            theta = 0.5 * np.arctan2(2.0 * mag, aqq - app)
            c = np.cos(theta)
            s = np.sin(theta)
            # columns: new_p = c*col_p - s*conj(ph)*col_q ; new_q = s*ph*col_p + c*col_q
            cp = a[:, p].copy()
            cq = a[:, q].copy()
            a[:, p] = c * cp - s * np.conj(ph) * cq
            a[:, q] = s * ph * cp + c * cq
            rp = a[p, :].copy()
            rq = a[q, :].copy()
            a[p, :] = c * rp - s * ph * rq
            a[q, :] = s * np.conj(ph) * rp + c * rq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp = v[:, p].copy()
            vq = v[:, q].copy()
            v[:, p] = c * vp - s * np.conj(ph) * vq
            v[:, q] = s * ph * vp + c * vq
    else:
        raise DidNotConverge(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = np.real(np.diag(a))
    order = np.argsort(-w, kind="stable")
    return EigenPair(w[order], _normalize_phase(v[:, order]))


def char_poly(a) -> np.ndarray:
    """Monic characteristic polynomial coefficients, highest degree first.

    Faddeev-LeVerrier recursion; adequate for the K <= 4 matrices used here.
    """
    a = as_matrix(a)
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a)
    eye = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * eye
        coeffs.append(-np.trace(a @ m) / k)
    return np.array(coeffs)


def _quadratic_roots(b: complex, c: complex) -> list[complex]:
    # x^2 + b x + c, cancellation-free form
    disc = np.sqrt(complex(b * b - 4 * c))
    if (np.conj(b) * disc).real < 0:
        disc = -disc
    qq = -0.5 * (b + disc)
    if qq == 0:
        return [0j, 0j]
    return [complex(qq), complex(c / qq)]


def _cubic_roots(b: complex, c: complex, d: complex) -> list[complex]:
    # x^3 + b x^2 + c x + d via the depressed cubic t^3 + p t + q
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    disc = np.sqrt(complex(q * q / 4.0 + p**3 / 27.0))
    w1 = -q / 2.0 + disc
    w2 = -q / 2.0 - disc
    w = w1 if abs(w1) >= abs(w2) else w2
    if w == 0:
        return [complex(-shift)] * 3
    u = complex(w) ** (1.0 / 3.0)
    omega = np.exp(2j * np.pi / 3.0)
    roots = []
    for k in range(3):
        uk = u * omega**k
        roots.append(complex(uk - p / (3.0 * uk) - shift))
    return roots


def _aberth(coeffs: np.ndarray, iters: int = 500) -> list[complex]:
    n = len(coeffs) - 1
    dcoeffs = np.polyder(coeffs)
    radius = 1.0 + np.max(np.abs(coeffs[1:]))
    z = radius * 0.5 * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(iters):
        pz = np.polyval(coeffs, z)
        dz = np.polyval(dcoeffs, z)
        ratio = np.where(dz != 0, pz / np.where(dz == 0, 1, dz), 0)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        rep = np.sum(1.0 / diff, axis=1)
        step = ratio / (1.0 - ratio * rep)
        z = z - step
        if np.all(np.abs(step) <= 4 * _EPS * np.maximum(np.abs(z), 1.0)):
            break
    return [complex(x) for x in z]


def _polish(coeffs: np.ndarray, root: complex, steps: int = 3) -> complex:
    dcoeffs = np.polyder(coeffs)
    best = root
    best_res = abs(np.polyval(coeffs, root))
    x = root
    for _ in range(steps):
        dp = np.polyval(dcoeffs, x)
        if dp == 0:
            break
        x = x - np.polyval(coeffs, x) / dp
        res = abs(np.polyval(coeffs, x))
        if res < best_res:
            best, best_res = x, res
        else:
            break
    return complex(best)


def poly_roots(coeffs) -> list[complex]:
    """Roots of a monic polynomial of degree <= 4 (highest degree first)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    coeffs = coeffs / coeffs[0]
    deg = len(coeffs) - 1
    if deg == 0:
        return []
    if deg == 1:
        return [complex(-coeffs[1])]
    if deg == 2:
        roots = _quadratic_roots(coeffs[1], coeffs[2])
    elif deg == 3:
        roots = _cubic_roots(coeffs[1], coeffs[2], coeffs[3])
    elif deg == 4:
        roots = _aberth(coeffs)
    else:
        raise ValueError("polynomial degree above 4 is not supported")
    return [_polish(coeffs, r) for r in roots]


def _group(values: list[complex], tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, lam in enumerate(values):
        for g in groups:
            if abs(values[g[0]] - lam) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def eig_general_small(a) -> EigenPair:
    """Eigenpairs of a general complex matrix of dimension 1 to 4.

    Eigenvalues are roots of the characteristic polynomial; eigenvectors are
    right singular vectors spanning the numerical null space of ``A - lam I``.
    Raises :class:`DefectiveMatrix` when a repeated eigenvalue lacks a full
    eigenspace.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError("matrix must be square")
    if not 1 <= n <= 4:
        raise ValueError("dimension must be between 1 and 4")
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    if n == 1:
        return EigenPair(np.array([a[0, 0]]), np.ones((1, 1), dtype=complex))

    values = poly_roots(char_poly(a))
    res_tol = 1e-8 * scale
    vectors = np.zeros((n, n), dtype=complex)
    eye = np.eye(n)
    for group in _group(values, 1e-6 * scale):
        lam = np.mean([values[i] for i in group])
        _, sv, vh = np.linalg.svd(a - lam * eye)
        basis = vh[n - len(group):].conj().T
        if sv[n - len(group)] > res_tol:
            raise DefectiveMatrix(
                f"eigenvalue {lam:.6g} has algebraic multiplicity {len(group)} "
                "but a deficient eigenspace"
            )
        for col, i in enumerate(group):
            vectors[:, i] = basis[:, col]

    values_arr = np.array(values)
    vectors = _normalize_phase(vectors)
    resid = np.linalg.norm(a @ vectors - vectors * values_arr, axis=0)
    if np.any(resid > res_tol):
        raise DefectiveMatrix(f"eigenvector residual {resid.max():.3g} exceeds tolerance")
    return EigenPair(values_arr, vectors)


def lstsq(a, b) -> np.ndarray:
    """Least-squares solution of ``A X = B`` for full-column-rank ``A``."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError("row count mismatch")
    if a.shape[0] < a.shape[1]:
        raise RankDeficient("underdetermined system")
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0 or sv[-1] / sv[0] <= 1e-12:
        raise RankDeficient("matrix is numerically rank deficient")
    q, r = np.linalg.qr(a)
    return np.linalg.solve(r, q.conj().T @ b)


def pinv(a) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with singular values below 1e-12*max dropped."""
    a = as_matrix(a)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(a.shape[::-1], dtype=complex)
    keep = s > 1e-12 * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv_s) @ u.conj().T
