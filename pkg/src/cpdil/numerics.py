"""Dense complex linear algebra used throughout the package.

Eigen-decompositions of Hermitian matrices go through a cyclic Jacobi
solver with a fixed sweep order, so repeated runs produce identical
output. Above ``JACOBI_MAX_DIM`` the LAPACK solver is used instead,
because Gram matrices of truncated dilations reach a few hundred rows.
"""

from __future__ import annotations

import numpy as np

from .errors import NotHermitian

JACOBI_MAX_DIM = 32
_EPS = np.finfo(float).eps


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-d complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def hermitian_defect(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - a.conj().T))


def _check_hermitian(a: np.ndarray, tol: float) -> None:
    if a.shape[0] != a.shape[1]:
        raise NotHermitian(f"not square: {a.shape}")
    scale = max(1.0, float(np.linalg.norm(a)))
    defect = hermitian_defect(a)
    if defect > tol * scale:
        raise NotHermitian(f"||A - A*|| = {defect:.3e} exceeds tolerance")


def _jacobi(a: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return a.real.diagonal().copy(), v
    fro = np.linalg.norm(a)
    if fro == 0.0:
        return np.zeros(n), v
    target = (_EPS * fro) ** 2
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a))) ** 2
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= _EPS * 1e-3 * fro:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                phase = apq / mag
                tau = (aqq - app) / (2.0 * mag)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # J acts on columns (p, q): J = [[c, s], [-s*conj(phase), c*conj(phase)]]
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = 0.0
                a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
    return a.real.diagonal().copy(), v


def herm_eig(a, tol: float = 1e-9, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Parameters
    ----------
    a : array_like
        Square matrix with ``||A - A*|| <= tol * max(1, ||A||)``.
    tol : float
        Hermiticity tolerance.
    method : {"auto", "jacobi", "lapack"}
        ``auto`` uses Jacobi up to ``JACOBI_MAX_DIM`` rows.

    Returns
    -------
    w : ndarray
        Real eigenvalues in descending order.
    q : ndarray
        Unitary matrix of eigenvectors (columns), ``A = Q diag(w) Q*``.
    """
    m = as_cmatrix(a)
    _check_hermitian(m, tol)
    n = m.shape[0]
    if method == "jacobi" or (method == "auto" and n <= JACOBI_MAX_DIM):
        w, q = _jacobi(m.copy())
    elif method in ("auto", "lapack"):
        w, q = np.linalg.eigh(0.5 * (m + m.conj().T))
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    return w[order], q[:, order]


def psd_min_eig(a, tol: float = 1e-9) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    w, _ = herm_eig(a, tol)
    return float(w[-1])


def numerical_rank(w: np.ndarray, rel_tol: float) -> int:
    """Count eigen/singular values above ``rel_tol`` times the largest."""
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        return 0
    top = float(np.max(np.abs(w)))
    if top == 0.0:
        return 0
    return int(np.sum(w > rel_tol * top))


def complement_basis(q: np.ndarray, n: int, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of the complement of ``range(q)`` in C^n.

    Built by Gram-Schmidt over the standard basis in index order, so the
    choice is deterministic.
    """
    q = np.asarray(q, dtype=complex).reshape(n, -1)
    need = n - q.shape[1]
    basis = [q[:, k] for k in range(q.shape[1])]
    out = []
    for i in range(n):
        if len(out) == need:
            break
        v = np.zeros(n, dtype=complex)
        v[i] = 1.0
        for _ in range(2):
            for b in basis:
                v = v - b * np.vdot(b, v)
        nv = np.linalg.norm(v)
        if nv > tol:
            v = v / nv
            basis.append(v)
            out.append(v)
    return np.array(out, dtype=complex).T.reshape(n, len(out))


def polar_unitary(x, kernel_policy: str = "identity_completion", tol: float = 1e-12) -> np.ndarray:
    """Unitary polar factor of a square matrix.

    On the support of ``X*X`` the factor satisfies ``X = U (X*X)^{1/2}``.
    On the kernel, the deterministic orthonormal basis of ``ker X`` is
    sent to the deterministic basis of ``coker X`` in index order.
    """
    if kernel_policy != "identity_completion":
        raise ValueError(f"unknown kernel policy {kernel_policy!r}")
    m = as_cmatrix(x)
    n = m.shape[0]
    if m.shape[1] != n:
        raise ValueError("polar_unitary needs a square matrix")
    left, sv, right_h = np.linalg.svd(m)
    r = numerical_rank(sv, tol)
    left_r = left[:, :r]
    right_r = right_h[:r, :].conj().T
    u = left_r @ right_r.conj().T
    if r < n:
        ker = complement_basis(right_r, n)
        coker = complement_basis(left_r, n)
        u = u + coker @ ker.conj().T
    return u


def _expm_taylor(a: np.ndarray, terms: int = 18) -> np.ndarray:
    n = a.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    return out


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor core.

    The matrix is scaled so its 1-norm is at most 1/2; eighteen Taylor
    terms then leave a truncation error below double precision.
    """
    m = as_cmatrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError("expm needs a square matrix")
    norm = float(np.linalg.norm(m, 1))
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    out = _expm_taylor(m / (2.0 ** s))
    for _ in range(s):
        out = out @ out
    return out


def sqrtm_psd(a, tol: float = 1e-9) -> np.ndarray:
    """Square root of a PSD matrix, negative round-off clipped."""
    w, q = herm_eig(a, tol)
    return (q * np.sqrt(np.clip(w, 0.0, None))) @ q.conj().T


def trace_norm(a) -> float:
    return float(np.sum(np.linalg.svd(as_cmatrix(a), compute_uv=False)))


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape(n, n, order="F")


def unitary_defect(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1])))


def projector_onto(cols: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projection onto the column span of ``cols``."""
    cols = np.asarray(cols, dtype=complex)
    if cols.size == 0:
        return np.zeros((cols.shape[0], cols.shape[0]), dtype=complex)
    left, sv, _ = np.linalg.svd(cols, full_matrices=False)
    r = numerical_rank(sv, rel_tol)
    q = left[:, :r]
    return q @ q.conj().T


def span_rank(cols: np.ndarray, rel_tol: float = 1e-10) -> int:
    cols = np.asarray(cols, dtype=complex)
    if cols.size == 0:
        return 0
    return numerical_rank(np.linalg.svd(cols, compute_uv=False), rel_tol)
