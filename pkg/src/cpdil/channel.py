"""Completely positive maps on M_n held as Choi matrices.

Conventions
-----------
``choi = sum_ij E_ij (x) Theta(E_ij)``, indexed ``choi[i*n + r, j*n + s]``
``= Theta(E_ij)[r, s]``. For a Kraus operator ``T`` the Choi contribution is
``vec(T) vec(T)*`` with column-stacking ``vec``. Superoperators act on
column-stacked vectors: ``vec(Theta(a)) = S @ vec(a)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .config import RANK_THRESHOLD, TOL_VERIFY
from .errors import DimensionMismatch, NotCP
from .numerics import as_cmatrix, herm_eig, numerical_rank, unvec


@dataclass(frozen=True)
class KrausFamily:
    """Ordered Kraus operators, stacked as an ``(m, n, n)`` array."""

    ops: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.ops, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionMismatch(f"Kraus stack must have shape (m, n, n), got {ops.shape}")
        object.__setattr__(self, "ops", ops)

    @property
    def rank(self) -> int:
        return self.ops.shape[0]

    @property
    def dim(self) -> int:
        return self.ops.shape[1]

    def __len__(self) -> int:
        return self.rank

    def __getitem__(self, i) -> np.ndarray:
        return self.ops[i]

    def __iter__(self):
        return iter(self.ops)

    def row_sum(self) -> np.ndarray:
        """``sum_i T_i T_i*``, which is ``Theta(I)``."""
        return np.einsum("iab,icb->ac", self.ops, self.ops.conj())

    def vec_gram(self) -> np.ndarray:
        """Gram matrix of ``vec(T_i)``; diagonal for a minimal family."""
        v = self.vecs()
        return v.conj().T @ v

    def vecs(self) -> np.ndarray:
        """Matrix with columns ``vec(T_i)``."""
        m, n, _ = self.ops.shape
        return np.transpose(self.ops, (0, 2, 1)).reshape(m, n * n).T

    def channel(self) -> "Channel":
        return from_kraus(self.ops)


class Channel:
    """A linear map on M_n, stored by its Choi matrix.

    The minimal Kraus family is derived lazily on first access of
    :attr:`kraus` and cached.
    """

    def __init__(self, choi, dim: int | None = None):
        c = as_cmatrix(choi, "choi")
        n2 = c.shape[0]
        n = int(round(np.sqrt(n2))) if dim is None else int(dim)
        if c.shape != (n * n, n * n):
            raise DimensionMismatch(f"choi shape {c.shape} does not match dim {n}")
        c.setflags(write=False)
        self.dim = n
        self.choi = c

    def __repr__(self) -> str:
        return f"Channel(dim={self.dim}, rank={self.kraus.rank})"

    @classmethod
    def identity(cls, n: int) -> "Channel":
        return from_kraus([np.eye(n)])

    @property
    def choi4(self) -> np.ndarray:
        """Choi as ``[i, r, j, s] = Theta(E_ij)[r, s]``."""
        n = self.dim
        return self.choi.reshape(n, n, n, n)

    @cached_property
    def kraus(self) -> KrausFamily:
        return minimal_kraus(self)

    @cached_property
    def superop(self) -> np.ndarray:
        n = self.dim
        # S[r + n s, i + n j] = choi[i, r, j, s]
        return np.transpose(self.choi4, (3, 1, 2, 0)).reshape(n * n, n * n)

    def apply(self, a) -> np.ndarray:
        return apply(self, a)

    __call__ = apply


def from_kraus(ops: Iterable) -> Channel:
    """Channel ``a -> sum_i T_i a T_i*``.

    Examples
    --------
    >>> import numpy as np
    >>> x = np.array([[0, 1], [1, 0]])
    >>> ch = from_kraus([np.eye(2) / np.sqrt(2), x / np.sqrt(2)])
    >>> np.round(np.linalg.eigvalsh(ch.choi)[::-1], 12).tolist()
    [1.0, 1.0, 0.0, 0.0]
    """
    stack = np.asarray([np.asarray(t, dtype=complex) for t in ops])
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise DimensionMismatch("Kraus operators must all be square of one size")
    n = stack.shape[1]
    v = KrausFamily(stack).vecs()
    return Channel(v @ v.conj().T, n)


def from_superop(s) -> Channel:
    s = as_cmatrix(s, "superoperator")
    n = int(round(np.sqrt(s.shape[0])))
    if s.shape != (n * n, n * n):
        raise DimensionMismatch(f"superoperator shape {s.shape} is not n^2 x n^2")
    s4 = s.reshape(n, n, n, n)  # [s, r, j, i]
    return Channel(np.transpose(s4, (3, 1, 2, 0)).reshape(n * n, n * n), n)


def from_function(fn, n: int) -> Channel:
    """Choi matrix of an arbitrary linear map given as a callable."""
    c = np.zeros((n, n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            c[i, :, j, :] = fn(e)
    return Channel(c.reshape(n * n, n * n), n)


def minimal_kraus(ch: Channel, tol: float = RANK_THRESHOLD, cp_tol: float = TOL_VERIFY) -> KrausFamily:
    """Minimal Kraus family from the Choi eigen-decomposition.

    Eigenvalues at most ``tol`` times the largest count as zero. The
    operators come out ordered by decreasing Choi eigenvalue and are
    orthogonal in the ``vec`` inner product.

    Raises
    ------
    NotCP
        If the Choi matrix has an eigenvalue below ``-cp_tol``.
    """
    n = ch.dim
    w, q = herm_eig(ch.choi, tol=cp_tol)
    if w[-1] < -cp_tol:
        raise NotCP(f"Choi matrix has eigenvalue {w[-1]:.3e}")
    m = numerical_rank(w, tol)
    ops = np.array([np.sqrt(w[k]) * unvec(q[:, k], n) for k in range(m)], dtype=complex)
    if m == 0:
        ops = np.zeros((0, n, n), dtype=complex)
    return KrausFamily(ops)


def _check_same_dim(*chans: Channel) -> int:
    dims = {c.dim for c in chans}
    if len(dims) != 1:
        raise DimensionMismatch(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def apply(ch: Channel, a) -> np.ndarray:
    a = as_cmatrix(a)
    if a.shape != (ch.dim, ch.dim):
        raise DimensionMismatch(f"operand shape {a.shape} vs channel dim {ch.dim}")
    return np.einsum("ij,irjs->rs", a, ch.choi4)


def compose(*chans: Channel) -> Channel:
    """``compose(A, B)(a) = A(B(a))``; more arguments nest further."""
    _check_same_dim(*chans)
    s = chans[0].superop
    for c in chans[1:]:
        s = s @ c.superop
    return from_superop(s)


def dual(ch: Channel) -> Channel:
    """Predual action: ``tr(dual(ch)(rho) a) = tr(rho ch(a))``."""
    return from_superop(ch.superop.conj().T)


def choi_distance(a: Channel, b: Channel) -> float:
    _check_same_dim(a, b)
    return float(np.linalg.norm(a.choi - b.choi))


def is_cp(ch: Channel, tol: float = TOL_VERIFY) -> bool:
    w, _ = herm_eig(ch.choi, tol=max(tol, 1e-9))
    return bool(w[-1] >= -tol)


def is_contractive(ch: Channel, tol: float = TOL_VERIFY) -> bool:
    w, _ = herm_eig(apply(ch, np.eye(ch.dim)), tol=max(tol, 1e-9))
    return bool(w[0] <= 1.0 + tol)


def is_unital(ch: Channel, tol: float = TOL_VERIFY) -> bool:
    return bool(np.linalg.norm(apply(ch, np.eye(ch.dim)) - np.eye(ch.dim)) <= tol)


def endomorphism_defect(ch: Channel) -> float:
    """Worst violation of multiplicativity and *-preservation on matrix units."""
    n = ch.dim
    c4 = ch.choi4
    images = np.transpose(c4, (0, 2, 1, 3))  # [i, j] -> Theta(E_ij)
    worst = 0.0
    for i in range(n):
        for j in range(n):
            worst = max(worst, float(np.linalg.norm(images[j, i] - images[i, j].conj().T)))
            for k in range(n):
                for l in range(n):
                    lhs = images[i, l] if j == k else 0.0
                    worst = max(worst, float(np.linalg.norm(lhs - images[i, j] @ images[k, l])))
    return worst


def is_endomorphism(ch: Channel, tol: float = TOL_VERIFY) -> bool:
    return endomorphism_defect(ch) <= tol


def commutation_defect(a: Channel, b: Channel) -> float:
    return choi_distance(compose(a, b), compose(b, a))


def commute_check(a: Channel, b: Channel, tol: float = TOL_VERIFY) -> bool:
    """True iff ``||choi(AB) - choi(BA)||_F <= tol``."""
    return commutation_defect(a, b) <= tol


def kraus_relation(v: Sequence[np.ndarray], w: Sequence[np.ndarray]) -> tuple[np.ndarray, float]:
    """Least-squares ``c`` with ``V_i = sum_j c[i, j] W_j``; returns ``(c, residual)``."""
    vv = KrausFamily(np.asarray(v)).vecs()
    ww = KrausFamily(np.asarray(w)).vecs()
    ct, *_ = np.linalg.lstsq(ww, vv, rcond=None)
    return ct.T, float(np.linalg.norm(ww @ ct - vv))


@dataclass(frozen=True)
class Density:
    """Positive (possibly subnormalized) density matrix."""

    mat: np.ndarray
    tol: float = TOL_VERIFY

    def __post_init__(self):
        m = as_cmatrix(self.mat, "density")
        w, _ = herm_eig(m, tol=max(self.tol, 1e-9))
        if w[-1] < -self.tol:
            raise NotCP(f"density has eigenvalue {w[-1]:.3e}")
        if np.trace(m).real > 1.0 + self.tol:
            raise ValueError(f"density trace {np.trace(m).real:.6g} exceeds 1")
        object.__setattr__(self, "mat", 0.5 * (m + m.conj().T))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __call__(self, a) -> complex:
        """Normal functional ``a -> tr(rho a)``."""
        return complex(np.trace(self.mat @ np.asarray(a)))


def matrix_unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


def random_kraus(rng: np.random.Generator, n: int, m: int, scale: float = 1.0) -> np.ndarray:
    """Random Kraus stack normalized so ``||sum T T*|| = scale``."""
    ops = rng.normal(size=(m, n, n)) + 1j * rng.normal(size=(m, n, n))
    top = np.linalg.norm(KrausFamily(ops).row_sum(), 2)
    return ops * np.sqrt(scale / top)


def random_channel(rng: np.random.Generator, n: int, m: int, scale: float = 1.0) -> Channel:
    return from_kraus(random_kraus(rng, n, m, scale))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))

