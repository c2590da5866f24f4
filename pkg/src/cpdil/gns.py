"""GNS correspondences of CP maps on M_n and the flip test for commutation.

A module element is stored concretely as a tuple ``(X_alpha)`` of n x n
matrices with M_n-valued inner product ``<X, Y> = sum X_alpha* Y_alpha``,
left action ``a X_alpha`` and right action ``X_alpha b``. For a CP map
with Kraus operators ``T_alpha`` the simple tensor ``a (x) b`` of
``M (x)_Theta M`` is the tuple ``(a T_alpha* b)``; the definitional inner
product ``b* Theta(a* c) d`` is evaluated separately and compared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Channel, apply, commutation_defect, matrix_unit, minimal_kraus
from .config import RANK_THRESHOLD, TOL_VERIFY
from .errors import DimTooLarge, Infeasible, NotCommuting
from .numerics import complement_basis, herm_eig, numerical_rank, unitary_defect
from .report import Report

MAX_DIM = 3


def _units(n: int) -> list[np.ndarray]:
    return [matrix_unit(n, i, j) for i in range(n) for j in range(n)]


@dataclass
class HilbertModule:
    """Finite right Hilbert M_n-module realized inside ``M_n^k``.

    Attributes
    ----------
    family : ndarray, shape (N, k, n, n)
        Spanning vectors.
    xi : ndarray, shape (k, n, n) or None
        Distinguished cyclic vector.
    """

    n: int
    family: np.ndarray
    xi: np.ndarray | None = None
    rel_tol: float = RANK_THRESHOLD
    labels: list = field(default_factory=list)

    @property
    def width(self) -> int:
        return self.family.shape[1]

    @staticmethod
    def inner(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """M_n-valued inner product ``sum_alpha x_alpha* y_alpha``."""
        return np.einsum("kba,kbc->ac", np.conj(x), y)

    @staticmethod
    def left(a: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.einsum("ab,kbc->kac", a, x)

    @staticmethod
    def right(x: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("kab,bc->kac", x, b)

    def scalar_gram(self) -> np.ndarray:
        """``tau(<x_p, x_q>)`` over the spanning family."""
        v = self.family.reshape(self.family.shape[0], -1)
        return (v.conj() @ v.T) / self.n

    @property
    def rank(self) -> int:
        w, _ = herm_eig(self.scalar_gram(), tol=1e-8)
        return numerical_rank(w, self.rel_tol)

    def min_eig(self) -> float:
        w, _ = herm_eig(self.scalar_gram(), tol=1e-8)
        return float(w[-1])


@dataclass
class GnsModule(HilbertModule):
    """``M (x)_Theta M`` with cyclic vector ``xi = 1 (x) 1``."""

    channel: Channel | None = None
    kraus: np.ndarray | None = None
    definitional_gram: np.ndarray | None = None

    def cyclic_residual(self, probes=None) -> float:
        """Worst ``||<xi, a xi> - Theta(a)||`` over matrix units (or probes)."""
        probes = _units(self.n) if probes is None else probes
        worst = 0.0
        for a in probes:
            val = self.inner(self.xi, self.left(a, self.xi))
            worst = max(worst, float(np.linalg.norm(val - apply(self.channel, a))))
        return worst

    def model_residual(self) -> float:
        """Distance between the concrete and the definitional scalar Gram."""
        return float(np.linalg.norm(self.scalar_gram() - self.definitional_gram))


def gns_module(theta: Channel, rel_tol: float = RANK_THRESHOLD) -> GnsModule:
    """GNS correspondence of a CP map.

    Raises
    ------
    NotCP
        From the Kraus extraction when the Choi matrix is not PSD.
    DimTooLarge
        For ``n > 3``.
    """
    n = theta.dim
    if n > MAX_DIM:
        raise DimTooLarge(f"n = {n} exceeds {MAX_DIM}")
    t = minimal_kraus(theta, rel_tol).ops
    tstar = np.conj(np.transpose(t, (0, 2, 1)))
    units = _units(n)
    family = np.array([[a @ ts @ b for ts in tstar] for a in units for b in units])
    labels = [(p, q) for p in range(len(units)) for q in range(len(units))]
    # definitional form tau(b* Theta(a* c) d)
    size = len(units) ** 2
    dg = np.zeros((size, size), dtype=complex)
    for ia, a in enumerate(units):
        for ic, c in enumerate(units):
            y = apply(theta, a.conj().T @ c)
            for ib, b in enumerate(units):
                for id_, d in enumerate(units):
                    dg[ia * len(units) + ib, ic * len(units) + id_] = np.trace(b.conj().T @ y @ d) / n
    return GnsModule(
        n=n,
        family=family,
        xi=tstar.copy(),
        rel_tol=rel_tol,
        labels=labels,
        channel=theta,
        kraus=t,
        definitional_gram=dg,
    )


@dataclass
class TensorModule(HilbertModule):
    """Balanced tensor product of two concrete modules."""

    first: HilbertModule | None = None
    second: HilbertModule | None = None
    balance_residual: float = 0.0


def _tensor_vec(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("iab,jbc->ijac", x, y).reshape(-1, x.shape[1], x.shape[2])


def _formal_inner(e: HilbertModule, f: HilbertModule, x, y, w, z) -> np.ndarray:
    # <x (x) y, w (x) z> = <y, <x, w> z>
    return f.inner(y, f.left(e.inner(x, w), z))


def module_tensor(
    e: HilbertModule, f: HilbertModule, probes: int = 8, seed: int = 0
) -> TensorModule:
    """Balanced tensor product ``E (x) F``.

    The balanced relation ``(x a) (x) y ~ x (x) (a y)`` is checked with
    the formal inner product ``<x (x) y, w (x) z> = <y, <x, w> z>`` on
    random probes; the largest scalarized squared norm of the difference
    (its value under the Gram form) is stored in ``balance_residual``.
    """
    if e.n != f.n:
        raise ValueError("modules over different algebras")
    n = e.n
    fam = np.array([_tensor_vec(x, y) for x in e.family for y in f.family])
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(probes):
        x = e.family[rng.integers(len(e.family))]
        y = f.family[rng.integers(len(f.family))]
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        xa, ay = e.right(x, a), f.left(a, y)
        nrm = (
            _formal_inner(e, f, xa, y, xa, y)
            - _formal_inner(e, f, xa, y, x, ay)
            - _formal_inner(e, f, x, ay, xa, y)
            + _formal_inner(e, f, x, ay, x, ay)
        )
        worst = max(worst, abs(np.trace(nrm)) / n)
    xi = None
    if e.xi is not None and f.xi is not None:
        xi = _tensor_vec(e.xi, f.xi)
    return TensorModule(n=n, family=fam, xi=xi, rel_tol=e.rel_tol, first=e, second=f, balance_residual=float(worst))


def tensor_inner_value(e: HilbertModule, f: HilbertModule) -> np.ndarray:
    """``<xi (x) eta, xi (x) eta>`` through the formal inner product."""
    return _formal_inner(e, f, e.xi, f.xi, e.xi, f.xi)


@dataclass
class FlipWitness:
    """Bimodule unitary ``E (x) F -> F (x) E`` as a tuple-mixing matrix.

    ``w[(l, kk), (i, j)]`` sends the ``(i, j)`` slot of an ``E (x) F``
    tuple to the ``(l, kk)`` slot of an ``F (x) E`` tuple.
    """

    w: np.ndarray
    constraint_residual: float
    unitarity: float
    bimodule_residual: float
    form_residual: float
    m: int
    k: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("ba,aij->bij", self.w, x)


def flip_witness(theta: Channel, phi: Channel, tol: float = TOL_VERIFY, rel_tol: float = RANK_THRESHOLD) -> FlipWitness:
    """Bimodule unitary carrying ``xi (x) eta`` to ``eta (x) xi``.

    Bimodule maps between ``M_n^p`` and ``M_n^q`` commute with both
    actions, so they are scalar ``q x p`` matrices acting on the tuple
    index. The constraint ``w(xi (x) eta) = eta (x) xi`` reads
    ``Z X = Z'`` with ``Z`` the matrix of ``vec(T_i* S_j*)`` columns and
    ``X = w^T``. Least squares fixes ``X`` on the row space of ``Z``; the
    remainder is completed isometrically in index order.

    Raises
    ------
    NotCommuting
        Precondition: the two maps must commute to ``tol``.
    Infeasible
        The determined part is not a co-isometry (no unitary solution).
    """
    defect = commutation_defect(theta, phi)
    if defect > tol:
        raise NotCommuting(f"maps do not commute: {defect:.3e}", defect)
    e = gns_module(theta, rel_tol)
    f = gns_module(phi, rel_tol)
    m, k = e.width, f.width
    n = theta.dim
    ef_xi = _tensor_vec(e.xi, f.xi)  # (i, j)
    fe_xi = _tensor_vec(f.xi, e.xi)  # (l, kk)
    zmat = np.array([x.reshape(-1, order="F") for x in ef_xi]).T
    zpmat = np.array([x.reshape(-1, order="F") for x in fe_xi]).T
    x0, *_ = np.linalg.lstsq(zmat, zpmat, rcond=None)
    constraint = float(np.linalg.norm(zmat @ x0 - zpmat))
    pinv = np.linalg.pinv(zmat, rcond=rel_tol)
    q = pinv @ zmat
    co = float(np.linalg.norm(x0 @ x0.conj().T - q))
    if constraint > tol or co > max(tol, 1e-8) * max(1.0, np.linalg.norm(q)):
        raise Infeasible(f"constraint residual {constraint:.3e}, co-isometry defect {co:.3e}", max(constraint, co))
    # complete: (I - Q) X maps ker(x0) onto range(I - Q)
    size = m * k
    wq, vq = herm_eig(q, tol=1e-8)
    rq = numerical_rank(wq, 0.5)
    row_basis = vq[:, :rq]
    wz, vz = herm_eig(x0.conj().T @ x0, tol=1e-8)
    rz = numerical_rank(wz, 0.5)
    col_basis = vz[:, :rz]
    left = complement_basis(row_basis, size)
    right = complement_basis(col_basis, size)
    x = q @ x0 + left @ right.conj().T
    w = x.T
    unit = unitary_defect(w)
    fw = FlipWitness(w, constraint, unit, 0.0, 0.0, m, k)
    fw.bimodule_residual = _bimodule_residual(fw, n)
    fw.form_residual = _form_residual(fw, e, f)
    return fw


def _bimodule_residual(fw: FlipWitness, n: int, samples: int = 6) -> float:
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(samples):
        x = rng.normal(size=(fw.m * fw.k, n, n)) + 1j * rng.normal(size=(fw.m * fw.k, n, n))
        for a in _units(n):
            for b in _units(n):
                lhs = fw.apply(HilbertModule.right(HilbertModule.left(a, x), b))
                rhs = HilbertModule.right(HilbertModule.left(a, fw.apply(x)), b)
                worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def _form_residual(fw: FlipWitness, e: HilbertModule, f: HilbertModule) -> float:
    # scalarized form on the tensor family before and after the flip
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(8):
        x = _tensor_vec(e.family[rng.integers(len(e.family))], f.family[rng.integers(len(f.family))])
        y = _tensor_vec(e.family[rng.integers(len(e.family))], f.family[rng.integers(len(f.family))])
        before = np.trace(HilbertModule.inner(x, y))
        after = np.trace(HilbertModule.inner(fw.apply(x), fw.apply(y)))
        worst = max(worst, abs(before - after) / e.n)
    return float(worst)


def witness_as_bimodule(u: np.ndarray, m: int, k: int) -> np.ndarray:
    """Transport a Kraus-level witness to a tuple-mixing matrix.

    Taking adjoints in ``T_kk S_l = sum u[(kk,l),(i,j)] S_j T_i`` gives
    ``w[(l, kk), (i, j)] = conj(u[(kk, l), (i, j)])``.
    """
    u4 = np.asarray(u).reshape(m, k, m, k)
    return np.conj(np.transpose(u4, (1, 0, 2, 3))).reshape(m * k, m * k)


def compare_flips(fw: FlipWitness, theta: Channel, phi: Channel, u: np.ndarray) -> Report:
    """Compare on the spanning vectors ``a (xi (x) eta) b`` of the cyclic sub-bimodule."""
    e_xi = np.conj(np.transpose(minimal_kraus(theta).ops, (0, 2, 1)))
    f_xi = np.conj(np.transpose(minimal_kraus(phi).ops, (0, 2, 1)))
    z = _tensor_vec(e_xi, f_xi)
    wu = witness_as_bimodule(u, fw.m, fw.k)
    n = theta.dim
    worst = 0.0
    for a in _units(n):
        for b in _units(n):
            v = HilbertModule.right(HilbertModule.left(a, z), b)
            d = fw.apply(v) - np.einsum("ba,aij->bij", wu, v)
            worst = max(worst, float(np.linalg.norm(d)))
    return Report.from_residual("flip_match", worst, 1e-8, full_difference=float(np.linalg.norm(fw.w - wu)))
