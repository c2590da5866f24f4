"""Strong commutativity of CP maps on M_n.

Two CP maps with minimal Kraus families ``{T_i}`` (rank m) and ``{S_j}``
(rank k) strongly commute when a unitary ``u`` of size ``mk`` satisfies
``T_i S_j = sum_(kk,l) u[(i,j),(kk,l)] S_l T_kk``. On full matrix
algebras this happens exactly when the maps commute, and the unitary is
found as a polar factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from . import _tensor
from .channel import Channel, KrausFamily, apply, commutation_defect, random_unitary
from .config import RANK_THRESHOLD, TOL_VERIFY, pmap
from .errors import CoherenceDefect, DimTooLarge, NotCommuting, SeedsNotCommuting, WitnessResidual
from .numerics import as_cmatrix, herm_eig, numerical_rank, polar_unitary, unitary_defect
from .report import Report
from .semigroup import CpSemigroup, Generator


@dataclass(frozen=True)
class FlipUnitary:
    """Witness of strong commutation at the Kraus level.

    Attributes
    ----------
    u : ndarray
        ``mk x mk``; row ``(i, j)``, column ``(kk, l)``, first index major.
    theta_ops, phi_ops : ndarray
        Kraus stacks ``T`` (rank m) and ``S`` (rank k) the witness refers to.
    """

    u: np.ndarray
    theta_ops: np.ndarray
    phi_ops: np.ndarray
    residual: float = 0.0
    unitarity: float = 0.0
    gram_defect: float = 0.0

    @property
    def m(self) -> int:
        return self.theta_ops.shape[0]

    @property
    def k(self) -> int:
        return self.phi_ops.shape[0]

    def flip4(self) -> np.ndarray:
        """Tensor ``phi[l, kk, i, j]`` of the map ``e_i (x) f_j -> f_l (x) e_kk``."""
        return _tensor.flip4(self.u, self.m, self.k)

    def flip_matrix(self) -> np.ndarray:
        """``phi`` as a matrix from ``E (x) F`` to ``F (x) E`` coordinates."""
        mk = self.m * self.k
        return self.flip4().reshape(mk, mk)


def _kraus_stack(x, rank_tol: float) -> np.ndarray:
    if isinstance(x, Channel):
        from .channel import minimal_kraus

        return minimal_kraus(x, rank_tol).ops
    if isinstance(x, KrausFamily):
        return x.ops
    ops = np.asarray(x, dtype=complex)
    if ops.ndim == 2:
        ops = ops[None]
    return ops


def _vecs(ops: np.ndarray) -> np.ndarray:
    return KrausFamily(ops).vecs()


def witness_unitary(theta, phi, tol: float = TOL_VERIFY, rank_tol: float = RANK_THRESHOLD) -> FlipUnitary:
    """Unitary witness of strong commutation.

    Parameters
    ----------
    theta, phi : Channel or Kraus stack
        Channels are reduced to their minimal Kraus families; explicit
        stacks are used as given.
    tol : float
        Threshold for ``||AA* - BB*||`` and for the re-verified residual.

    Raises
    ------
    NotCommuting
        The Gram test fails, i.e. the channels do not commute.
    WitnessResidual
        The polar factor does not reproduce the products to ``tol``.
    """
    t_ops = _kraus_stack(theta, rank_tol)
    s_ops = _kraus_stack(phi, rank_tol)
    m, k = t_ops.shape[0], s_ops.shape[0]
    ts = np.einsum("iab,jbc->ijac", t_ops, s_ops).reshape(m * k, *t_ops.shape[1:])
    st = np.einsum("lab,kbc->klac", s_ops, t_ops).reshape(m * k, *t_ops.shape[1:])
    a = _vecs(ts)
    b = _vecs(st)
    gram_defect = float(np.linalg.norm(a @ a.conj().T - b @ b.conj().T))
    if gram_defect > tol:
        raise NotCommuting(f"||AA* - BB*|| = {gram_defect:.3e}", gram_defect)
    w = polar_unitary(b.conj().T @ a)
    u = w.T
    residual = float(np.max(np.linalg.norm(a - b @ w, axis=0))) if m * k else 0.0
    unit = unitary_defect(u)
    if residual > tol or unit > max(tol, 1e-10):
        raise WitnessResidual(f"witness residual {residual:.3e}, unitarity {unit:.3e}", residual)
    return FlipUnitary(u, t_ops, s_ops, residual, unit, gram_defect)


def witness_residual(fu: FlipUnitary) -> float:
    """Worst ``||T_i S_j - sum u S_l T_kk||`` recomputed from the operators."""
    t, s = fu.theta_ops, fu.phi_ops
    m, k = fu.m, fu.k
    u4 = fu.u.reshape(m, k, m, k)
    lhs = np.einsum("iab,jbc->ijac", t, s)
    rhs = np.einsum("ijkl,lab,kbc->ijac", u4, s, t)
    return float(np.max(np.linalg.norm(lhs - rhs, axis=(2, 3)))) if m * k else 0.0


@dataclass
class TriTensorSpace:
    """Finite quotient of a spanning family of simple tensors.

    ``gram`` is indexed by the family ``a (x) b (x) e_h`` with ``a, b``
    matrix units and ``h`` a standard basis index, ordered lexicographically.
    """

    gram: np.ndarray
    rank: int
    coords: np.ndarray
    gap: float
    min_eig: float


def _tri_space(outer: Channel, inner: Channel, rel_tol: float) -> TriTensorSpace:
    # <a(x)b(x)h, c(x)d(x)k> = <h, outer(b* inner(a* c) d) k>, matrix units a..d
    n = outer.dim
    units = []
    for p in range(n):
        for q in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[p, q] = 1.0
            units.append(e)
    size = len(units) ** 2 * n
    gram = np.zeros((len(units), len(units), n, len(units), len(units), n), dtype=complex)
    for ia, a in enumerate(units):
        for ic, c in enumerate(units):
            y = apply(inner, a.conj().T @ c)
            if not np.any(y):
                continue
            for ib, b in enumerate(units):
                left = b.conj().T @ y
                if not np.any(left):
                    continue
                for id_, d in enumerate(units):
                    gram[ia, ib, :, ic, id_, :] = apply(outer, left @ d)
    g = gram.reshape(size, size)
    w, q = herm_eig(g, tol=1e-9)
    r = numerical_rank(w, rel_tol)
    kept = w[r - 1] if r else 0.0
    dropped = max(abs(w[r]), 1e-300) if r < w.size else 0.0
    gap = float(kept / dropped) if dropped else float("inf")
    coords = (q[:, :r] * np.sqrt(np.clip(w[:r], 0, None))).conj().T
    return TriTensorSpace(g, r, coords, gap, float(w[-1]))


def space_dims(theta: Channel, phi: Channel, rel_tol: float = RANK_THRESHOLD, max_dim: int = 3):
    """Dimensions of the two triple tensor spaces of a pair of CP maps.

    Returns
    -------
    d1 : int
        Rank of the space built with ``phi`` inside and ``theta`` outside.
    d2 : int
        Rank of the swapped space.
    defect : float
        ``||choi(theta phi) - choi(phi theta)||_F``.
    """
    if theta.dim != phi.dim:
        raise ValueError("maps act on different algebras")
    if theta.dim > max_dim:
        raise DimTooLarge(f"n = {theta.dim} exceeds the brute-force limit {max_dim}")
    s1 = _tri_space(theta, phi, rel_tol)
    s2 = _tri_space(phi, theta, rel_tol)
    return s1.rank, s2.rank, commutation_defect(theta, phi)


def tri_spaces(theta: Channel, phi: Channel, rel_tol: float = RANK_THRESHOLD):
    """Both :class:`TriTensorSpace` objects, for inspection."""
    if theta.dim > 3:
        raise DimTooLarge(f"n = {theta.dim} exceeds the brute-force limit 3")
    return _tri_space(theta, phi, rel_tol), _tri_space(phi, theta, rel_tol)


def _isometry_into(products: np.ndarray, coarse: np.ndarray) -> tuple[np.ndarray, float]:
    """``c`` with ``products[a] = sum_q c[a, q] coarse[q]`` and its residual."""
    p = _vecs(products)
    q = _vecs(coarse)
    ct, *_ = np.linalg.lstsq(q, p, rcond=None)
    return ct.T, float(np.linalg.norm(q @ ct - p))


def _coherence_first(u_d, u_s, u_sp, c):
    """Defect of the first-variable diagram.

    ``u_d`` flips E(s+s') with F(t); ``u_s`` and ``u_sp`` flip E(s), E(s')
    with F(t); ``c`` expresses products T_i T'_i' in the E(s+s') family.
    """
    m1, kf = u_s.m, u_s.k
    m2 = u_sp.m
    mq = u_d.m
    iota = c.conj()  # e_q -> sum_a conj(c[a, q]) e_a, rows a = (i, i')
    # left: (I (x) phi_{s',t})(iota (x) I) then (phi_{s,t} (x) I)
    x = np.einsum("aq,jr->ajqr", iota, np.eye(kf)).reshape(m1, m2, kf, mq * kf)
    x = _tensor.apply_pair(x, u_sp.flip4(), 1)  # (i, l, k')
    x = _tensor.apply_pair(x, u_s.flip4(), 0)  # (l', k, k')
    left = x.reshape(kf * m1 * m2, mq * kf)
    # right: (I (x) iota) phi_d
    phid = u_d.flip_matrix()  # (l, q) <- (q, j)
    right = np.einsum("ab,bc->ac", np.kron(np.eye(kf), iota), phid)
    return float(np.linalg.norm(left - right))


def _coherence_second(u_d, u_t, u_tp, c):
    """Defect of the second-variable diagram (F(t+t') split into F(t) F(t'))."""
    me = u_t.m
    k1, k2 = u_t.k, u_tp.k
    kq = u_d.k
    iota = c.conj()  # rows (j, j')
    x = np.einsum("ip,bq->ibpq", np.eye(me), iota).reshape(me, k1, k2, me * kq)
    x = _tensor.apply_pair(x, u_t.flip4(), 0)  # (l, kk, j')
    x = _tensor.apply_pair(x, u_tp.flip4(), 1)  # (l, l', kk'')
    left = x.reshape(k1 * k2 * me, me * kq)
    phid = u_d.flip_matrix()  # (q', kk) <- (i, q)
    right = np.kron(iota, np.eye(me)) @ phid
    return float(np.linalg.norm(left - right))


def sc_semigroup_check(
    r: CpSemigroup,
    s: CpSemigroup,
    level: int,
    horizon: int,
    tol: float = TOL_VERIFY,
    strict: bool = True,
) -> Report:
    """Grid witnesses and the two coherence diagrams on a dyadic grid.

    Grid times are ``a / 2**level`` with ``1 <= a <= horizon``. For every
    pair of grid times a witness is computed; for every split of a grid
    time into two grid times the direct flip is compared with the
    composite of the two smaller flips, transported through the isometry
    that expresses products of Kraus operators in the coarser family.

    Raises
    ------
    NotCommuting
        Some grid pair does not commute.
    CoherenceDefect
        A diagram defect exceeds ``tol`` (only when ``strict``).
    """
    delta = Fraction(1, 2 ** level)
    steps = list(range(1, horizon + 1))
    rk = {a: r.at(a * delta).kraus.ops for a in steps}
    sk = {b: s.at(b * delta).kraus.ops for b in steps}
    pairs = list(product(steps, steps))

    def _wit(ab):
        a, b = ab
        try:
            return witness_unitary(rk[a], sk[b], tol)
        except NotCommuting as exc:
            raise NotCommuting(f"grid pair ({a}, {b}) of level {level}: {exc}", exc.defect) from None

    wits = dict(zip(pairs, pmap(_wit, pairs)))
    worst, where = 0.0, None
    lift_worst = 0.0
    checked = 0
    for a, ap, b in product(steps, steps, steps):
        if a + ap > horizon:
            continue
        prods = np.einsum("iab,jbc->ijac", rk[a], rk[ap]).reshape(-1, r.dim, r.dim)
        c, lift = _isometry_into(prods, rk[a + ap])
        lift_worst = max(lift_worst, lift)
        d = _coherence_first(wits[(a + ap, b)], wits[(a, b)], wits[(ap, b)], c)
        checked += 1
        if where is None or d > worst:
            worst, where = d, ("E", a, ap, b)
    for a, b, bp in product(steps, steps, steps):
        if b + bp > horizon:
            continue
        prods = np.einsum("iab,jbc->ijac", sk[b], sk[bp]).reshape(-1, r.dim, r.dim)
        c, lift = _isometry_into(prods, sk[b + bp])
        lift_worst = max(lift_worst, lift)
        d = _coherence_second(wits[(a, b + bp)], wits[(a, b)], wits[(a, bp)], c)
        checked += 1
        if where is None or d > worst:
            worst, where = d, ("F", a, b, bp)
    resid = max((w.residual for w in wits.values()), default=0.0)
    rep = Report.from_residual(
        "sc_semigroup",
        max(worst, resid),
        tol,
        coherence_defect=worst,
        worst_at=where,
        witness_residual=resid,
        lift_residual=lift_worst,
        diagrams=checked,
        level=level,
        horizon=horizon,
    )
    if strict and not rep.passed:
        raise CoherenceDefect(f"coherence defect {worst:.3e} at {where}", where, worst, rep)
    return rep


def grid_witness(r: CpSemigroup, s: CpSemigroup, level: int, tol: float = TOL_VERIFY) -> FlipUnitary:
    """Witness at the generating step ``2**-level`` of both semigroups."""
    delta = Fraction(1, 2 ** level)
    return witness_unitary(r.at(delta).kraus.ops, s.at(delta).kraus.ops, tol)


def _rng(seeds):
    return seeds if isinstance(seeds, np.random.Generator) else np.random.default_rng(seeds)


def make_endo_pair(n: int, seeds=0) -> tuple[CpSemigroup, CpSemigroup]:
    """Two commuting automorphism groups ``a -> e^{-iHt} a e^{iHt}``.

    The Hamiltonians share a random eigenbasis, so the groups commute.
    """
    rng = _rng(seeds)
    q = random_unitary(rng, n)
    h1 = q @ np.diag(rng.normal(size=n)) @ q.conj().T
    h2 = q @ np.diag(rng.normal(size=n)) @ q.conj().T
    return CpSemigroup(Generator(1j * h1)), CpSemigroup(Generator(1j * h2))


def make_aut_cp_pair(n: int, seeds=0) -> tuple[CpSemigroup, CpSemigroup]:
    """Automorphism group and a covariant dissipative semigroup.

    The automorphisms are generated by ``H = omega Q diag(0..n-1) Q*``.
    The CP side uses lowering operators ``Q E_{k,k+1} Q*`` (shifted by a
    fixed phase under the group) together with diagonal dephasing and a
    diagonal Hamiltonian, which makes it covariant, hence commuting.
    """
    rng = _rng(seeds)
    q = random_unitary(rng, n)
    omega = 0.5 + rng.random()
    h = omega * q @ np.diag(np.arange(n, dtype=float)) @ q.conj().T
    jumps = []
    for kk in range(n - 1):
        low = np.zeros((n, n), dtype=complex)
        low[kk, kk + 1] = np.sqrt(0.2 + rng.random())
        jumps.append(q @ low @ q.conj().T)
    jumps.append(q @ np.diag(0.3 * rng.normal(size=n)) @ q.conj().T)
    drift = -0.5 * sum(l.conj().T @ l for l in jumps)
    drift = drift - 1j * q @ np.diag(rng.normal(size=n)) @ q.conj().T
    return CpSemigroup(Generator(1j * h)), CpSemigroup(Generator(drift, tuple(jumps)))


def make_conjugation_pair(a, b, tol: float = TOL_VERIFY) -> tuple[CpSemigroup, CpSemigroup]:
    """Conjugations by the contraction semigroups ``e^{tA}`` and ``e^{tB}``.

    Raises
    ------
    SeedsNotCommuting
        ``||AB - BA|| > tol``.
    """
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    d = float(np.linalg.norm(a @ b - b @ a))
    if d > tol:
        raise SeedsNotCommuting(f"||AB - BA|| = {d:.3e}")
    for name, x in (("A", a), ("B", b)):
        w, _ = herm_eig(x + x.conj().T)
        if w[0] > tol:
            raise ValueError(f"{name} does not generate a contraction semigroup")
    return CpSemigroup(Generator(a.conj().T)), CpSemigroup(Generator(b.conj().T))
