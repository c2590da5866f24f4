"""Dyadic product systems generated by two strongly commuting semigroups.

At level ``n`` the step is ``delta = 2**-n``. ``E`` and ``F`` are the
spans of the minimal Kraus families ``{T_i}`` of ``R_delta`` and
``{S_j}`` of ``S_delta``, with those families declared orthonormal. The
fiber over grid index ``(k, m)`` is ``E^{(x)k} (x) F^{(x)m}``; its product
basis vector ``(i_1..i_k, j_1..j_m)`` (first factor most significant) is
realized as ``T_{i_1}...T_{i_k} S_{j_1}...S_{j_m}``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product
from typing import Iterable

import numpy as np

from . import _tensor
from .channel import Channel, compose
from .config import TOL_VERIFY
from .errors import HorizonExceeded
from .report import Report
from .semigroup import CpSemigroup
from .strongcomm import FlipUnitary, grid_witness

Index = tuple[int, int]


@dataclass(frozen=True)
class KrausFiber:
    """Span of a minimal Kraus family with that family as orthonormal basis."""

    step: Fraction
    ops: np.ndarray

    @property
    def dim(self) -> int:
        return self.ops.shape[0]

    def realize(self, coords) -> np.ndarray:
        return np.einsum("i,iab->ab", np.asarray(coords, dtype=complex), self.ops)

    def reproduction_residual(self, channel: Channel, probes: Iterable[np.ndarray]) -> float:
        worst = 0.0
        for a in probes:
            lhs = np.einsum("iab,bc,idc->ad", self.ops, a, self.ops.conj())
            worst = max(worst, float(np.linalg.norm(lhs - channel(a))))
        return worst


def _chain(first: np.ndarray, k: int, second: np.ndarray, m: int, n: int) -> np.ndarray:
    """Products over words ``first^k second^m`` in lexicographic order."""
    ops = np.eye(n, dtype=complex)[None]
    for fam, reps in ((first, k), (second, m)):
        for _ in range(reps):
            ops = np.einsum("aij,bjk->abik", ops, fam).reshape(-1, n, n)
    return ops


class GridSystem:
    """Generated system up to ``k + m <= horizon`` at a fixed level.

    Flips ``E^a (x) F^b -> F^b (x) E^a`` are composed from the step flip
    by adjacent transpositions. Individual composite flips may be
    overridden (for negative controls) through :meth:`with_flip`.
    """

    def __init__(self, r, s, level: int, horizon: int, u: FlipUnitary):
        # r, s: semigroups, or step channels when no generator exists
        self.r = r
        self.s = s
        self.level = level
        self.horizon = horizon
        self.step = Fraction(1, 2 ** level)
        self.u = u
        self.E = KrausFiber(self.step, u.theta_ops)
        self.F = KrausFiber(self.step, u.phi_ops)
        self.n = u.theta_ops.shape[1]
        self._flip_cache: dict[tuple[int, int], np.ndarray] = {}
        self._overrides: dict[tuple[int, int], np.ndarray] = {}
        self._basis_cache: dict[tuple[str, int, int], np.ndarray] = {}

    # -- indices ---------------------------------------------------------
    def indices(self, limit: int | None = None) -> list[Index]:
        limit = self.horizon if limit is None else limit
        return [(k, m) for k in range(limit + 1) for m in range(limit + 1 - k)]

    def _check(self, p: Index) -> None:
        if p[0] < 0 or p[1] < 0 or p[0] + p[1] > self.horizon:
            raise HorizonExceeded(f"grid index {p} outside horizon {self.horizon}")

    def dim(self, p: Index) -> int:
        return self.E.dim ** p[0] * self.F.dim ** p[1]

    def time(self, p: Index) -> tuple[Fraction, Fraction]:
        return p[0] * self.step, p[1] * self.step

    # -- realization -----------------------------------------------------
    def basis_ops(self, p: Index) -> np.ndarray:
        """Realized basis of ``X(p)``: shape ``(dim(p), n, n)``, E factors first."""
        self._check(p)
        key = ("EF", *p)
        if key not in self._basis_cache:
            self._basis_cache[key] = _chain(self.E.ops, p[0], self.F.ops, p[1], self.n)
        return self._basis_cache[key]

    def basis_ops_fe(self, a: int, b: int) -> np.ndarray:
        """Realized basis of ``F^b (x) E^a``, F factors first."""
        key = ("FE", a, b)
        if key not in self._basis_cache:
            self._basis_cache[key] = _chain(self.F.ops, b, self.E.ops, a, self.n)
        return self._basis_cache[key]

    def t_tilde(self, p: Index) -> np.ndarray:
        """Row operator ``X(p) (x) H -> H``, block ``alpha`` equal to ``X_alpha``."""
        ops = self.basis_ops(p)
        return np.transpose(ops, (1, 0, 2)).reshape(self.n, -1)

    @property
    def generator_backed(self) -> bool:
        return isinstance(self.r, CpSemigroup) and isinstance(self.s, CpSemigroup)

    def channel(self, p: Index) -> Channel:
        """``R_{k delta} S_{m delta}``; powers of the step maps without generators."""
        if self.generator_backed:
            s, t = self.time(p)
            return compose(self.r.at(s), self.s.at(t))
        factors = [self.r] * p[0] + [self.s] * p[1]
        if not factors:
            return Channel.identity(self.n)
        return compose(*factors) if len(factors) > 1 else factors[0]

    # -- flips and multiplication ---------------------------------------
    def step_flip4(self) -> np.ndarray:
        return self.u.flip4()

    def flip(self, a: int, b: int) -> np.ndarray:
        """Matrix of ``E^a (x) F^b -> F^b (x) E^a``."""
        key = (a, b)
        if key in self._overrides:
            return self._overrides[key]
        if key not in self._flip_cache:
            self._flip_cache[key] = self._compose_flip(a, b)
        return self._flip_cache[key]

    def _compose_flip(self, a: int, b: int) -> np.ndarray:
        me, mf = self.E.dim, self.F.dim
        total = me ** a * mf ** b
        x = np.eye(total, dtype=complex).reshape((me,) * a + (mf,) * b + (total,))
        phi = self.step_flip4()
        for f in range(b):
            # the F factor now at position a + f travels to position f
            for pos in range(a + f - 1, f - 1, -1):
                x = _tensor.apply_pair(x, phi, pos)
        return x.reshape(total, total)

    def with_flip(self, a: int, b: int, matrix: np.ndarray) -> "GridSystem":
        """Copy with the composite flip ``(a, b)`` replaced."""
        other = GridSystem(self.r, self.s, self.level, self.horizon, self.u)
        other._overrides = dict(self._overrides)
        other._overrides[(a, b)] = np.asarray(matrix, dtype=complex)
        other._basis_cache = self._basis_cache
        return other

    def theta(self, p: Index, q: Index) -> np.ndarray:
        """Multiplication ``X(p) (x) X(q) -> X(p + q)`` as a unitary matrix."""
        self._check((p[0] + q[0], p[1] + q[1]))
        me, mf = self.E.dim, self.F.dim
        mid = self.flip(q[0], p[1]).conj().T  # F^{p2} E^{q1} -> E^{q1} F^{p2}
        return np.kron(np.kron(np.eye(me ** p[0]), mid), np.eye(mf ** q[1]))

    def fiber_norm(self, p: Index) -> float:
        return float(np.linalg.norm(self.t_tilde(p), 2))


def build_system(
    r: CpSemigroup, s: CpSemigroup, level: int, horizon: int, u: FlipUnitary | None = None, tol: float = TOL_VERIFY
) -> GridSystem:
    """Generated system of a strongly commuting pair at one dyadic level.

    ``u`` defaults to the polar witness at the step ``2**-level``; its
    Kraus stacks define the bases of ``E`` and ``F``.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if u is None:
        u = grid_witness(r, s, level, tol)
    return GridSystem(r, s, level, horizon, u)


def build_system_from_steps(
    theta: Channel, phi: Channel, horizon: int, u: FlipUnitary | None = None, tol: float = TOL_VERIFY, level: int = 0
) -> GridSystem:
    """Generated system of two commuting CP maps used as unit steps."""
    from .strongcomm import witness_unitary

    if u is None:
        u = witness_unitary(theta, phi, tol)
    return GridSystem(theta, phi, level, horizon, u)


def replace_flip(u: FlipUnitary, matrix: np.ndarray) -> FlipUnitary:
    """Same Kraus stacks with a different step witness (negative controls)."""
    return replace(u, u=np.asarray(matrix, dtype=complex))


def _multiplicativity(system: GridSystem) -> tuple[float, tuple | None]:
    worst, where = 0.0, None
    for p in system.indices():
        for q in system.indices():
            if p == (0, 0) or q == (0, 0):
                continue
            pq = (p[0] + q[0], p[1] + q[1])
            if pq[0] + pq[1] > system.horizon:
                continue
            theta = system.theta(p, q)
            target = system.basis_ops(pq)
            lhs = np.einsum("gx,gab->xab", theta, target)
            rhs = np.einsum("xab,ybc->xyac", system.basis_ops(p), system.basis_ops(q)).reshape(lhs.shape)
            d = float(np.max(np.linalg.norm(lhs - rhs, axis=(1, 2))))
            if where is None or d > worst:
                worst, where = d, (p, q)
    return worst, where


def verify_rep_identity(
    system: GridSystem,
    grid: Iterable[Index] | None = None,
    probes: int | Iterable[np.ndarray] = 20,
    tol: float = TOL_VERIFY,
    seed: int = 0,
) -> Report:
    """Check ``T~ (I (x) a) T~* = R_s S_t (a)`` across grid fibers.

    Also checks that realization turns the multiplication maps into
    operator products, ``T(theta(x (x) y)) = T(x) T(y)``; the first
    identity alone cannot see a wrong flip, because it is invariant
    under any unitary change of basis of the fibers.
    """
    n = system.n
    if isinstance(probes, int):
        rng = np.random.default_rng(seed)
        probes = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for _ in range(probes)]
    probes = list(probes)
    grid = system.indices() if grid is None else list(grid)
    worst, where = 0.0, None
    norm_worst = 0.0
    for p in grid:
        ops = system.basis_ops(p)
        ch = system.channel(p)
        norm_worst = max(norm_worst, system.fiber_norm(p))
        for a in probes:
            lhs = np.einsum("iab,bc,idc->ad", ops, a, ops.conj())
            d = float(np.linalg.norm(lhs - ch(a)))
            if where is None or d > worst:
                worst, where = d, p
    mult, mult_at = _multiplicativity(system)
    residual = max(worst, mult)
    return Report(
        "rep_identity",
        residual,
        tol,
        bool(residual <= tol and norm_worst <= 1 + tol),
        {
            "identity_residual": worst,
            "identity_worst_at": where,
            "multiplicativity_residual": mult,
            "multiplicativity_worst_at": mult_at,
            "max_fiber_norm": norm_worst,
            "fibers": len(grid),
            "probes": len(probes),
        },
    )


def verify_commutation_relation(system: GridSystem, tol: float = TOL_VERIFY) -> Report:
    """``T~_(a,0)(I (x) T~_(0,b)) = T~_(0,b)(I (x) T~_(a,0))(phi (x) I)`` for ``a + b <= horizon``."""
    worst, where = 0.0, None
    step_resid = None
    for a in range(1, system.horizon + 1):
        for b in range(1, system.horizon + 1 - a):
            ef = system.basis_ops((a, b))
            fe = system.basis_ops_fe(a, b)
            rhs = np.einsum("ga,gij->aij", system.flip(a, b), fe)
            d = float(np.linalg.norm(np.transpose(ef - rhs, (1, 0, 2)).reshape(system.n, -1), 2))
            if (a, b) == (1, 1):
                step_resid = d
            if where is None or d > worst:
                worst, where = d, (a, b)
    return Report.from_residual("commutation_relation", worst, tol, step_residual=step_resid, worst_at=where)


def verify_associativity(system: GridSystem, tol: float = TOL_VERIFY) -> Report:
    """Both parenthesizations of triple products agree on coordinates."""
    worst, where, count = 0.0, None, 0
    nonzero = [p for p in system.indices() if p != (0, 0)]
    for p, q, r in product(nonzero, nonzero, nonzero):
        total = p[0] + q[0] + r[0] + p[1] + q[1] + r[1]
        if total > system.horizon:
            continue
        pq = (p[0] + q[0], p[1] + q[1])
        qr = (q[0] + r[0], q[1] + r[1])
        left = system.theta(pq, r) @ np.kron(system.theta(p, q), np.eye(system.dim(r)))
        right = system.theta(p, qr) @ np.kron(np.eye(system.dim(p)), system.theta(q, r))
        d = float(np.linalg.norm(left - right))
        count += 1
        if where is None or d > worst:
            worst, where = d, (p, q, r)
    return Report.from_residual("associativity", worst, tol, triples=count, worst_at=where)


def flip_unitarity(system: GridSystem) -> float:
    worst = 0.0
    for a in range(system.horizon + 1):
        for b in range(system.horizon + 1 - a):
            f = system.flip(a, b)
            worst = max(worst, float(np.linalg.norm(f.conj().T @ f - np.eye(f.shape[0]))))
    return worst


def make_system(r, s, level: int, horizon: int, tol: float = TOL_VERIFY) -> GridSystem:
    """Semigroup inputs go through :func:`build_system`, step channels through
    :func:`build_system_from_steps`; mixing the two is rejected."""
    if isinstance(r, CpSemigroup) and isinstance(s, CpSemigroup):
        return build_system(r, s, level, horizon, tol=tol)
    if isinstance(r, Channel) and isinstance(s, Channel):
        return build_system_from_steps(r, s, horizon, tol=tol)
    raise TypeError("inputs must both be semigroups or both be step channels")
