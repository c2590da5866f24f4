"""One-parameter CP semigroups on M_n given by Lindblad-type generators."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .channel import Channel, choi_distance, compose, from_superop
from .config import TOL_VERIFY
from .errors import DimensionMismatch, NegativeTime
from .numerics import as_cmatrix, expm, herm_eig
from .report import Report

Time = Fraction | float | int


def as_time(t: Time) -> Fraction | float:
    """Exact rational for ints/Fractions; floats pass through."""
    if isinstance(t, Fraction):
        return t
    if isinstance(t, (int, np.integer)):
        return Fraction(int(t))
    return float(t)


@dataclass(frozen=True)
class Generator:
    """``L(a) = G* a + a G + sum_j L_j* a L_j``.

    Parameters
    ----------
    G : (n, n) array
        Drift part; need not be Hermitian.
    jumps : sequence of (n, n) arrays
        Jump operators ``L_j``.
    """

    G: np.ndarray
    jumps: tuple = ()

    def __post_init__(self):
        g = as_cmatrix(self.G, "G")
        n = g.shape[0]
        if g.shape != (n, n):
            raise DimensionMismatch("G must be square")
        jumps = tuple(as_cmatrix(l, "jump") for l in self.jumps)
        for l in jumps:
            if l.shape != (n, n):
                raise DimensionMismatch("jump operators must match G")
        object.__setattr__(self, "G", g)
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def dissipation(self) -> np.ndarray:
        """``G + G* + sum L_j* L_j``; nonpositive for contractive semigroups."""
        d = self.G + self.G.conj().T
        for l in self.jumps:
            d = d + l.conj().T @ l
        return d

    def is_dissipative(self, tol: float = TOL_VERIFY) -> bool:
        w, _ = herm_eig(self.dissipation())
        return bool(w[0] <= tol)

    def superop(self) -> np.ndarray:
        n = self.dim
        eye = np.eye(n)
        s = np.kron(eye, self.G.conj().T) + np.kron(self.G.T, eye)
        for l in self.jumps:
            s = s + np.kron(l.T, l.conj().T)
        return s

    def apply(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        out = self.G.conj().T @ a + a @ self.G
        for l in self.jumps:
            out = out + l.conj().T @ a @ l
        return out


class CpSemigroup:
    """Semigroup ``t -> exp(t L)`` with a memo of sampled channels."""

    def __init__(self, generator: Generator):
        self.generator = generator
        self._lhat = generator.superop()
        self._cache: dict = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self.generator.dim

    @property
    def superop(self) -> np.ndarray:
        return self._lhat

    def at(self, t: Time) -> Channel:
        """Channel at time ``t``; raises :class:`NegativeTime` for ``t < 0``."""
        key = as_time(t)
        if key < 0:
            raise NegativeTime(f"negative time {t}")
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        ch = from_superop(expm(float(key) * self._lhat))
        with self._lock:
            return self._cache.setdefault(key, ch)

    __call__ = at

    def __repr__(self) -> str:
        return f"CpSemigroup(dim={self.dim}, jumps={len(self.generator.jumps)})"


def at(sg: CpSemigroup, t: Time) -> Channel:
    return sg.at(t)


def dephasing(rate: float = 1.0) -> CpSemigroup:
    """Qubit dephasing ``L(a) = rate * (Z a Z - a)``."""
    z = np.diag([1.0, -1.0])
    return CpSemigroup(Generator(-0.5 * rate * np.eye(2), (np.sqrt(rate) * z,)))


def decay(kappa: float, n: int = 2) -> CpSemigroup:
    """Scalar decay ``a -> exp(-kappa t) a``."""
    return CpSemigroup(Generator(-0.5 * kappa * np.eye(n)))


def conjugation(a) -> CpSemigroup:
    """``t -> exp(tA) . exp(tA)*``; the generator drift is ``A*``."""
    a = as_cmatrix(a)
    return CpSemigroup(Generator(a.conj().T))


def identity_semigroup(n: int) -> CpSemigroup:
    return CpSemigroup(Generator(np.zeros((n, n))))


def dyadic_grid(level: int, horizon: int) -> list[Fraction]:
    """Times ``k / 2**level`` for ``0 <= k <= horizon``, as exact fractions.

    >>> [str(t) for t in dyadic_grid(1, 4)]
    ['0', '1/2', '1', '3/2', '2']
    """
    if level < 0 or horizon < 0:
        raise ValueError("level and horizon must be nonnegative")
    return [Fraction(k, 2 ** level) for k in range(horizon + 1)]


def verify_semigroup_law(
    sg: CpSemigroup | Mapping[Fraction, Channel],
    grid: Sequence[Time],
    tol: float = TOL_VERIFY,
) -> Report:
    """Worst ``||choi(P_{s+t}) - choi(P_s P_t)||_F`` over grid pairs.

    ``sg`` may be a semigroup or an explicit table keyed by exact time;
    for a table only pairs whose sum is tabulated are compared.
    """
    grid = [as_time(t) for t in grid]
    if isinstance(sg, CpSemigroup):
        lookup = sg.at
        pairs = list(product(grid, grid))
    else:
        table = {as_time(k): v for k, v in sg.items()}
        lookup = table.__getitem__
        pairs = [(s, t) for s, t in product(grid, grid) if s in table and t in table and s + t in table]
    worst, where = 0.0, None
    for s, t in pairs:
        r = choi_distance(lookup(s + t), compose(lookup(s), lookup(t)))
        if where is None or r > worst:
            worst, where = r, (str(s), str(t))
    return Report.from_residual("semigroup_law", worst, tol, pairs=len(pairs), worst_at=where)


def verify_continuity(
    sg_r: CpSemigroup,
    sg_s: CpSemigroup,
    grid: Sequence[Time],
    probes: Sequence[np.ndarray],
    vectors: Sequence[np.ndarray],
    delta: float,
) -> Report:
    """Modulus of continuity of ``(s, t) -> R_s S_t (a) h`` on a grid.

    Neighbours are grid points within ``delta`` in each coordinate. The
    report carries the measured modulus and the certified bound
    ``exp(lam T) * lam * delta * max||a||_F * max||h||`` with
    ``lam = ||L_R|| + ||L_S||`` and ``T`` the largest grid time.
    """
    if sg_r.dim != sg_s.dim:
        raise DimensionMismatch("semigroups act on different algebras")
    times = sorted({as_time(t) for t in grid})
    chans = {}
    for s, t in product(times, times):
        chans[(s, t)] = compose(sg_r.at(s), sg_s.at(t))
    values = {
        key: [[ch(a) @ h for h in vectors] for a in probes] for key, ch in chans.items()
    }
    modulus = 0.0
    keys = list(values)
    for p in keys:
        for q in keys:
            if p == q or abs(float(p[0] - q[0])) > delta + 1e-15 or abs(float(p[1] - q[1])) > delta + 1e-15:
                continue
            for va, vb in zip(values[p], values[q]):
                for x, y in zip(va, vb):
                    modulus = max(modulus, float(np.linalg.norm(x - y)))
    lam = np.linalg.norm(sg_r.superop, 2) + np.linalg.norm(sg_s.superop, 2)
    horizon = float(max(times)) if times else 0.0
    amax = max((np.linalg.norm(a) for a in probes), default=0.0)
    hmax = max((np.linalg.norm(h) for h in vectors), default=0.0)
    bound = float(np.exp(lam * horizon) * lam * delta * amax * hmax)
    return Report(
        "continuity",
        modulus,
        bound,
        bool(modulus <= bound + 1e-12),
        {"modulus": modulus, "bound": bound, "delta": delta, "points": len(keys)},
    )
