"""Norm bounds for normal functionals and extension of dyadically sampled semigroups.

The predual of ``M_n`` is represented by density matrices with the
trace norm. A sampled semigroup is a table of channels at exact dyadic
times; extension to a real time uses the dyadic truncations
``d_k = floor(t 2^k) / 2^k`` composed from tabulated entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .channel import (
    Channel,
    Density,
    choi_distance,
    commutation_defect,
    compose,
    dual,
    endomorphism_defect,
    from_superop,
    is_contractive,
    is_cp,
    is_unital,
)
from .config import TOL_VERIFY
from .errors import (
    BadProjection,
    EpsilonViolated,
    InsufficientTable,
    NegativeTime,
    NotCauchy,
    NotCommuting,
)
from .numerics import expm, trace_norm
from .report import Report
from .semigroup import CpSemigroup, as_time, dyadic_grid


# -- quantitative norm convergence -------------------------------------------------
@dataclass
class ArvesonResult:
    """Per-functional certified bounds and true trace distances to ``omega``."""

    certified_bound: list[float]
    true_distance: list[float]
    sup_term: list[float]
    in_regime: list[bool]
    eps: float

    def report(self, tol: float = 1e-12) -> Report:
        gap = min((b - d for b, d in zip(self.certified_bound, self.true_distance)), default=0.0)
        return Report(
            "arveson_bound",
            max(0.0, -gap),
            tol,
            bool(gap >= -tol),
            {"count": len(self.true_distance), "min_gap": gap, "eps": self.eps},
        )


def _as_density(x) -> np.ndarray:
    return x.mat if isinstance(x, Density) else Density(np.asarray(x, dtype=complex)).mat


def _gentle_bound(mass_p: float, mass_q: float) -> float:
    """Upper bound for ``||rho - p rho p||_1`` from the masses of ``p`` and ``1 - p``."""
    mass_p, mass_q = max(mass_p, 0.0), max(mass_q, 0.0)
    return 2.0 * math.sqrt(mass_p * mass_q) + mass_q


def arveson_bound(rhos: Iterable, omega, p, eps: float, tol: float = 1e-9) -> ArvesonResult:
    """Certify ``||rho - omega||_1`` from the compressed distance and ``eps``.

    The sup term is ``sup |(rho - omega)(p x p)|`` over the unit ball,
    which equals ``||p (rho - omega) p||_1``. Once ``rho(1 - p) <= 2 eps``
    the bound is ``sup + 2 eps^(1/2) + 4 eps^(1/2)``; otherwise the
    functional is flagged and the tail estimate uses its actual mass
    off ``p``.

    Raises
    ------
    BadProjection
        ``p`` is not an orthogonal projection.
    EpsilonViolated
        ``omega(1 - p) > eps``.
    """
    p = np.asarray(p, dtype=complex)
    n = p.shape[0]
    if p.shape != (n, n) or np.linalg.norm(p @ p - p) > tol or np.linalg.norm(p - p.conj().T) > tol:
        raise BadProjection("p must be an orthogonal projection")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    om = _as_density(omega)
    q = np.eye(n) - p
    om_q = float(np.trace(om @ q).real)
    if om_q > eps + tol:
        raise EpsilonViolated(f"omega(1-p) = {om_q:.3e} exceeds eps = {eps:.3e}")
    om_p = float(np.trace(om @ p).real)
    bounds, dists, sups, flags = [], [], [], []
    for rho in rhos:
        r = _as_density(rho)
        sup = trace_norm(p @ (r - om) @ p)
        r_q = float(np.trace(r @ q).real)
        ok = r_q <= 2.0 * eps + tol
        if ok:
            # tails: ||r - p r p||_1 <= sqrt(5 r(q)) <= sqrt(10 eps), ||om - p om p||_1 <= sqrt(5 eps)
            bound = sup + 2.0 * math.sqrt(eps) + 4.0 * math.sqrt(eps)
        else:
            bound = sup + _gentle_bound(float(np.trace(r @ p).real), r_q) + _gentle_bound(om_p, om_q)
        bounds.append(bound)
        dists.append(trace_norm(r - om))
        sups.append(sup)
        flags.append(bool(ok))
    return ArvesonResult(bounds, dists, sups, flags, eps)


# -- sampled semigroups -------------------------------------------------------------------
@dataclass
class SampledSemigroup:
    """Table of channels at exact dyadic times."""

    table: dict[Fraction, Channel]
    tol: float = TOL_VERIFY
    _times: list[Fraction] = field(init=False, repr=False)

    def __post_init__(self):
        table = {}
        for t, ch in self.table.items():
            key = as_time(t)
            if not isinstance(key, Fraction) or key.denominator & (key.denominator - 1):
                raise ValueError(f"sample time {t} is not an exact dyadic rational")
            if key < 0:
                raise NegativeTime(f"negative sample time {t}")
            table[key] = ch
        if not table:
            raise InsufficientTable("empty table")
        dims = {ch.dim for ch in table.values()}
        if len(dims) != 1:
            raise ValueError("channels of different dimensions")
        n = dims.pop()
        if Fraction(0) in table:
            if choi_distance(table[Fraction(0)], Channel.identity(n)) > self.tol:
                raise ValueError("table[0] must be the identity")
        else:
            table[Fraction(0)] = Channel.identity(n)
        self.table = table
        self._times = sorted(table)

    @property
    def dim(self) -> int:
        return self.table[Fraction(0)].dim

    @property
    def times(self) -> list[Fraction]:
        return list(self._times)

    def __contains__(self, t) -> bool:
        return self.lookup(t) is not None

    def lookup(self, t) -> Fraction | None:
        """Tabulated key equal to ``t``, or ``None``."""
        key = as_time(t)
        if isinstance(key, float):
            try:
                key = Fraction(key)
            except (OverflowError, ValueError):
                return None
        return key if key in self.table else None

    def finest(self) -> Fraction:
        positive = [t for t in self._times if t > 0]
        if not positive:
            raise InsufficientTable("table has no positive time")
        return positive[0]

    def closure_defect(self) -> Report:
        """Semigroup law on every tabulated triple ``(s, t, s + t)``."""
        worst, where, count = 0.0, None, 0
        for s in self._times:
            for t in self._times:
                if s + t not in self.table or t < s:
                    continue
                d = choi_distance(self.table[s + t], compose(self.table[s], self.table[t]))
                count += 1
                if where is None or d > worst:
                    worst, where = d, (str(s), str(t))
        return Report.from_residual("closure", worst, self.tol, pairs=count, worst_at=where)

    def generator_estimate(self) -> np.ndarray:
        """``log(phi_h) / h`` for the finest tabulated ``h``, as a superoperator."""
        h = self.finest()
        return scipy.linalg.logm(self.table[h].superop) / float(h)

    @classmethod
    def from_semigroup(cls, sg: CpSemigroup, times: Iterable, tol: float = TOL_VERIFY) -> "SampledSemigroup":
        return cls({as_time(t): sg.at(t) for t in times}, tol)

    @classmethod
    def binary(cls, sg: CpSemigroup, depth: int, horizon: int = 4, tol: float = TOL_VERIFY) -> "SampledSemigroup":
        """Samples at ``2^-j`` for ``j <= depth`` and at the integers up to ``horizon``."""
        times = {Fraction(1, 2 ** j) for j in range(depth + 1)} | set(dyadic_grid(0, horizon))
        return cls.from_semigroup(sg, sorted(times), tol)

    def to_channels(self) -> Mapping[Fraction, Channel]:
        return dict(self.table)


def _decompose(ss: SampledSemigroup, amount: Fraction, limit: int = 4096) -> list[Fraction]:
    """Greedy split of ``amount`` into tabulated positive times."""
    parts = []
    positive = [t for t in ss.times if t > 0][::-1]
    while amount > 0:
        step = next((t for t in positive if t <= amount), None)
        if step is None or len(parts) >= limit:
            raise InsufficientTable(f"cannot compose time {amount} from the table")
        parts.append(step)
        amount -= step
    return parts


def _density_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        e = np.zeros(n, dtype=complex)
        e[i] = 1.0
        out.append(np.outer(e, e))
    for i in range(n):
        for j in range(i + 1, n):
            for phase in (1.0, 1j):
                v = np.zeros(n, dtype=complex)
                v[i], v[j] = 1.0, phase
                v /= math.sqrt(2.0)
                out.append(np.outer(v, v.conj()))
    return out


def _predual_gap(a: Channel, b: Channel, basis: Sequence[np.ndarray]) -> float:
    da, db = dual(a), dual(b)
    return max(trace_norm(da(rho) - db(rho)) for rho in basis)


def _flags(ch: Channel, tol: float) -> dict:
    return {
        "cp": is_cp(ch, tol),
        "contractive": is_contractive(ch, tol),
        "unital": is_unital(ch, tol),
        "endomorphism": endomorphism_defect(ch) <= tol,
    }


def extend_to(
    ss: SampledSemigroup,
    t,
    depth: int | None = None,
    correction: bool = True,
    tol: float = TOL_VERIFY,
) -> tuple[Channel, Report]:
    """Extend a sampled semigroup to time ``t``.

    Builds ``phi_{d_k}`` for ``k = 0..depth`` from the table and reports
    the predual Cauchy gaps between consecutive approximants. With
    ``correction`` the returned channel is ``phi_{d_depth}`` composed with
    ``exp((t - d_depth) L)``, ``L`` estimated from the finest sample; the
    bare approximant alone is only accurate to ``O(2^-depth)``. ``depth``
    defaults to the dyadic level of the finest sample.

    Raises
    ------
    NegativeTime, InsufficientTable, NotCauchy
    """
    key = ss.lookup(t)
    if key is not None:
        ch = ss.table[key]
        return ch, Report("extend", 0.0, tol, True, {"tabulated": True, "time": str(key)})
    t = float(t)
    if t < 0:
        raise NegativeTime(f"negative time {t}")
    if depth is None:
        depth = ss.finest().denominator.bit_length() - 1
    basis = _density_basis(ss.dim)
    lhat = ss.generator_estimate()
    lnorm = float(np.linalg.norm(lhat, 2))
    times, chans = [], []
    cur_t, cur = Fraction(0), ss.table[Fraction(0)]
    for k in range(depth + 1):
        d_k = Fraction(math.floor(t * 2 ** k), 2 ** k)
        for part in _decompose(ss, d_k - cur_t):
            cur = compose(cur, ss.table[part])
        cur_t = d_k
        times.append(d_k)
        chans.append(cur)
    gaps, limits = [], []
    for k in range(depth):
        gap = _predual_gap(chans[k], chans[k + 1], basis)
        step = float(times[k + 1] - times[k])
        allowed = 2.0 * math.sqrt(ss.dim) * step * lnorm * math.exp(lnorm * t) + 1e-10
        gaps.append(gap)
        limits.append(allowed)
        if gap > allowed:
            raise NotCauchy(f"approximants not Cauchy at depth {k}: gap {gap:.3e} > {allowed:.3e}", gaps)
    remainder = t - float(times[-1])
    result = chans[-1]
    if correction and remainder > 0:
        result = compose(result, from_superop(expm(remainder * lhat)))
    flags_in = {}
    for name in ("cp", "contractive", "unital", "endomorphism"):
        flags_in[name] = all(_flags(ch, tol)[name] for ch in ss.table.values())
    flags_out = _flags(result, tol)
    preserved = all(flags_out[k] for k, v in flags_in.items() if v)
    # the residual is the last Cauchy gap, measured against its own limit
    return result, Report(
        "extend",
        gaps[-1] if gaps else 0.0,
        limits[-1] if limits else tol,
        bool(preserved),
        {
            "tabulated": False,
            "time": t,
            "depth": depth,
            "approximant": str(times[-1]),
            "remainder": remainder,
            "corrected": bool(correction),
            "cauchy_gaps": gaps,
            "cauchy_limits": limits,
            "flags_in": flags_in,
            "flags_out": flags_out,
        },
    )


def extension_semigroup_law(
    ss: SampledSemigroup, triples: Iterable[tuple[float, float]], depth: int | None = None, tol: float = TOL_VERIFY
) -> Report:
    """``phi_{s+t} = phi_s phi_t`` for extended values at the given pairs."""
    worst, where = 0.0, None
    for s, t in triples:
        lhs = extend_to(ss, s + t, depth)[0]
        rhs = compose(extend_to(ss, s, depth)[0], extend_to(ss, t, depth)[0])
        d = choi_distance(lhs, rhs)
        if where is None or d > worst:
            worst, where = d, (s, t)
    return Report.from_residual("extension_semigroup", worst, tol, worst_at=where)


# -- two-parameter reassembly --------------------------------------------------------------
class TwoParameter:
    """``alpha(s, t) = beta_s o gamma_t`` for commuting one-parameter families."""

    def __init__(self, beta: Callable[[float], Channel], gamma: Callable[[float], Channel], swap: float):
        self.beta = beta
        self.gamma = gamma
        self.swap_residual = swap

    def __call__(self, s, t=None) -> Channel:
        if t is None:
            s, t = s
        return compose(self.beta(s), self.gamma(t))

    def semigroup_residual(self, pairs: Iterable[tuple[tuple, tuple]]) -> float:
        worst = 0.0
        for a, b in pairs:
            total = (a[0] + b[0], a[1] + b[1])
            worst = max(worst, choi_distance(self(total), compose(self(a), self(b))))
        return worst


def _family(x) -> Callable[[float], Channel]:
    if isinstance(x, CpSemigroup):
        return x.at
    if isinstance(x, SampledSemigroup):
        return lambda t: extend_to(x, t)[0]
    return x


def two_param_assemble(beta, gamma, grid: Sequence[float] = (0.25, 0.5, 1.0), tol: float = TOL_VERIFY) -> TwoParameter:
    """Assemble ``alpha(s, t) = beta_s gamma_t`` after checking commutation on ``grid``.

    ``beta`` and ``gamma`` are semigroups, sampled semigroups (extended on
    demand) or callables returning channels.
    """
    b, g = _family(beta), _family(gamma)
    swap = max((commutation_defect(b(s), g(t)) for s in grid for t in grid), default=0.0)
    if swap > tol:
        raise NotCommuting(f"families do not commute: defect {swap:.3e}", swap)
    return TwoParameter(b, g, swap)
