"""Regular Toeplitz kernel, Kolmogorov factorization and induced endomorphisms.

Grid functions live on the positive quadrant ``{p >= 0 : |p|_1 <= M}``;
a point ``p`` carries the coordinate space ``X(p) (x) H`` with the fiber
index major. Points are ordered by depth ``|p|_1`` and the Gram matrix
is factored depth by depth, so ``D_d``, the span of the functions
supported at depth ``<= d``, is exactly the first ``r_d`` coordinates
of ``K``. Translation by ``s`` is only defined on ``D_{M-|s|}``; every
truncated statement is scoped to those domains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

from .config import RANK_THRESHOLD, TOL_VERIFY, pmap
from .errors import HorizonExceeded, NotPD, OutOfHorizon
from .numerics import herm_eig, span_rank
from .prodsys import GridSystem, Index
from .report import Report

PD_TOL = 1e-10


def _plus(m: Index) -> Index:
    return (max(m[0], 0), max(m[1], 0))


def _minus(m: Index) -> Index:
    return (max(-m[0], 0), max(-m[1], 0))


def _norm1(p: Index) -> int:
    return abs(p[0]) + abs(p[1])


def _key(p: Index) -> str:
    return f"{p[0]},{p[1]}"


@dataclass
class ToeplitzKernel:
    """Blocks ``Phi(m) = T~*_{m-} T~_{m+}`` for ``|m+|_1, |m-|_1 <= radius``.

    ``Phi(m)`` maps ``X(m+) (x) H`` to ``X(m-) (x) H``.
    """

    system: GridSystem
    radius: int
    blocks: dict[Index, np.ndarray]

    @property
    def n(self) -> int:
        return self.system.n

    def __getitem__(self, m: Index) -> np.ndarray:
        return self.blocks[m]

    def points(self) -> list[Index]:
        """Positive-quadrant points ordered by depth, then by first coordinate."""
        pts = self.system.indices(self.radius)
        return sorted(pts, key=lambda p: (p[0] + p[1], -p[0]))

    def unit_defect(self) -> float:
        return float(np.linalg.norm(self.blocks[(0, 0)] - np.eye(self.n)))

    def adjoint_defect(self) -> float:
        worst = 0.0
        for m, blk in self.blocks.items():
            other = self.blocks[(-m[0], -m[1])]
            worst = max(worst, float(np.linalg.norm(other - blk.conj().T)))
        return worst

    def block(self, row: Index, col: Index) -> np.ndarray:
        """Gram block ``<(row, .), (col, .)>`` on ``X(col) (x) H -> X(row) (x) H``."""
        sys = self.system
        n = self.n
        r = (min(row[0], col[0]), min(row[1], col[1]))
        d = (col[0] - row[0], col[1] - row[1])
        dp, dm = _plus(d), _minus(d)
        mid = np.kron(np.eye(sys.dim(r)), self.blocks[d])
        left = np.kron(sys.theta(r, dm), np.eye(n))
        right = np.kron(sys.theta(r, dp), np.eye(n))
        return left @ mid @ right.conj().T

    @cached_property
    def layout(self) -> tuple[list[Index], dict[Index, slice]]:
        offsets, start = {}, 0
        pts = self.points()
        for p in pts:
            size = self.system.dim(p) * self.n
            offsets[p] = slice(start, start + size)
            start += size
        return pts, offsets

    @cached_property
    def gram(self) -> np.ndarray:
        pts, offsets = self.layout
        size = offsets[pts[-1]].stop
        g = np.zeros((size, size), dtype=complex)
        pairs = [(a, b) for a in pts for b in pts]
        for (a, b), blk in zip(pairs, pmap(lambda ab: self.block(*ab), pairs)):
            g[offsets[a], offsets[b]] = blk
        return 0.5 * (g + g.conj().T)


def build_kernel(system: GridSystem, radius: int | None = None) -> ToeplitzKernel:
    """Regular kernel of a generated product system up to ``radius``."""
    radius = system.horizon if radius is None else radius
    if radius < 0 or radius > system.horizon:
        raise HorizonExceeded(f"radius {radius} exceeds horizon {system.horizon}")
    blocks = {}
    for m in product(range(-radius, radius + 1), repeat=2):
        mp, mm = _plus(m), _minus(m)
        if _norm1(mp) > radius or _norm1(mm) > radius:
            continue
        blocks[m] = system.t_tilde(mm).conj().T @ system.t_tilde(mp)
    return ToeplitzKernel(system, radius, blocks)


# -- positivity ------------------------------------------------------------
def brehmer_forms(kernel: ToeplitzKernel, corner: Index = (1, 1)) -> dict:
    """Defect forms at ``corner``.

    ``form``: the Gram form evaluated on ``h_g(p) = (-1)^|p| (I (x) T~_{G-p}) theta^{-1} g``
    for ``p <= G``, as an operator on ``X(G) (x) H``.
    ``regular``: the closed form ``sum_F (-1)^|F| theta (I (x) T~_F* T~_F) theta^{-1}``
    over the faces ``F`` of the corner.
    ``cp_side``: ``sum_F (-1)^|F| T~_F T~_F*`` on ``H``.
    """
    sys, n = kernel.system, kernel.n
    if _norm1(corner) > kernel.radius:
        raise HorizonExceeded(f"corner {corner} outside radius {kernel.radius}")
    pts, offsets = kernel.layout
    dg = sys.dim(corner) * n
    wb = np.zeros((kernel.gram.shape[0], dg), dtype=complex)
    faces = [(a, b) for a in range(corner[0] + 1) for b in range(corner[1] + 1)]
    regular = np.zeros((dg, dg), dtype=complex)
    cp_side = np.zeros((n, n), dtype=complex)
    for p in faces:
        rest = (corner[0] - p[0], corner[1] - p[1])
        sign = (-1) ** (p[0] + p[1])
        theta_inv = np.kron(sys.theta(p, rest), np.eye(n)).conj().T
        wb[offsets[p]] = sign * np.kron(np.eye(sys.dim(p)), sys.t_tilde(rest)) @ theta_inv
        tf = sys.t_tilde(p)
        th = np.kron(sys.theta(rest, p), np.eye(n))
        regular += sign * th @ np.kron(np.eye(sys.dim(rest)), tf.conj().T @ tf) @ th.conj().T
        cp_side += sign * tf @ tf.conj().T
    form = wb.conj().T @ kernel.gram @ wb
    return {"corner": corner, "form": form, "regular": regular, "cp_side": cp_side}


def check_pd(kernel: ToeplitzKernel, tol: float = PD_TOL) -> Report:
    """Minimum eigenvalue of the truncated Gram form.

    On failure ``details["witness"]`` holds the violating grid function,
    keyed by point, and ``details["brehmer"]`` the defect forms at the
    unit corner (when the radius reaches it).
    """
    w, v = herm_eig(kernel.gram)
    min_eig = float(w[-1])
    details = {"min_eig": min_eig, "max_eig": float(w[0]), "size": int(len(w))}
    if _norm1((1, 1)) <= kernel.radius:
        br = brehmer_forms(kernel)
        details["brehmer"] = {k: br[k] for k in ("form", "regular", "cp_side")}
        details["brehmer_min_eig"] = float(np.linalg.eigvalsh(br["regular"])[0])
    passed = min_eig >= -tol
    if not passed:
        pts, offsets = kernel.layout
        vec = v[:, -1]
        details["witness"] = {
            _key(p): vec[offsets[p]].reshape(kernel.system.dim(p), kernel.n) for p in pts
        }
    return Report("check_pd", max(0.0, -min_eig), tol, bool(passed), details)


# -- Kolmogorov factorization ---------------------------------------------------
@dataclass
class DilationSpace:
    """Coordinates of the Kolmogorov space with translation operators.

    ``coords`` has one column per grid basis function (point, fiber index,
    vector of ``H``) in the kernel layout; ``ranks[d]`` is ``dim D_d``.
    """

    kernel: ToeplitzKernel
    coords: np.ndarray
    ranks: list[int]
    rank_tol: float
    _trans: dict = field(default_factory=dict, repr=False)

    @property
    def system(self) -> GridSystem:
        return self.kernel.system

    @property
    def radius(self) -> int:
        return self.kernel.radius

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    @property
    def n(self) -> int:
        return self.kernel.n

    @property
    def embedding(self) -> np.ndarray:
        """Isometry ``W0: H -> K`` (delta functions at the origin)."""
        return self.coords[:, : self.n]

    @property
    def p(self) -> np.ndarray:
        w0 = self.embedding
        return w0 @ w0.conj().T

    def domain_projection(self, depth: int) -> np.ndarray:
        proj = np.zeros((self.dim, self.dim))
        r = self.ranks[max(0, min(depth, self.radius))]
        proj[:r, :r] = np.eye(r)
        return proj

    def block_coords(self, p: Index) -> np.ndarray:
        return self.coords[:, self.kernel.layout[1][p]]

    def translation(self, s: Index) -> np.ndarray:
        """Stack ``V(alpha)`` restricted to ``D_{M-|s|}``, shape ``(dim X(s), K, K)``."""
        if s[0] < 0 or s[1] < 0 or _norm1(s) > self.radius:
            raise HorizonExceeded(f"translation {s} outside radius {self.radius}")
        if s in self._trans:
            return self._trans[s]
        sys, n = self.system, self.n
        depth = self.radius - _norm1(s)
        r_d = self.ranks[depth]
        pts = [p for p in self.kernel.points() if _norm1(p) <= depth]
        dom = np.hstack([self.block_coords(p) for p in pts])[:r_d]
        pinv = np.linalg.pinv(dom, rcond=1e-13)
        ds_ = sys.dim(s)
        out = np.zeros((ds_, self.dim, self.dim), dtype=complex)
        for a in range(ds_):
            cols = []
            for p in pts:
                dp = sys.dim(p)
                th = sys.theta(s, p)[:, a * dp : (a + 1) * dp]
                cols.append(self.block_coords((p[0] + s[0], p[1] + s[1])) @ np.kron(th, np.eye(n)))
            out[a, :, :r_d] = np.hstack(cols) @ pinv
        self._trans[s] = out
        return out

    def v_tilde(self, s: Index) -> np.ndarray:
        """Row operator ``X(s) (x) K -> K`` with fiber index major."""
        v = self.translation(s)
        return np.transpose(v, (1, 0, 2)).reshape(self.dim, -1)

    @property
    def v_e(self) -> np.ndarray:
        return self.translation((1, 0))

    @property
    def v_f(self) -> np.ndarray:
        return self.translation((0, 1))

    def depth(self, b: np.ndarray, tol: float = 1e-12) -> int:
        """Least ``d`` with ``b`` supported in ``D_d`` on both sides."""
        b = np.asarray(b)
        scale = max(1.0, float(np.linalg.norm(b)))
        for d, r in enumerate(self.ranks):
            if np.linalg.norm(b[r:, :]) <= tol * scale and np.linalg.norm(b[:, r:]) <= tol * scale:
                return d
        return self.radius + 1

    def alpha(self, s: Index, b: np.ndarray, check: bool = True) -> np.ndarray:
        """``alpha_s(b) = V~_s (I (x) b) V~_s*``.

        With ``check`` the contract ``|s|_1 + depth(b) <= M`` is enforced;
        without it the truncated formula is evaluated as is.
        """
        b = np.asarray(b, dtype=complex)
        if check:
            d = self.depth(b)
            if d + _norm1(s) > self.radius:
                raise OutOfHorizon(f"alpha_{s} needs depth <= {self.radius - _norm1(s)}, got {d}", d)
        v = self.translation(s)
        left = np.transpose(v @ b, (1, 0, 2)).reshape(self.dim, -1)
        right = np.transpose(v, (1, 0, 2)).reshape(self.dim, -1)
        return left @ right.conj().T

    def beta(self, k: int, b: np.ndarray, check: bool = True) -> np.ndarray:
        return self.alpha((k, 0), b, check)

    def gamma(self, k: int, b: np.ndarray, check: bool = True) -> np.ndarray:
        return self.alpha((0, k), b, check)

    def grid(self) -> list[Index]:
        return self.kernel.points()


def kolmogorov(kernel: ToeplitzKernel, rank_tol: float = RANK_THRESHOLD, pd_tol: float = PD_TOL) -> DilationSpace:
    """Depth-ordered factorization ``G = W* W`` of the Gram matrix.

    Raises :class:`NotPD` (carrying the :func:`check_pd` report) if the
    form has an eigenvalue below ``-pd_tol``.
    """
    rep = check_pd(kernel, pd_tol)
    if not rep.passed:
        raise NotPD(f"kernel not positive definite: min eig {rep.details['min_eig']:.3e}", rep)
    g = kernel.gram
    lam_max = max(rep.details["max_eig"], 1.0)
    pts, offsets = kernel.layout
    n = kernel.n
    size = g.shape[0]
    rows: list[np.ndarray] = [np.eye(n, size, dtype=complex)]
    ranks = [n]
    done = n
    for depth in range(1, kernel.radius + 1):
        cur = [offsets[p] for p in pts if _norm1(p) == depth]
        c0, c1 = cur[0].start, cur[-1].stop
        w_prev = np.vstack(rows)[:, :done]
        x = np.linalg.lstsq(w_prev.conj().T, g[:done, c0:c1], rcond=None)[0]
        schur = g[c0:c1, c0:c1] - x.conj().T @ x
        lam, q = herm_eig(0.5 * (schur + schur.conj().T))
        if lam[-1] < -pd_tol * lam_max:
            raise NotPD(f"negative Schur complement at depth {depth}: {lam[-1]:.3e}", rep)
        keep = lam > rank_tol * lam_max
        new = np.sqrt(lam[keep])[:, None] * q[:, keep].conj().T
        # existing rows extend over the new columns; fresh rows follow
        stacked = np.vstack(rows)
        stacked[:, c0:c1] = x
        fresh = np.zeros((new.shape[0], size), dtype=complex)
        fresh[:, c0:c1] = new
        rows = [stacked, fresh] if new.shape[0] else [stacked]
        done = c1
        ranks.append(ranks[-1] + int(keep.sum()))
    coords = np.vstack(rows)
    return DilationSpace(kernel, coords, ranks, rank_tol)


# -- verification ---------------------------------------------------------------
def kernel_reproduction(ds: DilationSpace) -> tuple[float, Index | None]:
    """Worst ``||(V~_{m-}(I (x) W0))* V~_{m+}(I (x) W0) - Phi(m)||`` over the kernel."""
    w0 = ds.embedding
    lifted = {}
    for p in ds.grid():
        lifted[p] = ds.v_tilde(p) @ np.kron(np.eye(ds.system.dim(p)), w0)
    worst, where = 0.0, None
    for m, blk in ds.kernel.blocks.items():
        val = lifted[_minus(m)].conj().T @ lifted[_plus(m)]
        d = float(np.linalg.norm(val - blk, 2))
        if where is None or d > worst:
            worst, where = d, m
    return worst, where


def _comm_defect(ds: DilationSpace) -> float:
    """Lifted step relation ``V_E[i] V_F[j] = sum phi V_F[l] V_E[k]`` on ``D_{M-2}``."""
    if ds.radius < 2:
        return 0.0
    phi = ds.system.step_flip4()
    proj = ds.domain_projection(ds.radius - 2)
    ve, vf = ds.v_e, ds.v_f
    lhs = np.einsum("iab,jbc->ijac", ve, vf)
    rhs = np.einsum("lkij,lab,kbc->ijac", phi, vf, ve)
    return float(np.max(np.abs((lhs - rhs) @ proj))) if lhs.size else 0.0


def _isometry_defect(ds: DilationSpace) -> float:
    # translations vanish off their domain, so only domain columns matter
    worst = 0.0
    for s in ds.grid():
        v = ds.translation(s)
        r_d = ds.ranks[ds.radius - _norm1(s)]
        cols = np.hstack(list(v[:, :, :r_d]))
        g = cols.conj().T @ cols
        worst = max(worst, float(np.max(np.abs(g - np.eye(g.shape[0])))))
    return worst


def verify_dilation_theorem(ds: DilationSpace, tol: float = TOL_VERIFY) -> Report:
    """Structural properties of the truncated dilation.

    Checked: ``W0`` is isometric and ``V(0)`` is the identity; the
    compression ``W0* V(x) W0 = T(x)``; ``{V(x) h}`` spans ``K``;
    ``W0* V(x) (1 - p) = 0``. Also reported: reproduction of every
    kernel block, isometry of the translations on their domains and the
    lifted commutation relation.
    """
    sys, w0 = ds.system, ds.embedding
    one = max(
        float(np.linalg.norm(w0.conj().T @ w0 - np.eye(ds.n))),
        float(np.linalg.norm(ds.translation((0, 0))[0] - np.eye(ds.dim))),
    )
    comp = annih = 0.0
    span = []
    q = np.eye(ds.dim) - ds.p
    for s in ds.grid():
        v = ds.translation(s)
        x = sys.basis_ops(s)
        comp = max(comp, float(np.max(np.linalg.norm(w0.conj().T @ v @ w0 - x, 2, axis=(1, 2)))))
        annih = max(annih, float(np.max(np.linalg.norm(w0.conj().T @ v @ q, 2, axis=(1, 2)))))
        span.append(np.hstack(list(v @ w0)))
    rank = span_rank(np.hstack(span), ds.rank_tol)
    repro, repro_at = kernel_reproduction(ds)
    iso = _isometry_defect(ds)
    comm = _comm_defect(ds)
    items = {
        "embedding": one,
        "compression": comp,
        "span_rank": rank,
        "annihilation": annih,
        "kernel_reproduction": repro,
        "isometry_on_domains": iso,
        "lifted_commutation": comm,
    }
    residual = max(one, comp, annih, repro, iso, comm)
    passed = residual <= tol and rank == ds.dim
    return Report(
        "dilation_theorem",
        residual,
        tol,
        bool(passed),
        {**items, "dim_K": ds.dim, "kernel_worst_at": repro_at},
    )


def induce_endos(ds: DilationSpace):
    """Evaluator ``(s, b) -> alpha_s(b)`` enforcing the horizon contract."""
    return lambda s, b: ds.alpha(tuple(s), b, check=True)


def _random_op(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def verify_endomorphism(
    ds: DilationSpace, probes: int = 20, tol: float = TOL_VERIFY, seed: int = 0
) -> Report:
    """Multiplicativity, adjoints, projections and the semigroup law on declared domains."""
    rng = np.random.default_rng(seed)
    mult = adj = proj = semi = 0.0
    pts = ds.grid()
    for s in pts:
        d = ds.radius - _norm1(s)
        dom = ds.domain_projection(d)
        u1 = ds.alpha(s, np.eye(ds.dim), check=False)
        proj = max(proj, float(np.linalg.norm(u1 @ u1 - u1)), float(np.linalg.norm(u1 - u1.conj().T)))
        for _ in range(probes):
            a = dom @ _random_op(rng, ds.dim) @ dom
            b = dom @ _random_op(rng, ds.dim) @ dom
            sa, sb = ds.alpha(s, a), ds.alpha(s, b)
            scale = np.linalg.norm(a, 2) * np.linalg.norm(b, 2)
            mult = max(mult, float(np.linalg.norm(ds.alpha(s, a @ b) - sa @ sb, 2) / scale))
            adj = max(adj, float(np.linalg.norm(ds.alpha(s, a.conj().T) - sa.conj().T, 2)))
    for s in pts:
        for t in pts:
            st = (s[0] + t[0], s[1] + t[1])
            if _norm1(st) > ds.radius:
                continue
            dom = ds.domain_projection(ds.radius - _norm1(st))
            for _ in range(max(1, probes // 4)):
                b = dom @ _random_op(rng, ds.dim) @ dom
                lhs = ds.alpha(s, ds.alpha(t, b))
                semi = max(semi, float(np.linalg.norm(lhs - ds.alpha(st, b), 2) / np.linalg.norm(b, 2)))
    residual = max(mult, adj, proj, semi)
    return Report.from_residual(
        "endomorphism",
        residual,
        tol,
        multiplicativity=mult,
        adjoint=adj,
        unit_projection=proj,
        semigroup=semi,
    )


def verify_dilation_eq(
    ds: DilationSpace,
    grid: list[Index] | None = None,
    probes: int = 20,
    tol: float = TOL_VERIFY,
    seed: int = 0,
    coinv_tol: float = TOL_VERIFY,
) -> Report:
    """``P_s(p b p) = p alpha_s(b) p`` and coinvariance of ``p``.

    ``P_s`` is the channel of the system at ``s`` (computed from the
    generators, not from the fibers). Probes are random ``b`` in ``B(K)``
    and the structured family ``p a p`` with ``a`` a matrix unit.
    """
    rng = np.random.default_rng(seed)
    sys, w0 = ds.system, ds.embedding
    grid = ds.grid() if grid is None else list(grid)
    q = np.eye(ds.dim) - ds.p
    worst = structured = coinv = margin = 0.0
    where = None
    for s in grid:
        ch = sys.channel(s)
        bs = [_random_op(rng, ds.dim) for _ in range(probes)]
        for b in bs:
            lhs = ch(w0.conj().T @ b @ w0)
            rhs = w0.conj().T @ ds.alpha(s, b, check=False) @ w0
            d = float(np.linalg.norm(lhs - rhs, 2))
            if where is None or d > worst:
                worst, where = d, s
        for i, j in product(range(ds.n), repeat=2):
            e = np.zeros((ds.n, ds.n))
            e[i, j] = 1.0
            rhs = w0.conj().T @ ds.alpha(s, w0 @ e @ w0.conj().T) @ w0
            structured = max(structured, float(np.linalg.norm(ch(e) - rhs, 2)))
        aq = ds.alpha(s, q, check=False)
        coinv = max(coinv, float(np.linalg.norm(w0.conj().T @ aq @ w0, 2)))
        # alpha_s(1 - p) <= 1 - p: largest eigenvalue of the difference
        margin = max(margin, float(np.linalg.eigvalsh(aq - q)[-1]))
    passed = worst <= tol and structured <= tol and coinv <= coinv_tol and margin <= coinv_tol
    return Report(
        "dilation_eq",
        max(worst, structured),
        tol,
        bool(passed),
        {
            "random_residual": worst,
            "worst_at": where,
            "structured_residual": structured,
            "coinvariance": coinv,
            "coinvariance_margin": margin,
            "points": len(grid),
            "probes": probes,
        },
    )


def _orth(vectors: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the column span at relative tolerance ``tol``."""
    if vectors.size == 0:
        return vectors
    u, sv, _ = np.linalg.svd(vectors, full_matrices=False)
    if not len(sv) or sv[0] == 0:
        return u[:, :0]
    return u[:, sv > tol * max(sv[0], 1.0)]


def _chains(s: Index) -> list[list[Index]]:
    """Chains ``(s_1,0) < ... < (s_m,0) < (s_m,t_1) < ... < (s_m,t_n) = s``."""
    out = []
    for k in range(1 << max(s[0] - 1, 0)):
        firsts = [a for a in range(1, s[0]) if k >> (a - 1) & 1] + ([s[0]] if s[0] else [])
        for l in range(1 << max(s[1] - 1, 0)):
            seconds = [b for b in range(1, s[1]) if l >> (b - 1) & 1] + ([s[1]] if s[1] else [])
            out.append([(a, 0) for a in firsts] + [(s[0], b) for b in seconds])
    return out


def _commutant_dim(gens: list[np.ndarray], tol: float) -> int:
    """``dim`` of the commutant of a self-adjoint generating set."""
    r = gens[0].shape[0]
    eye = np.eye(r)
    acc = np.zeros((r * r, r * r), dtype=complex)
    for g in gens:
        gh = g.conj().T
        acc += np.kron(eye, gh @ g) - np.kron(g.T, gh) - np.kron(g.conj(), g) + np.kron(g.conj() @ g.T, eye)
    w = np.linalg.eigvalsh(0.5 * (acc + acc.conj().T))
    return int(np.sum(w <= tol * max(w[-1], 1.0)))


def verify_minimality(
    ds: DilationSpace,
    grid: list[Index] | None = None,
    tol: float = TOL_VERIFY,
    commutant_max_dim: int = 30,
    max_len: int | None = None,
) -> Report:
    """Spanning and central-support criteria for the induced dilation.

    (a) products of at most ``max_len`` (default ``2M + 2``) factors
    ``alpha_t(m)``, ``m`` a matrix unit of ``B(H)``, applied to ``H``;
    single factors need not suffice, since Kraus products over a fiber
    may be linearly dependent as operators; (b) the ordered products along the chains
    below each grid point; (c) the central support of ``p`` in the algebra
    generated by ``alpha_t(B(H))``, cross-checked by the commutant
    dimension when ``dim K <= commutant_max_dim``; (d) unit continuity
    ``<alpha_t(1) k, k> = ||k||^2`` for ``k = alpha_s(b) h`` with ``t <= s``,
    together with the monotonicity ``alpha_s(1) <= alpha_t(1)``.
    """
    grid = ds.grid() if grid is None else list(grid)
    w0, n, r = ds.embedding, ds.n, ds.dim
    max_len = 2 * ds.radius + 2 if max_len is None else max_len
    units = []
    for i, j in product(range(n), repeat=2):
        e = np.zeros((n, n))
        e[i, j] = 1.0
        units.append(w0 @ e @ w0.conj().T)
    images = {s: [ds.alpha(s, m) for m in units] for s in grid}
    gens = [a for s in grid for a in images[s]]

    # (a) spans of monomials by length, grown until the rank settles
    cur = _orth(w0, ds.rank_tol)
    rank_by_length = []
    for _ in range(max_len):
        grown = _orth(np.hstack([cur] + [a @ cur for a in gens]), ds.rank_tol)
        rank_by_length.append(grown.shape[1])
        if grown.shape[1] == cur.shape[1]:
            break
        cur = grown
    rank_a = rank_by_length[-1]

    # (b)
    pieces = [w0]
    for s in grid:
        if s == (0, 0):
            continue
        for chain in _chains(s):
            cur = w0
            for c in chain:
                cur = _orth(np.hstack([a @ cur for a in images[c]]), ds.rank_tol)
            pieces.append(cur)
    rank_b = span_rank(np.hstack(pieces), ds.rank_tol)

    # (c) [A H] is the closed monomial span; gens are closed under adjoints
    basis = cur
    while True:
        grown = _orth(np.hstack([basis] + [a @ basis for a in gens]), ds.rank_tol)
        if grown.shape[1] == basis.shape[1]:
            break
        basis = grown
    support = basis @ basis.conj().T
    central = float(np.linalg.norm(support - np.eye(r), 2))
    comm_dim = _commutant_dim(gens, 1e-10) if r <= commutant_max_dim else None

    # (d)
    cont = mono = 0.0
    units_k = {s: ds.alpha(s, np.eye(r), check=False) for s in grid}
    for s in grid:
        ks = np.hstack([a @ w0 for a in images[s]])
        for t in grid:
            if t[0] > s[0] or t[1] > s[1]:
                continue
            at = units_k[t]
            quad = np.einsum("ik,ij,jk->k", ks.conj(), at, ks).real
            cont = max(cont, float(np.max(np.abs(quad - np.sum(np.abs(ks) ** 2, axis=0)))))
            mono = max(mono, float(np.linalg.eigvalsh(units_k[s] - at)[-1]))

    details = {
        "dim_K": r,
        "monomial_rank": rank_a,
        "monomial_rank_by_length": rank_by_length,
        "partition_rank": rank_b,
        "central_support_defect": central,
        "commutant_dim": comm_dim,
        "unit_continuity": cont,
        "monotonicity": mono,
    }
    passed = (
        rank_a == r
        and rank_b == r
        and central <= tol
        and (comm_dim is None or comm_dim == 1)
        and cont <= tol
        and mono <= tol
    )
    return Report("minimality", max(central, cont, max(mono, 0.0)), tol, bool(passed), details)


# -- cross-level consistency -------------------------------------------------------
def cross_level_check(
    r_sg, s_sg, level: int, radius: int, tol: float = 1e-8, rank_tol: float = RANK_THRESHOLD
) -> Report:
    """Compress the level ``n+1`` construction back to the level ``n`` grid.

    The fine fiber over ``2p`` contains the coarse fiber over ``p``
    through the isometry ``iota_p`` expressing coarse Kraus products in
    fine ones. Reported: ``||W0* V~_{2p} (iota_p (x) W0) - T~_p||`` and the
    fine kernel restricted along ``iota`` against the coarse kernel.
    """
    from .prodsys import build_system

    coarse = build_system(r_sg, s_sg, level, radius)
    fine = build_system(r_sg, s_sg, level + 1, 2 * radius)
    ds = kolmogorov(build_kernel(fine, 2 * radius), rank_tol)
    ck = build_kernel(coarse, radius)
    w0 = ds.embedding
    steps = {}
    for unit in ((1, 0), (0, 1)):
        big = fine.basis_ops((2 * unit[0], 2 * unit[1])).reshape(fine.dim((2 * unit[0], 2 * unit[1])), -1)
        small = coarse.basis_ops(unit).reshape(coarse.dim(unit), -1)
        steps[unit] = np.linalg.lstsq(big.T, small.T, rcond=None)[0]
    # coarse fibers are tensor powers; realized products may be dependent,
    # so iota is built factorwise rather than fitted per point
    iotas, iso = {}, 0.0
    for p in coarse.indices(radius):
        c = np.eye(1, dtype=complex)
        for unit, reps in (((1, 0), p[0]), ((0, 1), p[1])):
            for _ in range(reps):
                c = np.kron(c, steps[unit])
        iotas[p] = c
        big = fine.basis_ops((2 * p[0], 2 * p[1])).reshape(c.shape[0], -1)
        small = coarse.basis_ops(p).reshape(c.shape[1], -1)
        iso = max(iso, float(np.linalg.norm(c.conj().T @ c - np.eye(c.shape[1]))))
        iso = max(iso, float(np.linalg.norm(c.T @ big - small)))
    lifted = {
        p: ds.v_tilde((2 * p[0], 2 * p[1])) @ np.kron(iotas[p], w0) for p in iotas
    }
    comp = 0.0
    for p in iotas:
        comp = max(comp, float(np.linalg.norm(w0.conj().T @ lifted[p] - coarse.t_tilde(p), 2)))
    kern, where = 0.0, None
    for m, blk in ck.blocks.items():
        val = lifted[_minus(m)].conj().T @ lifted[_plus(m)]
        d = float(np.linalg.norm(val - blk, 2))
        if where is None or d > kern:
            kern, where = d, m
    residual = max(comp, kern, iso)
    return Report.from_residual(
        "cross_level",
        residual,
        tol,
        compression=comp,
        kernel=kern,
        kernel_worst_at=where,
        iota_defect=iso,
        fine_dim_K=ds.dim,
        level=level,
        radius=radius,
    )
