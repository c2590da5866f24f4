"""End-to-end acceptance criteria, one test per criterion.

Each test records a ``criterion N: PASS/FAIL`` line; the lines are printed
in the terminal summary (see ``conftest.py``) and when this file is run
as a script.
"""

import math
import time

import numpy as np
import scipy.linalg
from conftest import NILPOTENT

from cpdil.channel import apply, from_kraus, from_superop
from cpdil.dilate import (
    brehmer_forms,
    build_kernel,
    check_pd,
    cross_level_check,
    kernel_reproduction,
    kolmogorov,
    verify_dilation_eq,
    verify_dilation_theorem,
    verify_endomorphism,
    verify_minimality,
)
from cpdil.errors import NotCommuting, NotPD
from cpdil.extend import SampledSemigroup, arveson_bound, extend_to
from cpdil.fixtures import commuting_pairs, noncommuting_pairs
from cpdil.gns import compare_flips, flip_witness
from cpdil.prodsys import build_system, build_system_from_steps, verify_associativity, verify_commutation_relation
from cpdil.prodsys import verify_rep_identity
from cpdil.semigroup import decay, dephasing
from cpdil.strongcomm import make_aut_cp_pair, make_conjugation_pair, make_endo_pair, witness_unitary

RESULTS: dict[int, str] = {}

SEED = 20261014
A_CONJ = np.array([[-0.3, 0.5], [0.0, -0.4]])


def _record(k: int, ok: bool, detail: str) -> None:
    RESULTS[k] = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def _generator_pairs():
    return {
        "dephasing x decay": (dephasing(0.8), decay(0.5)),
        "commuting conjugations": make_conjugation_pair(A_CONJ, 0.6 * A_CONJ @ A_CONJ + 0.5 * A_CONJ - 0.1 * np.eye(2)),
    }


def _doubly_commuting_pairs():
    return {
        "dephasing x decay": (dephasing(0.8), decay(0.5)),
        "diagonal conjugations": make_conjugation_pair(np.diag([-0.3, -1.0 + 0.4j]), np.diag([-0.5 + 0.2j, -0.1])),
    }


def _dilations():
    out = {}
    for name, (r, s) in _doubly_commuting_pairs().items():
        out[name] = kolmogorov(build_kernel(build_system(r, s, level=2, horizon=3)))
    r, s = make_aut_cp_pair(2, seeds=0)
    out["automorphism x covariant"] = kolmogorov(build_kernel(build_system(r, s, level=1, horizon=2)))
    return out


def test_criterion_01_witness_suite():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    good = commuting_pairs(rng, 60, dims=(2, 3))
    worst_res = worst_unit = 0.0
    for _, th, ph in good:
        fu = witness_unitary(th, ph)
        worst_res = max(worst_res, fu.residual)
        mk = fu.u.shape[0]
        worst_unit = max(worst_unit, float(np.linalg.norm(fu.u.conj().T @ fu.u - np.eye(mk))))
    rejected = 0
    bad = noncommuting_pairs(rng, 60, dims=(2, 3))
    for _, th, ph in bad:
        try:
            witness_unitary(th, ph)
        except NotCommuting:
            rejected += 1
    elapsed = time.perf_counter() - start
    ok = worst_res <= 1e-9 and worst_unit <= 1e-10 and rejected == len(bad) and elapsed <= 30
    _record(
        1,
        ok,
        f"{len(good)} commuting: residual {worst_res:.1e}, unitarity {worst_unit:.1e}; "
        f"{rejected}/{len(bad)} rejected; {elapsed:.1f}s",
    )
    assert ok


def test_criterion_02_flip_equivalence():
    rng = np.random.default_rng(SEED + 2)
    fixtures = commuting_pairs(rng, 30, dims=(2,)) + noncommuting_pairs(rng, 20, dims=(2,))
    agree, worst = 0, 0.0
    for _, th, ph in fixtures:
        try:
            fw = flip_witness(th, ph)
        except NotCommuting:
            fw = None
        try:
            fu = witness_unitary(th, ph)
        except NotCommuting:
            fu = None
        if (fw is None) == (fu is None):
            agree += 1
        if fw is not None and fu is not None:
            worst = max(worst, compare_flips(fw, th, ph, fu.u).residual)
    ok = agree == len(fixtures) and worst <= 1e-8
    _record(2, ok, f"{agree}/{len(fixtures)} agree on success; flip mismatch {worst:.1e}")
    assert ok


def test_criterion_03_representation_identity():
    worst = 0.0
    for name, (r, s) in _generator_pairs().items():
        rep = verify_rep_identity(build_system(r, s, level=2, horizon=3), probes=20, seed=SEED)
        worst = max(worst, rep.details["identity_residual"])
        assert rep.passed, name
    ok = worst <= 1e-9
    _record(3, ok, f"identity residual {worst:.1e} over level-2 grid, horizon 3")
    assert ok


def test_criterion_04_relation_and_associativity():
    comm = assoc = 0.0
    for r, s in _generator_pairs().values():
        system = build_system(r, s, level=2, horizon=3)
        comm = max(comm, verify_commutation_relation(system).residual)
        assoc = max(assoc, verify_associativity(system).residual)
    ok = comm <= 1e-9 and assoc <= 1e-9
    _record(4, ok, f"commutation {comm:.1e}, associativity {assoc:.1e}")
    assert ok


def test_criterion_05_kernel_and_obstruction():
    min_eig, repro, thm = math.inf, 0.0, True
    for r, s in _doubly_commuting_pairs().values():
        kernel = build_kernel(build_system(r, s, level=2, horizon=3))
        rep = check_pd(kernel)
        min_eig = min(min_eig, rep.details["min_eig"])
        ds = kolmogorov(kernel)
        repro = max(repro, kernel_reproduction(ds)[0])
        thm = thm and verify_dilation_theorem(ds).passed
    t = from_kraus([NILPOTENT])
    nil = build_kernel(build_system_from_steps(t, t, horizon=2))
    nil_rep = check_pd(nil)
    br = brehmer_forms(nil)
    exact = np.array_equal(br["cp_side"], np.diag([-1.0, 1.0]).astype(complex))
    try:
        kolmogorov(nil)
        raised = False
    except NotPD:
        raised = True
    ok = min_eig >= -1e-10 and repro <= 1e-9 and thm and not nil_rep.passed and exact and raised
    _record(
        5,
        ok,
        f"min eig {min_eig:.1e}, reproduction {repro:.1e}, dilation items {'ok' if thm else 'failed'}; "
        f"nilpotent min eig {nil_rep.details['min_eig']:.4f}, obstruction diag(-1,1) exact: {exact}",
    )
    assert ok


def test_criterion_06_dilation_equation_and_minimality():
    eq = coinv = 0.0
    minimal = True
    for name, ds in _dilations().items():
        rep = verify_dilation_eq(ds, probes=20, seed=SEED)
        eq = max(eq, rep.details["random_residual"])
        coinv = max(coinv, rep.details["coinvariance"])
        mrep = verify_minimality(ds)
        minimal = minimal and mrep.details["monomial_rank"] == ds.dim and mrep.details["central_support_defect"] <= 1e-9
    ok = eq <= 1e-8 and coinv <= 1e-9 and minimal
    _record(6, ok, f"dilation equation {eq:.1e}, coinvariance {coinv:.1e}, minimal: {minimal}")
    assert ok


def test_criterion_07_endomorphisms():
    mult = semi = 0.0
    for ds in _dilations().values():
        rep = verify_endomorphism(ds, seed=SEED)
        mult = max(mult, rep.details["multiplicativity"])
        semi = max(semi, rep.details["semigroup"])
    ok = mult <= 1e-9 and semi <= 1e-9
    _record(7, ok, f"multiplicativity {mult:.1e}, semigroup law {semi:.1e}")
    assert ok


def test_criterion_08_trace_norm_bound():
    rng = np.random.default_rng(SEED + 8)
    violations = 0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n))
        u, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        p = u[:, :k] @ u[:, :k].conj().T
        dens = []
        for _ in range(2):
            z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            r = z @ z.conj().T
            dens.append(r / np.trace(r).real)
        omega, rho = dens
        eps = float(np.trace(omega @ (np.eye(n) - p)).real)
        res = arveson_bound([rho], omega, p, eps)
        violations += res.certified_bound[0] < res.true_distance[0] - 1e-12
    # engineered: rho_k -> omega with rho_k(1 - p) = eps_k
    ratio = 0.0
    p = np.diag([1.0, 1.0, 0.0])
    omega = np.diag([0.6, 0.4, 0.0]).astype(complex)
    sigma = np.full((3, 3), 1 / 3, dtype=complex)
    for j in range(1, 13):
        eps = 10.0 ** -j
        rho = (1 - 3 * eps) * omega + 3 * eps * sigma
        res = arveson_bound([rho], omega, p, eps)
        violations += res.certified_bound[0] < res.true_distance[0] - 1e-15
        ratio = max(ratio, (res.certified_bound[0] - res.sup_term[0]) / (6 * math.sqrt(eps) + eps))
    ok = violations == 0 and ratio <= 1.0
    _record(8, ok, f"200 random triples + 12 engineered: {violations} violations; tail/(6 eps^1/2 + eps) <= {ratio:.3f}")
    assert ok


def test_criterion_09_extension():
    sg = dephasing(0.6)
    ss = SampledSemigroup.binary(sg, depth=20)
    lhat = ss.generator_estimate()
    worst = 0.0
    probes = [np.array([[0.3, 1 - 2j], [0.5j, -1.0]]), np.eye(2)]
    for t in (1 / 3, math.pi / 10):
        ch, _ = extend_to(ss, t, depth=20)
        ref = from_superop(scipy.linalg.expm(t * lhat))
        worst = max(worst, float(np.max(np.abs(ch.choi - ref.choi))))
        for a in probes:
            worst = max(worst, float(np.linalg.norm(apply(ch, a) - apply(sg.at(t), a))))
    r, _ = make_endo_pair(2, seeds=SEED % 1000)
    endo_ss = SampledSemigroup.binary(r, depth=20)
    preserved = True
    for t in (1 / 3, math.pi / 10):
        _, rep = extend_to(endo_ss, t, depth=20)
        preserved = preserved and rep.details["flags_in"]["endomorphism"] and rep.details["flags_out"]["endomorphism"]
    ok = worst <= 1e-8 and preserved
    _record(9, ok, f"depth-20 extension error {worst:.1e}; endomorphism preserved: {preserved}")
    assert ok


def test_criterion_10_cross_level():
    worst = 0.0
    for r, s in _generator_pairs().values():
        rep = cross_level_check(r, s, level=2, radius=2)
        worst = max(worst, rep.residual)
    ok = worst <= 1e-8
    _record(10, ok, f"level-3 dilation compressed to level 2: {worst:.1e}")
    assert ok


def summary_lines() -> list[str]:
    return [RESULTS[k] for k in sorted(RESULTS)]


if __name__ == "__main__":
    import sys

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for test in tests:
        try:
            test()
        except AssertionError:
            failed += 1
    print("\n".join(summary_lines()))
    sys.exit(1 if failed else 0)
