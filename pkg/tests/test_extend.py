import math
from fractions import Fraction

import numpy as np
import pytest
from oracles import random_hermitian

from cpdil.channel import Channel, apply, choi_distance, compose, from_kraus
from cpdil.errors import (
    BadProjection,
    EpsilonViolated,
    InsufficientTable,
    NegativeTime,
    NotCauchy,
    NotCommuting,
)
from cpdil.extend import (
    SampledSemigroup,
    arveson_bound,
    extend_to,
    extension_semigroup_law,
    two_param_assemble,
)
from cpdil.numerics import trace_norm
from cpdil.semigroup import decay, dephasing
from cpdil.strongcomm import make_aut_cp_pair, make_endo_pair


def _dephased(rate, t):
    """Closed form: off-diagonal entries decay as exp(-2 rate t)."""
    c = math.exp(-2 * rate * t)

    def fn(a):
        a = np.asarray(a, dtype=complex)
        return np.array([[a[0, 0], c * a[0, 1]], [c * a[1, 0], a[1, 1]]])

    return fn


def _random_density(rng, n, rank=None):
    rank = n if rank is None else rank
    z = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


# -- trace-norm bound --------------------------------------------------------------


def test_arveson_equal_states():
    rho = np.diag([0.7, 0.3])
    res = arveson_bound([rho], rho, np.diag([1.0, 0.0]), eps=0.3)
    assert res.true_distance[0] < 1e-15
    assert res.report().passed


def test_arveson_two_level_example():
    p = np.diag([1.0, 0.0])
    omega = np.diag([1.0, 0.0])
    for delta in (1e-1, 1e-3, 1e-6):
        rho = np.diag([1 - delta, delta])
        res = arveson_bound([rho], omega, p, eps=delta)
        assert abs(res.true_distance[0] - 2 * delta) < 1e-14
        assert res.in_regime[0]
        assert res.certified_bound[0] >= res.true_distance[0]
        assert res.certified_bound[0] <= delta + 6 * math.sqrt(delta) + 1e-14


def test_arveson_random_triples(rng):
    for _ in range(200):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n))
        u, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        p = u[:, :k] @ u[:, :k].conj().T
        omega = _random_density(rng, n)
        rho = _random_density(rng, n, rank=int(rng.integers(1, n + 1)))
        eps = float(np.trace(omega @ (np.eye(n) - p)).real) + rng.uniform(0, 0.1)
        res = arveson_bound([rho], omega, p, eps)
        assert res.certified_bound[0] >= res.true_distance[0] - 1e-12


def test_arveson_engineered_sequences(rng):
    # rho_k concentrates on p at rate eps, with omega under p exactly
    n, p = 3, np.diag([1.0, 1.0, 0.0])
    for eps in (1e-2, 1e-4, 1e-8):
        omega = np.zeros((n, n), dtype=complex)
        omega[:2, :2] = _random_density(rng, 2)
        rhos = []
        for _ in range(10):
            sigma = _random_density(rng, n)
            w = eps / max(float(sigma[2, 2].real), eps)
            rhos.append((1 - w) * omega + w * sigma)
        res = arveson_bound(rhos, omega, p, eps)
        assert all(res.in_regime)
        assert res.report().passed
        for b, s in zip(res.certified_bound, res.sup_term):
            assert b <= s + 6 * math.sqrt(eps) + 1e-14


def test_arveson_out_of_regime_flagged(rng):
    p = np.diag([1.0, 0.0])
    omega = np.diag([1.0, 0.0])
    rho = np.diag([0.2, 0.8])
    res = arveson_bound([rho], omega, p, eps=0.01)
    assert not res.in_regime[0]
    assert res.certified_bound[0] >= res.true_distance[0]


def test_arveson_input_errors():
    omega = np.diag([0.5, 0.5])
    with pytest.raises(BadProjection):
        arveson_bound([omega], omega, np.diag([0.5, 0.0]), eps=0.5)
    with pytest.raises(EpsilonViolated):
        arveson_bound([omega], omega, np.diag([1.0, 0.0]), eps=0.1)
    with pytest.raises(ValueError):
        arveson_bound([omega], omega, np.eye(2), eps=-1.0)


# -- sampled semigroups --------------------------------------------------------------


@pytest.fixture(scope="module")
def deph_table():
    return SampledSemigroup.binary(dephasing(0.6), depth=20)


def test_table_validation():
    idn = Channel.identity(2)
    with pytest.raises(ValueError):
        SampledSemigroup({0.3: idn})
    with pytest.raises(NegativeTime):
        SampledSemigroup({Fraction(-1, 2): idn})
    with pytest.raises(ValueError):
        SampledSemigroup({0: Channel(np.eye(4) / 2, 2)})
    with pytest.raises(InsufficientTable):
        SampledSemigroup({0: idn}).finest()


def test_binary_table_is_closed(deph_table):
    rep = deph_table.closure_defect()
    assert rep.passed and rep.details["pairs"] > 0


@pytest.mark.parametrize("t", [1 / 3, math.pi / 10, 1.7])
def test_extension_matches_closed_form(deph_table, t):
    ch, rep = extend_to(deph_table, t)
    assert rep.passed
    assert rep.residual <= rep.tol
    a = np.array([[0.3, 1 - 2j], [0.5j, -1.0]])
    assert np.linalg.norm(apply(ch, a) - _dephased(0.6, t)(a)) < 1e-8


def test_bare_approximant_is_coarser(deph_table):
    t = 1 / 3
    bare, _ = extend_to(deph_table, t, correction=False)
    fixed, _ = extend_to(deph_table, t)
    truth = dephasing(0.6).at(t)
    assert choi_distance(fixed, truth) < 1e-8
    assert choi_distance(bare, truth) > choi_distance(fixed, truth)


def test_tabulated_time_is_returned_unchanged(deph_table):
    key = Fraction(3, 1)
    ch, rep = extend_to(deph_table, key)
    assert ch is deph_table.table[key]
    assert rep.details["tabulated"]
    ch2, _ = extend_to(deph_table, 0.25)
    assert np.array_equal(ch2.choi, deph_table.table[Fraction(1, 4)].choi)


def test_extension_of_generic_semigroup():
    r, s = make_aut_cp_pair(2, seeds=1)
    ss = SampledSemigroup.binary(s, depth=16)
    for t in (0.3, 1.25 + 1e-3):
        ch, rep = extend_to(ss, t)
        assert choi_distance(ch, s.at(t)) < 1e-8


def test_endomorphism_flag_preserved():
    r, _ = make_endo_pair(2, seeds=3)
    ss = SampledSemigroup.binary(r, depth=12)
    ch, rep = extend_to(ss, 0.4)
    assert rep.details["flags_in"]["endomorphism"]
    assert rep.details["flags_out"]["endomorphism"]
    assert rep.passed


def test_extension_law(deph_table):
    rep = extension_semigroup_law(deph_table, [(0.3, 0.45), (1 / 3, 2 / 3)])
    assert rep.residual < 1e-8


def test_corrupted_table_not_cauchy():
    ss = SampledSemigroup.binary(dephasing(0.6), depth=10)
    ss.table[Fraction(1, 64)] = Channel(np.eye(4) / 2, 2)
    with pytest.raises(NotCauchy):
        extend_to(ss, 1 / 3)


def test_insufficient_table():
    sg = dephasing(0.6)
    ss = SampledSemigroup.from_semigroup(sg, [Fraction(1, 2), 1])
    with pytest.raises(InsufficientTable):
        extend_to(ss, 1 / 3, depth=6)


def test_negative_time(deph_table):
    with pytest.raises(NegativeTime):
        extend_to(deph_table, -0.1)


# -- two-parameter reassembly --------------------------------------------------------


def test_two_param_semigroup_law():
    alpha = two_param_assemble(dephasing(0.6), decay(0.4))
    res = alpha.semigroup_residual([((0.3, 0.7), (0.4, 0.1)), ((1.0, 0.0), (0.0, 2.0))])
    assert res < 1e-12
    assert alpha.swap_residual < 1e-12


def test_two_param_from_samples():
    r, s = make_aut_cp_pair(2, seeds=2)
    alpha = two_param_assemble(SampledSemigroup.binary(r, 12), SampledSemigroup.binary(s, 12))
    target = compose(r.at(0.3), s.at(0.7))
    assert choi_distance(alpha(0.3, 0.7), target) < 1e-8


def test_two_param_rejects_noncommuting():
    x = from_kraus([np.array([[0, 1], [1, 0]], dtype=complex)])
    amp = from_kraus([np.diag([1.0, np.sqrt(0.5)]), np.array([[0, np.sqrt(0.5)], [0, 0]])])
    with pytest.raises(NotCommuting):
        two_param_assemble(lambda t: x, lambda t: amp)


def test_trace_norm_reference(rng):
    h = random_hermitian(rng, 4)
    assert abs(trace_norm(h) - np.sum(np.abs(np.linalg.eigvalsh(h)))) < 1e-12
