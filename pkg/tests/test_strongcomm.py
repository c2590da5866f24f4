import numpy as np
import pytest
from conftest import PAULI_X, PAULI_Z

from cpdil.channel import Channel, compose, from_kraus, random_unitary
from cpdil.errors import DimTooLarge, NotCommuting, SeedsNotCommuting
from cpdil.fixtures import commuting_pairs, noncommuting_pairs
from cpdil.strongcomm import (
    make_aut_cp_pair,
    make_conjugation_pair,
    make_endo_pair,
    sc_semigroup_check,
    space_dims,
    witness_residual,
    witness_unitary,
)


def test_pauli_conjugations_anticommute_to_minus_one():
    fu = witness_unitary(from_kraus([PAULI_X]), from_kraus([PAULI_Z]))
    assert fu.u.shape == (1, 1)
    assert abs(fu.u[0, 0] + 1) < 1e-12
    assert witness_residual(fu) < 1e-12


def test_same_unitary_gives_trivial_witness(rng):
    w = random_unitary(rng, 3)
    fu = witness_unitary(from_kraus([w]), from_kraus([w]))
    assert abs(fu.u[0, 0] - 1) < 1e-12


def test_elementwise_commuting_kraus_give_permutation(rng):
    # diagonal Kraus ops commute elementwise, so T_i S_j = S_j T_i
    ts = [np.diag(rng.normal(size=2)) * 0.4 for _ in range(2)]
    ss = [np.diag(rng.normal(size=2)) * 0.4 for _ in range(2)]
    fu = witness_unitary(ts, ss)
    assert witness_residual(fu) < 1e-10
    assert np.linalg.norm(fu.u @ fu.u.conj().T - np.eye(4)) < 1e-10


def test_witness_on_fixture_families(rng):
    for label, th, ph in commuting_pairs(rng, 12):
        fu = witness_unitary(th, ph)
        assert witness_residual(fu) < 1e-10, label
        mk = fu.m * fu.k
        assert np.linalg.norm(fu.u.conj().T @ fu.u - np.eye(mk)) < 1e-10, label


def test_noncommuting_pairs_rejected(rng):
    for label, th, ph in noncommuting_pairs(rng, 8):
        with pytest.raises(NotCommuting):
            witness_unitary(th, ph)


def test_space_dims_identity_pair():
    idn = Channel.identity(2)
    d1, d2, defect = space_dims(idn, idn)
    assert (d1, d2) == (2, 2)
    assert defect < 1e-14


def test_space_dims_trace_against_identity():
    n = 2
    tau = Channel(np.eye(n * n) / n, n)
    idn = Channel.identity(n)
    d1, d2, defect = space_dims(tau, idn)
    assert d1 == d2
    assert defect < 1e-12


def test_space_dims_too_large(rng):
    with pytest.raises(DimTooLarge):
        space_dims(Channel.identity(4), Channel.identity(4))


def test_commuting_pair_has_equal_space_dims(rng):
    for label, th, ph in commuting_pairs(rng, 6, dims=(2,)):
        d1, d2, defect = space_dims(th, ph)
        assert d1 == d2, label


def test_sc_semigroup_aut_cp():
    r, s = make_aut_cp_pair(2, seeds=3)
    rep = sc_semigroup_check(r, s, level=1, horizon=2)
    assert rep.passed
    assert rep.residual < 1e-10


def test_sc_semigroup_endo_pair():
    r, s = make_endo_pair(3, seeds=1)
    rep = sc_semigroup_check(r, s, level=2, horizon=2)
    assert rep.passed


def test_conjugation_pair_commutes():
    a = np.array([[-0.3, 0.5], [0, -0.4]])
    b = 0.7 * a - 0.2 * np.eye(2)
    r, s = make_conjugation_pair(a, b)
    for t in (0.3, 1.1):
        rt, st = r.at(t), s.at(t)
        assert np.linalg.norm(compose(rt, st).choi - compose(st, rt).choi) < 1e-10


def test_conjugation_pair_rejects_noncommuting_seeds():
    with pytest.raises(SeedsNotCommuting):
        make_conjugation_pair(PAULI_X - 2 * np.eye(2), PAULI_Z - 2 * np.eye(2))


def test_conjugation_pair_rejects_expanding_seed():
    with pytest.raises(ValueError):
        make_conjugation_pair(np.eye(2), np.eye(2))


def test_endo_pair_channels_are_unitary_conjugations():
    r, s = make_endo_pair(2, seeds=5)
    kr = r.at(0.7).kraus
    assert kr.rank == 1
    assert np.linalg.norm(kr.ops[0] @ kr.ops[0].conj().T - np.eye(2)) < 1e-10
