import numpy as np
import pytest

from cpdil.errors import NotHermitian
from cpdil.numerics import (
    JACOBI_MAX_DIM,
    complement_basis,
    expm,
    herm_eig,
    polar_unitary,
    psd_min_eig,
    span_rank,
    sqrtm_psd,
    trace_norm,
    unitary_defect,
    unvec,
    vec,
)
from conftest import PAULI_X
from oracles import random_hermitian, series_expm, swap


def test_herm_eig_identity_and_pauli():
    w, _ = herm_eig(np.eye(2))
    assert np.allclose(w, [1, 1])
    w, q = herm_eig(PAULI_X)
    assert np.allclose(w, [1, -1])
    assert unitary_defect(q) < 1e-12


@pytest.mark.parametrize("n", [1, 3, 8, JACOBI_MAX_DIM, JACOBI_MAX_DIM + 5])
def test_herm_eig_reconstruction(rng, n):
    a = random_hermitian(rng, n)
    w, q = herm_eig(a)
    assert np.all(np.diff(w) <= 1e-12)
    assert np.linalg.norm(q @ np.diag(w) @ q.conj().T - a) <= 1e-11 * max(1.0, np.linalg.norm(a))
    assert unitary_defect(q) < 1e-11


def test_herm_eig_jacobi_matches_lapack(rng):
    a = random_hermitian(rng, 6)
    wj, _ = herm_eig(a, method="jacobi")
    wl, _ = herm_eig(a, method="lapack")
    assert np.allclose(wj, wl, atol=1e-12)


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        herm_eig(np.array([[0, 1], [0, 0]]))


def test_polar_unitary_examples():
    assert np.allclose(polar_unitary(np.eye(2)), np.eye(2))
    assert np.allclose(polar_unitary(2 * np.eye(3)), np.eye(3))
    assert np.allclose(polar_unitary(np.diag([1.0, -3.0])), np.diag([1.0, -1.0]))


def test_polar_unitary_singular_completion(rng):
    x = np.zeros((3, 3), dtype=complex)
    x[0, 1] = 2.0
    u = polar_unitary(x)
    assert unitary_defect(u) < 1e-12
    # on the support of x the unitary agrees with the partial isometry
    assert np.allclose(u @ np.array([0, 1, 0]), [1, 0, 0])
    assert np.allclose(polar_unitary(np.zeros((2, 2))), np.eye(2))


def test_expm_examples(rng):
    assert np.allclose(expm(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(expm(np.diag([0.5, -2.0])), np.diag(np.exp([0.5, -2.0])))
    for t in (0.1, 1.0, 3.0):
        closed = np.cosh(t) * np.eye(2) + np.sinh(t) * PAULI_X
        assert np.linalg.norm(expm(t * PAULI_X) - closed) <= 1e-12 * np.cosh(t)
    a = 0.3 * (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    assert np.linalg.norm(expm(a) - series_expm(a)) < 1e-12


def test_psd_min_eig_examples():
    assert psd_min_eig(np.eye(2)) == pytest.approx(1.0)
    assert psd_min_eig(np.diag([0.0, 3.0])) == pytest.approx(0.0, abs=1e-15)
    # Choi matrix of the transpose map is the swap
    assert psd_min_eig(swap(2)) == pytest.approx(-1.0)


def test_vec_roundtrip_and_column_stacking():
    a = np.arange(6).reshape(2, 3).astype(complex)
    assert np.allclose(vec(a), [0, 3, 1, 4, 2, 5])
    b = np.arange(9).reshape(3, 3).astype(complex)
    assert np.allclose(unvec(vec(b), 3), b)


def test_small_helpers(rng):
    rho = np.diag([0.7, -0.3])
    assert trace_norm(rho) == pytest.approx(1.0)
    p = random_hermitian(rng, 4)
    p = p @ p
    s = sqrtm_psd(p)
    assert np.linalg.norm(s @ s - p) < 1e-10
    q = np.linalg.qr(rng.normal(size=(5, 2)))[0]
    c = complement_basis(q, 5)
    assert c.shape == (5, 3)
    assert np.linalg.norm(q.conj().T @ c) < 1e-10
    assert span_rank(np.hstack([q, q @ np.ones((2, 1))])) == 2
