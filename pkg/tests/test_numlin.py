import numpy as np
import pytest

from covkit import numlin
from covkit.numlin import (
    DimensionError,
    NotPositiveError,
    Tolerances,
    constrained_commutant,
    lstsq_define,
    null_space,
    psd_check,
    psd_factor,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def rand_psd(rng, n, rank=None):
    r = rank if rank is not None else n
    b = rng.normal(size=(r, n)) + 1j * rng.normal(size=(r, n))
    return b.conj().T @ b


def test_psd_check_identity():
    assert psd_check(np.eye(2))


def test_psd_check_rejects_non_hermitian():
    assert not psd_check(np.array([[0, 1], [0, 0]], dtype=complex))


def test_psd_check_all_ones():
    # eigenvalues {2, 0}
    assert psd_check(np.ones((2, 2), dtype=complex))


def test_psd_check_requires_square():
    with pytest.raises(DimensionError):
        psd_check(np.ones((2, 3)))


def test_psd_factor_identity():
    n, f = psd_factor(np.eye(2))
    assert n == 2
    assert numlin.is_unitary(f)


def test_psd_factor_all_ones_rank_one():
    a = np.ones((2, 2), dtype=complex)
    n, f = psd_factor(a)
    assert n == 1
    assert np.linalg.norm(f.conj().T @ f - a) < 1e-12


def test_psd_factor_zero():
    n, f = psd_factor(np.zeros((3, 3)))
    assert n == 0
    assert f.shape == (0, 3)


def test_psd_factor_rejects_negative():
    with pytest.raises(NotPositiveError) as exc:
        psd_factor(-np.eye(2))
    assert exc.value.min_eigenvalue == pytest.approx(-1.0)


def test_psd_factor_reconstruction_random():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = rng.integers(1, 7)
        r = int(rng.integers(0, n + 1))
        a = rand_psd(rng, n, rank=r)
        k, f = psd_factor(a)
        assert k == r
        assert np.linalg.norm(f.conj().T @ f - a) <= 1e-8 * max(1.0, np.linalg.norm(a, 2))
        # F has full row rank
        assert numlin.rank(f) == k


def test_null_space_identity_empty():
    assert null_space(np.eye(2)).shape == (2, 0)


def test_null_space_row():
    b = null_space(np.array([[1.0, 1.0]]))
    assert b.shape == (2, 1)
    v = b[:, 0]
    assert abs(abs(v[0]) - 1 / np.sqrt(2)) < 1e-12
    assert np.linalg.norm(np.array([[1.0, 1.0]]) @ v) < 1e-12


def test_null_space_zero():
    assert null_space(np.zeros((2, 2))).shape == (2, 2)


def test_null_space_rank_completeness():
    rng = np.random.default_rng(1)
    for _ in range(10):
        m, n = rng.integers(1, 8, size=2)
        a = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
        ns = null_space(a)
        assert numlin.rank(a) + ns.shape[1] == n
        if ns.shape[1]:
            assert np.linalg.norm(ns.conj().T @ ns - np.eye(ns.shape[1])) < 1e-10
            smax = np.linalg.svd(a, compute_uv=False)[0]
            assert np.linalg.norm(a @ ns) <= 1e-9 * smax * np.sqrt(ns.shape[1])


def test_commutant_of_irreducible_pair_is_scalar():
    basis = constrained_commutant([PAULI_X, PAULI_Z])
    assert len(basis) == 1
    d = basis[0]
    # proportional to the identity, normalized in Frobenius norm
    assert abs(abs(d[0, 0]) - 1 / np.sqrt(2)) < 1e-12
    assert abs(d[0, 1]) < 1e-12 and abs(d[1, 0]) < 1e-12


def test_commutant_of_identity_is_everything():
    basis = constrained_commutant([np.eye(2)])
    assert len(basis) == 4


def test_trace_constraint_on_scalars():
    basis = constrained_commutant([], [np.eye(1)])
    assert basis == []


def test_commutant_hermitian_only():
    basis = constrained_commutant([np.eye(2)], hermitian_only=True)
    assert len(basis) == 4
    for d in basis:
        assert np.linalg.norm(d - d.conj().T) <= 1e-12 * max(1.0, np.linalg.norm(d))


def test_commutant_members_commute():
    rng = np.random.default_rng(2)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    for d in constrained_commutant([g], hermitian_only=True):
        assert np.linalg.norm(d @ g - g @ d) <= 1e-8 * np.linalg.norm(g)


def test_commutant_size_mismatch():
    with pytest.raises(DimensionError):
        constrained_commutant([np.eye(2), np.eye(3)])


def test_lstsq_define_exact():
    l, res = lstsq_define([(np.eye(2), PAULI_X)])
    assert res < 1e-12
    assert np.linalg.norm(l - PAULI_X) < 1e-12


def test_lstsq_define_inconsistent():
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    _, res = lstsq_define([(e1, e1), (e1, e2)])
    assert res > 0.1


def test_lstsq_define_connects_two_factorizations():
    rng = np.random.default_rng(3)
    a = rand_psd(rng, 4, rank=3)
    _, f1 = psd_factor(a)
    # second factorization: remix by a random unitary
    q = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
    f2 = q @ f1
    l, res = lstsq_define([(f1, f2)])
    assert res < 1e-9
    assert numlin.is_unitary(l)


def test_tolerances_must_be_positive():
    with pytest.raises(ValueError):
        Tolerances(psd_eig=0.0)
