"""Direct solver contract: residual, failure modes, determinism."""

import numpy as np
import pytest
import scipy.sparse as sp

from shiftfem.errors import DimensionMismatch, SingularMatrix
from shiftfem.linsolve import solve


def test_identity_system():
    b = np.array([3.0, -1.0, 0.5])
    rep = solve(sp.eye(3, format="csr"), b)
    assert np.array_equal(rep.x, b)
    assert rep.residual_norm == 0.0


def test_two_by_two_hand_elimination():
    A = sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 3.0]]))
    rep = solve(A, np.array([3.0, 5.0]))
    assert np.max(np.abs(rep.x - [0.8, 1.4])) <= 1e-15
    assert rep.residual_norm <= 1e-15


def test_dense_input_accepted():
    rep = solve(np.array([[4.0]]), np.array([2.0]))
    assert rep.x == pytest.approx([0.5])


def test_singular_matrix_raises():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SingularMatrix):
        solve(A, np.array([1.0, 2.0]))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        solve(sp.csr_matrix(np.ones((2, 3))), np.array([1.0, 2.0]))
    with pytest.raises(DimensionMismatch):
        solve(sp.eye(3, format="csr"), np.array([1.0, 2.0]))


def test_deterministic_bitwise():
    rng = np.random.default_rng(2024)
    n = 120
    A = sp.random(n, n, density=0.05, random_state=rng.integers(2**31),
                  format="csr") + sp.eye(n) * 4.0
    b = rng.standard_normal(n)
    x1 = solve(A, b).x
    x2 = solve(A.copy(), b.copy()).x
    assert np.array_equal(x1, x2)


def test_nonsymmetric_system_solves():
    A = sp.csr_matrix(np.array([[2.0, 1.0, 0.0],
                                [0.5, 3.0, -1.0],
                                [0.0, 0.2, 1.5]]))
    b = np.array([1.0, 2.0, 3.0])
    rep = solve(A, b)
    assert rep.residual_norm <= 1e-12
    assert np.max(np.abs(A @ rep.x - b)) <= 1e-12
