import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from cphabc.sparse import (
    SingularMatrixError,
    TripletBuilder,
    compile_matrix,
    factorize,
    matvec,
    solve,
)


def test_duplicates_are_summed_and_zeros_dropped():
    b = TripletBuilder(3)
    b.add([0, 0, 2], [1, 1, 2], [1.5, 2.5, 1.0])
    b.add([1], [0], [3.0])
    b.add([1], [0], [-3.0])
    A = compile_matrix(b)
    assert A.toarray().tolist() == [[0, 4.0, 0], [0, 0, 0], [0, 0, 1.0]]
    assert A.nnz == 2
    assert A.has_sorted_indices


def test_out_of_range_triplet():
    b = TripletBuilder(2)
    with pytest.raises(IndexError):
        b.add([2], [0], [1.0])
    with pytest.raises(IndexError):
        b.add([0], [-1], [1.0])


def test_add_matrix_with_maps_and_offsets():
    b = TripletBuilder(4)
    b.add_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]), row_offset=1, col_offset=0, scale=2.0,
                 row_map=[2, 0], col_map=[1, 3])
    A = compile_matrix(b).toarray()
    assert A[3, 1] == 2.0 and A[3, 3] == 4.0 and A[1, 1] == 6.0 and A[1, 3] == 8.0


def test_empty_builder():
    assert compile_matrix(TripletBuilder(3, 2)).shape == (3, 2)


def test_matvec_dimension_check():
    A = sp.eye(3, format="csr")
    assert np.allclose(matvec(A, np.arange(3.0)), np.arange(3.0))
    with pytest.raises(ValueError):
        matvec(A, np.ones(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(0, 10_000))
def test_lu_solve_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    dense = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.3) + n * np.eye(n)
    dense[0, 0] = 0.0  # forces a pivot
    dense[0, 1] += 1.0
    dense[1, 0] += 1.0
    b = TripletBuilder(n)
    r, c = np.nonzero(dense)
    b.add(r, c, dense[r, c])
    A = compile_matrix(b)
    rhs = rng.standard_normal(n)
    if abs(np.linalg.det(dense)) < 1e-8:
        return
    x = solve(factorize(A), rhs)
    assert np.allclose(x, np.linalg.solve(dense, rhs), rtol=1e-10, atol=1e-10)


def test_structurally_singular():
    A = sp.csr_matrix(np.array([[1.0, 0.0], [2.0, 0.0]]))
    with pytest.raises(SingularMatrixError):
        factorize(A)


def test_numerically_singular():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularMatrixError):
        factorize(A).solve(np.ones(2))


def test_factorization_metadata():
    A = sp.diags([1.0, 2.0, 3.0]).tocsr()
    f = factorize(A, ordering="COLAMD")
    assert f.nnz >= 3
    assert f.norm_fro == pytest.approx(np.sqrt(14.0))
    with pytest.raises(ValueError):
        f.solve(np.ones(2))
    with pytest.raises(ValueError):
        factorize(sp.csr_matrix((2, 3)))
