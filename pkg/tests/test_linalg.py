import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bismooth.linalg import (
    CsrMatrix,
    DenseMatrix,
    DimensionError,
    PairedVector,
    as_vector,
    dot,
    matvec,
    matvec_transpose,
    quasi_inner_product,
    random_nonsymmetric,
    spd_random,
    toeplitz_test_matrix,
)


def dense_toeplitz(n):
    a = np.zeros((n, n))
    for i in range(n):
        a[i, i] = 2.0
        if i + 1 < n:
            a[i, i + 1] = 1.0
        if i >= 2:
            a[i, i - 2] = 1.2
    return a


class TestMatvec:
    def test_identity(self):
        v = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(matvec(CsrMatrix.from_dense(np.eye(4)), v), v)

    def test_toeplitz_row_sums(self):
        np.testing.assert_allclose(matvec(toeplitz_test_matrix(4), np.ones(4)), [3.0, 3.0, 4.2, 3.2], rtol=0, atol=1e-15)

    def test_zero_matrix(self):
        Z = CsrMatrix.from_coo(3, 3, [], [], [])
        np.testing.assert_array_equal(matvec(Z, np.array([1.0, -2.0, 3.0])), np.zeros(3))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            matvec(toeplitz_test_matrix(4), np.ones(3))
        with pytest.raises(DimensionError):
            matvec_transpose(toeplitz_test_matrix(4), np.ones(5))

    @pytest.mark.parametrize("n", range(3, 11))
    def test_band_sums_against_dense_oracle(self, n):
        np.testing.assert_allclose(toeplitz_test_matrix(n).apply(np.ones(n)), dense_toeplitz(n).sum(axis=1), rtol=1e-15)


class TestMatvecTranspose:
    def test_identity(self):
        v = np.arange(5.0)
        np.testing.assert_array_equal(matvec_transpose(CsrMatrix.from_dense(np.eye(5)), v), v)

    def test_symmetric_matches_forward(self):
        S = spd_random(6, 1)
        v = np.random.default_rng(0).standard_normal(6)
        np.testing.assert_array_equal(matvec_transpose(S, v), matvec(S, v))

    @pytest.mark.parametrize("seed", range(4))
    def test_explicit_transpose_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((5, 5))
        v = rng.standard_normal(5)
        got = matvec_transpose(CsrMatrix.from_dense(a), v)
        want = np.array([sum(a[i, j] * v[i] for i in range(5)) for j in range(5)])
        np.testing.assert_allclose(got, want, rtol=1e-15, atol=1e-15 * np.abs(a).sum())

    def test_rectangular(self):
        a = np.arange(6.0).reshape(2, 3)
        A = CsrMatrix.from_dense(a)
        np.testing.assert_array_equal(A.apply_transpose(np.array([1.0, 1.0])), a.sum(axis=0))
        np.testing.assert_array_equal(A.T.to_dense(), a.T)


class TestDot:
    @pytest.mark.parametrize(
        "u, v, expected",
        [([1, 0], [0, 1], 0.0), ([1, 2, 3], [1, 2, 3], 14.0), ([2, -1], [3, 4], 2.0)],
    )
    def test_examples(self, u, v, expected):
        assert dot(np.array(u, float), np.array(v, float)) == expected

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            dot(np.ones(2), np.ones(3))


class TestQuasiInnerProduct:
    def test_definition(self):
        u = PairedVector(np.array([1.0, 0.0]), np.zeros(2))
        v = PairedVector(np.zeros(2), np.array([1.0, 0.0]))
        assert quasi_inner_product(u, v) == 1.0

    def test_indefinite(self):
        u = PairedVector(np.array([1.0, 1.0]), np.array([1.0, -1.0]))
        assert quasi_inner_product(u, u) == 0.0

    def test_matches_block_form(self):
        rng = np.random.default_rng(3)
        n = 4
        H = np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])
        u = PairedVector(rng.standard_normal(n), rng.standard_normal(n))
        v = PairedVector(rng.standard_normal(n), rng.standard_normal(n))
        assert quasi_inner_product(u, v) == pytest.approx(u.to_array() @ H @ v.to_array(), rel=1e-14)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            quasi_inner_product(PairedVector(np.ones(2), np.ones(2)), PairedVector(np.ones(3), np.ones(3)))
        with pytest.raises(DimensionError):
            PairedVector(np.ones(2), np.ones(3))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 20), st.integers(0, 2**32 - 1), st.floats(-10, 10))
    def test_bilinear_and_symmetric(self, n, seed, alpha):
        rng = np.random.default_rng(seed)
        u, v, w = (PairedVector(rng.standard_normal(n), rng.standard_normal(n)) for _ in range(3))
        assert quasi_inner_product(u, v) == quasi_inner_product(v, u)
        lhs = quasi_inner_product(alpha * u + w, v)
        rhs = alpha * quasi_inner_product(u, v) + quasi_inner_product(w, v)
        scale = (abs(alpha) + 1) * 4 * n * max(1.0, max(np.abs(x.to_array()).max() for x in (u, v, w))) ** 2
        assert abs(lhs - rhs) <= 1e-14 * scale


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1), st.floats(0.05, 1.0))
def test_adjointness(n, seed, density):
    A = random_nonsymmetric(n, seed, density)
    rng = np.random.default_rng(seed + 1)
    u, v = rng.standard_normal(n), rng.standard_normal(n)
    lhs = dot(A.apply(u), v)
    rhs = dot(u, A.apply_transpose(v))
    assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(u) * np.linalg.norm(v) * A.frobenius_norm()


class TestToeplitz:
    def test_n200_nnz(self):
        A = toeplitz_test_matrix(200)
        assert A.shape == (200, 200)
        assert A.nnz == 597

    def test_n3_pattern(self):
        np.testing.assert_array_equal(toeplitz_test_matrix(3).to_dense(), [[2, 1, 0], [0, 2, 1], [1.2, 0, 2]])

    def test_n4_nnz(self):
        assert toeplitz_test_matrix(4).nnz == 9

    def test_too_small(self):
        with pytest.raises(ValueError):
            toeplitz_test_matrix(2)


class TestSpdRandom:
    @pytest.mark.parametrize("n, seed", [(1, 0), (5, 1), (20, 42)])
    def test_symmetric_positive_definite(self, n, seed):
        S = spd_random(n, seed).to_dense()
        np.testing.assert_array_equal(S, S.T)
        vs = np.random.default_rng(seed).standard_normal((100, n))
        assert np.all(np.einsum("ij,jk,ik->i", vs, S, vs) > 0)

    def test_n1(self):
        m = np.random.default_rng(9).uniform(-1.0, 1.0, size=(1, 1))[0, 0]
        assert spd_random(1, 9).to_dense()[0, 0] == m * m + 1.0

    def test_deterministic(self):
        a, b = spd_random(12, 5), spd_random(12, 5)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.col_indices, b.col_indices)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            spd_random(0, 1)


class TestCsrValidation:
    def test_unsorted_columns_rejected(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            CsrMatrix(1, 3, [0, 2], [2, 0], [1.0, 1.0])

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError):
            CsrMatrix(1, 3, [0, 2], [1, 1], [1.0, 1.0])

    def test_bad_offsets(self):
        with pytest.raises(ValueError):
            CsrMatrix(2, 2, [0, 2, 1], [0, 1], [1.0, 1.0])
        with pytest.raises(ValueError):
            CsrMatrix(2, 2, [1, 1, 2], [0, 1], [1.0, 1.0])

    def test_column_out_of_range(self):
        with pytest.raises(ValueError):
            CsrMatrix(1, 2, [0, 1], [2], [1.0])

    def test_from_coo_sums_duplicates(self):
        A = CsrMatrix.from_coo(2, 2, [0, 0, 1], [1, 1, 0], [1.0, 2.5, 4.0])
        np.testing.assert_array_equal(A.to_dense(), [[0, 3.5], [4.0, 0]])

    def test_immutable(self):
        A = toeplitz_test_matrix(5)
        with pytest.raises(ValueError):
            A.values[0] = 7.0

    def test_nonfinite_vector_rejected(self):
        with pytest.raises(ValueError):
            as_vector([1.0, np.nan])


def test_dense_operator_matches_csr():
    a = random_nonsymmetric(15, 2).to_dense()
    D, C = DenseMatrix(a), CsrMatrix.from_dense(a)
    v = np.random.default_rng(1).standard_normal(15)
    np.testing.assert_allclose(D.apply(v), C.apply(v), rtol=1e-13)
    np.testing.assert_allclose(D.apply_transpose(v), C.apply_transpose(v), rtol=1e-13)
