import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import FILLED_TRIANGLE, filled_triangle, hollow_triangle, random_complex
from tspnet.complex import (
    build_complex,
    flag_complex,
    hodge_laplacians,
    incidence_matrix,
    verify_chain_property,
)
from tspnet.data import example_complex
from tspnet.errors import DuplicateSimplex, DuplicateVertex, EmptyComplex, InvalidSimplex, OrderOutOfRange


class TestBuildComplex:
    def test_filled_triangle_counts(self):
        K = filled_triangle()
        assert K.counts == (3, 3, 1)
        assert K.order == 2
        assert K.inserted_faces == 0

    def test_closure_inserts_all_faces(self):
        K = build_complex({2: [[0, 1, 2]]})
        assert K == filled_triangle()
        assert K.inserted_faces == 6

    def test_vertices_sorted_within_simplex(self):
        K = build_complex({1: [[2, 0]], 0: [[0], [2]]})
        assert K.simplices[1] == ((0, 2),)

    def test_lexicographic_order(self):
        K = build_complex({1: [[1, 2], [0, 3], [0, 1]]})
        assert K.simplices[1] == ((0, 1), (0, 3), (1, 2))
        assert K.index([3, 0]) == 1

    def test_degenerate_simplex(self):
        with pytest.raises(DuplicateVertex):
            build_complex({0: [[0]], 1: [[0, 0]]})

    def test_duplicate_simplex(self):
        with pytest.raises(DuplicateSimplex):
            build_complex({0: [[0], [1]], 1: [[0, 1], [1, 0]]})

    def test_empty(self):
        with pytest.raises(EmptyComplex):
            build_complex({})
        with pytest.raises(EmptyComplex):
            build_complex({0: []})

    @pytest.mark.parametrize("bad", [{0: [[-1]]}, {0: [[0.5]]}, {1: [[0, 1, 2]]}, {0: [[]]}])
    def test_invalid_simplices(self, bad):
        with pytest.raises(InvalidSimplex):
            build_complex(bad)

    def test_list_input(self):
        assert build_complex([FILLED_TRIANGLE[0], FILLED_TRIANGLE[1], FILLED_TRIANGLE[2]]) == filled_triangle()

    def test_closure_idempotent(self):
        K = build_complex({3: [[0, 1, 2, 3]], 2: [[2, 4, 5]]})
        again = build_complex(K.simplex_lists())
        assert again == K
        assert again.inserted_faces == 0


class TestIncidence:
    def test_filled_triangle_b1(self):
        B1 = incidence_matrix(filled_triangle(), 1).toarray()
        expected = np.array([[-1, -1, 0], [1, 0, -1], [0, 1, 1]])
        np.testing.assert_array_equal(B1, expected)

    def test_filled_triangle_b2(self):
        B2 = incidence_matrix(filled_triangle(), 2).toarray()
        np.testing.assert_array_equal(B2, [[1], [-1], [1]])

    def test_integer_dtype_and_no_explicit_zeros(self):
        B = incidence_matrix(filled_triangle(), 1)
        assert B.dtype == np.int64
        assert np.all(B.data != 0)

    @pytest.mark.parametrize("k", [0, 3, -1])
    def test_out_of_range(self, k):
        with pytest.raises(OrderOutOfRange):
            incidence_matrix(filled_triangle(), k)

    def test_column_abs_sums(self):
        K = random_complex(np.random.default_rng(5), n_max=15, p=0.5)
        for k in range(1, K.order + 1):
            sums = np.asarray(abs(incidence_matrix(K, k)).sum(axis=0)).ravel()
            assert np.all(sums == k + 1)


class TestLaplacians:
    def test_filled_triangle_k1(self):
        L = hodge_laplacians(filled_triangle(), 1)
        np.testing.assert_array_equal(L.lower.toarray(), [[2, 1, -1], [1, 2, 1], [-1, 1, 2]])
        np.testing.assert_array_equal(L.upper.toarray(), [[1, -1, 1], [-1, 1, -1], [1, -1, 1]])
        np.testing.assert_array_equal(L.full.toarray(), 3 * np.eye(3))
        assert L.full.nnz == 3

    def test_filled_triangle_k0(self):
        L = hodge_laplacians(filled_triangle(), 0)
        assert L.lower is None
        np.testing.assert_array_equal(L.full.toarray(), [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])

    def test_top_order_has_no_upper(self):
        L = hodge_laplacians(filled_triangle(), 2)
        assert L.upper is None
        np.testing.assert_array_equal(L.full.toarray(), [[3]])

    def test_single_node(self):
        L = hodge_laplacians(build_complex({0: [[0]]}), 0)
        assert L.full.shape == (1, 1)
        assert L.full.nnz == 0
        assert L.lower is None and L.upper is None

    def test_hollow_triangle_k1_lower_only(self):
        L = hodge_laplacians(hollow_triangle(), 1)
        assert L.upper is None
        np.testing.assert_allclose(L.full @ np.array([1.0, -1.0, 1.0]), 0.0)

    def test_out_of_range(self):
        with pytest.raises(OrderOutOfRange):
            hodge_laplacians(filled_triangle(), 3)


class TestChainProperty:
    def test_filled_triangle(self):
        assert verify_chain_property(filled_triangle()) == {1: 0}

    def test_path_graph_empty_report(self):
        K = build_complex({1: [[0, 1], [1, 2]]})
        assert verify_chain_property(K) == {}

    def test_example_complex(self):
        K = example_complex()
        assert K.counts == (24, 38, 2)
        assert verify_chain_property(K) == {1: 0}


class TestFlagComplex:
    def test_clique(self):
        K = flag_complex(4, [(a, b) for a in range(4) for b in range(a + 1, 4)], 3)
        assert K.counts == (4, 6, 4, 1)

    def test_truncation(self):
        K = flag_complex(4, [(a, b) for a in range(4) for b in range(a + 1, 4)], 1)
        assert K.counts == (4, 6)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_complex_invariants(seed):
    K = random_complex(np.random.default_rng(seed), n_max=14)
    assert all(v == 0 for v in verify_chain_property(K).values())
    for k in range(K.order + 1):
        L = hodge_laplacians(K, k)
        for M in (L.full, L.lower, L.upper):
            if M is None:
                continue
            D = M.toarray()
            np.testing.assert_array_equal(D, D.T)
            assert np.linalg.eigvalsh(D).min() >= -1e-10
        if L.lower is not None and L.upper is not None:
            np.testing.assert_array_equal(L.full.toarray(), (L.lower + L.upper).toarray())
    for k in range(1, K.order + 1):
        faces = set(K.simplices[k - 1])
        for s in K.simplices[k]:
            assert all(s[:i] + s[i + 1:] in faces for i in range(k + 1))
