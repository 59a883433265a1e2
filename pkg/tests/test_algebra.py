import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diraclab import _kernels
from diraclab.algebra import (CliffordSignature, algebra_from_json, alpha, clifford_algebra,
                              complex_numbers, cyclic_group_table, group_algebra, is_positive,
                              kappa, matrix_algebra, mul, norm)


def test_unit_algebra():
    A = clifford_algebra(0, 0)
    assert A.dim == 1
    assert norm(A.one()) == pytest.approx(1.0)


def test_cl20_sign_rule():
    A = clifford_algebra(2, 0)
    e1, e2, e12 = A.basis(1), A.basis(2), A.basis(3)
    assert mul(e1, e2).allclose(e12)
    assert mul(e2, e1).allclose(-e12)
    assert (e12 * e12).allclose(-A.one())


def test_generator_squares():
    assert (clifford_algebra(1, 0).basis(1) * clifford_algebra(1, 0).basis(1)).allclose(
        -clifford_algebra(1, 0).one())
    B = clifford_algebra(0, 1)
    assert (B.basis(1) * B.basis(1)).allclose(B.one())


@pytest.mark.parametrize("a,b", [(1.0, 0.0), (0.3, -0.7), (2.0, 1.5), (-1.2, 0.4)])
def test_norm_cl10_is_euclidean(a, b):
    # rep(a + b e1) = [[a, -b], [b, a]] has both singular values sqrt(a^2 + b^2)
    A = clifford_algebra(1, 0)
    assert norm(A.element([a, b])) == pytest.approx(np.hypot(a, b), abs=1e-14)


@pytest.mark.parametrize("a,b", [(1.0, 0.0), (0.3, -0.7), (2.0, 1.5), (-1.2, 0.4)])
def test_norm_cl01_is_max(a, b):
    A = clifford_algebra(0, 1)
    assert norm(A.element([a, b])) == pytest.approx(max(abs(a + b), abs(a - b)), abs=1e-14)


@pytest.mark.parametrize("p,q", [(1, 0), (3, 1), (2, 3)])
def test_generator_norm_one(p, q):
    assert norm(clifford_algebra(p, q).basis(1)) == pytest.approx(1.0)


def test_unit_is_neutral(rng):
    A = clifford_algebra(2, 2)
    x = A.random(rng)
    assert (A.one() * x).allclose(x)
    assert (x * A.one()).allclose(x)


def test_signature_limit():
    with pytest.raises(ValueError):
        CliffordSignature(5, 4)
    with pytest.raises(ValueError):
        clifford_algebra(-1, 0)


@pytest.mark.parametrize("p,q", [(p, n - p) for n in range(5) for p in range(n + 1)])
def test_sign_table_matches_exterior_rep(p, q):
    A = clifford_algebra(p, q)
    R = A.faithful_rep
    lhs = np.einsum("aij,bjk->abik", R, R)
    rhs = A.coef[:, :, None, None] * R[A.index]
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


@pytest.mark.parametrize("p,q", [(2, 1), (0, 3), (3, 2)])
def test_rep_star(p, q):
    A = clifford_algebra(p, q)
    R = A.faithful_rep
    for b in range(A.dim):
        assert np.allclose(R[b].conj().T, A.star_coef[b] * R[A.star_index[b]])


def test_cstar_identity(rng):
    for p, q in [(1, 1), (2, 2), (0, 4)]:
        A = clifford_algebra(p, q)
        for _ in range(100):
            x = A.random(rng)
            assert abs(norm(x.star() * x) - norm(x) ** 2) <= 1e-10 * max(1.0, norm(x) ** 2)


def test_positivity_examples(rng):
    A = clifford_algebra(1, 2)
    y = A.random(rng)
    assert is_positive(y.star() * y)
    assert not is_positive(-A.one())
    B = clifford_algebra(0, 1)
    assert is_positive(B.element([1.0, 1.0]))


def test_group_algebra_examples():
    Z2 = group_algebra(cyclic_group_table(2))
    assert norm(Z2.element([0.5, 0.5])) == pytest.approx(1.0)
    trivial = group_algebra([[0]])
    assert trivial.dim == 1 and norm(trivial.one()) == pytest.approx(1.0)
    Z3 = group_algebra(cyclic_group_table(3))
    assert norm(Z3.element([1, 1, 1])) == pytest.approx(3.0)


def test_group_algebra_rejects_non_groups():
    with pytest.raises(ValueError):
        group_algebra([[0, 1], [0, 1]])
    with pytest.raises(ValueError):
        group_algebra([[1, 0], [0, 1], [1, 1]])


def test_matrix_algebra_norm():
    M = matrix_algebra(2)
    x = M.element([1, 2, 3, 4])
    assert norm(x) == pytest.approx(np.linalg.norm([[1, 2], [3, 4]], 2))


@pytest.mark.parametrize("A", [clifford_algebra(2, 1), matrix_algebra(2, [1, -1]),
                               group_algebra(cyclic_group_table(4)), complex_numbers()])
def test_json_roundtrip(A):
    B = algebra_from_json(A.to_json())
    assert A.same_as(B)
    assert np.array_equal(A.index, B.index) and np.array_equal(A.coef, B.coef)


def test_backends_agree():
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(1)
    with _kernels.use_backend("numpy"):
        i0, c0 = _kernels.clifford_table(5, 2)
        A = clifford_algebra(3, 2)
        x, y = rng.standard_normal(A.dim), rng.standard_normal(A.dim)
        p0 = _kernels.monomial_product(x, y, A.index, A.coef)
        L0 = _kernels.left_regular(x, A.index, A.coef)
        R0 = _kernels.right_regular(x, A.index, A.coef)
        E0 = _kernels.exterior_creation(4, 2)
    with _kernels.use_backend("numba"):
        i1, c1 = _kernels.clifford_table(5, 2)
        p1 = _kernels.monomial_product(x, y, A.index, A.coef)
        L1 = _kernels.left_regular(x, A.index, A.coef)
        R1 = _kernels.right_regular(x, A.index, A.coef)
        E1 = _kernels.exterior_creation(4, 2)
    assert np.array_equal(i0, i1) and np.array_equal(c0, c1)
    assert np.array_equal(E0, E1)
    np.testing.assert_allclose(p0, p1, atol=1e-14)
    np.testing.assert_allclose(L0, L1, atol=1e-14)
    np.testing.assert_allclose(R0, R1, atol=1e-14)


sigs = st.tuples(st.integers(0, 3), st.integers(0, 3))


@settings(max_examples=40, deadline=None)
@given(sigs, st.integers(0, 2**31 - 1))
def test_automorphisms_preserve_norm(sig, seed):
    A = clifford_algebra(*sig)
    x = A.random(np.random.default_rng(seed))
    assert norm(alpha(x)) == pytest.approx(norm(x), rel=1e-10)
    assert norm(kappa(x)) == pytest.approx(norm(x), rel=1e-10)
    assert alpha(kappa(x)).allclose(kappa(alpha(x)))


@settings(max_examples=40, deadline=None)
@given(sigs, st.integers(0, 2**31 - 1))
def test_star_antimultiplicative(sig, seed):
    A = clifford_algebra(*sig)
    r = np.random.default_rng(seed)
    x, y = A.random(r), A.random(r)
    assert (x * y).star().allclose(y.star() * x.star(), atol=1e-10)
    assert is_positive(x.star() * x)


@settings(max_examples=30, deadline=None)
@given(sigs, st.integers(0, 2**31 - 1))
def test_associativity(sig, seed):
    A = clifford_algebra(*sig)
    r = np.random.default_rng(seed)
    x, y, z = A.random(r), A.random(r), A.random(r)
    assert ((x * y) * z).allclose(x * (y * z), atol=1e-10)
