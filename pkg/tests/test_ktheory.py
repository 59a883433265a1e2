import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diraclab import ktheory as kt
from diraclab.dirac import build_dirac, harmonic_oscillator
from diraclab.fields import interval
from diraclab.scenarios import bott_base_cycle, morita_display_check

ETA = np.diag([1.0, -1.0])
SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_point_cycle_valid_and_degenerate():
    K = kt.point_cycle(SWAP, ETA)
    rep = kt.validate_cycle(K)
    assert rep.ok and rep.degenerate


def test_even_operator_fails_item3():
    rep = kt.validate_cycle(kt.point_cycle(np.diag([1.0, 2.0]), ETA))
    assert rep.failed() == [3]


def test_broken_clifford_relations():
    c = np.array([[0.0, 1.0], [1.0, 0.0]])   # c* = c but sigma = +1 needs c* = -c
    rep = kt.validate_cycle(kt.point_cycle(np.zeros((2, 2)), ETA, [c], [1.0]))
    assert 2 in rep.failed()


def test_not_invertible_over_y():
    K = kt.KCycle(interval(0, 1, 3), [ETA] * 3, [np.zeros((2, 2))] * 3)
    K.Y[:] = True
    assert 5 in kt.validate_cycle(K).failed()


def test_bott_cycle_valid_and_square_law():
    K = bott_base_cycle(5)
    ts = np.linspace(-2, 2, 9)
    B = kt.bott(K, ts)
    assert kt.validate_cycle(B).ok
    assert kt.bott_square_errors(K, ts).max() <= 1e-12
    assert B.square_error <= 1e-12
    # boundary slices invertible
    for i in np.flatnonzero(B.Y):
        assert np.min(np.abs(np.linalg.eigvalsh(B.F[i]))) > 0


def test_displayed_bott_form_violates_square_law():
    D = np.array([[0.0, 1.5], [1.5, 0.0]])
    t = 0.7
    M = kt.bott_displayed(D, ETA, t)
    target = np.kron(np.eye(2), D @ D) + t * t * np.eye(4)
    assert np.max(np.abs(M @ M - target)) > 1e-3


def test_bott_is_thom_n1():
    K = bott_base_cycle(2)
    ts = np.array([-1.0, 0.0, 0.5])
    B = kt.bott(K, ts)
    for x in range(2):
        for j, t in enumerate(ts):
            expect = np.block([[K.F[x], t * ETA], [t * ETA, K.F[x]]])
            assert np.array_equal(B.F[x * len(ts) + j], expect)


def test_thom_zero_slice_kernel():
    K = kt.point_cycle(np.zeros((2, 2)), ETA)
    B = kt.bott(K, np.array([-1.0, 0.0, 1.0]))
    assert np.linalg.matrix_rank(B.F[1]) == 0 and B.F[1].shape == (4, 4)


def test_direct_sum_zero_and_double_negation(rng):
    K = kt.random_point_cycle(rng, 2, 3)
    Z = kt.zero_cycle(K.base)
    assert kt.direct_sum(K, Z).equals(K)
    for form in (1, 2):
        assert kt.negate(kt.negate(K, form), form).equals(K)
        assert kt.validate_cycle(kt.negate(K, form)).ok


def test_mismatch_rejected(rng):
    K = kt.random_point_cycle(rng, 1, 1)
    L = kt.KCycle(interval(0, 1, 2), [ETA] * 2, [SWAP] * 2)
    with pytest.raises(ValueError, match="bases"):
        kt.direct_sum(K, L)
    with pytest.raises(ValueError):
        kt.negate(K, 3)


def test_inverse_concordance(rng):
    K = kt.random_point_cycle(rng, 2, 2)
    path = kt.inverse_concordance(K)
    ok, bad, _ = path.validate()
    assert ok and not bad and path.n_samples == 33
    assert path.endpoints_equal()
    assert path.restrict(1).equals(kt.direct_sum(K, kt.negate(K, 2)))
    assert kt.is_degenerate(path.start)
    assert path.diagnostics["square_error"].max() <= 1e-12
    assert np.all(path.diagnostics["min_square"] >= path.diagnostics["square_lower_bound"] - 1e-9)
    assert path.diagnostics["QM_anticommutator"] == 0.0


def test_inverse_concordance_zero_operator():
    K = kt.point_cycle(np.zeros((2, 2)), ETA)
    path = kt.inverse_concordance(K)
    assert path.validate()[0]
    mins = path.diagnostics["min_square"]
    assert np.all(mins[:-1] > 0) and mins[-1] == pytest.approx(0.0, abs=1e-14)


def test_index_along_inverse_concordance():
    K = kt.lattice_cycle(build_dirac(harmonic_oscillator(10.0, 100)))
    assert kt.point_index(K) == 1
    S = kt.direct_sum(K, kt.negate(K, 2))
    assert kt.point_index(S) == 0


def test_null_concordance():
    K = kt.point_cycle(2 * SWAP, ETA)
    path = kt.null_concordance_of_degenerate(K, n=9)
    assert path.endpoints_equal() and path.start.ranks.sum() == 0
    assert np.all(path.diagnostics["gap"][1:] == 2.0)
    assert path.diagnostics["boundary_gap"] == pytest.approx(2.0)
    assert path.validate()[0]
    with pytest.raises(ValueError, match="not degenerate"):
        kt.null_concordance_of_degenerate(kt.point_cycle(np.zeros((2, 2)), ETA))


def test_bounded_unbounded_path():
    K = kt.lattice_cycle(build_dirac(harmonic_oscillator(10.0, 100)))
    path = kt.bounded_unbounded_path(K, n=9)
    assert path.slices[0].equals(K)
    indices = [kt.point_index(s) for s in path.slices]
    assert set(indices) == {1}
    assert path.diagnostics["parametrix_defect"].max() <= 1e-8


def test_bounded_unbounded_invertible(rng):
    K = kt.point_cycle(3 * SWAP, ETA, flavor="u")
    path = kt.bounded_unbounded_path(K, n=5)
    for s in path.slices:
        assert np.min(np.abs(np.linalg.eigvalsh(s.F[0]))) > 0


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_canonical_module_relations(n):
    S = kt.canonical_module(n)
    assert max(S.relation_errors().values(), default=0.0) == 0.0
    assert S.dim == 2 ** n


def test_canonical_module_n1():
    S = kt.canonical_module(1)
    e, eps = S.e[0], S.eps[0]
    assert np.array_equal(e @ e, -np.eye(2)) and np.array_equal(eps @ eps, np.eye(2))
    assert np.array_equal(e @ eps + eps @ e, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        kt.canonical_module(-1)


def test_tensor_of_modules():
    for n1, n2 in [(1, 1), (1, 2), (2, 1)]:
        T = kt.graded_tensor_generators(kt.canonical_module(n1), kt.canonical_module(n2))
        assert max(T.relation_errors().values()) == 0.0


def test_morita_display():
    exact, valid = morita_display_check()
    assert exact and valid


def test_morita_degenerate():
    M = kt.morita(kt.point_cycle(SWAP, ETA), 1)
    assert kt.is_degenerate(M)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 2))
def test_morita_thom_preserve_validity(seed, n):
    rng = np.random.default_rng(seed)
    K = kt.random_point_cycle(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
    assert kt.validate_cycle(K).ok
    M = kt.morita(K, n)
    assert kt.validate_cycle(M).ok
    T = kt.thom(K, n, m=3)
    assert kt.validate_cycle(T).ok and T.square_error <= 1e-12


def test_thom_raw_needs_negative_directions(rng):
    M = kt.morita(kt.random_point_cycle(rng, 2, 2), 1)
    T = kt.thom_raw(M, [1], m=5)
    assert T.n_generators == 1 and kt.validate_cycle(T).ok
    with pytest.raises(ValueError, match="negative"):
        kt.thom_raw(M, [0])


def test_point_index_examples():
    assert kt.point_index(kt.point_cycle(np.zeros((3, 3)), np.diag([1.0, 1.0, -1.0]))) == 1
    assert kt.point_index(kt.point_cycle(SWAP, ETA)) == 0
    with pytest.raises(ValueError):
        kt.point_index(bott_base_cycle(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_index_additivity_and_inverse(seed):
    rng = np.random.default_rng(seed)
    a = kt.random_point_cycle(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    b = kt.random_point_cycle(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
    assert kt.point_index(kt.direct_sum(a, b)) == kt.point_index(a) + kt.point_index(b)
    for form in (1, 2):
        assert kt.point_index(kt.direct_sum(a, kt.negate(a, form))) == 0


def test_random_cycle_index_is_rank_difference(rng):
    K = kt.random_point_cycle(rng, 4, 1)
    assert kt.point_index(K) == 3


def test_json_roundtrip(rng):
    K = kt.morita(kt.random_point_cycle(rng, 2, 1, complex_=True), 1)
    doc = json.loads(json.dumps(kt.cycle_to_json(K)))
    assert kt.cycle_from_json(doc).equals(K)
    B = kt.bott(bott_base_cycle(3), np.linspace(-1, 1, 5))
    assert kt.cycle_from_json(json.loads(json.dumps(kt.cycle_to_json(B)))).equals(B)


def test_o_variant(rng):
    K = kt.point_cycle(SWAP, ETA, flavor="o")
    cert = kt.o_variant_check(K)
    assert cert.max_rank.max() == 0
