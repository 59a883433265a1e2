import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diraclab.calculus import bounded_transform_function, hermitian_function
from diraclab.dirac import build_dirac, harmonic_oscillator
from diraclab.fields import (FieldValidationError, HilbertField, OperatorFamily, circle,
                             compact_counterexample, compactness_certificate, eps_rank,
                             extend_by_zero, family_from_json, family_from_matrices,
                             family_funcalc, family_to_json, field_from_json, field_to_json,
                             finite_rank_approximant, fredholm_certificate, glue_fields,
                             glue_parametrices, interval, is_isomorphism, jump_family,
                             make_field, point, product, pullback_field, trivial_field,
                             validate_family, validate_section)


def test_base_complexes():
    b = interval(0, 1, 5)
    assert b.size == 5 and b.neighbors(2) == [1, 3]
    c = circle(8, 1.0)
    assert c.distance(0, 7) == pytest.approx(0.125)
    assert point().size == 1
    p = product(interval(0, 1, 3), interval(0, 1, 4))
    assert p.size == 12 and len(p.adjacency) == 3 * 3 + 2 * 4
    sub = b.restrict(b.coords > 0.3)
    assert sub.parent_index.tolist() == [2, 3, 4]
    assert b.check_closed()


def test_constant_field_valid():
    f = make_field(interval(0, 1, 11), 1, generators=[lambda i: np.ones((1, 1))])
    assert f.validate().ok


def test_jump_field_valid():
    base = interval(0, 1, 11)
    f = make_field(base, lambda x: int(x > 0),
                   generators=[lambda i: np.full((int(base.coords[i] > 0), 1), base.coords[i])])
    assert f.ranks[0] == 0 and f.validate().ok


def test_discontinuous_generator_rejected():
    base = interval(0, 1, 11)
    with pytest.raises(FieldValidationError, match="section 0"):
        make_field(base, 1, generators=[lambda i: np.full((1, 1), 50.0 * (i % 2))], lipschitz=10)


def test_density_defect_reported():
    base = interval(0, 1, 5)
    fld = make_field(base, 2, generators=[lambda i: np.array([[1.0], [0.0]])], validate=False)
    rep = fld.validate()
    assert not rep.ok and np.all(rep.density_defects == 1)


def test_is_isomorphism_examples():
    base = interval(0, 1, 9)
    I = family_from_matrices(base, [np.eye(2)] * 9)
    assert is_isomorphism(I)
    X = family_from_matrices(base, [x * np.eye(2) for x in base.coords])
    rep = is_isomorphism(X)
    assert not rep and rep.failing_points == [0]
    S = family_from_matrices(base, [np.diag([1 + x, -(0.5 + x)]) for x in base.coords])
    rep = is_isomorphism(S)
    assert rep and rep.inverse_norms.max() == pytest.approx(2.0)


def test_compactness_examples(rng):
    base = interval(0, 1, 5)
    s, t = rng.standard_normal(6), rng.standard_normal(6)
    th = family_from_matrices(base, [np.outer(t, s) * (1 + x) for x in base.coords])
    cert = compactness_certificate(th, [1e-3, 1e-1, 1.0])
    assert cert.max_rank.max() <= 1
    Z = family_from_matrices(base, [np.zeros((6, 6))] * 5)
    assert compactness_certificate(Z, [1e-8]).max_rank.max() == 0


def test_certificate_csv_and_monotone(rng):
    mats = [[rng.standard_normal((20, 20)) / (1 + np.arange(20))] for _ in range(3)]
    cert = compactness_certificate(mats, [0.5, 0.1, 0.01], levels=[10, 20, 40])
    assert cert.monotone()
    lines = cert.csv_text().strip().splitlines()
    assert lines[0] == "level,eps,eps_rank,defect" and len(lines) == 10


def test_finite_rank_approximant(rng):
    M = rng.standard_normal((12, 12))
    L, R, defect = finite_rank_approximant(M, 1.0)
    assert np.linalg.norm(M - L @ R, 2) == pytest.approx(defect, rel=1e-10)
    assert defect <= 1.0


def test_fredholm_invertible_family():
    base = interval(0, 1, 5)
    F = family_from_matrices(base, [np.diag([1 + x, -2.0, 3.0]) for x in base.coords])
    cert = fredholm_certificate(F)
    assert cert.fredholm and cert.defect_ranks.max() == 0
    for M, G in zip(F.mats, cert.parametrix.mats):
        np.testing.assert_allclose(G, np.linalg.inv(M), atol=1e-12)


def test_fredholm_isolated_kernel():
    base = interval(0, 1, 5)
    F = family_from_matrices(base, [np.diag([0.0, 1.0 + x, -1.5, 2.0]) for x in base.coords])
    cert = fredholm_certificate(F)
    assert cert.fredholm and np.all(cert.defect_ranks == 1)
    assert cert.max_defect <= 1e-12


def test_fredholm_harmonic_oscillator_family():
    D = build_dirac(harmonic_oscillator(10.0, 120))
    Fm = hermitian_function(D.matrix, bounded_transform_function())
    F = family_from_matrices(interval(0, 1, 3), [Fm] * 3)
    cert = fredholm_certificate(F)
    assert cert.fredholm and np.all(cert.defect_ranks == 1)
    assert cert.gap.min() > 0.1


def test_not_fredholm_without_gap():
    base = interval(0, 1, 2)
    w = np.geomspace(1e-9, 1e-7, 12)
    F = family_from_matrices(base, [np.diag(w)] * 2)
    assert not fredholm_certificate(F, max_rank=4).fredholm


def test_family_funcalc_interpolation(rng):
    base = interval(0, 1, 6)
    X = rng.standard_normal((5, 5))
    D = family_from_matrices(base, [X + X.T] * 6)
    F = family_funcalc(D, lambda x, t: t / np.sqrt(1 + x * t * t))
    np.testing.assert_allclose(F.mats[0], D.mats[0], atol=1e-12)
    np.testing.assert_allclose(F.mats[-1], hermitian_function(D.mats[0], bounded_transform_function()),
                               atol=1e-12)
    R = family_funcalc(D, lambda x, t: 1 / (t - 1j))
    np.testing.assert_allclose(R.mats[2] @ (D.mats[2] - 1j * np.eye(5)), np.eye(5), atol=1e-12)


def test_validate_family_bound():
    base = interval(0, 1, 4)
    F = family_from_matrices(base, [np.eye(1) * (1 + x) for x in base.coords], bound=1.5)
    rep = validate_family(F)
    assert not rep.ok and 3 in rep.offending_points()


def test_extension_jump_example():
    F, amb, U = jump_family(33)
    rep = extend_by_zero(F, amb, U, unbounded=True)
    assert rep.boundary_gap == pytest.approx(1.0)
    assert rep.gap_ok and rep.fredholm_extension
    assert rep.family.domain.ranks[0] == 0


def test_extension_uniform_gap():
    amb = interval(0, 1, 17)
    U = amb.coords > 0.2
    F = family_from_matrices(amb.restrict(U), [np.diag([2.0, -3.0])] * int(U.sum()))
    rep = extend_by_zero(F, amb, U)
    assert rep.boundary_gap == pytest.approx(2.0) and rep.fredholm_extension


def test_extension_counterexample():
    G, amb, U = compact_counterexample(33, 0.5)
    rep = extend_by_zero(G, amb, U, compact=True)
    assert rep.boundary_limit == pytest.approx(0.5, abs=1e-12)
    assert rep.compact_extension is False
    G0, amb, U = compact_counterexample(33, 0.0)
    assert extend_by_zero(G0, amb, U, compact=True).compact_extension is True


def _two_pieces(n=9):
    amb = interval(0, 1, n)
    m0, m1 = amb.coords <= 0.6, amb.coords >= 0.4
    return amb, amb.restrict(m0), amb.restrict(m1)


def test_glue_constant_fields():
    amb, X0, X1 = _two_pieces()
    f0 = make_field(X0, 1, generators=[lambda i: np.ones((1, 1))])
    f1 = make_field(X1, 1, generators=[lambda i: np.ones((1, 1))])
    over = sorted(set(X0.parent_index.tolist()) & set(X1.parent_index.tolist()))
    g = glue_fields(f0, f1, {x: np.eye(1) for x in over}, amb)
    assert g.n_generators() == 1
    assert np.allclose([v[0, 0] for v in g.generators[0]], 1.0)


def test_glue_rejects_non_unitary():
    amb, X0, X1 = _two_pieces()
    f0 = make_field(X0, 1, generators=[lambda i: np.ones((1, 1))])
    f1 = make_field(X1, 1, generators=[lambda i: np.ones((1, 1))])
    over = sorted(set(X0.parent_index.tolist()) & set(X1.parent_index.tolist()))
    with pytest.raises(ValueError, match="unitary"):
        glue_fields(f0, f1, {x: 2 * np.eye(1) for x in over}, amb)


def test_pullback_constant_map():
    f = make_field(interval(0, 1, 5), 2, generators=[lambda i: np.array([[1.0], [float(i) / 4]]),
                                               lambda i: np.array([[0.0], [1.0]])])
    new = interval(0, 3, 7)
    g = pullback_field(np.full(7, 3), f, new)
    assert np.all(g.ranks == 2)
    assert all(np.array_equal(v, f.generators[0][3]) for v in g.generators[0])


def test_json_roundtrip(rng):
    f = make_field(interval(0, 1, 4), 2, generators=[lambda i: np.eye(2)[:, :1] * (1 + i / 8),
                                                     lambda i: np.eye(2)[:, 1:]])
    g = field_from_json(json.loads(json.dumps(field_to_json(f))))
    assert all(np.array_equal(a, b) for a, b in zip(f.generators[1], g.generators[1]))
    F = OperatorFamily(f, f, [rng.standard_normal((2, 2)) for _ in range(4)])
    G = family_from_json(json.loads(json.dumps(family_to_json(F))))
    assert all(np.array_equal(a, b) for a, b in zip(F.mats, G.mats))


def test_completeness_proxy():
    base = interval(0, 1, 21)
    fld = trivial_field(base, 1)
    x = base.coords
    partial = [np.zeros((1, 1)) for _ in x]
    for k in range(1, 30):
        partial = [p + (xx ** k / 2 ** k) * np.ones((1, 1)) for p, xx in zip(partial, x)]
    assert validate_section(fld, partial).ok


def test_fredholm_is_local():
    base = interval(0, 1, 11)
    F = family_from_matrices(base, [np.diag([0.0, 1 + x, -2.0]) for x in base.coords])
    c = fredholm_certificate(F)
    w = np.vstack([np.clip(1.5 - 2 * base.coords, 0, 1), 1 - np.clip(1.5 - 2 * base.coords, 0, 1)])
    _, _, defect = glue_parametrices(F, [c, c], w)
    assert defect <= 2 * c.max_defect + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.05, 0.5))
def test_compact_ideal(seed, eps):
    r = np.random.default_rng(seed)
    base = interval(0, 1, 3)
    K = family_from_matrices(base, [r.standard_normal((8, 3)) @ r.standard_normal((3, 8)) for _ in range(3)])
    B = family_from_matrices(base, [r.standard_normal((8, 8)) for _ in range(3)])
    bnd = B.norms().max()
    kr = compactness_certificate(K, [eps]).max_rank[0]
    assert compactness_certificate(B @ K, [eps * bnd]).max_rank[0] <= kr
    assert compactness_certificate(K @ B, [eps * bnd]).max_rank[0] <= kr


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_norm_limits_of_compact(seed):
    r = np.random.default_rng(seed)
    base = interval(0, 1, 3)
    K = [r.standard_normal((10, 2)) @ r.standard_normal((2, 10)) for _ in range(3)]
    for n in (1, 10, 100):
        pert = [k + r.standard_normal((10, 10)) * 1e-3 / n for k in K]
        cert = compactness_certificate(family_from_matrices(base, pert), [0.1])
        assert cert.max_rank[0] <= 2


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_isomorphism_implies_fredholm(seed):
    r = np.random.default_rng(seed)
    base = interval(0, 1, 3)
    mats = []
    for _ in range(3):
        Q, _ = np.linalg.qr(r.standard_normal((6, 6)))
        w = r.uniform(0.5, 3, 6) * r.choice([-1, 1], 6)
        mats.append((Q * w) @ Q.T)
    F = family_from_matrices(base, mats)
    assert is_isomorphism(F)
    c = fredholm_certificate(F)
    assert c.fredholm and c.defect_ranks.max() == 0
