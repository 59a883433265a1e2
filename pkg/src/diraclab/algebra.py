"""Finite-dimensional graded Real C*-algebras.

Three backends share one encoding: a basis e_0..e_{d-1} whose products are
monomial, e_a e_b = coef[a, b] e_{index[a, b]}.  This covers Clifford
algebras (bitmask basis, sign rule), group algebras of finite groups and
full matrix algebras (matrix units).  Norms go through a faithful
*-representation.
"""

from dataclasses import dataclass, field
from functools import cached_property
import json

import numpy as np

from . import _kernels

MAX_GENERATORS = 8
POSITIVITY_TOL = 1e-9


@dataclass(frozen=True)
class CliffordSignature:
    p: int
    q: int
    max_generators: int = MAX_GENERATORS

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValueError("signature entries must be non-negative")
        if self.p + self.q > self.max_generators:
            raise ValueError(
                f"p+q = {self.p + self.q} exceeds the maximum {self.max_generators}")

    @property
    def n(self):
        return self.p + self.q


@dataclass(frozen=True, eq=False)
class AlgebraDescriptor:
    kind: str
    dim: int
    index: np.ndarray
    coef: np.ndarray
    star_index: np.ndarray
    star_coef: np.ndarray
    grading: np.ndarray
    unit: np.ndarray
    generators: tuple
    params: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return self.dim

    def __repr__(self):
        return f"AlgebraDescriptor({self.kind}, dim={self.dim}, {self.params_json()})"

    # -- tables -------------------------------------------------------------
    @cached_property
    def structure_constants(self):
        """Dense tensor G with e_a e_b = sum_c G[a, b, c] e_c."""
        d = self.dim
        g = np.zeros((d, d, d))
        a, b = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        g[a, b, self.index] = self.coef
        return g

    @cached_property
    def star_map(self):
        """Matrix S with coeffs(x*) = S @ conj(coeffs(x))."""
        m = np.zeros((self.dim, self.dim))
        m[self.star_index, np.arange(self.dim)] = self.star_coef
        return m

    @cached_property
    def grading_map(self):
        return np.diag(self.grading.astype(float))

    @cached_property
    def real_map(self):
        """Matrix K with coeffs(kappa(x)) = K @ conj(coeffs(x))."""
        return np.eye(self.dim)

    # -- representations ----------------------------------------------------
    def rep(self, x):
        """Image of a coefficient vector under the faithful representation."""
        x = np.asarray(x, dtype=complex)
        if self.kind == "matrix":
            n = self.params["n"]
            return x.reshape(n, n).copy()
        return _kernels.left_regular(x, self.index, self.coef)

    @property
    def rep_dim(self):
        if self.kind == "matrix":
            return self.params["n"]
        return self.dim

    @cached_property
    def faithful_rep(self):
        """Stack of representation matrices, one per basis element.

        For Clifford algebras this is built independently of the sign table,
        from exterior creation and annihilation operators.
        """
        if self.kind == "clifford":
            return _exterior_rep(self.params["p"], self.params["q"])
        return np.stack([self.rep(np.eye(self.dim)[b]) for b in range(self.dim)])

    def left_regular(self, x):
        return _kernels.left_regular(np.asarray(x, dtype=complex), self.index, self.coef)

    def right_regular(self, x):
        return _kernels.right_regular(np.asarray(x, dtype=complex), self.index, self.coef)

    # -- elements -----------------------------------------------------------
    def element(self, coeffs):
        return AlgebraElement(self, np.asarray(coeffs, dtype=complex))

    def basis(self, b):
        c = np.zeros(self.dim, dtype=complex)
        c[b] = 1.0
        return AlgebraElement(self, c)

    def one(self):
        return AlgebraElement(self, self.unit.astype(complex))

    def zero(self):
        return AlgebraElement(self, np.zeros(self.dim, dtype=complex))

    def random(self, rng, real=False):
        c = rng.standard_normal(self.dim)
        if not real:
            c = c + 1j * rng.standard_normal(self.dim)
        return AlgebraElement(self, c.astype(complex))

    # -- serialization --------------------------------------------------------
    def params_json(self):
        if self.kind == "clifford":
            return {"kind": "clifford", "p": self.params["p"], "q": self.params["q"]}
        if self.kind == "group":
            return {"kind": "group", "table": np.asarray(self.params["table"]).tolist()}
        return {"kind": "matrix", "n": self.params["n"],
                "grading": [int(s) for s in self.params["grading"]]}

    def to_json(self):
        return json.dumps(self.params_json(), sort_keys=True)

    def same_as(self, other):
        return self is other or self.params_json() == other.params_json()


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: AlgebraDescriptor
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.algebra.dim,):
            raise ValueError(
                f"expected {self.algebra.dim} coefficients, got shape {self.coeffs.shape}")

    def _wrap(self, c):
        return AlgebraElement(self.algebra, c)

    def _check(self, other):
        if not self.algebra.same_as(other.algebra):
            raise ValueError("elements belong to different algebras")

    def __add__(self, other):
        if isinstance(other, AlgebraElement):
            self._check(other)
            return self._wrap(self.coeffs + other.coeffs)
        return self._wrap(self.coeffs + other * self.algebra.unit)

    __radd__ = __add__

    def __neg__(self):
        return self._wrap(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return mul(self, other)
        return self._wrap(self.coeffs * other)

    def __rmul__(self, other):
        return self._wrap(self.coeffs * other)

    def star(self):
        return star(self)

    def alpha(self):
        return alpha(self)

    def kappa(self):
        return kappa(self)

    def norm(self):
        return norm(self)

    def rep(self):
        return self.algebra.rep(self.coeffs)

    def allclose(self, other, atol=1e-12):
        return np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol)


# --- operations -----------------------------------------------------------

def mul(x, y):
    x._check(y)
    A = x.algebra
    return AlgebraElement(A, _kernels.monomial_product(x.coeffs, y.coeffs, A.index, A.coef))


def star(x):
    A = x.algebra
    c = np.zeros(A.dim, dtype=complex)
    c[A.star_index] = A.star_coef * np.conj(x.coeffs)
    return AlgebraElement(A, c)


def alpha(x):
    return AlgebraElement(x.algebra, x.algebra.grading * x.coeffs)


def kappa(x):
    return AlgebraElement(x.algebra, x.algebra.real_map @ np.conj(x.coeffs))


def norm(x):
    if not np.any(x.coeffs):
        return 0.0
    return float(np.linalg.norm(x.rep(), 2))


def is_positive(x, tol=POSITIVITY_TOL):
    m = x.rep()
    if np.linalg.norm(m - m.conj().T, 2) > tol:
        return False
    return bool(np.linalg.eigvalsh((m + m.conj().T) / 2)[0] >= -tol)


# --- backends -------------------------------------------------------------

def clifford_algebra(sig, q=None, max_generators=MAX_GENERATORS):
    """Cl^{p,q}: p generators squaring to -1, q squaring to +1.

    Accepts a CliffordSignature or ``clifford_algebra(p, q)``.
    """
    if not isinstance(sig, CliffordSignature):
        sig = CliffordSignature(int(sig), int(q), max_generators)
    p, n = sig.p, sig.n
    d = 1 << n
    index, sign = _kernels.clifford_table(n, p)
    pc = _kernels.popcounts(d)
    neg = _kernels.popcounts(1 << p)[np.arange(d) & ((1 << p) - 1)]
    star_coef = np.where(((pc * (pc - 1) // 2) + neg) % 2, -1.0, 1.0)
    unit = np.zeros(d)
    unit[0] = 1.0
    return AlgebraDescriptor(
        kind="clifford", dim=d, index=np.asarray(index), coef=np.asarray(sign),
        star_index=np.arange(d), star_coef=star_coef,
        grading=np.where(pc % 2, -1, 1), unit=unit,
        generators=tuple(1 << i for i in range(n)),
        params={"p": p, "q": sig.q})


def _exterior_rep(p, q):
    n = p + q
    d = 1 << n
    gens = []
    for i in range(n):
        eps = _kernels.exterior_creation(n, i)
        gens.append(eps - eps.T if i < p else eps + eps.T)
    reps = np.empty((d, d, d))
    for S in range(d):
        m = np.eye(d)
        for i in range(n):
            if (S >> i) & 1:
                m = m @ gens[i]
        reps[S] = m
    return reps


def group_algebra(mult_table):
    """C[G] for a finite group given by its multiplication table."""
    t = np.asarray(mult_table, dtype=np.int64)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
        raise ValueError("multiplication table must be a non-empty square array")
    g = t.shape[0]
    if t.min() < 0 or t.max() >= g:
        raise ValueError("table entries out of range")
    for row in t:
        if len(set(row.tolist())) != g:
            raise ValueError("not a group: a row is not a permutation")
    # associativity: (ab)c == a(bc)
    lhs = t[t[:, :, None], np.arange(g)[None, None, :]]
    rhs = t[np.arange(g)[:, None, None], t[None, :, :]]
    if not np.array_equal(lhs, rhs):
        raise ValueError("not a group: multiplication is not associative")
    ident = [e for e in range(g) if np.array_equal(t[e], np.arange(g))
             and np.array_equal(t[:, e], np.arange(g))]
    if not ident:
        raise ValueError("not a group: no identity element")
    e = ident[0]
    inv = np.array([int(np.flatnonzero(t[a] == e)[0]) if np.any(t[a] == e) else -1
                    for a in range(g)])
    if np.any(inv < 0) or np.any(t[inv, np.arange(g)] != e):
        raise ValueError("not a group: missing inverses")
    unit = np.zeros(g)
    unit[e] = 1.0
    return AlgebraDescriptor(
        kind="group", dim=g, index=t, coef=np.ones((g, g)),
        star_index=inv, star_coef=np.ones(g), grading=np.ones(g, dtype=int),
        unit=unit, generators=tuple(range(g)), params={"table": t, "identity": e})


def cyclic_group_table(n):
    a = np.arange(n)
    return (a[:, None] + a[None, :]) % n


def matrix_algebra(n, grading=None):
    """M_n(C) on matrix units E_ij (index i*n+j); optional even/odd grading."""
    if n < 1:
        raise ValueError("n must be positive")
    s = np.ones(n, dtype=int) if grading is None else np.asarray(grading, dtype=int)
    if s.shape != (n,) or not np.all(np.abs(s) == 1):
        raise ValueError("grading must be a vector of +-1 of length n")
    d = n * n
    a = np.arange(d)
    i, j = a // n, a % n
    k, l = i[None, :], j[None, :]
    index = (i[:, None] * n + l).astype(np.int64)
    coef = (j[:, None] == k).astype(float)
    unit = np.eye(n).ravel()
    return AlgebraDescriptor(
        kind="matrix", dim=d, index=index, coef=coef,
        star_index=j * n + i, star_coef=np.ones(d),
        grading=s[i] * s[j], unit=unit, generators=tuple(range(d)),
        params={"n": n, "grading": s})


def algebra_from_json(doc):
    if isinstance(doc, str):
        doc = json.loads(doc)
    kind = doc.get("kind")
    if kind == "clifford":
        return clifford_algebra(int(doc["p"]), int(doc["q"]))
    if kind == "group":
        return group_algebra(doc["table"])
    if kind == "matrix":
        return matrix_algebra(int(doc["n"]), doc.get("grading"))
    raise ValueError(f"unknown algebra kind {kind!r}")


def complex_numbers():
    """C as Cl^{0,0}."""
    return clifford_algebra(0, 0)
