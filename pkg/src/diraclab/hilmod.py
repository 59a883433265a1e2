"""Finitely generated Hilbert modules over the algebra backends.

A module is A^n, optionally compressed by a projection p.  Elements are
(n, d) coefficient arrays, operators are (n, n, d) arrays: an n-by-n
matrix with entries in A acting by left multiplication, which commutes
with the right A-action by construction.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .algebra import AlgebraElement, norm as algebra_norm

NULL_THRESHOLD = 1e-10


@dataclass(frozen=True, eq=False)
class HilbertModule:
    algebra: object
    rank: int
    projection: np.ndarray = None   # (n, n, d) coefficients
    grading: np.ndarray = None      # (n, n, d) coefficients
    real: bool = True

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be non-negative")
        shape = (self.rank, self.rank, self.algebra.dim)
        for name in ("projection", "grading"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=complex)
                if v.shape != shape:
                    raise ValueError(f"{name} must have shape {shape}")
                object.__setattr__(self, name, v)

    def validate(self, tol=1e-9):
        """Check p = p* = p^2, iota = iota* with iota^2 = 1, and [p, iota] = 0."""
        issues = []
        if self.projection is not None:
            P = ModuleOperator(self, self.projection)
            if not (_close(P @ P, P, tol) and _close(P.adjoint(), P, tol)):
                issues.append("projection is not a self-adjoint idempotent")
        if self.grading is not None:
            J = ModuleOperator(self, self.grading)
            if not (_close(J @ J, self.identity(), tol) and _close(J.adjoint(), J, tol)):
                issues.append("grading is not a self-adjoint involution")
            if self.projection is not None:
                P = ModuleOperator(self, self.projection)
                if not _close(P @ J, J @ P, tol):
                    issues.append("grading does not commute with projection")
        return issues

    def identity(self):
        e = np.zeros((self.rank, self.rank, self.algebra.dim), dtype=complex)
        e[np.arange(self.rank), np.arange(self.rank)] = self.algebra.unit
        return ModuleOperator(self, e)

    def zero_operator(self):
        return ModuleOperator(self, np.zeros((self.rank, self.rank, self.algebra.dim), complex))

    def element(self, entries):
        return ModuleElement(self, np.asarray(entries, dtype=complex))

    def unit_vector(self, i):
        c = np.zeros((self.rank, self.algebra.dim), dtype=complex)
        c[i] = self.algebra.unit
        return ModuleElement(self, c)

    def random_element(self, rng):
        c = rng.standard_normal((self.rank, self.algebra.dim)) \
            + 1j * rng.standard_normal((self.rank, self.algebra.dim))
        x = ModuleElement(self, c)
        if self.projection is not None:
            x = ModuleOperator(self, self.projection) @ x
        return x

    def random_operator(self, rng, hermitian=False):
        n, d = self.rank, self.algebra.dim
        c = rng.standard_normal((n, n, d)) + 1j * rng.standard_normal((n, n, d))
        T = ModuleOperator(self, c)
        if hermitian:
            T = 0.5 * (T + T.adjoint())
        return T

    def scalar_operator(self, M):
        """Operator with complex scalar matrix entries M_ij * 1."""
        M = np.asarray(M, dtype=complex)
        return ModuleOperator(self, M[:, :, None] * self.algebra.unit[None, None, :])


def free_module(algebra, rank, grading=None):
    mod = HilbertModule(algebra, rank)
    if grading is not None:
        g = np.asarray(grading)
        if g.ndim == 1:
            g = np.diag(g)
        mod = HilbertModule(algebra, rank, grading=g[:, :, None] * algebra.unit[None, None, :])
    return mod


def _close(S, T, tol):
    return operator_norm(S - T) <= tol * (1 + operator_norm(T))


@dataclass(frozen=True, eq=False)
class ModuleElement:
    module: HilbertModule
    entries: np.ndarray

    def __post_init__(self):
        shape = (self.module.rank, self.module.algebra.dim)
        if self.entries.shape != shape:
            raise ValueError(f"entries must have shape {shape}")

    def __getitem__(self, i):
        return AlgebraElement(self.module.algebra, self.entries[i])

    def __add__(self, other):
        return ModuleElement(self.module, self.entries + other.entries)

    def __sub__(self, other):
        return ModuleElement(self.module, self.entries - other.entries)

    def __neg__(self):
        return ModuleElement(self.module, -self.entries)

    def __mul__(self, a):
        """Right action by an algebra element, or scaling by a complex number."""
        if isinstance(a, AlgebraElement):
            R = self.module.algebra.right_regular(a.coeffs)
            return ModuleElement(self.module, self.entries @ R.T)
        return ModuleElement(self.module, self.entries * a)

    def __rmul__(self, z):
        return ModuleElement(self.module, self.entries * z)

    def norm(self):
        return module_norm(self)


@dataclass(frozen=True, eq=False)
class ModuleOperator:
    module: HilbertModule
    entries: np.ndarray
    parity: str = None      # "even" | "odd" | None
    reality: str = None     # "real" | None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        shape = (self.module.rank, self.module.rank, self.module.algebra.dim)
        if e.shape != shape:
            raise ValueError(f"entries must have shape {shape}, got {e.shape}")
        object.__setattr__(self, "entries", e)

    @property
    def algebra(self):
        return self.module.algebra

    def __getitem__(self, ij):
        return AlgebraElement(self.algebra, self.entries[ij])

    def _new(self, e):
        return ModuleOperator(self.module, e)

    def __add__(self, other):
        if isinstance(other, ModuleOperator):
            return self._new(self.entries + other.entries)
        return self._new(self.entries + other * self.module.identity().entries)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self._new(-self.entries)

    def __mul__(self, z):
        return self._new(self.entries * z)

    __rmul__ = __mul__

    def __matmul__(self, other):
        A = self.algebra
        if isinstance(other, ModuleOperator):
            return self._new(_kernels.module_matmul(self.entries, other.entries, A.index, A.coef))
        if isinstance(other, ModuleElement):
            out = _kernels.module_matmul(self.entries, other.entries[:, None, :], A.index, A.coef)
            return ModuleElement(other.module, out[:, 0, :])
        return NotImplemented

    def adjoint(self):
        return adjoint(self)

    @property
    def H(self):
        return adjoint(self)

    @cached_property
    def localized(self):
        """Matrix of T on the regular localization A^n (x) A ~ C^{n d}."""
        return localize_operator(self)

    def norm(self):
        return operator_norm(self)

    def check_parity(self, tol=1e-10):
        """Verify the declared parity against the module grading."""
        if self.parity is None:
            return True
        if self.module.grading is None:
            raise ValueError("module has no grading")
        J = ModuleOperator(self.module, self.module.grading)
        s = 1 if self.parity == "odd" else -1
        return operator_norm(self @ J + s * (J @ self)) <= tol * (1 + operator_norm(self))

    def check_reality(self, tol=1e-10):
        if self.reality is None:
            return True
        return bool(np.max(np.abs(self.entries - kappa_entries(self)), initial=0.0)
                    <= tol * (1 + np.max(np.abs(self.entries), initial=0.0)))


def kappa_entries(T):
    K = T.algebra.real_map
    return np.einsum("ab,ijb->ija", K, np.conj(T.entries))


@dataclass(frozen=True, eq=False)
class Representation:
    algebra: object
    matrices: np.ndarray            # (d, r, r)
    cyclic_vector: np.ndarray = None

    @property
    def dim(self):
        return self.matrices.shape[1]

    def of(self, x):
        c = x.coeffs if isinstance(x, AlgebraElement) else np.asarray(x)
        return np.tensordot(c, self.matrices, axes=(0, 0))

    def validate(self, tol=1e-10):
        """*-homomorphism identities on all basis pairs; returns max error."""
        A, M = self.algebra, self.matrices
        err = 0.0
        for a in range(A.dim):
            prod = M[a] @ M
            ref = A.coef[a][:, None, None] * M[A.index[a]]
            err = max(err, float(np.max(np.abs(prod - ref))))
        adj = np.conj(np.transpose(M, (0, 2, 1)))
        ref = A.star_coef[:, None, None] * M[A.star_index]
        # rep(e_b*) = star_coef[b] M[star_index[b]] and rep(e_b)^dagger must match
        err = max(err, float(np.max(np.abs(adj - ref))))
        err = max(err, float(np.max(np.abs(self.of(A.unit) - np.eye(self.dim)))))
        if err > tol:
            raise ValueError(f"not a *-representation (error {err:.3e})")
        return err


def regular_representation(algebra):
    d = algebra.dim
    M = np.stack([algebra.left_regular(np.eye(d)[b]) for b in range(d)])
    return Representation(algebra, M, cyclic_vector=algebra.unit.astype(complex))


def faithful_representation(algebra):
    return Representation(algebra, algebra.faithful_rep.astype(complex))


def character_representation(algebra, chi):
    """One-dimensional representation of a group algebra from a character."""
    chi = np.asarray(chi, dtype=complex)
    return Representation(algebra, chi[:, None, None], cyclic_vector=np.ones(1, complex))


# --- inner products and norms ----------------------------------------------

def inner_product(x, y):
    if x.module is not y.module and (x.module.rank != y.module.rank
                                     or not x.module.algebra.same_as(y.module.algebra)):
        raise ValueError("elements belong to different modules")
    A = x.module.algebra
    xs = np.zeros_like(x.entries)
    xs[:, A.star_index] = A.star_coef * np.conj(x.entries)
    out = np.zeros(A.dim, dtype=complex)
    for i in range(x.module.rank):
        out += _kernels.monomial_product(xs[i], y.entries[i], A.index, A.coef)
    return AlgebraElement(A, out)


def module_norm(x):
    return float(np.sqrt(algebra_norm(inner_product(x, x))))


def localize_operator(T, rep=None):
    """Block matrix [pi(T_ij)]; regular representation when rep is None."""
    n, d = T.module.rank, T.algebra.dim
    if rep is None:
        A = T.algebra
        if n == 0:
            return np.zeros((0, 0), complex)
        blocks = [[A.left_regular(T.entries[i, j]) for j in range(n)] for i in range(n)]
        return np.block(blocks)
    r = rep.dim
    M = np.einsum("ijb,bkl->ikjl", T.entries, rep.matrices)
    return M.reshape(n * r, n * r)


def _compressor(module):
    """Orthonormal basis of the range of the localized projection (or None)."""
    if module.projection is None:
        return None
    P = localize_operator(ModuleOperator(module, module.projection))
    w, U = np.linalg.eigh((P + P.conj().T) / 2)
    return U[:, w > 0.5]


def operator_norm(T):
    M = T.localized
    B = _compressor(T.module)
    if B is not None:
        M = B.conj().T @ M @ B
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def adjoint(T):
    A = T.algebra
    e = np.zeros_like(T.entries)
    e[:, :, A.star_index] = A.star_coef * np.conj(np.transpose(T.entries, (1, 0, 2)))
    return ModuleOperator(T.module, e, parity=T.parity, reality=T.reality)


def graph_inner_product(D, u, v):
    return inner_product(u, v) + inner_product(D @ u, D @ v)


def rank_one(s, t):
    """theta_{s,t}: u -> t <s, u>."""
    A = s.module.algebra
    ss = np.zeros_like(s.entries)
    ss[:, A.star_index] = A.star_coef * np.conj(s.entries)
    n = s.module.rank
    e = np.zeros((n, n, A.dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            e[i, j] = _kernels.monomial_product(t.entries[i], ss[j], A.index, A.coef)
    return ModuleOperator(s.module, e)


# --- localization -------------------------------------------------------------

@dataclass(eq=False)
class Localization:
    module: HilbertModule
    rep: Representation
    gram_rank: int
    basis: np.ndarray          # orthonormal columns in C^{n r}

    @property
    def dimension(self):
        return self.basis.shape[1]

    def phi(self, x, v):
        """Phi(x (x) v) = (pi(x_i) v)_i in H_pi^n."""
        v = np.asarray(v, dtype=complex)
        return np.concatenate([self.rep.of(x.entries[i]) @ v for i in range(self.module.rank)])

    def form(self, x, v, y, w):
        """<x (x) v, y (x) w> = <v, pi(<x,y>) w>."""
        return np.vdot(v, self.rep.of(inner_product(x, y)) @ w)

    def coordinates(self, vec):
        return self.basis.conj().T @ vec

    def compress(self, M):
        return self.basis.conj().T @ M @ self.basis


def localize(module, rep, null_threshold=NULL_THRESHOLD):
    """Realize E (x)_A H_pi concretely inside H_pi^n."""
    rep.validate()
    A = module.algebra
    n, d, r = module.rank, A.dim, rep.dim
    gens = []
    for i in range(n):
        for b in range(d):
            c = np.zeros((n, d), dtype=complex)
            c[i, b] = 1.0
            x = ModuleElement(module, c)
            if module.projection is not None:
                x = ModuleOperator(module, module.projection) @ x
            gens.append(x)
    m = len(gens)
    G = np.zeros((m * r, m * r), dtype=complex)
    for a in range(m):
        for b in range(a, m):
            blk = rep.of(inner_product(gens[a], gens[b]))
            G[a * r:(a + 1) * r, b * r:(b + 1) * r] = blk
            if b != a:
                G[b * r:(b + 1) * r, a * r:(a + 1) * r] = blk.conj().T
    w = np.linalg.eigvalsh((G + G.conj().T) / 2) if m else np.zeros(0)
    gram_rank = int(np.sum(w > null_threshold))
    images = np.column_stack([
        localization_image(rep, g, k) for g in gens for k in range(r)
    ]) if m else np.zeros((0, 0))
    if images.size:
        U, s, _ = np.linalg.svd(images, full_matrices=False)
        basis = U[:, s > np.sqrt(null_threshold)]
    else:
        basis = np.zeros((n * r, 0), dtype=complex)
    if basis.shape[1] != gram_rank:
        raise ValueError("localization is not isometric: Gram rank and image rank differ")
    return Localization(module, rep, gram_rank, basis)


def localization_image(rep, x, k):
    v = np.zeros(rep.dim, dtype=complex)
    v[k] = 1.0
    return np.concatenate([rep.of(x.entries[i]) @ v for i in range(x.module.rank)])
