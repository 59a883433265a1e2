"""Continuous fields of Hilbert modules over a finite base, operator families
and their compactness / Fredholm certificates.

Operators in a family are stored as matrices in the regular localization of
each fibre, i.e. on C^{n_x d} where d is the algebra dimension.  For A = C
this is just the fibre matrix.  Continuity is a declared Lipschitz bound on
x -> ||s(x)|| across adjacent base points.
"""

from dataclasses import dataclass, field
import csv
import io
import json

import numpy as np

from .algebra import algebra_from_json, complex_numbers, norm as algebra_norm
from .calculus import ScalarFunction, hermitian_function

DEFAULT_LIPSCHITZ = 10.0


class FieldValidationError(ValueError):
    pass


# --- base -----------------------------------------------------------------------

@dataclass(eq=False)
class BaseComplex:
    coords: np.ndarray
    adjacency: list
    closed: np.ndarray = None       # Y
    open_mask: np.ndarray = None    # U for extension by zero
    period: float = None            # circle length, if any
    parent_index: np.ndarray = None

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        k = len(self.coords)
        self.adjacency = [tuple(sorted(map(int, e))) for e in self.adjacency]
        if self.closed is None:
            self.closed = np.zeros(k, dtype=bool)
        if self.open_mask is None:
            self.open_mask = np.ones(k, dtype=bool)
        self.closed = np.asarray(self.closed, dtype=bool)
        self.open_mask = np.asarray(self.open_mask, dtype=bool)

    @property
    def size(self):
        return len(self.coords)

    def distance(self, i, j):
        diff = np.atleast_1d(self.coords[i] - self.coords[j])
        if self.period is not None:
            diff = np.abs(diff)
            diff = np.minimum(diff, self.period - diff)
        return float(np.linalg.norm(diff))

    def neighbors(self, i):
        return [b if a == i else a for a, b in self.adjacency if i in (a, b)]

    def restrict(self, mask):
        mask = np.asarray(mask, dtype=bool)
        idx = np.flatnonzero(mask)
        pos = -np.ones(self.size, dtype=int)
        pos[idx] = np.arange(len(idx))
        adj = [(pos[a], pos[b]) for a, b in self.adjacency if mask[a] and mask[b]]
        parent = idx if self.parent_index is None else self.parent_index[idx]
        return BaseComplex(self.coords[idx], adj, self.closed[idx], self.open_mask[idx],
                           self.period, parent)

    def with_closed(self, mask):
        return BaseComplex(self.coords, self.adjacency, np.asarray(mask, bool),
                           self.open_mask, self.period, self.parent_index)

    def with_open(self, mask):
        return BaseComplex(self.coords, self.adjacency, self.closed,
                           np.asarray(mask, bool), self.period, self.parent_index)

    def check_closed(self):
        """Every subset of a finite grid is closed; only the mask shapes are checked."""
        return self.closed.shape == (self.size,) and self.open_mask.shape == (self.size,)

    def to_json(self):
        return {"coords": self.coords.tolist(), "adjacency": [list(e) for e in self.adjacency],
                "closed": self.closed.astype(int).tolist(),
                "open": self.open_mask.astype(int).tolist(), "period": self.period}

    @staticmethod
    def from_json(doc):
        return BaseComplex(np.asarray(doc["coords"], float), doc["adjacency"],
                           np.asarray(doc.get("closed", [0] * len(doc["coords"])), bool),
                           np.asarray(doc.get("open", [1] * len(doc["coords"])), bool),
                           doc.get("period"))


def interval(a, b, n):
    x = np.linspace(a, b, n)
    return BaseComplex(x, [(i, i + 1) for i in range(n - 1)])


def circle(n, length=2 * np.pi):
    x = np.arange(n) * (length / n)
    return BaseComplex(x, [(i, (i + 1) % n) for i in range(n)], period=length)


def point():
    return BaseComplex(np.zeros(1), [])


def product(base, other):
    """Grid product; adjacency moves one factor at a time."""
    k, m = base.size, other.size
    c1 = base.coords.reshape(k, -1)
    c2 = other.coords.reshape(m, -1)
    coords = np.concatenate([np.repeat(c1, m, axis=0), np.tile(c2, (k, 1))], axis=1)
    adj = []
    for i in range(k):
        for a, b in other.adjacency:
            adj.append((i * m + a, i * m + b))
    for a, b in base.adjacency:
        for j in range(m):
            adj.append((a * m + j, b * m + j))
    closed = np.logical_or.outer(base.closed, other.closed).ravel()
    opened = np.logical_and.outer(base.open_mask, other.open_mask).ravel()
    return BaseComplex(coords, adj, closed, opened)


# --- fields ---------------------------------------------------------------------

@dataclass(eq=False)
class HilbertField:
    base: BaseComplex
    algebra: object
    ranks: np.ndarray
    generators: list = None         # list of sections; section = list of (n_x, d) arrays
    lipschitz: float = DEFAULT_LIPSCHITZ
    density_tol: int = 0
    standard: bool = False          # generators = constant standard basis (implicit)

    def __post_init__(self):
        self.ranks = np.asarray(self.ranks, dtype=int)
        if self.generators is None:
            self.generators = []

    @property
    def dims(self):
        """Localized fibre dimensions n_x d."""
        return self.ranks * self.algebra.dim

    def n_generators(self):
        if self.standard:
            return int(self.ranks.max(initial=0))
        return len(self.generators)

    def generator(self, k):
        if not self.standard:
            return self.generators[k]
        d = self.algebra.dim
        out = []
        for n in self.ranks:
            v = np.zeros((n, d), dtype=complex)
            if k < n:
                v[k] = self.algebra.unit
            out.append(v)
        return out

    def section_norms(self, values):
        return np.array([_element_norm(v, self.algebra) for v in values])

    def validate(self):
        return validate_field(self)


def _element_norm(v, algebra):
    v = np.asarray(v, dtype=complex)
    if v.size == 0:
        return 0.0
    if algebra.dim == 1:
        return float(np.linalg.norm(v))
    A = algebra
    xs = np.zeros_like(v)
    xs[:, A.star_index] = A.star_coef * np.conj(v)
    from ._kernels import monomial_product
    acc = np.zeros(A.dim, dtype=complex)
    for i in range(v.shape[0]):
        acc += monomial_product(xs[i], v[i], A.index, A.coef)
    return float(np.sqrt(algebra_norm(A.element(acc))))


@dataclass
class FieldReport:
    ok: bool
    violations: list = field(default_factory=list)     # (section, i, j, jump, bound)
    density_defects: np.ndarray = None
    rank_errors: list = field(default_factory=list)

    def message(self):
        parts = []
        for s, i, j, jump, bound in self.violations[:5]:
            parts.append(f"section {s}: |dnorm| = {jump:.3g} > {bound:.3g} between points {i} and {j}")
        for s, i in self.rank_errors[:5]:
            parts.append(f"section {s}: wrong shape at point {i}")
        if self.density_defects is not None and np.any(self.density_defects):
            bad = np.flatnonzero(self.density_defects)
            parts.append(f"density defect at points {bad[:5].tolist()}")
        return "; ".join(parts)


def _lipschitz_violations(base, values, bound, label):
    out = []
    for i, j in base.adjacency:
        jump = abs(values[i] - values[j])
        lim = bound * base.distance(i, j)
        if jump > lim + 1e-12:
            out.append((label, i, j, float(jump), float(lim)))
    return out


def validate_section(fld, values, label="candidate"):
    """Continuity proxy and rank check for one section."""
    d = fld.algebra.dim
    errs = [(label, i) for i, v in enumerate(values) if np.shape(v) != (fld.ranks[i], d)]
    if errs:
        return FieldReport(False, rank_errors=errs)
    viol = _lipschitz_violations(fld.base, fld.section_norms(values), fld.lipschitz, label)
    return FieldReport(not viol, viol)


def validate_field(fld):
    d = fld.algebra.dim
    if fld.standard:
        return FieldReport(True, density_defects=np.zeros(fld.base.size, dtype=int))
    viol, rank_errs = [], []
    secs = fld.generators
    for s_idx, s in enumerate(secs):
        if len(s) != fld.base.size:
            rank_errs.append((s_idx, -1))
            continue
        for i, v in enumerate(s):
            if np.shape(v) != (fld.ranks[i], d):
                rank_errs.append((s_idx, i))
    if rank_errs:
        return FieldReport(False, rank_errors=rank_errs)
    for s_idx, s in enumerate(secs):
        viol += _lipschitz_violations(fld.base, fld.section_norms(s), fld.lipschitz, s_idx)
    # pairwise inner products, scalar part, for small generator sets
    if len(secs) <= 8:
        for a in range(len(secs)):
            for b in range(a + 1, len(secs)):
                vals = np.array([np.vdot(secs[a][i].ravel(), secs[b][i].ravel())
                                 for i in range(fld.base.size)])
                viol += _lipschitz_violations(fld.base, vals, fld.lipschitz, (a, b))
    defects = np.zeros(fld.base.size, dtype=int)
    for i in range(fld.base.size):
        n = fld.ranks[i]
        if n == 0:
            continue
        cols = []
        for s in secs:
            x = s[i]
            for b in range(d):
                # x * e_b, flattened
                R = fld.algebra.right_regular(np.eye(d)[b])
                cols.append((x @ R.T).ravel())
        span = np.linalg.matrix_rank(np.array(cols).T, tol=1e-9) if cols else 0
        defects[i] = n * d - span
    ok = not viol and np.all(defects <= fld.density_tol)
    return FieldReport(bool(ok), viol, defects)


def make_field(base, rank_function, fiber_algebra=None, generators=None,
               lipschitz=DEFAULT_LIPSCHITZ, density_tol=0, validate=True):
    """Build and validate a field.

    ``rank_function`` is an int, an array of ranks, or a callable of the
    coordinate; ``generators`` is a list of callables (point index -> (n_x, d)
    array) or of explicit per-point value lists; ``"standard"`` gives the
    constant standard basis.
    """
    A = fiber_algebra if fiber_algebra is not None else complex_numbers()
    if callable(rank_function):
        ranks = np.array([int(rank_function(c)) for c in base.coords])
    else:
        ranks = np.broadcast_to(np.asarray(rank_function, dtype=int), (base.size,)).copy()
    if generators == "standard":
        fld = HilbertField(base, A, ranks, [], lipschitz, density_tol, standard=True)
        return fld
    secs = []
    for g in generators or []:
        if callable(g):
            secs.append([np.asarray(g(i), dtype=complex).reshape(ranks[i], A.dim)
                         for i in range(base.size)])
        else:
            secs.append([np.asarray(v, dtype=complex).reshape(ranks[i], A.dim)
                         for i, v in enumerate(g)])
    if not secs and np.any(ranks > 0):
        raise FieldValidationError("generator list is empty at points of nonzero rank")
    fld = HilbertField(base, A, ranks, secs, lipschitz, density_tol)
    if validate:
        rep = validate_field(fld)
        if not rep.ok:
            raise FieldValidationError(rep.message())
    return fld


def trivial_field(base, rank, algebra=None, lipschitz=DEFAULT_LIPSCHITZ):
    return make_field(base, rank, algebra, "standard", lipschitz)


# --- operator families ---------------------------------------------------------

@dataclass(eq=False)
class OperatorFamily:
    domain: HilbertField
    codomain: HilbertField
    mats: list                       # localized matrices per point
    bound: float = None              # declared local bound on ||F_x||
    lipschitz: float = None          # declared continuity bound for images of sections
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mats = [np.asarray(m) for m in self.mats]
        if len(self.mats) != self.domain.base.size:
            raise ValueError("one operator per base point is required")
        for i, m in enumerate(self.mats):
            if m.shape != (self.codomain.dims[i], self.domain.dims[i]):
                raise ValueError(f"operator at point {i} has shape {m.shape}, expected "
                                 f"{(self.codomain.dims[i], self.domain.dims[i])}")

    @property
    def base(self):
        return self.domain.base

    def __len__(self):
        return len(self.mats)

    def __getitem__(self, i):
        return self.mats[i]

    def norms(self):
        return np.array([_opnorm(m) for m in self.mats])

    def adjoint(self):
        return OperatorFamily(self.codomain, self.domain, [m.conj().T for m in self.mats],
                              self.bound, self.lipschitz)

    def compose(self, other):
        """self o other."""
        return OperatorFamily(other.domain, self.codomain,
                              [a @ b for a, b in zip(self.mats, other.mats)])

    def __matmul__(self, other):
        return self.compose(other)

    def __add__(self, other):
        return OperatorFamily(self.domain, self.codomain,
                              [a + b for a, b in zip(self.mats, other.mats)])

    def __sub__(self, other):
        return OperatorFamily(self.domain, self.codomain,
                              [a - b for a, b in zip(self.mats, other.mats)])

    def scale(self, z):
        return OperatorFamily(self.domain, self.codomain, [z * m for m in self.mats])

    def identity_like(self):
        return OperatorFamily(self.domain, self.domain,
                              [np.eye(n, dtype=m.dtype) for n, m in zip(self.domain.dims, self.mats)])

    def restrict(self, mask):
        mask = np.asarray(mask, bool)
        sub = self.base.restrict(mask)
        idx = np.flatnonzero(mask)
        dom = _restrict_field(self.domain, sub, idx)
        cod = dom if self.codomain is self.domain else _restrict_field(self.codomain, sub, idx)
        return OperatorFamily(dom, cod, [self.mats[i] for i in idx], self.bound, self.lipschitz)

    def validate(self):
        return validate_family(self)


def _restrict_field(fld, sub, idx):
    gens = [[s[i] for i in idx] for s in fld.generators]
    return HilbertField(sub, fld.algebra, fld.ranks[idx], gens, fld.lipschitz,
                        fld.density_tol, fld.standard)


@dataclass
class FamilyReport:
    ok: bool
    norms: np.ndarray
    bound: float
    violations: list = field(default_factory=list)

    def offending_points(self):
        pts = set()
        for v in self.violations:
            pts.update(v[1:3])
        return sorted(pts)


def validate_family(F, lipschitz=None):
    """Local boundedness plus the continuity proxy on images of generators."""
    norms = F.norms()
    bound = F.bound if F.bound is not None else (float(norms.max(initial=0.0)) * (1 + 1e-12) + 1e-300)
    viol = []
    if np.any(norms > bound):
        bad = np.flatnonzero(norms > bound)
        viol += [("bound", int(i), int(i), float(norms[i]), bound) for i in bad]
    L = lipschitz if lipschitz is not None else (F.lipschitz if F.lipschitz is not None
                                                  else F.codomain.lipschitz)
    base = F.base
    A = F.domain.algebra
    if F.domain.standard and A.dim == 1:
        # images of the constant standard basis are the columns
        m = int(F.domain.ranks.max(initial=0))
        cols = np.zeros((base.size, m))
        for i, M in enumerate(F.mats):
            if M.size:
                cols[i, :M.shape[1]] = np.linalg.norm(M, axis=0)
        for k in range(m):
            viol += _lipschitz_violations(base, cols[:, k], L, k)
    else:
        for k in range(F.domain.n_generators()):
            s = F.domain.generator(k)
            imgs = [(M @ v.ravel()).reshape(-1, A.dim) for M, v in zip(F.mats, s)]
            vals = np.array([_element_norm(v, A) for v in imgs])
            viol += _lipschitz_violations(base, vals, L, k)
    return FamilyReport(not viol, norms, bound, viol)


def family_from_matrices(base, mats, algebra=None, lipschitz=DEFAULT_LIPSCHITZ, bound=None):
    """Family of square operators on the trivial (standard) field with the given sizes."""
    A = algebra if algebra is not None else complex_numbers()
    ranks = np.array([m.shape[1] // A.dim for m in mats])
    fld = HilbertField(base, A, ranks, [], lipschitz, 0, standard=True)
    return OperatorFamily(fld, fld, mats, bound=bound, lipschitz=lipschitz)


# --- compactness -------------------------------------------------------------------

def eps_rank(s, eps):
    """Number of singular values exceeding eps (s may be a matrix or a vector of values)."""
    s = np.asarray(s)
    if s.ndim == 2:
        s = np.linalg.svd(s, compute_uv=False) if s.size else np.zeros(0)
    return int(np.sum(s > eps))


def _singular_values(M):
    if M.size == 0:
        return np.zeros(0)
    if M.shape[0] == M.shape[1] and np.allclose(M, M.conj().T, rtol=0, atol=1e-14 * (1 + np.abs(M).max())):
        return np.sort(np.abs(np.linalg.eigvalsh((M + M.conj().T) / 2)))[::-1]
    return np.linalg.svd(M, compute_uv=False)


def finite_rank_approximant(M, eps):
    """Truncated SVD with defect (operator-norm error) <= eps."""
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > eps))
    defect = float(s[r]) if r < len(s) else 0.0
    return (U[:, :r] * s[:r]), Vh[:r], defect


@dataclass
class CompactnessCertificate:
    eps_grid: np.ndarray
    levels: list
    ranks: np.ndarray             # (n_levels, n_eps), max over base points
    defects: np.ndarray           # (n_levels, n_eps), max approximant defect
    tolerance: int = 1
    singular_values: list = field(default_factory=list)
    approximants: dict = field(default_factory=dict)

    @property
    def spread(self):
        return self.ranks.max(axis=0) - self.ranks.min(axis=0)

    @property
    def uniform(self):
        return bool(np.all(self.spread <= self.tolerance))

    @property
    def max_rank(self):
        return self.ranks.max(axis=0)

    def monotone(self):
        order = np.argsort(self.eps_grid)
        return bool(np.all(np.diff(self.ranks[:, order], axis=1) <= 0))

    def defects_ok(self):
        return bool(np.all(self.defects <= self.eps_grid[None, :] + 1e-15))

    def rank_at(self, eps):
        j = int(np.argmin(np.abs(self.eps_grid - eps)))
        return self.ranks[:, j]

    def csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "eps", "eps_rank", "defect"])
        for li, lev in enumerate(self.levels):
            for ei, e in enumerate(self.eps_grid):
                w.writerow([lev, f"{e:.17g}", int(self.ranks[li, ei]), f"{self.defects[li, ei]:.17g}"])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.csv_text())

    def summary(self):
        return {"eps": self.eps_grid.tolist(), "levels": list(self.levels),
                "ranks": self.ranks.tolist(), "spread": self.spread.tolist(),
                "uniform": self.uniform, "tolerance": self.tolerance}


def _as_matrix_lists(F):
    if isinstance(F, OperatorFamily):
        return F.mats
    if isinstance(F, np.ndarray) and F.ndim == 2:
        return [F]
    return list(F)


def compactness_certificate(families, eps_grid=(0.1,), levels=None, tolerance=1,
                            keep_singular_values=False, keep_approximants=False):
    """eps-rank table across refinements.

    ``families`` is a list (one entry per refinement level) of OperatorFamily
    objects or lists of matrices; a single family is treated as one level.
    """
    if isinstance(families, (OperatorFamily, np.ndarray)):
        families = [families]
    eps = np.atleast_1d(np.asarray(eps_grid, dtype=float))
    levels = list(levels) if levels is not None else list(range(len(families)))
    ranks = np.zeros((len(families), len(eps)), dtype=int)
    defects = np.zeros((len(families), len(eps)))
    svals, approx = [], {}
    for li, fam in enumerate(families):
        lev_s = []
        for pi, M in enumerate(_as_matrix_lists(fam)):
            s = _singular_values(M)
            lev_s.append(s)
            for ei, e in enumerate(eps):
                r = int(np.sum(s > e))
                ranks[li, ei] = max(ranks[li, ei], r)
                defects[li, ei] = max(defects[li, ei], float(s[r]) if r < len(s) else 0.0)
                if keep_approximants and li == len(families) - 1:
                    approx[(pi, float(e))] = finite_rank_approximant(M, e)
        if keep_singular_values:
            svals.append(lev_s)
    return CompactnessCertificate(eps, levels, ranks, defects, tolerance, svals, approx)


# --- isomorphism and Fredholm ------------------------------------------------------

@dataclass
class IsomorphismReport:
    ok: bool
    inverse_norms: np.ndarray
    witness: OperatorFamily = None
    failing_points: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def is_isomorphism(F, bound=None, tol=1e-12):
    inv_norms = np.full(len(F), np.inf)
    invs, bad = [], []
    for i, M in enumerate(F.mats):
        if M.shape[0] != M.shape[1]:
            bad.append(i)
            invs.append(np.zeros(M.shape[::-1], dtype=M.dtype))
            continue
        if M.size == 0:
            inv_norms[i] = 0.0
            invs.append(M.copy())
            continue
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= tol * max(1.0, s[0]):
            bad.append(i)
            invs.append(np.zeros_like(M))
            continue
        inv_norms[i] = 1.0 / s[-1]
        invs.append(np.linalg.inv(M))
    if bound is not None:
        bad += [i for i in range(len(F)) if np.isfinite(inv_norms[i]) and inv_norms[i] > bound]
    ok = not bad
    witness = OperatorFamily(F.codomain, F.domain, invs) if ok else None
    return IsomorphismReport(ok, inv_norms, witness, sorted(set(bad)))


def smooth_step(x):
    """C^1 step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


@dataclass
class FredholmCertificate:
    fredholm: bool
    gap: np.ndarray
    defect_ranks: np.ndarray
    defect_norms: np.ndarray          # ||FG - 1 - K1|| per point
    defect_norms_right: np.ndarray    # ||GF - 1 - K2|| per point
    parametrix: OperatorFamily = None
    K1: OperatorFamily = None
    K2: OperatorFamily = None
    compact_K1: CompactnessCertificate = None
    compact_K2: CompactnessCertificate = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def max_defect(self):
        return float(max(self.defect_norms.max(initial=0.0), self.defect_norms_right.max(initial=0.0)))


def _herm_defect(M):
    """Frobenius upper bound for ||M - M*||."""
    return float(np.linalg.norm(M - M.conj().T))


def _opnorm(X):
    """Operator norm; Hermitian matrices go through eigvalsh."""
    if X.size == 0:
        return 0.0
    if np.allclose(X, X.conj().T, rtol=0, atol=1e-14 * (1 + np.abs(X).max())):
        return float(np.max(np.abs(np.linalg.eigvalsh((X + X.conj().T) / 2))))
    return float(np.linalg.norm(X, 2))


def select_gap(absvals, max_rank, floor):
    """Choose how many small |eigenvalues| form the compact part.

    Returns (k, lo, hi): k eigenvalues below the gap (lo, hi)."""
    a = np.sort(absvals)
    best = None
    for k in range(0, min(max_rank, len(a) - 1) + 1):
        lo = a[k - 1] if k > 0 else 0.0
        hi = a[k]
        if hi < floor:
            continue
        g = hi - lo
        if best is None or g > best[0] + 1e-12:
            best = (g, k, lo, hi)
    if best is None:
        if len(a) and len(a) <= max_rank:
            return len(a), float(a[-1]), np.inf
        return None
    return best[1], float(best[2]), float(best[3])


def fredholm_certificate(F, max_rank=8, floor=1e-6, eps_grid=(0.1, 0.01), selfadjoint_tol=1e-9):
    """Parametrix g(F) with g(t) = a(t)/t, a a cutoff placed inside the gap."""
    n = len(F)
    gaps = np.zeros(n)
    ranks = np.zeros(n, dtype=int)
    dn = np.zeros(n)
    dn2 = np.zeros(n)
    Gs, K1s, K2s = [], [], []
    ok = True
    diag = {"smallest_abs_eigenvalues": []}
    for i, M in enumerate(F.mats):
        if M.size == 0:
            Gs.append(M.copy()); K1s.append(M.copy()); K2s.append(M.copy())
            gaps[i] = np.inf
            diag["smallest_abs_eigenvalues"].append([])
            continue
        w, U = np.linalg.eigh((M + M.conj().T) / 2)
        if _herm_defect(M) > selfadjoint_tol * (1 + np.max(np.abs(w))):
            raise ValueError(f"family is not self-adjoint at point {i}")
        diag["smallest_abs_eigenvalues"].append(np.sort(np.abs(w))[:4].tolist())
        amin = float(np.min(np.abs(w)))
        # invertible points keep the true inverse as parametrix (zero defect)
        sel = (0, 0.0, amin) if amin >= floor else select_gap(np.abs(w), max_rank, floor)
        if sel is None:
            ok = False
            gaps[i] = 0.0
            Gs.append(np.zeros_like(M)); K1s.append(np.zeros_like(M)); K2s.append(np.zeros_like(M))
            continue
        k, lo, hi = sel
        gaps[i] = hi
        ranks[i] = k
        if np.isfinite(hi):
            a_lo = lo + (hi - lo) / 3
            a_hi = lo + 2 * (hi - lo) / 3
            aw = smooth_step((np.abs(w) - a_lo) / (a_hi - a_lo))
        else:
            aw = np.zeros_like(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            gw = np.where(aw > 0, aw / np.where(w == 0, 1, w), 0.0)
        G = (U * gw) @ U.conj().T
        small = np.argsort(np.abs(w))[:k]
        P = U[:, small] @ U[:, small].conj().T
        I = np.eye(M.shape[0])
        K1 = -P
        dn[i] = _opnorm(M @ G - I - K1)
        dn2[i] = _opnorm(G @ M - I - K1)
        Gs.append(G); K1s.append(K1); K2s.append(K1.copy())
    Gf = OperatorFamily(F.codomain, F.domain, Gs)
    K1f = OperatorFamily(F.codomain, F.codomain, K1s)
    K2f = OperatorFamily(F.domain, F.domain, K2s)
    c1 = compactness_certificate([K1f], eps_grid)
    c2 = compactness_certificate([K2f], eps_grid)
    return FredholmCertificate(bool(ok), gaps, ranks, dn, dn2, Gf, K1f, K2f, c1, c2, diag)


def glue_parametrices(F, certificates, weights):
    """Glue local parametrices with a partition of unity.

    ``certificates[k]`` is a FredholmCertificate for F on the full base (its
    data is only used where ``weights[k] > 0``).  Returns (G, K, defect) with
    K = sum_k w_k K1_k and defect = max_x ||F G - 1 - K||.
    """
    W = np.asarray(weights, dtype=float)
    if not np.allclose(W.sum(axis=0), 1.0):
        raise ValueError("weights must form a partition of unity")
    Gs, Ks, worst = [], [], 0.0
    for i, M in enumerate(F.mats):
        G = sum(W[k, i] * c.parametrix.mats[i] for k, c in enumerate(certificates))
        K = sum(W[k, i] * c.K1.mats[i] for k, c in enumerate(certificates))
        worst = max(worst, float(np.linalg.norm(M @ G - np.eye(M.shape[0]) - K, 2)) if M.size else 0.0)
        Gs.append(G)
        Ks.append(K)
    return (OperatorFamily(F.codomain, F.domain, Gs), OperatorFamily(F.codomain, F.codomain, Ks), worst)


# --- family calculus -------------------------------------------------------------

def family_funcalc(D, f, validate=True):
    """Pointwise f_x(D_x); ``f`` is a ScalarFunction or a callable (x, t)."""
    out = []
    for i, M in enumerate(D.mats):
        if isinstance(f, ScalarFunction):
            fx = f
        else:
            x = D.base.coords[i]
            fx = (lambda xx: (lambda t: f(xx, t)))(x)
        out.append(hermitian_function((M + M.conj().T) / 2, fx) if M.size else M.copy())
    fam = OperatorFamily(D.domain, D.codomain, out, lipschitz=D.lipschitz)
    if validate:
        fam.meta["validation"] = validate_family(fam)
    return fam


# --- extension by zero ---------------------------------------------------------------

@dataclass
class ExtensionReport:
    family: OperatorFamily
    boundary_points: list
    norm_limits: dict
    norm_vanishes: bool
    boundary_gap: float
    gap_ok: bool
    compact_on_U: bool = None
    compact_extension: bool = None
    fredholm_extension: bool = None

    @property
    def boundary_limit(self):
        vals = [v for v in self.norm_limits.values() if v is not None]
        return max(vals) if vals else None


def _extrapolated_limit(base, norms_amb, inside, b):
    nb = [j for j in base.neighbors(b) if inside[j]]
    if not nb:
        return None
    y1 = min(nb, key=lambda j: base.distance(b, j))
    further = [j for j in base.neighbors(y1) if inside[j] and j != b]
    n1 = norms_amb[y1]
    if not further:
        return float(n1)
    y2 = max(further, key=lambda j: base.distance(b, j))
    n2 = norms_amb[y2]
    d1, d12 = base.distance(b, y1), base.distance(y1, y2)
    return float(n1 + (n1 - n2) * d1 / d12)


def jump_family(n=33):
    """D_x = 1/x on U = (0, 1] inside [0, 1], rank one."""
    amb = interval(0.0, 1.0, n)
    U = amb.coords > 0
    sub = amb.restrict(U)
    return family_from_matrices(sub, [np.array([[1.0 / x]]) for x in sub.coords]), amb, U


def compact_counterexample(n=33, limit=0.5):
    """Rank-one compact family (limit + x) P on (0, 1]; its norm tends to ``limit`` at 0."""
    amb = interval(0.0, 1.0, n)
    U = amb.coords > 0
    sub = amb.restrict(U)
    P = np.array([[1.0, 0.0], [0.0, 0.0]])
    return family_from_matrices(sub, [(limit + x) * P for x in sub.coords]), amb, U


def extend_by_zero(F, ambient, U_mask, norm_tol=0.05, gap_radius=None, unbounded=False,
                   compact=None):
    """Extend a family on the open set U (given as a family over ambient.restrict(U))
    by zero fibres.

    ``unbounded`` marks F as an unbounded self-adjoint family: the boundary gap
    verdict then applies to F itself and the bounded transform is reported.
    """
    U = np.asarray(U_mask, bool)
    idx = np.flatnonzero(U)
    if len(idx) != len(F):
        raise ValueError("family must have one operator per point of U")
    A = F.domain.algebra
    ranks = np.zeros(ambient.size, dtype=int)
    ranks[idx] = F.domain.ranks
    fld = HilbertField(ambient.with_open(U), A, ranks, [], F.domain.lipschitz, 0, standard=True)
    mats = [np.zeros((0, 0), dtype=complex) for _ in range(ambient.size)]
    for k, i in enumerate(idx):
        mats[i] = F.mats[k]
    fam = OperatorFamily(fld, fld, mats)
    norms = np.zeros(ambient.size)
    for k, i in enumerate(idx):
        M = F.mats[k]
        if unbounded:
            M = hermitian_function((M + M.conj().T) / 2, lambda t: t / np.sqrt(1 + t * t))
        norms[i] = np.linalg.norm(M, 2) if M.size else 0.0
    boundary = sorted({j for a, b in ambient.adjacency for j in (a, b)
                       if not U[j] and (U[a] or U[b])})
    limits = {b: _extrapolated_limit(ambient, norms, U, b) for b in boundary}
    vanishes = all(v is None or abs(v) <= norm_tol for v in limits.values())
    # boundary gap: min |spec| over U-points within gap_radius of the boundary
    near = []
    for k, i in enumerate(idx):
        if gap_radius is None or any(ambient.distance(i, b) <= gap_radius for b in boundary):
            near.append(k)
    c = np.inf
    for k in near:
        M = F.mats[k]
        if M.size:
            c = min(c, float(np.min(np.abs(np.linalg.eigvalsh((M + M.conj().T) / 2)))))
    gap_ok = bool(c > 0) if boundary else True
    rep = ExtensionReport(fam, boundary, limits, bool(vanishes), float(c), gap_ok)
    if compact is not None:
        # finite fibres: compactness on U is the declared property of the family
        rep.compact_on_U = bool(compact)
        rep.compact_extension = bool(compact and vanishes)
    if unbounded:
        bt = [hermitian_function((M + M.conj().T) / 2, lambda t: t / np.sqrt(1 + t * t))
              if M.size else M for M in F.mats]
        Fb = OperatorFamily(F.domain, F.codomain, bt)
    else:
        Fb = F
    selfadj = all(np.allclose(M, M.conj().T) for M in Fb.mats)
    if selfadj:
        rep.fredholm_extension = bool(gap_ok and fredholm_certificate(Fb).fredholm)
    return rep


# --- gluing and pullback -------------------------------------------------------------

def glue_fields(field0, field1, iso, ambient, tol=1e-9, taper=None):
    """Glue fields over closed pieces X0, X1 covering ``ambient``.

    The fields' bases must carry ``parent_index`` into ``ambient``.  ``iso`` maps
    each overlap point (ambient index) to a unitary localized matrix E0 -> E1.
    """
    p0, p1 = field0.base.parent_index, field1.base.parent_index
    if p0 is None or p1 is None:
        raise ValueError("fields must live on restrictions of the ambient base")
    if set(p0.tolist()) | set(p1.tolist()) != set(range(ambient.size)):
        raise ValueError("X0 and X1 do not cover the base")
    pos0 = {int(a): k for k, a in enumerate(p0)}
    pos1 = {int(a): k for k, a in enumerate(p1)}
    overlap = sorted(set(pos0) & set(pos1))
    for x in overlap:
        phi = np.asarray(iso[x])
        if phi.shape != (field1.dims[pos1[x]], field0.dims[pos0[x]]):
            raise ValueError(f"overlap iso at point {x} has the wrong shape")
        n = phi.shape[1]
        if phi.shape[0] != n or np.linalg.norm(phi.conj().T @ phi - np.eye(n), 2) > tol:
            raise ValueError(f"overlap iso at point {x} is not unitary")
    A, d = field0.algebra, field0.algebra.dim
    ranks = np.array([field0.ranks[pos0[x]] if x in pos0 else field1.ranks[pos1[x]]
                      for x in range(ambient.size)])
    width = taper if taper is not None else 3 * max(
        [ambient.distance(a, b) for a, b in ambient.adjacency] or [1.0])

    def nearest_overlap(x):
        return min(overlap, key=lambda o: ambient.distance(x, o)) if overlap else None

    g0 = [field0.generator(k) for k in range(field0.n_generators())]
    g1 = [field1.generator(k) for k in range(field1.n_generators())]
    used1 = set()
    secs = []
    for s0 in g0:
        match = None
        for k, s1 in enumerate(g1):
            if k in used1:
                continue
            if all(np.allclose(np.asarray(iso[x]) @ s0[pos0[x]].ravel(), s1[pos1[x]].ravel(), atol=tol)
                   for x in overlap):
                match = k
                break
        vals = []
        for x in range(ambient.size):
            if x in pos0:
                vals.append(s0[pos0[x]])
            elif match is not None:
                vals.append(g1[match][pos1[x]])
            else:
                o = nearest_overlap(x)
                if o is None or field1.ranks[pos1[o]] != ranks[x]:
                    vals.append(np.zeros((ranks[x], d), complex))
                else:
                    w = max(0.0, 1 - ambient.distance(x, o) / width)
                    vals.append(w * (np.asarray(iso[o]) @ s0[pos0[o]].ravel()).reshape(ranks[x], d))
        if match is not None:
            used1.add(match)
        secs.append(vals)
    for k, s1 in enumerate(g1):
        if k in used1:
            continue
        vals = []
        for x in range(ambient.size):
            if x in pos0 and x in pos1:
                phi = np.asarray(iso[x])
                vals.append((phi.conj().T @ s1[pos1[x]].ravel()).reshape(ranks[x], d))
            elif x in pos1:
                vals.append(s1[pos1[x]])
            else:
                o = nearest_overlap(x)
                if o is None or field0.ranks[pos0[o]] != ranks[x]:
                    vals.append(np.zeros((ranks[x], d), complex))
                else:
                    w = max(0.0, 1 - ambient.distance(x, o) / width)
                    phi = np.asarray(iso[o])
                    vals.append(w * (phi.conj().T @ s1[pos1[o]].ravel()).reshape(ranks[x], d))
        secs.append(vals)
    L = max(field0.lipschitz, field1.lipschitz)
    return make_field(ambient, ranks, A, secs, lipschitz=L)


def pullback_field(fmap, fld, new_base, lipschitz=None):
    """Pullback along a map of bases given as an index array new point -> old point."""
    fmap = np.asarray(fmap, dtype=int)
    if fmap.shape != (new_base.size,):
        raise ValueError("map must send every new base point to an old one")
    ranks = fld.ranks[fmap]
    L = lipschitz if lipschitz is not None else fld.lipschitz
    if fld.standard:
        return HilbertField(new_base, fld.algebra, ranks, [], L, fld.density_tol, standard=True)
    secs = [[s[j] for j in fmap] for s in fld.generators]
    return make_field(new_base, ranks, fld.algebra, secs, lipschitz=L)


# --- serialization -----------------------------------------------------------------

def encode_matrix(M):
    M = np.asarray(M)
    return {"shape": list(M.shape), "re": M.real.ravel().tolist(), "im": M.imag.ravel().tolist()}


def decode_matrix(doc):
    shape = tuple(doc["shape"])
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    return (re + 1j * im).reshape(shape)


def field_to_json(fld):
    return {"base": fld.base.to_json(), "algebra": fld.algebra.params_json(),
            "ranks": fld.ranks.tolist(), "lipschitz": fld.lipschitz,
            "standard": fld.standard,
            "generators": [[encode_matrix(v) for v in s] for s in fld.generators]}


def field_from_json(doc, validate=True):
    base = BaseComplex.from_json(doc["base"])
    A = algebra_from_json(doc["algebra"])
    if doc.get("standard"):
        return HilbertField(base, A, np.asarray(doc["ranks"]), [], doc.get("lipschitz", DEFAULT_LIPSCHITZ),
                            standard=True)
    gens = [[decode_matrix(v) for v in s] for s in doc["generators"]]
    return make_field(base, np.asarray(doc["ranks"]), A, gens,
                      lipschitz=doc.get("lipschitz", DEFAULT_LIPSCHITZ), validate=validate)


def family_to_json(F):
    doc = {"domain": field_to_json(F.domain),
           "operators": [encode_matrix(M) for M in F.mats],
           "bound": F.bound, "lipschitz": F.lipschitz}
    if F.codomain is not F.domain:
        doc["codomain"] = field_to_json(F.codomain)
    return doc


def family_from_json(doc):
    dom = field_from_json(doc["domain"])
    cod = field_from_json(doc["codomain"]) if "codomain" in doc else dom
    return OperatorFamily(dom, cod, [decode_matrix(m) for m in doc["operators"]],
                          doc.get("bound"), doc.get("lipschitz"))


def dumps(doc):
    return json.dumps(doc, sort_keys=True)
