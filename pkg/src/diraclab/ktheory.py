"""K-cycles over a finite base and their constructions.

Cycles are fibrewise complex matrices (A = C with entrywise conjugation as
Real structure).  Clifford generators carry a sign sigma: +1 for euclidean
directions (c^2 = -1, c* = -c), -1 for negative ones (c^2 = +1, c* = c).
Tensor products put the spinor module index outside: X (x) Y = kron(X, Y).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .calculus import bounded_transform_function, hermitian_function
from .dirac import index as graded_index
from .fields import (BaseComplex, HilbertField, compactness_certificate, decode_matrix,
                     encode_matrix, extend_by_zero, family_from_matrices, fredholm_certificate,
                     interval, is_isomorphism, point, product, validate_field)
from .algebra import MAX_GENERATORS, complex_numbers

TOL = 1e-9


@dataclass(frozen=True)
class PseudoRiemannianBundle:
    p: int
    q: int

    @property
    def rank(self):
        return self.p + self.q

    @property
    def sigma(self):
        return np.concatenate([np.ones(self.p), -np.ones(self.q)])


@dataclass(eq=False)
class KCycle:
    base: BaseComplex
    iota: list                   # per point (n_x, n_x)
    F: list                      # per point (n_x, n_x)
    clifford: list = field(default_factory=list)   # generators; each a per-point list
    sigma: np.ndarray = None
    Y: np.ndarray = None
    flavor: str = "b"            # b: bounded, u: unbounded, o: F^2 - 1 compact

    def __post_init__(self):
        k = self.base.size
        self.iota = [np.asarray(m) for m in self.iota]
        self.F = [np.asarray(m) for m in self.F]
        self.clifford = [[np.asarray(m) for m in gen] for gen in self.clifford]
        if self.sigma is None:
            self.sigma = np.ones(len(self.clifford))
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.Y is None:
            self.Y = self.base.closed.copy()
        self.Y = np.asarray(self.Y, dtype=bool)
        if len(self.iota) != k or len(self.F) != k or any(len(g) != k for g in self.clifford):
            raise ValueError("cycle data must have one entry per base point")
        if len(self.sigma) != len(self.clifford):
            raise ValueError("one sign per Clifford generator is required")

    @property
    def ranks(self):
        return np.array([m.shape[0] for m in self.F])

    @property
    def n_generators(self):
        return len(self.clifford)

    def field(self):
        return HilbertField(self.base, complex_numbers(), self.ranks, [], standard=True)

    def family(self):
        return family_from_matrices(self.base, self.F)

    def at(self, i):
        """Restriction to a single base point."""
        return KCycle(point(), [self.iota[i]], [self.F[i]], [[g[i]] for g in self.clifford],
                      self.sigma, np.array([self.Y[i]]), self.flavor)

    def equals(self, other):
        """Entrywise equality of all data."""
        if self.base.size != other.base.size or self.n_generators != other.n_generators:
            return False
        if not np.array_equal(self.sigma, other.sigma) or not np.array_equal(self.Y, other.Y):
            return False
        pairs = list(zip(self.iota, other.iota)) + list(zip(self.F, other.F))
        for g, h in zip(self.clifford, other.clifford):
            pairs += list(zip(g, h))
        return all(a.shape == b.shape and np.array_equal(a, b) for a, b in pairs)


def point_cycle(F, iota, clifford=(), sigma=None, flavor="b"):
    return KCycle(point(), [np.asarray(iota)], [np.asarray(F)],
                  [[np.asarray(c)] for c in clifford], sigma, np.zeros(1, bool), flavor)


def zero_cycle(base, sigma=()):
    z = np.zeros((0, 0))
    k = base.size
    return KCycle(base, [z] * k, [z] * k, [[z] * k for _ in sigma], np.asarray(sigma, float))


def grading_matrix(n_even, n_odd):
    return np.diag(np.concatenate([np.ones(n_even), -np.ones(n_odd)]))


def random_point_cycle(rng, n_even, n_odd, complex_=False):
    """Odd self-adjoint F = [[0, B*], [B, 0]] with B random (full rank generically)."""
    B = rng.standard_normal((n_odd, n_even))
    if complex_:
        B = B + 1j * rng.standard_normal((n_odd, n_even))
    n = n_even + n_odd
    F = np.zeros((n, n), dtype=B.dtype)
    F[:n_even, n_even:] = B.conj().T
    F[n_even:, :n_even] = B
    return point_cycle(F, grading_matrix(n_even, n_odd))


# --- validation ----------------------------------------------------------------------

@dataclass
class CycleReport:
    items: dict
    degenerate: bool
    fredholm: object = None

    @property
    def ok(self):
        return all(v[0] for v in self.items.values())

    def failed(self):
        return [k for k, v in self.items.items() if not v[0]]


def _nrm(x):
    return float(np.linalg.norm(x, 2)) if x.size else 0.0


def _bounded_F(K):
    if K.flavor == "u":
        bt = bounded_transform_function()
        return [hermitian_function((M + M.conj().T) / 2, bt) if M.size else M for M in K.F]
    return K.F


def validate_cycle(K, tol=TOL, max_rank=8):
    items = {}
    # (1) field
    fr = validate_field(K.field())
    shapes_ok = all(i.shape == f.shape for i, f in zip(K.iota, K.F)) and all(
        g[x].shape == K.F[x].shape for g in K.clifford for x in range(K.base.size))
    items[1] = (bool(fr.ok and shapes_ok), "" if shapes_ok else "fibre shapes disagree")
    # (2) Clifford structure and grading
    msgs = []
    for x in range(K.base.size):
        io = K.iota[x]
        n = io.shape[0]
        if _nrm(io @ io - np.eye(n)) > tol or _nrm(io - io.conj().T) > tol:
            msgs.append(f"grading is not a self-adjoint involution at point {x}")
        for a, ga in enumerate(K.clifford):
            c = ga[x]
            if _nrm(c @ io + io @ c) > tol:
                msgs.append(f"generator {a} is not odd at point {x}")
            if _nrm(c.conj().T + K.sigma[a] * c) > tol:
                msgs.append(f"generator {a} violates c* = -c(sigma v) at point {x}")
            for b in range(a, len(K.clifford)):
                d = ga[x] @ K.clifford[b][x] + K.clifford[b][x] @ ga[x]
                target = -2 * K.sigma[a] * np.eye(n) if a == b else np.zeros((n, n))
                if _nrm(d - target) > tol:
                    msgs.append(f"anticommutator of generators {a},{b} wrong at point {x}")
            if _nrm(c - np.conj(c)) > tol:
                msgs.append(f"generator {a} is not Real at point {x}")
    items[2] = (not msgs, "; ".join(msgs[:4]))
    # (3) F odd, self-adjoint, Real, Fredholm
    msgs = []
    for x in range(K.base.size):
        F, io = K.F[x], K.iota[x]
        scale = 1 + _nrm(F)
        if _nrm(F @ io + io @ F) > tol * scale:
            msgs.append(f"F is not odd at point {x}")
        if _nrm(F - F.conj().T) > tol * scale:
            msgs.append(f"F is not self-adjoint at point {x}")
        if _nrm(F - np.conj(F)) > tol * scale:
            msgs.append(f"F is not Real at point {x}")
    fred = None
    if not msgs:
        fam = family_from_matrices(K.base, _bounded_F(K))
        fred = fredholm_certificate(fam, max_rank=max_rank)
        if not fred.fredholm:
            msgs.append("no essential spectral gap")
    items[3] = (not msgs, "; ".join(msgs[:4]))
    # (4) anticommutation with the Clifford action
    msgs = []
    for x in range(K.base.size):
        F = K.F[x]
        for a, g in enumerate(K.clifford):
            if _nrm(F @ g[x] + g[x] @ F) > tol * (1 + _nrm(F)):
                msgs.append(f"F does not anticommute with generator {a} at point {x}")
    items[4] = (not msgs, "; ".join(msgs[:4]))
    # (5) invertible over Y
    if K.Y.any():
        sub = family_from_matrices(K.base.restrict(K.Y), [K.F[i] for i in np.flatnonzero(K.Y)])
        iso = is_isomorphism(sub)
        items[5] = (iso.ok, "" if iso.ok else f"F not invertible over Y at {iso.failing_points[:4]}")
    else:
        items[5] = (True, "Y empty")
    return CycleReport(items, is_degenerate(K), fred)


def is_degenerate(K, tol=1e-12):
    return bool(is_isomorphism(family_from_matrices(K.base, K.F), tol=tol).ok)


def o_variant_check(K, eps=(0.1,), refinements=None):
    """F^2 - 1 compact: eps-rank certificate (over refinements if given as cycles)."""
    cycles = refinements if refinements is not None else [K]
    fams = [[M @ M - np.eye(M.shape[0]) for M in c.F] for c in cycles]
    return compactness_certificate(fams, eps)


# --- sums and inverses ------------------------------------------------------------------

def _bdiag(a, b):
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=np.result_type(a, b))
    out[:a.shape[0], :a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


def _check_compatible(K1, K2):
    if K1.base.size != K2.base.size or not np.allclose(K1.base.coords, K2.base.coords):
        raise ValueError("cycles live over different bases")
    if not np.array_equal(K1.sigma, K2.sigma):
        raise ValueError("cycles carry different Clifford bundles")


def direct_sum(K1, K2):
    _check_compatible(K1, K2)
    k = K1.base.size
    return KCycle(K1.base, [_bdiag(K1.iota[x], K2.iota[x]) for x in range(k)],
                  [_bdiag(K1.F[x], K2.F[x]) for x in range(k)],
                  [[_bdiag(g1[x], g2[x]) for x in range(k)] for g1, g2 in zip(K1.clifford, K2.clifford)],
                  K1.sigma.copy(), K1.Y | K2.Y, K1.flavor)


def negate(K, form=1):
    """form 1: (E, -iota, c, F); form 2: (E, -iota, -c, -F)."""
    if form not in (1, 2):
        raise ValueError("form must be 1 or 2")
    s = 1 if form == 1 else -1
    return KCycle(K.base, [-i for i in K.iota], [s * f for f in K.F],
                  [[s * m for m in g] for g in K.clifford], K.sigma.copy(), K.Y.copy(), K.flavor)


# --- concordance paths ---------------------------------------------------------------------

@dataclass
class ConcordancePath:
    base: BaseComplex
    ts: np.ndarray
    slices: list
    start: KCycle
    end: KCycle
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_samples(self):
        return len(self.ts)

    def restrict(self, t):
        if t == 0:
            return self.slices[0]
        if t == 1:
            return self.slices[-1]
        j = int(np.argmin(np.abs(self.ts - t)))
        return self.slices[j]

    def endpoints_equal(self):
        return self.slices[0].equals(self.start) and self.slices[-1].equals(self.end)

    def validate(self, tol=TOL):
        reps = [validate_cycle(s, tol) for s in self.slices]
        bad = [float(self.ts[j]) for j, r in enumerate(reps) if not r.ok]
        return all(r.ok for r in reps), bad, reps

    def as_cycle(self):
        """The path as one cycle over base x [0, 1] (t is the inner index)."""
        tb = BaseComplex(self.ts, [(j, j + 1) for j in range(len(self.ts) - 1)])
        pb = product(self.base, tb)
        k, m = self.base.size, len(self.ts)
        get = lambda attr: [getattr(self.slices[j], attr)[x] for x in range(k) for j in range(m)]
        gens = [[self.slices[j].clifford[a][x] for x in range(k) for j in range(m)]
                for a in range(self.start.n_generators)]
        Y = np.array([self.slices[j].Y[x] for x in range(k) for j in range(m)])
        return KCycle(pb, get("iota"), get("F"), gens, self.start.sigma, Y, self.start.flavor)


def _angles(n):
    th = np.linspace(0.0, np.pi / 2, n)
    c, s = np.cos(th), np.sin(th)
    c[0], s[0], c[-1], s[-1] = 1.0, 0.0, 0.0, 1.0
    return th, c, s


def inverse_concordance(K, n=33, tol=TOL):
    """cos(th) Q + sin(th) M on K + negate(K, 2), M = diag(F, -F), Q the block swap."""
    Kn = negate(K, 2)
    S = direct_sum(K, Kn)
    k = K.base.size
    th, cs, sn = _angles(n)
    Qs, Ms = [], []
    for x in range(k):
        m = K.F[x].shape[0]
        Q = np.zeros((2 * m, 2 * m))
        Q[:m, m:] = np.eye(m)
        Q[m:, :m] = np.eye(m)
        Qs.append(Q)
        Ms.append(S.F[x])
    gap = []
    for x in range(k):
        w = np.abs(np.linalg.eigvalsh(_bounded_F(K)[x])) if K.F[x].size else np.array([np.inf])
        gap.append(float(w.min()))
    slices, sq_err, min_sq, lower = [], [], [], []
    for j in range(n):
        Fs = [cs[j] * Qs[x] + sn[j] * Ms[x] for x in range(k)]
        slices.append(KCycle(K.base, S.iota, Fs, S.clifford, S.sigma, S.Y, K.flavor))
        e, mn, lb = 0.0, np.inf, np.inf
        for x in range(k):
            if not Fs[x].size:
                continue
            sq = Fs[x] @ Fs[x]
            target = cs[j] ** 2 * np.eye(len(sq)) + sn[j] ** 2 * (Ms[x] @ Ms[x])
            e = max(e, _nrm(sq - target))
            mn = min(mn, float(np.linalg.eigvalsh(sq)[0]))
            lb = min(lb, cs[j] ** 2 + sn[j] ** 2 * gap[x] ** 2)
        sq_err.append(e)
        min_sq.append(mn)
        lower.append(lb)
    start = KCycle(K.base, S.iota, Qs, S.clifford, S.sigma, S.Y, K.flavor)
    anti = max((_nrm(Qs[x] @ Ms[x] + Ms[x] @ Qs[x]) for x in range(k)), default=0.0)
    return ConcordancePath(K.base, th / (np.pi / 2), slices, start, S,
                           {"theta": th, "square_error": np.array(sq_err),
                            "min_square": np.array(min_sq), "square_lower_bound": np.array(lower),
                            "QM_anticommutator": anti})


def null_concordance_of_degenerate(K, n=33):
    """Path from the zero cycle (t = 0) to a degenerate K (t = 1) by pulling K back to
    (0, 1] x X and extending by zero."""
    if not is_degenerate(K):
        raise ValueError("cycle is not degenerate (F is not invertible)")
    k = K.base.size
    ts = np.linspace(0.0, 1.0, n)
    gaps = [float(np.min(np.abs(np.linalg.eigvalsh(M)))) if M.size else np.inf for M in K.F]
    c = min(gaps)
    # family over X x [0, 1], open part t > 0
    tb = interval(0.0, 1.0, n)
    pb = product(K.base, tb)
    U = np.array([j > 0 for x in range(k) for j in range(n)])
    Fu = family_from_matrices(pb.restrict(U), [K.F[x] for x in range(k) for j in range(1, n)])
    ext = extend_by_zero(Fu, pb, U)
    z = zero_cycle(K.base, K.sigma)
    z.flavor = K.flavor
    slices = [z] + [KCycle(K.base, K.iota, K.F, K.clifford, K.sigma, K.Y, K.flavor) for _ in range(1, n)]
    gap_fn = np.array([np.inf] + [c] * (n - 1))
    return ConcordancePath(K.base, ts, slices, z, K,
                           {"gap": gap_fn, "extension": ext, "boundary_gap": ext.boundary_gap})


def bounded_unbounded_path(K, n=33, max_rank=8):
    """F_s = F (1 + s F^2)^{-1/2}, s in [0, 1]; parametrix g(F) sqrt(1 + s F^2)."""
    from .fields import select_gap, smooth_step
    k = K.base.size
    ss = np.linspace(0.0, 1.0, n)
    slices, defects = [], []
    cut = []
    for x in range(k):
        M = K.F[x]
        w = np.linalg.eigvalsh(M) if M.size else np.zeros(0)
        sel = select_gap(np.abs(w), max_rank, 1e-6) if M.size else (0, 0.0, np.inf)
        cut.append(sel)
    for j, s in enumerate(ss):
        Fs = []
        err = 0.0
        for x in range(k):
            M = K.F[x]
            if j == 0 or not M.size:
                Fs.append(M.copy())
            else:
                Fs.append(hermitian_function(M, lambda t: t / np.sqrt(1 + s * t * t)))
            if M.size and cut[x] is not None:
                kk, lo, hi = cut[x]
                a_lo, a_hi = lo + (hi - lo) / 3, lo + 2 * (hi - lo) / 3
                a = lambda t: smooth_step((np.abs(t) - a_lo) / (a_hi - a_lo)) if np.isfinite(hi) else 0 * t
                g = lambda t: np.where(a(t) > 0, a(t) / np.where(t == 0, 1, t), 0.0) * np.sqrt(1 + s * t * t)
                G = hermitian_function(M, g)
                err = max(err, _nrm(Fs[-1] @ G - hermitian_function(M, a)))
        defects.append(err)
        slices.append(KCycle(K.base, K.iota, Fs, K.clifford, K.sigma, K.Y, "b" if j else K.flavor))
    end = slices[-1]
    return ConcordancePath(K.base, ss, slices, K, end, {"parametrix_defect": np.array(defects)})


# --- Clifford modules and the Morita / Thom / Bott maps -------------------------------------

@dataclass
class CanonicalCliffordModule:
    n: int
    grading: np.ndarray
    e: list          # square to -1
    eps: list        # square to +1

    @property
    def dim(self):
        return 1 << self.n

    @property
    def generators(self):
        return self.e + self.eps

    @property
    def sigma(self):
        return np.concatenate([np.ones(self.n), -np.ones(self.n)])

    def relation_errors(self):
        gens, sig = self.generators, self.sigma
        I = np.eye(self.dim)
        out = {}
        for a in range(len(gens)):
            out[("odd", a)] = float(np.max(np.abs(gens[a] @ self.grading + self.grading @ gens[a]), initial=0))
            for b in range(a, len(gens)):
                target = -2 * sig[a] * I if a == b else 0 * I
                out[(a, b)] = float(np.max(np.abs(gens[a] @ gens[b] + gens[b] @ gens[a] - target), initial=0))
        return out


def canonical_module(n, max_n=MAX_GENERATORS):
    """Exterior algebra of R^n with e_i = eps_i - eps_i^* and eps-hat_i = eps_i + eps_i^*."""
    if n < 0 or n > max_n:
        raise ValueError(f"rank must lie in [0, {max_n}]")
    d = 1 << n
    pc = _kernels.popcounts(d)
    grading = np.diag(np.where(pc % 2, -1.0, 1.0))
    e, eps = [], []
    for i in range(n):
        cr = _kernels.exterior_creation(n, i)
        e.append(cr - cr.T)
        eps.append(cr + cr.T)
    return CanonicalCliffordModule(n, grading, e, eps)


def graded_tensor_generators(S1, S2):
    """Generators c(v) (x) 1 and eta (x) c(w) of S1 (x) S2, in the basis index
    s1 + 2^{n1} s2 (so that the result is the module of the direct sum)."""
    I2 = np.eye(S2.dim)
    g1 = [np.kron(I2, c) for c in S1.e] + [np.kron(np.eye(S2.dim), c) for c in S1.eps]
    g2 = [np.kron(c, S1.grading) for c in S2.e] + [np.kron(c, S1.grading) for c in S2.eps]
    n1, n2 = S1.n, S2.n
    # order: e of both, then eps of both
    e = g1[:n1] + g2[:n2]
    eps = g1[n1:] + g2[n2:]
    return CanonicalCliffordModule(n1 + n2, np.kron(S2.grading, S1.grading), e, eps)


def morita(K, n=1):
    """(E (x) S, eta (x) iota_S, c (x) 1 plus e (x) eta and eps (x) eta, F (x) 1)
    with the spinor index outside."""
    S = canonical_module(n)
    IS = np.eye(S.dim)
    k = K.base.size
    iota = [np.kron(S.grading, K.iota[x]) for x in range(k)]
    F = [np.kron(IS, K.F[x]) for x in range(k)]
    gens = [[np.kron(IS, g[x]) for x in range(k)] for g in K.clifford]
    gens += [[np.kron(c, K.iota[x]) for x in range(k)] for c in S.e]
    gens += [[np.kron(c, K.iota[x]) for x in range(k)] for c in S.eps]
    sigma = np.concatenate([K.sigma, np.ones(n), -np.ones(n)])
    return KCycle(K.base, iota, F, gens, sigma, K.Y.copy(), K.flavor)


def disc_points(n, m=5):
    """Grid points of the closed unit disc in R^n (m per axis) and the boundary shell mask."""
    if n == 0:
        return np.zeros((1, 0)), np.zeros(1, bool)
    ax = np.linspace(-1, 1, m)
    grid = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), -1).reshape(-1, n)
    r = np.linalg.norm(grid, axis=1)
    keep = r <= 1 + 1e-12
    grid, r = grid[keep], r[keep]
    h = ax[1] - ax[0]
    return grid, r >= 1 - h / 2 - 1e-12


def _disc_base(K, vs, shell):
    k, m = K.base.size, len(vs)
    adj = []
    h = np.min([np.linalg.norm(a - b) for a in vs for b in vs if not np.allclose(a, b)], initial=1.0)
    for a in range(m):
        for b in range(a + 1, m):
            if np.linalg.norm(vs[a] - vs[b]) <= h * (1 + 1e-9):
                adj.append((a, b))
    vb = BaseComplex(vs if vs.shape[1] else np.zeros(m), adj)
    pb = product(K.base, vb)
    Y = np.array([K.Y[x] or shell[j] for x in range(k) for j in range(m)])
    return pb.with_closed(Y), Y


def thom(K, n=1, m=5, vs=None, shell=None):
    """Operator F (x) 1 + eps(v) (x) eta over X x disc, relative to the boundary shell;
    keeps c (x) 1 and e (x) eta."""
    S = canonical_module(n)
    if vs is None:
        vs, shell = disc_points(n, m)
    vs = np.asarray(vs, float).reshape(len(vs), n)
    shell = np.asarray(shell, bool)
    IS = np.eye(S.dim)
    base, Y = _disc_base(K, vs, shell)
    iota, F = [], []
    gens = [[] for _ in range(K.n_generators + n)]
    sq_err = 0.0
    for x in range(K.base.size):
        for v in vs:
            ev = sum((v[i] * S.eps[i] for i in range(n)), np.zeros((S.dim, S.dim)))
            op = np.kron(IS, K.F[x]) + np.kron(ev, K.iota[x])
            iota.append(np.kron(S.grading, K.iota[x]))
            F.append(op)
            for a, g in enumerate(K.clifford):
                gens[a].append(np.kron(IS, g[x]))
            for i in range(n):
                gens[K.n_generators + i].append(np.kron(S.e[i], K.iota[x]))
            target = np.kron(IS, K.F[x] @ K.F[x]) + float(v @ v) * np.eye(len(op))
            sq_err = max(sq_err, float(np.max(np.abs(op @ op - target), initial=0)))
    out = KCycle(base, iota, F, gens, np.concatenate([K.sigma, np.ones(n)]), Y, K.flavor)
    out.__dict__["square_error"] = sq_err
    return out


def thom_raw(K, neg_generators, m=5):
    """(pi*E, iota, c|_W, F + sum v_i c(f_i)) using existing negative generators f_i of K."""
    idx = list(neg_generators)
    if any(K.sigma[i] != -1 for i in idx):
        raise ValueError("Thom directions must be negative generators (sigma = -1)")
    n = len(idx)
    vs, shell = disc_points(n, m)
    base, Y = _disc_base(K, vs, shell)
    keep = [a for a in range(K.n_generators) if a not in idx]
    iota, F = [], []
    gens = [[] for _ in keep]
    for x in range(K.base.size):
        for v in vs:
            F.append(K.F[x] + sum((v[i] * K.clifford[idx[i]][x] for i in range(n)),
                                  np.zeros_like(K.F[x])))
            iota.append(K.iota[x])
            for r, a in enumerate(keep):
                gens[r].append(K.clifford[a][x])
    return KCycle(base, iota, F, gens, K.sigma[keep], Y, K.flavor)


def bott(K, ts=None, T=1.0, n_t=33):
    """Thom map for n = 1 along a sampled t-line: [[F, t eta], [t eta, F]] over X x R,
    relative to t != 0."""
    ts = np.linspace(-T, T, n_t) if ts is None else np.asarray(ts, float)
    return thom(K, 1, vs=ts.reshape(-1, 1), shell=np.abs(ts) > 0)


def bott_square_errors(K, ts):
    """max |(bott op)^2 - (F^2 + t^2)| per (t, base point)."""
    out = np.zeros((len(ts), K.base.size))
    for x in range(K.base.size):
        D, eta = K.F[x], K.iota[x]
        for j, t in enumerate(ts):
            B = np.block([[D, t * eta], [t * eta, D]])
            target = np.kron(np.eye(2), D @ D) + t * t * np.eye(len(B))
            out[j, x] = float(np.max(np.abs(B @ B - target), initial=0))
    return out


def bott_displayed(D, eta, t):
    """The displayed matrix [[D, t eta], [t eta, -D]] (kept for comparison)."""
    return np.block([[D, t * eta], [t * eta, -D]])


def point_index(K, theta=1e-6):
    if K.base.size != 1 or K.n_generators:
        raise ValueError("point index needs a single base point and no Clifford generators")
    F, io = K.F[0], K.iota[0]
    if F.size == 0:
        return 0
    rep = graded_index(F, np.diag(io).real, theta)
    if not rep.determined:
        raise ArithmeticError(f"kernel gap indeterminate, candidates {rep.candidates}")
    return int(rep.index)


def lattice_cycle(D):
    """Point cycle of an unbounded lattice Dirac operator (node space even)."""
    return point_cycle(D.matrix, np.diag(D.iota), flavor="u")


# --- serialization -------------------------------------------------------------------------

def cycle_to_json(K):
    return {"base": K.base.to_json(), "flavor": K.flavor, "sigma": K.sigma.tolist(),
            "Y": K.Y.astype(int).tolist(),
            "iota": [encode_matrix(m) for m in K.iota], "F": [encode_matrix(m) for m in K.F],
            "clifford": [[encode_matrix(m) for m in g] for g in K.clifford]}


def _maybe_real(m):
    return m.real if not np.any(m.imag) else m


def cycle_from_json(doc):
    base = BaseComplex.from_json(doc["base"])
    dec = lambda d: _maybe_real(decode_matrix(d))
    return KCycle(base, [dec(m) for m in doc["iota"]], [dec(m) for m in doc["F"]],
                  [[dec(m) for m in g] for g in doc.get("clifford", [])],
                  np.asarray(doc.get("sigma", []), float), np.asarray(doc.get("Y"), bool)
                  if doc.get("Y") is not None else None, doc.get("flavor", "b"))
