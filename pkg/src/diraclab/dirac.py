"""Lattice Dirac operators on a one-dimensional fibre.

D = [[0, A*], [A, 0]] with A a forward difference plus potential coupled at
edge midpoints.  Rows of A live on edges, columns on nodes.  At each end an
outer half-edge is added when the potential there makes the continuum zero
mode decay, so the truncated operator keeps the index of the line.
"""

from dataclasses import dataclass, field
import time

import numpy as np
from scipy.linalg import eigh, eigvalsh, svdvals

from .calculus import (QuadratureScheme, bounded_transform_function, hermitian_function,
                       inv_sqrt_matrix, reconstruct)
from .fields import (BaseComplex, CompactnessCertificate, compactness_certificate,
                     family_from_matrices, fredholm_certificate, interval, validate_family)
from .hilmod import ModuleOperator, free_module

KERNEL_THRESHOLD = 1e-6
GAP_RATIO = 10.0


# --- grids and potentials ----------------------------------------------------------

@dataclass(frozen=True)
class FiberGrid:
    R: float
    N: int
    boundary: str = "dirichlet"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8:
            raise ValueError(f"node count must be an integer >= 8, got {self.N}")
        if not self.R > 0:
            raise ValueError("half-width must be positive")
        if self.boundary not in ("dirichlet", "periodic"):
            raise ValueError(f"unknown boundary condition {self.boundary!r}")

    @property
    def h(self):
        return 2.0 * self.R / (self.N - 1)

    @property
    def nodes(self):
        return np.linspace(-self.R, self.R, self.N)


def bump(y, center=0.0, width=1.0):
    """Smooth bump supported on (center - width, center + width), peak 1."""
    z = (np.asarray(y, dtype=float) - center) / width
    inside = np.abs(z) < 1
    out = np.zeros_like(z)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
    return out


def _term(tok):
    kind = tok.get("type")
    if kind == "linear":
        a, b = float(tok.get("slope", 1.0)), float(tok.get("shift", 0.0))
        return lambda y: a * y + b
    if kind == "quadratic":
        a, b, c = (float(tok.get(k, v)) for k, v in (("a", 1.0), ("b", 0.0), ("c", 0.0)))
        return lambda y: a * y * y + b * y + c
    if kind == "bump":
        amp, c, w = float(tok.get("amplitude", 1.0)), float(tok.get("center", 0.0)), float(tok.get("width", 1.0))
        if w <= 0:
            raise ValueError("bump width must be positive")
        return lambda y: amp * bump(y, c, w)
    if kind == "const":
        v = float(tok.get("value", 0.0))
        return lambda y: v + 0.0 * np.asarray(y, dtype=float)
    raise ValueError(f"unknown potential token {kind!r}")


def potential_from_tokens(tokens):
    """Sum of symbolic terms {linear, quadratic, bump, const}."""
    if isinstance(tokens, dict):
        tokens = [tokens]
    terms = [_term(t) for t in tokens]
    return lambda y: sum(t(np.asarray(y, dtype=float)) for t in terms) if terms else 0.0 * np.asarray(y)


def family_potential_from_tokens(tokens):
    """Tokens whose parameters may be pairs [p0, p1], meaning p0 + p1 x."""
    if isinstance(tokens, dict):
        tokens = [tokens]

    def at(x):
        toks = []
        for t in tokens:
            toks.append({k: (v[0] + v[1] * x if isinstance(v, (list, tuple)) else v) for k, v in t.items()})
        return potential_from_tokens(toks)

    return at


# --- spec and builder ----------------------------------------------------------------

@dataclass
class LatticeDiracSpec:
    grid: FiberGrid
    potential: object = None         # callable y -> scalar or (p, p) matrix, or token list
    module: object = None            # coefficient HilbertModule P; None means C
    scheme: str = "supersymmetric-pair"

    def __post_init__(self):
        if self.scheme != "supersymmetric-pair":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.potential is None:
            self.potential = potential_from_tokens({"type": "const", "value": 0.0})
        elif not callable(self.potential):
            self.potential = potential_from_tokens(self.potential)

    @property
    def fibre_dim(self):
        if self.module is None:
            return 1
        return self.module.rank * self.module.algebra.dim

    def W(self, y):
        p = self.fibre_dim
        w = self.potential(np.asarray(y, dtype=float))
        if isinstance(w, ModuleOperator):
            w = w.localized
        return np.asarray(w).reshape(p, p) if p > 1 else np.array([[complex(np.asarray(w))]])

    def validate(self, tol=1e-10):
        for y in np.concatenate([self.grid.nodes, [self.grid.nodes[0] - self.grid.h / 2,
                                                   self.grid.nodes[-1] + self.grid.h / 2]]):
            w = self.W(y)
            if np.linalg.norm(w - w.conj().T, 2) > tol * (1 + np.linalg.norm(w, 2)):
                raise ValueError(f"potential is not self-adjoint at y = {y:.6g}")
        return True


@dataclass(eq=False)
class LatticeDirac:
    spec: LatticeDiracSpec
    A: np.ndarray
    free_A: np.ndarray
    matrix: np.ndarray
    iota: np.ndarray
    pos: np.ndarray
    edge_pos: np.ndarray
    h: float
    scale: float = 1.0

    @property
    def n_nodes(self):
        return self.A.shape[1]

    @property
    def n_edges(self):
        return self.A.shape[0]

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def free_matrix(self):
        return _assemble(self.free_A)

    def scaled(self, k):
        return LatticeDirac(self.spec, k * self.A, self.free_A, k * self.matrix, self.iota,
                            self.pos, self.edge_pos, self.h, self.scale * k)

    def multiplication(self, g):
        """Diagonal multiplication by a node function, evaluated at node and edge positions."""
        vals = np.asarray(g(self.pos), dtype=float) * np.ones(len(self.pos))
        return vals

    def module_operator(self):
        """D as a graded ModuleOperator over the coefficient algebra."""
        P = self.spec.module
        if P is None:
            from .algebra import complex_numbers
            A = complex_numbers()
        else:
            A = P.algebra
        n_blocks = self.dim // A.dim
        sign = self.iota.reshape(n_blocks, A.dim)[:, 0]
        M = free_module(A, n_blocks, grading=sign)
        T = reconstruct(M, self.matrix.astype(complex))
        return ModuleOperator(M, T.entries, parity="odd", reality="real"
                              if not np.iscomplexobj(self.matrix) else None)


def _assemble(A):
    M, N = A.shape
    dt = np.result_type(A, float)
    D = np.zeros((N + M, N + M), dtype=dt)
    D[:N, N:] = A.conj().T
    D[N:, :N] = A
    return D


def _spectral_rows(w, positive):
    """Orthonormal rows spanning the positive (or non-positive) eigenspace of w."""
    lam, V = np.linalg.eigh((w + w.conj().T) / 2)
    keep = lam > 0 if positive else lam <= 0
    return V[:, keep].conj().T


def build_dirac(spec):
    spec.validate()
    g = spec.grid
    N, h, p = g.N, g.h, spec.fibre_dim
    y = g.nodes
    eye = np.eye(p)
    rows, free_rows, edge_pos = [], [], []

    def edge(j, jn, ye, proj=None):
        w = spec.W(ye)
        blk = np.zeros((p, N * p), dtype=complex)
        fb = np.zeros((p, N * p))
        if j is not None:
            blk[:, j * p:(j + 1) * p] += -eye / h + w / 2
            fb[:, j * p:(j + 1) * p] += -eye / h
        if jn is not None:
            blk[:, jn * p:(jn + 1) * p] += eye / h + w / 2
            fb[:, jn * p:(jn + 1) * p] += eye / h
        if proj is not None:
            blk, fb = proj @ blk, proj @ fb
        rows.append(blk)
        free_rows.append(fb)
        edge_pos.extend([ye] * blk.shape[0])

    if g.boundary == "periodic":
        for j in range(N):
            edge(j, (j + 1) % N, y[0] + (j + 0.5) * h)
    else:
        left = _spectral_rows(spec.W(y[0] - h / 2), True)
        if left.shape[0]:
            edge(None, 0, y[0] - h / 2, left)
        for j in range(N - 1):
            edge(j, j + 1, y[0] + (j + 0.5) * h)
        right = _spectral_rows(spec.W(y[-1] + h / 2), False)
        if right.shape[0]:
            edge(N - 1, None, y[-1] + h / 2, right)
    A = np.vstack(rows)
    A0 = np.vstack(free_rows)
    if not np.any(A.imag):
        A = A.real
    edge_pos = np.asarray(edge_pos)
    node_pos = np.repeat(y, p)
    D = _assemble(A)
    iota = np.concatenate([np.ones(A.shape[1]), -np.ones(A.shape[0])])
    return LatticeDirac(spec, A, A0, D, iota, np.concatenate([node_pos, edge_pos]), edge_pos, h)


def as_dirac(D):
    return D if isinstance(D, LatticeDirac) else build_dirac(D)


def respec(spec, N=None, R=None):
    """Same spec on a refined (or enlarged) grid."""
    g = spec.grid
    grid = FiberGrid(g.R if R is None else R, g.N if N is None else N, g.boundary)
    return LatticeDiracSpec(grid, spec.potential, spec.module, spec.scheme)


def _refinements(spec, refinements):
    out = []
    for r in refinements:
        if isinstance(r, (tuple, list)):
            out.append(respec(spec, N=int(r[1]), R=float(r[0])))
        else:
            out.append(respec(spec, N=int(r)))
    return out


# --- symbol / ellipticity ---------------------------------------------------------------

@dataclass
class EllipticityReport:
    ok: bool
    xi: np.ndarray
    symbol_sq: np.ndarray
    operator_sq: np.ndarray
    max_error: float
    min_nonzero: float


def check_ellipticity(spec_or_grid, tol=1e-9):
    """Compare the closed-form difference symbol with the periodic W = 0 operator.

    |symbol(xi)|^2 = (2/h)^2 sin^2(xi h / 2) over the first Brillouin zone;
    the operator side comes from the FFT of the circulant forward difference
    and from the eigenvalues of D^2.
    """
    grid = spec_or_grid.grid if isinstance(spec_or_grid, LatticeDiracSpec) else spec_or_grid
    N, h = grid.N, grid.h
    free = build_dirac(LatticeDiracSpec(FiberGrid(grid.R, N, "periodic")))
    k = np.fft.fftfreq(N) * N
    xi = 2 * np.pi * k / (N * h)
    sym = (2 / h) ** 2 * np.sin(xi * h / 2) ** 2
    col = free.A[:, 0]
    fft_sq = np.abs(np.fft.fft(col)) ** 2
    err = float(np.max(np.abs(np.sort(fft_sq) - np.sort(sym))))
    lam = eigvalsh(free.matrix @ free.matrix)
    op_sq = np.sort(lam)
    both = np.sort(np.concatenate([sym, sym]))
    err = max(err, float(np.max(np.abs(op_sq - both))))
    nz = sym[xi != 0]
    scale = (2 / h) ** 2
    ok = err <= tol * scale and bool(np.all(nz > 0))
    return EllipticityReport(ok, xi, sym, op_sq, err, float(nz.min()) if nz.size else np.inf)


# --- Garding ---------------------------------------------------------------------------

@dataclass
class GardingReport:
    c: float
    C: float
    ok: bool
    floor: float


def garding_constants(D, support_mask, sobolev=None, floor=1e-8):
    """Extremal generalized eigenvalues of (1 + D*D) against the discrete W^1 form,
    both restricted to the masked coordinates."""
    if isinstance(D, LatticeDirac):
        M = D.matrix
        S0 = D.free_matrix
    else:
        M = np.asarray(D)
        S0 = sobolev if sobolev is not None else np.zeros_like(M)
    mask = np.asarray(support_mask, dtype=bool)
    if not mask.any():
        raise ValueError("support mask is empty")
    n = M.shape[0]
    lhs = np.eye(n) + M.conj().T @ M
    rhs = np.eye(n) + S0.conj().T @ S0 if sobolev is None or isinstance(D, LatticeDirac) else sobolev
    a = lhs[np.ix_(mask, mask)]
    b = rhs[np.ix_(mask, mask)]
    lam = eigh((a + a.conj().T) / 2, (b + b.conj().T) / 2, eigvals_only=True)
    c, C = float(lam[0]), float(lam[-1])
    return GardingReport(c, C, c > floor, floor)


# --- compactness probes ----------------------------------------------------------------

def _eps(eps):
    return tuple(np.atleast_1d(eps).astype(float))


def rellich_operator(D, g):
    D = as_dirac(D)
    gv = D.multiplication(g)
    R = hermitian_function(D.matrix, lambda l: 1.0 / (l + 1j))
    return gv[:, None] * R


def rellich_probe(spec, g, refinements=(200, 400, 800), eps=(0.1,), tolerance=1):
    """Certificate for g (D + i)^{-1} across refinements.

    Integer refinements keep R fixed; (R, N) pairs give the joint-growth mode.
    """
    fams = []
    for s in _refinements(spec, refinements):
        fams.append([rellich_operator(build_dirac(s), g)])
    return compactness_certificate(fams, _eps(eps), list(refinements), tolerance)


@dataclass
class CommutatorReport:
    certificate: CompactnessCertificate
    quadrature_mismatch: list = field(default_factory=list)
    tol: float = 1e-5

    @property
    def ok(self):
        return all(m <= self.tol for m in self.quadrature_mismatch)


def commutator(D, g, f):
    D = as_dirac(D)
    gv = D.multiplication(g)
    fD = hermitian_function(D.matrix, f)
    return fD * gv[None, :] - gv[:, None] * fD


def commutator_quadrature_path(D, g, scheme=QuadratureScheme()):
    """[F, g] with F = P D, P = (2/pi) int_0^inf (D^2 + t^2 + 1)^{-1} dt."""
    D = as_dirac(D)
    M = D.matrix
    P, _ = inv_sqrt_matrix(np.eye(len(M)) + M @ M, scheme, c=1.0, check_bound=False)
    F = P @ M
    gv = D.multiplication(g)
    return F * gv[None, :] - gv[:, None] * F


def commutator_probe(spec, g, f=None, refinements=(200, 400), eps=(0.1, 0.05), tolerance=1,
                     cross_check=True, tol=1e-5):
    f = f if f is not None else bounded_transform_function()
    fams, mism = [], []
    for s in _refinements(spec, refinements):
        D = build_dirac(s)
        C = commutator(D, g, f)
        fams.append([C])
        if cross_check and getattr(f, "name", "") == bounded_transform_function().name:
            Q = commutator_quadrature_path(D, g)
            mism.append(float(np.linalg.norm(C - Q, 2)))
    cert = compactness_certificate(fams, _eps(eps), list(refinements), tolerance)
    rep = CommutatorReport(cert, mism, tol)
    if not rep.ok:
        raise ArithmeticError(f"quadrature path disagrees with direct commutator: {max(mism):.3e}")
    return rep


@dataclass
class CoercivityReport:
    ok: bool
    min_eigenvalue: float
    certificate: CompactnessCertificate = None


def coercivity_check(spec, h, refinements=None, eps=(0.1, 0.05), tol=1e-8, tolerance=1):
    """D^2 >= h as quadratic forms; on success, certificate for (D^2 + 1)^{-1}."""
    D = as_dirac(spec)
    spec = D.spec
    hv = D.multiplication(h)
    lam = eigvalsh(D.matrix @ D.matrix - np.diag(hv))[0]
    ok = bool(lam >= -tol)
    cert = None
    if ok:
        refs = refinements if refinements is not None else [spec.grid.N]
        fams = []
        for s in _refinements(spec, refs):
            M = build_dirac(s).matrix
            fams.append([hermitian_function(M, lambda l: 1.0 / (1.0 + l * l))])
        cert = compactness_certificate(fams, _eps(eps), list(refs), tolerance)
    return CoercivityReport(ok, float(lam), cert)


# --- invertibility at infinity ---------------------------------------------------------

def _k_mask(pos, K):
    if K is None:
        return np.zeros(len(pos), dtype=bool)
    if callable(K):
        return np.asarray(K(pos), dtype=bool)
    if np.ndim(K) == 0:
        return np.abs(pos) <= float(K)
    return np.asarray(K, dtype=bool)


def plateau_ramp(pos, Kmask, c, slope):
    """1.5c on K, decaying linearly with the given slope in the distance to K."""
    if not Kmask.any():
        return np.zeros(len(pos))
    kp = pos[Kmask]
    dist = np.min(np.abs(pos[:, None] - kp[None, :]), axis=1)
    return np.maximum(1.5 * c - slope * dist, 0.0)


@dataclass
class InfinityLevel:
    N: int
    off_k_min: float
    comm_norm: float
    slope: float
    ef_sq_min: float
    retries: int
    defect_svals: np.ndarray
    literal_svals: np.ndarray
    right_svals: np.ndarray


@dataclass
class InvertibilityReport:
    verdict: str                     # passed | not-applicable | failed
    c: float
    levels: list
    certificate: CompactnessCertificate = None
    right_certificate: CompactnessCertificate = None
    literal_certificate: CompactnessCertificate = None
    parametrix: np.ndarray = None    # G at the finest level
    messages: list = field(default_factory=list)

    @property
    def ok(self):
        return self.verdict == "passed"


def off_k_bound(D, K):
    D = as_dirac(D)
    Km = _k_mask(D.pos, K)
    off = ~Km
    if not off.any():
        return np.inf
    D2 = D.matrix @ D.matrix
    return float(eigvalsh(D2[np.ix_(off, off)])[0])


def invertibility_at_infinity(spec, K, c, refinements=None, eps=(0.1, 0.05), tol=1e-8,
                              tolerance=1, max_retries=6):
    """Doubled-operator construction: E = [[0, D], [D, 0]], g = [[0, -i f], [i f, 0]],
    E_f = E + g, F0 = bt(E), G = bt(E_f)^{-1}; the defect G^2 F0^2 - 1 is certified
    compact across refinements."""
    base = as_dirac(spec).spec
    refs = refinements if refinements is not None else [base.grid.N]
    bt = bounded_transform_function()
    levels, defects, literal, right, msgs = [], [], [], [], []
    G_last = None
    for s in _refinements(base, refs):
        D = build_dirac(s)
        M = D.matrix
        n = len(M)
        Km = _k_mask(D.pos, K)
        m = off_k_bound(D, Km)
        if m < c * c - tol:
            msgs.append(f"N={s.grid.N}: off-K lower bound {m:.6g} < c^2 = {c * c:.6g}")
            return InvertibilityReport("not-applicable", c, levels, messages=msgs)
        slope = 0.45 * c * c
        for retry in range(max_retries + 1):
            fv = plateau_ramp(D.pos, Km, c, slope)
            comm = float(np.linalg.norm(M * fv[None, :] - fv[:, None] * M, 2))
            Z = np.zeros_like(M)
            Fm = np.diag(fv)
            E = np.block([[Z, M], [M, Z]]).astype(complex)
            g = np.block([[Z, -1j * Fm], [1j * Fm, Z]])
            Ef = E + g
            ef_min = float(eigvalsh(Ef @ Ef)[0])
            if comm <= c * c / 2 and ef_min >= c * c / 2 - tol:
                break
            msgs.append(f"N={s.grid.N}: retry with slope {slope / 2:.4g} "
                        f"(commutator {comm:.4g}, E_f^2 min {ef_min:.4g})")
            slope /= 2
        else:
            return InvertibilityReport("failed", c, levels, messages=msgs)
        F0 = hermitian_function(E, bt)
        F1 = hermitian_function(Ef, bt)
        G = np.linalg.inv(F1)
        I = np.eye(2 * n)
        F0sq = F0 @ F0
        G2 = G @ G
        d_left = G2 @ F0sq - I
        d_right = F0sq @ G2 - I
        d_lit = F0 @ G2 @ F0 - F0
        sv = [svdvals(x) for x in (d_left, d_lit, d_right)]
        levels.append(InfinityLevel(s.grid.N, m, comm, slope, ef_min, retry, *sv))
        defects.append([d_left])
        literal.append([d_lit])
        right.append([d_right])
        G_last = G
    e = _eps(eps)
    return InvertibilityReport(
        "passed", c, levels,
        compactness_certificate(defects, e, refs, tolerance),
        compactness_certificate(right, e, refs, tolerance),
        compactness_certificate(literal, e, refs, tolerance),
        G_last, msgs)


# --- Bunke transform ---------------------------------------------------------------------

def dilated_support(pos, fv, factor=2.0):
    supp = np.abs(fv) > 0
    if not supp.any():
        return supp
    p = pos[supp]
    mid, half = (p.max() + p.min()) / 2, (p.max() - p.min()) / 2
    return np.abs(pos - mid) <= factor * max(half, 0.0) + 1e-12


def outside_mass(K, inside):
    """Fraction of squared Frobenius mass in rows or columns outside ``inside``."""
    m = np.abs(K) ** 2
    tot = m.sum()
    if tot == 0:
        return 0.0
    return float(1.0 - m[np.ix_(inside, inside)].sum() / tot)


@dataclass
class BunkeResult:
    F: np.ndarray
    min_spectrum: float
    skew: np.ndarray          # F - F*
    unitarity: np.ndarray     # F F* - 1
    mass_fractions: tuple
    quadrature: object


@dataclass
class BunkeReport:
    ok: bool
    levels: list
    skew_certificate: CompactnessCertificate
    unitarity_certificate: CompactnessCertificate
    max_mass_fraction: float
    mass_bound: float


def bunke_transform(D, f, c, tol=1e-9, dilation=2.0, scheme=QuadratureScheme()):
    """F = D (D^2 + f^2)^{-1/2} after certifying D^2 + f^2 >= c^2."""
    if isinstance(D, LatticeDirac) or isinstance(D, LatticeDiracSpec):
        D = as_dirac(D)
        M, pos = D.matrix, D.pos
        fv = D.multiplication(f) if callable(f) else np.asarray(f, dtype=float)
    else:
        M = np.asarray(D)
        pos = np.arange(len(M), dtype=float)
        fv = np.asarray(f(pos) if callable(f) else f, dtype=float) * np.ones(len(M))
    L = M.conj().T @ M + np.diag(fv ** 2)
    lmin = float(eigvalsh((L + L.conj().T) / 2)[0]) if L.size else np.inf
    if lmin < c * c - tol:
        raise ValueError(f"positivity hypothesis fails: min spec(D^2 + f^2) = {lmin:.6g} < {c * c:.6g}")
    S, rep = inv_sqrt_matrix(L, scheme, c=lmin)
    F = M @ S
    K1 = F - F.conj().T
    K2 = F @ F.conj().T - np.eye(len(F))
    inside = dilated_support(pos, fv, dilation)
    fr = (outside_mass(K1, inside), outside_mass(K2, inside)) if inside.any() else (0.0, 0.0)
    return BunkeResult(F, lmin, K1, K2, fr, rep)


def bunke_certificates(spec, f, c, refinements=(200, 400), eps=(0.1, 0.05), tolerance=1,
                       mass_bound=0.05):
    levels, k1, k2 = [], [], []
    for s in _refinements(spec, refinements):
        r = bunke_transform(build_dirac(s), f, c)
        levels.append(r)
        k1.append([r.skew])
        k2.append([r.unitarity])
    e = _eps(eps)
    c1 = compactness_certificate(k1, e, list(refinements), tolerance)
    c2 = compactness_certificate(k2, e, list(refinements), tolerance)
    worst = max(max(r.mass_fractions) for r in levels)
    ok = c1.uniform and c2.uniform and worst <= mass_bound
    return BunkeReport(bool(ok), levels, c1, c2, float(worst), mass_bound)


# --- index ---------------------------------------------------------------------------------

@dataclass
class KernelIndexReport:
    index: int = None
    verdict: str = "determined"        # determined | indeterminate
    dim_ker_A: int = 0
    dim_ker_Astar: int = 0
    threshold: float = KERNEL_THRESHOLD
    next_singular_value: float = np.inf
    gap_ratio: float = np.inf
    kernel_singular_values: np.ndarray = None
    singular_values: np.ndarray = None
    candidates: tuple = ()
    kernel_vectors: np.ndarray = None   # columns spanning ker A
    cokernel_vectors: np.ndarray = None  # columns spanning ker A*

    @property
    def determined(self):
        return self.verdict == "determined"


def _padded_svd(A, full_dim):
    """Singular values of A viewed on C^{full_dim}, padded with exact zeros."""
    if A.size == 0:
        return np.zeros(full_dim), np.eye(full_dim)
    U, s, Vh = np.linalg.svd(A, full_matrices=True)
    pad = np.zeros(full_dim)
    pad[:len(s)] = s
    return pad, Vh.conj().T


def kernel_index(A, theta=KERNEL_THRESHOLD, gap_ratio=GAP_RATIO):
    """index = dim ker A - dim ker A* by thresholding singular values."""
    A = np.asarray(A)
    M, N = A.shape
    sA, V = _padded_svd(A, N)
    sB, U = _padded_svd(A.conj().T, M)
    allv = np.concatenate([sA, sB])
    below = allv[allv < theta]
    above = allv[allv >= theta]
    nxt = float(above.min()) if above.size else np.inf
    ratio = nxt / theta
    kA = int(np.sum(sA < theta))
    kB = int(np.sum(sB < theta))
    order_A = np.argsort(sA)
    order_B = np.argsort(sB)
    rep = KernelIndexReport(kA - kB, "determined", kA, kB, theta, nxt, ratio,
                            np.sort(below), np.sort(sA), (),
                            V[:, order_A[:kA]], U[:, order_B[:kB]])
    if ratio < gap_ratio:
        cut = nxt * (1 + 1e-9)
        alt = int(np.sum(sA <= cut)) - int(np.sum(sB <= cut))
        rep.verdict = "indeterminate"
        rep.candidates = (kA - kB, alt)
        rep.index = None
    return rep


def index(D, iota=None, theta=KERNEL_THRESHOLD, gap_ratio=GAP_RATIO):
    """Graded kernel trace Tr(iota | ker D) for D odd with respect to iota."""
    if isinstance(D, (LatticeDirac, LatticeDiracSpec)):
        D = as_dirac(D)
        return kernel_index(D.A, theta, gap_ratio)
    M = np.asarray(D)
    s = np.asarray(iota)
    even, odd = s > 0, s < 0
    if np.linalg.norm(M[np.ix_(even, even)]) + np.linalg.norm(M[np.ix_(odd, odd)]) > 1e-10 * (1 + np.linalg.norm(M)):
        raise ValueError("operator is not odd with respect to the grading")
    return kernel_index(M[np.ix_(odd, even)], theta, gap_ratio)


def kernel_profile_error(D, rep, profile):
    """Sup-norm distance between the kernel vector and a profile, both peak-normalized."""
    D = as_dirac(D)
    if rep.kernel_vectors is None or rep.kernel_vectors.shape[1] != 1:
        raise ValueError("needs a one-dimensional kernel of A")
    v = rep.kernel_vectors[:, 0]
    v = v / v[np.argmax(np.abs(v))]
    y = D.pos[:D.n_nodes]
    g = profile(y)
    g = g / g[np.argmax(np.abs(g))]
    return float(np.max(np.abs(v - g)))


def kernel_centroid(D, rep):
    D = as_dirac(D)
    if rep.dim_ker_A >= 1:
        v, y = rep.kernel_vectors[:, 0], D.pos[:D.n_nodes]
    elif rep.dim_ker_Astar >= 1:
        v, y = rep.cokernel_vectors[:, 0], D.edge_pos
    else:
        return np.nan
    w = np.abs(v) ** 2
    return float(np.sum(w * y) / np.sum(w))


# --- families ------------------------------------------------------------------------------

def sqrt_coercive(y):
    return np.sqrt(1.0 + np.asarray(y, dtype=float) ** 2)


@dataclass
class DiracFamilySpec:
    base: BaseComplex
    grid: FiberGrid
    potential: object                # callable x -> (callable y -> W), or tokens with [p0, p1] params
    coercive: object = sqrt_coercive
    K_radius: float = None           # default R / 2
    c: float = 1.0

    def __post_init__(self):
        if not callable(self.potential):
            self.potential = family_potential_from_tokens(self.potential)
        if self.K_radius is None:
            self.K_radius = self.grid.R / 2

    def spec_at(self, i):
        x = float(np.atleast_1d(self.base.coords[i])[0])
        return LatticeDiracSpec(self.grid, self.potential(x))


@dataclass
class FamilySweepReport:
    xs: np.ndarray
    indices: list
    reports: list
    centroids: np.ndarray
    family_validation: object
    fredholm: object
    commutator_norms: np.ndarray
    off_k_bounds: np.ndarray
    failing_points: list
    shapes: list

    @property
    def index_constant(self):
        return all(r.determined for r in self.reports) and len(set(self.indices)) == 1

    @property
    def centroid_monotone(self):
        d = np.diff(self.centroids)
        return bool(np.all(d > 0) or np.all(d < 0))

    @property
    def completeness_bound(self):
        return float(np.max(self.commutator_norms))

    @property
    def ok(self):
        return (self.family_validation.ok and not self.failing_points and self.index_constant
                and self.fredholm is not None and self.fredholm.fredholm)


def family_sweep(fspec, fredholm_max_rank=8):
    base = fspec.base
    xs = np.array([float(np.atleast_1d(c)[0]) for c in base.coords])
    ops, reps, cents, comms, offk, shapes = [], [], [], [], [], []
    bt = bounded_transform_function()
    for i in range(base.size):
        D = build_dirac(fspec.spec_at(i))
        shapes.append(D.A.shape)
        r = kernel_index(D.A)
        reps.append(r)
        cents.append(kernel_centroid(D, r))
        fv = D.multiplication(fspec.coercive)
        M = D.matrix
        comms.append(float(np.linalg.norm(M * fv[None, :] - fv[:, None] * M, 2)))
        offk.append(off_k_bound(D, fspec.K_radius))
        ops.append(hermitian_function(M, bt))
    fam = family_from_matrices(base, ops)
    val = validate_family(fam)
    fred = None
    if len({s for s in shapes}) == 1:
        fred = fredholm_certificate(fam, max_rank=fredholm_max_rank)
    failing = [i for i in range(base.size) if offk[i] < fspec.c ** 2 - 1e-8]
    return FamilySweepReport(xs, [r.index for r in reps], reps, np.array(cents), val, fred,
                             np.array(comms), np.array(offk), failing, shapes)


def harmonic_oscillator(R=10.0, N=400, sign=1):
    return LatticeDiracSpec(FiberGrid(R, N), lambda y: sign * np.asarray(y, dtype=float))
