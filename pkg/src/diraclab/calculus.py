"""Spectral calculus for self-adjoint module operators.

Everything is computed in the regular localization (a faithful
*-representation) and reconstructed as a matrix over the algebra.
Matrix-level helpers (``hermitian_function``, ``inv_sqrt_matrix``) are
used directly by the lattice code, where the algebra is C.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .hilmod import ModuleOperator, localize_operator

SELFADJOINT_TOL = 1e-9
ALINEAR_TOL = 1e-8


@dataclass(frozen=True)
class ScalarFunction:
    fn: object
    kind: str = "has-limits"        # vanishes-at-infinity | has-limits | polynomial-bounded
    parity: str = None              # even | odd | None
    real_valued: bool = True
    name: str = ""

    def __call__(self, t):
        return np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=complex)

    def __mul__(self, other):
        kinds = {self.kind, other.kind}
        if "polynomial-bounded" in kinds:
            kind = "polynomial-bounded"
        elif "vanishes-at-infinity" in kinds:
            kind = "vanishes-at-infinity"
        else:
            kind = "has-limits"
        par = None
        if self.parity and other.parity:
            par = "even" if self.parity == other.parity else "odd"
        f, g = self.fn, other.fn
        return ScalarFunction(lambda t: np.asarray(f(t)) * np.asarray(g(t)), kind, par,
                              self.real_valued and other.real_valued,
                              f"({self.name})*({other.name})")

    def spot_check(self, rng=None, tol=1e-2):
        """Check the declared class, parity and reality at sample points."""
        issues = []
        big = np.array([1e3, 1e4, 1e5, 1e6])
        vals = np.concatenate([self(big), self(-big)])
        if not np.all(np.isfinite(vals)):
            issues.append("non-finite values at large |t|")
        elif self.kind == "vanishes-at-infinity":
            if np.max(np.abs(vals[[3, 7]])) > tol:
                issues.append("does not vanish at infinity")
        elif self.kind == "has-limits":
            for side in (self(big), self(-big)):
                if abs(side[3] - side[2]) > tol * (1 + abs(side[3])):
                    issues.append("no limit at infinity")
                    break
        rng = rng or np.random.default_rng(0)
        t = rng.uniform(-20, 20, 32)
        if self.parity == "odd" and np.max(np.abs(self(-t) + self(t))) > 1e-12 * (1 + np.max(np.abs(self(t)))):
            issues.append("declared odd but f(-t) != -f(t)")
        if self.parity == "even" and np.max(np.abs(self(-t) - self(t))) > 1e-12 * (1 + np.max(np.abs(self(t)))):
            issues.append("declared even but f(-t) != f(t)")
        if self.real_valued and np.max(np.abs(self(t).imag)) > 1e-14 * (1 + np.max(np.abs(self(t)))):
            issues.append("declared real but takes complex values")
        return issues


def bounded_transform_function():
    return ScalarFunction(lambda t: t / np.sqrt(1 + t * t), "has-limits", "odd", True, "t/sqrt(1+t^2)")


def resolvent_function(lam):
    lam = complex(lam)
    return ScalarFunction(lambda t: 1.0 / (t - lam), "vanishes-at-infinity", None,
                          False, f"1/(t-({lam}))")


def polynomial(coeffs):
    """sum_k coeffs[k] t^k."""
    c = np.asarray(coeffs)
    deg = len(c) - 1
    par = None
    if np.all(c[1::2] == 0):
        par = "even"
    elif np.all(c[0::2] == 0):
        par = "odd"
    kind = "has-limits" if deg == 0 else "polynomial-bounded"
    return ScalarFunction(lambda t: np.polynomial.polynomial.polyval(t, c), kind, par,
                          bool(np.all(np.isreal(c))), f"poly{list(c)}")


# --- matrix level -------------------------------------------------------------

def hermitian_function(M, f, return_spectrum=False):
    """f(M) for a Hermitian matrix by eigendecomposition."""
    w, U = np.linalg.eigh(M)
    vals = np.asarray(f(w))
    if np.iscomplexobj(vals) and not np.any(vals.imag):
        vals = vals.real
    out = (U * vals) @ U.conj().T
    if return_spectrum:
        return out, w, U
    return out


def selfadjoint_defect(M):
    return float(np.linalg.norm(M - M.conj().T, 2))


def certify_selfadjoint(M, tol=SELFADJOINT_TOL):
    nrm = np.linalg.norm(M, 2) if M.size else 0.0
    return selfadjoint_defect(M) <= tol * (1 + nrm)


@dataclass
class SpectralData:
    operator: object
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    certified_selfadjoint: bool
    tol: float
    reconstruction_error: float = 0.0


def spectral_data(D, tol=SELFADJOINT_TOL):
    M = D.localized if isinstance(D, ModuleOperator) else np.asarray(D)
    ok = certify_selfadjoint(M, tol)
    if not ok:
        raise ValueError("operator is not self-adjoint within tolerance")
    w, U = np.linalg.eigh((M + M.conj().T) / 2)
    err = float(np.linalg.norm(M - (U * w) @ U.conj().T, 2)) if M.size else 0.0
    return SpectralData(D, w, U, ok, tol, err)


def spectrum(D):
    return spectral_data(D).eigenvalues


def spectral_gap(D, c):
    """True iff no eigenvalue lies in (-c, c)."""
    w = spectrum(D)
    return not np.any(np.abs(w) < c)


def reconstruct(module, M, tol=ALINEAR_TOL, check=True):
    """Matrix over A from its regular localization; certifies A-linearity."""
    A, n = module.algebra, module.rank
    d = A.dim
    scale = max(1.0, float(np.linalg.norm(M, 2))) if M.size else 1.0
    if check:
        eye = np.eye(n)
        for g in A.generators:
            R = np.kron(eye, A.right_regular(np.eye(d)[g]))
            if np.linalg.norm(M @ R - R @ M, 2) > tol * scale:
                raise ValueError("result does not commute with the right action (A-linearity broken)")
    M4 = M.reshape(n, d, n, d)
    entries = np.einsum("iajb,b->ija", M4, A.unit.astype(complex))
    T = ModuleOperator(module, entries)
    if check:
        resid = np.linalg.norm(localize_operator(T) - M, 2) if M.size else 0.0
        if resid > tol * scale:
            raise ValueError(f"reconstruction residual {resid:.3e} exceeds tolerance")
    return T


def apply_function(D, f, spectral=None, tol=ALINEAR_TOL):
    """f(D) for self-adjoint D over A."""
    sd = spectral if spectral is not None else spectral_data(D)
    U, w = sd.eigenvectors, sd.eigenvalues
    M = (U * f(w)) @ U.conj().T
    T = reconstruct(D.module, M, tol)
    parity = None
    if getattr(f, "parity", None) and D.module.grading is not None and D.parity:
        if D.parity == "odd":
            parity = f.parity
        elif D.parity == "even":
            parity = "even"
    reality = "real" if (getattr(f, "real_valued", False) and D.reality == "real") else None
    return ModuleOperator(D.module, T.entries, parity=parity, reality=reality)


def bounded_transform(D, spectral=None):
    return apply_function(D, bounded_transform_function(), spectral)


def resolvent(D, lam, spectral=None, spectrum_tol=1e-9):
    """(D - lam)^{-1} with the bound ||R|| <= 1/|Im lam| certified."""
    lam = complex(lam)
    sd = spectral if spectral is not None else spectral_data(D)
    dist = float(np.min(np.abs(sd.eigenvalues - lam))) if sd.eigenvalues.size else np.inf
    if lam.imag == 0 and dist <= spectrum_tol:
        raise ValueError("lambda is real and lies in the spectrum")
    R = apply_function(D, resolvent_function(lam), sd)
    bound = 1.0 / abs(lam.imag) if lam.imag != 0 else 1.0 / dist
    if R.norm() > bound * (1 + 1e-9) + 1e-12:
        raise ArithmeticError("resolvent norm bound violated")
    return R


# --- inverse square root by quadrature -------------------------------------------

@dataclass(frozen=True)
class QuadratureScheme:
    """Composite Gauss-Legendre in theta after t = tan(theta)."""
    n_nodes: int = 200
    panels: int = 20
    bound_samples: int = 20

    def nodes(self):
        per = self.n_nodes // self.panels
        x, w = np.polynomial.legendre.leggauss(per)
        edges = np.linspace(0.0, np.pi / 2, self.panels + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        th = (hi - lo) / 2 * x + (hi + lo) / 2
        wt = (hi - lo) / 2 * w
        return th.ravel(), wt.ravel()


@dataclass
class QuadratureReport:
    lower_bound: float
    bound_t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bound_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bound_limits: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bound_ok: bool = True

    @property
    def worst_slack(self):
        if self.bound_t.size == 0:
            return 0.0
        return float(np.max(self.bound_norms - self.bound_limits))


def _spd_inverse(X):
    c, low = sla.cho_factor(X, lower=True, check_finite=False)
    return sla.cho_solve((c, low), np.eye(X.shape[0], dtype=X.dtype), check_finite=False)


def inv_sqrt_matrix(L, scheme=QuadratureScheme(), c=None, check_bound=True, slack=1e-9):
    """L^{-1/2} = (2/pi) int_0^inf (L + t^2)^{-1} dt for a positive matrix L."""
    L = np.asarray(L)
    if np.iscomplexobj(L) and not np.any(L.imag):
        L = L.real
    L = (L + L.conj().T) / 2
    if c is None:
        c = float(np.linalg.eigvalsh(L)[0]) if L.size else 1.0
    if c <= 0:
        raise ValueError(f"operator is not strictly positive (min spectrum {c:.3e})")
    n = L.shape[0]
    eye = np.eye(n)
    th, wt = scheme.nodes()
    acc = np.zeros_like(L)
    for t, w in zip(th, wt):
        ct, st = np.cos(t) ** 2, np.sin(t) ** 2
        acc += w * _spd_inverse(ct * L + st * eye)
    out = (2 / np.pi) * acc
    rep = QuadratureReport(c)
    if check_bound and scheme.bound_samples:
        ts = np.geomspace(1e-3, 1e3, scheme.bound_samples)
        norms = np.array([np.linalg.norm(_spd_inverse(L + t * eye), 2) for t in ts])
        limits = 1.0 / (ts + c)
        rep = QuadratureReport(c, ts, norms, limits, bool(np.all(norms <= limits + slack)))
    return out, rep


def inv_sqrt_quadrature(L, scheme=QuadratureScheme(), c=None):
    """Module-level version; returns (L^{-1/2}, QuadratureReport)."""
    M = L.localized
    if not certify_selfadjoint(M):
        raise ValueError("operator is not self-adjoint within tolerance")
    out, rep = inv_sqrt_matrix(M, scheme, c)
    return reconstruct(L.module, out.astype(complex)), rep
