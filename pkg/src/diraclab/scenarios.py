"""Scenario catalog: named experiments with parameter schemas.

Each runner takes a resolved parameter dict and a context (seed, tolerance
scale) and returns (verdicts, results, tables).  Verdicts are booleans,
results are JSON-able, tables are CSV strings.
"""

from dataclasses import dataclass, field
import os

import numpy as np

from . import ktheory as kt
from .algebra import CliffordSignature, clifford_algebra
from .calculus import (apply_function, bounded_transform_function, inv_sqrt_quadrature,
                       polynomial, resolvent_function, ScalarFunction, spectrum)
from .dirac import (DiracFamilySpec, FiberGrid, LatticeDiracSpec, bump, bunke_certificates,
                    build_dirac, index as lattice_index, invertibility_at_infinity,
                    kernel_profile_error, rellich_probe)
from .fields import compact_counterexample, extend_by_zero, interval, jump_family
from .hilmod import ModuleOperator, free_module


class InputError(ValueError):
    """Malformed scenario; ``location`` names the offending key."""

    def __init__(self, msg, location=""):
        super().__init__(f"{location}: {msg}" if location else msg)
        self.msg, self.location = msg, location

    def within(self, prefix):
        return InputError(self.msg, f"{prefix}:{self.location}" if self.location else prefix)


@dataclass
class Context:
    seed: int = 0
    tol_scale: float = 1.0

    def tol(self, value):
        return float(value) * self.tol_scale

    def rng(self, salt=0):
        return np.random.default_rng([self.seed, salt])


@dataclass
class Kind:
    name: str
    doc: str
    schema: dict           # param -> (type name, default, description)
    runner: object
    sample: dict = field(default_factory=dict)


# --- parameter handling -------------------------------------------------------------------

_TYPES = {"int": int, "float": (int, float), "str": str, "bool": bool, "list": list,
          "dict": dict, "tokens": (list, dict), "any": object}


def resolve_params(kind, params):
    params = dict(params or {})
    unknown = sorted(set(params) - set(kind.schema))
    if unknown:
        raise InputError(f"unknown parameter {unknown[0]!r}", f"params.{unknown[0]}")
    out = {}
    for name, (tname, default, _) in kind.schema.items():
        v = params.get(name, default)
        if v is not None and not isinstance(v, _TYPES[tname]):
            raise InputError(f"expected {tname}, got {type(v).__name__}", f"params.{name}")
        if tname == "int" and isinstance(v, bool):
            raise InputError("expected int, got bool", f"params.{name}")
        out[name] = v
    return out


def _grid(R, N, where="params.N"):
    try:
        return FiberGrid(float(R), int(N))
    except ValueError as e:
        raise InputError(str(e), where)


def _check_refinements(refs, where="params.refinements"):
    if not refs:
        raise InputError("refinement list is empty", where)
    for r in refs:
        N = r[1] if isinstance(r, (list, tuple)) else r
        R = r[0] if isinstance(r, (list, tuple)) else 1.0
        _grid(R, N, where)
    return [tuple(r) if isinstance(r, list) else int(r) for r in refs]


def _tokens(tok, where="params.potential"):
    from .dirac import potential_from_tokens
    try:
        f = potential_from_tokens(tok)
        f(np.zeros(2))
        return tok
    except (ValueError, KeyError, TypeError) as e:
        raise InputError(str(e), where)


# --- runners ----------------------------------------------------------------------------------

def run_clifford_selfcheck(P, ctx):
    if P["p"] is not None or P["q"] is not None:
        try:
            sigs = [CliffordSignature(int(P["p"] or 0), int(P["q"] or 0))]
        except ValueError as e:
            raise InputError(str(e), "params.p")
    else:
        sigs = [CliffordSignature(p, n - p) for n in range(P["max_n"] + 1) for p in range(n + 1)]
    prod_err, cstar_err = 0.0, 0.0
    rows = ["p,q,product_error,cstar_error"]
    rng = ctx.rng(1)
    for s in sigs:
        A = clifford_algebra(s)
        R = A.faithful_rep
        d = A.dim
        lhs = np.einsum("aij,bjk->abik", R, R)
        rhs = A.coef[:, :, None, None] * R[A.index]
        pe = float(np.max(np.abs(lhs - rhs)))
        ce = 0.0
        for _ in range(P["n_random"]):
            x = A.random(rng)
            ce = max(ce, abs((x.star() * x).norm() - x.norm() ** 2))
        prod_err, cstar_err = max(prod_err, pe), max(cstar_err, ce)
        rows.append(f"{s.p},{s.q},{pe:.17g},{ce:.17g}")
    verdicts = {"product_oracle": prod_err <= ctx.tol(P["product_tol"]),
                "cstar_identity": cstar_err <= ctx.tol(P["cstar_tol"])}
    return verdicts, {"signatures": len(sigs), "product_error": prod_err,
                      "cstar_error": cstar_err}, {"clifford": "\n".join(rows) + "\n"}


def funcalc_items(D, J, tol, rng):
    """Errors for the functional-calculus items on one self-adjoint, odd, Real D."""
    M = D.module
    I = M.identity()
    bt = bounded_transform_function()
    err = {}
    Rp = apply_function(D, resolvent_function(-1j))
    Rm = apply_function(D, resolvent_function(1j))
    err["1_resolvent"] = max((Rp @ (D + I * 1j) - I).norm(), (Rm @ (D - I * 1j) - I).norm())
    w = spectrum(D)
    F = apply_function(D, bt)
    err["2_norm_bound"] = max(F.norm() - 1.0, 0.0)
    u = M.random_element(rng)
    ref = F @ u
    dists = []
    for n in (1, 4, 16, 64, 256):
        fn = ScalarFunction(lambda t, n=n: t / np.sqrt(1 + t * t + 1.0 / n), "has-limits", "odd")
        dists.append((apply_function(D, fn) @ u - ref).norm())
    mono = all(b <= a + tol for a, b in zip(dists, dists[1:]))
    err["3_convergence"] = 0.0 if (mono and dists[-1] < 1e-2 * max(dists[0], 1e-300) + tol) else 1.0
    g = ScalarFunction(lambda t: 1 / np.sqrt(1 + t * t), "vanishes-at-infinity", "even")
    err["4_D_times_f"] = (D @ apply_function(D, g) - F).norm()
    sq = apply_function(D, polynomial([0, 0, 1]))
    err["5_spectral_mapping"] = float(np.max(np.abs(np.sort(spectrum(sq)) - np.sort(w ** 2))))
    err["6_norm_equals_sup"] = abs(F.norm() - float(np.max(np.abs(bt(w)))))
    err["7_odd_anticommutes"] = (F @ J + J @ F).norm()
    err["7_real"] = 0.0 if F.check_reality(tol) else 1.0
    f1, f2 = polynomial([1, 2, 0, -1]), polynomial([0.5, 0, 1])
    err["star_hom"] = (apply_function(D, f1 * f2) - apply_function(D, f1) @ apply_function(D, f2)).norm() / (
        1 + apply_function(D, f1 * f2).norm())
    return err


def random_odd_real_selfadjoint(module, J, rng):
    n, d = module.rank, module.algebra.dim
    T = ModuleOperator(module, rng.standard_normal((n, n, d)).astype(complex))
    T = 0.5 * (T + T.adjoint())
    T = 0.5 * (T - J @ T @ J)
    return ModuleOperator(module, T.entries, parity="odd", reality="real")


def run_funcalc_verify(P, ctx):
    try:
        A = clifford_algebra(P["p"], P["q"])
    except ValueError as e:
        raise InputError(str(e), "params.p")
    if P["rank"] < 2:
        raise InputError("rank must be at least 2 (graded module)", "params.rank")
    n = P["rank"]
    grading = np.array([1 if i % 2 == 0 else -1 for i in range(n)])
    M = free_module(A, n, grading)
    J = ModuleOperator(M, M.grading)
    rng = ctx.rng(2)
    tol = ctx.tol(P["tol"])
    worst = {}
    for _ in range(P["n_ops"]):
        D = random_odd_real_selfadjoint(M, J, rng)
        for k, v in funcalc_items(D, J, tol, rng).items():
            worst[k] = max(worst.get(k, 0.0), float(v))
    verdicts = {k: v <= tol for k, v in worst.items()}
    return verdicts, {"max_errors": worst}, {}


def run_inv_sqrt(P, ctx):
    rng = ctx.rng(3)
    lo, hi = P["spectrum"]
    if not 0 < lo < hi:
        raise InputError("spectrum interval must satisfy 0 < lo < hi", "params.spectrum")
    A = clifford_algebra(0, 0)
    M = free_module(A, P["size"])
    worst, slack_ok = 0.0, True
    for _ in range(P["n_ops"]):
        Q, _ = np.linalg.qr(rng.standard_normal((P["size"], P["size"])) +
                            1j * rng.standard_normal((P["size"], P["size"])))
        lam = rng.uniform(lo, hi, P["size"])
        lam[0], lam[-1] = lo, hi
        L = M.scalar_operator((Q * lam) @ Q.conj().T)
        S, rep = inv_sqrt_quadrature(L)
        oracle = (Q / np.sqrt(lam)) @ Q.conj().T
        worst = max(worst, float(np.max(np.abs(S.localized - oracle))))
        slack_ok &= bool(rep.bound_ok) and len(rep.bound_t) == 20
    return ({"quadrature": worst <= ctx.tol(P["tol"]), "resolvent_bound": slack_ok},
            {"max_error": worst}, {})


def _profile(name):
    if name is None:
        return None
    if name == "gaussian":
        return lambda y: np.exp(-y * y / 2)
    raise InputError(f"unknown profile {name!r}", "params.profile")


def run_dirac_index(P, ctx):
    grid = _grid(P["R"], P["N"])
    spec = LatticeDiracSpec(grid, _tokens(P["potential"]))
    prof = _profile(P["profile"])
    D = build_dirac(spec)
    rep = lattice_index(D, theta=P["theta"])
    verdicts = {"determined": rep.determined,
                "gap_ratio": bool(rep.gap_ratio >= P["min_gap_ratio"])}
    res = {"index": rep.index, "dim_ker_A": rep.dim_ker_A, "dim_ker_Astar": rep.dim_ker_Astar,
           "next_singular_value": rep.next_singular_value, "gap_ratio": rep.gap_ratio,
           "kernel_singular_values": rep.kernel_singular_values.tolist(),
           "candidates": list(rep.candidates)}
    if P["expect_index"] is not None:
        verdicts["index"] = rep.index == P["expect_index"]
    if prof is not None and rep.dim_ker_A == 1:
        e = kernel_profile_error(D, rep, prof)
        res["profile_error"] = e
        verdicts["profile"] = e <= ctx.tol(P["profile_tol"])
    if rep.index == 0 and rep.dim_ker_A == 0 and rep.dim_ker_Astar == 0:
        smin = float(np.linalg.svd(D.A, compute_uv=False).min())
        res["min_singular_value"] = smin
        res["invertible"] = bool(D.A.shape[0] == D.A.shape[1] and smin >= P["theta"] * P["min_gap_ratio"])
        if P["expect_index"] == 0:
            verdicts["certified_invertible"] = res["invertible"]
    table = "k,singular_value\n" + "".join(f"{k},{s:.17g}\n" for k, s in enumerate(rep.singular_values))
    return verdicts, res, {"singular_values": table}


def run_rellich(P, ctx):
    refs = _check_refinements(P["refinements"])
    spec = LatticeDiracSpec(_grid(P["R"], 200), _tokens(P["potential"]))
    g = lambda y: bump(y, 0.0, P["width"])
    cert = rellich_probe(spec, g, refs, P["eps"], P["rank_tolerance"])
    verdicts = {"uniform": cert.uniform}
    res = {"certificate": cert.summary()}
    tables = {"rellich": cert.csv_text()}
    if P["contrast"]:
        crefs = _check_refinements(P["contrast"], "params.contrast")
        cc = rellich_probe(spec, lambda y: 1.0 + 0.0 * y, crefs, P["eps"][:1], P["rank_tolerance"])
        growth = int(cc.ranks[-1, 0] - cc.ranks[0, 0])
        verdicts["contrast_growth"] = growth >= P["min_growth"]
        res["contrast"] = cc.summary()
        res["contrast_growth"] = growth
        tables["contrast"] = cc.csv_text()
    return verdicts, res, tables


def run_invertibility(P, ctx):
    refs = _check_refinements(P["refinements"])
    spec = LatticeDiracSpec(_grid(P["R"], 200), _tokens(P["potential"]))
    c = float(P["c"])
    if c <= 0:
        raise InputError("c must be positive", "params.c")
    rep = invertibility_at_infinity(spec, P["K_radius"], c, refs, P["eps"], ctx.tol(1e-8),
                                    P["rank_tolerance"])
    verdicts = {"applicable": rep.verdict != "not-applicable"}
    res = {"verdict": rep.verdict, "messages": rep.messages}
    tables = {}
    if rep.ok:
        efmin = min(l.ef_sq_min for l in rep.levels)
        verdicts["ef_square"] = efmin >= c * c / 2 - ctx.tol(1e-8)
        certs = {"left": rep.certificate, "right": rep.right_certificate,
                 "literal": rep.literal_certificate}
        for name in P["certify"]:
            if name not in certs:
                raise InputError(f"unknown defect {name!r} (left | right | literal)", "params.certify")
            verdicts[f"{name}_defect_uniform"] = certs[name].uniform
        res.update({"ef_square_min": efmin,
                    "off_k_min": [l.off_k_min for l in rep.levels],
                    "commutator_norm": [l.comm_norm for l in rep.levels],
                    "defect": rep.certificate.summary(),
                    "right_defect": rep.right_certificate.summary(),
                    "literal_defect": rep.literal_certificate.summary()})
        tables = {"defect": rep.certificate.csv_text(),
                  "right_defect": rep.right_certificate.csv_text(),
                  "literal_defect": rep.literal_certificate.csv_text()}
    if P["expect"] == "not-applicable":
        verdicts = {"not_applicable": rep.verdict == "not-applicable"}
    return verdicts, res, tables


def run_bunke(P, ctx):
    refs = _check_refinements(P["refinements"])
    spec = LatticeDiracSpec(_grid(P["R"], 200), _tokens(P["potential"]))
    f = lambda y: P["amplitude"] * bump(y, 0.0, P["width"])
    try:
        rep = bunke_certificates(spec, f, P["c"], refs, P["eps"], P["rank_tolerance"], P["mass_bound"])
    except ValueError as e:
        return {"positivity": False}, {"error": str(e)}, {}
    lower = min(r.min_spectrum for r in rep.levels)
    verdicts = {"positivity": lower >= P["c"] ** 2 - ctx.tol(1e-9), "skew_uniform": rep.skew_certificate.uniform,
                "unitarity_uniform": rep.unitarity_certificate.uniform,
                "mass": rep.max_mass_fraction <= P["mass_bound"]}
    res = {"min_spectrum": [r.min_spectrum for r in rep.levels],
           "mass_fraction": rep.max_mass_fraction,
           "skew": rep.skew_certificate.summary(), "unitarity": rep.unitarity_certificate.summary()}
    return verdicts, res, {"skew": rep.skew_certificate.csv_text(),
                           "unitarity": rep.unitarity_certificate.csv_text()}


def run_family_sweep(P, ctx):
    from .dirac import family_sweep
    grid = _grid(P["R"], P["N"])
    if P["base_points"] < 2:
        raise InputError("need at least two base points", "params.base_points")
    fs = DiracFamilySpec(interval(0.0, 1.0, P["base_points"]), grid, P["potential"],
                         K_radius=P["K_radius"], c=P["c"])
    r = family_sweep(fs)
    res = {"x": r.xs.tolist(), "index": r.indices, "centroid": r.centroids.tolist(),
           "off_k_bound": r.off_k_bounds.tolist(), "failing_points": r.failing_points,
           "completeness_bound": r.completeness_bound,
           "family_validation": bool(r.family_validation.ok),
           "fredholm": None if r.fredholm is None else bool(r.fredholm.fredholm)}
    if P["expect"] == "constant-index":
        verdicts = {"family_valid": bool(r.family_validation.ok), "index_constant": r.index_constant,
                    "index_value": r.indices[0] == P["expect_index"],
                    "centroid_monotone": r.centroid_monotone,
                    "fredholm": r.fredholm is not None and r.fredholm.fredholm,
                    "no_failures": not r.failing_points}
    else:
        f = r.failing_points
        half = int(np.argmin(np.abs(r.xs - 0.5)))
        far = [i for i in range(len(r.xs)) if abs(r.xs[i] - 0.5) >= 0.25]
        verdicts = {"failure_reported": bool(f),
                    "contiguous": bool(f) and f == list(range(f[0], f[-1] + 1)),
                    "contains_half": half in f,
                    "argmin_at_half": int(np.argmin(r.off_k_bounds)) == half,
                    "far_points_pass": not (set(far) & set(f))}
    table = "x,index,centroid,off_k_bound\n" + "".join(
        f"{x:.17g},{i},{c:.17g},{o:.17g}\n" for x, i, c, o in
        zip(r.xs, r.indices, r.centroids, r.off_k_bounds))
    return verdicts, res, {"sweep": table}


def _builtin_cycle(name, ctx):
    if name == "point":
        return kt.point_cycle(np.array([[0.0, 1.0], [1.0, 0.0]]), np.diag([1.0, -1.0]))
    if name == "harmonic":
        return kt.lattice_cycle(build_dirac(LatticeDiracSpec(FiberGrid(10.0, 100), lambda y: y)))
    if name == "random":
        return kt.random_point_cycle(ctx.rng(7), 3, 2)
    if name == "bott":
        return kt.bott(_builtin_cycle("point", ctx))
    raise InputError(f"unknown builtin cycle {name!r}", "params.builtin")


def _load_cycle(P, ctx, base_dir):
    if P.get("cycle") is not None:
        try:
            return kt.cycle_from_json(P["cycle"])
        except (KeyError, ValueError, TypeError) as e:
            raise InputError(f"bad cycle document: {e}", "params.cycle")
    if P.get("file") is not None:
        import json
        path = P["file"] if os.path.isabs(P["file"]) else os.path.join(base_dir, P["file"])
        try:
            with open(path) as fh:
                return kt.cycle_from_json(json.load(fh))
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise InputError(f"cannot read cycle file: {e}", "params.file")
    return _builtin_cycle(P.get("builtin") or "point", ctx)


def run_kcycle_check(P, ctx, base_dir="."):
    K = _load_cycle(P, ctx, base_dir)
    rep = kt.validate_cycle(K, ctx.tol(P["tol"]))
    verdicts = {f"item_{k}": bool(v[0]) for k, v in rep.items.items()}
    res = {"items": {str(k): {"ok": bool(v[0]), "message": v[1]} for k, v in rep.items.items()},
           "degenerate": rep.degenerate, "base_points": K.base.size,
           "ranks": K.ranks.tolist()}
    if P["expect_degenerate"] is not None:
        verdicts["degenerate"] = rep.degenerate == P["expect_degenerate"]
    if P["expect_valid"] is False:
        verdicts = {"invalid_as_expected": not rep.ok}
    return verdicts, res, {}


def bott_base_cycle(n_base):
    """Odd operators D_x = [[0, 1 + x], [1 + x, 0]] over n_base points of [0, 1]."""
    base = interval(0.0, 1.0, n_base)
    eta = np.diag([1.0, -1.0])
    Fs = [np.array([[0.0, 1 + x], [1 + x, 0.0]]) for x in base.coords]
    return kt.KCycle(base, [eta] * n_base, Fs)


def run_bott_demo(P, ctx):
    K = bott_base_cycle(P["base_points"])
    ts = np.linspace(-P["T"], P["T"], P["t_samples"])
    errs = kt.bott_square_errors(K, ts)
    B = kt.bott(K, ts)
    rep = kt.validate_cycle(B)
    disp = max(float(np.max(np.abs(kt.bott_displayed(K.F[x], K.iota[x], t) @ kt.bott_displayed(K.F[x], K.iota[x], t)
                                   - (np.kron(np.eye(2), K.F[x] @ K.F[x]) + t * t * np.eye(4)))))
               for x in range(K.base.size) for t in ts)
    verdicts = {"square_law": float(errs.max()) <= ctx.tol(P["tol"]),
                "bott_cycle_valid": rep.ok, "thom_square_law": B.square_error <= ctx.tol(P["tol"])}
    return verdicts, {"max_square_error": float(errs.max()), "samples": int(errs.size),
                      "displayed_form_square_error": disp}, {}


def run_inverse_concordance(P, ctx):
    K = _load_cycle(P, ctx, ".")
    path = kt.inverse_concordance(K, P["samples"])
    ok, bad, _ = path.validate()
    S = kt.direct_sum(K, kt.negate(K, 2))
    verdicts = {"all_slices_valid": ok, "endpoints_equal": path.endpoints_equal(),
                "square_law": float(path.diagnostics["square_error"].max()) <= ctx.tol(1e-12),
                "square_lower_bound": bool(np.all(path.diagnostics["min_square"] >=
                                                  path.diagnostics["square_lower_bound"] - ctx.tol(1e-9))),
                "start_degenerate": kt.is_degenerate(path.start)}
    res = {"failing_theta": bad, "samples": path.n_samples,
           "max_square_error": float(path.diagnostics["square_error"].max())}
    if K.base.size == 1 and K.n_generators == 0:
        verdicts["inverse_law"] = kt.point_index(S) == 0
    return verdicts, res, {}


def morita_display_check():
    """mor_{1,1} of a point cycle against the displayed 2x2 block matrices."""
    eta = np.diag([1.0, -1.0])
    D = np.array([[0.0, 2.0], [2.0, 0.0]])
    K = kt.point_cycle(D, eta)
    M = kt.morita(K, 1)
    Z = np.zeros((2, 2))
    expect = {"F": np.block([[D, Z], [Z, D]]), "iota": np.block([[eta, Z], [Z, -eta]]),
              "e": np.block([[Z, -eta], [eta, Z]]), "eps": np.block([[Z, eta], [eta, Z]])}
    got = {"F": M.F[0], "iota": M.iota[0], "e": M.clifford[0][0], "eps": M.clifford[1][0]}
    return all(np.array_equal(got[k], expect[k]) for k in expect), kt.validate_cycle(M).ok


def run_kcycle_algebra(P, ctx):
    v1, r1, _ = run_bott_demo({"base_points": 17, "t_samples": 33, "T": 2.0, "tol": 1e-12}, ctx)
    exact, mvalid = morita_display_check()
    v3, r3, _ = run_inverse_concordance({"builtin": "random", "samples": 33, "cycle": None,
                                         "file": None}, ctx)
    rng = ctx.rng(11)
    add_ok = inv_ok = True
    for _ in range(P["n_random"]):
        a = kt.random_point_cycle(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        b = kt.random_point_cycle(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        add_ok &= kt.point_index(kt.direct_sum(a, b)) == kt.point_index(a) + kt.point_index(b)
        inv_ok &= kt.point_index(kt.direct_sum(a, kt.negate(a))) == 0
    verdicts = {"bott_square_law": v1["square_law"], "morita_display": exact,
                "morita_valid": mvalid, "inverse_concordance": v3["all_slices_valid"],
                "index_additivity": bool(add_ok), "index_inverse_law": bool(inv_ok)}
    return verdicts, {"bott": r1, "inverse_concordance": r3}, {}


def run_extension(P, ctx):
    F, amb, U = jump_family(P["base_points"])
    rep = extend_by_zero(F, amb, U, unbounded=True)
    G, amb2, U2 = compact_counterexample(P["base_points"], P["counter_limit"])
    rep2 = extend_by_zero(G, amb2, U2, norm_tol=P["norm_tol"], compact=True)
    verdicts = {"boundary_gap": abs(rep.boundary_gap - 1.0) <= ctx.tol(1e-12),
                "extension_fredholm": bool(rep.fredholm_extension),
                "counterexample_rejected": rep2.compact_extension is False}
    return verdicts, {"boundary_gap": rep.boundary_gap,
                      "counterexample_limit": rep2.boundary_limit}, {}


# --- catalog -----------------------------------------------------------------------------------

_LIN = [{"type": "linear", "slope": 1.0}]

CATALOG = {k.name: k for k in [
    Kind("clifford-selfcheck", "Sign-rule products vs representation matrices; C*-identity.",
         {"p": ("int", None, "single signature p (default: all)"),
          "q": ("int", None, "single signature q"),
          "max_n": ("int", 6, "largest p+q when sweeping all signatures"),
          "n_random": ("int", 100, "random elements per signature"),
          "product_tol": ("float", 1e-12, ""), "cstar_tol": ("float", 1e-10, "")},
         run_clifford_selfcheck, {"p": 3, "q": 2}),
    Kind("funcalc-verify", "Functional-calculus items on random odd self-adjoint operators.",
         {"p": ("int", 2, ""), "q": ("int", 1, ""), "rank": ("int", 3, ""),
          "n_ops": ("int", 25, ""), "tol": ("float", 1e-9, "")},
         run_funcalc_verify, {"p": 2, "q": 1, "rank": 3, "n_ops": 5}),
    Kind("inv-sqrt-quadrature", "Integral formula for L^{-1/2} vs eigendecomposition.",
         {"n_ops": ("int", 25, ""), "size": ("int", 8, ""), "spectrum": ("list", [0.3, 30.0], ""),
          "tol": ("float", 1e-6, "")},
         run_inv_sqrt, {"n_ops": 5}),
    Kind("dirac-index", "Index of the lattice Dirac operator by thresholded singular values.",
         {"potential": ("tokens", _LIN, "symbolic potential terms"), "R": ("float", 10.0, ""),
          "N": ("int", 400, ""), "theta": ("float", 1e-6, "kernel threshold"),
          "min_gap_ratio": ("float", 10.0, ""), "expect_index": ("int", None, ""),
          "profile": ("str", None, "gaussian"), "profile_tol": ("float", 1e-3, "")},
         run_dirac_index, {"potential": _LIN, "R": 10.0, "N": 400, "expect_index": 1}),
    Kind("rellich-probe", "eps-rank of g (D+i)^{-1} across refinements, with contrast.",
         {"potential": ("tokens", [{"type": "const", "value": 0.0}], ""), "R": ("float", 10.0, ""),
          "refinements": ("list", [200, 400, 800], ""), "width": ("float", 1.0, "bump half-width"),
          "eps": ("list", [0.1], ""), "rank_tolerance": ("int", 1, ""),
          "contrast": ("list", None, "(R, N) pairs"), "min_growth": ("int", 3, "")},
         run_rellich, {"refinements": [200, 400]}),
    Kind("invertibility-at-infinity", "Doubled-operator parametrix and defect certificate.",
         {"potential": ("tokens", _LIN, ""), "R": ("float", 10.0, ""),
          "refinements": ("list", [200, 400], ""), "K_radius": ("float", 2.0, ""),
          "c": ("float", 1.0, ""), "eps": ("list", [0.05], ""), "rank_tolerance": ("int", 1, ""),
          "certify": ("list", ["left"], "defects to certify: left G^2F0^2-1, right F0^2G^2-1, "
                                         "literal F0G^2F0-F0"),
          "expect": ("str", "passed", "passed | not-applicable")},
         run_invertibility, {"refinements": [100, 200]}),
    Kind("bunke", "F = D (D^2 + f^2)^{-1/2} and its compactness certificates.",
         {"potential": ("tokens", _LIN, ""), "R": ("float", 10.0, ""),
          "refinements": ("list", [200, 400], ""), "width": ("float", 1.0, ""),
          "amplitude": ("float", 1.0, ""), "c": ("float", 0.5, ""),
          "eps": ("list", [0.1, 0.05], ""), "rank_tolerance": ("int", 1, ""),
          "mass_bound": ("float", 0.05, "")},
         run_bunke, {"refinements": [100, 200]}),
    Kind("family-sweep", "Index and certificates across a family of potentials over [0, 1].",
         {"potential": ("tokens", [{"type": "linear", "slope": 1.0, "shift": [0.0, 1.0]}],
                        "parameters may be [p0, p1] = p0 + p1 x"),
          "R": ("float", 10.0, ""), "N": ("int", 400, ""), "base_points": ("int", 33, ""),
          "K_radius": ("float", None, "default R/2"), "c": ("float", 1.0, ""),
          "expect": ("str", "constant-index", "constant-index | localized-failure"),
          "expect_index": ("int", 1, "")},
         run_family_sweep, {"N": 100, "base_points": 9}),
    Kind("kcycle-check", "Validate a K-cycle (inline, file or builtin).",
         {"cycle": ("dict", None, ""), "file": ("str", None, ""),
          "builtin": ("str", None, "point | harmonic | random | bott"),
          "tol": ("float", 1e-9, ""), "expect_degenerate": ("bool", None, ""),
          "expect_valid": ("bool", True, "")},
         run_kcycle_check, {"builtin": "point", "expect_degenerate": True}),
    Kind("bott-demo", "Bott square law over a sampled base x t-line.",
         {"base_points": ("int", 17, ""), "t_samples": ("int", 33, ""), "T": ("float", 2.0, ""),
          "tol": ("float", 1e-12, "")},
         run_bott_demo, {"base_points": 5, "t_samples": 9}),
    Kind("inverse-concordance", "Concordance from a degenerate cycle to K + (-K).",
         {"cycle": ("dict", None, ""), "file": ("str", None, ""),
          "builtin": ("str", "random", ""), "samples": ("int", 33, "")},
         run_inverse_concordance, {"builtin": "random", "samples": 9}),
    Kind("kcycle-algebra", "Bott square law, Morita blocks, inverse concordance, index algebra.",
         {"n_random": ("int", 20, "")},
         run_kcycle_algebra, {"n_random": 5}),
    Kind("extension-by-zero", "Jump field D_x = 1/x and a compactness counterexample.",
         {"base_points": ("int", 33, ""), "counter_limit": ("float", 0.5, ""),
          "norm_tol": ("float", 0.05, "")},
         run_extension, {}),
]}


ACCEPTANCE = [
    ("1 clifford oracle", "clifford-selfcheck", {"max_n": 6, "n_random": 100}),
    ("2 functional calculus", "funcalc-verify", {"p": 2, "q": 1, "rank": 3, "n_ops": 25}),
    ("3 integral formula", "inv-sqrt-quadrature", {"n_ops": 25, "spectrum": [0.3, 30.0]}),
    ("4a lattice index W=y", "dirac-index", {"potential": _LIN, "R": 10.0, "N": 400,
                                            "expect_index": 1, "min_gap_ratio": 1e5,
                                            "profile": "gaussian"}),
    ("4b lattice index W=-y", "dirac-index", {"potential": [{"type": "linear", "slope": -1.0}],
                                             "R": 10.0, "N": 400, "expect_index": -1}),
    ("4c lattice index W=y^2+1", "dirac-index", {"potential": [{"type": "quadratic", "a": 1.0, "c": 1.0}],
                                                "R": 10.0, "N": 400, "expect_index": 0}),
    ("5 rellich uniformity", "rellich-probe", {"refinements": [200, 400, 800], "eps": [0.1],
                                              "contrast": [[10, 200], [20, 400], [40, 800]]}),
    ("6 invertibility at infinity", "invertibility-at-infinity", {"refinements": [200, 400], "eps": [0.05],
                                                                  "certify": ["literal", "left"]}),
    ("7 bunke", "bunke", {"refinements": [200, 400]}),
    ("8 k-cycle algebra", "kcycle-algebra", {"n_random": 20}),
    ("9 extension by zero", "extension-by-zero", {}),
    ("10a family sweep y+x", "family-sweep", {}),
    ("10b family sweep (1-2x)y", "family-sweep", {"potential": [{"type": "linear", "slope": [1.0, -2.0]}],
                                                 "expect": "localized-failure"}),
]
