"""Loop kernels for the combinatorial parts of the algebra backends.

Each kernel exists twice: a numba-compiled loop and a vectorized numpy
version.  The active path is chosen by the ``DIRACLAB_NUMBA`` environment
variable (``0``/``false``/``off`` disables numba) and can be switched at
runtime with :func:`set_backend`.  Both paths return identical results.
"""

import contextlib
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_wants_numba():
    flag = os.environ.get("DIRACLAB_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


_backend = "numba" if (HAVE_NUMBA and _env_wants_numba()) else "numpy"


def get_backend():
    return _backend


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` for subsequent kernel calls."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _backend = name


@contextlib.contextmanager
def use_backend(name):
    old = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(old)


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)


def popcounts(d):
    """Bit counts of 0..d-1."""
    out = np.zeros(d, dtype=np.int64)
    k = np.arange(d)
    while np.any(k):
        out += k & 1
        k = k >> 1
    return out


# --- Clifford sign table ----------------------------------------------------

@_njit
def _clifford_table_nb(n, p):
    d = 1 << n
    index = np.empty((d, d), dtype=np.int64)
    sign = np.empty((d, d), dtype=np.float64)
    for a in range(d):
        for b in range(d):
            swaps = 0
            for i in range(n):
                if (b >> i) & 1:
                    rest = a >> (i + 1)
                    while rest:
                        swaps += rest & 1
                        rest >>= 1
            common = a & b
            for i in range(min(p, n)):
                if (common >> i) & 1:
                    swaps += 1
            index[a, b] = a ^ b
            sign[a, b] = -1.0 if swaps & 1 else 1.0
    return index, sign


def _clifford_table_np(n, p):
    d = 1 << n
    pc = popcounts(d)
    a = np.arange(d)[:, None]
    b = np.arange(d)[None, :]
    swaps = np.zeros((d, d), dtype=np.int64)
    for i in range(n):
        swaps += ((b >> i) & 1) * pc[a >> (i + 1)]
    swaps += pc[(a & b) & ((1 << min(p, n)) - 1)]
    index = np.broadcast_to(a ^ b, (d, d)).astype(np.int64)
    sign = np.where(swaps & 1, -1.0, 1.0)
    return index, sign


def clifford_table(n, p):
    """Product table of Cl^{p,n-p} on the bitmask basis.

    Returns ``(index, sign)`` with e_S e_T = sign[S, T] e_{index[S, T]}.
    Generators 0..p-1 square to -1, the rest to +1.
    """
    if _backend == "numba":
        return _clifford_table_nb(n, p)
    return _clifford_table_np(n, p)


# --- exterior algebra creation operators ------------------------------------

@_njit
def _exterior_creation_nb(n, k):
    d = 1 << n
    out = np.zeros((d, d), dtype=np.float64)
    for s in range(d):
        if (s >> k) & 1:
            continue
        below = s & ((1 << k) - 1)
        cnt = 0
        while below:
            cnt += below & 1
            below >>= 1
        out[s | (1 << k), s] = -1.0 if cnt & 1 else 1.0
    return out


def _exterior_creation_np(n, k):
    d = 1 << n
    s = np.arange(d)
    free = s[((s >> k) & 1) == 0]
    cnt = popcounts(d)[free & ((1 << k) - 1)]
    out = np.zeros((d, d))
    out[free | (1 << k), free] = np.where(cnt & 1, -1.0, 1.0)
    return out


def exterior_creation(n, k):
    """Matrix of v_k ^ (.) on the exterior algebra of R^n (bitmask basis)."""
    if not 0 <= k < n:
        raise ValueError("generator index out of range")
    if _backend == "numba":
        return _exterior_creation_nb(n, k)
    return _exterior_creation_np(n, k)


# --- monomial algebras: products and regular representations ---------------
# A monomial structure is (index, coef): e_a e_b = coef[a, b] e_{index[a, b]}.

@_njit
def _monomial_product_nb(x, y, index, coef):
    d = x.shape[0]
    out = np.zeros(d, dtype=np.complex128)
    for a in range(d):
        if x[a] == 0:
            continue
        for b in range(d):
            c = coef[a, b]
            if c != 0:
                out[index[a, b]] += c * x[a] * y[b]
    return out


def _monomial_product_np(x, y, index, coef):
    out = np.zeros(x.shape[0], dtype=np.complex128)
    np.add.at(out, index, coef * np.outer(x, y))
    return out


def monomial_product(x, y, index, coef):
    x = np.ascontiguousarray(x, dtype=np.complex128)
    y = np.ascontiguousarray(y, dtype=np.complex128)
    if _backend == "numba":
        return _monomial_product_nb(x, y, index, coef)
    return _monomial_product_np(x, y, index, coef)


@_njit
def _left_regular_nb(x, index, coef):
    d = x.shape[0]
    out = np.zeros((d, d), dtype=np.complex128)
    for a in range(d):
        if x[a] == 0:
            continue
        for b in range(d):
            c = coef[a, b]
            if c != 0:
                out[index[a, b], b] += c * x[a]
    return out


def _left_regular_np(x, index, coef):
    d = x.shape[0]
    out = np.zeros((d, d), dtype=np.complex128)
    cols = np.broadcast_to(np.arange(d)[None, :], (d, d))
    np.add.at(out, (index, cols), coef * x[:, None])
    return out


@_njit
def _right_regular_nb(x, index, coef):
    d = x.shape[0]
    out = np.zeros((d, d), dtype=np.complex128)
    for b in range(d):
        for a in range(d):
            c = coef[b, a]
            if c != 0 and x[a] != 0:
                out[index[b, a], b] += c * x[a]
    return out


def _right_regular_np(x, index, coef):
    d = x.shape[0]
    out = np.zeros((d, d), dtype=np.complex128)
    cols = np.broadcast_to(np.arange(d)[:, None], (d, d))
    np.add.at(out, (index, cols), coef * x[None, :])
    return out


def left_regular(x, index, coef):
    """Matrix of y -> x y in the coefficient basis."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    if _backend == "numba":
        return _left_regular_nb(x, index, coef)
    return _left_regular_np(x, index, coef)


def right_regular(x, index, coef):
    """Matrix of y -> y x in the coefficient basis."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    if _backend == "numba":
        return _right_regular_nb(x, index, coef)
    return _right_regular_np(x, index, coef)


@_njit
def _module_matmul_nb(S, T, index, coef):
    n, m, d = S.shape
    k = T.shape[1]
    out = np.zeros((n, k, d), dtype=np.complex128)
    for i in range(n):
        for l in range(m):
            for a in range(d):
                s = S[i, l, a]
                if s == 0:
                    continue
                for b in range(d):
                    c = coef[a, b]
                    if c == 0:
                        continue
                    r = index[a, b]
                    for j in range(k):
                        out[i, j, r] += c * s * T[l, j, b]
    return out


def _module_matmul_np(S, T, index, coef):
    n, m, d = S.shape
    k = T.shape[1]
    out = np.zeros((n, k, d), dtype=np.complex128)
    sel = np.zeros((d, d), dtype=np.complex128)
    rows = np.arange(d)
    for a in range(d):
        Sa = S[:, :, a]
        if not np.any(Sa):
            continue
        sel[:] = 0
        np.add.at(sel, (rows, index[a]), coef[a])
        out += np.einsum("il,ljb,bc->ijc", Sa, T, sel, optimize=True)
    return out


def module_matmul(S, T, index, coef):
    """Product of matrices over a monomial algebra, shapes (n,m,d) x (m,k,d)."""
    S = np.ascontiguousarray(S, dtype=np.complex128)
    T = np.ascontiguousarray(T, dtype=np.complex128)
    if S.shape[1] != T.shape[0] or S.shape[2] != T.shape[2]:
        raise ValueError("shape mismatch in module product")
    if _backend == "numba":
        return _module_matmul_nb(S, T, index, coef)
    return _module_matmul_np(S, T, index, coef)
