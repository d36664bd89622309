"""Closed-form limit quantities: kappa, GAF zero r-point densities and the
2-point correlation curves of the two limiting processes."""
from __future__ import annotations

import itertools
import math
import numpy as np

from .errors import NearSingularA, TooLarge

KAPPA_SERIES_CUTOFF = 1e-2
# kappa(t) = t - 2t^3/9 + 2t^5/45 - 4t^7/525 + O(t^9)
_KAPPA_TAYLOR = (1.0, -2.0 / 9.0, 2.0 / 45.0, -4.0 / 525.0)
COND_LIMIT = 1e12


def kappa(t):
    """Universal 2-point function of GAF zeros, ``kappa(0) = 0``, ``kappa -> 1``.

    ``((sinh^2 t + t^2) cosh t - 2 t sinh t) / sinh^3 t``, with a Taylor
    branch below ``t = 1e-2`` and the overflow-free form
    ``coth t + t^2 cosh t / sinh^3 t - 2 t / sinh^2 t`` elsewhere.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("kappa is defined for t >= 0")
    out = np.empty_like(t)
    small = t <= KAPPA_SERIES_CUTOFF
    ts = t[small]
    t2 = ts * ts
    c0, c1, c2, c3 = _KAPPA_TAYLOR
    out[small] = ts * (c0 + t2 * (c1 + t2 * (c2 + t2 * c3)))
    tl = t[~small]
    with np.errstate(over="ignore"):
        # divide through by sinh^3 with exp(-t) factors to stay finite for large t
        e = np.exp(-2.0 * tl)
        coth = (1.0 + e) / (1.0 - e)
        inv_sinh = 2.0 * np.exp(-tl) / (1.0 - e)
        out[~small] = coth + tl * tl * coth * inv_sinh**2 - 2.0 * tl * inv_sinh**2
    return out if out.ndim else float(out)


def permanent(M) -> complex:
    """Permanent by Ryser's formula with Gray-code column updates (k <= 12)."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("permanent needs a square matrix")
    k = M.shape[0]
    if k > 12:
        raise TooLarge(f"permanent of a {k}x{k} matrix exceeds the 12x12 limit")
    if k == 0:
        return 1.0 + 0j
    row_sums = np.zeros(k, dtype=complex)
    total = 0j
    sign = -1.0 if k % 2 else 1.0  # (-1)^(k - |S|) starting from |S| = 0
    gray = 0
    for i in range(1, 2**k):
        new_gray = i ^ (i >> 1)
        col = (new_gray ^ gray).bit_length() - 1
        if new_gray & (1 << col):
            row_sums += M[:, col]
        else:
            row_sums -= M[:, col]
        gray = new_gray
        size = bin(gray).count("1")
        s = -1.0 if (k - size) % 2 else 1.0
        total += s * np.prod(row_sums)
    return total


def _check_points(points, limit):
    w = np.asarray(points, dtype=complex).ravel()
    if w.size < 1:
        raise ValueError("need at least one point")
    if w.size > limit:
        raise TooLarge(f"{w.size} points exceed the supported maximum {limit}")
    for i in range(w.size):
        for j in range(i):
            if abs(w[i] - w[j]) <= 1e-9:
                raise ValueError("points must be pairwise distinct")
    return w


def gaf_r_point_density(points, sigma: float, *, method: str = "kernel") -> float:
    """r-point density of the zeros of ``g_sigma`` at distinct points.

    ``method="kernel"`` evaluates ``perm(C - B A^-1 B*) / det(pi A)`` from the
    covariance kernel, after pulling ``exp(-sigma |w_n|^2 / 2)`` out of row
    and column ``n``; it raises ``NearSingularA`` when ``cond(A) > 1e12``.
    ``method="stable"`` conditions on divided differences instead and is
    accurate for clustered points (see :func:`gaf_r_point_ratio`).
    """
    w = _check_points(points, 8)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if method == "stable":
        r = w.size
        prod = 1.0
        for i in range(r):
            for j in range(i):
                prod *= abs(w[i] - w[j]) ** 2
        return prod * gaf_r_point_ratio(w, sigma)
    if method != "kernel":
        raise ValueError(f"unknown method {method!r}")
    r = w.size
    wb = w.conj()
    expo = sigma * (np.outer(w, wb) - 0.5 * np.abs(w)[:, None] ** 2 - 0.5 * np.abs(w)[None, :] ** 2)
    A = np.exp(expo)
    B = sigma * wb[None, :] * A
    C = (sigma + sigma**2 * np.outer(w, wb)) * A
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NearSingularA(f"cond(A) = {cond:.3g} for points {w}")
    S = C - B @ np.linalg.solve(A, B.conj().T)
    val = permanent(S) / np.linalg.det(math.pi * A)
    return float(val.real)


def _series_length(sigma: float, rho: float, extra: int) -> int:
    # terms sigma^n rho^(2n) / n! relative to exp(sigma rho^2) below 1e-22
    x = sigma * rho * rho
    n = int(x) + 1
    logtop = x
    while n * math.log(max(x, 1e-300)) - math.lgamma(n + 1) - logtop > math.log(1e-22) or n < x:
        n += 1
    return n + extra + 4


def _complete_homogeneous(nodes, N):
    """Rows ``h_m(nodes[:p])`` for p = 1..len(nodes), m = 0..N."""
    rows = []
    h = np.zeros(N + 1, dtype=complex)
    h[0] = 1.0
    for x in nodes:
        new = np.empty_like(h)
        acc = 0j
        for m in range(N + 1):
            acc = h[m] + x * acc
            new[m] = acc
        h = new
        rows.append(h.copy())
    return rows


def gaf_r_point_ratio(points, sigma: float) -> float:
    """``d^r(w) / prod_{i<j} |w_i - w_j|^2`` for the zeros of ``g_sigma``.

    With ``D_j = g[w_1..w_j]`` and ``E_i = g[w_1..w_r, w_i]`` (divided
    differences, computed exactly from the power series), Kac-Rice gives
    ``perm(Cov(E | D)) / (pi^r det Cov(D))``. All quantities stay O(1) as the
    points merge, so the ratio is well conditioned.
    """
    w = np.asarray(points, dtype=complex).ravel()
    w = w - w.mean()  # zero process is translation invariant
    r = w.size
    rho = float(np.max(np.abs(w))) + 1.0
    N = _series_length(sigma, rho, r)
    n = np.arange(N + 1)
    var = np.exp(n * math.log(sigma) - np.array([math.lgamma(k + 1) for k in n]))
    prefix = _complete_homogeneous(list(w), N)
    D_rows = []
    for j in range(1, r + 1):
        row = np.zeros(N + 1, dtype=complex)
        row[j - 1:] = prefix[j - 1][: N + 2 - j]
        D_rows.append(row)
    full = prefix[-1]
    E_rows = []
    for i in range(r):
        # append w_i once more to the full node list
        h = np.empty(N + 1, dtype=complex)
        acc = 0j
        for m in range(N + 1):
            acc = full[m] + w[i] * acc
            h[m] = acc
        row = np.zeros(N + 1, dtype=complex)
        row[r:] = h[: N + 1 - r]
        E_rows.append(row)
    Phi_D = np.array(D_rows)
    Phi_E = np.array(E_rows)
    cov = lambda X, Y: (X * var) @ Y.conj().T
    DD = cov(Phi_D, Phi_D)
    ED = cov(Phi_E, Phi_D)
    EE = cov(Phi_E, Phi_E)
    S = EE - ED @ np.linalg.solve(DD, ED.conj().T)
    val = permanent(S) / (math.pi**r * np.linalg.det(DD))
    return float(val.real)


def _subset_density_table(w, sigmas, method):
    k = len(w)
    table = []
    for s in sigmas:
        d = {0: 1.0}
        for mask in range(1, 2**k):
            pts = [w[i] for i in range(k) if mask >> i & 1]
            d[mask] = gaf_r_point_density(pts, s, method=method)
        table.append(d)
    return table


def limit_k_density_V(points, sigmas, *, method: str = "stable") -> float:
    """k-point density of the zeros of a product of independent GAFs ``g_{sigma_j}``.

    Summing ``prod_j d^{alpha_j}`` over multi-indices and permutations with
    weight ``1/alpha!`` is the same as summing over all labellings of the
    points by factor index; densities of each subset are computed once.
    """
    w = _check_points(points, 6)
    sig = [float(s) for s in sigmas]
    if len(sig) < 1 or len(sig) > 6:
        raise TooLarge("between 1 and 6 factors are supported")
    if any(s <= 0 for s in sig):
        raise ValueError("sigmas must be positive")
    k, J = w.size, len(sig)
    table = _subset_density_table(list(w), sig, method)
    total = 0.0
    for labels in itertools.product(range(J), repeat=k):
        masks = [0] * J
        for i, j in enumerate(labels):
            masks[j] |= 1 << i
        term = 1.0
        for j in range(J):
            term *= table[j][masks[j]]
        total += term
    return total


def limit_2pt_correlation_V(r2, sigmas):
    """``1 + sum_j (sigma_j / sum sigma)^2 (kappa(sigma_j r2 / 2) - 1)``."""
    r2 = np.asarray(r2, dtype=float)
    if np.any(r2 < 0):
        raise ValueError("r2 must be nonnegative")
    s = np.asarray(sigmas, dtype=float)
    tot = s.sum()
    out = np.ones_like(r2)
    for sj in s:
        out = out + (sj / tot) ** 2 * (kappa(sj * r2 / 2.0) - 1.0)
    return out if out.ndim else float(out)


def ginibre_2pt_correlation(r2, sigma_sum: float):
    """``1 - exp(-sigma_sum * r2 / 2)`` with ``sigma_sum = sum_i (sigma_+^i + sigma_-^i)``."""
    r2 = np.asarray(r2, dtype=float)
    if np.any(r2 < 0):
        raise ValueError("r2 must be nonnegative")
    out = 1.0 - np.exp(-0.5 * sigma_sum * r2)
    return out if out.ndim else float(out)


def kappa_2pt_correlation(r2, sigma: float):
    """Single-GAF correlation ``kappa(sigma r2 / 2)``."""
    return kappa(sigma * np.asarray(r2, dtype=float) / 2.0)


def limit_1_density_V(sigma_plus) -> float:
    return float(np.sum(sigma_plus) / math.pi)


def limit_1_density_M(sigma_plus, sigma_minus) -> float:
    """``sum_i (sigma_+^i + sigma_-^i) / (2 pi)``."""
    sp, sm = np.asarray(sigma_plus, float), np.asarray(sigma_minus, float)
    if np.any(sp <= 0) or np.any(sm <= 0):
        raise ValueError("densities must be positive")
    return float((sp.sum() + sm.sum()) / (2 * math.pi))
