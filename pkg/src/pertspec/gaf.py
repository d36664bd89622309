"""Gaussian analytic functions, the two limiting random functions and their zeros."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import eigenvalues
from .errors import CompanionFailure, NoConvergence, WindingMismatch
from .rng import Stream, derive_seed

TAIL_REL = 1e-3
RESIDUAL_TOL = 1e-8
MERGE_TOL = 1e-6


@dataclass
class GafSample:
    """Truncated GAF ``sum_n a_n w^n`` with ``a_n = alpha_n sigma^(n/2) / sqrt(n!)``."""

    sigma: float
    truncation: int
    coefficients: np.ndarray
    windowRadius: float
    seed: int
    center: complex = 0j

    def __call__(self, w):
        return horner(self.coefficients, np.asarray(w, dtype=complex))

    def derivative(self, w):
        n = np.arange(1, self.coefficients.size)
        return horner(self.coefficients[1:] * n, np.asarray(w, dtype=complex))


@dataclass
class ZeroSet:
    zeros: np.ndarray
    residuals: np.ndarray

    def __len__(self):
        return int(self.zeros.size)


@dataclass
class LimitProcessSpec:
    """``ProductV``: product of independent ``g_sigma_j``; ``DetM``: ``det(g^{ij})``.

    For ``DetM`` pass ``sigmas`` as a J x J matrix, usually from :func:`det_sigma_matrix`.
    """

    kind: str
    sigmas: np.ndarray
    windowRadius: float
    seed: int = 0
    center: complex = 0j

    def __post_init__(self):
        s = np.asarray(self.sigmas, dtype=float)
        if self.kind == "ProductV":
            if s.ndim != 1 or s.size < 1:
                raise ValueError("ProductV needs a nonempty list of sigmas")
        elif self.kind == "DetM":
            if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
                raise ValueError("DetM needs a square sigma matrix")
        else:
            raise ValueError(f"unknown limit process kind {self.kind!r}")
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ValueError("sigmas must be positive and finite")
        if self.windowRadius <= 0:
            raise ValueError("windowRadius must be positive")
        self.sigmas = s

    @property
    def scale_exponent(self) -> float:
        """``c`` such that the typical size of the random function is ``exp(c |w|^2)``."""
        if self.kind == "ProductV":
            return float(self.sigmas.sum()) / 2.0
        return float(np.trace(self.sigmas)) / 2.0


def det_sigma_matrix(sigma_plus, sigma_minus) -> np.ndarray:
    """``S[i, j] = (sigma_+^j + sigma_-^i) / 2``; the transpose gives the same process."""
    sp = np.asarray(sigma_plus, dtype=float)
    sm = np.asarray(sigma_minus, dtype=float)
    if sp.shape != sm.shape:
        raise ValueError("sigma_plus and sigma_minus must have equal length")
    return 0.5 * (sp[None, :] + sm[:, None])


def horner(coef: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.zeros(np.shape(w), dtype=complex)
    for c in coef[::-1]:
        out = out * w + c
    return out


def truncation_level(sigma: float, R: float) -> int:
    """Smallest ``N`` with ``sum_{n>N} sigma^(n/2) R^n / sqrt(n!) <= 1e-3 e^(sigma R^2 / 2)``."""
    if sigma <= 0 or R <= 0:
        raise ValueError("sigma and R must be positive")
    x = sigma * R * R
    logbound = math.log(TAIL_REL) + x / 2.0

    def log_term(n):
        return 0.5 * (n * math.log(x) - math.lgamma(n + 1))

    n = max(int(math.ceil(x)), 1)
    while True:
        # beyond the peak consecutive ratios sqrt(x/(m+1)) decrease, so the tail
        # after n is bounded by a geometric series with the first ratio
        ratio = math.sqrt(x / (n + 2))
        if ratio < 1.0:
            tail = log_term(n + 1) - math.log1p(-ratio)
            if tail <= logbound:
                return n
        n += 1


def sample_gaf(sigma: float, R: float, seed: int, center: complex = 0j) -> GafSample:
    """Draw ``g_sigma`` truncated for the disk of radius ``R`` about ``center``.

    Coefficients are drawn in order from one stream, so the same seed gives
    the same function whatever ``R`` is (larger ``R`` only adds terms).
    """
    if sigma <= 0 or R <= 0:
        raise ValueError("sigma and R must be positive")
    N = truncation_level(sigma, R + abs(center))
    alpha = Stream(seed).complex_gaussian(N + 1)
    n = np.arange(N + 1)
    logs = 0.5 * (n * math.log(sigma) - np.array([math.lgamma(k + 1) for k in n]))
    coef = alpha * np.exp(logs)
    return GafSample(float(sigma), N, coef, float(R), int(seed), complex(center))


def _newton(f, df, w, tol=1e-14, maxit=40):
    w = np.array(w, dtype=complex)
    for _ in range(maxit):
        d = df(w)
        safe = np.where(d == 0, 1.0, d)
        step = np.where(d == 0, 0.0, f(w) / safe)
        w = w - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(w))):
            break
    return w


def polynomial_roots(coef: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Roots of ``sum coef[n] w^n`` via the companion matrix of the polynomial in ``u = w / scale``."""
    c = np.asarray(coef, dtype=complex) * scale ** np.arange(len(coef))
    nz = np.flatnonzero(c)
    if nz.size == 0:
        raise CompanionFailure("zero polynomial")
    c = c[: nz[-1] + 1]
    low = nz[0]
    deg = c.size - 1
    if deg == 0:
        return np.zeros(0, dtype=complex)
    C = np.zeros((deg, deg), dtype=complex)
    C[0, :] = -c[-2::-1] / c[-1]
    C[np.arange(1, deg), np.arange(deg - 1)] = 1.0
    try:
        lam = eigenvalues(C).eigenvalues
    except NoConvergence as exc:
        raise CompanionFailure(str(exc)) from exc
    # exact zero roots from vanishing low-order coefficients
    lam[np.argsort(np.abs(lam))[:low]] = 0.0
    return lam * scale


def find_zeros(sample: GafSample) -> ZeroSet:
    """Zeros of the truncated series inside the sample's window, Newton polished."""
    R = sample.windowRadius
    roots = polynomial_roots(sample.coefficients, scale=R + abs(sample.center))
    cand = roots[np.abs(roots - sample.center) < R * 1.05 + 1e-9]
    w = _newton(sample, sample.derivative, cand)
    keep = np.abs(w - sample.center) < R
    w = w[keep]
    res = np.abs(sample(w))
    ok = res <= RESIDUAL_TOL * np.exp(sample.sigma * np.abs(w) ** 2 / 2)
    return ZeroSet(w[ok], res[ok])


def _union(sets: list[ZeroSet]) -> ZeroSet:
    if not sets:
        return ZeroSet(np.zeros(0, complex), np.zeros(0))
    return ZeroSet(np.concatenate([s.zeros for s in sets]), np.concatenate([s.residuals for s in sets]))


@dataclass
class GafMatrix:
    """``J x J`` matrix of independent truncated GAFs."""

    entries: list = field(default_factory=list)

    @property
    def J(self) -> int:
        return len(self.entries)

    def values(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.empty(w.shape + (self.J, self.J), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, g in enumerate(row):
                out[..., i, j] = g(w)
        return out

    def derivatives(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.empty(w.shape + (self.J, self.J), dtype=complex)
        for i, row in enumerate(self.entries):
            for j, g in enumerate(row):
                out[..., i, j] = g.derivative(w)
        return out

    def det(self, w):
        return np.linalg.det(self.values(w))

    def det_derivative(self, w):
        """Jacobi's formula written as a sum of determinants with one row differentiated."""
        F = self.values(w)
        dF = self.derivatives(w)
        total = np.zeros(np.shape(w), dtype=complex)
        for k in range(self.J):
            G = F.copy()
            G[..., k, :] = dF[..., k, :]
            total = total + np.linalg.det(G)
        return total

    def det_coefficients(self) -> np.ndarray:
        """Power-series coefficients of the truncated determinant (Leibniz expansion)."""
        import itertools

        total = np.zeros(1, dtype=complex)
        for perm in itertools.permutations(range(self.J)):
            sign = np.linalg.det(np.eye(self.J)[list(perm)])
            prod = np.ones(1, dtype=complex)
            for i, j in enumerate(perm):
                prod = np.convolve(prod, self.entries[i][j].coefficients)
            if prod.size > total.size:
                total = np.pad(total, (0, prod.size - total.size))
            total[: prod.size] += sign * prod
        return total


def sample_gaf_matrix(sigmas: np.ndarray, R: float, seed: int, center: complex = 0j) -> GafMatrix:
    J = sigmas.shape[0]
    rows = []
    for i in range(J):
        rows.append([sample_gaf(sigmas[i, j], R, derive_seed(seed, i * J + j), center) for j in range(J)])
    return GafMatrix(rows)


# --- argument principle -------------------------------------------------------------

_MAX_EDGE_LEVEL = 14
_PHASE_STEP = math.pi / 4


def _edge_phase(f, a: np.ndarray, b: np.ndarray, base: int = 8) -> np.ndarray:
    """Total continuous change of ``arg f`` along each segment ``a[k] -> b[k]``.

    Segments are bisected until every sub-step changes the phase by less
    than pi/4; returns NaN for segments that pass too close to a zero.
    """
    m = a.size
    t = np.linspace(0.0, 1.0, base + 1)
    pts = a[:, None] + (b - a)[:, None] * t[None, :]
    vals = f(pts)
    total = np.zeros(m)
    # work list of (edge index, start point, end point, f start, f end, level)
    idx = np.repeat(np.arange(m), base)
    p0 = pts[:, :-1].ravel()
    p1 = pts[:, 1:].ravel()
    f0 = vals[:, :-1].ravel()
    f1 = vals[:, 1:].ravel()
    level = 0
    bad = np.zeros(m, dtype=bool)
    while idx.size:
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.angle(f1 / f0)
        fine = np.abs(d) < _PHASE_STEP
        np.add.at(total, idx[fine], d[fine])
        idx, p0, p1, f0, f1 = idx[~fine], p0[~fine], p1[~fine], f0[~fine], f1[~fine]
        if not idx.size:
            break
        level += 1
        if level > _MAX_EDGE_LEVEL:
            bad[np.unique(idx)] = True
            break
        mid = 0.5 * (p0 + p1)
        fm = f(mid)
        idx = np.concatenate([idx, idx])
        p0, p1 = np.concatenate([p0, mid]), np.concatenate([mid, p1])
        f0, f1 = np.concatenate([f0, fm]), np.concatenate([fm, f1])
    total[bad] = np.nan
    return total


def _cell_windings(f, corners: np.ndarray, side: float) -> np.ndarray:
    """Winding numbers of ``f`` around the squares with lower-left ``corners``."""
    ll = corners
    lr = ll + side
    ur = lr + 1j * side
    ul = ll + 1j * side
    a = np.concatenate([ll, lr, ur, ul])
    b = np.concatenate([lr, ur, ul, ll])
    ph = _edge_phase(f, a, b).reshape(4, -1).sum(axis=0)
    wind = ph / (2 * math.pi)
    out = np.rint(wind)
    out[~np.isfinite(wind) | (np.abs(wind - out) > 0.1)] = -1  # unreliable
    return out.astype(int)


_BOUNDARY_SIDES = 256


def _inside_polygon(z: np.ndarray, center: complex, R: float, n: int = _BOUNDARY_SIDES) -> np.ndarray:
    """Membership in the regular ``n``-gon inscribed in ``|w - center| = R`` (vertex at angle 0)."""
    w = np.asarray(z, dtype=complex) - center
    step = 2 * math.pi / n
    phi = np.mod(np.angle(w), step) - step / 2
    return np.abs(w) < R * math.cos(step / 2) / np.cos(phi)


def _circle_winding(f, center: complex, R: float, n: int = _BOUNDARY_SIDES) -> int:
    """Winding of ``f`` along the inscribed ``n``-gon, see :func:`_inside_polygon`."""
    theta = np.linspace(0.0, 2 * math.pi, n + 1)
    pts = center + R * np.exp(1j * theta)
    ph = _edge_phase(f, pts[:-1], pts[1:], base=4)
    if not np.all(np.isfinite(ph)):
        raise WindingMismatch("function vanishes on the window boundary")
    return int(round(ph.sum() / (2 * math.pi)))


def argument_principle_zeros(f, df, center: complex, R: float, density: float, *,
                             max_depth: int = 10, refine: int = 0) -> np.ndarray:
    """Zeros of analytic ``f`` in ``|w - center| < R`` by cell-wise winding numbers.

    Cells with winding 1 are solved by Newton from their centre; cells with
    larger (or unreliable) winding, or whose Newton iterate escapes, are
    split into four. ``density`` sets the initial cell size.
    """
    side = min(1.0, 0.5 / math.sqrt(max(density, 1e-12))) / 2**refine
    n = int(math.ceil(2 * R / side)) + 1
    # irrational offset keeps grid lines away from structured points
    origin = center - (n * side) / 2 * (1 + 1j) + side * (0.1234567 + 0.0765432j)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    corners = (origin + side * (ii + 1j * jj)).ravel()
    # drop cells that cannot meet the disk
    mid = corners + side * (0.5 + 0.5j)
    corners = corners[np.abs(mid - center) < R + side]
    found = []
    pending = [(corners, side, 0)]
    while pending:
        cs, s, depth = pending.pop()
        if cs.size == 0:
            continue
        wind = _cell_windings(f, cs, s)
        if np.any(wind < 0) and depth >= max_depth:
            raise WindingMismatch("could not resolve winding numbers on the refined grid")
        ones = cs[wind == 1]
        if ones.size:
            z = _newton(f, df, ones + s * (0.5 + 0.5j))
            inside = (z.real >= ones.real) & (z.real <= ones.real + s) & \
                     (z.imag >= ones.imag) & (z.imag <= ones.imag + s) & np.isfinite(z)
            found.append(z[inside])
            split = ones[~inside]
        else:
            split = np.zeros(0, complex)
        many = cs[(wind > 1) | (wind < 0)]
        split = np.concatenate([split, many])
        if split.size:
            if depth >= max_depth:
                # a cluster tighter than the finest cell: one polished zero per unit winding
                mult = np.where(np.isin(split, many), np.maximum(wind[np.isin(cs, split)], 1), 1)
                z = _newton(f, df, split + s * (0.5 + 0.5j))
                found.append(np.repeat(z, mult))
                continue
            h = s / 2
            kids = np.concatenate([split, split + h, split + 1j * h, split + h * (1 + 1j)])
            pending.append((kids, h, depth + 1))
    z = np.concatenate(found) if found else np.zeros(0, complex)
    return z[np.abs(z - center) < R]


def find_det_zeros(M: GafMatrix, center: complex, R: float, density: float, *, retries: int = 2) -> ZeroSet:
    """Zeros of ``det M`` in the disk; cross-checked against the winding along ``|w - center| = R``."""
    expected = _circle_winding(M.det, center, R)
    for attempt in range(retries + 1):
        try:
            z = argument_principle_zeros(M.det, M.det_derivative, center, R, density, refine=attempt)
        except WindingMismatch:
            if attempt == retries:
                raise
            continue
        # zeros between a chord and the arc lie outside the contour of the winding count
        if np.count_nonzero(_inside_polygon(z, center, R)) == expected:
            res = np.abs(M.det(z))
            return ZeroSet(z, res)
    raise WindingMismatch(f"cells found {np.count_nonzero(_inside_polygon(z, center, R))} zeros "
                          f"inside the boundary polygon, winding is {expected}")


def sample_limit_process(spec: LimitProcessSpec) -> ZeroSet:
    """Zeros of one realisation of the limiting random function in the window."""
    R, c = spec.windowRadius, spec.center
    if spec.kind == "ProductV":
        sets = [find_zeros(sample_gaf(s, R, derive_seed(spec.seed, j), c)) for j, s in enumerate(spec.sigmas)]
        return _union(sets)
    M = sample_gaf_matrix(spec.sigmas, R, spec.seed, c)
    density = float(np.trace(spec.sigmas)) / math.pi
    return find_det_zeros(M, c, R, density)


def translate_process(spec: LimitProcessSpec, alpha: complex, beta: complex) -> ZeroSet:
    """Zeros of the process seen through ``tau(w) = alpha w + beta`` in the window of ``spec``.

    Samples the process on ``tau^-1`` of the window and maps the zeros by ``tau``.
    """
    if not math.isclose(abs(alpha), 1.0, rel_tol=0, abs_tol=1e-12):
        raise ValueError("tau must be a rigid motion (|alpha| = 1)")
    pre_center = (spec.center - beta) / alpha
    moved = LimitProcessSpec(spec.kind, spec.sigmas, spec.windowRadius, spec.seed, pre_center)
    zs = sample_limit_process(moved)
    return ZeroSet(alpha * zs.zeros + beta, zs.residuals)
