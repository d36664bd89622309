"""Matrix discretisations of the model operators and their random perturbations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

from .errors import BasisMismatch, CutoffTooSmall, DimensionMismatch
from .rng import Stream
from .symbols import SymbolModel

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BasisSpec:
    """``fourier``: modes ``-cutoff..cutoff`` of ``exp(ikx)/sqrt(2 pi)``.
    ``hermite``: h-scaled Hermite functions ``0..cutoff``."""

    kind: str
    cutoff: int
    h: float | None = None

    def __post_init__(self):
        if self.kind not in ("fourier", "hermite"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.cutoff < 0:
            raise ValueError("cutoff must be nonnegative")

    @property
    def dimension(self) -> int:
        return 2 * self.cutoff + 1 if self.kind == "fourier" else self.cutoff + 1

    @property
    def modes(self) -> np.ndarray:
        if self.kind == "fourier":
            return np.arange(-self.cutoff, self.cutoff + 1)
        return np.arange(self.cutoff + 1)


@dataclass
class OperatorMatrix:
    entries: np.ndarray
    basis: BasisSpec
    h: float

    def __post_init__(self):
        e = self.entries
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise DimensionMismatch(f"operator matrix must be square, got {e.shape}")
        if e.shape[0] != self.basis.dimension:
            raise DimensionMismatch(f"matrix dimension {e.shape[0]} != basis dimension {self.basis.dimension}")
        if not np.all(np.isfinite(e)):
            raise ValueError("operator matrix has non-finite entries")


@dataclass
class PerturbationDraw:
    kind: str  # "matrix" | "potential"
    coefficients: np.ndarray
    N: int
    law: str  # "gaussian" | "uniform_phase"
    clamped: bool
    seed: int
    C: float = 1.0


def default_N(kind: str, basis: BasisSpec) -> int:
    """Coefficient count for a perturbation living in ``basis``.

    A torus potential gets ``2n - 1`` Fourier modes, the full Toeplitz band
    of an ``n x n`` truncation. With only ``n`` modes the potential cannot
    couple the quasimodes at ``+xi`` and ``-xi`` (frequency ``2 xi / h``) and
    the computed spectrum is set by rounding noise instead of the potential.
    """
    n = basis.dimension
    if kind == "potential" and basis.kind == "fourier":
        return 2 * n - 1
    return n


def torus_cutoff(h: float, max_energy: float) -> int:
    """Smallest mode cutoff ``K`` with ``(h K)**2 >= 2 * max_energy``."""
    return int(math.ceil(math.sqrt(2.0 * max_energy) / h))


def harmonic_blocks(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of ``xi**2`` and ``x**2`` (divided by h) in the scaled Hermite basis."""
    n = np.arange(n_max + 1, dtype=float)
    diag = (2 * n + 1) / 2
    off = np.sqrt((n[:-2] + 1) * (n[:-2] + 2)) / 2
    T = np.diag(diag) - np.diag(off, 2) - np.diag(off, -2)
    X = np.diag(diag) + np.diag(off, 2) + np.diag(off, -2)
    return T, X


def build_unperturbed(model: SymbolModel, basis: BasisSpec, h: float, *,
                      window_max_energy: float | None = None) -> OperatorMatrix:
    """Truncated matrix of ``P_h`` in ``basis``.

    ``window_max_energy`` is the largest ``|z|`` that will be studied; the
    cutoff must cover it, otherwise ``CutoffTooSmall`` is raised.
    """
    if not 0 < h <= 1:
        raise ValueError("h must lie in (0, 1]")
    if model.domain == "torus":
        if basis.kind != "fourier":
            raise BasisMismatch("torus symbols need a Fourier basis")
        K = basis.cutoff
        if window_max_energy is not None and (h * K) ** 2 < window_max_energy:
            raise CutoffTooSmall(f"(hK)^2 = {(h * K) ** 2:.3g} < window energy {window_max_energy:.3g}")
        k = basis.modes
        A = np.diag((h * k).astype(np.complex128) ** 2)
        q = model.q
        # exp(-iqx) maps mode k to mode k - q: row index i - q, column i
        idx = np.arange(q, basis.dimension)
        A[idx - q, idx] = 1.0
        return OperatorMatrix(A, basis, h)
    if basis.kind != "hermite":
        raise BasisMismatch("line symbols need a Hermite basis")
    if basis.h is not None and not math.isclose(basis.h, h):
        raise BasisMismatch(f"basis scaled for h={basis.h}, operator h={h}")
    if window_max_energy is not None and h * (2 * basis.cutoff + 1) < 2.0 * window_max_energy:
        raise CutoffTooSmall(
            f"Hermite coverage {h * (2 * basis.cutoff + 1):.3g} < 2 x window energy {window_max_energy:.3g}")
    T, X = harmonic_blocks(basis.cutoff)
    return OperatorMatrix(h * (T + 1j * X), BasisSpec("hermite", basis.cutoff, h), h)


def draw_perturbation(kind: str, law: str, N: int, h: float, *, clamp: bool = False,
                      C: float = 1.0, seed: int = 0) -> PerturbationDraw:
    """I.i.d. coefficients for a random matrix (``N*N``, row-major) or potential (``N``).

    Clamping resamples every coefficient with ``|a| > C/h`` from the
    continuing stream, which realises the law conditioned on the disc.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if kind not in ("matrix", "potential"):
        raise ValueError(f"unknown perturbation kind {kind!r}")
    stream = Stream(seed)
    count = N * N if kind == "matrix" else N
    coef = stream.draw(law, count)
    if clamp:
        bound = C / h
        if law == "uniform_phase" and bound < 1.0:
            raise ValueError("clamp radius below 1 excludes every uniform-phase value")
        bad = np.flatnonzero(np.abs(coef) > bound)
        while bad.size:
            coef[bad] = stream.draw(law, bad.size)
            bad = bad[np.abs(coef[bad]) > bound]
    return PerturbationDraw(kind, coef, N, law, clamp, seed, C)


def hs_norm(draw: PerturbationDraw) -> float:
    """Hilbert-Schmidt norm of ``M = Q / N``."""
    if draw.kind != "matrix":
        raise ValueError("hs_norm applies to random-matrix draws")
    return float(np.sqrt(np.sum(np.abs(draw.coefficients) ** 2)) / draw.N)


def _hermite_functions(n_max: int, y: np.ndarray) -> np.ndarray:
    """Normalised Hermite functions ``psi_0..psi_n_max`` at ``y`` (shape (len(y), n_max+1))."""
    out = np.empty((y.size, n_max + 1))
    out[:, 0] = np.pi ** -0.25 * np.exp(-y * y / 2)
    if n_max >= 1:
        out[:, 1] = math.sqrt(2.0) * y * out[:, 0]
    for n in range(2, n_max + 1):
        out[:, n] = math.sqrt(2.0 / n) * y * out[:, n - 1] - math.sqrt((n - 1) / n) * out[:, n - 2]
    return out


def hermite_potential_matrix(values_coef: np.ndarray, n_max: int, h: float) -> np.ndarray:
    """Matrix of multiplication by ``V(x) = sum_j c_j phi_j(x)`` in the h-scaled Hermite basis.

    ``phi_j(x) = h^-1/4 psi_j(x / sqrt h)`` are the basis functions themselves,
    so the potential is expanded in the discretisation basis.

    Uses Gauss-Hermite quadrature after the substitution ``y = s sqrt(2/3)``,
    which integrates every triple product exactly.
    """
    deg = max(len(values_coef) - 1, 0) + 2 * n_max
    nq = deg // 2 + 1
    s, _ = roots_hermite(nq)
    psi_s = _hermite_functions(nq - 1, s)
    # Christoffel form of the weight times exp(s^2); stable for large nq
    wscaled = 1.0 / np.sum(psi_s**2, axis=1)
    y = s * math.sqrt(2.0 / 3.0)
    big = max(n_max, len(values_coef) - 1)
    psi_y = _hermite_functions(big, y)
    V = psi_y[:, : len(values_coef)] @ values_coef
    B = psi_y[:, : n_max + 1]
    weight = math.sqrt(2.0 / 3.0) * wscaled * V * h**-0.25
    return (B.T * weight) @ B


def perturbation_matrix(draw: PerturbationDraw, basis: BasisSpec, h: float) -> np.ndarray:
    """Operator ``Q`` (``M_omega`` or ``V_omega``) in ``basis``."""
    n = basis.dimension
    if draw.kind == "matrix":
        if draw.N != n:
            raise DimensionMismatch(f"random matrix of size {draw.N} for basis dimension {n}")
        return draw.coefficients.reshape(n, n) / draw.N
    if basis.kind == "fourier":
        N = draw.N
        if N % 2 == 0 or N > 2 * n - 1:
            raise DimensionMismatch(f"torus potential needs odd N <= {2 * n - 1}, got {N}")
        M = (N - 1) // 2
        V = np.zeros((n, n), dtype=np.complex128)
        scale = 1.0 / (N * math.sqrt(2.0 * math.pi))
        # modes with |j| >= n fall outside the truncation
        for j in range(-min(M, n - 1), min(M, n - 1) + 1):
            # V[k + j, k] = v_j / (N sqrt(2 pi))
            V += np.diag(np.full(n - abs(j), draw.coefficients[j + M] * scale), -j)
        return V
    return hermite_potential_matrix(draw.coefficients / draw.N, basis.cutoff, h)


def assemble_perturbed(P: OperatorMatrix, draw: PerturbationDraw, delta: float) -> OperatorMatrix:
    """``P + delta * Q``."""
    if delta == 0:
        return OperatorMatrix(P.entries.copy(), P.basis, P.h)
    Q = perturbation_matrix(draw, P.basis, P.h)
    return OperatorMatrix(P.entries + delta * Q, P.basis, P.h)
