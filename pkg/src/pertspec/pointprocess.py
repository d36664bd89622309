"""Rescaled spectral point processes and their empirical statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BinDegenerate, BinMismatch, EmptyEnsemble
from .symbols import SymbolModel, phase_space_volume

DEFAULT_BINS = 40
MAX_ABS_Z = 4.0
MEAN_ABS_Z = 1.5
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


@dataclass
class SpectrumRecord:
    h: float
    delta: float
    seed: int
    ensembleTag: str
    eigenvalues: np.ndarray

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=complex)
        if not np.all(np.isfinite(self.eigenvalues)):
            raise ValueError("spectrum contains non-finite values")
        if not self.ensembleTag:
            raise ValueError("ensembleTag must be non-empty")


@dataclass
class RescaledProcess:
    z0: complex
    h: float
    windowRadius: float
    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        if np.any(np.abs(self.points) >= self.windowRadius):
            raise ValueError("rescaled points must lie inside the window")

    def unscale(self) -> np.ndarray:
        return self.z0 + math.sqrt(self.h) * self.points


@dataclass
class CorrelationEstimate:
    binEdges: np.ndarray
    pairCounts: np.ndarray
    khat: np.ndarray
    stderr: np.ndarray
    realizations: int
    pooledIntensity: float
    windowRadius: float = float("nan")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.binEdges[1:] + self.binEdges[:-1])


def rescale(spectrum: SpectrumRecord, z0: complex, R: float) -> RescaledProcess:
    """``w = (z - z0) / sqrt(h)`` for every eigenvalue, keeping ``|w| < R``."""
    if R <= 0 or spectrum.h <= 0:
        raise ValueError("R and h must be positive")
    w = (spectrum.eigenvalues - z0) / math.sqrt(spectrum.h)
    return RescaledProcess(complex(z0), spectrum.h, float(R), w[np.abs(w) < R])


def disk_set_covariance(r, R: float):
    """Area of a disk of radius ``R`` intersected with its translate by ``r``."""
    r = np.clip(np.asarray(r, dtype=float), 0.0, 2 * R)
    return 2 * R * R * np.arccos(r / (2 * R)) - 0.5 * r * np.sqrt(np.maximum(4 * R * R - r * r, 0.0))


def _bin_integral(lo: float, hi: float, R: float, g=None) -> float:
    """``int_lo^hi pi A_cov(sqrt u) g(u) du`` (``= int 2 pi r A_cov(r) g(r^2) dr``)."""
    u = 0.5 * (hi - lo) * _GL_NODES + 0.5 * (hi + lo)
    f = math.pi * disk_set_covariance(np.sqrt(u), R)
    if g is not None:
        f = f * np.asarray(g(u), dtype=float)
    return float(0.5 * (hi - lo) * np.dot(_GL_WEIGHTS, f))


def _pair_weight_antiderivative(r, R: float):
    # closed form of int_0^r 2 pi s A_cov(s) ds
    r = np.clip(np.asarray(r, dtype=float), 0.0, 2 * R)
    root = np.sqrt(np.maximum(4 * R * R - r * r, 0.0))
    return 0.25 * math.pi * (8 * R**4 * np.arcsin(r / (2 * R)) + 8 * R * R * r * r * np.arccos(r / (2 * R))
                             - 2 * R * R * r * root - r**3 * root)


def poisson_pair_weights(edges: np.ndarray, R: float) -> np.ndarray:
    """``gamma(a, b)`` per bin: expected ordered pairs per unit squared intensity."""
    F = _pair_weight_antiderivative(np.sqrt(np.asarray(edges, dtype=float)), R)
    return np.diff(F)


def default_bin_edges(sigma_min: float, nbins: int = DEFAULT_BINS) -> np.ndarray:
    """``nbins`` equal bins of squared separation on ``[0, 9 / sigma_min]``."""
    return np.linspace(0.0, 9.0 / sigma_min, nbins + 1)


def _check_edges(edges) -> np.ndarray:
    e = np.asarray(edges, dtype=float)
    if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0) or e[0] < 0:
        raise ValueError("bin edges must be nonnegative and strictly increasing")
    return e


def _pair_histogram(points: np.ndarray, edges: np.ndarray) -> np.ndarray:
    nb = edges.size - 1
    if points.size < 2:
        return np.zeros(nb, dtype=np.int64)
    d = points[:, None] - points[None, :]
    iu = np.triu_indices(points.size, 1)
    d2 = (d.real**2 + d.imag**2)[iu]
    idx = np.searchsorted(edges, d2, side="right") - 1
    idx = idx[(idx >= 0) & (idx < nb)]
    return 2 * np.bincount(idx, minlength=nb).astype(np.int64)  # ordered pairs


def _common_window(processes) -> tuple[complex, float]:
    z0, R = processes[0].z0, processes[0].windowRadius
    for p in processes[1:]:
        if p.windowRadius != R or p.z0 != z0:
            raise ValueError("all processes must share z0 and the window radius")
    return z0, R


def pair_correlation(processes: list[RescaledProcess], bin_edges, *, check_bins: bool = True) -> CorrelationEstimate:
    """Edge-corrected 2-point correlation of an ensemble of processes in a disk.

    ``khat = pairs / (M * lambda^2 * gamma)`` with the pooled intensity
    ``lambda`` and the exact disk set covariance in ``gamma``; only pairs
    from the same realisation count. Standard errors come from the
    leave-one-realisation-out jackknife.
    """
    M = len(processes)
    if M < 2:
        raise EmptyEnsemble("pair correlation needs at least two realisations")
    _, R = _common_window(processes)
    edges = _check_edges(bin_edges)
    if edges[-1] > 4 * R * R:
        raise ValueError("squared separations beyond (2R)^2 cannot occur in the window")
    counts = np.array([p.points.size for p in processes], dtype=float)
    if counts.sum() == 0:
        raise EmptyEnsemble("no points in any realisation")
    hist = np.array([_pair_histogram(p.points, edges) for p in processes], dtype=float)
    area = math.pi * R * R
    gamma = poisson_pair_weights(edges, R)

    lam = counts.sum() / (M * area)
    expected = M * lam * lam * gamma
    if check_bins and np.any(expected < 1.0):
        raise BinDegenerate(f"bin expects {expected.min():.3g} < 1 pairs under the Poisson reference")
    pairs = hist.sum(axis=0)
    khat = pairs / expected

    # jackknife over realisations
    lam_j = (counts.sum() - counts) / ((M - 1) * area)
    exp_j = (M - 1) * (lam_j**2)[:, None] * gamma[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        k_j = np.where(exp_j > 0, (pairs[None, :] - hist) / exp_j, 0.0)
    se = np.sqrt((M - 1) / M * np.sum((k_j - k_j.mean(axis=0)) ** 2, axis=0))
    return CorrelationEstimate(edges, pairs.astype(np.int64), khat, se, M, float(lam), float(R))


def intensity(processes: list[RescaledProcess]) -> tuple[float, float]:
    """Points per unit window area, with a jackknife standard error."""
    if not processes:
        raise EmptyEnsemble("no realisations")
    _, R = _common_window(processes)
    counts = np.array([p.points.size for p in processes], dtype=float)
    area = math.pi * R * R
    M = counts.size
    dens = counts.mean() / area
    if M < 2:
        return float(dens), float("nan")
    loo = (counts.sum() - counts) / ((M - 1) * area)
    se = math.sqrt((M - 1) / M * np.sum((loo - loo.mean()) ** 2))
    return float(dens), float(se)


def weyl_count(spectra: list[SpectrumRecord], gamma, model: SymbolModel) -> tuple[float, float]:
    """Mean number of eigenvalues in the rectangle ``gamma`` and ``vol(p^-1(gamma)) / (2 pi h)``."""
    if not spectra:
        raise EmptyEnsemble("no spectra")
    x1, x2, y1, y2 = map(float, gamma)
    if x2 <= x1 or y2 <= y1:
        return 0.0, 0.0
    h = spectra[0].h
    if any(s.h != h for s in spectra):
        raise ValueError("spectra must share h")
    counts = [np.count_nonzero((s.eigenvalues.real >= x1) & (s.eigenvalues.real < x2)
                               & (s.eigenvalues.imag >= y1) & (s.eigenvalues.imag < y2)) for s in spectra]
    return float(np.mean(counts)), phase_space_volume(model, gamma) / (2 * math.pi * h)


def bin_averaged_curve(curve, edges, R: float) -> np.ndarray:
    """Theory curve averaged over each bin with the estimator's pair weight."""
    edges = _check_edges(edges)
    pairs = list(zip(edges[:-1], edges[1:]))
    num = np.array([_bin_integral(a, b, R, curve) for a, b in pairs])
    den = np.array([_bin_integral(a, b, R) for a, b in pairs])  # same rule, so constants average exactly
    return num / den


def _z(diff: np.ndarray, se: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(np.abs(diff) <= 1e-12, 0.0, np.inf))
    return np.abs(z)


def _verdict(z: np.ndarray, max_z: float, mean_z: float) -> tuple[float, bool]:
    stat = float(np.max(z)) if z.size else 0.0
    return stat, bool(stat <= max_z and float(np.mean(z)) <= mean_z)


def two_sample_correlation_test(estA: CorrelationEstimate, estB: CorrelationEstimate) -> tuple[float, bool]:
    """Largest per-bin ``|z|``; passes iff ``max |z| <= 4`` and ``mean |z| <= 1.5``."""
    if estA.binEdges.shape != estB.binEdges.shape or not np.allclose(estA.binEdges, estB.binEdges, rtol=0, atol=1e-12):
        raise BinMismatch("estimates use different bins")
    z = _z(estA.khat - estB.khat, np.hypot(estA.stderr, estB.stderr))
    return _verdict(z, MAX_ABS_Z, MEAN_ABS_Z)


@dataclass
class Deviation:
    z: np.ndarray
    theory: np.ndarray
    max_abs_z: float
    mean_abs_z: float
    passed: bool


def theory_deviation(est: CorrelationEstimate, curve, *, max_z: float = MAX_ABS_Z,
                     mean_z: float = MEAN_ABS_Z) -> Deviation:
    """Per-bin z-scores of ``est`` against a theory curve ``g(r2)``."""
    theory = bin_averaged_curve(curve, est.binEdges, est.windowRadius)
    z = _z(est.khat - theory, est.stderr)
    stat, ok = _verdict(z, max_z, mean_z)
    return Deviation(z, theory, stat, float(np.mean(z)), ok)
