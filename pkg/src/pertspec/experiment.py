"""Seeded Monte Carlo runs shared by the command line and the acceptance tests."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .eigen import eigenvalues
from .gaf import LimitProcessSpec, det_sigma_matrix, sample_limit_process
from .operators import (BasisSpec, OperatorMatrix, assemble_perturbed, build_unperturbed, default_N,
                        draw_perturbation, torus_cutoff)
from .pointprocess import RescaledProcess, SpectrumRecord, rescale
from .rng import derive_seed
from .symbols import SymbolModel, complex_ho, solve_energy_shell, torus_exp

HARVEST_MARGIN = 1.0


def model_of(cfg: ExperimentConfig) -> SymbolModel:
    return torus_exp(cfg.q) if cfg.model == "torus_exp" else complex_ho()


def window_energy(cfg: ExperimentConfig) -> float:
    """Largest ``|z|`` the rescaled window reaches, plus a safety band."""
    return abs(cfg.z0) + max(0.5, 2.0 * math.sqrt(cfg.h) * cfg.windowRadius)


def auto_basis(cfg: ExperimentConfig, max_energy: float) -> BasisSpec:
    if cfg.model == "torus_exp":
        K = cfg.basisCutoff or int(math.ceil(cfg.cutoffFactor * torus_cutoff(cfg.h, max_energy)))
        return BasisSpec("fourier", K)
    n = cfg.basisCutoff or int(math.ceil(cfg.cutoffFactor * 2.0 * max_energy / cfg.h))
    return BasisSpec("hermite", n, cfg.h)


def ensemble_tag(cfg: ExperimentConfig) -> str:
    return f"{cfg.model}_{cfg.perturbation}_{cfg.law}"


@dataclass
class SpectrumRunner:
    """Builds the unperturbed matrix once and solves one realisation per call."""

    cfg: ExperimentConfig
    P: OperatorMatrix

    @classmethod
    def from_config(cls, cfg: ExperimentConfig, max_energy: float | None = None) -> "SpectrumRunner":
        E = window_energy(cfg) if max_energy is None else max_energy
        basis = auto_basis(cfg, E)
        P = build_unperturbed(model_of(cfg), basis, cfg.h, window_max_energy=E)
        return cls(cfg, P)

    def seed(self, i: int) -> int:
        return derive_seed(self.cfg.masterSeed, i)

    def __call__(self, i: int) -> SpectrumRecord:
        cfg = self.cfg
        seed = self.seed(i)
        N = default_N(cfg.perturbation, self.P.basis)
        draw = draw_perturbation(cfg.perturbation, cfg.law, N, cfg.h, clamp=cfg.clamp, C=cfg.clampC, seed=seed)
        A = assemble_perturbed(self.P, draw, cfg.delta)
        ev = eigenvalues(A.entries, backend=cfg.eigenBackend).eigenvalues
        return SpectrumRecord(cfg.h, cfg.delta, seed, ensemble_tag(cfg), ev)


def parallel_map(fn, n: int, threads: int = 1) -> list:
    """``[fn(0), ..., fn(n-1)]`` in index order regardless of the thread count."""
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def simulate_spectra(cfg: ExperimentConfig, threads: int = 1, max_energy: float | None = None) -> list[SpectrumRecord]:
    runner = SpectrumRunner.from_config(cfg, max_energy)
    return parallel_map(runner, cfg.realizations, threads)


def rescale_all(cfg: ExperimentConfig, spectra: list[SpectrumRecord]) -> list[RescaledProcess]:
    return [rescale(s, cfg.z0, cfg.windowRadius) for s in spectra]


def shell_sigmas(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    """``(sigma_+, sigma_-)`` from the config, or from the energy shell at ``z0``."""
    if cfg.sigmaPlus:
        sp = np.array(cfg.sigmaPlus)
        sm = np.array(cfg.sigmaMinus) if cfg.sigmaMinus else sp.copy()
        return sp, sm
    shell = solve_energy_shell(model_of(cfg), cfg.z0)
    return shell.sigma_plus, shell.sigma_minus


def limit_spec(cfg: ExperimentConfig, seed: int, radius: float) -> LimitProcessSpec:
    sp, sm = shell_sigmas(cfg)
    if cfg.gafKind == "product":
        return LimitProcessSpec("ProductV", sp, radius, seed)
    return LimitProcessSpec("DetM", det_sigma_matrix(sp, sm), radius, seed)


def sample_limit_ensemble(cfg: ExperimentConfig, threads: int = 1) -> list[RescaledProcess]:
    """Zeros of ``realizations`` limit-process samples, harvested in ``R + 1`` and cut to ``R``."""
    R = cfg.windowRadius

    def one(i: int) -> RescaledProcess:
        spec = limit_spec(cfg, derive_seed(cfg.masterSeed, i), R + HARVEST_MARGIN)
        z = sample_limit_process(spec).zeros
        return RescaledProcess(cfg.z0, cfg.h, R, z[np.abs(z) < R])

    return parallel_map(one, cfg.realizations, threads)
