"""Classical symbols, energy shells, Poisson brackets and phase-space volumes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InconsistentVolume, NoSolution, ShellDegenerate
from .rng import Stream

TWO_PI = 2.0 * math.pi

DEGENERACY_TOL = 1e-8
FD_STEP = 1e-6
MERGE_TOL = 1e-6


@dataclass(frozen=True)
class SymbolModel:
    """Principal symbol ``p0(x, xi)``.

    ``complex_ho``: ``xi**2 + 1j*x**2`` on the real line.
    ``torus_exp``: ``xi**2 + exp(-1j*q*x)`` on the torus of period 2 pi.
    """

    kind: str
    q: int = 1

    def __post_init__(self):
        if self.kind not in ("complex_ho", "torus_exp"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "torus_exp" and (int(self.q) != self.q or self.q < 1):
            raise ValueError("torus_exp needs a positive integer q")

    @property
    def domain(self) -> str:
        return "torus" if self.kind == "torus_exp" else "line"

    def value(self, x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.kind == "complex_ho":
            return xi**2 + 1j * x**2
        return xi**2 + np.exp(-1j * self.q * x)

    def gradient(self, x, xi):
        """Return ``(dp/dx, dp/dxi)``."""
        if self.kind == "complex_ho":
            return 2j * np.asarray(x, dtype=float), 2.0 * np.asarray(xi, dtype=float)
        q = self.q
        return -1j * q * np.exp(-1j * q * np.asarray(x, dtype=float)), 2.0 * np.asarray(xi, dtype=float)

    def bracket(self, x, xi):
        """Closed-form ``{Re p0, Im p0}``."""
        if self.kind == "complex_ho":
            return 4.0 * np.asarray(x, dtype=float) * np.asarray(xi, dtype=float)
        return -2.0 * self.q * np.asarray(xi, dtype=float) * np.cos(self.q * np.asarray(x, dtype=float))


def complex_ho() -> SymbolModel:
    return SymbolModel("complex_ho")


def torus_exp(q: int = 1) -> SymbolModel:
    return SymbolModel("torus_exp", q)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    xi: float

    @classmethod
    def on(cls, model: SymbolModel, x: float, xi: float) -> "PhasePoint":
        if model.domain == "torus":
            x = float(np.mod(x, TWO_PI))
            if x >= TWO_PI:
                x = 0.0
        return cls(float(x), float(xi))


@dataclass(frozen=True)
class ShellPoint:
    rho: PhasePoint
    sign: int
    bracket: float
    sigma: float


@dataclass
class EnergyShell:
    z: complex
    points: list[ShellPoint]
    J: int

    @property
    def plus(self) -> list[ShellPoint]:
        return [p for p in self.points if p.sign > 0]

    @property
    def minus(self) -> list[ShellPoint]:
        return [p for p in self.points if p.sign < 0]

    @property
    def sigma_plus(self) -> np.ndarray:
        return np.array([p.sigma for p in self.plus])

    @property
    def sigma_minus(self) -> np.ndarray:
        return np.array([p.sigma for p in self.minus])

    @property
    def total_density(self) -> float:
        """Push-forward density sum of all sigmas at ``z``."""
        return float(sum(p.sigma for p in self.points))


def eval_symbol(model: SymbolModel, rho: PhasePoint) -> complex:
    return complex(model.value(rho.x, rho.xi))


def fd_bracket(f: Callable, g: Callable, x: float, xi: float, step: float = FD_STEP) -> float:
    """Central-difference ``{f, g} = df/dxi dg/dx - dg/dxi df/dx``."""
    dfx = (f(x + step, xi) - f(x - step, xi)) / (2 * step)
    dfxi = (f(x, xi + step) - f(x, xi - step)) / (2 * step)
    dgx = (g(x + step, xi) - g(x - step, xi)) / (2 * step)
    dgxi = (g(x, xi + step) - g(x, xi - step)) / (2 * step)
    return float(dfxi * dgx - dgxi * dfx)


def poisson_bracket(model: SymbolModel, rho: PhasePoint, *, check: bool = False) -> float:
    """``{Re p0, Im p0}`` at ``rho``.

    With ``check=True`` the closed form is compared against central finite
    differences and an ``AssertionError`` is raised on disagreement.
    """
    b = float(model.bracket(rho.x, rho.xi))
    if check:
        fd = fd_bracket(lambda x, xi: model.value(x, xi).real,
                        lambda x, xi: model.value(x, xi).imag, rho.x, rho.xi)
        if abs(fd - b) > 1e-6 * max(1.0, abs(b)):
            raise AssertionError(f"bracket mismatch: closed form {b}, finite differences {fd}")
    return b


def boundary_distance(model: SymbolModel, z: complex) -> float:
    """Signed distance from ``z`` to the boundary of the classical spectrum.

    Positive inside, negative outside.
    """
    z = complex(z)
    if model.kind == "complex_ho":
        if z.real >= 0 and z.imag >= 0:
            return min(z.real, z.imag)
        return -abs(complex(max(z.real, 0.0), max(z.imag, 0.0)) - z)
    # R_+ + unit circle: distance to the half-line [0, inf)
    d = abs(z.imag) if z.real >= 0 else abs(z)
    return 1.0 - d


def _make_shell(model: SymbolModel, z: complex, rhos: list[PhasePoint]) -> EnergyShell:
    plus, minus = [], []
    for rho in rhos:
        b = float(model.bracket(rho.x, rho.xi))
        if abs(b) < DEGENERACY_TOL:
            raise ShellDegenerate(f"Poisson bracket {b:.3e} at {rho} (z={z})")
        pt = ShellPoint(rho, +1 if b < 0 else -1, b, 1.0 / abs(b))
        (plus if b < 0 else minus).append(pt)
    if len(plus) != len(minus):
        raise ShellDegenerate(f"unbalanced shell at z={z}: {len(plus)} (+) vs {len(minus)} (-)")
    # pair rho_+^j with the rho_-^j on the same fibre when one exists
    ordered_minus = []
    pool = list(minus)
    for p in plus:
        best = min(pool, key=lambda m: (abs(m.rho.x - p.rho.x), abs(m.rho.xi + p.rho.xi)))
        pool.remove(best)
        ordered_minus.append(best)
    return EnergyShell(complex(z), plus + ordered_minus, len(plus))


def _closed_form_points(model: SymbolModel, z: complex) -> list[PhasePoint]:
    if model.kind == "complex_ho":
        X, Y = z.real, z.imag
        sx, sy = math.sqrt(X), math.sqrt(Y)
        # (x, xi) with xi^2 = X, x^2 = Y; (+) family first, as in the usual labelling
        return [PhasePoint(sy, -sx), PhasePoint(-sy, sx), PhasePoint(sy, sx), PhasePoint(-sy, -sx)]
    q = model.q
    a, b = z.real, z.imag
    root = math.sqrt(max(0.0, 1.0 - b * b))
    rhos = []
    for t in sorted({a - root, a + root}):
        if t < 0:
            continue
        u = complex(z) - t  # = exp(-i q x)
        base = -math.atan2(u.imag, u.real)
        for s in (+1.0, -1.0):
            xi = s * math.sqrt(t)
            for m in range(q):
                rhos.append(PhasePoint.on(model, (base + TWO_PI * m) / q, xi))
    return rhos


def _newton_points(model: SymbolModel, z: complex, box, grid: int = 64,
                   tol: float = 1e-13, max_iter: int = 50) -> list[PhasePoint]:
    (x0, x1), (k0, k1) = box
    xs = np.linspace(x0, x1, grid)
    ks = np.linspace(k0, k1, grid)
    found: list[PhasePoint] = []
    for x in xs:
        for xi in ks:
            cx, ck = float(x), float(xi)
            ok = False
            for _ in range(max_iter):
                f = complex(model.value(cx, ck)) - z
                if abs(f) < tol:
                    ok = True
                    break
                gx, gk = model.gradient(cx, ck)
                gx, gk = complex(gx), complex(gk)
                jac = np.array([[gx.real, gk.real], [gx.imag, gk.imag]])
                try:
                    step = np.linalg.solve(jac, [-f.real, -f.imag])
                except np.linalg.LinAlgError:
                    break
                cx += step[0]
                ck += step[1]
                if abs(cx) > 1e6 or abs(ck) > 1e6:
                    break
            if not ok:
                continue
            rho = PhasePoint.on(model, cx, ck)
            if model.domain == "line" and not (x0 <= rho.x <= x1 and k0 <= rho.xi <= k1):
                continue
            dup = False
            for r in found:
                dx = abs(r.x - rho.x)
                if model.domain == "torus":
                    dx = min(dx, TWO_PI - dx)
                if math.hypot(dx, r.xi - rho.xi) < MERGE_TOL:
                    dup = True
                    break
            if not dup:
                found.append(rho)
    return found


def solve_energy_shell(model: SymbolModel, z: complex, *, margin: float = 0.05,
                       method: str = "closed", box=None) -> EnergyShell:
    """All points of ``p0^{-1}(z)`` with signs and classical densities.

    Parameters
    ----------
    margin : float
        Required distance from ``z`` to the boundary of the classical spectrum.
    method : {"closed", "newton"}
        ``"newton"`` seeds Newton's method from a 64x64 grid over ``box``
        (``((x_min, x_max), (xi_min, xi_max))``); it exists for symbols
        without a closed-form shell and is cross-checked against the
        closed form for the built-in models.
    """
    z = complex(z)
    dist = boundary_distance(model, z)
    if dist <= 0:
        raise NoSolution(f"z={z} lies outside the classical spectrum")
    if dist < margin:
        raise ValueError(f"z={z} is within {dist:.3g} of the spectrum boundary (margin {margin})")
    if method == "closed":
        rhos = _closed_form_points(model, z)
        tol = 1e-10
    elif method == "newton":
        if box is None:
            r = math.sqrt(abs(z)) + 2.0
            box = ((0.0, TWO_PI), (-r, r)) if model.domain == "torus" else ((-r, r), (-r, r))
        rhos = _newton_points(model, z, box)
        tol = 1e-8
    else:
        raise ValueError(f"unknown shell method {method!r}")
    if not rhos:
        raise NoSolution(f"no shell points found for z={z}")
    for rho in rhos:
        res = abs(eval_symbol(model, rho) - z)
        if res > tol:
            raise AssertionError(f"shell residual {res:.2e} at {rho}")
    return _make_shell(model, z, rhos)


def classical_density(model: SymbolModel, z) -> np.ndarray:
    """Push-forward density ``sum_j sigma_+^j + sigma_-^j`` at each ``z``.

    Vectorised closed form for the built-in models; zero outside the
    classical spectrum.
    """
    z = np.asarray(z, dtype=complex)
    if model.kind == "complex_ho":
        X, Y = z.real, z.imag
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where((X > 0) & (Y > 0), 1.0 / np.sqrt(np.abs(X * Y)), 0.0)
        return d
    a, b = z.real, z.imag
    inside = np.abs(b) < 1
    root = np.sqrt(np.clip(1.0 - b * b, 0.0, None))
    out = np.zeros(z.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for t in (a - root, a + root):
            ok = inside & (t > 0)
            # 2q points, each with sigma = 1 / (2 q sqrt(t) sqrt(1 - b^2))
            contrib = 1.0 / (np.sqrt(np.abs(t)) * root)
            out = out + np.where(ok, contrib, 0.0)
    return out


@dataclass
class VolumeEstimate:
    value: float
    mc_value: float
    mc_stderr: float


def _bounding_box(model: SymbolModel, gamma):
    x1, x2, y1, y2 = gamma
    if model.kind == "complex_ho":
        sx, sy = math.sqrt(max(x2, 0.0)), math.sqrt(max(y2, 0.0))
        return (-sy, sy), (-sx, sx)
    r = math.sqrt(max(x2, 0.0) + 1.0)
    return (0.0, TWO_PI), (-r, r)


def volume_estimates(model: SymbolModel, gamma, *, n_mc: int = 400_000, n_quad: int = 48,
                     seed: int = 12345) -> VolumeEstimate:
    """Symplectic volume of ``p0^{-1}(gamma)`` by quadrature and by Monte Carlo.

    ``gamma`` is the rectangle ``(re_min, re_max, im_min, im_max)``.
    """
    x1, x2, y1, y2 = map(float, gamma)
    if x2 <= x1 or y2 <= y1:
        return VolumeEstimate(0.0, 0.0, 0.0)
    # (b) push-forward density integrated with tensor Gauss-Legendre
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    xs = 0.5 * (x2 - x1) * nodes + 0.5 * (x2 + x1)
    ys = 0.5 * (y2 - y1) * nodes + 0.5 * (y2 + y1)
    Z = xs[:, None] + 1j * ys[None, :]
    W = np.outer(weights, weights) * 0.25 * (x2 - x1) * (y2 - y1)
    quad = float(np.sum(W * classical_density(model, Z)))
    # (a) rejection sampling over a phase-space box
    (a0, a1), (b0, b1) = _bounding_box(model, gamma)
    box_area = (a1 - a0) * (b1 - b0)
    u = Stream(seed).uniform(2 * n_mc)
    xx = a0 + (a1 - a0) * u[:n_mc]
    kk = b0 + (b1 - b0) * u[n_mc:]
    p = model.value(xx, kk)
    hit = (p.real >= x1) & (p.real < x2) & (p.imag >= y1) & (p.imag < y2)
    f = hit.mean()
    return VolumeEstimate(quad, float(box_area * f), box_area * math.sqrt(max(f * (1 - f), 1e-300) / n_mc))


def phase_space_volume(model: SymbolModel, gamma, **kwargs) -> float:
    """Volume of ``p0^{-1}(gamma)``; raises ``InconsistentVolume`` when the
    quadrature and Monte Carlo estimates disagree by more than 3 standard errors."""
    est = volume_estimates(model, gamma, **kwargs)
    if est.value == 0.0:
        return 0.0
    if abs(est.mc_value - est.value) > 3.0 * est.mc_stderr:
        raise InconsistentVolume(
            f"quadrature {est.value:.6g} vs Monte Carlo {est.mc_value:.6g} +- {est.mc_stderr:.2g}")
    return est.value
