"""Dense complex eigenvalues: balancing, Hessenberg reduction, shifted QR.

The QR iteration works on the active window of the Hessenberg matrix only,
since eigenvectors are never needed. Kernels are compiled with numba and
release the GIL so that independent matrices can be solved from threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import NoConvergence

EPS = np.finfo(float).eps
_SAFMIN = np.finfo(float).tiny
_DMAX = 2.0**400
_DMIN = 2.0**-400


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    iterations: int
    convergedAll: bool


@numba.njit(cache=True, nogil=True)
def _balance_kernel(a, d, max_sweeps):
    n = a.shape[0]
    for _ in range(max_sweeps):
        changed = False
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += abs(a[j, i])
                    r += abs(a[i, j])
            if c == 0.0 or r == 0.0:
                continue
            f = 1.0
            # scalings stay inside [2^-400, 2^400] so tiny entries cannot overflow D
            while c < 0.5 * r and d[i] * f < _DMAX:
                c *= 2.0
                r *= 0.5
                f *= 2.0
            while c > 2.0 * r and d[i] * f > _DMIN:
                c *= 0.5
                r *= 2.0
                f *= 0.5
            if f != 1.0:
                changed = True
                d[i] *= f
                for j in range(n):
                    a[j, i] *= f
                    a[i, j] /= f
        if not changed:
            return True
    return False


def balance(A):
    """Diagonal similarity ``B = D^-1 A D`` with power-of-two scalings.

    Off-diagonal row and column 1-norms of ``B`` end up within a factor 2
    of each other (rows or columns that are entirely zero are left alone).

    Returns
    -------
    D : (n,) ndarray
        Diagonal of the scaling matrix.
    B : (n, n) complex ndarray
        Balanced matrix.
    """
    B = np.array(A, dtype=np.complex128, copy=True)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("balance expects a square matrix")
    D = np.ones(B.shape[0])
    _balance_kernel(B, D, 200)
    return D, B


@numba.njit(cache=True, nogil=True)
def _hessenberg_kernel(a):
    n = a.shape[0]
    v = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        m = n - k - 1
        alpha = a[k + 1, k]
        xnorm2 = 0.0
        for i in range(k + 2, n):
            xnorm2 += a[i, k].real ** 2 + a[i, k].imag ** 2
        if xnorm2 == 0.0:
            continue
        norm = np.sqrt(alpha.real ** 2 + alpha.imag ** 2 + xnorm2)
        if alpha == 0:
            phase = 1.0 + 0.0j
        else:
            phase = alpha / abs(alpha)
        beta = -phase * norm
        v[0] = alpha - beta
        for i in range(1, m):
            v[i] = a[k + 1 + i, k]
        vnorm2 = 0.0
        for i in range(m):
            vnorm2 += v[i].real ** 2 + v[i].imag ** 2
        tau = 2.0 / vnorm2
        # left: rows k+1..n-1, columns k..n-1
        for j in range(k, n):
            s = 0.0j
            for i in range(m):
                s += v[i].conjugate() * a[k + 1 + i, j]
            s *= tau
            for i in range(m):
                a[k + 1 + i, j] -= v[i] * s
        # right: all rows, columns k+1..n-1
        for i in range(n):
            s = 0.0j
            for j in range(m):
                s += a[i, k + 1 + j] * v[j]
            s *= tau
            for j in range(m):
                a[i, k + 1 + j] -= s * v[j].conjugate()
        a[k + 1, k] = beta
        for i in range(k + 2, n):
            a[i, k] = 0.0


@numba.njit(cache=True, nogil=True)
def _wilkinson(a11, a12, a21, a22):
    # eigenvalue of the trailing 2x2 block closest to a22
    tr = a11 + a22
    det = a11 * a22 - a12 * a21
    disc = np.sqrt(tr * tr * 0.25 - det)
    l1 = tr * 0.5 + disc
    l2 = tr * 0.5 - disc
    if abs(l1 - a22) <= abs(l2 - a22):
        return l1
    return l2


@numba.njit(cache=True, nogil=True)
def _hqr_kernel(h, w, max_sweeps):
    """Eigenvalues of upper Hessenberg ``h`` (destroyed) into ``w``.

    Returns the number of QR sweeps, or -1 on failure.
    """
    n = h.shape[0]
    hnorm = 0.0
    for i in range(n):
        for j in range(max(0, i - 1), n):
            hnorm = max(hnorm, abs(h[i, j]))
    small = _SAFMIN * n / EPS
    ihi = n - 1
    total = 0
    its = 0
    while ihi >= 0:
        l = ihi
        while l > 0:
            tst = abs(h[l - 1, l - 1]) + abs(h[l, l])
            if tst == 0.0:
                tst = hnorm
            if abs(h[l, l - 1]) <= max(EPS * tst, small):
                h[l, l - 1] = 0.0
                break
            l -= 1
        if l == ihi:
            w[ihi] = h[ihi, ihi]
            ihi -= 1
            its = 0
            continue
        if total >= max_sweeps:
            return -1
        its += 1
        total += 1
        if its % 10 == 0:
            # exceptional shift to break stagnation
            mu = h[ihi, ihi] + 0.75 * abs(h[ihi, ihi - 1].real) + 0.5j * abs(h[ihi, ihi - 1])
        elif its % 10 == 5 and ihi - l >= 2:
            mu = h[l, l] + 0.75 * abs(h[l + 1, l])
        else:
            mu = _wilkinson(h[ihi - 1, ihi - 1], h[ihi - 1, ihi], h[ihi, ihi - 1], h[ihi, ihi])
        x = h[l, l] - mu
        y = h[l + 1, l]
        for k in range(l, ihi):
            if k > l:
                x = h[k, k - 1]
                y = h[k + 1, k - 1]
            ax = abs(x)
            r = np.hypot(ax, abs(y))
            if r == 0.0:
                c = 1.0
                s = 0.0j
            elif ax == 0.0:
                c = 0.0
                s = 1.0 + 0.0j
                if k > l:
                    h[k, k - 1] = y
                    h[k + 1, k - 1] = 0.0
            else:
                c = ax / r
                s = (x / ax) * y.conjugate() / r
                if k > l:
                    h[k, k - 1] = (x / ax) * r
                    h[k + 1, k - 1] = 0.0
            sc = s.conjugate()
            for j in range(max(l, k), ihi + 1):
                p = h[k, j]
                q = h[k + 1, j]
                h[k, j] = c * p + s * q
                h[k + 1, j] = -sc * p + c * q
            for i in range(l, min(k + 2, ihi) + 1):
                p = h[i, k]
                q = h[i, k + 1]
                h[i, k] = c * p + sc * q
                h[i, k + 1] = -s * p + c * q
    return total


def hessenberg(A):
    """Unitary reduction to upper Hessenberg form (returns a new array)."""
    H = np.array(A, dtype=np.complex128, copy=True)
    _hessenberg_kernel(H)
    return H


def eigenvalues(A, *, balance_first: bool = True, backend: str = "native") -> EigenResult:
    """All eigenvalues of a dense complex square matrix.

    ``backend="native"`` runs balancing, Householder reduction to Hessenberg
    form and the single-shift complex QR iteration with Wilkinson shifts.
    ``backend="lapack"`` delegates to LAPACK ``zgeev`` through numpy; both
    satisfy the same backward-error contract and the tests accept either.

    Raises
    ------
    NoConvergence
        If the QR iteration needs more than ``40 n`` sweeps.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    n = A.shape[0]
    if backend == "lapack":
        return EigenResult(np.linalg.eigvals(A.astype(np.complex128)), 0, True)
    if backend != "native":
        raise ValueError(f"unknown eigen backend {backend!r}")
    if balance_first:
        _, H = balance(A)
    else:
        H = np.array(A, dtype=np.complex128, copy=True)
    # unit max-entry keeps Householder norms away from overflow
    scale = float(np.max(np.abs(H)))
    if scale == 0.0:
        return EigenResult(np.zeros(n, dtype=np.complex128), 0, True)
    H /= scale
    _hessenberg_kernel(H)
    w = np.empty(n, dtype=np.complex128)
    sweeps = _hqr_kernel(H, w, 40 * n)
    if sweeps < 0:
        raise NoConvergence(f"QR iteration did not deflate within {40 * n} sweeps (n={n})")
    return EigenResult(w * scale, sweeps, True)
