"""Compiled inner loops.

Complex numbers are carried as separate real and imaginary arrays; this
keeps the O(n) sums vectorisable and lets every kernel release the GIL.
"""
import math

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True, fastmath=True, error_model="numpy")
def log_sums(xr, xi, zr, zi):
    """S1 = sum 1/(z-x_j), S2 = sum 1/(z-x_j)^2 as (s1r, s1i, s2r, s2i)."""
    s1r = 0.0
    s1i = 0.0
    s2r = 0.0
    s2i = 0.0
    for j in range(xr.shape[0]):
        dr = zr - xr[j]
        di = zi - xi[j]
        m = 1.0 / (dr * dr + di * di)
        ir = dr * m
        ii = -di * m
        s1r += ir
        s1i += ii
        s2r += ir * ir - ii * ii
        s2i += 2.0 * ir * ii
    return s1r, s1i, s2r, s2i


@nb.njit(cache=True, nogil=True, fastmath=True, error_model="numpy")
def _coupling(zr, zi, k):
    cr = 0.0
    ci = 0.0
    a = zr[k]
    b = zi[k]
    for m in range(zr.shape[0]):
        dr = a - zr[m]
        di = b - zi[m]
        q = dr * dr + di * di
        if q > 0.0:
            q = 1.0 / q
            cr += dr * q
            ci -= di * q
    return cr, ci


@nb.njit(cache=True, nogil=True, error_model="numpy")
def aberth(xr, xi, zr, zi, tol, maxit):
    """Gauss-Seidel Aberth sweeps for the zeros of p' given the roots of p.

    Updates ``zr``/``zi`` in place.  A point is frozen once its correction
    falls below ``tol * (1 + |z|)``.  Returns (sweeps, unconverged count).
    """
    n = zr.shape[0]
    active = np.ones(n, np.bool_)
    nact = n
    it = 0
    while nact > 0 and it < maxit:
        it += 1
        for k in range(n):
            if not active[k]:
                continue
            s1r, s1i, s2r, s2i = log_sums(xr, xi, zr[k], zi[k])
            # Newton correction for p': N = S1 / (S1^2 - S2)
            dr = s1r * s1r - s1i * s1i - s2r
            di = 2.0 * s1r * s1i - s2i
            q = dr * dr + di * di
            if q == 0.0 or not math.isfinite(q):
                continue
            q = 1.0 / q
            nr = (s1r * dr + s1i * di) * q
            ni = (s1i * dr - s1r * di) * q
            cr, ci = _coupling(zr, zi, k)
            er = 1.0 - (nr * cr - ni * ci)
            ei = -(nr * ci + ni * cr)
            q = 1.0 / (er * er + ei * ei)
            wr = (nr * er + ni * ei) * q
            wi = (ni * er - nr * ei) * q
            zr[k] -= wr
            zi[k] -= wi
            if math.hypot(wr, wi) <= tol * (1.0 + math.hypot(zr[k], zi[k])):
                active[k] = False
                nact -= 1
    return it, nact


@nb.njit(cache=True, nogil=True)
def residuals(xr, xi, zr, zi):
    """|S1(w)| * min_j |w - x_j| for every approximant w."""
    out = np.empty(zr.shape[0])
    for k in range(zr.shape[0]):
        s1r = 0.0
        s1i = 0.0
        dmin = np.inf
        for j in range(xr.shape[0]):
            dr = zr[k] - xr[j]
            di = zi[k] - xi[j]
            q = dr * dr + di * di
            if q < dmin:
                dmin = q
            if q > 0.0:
                q = 1.0 / q
                s1r += dr * q
                s1i -= di * q
        if dmin == 0.0:
            out[k] = np.inf
        else:
            out[k] = math.hypot(s1r, s1i) * math.sqrt(dmin)
    return out


@nb.njit(cache=True, nogil=True)
def hessenberg_eigvals(H, maxit):
    """Eigenvalues of a complex upper Hessenberg matrix.

    Single-shift QR with Givens rotations and a Wilkinson shift, deflating
    from the bottom.  ``H`` is overwritten.  Returns (eigenvalues, ok).
    """
    n = H.shape[0]
    ev = np.empty(n, np.complex128)
    eps = 2.220446049250313e-16
    hi = n - 1
    iters = 0
    total = 0
    cs = np.empty(n)
    sn = np.empty(n, np.complex128)
    while hi >= 0:
        if hi == 0:
            ev[0] = H[0, 0]
            break
        lo = hi
        while lo > 0:
            scale = abs(H[lo - 1, lo - 1]) + abs(H[lo, lo])
            if scale == 0.0:
                scale = 1.0
            if abs(H[lo, lo - 1]) <= eps * scale:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            ev[hi] = H[hi, hi]
            hi -= 1
            iters = 0
            continue
        iters += 1
        total += 1
        if total > maxit * n:
            return ev, False
        a = H[hi - 1, hi - 1]
        b = H[hi - 1, hi]
        c = H[hi, hi - 1]
        d = H[hi, hi]
        if iters % 11 == 0:
            # exceptional shift to break cycles
            mu = d + 0.75 * abs(H[hi, hi - 1])
        else:
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            m1 = 0.5 * (a + d) + disc
            m2 = 0.5 * (a + d) - disc
            mu = m1 if abs(m1 - d) < abs(m2 - d) else m2
        for k in range(lo, hi + 1):
            H[k, k] -= mu
        for k in range(lo, hi):
            x = H[k, k]
            y = H[k + 1, k]
            r = math.sqrt(x.real * x.real + x.imag * x.imag + y.real * y.real + y.imag * y.imag)
            ax = abs(x)
            if r == 0.0:
                cs[k] = 1.0
                sn[k] = 0.0
                continue
            if ax == 0.0:
                c_ = 0.0
                s_ = np.conj(y) / r
            else:
                c_ = ax / r
                s_ = (x / ax) * np.conj(y) / r
            cs[k] = c_
            sn[k] = s_
            for j in range(k, hi + 1):
                u = H[k, j]
                v = H[k + 1, j]
                H[k, j] = c_ * u + s_ * v
                H[k + 1, j] = -np.conj(s_) * u + c_ * v
        for k in range(lo, hi):
            c_ = cs[k]
            s_ = sn[k]
            top = min(k + 2, hi)
            for i in range(lo, top + 1):
                u = H[i, k]
                v = H[i, k + 1]
                H[i, k] = u * c_ + v * np.conj(s_)
                H[i, k + 1] = -u * s_ + v * c_
        for k in range(lo, hi + 1):
            H[k, k] += mu
    return ev, True

