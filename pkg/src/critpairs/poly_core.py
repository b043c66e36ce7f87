"""Polynomials represented by their roots, and their critical points.

Everything here works from the roots directly: ``p'/p`` and ``p''/p`` come
from the sums ``S1 = sum 1/(z-X_j)`` and ``S2 = sum 1/(z-X_j)^2``, so no
coefficient is ever formed by the main solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K
from .errors import DegenerateInputError, DomainError, PoleError, SizeError, SolverFailure

DEFAULT_TOL = 1e-12
RESIDUAL_TOL = 1e-9
MAX_ITER = 500
DUPLICATE_GAP = 1e-14
ORACLE_MAX_N = 128

METHOD_ABERTH = "simultaneous-iteration"
METHOD_COMPANION = "companion-oracle"


@dataclass(frozen=True)
class RootSample:
    """The roots ``X_1..X_n`` of one random polynomial."""

    roots: np.ndarray
    seed: int = 0
    alpha: float = float("nan")
    n: int = field(init=False)

    def __post_init__(self):
        r = np.ascontiguousarray(np.asarray(self.roots, dtype=np.complex128).ravel())
        if r.size < 2:
            raise DomainError("a RootSample needs at least two roots")
        if not np.all(np.isfinite(r)):
            raise DomainError("roots must be finite")
        r.setflags(write=False)
        object.__setattr__(self, "roots", r)
        object.__setattr__(self, "n", int(r.size))


@dataclass(frozen=True)
class CriticalSet:
    """The ``n-1`` zeros of ``p'`` with per-point residuals."""

    points: np.ndarray
    residuals: np.ndarray
    iterations: int
    method: str

    @property
    def worst_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def _split(z):
    z = np.asarray(z, dtype=np.complex128)
    return np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)


def log_derivative_sums(roots, z: complex) -> tuple[complex, complex]:
    """``(S1, S2)`` at ``z``; ``p'/p = S1`` and ``p''/p = S1**2 - S2``."""
    roots = np.asarray(roots, dtype=np.complex128).ravel()
    z = complex(z)
    hit = np.flatnonzero(roots == z)
    if hit.size:
        raise PoleError(f"z coincides with root {int(hit[0])}", index=int(hit[0]))
    xr, xi = _split(roots)
    s1r, s1i, s2r, s2i = K.log_sums(xr, xi, z.real, z.imag)
    return complex(s1r, s1i), complex(s2r, s2i)


def check_distinct(roots, gap: float = DUPLICATE_GAP) -> None:
    """Raise :class:`DegenerateInputError` if two roots are closer than ``gap``."""
    roots = np.asarray(roots, dtype=np.complex128)
    pts = np.column_stack([roots.real, roots.imag])
    pairs = cKDTree(pts).query_pairs(gap, output_type="ndarray")
    if len(pairs):
        i, j = sorted(pairs[0])
        raise DegenerateInputError(f"roots {i} and {j} coincide to within {gap:g}")


def residuals(roots, points) -> np.ndarray:
    """Scale-free residual ``|S1(w)| * min_j |w - X_j|`` for each ``w``."""
    xr, xi = _split(roots)
    zr, zi = _split(points)
    return K.residuals(xr, xi, zr, zi)


def spiral_argsort(z) -> np.ndarray:
    """Indices sorting ``z`` ascending by (modulus, argument in (-pi, pi], index)."""
    z = np.asarray(z, dtype=np.complex128)
    ang = np.angle(z)
    ang = np.where(ang == -np.pi, np.pi, ang)
    return np.lexsort((np.arange(z.size), ang, np.abs(z)))


def seeds(roots) -> np.ndarray:
    """Starting points ``X_i (1 - 1/n)``, omitting the spiral-minimal root."""
    roots = np.asarray(roots, dtype=np.complex128)
    n = roots.size
    order = spiral_argsort(roots)
    return roots[order[1:]] * (1.0 - 1.0 / n)


def critical_points(sample: RootSample, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                    residual_tol: float | None = None) -> CriticalSet:
    """All zeros of ``p'`` by a simultaneous (Aberth-Ehrlich) iteration.

    The residual acceptance level defaults to ``tol * 1e3``.
    """
    if not tol >= 1e-13:
        raise DomainError("tol must be at least 1e-13")
    check_distinct(sample.roots)
    xr, xi = _split(sample.roots)
    start = seeds(sample.roots)
    hit = np.isin(start, sample.roots)
    if np.any(hit):
        # a seed sitting exactly on a root is a pole of p'/p; step off it
        start[hit] += 1e-7 * (1.0 + np.abs(start[hit])) * np.exp(0.5j)
    zr, zi = _split(start)
    zr = zr.copy()
    zi = zi.copy()
    sweeps, left = K.aberth(xr, xi, zr, zi, tol, max_iter)
    res = K.residuals(xr, xi, zr, zi)
    limit = tol * 1e3 if residual_tol is None else residual_tol
    worst = float(np.max(res))
    if left or not worst <= limit:
        raise SolverFailure(
            f"critical-point iteration failed: {left} unconverged after {sweeps} sweeps, "
            f"worst residual {worst:.3g}", worst_residual=worst, iterations=int(sweeps))
    return CriticalSet(points=zr + 1j * zi, residuals=res, iterations=int(sweeps),
                       method=METHOD_ABERTH)


def _balance(A: np.ndarray) -> np.ndarray:
    # diagonal similarity by powers of two so row and column norms match
    A = A.copy()
    n = A.shape[0]
    radix = 2.0
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(A[:, i])) - abs(A[i, i])
            r = np.sum(np.abs(A[i, :])) - abs(A[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= radix * radix
            g = r * radix
            while c > g:
                f /= radix
                c /= radix * radix
            if (c + r) / f < 0.95 * s:
                done = False
                A[i, :] /= f
                A[:, i] *= f
    return A


ORACLE_DPS = 40


def _derivative_coeffs_mp(roots) -> list:
    # monic p expanded in extended precision, then differentiated
    c = [mpmath.mpc(1)]
    for x in roots:
        x = mpmath.mpc(x.real, x.imag)
        nxt = c + [mpmath.mpc(0)]
        for k in range(1, len(nxt)):
            nxt[k] -= x * c[k - 1]
        c = nxt
    n = len(c) - 1
    return [c[k] * (n - k) for k in range(n)]


def _mp_newton(q, z, steps):
    for _ in range(steps):
        p = q[0]
        dp = mpmath.mpc(0)
        for a in q[1:]:
            dp = dp * z + p
            p = p * z + a
        if dp == 0:
            break
        step = p / dp
        z -= step
        if abs(step) <= (1 + abs(z)) * mpmath.mpf(10) ** (-ORACLE_DPS // 2):
            break
    return z


def companion_oracle(sample: RootSample, polish: int = 8) -> CriticalSet:
    """Zeros of ``p'`` from the companion matrix of its expanded coefficients.

    Independent of the root-sum solver: ``p`` is expanded, differentiated,
    and the eigenvalues of the (balanced) companion matrix come from an
    in-repo Hessenberg QR.  Newton steps on the coefficient form, carried
    out in extended precision, then polish the eigenvalues; ``polish=0``
    returns the raw double-precision eigenvalues.
    """
    n = sample.n
    if n > ORACLE_MAX_N:
        raise SizeError(f"companion oracle supports n <= {ORACLE_MAX_N}, got {n}")
    check_distinct(sample.roots)
    with mpmath.workdps(ORACLE_DPS):
        qmp = _derivative_coeffs_mp(sample.roots)
        lead = qmp[0]
        qmp = [a / lead for a in qmp]
        q = np.array([complex(a) for a in qmp])
    m = q.size - 1
    if m == 1:
        pts = np.array([-q[1]])
    else:
        C = np.zeros((m, m), dtype=np.complex128)
        C[0, :] = -q[1:]
        C[np.arange(1, m), np.arange(m - 1)] = 1.0
        # balancing preserves the Hessenberg shape of the companion matrix
        ev, ok = K.hessenberg_eigvals(_balance(C), 60)
        if not ok:
            raise SolverFailure("companion QR did not converge")
        pts = ev
    if polish:
        with mpmath.workdps(ORACLE_DPS):
            pts = np.array([complex(_mp_newton(qmp, mpmath.mpc(z.real, z.imag), polish))
                            for z in pts])
    res = residuals(sample.roots, pts)
    return CriticalSet(points=pts, residuals=res, iterations=0, method=METHOD_COMPANION)
