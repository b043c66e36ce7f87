"""Pairing of roots with critical points.

Spiral order, order statistics, the nearest-root map, first and second
order location predictions, and a deterministic certificate that an
isolated root has exactly one nearby critical point.

Indices are 0-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import total_ordering

import numpy as np
from scipy.spatial import cKDTree

from .errors import CertificateRefused, DomainError, PoleError
from .poly_core import CriticalSet, RootSample, spiral_argsort

DEFAULT_C1 = 0.5
DEFAULT_C2 = 2.0
DEFAULT_DEPTH = 8

PAIRING_COLUMNS = ("trial", "rank", "re_root", "im_root", "re_cp", "im_cp",
                   "dist_first", "dist_second", "iota_ok", "order_ok")


def principal_arg(z: complex) -> float:
    """Argument in ``(-pi, pi]``; ``-pi`` from signed zeros is mapped to ``pi``."""
    a = math.atan2(z.imag, z.real)
    return math.pi if a == -math.pi else a


@total_ordering
@dataclass(frozen=True)
class SpiralKey:
    modulus: float
    argument: float
    tiebreak_index: int

    @classmethod
    def of(cls, z: complex, index: int) -> "SpiralKey":
        z = complex(z)
        return cls(abs(z), principal_arg(z), int(index))

    def _t(self):
        return (self.modulus, self.argument, self.tiebreak_index)

    def __lt__(self, other: "SpiralKey") -> bool:
        return self._t() < other._t()


def spiral_compare(a: tuple[complex, int], b: tuple[complex, int]) -> int:
    """-1 if ``a`` precedes ``b`` in spiral order, 1 if it follows, 0 if equal."""
    ka = SpiralKey.of(*a)
    kb = SpiralKey.of(*b)
    return -1 if ka < kb else (1 if kb < ka else 0)


def descending_indices(z) -> np.ndarray:
    """Indices of ``z`` from spiral-largest to spiral-smallest."""
    return spiral_argsort(z)[::-1]


def order_statistics(sample: RootSample) -> np.ndarray:
    """``(X_(1), ..., X_(n))`` sorted descending in spiral order."""
    return sample.roots[descending_indices(sample.roots)]


def nearest_root_indices(roots, z) -> np.ndarray:
    """Vectorised nearest-root index with the smallest index winning ties."""
    roots = np.asarray(roots, dtype=np.complex128)
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    k = min(roots.size, 4)
    tree = cKDTree(np.column_stack([roots.real, roots.imag]))
    _, idx = tree.query(np.column_stack([z.real, z.imag]), k=k)
    idx = np.asarray(idx).reshape(z.size, k)
    out = np.empty(z.size, dtype=np.int64)
    for m in range(z.size):
        cand = idx[m]
        d = np.abs(z[m] - roots[cand])
        best = d.min()
        if k < roots.size and d.max() == best:
            # every candidate tied; fall back to a full scan
            out[m] = int(np.argmin(np.abs(z[m] - roots)))
        else:
            out[m] = int(cand[d == best].min())
    return out


def nearest_root_index(sample: RootSample | np.ndarray, z: complex) -> int:
    """Smallest index attaining ``min_j |z - X_j|``."""
    roots = sample.roots if isinstance(sample, RootSample) else np.asarray(sample, dtype=complex)
    return int(np.argmin(np.abs(complex(z) - roots)))


def mean_inverse_gap(roots, i: int) -> complex:
    """``(1/(n-1)) * sum_{j != i} 1/(X_i - X_j)``."""
    roots = np.asarray(roots, dtype=np.complex128)
    diff = roots[i] - np.delete(roots, i)
    if np.any(diff == 0):
        raise PoleError(f"root {i} coincides with another root", index=int(i))
    return complex(np.sum(1.0 / diff)) / (roots.size - 1)


def second_order_prediction(sample: RootSample, i: int) -> complex:
    """``X_i - (1/n) / mean_inverse_gap(i)``."""
    g = mean_inverse_gap(sample.roots, i)
    if g == 0:
        raise PoleError(f"mean inverse gap vanishes at root {i}", index=int(i))
    return complex(sample.roots[i]) - 1.0 / (sample.n * g)


def first_order_prediction(sample: RootSample, i: int) -> complex:
    return complex(sample.roots[i]) * (1.0 - 1.0 / sample.n)


def glpair_defect(roots, w: complex, i: int) -> float:
    """``|w - X_i + 1/sum_{j != i} 1/(w - X_j)|``; zero at every critical point."""
    roots = np.asarray(roots, dtype=np.complex128)
    s = complex(np.sum(1.0 / (w - np.delete(roots, i))))
    return abs(w - roots[i] + 1.0 / s)


@dataclass(frozen=True)
class Annulus:
    inner: float
    outer: float

    def __post_init__(self):
        if not (0.0 <= self.inner <= self.outer):
            raise DomainError("annulus needs 0 <= inner <= outer")

    def contains(self, z) -> np.ndarray:
        m = np.abs(np.asarray(z))
        return (m >= self.inner) & (m <= self.outer)


WHOLE_PLANE = Annulus(0.0, math.inf)


def default_delta(alpha: float) -> float:
    """Midpoint of the admissible range ``(1/(4 alpha + 3), 1/(alpha + 1))``."""
    if alpha < 0:
        raise DomainError("the n^-delta annulus is used for alpha >= 0")
    return 0.5 * (1.0 / (4.0 * alpha + 3.0) + 1.0 / (alpha + 1.0))


def edge_annulus(alpha: float, n: int, delta: float | None = None, ell: float | None = None) -> Annulus:
    """``{1 - n^-delta <= |z| <= 1}`` for ``alpha >= 0``, ``{1 - ell/n <= |z| <= 1}`` otherwise."""
    if alpha >= 0:
        d = default_delta(alpha) if delta is None else delta
        return Annulus(max(0.0, 1.0 - n ** (-d)), 1.0)
    if ell is None:
        ell = max(4, int(math.sqrt(math.log(n))))
    return Annulus(max(0.0, 1.0 - ell / n), 1.0)


@dataclass
class PairingReport:
    """Pairs of critical points in an annulus with their nearest roots."""

    cp_index: np.ndarray
    iota: np.ndarray
    rank: np.ndarray
    root_rank: np.ndarray
    dist_first_order: np.ndarray
    dist_second_order: np.ndarray
    injective: bool
    iota_ok: np.ndarray
    order_preserved: bool
    depth: int
    annulus: tuple[float, float]
    points: np.ndarray = field(repr=False)
    roots: np.ndarray = field(repr=False)

    @property
    def order_ok(self) -> np.ndarray:
        return self.rank == self.root_rank

    def rows(self, trial: int = 0) -> list[tuple]:
        """Rows with the :data:`PAIRING_COLUMNS` layout, ordered by rank."""
        out = []
        for m in np.argsort(self.rank, kind="stable"):
            x = self.roots[self.iota[m]]
            w = self.points[self.cp_index[m]]
            out.append((int(trial), int(self.rank[m]) + 1, float(x.real), float(x.imag),
                        float(w.real), float(w.imag), float(self.dist_first_order[m]),
                        float(self.dist_second_order[m]), bool(self.iota_ok[m]),
                        bool(self.order_ok[m])))
        return out


def build_pairing(sample: RootSample, cps: CriticalSet, annulus: Annulus = WHOLE_PLANE,
                  depth: int = DEFAULT_DEPTH) -> PairingReport:
    """Map each critical point in ``annulus`` to its nearest root.

    ``rank`` and ``root_rank`` are 0-based positions in descending spiral
    order among all critical points and all roots respectively.  The pairing
    is order-preserving when the ``depth`` largest critical points map to the
    ``depth`` largest roots rank for rank.
    """
    roots = sample.roots
    pts = np.asarray(cps.points)
    n = sample.n
    cp_desc = descending_indices(pts)
    cp_rank = np.empty(pts.size, dtype=np.int64)
    cp_rank[cp_desc] = np.arange(pts.size)
    root_desc = descending_indices(roots)
    root_rank = np.empty(n, dtype=np.int64)
    root_rank[root_desc] = np.arange(n)

    sel = np.flatnonzero(annulus.contains(pts))
    iota = nearest_root_indices(roots, pts[sel]) if sel.size else np.empty(0, dtype=np.int64)
    counts = np.bincount(iota, minlength=n)
    iota_ok = counts[iota] == 1
    d1 = np.abs(pts[sel] - roots[iota] * (1.0 - 1.0 / n))
    d2 = np.array([abs(pts[c] - second_order_prediction(sample, int(i))) for c, i in zip(sel, iota)])

    L = min(depth, pts.size)
    top = cp_desc[:L]
    top_iota = nearest_root_indices(roots, pts[top]) if L else np.empty(0, dtype=np.int64)
    order_preserved = bool(np.all(root_rank[top_iota] == np.arange(L)))

    return PairingReport(cp_index=sel, iota=iota, rank=cp_rank[sel], root_rank=root_rank[iota],
                         dist_first_order=d1, dist_second_order=d2.reshape(-1),
                         injective=bool(np.all(iota_ok)), iota_ok=iota_ok,
                         order_preserved=order_preserved, depth=L,
                         annulus=(annulus.inner, annulus.outer), points=pts, roots=roots)


def top_order_ok(sample: RootSample, cps: CriticalSet, depth: int = DEFAULT_DEPTH) -> np.ndarray:
    """Per rank ``r < depth``: does the r-th largest critical point pair with the r-th largest root?"""
    pts = np.asarray(cps.points)
    L = min(depth, pts.size)
    top = descending_indices(pts)[:L]
    root_desc = descending_indices(sample.roots)
    return nearest_root_indices(sample.roots, pts[top]) == root_desc[:L]


def default_C(C1: float, C2: float) -> float:
    return 8.0 * (1.0 + 2.0 * C2 * C2) / C1 ** 3 + 1.0


@dataclass(frozen=True)
class Certificate:
    """Outcome of the isolated-root test for ``(z - xi) * prod (z - zeta_j)``.

    ``cond_ii`` records whether the explicit Lipschitz bound ``k_lip`` is
    valid on the disk ``|z - xi| <= 2/(C1 n)``; when it is not, ``k_lip`` is
    infinite and ``refused`` is set.
    """

    xi: complex
    C1: float
    C2: float
    C: float
    k_lip: float
    n_other: int
    disk_radius: float
    predicted_center: complex
    error_bound: float
    mean_inverse: complex
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    cond_C: bool
    cond_n: bool
    refused: bool

    @property
    def conditions_met(self) -> tuple[bool, bool, bool, bool, bool]:
        return (self.cond_i, self.cond_ii, self.cond_iii, self.cond_C, self.cond_n)

    @property
    def certified(self) -> bool:
        return all(self.conditions_met)


CERTIFICATE_COLUMNS = ("xi_index", "re_xi", "im_xi", "n_other", "C1", "C2", "C", "k_lip",
                       "disk_radius", "re_center", "im_center", "error_bound",
                       "cond_i", "cond_ii", "cond_iii", "cond_C", "cond_n", "certified")


def certificate_row(cert: Certificate, xi_index: int) -> tuple:
    return (int(xi_index), cert.xi.real, cert.xi.imag, cert.n_other, cert.C1, cert.C2, cert.C,
            cert.k_lip, cert.disk_radius, cert.predicted_center.real, cert.predicted_center.imag,
            cert.error_bound, *cert.conditions_met, cert.certified)


def certify(xi: complex, others, C1: float = DEFAULT_C1, C2: float = DEFAULT_C2,
            C: float | None = None, strict: bool = False) -> Certificate:
    """Check the isolated-root conditions for ``xi`` against ``others``.

    The Lipschitz constant is bounded by ``(1/n) sum (d_j - 2/(C1 n))^-2``
    with ``d_j = |xi - zeta_j|``.  If some ``d_j <= 2/(C1 n)`` that bound
    is unavailable: with ``strict=True`` this raises
    :class:`CertificateRefused`, otherwise the returned certificate is
    marked refused with ``cond_ii`` false.
    """
    xi = complex(xi)
    z = np.asarray(others, dtype=np.complex128).ravel()
    n = z.size
    if n == 0:
        raise DomainError("certify needs at least one other root")
    if not (C1 > 0 and C2 > 0):
        raise DomainError("C1 and C2 must be positive")
    diff = xi - z
    if np.any(diff == 0):
        raise PoleError("xi coincides with another root", index=int(np.flatnonzero(diff == 0)[0]))
    if C is None:
        C = default_C(C1, C2)
    d = np.abs(diff)
    mean = complex(np.mean(1.0 / diff))
    cond_i = bool(C1 <= abs(mean) <= C2)
    reach = 2.0 / (C1 * n)
    refused = bool(np.min(d) <= reach)
    if refused:
        if strict:
            raise CertificateRefused(
                f"min distance {np.min(d):.6g} <= 2/(C1 n) = {reach:.6g}; Lipschitz bound invalid")
        k_lip = math.inf
    else:
        k_lip = float(np.mean((d - reach) ** -2.0))
    cond_iii = bool(np.min(d) > 3.0 / (C1 * n))
    cond_C = bool(C > 8.0 * (1.0 + 2.0 * C2 * C2) / C1 ** 3)
    cond_n = bool(n > 4.0 * C2 * max(1.0 / C1, C * (k_lip + 1.0)))
    center = xi - 1.0 / ((n + 1) * mean) if mean != 0 else complex(math.nan, math.nan)
    return Certificate(xi=xi, C1=float(C1), C2=float(C2), C=float(C), k_lip=k_lip, n_other=n,
                       disk_radius=3.0 / (2.0 * C1 * n), predicted_center=center,
                       error_bound=C * (k_lip + 1.0) / n ** 2, mean_inverse=mean,
                       cond_i=cond_i, cond_ii=not refused, cond_iii=cond_iii,
                       cond_C=cond_C, cond_n=cond_n, refused=refused)
