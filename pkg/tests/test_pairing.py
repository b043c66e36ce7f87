import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critpairs.errors import CertificateRefused, DomainError, PoleError
from critpairs.measures import RadialMeasure, sample_roots
from critpairs.pairing import (PAIRING_COLUMNS, WHOLE_PLANE, Annulus, SpiralKey, build_pairing,
                               certificate_row, certify, default_C, default_delta, edge_annulus,
                               glpair_defect, mean_inverse_gap, nearest_root_index,
                               nearest_root_indices, order_statistics, second_order_prediction,
                               spiral_compare, top_order_ok)
from critpairs.poly_core import CriticalSet, RootSample, critical_points
from critpairs.rng import stream

points = st.tuples(st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
                   st.integers(min_value=0, max_value=5))


def test_spiral_examples():
    assert spiral_compare((0, 0), (5 + 2j, 1)) == -1
    assert spiral_compare((1, 0), (1j, 1)) == -1
    assert spiral_compare((1, 0), (-1, 1)) == -1
    assert spiral_compare((1j, 3), (1j, 3)) == 0
    assert spiral_compare((1j, 2), (1j, 3)) == -1


@settings(max_examples=300, deadline=None)
@given(points, points, points)
def test_spiral_is_strict_total_order(a, b, c):
    ab = spiral_compare(a, b)
    assert ab == -spiral_compare(b, a)
    if ab == 0:
        assert SpiralKey.of(*a) == SpiralKey.of(*b)
    if ab < 0 and spiral_compare(b, c) < 0:
        assert spiral_compare(a, c) < 0


def test_order_statistics_examples():
    s = RootSample([0.5, -0.5j, 0.9])
    assert np.array_equal(order_statistics(s), np.array([0.9, 0.5, -0.5j]))
    s = RootSample([1.0, -1j, 1j])
    assert np.array_equal(order_statistics(s), np.array([1j, 1.0, -1j]))
    s = RootSample([0.3, 0.8j])
    assert np.array_equal(order_statistics(s), np.array([0.8j, 0.3]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False), min_size=2, max_size=40))
def test_order_statistics_is_sorted_permutation(z):
    s = RootSample(z)
    out = order_statistics(s)
    # same multiset: compare under a total order on the values themselves
    total = lambda w: (w.real, w.imag)
    assert sorted(map(complex, out), key=total) == sorted(map(complex, s.roots), key=total)
    keys = [SpiralKey.of(w, 0) for w in out]
    assert all(not (keys[i] < keys[i + 1]) for i in range(len(keys) - 1))


def test_nearest_root_examples():
    assert nearest_root_index(RootSample([1, -1]), 0.2) == 0
    assert nearest_root_index(np.array([1, 1]), 1) == 0
    assert nearest_root_index(RootSample([1, -1]), 0) == 0


def test_nearest_vectorised_matches_scalar():
    g = stream(1)
    roots = g.normal(size=300) + 1j * g.normal(size=300)
    z = g.normal(size=500) + 1j * g.normal(size=500)
    fast = nearest_root_indices(roots, z)
    assert all(fast[k] == nearest_root_index(roots, z[k]) for k in range(z.size))
    # grid of exact ties
    roots = np.array([1, -1, 1j, -1j, 1, -1])
    assert nearest_root_indices(roots, [0, 0.5, -0.5])[0] == 0
    assert list(nearest_root_indices(roots, [0.5, -0.5])) == [0, 1]


def test_build_pairing_two_roots():
    s = RootSample([1, -1])
    rep = build_pairing(s, critical_points(s), annulus=WHOLE_PLANE)
    assert list(rep.iota) == [0]
    assert rep.dist_first_order[0] == pytest.approx(0.5)
    assert rep.injective


def test_build_pairing_three_roots():
    s = RootSample([1, 2, 3])
    cps = critical_points(s)
    rep = build_pairing(s, cps, annulus=Annulus(0.0, 10.0))
    got = {round(cps.points[c].real, 6): i for c, i in zip(rep.cp_index, rep.iota)}
    assert got[round(2 + 1 / math.sqrt(3), 6)] == 2
    assert got[round(2 - 1 / math.sqrt(3), 6)] == 0
    assert rep.injective
    rows = rep.rows(trial=3)
    assert len(rows[0]) == len(PAIRING_COLUMNS) and rows[0][0] == 3 and rows[0][1] == 1


def test_injectivity_failure_is_recorded():
    s = RootSample([1.0, -1.0, 5.0])
    fake = CriticalSet(points=np.array([0.9, 1.1]), residuals=np.zeros(2), iterations=0, method="x")
    rep = build_pairing(s, fake)
    assert not rep.injective and not np.any(rep.iota_ok)


def test_second_order_examples():
    assert second_order_prediction(RootSample([1, -1]), 0) == pytest.approx(0)
    assert second_order_prediction(RootSample([1, 2, 3]), 2) == pytest.approx(23 / 9)
    with pytest.raises(PoleError):
        mean_inverse_gap(np.array([1, 1, 2]), 0)


def test_glpair_identity_and_distance_columns():
    s = sample_roots(RadialMeasure(1.0), 512, stream(2))
    cps = critical_points(s)
    rep = build_pairing(s, cps, annulus=edge_annulus(1.0, 512))
    for c, i, d1, d2 in zip(rep.cp_index, rep.iota, rep.dist_first_order, rep.dist_second_order):
        w = cps.points[c]
        assert glpair_defect(s.roots, w, i) <= 1e-8
        assert d1 == pytest.approx(abs(w - s.roots[i] * (1 - 1 / 512)), abs=1e-10)
        # recomputed from the identity W = X - 1/sum_{j != i} 1/(W - X_j)
        alt = s.roots[i] - 1.0 / np.sum(1.0 / (w - np.delete(s.roots, i)))
        assert d2 == pytest.approx(abs(alt - second_order_prediction(s, i)), abs=1e-10)


def test_edge_annulus_and_delta():
    assert default_delta(1.0) == pytest.approx(0.5 * (1 / 7 + 1 / 2))
    a = edge_annulus(1.0, 1024, delta=0.2)
    assert a.inner == pytest.approx(1 - 1024 ** -0.2) and a.outer == 1.0
    b = edge_annulus(-0.05, 1024, ell=4)
    assert b.inner == pytest.approx(1 - 4 / 1024)
    with pytest.raises(DomainError):
        default_delta(-0.5)


def test_top_order_preserved_frequency():
    ok = 0
    for t in range(200):
        s = sample_roots(RadialMeasure(1.0), 1024, stream(3, t))
        ok += bool(top_order_ok(s, critical_points(s), depth=1)[0])
    assert ok / 200 >= 0.95


def test_second_order_bound_at_4096():
    n = 4096
    good = 0
    trials = 200
    for t in range(trials):
        s = sample_roots(RadialMeasure(1.0), n, stream(4, t))
        cps = critical_points(s)
        top = np.argsort(-np.abs(s.roots))[:8]
        w_idx = nearest_root_indices(cps.points, s.roots[top] * (1 - 1 / n))
        err = max(abs(cps.points[w] - second_order_prediction(s, int(i))) for w, i in zip(w_idx, top))
        good += err <= 10 * n ** -1.5
    assert good / trials >= 0.9


def test_injectivity_frequency_at_4096():
    n = 4096
    ok = 0
    for t in range(200):
        s = sample_roots(RadialMeasure(1.0), n, stream(5, t))
        ok += build_pairing(s, critical_points(s), annulus=edge_annulus(1.0, n, delta=0.2)).injective
    assert ok / 200 >= 0.95


def test_certify_example():
    c = certify(1.0, [-1.0], C1=0.4, C2=1.0)
    assert c.cond_i and not c.cond_iii
    assert abs(c.mean_inverse) == pytest.approx(0.5)
    assert not c.certified


def test_certify_refusal_modes():
    with pytest.raises(CertificateRefused):
        certify(1.0, [-1.0], C1=0.5, strict=True)
    c = certify(1.0, [-1.0], C1=0.5)
    assert c.refused and not c.cond_ii and math.isinf(c.k_lip)


def test_certify_fields():
    g = stream(6)
    others = 0.3 * (g.normal(size=40) + 1j * g.normal(size=40))
    c = certify(1.5, others)
    n = others.size
    assert c.disk_radius == pytest.approx(3 / (2 * c.C1 * n))
    mean = np.mean(1 / (1.5 - others))
    assert c.predicted_center == pytest.approx(1.5 - 1 / ((n + 1) * mean))
    assert c.error_bound == pytest.approx(c.C * (c.k_lip + 1) / n ** 2)
    assert c.C == pytest.approx(default_C(0.5, 2.0)) and c.cond_C
    row = certificate_row(c, 0)
    assert row[-1] == c.certified


def test_certify_rejects_bad_input():
    with pytest.raises(DomainError):
        certify(1.0, [])
    with pytest.raises(PoleError):
        certify(1.0, [1.0, 2.0])
