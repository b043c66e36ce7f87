import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from critpairs.errors import (DomainError, InsufficientDataError, UnsupportedRegimeWarning,
                              WrongRegimeError)
from critpairs.fluctuations import (REGIME_LOG, REGIME_POSITIVE, REGIME_STABLE, angular_test,
                                    exceedance_args, gauss_target, hill_index, kurtosis,
                                    ks_critical, rank_scale, regime, scale_factor,
                                    scaled_fluctuations, stability_statistic)
from critpairs.measures import RadialMeasure, sample_roots, tail_law
from critpairs.poly_core import RootSample, critical_points
from critpairs.rng import stream


def second_moment_oracle(alpha):
    """E Re(X/(1-X))^2 from the circle average r^2/(1-r^2) of |X/(1-X)|^2."""
    f = lambda r: 0.5 * r * r / (1.0 + r) * (alpha + 1.0)
    val, _ = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(0.0, alpha - 1.0), epsabs=1e-13)
    return val


def test_scale_factor_examples():
    assert scale_factor(1.0, 100) == pytest.approx(1000.0)
    assert scale_factor(0.0, math.e ** 2) == pytest.approx(math.e ** 3 / 2)
    assert scale_factor(-0.05, 1e4) == pytest.approx(10 ** (4 * 2.9 / 1.95))
    assert rank_scale(0.0, 1000) == pytest.approx(1000 ** 1.5 / math.sqrt(math.log(1000)))
    assert rank_scale(1.0, 1000) == scale_factor(1.0, 1000)


def test_scale_factor_warns_outside_stable_range():
    with pytest.warns(UnsupportedRegimeWarning):
        v = scale_factor(-0.2, 100)
    assert v == pytest.approx(100 ** (2.6 / 1.8))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        scale_factor(-0.05, 100)


def test_regime_tags():
    assert regime(0.5) == REGIME_POSITIVE
    assert regime(0.0) == REGIME_LOG
    assert regime(-0.05) == REGIME_STABLE


def test_two_root_closed_form():
    r, phi = 0.8, 0.9
    roots = np.array([r, -r * np.exp(1j * phi)])
    s = RootSample(roots, alpha=1.0)
    fl = scaled_fluctuations(s, critical_points(s), L=1)
    x = roots[1] if np.angle(roots[1]) > 0 else roots[0]  # equal moduli: larger argument wins
    w = 0.5 * (roots[0] + roots[1])
    want = 2 ** 1.5 * np.exp(-1j * np.angle(x)) * (w - x / 2)
    assert fl[0].value == pytest.approx(want, abs=1e-12)
    assert fl[0].regime == REGIME_POSITIVE and fl[0].rank == 1


def test_rotation_equivariance_of_statistic():
    s = sample_roots(RadialMeasure(1.0), 1024, stream(1))
    rot = RootSample(s.roots * np.exp(0.61j), alpha=1.0)
    a = scaled_fluctuations(s, critical_points(s), L=4)
    b = scaled_fluctuations(rot, critical_points(rot), L=4)
    for u, v in zip(a, b):
        assert u.value == pytest.approx(v.value, abs=1e-6 * max(1.0, abs(u.value)))


def test_order_flag_and_rows():
    s = sample_roots(RadialMeasure(1.0), 256, stream(2))
    fl = scaled_fluctuations(s, critical_points(s), L=3, trial=5)
    assert [f.rank for f in fl] == [1, 2, 3]
    assert len({f.order_ok for f in fl}) == 1
    assert fl[0].row()[:2] == (5, 1)


def test_gauss_target_uniform_disk():
    t = gauss_target(RadialMeasure(0.0))
    assert t.var_re == pytest.approx(1 / 8) and t.var_im == pytest.approx(1 / 8)
    assert t.cov_re_im == 0.0


def test_gauss_target_wrong_regime():
    with pytest.raises(WrongRegimeError):
        gauss_target(RadialMeasure(-0.05))


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 3.0])
def test_gauss_target_against_circle_average(alpha):
    t = gauss_target(RadialMeasure(alpha))
    want = second_moment_oracle(alpha)
    assert t.var_re == pytest.approx(want, rel=1e-7)
    assert t.var_im == pytest.approx(want, rel=1e-7)
    assert t.cov_re_im == 0.0


def test_gauss_target_alpha_one_closed_form():
    assert gauss_target(RadialMeasure(1.0)).var_re == pytest.approx(math.log(2) - 0.5, rel=1e-8)


def test_gauss_target_monte_carlo():
    t = gauss_target(RadialMeasure(1.0))
    acc = []
    for k in range(10):
        x = sample_roots(RadialMeasure(1.0), 10 ** 6, stream(3, k)).roots
        acc.append((x / (1 - x)).real)
    v = np.concatenate(acc)
    se = np.std(v * v) / math.sqrt(v.size)
    assert abs(np.mean(v * v) - np.mean(v) ** 2 - t.var_re) <= 3 * se


def test_log_regime_variance_monte_carlo():
    # at alpha = 0 the truncated second moment of Re grows like (1/4) log t;
    # half its slope is the limiting variance pi f(1)/4 = 1/8
    t1, t2 = 10.0, 1000.0
    parts = []
    for k in range(10):
        x = sample_roots(RadialMeasure(0.0), 10 ** 6, stream(4, k)).roots
        y = x / (1 - x)
        a = np.abs(y)
        parts.append(np.where((a > t1) & (a <= t2), y.real ** 2, 0.0))
    band = np.concatenate(parts) / math.log(t2 / t1) / 2
    se = np.std(band) / math.sqrt(band.size)
    assert abs(band.mean() - gauss_target(RadialMeasure(0.0)).var_re) <= 3 * se


def test_hill_on_pareto():
    g = stream(5)
    x = g.pareto(1.95, size=10 ** 6) + 1.0
    assert hill_index(x, 10 ** 4) == pytest.approx(1.95, abs=0.05)


def test_hill_domain():
    with pytest.raises(DomainError):
        hill_index(np.ones(100), 10)
    with pytest.raises(DomainError):
        hill_index(np.arange(1.0, 101.0), 60)
    with pytest.raises(DomainError):
        hill_index(np.array([1.0, -1.0, 2.0, 3.0]), 1)


def test_angular_test_on_synthetic_law():
    law = tail_law(RadialMeasure(-0.05))
    g = stream(6)
    th = law.sample_angles(2000, g)
    z = np.exp(1j * th) * (10 + g.random(th.size))
    assert angular_test(z, 10.0, law) < ks_critical(th.size, 0.01)


def test_angular_test_needs_exceedances():
    law = tail_law(RadialMeasure(-0.05))
    with pytest.raises(InsufficientDataError):
        angular_test(np.ones(100) * 20, 10.0, law)


def test_exceedances_concentrate_on_right_half_plane():
    x = sample_roots(RadialMeasure(-0.05), 10 ** 6, stream(7)).roots
    th = exceedance_args(x / (1 - x), 100.0)
    assert th.size > 0
    assert np.all(np.abs(th) < math.pi / 2 + 0.05)


def test_ks_critical():
    assert ks_critical(10000, 0.01) == pytest.approx(0.0163)
    with pytest.raises(DomainError):
        ks_critical(10, 0.1)


def test_kurtosis_gaussian():
    v = stream(8).normal(size=10 ** 5)
    assert kurtosis(v) == pytest.approx(3.0, abs=0.1)


def test_stability_statistic():
    g = stream(9)
    cauchy = g.standard_cauchy(40000)
    assert stability_statistic(cauchy, 10, 1.0) < 0.05
    gauss = g.normal(size=40000)
    assert stability_statistic(gauss, 10, 2.0) < 0.05
    # the wrong index separates the two
    assert stability_statistic(gauss, 10, 1.0) > 0.2
    with pytest.raises(InsufficientDataError):
        stability_statistic(gauss[:100], 10, 2.0)
