import numpy as np
import pytest

from wetting_lab import exact, model, thermo
from wetting_lab.errors import ConfigurationError


def test_integrand_zero_at_zero_coupling():
    sample = thermo.gap_integrand(0.0, 2.0, 0.5, box=(1, 2))
    assert sample.total == pytest.approx(0.0, abs=1e-12)


def test_integrand_vanishes_for_huge_field():
    sample = thermo.gap_integrand(0.5, 2.0, 30.0, box=(1, 2))
    assert sample.total <= 1e-6


def test_integrand_terms_use_decay_weights():
    sample = thermo.gap_integrand(0.6, 2.0, 0.3, box=(1, 3))
    assert set(sample.gap_terms) == {1, 2, 3}
    assert sample.total == pytest.approx(sum(sample.gap_terms.values()))
    assert all(v >= -1e-12 for v in sample.gap_terms.values())


def test_depth_validation_and_truncation_bound():
    with pytest.raises(ConfigurationError):
        thermo.gap_integrand(0.5, 2.0, 0.3, box=(1, 2), depth=5)
    bound = thermo.truncation_bound(2.0, 2, 4)
    assert bound == pytest.approx(2.0 / 9 + 2.0 / 16)


def test_strip_estimator_matches_exact():
    a = thermo.gap_integrand(0.7, 2.0, 0.4, box=(1, 3), estimator="exact")
    b = thermo.gap_integrand(0.7, 2.0, 0.4, box=(1, 3), estimator="strip")
    assert b.total == pytest.approx(a.total, abs=1e-10)


def test_mc_estimator_within_noise_of_exact():
    sched = thermo.McSchedule(sweeps=6000, burn_in=1000, seed=3)
    ex = thermo.gap_integrand(0.7, 2.0, 0.3, box=(1, 2), estimator="exact")
    mc = thermo.gap_integrand(0.7, 2.0, 0.3, box=(1, 2), estimator=sched)
    assert mc.stderr > 0
    assert abs(mc.total - ex.total) < max(4 * mc.stderr, 5e-3)


def test_unknown_estimator():
    with pytest.raises(ConfigurationError):
        thermo.gap_integrand(0.5, 2.0, 0.3, box=(1, 2), estimator="guess")


def test_tau_at_zero_lambda_is_zero():
    pt = thermo.tau_w_by_integration(0.6, 2.0, 0.0, box=(1, 2))
    assert pt.tau == 0.0 and pt.stderr == 0.0


@pytest.mark.parametrize("J,delta,lam,beta", [
    (0.5, 2.0, 0.4, 1.0),
    (0.8, 1.5, 0.7, 0.7),
    (0.3, 3.0, 1.0, 1.2),
])
def test_integration_identity_with_direct_log_ratio(J, delta, lam, beta):
    n, m = 1, 2
    point = thermo.tau_w_by_integration(
        J, delta, lam, box=(n, m), quadrature=("gauss", 32), beta=beta,
    )
    direct = exact.finite_wall_free_energy(
        n, model.Uniform(J), model.DecayHat(lam, delta), beta=beta, m=m,
    )
    assert point.tau == pytest.approx(direct, abs=1e-6)


def test_trapezoid_quadrature_converges():
    J, delta, lam = 0.5, 2.0, 0.5
    direct = exact.finite_wall_free_energy(
        1, model.Uniform(J), model.DecayHat(lam, delta), m=2,
    )
    coarse = thermo.tau_w_by_integration(
        J, delta, lam, box=(1, 2), quadrature=("trapezoid", 5)
    )
    fine = thermo.tau_w_by_integration(
        J, delta, lam, box=(1, 2), quadrature=("trapezoid", 80)
    )
    assert abs(fine.tau - direct) < abs(coarse.tau - direct)
    assert abs(fine.tau - direct) < 1e-4


def test_quadrature_validation():
    with pytest.raises(ConfigurationError):
        thermo.tau_w_by_integration(0.5, 2.0, 0.4, box=(1, 2),
                                    quadrature=("simpson", 8))
    with pytest.raises(ConfigurationError):
        thermo.tau_w_by_integration(0.5, 2.0, 0.4, box=(1, 2),
                                    quadrature=("trapezoid", 1))
    with pytest.raises(ConfigurationError):
        thermo.tau_w_by_integration(0.5, 2.0, -0.1, box=(1, 2))


def test_tau_curve_monotone_and_concave():
    curve = thermo.tau_curve(0.6, 2.0, [0.0, 0.3, 0.6, 0.9, 1.2], box=(1, 2))
    taus = [p.tau for p in curve.points]
    assert curve.source == "exact_oracle"
    assert taus[0] == 0.0
    assert all(b >= a - 1e-12 for a, b in zip(taus, taus[1:]))
    second = np.diff(taus, 2)
    assert np.all(second <= 1e-10)


def test_wall_only_tau_is_dominated_by_decay_sum():
    n, m, J, lam = 1, 2, 0.6, 0.5
    wall = exact.finite_wall_free_energy(
        n, model.Uniform(J), model.WallOnly(lam), m=m,
    )
    both = exact.finite_wall_free_energy(
        n, model.Uniform(J),
        model.SumField(model.WallOnly(lam), model.DecayHat(lam, 2.0)), m=m,
    )
    assert wall <= both + 1e-12


def test_lambda_c_scan_zero_coupling_estimates_zero():
    scan = thermo.lambda_c_scan(
        0.0, 2.0, [0.0, 0.3, 0.6], boxes=[(1, 2), (1, 3)],
    )
    assert scan.crossing == 0.0
    assert not scan.open_ended
    assert scan.monotone_audit_passed


def test_lambda_c_scan_uniqueness_regime():
    # far below the critical coupling the gap is tiny already at lambda = 0
    scan = thermo.lambda_c_scan(
        0.1, 2.0, [0.0, 0.2, 0.4], boxes=[(10, 10), (12, 12)],
        estimator="strip", vanish_threshold=0.05,
    )
    assert scan.crossing == 0.0


def test_lambda_c_scan_open_ended_and_flags():
    scan = thermo.lambda_c_scan(
        1.0, 0.5, [0.0, 0.1], boxes=[(1, 2)], vanish_threshold=1e-6,
    )
    assert scan.open_ended
    assert scan.crossing is None
    assert scan.nonsummable_flag          # delta <= 1
    summable = thermo.lambda_c_scan(
        1.0, 2.0, [0.0, 0.1], boxes=[(1, 2)], vanish_threshold=1e-6,
    )
    assert not summable.nonsummable_flag


def test_lambda_c_scan_wall_only_variant():
    scan = thermo.lambda_c_scan(
        0.5, 2.0, [0.0, 0.4, 0.8], boxes=[(1, 2)], wall_only=True,
    )
    assert scan.wall_only
    assert not scan.nonsummable_flag
    for samples in scan.integrand_by_box.values():
        assert all(set(s.gap_terms) == {1} for s in samples)


def test_scan_input_validation():
    with pytest.raises(ConfigurationError):
        thermo.lambda_c_scan(0.5, 2.0, [0.0, 0.2], boxes=[(1, 2)],
                             vanish_threshold=0.0)
