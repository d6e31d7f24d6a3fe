import math

import numpy as np
import pytest

from maghardy.field import builtin_field, gauge_for
from maghardy.pipeline import PipelineConfig, certify
from maghardy.testfunctions import (AngularTrig, GaussianBump, LogLogPlateau, LogRadial, RadialGaussian,
                                    RadialMode, SmoothPlateau, Tabulated)
from maghardy.verify import (FormGrid, VerificationReport, all_passed, angular_oracle_min_eigenvalue,
                             certificate_audit, default_suite, diamagnetic_gap, form_margin, oracle_dominance,
                             oracle_grid, poincare_margin, radial_log_inequality_check)
from maghardy.weights import RadialIntervalSet, Weight, ab_constants, lambda_constant, zero_certificate

LAMBDA_STEP = 1 / (2 + math.pi**2 / 2 + 3 * math.pi)


def dense_oracle(v):
    """Same discretization assembled as a dense generalized problem."""
    n = len(v)
    h = math.pi / n
    t = oracle_grid(n)
    K = np.diag(v * np.sin(t) * h)
    for i in range(n - 1):
        k = math.sin((i + 1) * h) / h
        K[i, i] += k
        K[i + 1, i + 1] += k
        K[i, i + 1] -= k
        K[i + 1, i] -= k
    m = np.sin(t) * h
    S = K / np.sqrt(np.outer(m, m))
    return np.linalg.eigvalsh(S)[0]


# ---------------------------------------------------------------- oracle


def test_oracle_trivial_potentials():
    assert abs(angular_oracle_min_eigenvalue(np.zeros(500))) < 1e-8
    assert angular_oracle_min_eigenvalue(np.full(500, 0.37)) == pytest.approx(0.37, abs=1e-8)


def test_oracle_step_dominates_lambda():
    mu = angular_oracle_min_eigenvalue(lambda t: ((t >= math.pi / 3) & (t <= 2 * math.pi / 3)) * 1.0, 2000)
    assert mu > lambda_constant(1, math.pi / 3, 2 * math.pi / 3) == pytest.approx(LAMBDA_STEP)


@pytest.mark.parametrize("seed", range(3))
def test_oracle_matches_dense(seed):
    v = np.random.default_rng(seed).uniform(0, 5, 150)
    assert angular_oracle_min_eigenvalue(v) == pytest.approx(dense_oracle(v), abs=1e-10)


def test_oracle_converges():
    V = lambda t: np.exp(-((t - 1.2) ** 2) / 0.1)
    a = angular_oracle_min_eigenvalue(V, 1000)
    b = angular_oracle_min_eigenvalue(V, 2000)
    assert abs(a - b) < 1e-5


def test_oracle_errors():
    with pytest.raises(ValueError):
        angular_oracle_min_eigenvalue(np.zeros(50))
    with pytest.raises(ValueError):
        angular_oracle_min_eigenvalue(np.full(200, np.nan))
    with pytest.raises(ValueError):
        angular_oracle_min_eigenvalue(np.zeros(200), n=300)


def test_oracle_dominance_on_w1_rows():
    cfg = PipelineConfig(n_r=16, n_theta=64)
    res = certify(builtin_field("uniform"), cfg)
    for wit, r in zip(res.w2.witnesses, res.w2.r_grid):
        if wit is None:
            continue
        V = lambda t: (r * r * np.sin(t) ** 2 / 2 - np.round(r * r * np.sin(t) ** 2 / 2)) ** 2 / np.sin(t) ** 2
        mu = angular_oracle_min_eigenvalue(V, 2000)
        assert mu >= wit.lambda_value - 1e-8


def test_oracle_dominance_report():
    mu, wit, rep = oracle_dominance(lambda t: 2.0 * (np.abs(t - 1.0) < 0.4))
    assert rep.passed and rep.lhs == mu and rep.rhs == wit.lambda_value


# ---------------------------------------------------------------- Poincare


class Linear:
    def value(self, t):
        return np.asarray(t) - math.pi / 2

    def derivative(self, t):
        return np.ones_like(np.asarray(t, dtype=float))


def test_poincare_linear_example():
    rep = poincare_margin(Linear(), math.pi / 2)
    assert rep.rhs == pytest.approx(math.pi**2 / 2 - 4, rel=1e-12)
    assert rep.lhs == pytest.approx(math.pi**2 / 8 * 2, rel=1e-12)
    assert rep.meta["ratio"] == pytest.approx((math.pi**2 / 2 - 4) / (math.pi**2 / 4), rel=1e-12)
    assert rep.passed


def test_poincare_zero_and_error():
    assert poincare_margin(None, 1.0).passed
    with pytest.raises(ValueError):
        poincare_margin(Linear(), 1.0)


def test_poincare_random_family():
    rng = np.random.default_rng(1)
    for _ in range(50):
        c = rng.uniform(0.2, math.pi - 0.2)
        rep = poincare_margin(AngularTrig.random(rng, c), c)
        assert rep.passed and rep.meta["ratio"] <= 1


# ---------------------------------------------------------------- radial 1-d


def test_radial_log_examples():
    iv = (1.0, 2.0, 0.4)
    r = np.linspace(0.05, 20, 400)
    w2 = (r, np.where((r > 1) & (r < 2), 0.4, 0.0))
    assert radial_log_inequality_check(w2, iv, None).margin == 0
    rep = radial_log_inequality_check(w2, iv, RadialGaussian(1.5, 0.1))
    assert rep.passed and rep.margin > 0
    far = RadialGaussian(12.0, 0.5)
    rep = radial_log_inequality_check(w2, iv, far)
    assert rep.passed


def test_radial_log_support_error():
    r = np.linspace(1, 2, 50)
    with pytest.raises(ValueError):
        radial_log_inequality_check((r, np.ones_like(r)), (1.2, 1.8, 1.0), RadialGaussian(5.0, 0.2))


def test_radial_log_on_pipeline_profile():
    res = certify(builtin_field("shell"), PipelineConfig(r_min=1e-5, r_max=1e-3, n_r=96))
    a, b, L = res.intervals.triples()[0]
    for v in (RadialGaussian(1e-4, 1e-5), RadialGaussian(5e-4, 5e-5),
              LogRadial(1e-4, SmoothPlateau(-1.0, 1.0, 0.5))):
        assert radial_log_inequality_check(res.w2, (a, b, L), v).passed


# ---------------------------------------------------------------- 3-d form


def test_gaussian_hardy_margin():
    u = RadialMode(RadialGaussian(0.0, 1.0))
    rep = form_margin(builtin_field("zero"), None, Weight("zero"), u)
    assert rep.lhs == pytest.approx(math.pi**1.5, abs=1e-6)
    assert rep.meta["kinetic"] == pytest.approx(1.5 * math.pi**1.5, rel=1e-8)
    assert rep.meta["hardy"] == pytest.approx(0.5 * math.pi**1.5, rel=1e-8)
    bump = GaussianBump([0, 0, 0], 1.0)
    assert form_margin(None, None, Weight("zero"), bump).lhs == pytest.approx(math.pi**1.5, abs=1e-6)


def test_ab_form_margin():
    ab = builtin_field("ab3d", alpha=0.5)
    w = ab_constants(0.5).weight
    u = RadialMode(RadialGaussian(1.0, 0.3), m=1)
    rep = form_margin(ab, None, w, u)
    assert rep.margin >= -1e-6 * rep.lhs
    assert not form_margin(ab, None, w.scaled(100), u).passed


def test_zero_function():
    rep = form_margin(builtin_field("uniform"), None, Weight("hardy_scaled", {"C": 1.0}), None)
    assert rep.lhs == rep.rhs == 0 and rep.passed


def test_report_invariant():
    for lhs, rhs, tol in [(1, 1.5, 0.6), (1, 1.5, 0.4), (0, 0, 0), (2, 1, 0)]:
        rep = VerificationReport.build("x", lhs, rhs, tol)
        assert rep.passed == (rep.margin >= -rep.tol)
    d = VerificationReport.build("x", 1, 0, 0).to_dict()
    assert set(d) == {"name", "lhs", "rhs", "margin", "tol", "pass", "meta"}


def _numeric_gradient(u, pts, h=1e-6):
    return np.stack([(u.value(pts + h * e) - u.value(pts - h * e)) / (2 * h) for e in np.eye(3)], -1)


@pytest.mark.parametrize("u", [
    GaussianBump([0.5, -0.2, 0.3], 0.4, m=2),
    GaussianBump([0.5, -0.2, 0.3], 0.4, m=-1),
    RadialMode(RadialGaussian(1.0, 0.3), m=1, p=1),
    RadialMode(RadialGaussian(1.0, 0.3), m=-2, p=0),
    RadialMode(LogRadial(1.0, SmoothPlateau(-0.5, 0.5, 0.5)), m=0, p=2),
    RadialMode(LogRadial(0.1, LogLogPlateau(1.5, 2.0, 0.5)), m=1),
])
def test_analytic_gradients(u):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(20, 3))
    np.testing.assert_allclose(u.gradient(pts), _numeric_gradient(u, pts), rtol=1e-6, atol=1e-7)


def test_tabulated_matches_analytic():
    ref = RadialMode(RadialGaussian(1.0, 0.3), m=1)
    tab = Tabulated(ref.value, (0.0, 3.0))
    g = FormGrid(96, 48, 32)
    uni = builtin_field("uniform")
    a = form_margin(uni, None, Weight("zero"), ref, g)
    b = form_margin(uni, None, Weight("zero"), tab, g)
    assert b.lhs == pytest.approx(a.lhs, rel=1e-6)


def test_loglog_profile_ratio():
    prof = LogLogPlateau(1.0, 3.0, 1.0)
    t, w = prof.nodes(512)
    kin = np.sum(w * prof.derivative(t) ** 2)
    pot = np.sum(w * prof.value(t) ** 2 / t**2)
    psi = prof.psi
    s = np.log(t)
    extra = np.sum(w / t * psi.derivative(s) ** 2) / np.sum(w / t * psi.value(s) ** 2)
    assert kin / pot == pytest.approx(0.25 + extra, rel=1e-10)


def test_diamagnetic_inequality():
    uni = builtin_field("uniform")
    for u in (RadialMode(RadialGaussian(1.0, 0.4)), GaussianBump([0.3, 0.1, 0.8], 0.3)):
        mag, plain = diamagnetic_gap(gauge_for(uni), u)
        assert mag >= plain * (1 - 1e-10)


def test_hardy_baseline_on_suite():
    for u in default_suite(None, n=10, seed=3):
        rep = form_margin(None, None, Weight("zero"), u)
        assert rep.lhs >= -rep.tol


def test_grid_convergence():
    ab = builtin_field("ab3d", alpha=0.5)
    w = ab_constants(0.5).weight
    for u in (RadialMode(RadialGaussian(1.0, 0.3), m=1), GaussianBump([0.8, 0.3, 0.4], 0.25, m=1)):
        a = form_margin(ab, None, w, u)
        b = form_margin(ab, None, w, u, FormGrid().doubled())
        assert abs(a.margin - b.margin) < a.tol


# ---------------------------------------------------------------- suites


def test_suite_deterministic_and_sized():
    a = [u.name for u in default_suite(None, 20, seed=5)]
    b = [u.name for u in default_suite(None, 20, seed=5)]
    assert a == b and len(a) == 20
    assert a != [u.name for u in default_suite(None, 20, seed=6)]
    with pytest.raises(ValueError):
        default_suite(None, 0)


def test_audit_zero_certificate():
    reps = certificate_audit(zero_certificate(), builtin_field("zero"), None, default_suite(None, 6))
    assert all_passed(reps) and len(reps) == 6
    with pytest.raises(ValueError):
        certificate_audit(zero_certificate(), builtin_field("zero"), None, [])


def test_audit_inflated_ab_fails():
    cert = ab_constants(0.5)
    cert.grid = {"r_min": 0.1, "r_max": 10.0}
    ab = builtin_field("ab3d", alpha=0.5)
    suite = default_suite(cert, 10)
    assert all_passed(certificate_audit(cert, ab, None, suite))
    assert not all_passed(certificate_audit(cert.inflated(100), ab, None, suite))


def test_synthetic_interval_set_is_consistent():
    iv = RadialIntervalSet.from_triples([(1, 2, 0.1), (3, 4, 0.2)])
    assert iv.triples() == [(1.0, 2.0, 0.1), (3.0, 4.0, 0.2)]
    with pytest.raises(ValueError):
        RadialIntervalSet.from_triples([(1, 3, 0.1), (2, 4, 0.2)])
