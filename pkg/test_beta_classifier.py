"""
Tests for beta-field classification, maximal regions, temperatures and profiles
"""

import itertools
import json
import math
import unittest

import hypothesis as hyp
import hypothesis.strategies as st
from numpy.testing import assert_allclose

from lkms_thermal.beta_classifier import (
    REASON_APEX_OVERFLOW,
    REASON_MASSIVE_NOT_CONSTANT,
    REASON_NON_AFFINE,
    REASON_NOT_TIMELIKE,
    REASON_OUTSIDE_REGION,
    REASON_ROTATION,
    Verdict,
    VerdictKind,
    Worldline,
    classify_affine,
    classify_field,
    maximal_region,
    profile_along_worldline,
    representative_point,
    temperature,
)
from lkms_thermal.constraint_checks import beta_jacobian, constraint1_residual, constraint2_residual, default_shell_samples
from lkms_thermal.exceptions import BetaFieldError, DomainError, InvalidInputError
from lkms_thermal.minkowski import ConeKind, ConeRegion, FourVector, boost_from_velocity, in_forward_cone
from lkms_thermal.shell_tensor import Tensor2, antisymmetric_from_components
from lkms_thermal.thermal_wightman import AffineBetaField, BetaFieldFn, StateSpec

ORIGIN = FourVector.origin()
AT_REST = FourVector(1, 0, 0, 0)
ROTATION = antisymmetric_from_components(c01=0.5)
# displacements inside V+, affinely independent
CONE_OFFSETS = [FourVector(1, 0, 0, 0), FourVector(2, 0.5, 0, 0), FourVector(2, 0, 0.5, 0),
                FourVector(2, 0, 0, 0.5), FourVector(3, 0.3, 0.3, 0.3)]


def bang_field(c, beta_tilde, C=None):
    return AffineBetaField(c=c, C=C if C is not None else Tensor2.zeros(), beta_tilde=beta_tilde * c)


def cone_samples(apex, sign=1.0):
    return [apex + d * sign for d in CONE_OFFSETS]


class TestClassifyAffine(unittest.TestCase):
    def test_hot_bang(self):
        """Test c = 1, beta_tilde = 0 is a hot bang on V+"""
        verdict = classify_affine(AffineBetaField(c=1.0), 0.0, [FourVector(2, 0, 0, 0)])
        self.assertIs(verdict.kind, VerdictKind.HOT_BANG)
        self.assertEqual(verdict.region, ConeRegion(ConeKind.FORWARD, ORIGIN))
        self.assertTrue(in_forward_cone(AffineBetaField(c=1.0)(FourVector(2, 0, 0, 0))))

    def test_massive_global(self):
        """Test constant beta with m > 0 is global KMS"""
        verdict = classify_affine(AffineBetaField(beta_tilde=AT_REST), 1.0, [ORIGIN])
        self.assertIs(verdict.kind, VerdictKind.GLOBAL_KMS)
        self.assertEqual(verdict.region, ConeRegion.everywhere())
        self.assertEqual(verdict.beta_tilde, AT_REST)

    def test_rotation_rejected(self):
        """Test C != 0 is never LKMS"""
        verdict = classify_affine(AffineBetaField(C=ROTATION, beta_tilde=AT_REST), 0.0, [ORIGIN])
        self.assertIs(verdict.kind, VerdictKind.NOT_LKMS)
        self.assertIn("C", verdict.reason)
        self.assertIsNone(verdict.region)

    def test_zero_field(self):
        """Test beta == 0 is not future timelike"""
        verdict = classify_affine(AffineBetaField(), 0.0, [ORIGIN])
        self.assertIs(verdict.kind, VerdictKind.NOT_LKMS)
        self.assertEqual(verdict.reason, REASON_NOT_TIMELIKE)

    def test_sample_outside_region(self):
        """Test a domain sample outside the cone rejects the field"""
        verdict = classify_affine(AffineBetaField(c=1.0), 0.0, [FourVector(2, 0, 0, 0), FourVector(-1, 0, 0, 0)])
        self.assertIs(verdict.kind, VerdictKind.NOT_LKMS)
        self.assertEqual(verdict.reason, REASON_OUTSIDE_REGION)

    def test_preconditions(self):
        """Test empty samples and non-positive tol are rejected"""
        with self.assertRaises(InvalidInputError):
            classify_affine(AffineBetaField(c=1.0), 0.0, [])
        with self.assertRaises(InvalidInputError):
            classify_affine(AffineBetaField(c=1.0), 0.0, [AT_REST], tol=0.0)

    def test_to_dict(self):
        """Test the serialised hot bang names its cone and apex"""
        d = classify_affine(AffineBetaField(c=1.0), 0.0, [AT_REST]).to_dict()
        self.assertEqual(d["kind"], "HotBang")
        self.assertEqual(d["region"], {"kind": "ForwardCone", "apex": [0.0, 0.0, 0.0, 0.0]})
        self.assertNotIn("reason", d)
        rejected = classify_affine(AffineBetaField(), 0.0, [ORIGIN]).to_dict()
        self.assertEqual(rejected["reason"], REASON_NOT_TIMELIKE)
        self.assertIsNone(rejected["region"])


class TestTrichotomy(unittest.TestCase):
    """Every combination of m, sign of c and C agrees with the constraint residuals"""

    def expected(self, m, c, rotated):
        if rotated or (m > 0 and c != 0):
            return VerdictKind.NOT_LKMS
        return {1: VerdictKind.HOT_BANG, -1: VerdictKind.COLD_BANG, 0: VerdictKind.GLOBAL_KMS}[c]

    def test_table(self):
        """Test the 12 cases against the theorem and the constraint checks"""
        B = AT_REST
        for m, c, rotated in itertools.product((0.0, 1.0), (-1, 0, 1), (False, True)):
            C = ROTATION if rotated else None
            if c == 0:
                f = AffineBetaField(C=C if C is not None else Tensor2.zeros(), beta_tilde=B)
                samples = [ORIGIN]
            else:
                f = bang_field(float(c), B, C)
                samples = [FourVector(1, 0.2, 0, 0)] if c > 0 else [FourVector(-3, 0.2, 0, 0)]
            verdict = classify_affine(f, m, samples)
            with self.subTest(m=m, c=c, rotated=rotated):
                self.assertIs(verdict.kind, self.expected(m, c, rotated))

                q = samples[0]
                shell = default_shell_samples(m)
                r1 = constraint1_residual(beta_jacobian(f, q), m, shell).max_abs_residual
                r2 = constraint2_residual(f, q, m, shell).max_abs_residual
                if verdict.is_lkms:
                    self.assertLessEqual(max(r1, r2), 1e-12)
                else:
                    self.assertGreater(max(r1, r2), 1e-3)

    def test_cold_bang_region(self):
        """Test the cold bang lives on V- - beta_tilde"""
        verdict = classify_affine(bang_field(-1.0, AT_REST), 0.0, [FourVector(-3, 0, 0, 0)])
        self.assertIs(verdict.kind, VerdictKind.COLD_BANG)
        self.assertEqual(maximal_region(verdict), ConeRegion(ConeKind.BACKWARD, FourVector(-1, 0, 0, 0)))
        assert_allclose(verdict.beta_tilde.as_array(), [1, 0, 0, 0])

    @hyp.settings(max_examples=200, deadline=None)
    @hyp.given(c=st.floats(-3, 3), offset=st.lists(st.floats(-5, 5), min_size=4, max_size=4),
               points=st.lists(st.lists(st.floats(-5, 5), min_size=4, max_size=4), min_size=1, max_size=5),
               m=st.sampled_from([0.0, 1.0]))
    def test_exhaustive(self, c, offset, points, m):
        """Test no verdict contradicts its own region or its beta_tilde"""
        f = AffineBetaField(c=c, beta_tilde=FourVector(*offset))
        samples = [FourVector(*p) for p in points]
        verdict = classify_affine(f, m, samples)
        if verdict.kind is VerdictKind.GLOBAL_KMS:
            self.assertTrue(in_forward_cone(verdict.beta_tilde))
        elif verdict.is_lkms:
            self.assertTrue(all(verdict.region.contains(q) for q in samples))
            self.assertTrue(all(in_forward_cone(f(q)) for q in samples))


class TestThresholds(unittest.TestCase):
    """Verdicts near the c and C thresholds stay consistent with the constraint residuals"""

    def residuals(self, f, m, q):
        shell = default_shell_samples(m)
        r1 = constraint1_residual(beta_jacobian(f, q), m, shell).max_abs_residual
        r2 = constraint2_residual(f, q, m, shell).max_abs_residual
        return r1, r2

    def test_massive_tiny_slope_large_offset(self):
        """Test c = 1e-6 with a large offset is not LKMS for m > 0"""
        f = AffineBetaField(c=1e-6, beta_tilde=FourVector(1000, 0, 0, 0))
        verdict = classify_affine(f, 1.0, [ORIGIN])
        self.assertIs(verdict.kind, VerdictKind.NOT_LKMS)
        self.assertEqual(verdict.reason, REASON_MASSIVE_NOT_CONSTANT)
        self.assertGreater(self.residuals(f, 1.0, ORIGIN)[0], 1e-3)

    def test_small_rotation_large_offset(self):
        """Test C01 = 5e-6 is rejected however large the offset"""
        f = AffineBetaField(C=antisymmetric_from_components(c01=5e-6), beta_tilde=FourVector(1000, 0, 0, 0))
        verdict = classify_affine(f, 0.0, [ORIGIN])
        self.assertIs(verdict.kind, VerdictKind.NOT_LKMS)
        self.assertEqual(verdict.reason, REASON_ROTATION)
        self.assertGreater(self.residuals(f, 0.0, ORIGIN)[1], 1e-12)

    def test_rotation_below_tol(self):
        """Test C below tol is accepted and its residuals are negligible"""
        f = bang_field(1.0, AT_REST, antisymmetric_from_components(c01=1e-9))
        q = FourVector(1, 0.2, 0, 0)
        verdict = classify_affine(f, 0.0, [q])
        self.assertIs(verdict.kind, VerdictKind.HOT_BANG)
        self.assertLessEqual(max(self.residuals(f, 0.0, q)), 1e-12)

    def test_massless_tiny_slope(self):
        """Test c = 1e-9 is a hot bang with apex far in the past, not global KMS"""
        f = AffineBetaField(c=1e-9, beta_tilde=AT_REST)
        verdict = classify_affine(f, 0.0, [ORIGIN])
        self.assertIs(verdict.kind, VerdictKind.HOT_BANG)
        self.assertEqual(verdict.region.kind, ConeKind.FORWARD)
        assert_allclose(verdict.region.apex.as_array(), [-1e9, 0, 0, 0])
        self.assertLessEqual(max(self.residuals(f, 0.0, ORIGIN)), 1e-12)

        beyond = classify_affine(f, 0.0, [ORIGIN, FourVector(-2e9, 0, 0, 0)])
        self.assertIs(beyond.kind, VerdictKind.NOT_LKMS)
        self.assertEqual(beyond.reason, REASON_OUTSIDE_REGION)

    def test_massless_tiny_negative_slope(self):
        """Test c = -1e-9 is a cold bang"""
        verdict = classify_affine(AffineBetaField(c=-1e-9, beta_tilde=AT_REST), 0.0, [ORIGIN])
        self.assertIs(verdict.kind, VerdictKind.COLD_BANG)

    def test_apex_overflow(self):
        """Test a subnormal slope is rejected instead of raising"""
        verdict = classify_affine(AffineBetaField(c=1e-320, beta_tilde=AT_REST), 0.0, [ORIGIN])
        self.assertIs(verdict.kind, VerdictKind.NOT_LKMS)
        self.assertEqual(verdict.reason, REASON_APEX_OVERFLOW)
        self.assertIsNotNone(json.dumps(verdict.to_dict()))

    def test_fitted_noise_snapped(self):
        """Test a sampled constant field fits to c = 0 and C = 0 exactly"""
        f = BetaFieldFn(lambda q: (2.0 + 1e-12 * q.t, 0.0, 0.0, 0.0))
        verdict = classify_field(f, 1.0, cone_samples(ORIGIN))
        self.assertIs(verdict.kind, VerdictKind.GLOBAL_KMS)
        self.assertEqual(verdict.c, 0.0)


class TestClassifyField(unittest.TestCase):
    def test_recovers_hot_bang(self):
        """Test 2(q + (5,0,0,0)) is recovered as a hot bang"""
        beta_tilde = FourVector(5, 0, 0, 0)
        f = BetaFieldFn(lambda q: (q + beta_tilde) * 2.0)
        verdict = classify_field(f, 0.0, cone_samples(-beta_tilde))
        self.assertIs(verdict.kind, VerdictKind.HOT_BANG)
        self.assertAlmostEqual(verdict.c, 2.0, delta=1e-6)
        assert_allclose(verdict.beta_tilde.as_array(), beta_tilde.as_array(), atol=1e-6)
        self.assertLessEqual(verdict.fit_residual, 1e-6)

    def test_constant_massive(self):
        """Test a constant field with m > 0 is global KMS"""
        f = BetaFieldFn(lambda q: (1.0, 0.0, 0.0, 0.0))
        verdict = classify_field(f, 0.5, cone_samples(ORIGIN))
        self.assertIs(verdict.kind, VerdictKind.GLOBAL_KMS)

    def test_non_affine(self):
        """Test a quadratic field is rejected before any fit"""
        f = BetaFieldFn(lambda q: (1.0 + 0.1 * q.t ** 2, 0.0, 0.0, 0.0))
        verdict = classify_field(f, 0.0, cone_samples(ORIGIN))
        self.assertIs(verdict.kind, VerdictKind.NOT_LKMS)
        self.assertEqual(verdict.reason, REASON_NON_AFFINE)

    def test_symmetric_jacobian_rejected(self):
        """Test an affine field whose Jacobian is not c eta + C is rejected"""
        f = BetaFieldFn(lambda q: (4.0 + 0.3 * q.x, 0.0, 0.0, 0.0))
        verdict = classify_field(f, 0.0, cone_samples(ORIGIN))
        self.assertIs(verdict.kind, VerdictKind.NOT_LKMS)

    def test_needs_independent_samples(self):
        """Test fewer than 5 or coplanar samples are rejected"""
        f = BetaFieldFn(lambda q: (1.0, 0.0, 0.0, 0.0))
        with self.assertRaises(InvalidInputError):
            classify_field(f, 0.0, cone_samples(ORIGIN)[:4])
        flat = [FourVector(1, float(i), 0, 0) for i in range(6)]
        with self.assertRaises(InvalidInputError):
            classify_field(f, 0.0, flat)

    def test_round_trip(self):
        """Test classify_field agrees with classify_affine over a parameter grid"""
        for c, beta_tilde, m in [(0.5, FourVector(1, 0.2, 0, 0), 0.0), (2.0, FourVector(-3, 1, 0, 2), 0.0),
                                 (-1.0, FourVector(0.5, 0, 0, 0), 0.0), (-0.25, FourVector(2, 0, 1, 0), 0.0),
                                 (0.0, FourVector(1.5, 0.3, 0, 0), 0.0), (0.0, FourVector(2, 0, -1, 0), 1.0)]:
            with self.subTest(c=c, beta_tilde=beta_tilde, m=m):
                if c == 0:
                    affine = AffineBetaField(beta_tilde=beta_tilde)
                    samples = cone_samples(ORIGIN)
                else:
                    affine = bang_field(c, beta_tilde)
                    samples = cone_samples(-beta_tilde, math.copysign(1.0, c))
                exact = classify_affine(affine, m, samples)
                fitted = classify_field(BetaFieldFn(affine), m, samples)
                self.assertIs(fitted.kind, exact.kind)
                self.assertLessEqual(abs(fitted.c - exact.c), 1e-6)
                assert_allclose(fitted.beta_tilde.as_array(), exact.beta_tilde.as_array(), atol=1e-6)


class TestCovariance(unittest.TestCase):
    def test_boosted_verdicts(self):
        """Test boosting a hot bang or global KMS field keeps its kind and moves beta_tilde"""
        boost = boost_from_velocity((0.3, -0.2, 0.4))
        cases = [(bang_field(1.5, FourVector(1, 0.2, 0, 0)), cone_samples(FourVector(-1, -0.2, 0, 0))),
                 (AffineBetaField(beta_tilde=FourVector(2, 0.5, 0, 0)), cone_samples(ORIGIN))]
        for f, samples in cases:
            before = classify_affine(f, 0.0, samples)
            after = classify_affine(f.boosted(boost), 0.0, [boost.apply(q) for q in samples])
            self.assertIs(after.kind, before.kind)
            assert_allclose(after.beta_tilde.as_array(), boost.apply(before.beta_tilde).as_array(), atol=1e-12)


class TestMaximalRegion(unittest.TestCase):
    def test_regions(self):
        """Test the region for each LKMS kind"""
        hot = classify_affine(AffineBetaField(c=1.0), 0.0, [AT_REST])
        self.assertEqual(maximal_region(hot), ConeRegion(ConeKind.FORWARD, ORIGIN))
        cold = classify_affine(bang_field(-1.0, AT_REST), 0.0, [FourVector(-2, 0, 0, 0)])
        self.assertEqual(maximal_region(cold).apex, FourVector(-1, 0, 0, 0))
        glob = classify_affine(AffineBetaField(beta_tilde=AT_REST), 0.0, [ORIGIN])
        self.assertIs(maximal_region(glob).kind, ConeKind.ALL)

    def test_rejects_not_lkms(self):
        """Test NotLKMS verdicts have no region"""
        with self.assertRaises(InvalidInputError):
            maximal_region(Verdict(VerdictKind.NOT_LKMS, reason="test"))


class TestTemperature(unittest.TestCase):
    def test_examples(self):
        """Test T = 1/sqrt(<beta, beta>)"""
        self.assertEqual(temperature(AffineBetaField(beta_tilde=FourVector(2, 0, 0, 0)), ORIGIN), 0.5)
        self.assertEqual(temperature(AffineBetaField(beta_tilde=FourVector(5, 3, 0, 0)), ORIGIN), 0.25)
        for tau in (1.0, 2.0, 8.0):
            self.assertAlmostEqual(temperature(AffineBetaField(c=1.0), FourVector(tau, 0, 0, 0)), 1.0 / tau)

    def test_outside_cone(self):
        """Test beta outside V+ is a fault"""
        with self.assertRaises(BetaFieldError):
            temperature(AffineBetaField(c=1.0), FourVector(-1, 0, 0, 0))

    def test_representative_point(self):
        """Test the representative point has future timelike beta"""
        for f in (bang_field(2.0, FourVector(5, 0, 0, 0)), bang_field(-1.0, AT_REST),
                  AffineBetaField(beta_tilde=AT_REST)):
            self.assertTrue(in_forward_cone(f(representative_point(f))))


class TestProfile(unittest.TestCase):
    def setUp(self):
        self.state = StateSpec(0.0, AffineBetaField(c=1.0), ConeRegion(ConeKind.FORWARD))
        self.axis = Worldline(ORIGIN)

    def test_hot_bang_axis(self):
        """Test T = 1/tau and W = 1/(12 tau^2) along the time axis"""
        rows = profile_along_worldline(self.state, self.axis, [1.0, 2.0, 4.0], threads=2)
        assert_allclose([r.tau for r in rows], [1, 2, 4])
        assert_allclose([r.temperature for r in rows], [1, 0.5, 0.25], rtol=1e-15)
        assert_allclose([r.coincidence for r in rows], [1 / 12, 1 / 48, 1 / 192], rtol=1e-13)

    def test_apex_is_outside(self):
        """Test tau = 0 sits on the boundary of the open cone"""
        with self.assertRaises(DomainError):
            profile_along_worldline(self.state, self.axis, [1.0, 0.0])

    def test_constant_columns(self):
        """Test constant beta gives constant columns"""
        state = StateSpec(0.0, AffineBetaField(beta_tilde=FourVector(2, 0, 0, 0)))
        rows = profile_along_worldline(state, Worldline(ORIGIN, FourVector(1, 0.5, 0, 0)), [0, 1, 2])
        self.assertEqual(len({r.temperature for r in rows}), 1)
        self.assertEqual(len({r.coincidence for r in rows}), 1)

    def test_rejects_spacelike_direction(self):
        """Test worldlines must move forward in time"""
        with self.assertRaises(InvalidInputError):
            Worldline(ORIGIN, FourVector(1, 2, 0, 0))


if __name__ == '__main__':
    unittest.main()
