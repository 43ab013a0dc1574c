import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncround import (
    commutator_certificate,
    connes_certificate,
    joint_spectral_measure,
    lp_duality_check,
    measure_moments,
    threshold_chi_distance,
    threshold_integral,
)
from syncround.sampling import random_psd, random_pvm, rng_for

from conftest import assert_close
from oracles import (
    atomic_indicator_integral,
    chi_distance_quadrature,
    fiber_quadrature_indicator,
)


class TestJointSpectralMeasure:
    def test_scalar_pair_single_atom(self):
        m = joint_spectral_measure(np.diag([1.0]), np.diag([1.0]))
        assert_close(m.lambdas, [0.5], 1e-14)
        assert_close(m.masses, [4.0], 1e-12)
        assert_close(m.integrate(lambda l: l * l), 1.0, 1e-12)

    def test_orthogonal_projections_give_endpoints(self):
        m = joint_spectral_measure(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
        assert_close(m.lambdas, [0.0, 1.0], 1e-14)
        assert_close(m.masses, [1.0, 1.0], 1e-12)

    def test_zero_partner_concentrates_at_one(self):
        rng = rng_for(71, 0)
        x = random_psd(rng, 4)
        m = joint_spectral_measure(x, np.zeros((4, 4)))
        assert_close(m.lambdas, [1.0], 1e-14)
        assert_close(m.total_mass, np.trace(x @ x).real, 1e-9)
        assert_close(m.integrate(lambda l: l * l), np.trace(x @ x).real, 1e-9)

    def test_defining_property_scalar(self):
        m = joint_spectral_measure(np.diag([1.0]), np.diag([1.0]))
        for c_x, c_y in ((1.0, 1.0), (0.7, 1.3)):
            exact = atomic_indicator_integral(m, c_x, c_y)
            quad = fiber_quadrature_indicator(
                np.diag([1.0]), np.diag([1.0]), c_x, c_y
            )
            assert abs(exact - quad) <= 1e-4

    def test_defining_property_random_pair(self):
        rng = rng_for(72, 0)
        x = random_psd(rng, 5, norm="fro")
        y = random_psd(rng, 5, norm="fro")
        m = joint_spectral_measure(x, y)
        exact = atomic_indicator_integral(m, 1.0, 1.0)
        quad = fiber_quadrature_indicator(x, y, 1.0, 1.0)
        assert abs(exact - quad) <= 1e-4

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            joint_spectral_measure(np.eye(2), np.eye(3))

    def test_non_psd_rejected(self):
        with pytest.raises(ValueError, match="not PSD"):
            joint_spectral_measure(np.diag([1.0, -0.5]), np.eye(2))


class TestMeasureMoments:
    def test_single_atom_arithmetic(self):
        from syncround import JointSpectralMeasure

        m = JointSpectralMeasure(np.array([0.5]), np.array([4.0]))
        moments = measure_moments(m)
        assert_close(moments.norm_x_sq, 1.0, 1e-14)
        assert_close(moments.norm_y_sq, 1.0, 1e-14)
        assert_close(moments.chi_distance, 0.0, 1e-14)
        assert_close(moments.inner_product, 1.0, 1e-14)

    def test_endpoint_atoms(self):
        from syncround import JointSpectralMeasure

        m = JointSpectralMeasure(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        moments = measure_moments(m)
        assert moments.norm_x_sq == 1.0 and moments.norm_y_sq == 1.0
        assert moments.chi_distance == 2.0 and moments.inner_product == 0.0

    @settings(max_examples=25, deadline=None, derandomize=True)
    @given(dim=st.integers(1, 8), seed=st.integers(0, 10**6))
    def test_moments_match_traces(self, dim, seed):
        rng = rng_for(seed, dim, 73)
        x, y = random_psd(rng, dim), random_psd(rng, dim)
        moments = measure_moments(joint_spectral_measure(x, y))
        assert_close(moments.norm_x_sq, np.trace(x @ x).real, 1e-9)
        assert_close(moments.norm_y_sq, np.trace(y @ y).real, 1e-9)
        assert_close(moments.inner_product, np.trace(x @ y).real, 1e-9)


class TestThresholdChiDistance:
    def test_scalar_closed_form(self):
        # the thresholds sweep the gap between the two spectra:
        # integral of 2t over [1, 2] is 3
        assert_close(threshold_chi_distance(np.diag([2.0]), np.diag([1.0])), 3.0, 1e-12)

    def test_equal_inputs_vanish(self):
        rng = rng_for(81, 0)
        x = random_psd(rng, 4)
        assert threshold_chi_distance(x, x.copy()) <= 1e-12

    def test_matches_measure_moment(self):
        rng = rng_for(82, 0)
        x, y = random_psd(rng, 6), random_psd(rng, 6)
        mom = measure_moments(joint_spectral_measure(x, y))
        assert_close(threshold_chi_distance(x, y), mom.chi_distance, 1e-9)

    def test_riemann_sum_converges_linearly(self):
        rng = rng_for(83, 0)
        x, y = random_psd(rng, 5), random_psd(rng, 5)
        exact = threshold_chi_distance(x, y)
        errors = {
            n: abs(chi_distance_quadrature(x, y, n) - exact) for n in (400, 3200)
        }
        scale = float(np.trace((x + y) @ (x + y)).real)
        for n, err in errors.items():
            assert err <= 40.0 * scale / n


class TestConnesCertificate:
    def test_scalar_example(self):
        cert = connes_certificate(np.diag([2.0]), np.diag([1.0]))
        assert_close([cert.lhs, cert.mid, cert.rhs], [1.0, 3.0, 3.0], 1e-12)
        assert cert.holds

    def test_equal_inputs_all_zero(self):
        rng = rng_for(91, 0)
        x = random_psd(rng, 3)
        cert = connes_certificate(x, x.copy())
        assert_close([cert.lhs, cert.mid, cert.rhs], [0.0, 0.0, 0.0], 1e-10)
        assert cert.holds

    def test_commuting_scaled_projections_saturate_lower_bound(self):
        # x = c P, y = c Q with commuting projections: the middle term
        # equals ||x - y||^2 exactly
        c = 1.7
        p = np.diag([1.0, 1.0, 0.0, 0.0])
        q = np.diag([0.0, 1.0, 1.0, 0.0])
        cert = connes_certificate(c * p, c * q)
        assert_close(cert.mid, cert.lhs, 1e-10)
        assert cert.holds

    @settings(max_examples=40, deadline=None, derandomize=True)
    @given(dim=st.integers(1, 8), seed=st.integers(0, 10**6))
    def test_random_chain_holds(self, dim, seed):
        rng = rng_for(seed, dim, 92)
        cert = connes_certificate(random_psd(rng, dim), random_psd(rng, dim))
        assert cert.holds
        assert cert.lhs <= cert.mid + 1e-9 <= cert.rhs + 2e-9


class TestCommutatorCertificate:
    def test_commuting_pvm_gives_zero(self):
        x = np.diag([0.8, 0.6])
        x = x / np.sqrt(np.trace(x @ x).real)
        pvm = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        cert = commutator_certificate(x, pvm)
        assert_close([cert.sum_comm_x, cert.sum_comm_q, cert.upper], [0, 0, 0], 1e-10)
        assert cert.holds

    def test_two_dim_hand_oracle(self):
        a, b = 0.8, 0.6  # a^2 + b^2 = 1
        x = np.diag([a, b])
        plus = np.array([[0.5, 0.5], [0.5, 0.5]])
        minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
        cert = commutator_certificate(x, [plus, minus])
        assert_close(cert.sum_comm_x, (a - b) ** 2, 1e-12)
        assert_close(cert.sum_comm_q, a * a - b * b, 1e-12)
        assert_close(cert.upper, 2 * abs(a - b), 1e-12)
        assert cert.holds

    def test_unnormalized_input_rejected(self):
        with pytest.raises(ValueError, match="Tr"):
            commutator_certificate(np.diag([1.0, 1.0]), [np.eye(2)])

    @settings(max_examples=30, deadline=None, derandomize=True)
    @given(dim=st.integers(2, 6), seed=st.integers(0, 10**6))
    def test_random_chain_holds(self, dim, seed):
        rng = rng_for(seed, dim, 93)
        x = random_psd(rng, dim)
        x = x / np.sqrt(np.trace(x @ x).real)
        pvm = random_pvm(rng, dim, int(rng.integers(2, 5)))
        cert = commutator_certificate(x, pvm)
        assert cert.holds


class TestLpDuality:
    def test_trivial_scalar(self):
        assert lp_duality_check(np.diag([1.0]), np.diag([1.0]), 2.0) <= 1e-12

    def test_random_pairs_p2(self):
        rng = rng_for(101, 0)
        for _ in range(10):
            x, y = random_psd(rng, 4), random_psd(rng, 4)
            assert lp_duality_check(x, y, 2.0) <= 1e-8

    def test_diagonal_commuting_p3(self):
        x = np.diag([2.0, 0.5, 1.0])
        y = np.diag([0.3, 1.5, 0.7])
        # closed form per eigenvalue: both sides reduce to sum_i a_i b_i
        assert lp_duality_check(x, y, 3.0) <= 1e-8

    def test_invalid_exponent_rejected(self):
        with pytest.raises(ValueError, match="exponent"):
            lp_duality_check(np.eye(2), np.eye(2), 1.0)


class TestFiberWeightNormalization:
    def test_unit_trace_density_normalizes(self):
        rng = rng_for(111, 0)
        h = random_psd(rng, 5, norm="trace")
        assert_close(threshold_integral(h, 1.0), 1.0, 1e-10)

    def test_exponent_two_matches_squared_norm(self):
        rng = rng_for(112, 0)
        x = random_psd(rng, 5)
        assert_close(threshold_integral(x, 2.0), np.trace(x @ x).real, 1e-10)
