import json
import math

import numpy as np
import pytest

from lagdmc import fk_core
from lagdmc.fk_core import (ConvergenceError, EnumerationLimitError,
                            FiniteFkModel, MeasureVector, ModelValidationError,
                            eta_statistic, exact_eta_sequence,
                            exact_particle_expectation, gamma_statistic,
                            lag_limit, phi_map, power_iteration, q_apply)

TWO_STATE = FiniteFkModel(M=[[0.7, 0.3], [0.4, 0.6]], G=[1.0, 0.5], eta0=[0.5, 0.5])
TWO_STATE_LAMBDA = (1.0 + math.sqrt(0.4)) / 2.0   # roots of x^2 - x + 0.15


def random_model(rng, d=4):
    M = rng.random((d, d)) + 0.1
    M /= M.sum(axis=1, keepdims=True)
    G = rng.random(d) + 0.2
    eta0 = rng.random(d) + 0.1
    eta0 /= eta0.sum()
    return FiniteFkModel(M=M, G=G, eta0=eta0)


class TestValidation:
    def test_bad_row_sum_names_row(self):
        with pytest.raises(ModelValidationError, match="row 1"):
            FiniteFkModel(M=[[0.5, 0.5], [0.4, 0.5]], G=[1, 1], eta0=[1, 0])

    def test_negative_entry(self):
        with pytest.raises(ModelValidationError, match="negative"):
            FiniteFkModel(M=[[1.5, -0.5], [0.5, 0.5]], G=[1, 1], eta0=[1, 0])

    def test_nonpositive_potential(self):
        with pytest.raises(ModelValidationError, match="G\\[1\\]"):
            FiniteFkModel(M=[[0.5, 0.5], [0.5, 0.5]], G=[1.0, 0.0], eta0=[1, 0])

    def test_eta0_sum(self):
        with pytest.raises(ModelValidationError, match="eta0"):
            FiniteFkModel(M=[[0.5, 0.5], [0.5, 0.5]], G=[1, 1], eta0=[0.6, 0.6])

    def test_json_roundtrip(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"M": [[0.7, 0.3], [0.4, 0.6]],
                                    "G": [1.0, 0.5], "eta0": [0.5, 0.5]}))
        m = FiniteFkModel.from_json(path)
        assert np.allclose(m.M, TWO_STATE.M)

    def test_json_missing_key(self):
        with pytest.raises(ModelValidationError, match="missing"):
            FiniteFkModel.from_dict({"M": [[1.0]], "G": [1.0]})


class TestQApply:
    def test_identity_kernel_unit_potential(self):
        m = FiniteFkModel(M=np.eye(2), G=[1, 1], eta0=[0.5, 0.5])
        assert np.allclose(q_apply(m, [2, 3]), [2, 3])

    def test_q_of_one_is_g(self):
        assert np.allclose(q_apply(TWO_STATE, [1, 1]), [1.0, 0.5])

    def test_hand_matrix_multiply(self):
        # independent dense oracle: diag(G) @ M @ phi
        phi = np.array([1.0, 0.0])
        oracle = np.diag(TWO_STATE.G) @ TWO_STATE.M @ phi
        assert np.allclose(q_apply(TWO_STATE, phi), oracle)
        assert np.allclose(q_apply(TWO_STATE, phi), [0.7, 0.2])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length 2"):
            q_apply(TWO_STATE, [1.0, 2.0, 3.0])


class TestPhiMap:
    def test_constant_potential_is_pure_transport(self):
        m = FiniteFkModel(M=[[0.7, 0.3], [0.4, 0.6]], G=[2.0, 2.0], eta0=[0.5, 0.5])
        eta = np.array([0.3, 0.7])
        out = phi_map(m, MeasureVector(eta, normalized=True))
        assert np.allclose(out.weights, eta @ m.M)

    def test_two_state_hand_value(self):
        out = phi_map(TWO_STATE, MeasureVector([0.5, 0.5], normalized=True))
        assert np.allclose(out.weights, [0.6, 0.4])

    def test_matches_q_apply_on_basis_vectors(self):
        rng = np.random.default_rng(11)
        m = random_model(rng)
        eta = MeasureVector(np.full(4, 0.25), normalized=True)
        out = phi_map(m, eta)
        for j in range(4):
            basis = np.eye(4)[j]
            oracle = lag_limit(m, eta, 1, basis)
            assert out.weights[j] == pytest.approx(oracle, rel=1e-12)

    def test_fixed_point_at_invariant_measure(self):
        trip = power_iteration(TWO_STATE)
        out = phi_map(TWO_STATE, MeasureVector(trip.eta_inf, normalized=True))
        assert np.abs(out.weights - trip.eta_inf).sum() <= 1e-11


class TestEtaSequence:
    def test_n_zero(self):
        seq = exact_eta_sequence(TWO_STATE, 0)
        assert len(seq) == 1
        assert np.allclose(seq[0][0].weights, [0.5, 0.5])

    def test_constant_potential_total_mass(self):
        m = FiniteFkModel(M=[[0.7, 0.3], [0.4, 0.6]], G=[2.0, 2.0], eta0=[0.5, 0.5])
        assert fk_core.log_total_mass(m, 3) == pytest.approx(3 * math.log(2))
        seq = exact_eta_sequence(m, 3)
        eta3 = np.array([0.5, 0.5]) @ np.linalg.matrix_power(m.M, 3)
        assert np.allclose(seq[3][0].weights, eta3)

    def test_first_step_values(self):
        seq = exact_eta_sequence(TWO_STATE, 1)
        assert seq[0][1] == pytest.approx(0.75)
        assert np.allclose(seq[1][0].weights, [0.6, 0.4])


class TestLagLimit:
    def test_lag_zero_is_direct_expectation(self):
        mu = MeasureVector([0.3, 0.7], normalized=True)
        phi = np.array([2.0, -1.0])
        assert lag_limit(TWO_STATE, mu, 0, phi) == pytest.approx(mu(phi))

    def test_invariant_measure_gives_lambda(self):
        trip = power_iteration(TWO_STATE)
        mu = MeasureVector(trip.eta_inf, normalized=True)
        for l in range(0, 8):
            assert lag_limit(TWO_STATE, mu, l, TWO_STATE.G) == pytest.approx(
                trip.lam, abs=1e-10)

    def test_phi_one_is_one(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            m = random_model(rng)
            mu = rng.random(4)
            mu /= mu.sum()
            for l in (0, 1, 3):
                assert lag_limit(m, MeasureVector(mu, normalized=True), l,
                                 np.ones(4)) == 1.0

    def test_semigroup_composition(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            m = random_model(rng)
            mu = rng.random(4)
            mu /= mu.sum()
            phi = rng.standard_normal(4)
            for a in range(0, 6):
                for b in range(0, 6):
                    direct = lag_limit(m, MeasureVector(mu, normalized=True), a + b, phi)
                    pushed = mu.copy()
                    for _ in range(a):
                        pushed = phi_map(m, MeasureVector(pushed, normalized=True)).weights
                    via = lag_limit(m, MeasureVector(pushed, normalized=True), b, phi)
                    assert abs(direct - via) <= 1e-10


class TestPowerIteration:
    def test_two_state_closed_form(self):
        trip = power_iteration(TWO_STATE)
        assert trip.lam == pytest.approx(TWO_STATE_LAMBDA, abs=1e-12)
        # characteristic polynomial of Q = [[0.7, 0.3], [0.2, 0.3]]
        assert trip.lam**2 - 1.0 * trip.lam + 0.15 == pytest.approx(0.0, abs=1e-12)

    def test_constant_potential(self):
        m = FiniteFkModel(M=[[0.7, 0.3], [0.4, 0.6]], G=[2.0, 2.0], eta0=[0.5, 0.5])
        trip = power_iteration(m)
        assert trip.lam == pytest.approx(2.0, abs=1e-11)
        # stationary law of M: pi = pi M
        assert np.allclose(trip.eta_inf @ m.M, trip.eta_inf, atol=1e-11)
        assert np.allclose(trip.h, 1.0, atol=1e-11)

    def test_decoupled_states(self):
        m = FiniteFkModel(M=np.eye(2), G=[2.0, 1.0], eta0=[0.5, 0.5])
        trip = power_iteration(m)
        assert trip.lam == pytest.approx(2.0, abs=1e-10)
        assert np.allclose(trip.eta_inf, [1, 0], atol=1e-9)
        assert np.allclose(trip.h, [1, 0], atol=1e-9)

    def test_eta_inf_g_equals_lambda(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            m = random_model(rng)
            trip = power_iteration(m)
            assert float(trip.eta_inf @ m.G) == pytest.approx(trip.lam, abs=1e-10)

    def test_eigen_consistency_through_lags(self):
        rng = np.random.default_rng(4)
        m = random_model(rng)
        trip = power_iteration(m)
        mu = MeasureVector(trip.eta_inf, normalized=True)
        phi = rng.standard_normal(4)
        # eta_inf Q^l(phi) = lambda^l eta_inf(phi)
        num = phi.copy()
        for l in range(1, 11):
            num = q_apply(m, num)
            assert float(trip.eta_inf @ num) == pytest.approx(
                trip.lam**l * float(trip.eta_inf @ phi), abs=1e-8)

    def test_nonconvergence_raises_with_residual(self):
        with pytest.raises(ConvergenceError) as err:
            power_iteration(TWO_STATE, tol=1e-16, max_iters=3)
        assert err.value.residual > 0


class TestExactParticleExpectation:
    def test_unbiasedness_gamma(self):
        for n in (1, 2, 3):
            exact = exact_particle_expectation(
                TWO_STATE, N=2, n=n, statistic=gamma_statistic(TWO_STATE, np.ones(2)))
            oracle = math.exp(fk_core.log_total_mass(TWO_STATE, n))
            assert exact == pytest.approx(oracle, abs=1e-12)

    def test_initial_step_is_eta0(self):
        phi = np.array([1.0, -2.0])
        exact = exact_particle_expectation(
            TWO_STATE, N=3, n=0, statistic=eta_statistic(TWO_STATE, phi))
        assert exact == pytest.approx(float(TWO_STATE.eta0 @ phi), abs=1e-12)

    def test_probabilities_sum_to_one(self):
        total = exact_particle_expectation(TWO_STATE, N=2, n=2,
                                           statistic=lambda traj: 1.0)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_enumeration_guard(self):
        with pytest.raises(EnumerationLimitError):
            exact_particle_expectation(TWO_STATE, N=10, n=10,
                                       statistic=lambda traj: 1.0)
