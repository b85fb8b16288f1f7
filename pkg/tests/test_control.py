import numpy as np
import pytest
from scipy.linalg import solve_discrete_are

from voinet.control import (
    CostReport,
    control_action,
    empirical_cost,
    gamma_error_energy,
    riccati_backward,
    theoretical_cost,
)

from conftest import random_model, scalar_model


class TestRiccati:
    def test_terminal_condition_exact(self, pendulum):
        model = pendulum.plants[0]
        gains = riccati_backward(model, T=10)
        assert np.array_equal(gains.S[10], model.Lambda)

    def test_zero_dynamics_collapse(self):
        model = scalar_model(a=0.0, Q=1.0, R=1.0, Lam=3.0)
        gains = riccati_backward(model, T=4)
        assert np.array_equal(gains.S[4], [[3.0]])
        for k in range(4):
            assert gains.S[k][0, 0] == pytest.approx(1.0)
            assert gains.L[k][0, 0] == 0.0
            assert gains.Gamma[k][0, 0] == 0.0

    def test_scalar_one_step_hand_values(self):
        model = scalar_model(a=1.0, b=1.0, Q=1.0, R=1.0, Lam=1.0)
        gains = riccati_backward(model, T=1)
        assert gains.S[0][0, 0] == pytest.approx(1.5)
        assert gains.L[0][0, 0] == pytest.approx(0.5)
        assert gains.Gamma[0][0, 0] == pytest.approx(0.5)

    def test_value_matrices_symmetric_psd(self):
        rng = np.random.default_rng(2)
        model = random_model(rng)
        gains = riccati_backward(model, T=30, lookahead=2)
        for S in gains.S:
            assert np.allclose(S, S.T, atol=1e-12)
            assert np.linalg.eigvalsh(S).min() >= -1e-10
        for G in gains.Gamma:
            assert np.allclose(G, G.T, atol=1e-12)
            assert np.linalg.eigvalsh(G).min() >= -1e-10

    def test_converges_to_dare_fixed_point(self, pendulum):
        model = pendulum.plants[0]
        gains = riccati_backward(model, T=4000)
        S = gains.S[0]
        # one-step recursion residual at the converged matrix
        M = model.R + model.B.T @ S @ model.B
        L = np.linalg.solve(M, model.B.T @ S @ model.A)
        S_next = model.Q + model.A.T @ S @ model.A - model.A.T @ S @ model.B @ L
        assert np.abs(S_next - S).max() <= 1e-8
        # independent oracle
        dare = solve_discrete_are(model.A, model.B, model.Q, model.R)
        assert np.abs(S - dare).max() <= 1e-6 * max(1.0, np.abs(dare).max())

    def test_gamma_padding_holds_last_value(self):
        model = scalar_model(a=0.8)
        gains = riccati_backward(model, T=5, lookahead=3)
        for k in range(5, 8):
            assert np.array_equal(gains.Gamma[k], gains.Gamma[4])
        with pytest.raises(IndexError):
            gains.gamma_at(8)

    def test_rejects_short_horizon(self):
        with pytest.raises(ValueError, match="horizon"):
            riccati_backward(scalar_model(), T=0)


class TestControlAction:
    def test_zero_estimate_gives_zero(self):
        gains = riccati_backward(scalar_model(), T=3)
        assert control_action(gains, 1, [0.0])[0] == 0.0

    def test_scalar_multiplication(self):
        gains = riccati_backward(scalar_model(a=1.0, b=1.0, Q=1.0, R=1.0, Lam=1.0), T=1)
        assert control_action(gains, 0, [4.0])[0] == pytest.approx(-2.0)

    def test_out_of_range_k(self):
        gains = riccati_backward(scalar_model(), T=3)
        with pytest.raises(ValueError, match="outside horizon"):
            control_action(gains, 3, [1.0])
        with pytest.raises(ValueError, match="outside horizon"):
            control_action(gains, -1, [1.0])


class TestEmpiricalCost:
    def test_zero_trace(self):
        model = scalar_model()
        assert empirical_cost(np.zeros((5, 1)), np.zeros((5, 1)), [0.0], model) == 0.0

    def test_one_step_hand_value(self):
        model = scalar_model(Q=1.0, R=1.0, Lam=1.0)
        cost = empirical_cost([[1.0]], [[1.0]], [0.0], model)
        assert cost == pytest.approx(2.0)

    def test_incomplete_trace_rejected(self):
        model = scalar_model()
        with pytest.raises(ValueError, match="incomplete"):
            empirical_cost(np.zeros((4, 1)), np.zeros((3, 1)), [0.0], model)


class TestTheoreticalCost:
    def test_all_zero_scenario(self):
        model = scalar_model(a=0.5, W=0.0, Omega0=1.0)
        gains = riccati_backward(model, T=4)
        report = theoretical_cost(model, gains, [np.zeros((4, 1))], x0=[0.0])
        assert report.term1 == 0.0
        assert report.term2 == 0.0
        assert report.term3 == 0.0
        assert report.theoretical_total == 0.0

    def test_term2_trace_sum(self):
        # A=0, Q=Lambda=1 keeps S == 1 at every index, so term2 = T * tr(W)
        model = scalar_model(a=0.0, W=1.0, Q=1.0, R=1.0, Lam=1.0)
        gains = riccati_backward(model, T=3)
        report = theoretical_cost(model, gains, [np.zeros((3, 1))])
        assert report.term2 == pytest.approx(3.0)

    def test_random_x0_uses_prior_covariance(self):
        model = scalar_model(a=0.0, W=0.0, Omega0=2.0, Q=1.0, Lam=1.0)
        gains = riccati_backward(model, T=2)
        report = theoretical_cost(model, gains, [np.zeros((2, 1))])
        assert report.term1 == pytest.approx(float(gains.S[0][0, 0]) * 2.0)

    def test_term3_averages_error_energy(self):
        rng = np.random.default_rng(4)
        model = random_model(rng, n=2, m=1, p=1)
        gains = riccati_backward(model, T=6)
        traces = [rng.standard_normal((6, 2)) for _ in range(3)]
        report = theoretical_cost(model, gains, traces, x0=np.zeros(2))
        expected = np.mean([gamma_error_energy(e, gains) for e in traces])
        assert report.term3 == pytest.approx(expected, rel=1e-12)

    def test_empty_trace_set_rejected(self):
        model = scalar_model()
        gains = riccati_backward(model, T=2)
        with pytest.raises(ValueError, match="error trace"):
            theoretical_cost(model, gains, [])

    def test_report_totals(self):
        report = CostReport(term1=1.0, term2=2.0, term3=3.0, lambda_charge=4.0)
        assert report.theoretical_total == 6.0
