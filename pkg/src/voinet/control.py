"""Certainty-equivalence LQR synthesis and cost evaluation.

The backward Riccati pass produces the value matrices S[k], feedback gains
L[k] and the error weights Gamma[k] = L[k]^T (R + B^T S[k+1] B) L[k] that
price estimation mismatch in the scheduling layer. The Gamma sequence is
padded past the horizon (holding the last value) because the scheduler looks
ahead by the remaining hop count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .system_model import PlantModel


def _symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


@dataclass
class GainSchedule:
    """Backward Riccati solution over horizon T.

    S has T+1 entries (S[T] = Lambda), L and the unpadded part of Gamma have
    T entries; Gamma carries `lookahead` extra copies of Gamma[T-1].
    """

    T: int
    S: np.ndarray        # (T+1, n, n)
    L: np.ndarray        # (T, p, n)
    Gamma: np.ndarray    # (T + lookahead, n, n)
    lookahead: int = 0

    def gamma_at(self, k: int) -> np.ndarray:
        if k < 0 or k >= self.Gamma.shape[0]:
            raise IndexError(f"Gamma index {k} outside [0, {self.Gamma.shape[0] - 1}]")
        return self.Gamma[k]

    def to_dict(self) -> dict:
        steady = self.S[0]
        return {
            "T": self.T,
            "S0": self.S[0].tolist(),
            "S_steady": steady.tolist(),
            "L0": self.L[0].tolist(),
        }


def riccati_backward(model: PlantModel, T: int, lookahead: int = 0) -> GainSchedule:
    """Backward value recursion with terminal condition S[T] = Lambda."""
    if T < 1:
        raise ValueError("horizon T must be >= 1")
    n, p = model.n, model.p
    A, B, Q, R = model.A, model.B, model.Q, model.R
    S = np.zeros((T + 1, n, n))
    L = np.zeros((T, p, n))
    Gamma = np.zeros((T + lookahead, n, n))
    S[T] = model.Lambda
    for k in range(T - 1, -1, -1):
        S_next = S[k + 1]
        M = R + B.T @ S_next @ B
        L[k] = np.linalg.solve(M, B.T @ S_next @ A)
        S[k] = _symmetrize(Q + A.T @ S_next @ A - A.T @ S_next @ B @ L[k])
        Gamma[k] = _symmetrize(L[k].T @ M @ L[k])
    for k in range(T, T + lookahead):
        Gamma[k] = Gamma[T - 1]
    return GainSchedule(T=T, S=S, L=L, Gamma=Gamma, lookahead=lookahead)


def control_action(gains: GainSchedule, k: int, xhat_controller: np.ndarray) -> np.ndarray:
    """u[k] = -L[k] xhat[k|k] at the controller-side decision maker."""
    if k < 0 or k >= gains.T:
        raise ValueError(f"time index {k} outside horizon [0, {gains.T - 1}]")
    return -gains.L[k] @ np.asarray(xhat_controller, dtype=float).reshape(-1)


def empirical_cost(
    states: np.ndarray,
    inputs: np.ndarray,
    x_final: np.ndarray,
    model: PlantModel,
) -> float:
    """Realized quadratic cost x_T' Lambda x_T + sum_k (x_k' Q x_k + u_k' R u_k)."""
    states = np.asarray(states, dtype=float)
    inputs = np.asarray(inputs, dtype=float)
    if states.shape[0] != inputs.shape[0]:
        raise ValueError("incomplete trace: state and input lengths differ")
    x_final = np.asarray(x_final, dtype=float).reshape(-1)
    stage = np.einsum("ki,ij,kj->", states, model.Q, states)
    stage += np.einsum("ki,ij,kj->", inputs, model.R, inputs)
    return float(stage + x_final @ model.Lambda @ x_final)


@dataclass
class CostReport:
    """Decomposed cost: initial-state term, noise term, mismatch-error term."""

    term1: float
    term2: float
    term3: float
    lambda_charge: float = 0.0
    empirical_cost: float = float("nan")

    @property
    def theoretical_total(self) -> float:
        return self.term1 + self.term2 + self.term3


def theoretical_cost(
    model: PlantModel,
    gains: GainSchedule,
    error_traces: list[np.ndarray],
    x0: np.ndarray | None = None,
    lambda_charge: float = 0.0,
) -> CostReport:
    """Predicted cost from the closed-form decomposition.

    term1 is x0' S[0] x0 for a deterministic initial state, tr(S[0] Omega0)
    otherwise; term2 = sum_k tr(S[k+1] W); term3 averages the Gamma-weighted
    controller-side error energy over the supplied Monte Carlo error traces
    (each of shape (T, n)).
    """
    if not error_traces:
        raise ValueError("theoretical cost needs at least one error trace")
    T = gains.T
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        term1 = float(x0 @ gains.S[0] @ x0)
    else:
        term1 = float(np.trace(gains.S[0] @ model.Omega0))
    term2 = float(sum(np.trace(gains.S[k + 1] @ model.W) for k in range(T)))
    term3_samples = []
    for errs in error_traces:
        errs = np.asarray(errs, dtype=float)
        if errs.shape[0] != T:
            raise ValueError(f"error trace length {errs.shape[0]}, expected {T}")
        term3_samples.append(np.einsum("ki,kij,kj->", errs, gains.Gamma[:T], errs))
    term3 = float(np.mean(term3_samples))
    return CostReport(term1=term1, term2=term2, term3=term3, lambda_charge=lambda_charge)


def gamma_error_energy(errors: np.ndarray, gains: GainSchedule) -> float:
    """sum_k e_k' Gamma[k] e_k for one episode's controller-side errors."""
    errors = np.asarray(errors, dtype=float)
    T = errors.shape[0]
    return float(np.einsum("ki,kij,kj->", errors, gains.Gamma[:T], errors))
