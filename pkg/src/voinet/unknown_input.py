"""Input reconstruction for schedulers that do not see recent control actions.

With L hops and acknowledgment feedback, the sensor-side scheduler knows the
true inputs only up to time k-L. The missing tail u[k-L+1 .. k-1] is chosen to
minimize a weighted sum of measurement-prediction residuals and input energy,
rolling the sensor filter through the window. The minimizer is the exact
solution of a small linear-quadratic problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import GainSchedule
from .estimation import KalmanState
from .scheduling import dvoi_value
from .system_model import PlantModel


@dataclass
class InputEstimatorWeights:
    """Residual weight Qe (m x m), input weight Re (p x p), window = L-1 unknowns."""

    Qe: np.ndarray
    Re: np.ndarray
    window: int

    def __post_init__(self):
        self.Qe = np.atleast_2d(np.asarray(self.Qe, dtype=float))
        self.Re = np.atleast_2d(np.asarray(self.Re, dtype=float))
        if self.window < 0:
            raise ValueError("window must be >= 0")
        for name, mat in (("Qe", self.Qe), ("Re", self.Re)):
            if np.linalg.eigvalsh(0.5 * (mat + mat.T)).min() <= 0:
                raise ValueError(f"{name} must be positive definite")


def estimate_unknown_inputs(
    prior: KalmanState,
    measurements: np.ndarray,
    weights: InputEstimatorWeights,
    model: PlantModel,
    gains: list[np.ndarray],
) -> np.ndarray:
    """Exact minimizer of the windowed residual/input objective.

    `prior` is the last exact filter state x[t0|t0]; `measurements` stacks
    y[t0+1 .. t0+w] row-wise; `gains` holds the filter gains K[t0+1 .. t0+w-1]
    used for the interior measurement updates. Returns u_hat of shape (w, p).
    """
    measurements = np.atleast_2d(np.asarray(measurements, dtype=float))
    w = measurements.shape[0]
    if w < 1:
        raise ValueError("window must contain at least one measurement")
    if len(gains) != w - 1:
        raise ValueError(f"need {w - 1} interior gains, got {len(gains)}")
    n, p, m = model.n, model.p, model.m
    A, B, C = model.A, model.B, model.C

    # filter state as an affine function of the stacked unknown inputs
    c = prior.x_filt.copy()
    Zc = np.zeros((n, w * p))
    normal = np.kron(np.eye(w), weights.Re)
    rhs = np.zeros(w * p)
    for s in range(w):
        cp = A @ c
        Zp = A @ Zc
        Zp[:, s * p:(s + 1) * p] += B
        rho = measurements[s] - C @ cp
        M = C @ Zp
        QeM = weights.Qe @ M
        normal += M.T @ QeM
        rhs += QeM.T @ rho
        if s < w - 1:
            K = gains[s]
            c = cp + K @ rho
            Zc = Zp - K @ M
    stacked = np.linalg.solve(normal, rhs)
    return stacked.reshape(w, p)


def estimator_objective(
    prior: KalmanState,
    measurements: np.ndarray,
    weights: InputEstimatorWeights,
    model: PlantModel,
    gains: list[np.ndarray],
    u_window: np.ndarray,
) -> float:
    """Direct evaluation of the windowed objective for a candidate input tail."""
    measurements = np.atleast_2d(np.asarray(measurements, dtype=float))
    u_window = np.atleast_2d(np.asarray(u_window, dtype=float))
    w = measurements.shape[0]
    z = prior.x_filt.copy()
    cost = 0.0
    for s in range(w):
        pred = model.A @ z + model.B @ u_window[s]
        resid = measurements[s] - model.C @ pred
        cost += resid @ weights.Qe @ resid + u_window[s] @ weights.Re @ u_window[s]
        if s < w - 1:
            z = pred + gains[s] @ resid
    return float(cost)


def closed_form_two_hop(
    y_k: np.ndarray,
    xhat_prev: np.ndarray,
    kalman_gain: np.ndarray,
    model: PlantModel,
    weights: InputEstimatorWeights,
):
    """Single-unknown window (L = 2): u_hat[k-1] and the corrected estimate.

    u_hat = (B'C'Qe C B + Re)^-1 B'C'Qe (y_k - C A xhat[k-1|k-1])
    xhat[k|k] = A xhat[k-1|k-1] + (B - K C B) u_hat + K (y_k - C A xhat[k-1|k-1])
    """
    if weights.window != 1:
        raise ValueError("closed form applies to two-hop loops (window of one unknown input)")
    A, B, C = model.A, model.B, model.C
    K = np.asarray(kalman_gain, dtype=float)
    resid = np.asarray(y_k, dtype=float).reshape(-1) - C @ (A @ np.asarray(xhat_prev, dtype=float).reshape(-1))
    CB = C @ B
    u_hat = np.linalg.solve(CB.T @ weights.Qe @ CB + weights.Re, CB.T @ weights.Qe @ resid)
    corrected = A @ np.asarray(xhat_prev, dtype=float).reshape(-1) + (B - K @ CB) @ u_hat + K @ resid
    return u_hat, corrected


def approximated_dvoi(
    xtilde_est: np.ndarray,
    model: PlantModel,
    gains: GainSchedule,
    k: int,
    j: int,
    L_i: int,
    lambda_j: float,
) -> float:
    """dVoI evaluated on the estimate-based mismatch.

    Neighboring decision makers share the local input belief, so the belief
    cancels in the mismatch and the oracle-input closed form applies as is.
    """
    return dvoi_value(xtilde_est, model, gains, k, j, L_i, lambda_j)


class AckLedger:
    """Downstream decision/input knowledge at hop j, delayed per the ack channel.

    Hop j may see hop l's decisions only up to time k-(L+1-l), and therefore
    can reconstruct the applied inputs only up to k-(L+1-j). Accessors enforce
    those horizons; asking for anything newer is a causality bug.
    """

    def __init__(self, L: int, j: int):
        self.L = int(L)
        self.j = int(j)
        self._inputs: dict[int, np.ndarray] = {}
        self._decisions: dict[int, dict[int, int]] = {}

    def input_horizon(self, k: int) -> int:
        return k - (self.L + 1 - self.j)

    def decision_horizon(self, k: int, l: int) -> int:
        return k - (self.L + 1 - l)

    def record_input(self, t: int, u: np.ndarray) -> None:
        self._inputs[t] = np.asarray(u, dtype=float).reshape(-1).copy()

    def record_decision(self, l: int, t: int, bit: int) -> None:
        if l <= self.j:
            raise ValueError(f"hop {self.j} only receives acknowledgments from downstream hops, got {l}")
        self._decisions.setdefault(l, {})[t] = int(bit)

    def input_at(self, k: int, t: int) -> np.ndarray:
        if t > self.input_horizon(k):
            raise ValueError(
                f"causality violation: hop {self.j} asked for u[{t}] at time {k} "
                f"(visible only up to {self.input_horizon(k)})"
            )
        return self._inputs[t]

    def decisions_visible(self, k: int, l: int) -> list[int]:
        horizon = self.decision_horizon(k, l)
        stored = self._decisions.get(l, {})
        return [stored[t] for t in sorted(stored) if t <= horizon]
