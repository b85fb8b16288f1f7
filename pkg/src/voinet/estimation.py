"""Sensor-side Kalman filter, per-hop estimator cascade, AoI and mismatch errors.

Decision makers are indexed j = 1..L+1 along a loop's chain: the sensor-side
scheduler (j=1, zero delay) runs a Kalman filter; every later hop holds the
prediction of the last estimate it received. The mismatch between neighboring
hops, x~[j] = xhat[j] - xhat[j+1], is what the scheduling layer prices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .system_model import PlantModel

UNIT_DELAY_ERROR = "recursion valid only for unit hop delays"


@dataclass
class KalmanState:
    """Filter state after absorbing y[k].

    Holds xhat[k|k-1], xhat[k|k], Sigma[k|k-1], Sigma[k|k], the gain K[k],
    the innovation zeta[k] = K[k](y[k] - C xhat[k|k-1]) and its covariance Z[k].
    The k = -1 sentinel from kalman_init carries the prior (mean 0, cov Omega0).
    """

    k: int
    x_pred: np.ndarray
    x_filt: np.ndarray
    Sigma_pred: np.ndarray
    Sigma_filt: np.ndarray
    K: np.ndarray
    zeta: np.ndarray
    Z: np.ndarray


def kalman_init(model: PlantModel) -> KalmanState:
    """Prior state: xhat[0|-1] = 0, Sigma[0|-1] = Omega0."""
    n, m = model.n, model.m
    return KalmanState(
        k=-1,
        x_pred=np.zeros(n),
        x_filt=np.zeros(n),
        Sigma_pred=model.Omega0.copy(),
        Sigma_filt=model.Omega0.copy(),
        K=np.zeros((n, m)),
        zeta=np.zeros(n),
        Z=np.zeros((n, n)),
    )


def _symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def _gain_from(S: np.ndarray, cross: np.ndarray) -> np.ndarray:
    """K = cross S^-1; pseudo-inverse when S is singular (possible only for degenerate V)."""
    try:
        return np.linalg.solve(S.T, cross.T).T
    except np.linalg.LinAlgError:
        return cross @ np.linalg.pinv(S)


def kalman_step(state: KalmanState, u_prev: np.ndarray, y: np.ndarray, model: PlantModel) -> KalmanState:
    """One predict/update cycle of the sensor-side filter."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != model.m:
        raise ValueError(f"measurement dimension {y.shape[0]}, expected {model.m}")
    if state.k < 0:
        # first step keeps the prior: xhat[0|-1] = 0, Sigma[0|-1] = Omega0
        x_pred = np.zeros(model.n)
        Sigma_pred = state.Sigma_filt.copy()
    else:
        u_prev = np.asarray(u_prev, dtype=float).reshape(-1)
        x_pred = model.A @ state.x_filt + model.B @ u_prev
        Sigma_pred = _symmetrize(model.A @ state.Sigma_filt @ model.A.T + model.W)

    S = model.C @ Sigma_pred @ model.C.T + model.V
    K = _gain_from(S, Sigma_pred @ model.C.T)
    zeta = K @ (y - model.C @ x_pred)
    x_filt = x_pred + zeta
    Sigma_filt = _symmetrize(Sigma_pred - K @ model.C @ Sigma_pred)
    Z = _symmetrize(K @ S @ K.T)
    return KalmanState(
        k=state.k + 1,
        x_pred=x_pred,
        x_filt=x_filt,
        Sigma_pred=Sigma_pred,
        Sigma_filt=Sigma_filt,
        K=K,
        zeta=zeta,
        Z=Z,
    )


def innovation_covariance(state: KalmanState, model: PlantModel) -> np.ndarray:
    """Covariance of the gain-weighted innovation: K (C Sigma- C^T + V) K^T."""
    S = model.C @ state.Sigma_pred @ model.C.T + model.V
    return _symmetrize(state.K @ S @ state.K.T)


def kalman_gain_schedule(model: PlantModel, T: int):
    """Offline gain/covariance sequence K[0..T], Sigma_pred[0..T], Sigma_filt[0..T].

    Data independent, so it can be shared by every run of a scenario.
    """
    gains, sig_pred, sig_filt = [], [], []
    Sigma_pred = model.Omega0.copy()
    for k in range(T + 1):
        if k > 0:
            Sigma_pred = _symmetrize(model.A @ sig_filt[-1] @ model.A.T + model.W)
        S = model.C @ Sigma_pred @ model.C.T + model.V
        K = _gain_from(S, Sigma_pred @ model.C.T)
        gains.append(K)
        sig_pred.append(Sigma_pred)
        sig_filt.append(_symmetrize(Sigma_pred - K @ model.C @ Sigma_pred))
    return gains, sig_pred, sig_filt


@dataclass
class HopEstimate:
    """Estimate pair held by decision maker j (prediction and filtered value)."""

    j: int
    x_pred: np.ndarray
    x_filt: np.ndarray


def cascade_init(model: PlantModel, j: int) -> HopEstimate:
    return HopEstimate(j=j, x_pred=np.zeros(model.n), x_filt=np.zeros(model.n))


def cascade_step(
    est: HopEstimate,
    received: np.ndarray | None,
    u_prev: np.ndarray,
    model: PlantModel,
) -> HopEstimate:
    """Advance a hop estimator one step.

    `received`, when present, is the upstream estimate already rolled forward
    to the current time (xhat[k|k-d[j]] of hop j-1); it overrides the local
    prediction, otherwise the hop keeps predicting.
    """
    u_prev = np.asarray(u_prev, dtype=float).reshape(-1)
    x_pred = model.A @ est.x_filt + model.B @ u_prev
    if received is not None:
        x_filt = np.asarray(received, dtype=float).reshape(-1).copy()
    else:
        x_filt = x_pred
    return HopEstimate(j=est.j, x_pred=x_pred, x_filt=x_filt)


def roll_forward(xhat: np.ndarray, inputs: list[np.ndarray], model: PlantModel) -> np.ndarray:
    """Propagate an estimate through d steps of the model: xhat[k|k-d] from xhat[k-d|k-d]."""
    x = np.asarray(xhat, dtype=float).reshape(-1)
    for u in inputs:
        x = model.A @ x + model.B @ np.asarray(u, dtype=float).reshape(-1)
    return x


@dataclass
class AoiTracker:
    """Per-hop age of information Delta[j], j = 1..L+1, plus the relative AoI.

    Keeps the full Delta history so reception with multi-step delays can look
    up Delta[k-d[j]] of the upstream hop. Delta = 0 for all t <= 0.
    """

    d: tuple
    k: int = 0
    delta: np.ndarray = None
    rel_delta: np.ndarray = None
    _history: list = field(default_factory=list)

    def __post_init__(self):
        hops = len(self.d)  # d[j] for j = 1..L+1, index j-1
        if self.delta is None:
            self.delta = np.zeros(hops, dtype=int)
        if self.rel_delta is None:
            self.rel_delta = np.zeros(hops - 1, dtype=int)
        if not self._history:
            self._history = [self.delta.copy()]

    def delta_at(self, t: int, j: int) -> int:
        """Delta_t[j] with the t <= 0 boundary convention."""
        if t <= 0:
            return 0
        return int(self._history[t][j - 1])


def aoi_step(tracker: AoiTracker, received: np.ndarray, d: tuple) -> AoiTracker:
    """Advance AoI one step to time k+1.

    `received[j-1]` is the lag-resolved reception flag of hop j at time k+1,
    i.e. delta[k+1-d[j]] of hop j-1 (always False for j = 1).
    """
    if tuple(d) != tuple(tracker.d):
        raise ValueError("delay vector changed mid-run")
    k_next = tracker.k + 1
    hops = len(tracker.d)
    new = np.zeros(hops, dtype=int)
    for j in range(2, hops + 1):
        if received[j - 1]:
            new[j - 1] = tracker.delta_at(k_next - tracker.d[j - 1], j - 1) + tracker.d[j - 1]
        else:
            new[j - 1] = tracker.delta[j - 1] + 1
    rel = new[1:] - new[:-1]
    history = tracker._history + [new.copy()]
    return AoiTracker(d=tracker.d, k=k_next, delta=new, rel_delta=rel, _history=history)


@dataclass
class MismatchState:
    """Mismatch errors x~[j] = xhat[j] - xhat[j+1], j = 1..L (row j-1)."""

    xtilde: np.ndarray  # shape (L, n)


def mismatch_direct(filtered: list[np.ndarray]) -> MismatchState:
    """Mismatches from the per-hop filtered estimates (hops 1..L+1)."""
    est = np.asarray(filtered, dtype=float)
    return MismatchState(xtilde=est[:-1] - est[1:])


def mismatch_recursion(
    prev: MismatchState,
    zeta_next: np.ndarray,
    deltas: np.ndarray,
    model: PlantModel,
    d: tuple,
) -> MismatchState:
    """One step of the closed-form mismatch recursion (unit hop delays only).

    x~'[1] = zeta' + (1 - delta[1]) A x~[1]
    x~'[j] = delta[j-1] A x~[j-1] + (1 - delta[j]) A x~[j]   for j > 1
    """
    if any(dj != 1 for dj in d[1:]) or d[0] != 0:
        raise ValueError(UNIT_DELAY_ERROR)
    prev_x = prev.xtilde
    L = prev_x.shape[0]
    zeta_next = np.asarray(zeta_next, dtype=float).reshape(-1)
    propagated = prev_x @ model.A.T
    new = np.empty_like(prev_x)
    new[0] = zeta_next + (1 - deltas[0]) * propagated[0]
    for j in range(1, L):
        new[j] = deltas[j - 1] * propagated[j - 1] + (1 - deltas[j]) * propagated[j]
    return MismatchState(xtilde=new)


def error_decomposition(
    true_x: np.ndarray,
    kalman: KalmanState,
    mismatch: MismatchState,
    j: int,
    xhat_hop: np.ndarray | None = None,
):
    """Estimation error at hop j and its defect against e[1] + sum of mismatches.

    With `xhat_hop` taken from the actual cascade the residual is a genuine
    consistency check; without it the hop estimate is reconstructed from the
    decomposition itself and the residual is zero by construction.
    """
    true_x = np.asarray(true_x, dtype=float).reshape(-1)
    e1 = true_x - kalman.x_filt
    partial = mismatch.xtilde[: j - 1].sum(axis=0) if j > 1 else np.zeros_like(e1)
    if xhat_hop is None:
        e_j = e1 + partial
    else:
        e_j = true_x - np.asarray(xhat_hop, dtype=float).reshape(-1)
    residual = float(np.linalg.norm(e_j - (e1 + partial)))
    return e_j, residual
