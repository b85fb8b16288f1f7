"""Transmission policies: closed-form dVoI rule, threshold and periodic baselines.

A scheduler at hop j of loop i transmits when the value of information

    dVoI[k, j] = lambda[j] - x~' (A^(Li+1-j))' Gamma[k + Li+1-j] A^(Li+1-j) x~

is negative, i.e. when the cost saved by refreshing the downstream estimate
exceeds the communication price lambda[j]. Transmissions stop once a packet
could no longer influence the controller within the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import GainSchedule
from .system_model import PlantModel

UNIT_DELAY_DVOI_ERROR = "dVoI closed form requires unit delays"


@dataclass(frozen=True)
class NetworkTopology:
    """Shared multi-hop network: loop count, per-loop hop counts, delays, prices."""

    N: int
    L: tuple              # per-loop hop count L_i
    d: tuple              # d[j] for j = 1..max_L+1 (index j-1), d[1] = 0
    lam: tuple            # lambda[j] for j = 1..max_L
    R_budget: tuple       # rate budget per hop, nonincreasing in j
    T: int

    def __post_init__(self):
        object.__setattr__(self, "L", tuple(int(v) for v in self.L))
        object.__setattr__(self, "d", tuple(int(v) for v in self.d))
        object.__setattr__(self, "lam", tuple(float(v) for v in self.lam))
        object.__setattr__(self, "R_budget", tuple(float(v) for v in self.R_budget))

    @property
    def max_hops(self) -> int:
        return max(self.L)

    def validate(self) -> list[str]:
        report = []
        if self.N != len(self.L):
            report.append(f"loop count {self.N} != len(L) {len(self.L)}")
        if any(li < 1 for li in self.L):
            report.append("every loop needs at least one hop")
        if len(self.d) != self.max_hops + 1:
            report.append(f"d must have max_L+1 = {self.max_hops + 1} entries, got {len(self.d)}")
        elif self.d[0] != 0:
            report.append("d[1] must be 0 (sensor co-located with first scheduler)")
        elif any(dj < 1 for dj in self.d[1:]):
            report.append("d[j] must be >= 1 for j > 1")
        if len(self.lam) != self.max_hops:
            report.append(f"lambda must have max_L = {self.max_hops} entries")
        elif any(l < 0 for l in self.lam):
            report.append("lambda[j] must be >= 0")
        if len(self.R_budget) != self.max_hops:
            report.append(f"R_budget must have max_L = {self.max_hops} entries")
        elif any(self.R_budget[j + 1] > self.R_budget[j] for j in range(len(self.R_budget) - 1)):
            report.append("R_budget must be nonincreasing in the hop index")
        if self.T < 1:
            report.append("horizon T must be >= 1")
        return report

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "L": list(self.L),
            "d": list(self.d),
            "lambda": list(self.lam),
            "R_budget": list(self.R_budget),
            "T": self.T,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkTopology":
        return cls(
            N=data["N"],
            L=data["L"],
            d=data["d"],
            lam=data["lambda"],
            R_budget=data["R_budget"],
            T=data["T"],
        )


def require_unit_delays(d) -> None:
    """The closed-form dVoI of the rollout policy assumes d[1]=0, d[j]=1 for j>1."""
    d = tuple(d)
    if d[0] != 0 or any(dj != 1 for dj in d[1:]):
        raise ValueError(UNIT_DELAY_DVOI_ERROR)


def dvoi_value(
    xtilde: np.ndarray,
    model: PlantModel,
    gains: GainSchedule,
    k: int,
    j: int,
    L_i: int,
    lambda_j: float,
) -> float:
    """Value of information of scheduler j at time k given its mismatch x~[j]."""
    if not 1 <= j <= L_i:
        raise ValueError(f"hop index {j} outside [1, {L_i}]")
    power = L_i + 1 - j
    Ag = np.linalg.matrix_power(model.A, power)
    v = Ag @ np.asarray(xtilde, dtype=float).reshape(-1)
    return float(lambda_j - v @ gains.gamma_at(k + power) @ v)


def dvoi_decide(dvoi: float, k: int, j: int, L_i: int, T: int) -> int:
    """Transmit iff dVoI < 0 (strict) and the packet can still reach the controller."""
    if k > T - (L_i + 1 - j):
        return 0
    return 1 if dvoi < 0 else 0


def threshold_single_hop(
    xtilde: np.ndarray,
    model: PlantModel,
    gains: GainSchedule,
    k: int,
    lam: float,
) -> int:
    """Classic threshold policy; the single-hop specialization of the dVoI rule."""
    v = model.A @ np.asarray(xtilde, dtype=float).reshape(-1)
    return 1 if float(v @ gains.gamma_at(k + 1) @ v) > lam else 0


def periodic_policy(k: int, period: int) -> int:
    """Transmit every `period` steps; period 1 is the always-transmit baseline."""
    if period < 1:
        raise ValueError("period must be >= 1")
    return 1 if k % period == 0 else 0


@dataclass
class SchedulerDecisionRecord:
    """One scheduling decision, kept for audit and plotting."""

    k: int
    i: int
    j: int
    dvoi: float
    delta: int
    xtilde_used: np.ndarray

    def check(self, L_i: int, T: int) -> None:
        if self.delta == 1 and not (self.dvoi < 0 and self.k <= T - (L_i + 1 - self.j)):
            raise ValueError(f"decision record violates the transmit rule at k={self.k}, j={self.j}")


@dataclass
class RateAccumulator:
    """Per-(loop, hop) transmission counts accumulated over episodes."""

    N: int
    hops: int
    counts: np.ndarray = None
    episodes: int = 0

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros((self.N, self.hops))

    def add_episode(self, episode_counts: np.ndarray) -> None:
        episode_counts = np.asarray(episode_counts, dtype=float)
        if episode_counts.shape != (self.N, self.hops):
            raise ValueError(f"episode counts shape {episode_counts.shape}, expected {(self.N, self.hops)}")
        self.counts += episode_counts
        self.episodes += 1

    def merge(self, other: "RateAccumulator") -> "RateAccumulator":
        if (self.N, self.hops) != (other.N, other.hops):
            raise ValueError("cannot merge accumulators of different shapes")
        merged = RateAccumulator(self.N, self.hops, self.counts + other.counts,
                                 self.episodes + other.episodes)
        return merged


@dataclass
class RateReport:
    r_per_loop_hop: np.ndarray   # mean transmissions per episode, shape (N, hops)
    r_per_hop: np.ndarray        # summed over loops, shape (hops,)
    violations: list             # 1-based hop indices with r[j] > R[j]


def request_rate(acc: RateAccumulator, topology: NetworkTopology) -> RateReport:
    """Empirical request rates and rate-budget violations."""
    if acc.episodes < 1:
        raise ValueError("request rates need at least one episode")
    per_loop = acc.counts / acc.episodes
    per_hop = per_loop.sum(axis=0)
    violations = [j + 1 for j in range(acc.hops) if per_hop[j] > topology.R_budget[j]]
    return RateReport(r_per_loop_hop=per_loop, r_per_hop=per_hop, violations=violations)


@dataclass
class CalibrationResult:
    lam: float
    achieved_rate: float
    converged: bool
    iterations: int
    low: float
    high: float
    message: str = ""


def bisect_rate(
    rate_fn,
    target_rate: float,
    low: float,
    high: float,
    rel_tol: float = 0.05,
    max_iters: int = 30,
) -> CalibrationResult:
    """Bisection on a (weakly) decreasing rate(lambda) curve.

    Returns the conservative (higher-lambda) endpoint of the final bracket,
    whose rate does not exceed the target.
    """
    if low > high:
        raise ValueError("need low <= high")
    r_low = rate_fn(low)
    if target_rate >= r_low:
        converged = abs(r_low - target_rate) <= rel_tol * max(target_rate, 1e-12)
        msg = "" if converged else (
            f"target {target_rate} unreachable: achievable range is [{rate_fn(high):.4g}, {r_low:.4g}]"
        )
        return CalibrationResult(low, r_low, converged, 0, low, high, msg)
    r_high = rate_fn(high)
    if target_rate <= r_high:
        converged = abs(r_high - target_rate) <= rel_tol * max(target_rate, 1e-12)
        msg = "" if converged else (
            f"target {target_rate} below achievable range [{r_high:.4g}, {r_low:.4g}]; returning upper bound"
        )
        return CalibrationResult(high, r_high, converged, 0, low, high, msg)

    best_high, best_rate = high, r_high
    iterations = 0
    for iterations in range(1, max_iters + 1):
        mid = 0.5 * (low + high)
        r_mid = rate_fn(mid)
        if r_mid > target_rate:
            low = mid
        else:
            high, best_high, best_rate = mid, mid, r_mid
        if abs(r_mid - target_rate) <= rel_tol * max(target_rate, 1e-12):
            if r_mid <= target_rate:
                best_high, best_rate = mid, r_mid
            break
    converged = abs(best_rate - target_rate) <= rel_tol * max(target_rate, 1e-12)
    return CalibrationResult(best_high, best_rate, converged, iterations, low, high)


def calibrate_lambda(
    scenario,
    hop: int,
    target_rate: float,
    low: float,
    high: float,
    runs: int = 50,
    base_seed: int = 0,
    rel_tol: float = 0.05,
    max_iters: int = 30,
) -> CalibrationResult:
    """Tune lambda[hop] of a scenario so the Monte Carlo mean rate hits a target.

    Heuristic helper, never invoked implicitly: the multipliers in a scenario
    file are authoritative configuration.
    """
    from .harness import monte_carlo  # deferred: harness depends on this module

    def rate_fn(lam: float) -> float:
        probe = scenario.with_lambda(hop, lam)
        metrics = monte_carlo(probe, runs=runs, base_seed=base_seed)
        return float(metrics.rates.r_per_hop[hop - 1])

    return bisect_rate(rate_fn, target_rate, low, high, rel_tol=rel_tol, max_iters=max_iters)
