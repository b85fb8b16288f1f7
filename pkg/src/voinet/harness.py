"""Episode orchestration: plant -> sensor scheduler -> hop schedulers -> controller.

Each loop's chain is simulated with its configured per-hop policies, the
configured information pattern (schedulers knowing the true input history, or
reconstructing the recent tail from acknowledgment-delayed knowledge), and
constant per-hop delays. Hops 2..L+1 are propagated in input-free coordinates:
mismatches are differences of input-free estimates (the shared input belief
cancels), and each decision maker re-adds its own input knowledge when its
actual estimate is needed. Monte Carlo aggregation, scenario files, and CSV
trace export live here as well.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import control as ctl
from . import estimation as est
from . import scheduling as sched
from .scheduling import NetworkTopology, RateAccumulator, request_rate
from .system_model import (
    PlantModel,
    PlantNoise,
    PlantState,
    advance_plant,
    dimension_report,
    discretize_continuous,
    measure_plant,
    sample_initial_state,
    validate_model,
)
from .unknown_input import AckLedger, InputEstimatorWeights, estimate_unknown_inputs

INPUT_MODES = ("oracle", "estimated")


@dataclass(frozen=True)
class PolicySpec:
    """Per-hop policy selection: dvoi, periodic(p), or threshold."""

    kind: str
    period: int = 1

    def __post_init__(self):
        if self.kind not in ("dvoi", "periodic", "threshold"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "periodic" and self.period < 1:
            raise ValueError("periodic policy needs period >= 1")

    def __str__(self) -> str:
        return f"periodic:{self.period}" if self.kind == "periodic" else self.kind


def parse_policy(spec: str) -> PolicySpec:
    """Parse 'dvoi' | 'periodic:<p>' | 'threshold'."""
    spec = spec.strip()
    if spec.startswith("periodic"):
        _, _, arg = spec.partition(":")
        return PolicySpec("periodic", int(arg) if arg else 1)
    return PolicySpec(spec)


def _normalize_policies(policies, hops: int) -> tuple:
    if isinstance(policies, (str, PolicySpec)):
        policies = [policies] * hops
    out = []
    for p in policies:
        out.append(parse_policy(p) if isinstance(p, str) else p)
    return tuple(out)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to run a scenario: plants, network, policies, modes."""

    plants: tuple
    topology: NetworkTopology
    policies: tuple
    input_mode: str = "oracle"
    x0: tuple | None = None          # per-loop deterministic initial states, else sampled
    qe_scale: float = 100.0          # input-estimator residual weight Qe = qe_scale * I
    re_scale: float = 0.1            # input-estimator input weight Re = re_scale * I
    seeds: tuple | None = None
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "plants", tuple(self.plants))
        object.__setattr__(self, "policies", _normalize_policies(self.policies, self.topology.max_hops))
        if self.x0 is not None:
            object.__setattr__(
                self, "x0", tuple(np.asarray(x, dtype=float).reshape(-1) for x in self.x0)
            )
        if self.seeds is not None:
            object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def T(self) -> int:
        return self.topology.T

    def with_lambda(self, hop: int, lam: float) -> "ScenarioConfig":
        new_lam = list(self.topology.lam)
        new_lam[hop - 1] = float(lam)
        return replace(self, topology=replace(self.topology, lam=tuple(new_lam)))

    def with_policies(self, policies) -> "ScenarioConfig":
        return replace(self, policies=_normalize_policies(policies, self.topology.max_hops))

    def with_input_mode(self, mode: str) -> "ScenarioConfig":
        return replace(self, input_mode=mode)

    def estimator_weights(self, loop: int, window: int) -> InputEstimatorWeights:
        model = self.plants[loop]
        return InputEstimatorWeights(
            Qe=self.qe_scale * np.eye(model.m),
            Re=self.re_scale * np.eye(model.p),
            window=window,
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "plants": [p.to_dict() for p in self.plants],
            "topology": self.topology.to_dict(),
            "policies": [str(p) for p in self.policies],
            "input_mode": self.input_mode,
            "x0": None if self.x0 is None else [x.tolist() for x in self.x0],
            "input_estimator": {"qe_scale": self.qe_scale, "re_scale": self.re_scale},
            "seeds": None if self.seeds is None else list(self.seeds),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        estimator = data.get("input_estimator", {})
        return cls(
            plants=[PlantModel.from_dict(p) for p in data["plants"]],
            topology=NetworkTopology.from_dict(data["topology"]),
            policies=data["policies"],
            input_mode=data.get("input_mode", "oracle"),
            x0=data.get("x0"),
            qe_scale=estimator.get("qe_scale", 100.0),
            re_scale=estimator.get("re_scale", 0.1),
            seeds=data.get("seeds"),
            name=data.get("name", "scenario"),
        )


def save_scenario(config: ScenarioConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return ScenarioConfig.from_dict(json.load(fh))


def validate_scenario(config: ScenarioConfig, structural_only: bool = False) -> list[str]:
    """Aggregate validation of plants, topology, policies, and mode constraints.

    With `structural_only`, noise-definiteness and stabilizability findings are
    skipped: degenerate (noise-free) scenarios are simulable and useful as
    analytic fixtures, so episodes gate only on structural problems.
    """
    report = []
    checker = dimension_report if structural_only else validate_model
    for i, plant in enumerate(config.plants):
        report.extend(f"plant {i}: {msg}" for msg in checker(plant))
    report.extend(config.topology.validate())
    if config.topology.N != len(config.plants):
        report.append(f"topology expects {config.topology.N} loops, got {len(config.plants)} plants")
    if len(config.policies) != config.topology.max_hops:
        report.append(
            f"need one policy per hop ({config.topology.max_hops}), got {len(config.policies)}"
        )
    if config.input_mode not in INPUT_MODES:
        report.append(f"input_mode must be one of {INPUT_MODES}")
    needs_unit_delay = config.input_mode == "estimated" or any(
        p.kind in ("dvoi", "threshold") for p in config.policies
    )
    if needs_unit_delay:
        try:
            sched.require_unit_delays(config.topology.d)
        except ValueError as exc:
            report.append(str(exc))
    for j, policy in enumerate(config.policies, start=1):
        if policy.kind == "threshold":
            bad = [i for i, li in enumerate(config.topology.L) if li != 1 and j <= li]
            if bad:
                report.append(f"threshold policy at hop {j} requires single-hop loops, loops {bad} have more")
    if config.x0 is not None:
        if len(config.x0) != len(config.plants):
            report.append("x0 must list one initial state per loop")
        else:
            for i, (x, plant) in enumerate(zip(config.x0, config.plants)):
                if x.shape[0] != plant.n:
                    report.append(f"x0[{i}] has dimension {x.shape[0]}, plant has n={plant.n}")
    return report


@dataclass
class LoopTrace:
    """Per-step record for one loop (arrays of length T; x_final is x[T])."""

    L: int
    x: np.ndarray          # (T, n)
    y: np.ndarray          # (T, m)
    u: np.ndarray          # (T, p)
    xhat: np.ndarray       # (L+1, T, n) per decision maker
    aoi: np.ndarray        # (L+1, T) int
    raoi: np.ndarray       # (L, T) int
    xtilde: np.ndarray     # (L, T, n)
    zeta: np.ndarray       # (T, n)
    dvoi: np.ndarray       # (L, T), nan where the policy does not price information
    delta: np.ndarray      # (L, T) int
    stage_cost: np.ndarray  # (T,)
    x_final: np.ndarray    # (n,)

    @property
    def trigger_counts(self) -> np.ndarray:
        return self.delta.sum(axis=1)


@dataclass
class SimulationTrace:
    """One episode: per-loop traces plus run identity."""

    T: int
    seed: int
    input_mode: str
    loops: list

    def empirical_cost(self, config: ScenarioConfig) -> float:
        total = 0.0
        for model, loop in zip(config.plants, self.loops):
            total += ctl.empirical_cost(loop.x, loop.u, loop.x_final, model)
        return total

    def lambda_charge(self, topology: NetworkTopology) -> float:
        charge = 0.0
        for loop in self.loops:
            counts = loop.trigger_counts
            for j in range(loop.L):
                charge += topology.lam[j] * counts[j]
        return charge

    def augmented_cost(self, config: ScenarioConfig) -> float:
        return self.empirical_cost(config) + self.lambda_charge(config.topology)


class _ScenarioContext:
    """Per-scenario precomputation shared by every episode: gains and schedules."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.gains = []
        self.kalman_gains = []
        T = config.T
        for i, model in enumerate(config.plants):
            L_i = config.topology.L[i]
            self.gains.append(ctl.riccati_backward(model, T, lookahead=L_i))
            if config.input_mode == "estimated":
                K_seq, _, _ = est.kalman_gain_schedule(model, T)
                self.kalman_gains.append(K_seq)
            else:
                self.kalman_gains.append(None)


class _EstimatedModeFilter:
    """Sensor-side filter under acknowledgment-delayed input knowledge.

    Keeps an exact filter core at the newest time whose inputs are fully
    known, re-estimates the unknown input tail every step, and rolls the
    filter head through the window with the estimated inputs.
    """

    def __init__(self, config: ScenarioConfig, loop: int, gain_schedule):
        self.model = config.plants[loop]
        self.L = config.topology.L[loop]
        self.config = config
        self.loop = loop
        self.gains = gain_schedule
        self.core = est.kalman_init(self.model)
        self.chi_core = np.zeros(self.model.n)
        self.ledger = AckLedger(self.L, 1)
        self.y_hist = []

    def record_input(self, t: int, u: np.ndarray) -> None:
        self.ledger.record_input(t, u)

    def step(self, k: int, y: np.ndarray):
        """Absorb y[k]; returns (head estimate, head innovation, input-belief chi)."""
        model = self.model
        self.y_hist.append(np.asarray(y, dtype=float).reshape(-1))
        t0 = max(0, k - self.L + 1)
        while self.core.k < t0:
            t = self.core.k + 1
            u_prev = self.ledger.input_at(k, t - 1) if t - 1 >= 0 else np.zeros(model.p)
            self.core = est.kalman_step(self.core, u_prev, self.y_hist[t], model)
            self.chi_core = model.A @ self.chi_core + model.B @ u_prev
        w_eff = k - t0
        if w_eff == 0:
            return self.core.x_filt.copy(), self.core.zeta.copy(), self.chi_core.copy()
        weights = self.config.estimator_weights(self.loop, w_eff)
        meas = np.stack(self.y_hist[t0 + 1: k + 1])
        interior = [self.gains[t] for t in range(t0 + 1, k)]
        u_hat = estimate_unknown_inputs(self.core, meas, weights, model, interior)
        z = self.core.x_filt.copy()
        chi_hat = self.chi_core.copy()
        zeta_head = np.zeros(model.n)
        for s in range(w_eff):
            t = t0 + 1 + s
            pred = model.A @ z + model.B @ u_hat[s]
            chi_hat = model.A @ chi_hat + model.B @ u_hat[s]
            resid = self.y_hist[t] - model.C @ pred
            gain_term = self.gains[t] @ resid
            z = pred + gain_term
            if t == k:
                zeta_head = gain_term
        return z, zeta_head, chi_hat


def _empty_trace(config: ScenarioConfig, seed: int) -> SimulationTrace:
    loops = []
    for i, model in enumerate(config.plants):
        L_i = config.topology.L[i]
        n, m, p = model.n, model.m, model.p
        x0 = config.x0[i] if config.x0 is not None else np.zeros(n)
        loops.append(LoopTrace(
            L=L_i,
            x=np.zeros((0, n)), y=np.zeros((0, m)), u=np.zeros((0, p)),
            xhat=np.zeros((L_i + 1, 0, n)), aoi=np.zeros((L_i + 1, 0), dtype=int),
            raoi=np.zeros((L_i, 0), dtype=int), xtilde=np.zeros((L_i, 0, n)),
            zeta=np.zeros((0, n)), dvoi=np.zeros((L_i, 0)),
            delta=np.zeros((L_i, 0), dtype=int), stage_cost=np.zeros(0),
            x_final=np.asarray(x0, dtype=float),
        ))
    return SimulationTrace(T=0, seed=seed, input_mode=config.input_mode, loops=loops)


def run_episode(config: ScenarioConfig, seed: int, _ctx: _ScenarioContext | None = None) -> SimulationTrace:
    """Simulate one seeded episode of every loop over the shared network."""
    if config.T == 0:
        return _empty_trace(config, seed)
    problems = validate_scenario(config, structural_only=True)
    if problems:
        raise ValueError("invalid scenario: " + "; ".join(problems))
    ctx = _ctx if _ctx is not None else _ScenarioContext(config)
    T = config.T
    topo = config.topology
    loops = []
    for i, model in enumerate(config.plants):
        loops.append(_run_loop(config, ctx, i, model, seed, T, topo))
    return SimulationTrace(T=T, seed=seed, input_mode=config.input_mode, loops=loops)


def _run_loop(config, ctx, i, model, seed, T, topo) -> LoopTrace:
    L_i = topo.L[i]
    d = topo.d[: L_i + 1]  # d[j] for DM j = 1..L_i+1 (index j-1)
    gains = ctx.gains[i]
    n, m, p = model.n, model.m, model.p
    noise = PlantNoise.for_loop(seed, i)
    estimated = config.input_mode == "estimated"

    if config.x0 is not None:
        state = PlantState(x=config.x0[i].copy(), k=0)
    else:
        state = sample_initial_state(model, noise)

    kal = est.kalman_init(model)
    windowed = _EstimatedModeFilter(config, i, ctx.kalman_gains[i]) if estimated else None

    xc = [np.zeros(n) for _ in range(L_i + 1)]   # input-free filtered estimates, DM j = index j-1
    chi = np.zeros(n)                            # true input accumulation at current k
    tracker = est.AoiTracker(d=tuple(d))
    u_prev = np.zeros(p)

    delta_hist = np.zeros((L_i, T), dtype=int)
    payload_hist = np.zeros((L_i, T, n))
    a_pow = [np.linalg.matrix_power(model.A, dj) for dj in d]

    x_arr = np.zeros((T, n)); y_arr = np.zeros((T, m)); u_arr = np.zeros((T, p))
    xhat_arr = np.zeros((L_i + 1, T, n)); aoi_arr = np.zeros((L_i + 1, T), dtype=int)
    raoi_arr = np.zeros((L_i, T), dtype=int); xt_arr = np.zeros((L_i, T, n))
    zeta_arr = np.zeros((T, n)); dvoi_arr = np.full((L_i, T), np.nan)
    stage_arr = np.zeros(T)

    for k in range(T):
        y = measure_plant(model, state, noise)

        # lag-resolved reception flags for DM j = 2..L_i+1
        received = np.zeros(L_i + 1, dtype=bool)
        for j in range(2, L_i + 2):
            t_sent = k - d[j - 1]
            if t_sent >= 0 and delta_hist[j - 2, t_sent] == 1:
                received[j - 1] = True
        if k >= 1:
            tracker = est.aoi_step(tracker, received, tuple(d))
        assert tracker.delta[0] == 0 and np.all(np.diff(tracker.delta) >= 0), "AoI ordering violated"

        # sensor-side estimate (DM 1)
        if estimated:
            head_x, zeta, chi_hat = windowed.step(k, y)
            xc_new_first = head_x - chi_hat
            xhat_first = head_x
        else:
            kal = est.kalman_step(kal, u_prev, y, model)
            zeta = kal.zeta
            xc_new_first = kal.x_filt - chi
            xhat_first = kal.x_filt

        # downstream cascade in input-free coordinates
        xc_new = [xc_new_first]
        for j in range(2, L_i + 2):
            if received[j - 1]:
                payload = payload_hist[j - 2, k - d[j - 1]]
                xc_new.append(a_pow[j - 1] @ payload)
            else:
                xc_new.append(model.A @ xc[j - 1])
        xc = xc_new

        # mismatches and scheduling decisions
        for j in range(1, L_i + 1):
            xt = xc[j - 1] - xc[j]
            xt_arr[j - 1, k] = xt
            policy = config.policies[j - 1]
            if policy.kind == "dvoi":
                value = sched.dvoi_value(xt, model, gains, k, j, L_i, topo.lam[j - 1])
                dvoi_arr[j - 1, k] = value
                bit = sched.dvoi_decide(value, k, j, L_i, T)
            elif policy.kind == "periodic":
                bit = sched.periodic_policy(k, policy.period)
            else:
                bit = sched.threshold_single_hop(xt, model, gains, k, topo.lam[j - 1])
            if bit:
                payload_hist[j - 1, k] = xc[j - 1]
            delta_hist[j - 1, k] = bit

        # controller action and bookkeeping
        xhat_ctrl = xc[L_i] + chi
        u = ctl.control_action(gains, k, xhat_ctrl)

        x_arr[k] = state.x; y_arr[k] = y; u_arr[k] = u
        xhat_arr[0, k] = xhat_first
        for j in range(2, L_i + 2):
            xhat_arr[j - 1, k] = xc[j - 1] + chi
        aoi_arr[:, k] = tracker.delta
        raoi_arr[:, k] = tracker.rel_delta
        zeta_arr[k] = zeta
        stage_arr[k] = float(state.x @ model.Q @ state.x + u @ model.R @ u)

        state = advance_plant(model, state, u, noise)
        chi = model.A @ chi + model.B @ u
        if estimated:
            windowed.record_input(k, u)
        u_prev = u

    return LoopTrace(
        L=L_i, x=x_arr, y=y_arr, u=u_arr, xhat=xhat_arr, aoi=aoi_arr, raoi=raoi_arr,
        xtilde=xt_arr, zeta=zeta_arr, dvoi=dvoi_arr, delta=delta_hist,
        stage_cost=stage_arr, x_final=state.x,
    )


# ---------------------------------------------------------------------------
# Monte Carlo aggregation
# ---------------------------------------------------------------------------

@dataclass
class SummaryMetrics:
    mean_cost: float
    ci95: float
    augmented_cost: float
    augmented_ci95: float
    rates: sched.RateReport
    violations: list
    trigger_counts: np.ndarray   # mean per (loop, hop)
    seeds: list
    runs: int

    def to_dict(self) -> dict:
        return {
            "mean_cost": self.mean_cost,
            "ci95": self.ci95,
            "augmented_cost": self.augmented_cost,
            "augmented_ci95": self.augmented_ci95,
            "rates": {
                "per_loop_hop": self.rates.r_per_loop_hop.tolist(),
                "per_hop": self.rates.r_per_hop.tolist(),
            },
            "violations": self.rates.violations,
            "trigger_counts": self.trigger_counts.tolist(),
            "seeds": list(self.seeds),
            "runs": self.runs,
        }


def _ci_half_width(samples: np.ndarray) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return 0.0
    return float(1.96 * samples.std(ddof=1) / np.sqrt(samples.size))


def resolve_seeds(config: ScenarioConfig, runs: int | None, base_seed: int | None) -> list[int]:
    if runs is not None:
        start = 0 if base_seed is None else base_seed
        return [start + r for r in range(runs)]
    if config.seeds is not None:
        return list(config.seeds)
    raise ValueError("no seeds: pass runs (and optionally base_seed) or set seeds in the scenario")


def monte_carlo(
    config: ScenarioConfig,
    runs: int | None = None,
    base_seed: int | None = None,
    seeds: list[int] | None = None,
) -> SummaryMetrics:
    """Aggregate independent seeded episodes: costs, rates, violations."""
    if seeds is None:
        seeds = resolve_seeds(config, runs, base_seed)
    if len(seeds) < 1:
        raise ValueError("need at least one run")
    ctx = _ScenarioContext(config)
    topo = config.topology
    acc = RateAccumulator(topo.N, topo.max_hops)
    costs, augmented = [], []
    for seed in seeds:
        trace = run_episode(config, seed, _ctx=ctx)
        cost = trace.empirical_cost(config)
        costs.append(cost)
        augmented.append(cost + trace.lambda_charge(topo))
        counts = np.zeros((topo.N, topo.max_hops))
        for i, loop in enumerate(trace.loops):
            counts[i, : loop.L] = loop.trigger_counts
        acc.add_episode(counts)
    rates = request_rate(acc, topo)
    return SummaryMetrics(
        mean_cost=float(np.mean(costs)),
        ci95=_ci_half_width(costs),
        augmented_cost=float(np.mean(augmented)),
        augmented_ci95=_ci_half_width(augmented),
        rates=rates,
        violations=rates.violations,
        trigger_counts=rates.r_per_loop_hop,
        seeds=list(seeds),
        runs=len(seeds),
    )


@dataclass
class PolicyComparison:
    mean_diff: float        # mean augmented cost, policy_a minus policy_b
    ci95: float
    verdict: str
    mean_a: float
    mean_b: float
    runs: int
    seeds: list

    def to_dict(self) -> dict:
        return {
            "mean_diff": self.mean_diff,
            "ci95": self.ci95,
            "verdict": self.verdict,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "runs": self.runs,
            "seeds": list(self.seeds),
        }


def compare_policies(
    config: ScenarioConfig,
    policy_a,
    policy_b,
    runs: int | None = None,
    base_seed: int | None = None,
    seeds: list[int] | None = None,
) -> PolicyComparison:
    """Paired comparison of the augmented cost under two policy assignments.

    The same seed drives both runs of a pair, so noise realizations cancel in
    the difference.
    """
    if seeds is None:
        seeds = resolve_seeds(config, runs, base_seed)
    conf_a = config.with_policies(policy_a)
    conf_b = config.with_policies(policy_b)
    ctx_a = _ScenarioContext(conf_a)
    ctx_b = _ScenarioContext(conf_b)
    diffs, costs_a, costs_b = [], [], []
    for seed in seeds:
        aug_a = run_episode(conf_a, seed, _ctx=ctx_a).augmented_cost(conf_a)
        aug_b = run_episode(conf_b, seed, _ctx=ctx_b).augmented_cost(conf_b)
        diffs.append(aug_a - aug_b)
        costs_a.append(aug_a)
        costs_b.append(aug_b)
    mean_diff = float(np.mean(diffs))
    half = _ci_half_width(diffs)
    upper, lower = mean_diff + half, mean_diff - half
    if upper <= 0 and lower >= 0:
        verdict = "equivalent"
    elif upper <= 0:
        verdict = "a_outperforms"
    elif lower >= 0:
        verdict = "b_outperforms"
    else:
        verdict = "inconclusive"
    return PolicyComparison(
        mean_diff=mean_diff, ci95=half, verdict=verdict,
        mean_a=float(np.mean(costs_a)), mean_b=float(np.mean(costs_b)),
        runs=len(seeds), seeds=list(seeds),
    )


# ---------------------------------------------------------------------------
# Built-in scenario: inverted pendulum on a cart over a two-hop network
# ---------------------------------------------------------------------------

def pendulum_continuous_matrices():
    """Linearized cart-pendulum about the upright equilibrium.

    State [position, velocity, pitch angle, pitch rate], force input. With
    inertia I, pendulum mass m, half-length l, gravity g, cart mass M and
    cart friction b, the standard small-angle linearization is

        den = I (M + m) + M m l^2
        Ac  = [[0, 1, 0, 0],
               [0, -(I + m l^2) b / den,  m^2 g l^2 / den,      0],
               [0, 0, 0, 1],
               [0, -m l b / den,          m g l (M + m) / den,  0]]
        Bc  = [0, (I + m l^2) / den, 0, m l / den]'
    """
    inertia, mass, length, gravity, cart_mass, friction = 6e-3, 0.2, 0.6, 9.81, 0.5, 0.1
    den = inertia * (cart_mass + mass) + cart_mass * mass * length**2
    Ac = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, -(inertia + mass * length**2) * friction / den, mass**2 * gravity * length**2 / den, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, -mass * length * friction / den, mass * gravity * length * (cart_mass + mass) / den, 0.0],
    ])
    Bc = np.array([[0.0], [(inertia + mass * length**2) / den], [0.0], [mass * length / den]])
    return Ac, Bc


def pendulum_scenario(input_mode: str = "oracle") -> ScenarioConfig:
    """Two-hop inverted pendulum: 100 Hz sampling, T=200, lambda = (15, 30).

    The sensor reads position and pitch angle; the initial state pins a 0.2 rad
    pitch offset.
    """
    Ac, Bc = pendulum_continuous_matrices()
    A, B = discretize_continuous(Ac, Bc, 0.01)
    C = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    V = 1e-3 * np.diag([2.0, 1.0])
    W = 1e-4 * np.array([
        [6.0, 3.0, 1.0, 6.0],
        [3.0, 8.0, 3.0, 4.0],
        [1.0, 3.0, 7.0, 6.0],
        [6.0, 4.0, 6.0, 31.0],
    ])
    Q = np.diag([1.0, 1.0, 1000.0, 1.0])
    model = PlantModel(A=A, B=B, C=C, W=W, V=V, Omega0=W.copy(), Q=Q, R=np.array([[1.0]]), Lambda=Q.copy())
    topology = NetworkTopology(
        N=1, L=(2,), d=(0, 1, 1), lam=(15.0, 30.0), R_budget=(200.0, 200.0), T=200
    )
    return ScenarioConfig(
        plants=(model,),
        topology=topology,
        policies=("dvoi", "dvoi"),
        input_mode=input_mode,
        x0=(np.array([0.0, 0.0, 0.2, 0.0]),),
        qe_scale=100.0,
        re_scale=0.1,
        name="pendulum-two-hop",
    )


# ---------------------------------------------------------------------------
# Trace / summary export
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    return repr(float(value))


def trace_columns(trace: SimulationTrace) -> list[str]:
    """Deterministic column order; dimensions are the union over loops."""
    n = max(loop.x.shape[1] for loop in trace.loops)
    m = max(loop.y.shape[1] for loop in trace.loops)
    p = max(loop.u.shape[1] for loop in trace.loops)
    max_L = max(loop.L for loop in trace.loops)
    cols = ["k", "loop"]
    cols += [f"x{c}" for c in range(n)]
    cols += [f"y{c}" for c in range(m)]
    cols += [f"u{c}" for c in range(p)]
    for j in range(1, max_L + 2):
        cols += [f"xhat{j}_{c}" for c in range(n)]
    cols += [f"aoi{j}" for j in range(1, max_L + 2)]
    cols += [f"raoi{j}" for j in range(1, max_L + 1)]
    for j in range(1, max_L + 1):
        cols += [f"xtilde{j}_{c}" for c in range(n)]
    cols += [f"zeta_{c}" for c in range(n)]
    cols += [f"dvoi{j}" for j in range(1, max_L + 1)]
    cols += [f"delta{j}" for j in range(1, max_L + 1)]
    cols += ["stage_cost"]
    return cols


def export_trace(trace: SimulationTrace, path) -> None:
    """Write the episode as CSV, one row per (k, loop), full float precision."""
    cols = trace_columns(trace)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for k in range(trace.T):
                for i, loop in enumerate(trace.loops):
                    row = _trace_row(loop, i, k, cols)
                    fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def _trace_row(loop: LoopTrace, i: int, k: int, cols: list[str]) -> list[str]:
    values = {"k": str(k), "loop": str(i)}
    for c in range(loop.x.shape[1]):
        values[f"x{c}"] = _fmt(loop.x[k, c])
    for c in range(loop.y.shape[1]):
        values[f"y{c}"] = _fmt(loop.y[k, c])
    for c in range(loop.u.shape[1]):
        values[f"u{c}"] = _fmt(loop.u[k, c])
    for j in range(1, loop.L + 2):
        for c in range(loop.x.shape[1]):
            values[f"xhat{j}_{c}"] = _fmt(loop.xhat[j - 1, k, c])
    for j in range(1, loop.L + 2):
        values[f"aoi{j}"] = str(int(loop.aoi[j - 1, k]))
    for j in range(1, loop.L + 1):
        values[f"raoi{j}"] = str(int(loop.raoi[j - 1, k]))
    for j in range(1, loop.L + 1):
        for c in range(loop.x.shape[1]):
            values[f"xtilde{j}_{c}"] = _fmt(loop.xtilde[j - 1, k, c])
    for c in range(loop.x.shape[1]):
        values[f"zeta_{c}"] = _fmt(loop.zeta[k, c])
    for j in range(1, loop.L + 1):
        values[f"dvoi{j}"] = _fmt(loop.dvoi[j - 1, k])
        values[f"delta{j}"] = str(int(loop.delta[j - 1, k]))
    values["stage_cost"] = _fmt(loop.stage_cost[k])
    return [values.get(col, "") for col in cols]


def load_trace(path) -> dict:
    """Parse an exported CSV back into column arrays (floats, nan-aware)."""
    try:
        with open(path) as fh:
            header = fh.readline().strip()
            if not header:
                raise ValueError(f"empty trace file {path}")
            cols = header.split(",")
            rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    except OSError as exc:
        raise OSError(f"cannot read trace from {path}: {exc}") from exc
    data = {col: [] for col in cols}
    for row in rows:
        for col, cell in zip(cols, row):
            data[col].append(float(cell) if cell != "" else np.nan)
    return {col: np.asarray(vals) for col, vals in data.items()}


def export_summary(metrics: SummaryMetrics, path) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(metrics.to_dict(), fh, indent=2)
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc}") from exc
