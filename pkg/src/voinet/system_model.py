"""Plant models, seeded Gaussian noise, and plant stepping.

A plant is a discrete-time LTI system

    x[k+1] = A x[k] + B u[k] + w[k],    w ~ N(0, W)
    y[k]   = C x[k] + v[k],             v ~ N(0, V)

with initial state drawn from N(0, Omega0) (or pinned by the scenario),
quadratic stage weights Q, R and terminal weight Lambda.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

SYM_TOL = 1e-8
EIG_CLAMP = -1e-12


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PlantModel:
    """One control loop: dynamics, noise covariances, and cost weights."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W: np.ndarray
    V: np.ndarray
    Omega0: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    Lambda: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C", "W", "V", "Omega0", "Q", "R", "Lambda"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), name))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    def to_dict(self) -> dict:
        return {
            name: getattr(self, name).tolist()
            for name in ("A", "B", "C", "W", "V", "Omega0", "Q", "R", "Lambda")
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlantModel":
        missing = [k for k in ("A", "B", "C", "W", "V", "Omega0", "Q", "R", "Lambda") if k not in data]
        if missing:
            raise ValueError(f"plant config missing keys: {missing}")
        return cls(**{k: data[k] for k in ("A", "B", "C", "W", "V", "Omega0", "Q", "R", "Lambda")})


@dataclass
class PlantState:
    """True plant state at time index k."""

    x: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1)


class NoiseSource:
    """Seeded Gaussian stream. Same (seed, stream) always replays the same draws."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,)))
        )

    def standard_normal(self, size: int) -> np.ndarray:
        return self._rng.standard_normal(size)


@dataclass
class PlantNoise:
    """Noise streams for one loop: process (w), measurement (v), initial state."""

    process: NoiseSource
    measurement: NoiseSource
    initial: NoiseSource
    _factors: dict = field(default_factory=dict, repr=False)

    @classmethod
    def for_loop(cls, seed: int, loop: int) -> "PlantNoise":
        # fixed stream layout: 3 streams per loop, one per noise kind
        return cls(
            process=NoiseSource(seed, 3 * loop),
            measurement=NoiseSource(seed, 3 * loop + 1),
            initial=NoiseSource(seed, 3 * loop + 2),
        )

    def factor(self, key: str, cov: np.ndarray) -> np.ndarray:
        if key not in self._factors:
            self._factors[key] = psd_factor(cov)
        return self._factors[key]


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix, clamping round-off eigenvalues.

    Eigenvalues in [-1e-12, 0) are treated as zero; anything more negative is
    rejected as a genuinely indefinite matrix.
    """
    cov = _as_matrix(cov, "cov")
    if cov.shape[0] != cov.shape[1]:
        raise ValueError(f"covariance must be square, got {cov.shape}")
    sym = 0.5 * (cov + cov.T)
    if not np.allclose(cov, sym, atol=SYM_TOL, rtol=SYM_TOL):
        raise ValueError("covariance not symmetric")
    eigvals, eigvecs = np.linalg.eigh(sym)
    if eigvals.min() < EIG_CLAMP:
        raise ValueError(f"covariance not positive semidefinite (min eigenvalue {eigvals.min():.3e})")
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def sample_gaussian(cov: np.ndarray, noise: NoiseSource) -> np.ndarray:
    """Zero-mean Gaussian draw with the given covariance."""
    factor = psd_factor(cov)
    return factor @ noise.standard_normal(factor.shape[0])


def _is_psd(mat: np.ndarray, tol: float = SYM_TOL) -> bool:
    if mat.shape[0] != mat.shape[1]:
        return False
    if not np.allclose(mat, mat.T, atol=tol, rtol=tol):
        return False
    eigvals = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    scale = max(1.0, abs(eigvals).max())
    return eigvals.min() >= -tol * scale


def _is_pd(mat: np.ndarray, tol: float = SYM_TOL) -> bool:
    if mat.shape[0] != mat.shape[1]:
        return False
    if not np.allclose(mat, mat.T, atol=tol, rtol=tol):
        return False
    eigvals = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    scale = max(1.0, abs(eigvals).max())
    return eigvals.min() > tol * scale * 1e-4


def _pbh_rank_deficient(blocks: np.ndarray, n: int, tol: float = SYM_TOL) -> bool:
    return np.linalg.matrix_rank(blocks, tol=tol * max(1.0, np.abs(blocks).max())) < n


def dimension_report(model: PlantModel) -> list[str]:
    """Shape consistency only; the cheap structural part of validation."""
    report: list[str] = []
    n, p, m = model.n, model.p, model.m
    if model.A.shape != (n, n):
        report.append(f"A must be square, got {model.A.shape}")
    if model.B.shape != (n, p):
        report.append(f"B shape {model.B.shape} inconsistent with A ({n}x{n})")
    if model.C.shape != (m, n):
        report.append(f"C shape {model.C.shape} inconsistent with A ({n}x{n})")
    expected = {"W": (n, n), "V": (m, m), "Omega0": (n, n), "Q": (n, n), "R": (p, p), "Lambda": (n, n)}
    for name, shape in expected.items():
        if getattr(model, name).shape != shape:
            report.append(f"{name} shape {getattr(model, name).shape}, expected {shape}")
    return report


def validate_model(model: PlantModel) -> list[str]:
    """Check all plant invariants. Returns a list of violations (empty if valid)."""
    report = dimension_report(model)
    if report:
        return report
    n = model.n

    if not _is_psd(model.W):
        report.append("W not positive semidefinite")
    if not _is_pd(model.V):
        report.append("V not positive definite")
    if not _is_psd(model.Omega0):
        report.append("Omega0 not positive semidefinite")
    if not _is_psd(model.Q):
        report.append("Q not positive semidefinite")
    if not _is_pd(model.R):
        report.append("R not positive definite")
    if not _is_psd(model.Lambda):
        report.append("Lambda not positive semidefinite")
    if report:
        return report

    # PBH rank tests at the unstable eigenvalues of A (|eig| >= 1)
    eigvals = np.linalg.eigvals(model.A)
    q_sqrt = psd_factor(model.Q)
    for lam in eigvals:
        if abs(lam) < 1.0 - SYM_TOL:
            continue
        shifted = model.A - lam * np.eye(n)
        if _pbh_rank_deficient(np.hstack([shifted, model.B.astype(complex)]), n):
            report.append(f"(A, B) not stabilizable at eigenvalue {lam:.6g}")
        if _pbh_rank_deficient(np.vstack([shifted, q_sqrt.astype(complex)]), n):
            report.append(f"(A, Q^1/2) not detectable at eigenvalue {lam:.6g}")
    return report


def measure_plant(model: PlantModel, state: PlantState, noise: PlantNoise) -> np.ndarray:
    """y = C x + v with v freshly drawn."""
    v = noise.factor("V", model.V) @ noise.measurement.standard_normal(model.m)
    return model.C @ state.x + v


def advance_plant(model: PlantModel, state: PlantState, u: np.ndarray, noise: PlantNoise) -> PlantState:
    """x' = A x + B u + w with w freshly drawn."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != model.p:
        raise ValueError(f"input dimension {u.shape[0]}, expected {model.p}")
    w = noise.factor("W", model.W) @ noise.process.standard_normal(model.n)
    return PlantState(x=model.A @ state.x + model.B @ u + w, k=state.k + 1)


def step_plant(model: PlantModel, state: PlantState, u: np.ndarray, noise: PlantNoise):
    """Emit y for the current state, then advance one step under input u."""
    y = measure_plant(model, state, noise)
    return advance_plant(model, state, u, noise), y


def sample_initial_state(model: PlantModel, noise: PlantNoise) -> PlantState:
    x0 = noise.factor("Omega0", model.Omega0) @ noise.initial.standard_normal(model.n)
    return PlantState(x=x0, k=0)


def discretize_continuous(Ac: np.ndarray, Bc: np.ndarray, dt: float):
    """Zero-order-hold discretization via the augmented matrix exponential."""
    Ac = _as_matrix(Ac, "Ac")
    Bc = _as_matrix(Bc, "Bc")
    if dt <= 0:
        raise ValueError("dt must be positive")
    n, p = Ac.shape[0], Bc.shape[1]
    aug = np.zeros((n + p, n + p))
    aug[:n, :n] = Ac
    aug[:n, n:] = Bc
    phi = expm(aug * dt)
    return phi[:n, :n], phi[:n, n:]
