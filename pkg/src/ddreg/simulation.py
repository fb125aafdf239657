"""Trajectory generation, closed-loop simulation and decay checks.

Dynamics: x1(t+1) = A1 x1(t), x2(t+1) = A2 x2(t) + B2 u(t) + A3 x1(t),
z(t) = D1 x1(t) + D2 x2(t) + E u(t).  Open-loop simulation collects the
data matrices a synthesis run consumes; closed-loop simulation applies a
regulator to a concrete member and the decay check validates the
regulated output empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    CompatibleSet,
    CompatibleSetUnknownA3,
    DimensionError,
    KnownMatrices,
    ProblemData,
    Regulator,
    member_at,
    member_at_unknown_a3,
)

__all__ = [
    "TrueSystem",
    "Trajectory",
    "DecayResult",
    "generate_data",
    "closed_loop_sim",
    "decay_check",
    "horizon_for_radius",
    "sample_members",
    "sample_members_unknown_a3",
]

_ZERO_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class TrueSystem:
    """A concrete interconnection used for simulation."""

    A1: np.ndarray
    A2: np.ndarray
    B2: np.ndarray
    A3: np.ndarray

    def __post_init__(self):
        for name in ("A1", "A2", "B2", "A3"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n1, n2 = self.A1.shape[0], self.A2.shape[0]
        if self.A1.shape != (n1, n1) or self.A2.shape != (n2, n2):
            raise DimensionError("A1 and A2 must be square")
        if self.B2.shape[0] != n2:
            raise DimensionError(f"B2 has {self.B2.shape[0]} rows but A2 is {n2}x{n2}")
        if self.A3.shape != (n2, n1):
            raise DimensionError(f"A3 must have shape ({n2}, {n1}), got {self.A3.shape}")

    @property
    def n1(self) -> int:
        return self.A1.shape[0]

    @property
    def n2(self) -> int:
        return self.A2.shape[0]

    @property
    def m(self) -> int:
        return self.B2.shape[1]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled closed-loop run, columns indexed by t = 0..horizon."""

    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    z: np.ndarray

    @property
    def horizon(self) -> int:
        return self.x1.shape[1] - 1


@dataclass(frozen=True, eq=False)
class DecayResult:
    """Outcome of the empirical decay test."""

    passes: bool
    fitted_rate: float
    terminal_norm: float


def _column(name: str, v, length: int) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape[0] != length:
        raise DimensionError(f"{name} must have length {length}, got {arr.shape[0]}")
    return arr


def generate_data(system: TrueSystem, x1_0, x2_0, inputs) -> ProblemData:
    """Simulate the open-loop interconnection and collect data matrices.

    inputs is m x tau; the returned ProblemData holds the applied inputs,
    the exosystem samples x1(0..tau-1) and the endosystem samples
    x2(0..tau).
    """
    U = np.asarray(inputs, dtype=float)
    if U.ndim != 2 or U.shape[0] != system.m:
        raise DimensionError(
            f"inputs must be {system.m} x tau, got shape {np.shape(inputs)}"
        )
    tau = U.shape[1]
    if tau < 1:
        raise DimensionError("inputs must contain at least one sample")
    x1 = _column("x1_0", x1_0, system.n1)
    x2 = _column("x2_0", x2_0, system.n2)
    X1 = np.empty((system.n1, tau))
    X2 = np.empty((system.n2, tau + 1))
    X2[:, 0] = x2
    for t in range(tau):
        X1[:, t] = x1
        x2 = system.A2 @ x2 + system.B2 @ U[:, t] + system.A3 @ x1
        x1 = system.A1 @ x1
        X2[:, t + 1] = x2
    return ProblemData(U_minus=U, X1_minus=X1, X2=X2)


def closed_loop_sim(
    system: TrueSystem,
    known: KnownMatrices,
    regulator: Regulator,
    x1_0,
    x2_0,
    horizon: int,
) -> Trajectory:
    """Run u = K1 x1 + K2 x2 on a concrete member for the given horizon.

    The member supplies the dynamics (A2, B2 and its own A3); the output
    matrices D1, D2, E come from the known part.
    """
    if horizon < 1:
        raise DimensionError("horizon must be at least 1")
    x1 = _column("x1_0", x1_0, system.n1)
    x2 = _column("x2_0", x2_0, system.n2)
    K1, K2 = regulator.K1, regulator.K2
    D1, D2, E = known.D1, known.D2, known.E
    n_steps = horizon + 1
    X1 = np.empty((system.n1, n_steps))
    X2 = np.empty((system.n2, n_steps))
    U = np.empty((K1.shape[0], n_steps))
    Zout = np.empty((D1.shape[0], n_steps))
    for t in range(n_steps):
        u = K1 @ x1 + K2 @ x2
        X1[:, t] = x1
        X2[:, t] = x2
        U[:, t] = u
        Zout[:, t] = D1 @ x1 + D2 @ x2 + E @ u
        if t < horizon:
            x2 = system.A2 @ x2 + system.B2 @ u + system.A3 @ x1
            x1 = system.A1 @ x1
    return Trajectory(x1=X1, x2=X2, u=U, z=Zout)


def horizon_for_radius(rho: float) -> int:
    """Horizon long enough for a radius-rho loop to decay below 1e-9."""
    rate = rho + 0.05
    if rate >= 1.0:
        return 500
    if rate <= 0.0:
        return 20
    steps = math.ceil(math.log(1e-9) / math.log(rate))
    return int(min(500, max(20, steps)))


def decay_check(
    trajectory: Trajectory,
    rho_bound: float,
    rate_slack: float = 0.05,
    terminal_tol: float = 1e-6,
) -> DecayResult:
    """Fit a geometric rate to ||z(t)|| and compare against rho_bound.

    The rate is a least-squares fit of log ||z(t)|| over the tail half of
    the horizon, ignoring steps already at the floating-point floor.  The
    check passes when the fitted rate is at most rho_bound + rate_slack
    and the terminal norm is below terminal_tol * (1 + ||z(0)||).  The
    trajectory must hold at least 20 samples so the tail fit has support.
    """
    norms = np.linalg.norm(trajectory.z, axis=0)
    n_steps = norms.shape[0]
    if n_steps < 20:
        raise DimensionError(
            f"trajectory must hold at least 20 samples for the tail fit, got {n_steps}"
        )
    z0 = norms[0]
    terminal = float(norms[-1])
    terminal_ok = terminal < terminal_tol * (1.0 + z0)
    tail = norms[n_steps // 2 :]
    t_tail = np.arange(n_steps // 2, n_steps)
    mask = tail >= _ZERO_FLOOR
    if mask.sum() < 2:
        # Output already at the floor on the tail: fully decayed.
        return DecayResult(passes=terminal_ok, fitted_rate=0.0, terminal_norm=terminal)
    slope = np.polyfit(t_tail[mask], np.log(tail[mask]), 1)[0]
    fitted_rate = float(np.exp(slope))
    passes = terminal_ok and fitted_rate <= rho_bound + rate_slack
    return DecayResult(passes=passes, fitted_rate=fitted_rate, terminal_norm=terminal)


def sample_members(
    cset: CompatibleSet, count: int, radius: float = 5.0, seed: int = 0
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Draw members of the family with uniform kernel coordinates.

    With r = 0 the family is a single system and only the particular
    solution is returned, regardless of count.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if cset.r == 0:
        return [(cset.A2_part.copy(), cset.B2_part.copy())]
    rng = np.random.default_rng(seed)
    members = []
    for _ in range(count):
        N = rng.uniform(-radius, radius, size=(cset.n2, cset.r))
        members.append(member_at(cset, N))
    return members


def sample_members_unknown_a3(
    cset: CompatibleSetUnknownA3, count: int, radius: float = 5.0, seed: int = 0
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Sample (A2, B2, A3) triples from the coupling-free family."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if cset.r == 0:
        return [(cset.A2_part.copy(), cset.B2_part.copy(), cset.A3_part.copy())]
    rng = np.random.default_rng(seed)
    members = []
    for _ in range(count):
        N = rng.uniform(-radius, radius, size=(cset.n2, cset.r))
        members.append(member_at_unknown_a3(cset, N))
    return members
