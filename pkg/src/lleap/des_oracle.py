"""Event-resolving reference runs via bucket refinement.

A deterministic bucket run converges to the discrete-event result once the
bucket is small enough that individual events are resolved.  The oracle
starts from a bucket a factor K below the shortest inter-event time
implied by the process capacities and keeps halving it until the quantity
of interest stops moving, returning the finest trajectory together with a
first-order Richardson extrapolation of the limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bucket_engine import Trajectory, run_pull, run_push
from .model import InventoryPolicy, ModelError, OrderStream, SimConfig, SupplyChainNetwork

__all__ = ["OracleConfig", "OracleResult", "NoConvergence", "run_oracle"]


class NoConvergence(RuntimeError):
    """QoI did not settle within the allowed number of bucket halvings."""

    def __init__(self, ladder: list[tuple[float, float]], tolerance: float):
        self.ladder = ladder
        self.tolerance = tolerance
        steps = ", ".join(f"dt={dt:g}: {q:.6g}" for dt, q in ladder)
        super().__init__(
            f"oracle did not converge to +/-{tolerance} after {len(ladder)} refinements ({steps})"
        )


@dataclass(frozen=True)
class OracleConfig:
    """Refinement schedule: initial factor below the event scale, stop tolerance."""

    refine_factor: int = 4
    tolerance: float = 0.5
    max_halvings: int = 10

    def __post_init__(self) -> None:
        if self.refine_factor < 2 or int(self.refine_factor) != self.refine_factor:
            raise ModelError("refine_factor must be an integer >= 2")
        if self.tolerance <= 0:
            raise ModelError("tolerance must be > 0")


@dataclass
class OracleResult:
    trajectory: Trajectory
    qoi: float
    richardson: float
    ladder: list[tuple[float, float]] = field(default_factory=list)

    @property
    def dt(self) -> float:
        return self.trajectory.dt


def _initial_dt(net: SupplyChainNetwork, horizon: float, factor: int) -> float:
    positive = net.capacity[net.capacity > 0]
    if positive.size:
        dt = (1.0 / positive.max()) / factor
    else:
        dt = horizon / 16.0  # nothing ever fires; any bucket resolves it
    return min(dt, horizon)


def run_oracle(
    net: SupplyChainNetwork,
    config: SimConfig,
    qoi: Callable[[Trajectory], float],
    policy: InventoryPolicy | None = None,
    orders: OrderStream | None = None,
    x0: np.ndarray | None = None,
    oracle: OracleConfig = OracleConfig(),
) -> OracleResult:
    """Refine the bucket until `qoi` changes by less than the tolerance.

    Returns the finest trajectory, its QoI, the refinement ladder, and the
    Richardson-extrapolated limit (first-order: 2*q_h - q_2h).  Raises
    NoConvergence when the ladder is exhausted.
    """
    if config.stochastic:
        raise ModelError("the oracle is defined for deterministic runs")
    runner = run_push if config.mode == "push" else run_pull
    dt = _initial_dt(net, config.horizon, oracle.refine_factor)

    ladder: list[tuple[float, float]] = []
    prev_q: float | None = None
    for _ in range(oracle.max_halvings + 1):
        cfg = config.with_dt(dt)
        if runner is run_push:
            traj = runner(net, cfg, policy=policy, x0=x0)
        else:
            traj = runner(net, cfg, policy=policy, orders=orders, x0=x0)
        q = float(qoi(traj))
        ladder.append((dt, q))
        if prev_q is not None and abs(q - prev_q) < oracle.tolerance:
            richardson = 2.0 * q - prev_q
            traj.qoi_cache["oracle_richardson"] = richardson
            return OracleResult(trajectory=traj, qoi=q, richardson=richardson, ladder=ladder)
        prev_q = q
        dt /= 2.0
    raise NoConvergence(ladder, oracle.tolerance)
