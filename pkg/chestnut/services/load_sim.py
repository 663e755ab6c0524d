"""
Per-server resource utilization dynamics.

Each server owns its own random substream so servers can be stepped in any
order without changing results.
"""
from typing import Sequence, Tuple

import numpy as np

from ..core.config import SimConfig
from ..schemas.entities import EdgeServer
from ..schemas.load import DemandTotals, LoadState, Triple


def _clamp(values: Sequence[float], cfg: SimConfig) -> Triple:
    a, b, c = np.clip(np.asarray(values, dtype=float), cfg.rho_min, cfg.rho_max)
    return (float(a), float(b), float(c))


def initial_load(server: EdgeServer, cfg: SimConfig, rng: np.random.Generator) -> LoadState:
    rho = _clamp(rng.uniform(cfg.init_load_low, cfg.init_load_high, size=3), cfg)
    return LoadState(eid=server.id, t=0, rho=rho, history=(rho,))


def remaining_supply(state: LoadState, server: EdgeServer) -> Tuple[float, float, float]:
    """(1 - rho) * psi per resource, in supply-level units."""
    return tuple(float((1.0 - r) * psi) for r, psi in zip(state.rho, server.supply))


def softmax3(x: Sequence[float]) -> Triple:
    arr = np.asarray(x, dtype=float)
    e = np.exp(arr - arr.max())
    e /= e.sum()
    return (float(e[0]), float(e[1]), float(e[2]))


def relative_utilization(state: LoadState, server: EdgeServer, demand: DemandTotals) -> Triple:
    """gamma = softmax(softmax(beta - alpha) + rho) with alpha over supply, beta over demand."""
    alpha = np.array(softmax3(remaining_supply(state, server)))
    beta = np.array(softmax3(demand.as_triple()))
    return softmax3(np.array(softmax3(beta - alpha)) + np.array(state.rho))


def step_load(state: LoadState, server: EdgeServer, demand: DemandTotals,
              rng: np.random.Generator, cfg: SimConfig) -> LoadState:
    """Utilizations for t+1: one shared scale g keeps the gamma ratios."""
    gamma = np.array(relative_utilization(state, server, demand))
    g = rng.uniform(cfg.load_scale_low, cfg.load_scale_high)
    return state.advanced(_clamp(3.0 * gamma * g, cfg), cfg.k)


def start_of_step_disturbance(state: LoadState, rng: np.random.Generator, cfg: SimConfig) -> LoadState:
    if cfg.disturbance_eps == 0:
        return state
    noise = rng.uniform(-cfg.disturbance_eps, cfg.disturbance_eps, size=3)
    return state.with_current(_clamp(np.asarray(state.rho) + noise, cfg))


def mean_abs_change(values: Sequence[float]) -> float:
    """Mean |x_i - x_{i-1}| over the window; 0 with fewer than two values."""
    if len(values) < 2:
        return 0.0
    return float(np.mean(np.abs(np.diff(np.asarray(values, dtype=float)))))


def mean_change(values: Sequence[float]) -> float:
    """Signed mean of successive differences; 0 with fewer than two values."""
    if len(values) < 2:
        return 0.0
    return float(np.mean(np.diff(np.asarray(values, dtype=float))))
