"""Constant-velocity propagation and closest-approach tests between agent pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import AgentState, horizon_steps

DEFAULT_WEIGHT_CAP = 1e3


@dataclass(frozen=True)
class PropagationResult:
    dt: float
    states: tuple[AgentState, ...]


def propagate_cv(state: AgentState, t: float) -> AgentState:
    if t < 0:
        raise ValueError(f"propagation time must be >= 0, got {t}")
    if t == 0:
        return state
    return AgentState(state.x + t * state.vx, state.y + t * state.vy, state.heading, state.vx, state.vy)


def rollout_cv(state: AgentState, eta: float, dt: float) -> PropagationResult:
    """States at t = 0, dt, ..., floor(eta/dt)*dt."""
    n = horizon_steps(eta, dt)
    return PropagationResult(dt, tuple(propagate_cv(state, k * dt) for k in range(n + 1)))


def _closest(dpx: float, dpy: float, dvx: float, dvy: float, eta: float) -> tuple[float, float]:
    a = dvx * dvx + dvy * dvy
    if a == 0.0:
        t = 0.0
    else:
        t = -(dpx * dvx + dpy * dvy) / a
        t = min(max(t, 0.0), eta)
    return math.hypot(dpx + t * dvx, dpy + t * dvy), t


def closest_future_distance(si: AgentState, sj: AgentState, eta: float, dt: float | None = None) -> tuple[float, float]:
    """Minimum separation over t in [0, eta] under constant velocity, and the time it occurs.

    The minimum of |dp + t dv| is taken analytically and clamped to the horizon,
    so ``dt`` only exists for interface symmetry with sampled implementations.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    if dt is not None and dt <= 0:
        raise ValueError("dt must be > 0")
    return _closest(sj.x - si.x, sj.y - si.y, sj.vx - si.vx, sj.vy - si.vy, eta)


def distance_weight(d: float, d0: float, cap: float = DEFAULT_WEIGHT_CAP) -> float:
    """Interaction weight d0/d inside the threshold distance, 0 outside, capped for d -> 0."""
    if d < 0 or d0 <= 0:
        raise ValueError("need d >= 0 and d0 > 0")
    if d >= d0:
        return 0.0
    if d == 0.0 or d0 / d > cap:
        return cap
    return d0 / d


def direction_relevant(so: AgentState, si: AgentState, D: float, eta: float) -> bool:
    """True when the relative constant-velocity motion brings the pair within ``D`` before ``eta``."""
    if D <= 0 or eta <= 0:
        raise ValueError("D and eta must be > 0")
    return closest_future_distance(so, si, eta)[0] < D


def pairwise_closest(pos: np.ndarray, vel: np.ndarray, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised closest approach over all pairs.

    Returns symmetric (N, N) matrices of distance and time. Only i < j is
    computed and then mirrored, so the result is exactly symmetric.
    """
    n = len(pos)
    d = np.zeros((n, n))
    tt = np.zeros((n, n))
    if n < 2:
        return d, tt
    iu, ju = np.triu_indices(n, k=1)
    dp = pos[ju] - pos[iu]
    dv = vel[ju] - vel[iu]
    a = dv[:, 0] * dv[:, 0] + dv[:, 1] * dv[:, 1]
    b = dp[:, 0] * dv[:, 0] + dp[:, 1] * dv[:, 1]
    moving = a > 0
    t = np.zeros_like(a)
    t[moving] = np.clip(-b[moving] / a[moving], 0.0, eta)
    dist = np.hypot(dp[:, 0] + t * dv[:, 0], dp[:, 1] + t * dv[:, 1])
    d[iu, ju] = dist
    d[ju, iu] = dist
    tt[iu, ju] = t
    tt[ju, iu] = t
    return d, tt


def distance_weights(d: np.ndarray, d0: np.ndarray, cap: float = DEFAULT_WEIGHT_CAP) -> np.ndarray:
    """Elementwise :func:`distance_weight`; the diagonal is forced to zero."""
    w = np.zeros_like(d)
    inside = d < d0
    with np.errstate(divide="ignore"):
        w[inside] = np.minimum(d0[inside] / d[inside], cap)
    np.fill_diagonal(w, 0.0)
    return w
