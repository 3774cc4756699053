"""Metabolic energy observer (eLIF energy variable attached to an Izhikevich unit).

The energy ``eps`` follows::

    tau_eps * deps/dt = (1 - eps / (alpha * eps_0))**3 * (v - e_f) / (e_d - e_f)

and drops by ``delta`` on every emitted spike.  The dynamic leak reversal
``e_l = e_0 + (e_u - e_0) * (1 - eps / eps_0)`` is tracked for logging only;
it is not fed back into the membrane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class EnergyParams:
    # c_m, g_l, v_th and v_r describe the eLIF membrane; they are carried for
    # completeness, the Izhikevich unit owns the actual membrane.
    c_m: float = 250.0
    g_l: float = 10.0
    e_0: float = -70.0
    e_u: float = -50.0
    e_f: float = -50.0
    e_d: float = -100.0
    tau_eps: float = 8.0
    eps_0: float = 1.0
    eps_c: float = 0.2
    alpha: float = 0.8
    delta: float = 0.05
    v_th: float = -50.0
    v_r: float = -65.0
    eps_init: float = 0.7

    def __post_init__(self):
        if not self.tau_eps > 0:
            raise ValueError("tau_eps must be positive")
        if not self.eps_0 > 0:
            raise ValueError("eps_0 must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.delta >= 0:
            raise ValueError("delta must be non-negative")
        if not 0 <= self.eps_c < self.alpha * self.eps_0:
            raise ValueError("need 0 <= eps_c < alpha * eps_0")
        if self.e_d == self.e_f:
            raise ValueError("e_d and e_f must differ")
        if self.eps_init < 0:
            raise ValueError("eps_init must be non-negative")

    @property
    def eps_max(self) -> float:
        return self.alpha * self.eps_0

    def leak_reversal(self, eps: float) -> float:
        return self.e_0 + (self.e_u - self.e_0) * (1.0 - eps / self.eps_0)

    def initial_state(self) -> "EnergyState":
        return EnergyState(self.eps_init, self.leak_reversal(self.eps_init))


@dataclass(frozen=True)
class EnergyState:
    eps: float
    e_l: float


def energy_rate(eps, v, params: EnergyParams):
    """Right-hand side ``deps/dt`` of the energy law (scalar or array)."""
    sat = (1.0 - eps / params.eps_max) ** 3
    drive = (v - params.e_f) / (params.e_d - params.e_f)
    return sat * drive / params.tau_eps


def step_energy(
    state: EnergyState, v: float, spiked: bool, params: EnergyParams, dt: float
) -> EnergyState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not math.isfinite(v):
        raise ValueError("membrane potential must be finite")
    eps = state.eps + dt * energy_rate(state.eps, v, params)
    # Euler can step across the saturation barrier; the continuous law cannot.
    if state.eps <= params.eps_max and eps > params.eps_max:
        eps = params.eps_max
    if spiked:
        eps -= params.delta
    eps = max(eps, 0.0)
    return EnergyState(eps, params.leak_reversal(eps))


def spike_permitted(state: EnergyState, params: EnergyParams) -> bool:
    """Energy gate: spiking is allowed while ``eps >= eps_c`` (inclusive)."""
    return state.eps >= params.eps_c


@dataclass(frozen=True)
class EnergySummary:
    min: float
    max: float
    mean: float
    per_spike_drop: float


def energy_summary(
    trace: Sequence[float], eps_0: float = 1.0, spikes: Sequence[bool] | None = None
) -> EnergySummary:
    """Statistics of the normalised trace ``eps / eps_0``.

    ``per_spike_drop`` is the mean one-step decrease at the steps flagged in
    ``spikes``; without spike flags every decreasing step is treated as a
    spike event.
    """
    x = np.asarray(trace, dtype=float) / eps_0
    if x.size == 0:
        raise ValueError("energy trace is empty")
    drops = -np.diff(x)
    if spikes is not None:
        mask = np.asarray(spikes, dtype=bool)[1 : x.size]
    else:
        mask = drops > 0
    per_spike = float(drops[mask].mean()) if mask.any() else 0.0
    return EnergySummary(float(x.min()), float(x.max()), float(x.mean()), per_spike)
