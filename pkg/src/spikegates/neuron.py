"""Izhikevich membrane dynamics and dual-exponential conductance synapses.

Membrane (explicit Euler, one step of size ``dt``)::

    dv/dt = 0.04 v^2 + 5 v + 140 - u + gain * (I_syn + I_ext)
    du/dt = a (b v - u)
    if v >= v_peak:  v <- c,  u <- u + d

Synapse (difference of exponentials, peak normalised to ``w``)::

    x_r <- x_r * exp(-dt / tau_r)      x_d <- x_d * exp(-dt / tau_d)
    on a presynaptic spike:  x_r, x_d += w * eta
    g = max(x_d - x_r, 0)

The same arithmetic is used, element-wise, by the vectorised engine in
:mod:`spikegates.simulate`; keep the two in sync.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import InsufficientSpikesError, NumericalDivergenceError

E_EXCITATORY = 0.0
E_INHIBITORY = -75.0


@dataclass(frozen=True)
class NeuronParams:
    """Tonic-spiking Izhikevich constants.

    ``gain`` converts the stimulating and synaptic currents (pA) into model
    units.  With the defaults, 4 pA sits at the saddle-node and the neuron
    fires tonically with an inter-spike interval of ~132 ms at ``dt=0.5``.
    """

    a: float = 0.02
    b: float = 0.2
    c: float = -65.0
    d: float = 6.0
    v_peak: float = 30.0
    v_rest: float = -70.0
    u_init: float | None = None
    gain: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.v_peak > self.c:
            raise ValueError("v_peak must exceed the reset potential c")
        if not self.v_rest < self.v_peak:
            raise ValueError("v_rest must lie below v_peak")
        for name in ("a", "b", "c", "d", "v_peak", "v_rest", "gain"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def u0(self) -> float:
        return self.b * self.v_rest if self.u_init is None else self.u_init

    def initial_state(self) -> "NeuronState":
        return NeuronState(v=self.v_rest, u=self.u0)


@dataclass(frozen=True)
class NeuronState:
    v: float
    u: float
    spiked: bool = False


class SynapseKind(str, enum.Enum):
    EXCITATORY = "excitatory"
    INHIBITORY = "inhibitory"


@dataclass(frozen=True)
class SynapseParams:
    w: float
    tau_r: float
    tau_d: float
    e_syn: float | None = None
    kind: SynapseKind = SynapseKind.EXCITATORY

    def __post_init__(self):
        kind = SynapseKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.e_syn is None:
            default = E_EXCITATORY if kind is SynapseKind.EXCITATORY else E_INHIBITORY
            object.__setattr__(self, "e_syn", default)
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"synaptic weight must lie in [0, 1], got {self.w}")
        if not 0.0 < self.tau_r < self.tau_d:
            raise ValueError(
                f"need 0 < tau_r < tau_d, got tau_r={self.tau_r}, tau_d={self.tau_d}"
            )

    @classmethod
    def excitatory(cls, w, tau_r, tau_d, e_syn=E_EXCITATORY):
        return cls(w, tau_r, tau_d, e_syn, SynapseKind.EXCITATORY)

    @classmethod
    def inhibitory(cls, w, tau_r, tau_d, e_syn=E_INHIBITORY):
        return cls(w, tau_r, tau_d, e_syn, SynapseKind.INHIBITORY)

    @property
    def eta(self) -> float:
        return peak_normalization(self.tau_r, self.tau_d)

    def with_weight(self, w: float) -> "SynapseParams":
        return replace(self, w=w)


@dataclass(frozen=True)
class SynapseState:
    x_r: float = 0.0
    x_d: float = 0.0

    @property
    def g(self) -> float:
        return max(self.x_d - self.x_r, 0.0)


def peak_time(tau_r: float, tau_d: float) -> float:
    """Time of the maximum of ``exp(-t/tau_d) - exp(-t/tau_r)``."""
    return math.log(tau_d / tau_r) * tau_r * tau_d / (tau_d - tau_r)


def peak_normalization(tau_r: float, tau_d: float) -> float:
    t_star = peak_time(tau_r, tau_d)
    return 1.0 / (math.exp(-t_star / tau_d) - math.exp(-t_star / tau_r))


def izhikevich_derivatives(v, u, current, a, b):
    dv = 0.04 * v * v + 5.0 * v + 140.0 - u + current
    du = a * (b * v - u)
    return dv, du


def step_neuron(
    state: NeuronState,
    params: NeuronParams,
    i_syn: float,
    i_ext: float,
    dt: float,
    neuron_id=None,
) -> NeuronState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not (math.isfinite(state.v) and math.isfinite(state.u)):
        raise NumericalDivergenceError(neuron_id)
    current = params.gain * (i_syn + i_ext)
    dv, du = izhikevich_derivatives(state.v, state.u, current, params.a, params.b)
    v = state.v + dt * dv
    u = state.u + dt * du
    if not (math.isfinite(v) and math.isfinite(u)):
        raise NumericalDivergenceError(neuron_id)
    if v >= params.v_peak:
        return NeuronState(v=params.c, u=u + params.d, spiked=True)
    return NeuronState(v=v, u=u, spiked=False)


def step_synapse(
    state: SynapseState, params: SynapseParams, presyn_spiked: bool, dt: float
) -> SynapseState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    x_r = state.x_r * math.exp(-dt / params.tau_r)
    x_d = state.x_d * math.exp(-dt / params.tau_d)
    if presyn_spiked:
        inc = params.w * params.eta
        x_r += inc
        x_d += inc
    return SynapseState(x_r, x_d)


def synaptic_current(g: float, e_syn: float, v_post: float) -> float:
    """Conductance-based drive; positive values depolarise."""
    if g < 0:
        raise ValueError("conductance must be non-negative")
    return g * (e_syn - v_post)


def measure_isi(spike_times: Sequence[float]) -> float:
    """Mean inter-spike interval, ignoring the onset interval."""
    times = list(spike_times)
    if len(times) < 3:
        raise InsufficientSpikesError(
            f"need at least 3 spikes to measure an ISI, got {len(times)}"
        )
    diffs = [b - a for a, b in zip(times, times[1:])][1:]
    return sum(diffs) / len(diffs)


def tonic_spike_times(
    params: NeuronParams, current_pa: float, dt: float, t_ms: float
) -> list[float]:
    """Spike times of an isolated neuron under a constant current step from t=0."""
    state = params.initial_state()
    out = []
    for k in range(int(round(t_ms / dt))):
        state = step_neuron(state, params, 0.0, current_pa, dt)
        if state.spiked:
            out.append((k + 1) * dt)
    return out
