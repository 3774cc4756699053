"""Lockstep network integration.

Per step, in this order, all from the previous step's values:

1. synaptic currents from the current conductances and membrane potentials
2. neuron update (explicit Euler, reset on ``v >= v_peak``)
3. synapse update (decay, then increment on presynaptic spikes)
4. energy update

The arithmetic is element-wise identical to :func:`neuron.step_neuron`,
:func:`neuron.step_synapse` and :func:`energy.step_energy`; synaptic
currents are summed per neuron in synapse order so a scalar re-run gives
bit-identical results.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .circuit import H_REF, CircuitGraph
from .errors import NumericalDivergenceError, StimulusError
from .neuron import NeuronParams
from .stimulus import StimulusProgram, encode


TRACES = ("v", "u", "g_total", "eps", "spiked")


class EnergyMode(str, enum.Enum):
    OFF = "off"          # energy not computed
    OBSERVE = "observe"  # computed, no effect on spiking
    GATE = "gate"        # spikes suppressed while eps < eps_c


@dataclass
class SimResult:
    labels: tuple
    dt: float
    total_ms: float
    spike_times: list
    v: np.ndarray | None = None
    u: np.ndarray | None = None
    g_total: np.ndarray | None = None
    eps: np.ndarray | None = None
    eps_0: np.ndarray | None = None
    spiked: np.ndarray | None = None
    suppressed: np.ndarray | None = None
    windows: list = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return int(round(self.total_ms / self.dt))

    @property
    def t_ms(self) -> np.ndarray:
        return np.arange(1, self.n_steps + 1) * self.dt

    def spikes_of(self, label: str) -> np.ndarray:
        return self.spike_times[self.labels.index(label)]

    def eps_norm(self) -> np.ndarray | None:
        if self.eps is None:
            return None
        return self.eps / self.eps_0


def _vec(graph, get):
    return np.array([get(n) for n in graph.neurons], dtype=float)


def _slots(post: np.ndarray, n: int):
    """Split synapse indices into groups with distinct targets, preserving
    synapse order per target, so each group is one fancy-index add."""
    seen = np.zeros(n, dtype=int)
    rank = np.zeros(len(post), dtype=int)
    for k, p in enumerate(post):
        rank[k] = seen[p]
        seen[p] += 1
    return [np.nonzero(rank == r)[0] for r in range(int(rank.max()) + 1)] if len(post) else []


def run_sim(
    graph: CircuitGraph,
    program: StimulusProgram,
    dt: float = 0.5,
    energy_mode: EnergyMode | str = EnergyMode.OBSERVE,
    record=True,
) -> SimResult:
    """Simulate ``graph`` under ``program``.

    H-bound neurons receive ``program.current_pa`` for the whole run.
    ``record`` is ``True`` (all traces), ``False`` (spike times only) or a
    collection of trace names out of ``v, u, g_total, eps, spiked``.
    """
    energy_mode = EnergyMode(energy_mode)
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = len(graph.neurons)
    steps = int(round(program.total_ms / dt))
    labels = tuple(nr.label for nr in graph.neurons)
    windows = program.windows()
    if n == 0:
        return SimResult(labels, dt, program.total_ms, [], windows=windows)

    ref_params = graph.neurons[0].params if graph.neurons else NeuronParams()
    currents = encode(program, dt, ref_params)
    ext_idx, ext_rows = [], []
    for st in graph.stimuli:
        if st.program_ref == H_REF:
            continue
        if st.program_ref not in currents:
            raise StimulusError(f"input {st.program_ref!r} has no waveform in the stimulus program")
        ext_idx.append(st.neuron_id)
        ext_rows.append(currents[st.program_ref])
    ext_idx = np.array(ext_idx, dtype=int)
    ext = np.array(ext_rows).reshape(len(ext_idx), steps)
    i_const = np.zeros(n)
    for st in graph.stimuli:
        if st.program_ref == H_REF:
            i_const[st.neuron_id] = program.current_pa

    a = _vec(graph, lambda x: x.params.a)
    b = _vec(graph, lambda x: x.params.b)
    c = _vec(graph, lambda x: x.params.c)
    d = _vec(graph, lambda x: x.params.d)
    v_peak = _vec(graph, lambda x: x.params.v_peak)
    gain = _vec(graph, lambda x: x.params.gain)
    v = _vec(graph, lambda x: x.params.v_rest)
    u = _vec(graph, lambda x: x.params.u0)

    m = len(graph.synapses)
    pre = np.array([s.pre_id for s in graph.synapses], dtype=int)
    post = np.array([s.post_id for s in graph.synapses], dtype=int)
    inc = np.array([s.params.w * s.params.eta for s in graph.synapses])
    fr = np.exp(-dt / np.array([s.params.tau_r for s in graph.synapses]))
    fd = np.exp(-dt / np.array([s.params.tau_d for s in graph.synapses]))
    e_syn = np.array([s.params.e_syn for s in graph.synapses])
    x_r = np.zeros(m)
    x_d = np.zeros(m)
    slots = _slots(post, n)

    use_energy = energy_mode is not EnergyMode.OFF
    gate = energy_mode is EnergyMode.GATE
    if use_energy:
        ep = [nr.energy for nr in graph.neurons]
        eps = np.array([p.eps_init for p in ep])
        eps_max = np.array([p.eps_max for p in ep])
        e_f = np.array([p.e_f for p in ep])
        e_span = np.array([p.e_d - p.e_f for p in ep])
        tau_eps = np.array([p.tau_eps for p in ep])
        delta = np.array([p.delta for p in ep])
        eps_c = np.array([p.eps_c for p in ep])
        eps_0 = np.array([p.eps_0 for p in ep])

    if record is True:
        record = TRACES
    record = set(record or ())
    unknown = record - set(TRACES)
    if unknown:
        raise ValueError(f"unknown trace names: {sorted(unknown)}")
    if not use_energy:
        record.discard("eps")
    rec = {key: np.empty((steps, n)) for key in record - {"spiked"}}
    if "spiked" in record:
        rec["spiked"] = np.zeros((steps, n), dtype=bool)
    suppressed = np.zeros((steps, n), dtype=bool) if gate else None
    spike_steps = [[] for _ in range(n)]

    # overflow is caught below as divergence
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            g = np.maximum(x_d - x_r, 0.0)
            contrib = g * (e_syn - v[post])
            i_syn = np.zeros(n)
            for sl in slots:
                i_syn[post[sl]] += contrib[sl]
            i_ext = i_const.copy()
            if len(ext_idx):
                i_ext[ext_idx] = ext[:, k]
            current = gain * (i_syn + i_ext)
            dv = 0.04 * v * v + 5.0 * v + 140.0 - u + current
            du = a * (b * v - u)
            v_new = v + dt * dv
            u = u + dt * du
            if not (np.isfinite(v_new).all() and np.isfinite(u).all()):
                bad = int(np.nonzero(~(np.isfinite(v_new) & np.isfinite(u)))[0][0])
                raise NumericalDivergenceError(labels[bad], (k + 1) * dt)
            crossed = v_new >= v_peak
            if gate:
                blocked = crossed & (eps < eps_c)
                sp = crossed & ~blocked
                if suppressed is not None:
                    suppressed[k] = blocked
            else:
                sp = crossed
            v_new[crossed] = c[crossed]
            u[crossed] += d[crossed]
            v = v_new

            x_r = x_r * fr
            x_d = x_d * fd
            if m:
                fired = sp[pre]
                x_r[fired] += inc[fired]
                x_d[fired] += inc[fired]

            if use_energy:
                sat = (1.0 - eps / eps_max) ** 3
                rate = sat * ((v - e_f) / e_span) / tau_eps
                new = eps + dt * rate
                over = (eps <= eps_max) & (new > eps_max)
                new[over] = eps_max[over]
                new[sp] -= delta[sp]
                eps = np.maximum(new, 0.0)

            for j in np.nonzero(sp)[0]:
                spike_steps[j].append(k + 1)
            if record:
                if "v" in rec:
                    rec["v"][k] = v
                if "u" in rec:
                    rec["u"][k] = u
                if "spiked" in rec:
                    rec["spiked"][k] = sp
                if "eps" in rec:
                    rec["eps"][k] = eps
                if "g_total" in rec:
                    g_now = np.maximum(x_d - x_r, 0.0)
                    gt = np.zeros(n)
                    for sl in slots:
                        gt[post[sl]] += g_now[sl]
                    rec["g_total"][k] = gt

    spike_times = [np.array(s, dtype=float) * dt for s in spike_steps]
    return SimResult(
        labels, dt, program.total_ms, spike_times,
        v=rec.get("v"), u=rec.get("u"), g_total=rec.get("g_total"),
        eps=rec.get("eps"), eps_0=eps_0 if "eps" in rec else None,
        spiked=rec.get("spiked"), suppressed=suppressed, windows=windows,
    )
