import dataclasses

import numpy as np
import pytest

from spikegates.circuit import CircuitGraph, Neuron, Probe, Stimulus, WeightSet, build_gate, prebuilt
from spikegates.energy import EnergyParams, step_energy
from spikegates.errors import NumericalDivergenceError, StimulusError
from spikegates.neuron import NeuronParams, SynapseState, step_neuron, step_synapse
from spikegates.simulate import EnergyMode, run_sim
from spikegates.stimulus import LogicWaveform, StimulusProgram, encode, truth_table_schedule


def reference_run(graph, program, dt):
    """Scalar loop built from the single-element step functions."""
    currents = encode(program, dt, graph.neurons[0].params)
    steps = int(round(program.total_ms / dt))
    ext = {}
    for st in graph.stimuli:
        ext[st.neuron_id] = (
            np.full(steps, program.current_pa) if st.program_ref == "H" else currents[st.program_ref])
    ns = [n.params.initial_state() for n in graph.neurons]
    es = [n.energy.initial_state() for n in graph.neurons]
    ss = [SynapseState() for _ in graph.synapses]
    v = np.empty((steps, len(ns)))
    eps = np.empty((steps, len(ns)))
    for k in range(steps):
        i_syn = [0.0] * len(ns)
        for syn, s in zip(graph.synapses, ss):
            i_syn[syn.post_id] += s.g * (syn.params.e_syn - ns[syn.post_id].v)
        ns = [step_neuron(ns[j], n.params, i_syn[j], float(ext[j][k]) if j in ext else 0.0, dt)
              for j, n in enumerate(graph.neurons)]
        ss = [step_synapse(s, syn.params, ns[syn.pre_id].spiked, dt) for syn, s in zip(graph.synapses, ss)]
        es = [step_energy(e, ns[j].v, ns[j].spiked, n.energy, dt) for j, (e, n) in enumerate(zip(es, graph.neurons))]
        v[k] = [s.v for s in ns]
        eps[k] = [e.eps for e in es]
    return v, eps


@pytest.mark.parametrize("gate", ["AND", "NOT", "AND_NOT"])
def test_lockstep_matches_scalar_reference(gate):
    g = build_gate(gate)
    program = truth_table_schedule(len(g.input_ports), 300.0, labels=list(g.input_ports))
    res = run_sim(g, program, 0.5)
    v, eps = reference_run(g, program, 0.5)
    np.testing.assert_allclose(res.v, v, rtol=0, atol=1e-9)
    np.testing.assert_allclose(res.eps, eps, rtol=0, atol=1e-12)


def test_empty_graph():
    res = run_sim(CircuitGraph(), StimulusProgram({}, 4.0, total_ms=10.0))
    assert res.labels == () and res.spike_times == []


def test_and_truth_table_fires_only_in_last_window():
    res = run_sim(prebuilt("and"), truth_table_schedule(2), 0.5)
    out = res.spikes_of("Y")
    assert len(out) > 0 and out.min() >= 1500.0


def test_series_shapes_and_spike_consistency():
    res = run_sim(build_gate("NOT"), StimulusProgram({"A": LogicWaveform.from_bits([0, 1])}), 0.5)
    n = res.n_steps
    assert n == 2000
    for arr in (res.v, res.u, res.g_total, res.eps, res.spiked):
        assert arr.shape == (n, len(res.labels))
    c = NeuronParams().c
    for j in range(len(res.labels)):
        steps = np.nonzero(res.spiked[:, j])[0]
        np.testing.assert_array_equal((steps + 1) * 0.5, res.spike_times[j])
        assert (res.v[steps, j] == c).all()


def test_record_subset_and_unknown_trace():
    g = build_gate("AND")
    p = truth_table_schedule(2, 200.0)
    res = run_sim(g, p, record=("v",))
    assert res.v is not None and res.u is None and res.eps is None
    with pytest.raises(ValueError):
        run_sim(g, p, record=("volts",))


def test_energy_off_drops_eps_trace():
    res = run_sim(build_gate("AND"), truth_table_schedule(2, 200.0), energy_mode="off")
    assert res.eps is None and res.eps_norm() is None


def test_unbound_input():
    g = build_gate("AND")
    with pytest.raises(StimulusError):
        run_sim(g, StimulusProgram({"A": LogicWaveform.from_bits([1])}))


def test_divergence_names_neuron_and_time():
    n = Neuron(0, "hot", NeuronParams(gain=1e308))
    g = CircuitGraph((n,), (), (Stimulus(0, "A"),), (Probe(0, "hot"),))
    with pytest.raises(NumericalDivergenceError) as e:
        run_sim(g, StimulusProgram({"A": LogicWaveform.from_bits([1])}, phase_lock=False))
    assert e.value.neuron_id == "hot" and e.value.t_ms > 0


def test_deterministic():
    g = prebuilt("sr_latch")
    p = StimulusProgram({"S": LogicWaveform.from_bits([1, 0, 1]), "R": LogicWaveform.from_bits([0, 1, 1])})
    a, b = run_sim(g, p), run_sim(g, p)
    np.testing.assert_array_equal(a.v, b.v)
    np.testing.assert_array_equal(a.eps, b.eps)


def test_gating_blocks_spikes_below_critical_energy():
    low = EnergyParams(eps_init=0.0, tau_eps=400.0)
    g = build_gate("BUFFER")
    g = dataclasses.replace(g, neurons=tuple(dataclasses.replace(n, energy=low) for n in g.neurons))
    p = StimulusProgram({"A": LogicWaveform.from_bits([1], 1000.0)})
    res = run_sim(g, p, energy_mode=EnergyMode.GATE)
    assert res.suppressed.any()
    # no emitted spike while the energy was below eps_c
    for j in range(len(res.labels)):
        emitted = np.nonzero(res.spiked[:, j])[0]
        prev = np.where(emitted > 0, res.eps[emitted - 1, j], low.eps_init)
        assert (prev >= low.eps_c).all()
    observed = run_sim(g, p, energy_mode="observe")
    assert sum(map(len, observed.spike_times)) > sum(map(len, res.spike_times))


def test_rejects_bad_dt():
    with pytest.raises(ValueError):
        run_sim(build_gate("AND"), truth_table_schedule(2), dt=0.0)
