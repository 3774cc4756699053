import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikegates.errors import InsufficientSpikesError, NumericalDivergenceError
from spikegates.neuron import (
    E_EXCITATORY,
    E_INHIBITORY,
    NeuronParams,
    NeuronState,
    SynapseParams,
    SynapseState,
    measure_isi,
    peak_normalization,
    peak_time,
    step_neuron,
    step_synapse,
    synaptic_current,
    tonic_spike_times,
)


def test_single_euler_step_by_hand():
    # dv = 0.04*4900 - 350 + 140 + 14 + 4 = 4 ; du = 0.02*(0.2*-70 + 14) = 0
    p = NeuronParams()
    s = step_neuron(p.initial_state(), p, 0.0, 4.0, 0.5)
    assert s.v == pytest.approx(-68.0, abs=1e-12)
    assert s.u == -14.0
    assert not s.spiked


def test_rest_is_a_fixed_point_without_input():
    p = NeuronParams()
    s = p.initial_state()
    for _ in range(2000):
        s = step_neuron(s, p, 0.0, 0.0, 0.5)
    assert s.v == -70.0 and s.u == -14.0


def test_reset_on_crossing():
    p = NeuronParams()
    s = step_neuron(NeuronState(29.0, -10.0), p, 0.0, 50.0, 0.5)
    assert s.spiked
    assert s.v == p.c
    # u is advanced by the Euler step before the jump
    assert s.u == pytest.approx(-10.0 + 0.5 * 0.02 * (0.2 * 29.0 + 10.0) + p.d)


def test_tonic_isi_at_reference_current():
    isi = measure_isi(tonic_spike_times(NeuronParams(), 4.0, 0.5, 3000.0))
    assert abs(isi - 132.0) <= 5.0


def test_isi_converges_under_dt_refinement():
    coarse = measure_isi(tonic_spike_times(NeuronParams(), 4.0, 0.5, 3000.0))
    fine = measure_isi(tonic_spike_times(NeuronParams(), 4.0, 0.05, 3000.0))
    assert abs(coarse - fine) < 0.02 * fine


def test_no_firing_without_current():
    assert tonic_spike_times(NeuronParams(), 0.0, 0.5, 2000.0) == []


@given(st.floats(4.0, 12.0), st.floats(0.5, 4.0))
def test_isi_shrinks_with_current(i_lo, extra):
    p = NeuronParams()
    lo = measure_isi(tonic_spike_times(p, i_lo, 0.5, 2000.0))
    hi = measure_isi(tonic_spike_times(p, i_lo + extra, 0.5, 2000.0))
    assert hi <= lo


def test_gain_scales_currents():
    p = NeuronParams(gain=2.0)
    a = tonic_spike_times(p, 2.0, 0.5, 1500.0)
    b = tonic_spike_times(NeuronParams(), 4.0, 0.5, 1500.0)
    assert a == b


def test_measure_isi_needs_three_spikes():
    with pytest.raises(InsufficientSpikesError):
        measure_isi([1.0, 2.0])
    # first interval is dropped
    assert measure_isi([0.0, 50.0, 60.0, 70.0]) == 10.0


def test_divergence_is_reported():
    with pytest.raises(NumericalDivergenceError) as e:
        step_neuron(NeuronState(math.inf, 0.0), NeuronParams(), 0.0, 0.0, 0.5, neuron_id=3)
    assert e.value.neuron_id == 3


@pytest.mark.parametrize("kw", [dict(a=0.0), dict(c=40.0), dict(v_rest=31.0), dict(gain=math.nan)])
def test_bad_neuron_params(kw):
    with pytest.raises(ValueError):
        NeuronParams(**kw)


@pytest.mark.parametrize("bad", [(-0.1, 1.0, 2.0), (1.5, 1.0, 2.0), (0.1, 2.0, 2.0), (0.1, 0.0, 2.0)])
def test_bad_synapse_params(bad):
    with pytest.raises(ValueError):
        SynapseParams(*bad)


def test_reversal_defaults():
    assert SynapseParams(0.1, 1.0, 2.0).e_syn == E_EXCITATORY
    assert SynapseParams.inhibitory(0.1, 1.0, 2.0).e_syn == E_INHIBITORY


def test_synaptic_current_sign():
    assert synaptic_current(0.1, E_EXCITATORY, -70.0) == pytest.approx(7.0)
    assert synaptic_current(0.1, E_INHIBITORY, -60.0) == pytest.approx(-1.5)
    with pytest.raises(ValueError):
        synaptic_current(-0.1, 0.0, -70.0)


def test_peak_time_against_dense_grid():
    tau_r, tau_d = 2.64, 3.96
    t = np.linspace(0, 40, 400001)
    kernel = np.exp(-t / tau_d) - np.exp(-t / tau_r)
    assert peak_time(tau_r, tau_d) == pytest.approx(t[kernel.argmax()], abs=1e-3)
    assert peak_normalization(tau_r, tau_d) * kernel.max() == pytest.approx(1.0, abs=1e-8)


def _response(params, dt, steps):
    s = step_synapse(SynapseState(), params, True, dt)
    g = [s.g]
    for _ in range(steps):
        s = step_synapse(s, params, False, dt)
        g.append(s.g)
    return np.array(g)


@given(
    st.floats(0.5, 30.0),
    st.floats(1.05, 5.0),
    st.floats(0.0, 1.0),
)
def test_conductance_bounded_by_weight(tau_r, ratio, w):
    p = SynapseParams(w, tau_r, tau_r * ratio)
    g = _response(p, 0.1, int(10 * tau_r * ratio / 0.1))
    assert (g >= 0).all()
    assert g.max() <= w * (1 + 1e-9) + 1e-15


def test_fine_step_reaches_the_weight():
    p = SynapseParams(0.2, 2.64, 3.96)
    assert _response(p, 0.001, 20000).max() == pytest.approx(0.2, rel=1e-5)


def test_conductance_decays_after_peak():
    g = _response(SynapseParams(0.1, 19.8, 59.4), 0.5, 1000)
    k = g.argmax()
    assert (np.diff(g[k:]) <= 0).all()
