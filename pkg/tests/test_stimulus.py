import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spikegates.errors import StimulusError
from spikegates.neuron import NeuronParams, tonic_spike_times
from spikegates.stimulus import (
    DecodeConfig,
    LogicWaveform,
    Segment,
    StimulusProgram,
    decode,
    encode,
    format_program,
    pacemaker_grid,
    parse_program,
    rising_edges,
    table_rows,
    truth_table_schedule,
)


def test_waveform_geometry():
    w = LogicWaveform.from_bits([0, 1, 1, 0], 250.0)
    assert w.total_ms == 1000.0
    assert w.boundaries() == [0.0, 250.0, 500.0, 750.0, 1000.0]
    assert [w.level_at(t) for t in (0, 249.9, 250, 999)] == [0, 0, 1, 0]
    assert rising_edges(w) == [250.0]


def test_bad_segments():
    with pytest.raises(StimulusError):
        Segment(2)
    with pytest.raises(StimulusError):
        Segment(1, 0.0)
    with pytest.raises(StimulusError):
        LogicWaveform(())


def test_truth_table_rows_msb_first():
    p = truth_table_schedule(3)
    assert table_rows(p, ["A", "B", "C"]) == [tuple(int(c) for c in f"{r:03b}") for r in range(8)]
    assert len(p.windows()) == 8 and p.total_ms == 4000.0


def test_truth_table_exclusion():
    p = truth_table_schedule(2, excluded_rows=[3])
    assert table_rows(p, ["A", "B"]) == [(0, 0), (0, 1), (1, 0)]
    with pytest.raises(StimulusError):
        truth_table_schedule(1, excluded_rows=[0, 1])
    with pytest.raises(StimulusError):
        truth_table_schedule(4)


def test_program_spans_must_agree():
    with pytest.raises(StimulusError):
        StimulusProgram({"A": LogicWaveform.from_bits([1]), "B": LogicWaveform.from_bits([1, 0])})


def test_decode_counts_trailing_half_only():
    windows = [(0, 500), (500, 1000), (1000, 1500)]
    assert decode([100.0, 400.0, 600.0, 1499.0], windows) == [1, 0, 1]
    assert decode([600.0, 800.0], windows, DecodeConfig(settle_fraction=0.0)) == [0, 1, 0]
    assert decode([1300.0], windows, DecodeConfig(spike_threshold=2)) == [0, 0, 0]


def test_decode_rejects_bad_windows():
    with pytest.raises(StimulusError):
        decode([], [])
    with pytest.raises(StimulusError):
        decode([], [(0, 500), (400, 900)])
    with pytest.raises(StimulusError):
        decode([], [(0, 0)])


@given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.randoms(use_true_random=False))
def test_decode_recovers_planted_bits(bits, rnd):
    hold = 500.0
    spikes = []
    for k, b in enumerate(bits):
        if b:
            spikes += [k * hold + hold / 2 + rnd.uniform(0, hold / 2 - 1e-6) for _ in range(rnd.randint(1, 4))]
        # leading-half spikes never count
        spikes += [k * hold + rnd.uniform(0, hold / 2 - 1e-6) for _ in range(rnd.randint(0, 2))]
    windows = [(k * hold, (k + 1) * hold) for k in range(len(bits))]
    assert decode(spikes, windows) == bits


def test_pacemaker_grid_follows_a_driven_neuron():
    grid = pacemaker_grid(4.0, 0.5, 2000.0)
    ref = tonic_spike_times(NeuronParams(), 4.0, 0.5, 2000.0)
    assert grid[0] == 0.0
    np.testing.assert_allclose(grid[1:4], np.array(ref[2:5]) - ref[1])


def test_phase_lock_delays_rising_edges_to_grid():
    w = LogicWaveform.from_bits([0, 1, 0, 1], 500.0)
    p = StimulusProgram({"A": w})
    x = encode(p, 0.5)["A"]
    grid = pacemaker_grid(4.0, 0.5, 2000.0)
    onset = np.nonzero(np.diff(x) > 0)[0] + 1
    expect = [grid[grid >= 500.0][0], grid[grid >= 1500.0][0]]
    np.testing.assert_allclose(onset * 0.5, expect)
    # falling edge untouched
    assert x[int(1000 / 0.5) - 1] == 4.0 and x[int(1000 / 0.5)] == 0.0


def test_phase_lock_off_is_literal():
    w = LogicWaveform.from_bits([0, 1], 500.0)
    x = encode(StimulusProgram({"A": w}, 7.0, phase_lock=False), 0.5)["A"]
    assert (x[:1000] == 0).all() and (x[1000:] == 7.0).all()


def test_parse_program_text():
    p = parse_program("input A : 0,1 @ 250ms ; input B: 1,1 @250\n# comment\ncurrent 7pA\nphase_lock off")
    assert p.current_pa == 7.0 and not p.phase_lock
    assert p.bindings["A"].bits == [0, 1] and p.total_ms == 500.0
    for bad in ("input A = 0,1", "input A : 0,2", "input A : 1; input A : 0", "current 4pA"):
        with pytest.raises(StimulusError):
            parse_program(bad)


labels = st.text("ABCDEFGHXYZ_", min_size=1, max_size=4).filter(lambda s: not s[0].isdigit())


@given(
    st.dictionaries(labels, st.integers(0, 1), min_size=1, max_size=4),
    st.integers(1, 6), st.sampled_from([100.0, 250.0, 500.0]),
    st.sampled_from([4.0, 7.0, 5.5]), st.booleans(), st.randoms(use_true_random=False),
)
def test_program_text_round_trip(seed_bits, n, hold, current, lock, rnd):
    bindings = {l: LogicWaveform.from_bits([rnd.randint(0, 1) for _ in range(n)], hold) for l in seed_bits}
    p = StimulusProgram(bindings, current, phase_lock=lock)
    q = parse_program(format_program(p))
    assert q == p
