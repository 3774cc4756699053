"""Truth-table and sequential-behaviour checks on simulated circuits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calibration import operating_isi, published_weight_set
from .circuit import WeightSet, prebuilt
from .energy import EnergyParams, energy_summary
from .neuron import NeuronParams
from .simulate import EnergyMode, run_sim
from .stimulus import (
    DecodeConfig,
    LogicWaveform,
    Segment,
    StimulusProgram,
    decode,
    rising_edges,
    truth_table_schedule,
)

GATES = {
    "and": (("A", "B"), lambda a, b: a & b),
    "and_not": (("X", "Y"), lambda x, y: x & (1 - y)),
    "not": (("A",), lambda a: 1 - a),
    "nand": (("A", "B"), lambda a, b: 1 - (a & b)),
}

# Active-low SR latch script: (S, R) per 500 ms window.
SR_SCRIPT = ((1, 0), (1, 1), (0, 1), (1, 1), (0, 0), (1, 0))

# Gated latch script: (S', R', LE).  Starts with a transparent reset so the
# opaque windows have a defined state to hold.
GATED_SCRIPT = (
    (0, 1, 1), (1, 0, 0), (0, 1, 0), (1, 0, 1), (0, 1, 0),
    (1, 0, 0), (0, 0, 1), (0, 1, 1), (1, 0, 0),
)

DFF_SEED = 5
HOLD_MS = 500.0


def dff_data_bits(n: int = 8, seed: int = DFF_SEED) -> list:
    return [int(b) for b in np.random.default_rng(seed).integers(0, 2, n)]


@dataclass(frozen=True)
class Verdict:
    event: str
    signal: str
    expected: int
    decoded: int
    passed: bool
    note: str = ""


@dataclass
class ValidationReport:
    circuit: str
    current_pa: float
    dt: float
    verdicts: list = field(default_factory=list)
    forbidden: list = field(default_factory=list)
    expected_forbidden: list = field(default_factory=list)
    energy: dict = field(default_factory=dict)
    decoded: dict = field(default_factory=dict)

    @property
    def unexpected_forbidden(self) -> list:
        return [f for f in self.forbidden if f not in self.expected_forbidden]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts) and not self.unexpected_forbidden

    def failures(self) -> list:
        return [v for v in self.verdicts if not v.passed]

    def to_text(self) -> str:
        lines = [
            f"circuit {self.circuit}  current={self.current_pa:g}pA  dt={self.dt:g}ms",
        ]
        for v in self.verdicts:
            mark = "ok  " if v.passed else "FAIL"
            extra = f"  ({v.note})" if v.note else ""
            lines.append(f"  {mark} {v.event:<28} {v.signal:<4} expected={v.expected} decoded={v.decoded}{extra}")
        for f in self.forbidden:
            tag = "expected" if f in self.expected_forbidden else "UNEXPECTED"
            lines.append(f"  forbidden state in {f} ({tag})")
        for label, s in sorted(self.energy.items()):
            lines.append(
                f"  energy {label:<28} min={s.min:.4f} max={s.max:.4f} mean={s.mean:.4f} "
                f"drop/spike={s.per_spike_drop:.4f}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def _weights(weights, current_pa):
    return weights if weights is not None else published_weight_set(current_pa)


def _simulate(graph, program, dt, energy_mode):
    energy_mode = EnergyMode(energy_mode)
    record = ("eps", "spiked") if energy_mode is not EnergyMode.OFF else False
    return run_sim(graph, program, dt, energy_mode=energy_mode, record=record)


def _energy(report, result):
    if result.eps is None:
        return
    for j, label in enumerate(result.labels):
        report.energy[label] = energy_summary(
            result.eps[:, j], float(result.eps_0[j]), result.spiked[:, j])


def steady(spikes, window, level, isi_ms, slack=1.5) -> bool:
    """The signal holds ``level`` through the whole window.

    Level 0: no spikes.  Level 1: no gap between spikes (or between a spike
    and a window edge) longer than ``slack`` ISIs.
    """
    a, b = window
    s = np.asarray(spikes, dtype=float)
    s = s[(s >= a) & (s < b)]
    if level == 0:
        return s.size == 0
    if s.size == 0:
        return False
    gaps = np.diff(np.concatenate(([a], s, [b])))
    return bool(gaps.max() <= slack * isi_ms)


def validate_gate(
    name: str,
    weights: WeightSet | None = None,
    program_overrides: dict | None = None,
    current_pa: float = 4.0,
    dt: float = 0.5,
    decode_cfg: DecodeConfig | None = None,
    energy_mode: str = "observe",
    neuron_params: NeuronParams | None = None,
    energy_params: EnergyParams | None = None,
) -> ValidationReport:
    """Run the gate's truth table and compare decoded output rows."""
    key = name.lower().replace("-", "_")
    if key not in GATES:
        raise KeyError(f"unknown gate {name!r}; choose from {', '.join(GATES)}")
    labels, fn = GATES[key]
    opts = dict(program_overrides or {})
    hold = opts.pop("hold_ms", HOLD_MS)
    current_pa = opts.pop("current_pa", current_pa)
    program = truth_table_schedule(len(labels), hold, labels=labels, current_pa=current_pa)
    if opts:
        raise ValueError(f"unknown program overrides: {sorted(opts)}")
    graph = prebuilt(key, _weights(weights, current_pa), neuron_params, energy_params)
    result = _simulate(graph, program, dt, energy_mode)
    windows = program.windows()
    out = graph.probes[0]
    bits = decode(result.spike_times[out.neuron_id], windows, decode_cfg)
    report = ValidationReport(key, current_pa, dt, decoded={out.signal_name: bits})
    for (start, _), bit in zip(windows, bits):
        row = tuple(program.bindings[l].level_at(start) for l in labels)
        expected = fn(*row)
        event = "row " + ",".join(f"{l}={v}" for l, v in zip(labels, row))
        report.verdicts.append(Verdict(event, out.signal_name, expected, bit, bit == expected))
    _energy(report, result)
    return report


def _scripted(labels, script, hold):
    cols = list(zip(*script))
    return {l: LogicWaveform.from_bits(c, hold) for l, c in zip(labels, cols)}


def validate_sr_latch(
    weights: WeightSet | None = None,
    current_pa: float = 4.0,
    dt: float = 0.5,
    energy_mode: str = "observe",
    script=SR_SCRIPT,
    decode_cfg: DecodeConfig | None = None,
    neuron_params: NeuronParams | None = None,
    energy_params: EnergyParams | None = None,
) -> ValidationReport:
    """Active-low SR latch: set, reset, memory after each, and the
    not-allowed condition (both inputs low)."""
    graph = prebuilt("sr_latch", _weights(weights, current_pa), neuron_params, energy_params)
    program = StimulusProgram(_scripted(("S", "R"), script, HOLD_MS), current_pa)
    result = _simulate(graph, program, dt, energy_mode)
    isi = operating_isi(current_pa, dt, neuron_params)
    windows = program.windows()
    q_sp, qn_sp = result.spikes_of("Q"), result.spikes_of("QN")
    q_bits, qn_bits = decode(q_sp, windows, decode_cfg), decode(qn_sp, windows, decode_cfg)
    report = ValidationReport("sr_latch", current_pa, dt, decoded={"Q": q_bits, "QN": qn_bits})
    state = None
    for k, ((s, r), win) in enumerate(zip(script, windows)):
        event = f"w{k} S={s},R={r}"
        if q_bits[k] == 0 and qn_bits[k] == 0:
            report.forbidden.append(event)
        if (s, r) == (0, 0):
            report.expected_forbidden.append(event)
            ok = q_bits[k] == 0 and qn_bits[k] == 0
            report.verdicts.append(Verdict(event, "flag", 1, int(ok), ok, "not allowed"))
            state = None
            continue
        if (s, r) == (1, 0):
            q = 0
        elif (s, r) == (0, 1):
            q = 1
        else:
            q = state
        memory = (s, r) == (1, 1)
        for sig, spikes, bits, exp in (("Q", q_sp, q_bits, q), ("QN", qn_sp, qn_bits, None if q is None else 1 - q)):
            if exp is None:
                report.verdicts.append(Verdict(event, sig, -1, bits[k], False, "no stored state"))
                continue
            ok = bits[k] == exp
            note = ""
            if memory:
                held = steady(spikes, win, exp, isi)
                ok = ok and held
                note = "memory, full window" + ("" if held else " not held")
            report.verdicts.append(Verdict(event, sig, exp, bits[k], ok, note))
        state = q
    _energy(report, result)
    return report


def validate_gated_sr_latch(
    weights: WeightSet | None = None,
    current_pa: float = 4.0,
    dt: float = 0.5,
    energy_mode: str = "observe",
    script=GATED_SCRIPT,
    decode_cfg: DecodeConfig | None = None,
    neuron_params: NeuronParams | None = None,
    energy_params: EnergyParams | None = None,
) -> ValidationReport:
    """Gated latch: opaque (LE=0) windows must hold the previous state for
    the whole window; transparent ones follow active-high S'/R'."""
    graph = prebuilt("gated_sr_latch", _weights(weights, current_pa), neuron_params, energy_params)
    program = StimulusProgram(_scripted(("SP", "RP", "LE"), script, HOLD_MS), current_pa)
    result = _simulate(graph, program, dt, energy_mode)
    isi = operating_isi(current_pa, dt, neuron_params)
    windows = program.windows()
    q_sp, qn_sp = result.spikes_of("Q"), result.spikes_of("QN")
    q_bits, qn_bits = decode(q_sp, windows, decode_cfg), decode(qn_sp, windows, decode_cfg)
    report = ValidationReport("gated_sr_latch", current_pa, dt, decoded={"Q": q_bits, "QN": qn_bits})
    state = None
    for k, ((sp, rp, le), win) in enumerate(zip(script, windows)):
        event = f"w{k} S'={sp},R'={rp},LE={le}"
        if le and sp and rp:
            raise ValueError("S'=R'=1 with LE=1 is the excluded input pattern")
        if q_bits[k] == 0 and qn_bits[k] == 0:
            report.forbidden.append(event)
        opaque = not le
        if le and sp:
            q = 1
        elif le and rp:
            q = 0
        else:
            q = state
        for sig, spikes, bits, exp in (("Q", q_sp, q_bits, q), ("QN", qn_sp, qn_bits, None if q is None else 1 - q)):
            if exp is None:
                report.verdicts.append(Verdict(event, sig, -1, bits[k], False, "no stored state"))
                continue
            ok = bits[k] == exp
            note = ""
            if opaque:
                held = steady(spikes, win, exp, isi)
                ok = ok and held
                note = "opaque, full window" + ("" if held else " not held")
            report.verdicts.append(Verdict(event, sig, exp, bits[k], ok, note))
        state = q
    _energy(report, result)
    return report


def dff_program(
    data_bits, current_pa: float = 4.0, period_ms: float = HOLD_MS, warmup: bool = True
) -> StimulusProgram:
    """Clock with 50% duty, first rising edge half a period in; D changes on
    falling edges so it is stable around every rising edge.

    With ``warmup`` an extra leading cycle loads the complement of the first
    data bit, taking both latches out of their undefined power-up state.
    """
    half = period_ms / 2
    bits = list(data_bits)
    if warmup:
        bits = [1 - bits[0]] + bits
    clk = [Segment(0, half)] + [Segment(b, half) for b in (1, 0) * len(bits)]
    d = [Segment(bits[0], period_ms)] + [Segment(b, period_ms) for b in bits[1:]] + [Segment(bits[-1], half)]
    return StimulusProgram({"D": LogicWaveform(tuple(d)), "CLK": LogicWaveform(tuple(clk))}, current_pa)


def validate_dff(
    weights: WeightSet | None = None,
    current_pa: float = 4.0,
    data_bits=None,
    dt: float = 0.5,
    energy_mode: str = "observe",
    warmup: bool = True,
    period_ms: float = HOLD_MS,
    decode_cfg: DecodeConfig | None = None,
    neuron_params: NeuronParams | None = None,
    energy_params: EnergyParams | None = None,
) -> ValidationReport:
    """Sample check at every scored rising edge.

    Q is read from the trailing half of the clock period that follows the
    edge, must equal D at the edge, must hold steadily over that span, and
    QN must be its complement.
    """
    data_bits = dff_data_bits() if data_bits is None else list(data_bits)
    if len(data_bits) < 8:
        raise ValueError("need at least 8 data bits")
    graph = prebuilt("d_flipflop", _weights(weights, current_pa), neuron_params, energy_params)
    program = dff_program(data_bits, current_pa, period_ms, warmup)
    result = _simulate(graph, program, dt, energy_mode)
    isi = operating_isi(current_pa, dt, neuron_params)
    edges = rising_edges(program.bindings["CLK"])[1 if warmup else 0:]
    windows = [(e, e + period_ms) for e in edges]
    q_sp, qn_sp = result.spikes_of("Q"), result.spikes_of("QN")
    q_bits, qn_bits = decode(q_sp, windows, decode_cfg), decode(qn_sp, windows, decode_cfg)
    report = ValidationReport("d_flipflop", current_pa, dt, decoded={"Q": q_bits, "QN": qn_bits, "D": data_bits})
    for k, (e, d) in enumerate(zip(edges, data_bits)):
        event = f"edge{k} t={e:g} D={d}"
        settled = (e + period_ms / 2, e + period_ms)
        held = steady(q_sp, settled, d, isi)
        report.verdicts.append(Verdict(event, "Q", d, q_bits[k], q_bits[k] == d and held,
                                       "" if held else "not steady"))
        report.verdicts.append(Verdict(event, "QN", 1 - d, qn_bits[k], qn_bits[k] == 1 - d))
        if q_bits[k] == 0 and qn_bits[k] == 0:
            report.forbidden.append(event)
    _energy(report, result)
    return report


def default_program(target: str, current_pa: float = 4.0) -> StimulusProgram:
    """The stimulus a validation of ``target`` runs."""
    key = target.lower().replace("-", "_")
    if key in GATES:
        labels = GATES[key][0]
        return truth_table_schedule(len(labels), HOLD_MS, labels=labels, current_pa=current_pa)
    if key in ("latch", "sr_latch"):
        return StimulusProgram(_scripted(("S", "R"), SR_SCRIPT, HOLD_MS), current_pa)
    if key in ("gated_latch", "gated_sr_latch"):
        return StimulusProgram(_scripted(("SP", "RP", "LE"), GATED_SCRIPT, HOLD_MS), current_pa)
    if key in ("dff", "d_flipflop"):
        return dff_program(dff_data_bits(), current_pa)
    raise KeyError(f"no default stimulus for {target!r}")


VALIDATORS = {
    "latch": validate_sr_latch,
    "sr_latch": validate_sr_latch,
    "gated-latch": validate_gated_sr_latch,
    "gated_sr_latch": validate_gated_sr_latch,
    "dff": validate_dff,
    "d_flipflop": validate_dff,
}


def validate(target: str, weights=None, current_pa=4.0, dt=0.5, energy_mode="observe", **opts):
    """Dispatch on a gate or sequential-circuit name.

    ``opts`` passes ``decode_cfg``, ``neuron_params`` and ``energy_params``
    through to the validator.
    """
    key = target.lower()
    if key.replace("-", "_") in GATES:
        return validate_gate(key, weights, current_pa=current_pa, dt=dt, energy_mode=energy_mode, **opts)
    if key in VALIDATORS:
        return VALIDATORS[key](weights, current_pa=current_pa, dt=dt, energy_mode=energy_mode, **opts)
    raise KeyError(f"unknown validation target {target!r}")
