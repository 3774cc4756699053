"""Empirical synaptic-weight search and kinetics derivation.

Every search probes single-gate simulations with inputs held constant (no
truth-table switching), counts output spikes in an evaluation window and
bisects on the weight grid ``weight_lo + k * resolution``.

The three library weights are searched in sequence:

* ``w_x``: smallest excitatory weight at which the AND_NOT output relays its
  X input one-for-one (Y low).  A buffer or NOT gate that skips spikes
  loses phase with the rest of the circuit, so plain "fires at all" is
  too weak.
* ``w_y``: with the calibrated ``w_x`` and both inputs high, smallest
  inhibitory weight that silences the output for every tested phase of the
  inhibitory train relative to the excitatory one.
* ``w_z``: the AND weight sits between two searched limits.  The lower
  one is the smallest weight at which in-phase both-high inputs make the
  output fire.  The upper one is the smallest weight at which a single high
  input draws any output spike at all.  The returned weight is one grid
  step below the upper limit: the most tolerant of input phase offsets
  while single inputs stay silent.  Relay chains of different composition
  deliver spikes a few ms apart, so cascaded ANDs need that tolerance.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .circuit import (
    REFERENCE_ISI_MS,
    TAU_PROFILES,
    CircuitGraph,
    WeightSet,
    build_gate,
    prebuilt,
)
from .errors import (
    AndSingleInputFiresError,
    NoSuppressionError,
    NoThresholdError,
    NoTonicFiringError,
)
from .neuron import NeuronParams, measure_isi, tonic_spike_times
from .simulate import run_sim
from .stimulus import LogicWaveform, Segment, StimulusProgram

# Weights tuned by hand for the two published operating points.
PUBLISHED_WEIGHTS = {4.0: (0.06, 0.18, 0.065), 7.0: (0.11, 0.67, 0.099)}


@dataclass(frozen=True)
class SearchConfig:
    weight_lo: float = 0.0
    weight_hi: float = 1.0
    resolution: float = 0.001
    settle_ms: float = 100.0
    eval_window_ms: float = 500.0
    min_spikes_for_firing: int = 3
    dt: float = 0.5
    # Phase offsets, as fractions of the ISI, of the inhibitory input's onset
    # relative to the excitatory one in the suppression search.
    inhibitory_phases: tuple = (0.0, 0.125, 0.25, 0.5, 0.75, 0.875)
    # Input onset offsets, fraction of ISI, the both-high AND search must
    # fire for (0 tests in-phase inputs only).
    and_jitter: float = 0.0
    and_jitter_steps: int = 4

    def __post_init__(self):
        if not self.weight_lo < self.weight_hi:
            raise ValueError("weight_lo must be below weight_hi")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if not self.eval_window_ms > self.settle_ms >= 0:
            raise ValueError("need eval_window_ms > settle_ms >= 0")
        if self.min_spikes_for_firing < 1:
            raise ValueError("min_spikes_for_firing must be at least 1")
        if not 0 <= self.and_jitter < 0.5:
            raise ValueError("and_jitter must lie in [0, 0.5)")

    @property
    def decimals(self) -> int:
        return max(0, -int(math.floor(math.log10(self.resolution))) + 1)


@dataclass(frozen=True)
class Threshold:
    """Result of a weight search; ``float(t)`` is the weight."""

    weight: float
    monotone: bool = True
    probes: tuple = ()

    def __float__(self):
        return float(self.weight)


@dataclass(frozen=True)
class CalibrationResult:
    w_x: float
    w_y: float
    w_z: float
    isi_ms: float
    stimulating_current_pa: float
    search_trace: tuple = ()
    monotone: bool = True
    w_z_min: float | None = None

    def __post_init__(self):
        if not self.isi_ms > 0:
            raise ValueError("isi_ms must be positive")

    def weight_set(self) -> WeightSet:
        return WeightSet.from_isi(self.isi_ms, self.w_x, self.w_y, self.w_z)

    def deltas(self, reference: Sequence[float] | None = None) -> dict:
        """Relative deviation from the published weights at this current."""
        ref = reference or PUBLISHED_WEIGHTS.get(float(self.stimulating_current_pa))
        if ref is None:
            return {}
        got = (self.w_x, self.w_y, self.w_z)
        return {k: (g - r) / r for k, g, r in zip(("w_x", "w_y", "w_z"), got, ref)}


def derive_time_constants(isi_ms: float, profile: str) -> tuple:
    if not isi_ms > 0:
        raise ValueError(f"ISI must be positive, got {isi_ms}")
    if profile not in TAU_PROFILES:
        raise ValueError(f"unknown kinetics profile {profile!r}")
    r, d = TAU_PROFILES[profile]
    return (r * isi_ms, d * isi_ms)


@functools.lru_cache(maxsize=64)
def operating_isi(current_pa: float, dt: float = 0.5, params: NeuronParams | None = None) -> float:
    params = params or NeuronParams()
    spikes = tonic_spike_times(params, current_pa, dt, 3000.0)
    if len(spikes) < 3:
        raise NoTonicFiringError(f"no tonic firing at {current_pa} pA")
    return measure_isi(spikes)


def published_weight_set(current_pa: float) -> WeightSet:
    """Published weights with kinetics for the given current.

    At the reference current the published time constants are used as is.
    """
    key = float(current_pa)
    if key not in PUBLISHED_WEIGHTS:
        raise KeyError(f"no published weights for {current_pa} pA")
    if key == 4.0:
        return WeightSet()
    return WeightSet.from_isi(operating_isi(key), *PUBLISHED_WEIGHTS[key])


# -- predicates -------------------------------------------------------------


def _held(onset_ms: float, total_ms: float) -> LogicWaveform:
    if onset_ms <= 0:
        return LogicWaveform((Segment(1, total_ms),))
    return LogicWaveform((Segment(0, onset_ms), Segment(1, total_ms - onset_ms)))


def _override(graph: CircuitGraph, w_overrides) -> CircuitGraph:
    if not w_overrides:
        return graph
    syn = []
    for s in graph.synapses:
        key = (graph.label(s.pre_id), graph.label(s.post_id))
        w = w_overrides.get(key, w_overrides.get(graph.label(s.pre_id)))
        syn.append(s if w is None else replace(s, params=s.params.with_weight(w)))
    return replace(graph, synapses=tuple(syn))


def output_spike_counts(
    circuit: CircuitGraph,
    condition: Mapping[str, int],
    cfg: SearchConfig,
    current_pa: float = 4.0,
    onsets: Mapping[str, float] | None = None,
    w_overrides: Mapping | None = None,
) -> tuple:
    """(output spikes, per-input spikes) in the evaluation window.

    Inputs at level 1 switch on at their onset (default 0) and stay on; the
    window opens ``settle_ms`` after the latest onset.
    """
    onsets = dict(onsets or {})
    graph = _override(circuit, w_overrides)
    start = max([0.0] + [onsets.get(k, 0.0) for k, b in condition.items() if b]) + cfg.settle_ms
    stop = start + cfg.eval_window_ms - cfg.settle_ms
    bindings = {}
    for label in graph.input_ports:
        if condition.get(label, 0):
            bindings[label] = _held(onsets.get(label, 0.0), stop)
        else:
            bindings[label] = LogicWaveform((Segment(0, stop),))
    program = StimulusProgram(bindings, current_pa, stop, phase_lock=False)
    res = run_sim(graph, program, cfg.dt, energy_mode="off", record=False)
    out = res.spike_times[graph.probes[0].neuron_id]

    def count(t):
        return int(np.count_nonzero((t >= start) & (t < stop)))

    ins = {label: count(res.spike_times[nid]) for label, nid in graph.input_ports.items()}
    return count(out), ins


def fires(
    circuit: CircuitGraph,
    condition: Mapping[str, int],
    w_overrides: Mapping | None = None,
    cfg: SearchConfig | None = None,
    current_pa: float = 4.0,
    onsets: Mapping[str, float] | None = None,
) -> bool:
    """True iff the output emits at least ``min_spikes_for_firing`` spikes.

    ``w_overrides`` maps a presynaptic label, or a ``(pre, post)`` label
    pair, to a replacement weight.
    """
    cfg = cfg or SearchConfig()
    n, _ = output_spike_counts(circuit, condition, cfg, current_pa, onsets, w_overrides)
    return n >= cfg.min_spikes_for_firing


# -- search -----------------------------------------------------------------


def find_min_firing_weight(
    predicate: Callable[[float], bool], cfg: SearchConfig | None = None, check_points: int = 3
) -> Threshold:
    """Smallest weight on the search grid for which ``predicate`` holds.

    Bisection assumes monotonicity; ``check_points`` weights on each side of
    the answer are re-probed and, on a violation, the grid is scanned
    linearly from ``weight_lo`` instead.
    """
    cfg = cfg or SearchConfig()
    n = int(round((cfg.weight_hi - cfg.weight_lo) / cfg.resolution))
    cache = {}

    def w_of(k):
        return round(cfg.weight_lo + k * cfg.resolution, cfg.decimals)

    def f(k):
        if k not in cache:
            cache[k] = bool(predicate(w_of(k)))
        return cache[k]

    if f(0):
        raise NoThresholdError(f"already satisfied at weight_lo={cfg.weight_lo}")
    if not f(n):
        raise NoThresholdError(f"not satisfied at weight_hi={cfg.weight_hi}")
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(mid):
            hi = mid
        else:
            lo = mid
    monotone = True
    below = [k for k in range(hi - check_points - 1, hi - 1) if k > 0]
    above = [k for k in range(hi + 1, hi + check_points + 1) if k < n]
    if any(f(k) for k in below) or not all(f(k) for k in above):
        monotone = False
        warnings.warn("threshold search is not monotone; falling back to a linear scan")
        hi = next(k for k in range(n + 1) if f(k))
    probes = tuple((w_of(k), cache[k]) for k in sorted(cache))
    return Threshold(w_of(hi), monotone, probes)


def linear_scan(predicate: Callable[[float], bool], cfg: SearchConfig) -> float:
    n = int(round((cfg.weight_hi - cfg.weight_lo) / cfg.resolution))
    for k in range(n + 1):
        w = round(cfg.weight_lo + k * cfg.resolution, cfg.decimals)
        if predicate(w):
            return w
    raise NoThresholdError("predicate never holds in range")


def _gate(kind, weights, neuron_params=None):
    return build_gate(kind, weights, neuron_params)


def relays(w_x: float, cfg: SearchConfig, current_pa: float, weights: WeightSet,
           neuron_params=None) -> bool:
    """AND_NOT with X high and Y low emits at least one spike per X spike."""
    graph = _gate("AND_NOT", replace(weights, w_x=w_x), neuron_params)
    out, ins = output_spike_counts(graph, {"X": 1, "Y": 0}, cfg, current_pa)
    return out >= max(ins["X"], cfg.min_spikes_for_firing)


def suppressed(w_y: float, cfg: SearchConfig, current_pa: float, weights: WeightSet,
               isi_ms: float, neuron_params=None) -> bool:
    """AND_NOT with both inputs high stays silent for every tested phase."""
    graph = _gate("AND_NOT", replace(weights, w_y=w_y), neuron_params)
    for frac in cfg.inhibitory_phases:
        out, _ = output_spike_counts(graph, {"X": 1, "Y": 1}, cfg, current_pa,
                                     onsets={"Y": frac * isi_ms})
        if out:
            return False
    return True


def and_fires(w_z: float, cfg: SearchConfig, current_pa: float, weights: WeightSet,
              isi_ms: float, neuron_params=None) -> bool:
    """AND with both inputs high fires for every tested onset offset."""
    graph = _gate("AND", replace(weights, w_z=w_z), neuron_params)
    steps = max(cfg.and_jitter_steps, 1)
    offsets = [cfg.and_jitter * isi_ms * i / steps for i in range(steps + 1)] if cfg.and_jitter else [0.0]
    return all(
        fires(graph, {"A": 1, "B": 1}, None, cfg, current_pa, onsets={"B": off})
        for off in offsets
    )


def and_single_fires(w_z: float, cfg: SearchConfig, current_pa: float, weights: WeightSet,
                     neuron_params=None) -> bool:
    """Any output spike with only one AND input high."""
    graph = _gate("AND", replace(weights, w_z=w_z), neuron_params)
    return any(
        output_spike_counts(graph, cond, cfg, current_pa)[0] > 0
        for cond in ({"A": 1, "B": 0}, {"A": 0, "B": 1})
    )


def find_min_suppressing_weight(
    circuit: CircuitGraph | None = None,
    cfg: SearchConfig | None = None,
    current_pa: float = 4.0,
    w_x: float | None = None,
    isi_ms: float | None = None,
    weights: WeightSet | None = None,
    neuron_params: NeuronParams | None = None,
) -> Threshold:
    """Minimal ``w_y`` silencing an AND_NOT gate with both inputs high.

    ``circuit`` may be given for a custom AND_NOT fragment (only its
    excitatory weight is taken from it); by default the library gate is used.
    """
    cfg = cfg or SearchConfig()
    weights = weights or WeightSet()
    if circuit is not None and w_x is None:
        exc = [s for s in circuit.synapses if s.params.kind.value == "excitatory"]
        w_x = exc[0].params.w if exc else 0.0
    if w_x is not None:
        weights = replace(weights, w_x=w_x)
    isi_ms = isi_ms or operating_isi(current_pa, cfg.dt, neuron_params)
    if suppressed(cfg.weight_lo, cfg, current_pa, weights, isi_ms, neuron_params):
        return Threshold(cfg.weight_lo, True, ((cfg.weight_lo, True),))
    try:
        return find_min_firing_weight(
            lambda w: suppressed(w, cfg, current_pa, weights, isi_ms, neuron_params), cfg)
    except NoThresholdError:
        raise NoSuppressionError(
            f"w_y={cfg.weight_hi} does not silence the AND_NOT output") from None


def calibrate_all(
    current_pa: float = 4.0,
    cfg: SearchConfig | None = None,
    neuron_params: NeuronParams | None = None,
) -> CalibrationResult:
    cfg = cfg or SearchConfig()
    if not current_pa > 0:
        raise NoTonicFiringError("stimulating current must be positive")
    isi = operating_isi(current_pa, cfg.dt, neuron_params)
    base = WeightSet.from_isi(isi, 0.0, 0.0, 0.0)
    trace = []

    t_x = find_min_firing_weight(
        lambda w: relays(w, cfg, current_pa, base, neuron_params), cfg)
    trace += [("w_x",) + p for p in t_x.probes]
    w_x = t_x.weight

    t_y = find_min_suppressing_weight(
        None, cfg, current_pa, w_x=w_x, isi_ms=isi, weights=base, neuron_params=neuron_params)
    trace += [("w_y",) + p for p in t_y.probes]

    t_lo = find_min_firing_weight(
        lambda w: and_fires(w, cfg, current_pa, base, isi, neuron_params), cfg)
    trace += [("w_z_min",) + p for p in t_lo.probes]
    t_hi = find_min_firing_weight(
        lambda w: and_single_fires(w, cfg, current_pa, base, neuron_params), cfg)
    trace += [("w_z",) + p for p in t_hi.probes]
    w_z = round(t_hi.weight - cfg.resolution, cfg.decimals)
    if w_z < t_lo.weight or and_single_fires(w_z, cfg, current_pa, base, neuron_params):
        raise AndSingleInputFiresError(
            f"no AND weight fires on both inputs but not on one ({current_pa} pA): "
            f"both-high threshold {t_lo.weight}, single-input threshold {t_hi.weight}")

    return CalibrationResult(
        w_x, t_y.weight, w_z, isi, float(current_pa), tuple(trace),
        t_x.monotone and t_y.monotone and t_lo.monotone and t_hi.monotone,
        w_z_min=t_lo.weight,
    )
