"""Logic waveforms, stimulating-current programs and spike-train decoding.

A logic 1 on an input is a rectangular current step of ``current_pa``; a
logic 0 is no current.  Outputs are read back per time window: a window is
1 iff enough spikes fall in its trailing part.

Phase locking
-------------
Coincidence-detecting gates (AND, NAND) only fire when their input spike
trains are in phase.  Tonic neurons switched on at arbitrary times are not,
so by default every rising edge of an input is delayed to the next point of
a *pacemaker grid*: the instants at which a neuron that has been driven
since t=0 (an always-high source) settles into its periodic train.  Falling
edges are left where they are.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import StimulusError
from .neuron import NeuronParams, tonic_spike_times

DEFAULT_HOLD_MS = 500.0


@dataclass(frozen=True)
class Segment:
    level: int
    duration_ms: float = DEFAULT_HOLD_MS

    def __post_init__(self):
        if self.level not in (0, 1):
            raise StimulusError(f"logic level must be 0 or 1, got {self.level!r}")
        if not self.duration_ms > 0:
            raise StimulusError("segment durations must be positive")


@dataclass(frozen=True)
class LogicWaveform:
    segments: tuple

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        if not segs:
            raise StimulusError("a waveform needs at least one segment")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def from_bits(cls, bits: Iterable[int], hold_ms: float = DEFAULT_HOLD_MS):
        return cls(tuple(Segment(int(b), hold_ms) for b in bits))

    @property
    def total_ms(self) -> float:
        return math.fsum(s.duration_ms for s in self.segments)

    @property
    def bits(self) -> list:
        return [s.level for s in self.segments]

    def boundaries(self) -> list:
        """Segment start times followed by the end time."""
        out = [0.0]
        for s in self.segments:
            out.append(out[-1] + s.duration_ms)
        return out

    def level_at(self, t_ms: float) -> int:
        for start, seg in zip(self.boundaries(), self.segments):
            if t_ms < start + seg.duration_ms:
                return seg.level
        return self.segments[-1].level


@dataclass(frozen=True)
class StimulusProgram:
    """Input label -> waveform, plus the shared current amplitude.

    ``phase_lock`` enables snapping of rising edges to the pacemaker grid
    (see the module notes).
    """

    bindings: Mapping[str, LogicWaveform]
    current_pa: float = 4.0
    total_ms: float | None = None
    phase_lock: bool = True

    def __post_init__(self):
        bindings = dict(self.bindings)
        object.__setattr__(self, "bindings", bindings)
        if not self.current_pa > 0:
            raise StimulusError("current_pa must be positive")
        spans = {round(w.total_ms, 9) for w in bindings.values()}
        if len(spans) > 1:
            raise StimulusError(f"waveforms span different durations: {sorted(spans)}")
        if self.total_ms is None:
            if not spans:
                raise StimulusError("total_ms is required for a program without inputs")
            object.__setattr__(self, "total_ms", spans.pop())
        elif spans and abs(spans.pop() - self.total_ms) > 1e-9:
            raise StimulusError("waveforms must span total_ms")
        if not self.total_ms > 0:
            raise StimulusError("total_ms must be positive")

    def windows(self) -> list:
        """Decode windows: consecutive intervals between segment boundaries
        of any input."""
        edges = {0.0, float(self.total_ms)}
        for w in self.bindings.values():
            edges.update(round(b, 9) for b in w.boundaries())
        pts = sorted(edges)
        return list(zip(pts[:-1], pts[1:]))

    def with_current(self, current_pa: float) -> "StimulusProgram":
        return StimulusProgram(self.bindings, current_pa, self.total_ms, self.phase_lock)


@dataclass(frozen=True)
class DecodeConfig:
    settle_fraction: float = 0.5
    spike_threshold: int = 1
    windows: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.settle_fraction < 1:
            raise StimulusError("settle_fraction must lie in [0, 1)")
        if self.spike_threshold < 1:
            raise StimulusError("spike_threshold must be at least 1")


def default_input_labels(n: int) -> list:
    return [chr(ord("A") + i) for i in range(n)]


def truth_table_schedule(
    n_inputs: int,
    hold_ms: float = DEFAULT_HOLD_MS,
    excluded_rows: Iterable[int] = (),
    labels: Sequence[str] | None = None,
    current_pa: float = 4.0,
) -> StimulusProgram:
    """All rows in ascending binary order (first label is the MSB)."""
    if n_inputs not in (1, 2, 3):
        raise StimulusError("n_inputs must be 1, 2 or 3")
    if not hold_ms > 0:
        raise StimulusError("hold_ms must be positive")
    labels = list(labels) if labels is not None else default_input_labels(n_inputs)
    if len(labels) != n_inputs:
        raise StimulusError("one label per input is required")
    excluded = set(excluded_rows)
    rows = [r for r in range(2**n_inputs) if r not in excluded]
    if not rows:
        raise StimulusError("every truth-table row is excluded")
    bindings = {}
    for i, lab in enumerate(labels):
        shift = n_inputs - 1 - i
        bindings[lab] = LogicWaveform.from_bits([(r >> shift) & 1 for r in rows], hold_ms)
    return StimulusProgram(bindings, current_pa)


def table_rows(program: StimulusProgram, labels: Sequence[str]) -> list:
    """Input bits per decode window, in ``labels`` order."""
    rows = []
    for start, _ in program.windows():
        rows.append(tuple(program.bindings[l].level_at(start) for l in labels))
    return rows


def pacemaker_grid(
    current_pa: float, dt: float, total_ms: float, params: NeuronParams | None = None
) -> np.ndarray:
    """Admissible onset times for phase-locked inputs.

    A neuron switched on at a grid point spikes in step with an always-high
    source from its second spike onwards.
    """
    params = params or NeuronParams()
    spikes = tonic_spike_times(params, current_pa, dt, total_ms + 2000.0)
    if len(spikes) < 2:
        return np.array([0.0])
    grid = np.asarray(spikes[1:]) - spikes[1]
    return grid[grid <= total_ms]


def _levels(waveform: LogicWaveform, n_steps: int, dt: float) -> np.ndarray:
    out = np.zeros(n_steps)
    start = 0.0
    for seg in waveform.segments:
        stop = start + seg.duration_ms
        a, b = int(round(start / dt)), int(round(stop / dt))
        out[a:min(b, n_steps)] = seg.level
        start = stop
    return out


def _snap_rising(levels: np.ndarray, grid_steps: np.ndarray) -> np.ndarray:
    out = levels.copy()
    n = len(levels)
    k = 0
    while k < n:
        if levels[k] and (k == 0 or not levels[k - 1]):
            j = k
            while j < n and levels[j]:
                j += 1
            later = grid_steps[grid_steps >= k]
            onset = int(later[0]) if len(later) else n
            out[k:min(onset, j)] = 0
            k = j
        else:
            k += 1
    return out


def encode(
    program: StimulusProgram, dt: float, params: NeuronParams | None = None
) -> dict:
    """Per-input current samples; sample ``k`` drives the step from ``k*dt``."""
    if not dt > 0:
        raise StimulusError("dt must be positive")
    n_steps = int(round(program.total_ms / dt))
    grid_steps = None
    if program.phase_lock:
        grid = pacemaker_grid(program.current_pa, dt, program.total_ms, params)
        grid_steps = np.round(grid / dt).astype(int)
    out = {}
    for label, wf in program.bindings.items():
        lv = _levels(wf, n_steps, dt)
        if grid_steps is not None:
            lv = _snap_rising(lv, grid_steps)
        out[label] = lv * program.current_pa
    return out


def decode(
    spike_times: Sequence[float], windows: Sequence, cfg: DecodeConfig | None = None
) -> list:
    cfg = cfg or DecodeConfig()
    windows = [tuple(map(float, w)) for w in windows]
    if not windows:
        raise StimulusError("no decode windows given")
    for (a0, a1), (b0, _) in itertools.pairwise(windows):
        if b0 < a1:
            raise StimulusError("decode windows must be ascending and non-overlapping")
    for a, b in windows:
        if not b > a:
            raise StimulusError("decode windows must have positive length")
    t = np.sort(np.asarray(spike_times, dtype=float))
    bits = []
    for a, b in windows:
        lo = a + cfg.settle_fraction * (b - a)
        n = int(np.count_nonzero((t >= lo) & (t < b)))
        bits.append(1 if n >= cfg.spike_threshold else 0)
    return bits


def rising_edges(waveform: LogicWaveform) -> list:
    edges = []
    prev = None
    for start, seg in zip(waveform.boundaries(), waveform.segments):
        if prev == 0 and seg.level == 1:
            edges.append(start)
        prev = seg.level
    return edges


_INPUT_RE = re.compile(
    r"^input\s+(?P<label>[A-Za-z_][\w.]*)\s*:\s*(?P<bits>[01](?:\s*,\s*[01])*)"
    r"\s*(?:@\s*(?P<hold>[0-9.]+)\s*(?:ms)?)?$"
)
_CURRENT_RE = re.compile(r"^current\s+(?P<val>[0-9.]+)\s*(?:pA)?$", re.IGNORECASE)
_PHASE_RE = re.compile(r"^phase_lock\s+(?P<val>on|off)$")


def parse_program(text: str) -> StimulusProgram:
    """Parse ``input <label> : 0,1,1,0 @ 500ms ; current 4pA`` style text.

    Statements end at ``;`` or a newline; ``#`` starts a comment.
    """
    bindings, current, phase_lock = {}, 4.0, True
    for lineno, raw in enumerate(text.splitlines(), 1):
        for stmt in raw.split("#", 1)[0].split(";"):
            stmt = stmt.strip()
            if not stmt:
                continue
            if m := _INPUT_RE.match(stmt):
                bits = [int(b) for b in re.split(r"\s*,\s*", m["bits"])]
                hold = float(m["hold"]) if m["hold"] else DEFAULT_HOLD_MS
                if m["label"] in bindings:
                    raise StimulusError(f"line {lineno}: input {m['label']!r} bound twice")
                bindings[m["label"]] = LogicWaveform.from_bits(bits, hold)
            elif m := _CURRENT_RE.match(stmt):
                current = float(m["val"])
            elif m := _PHASE_RE.match(stmt):
                phase_lock = m["val"] == "on"
            else:
                raise StimulusError(f"line {lineno}: cannot parse {stmt!r}")
    if not bindings:
        raise StimulusError("stimulus program binds no inputs")
    return StimulusProgram(bindings, current, phase_lock=phase_lock)


def format_program(program: StimulusProgram) -> str:
    lines = []
    for label, wf in program.bindings.items():
        holds = {s.duration_ms for s in wf.segments}
        if len(holds) != 1:
            raise StimulusError("only uniform-hold waveforms have a text form")
        bits = ",".join(str(b) for b in wf.bits)
        lines.append(f"input {label} : {bits} @ {holds.pop():g}ms")
    lines.append(f"current {program.current_pa:g}pA")
    if not program.phase_lock:
        lines.append("phase_lock off")
    return "\n".join(lines) + "\n"
