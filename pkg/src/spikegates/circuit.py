"""Neuron-graph data model, gate templates and fragment composition.

A gate is the postsynaptic neuron plus its weighted synapses.  A gate
*fragment* additionally carries one stimulus-bound neuron per input port so
that it can be simulated on its own; :func:`compose` replaces those input
neurons by the driving gate's output neuron when fragments are cascaded.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .energy import EnergyParams
from .errors import CircuitError
from .neuron import NeuronParams, SynapseKind, SynapseParams

H_REF = "H"

# Synaptic time constants as fractions of the tonic ISI: (rise, decay).
TAU_PROFILES = {
    "and": (0.02, 0.03),
    "exc": (0.15, 0.20),
    "inh": (0.15, 0.45),
}
REFERENCE_ISI_MS = 132.0


def _tau_pair(isi, profile):
    r, d = TAU_PROFILES[profile]
    return (round(r * isi, 10), round(d * isi, 10))


@dataclass(frozen=True)
class WeightSet:
    """The three-weight library plus the three synaptic kinetics profiles.

    Defaults are the 4 pA operating point.
    """

    w_x: float = 0.06
    w_y: float = 0.18
    w_z: float = 0.065
    tau_and: tuple = _tau_pair(REFERENCE_ISI_MS, "and")
    tau_exc: tuple = _tau_pair(REFERENCE_ISI_MS, "exc")
    tau_inh: tuple = _tau_pair(REFERENCE_ISI_MS, "inh")

    def __post_init__(self):
        for name in ("w_x", "w_y", "w_z"):
            w = getattr(self, name)
            if not 0.0 <= w <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {w}")
        for name in ("tau_and", "tau_exc", "tau_inh"):
            tau = tuple(float(x) for x in getattr(self, name))
            object.__setattr__(self, name, tau)
            if len(tau) != 2 or not 0 < tau[0] < tau[1]:
                raise ValueError(f"{name} must be (tau_r, tau_d) with 0 < tau_r < tau_d")

    @classmethod
    def from_isi(cls, isi_ms, w_x, w_y, w_z):
        """Kinetics scaled to the operating-point ISI.

        Inhibition is never made faster than at the reference point: latch
        memory needs the inhibitory conductance to bridge the gap between
        the holding neuron's spikes, and with the scaled decay at short ISIs
        both latch outputs end up firing.
        """
        if not isi_ms > 0:
            raise ValueError("isi_ms must be positive")
        return cls(
            w_x, w_y, w_z,
            _tau_pair(isi_ms, "and"), _tau_pair(isi_ms, "exc"),
            _tau_pair(max(isi_ms, REFERENCE_ISI_MS), "inh"),
        )

    def synapse(self, port_class: str) -> SynapseParams:
        if port_class == "and":
            return SynapseParams.excitatory(self.w_z, *self.tau_and)
        if port_class == "exc":
            return SynapseParams.excitatory(self.w_x, *self.tau_exc)
        if port_class == "inh":
            return SynapseParams.inhibitory(self.w_y, *self.tau_inh)
        raise ValueError(f"unknown port class {port_class!r}")

    def weights(self) -> tuple:
        return (self.w_x, self.w_y, self.w_z)


@dataclass(frozen=True)
class Neuron:
    id: int
    label: str
    params: NeuronParams = field(default_factory=NeuronParams)
    energy: EnergyParams = field(default_factory=EnergyParams)


@dataclass(frozen=True)
class Synapse:
    pre_id: int
    post_id: int
    params: SynapseParams
    feedback: bool = False


@dataclass(frozen=True)
class Stimulus:
    neuron_id: int
    program_ref: str


@dataclass(frozen=True)
class Probe:
    neuron_id: int
    signal_name: str


@dataclass(frozen=True)
class CircuitGraph:
    neurons: tuple = ()
    synapses: tuple = ()
    stimuli: tuple = ()
    probes: tuple = ()
    name: str = "circuit"

    def __post_init__(self):
        for attr in ("neurons", "synapses", "stimuli", "probes"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        ids = [n.id for n in self.neurons]
        if ids != list(range(len(ids))):
            raise CircuitError("neuron ids must be 0..n-1 in order")
        labels = [n.label for n in self.neurons]
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise CircuitError(f"duplicate neuron labels: {dup}")
        n = len(ids)
        for s in self.synapses:
            if not (0 <= s.pre_id < n and 0 <= s.post_id < n):
                raise CircuitError(f"synapse {s.pre_id}->{s.post_id} references a missing neuron")
            if s.pre_id == s.post_id:
                raise CircuitError(f"self-synapse on neuron {self.neurons[s.pre_id].label!r}")
        for st in self.stimuli:
            if not 0 <= st.neuron_id < n:
                raise CircuitError(f"stimulus references missing neuron {st.neuron_id}")
        bound = [st.neuron_id for st in self.stimuli]
        if len(set(bound)) != len(bound):
            raise CircuitError("a neuron is bound to more than one stimulus")
        for p in self.probes:
            if not 0 <= p.neuron_id < n:
                raise CircuitError(f"probe {p.signal_name!r} references missing neuron {p.neuron_id}")

    def __len__(self):
        return len(self.neurons)

    def index(self, label: str) -> int:
        for nrn in self.neurons:
            if nrn.label == label:
                return nrn.id
        raise KeyError(label)

    def label(self, neuron_id: int) -> str:
        return self.neurons[neuron_id].label

    def probe(self, signal_name: str) -> int:
        for p in self.probes:
            if p.signal_name == signal_name:
                return p.neuron_id
        raise KeyError(signal_name)

    @property
    def input_ports(self) -> dict:
        return {s.program_ref: s.neuron_id for s in self.stimuli if s.program_ref != H_REF}

    @property
    def sources(self) -> list:
        return sorted(s.neuron_id for s in self.stimuli)

    def incoming(self, neuron_id: int, include_feedback=True) -> list:
        return [
            s for s in self.synapses
            if s.post_id == neuron_id and (include_feedback or not s.feedback)
        ]

    def relabel(self, mapping: Mapping[str, str]) -> "CircuitGraph":
        neurons = [replace(n, label=mapping.get(n.label, n.label)) for n in self.neurons]
        return replace(self, neurons=tuple(neurons))

    def with_probes(self, probes: Iterable[Probe]) -> "CircuitGraph":
        return replace(self, probes=tuple(probes))

    def to_text(self) -> str:
        """Deterministic line-oriented dump: one neuron or synapse per line."""
        stim = {s.neuron_id: s.program_ref for s in self.stimuli}
        default_n, default_e = NeuronParams(), EnergyParams()
        lines = [f"circuit {self.name}"]
        for n in self.neurons:
            parts = [f"neuron {n.id} {n.label}", f"stim={stim.get(n.id, '-')}"]
            if n.params != default_n:
                parts.append("params=" + ",".join(
                    f"{k}:{v!r}" for k, v in vars(n.params).items()))
            if n.energy != default_e:
                parts.append("energy=" + ",".join(
                    f"{k}:{v!r}" for k, v in vars(n.energy).items()))
            lines.append(" ".join(parts))
        for s in self.synapses:
            p = s.params
            lines.append(
                f"synapse {self.label(s.pre_id)} -> {self.label(s.post_id)} "
                f"kind={p.kind.value} w={p.w!r} tau_r={p.tau_r!r} tau_d={p.tau_d!r} "
                f"e_syn={p.e_syn!r} feedback={int(s.feedback)}"
            )
        for p in self.probes:
            lines.append(f"probe {p.signal_name} {self.label(p.neuron_id)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CircuitGraph":
        name = "circuit"
        neurons, stimuli, probes, synapses = [], [], [], []
        labels = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, *rest = line.split()
            if head == "circuit":
                name = rest[0]
            elif head == "neuron":
                nid, label, *kv = rest
                opts = dict(item.split("=", 1) for item in kv)
                params = _parse_fields(NeuronParams, opts.get("params"))
                energy = _parse_fields(EnergyParams, opts.get("energy"))
                neurons.append(Neuron(int(nid), label, params, energy))
                labels[label] = int(nid)
                if opts.get("stim", "-") != "-":
                    stimuli.append(Stimulus(int(nid), opts["stim"]))
            elif head == "probe":
                sig, label = rest
                probes.append(Probe(labels[label], sig))
            elif head == "synapse":
                pre, arrow, post, *kv = rest
                if arrow != "->":
                    raise CircuitError(f"malformed synapse line: {raw!r}")
                opts = dict(item.split("=", 1) for item in kv)
                sp = SynapseParams(
                    float(opts["w"]), float(opts["tau_r"]), float(opts["tau_d"]),
                    float(opts["e_syn"]), SynapseKind(opts["kind"]),
                )
                synapses.append(Synapse(labels[pre], labels[post], sp, opts.get("feedback") == "1"))
            else:
                raise CircuitError(f"unknown graph line: {raw!r}")
        return cls(tuple(neurons), tuple(synapses), tuple(stimuli), tuple(probes), name)


def _parse_fields(kind, spec):
    if spec is None:
        return kind()
    vals = {}
    for item in spec.split(","):
        k, v = item.split(":", 1)
        vals[k] = None if v == "None" else float(v)
    return kind(**vals)


class GateKind(str, enum.Enum):
    AND = "AND"
    AND_NOT = "AND_NOT"
    NOT = "NOT"
    NAND = "NAND"
    BUFFER = "BUFFER"
    SOURCE_H = "SOURCE_H"


# Input port names and the synapse class each port attaches with.
GATE_PORTS = {
    GateKind.AND: (("A", "and"), ("B", "and")),
    GateKind.AND_NOT: (("X", "exc"), ("Y", "inh")),
    GateKind.NOT: (("A", "inh"),),
    GateKind.NAND: (("A", "and"), ("B", "and")),
    GateKind.BUFFER: (("A", "exc"),),
    GateKind.SOURCE_H: (),
}


def arity(kind) -> int:
    return len(GATE_PORTS[GateKind(kind)])


def port_class(kind, port: str) -> str:
    for name, cls in GATE_PORTS[GateKind(kind)]:
        if name == port:
            return cls
    raise CircuitError(f"{GateKind(kind).value} has no input port {port!r}")


@dataclass(frozen=True)
class GateTemplate:
    """A library gate; ``ports`` maps each input port to the net label used in
    the standalone fragment."""

    kind: GateKind
    ports: tuple = ()
    output: str = "OUT"

    def __post_init__(self):
        try:
            kind = GateKind(self.kind)
        except ValueError:
            raise CircuitError(f"unknown gate kind {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        ports = tuple(self.ports) or tuple(p for p, _ in GATE_PORTS[kind])
        if len(ports) != arity(kind):
            raise CircuitError(
                f"{kind.value} takes {arity(kind)} input(s), got {len(ports)}"
            )
        object.__setattr__(self, "ports", ports)


class _Builder:
    def __init__(self, neuron_params=None, energy_params=None):
        self.neurons, self.synapses, self.stimuli, self.probes = [], [], [], []
        self.np = neuron_params or NeuronParams()
        self.ep = energy_params or EnergyParams()

    def neuron(self, label, stim=None):
        nid = len(self.neurons)
        self.neurons.append(Neuron(nid, label, self.np, self.ep))
        if stim is not None:
            self.stimuli.append(Stimulus(nid, stim))
        return nid

    def connect(self, pre, post, params, feedback=False):
        self.synapses.append(Synapse(pre, post, params, feedback))

    def graph(self, name):
        return CircuitGraph(tuple(self.neurons), tuple(self.synapses),
                            tuple(self.stimuli), tuple(self.probes), name)


def build_gate(
    template: GateTemplate | GateKind | str,
    weights: WeightSet | None = None,
    neuron_params: NeuronParams | None = None,
    energy_params: EnergyParams | None = None,
) -> CircuitGraph:
    """Standalone fragment for one library gate.

    Input ports become stimulus-bound neurons named after the port; the
    output neuron is probed under ``template.output``.
    """
    if not isinstance(template, GateTemplate):
        template = GateTemplate(template)
    weights = weights or WeightSet()
    kind = template.kind
    b = _Builder(neuron_params, energy_params)
    inputs = [b.neuron(p, stim=p) for p in template.ports]
    out_label = template.output
    if kind is GateKind.SOURCE_H:
        out = b.neuron(out_label, stim=H_REF)
    elif kind is GateKind.NOT:
        h = b.neuron("H", stim=H_REF)
        out = b.neuron(out_label)
        b.connect(h, out, weights.synapse("exc"))
        b.connect(inputs[0], out, weights.synapse("inh"))
    elif kind is GateKind.NAND:
        a = b.neuron("and")
        for i in inputs:
            b.connect(i, a, weights.synapse("and"))
        h = b.neuron("H", stim=H_REF)
        out = b.neuron(out_label)
        b.connect(h, out, weights.synapse("exc"))
        b.connect(a, out, weights.synapse("inh"))
    else:
        out = b.neuron(out_label)
        for i, (_, cls) in zip(inputs, GATE_PORTS[kind]):
            b.connect(i, out, weights.synapse(cls))
    b.probes.append(Probe(out, out_label))
    graph = b.graph(kind.value.lower())
    if kind is GateKind.NAND:
        from .netlist import insert_buffers

        graph = insert_buffers(graph, weights)
    return graph


@dataclass(frozen=True)
class Connection:
    """Wire ``fragments[src][out_net]`` into ``fragments[dst][in_port]``."""

    src: int
    out_net: str
    dst: int
    in_port: str
    feedback: bool = False


def _as_connection(c) -> Connection:
    if isinstance(c, Connection):
        return c
    if len(c) == 2:
        (src, net), (dst, port) = c
        return Connection(src, net, dst, port)
    (src, net), (dst, port), fb = c
    return Connection(src, net, dst, port, bool(fb))


def compose(
    fragments: Sequence[CircuitGraph],
    connections: Iterable = (),
    names: Sequence[str] | None = None,
    name: str = "composed",
) -> CircuitGraph:
    """Cascade fragments: each connection replaces the destination's input
    neuron by the source's output neuron, keeping the destination synapse.

    Labels are prefixed ``"<name>."`` per fragment (no prefix for an empty
    name).  Probes of nets consumed by a connection are dropped.
    """
    fragments = list(fragments)
    if names is None:
        names = [f"f{i}" for i in range(len(fragments))]
    if len(names) != len(fragments):
        raise CircuitError("one name per fragment is required")
    conns = [_as_connection(c) for c in connections]

    def pref(i, s):
        return f"{names[i]}.{s}" if names[i] else s

    driven = {}
    consumed_nets = set()
    for c in conns:
        for idx in (c.src, c.dst):
            if not 0 <= idx < len(fragments):
                raise CircuitError(f"connection references missing fragment {idx}")
        src_frag, dst_frag = fragments[c.src], fragments[c.dst]
        try:
            out_id = src_frag.probe(c.out_net)
        except KeyError:
            raise CircuitError(f"dangling net: fragment {names[c.src]!r} has no output {c.out_net!r}") from None
        ports = dst_frag.input_ports
        if c.in_port not in ports:
            raise CircuitError(f"dangling net: fragment {names[c.dst]!r} has no input port {c.in_port!r}")
        key = (c.dst, c.in_port)
        if key in driven:
            raise CircuitError(f"input port {pref(c.dst, c.in_port)!r} is driven more than once")
        driven[key] = (c.src, out_id, c.feedback)
        consumed_nets.add((c.src, c.out_net))

    consumed_inputs = {}
    for (dst, port), src in driven.items():
        nid = fragments[dst].input_ports[port]
        if fragments[dst].incoming(nid):
            raise CircuitError(f"input neuron for port {port!r} has incoming synapses")
        consumed_inputs[(dst, nid)] = src

    neurons, id_map = [], {}
    for i, frag in enumerate(fragments):
        for n in frag.neurons:
            if (i, n.id) in consumed_inputs:
                continue
            id_map[(i, n.id)] = len(neurons)
            neurons.append(replace(n, id=len(neurons), label=pref(i, n.label)))

    def resolve(i, nid):
        if (i, nid) in consumed_inputs:
            src, out_id, _ = consumed_inputs[(i, nid)]
            return resolve(src, out_id)
        return id_map[(i, nid)]

    synapses, stimuli, probes = [], [], []
    for i, frag in enumerate(fragments):
        for s in frag.synapses:
            fb = s.feedback
            if (i, s.pre_id) in consumed_inputs:
                fb = fb or consumed_inputs[(i, s.pre_id)][2]
            pre, post = resolve(i, s.pre_id), resolve(i, s.post_id)
            if pre == post:
                raise CircuitError(f"connection creates a self-synapse on {neurons[pre].label!r}")
            synapses.append(Synapse(pre, post, s.params, fb))
        for st in frag.stimuli:
            if (i, st.neuron_id) in consumed_inputs:
                continue
            ref = st.program_ref if st.program_ref == H_REF else pref(i, st.program_ref)
            stimuli.append(Stimulus(id_map[(i, st.neuron_id)], ref))
        for p in frag.probes:
            if (i, p.signal_name) in consumed_nets:
                continue
            probes.append(Probe(resolve(i, p.neuron_id), pref(i, p.signal_name)))
    return CircuitGraph(tuple(neurons), tuple(synapses), tuple(stimuli), tuple(probes), name)


PREBUILT = ("and", "and_not", "not", "nand", "sr_latch", "gated_sr_latch", "d_flipflop")


def prebuilt(
    name: str,
    weights: WeightSet | None = None,
    neuron_params: NeuronParams | None = None,
    energy_params: EnergyParams | None = None,
) -> CircuitGraph:
    """One of the library circuits, elaborated and synchronised."""
    from .library import NETLISTS
    from .netlist import elaborate, insert_buffers, parse_netlist

    key = re.sub(r"[-\s]", "_", name.lower())
    if key not in NETLISTS:
        raise CircuitError(f"unknown prebuilt circuit {name!r}; choose from {', '.join(PREBUILT)}")
    weights = weights or WeightSet()
    ast = parse_netlist(NETLISTS[key])
    graph = elaborate(ast, weights, neuron_params, energy_params)
    return insert_buffers(graph, weights)
