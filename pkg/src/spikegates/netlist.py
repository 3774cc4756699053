"""Gate-level netlist DSL, elaboration to neuron graphs, and depth balancing.

Grammar (``#`` starts a line comment)::

    circuit <id> ;
    input <id>, ... ;
    output <id>, ... ;
    <id> : <GATE> ( <net>, ... ) -> <net> ;          (repeated)
    feedback <net> -> <instance>.<port> ;             (optional, repeated)

Gate ports are positional: AND/NAND (A, B), AND_NOT (X, Y), NOT (A),
BUFFER (A), SOURCE_H ().
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import networkx as nx

from .circuit import (
    GATE_PORTS,
    CircuitGraph,
    Connection,
    GateKind,
    GateTemplate,
    Neuron,
    Probe,
    Stimulus,
    Synapse,
    WeightSet,
    build_gate,
    compose,
)
from .energy import EnergyParams
from .errors import NetlistError, UnannotatedFeedbackError
from .neuron import NeuronParams


@dataclass(frozen=True)
class Instance:
    name: str
    gate_kind: str
    input_nets: tuple
    output_net: str
    line: int | None = field(default=None, compare=False)
    col: int | None = field(default=None, compare=False)

    @property
    def ports(self):
        return tuple(p for p, _ in GATE_PORTS[GateKind(self.gate_kind)])


@dataclass(frozen=True)
class FeedbackEdge:
    net: str
    instance: str
    port: str
    line: int | None = field(default=None, compare=False)
    col: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class NetlistAst:
    circuit_name: str
    input_decls: tuple = ()
    output_decls: tuple = ()
    instances: tuple = ()
    feedback_edges: tuple = ()

    def instance(self, name):
        for inst in self.instances:
            if inst.name == name:
                return inst
        raise KeyError(name)

    def drivers(self) -> dict:
        out = {net: None for net in self.input_decls}
        for inst in self.instances:
            out[inst.output_net] = inst
        return out


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)"
    r"|(?P<arrow>->)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[;,():.])"
)
KEYWORDS = {"circuit", "input", "output", "feedback"}


def _tokenize(text):
    line, line_start, pos = 1, 0, 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise NetlistError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, "syntax")
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            value = m.group()
            tokens.append((kind if kind != "punct" else value, value, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind, what=None):
        tok = self.next()
        if tok[0] != kind:
            found = tok[1] or "end of input"
            raise NetlistError(f"expected {what or kind!r}, found {found!r}", tok[2], tok[3], "syntax")
        return tok

    def keyword(self, word):
        tok = self.peek()
        return tok[0] == "id" and tok[1] == word

    def ident_list(self):
        names = [self.expect("id", "identifier")]
        while self.peek()[0] == ",":
            self.next()
            names.append(self.expect("id", "identifier"))
        return names

    def parse(self):
        if not self.keyword("circuit"):
            tok = self.peek()
            raise NetlistError("netlist must start with 'circuit <name>;'", tok[2], tok[3], "syntax")
        self.next()
        name = self.expect("id", "circuit name")[1]
        self.expect(";")
        inputs, outputs, instances, feedback = [], [], [], []
        while self.keyword("input") or self.keyword("output"):
            target = inputs if self.next()[1] == "input" else outputs
            target.extend(self.ident_list())
            self.expect(";")
        while self.peek()[0] == "id" and not self.keyword("feedback"):
            inst_tok = self.next()
            if inst_tok[1] in KEYWORDS:
                raise NetlistError(f"unexpected keyword {inst_tok[1]!r}", inst_tok[2], inst_tok[3], "syntax")
            self.expect(":")
            kind_tok = self.expect("id", "gate kind")
            self.expect("(")
            nets = [] if self.peek()[0] == ")" else self.ident_list()
            self.expect(")")
            self.expect("arrow", "->")
            out = self.expect("id", "output net")[1]
            self.expect(";")
            instances.append((inst_tok, kind_tok, [n[1] for n in nets], out))
        while self.keyword("feedback"):
            fb_tok = self.next()
            net = self.expect("id", "net")[1]
            self.expect("arrow", "->")
            inst = self.expect("id", "instance")[1]
            self.expect(".")
            port = self.expect("id", "port")[1]
            self.expect(";")
            feedback.append(FeedbackEdge(net, inst, port, fb_tok[2], fb_tok[3]))
        tok = self.peek()
        if tok[0] != "eof":
            raise NetlistError(f"unexpected {tok[1]!r}", tok[2], tok[3], "syntax")
        return name, inputs, outputs, instances, feedback


def parse_netlist(text: str) -> NetlistAst:
    """Parse and check a netlist.

    Raises :class:`NetlistError` with ``code`` one of ``syntax``,
    ``unknown-gate``, ``arity``, ``duplicate``, ``multiple-drivers``,
    ``undefined-net``, ``feedback`` or ``unannotated-cycle``.
    """
    name, in_toks, out_toks, raw_instances, feedback = _Parser(text).parse()

    seen = {}
    for tok in in_toks + out_toks:
        role = "input" if tok in in_toks else "output"
        if (role, tok[1]) in seen:
            raise NetlistError(f"{role} {tok[1]!r} declared twice", tok[2], tok[3], "duplicate")
        seen[(role, tok[1])] = tok

    instances = []
    names = set()
    drivers = {t[1]: ("input", t) for t in in_toks}
    for inst_tok, kind_tok, nets, out in raw_instances:
        try:
            kind = GateKind(kind_tok[1])
        except ValueError:
            raise NetlistError(
                f"unknown gate kind {kind_tok[1]!r} in instance {inst_tok[1]!r}",
                kind_tok[2], kind_tok[3], "unknown-gate") from None
        want = len(GATE_PORTS[kind])
        if len(nets) != want:
            raise NetlistError(
                f"instance {inst_tok[1]!r}: {kind.value} takes {want} input(s), got {len(nets)}",
                inst_tok[2], inst_tok[3], "arity")
        if inst_tok[1] in names:
            raise NetlistError(f"instance {inst_tok[1]!r} defined twice", inst_tok[2], inst_tok[3], "duplicate")
        names.add(inst_tok[1])
        if out in drivers:
            raise NetlistError(
                f"net {out!r} is driven more than once (instance {inst_tok[1]!r})",
                inst_tok[2], inst_tok[3], "multiple-drivers")
        drivers[out] = ("instance", inst_tok)
        instances.append(Instance(inst_tok[1], kind.value, tuple(nets), out, inst_tok[2], inst_tok[3]))

    for inst in instances:
        for net in inst.input_nets:
            if net not in drivers:
                raise NetlistError(
                    f"instance {inst.name!r} reads undefined net {net!r}", inst.line, inst.col, "undefined-net")
    for tok in out_toks:
        if tok[1] not in drivers:
            raise NetlistError(f"output {tok[1]!r} is never driven", tok[2], tok[3], "undefined-net")

    by_name = {inst.name: inst for inst in instances}
    fb_keys = set()
    for fb in feedback:
        if fb.net not in drivers:
            raise NetlistError(f"feedback from undefined net {fb.net!r}", fb.line, fb.col, "undefined-net")
        inst = by_name.get(fb.instance)
        if inst is None:
            raise NetlistError(f"feedback into unknown instance {fb.instance!r}", fb.line, fb.col, "feedback")
        if fb.port not in inst.ports:
            raise NetlistError(
                f"{inst.gate_kind} instance {inst.name!r} has no port {fb.port!r}", fb.line, fb.col, "feedback")
        if inst.input_nets[inst.ports.index(fb.port)] != fb.net:
            raise NetlistError(
                f"port {inst.name}.{fb.port} is not connected to net {fb.net!r}", fb.line, fb.col, "feedback")
        if (inst.name, fb.port) in fb_keys:
            raise NetlistError(f"duplicate feedback on {inst.name}.{fb.port}", fb.line, fb.col, "duplicate")
        fb_keys.add((inst.name, fb.port))

    ast = NetlistAst(name, tuple(t[1] for t in in_toks), tuple(t[1] for t in out_toks),
                     tuple(instances), tuple(feedback))
    _check_cycles(ast)
    return ast


def _check_cycles(ast: NetlistAst):
    fb = {(e.instance, e.port) for e in ast.feedback_edges}
    drivers = ast.drivers()
    g = nx.DiGraph()
    for inst in ast.instances:
        g.add_node(inst.name)
        for port, net in zip(inst.ports, inst.input_nets):
            src = drivers.get(net)
            if src is not None and (inst.name, port) not in fb:
                g.add_edge(src.name, inst.name)
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return
    nodes = [u for u, _ in cycle] + [cycle[0][0]]
    err = UnannotatedFeedbackError(nodes)
    first = ast.instance(nodes[0])
    err.line, err.col = first.line, first.col
    raise err


def pretty_print(ast: NetlistAst) -> str:
    lines = [f"circuit {ast.circuit_name};"]
    if ast.input_decls:
        lines.append("input " + ", ".join(ast.input_decls) + ";")
    if ast.output_decls:
        lines.append("output " + ", ".join(ast.output_decls) + ";")
    for inst in ast.instances:
        lines.append(f"{inst.name}: {inst.gate_kind}({', '.join(inst.input_nets)}) -> {inst.output_net};")
    for fb in ast.feedback_edges:
        lines.append(f"feedback {fb.net} -> {fb.instance}.{fb.port};")
    return "\n".join(lines) + "\n"


def _source_fragment(net, neuron_params, energy_params):
    nrn = Neuron(0, net, neuron_params or NeuronParams(), energy_params or EnergyParams())
    return CircuitGraph((nrn,), (), (Stimulus(0, net),), (Probe(0, net),), net)


def elaborate(
    ast: NetlistAst,
    weights: WeightSet | None = None,
    neuron_params=None,
    energy_params=None,
) -> CircuitGraph:
    """Expand every instance through :func:`build_gate` and wire the nets.

    Declared inputs become stimulus-bound neurons named after the net,
    declared outputs become probes, and each instance's output neuron is
    labelled with its output net.
    """
    weights = weights or WeightSet()
    fb = {(e.instance, e.port) for e in ast.feedback_edges}
    for inst in ast.instances:
        for port, cls in GATE_PORTS[GateKind(inst.gate_kind)]:
            if (inst.name, port) in fb and cls != "inh":
                raise NetlistError(
                    f"feedback into excitatory port {inst.name}.{port} ({inst.gate_kind}) is not supported",
                    inst.line, inst.col, "feedback")

    fragments, names = [], []
    index = {}
    for net in ast.input_decls:
        index[net] = len(fragments)
        fragments.append(_source_fragment(net, neuron_params, energy_params))
        names.append("")
    for inst in ast.instances:
        index[inst.output_net] = len(fragments)
        fragments.append(build_gate(GateTemplate(inst.gate_kind), weights, neuron_params, energy_params))
        names.append(inst.name)

    input_set = set(ast.input_decls)
    connections = []
    for inst in ast.instances:
        dst = index[inst.output_net]
        for port, net in zip(inst.ports, inst.input_nets):
            out_net = net if net in input_set else "OUT"
            connections.append(Connection(index[net], out_net, dst, port, (inst.name, port) in fb))

    graph = compose(fragments, connections, names, name=ast.circuit_name)
    graph = graph.relabel({f"{inst.name}.OUT": inst.output_net for inst in ast.instances})
    probes = [Probe(graph.index(net), net) for net in ast.output_decls]
    return graph.with_probes(probes)


def layer_depths(graph: CircuitGraph) -> dict:
    """Longest-path layer count from the stimulus-bound neurons.

    Stimulus-bound neurons have depth 1, feedback synapses are ignored and
    neurons unreachable from any stimulus get depth 0.
    """
    g = nx.DiGraph()
    g.add_nodes_from(range(len(graph)))
    g.add_edges_from((s.pre_id, s.post_id) for s in graph.synapses if not s.feedback)
    try:
        order = list(nx.topological_sort(g))
    except nx.NetworkXUnfeasible:
        cycle = nx.find_cycle(g)
        labels = [graph.label(u) for u, _ in cycle] + [graph.label(cycle[0][0])]
        raise UnannotatedFeedbackError(labels) from None
    sources = set(graph.sources)
    depth = {}
    for n in order:
        best = 1 if n in sources else 0
        for p in g.predecessors(n):
            if depth[p] > 0:
                best = max(best, depth[p] + 1)
        depth[n] = best
    return depth


@dataclass(frozen=True)
class BranchPad:
    pre: str
    post: str
    count: int


def buffer_plan(graph: CircuitGraph) -> list:
    """Buffers needed per incoming branch so every multi-input neuron sees
    equal layer depth on all of its non-feedback inputs."""
    depth = layer_depths(graph)
    plan = []
    for post in range(len(graph)):
        inc = graph.incoming(post, include_feedback=False)
        if len(inc) < 2:
            continue
        target = depth[post] - 1
        for s in inc:
            if depth[s.pre_id] == 0:
                continue
            k = target - depth[s.pre_id]
            if k > 0:
                plan.append((s, BranchPad(graph.label(s.pre_id), graph.label(post), k)))
    return plan


def insert_buffers(graph: CircuitGraph, weights: WeightSet | None = None) -> CircuitGraph:
    """Pad shallow branches with linear chains of buffer neurons."""
    weights = weights or WeightSet()
    plan = buffer_plan(graph)
    if not plan:
        return graph
    buf_syn = weights.synapse("exc")
    neurons = list(graph.neurons)
    labels = {n.label for n in neurons}
    padded = {id(s): (s, pad) for s, pad in plan}
    synapses = []
    for s in graph.synapses:
        if id(s) not in padded:
            synapses.append(s)
            continue
        _, pad = padded[id(s)]
        template = graph.neurons[s.post_id]
        pre = s.pre_id
        for k in range(1, pad.count + 1):
            label = f"buf{k}:{pad.pre}>{pad.post}"
            suffix = 1
            while label in labels:
                suffix += 1
                label = f"buf{k}:{pad.pre}>{pad.post}#{suffix}"
            labels.add(label)
            nid = len(neurons)
            neurons.append(replace(template, id=nid, label=label))
            synapses.append(Synapse(pre, nid, buf_syn))
            pre = nid
        synapses.append(replace(s, pre_id=pre))
    return replace(graph, neurons=tuple(neurons), synapses=tuple(synapses))


def is_buffer_label(label: str) -> bool:
    # Net and instance names cannot contain ':' or '>'.
    return re.search(r"(^|\.)buf\d+:", label) is not None


def count_buffers(graph: CircuitGraph) -> int:
    return sum(1 for n in graph.neurons if is_buffer_label(n.label))
