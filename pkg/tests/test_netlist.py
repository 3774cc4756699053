import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spikegates.circuit import PREBUILT, WeightSet, build_gate, prebuilt
from spikegates.errors import NetlistError, UnannotatedFeedbackError
from spikegates.library import NETLISTS
from spikegates.netlist import (
    buffer_plan,
    count_buffers,
    elaborate,
    insert_buffers,
    is_buffer_label,
    layer_depths,
    parse_netlist,
    pretty_print,
)

PORTS = {"AND": 2, "AND_NOT": 2, "NOT": 1, "NAND": 2, "BUFFER": 1, "SOURCE_H": 0}
INHIBITORY = {("AND_NOT", 1), ("NOT", 0)}


@st.composite
def netlists(draw):
    n_in = draw(st.integers(1, 3))
    n_inst = draw(st.integers(1, 8))
    inputs = [f"in{k}" for k in range(n_in)]
    outs = [f"n{k}" for k in range(n_inst)]
    lines = [f"circuit c{draw(st.integers(0, 99))};", "input " + ", ".join(inputs) + ";"]
    body, feedback = [], []
    for k in range(n_inst):
        kind = draw(st.sampled_from(sorted(PORTS)))
        known = inputs + outs[:k]
        nets = []
        for p in range(PORTS[kind]):
            later = outs[k + 1:]
            if (kind, p) in INHIBITORY and later and draw(st.booleans()):
                net = draw(st.sampled_from(later))
                port = "Y" if kind == "AND_NOT" else "A"
                feedback.append(f"feedback {net} -> g{k}.{port};")
            else:
                net = draw(st.sampled_from(known))
            nets.append(net)
        body.append(f"g{k}: {kind}({', '.join(nets)}) -> {outs[k]};")
    chosen = draw(st.lists(st.sampled_from(outs), min_size=1, max_size=3, unique=True))
    lines.append("output " + ", ".join(chosen) + ";")
    return "\n".join(lines + body + feedback) + "\n"


@settings(max_examples=200)
@given(netlists())
def test_parse_print_round_trip(text):
    ast = parse_netlist(text)
    printed = pretty_print(ast)
    again = parse_netlist(printed)
    assert again == ast
    assert pretty_print(again) == printed


@pytest.mark.parametrize("name", sorted(NETLISTS))
def test_library_round_trip(name):
    ast = parse_netlist(NETLISTS[name])
    assert parse_netlist(pretty_print(ast)) == ast


def _error(text):
    with pytest.raises(NetlistError) as e:
        parse_netlist(text)
    return e.value


def test_arity_diagnostic():
    e = _error("circuit c;\ninput A;\noutput Y;\ng: AND(A) -> Y;\n")
    assert e.code == "arity" and e.line == 4


def test_undefined_net_diagnostic():
    e = _error("circuit c;\ninput A;\noutput Y;\ng: AND(A, B) -> Y;\n")
    assert e.code == "undefined-net" and "'B'" in str(e)
    e = _error("circuit c;\ninput A;\noutput Z;\ng: NOT(A) -> Y;\n")
    assert e.code == "undefined-net"


def test_double_driver_diagnostic():
    e = _error("circuit c;\ninput A;\noutput Y;\ng: NOT(A) -> Y;\nh: BUFFER(A) -> Y;\n")
    assert e.code == "multiple-drivers" and e.line == 5
    e = _error("circuit c;\ninput A;\noutput A;\ng: NOT(A) -> A;\n")
    assert e.code == "multiple-drivers"


def test_unannotated_cycle_diagnostic():
    text = "circuit c;\ninput S;\noutput Q;\ng1: AND_NOT(S, Q) -> QN;\ng2: AND_NOT(S, QN) -> Q;\n"
    e = _error(text)
    assert isinstance(e, UnannotatedFeedbackError) and e.code == "unannotated-cycle"
    assert set(e.cycle) >= {"g1", "g2"}
    parse_netlist(text + "feedback Q -> g1.Y;\n")


def test_other_diagnostics():
    assert _error("circuit c;\ninput A;\ng: XOR(A, A) -> Y;\n").code == "unknown-gate"
    assert _error("circuit c;\ninput A, A;\n").code == "duplicate"
    assert _error("circuit c\ninput A;\n").code == "syntax"
    assert _error("circuit c;\ninput A;\ng: NOT(A) -> Y;\nfeedback A -> g.B;\n").code == "feedback"
    assert _error("circuit c;\ninput A $;\n").code == "syntax"


def test_feedback_into_excitatory_port_rejected_at_elaboration():
    text = "circuit c;\ninput S;\noutput Q;\ng1: AND_NOT(Q, S) -> QN;\ng2: AND_NOT(QN, S) -> Q;\nfeedback Q -> g1.X;\n"
    with pytest.raises(NetlistError) as e:
        elaborate(parse_netlist(text))
    assert e.value.code == "feedback"


def test_elaboration_labels_nets():
    g = elaborate(parse_netlist(NETLISTS["sr_latch"]))
    assert {"S", "R", "Q", "QN"} <= {n.label for n in g.neurons}
    assert [p.signal_name for p in g.probes] == ["Q", "QN"]


# -- buffers ------------------------------------------------------------------


def test_nand_gets_one_buffer_on_h_branch():
    g = elaborate(parse_netlist("circuit c;\ninput A, B;\noutput Y;\ng: NAND(A, B) -> Y;\n"))
    g = insert_buffers(g)
    bufs = [n.label for n in g.neurons if is_buffer_label(n.label)]
    assert len(bufs) == 1 and "H>" in bufs[0]


def _balanced(g):
    d = layer_depths(g)
    for post in range(len(g)):
        pres = {d[s.pre_id] for s in g.incoming(post, include_feedback=False) if d[s.pre_id] > 0}
        if len(pres) > 1:
            return False
    return True


@pytest.mark.parametrize("name", PREBUILT)
def test_depths_equal_after_insertion(name):
    assert _balanced(prebuilt(name))


@pytest.mark.parametrize("name", PREBUILT)
def test_insertion_is_idempotent(name):
    g = prebuilt(name)
    assert buffer_plan(g) == []
    assert insert_buffers(g).to_text() == g.to_text()


def _longest_paths_by_dfs(graph):
    """Longest source-to-node path (in neurons) by enumerating every path."""
    succ = {}
    for s in graph.synapses:
        if not s.feedback:
            succ.setdefault(s.pre_id, []).append(s.post_id)
    best = {}

    def walk(node, length):
        best[node] = max(best.get(node, 0), length)
        for nxt in succ.get(node, ()):
            walk(nxt, length + 1)

    for src in graph.sources:
        walk(src, 1)
    return best


def test_dff_buffer_count_matches_brute_force_oracle():
    from spikegates.library import NETLISTS

    raw = elaborate(parse_netlist(NETLISTS["d_flipflop"]))
    depth = _longest_paths_by_dfs(raw)
    need = 0
    for post in range(len(raw)):
        inc = [s for s in raw.synapses if s.post_id == post and not s.feedback]
        if len(inc) > 1:
            need += sum(depth[post] - 1 - depth[s.pre_id] for s in inc if s.pre_id in depth)
    expected = count_buffers(raw) + need
    assert count_buffers(prebuilt("d_flipflop")) == expected


def test_layer_depths_agree_with_dfs_on_library():
    for name in PREBUILT:
        g = prebuilt(name)
        dfs = _longest_paths_by_dfs(g)
        assert {k: v for k, v in layer_depths(g).items() if v} == dfs


def test_depth_of_unreachable_and_sources():
    g = build_gate("NOT")
    d = layer_depths(g)
    assert d[g.index("A")] == 1 and d[g.index("H")] == 1 and d[g.index("OUT")] == 2


def test_buffers_carry_w_x():
    w = WeightSet(0.07, 0.2, 0.05)
    g = prebuilt("nand", w)
    buf = next(n.id for n in g.neurons if is_buffer_label(n.label))
    assert [s.params.w for s in g.synapses if buf in (s.pre_id, s.post_id)] == [0.07, 0.07]
