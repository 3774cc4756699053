"""Netlists of the prebuilt circuits."""

AND = """\
circuit and2;
input A, B;
output Y;
g1: AND(A, B) -> Y;
"""

AND_NOT = """\
circuit and_not;
input X, Y;
output Z;
g1: AND_NOT(X, Y) -> Z;
"""

NOT = """\
circuit not1;
input A;
output Y;
g1: NOT(A) -> Y;
"""

NAND = """\
circuit nand2;
input A, B;
output Y;
g1: AND(A, B) -> AB;
g2: NOT(AB) -> Y;
"""

# Active-low latch: each gate's inhibitory input is the other gate's output.
SR_LATCH = """\
circuit sr_latch;
input S, R;
output Q, QN;
g1: AND_NOT(S, Q) -> QN;
g2: AND_NOT(R, QN) -> Q;
feedback Q -> g1.Y;
feedback QN -> g2.Y;
"""

GATED_SR_LATCH = """\
circuit gated_sr_latch;
input SP, RP, LE;
output Q, QN;
ns: NAND(SP, LE) -> S;
nr: NAND(RP, LE) -> R;
g1: AND_NOT(S, Q) -> QN;
g2: AND_NOT(R, QN) -> Q;
feedback Q -> g1.Y;
feedback QN -> g2.Y;
"""

# Positive-edge primary-secondary flip-flop: D drives the primary set input
# directly and its reset input through an inverter; the clock is inverted
# for the primary and sent directly to the secondary.
D_FLIPFLOP = """\
circuit d_flipflop;
input D, CLK;
output Q, QN;
dn: NOT(D) -> DN;
cn: NOT(CLK) -> CLKN;
ps: NAND(D, CLKN) -> PS;
pr: NAND(DN, CLKN) -> PR;
p1: AND_NOT(PS, PQ) -> PQN;
p2: AND_NOT(PR, PQN) -> PQ;
ss: NAND(PQ, CLK) -> SS;
sr: NAND(PQN, CLK) -> SR;
s1: AND_NOT(SS, Q) -> QN;
s2: AND_NOT(SR, QN) -> Q;
feedback PQ -> p1.Y;
feedback PQN -> p2.Y;
feedback Q -> s1.Y;
feedback QN -> s2.Y;
"""

NETLISTS = {
    "and": AND,
    "and_not": AND_NOT,
    "not": NOT,
    "nand": NAND,
    "sr_latch": SR_LATCH,
    "gated_sr_latch": GATED_SR_LATCH,
    "d_flipflop": D_FLIPFLOP,
}
