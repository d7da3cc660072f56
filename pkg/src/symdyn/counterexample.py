"""A positively expansive system on a quadratic-growth network.

Cells sit on a half-line; the cells indexed by m_k = k(k+1) ("junction"
cells) each listen to the next cell on the line and to the next junction,
while every other cell ("chain" cell) just copies its successor.  States are
bit pairs (a, b), with b pinned to 0 on chain cells.  Observing only cell 0
reconstructs the whole initial state: the a-bits march down the line one
step per tick, and the b-bits of the junctions can be unwound from cell 0's
b-history by mod-2 subtraction.

Symbols encode (a, b) as a | (b << 1), so the alphabet is {0, 1, 2, 3} and
chain cells are restricted to {0, 1}.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .netgraph import Digraph
from .symsys import (
    Alphabet,
    Configuration,
    LocalRule,
    PatternSpace,
    SymbolicSystem,
    evaluate,
    light_cone,
    propagation,
)


class HorizonTooShortError(Exception):
    """A trace is shorter than the decode depth requires."""


def junction_index(k: int) -> int:
    """Index of the k-th junction cell: 0, 2, 6, 12, 20, ..."""
    return k * (k + 1)


def junction_rank(n: int) -> Optional[int]:
    """k with junction_index(k) == n, or None for chain cells."""
    if n < 0:
        return None
    k = (math.isqrt(4 * n + 1) - 1) // 2  # largest k with k(k+1) <= n
    return k if junction_index(k) == n else None


def is_junction(n: int) -> bool:
    return junction_rank(n) is not None


def pack(a: int, b: int) -> int:
    return (a & 1) | ((b & 1) << 1)


def unpack(sym: int) -> tuple:
    return sym & 1, (sym >> 1) & 1


def cex_network() -> Digraph:
    """In-neighbors: chain cell n listens to n+1; junction m_k listens to
    m_k + 1 and to the next junction m_{k+1}.  No self-loops."""

    def ins(n):
        k = junction_rank(n)
        if k is None:
            return [n + 1]
        return [n + 1, junction_index(k + 1)]

    def outs(n):
        out = []
        if n >= 1:
            out.append(n - 1)  # n = (n-1)+1 feeds its predecessor
        k = junction_rank(n)
        if k is not None and k >= 1:
            out.append(junction_index(k - 1))
        return out

    return Digraph(ins, outs, universe={"family": "counterexample"})


def cex_space() -> PatternSpace:
    return PatternSpace(
        lambda n: (0, 1, 2, 3) if junction_rank(n) is not None else (0, 1),
        label="counterexample",
    )


def cex_rules() -> SymbolicSystem:
    """The system itself: chain cells copy the a-bit of their successor and
    write b = 0; junction m_k outputs (a of cell m_k + 1, a + b of junction
    m_{k+1} mod 2)."""
    alphabet = Alphabet(4)
    graph = cex_network()

    def rule_at(n):
        k = junction_rank(n)
        if k is None:

            def fn(args):
                return args[0] & 1

            return LocalRule(inputs=(n + 1,), fn=fn, label="chain")

        def fn(args):
            a_next, _ = unpack(args[0])
            a_j, b_j = unpack(args[1])
            return pack(a_next, a_j ^ b_j)

        return LocalRule(
            inputs=(n + 1, junction_index(k + 1)), fn=fn, label=f"junction[{k}]"
        )

    return SymbolicSystem(alphabet, graph, rule_at, label="counterexample")


@dataclass(frozen=True)
class Trace:
    """Observations of cell 0: (a, b) pairs for t = 0..horizon."""

    horizon: int
    observations: tuple  # tuple of (a, b)

    def __post_init__(self):
        if len(self.observations) != self.horizon + 1:
            raise ValueError("trace length must be horizon + 1")

    def a(self, t: int) -> int:
        return self.observations[t][0]

    def b(self, t: int) -> int:
        return self.observations[t][1]

    def xor(self, other: "Trace") -> "Trace":
        if self.horizon != other.horizon:
            raise ValueError("traces must share a horizon")
        return Trace(
            self.horizon,
            tuple(
                (p[0] ^ q[0], p[1] ^ q[1])
                for p, q in zip(self.observations, other.observations)
            ),
        )


@dataclass(frozen=True)
class DecodeResult:
    """Initial data recovered from a trace: the a-row 0..m_J and the b-bits
    of junctions 0..J."""

    depth: int
    a_row: tuple
    b_junctions: tuple

    def as_dict(self) -> dict:
        out = {n: {"a": a} for n, a in enumerate(self.a_row)}
        for j, b in enumerate(self.b_junctions):
            out[junction_index(j)]["b"] = b
        return out


def decode_window(depth: int) -> tuple:
    """Cells whose initial state a depth-J trace pins down: everything up to
    junction J (a-bits everywhere, b-bits at the junctions)."""
    return tuple(range(junction_index(depth) + 1))


def simulate_trace(x0: Configuration, depth: int) -> Trace:
    """Run the system from x0, recording cell 0 through horizon
    junction_index(depth)."""
    horizon = junction_index(depth)
    sys = cex_rules()
    traj = evaluate(sys, x0, [0], horizon)
    return Trace(horizon, tuple(unpack(step[0]) for step in traj))


def decode_trace(trace: Trace, depth: int) -> DecodeResult:
    """Invert the trace of cell 0 back to the initial data.

    a-bits: the update shifts the a-row one cell toward 0 per tick, so
    a0[n] is the a-observation at time n.  b-bits: the junction update adds
    the next junction's a and b into the local b, so each b-history unwinds
    by one junction per level: b_t at junction j+1 equals b_{t+1} at
    junction j minus the a-bit that junction j+1 held at time t, and that
    a-bit is itself a later a-observation.  All arithmetic is mod 2.
    """
    horizon = junction_index(depth)
    if trace.horizon < horizon:
        raise HorizonTooShortError(
            f"depth {depth} needs horizon {horizon}, trace has {trace.horizon}"
        )
    a_row = tuple(trace.a(n) for n in range(horizon + 1))
    # b-history of the current junction level; entry t = its b-bit at time t
    b_hist = [trace.b(t) for t in range(horizon + 1)]
    b_junctions = [b_hist[0]]
    for j in range(1, depth + 1):
        mj = junction_index(j)
        span = horizon - mj
        nxt = []
        for t in range(span + 1):
            a_here = a_row[t + mj]  # junction j's a-bit at time t
            nxt.append(b_hist[t + 1] ^ a_here)
        b_hist = nxt
        b_junctions.append(b_hist[0])
    return DecodeResult(depth=depth, a_row=a_row, b_junctions=tuple(b_junctions))


def random_initial(depth: int, rng: random.Random) -> Configuration:
    """Random valid configuration on the cone of cell 0 at horizon m_J."""
    sys = cex_rules()
    space = cex_space()
    cone = light_cone(sys, [0], junction_index(depth))
    return space.random_configuration(cone.union, rng)


def cex_roundtrip(depth: int, trials: int, seed: int = 0) -> dict:
    """Simulate-then-decode round trips from random initial data.

    Passes only if every trial recovers the a-row and junction b-bits
    exactly; failures carry their per-trial seed for replay.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    sys = cex_rules()
    space = cex_space()
    cone = light_cone(sys, [0], junction_index(depth))
    failures = []
    for trial in range(trials):
        trial_seed = seed * 1_000_003 + trial
        rng = random.Random(trial_seed)
        x0 = space.random_configuration(cone.union, rng)
        mismatches = roundtrip_mismatches(x0, depth, _sys=sys)
        if mismatches:
            failures.append({"trial": trial, "seed": trial_seed, "mismatches": mismatches})
    return {"passed": not failures, "trials": trials, "failures": failures}


def roundtrip_mismatches(x0: Configuration, depth: int, _sys=None) -> list:
    """Compare decode(simulate(x0)) against x0; empty list means exact."""
    sys = _sys if _sys is not None else cex_rules()
    horizon = junction_index(depth)
    traj = evaluate(sys, x0, [0], horizon)
    trace = Trace(horizon, tuple(unpack(step[0]) for step in traj))
    result = decode_trace(trace, depth)
    mismatches = []
    for n in range(junction_index(depth) + 1):
        a_true, b_true = unpack(x0[n])
        if result.a_row[n] != a_true:
            mismatches.append({"cell": n, "field": "a", "expected": a_true,
                               "decoded": result.a_row[n]})
    for j in range(depth + 1):
        n = junction_index(j)
        _, b_true = unpack(x0[n])
        if result.b_junctions[j] != b_true:
            mismatches.append({"cell": n, "field": "b", "expected": b_true,
                               "decoded": result.b_junctions[j]})
    return mismatches


def guaranteed_cone_cells(horizon: int) -> set:
    """Cells provably inside the cone of cell 0 at the given horizon.

    Junction k sits at cone depth k, and each junction's successor chain
    walks in one cell per tick, so junctions 0..T plus the chain cells
    junction_index(t)+s for t in [1..T], s in [1..T-t] are all reached.
    The same cell can arise from several junction chains, so the floor is
    the size of this set, not the sum of the family sizes.
    """
    cells = {junction_index(k) for k in range(horizon + 1)}
    for t in range(1, horizon + 1):
        for s in range(1, horizon - t + 1):
            cells.add(junction_index(t) + s)
    return cells


def cex_propagation_profile(horizon: int) -> dict:
    """Exact cone growth at cell 0 against its quadratic floor.

    `floors` counts the guaranteed cone cells (deduplicated); the naive
    arithmetic (T+1) + T(T-1)/2 ignores chain-cell collisions, overcounts
    from T = 6 on, and is reported separately for reference.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    sys = cex_rules()
    rho = propagation(sys, 0, horizon)
    floors = [len(guaranteed_cone_cells(t)) for t in range(horizon + 1)]
    naive_floors = [(t + 1) + t * (t - 1) // 2 for t in range(horizon + 1)]
    ok = all(r >= f for r, f in zip(rho, floors))
    naive_ok = all(r >= f for r, f in zip(rho, naive_floors))
    return {
        "rho": rho,
        "floors": floors,
        "naive_floors": naive_floors,
        "lower_bound_ok": ok,
        "naive_bound_ok": naive_ok,
    }
