"""Countable digraphs with lazy in-neighbor enumeration.

Vertices are opaque hashable identifiers: plain integers for chain-like
vertex families, tuples of integers for lattice points.  Every analysis
routine works on a finite probe of the (possibly infinite) graph, expanding
neighborhoods on demand; nothing ever materializes the full vertex set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

Vertex = object  # int or tuple[int, ...]

INFINITE_DISTANCE = math.inf


class UniverseExhaustionError(Exception):
    """A finite explicit universe cannot supply a requested vertex."""


class MissingOutNeighborsError(Exception):
    """Operation needs out-neighbors but the graph only supplies in-neighbors."""


def vertex_key(v: Vertex):
    """Canonical sort key: integers and integer tuples order consistently."""
    return v if isinstance(v, tuple) else (v,)


def sort_vertices(vs: Iterable[Vertex]) -> tuple:
    return tuple(sorted(vs, key=vertex_key))


@dataclass(frozen=True)
class Ball:
    """In-neighbor closure of a center set after `radius` expansion rounds."""

    center: tuple
    radius: int
    members: tuple

    def __contains__(self, v: Vertex) -> bool:
        return v in set(self.members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Subisometry:
    """Injective, edge-preserving self-map of the vertex set."""

    map: Callable[[Vertex], Vertex]
    label: str = ""

    def __call__(self, v: Vertex) -> Vertex:
        return self.map(v)

    def iterate(self, v: Vertex, n: int) -> Vertex:
        for _ in range(n):
            v = self.map(v)
        return v


@dataclass(frozen=True)
class DimensionEstimate:
    """Finite-window growth-exponent report for one center vertex.

    `pointwise_exponents[i]` is log|B(v, radii[i])| / log(radii[i]); the
    lower/upper proxies are the min/max of those exponents over the upper
    half of the radius window, and `fit_slope` is the least-squares slope of
    log|B| against log r over the whole window.  All three are finite-window
    surrogates; none claims a limit.
    """

    center: Vertex
    radii: tuple
    ball_sizes: tuple
    pointwise_exponents: tuple
    lower_proxy: float
    upper_proxy: float
    fit_slope: float


class Digraph:
    """A digraph given by a lazy in-neighbor function.

    `in_neighbors(v)` must return a finite sequence for every vertex.
    `out_neighbors` is optional; operations that need undirected adjacency
    raise MissingOutNeighborsError when it is absent.  `universe` is a
    JSON-able descriptor used for serialization and error messages.
    """

    def __init__(
        self,
        in_neighbors: Callable[[Vertex], Sequence[Vertex]],
        out_neighbors: Optional[Callable[[Vertex], Sequence[Vertex]]] = None,
        universe: Optional[dict] = None,
    ):
        self._in = in_neighbors
        self._out = out_neighbors
        self.universe = universe or {"family": "anonymous"}
        self._ball_cache: dict = {}  # center set -> per-radius member shells

    def in_neighbors(self, v: Vertex) -> tuple:
        return tuple(self._in(v))

    @property
    def has_out_neighbors(self) -> bool:
        return self._out is not None

    def out_neighbors(self, v: Vertex) -> tuple:
        if self._out is None:
            raise MissingOutNeighborsError(
                f"graph {self.universe!r} supplies only in-neighbors"
            )
        return tuple(self._out(v))

    def has_edge(self, v: Vertex, w: Vertex) -> bool:
        """True iff v is an in-neighbor of w."""
        return v in self._in(w)

    def undirected_neighbors(self, v: Vertex) -> tuple:
        seen = dict.fromkeys(self.in_neighbors(v))
        seen.update(dict.fromkeys(self.out_neighbors(v)))
        seen.pop(v, None)
        return tuple(seen)

    # -- ball expansion ----------------------------------------------------
    # Per center set, the cache stores the list of "new members at radius r"
    # shells, so any earlier radius can be reassembled without re-running BFS.

    def _shells(self, center: frozenset, radius: int) -> list:
        shells = self._ball_cache.get(center)
        if shells is None:
            shells = [set(center)]
            self._ball_cache[center] = shells
        if len(shells) > radius or (not shells[-1] and len(shells) > 1):
            return shells  # deep enough, or already closed
        members = set().union(*shells)
        while len(shells) <= radius:
            frontier = shells[-1]
            new = set()
            for w in frontier:
                for u in self._in(w):
                    if u not in members:
                        new.add(u)
            shells.append(new)
            if not new:
                break
            members |= new
        return shells

    def ball_members(self, centers: Iterable[Vertex], radius: int) -> set:
        shells = self._shells(frozenset(centers), radius)
        out: set = set()
        for shell in shells[: radius + 1]:
            out |= shell
        return out

    def ball_sizes(self, centers: Iterable[Vertex], r_max: int) -> list:
        """|B(centers, r)| for r = 0..r_max (constant tail once closed)."""
        shells = self._shells(frozenset(centers), r_max)
        sizes = []
        total = 0
        for r in range(r_max + 1):
            if r < len(shells):
                total += len(shells[r])
            sizes.append(total)
        return sizes


# -- operations ------------------------------------------------------------


def in_ball(g: Digraph, centers: Iterable[Vertex], r: int) -> Ball:
    """B(centers, r): r rounds of in-neighbor expansion from the center set."""
    centers = tuple(centers)
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if not centers:
        raise ValueError("center set must be nonempty")
    members = g.ball_members(centers, r)
    return Ball(center=sort_vertices(centers), radius=r, members=sort_vertices(members))


def undirected_distance(g: Digraph, v: Vertex, w: Vertex, cap: int):
    """Exact shortest undirected path length if <= cap, else INFINITE_DISTANCE.

    Bidirectional breadth-first search over in+out adjacency; requires
    out-neighbors.  INFINITE_DISTANCE means "no path of length <= cap",
    which covers genuinely disconnected pairs as well as cap exhaustion.
    """
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    if v == w:
        return 0
    g.out_neighbors(v)  # raises early when out-neighbors are unavailable
    front_a = {v: 0}
    front_b = {w: 0}
    seen_a = {v: 0}
    seen_b = {w: 0}
    best = None
    while front_a and front_b:
        da = min(front_a.values())
        db = min(front_b.values())
        if best is not None and da + db + 1 > best:
            break
        if da + db >= cap:
            break
        # expand the smaller frontier
        if len(front_a) <= len(front_b):
            front, seen, other = front_a, seen_a, seen_b
        else:
            front, seen, other = front_b, seen_b, seen_a
        new_front = {}
        for x, dx in front.items():
            for y in g.undirected_neighbors(x):
                if y in other:
                    total = dx + 1 + other[y]
                    if total <= cap and (best is None or total < best):
                        best = total
                if y not in seen:
                    seen[y] = dx + 1
                    new_front[y] = dx + 1
        if front is front_a:
            front_a = new_front
        else:
            front_b = new_front
    if best is not None and best <= cap:
        return best
    return INFINITE_DISTANCE


def dim_estimate(g: Digraph, v: Vertex, r_min: int, r_max: int) -> DimensionEstimate:
    """Ball sizes and growth-exponent proxies over the window [r_min, r_max]."""
    if not (2 <= r_min < r_max):
        raise ValueError("need 2 <= r_min < r_max")
    sizes = g.ball_sizes([v], r_max)
    radii = tuple(range(r_min, r_max + 1))
    ball_sizes = tuple(sizes[r] for r in radii)
    exps = tuple(math.log(s) / math.log(r) for r, s in zip(radii, ball_sizes))
    tail_start = (len(radii)) // 2
    tail = exps[tail_start:]
    slope = _ols_slope(
        [math.log(r) for r in radii], [math.log(s) for s in ball_sizes]
    )
    return DimensionEstimate(
        center=v,
        radii=radii,
        ball_sizes=ball_sizes,
        pointwise_exponents=exps,
        lower_proxy=min(tail),
        upper_proxy=max(tail),
        fit_slope=slope,
    )


def _ols_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        return 0.0
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / sxx


def superlinear_check(g: Digraph, v: Vertex, r_max: int) -> dict:
    """Ratios |B(v,r)|/r and a finite-window divergence heuristic.

    Verdict is True when the minimum ratio over the last quartile of radii
    exceeds the maximum over the first quartile.  A heuristic, not a proof.
    """
    if r_max < 4:
        raise ValueError("need r_max >= 4")
    sizes = g.ball_sizes([v], r_max)
    ratios = [sizes[r] / r for r in range(1, r_max + 1)]
    q = max(1, len(ratios) // 4)
    head_max = max(ratios[:q])
    tail_min = min(ratios[-q:])
    return {
        "radii": list(range(1, r_max + 1)),
        "ratios": ratios,
        "divergent": tail_min > head_max,
        "head_max": head_max,
        "tail_min": tail_min,
    }


def upstream(g: Digraph, v: Vertex, w: Vertex, cap: int):
    """True iff a directed path v -> ... -> w of length <= cap exists.

    Searched as membership of v in the expanding in-neighbor closure of w.
    Returns None ("unknown") when the cap is exhausted while the closure is
    still growing; returns False only when the closure is complete.
    """
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    if v == w:
        return True
    members = {w}
    frontier = {w}
    for _ in range(cap):
        new = set()
        for x in frontier:
            for u in g.in_neighbors(x):
                if u not in members:
                    new.add(u)
        if v in new:
            return True
        if not new:
            return False
        members |= new
        frontier = new
    return None  # cap exhausted, closure still open


def biconnected_probe(g: Digraph, vertices: Iterable[Vertex], cap: int) -> dict:
    """Partition a finite probe set by mutual reachability within cap.

    Two probe vertices share a class iff upstream holds both ways with a
    definite True.  Pairs whose status came back unknown are listed so the
    caller can see which merges a larger cap might still produce.
    """
    vs = sort_vertices(set(vertices))
    parent = {v: v for v in vs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    unknown_pairs = []
    for i, v in enumerate(vs):
        for w in vs[i + 1 :]:
            a = upstream(g, v, w, cap)
            b = upstream(g, w, v, cap)
            if a is True and b is True:
                parent[find(v)] = find(w)
            elif a is None or b is None:
                unknown_pairs.append((v, w))
    classes: dict = {}
    for v in vs:
        classes.setdefault(find(v), []).append(v)
    partition = sorted(
        (sort_vertices(c) for c in classes.values()), key=lambda c: vertex_key(c[0])
    )
    return {"classes": partition, "unknown_pairs": unknown_pairs}


def speed_estimate(
    g: Digraph, tau: Subisometry, v: Vertex, n_max: int, cap: int
) -> dict:
    """Per-n values d(v, tau^n(v)) / n and their minimum.

    The displacement sequence is subadditive, so the minimum over the probed
    window upper-bounds the true speed and converges to it from above.
    Entries whose distance exceeded the cap are recorded as None and left
    out of the minimum.
    """
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    values = []
    current = v
    known = []
    for n in range(1, n_max + 1):
        current = tau(current)
        d = undirected_distance(g, v, current, cap)
        if d == INFINITE_DISTANCE:
            values.append(None)
        else:
            values.append(d / n)
            known.append(d / n)
    return {
        "values": values,
        "inf_proxy": min(known) if known else None,
        "unknown_count": values.count(None),
    }


def is_estuary(
    g: Digraph, base: Iterable[Vertex], probes: Iterable[Vertex], cap: int
):
    """Check that every probe vertex is upstream of some base vertex.

    True certifies only the probe set.  False is definite (some probe cannot
    reach any base vertex even with closed search).  None means the cap ran
    out before a verdict.
    """
    base = list(base)
    saw_unknown = False
    for p in sort_vertices(probes):
        statuses = [upstream(g, p, u, cap) for u in base]
        if any(s is True for s in statuses):
            continue
        if all(s is False for s in statuses):
            return False
        saw_unknown = True
    return None if saw_unknown else True


# -- built-in families -------------------------------------------------------


def cayley_zd(d: int) -> Digraph:
    """Cayley digraph of Z^d with generators +-e_i (symmetric, biconnected)."""
    if d < 1:
        raise ValueError("need d >= 1")
    offsets = []
    for i in range(d):
        for s in (1, -1):
            off = [0] * d
            off[i] = s
            offsets.append(tuple(off))

    def nbrs(v):
        return [tuple(a + b for a, b in zip(v, off)) for off in offsets]

    return Digraph(nbrs, nbrs, universe={"family": "cayley_zd", "D": d})


def cayley_zdne(d: int, e: int) -> Digraph:
    """Cayley digraph of the monoid Z^d x N^e.

    Z coordinates step both ways; N coordinates only forward, so in-neighbors
    in an N coordinate exist only above zero.
    """
    if d < 0 or e < 0 or d + e < 1:
        raise ValueError("need d, e >= 0 with d + e >= 1")
    gens = []
    for i in range(d):
        for s in (1, -1):
            off = [0] * (d + e)
            off[i] = s
            gens.append(tuple(off))
    for j in range(e):
        off = [0] * (d + e)
        off[d + j] = 1
        gens.append(tuple(off))

    def valid(v):
        return all(v[d + j] >= 0 for j in range(e))

    def ins(v):
        out = []
        for gvec in gens:
            u = tuple(a - b for a, b in zip(v, gvec))
            if valid(u):
                out.append(u)
        return out

    def outs(v):
        out = []
        for gvec in gens:
            u = tuple(a + b for a, b in zip(v, gvec))
            if valid(u):
                out.append(u)
        return out

    return Digraph(ins, outs, universe={"family": "cayley_zdne", "D": d, "E": e})


def odometer_graph() -> Digraph:
    """Adding-machine network on N: every cell below n (and n itself) feeds n.

    Out-neighbor sets are infinite, so only in-neighbors are supplied.
    """

    def ins(n):
        return list(range(0, n + 1))

    return Digraph(ins, None, universe={"family": "odometer"})


def unit_shift_graph() -> Digraph:
    """Network of the one-sided full shift on N: cell n+1 feeds cell n."""

    def ins(n):
        return [n + 1]

    def outs(n):
        return [n - 1] if n >= 1 else []

    return Digraph(ins, outs, universe={"family": "unit_shift"})


def unit_shift_graph_z() -> Digraph:
    """Network of the full shift on Z: cell z+1 feeds cell z."""

    def ins(z):
        return [z + 1]

    def outs(z):
        return [z - 1]

    return Digraph(ins, outs, universe={"family": "unit_shift_z"})


def shortcut_graph() -> Digraph:
    """Ladder over Z x N with level-n horizontal jumps of length 2^n.

    (z, n) points to (z, n+-1) and to (z + 2^n, n); the shift (z, n) ->
    (z+1, n) is a subisometry of zero speed thanks to the jumps.
    """

    def ins(v):
        z, n = v
        out = [(z, n + 1), (z - 2**n, n)]
        if n >= 1:
            out.append((z, n - 1))
        return out

    def outs(v):
        z, n = v
        out = [(z, n + 1), (z + 2**n, n)]
        if n >= 1:
            out.append((z, n - 1))
        return out

    return Digraph(ins, outs, universe={"family": "shortcut"})


def explicit_graph(edges: Iterable[tuple]) -> Digraph:
    """Finite digraph from an explicit edge list (v, w) meaning v feeds w."""
    ins: dict = {}
    outs: dict = {}
    verts = set()
    for v, w in edges:
        ins.setdefault(w, []).append(v)
        outs.setdefault(v, []).append(w)
        verts.add(v)
        verts.add(w)

    def get_in(v):
        if v not in verts:
            raise UniverseExhaustionError(f"vertex {v!r} not in explicit universe")
        return ins.get(v, [])

    def get_out(v):
        if v not in verts:
            raise UniverseExhaustionError(f"vertex {v!r} not in explicit universe")
        return outs.get(v, [])

    return Digraph(
        get_in,
        get_out,
        universe={"family": "explicit", "vertices": sorted(verts, key=vertex_key)},
    )


def counterexample_graph() -> Digraph:
    from .counterexample import cex_network

    return cex_network()


def shift_tau(delta) -> Subisometry:
    """Translation subisometry v -> v + delta on tuple or integer vertices."""
    if isinstance(delta, tuple):
        return Subisometry(
            map=lambda v: tuple(a + b for a, b in zip(v, delta)),
            label=f"shift{delta}",
        )
    return Subisometry(map=lambda v: v + delta, label=f"shift({delta})")


def graph_from_descriptor(desc: dict) -> Digraph:
    """Build a named family or explicit graph from its JSON descriptor."""
    if "edges" in desc:
        return explicit_graph([tuple(e) for e in desc["edges"]])
    family = desc.get("family")
    if family == "cayley_zd":
        return cayley_zd(int(desc["D"]))
    if family == "cayley_zdne":
        return cayley_zdne(int(desc["D"]), int(desc["E"]))
    if family == "odometer":
        return odometer_graph()
    if family == "unit_shift":
        return unit_shift_graph()
    if family == "unit_shift_z":
        return unit_shift_graph_z()
    if family == "shortcut":
        return shortcut_graph()
    if family == "counterexample":
        return counterexample_graph()
    raise ValueError(f"unknown graph descriptor: {desc!r}")
