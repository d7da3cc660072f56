"""Symbolic dynamical systems over countable digraphs.

A system is a finite alphabet, a digraph, and one local rule per vertex whose
input list matches the vertex's in-neighbors.  Everything here evaluates on
finite windows only: light cones are computed by backward composition of
rule inputs, trajectories by exact cone evaluation (no boundary guesses),
and panoramas / window certificates by exhaustive enumeration of the
pattern space restricted to the cone.

The enumeration has two interchangeable engines: a plain dictionary
grouping for small pattern counts, and a bit-packed engine (composed
observation tables + grouped counting over packed trajectory keys) for
large ones.  Both implement the same quantifier exactly.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .netgraph import Digraph, Subisometry, Vertex, in_ball, sort_vertices, vertex_key


class NetworkConsistencyError(Exception):
    """A vertex's rule inputs disagree with the graph's in-neighbors."""


class InsufficientDomainError(Exception):
    """A configuration does not cover the light cone needed for evaluation."""

    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(f"configuration missing vertices: {self.missing}")


class EnumerationCapError(Exception):
    """An exhaustive enumeration would exceed the configured cap."""

    def __init__(self, required, cap):
        self.required = required
        self.cap = cap
        super().__init__(f"enumeration needs {required} patterns, cap is {cap}")


class NotEquicontinuousError(Exception):
    """A window failed envelope certification within the probe horizon."""


DEFAULT_PATTERN_CAP = 2**24
_DICT_ENGINE_MAX = 2**14
_TABLE_CAP = 2**20
_KEYSPACE_CAP = 2**22
_CHUNK = 2**18  # inner vector length of the packed engine; L2/L3 friendly


@dataclass(frozen=True)
class Alphabet:
    """Finite symbol set; symbols are the integers 0..size-1."""

    size: int
    labels: Optional[tuple] = None

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("alphabet needs at least two symbols")

    def symbols(self) -> range:
        return range(self.size)


@dataclass(frozen=True)
class LocalRule:
    """Next-state function of one vertex over its ordered input list."""

    inputs: tuple
    fn: Callable[[tuple], int] = field(compare=False)
    label: str = ""

    def __call__(self, args: tuple) -> int:
        return self.fn(args)

    @classmethod
    def from_table(cls, inputs, table, alphabet_size: int, label: str = ""):
        """Build a rule from a table.

        `table` is either a dict keyed by input tuples, or a flat sequence in
        row-major order of input tuples (first input most significant) under
        symbol order 0..k-1.
        """
        inputs = tuple(inputs)
        if isinstance(table, dict):
            lookup = dict(table)

            def fn(args):
                return lookup[tuple(args)]

        else:
            flat = list(table)
            k = alphabet_size
            expected = k ** len(inputs)
            if len(flat) != expected:
                raise ValueError(
                    f"table has {len(flat)} entries, expected {expected}"
                )

            def fn(args):
                idx = 0
                for a in args:
                    idx = idx * k + a
                return flat[idx]

        return cls(inputs=inputs, fn=fn, label=label)


class SymbolicSystem:
    """Alphabet + digraph + per-vertex local rule.

    Rules are fetched lazily and checked once against the graph: the rule's
    input set must equal the vertex's in-neighbor set, so the digraph really
    is the dependency network of the update map.
    """

    def __init__(
        self,
        alphabet: Alphabet,
        graph: Digraph,
        rule_at: Callable[[Vertex], LocalRule],
        label: str = "",
    ):
        self.alphabet = alphabet
        self.graph = graph
        self.label = label
        self._rule_at = rule_at
        self._rules: dict = {}

    def rule(self, v: Vertex) -> LocalRule:
        r = self._rules.get(v)
        if r is None:
            r = self._rule_at(v)
            if set(r.inputs) != set(self.graph.in_neighbors(v)):
                raise NetworkConsistencyError(
                    f"rule inputs {r.inputs} != in-neighbors "
                    f"{self.graph.in_neighbors(v)} at vertex {v!r}"
                )
            self._rules[v] = r
        return r


class PatternSpace:
    """Product pattern space: an independent allowed-symbol set per vertex."""

    def __init__(self, allowed: Callable[[Vertex], Sequence[int]], label: str = ""):
        self._allowed = allowed
        self.label = label or "product"

    def allowed(self, v: Vertex) -> tuple:
        syms = tuple(self._allowed(v))
        if not syms:
            raise ValueError(f"empty allowed set at vertex {v!r}")
        return syms

    @classmethod
    def full(cls, alphabet: Alphabet) -> "PatternSpace":
        syms = tuple(alphabet.symbols())
        return cls(lambda v: syms, label="full")

    def random_configuration(
        self, domain: Iterable[Vertex], rng: random.Random
    ) -> "Configuration":
        return Configuration(
            {v: rng.choice(self.allowed(v)) for v in sort_vertices(domain)}
        )


@dataclass(frozen=True)
class Configuration:
    """Finite partial assignment vertex -> symbol."""

    values: dict

    @property
    def domain(self) -> frozenset:
        return frozenset(self.values)

    def __getitem__(self, v: Vertex) -> int:
        return self.values[v]

    def restrict(self, vs: Iterable[Vertex]) -> "Configuration":
        return Configuration({v: self.values[v] for v in vs})


@dataclass(frozen=True)
class LightCone:
    """Backward dependency cone of a window: per-step layers and their union."""

    window: tuple
    horizon: int
    layers: tuple  # layers[t] = exact input set of the t-fold composition
    union: tuple

    def needed(self, horizon: int) -> set:
        """Union of layers 0..horizon: the cells a trajectory of that length reads."""
        out: set = set()
        for layer in self.layers[: horizon + 1]:
            out.update(layer)
        return out


@dataclass(frozen=True)
class PanoramaResult:
    """Determined-cell layers of a window under repeated observation."""

    window: tuple
    horizon: int
    layers: tuple  # layers[t] = cells determined by observations 0..t
    cone: tuple
    pattern_count: int
    engine: str


# -- cones, propagation, evaluation -----------------------------------------


def light_cone(sys: SymbolicSystem, window: Iterable[Vertex], horizon: int) -> LightCone:
    """Input cone of a window, by backward composition of rule inputs."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    w = sort_vertices(window)
    layers = [w]
    current = set(w)
    union = set(w)
    for _ in range(horizon):
        nxt: set = set()
        for v in current:
            nxt.update(sys.rule(v).inputs)
        layers.append(sort_vertices(nxt))
        current = nxt
        union |= nxt
    return LightCone(window=w, horizon=horizon, layers=tuple(layers), union=sort_vertices(union))


def propagation(sys: SymbolicSystem, v: Vertex, horizon: int) -> list:
    """Cumulative cone sizes rho(0..horizon) at one vertex.

    Also re-checks the containment of each cumulative cone in the matching
    graph ball, which is guaranteed by network consistency.
    """
    cone = light_cone(sys, [v], horizon)
    sizes = []
    seen: set = set()
    for t, layer in enumerate(cone.layers):
        seen.update(layer)
        sizes.append(len(seen))
        ball = sys.graph.ball_members([v], t)
        if not seen <= ball:
            raise RuntimeError(f"cone escaped ball at t={t}: {seen - ball}")
    return sizes


def evaluate(
    sys: SymbolicSystem, x: Configuration, window: Iterable[Vertex], horizon: int
) -> list:
    """Trajectory [x_W, Phi(x)_W, ..., Phi^T(x)_W] by exact cone evaluation.

    The configuration must cover the full light cone; otherwise the error
    names the missing vertices.  Values outside the cone are never read.
    """
    w = sort_vertices(window)
    cone = light_cone(sys, w, horizon)
    missing = [v for v in cone.union if v not in x.values]
    if missing:
        raise InsufficientDomainError(missing)
    values = {v: x.values[v] for v in cone.union}
    traj = [{u: values[u] for u in w}]
    for t in range(1, horizon + 1):
        needed = cone.needed(horizon - t)
        new_values = {}
        for v in needed:
            rule = sys.rule(v)
            new_values[v] = rule.fn(tuple(values[u] for u in rule.inputs))
        values = new_values
        traj.append({u: values[u] for u in w})
    return traj


# -- exhaustive panorama enumeration -----------------------------------------


def _pattern_count(space: PatternSpace, cells: Sequence[Vertex]) -> int:
    n = 1
    for v in cells:
        n *= len(space.allowed(v))
    return n


def panorama(
    sys: SymbolicSystem,
    space: PatternSpace,
    window: Iterable[Vertex],
    horizon: int,
    max_patterns: int = DEFAULT_PATTERN_CAP,
    _engine: Optional[str] = None,
) -> PanoramaResult:
    """Determined-cell layers of a window, by exhaustive enumeration.

    A cone cell is in layer t exactly when every pair of cone patterns with
    equal observed trajectories through time t agrees at that cell.  Cells
    outside the cone cannot influence the observations and are never listed.
    Layer t is computed over the cone of horizon t, which decides the same
    quantifier as any larger cone because the space is a product.
    """
    w = sort_vertices(window)
    cone = light_cone(sys, w, horizon)
    count = _pattern_count(space, cone.union)
    if count > max_patterns:
        raise EnumerationCapError(count, max_patterns)
    layers = []
    engines = set()
    cum: set = set()
    for t, layer in enumerate(cone.layers):
        cum.update(layer)
        tracked = sort_vertices(cum)
        det, engine = _determined_at_horizon(sys, space, w, t, tracked, _engine)
        layers.append(sort_vertices(det))
        engines.add(engine)
    return PanoramaResult(
        window=w,
        horizon=horizon,
        layers=tuple(layers),
        cone=cone.union,
        pattern_count=count,
        engine="+".join(sorted(engines)),
    )


def posexpansive_window_check(
    sys: SymbolicSystem,
    space: PatternSpace,
    window: Iterable[Vertex],
    t_max: int,
    target: Iterable[Vertex],
    max_patterns: int = DEFAULT_PATTERN_CAP,
) -> dict:
    """Find the least horizon at which a target set is fully determined.

    Layers are nested, so each target cell only needs its first determined
    horizon; the answer is the largest of those.  A positive answer is a
    finite certificate; a negative one only reports what stayed undetermined
    through t_max.
    """
    w = sort_vertices(window)
    target = set(target)
    cone = light_cone(sys, w, t_max)
    count = _pattern_count(space, cone.union)
    if count > max_patterns:
        raise EnumerationCapError(count, max_patterns)
    remaining = set(target)
    cum: set = set()
    for t, layer in enumerate(cone.layers):
        cum.update(layer)
        tracked = sort_vertices(remaining & cum)
        if tracked:
            det, _ = _determined_at_horizon(sys, space, w, t, tracked, None)
            remaining -= set(det)
        if not remaining:
            return {"covered": True, "first_t": t, "missing": ()}
    return {
        "covered": False,
        "first_t": None,
        "missing": sort_vertices(remaining),
    }


def _determined_at_horizon(sys, space, window, horizon, tracked, engine):
    """Which tracked cone cells are pinned down by observations 0..horizon.

    Exact for product spaces: enumeration runs over the horizon's own cone
    and every cell outside it is unconstrained.
    """
    cone = light_cone(sys, window, horizon)
    count = _pattern_count(space, cone.union)
    if engine == "dict" or (engine is None and count <= _DICT_ENGINE_MAX):
        return (
            _determined_dict_engine(sys, space, window, horizon, cone, tracked),
            "dict",
        )
    try:
        return (
            _determined_packed_engine(sys, space, window, horizon, cone, tracked),
            "packed",
        )
    except _PackedEngineUnavailable:
        if engine == "packed":
            raise
        if count > _DICT_ENGINE_MAX * 64:
            raise EnumerationCapError(count, _DICT_ENGINE_MAX * 64)
        return (
            _determined_dict_engine(sys, space, window, horizon, cone, tracked),
            "dict",
        )


def _determined_dict_engine(sys, space, window, horizon, cone, tracked):
    """Reference engine: materialize every pattern, group by trajectory."""
    cells = cone.union
    allowed = [space.allowed(v) for v in cells]
    pos = {v: i for i, v in enumerate(cells)}
    tracked = [v for v in tracked if v in pos]
    tracked_idx = [pos[v] for v in tracked]
    groups: dict = {}
    for pattern in itertools.product(*allowed):
        x = Configuration(dict(zip(cells, pattern)))
        traj = evaluate(sys, x, window, horizon)
        obs = tuple(tuple(step[u] for u in window) for step in traj)
        entry = groups.get(obs)
        if entry is None:
            groups[obs] = (pattern, [True] * len(tracked_idx))
        else:
            ref, ok = entry
            for j, i in enumerate(tracked_idx):
                if ok[j] and pattern[i] != ref[i]:
                    ok[j] = False
    per_vertex = [True] * len(tracked)
    for _, ok in groups.values():
        for j in range(len(tracked)):
            per_vertex[j] = per_vertex[j] and ok[j]
    return frozenset(v for j, v in enumerate(tracked) if per_vertex[j])


class _PackedEngineUnavailable(Exception):
    pass


def _rule_flat_table(sys: SymbolicSystem, v: Vertex) -> np.ndarray:
    """Rule as a flat array over row-major input tuples (first input most
    significant)."""
    rule = sys.rule(v)
    k = sys.alphabet.size
    arity = len(rule.inputs)
    size = k**arity
    if size > _TABLE_CAP:
        raise _PackedEngineUnavailable(f"rule table at {v!r} needs {size} entries")
    out = np.empty(size, dtype=np.int64)
    for idx, args in enumerate(itertools.product(range(k), repeat=arity)):
        out[idx] = rule.fn(args)
    return out


def _composed_tables(sys, space, window, horizon):
    """Observation value of each window cell at each time, as a lookup table
    over the mixed-radix enumeration of its own input layer.

    Returns per-t entries (domain cells, packed-observation table) where the
    observation packs the window cells' symbols in sorted order, first cell
    most significant.
    """
    k = sys.alphabet.size
    rule_tabs: dict = {}
    memo: dict = {}

    def radices(cells):
        return [len(space.allowed(v)) for v in cells]

    def strides(rads):
        out = [1] * len(rads)
        for i in range(len(rads) - 2, -1, -1):
            out[i] = out[i + 1] * rads[i + 1]
        return out

    def build(t, v):
        got = memo.get((t, v))
        if got is not None:
            return got
        if t == 0:
            dom = (v,)
            arr = np.array(space.allowed(v), dtype=np.int64)
            memo[(t, v)] = (dom, arr)
            return dom, arr
        rule = sys.rule(v)
        subs = [build(t - 1, u) for u in rule.inputs]
        dom = sort_vertices(set().union(*(set(d) for d, _ in subs)))
        rads = radices(dom)
        size = math.prod(rads)
        if size > _TABLE_CAP:
            raise _PackedEngineUnavailable(
                f"composed table for ({t}, {v!r}) needs {size} entries"
            )
        st = strides(rads)
        ar = np.arange(size, dtype=np.int64)
        digit = {
            c: (ar // st[i]) % rads[i] for i, c in enumerate(dom)
        }
        args = []
        for sub_dom, sub_arr in subs:
            sub_rads = radices(sub_dom)
            sub_st = strides(sub_rads)
            sub_idx = np.zeros(size, dtype=np.int64)
            for i, c in enumerate(sub_dom):
                sub_idx += digit[c] * sub_st[i]
            args.append(sub_arr[sub_idx])
        rt = rule_tabs.get(v)
        if rt is None:
            rt = _rule_flat_table(sys, v)
            rule_tabs[v] = rt
        in_idx = np.zeros(size, dtype=np.int64)
        for a in args:
            in_idx = in_idx * k + a
        arr = rt[in_idx].astype(np.int64)
        memo[(t, v)] = (dom, arr)
        return dom, arr

    tables = []
    for t in range(horizon + 1):
        per_w = [build(t, u) for u in window]
        dom = sort_vertices(set().union(*(set(d) for d, _ in per_w)))
        rads = radices(dom)
        size = math.prod(rads)
        if size > _TABLE_CAP:
            raise _PackedEngineUnavailable(
                f"observation table at t={t} needs {size} entries"
            )
        st = strides(rads)
        ar = np.arange(size, dtype=np.int64)
        digit = {c: (ar // st[i]) % rads[i] for i, c in enumerate(dom)}
        obs = np.zeros(size, dtype=np.int64)
        for sub_dom, sub_arr in per_w:
            sub_rads = radices(sub_dom)
            sub_st = strides(sub_rads)
            sub_idx = np.zeros(size, dtype=np.int64)
            for i, c in enumerate(sub_dom):
                sub_idx += digit[c] * sub_st[i]
            obs = obs * k + sub_arr[sub_idx]
        tables.append((dom, obs))
    return tables


def _merge_obs_tables(tables, space, obs_radix, cap):
    """Greedily merge consecutive per-step tables over their union domains.

    Fewer, cache-resident lookup tables mean fewer gather passes in the hot
    loop; each merged table yields the packed observation block of its time
    steps directly.
    """
    merged = []
    i = 0
    while i < len(tables):
        dom = set(tables[i][0])
        j = i + 1
        size = math.prod(len(space.allowed(c)) for c in dom)
        while j < len(tables):
            trial = dom | set(tables[j][0])
            trial_size = math.prod(len(space.allowed(c)) for c in trial)
            if trial_size > cap:
                break
            dom = trial
            size = trial_size
            j += 1
        gdom = sort_vertices(dom)
        rads = [len(space.allowed(c)) for c in gdom]
        strides = [1] * len(gdom)
        for p in range(len(gdom) - 2, -1, -1):
            strides[p] = strides[p + 1] * rads[p + 1]
        ar = np.arange(size, dtype=np.int64)
        digit = {c: (ar // s) % r for c, s, r in zip(gdom, strides, rads)}
        garr = np.zeros(size, dtype=np.int64)
        for t in range(i, j):
            sub_dom, sub_arr = tables[t]
            sub_rads = [len(space.allowed(c)) for c in sub_dom]
            sub_st = [1] * len(sub_dom)
            for p in range(len(sub_dom) - 2, -1, -1):
                sub_st[p] = sub_st[p + 1] * sub_rads[p + 1]
            sub_idx = np.zeros(size, dtype=np.int64)
            for c, s in zip(sub_dom, sub_st):
                sub_idx += digit[c] * s
            garr = garr * obs_radix + sub_arr[sub_idx]
        merged.append({"dom": gdom, "arr": garr, "width": j - i})
        i = j
    return merged


def _thread_count() -> int:
    import os

    env = os.environ.get("SYMDYN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(2, os.cpu_count() or 1))


def _determined_packed_engine(sys, space, window, horizon, cone, tracked):
    """Grouped-counting engine for large enumerations.

    The pattern space over the cone is enumerated as an outer x inner
    product: the low-stride cell block is materialized once as vectorized
    digit arrays, while the high-stride block is walked in an outer loop
    contributing scalar offsets.  Each pattern's observed trajectory packs
    into one integer key via merged lookup tables, and a cell is determined
    exactly when no key co-occurs with two different cell values.  Outer
    iterations may run on a few threads; integer count accumulation keeps
    the result independent of the partitioning.
    """
    cells = cone.union
    tracked = [v for v in tracked if v in set(cells)]
    rads = [len(space.allowed(v)) for v in cells]
    obs_radix = sys.alphabet.size ** len(window)
    keyspace = obs_radix ** (horizon + 1)
    if keyspace > _KEYSPACE_CAP:
        raise _PackedEngineUnavailable(f"trajectory key space {keyspace} too large")
    count_cells = sum(keyspace * len(space.allowed(v)) for v in tracked)
    if count_cells > 2**25:
        raise _PackedEngineUnavailable(
            f"presence tables need {count_cells} counters"
        )
    tables = _composed_tables(sys, space, window, horizon)
    groups = _merge_obs_tables(tables, space, obs_radix, cap=2**18)

    # split cells into outer | inner with the inner product near _CHUNK
    split = len(cells)
    inner_count = 1
    while split > 0 and inner_count * rads[split - 1] <= _CHUNK:
        split -= 1
        inner_count *= rads[split]
    outer_cells = cells[:split]
    inner_cells = cells[split:]
    inner_rads = rads[split:]

    inner_digits = {}
    stride = inner_count
    idx = np.arange(inner_count, dtype=np.int64)
    for c, r in zip(inner_cells, inner_rads):
        stride //= r
        inner_digits[c] = ((idx // stride) % r).astype(np.int32)
    del idx

    max_rad = max(rads)
    small_key = keyspace * max_rad <= 2**16
    key_dtype = np.uint16 if small_key else np.int32

    # scale each group's packed block by the radix width of the later groups
    suffix = 0
    scales = [0] * len(groups)
    for gi in range(len(groups) - 1, -1, -1):
        scales[gi] = obs_radix**suffix
        suffix += groups[gi]["width"]
    prepared = []
    for g, scale in zip(groups, scales):
        dom = g["dom"]
        dom_rads = [len(space.allowed(c)) for c in dom]
        dom_strides = [1] * len(dom)
        for p in range(len(dom) - 2, -1, -1):
            dom_strides[p] = dom_strides[p + 1] * dom_rads[p + 1]
        inner_part = np.zeros(inner_count, dtype=np.int32)
        outer_terms = []
        for c, s in zip(dom, dom_strides):
            if c in inner_digits:
                inner_part += inner_digits[c] * np.int32(s)
            else:
                outer_terms.append((c, s))
        prepared.append(
            (inner_part, outer_terms, (g["arr"] * scale).astype(key_dtype))
        )

    rad_of = dict(zip(cells, rads))
    tracked_inner = {
        v: inner_digits[v].astype(key_dtype) for v in tracked if v in inner_digits
    }
    outer_combos = list(itertools.product(*[range(r) for r in rads[:split]]))

    def run(combos):
        local = {v: np.zeros(keyspace * rad_of[v], dtype=np.int64) for v in tracked}
        ibuf = np.empty(inner_count, dtype=np.int32)
        for outer in combos:
            digit_of = dict(zip(outer_cells, outer))
            key = None
            for inner_part, outer_terms, scaled in prepared:
                offset = sum(digit_of[c] * s for c, s in outer_terms)
                np.add(inner_part, np.int32(offset), out=ibuf)
                block = scaled[ibuf]
                if key is None:
                    key = block
                else:
                    key += block
            for v in tracked:
                rv = rad_of[v]
                e = key * key_dtype(rv)
                if v in tracked_inner:
                    e += tracked_inner[v]
                else:
                    e += key_dtype(digit_of[v])
                local[v] += np.bincount(e, minlength=keyspace * rv)
        return local

    workers = min(_thread_count(), len(outer_combos)) or 1
    if workers > 1:
        import threading

        slices = [outer_combos[w::workers] for w in range(workers)]
        results: list = [None] * workers
        threads = []
        for w, sl in enumerate(slices):
            def target(w=w, sl=sl):
                results[w] = run(sl)

            th = threading.Thread(target=target)
            th.start()
            threads.append(th)
        for th in threads:
            th.join()
        counts = {v: sum(res[v] for res in results) for v in tracked}
    else:
        counts = run(outer_combos)

    determined = []
    for v in tracked:
        rv = rad_of[v]
        presence = counts[v].reshape(keyspace, rv) > 0
        if bool((presence.sum(axis=1) <= 1).all()):
            determined.append(v)
    return frozenset(determined)


# -- sensitivity, equicontinuity, factor chains ------------------------------


def sensitivity_certificate(
    sys: SymbolicSystem, v: Vertex, radius: int, t_max: int
) -> Optional[dict]:
    """Witness that the cone of v escapes the ball B(v, radius).

    Such an escape at some time t certifies that the propagation at v grows
    past the ball, which is the finite content of v-sensitivity.
    """
    if radius < 0 or t_max < 0:
        raise ValueError("radius and t_max must be nonnegative")
    ball = sys.graph.ball_members([v], radius)
    cone = light_cone(sys, [v], t_max)
    for t, layer in enumerate(cone.layers):
        escaped = [u for u in layer if u not in ball]
        if escaped:
            return {"t": t, "witness": sort_vertices(escaped)[0]}
    return None


@dataclass(frozen=True)
class EnvelopeReport:
    certified: bool
    envelope: Optional[tuple]
    certified_horizon: int
    reach: Optional[int]
    cone_sizes: tuple
    trajectory_count: Optional[int]
    reason: str = ""


def equicontinuity_envelope(
    sys: SymbolicSystem,
    window: Iterable[Vertex],
    t_probe: int,
    r_cap: int,
    max_patterns: int = DEFAULT_PATTERN_CAP,
) -> EnvelopeReport:
    """Look for a finite cell set whose values pin the window's trajectory.

    The candidate is the cumulative cone; it certifies only when it stops
    growing over the second half of the probe horizon, and the certificate is
    then checked by evaluating every full-alphabet pattern on it.  A finite
    non-divergent probe without stabilization is reported as uncertified.
    """
    w = sort_vertices(window)
    cone = light_cone(sys, w, t_probe)
    cum: set = set()
    sizes = []
    for layer in cone.layers:
        cum.update(layer)
        sizes.append(len(cum))
    stable_from = t_probe // 2
    stabilized = all(sizes[t] == sizes[t_probe] for t in range(stable_from, t_probe + 1))
    reach = None
    for r in range(r_cap + 1):
        if set(cone.union) <= sys.graph.ball_members(w, r):
            reach = r
            break
    if not stabilized or reach is None:
        reason = "cone still growing" if not stabilized else "cone beyond reach cap"
        return EnvelopeReport(
            certified=False,
            envelope=None,
            certified_horizon=t_probe,
            reach=reach,
            cone_sizes=tuple(sizes),
            trajectory_count=None,
            reason=reason,
        )
    envelope = cone.union
    full = PatternSpace.full(sys.alphabet)
    count = _pattern_count(full, envelope)
    if count > max_patterns:
        raise EnumerationCapError(count, max_patterns)
    trajectories = set()
    for pattern in itertools.product(
        *[full.allowed(v) for v in envelope]
    ):
        x = Configuration(dict(zip(envelope, pattern)))
        traj = evaluate(sys, x, w, t_probe)
        trajectories.add(tuple(tuple(step[u] for u in w) for step in traj))
    return EnvelopeReport(
        certified=True,
        envelope=envelope,
        certified_horizon=t_probe,
        reach=reach,
        cone_sizes=tuple(sizes),
        trajectory_count=len(trajectories),
    )


def odometer_factor_chain(
    sys: SymbolicSystem,
    space: PatternSpace,
    windows: Sequence[Iterable[Vertex]],
    horizon: int,
    max_patterns: int = DEFAULT_PATTERN_CAP,
) -> list:
    """Finite-horizon factor-chain certificate over nested windows.

    For each window: its envelope must certify, the observed trajectory set
    over the horizon is enumerated from the pattern space, and the
    drop-first-observation shift is checked to act as a permutation on the
    horizon-truncated trajectories.
    """
    prepared = [sort_vertices(w) for w in windows]
    for a, b in zip(prepared, prepared[1:]):
        if not set(a) <= set(b):
            raise ValueError("windows must be nested")
    results = []
    for w in prepared:
        env = equicontinuity_envelope(sys, w, horizon, r_cap=horizon + len(w) + 1,
                                      max_patterns=max_patterns)
        if not env.certified:
            raise NotEquicontinuousError(f"window {w} has no certified envelope")
        count = _pattern_count(space, env.envelope)
        if count > max_patterns:
            raise EnumerationCapError(count, max_patterns)
        trajs = set()
        for pattern in itertools.product(
            *[space.allowed(v) for v in env.envelope]
        ):
            x = Configuration(dict(zip(env.envelope, pattern)))
            traj = evaluate(sys, x, w, horizon)
            trajs.add(tuple(tuple(step[u] for u in w) for step in traj))
        forward = {}
        backward = {}
        functional = injective = True
        for tr in trajs:
            head, tail = tr[:horizon], tr[1:]
            if head in forward and forward[head] != tail:
                functional = False
            if tail in backward and backward[tail] != head:
                injective = False
            forward[head] = tail
            backward[tail] = head
        closed = set(forward) == set(backward)
        results.append(
            {
                "window": w,
                "envelope": env.envelope,
                "trajectory_count": len(trajs),
                "shift_is_permutation": functional and injective and closed,
            }
        )
    return results


# -- rule properness and subsymmetry -----------------------------------------


def check_proper(rule: LocalRule, alphabet: Alphabet, max_entries: int = 2**16) -> dict:
    """Exhaustively test that every input coordinate is essential.

    For each coordinate the report carries either a witness pair of input
    tuples differing only there with different outputs, or marks it
    inessential.
    """
    k = alphabet.size
    arity = len(rule.inputs)
    total = k**arity
    if total > max_entries:
        raise EnumerationCapError(total, max_entries)
    witnesses: dict = {}
    inessential = []
    for i in range(arity):
        found = None
        for args in itertools.product(range(k), repeat=arity):
            base = rule.fn(args)
            for s in range(k):
                if s == args[i]:
                    continue
                other = args[:i] + (s,) + args[i + 1 :]
                if rule.fn(other) != base:
                    found = (args, other)
                    break
            if found:
                break
        if found:
            witnesses[i] = found
        else:
            inessential.append(i)
    return {"proper": not inessential, "witnesses": witnesses, "inessential": inessential}


def subsymmetry_check(
    sys: SymbolicSystem,
    tau: Subisometry,
    probe: Iterable[Vertex],
    space: PatternSpace,
    samples: int = 20,
    seed: int = 0,
) -> dict:
    """Probe-level evidence that tau is a subsymmetry of the system.

    Checks (i) injectivity and edge preservation on the probe set, (ii) that
    the pattern space looks the same along tau, and (iii) commutation of the
    update map with the induced shift on sampled configurations.
    """
    probe = sort_vertices(set(probe))
    images = [tau(v) for v in probe]
    injective = len(set(images)) == len(images)
    edge_violations = []
    for v in probe:
        for w in probe:
            if sys.graph.has_edge(v, w) != sys.graph.has_edge(tau(v), tau(w)):
                edge_violations.append((v, w))
    space_violations = [
        v for v in probe if set(space.allowed(v)) != set(space.allowed(tau(v)))
    ]
    rng = random.Random(seed)
    commute_violations = []
    domain: set = set()
    for v in probe:
        domain.update(tau(u) for u in sys.rule(v).inputs)
        domain.update(sys.rule(tau(v)).inputs)
    domain = sort_vertices(domain)
    for s in range(samples):
        x = space.random_configuration(domain, rng)
        for v in probe:
            rule_v = sys.rule(v)
            shifted_then_updated = rule_v.fn(
                tuple(x.values[tau(u)] for u in rule_v.inputs)
            )
            rule_tv = sys.rule(tau(v))
            updated_then_shifted = rule_tv.fn(
                tuple(x.values[u] for u in rule_tv.inputs)
            )
            if shifted_then_updated != updated_then_shifted:
                commute_violations.append({"sample": s, "vertex": v})
    passed = (
        injective
        and not edge_violations
        and not space_violations
        and not commute_violations
    )
    return {
        "passed": passed,
        "injective": injective,
        "edge_violations": edge_violations,
        "space_violations": space_violations,
        "commute_violations": commute_violations,
        "samples": samples,
        "seed": seed,
    }


# -- built-in systems ---------------------------------------------------------


def odometer_system(m: Sequence[int]):
    """Adding machine with per-cell moduli m (last entry repeats forever).

    Cell 0 always increments; cell n increments exactly when every lower
    cell is at its top value.  Returns the system and its pattern space.
    """
    from .netgraph import odometer_graph

    m = tuple(int(x) for x in m)
    if not m or any(x < 1 for x in m):
        raise ValueError("moduli must be positive")
    size = max(2, max(m))
    alphabet = Alphabet(size)

    def modulus(v):
        return m[v] if v < len(m) else m[-1]

    def rule_at(v):
        mv = modulus(v)

        def fn(args, _v=v, _mv=mv):
            if all(args[n] == modulus(n) - 1 for n in range(_v)):
                return (args[_v] + 1) % _mv
            return args[_v]

        return LocalRule(inputs=tuple(range(v + 1)), fn=fn, label=f"odometer[{v}]")

    sys = SymbolicSystem(alphabet, odometer_graph(), rule_at, label="odometer")
    space = PatternSpace(lambda v: tuple(range(modulus(v))), label="odometer")
    return sys, space


def full_shift(alphabet_size: int, universe: str = "N"):
    """One- or two-sided full shift: every cell copies its successor."""
    from .netgraph import unit_shift_graph, unit_shift_graph_z

    alphabet = Alphabet(alphabet_size)
    graph = unit_shift_graph() if universe == "N" else unit_shift_graph_z()

    def rule_at(v):
        return LocalRule(inputs=(v + 1,), fn=lambda args: args[0], label="copy")

    sys = SymbolicSystem(alphabet, graph, rule_at, label=f"full_shift_{universe}")
    return sys, PatternSpace.full(alphabet)


def ca_on_zd(alphabet_size: int, offsets: Sequence[tuple], table: Sequence[int]):
    """Translation-invariant automaton on the grid graph of the offsets.

    The flat table is row-major over input tuples ordered like `offsets`.
    """
    offsets = [tuple(o) for o in offsets]
    d = len(offsets[0])
    if any(len(o) != d for o in offsets):
        raise ValueError("offsets must share one dimension")
    alphabet = Alphabet(alphabet_size)
    flat = list(table)
    k = alphabet_size
    if len(flat) != k ** len(offsets):
        raise ValueError("table length does not match offsets")

    def ins(v):
        return [tuple(a + b for a, b in zip(v, off)) for off in offsets]

    def outs(v):
        return [tuple(a - b for a, b in zip(v, off)) for off in offsets]

    graph = Digraph(ins, outs, universe={"family": "ca_zd", "D": d, "offsets": offsets})

    def rule_at(v):
        def fn(args):
            idx = 0
            for a in args:
                idx = idx * k + a
            return flat[idx]

        return LocalRule(inputs=tuple(ins(v)), fn=fn, label="ca")

    sys = SymbolicSystem(alphabet, graph, rule_at, label=f"ca_z{d}")
    return sys, PatternSpace.full(alphabet)


def shift_extension(base_sys: SymbolicSystem, base_space: PatternSpace, psi):
    """Stack copies of a system along an extra integer level.

    The state at (v, n) updates to psi(base update of level n at v, current
    value at (v, n+1)); the level shift (v, n) -> (v, n+1) commutes with the
    update by construction.  Base vertices must be plain integers.
    """

    def ins(vn):
        v, n = vn
        base_inputs = base_sys.rule(v).inputs
        return [(u, n) for u in base_inputs] + [(v, n + 1)]

    graph = Digraph(
        ins, None, universe={"family": "shift_extension", "base": base_sys.label}
    )

    def rule_at(vn):
        v, n = vn
        base_rule = base_sys.rule(v)
        width = len(base_rule.inputs)

        def fn(args, _rule=base_rule, _w=width):
            return psi(_rule.fn(tuple(args[:_w])), args[_w])

        return LocalRule(inputs=tuple(ins(vn)), fn=fn, label="shift_ext")

    sys = SymbolicSystem(
        base_sys.alphabet, graph, rule_at, label=f"{base_sys.label}+shift"
    )
    space = PatternSpace(lambda vn: base_space.allowed(vn[0]), label="shift_ext")
    tau = Subisometry(map=lambda vn: (vn[0], vn[1] + 1), label="level_shift")
    return sys, space, tau


def system_from_descriptor(desc: dict):
    """Build a system (and its pattern space) from a JSON descriptor.

    Named forms: {"system": "odometer", "m": [...]}, {"system": "full_shift",
    "alphabet": k, "universe": "N"|"Z"}, {"system": "counterexample"},
    {"system": "ca_zd", "alphabet": k, "offsets": [...], "table": [...]}.
    Explicit form: {"alphabet": k, "graph": {...}, "rules": [{"vertex": v,
    "inputs": [...], "table": [...]}]} with row-major tables.
    """
    from .netgraph import graph_from_descriptor

    name = desc.get("system")
    if name == "odometer":
        return odometer_system(desc.get("m", [2]))
    if name == "full_shift":
        return full_shift(int(desc.get("alphabet", 2)), desc.get("universe", "N"))
    if name == "counterexample":
        from .counterexample import cex_rules, cex_space

        return cex_rules(), cex_space()
    if name == "ca_zd":
        return ca_on_zd(
            int(desc["alphabet"]),
            [tuple(o) for o in desc["offsets"]],
            desc["table"],
        )
    if "rules" in desc:
        alphabet = Alphabet(int(desc["alphabet"]))
        graph = graph_from_descriptor(desc["graph"])
        rules = {}
        for entry in desc["rules"]:
            v = entry["vertex"]
            v = tuple(v) if isinstance(v, list) else v
            inputs = [
                tuple(u) if isinstance(u, list) else u for u in entry["inputs"]
            ]
            rules[v] = LocalRule.from_table(inputs, entry["table"], alphabet.size)

        def rule_at(v):
            if v not in rules:
                raise KeyError(f"no rule for vertex {v!r}")
            return rules[v]

        sys = SymbolicSystem(alphabet, graph, rule_at, label="explicit")
        return sys, PatternSpace.full(alphabet)
    raise ValueError(f"unknown system descriptor: {desc!r}")
