"""Systems: rules, cones, evaluation, panoramas, certificates."""

from __future__ import annotations

import itertools
import random

import pytest

from symdyn import netgraph as ng
from symdyn import symsys as ss
from symdyn import counterexample as cx


@pytest.fixture
def full_shift_n():
    return ss.full_shift(2)


@pytest.fixture
def binary_odometer():
    return ss.odometer_system([2])


@pytest.fixture
def cex():
    return cx.cex_rules(), cx.cex_space()


# -- properness ----------------------------------------------------------------


def test_xor_rule_is_proper():
    rule = ss.LocalRule(inputs=(0, 1), fn=lambda a: a[0] ^ a[1])
    rep = ss.check_proper(rule, ss.Alphabet(2))
    assert rep["proper"]
    assert set(rep["witnesses"]) == {0, 1}
    for i, (a, b) in rep["witnesses"].items():
        assert a[i] != b[i]
        assert all(a[j] == b[j] for j in range(2) if j != i)
        assert rule.fn(a) != rule.fn(b)


def test_projection_rule_is_not_proper():
    rule = ss.LocalRule(inputs=(0, 1), fn=lambda a: a[0])
    rep = ss.check_proper(rule, ss.Alphabet(2))
    assert not rep["proper"]
    assert rep["inessential"] == [1]


def test_junction_rule_is_proper(cex):
    sysx, _ = cex
    rep = ss.check_proper(sysx.rule(0), ss.Alphabet(4))
    assert rep["proper"]


def test_check_proper_cap():
    rule = ss.LocalRule(inputs=tuple(range(20)), fn=lambda a: a[0])
    with pytest.raises(ss.EnumerationCapError):
        ss.check_proper(rule, ss.Alphabet(4))


def test_network_consistency_enforced(z2):
    bad = ss.SymbolicSystem(
        ss.Alphabet(2),
        ng.unit_shift_graph(),
        lambda v: ss.LocalRule(inputs=(v,), fn=lambda a: a[0]),
    )
    with pytest.raises(ss.NetworkConsistencyError):
        bad.rule(0)


# -- light cones and propagation -------------------------------------------------


def test_cone_odometer_fixed(binary_odometer):
    sys_, _ = binary_odometer
    cone = ss.light_cone(sys_, [0], 10)
    assert cone.union == (0,)
    assert all(layer == (0,) for layer in cone.layers)


def test_cone_full_shift_marches(full_shift_n):
    sys_, _ = full_shift_n
    cone = ss.light_cone(sys_, [0], 4)
    assert cone.union == (0, 1, 2, 3, 4)
    assert cone.layers == ((0,), (1,), (2,), (3,), (4,))


def test_cone_counterexample(cex):
    sysx, _ = cex
    assert ss.light_cone(sysx, [0], 2).union == (0, 1, 2, 3, 6)


def test_propagation_profiles(binary_odometer, full_shift_n, cex):
    osys, _ = binary_odometer
    assert ss.propagation(osys, 0, 8) == [1] * 9
    fs, _ = full_shift_n
    assert ss.propagation(fs, 0, 6) == list(range(1, 8))
    sysx, _ = cex
    rho = ss.propagation(sysx, 0, 10)
    assert rho[:3] == [1, 3, 5]
    assert all(a <= b for a, b in zip(rho, rho[1:]))
    # cone never escapes the graph ball
    for t in (2, 5, 9):
        cone = ss.light_cone(sysx, [0], t)
        assert set(cone.union) <= sysx.graph.ball_members([0], t)


# -- evaluation -------------------------------------------------------------------


def test_evaluate_all_zero_counterexample(cex):
    sysx, _ = cex
    cone = ss.light_cone(sysx, [0], 6)
    x = ss.Configuration({v: 0 for v in cone.union})
    traj = ss.evaluate(sysx, x, [0], 6)
    assert all(step[0] == 0 for step in traj)


def test_evaluate_binary_odometer_carry(binary_odometer):
    sys_, _ = binary_odometer
    traj = ss.evaluate(sys_, ss.Configuration({0: 1, 1: 1}), [0, 1], 1)
    assert traj[0] == {0: 1, 1: 1}
    assert traj[1] == {0: 0, 1: 0}


def test_evaluate_full_shift_slides(full_shift_n):
    sys_, _ = full_shift_n
    traj = ss.evaluate(sys_, ss.Configuration({0: 0, 1: 1, 2: 0}), [0], 2)
    assert [step[0] for step in traj] == [0, 1, 0]


def test_evaluate_missing_domain_names_vertices(full_shift_n):
    sys_, _ = full_shift_n
    with pytest.raises(ss.InsufficientDomainError) as err:
        ss.evaluate(sys_, ss.Configuration({0: 0, 1: 1}), [0], 3)
    assert set(err.value.missing) == {2, 3}


def test_evaluate_ignores_cells_outside_cone(cex):
    sysx, spx = cex
    rng = random.Random(31)
    cone = ss.light_cone(sysx, [0], 5)
    wide = sysx.graph.ball_members([0], 9)
    for _ in range(10):
        x = spx.random_configuration(wide, rng)
        base = ss.evaluate(sysx, x, [0], 5)
        mutated = dict(x.values)
        outside = [v for v in wide if v not in set(cone.union)]
        for v in rng.sample(outside, k=min(5, len(outside))):
            choices = [s for s in spx.allowed(v) if s != mutated[v]]
            if choices:
                mutated[v] = rng.choice(choices)
        assert ss.evaluate(sysx, ss.Configuration(mutated), [0], 5) == base


# -- panoramas ---------------------------------------------------------------------


def test_panorama_full_shift_layers(full_shift_n):
    sys_, space = full_shift_n
    result = ss.panorama(sys_, space, [0], 3)
    assert result.layers == ((0,), (0, 1), (0, 1, 2), (0, 1, 2, 3))


def test_panorama_odometer_stuck(binary_odometer):
    sys_, space = binary_odometer
    result = ss.panorama(sys_, space, [0], 10)
    assert all(layer == (0,) for layer in result.layers)


def test_panorama_horizon_zero_full_space(full_shift_n):
    sys_, space = full_shift_n
    result = ss.panorama(sys_, space, [0, 3], 0)
    assert result.layers == ((0, 3),)


def test_panorama_layers_nested(cex):
    sysx, spx = cex
    result = ss.panorama(sysx, spx, [0], 4)
    for a, b in zip(result.layers, result.layers[1:]):
        assert set(a) <= set(b)
    assert set(result.layers[-1]) <= set(result.cone)


def test_panorama_engines_agree(cex):
    sysx, spx = cex
    for horizon in (2, 3, 4):
        d = ss.panorama(sysx, spx, [0], horizon, _engine="dict")
        p = ss.panorama(sysx, spx, [0], horizon, _engine="packed")
        assert d.layers == p.layers
    fs, fsp = ss.full_shift(3)
    d = ss.panorama(fs, fsp, [0], 3, _engine="dict")
    p = ss.panorama(fs, fsp, [0], 3, _engine="packed")
    assert d.layers == p.layers


def test_panorama_against_pairwise_bruteforce(cex):
    """Every determined cell really is forced: re-verify the quantifier by
    comparing all pattern pairs directly on a small instance."""
    sysx, spx = cex
    horizon = 2
    cone = ss.light_cone(sysx, [0], horizon)
    cells = cone.union
    patterns = list(itertools.product(*[spx.allowed(v) for v in cells]))
    trajs = []
    for pat in patterns:
        x = ss.Configuration(dict(zip(cells, pat)))
        traj = ss.evaluate(sysx, x, [0], horizon)
        trajs.append(tuple(step[0] for step in traj))
    determined = set(cells)
    for i, pi in enumerate(patterns):
        for j in range(i + 1, len(patterns)):
            if trajs[i] == trajs[j]:
                pj = patterns[j]
                for pos, v in enumerate(cells):
                    if pi[pos] != pj[pos]:
                        determined.discard(v)
    result = ss.panorama(sysx, spx, [0], horizon)
    assert set(result.layers[horizon]) == determined


def test_panorama_cap():
    fs, fsp = ss.full_shift(2)
    with pytest.raises(ss.EnumerationCapError):
        ss.panorama(fs, fsp, [0], 40, max_patterns=2**20)


def test_window_check_covers_target(cex):
    sysx, spx = cex
    res = ss.posexpansive_window_check(sysx, spx, [0], 4, [0, 1, 2])
    assert res == {"covered": True, "first_t": 2, "missing": ()}


def test_window_check_odometer_never_covers(binary_odometer):
    sys_, space = binary_odometer
    res = ss.posexpansive_window_check(sys_, space, [0], 10, [1])
    assert not res["covered"]
    assert res["missing"] == (1,)


def test_window_check_trivial_subwindow(full_shift_n):
    sys_, space = full_shift_n
    res = ss.posexpansive_window_check(sys_, space, [0, 1], 0, [1])
    assert res == {"covered": True, "first_t": 0, "missing": ()}


# -- sensitivity and equicontinuity ---------------------------------------------


def test_sensitivity_full_shift(full_shift_n):
    sys_, _ = full_shift_n
    assert ss.sensitivity_certificate(sys_, 0, 3, 10) == {"t": 4, "witness": 4}


def test_sensitivity_odometer_none(binary_odometer):
    sys_, _ = binary_odometer
    assert ss.sensitivity_certificate(sys_, 0, 0, 12) is None


def test_sensitivity_counterexample(cex):
    sysx, _ = cex
    cert = ss.sensitivity_certificate(sysx, 0, 2, 4)
    assert cert is not None
    assert cert["witness"] not in sysx.graph.ball_members([0], 2)


def test_envelope_odometer(binary_odometer):
    sys_, _ = binary_odometer
    rep = ss.equicontinuity_envelope(sys_, [0, 1], 16, 8)
    assert rep.certified
    assert rep.envelope == (0, 1)
    assert rep.trajectory_count == 4


def test_envelope_divergence(full_shift_n, cex):
    fs, _ = full_shift_n
    assert not ss.equicontinuity_envelope(fs, [0], 8, 20).certified
    sysx, _ = cex
    assert not ss.equicontinuity_envelope(sysx, [3], 8, 30).certified


def test_factor_chain_binary(binary_odometer):
    sys_, space = binary_odometer
    chain = ss.odometer_factor_chain(sys_, space, [[0], [0, 1]], 8)
    assert [c["trajectory_count"] for c in chain] == [2, 4]
    assert all(c["shift_is_permutation"] for c in chain)
    assert all(c["envelope"] == c["window"] for c in chain)


def test_factor_chain_mixed_radix():
    sys_, space = ss.odometer_system([3, 2])
    chain = ss.odometer_factor_chain(sys_, space, [[0, 1]], 12)
    assert chain[0]["trajectory_count"] == 6
    assert chain[0]["shift_is_permutation"]


def test_factor_chain_counts_divide(binary_odometer):
    sys_, space = binary_odometer
    chain = ss.odometer_factor_chain(sys_, space, [[0], [0, 1], [0, 1, 2]], 16)
    counts = [c["trajectory_count"] for c in chain]
    assert all(b % a == 0 for a, b in zip(counts, counts[1:]))


def test_factor_chain_rejects_sensitive_systems(full_shift_n):
    fs, fsp = full_shift_n
    with pytest.raises(ss.NotEquicontinuousError):
        ss.odometer_factor_chain(fs, fsp, [[0]], 8)


# -- subsymmetries -----------------------------------------------------------------


def test_subsymmetry_full_shift_translation():
    fz, fzs = ss.full_shift(2, universe="Z")
    rep = ss.subsymmetry_check(fz, ng.shift_tau(1), [-2, -1, 0, 1, 2], fzs,
                               samples=15, seed=3)
    assert rep["passed"]


def test_subsymmetry_identity(cex):
    sysx, spx = cex
    ident = ng.Subisometry(map=lambda v: v, label="id")
    rep = ss.subsymmetry_check(sysx, ident, [0, 1, 2, 3], spx, samples=5, seed=0)
    assert rep["passed"]


def test_subsymmetry_counterexample_shift_breaks(cex):
    sysx, spx = cex
    rep = ss.subsymmetry_check(sysx, ng.shift_tau(1), [0, 1, 2, 3], spx,
                               samples=5, seed=0)
    assert not rep["passed"]
    assert rep["edge_violations"]


def test_shift_extension_has_level_shift_symmetry(cex):
    sysx, spx = cex
    ext, extspace, tau = ss.shift_extension(sysx, spx, lambda a, b: a ^ b)
    probe = [(0, 0), (1, 0), (2, 1), (0, 2), (3, -1)]
    rep = ss.subsymmetry_check(ext, tau, probe, extspace, samples=12, seed=7)
    assert rep["passed"]


# -- descriptors --------------------------------------------------------------------


def test_system_descriptor_roundtrip():
    desc = {
        "alphabet": 2,
        "graph": {"edges": [[1, 0], [0, 1]]},
        "rules": [
            {"vertex": 0, "inputs": [1], "table": [1, 0]},
            {"vertex": 1, "inputs": [0], "table": [0, 1]},
        ],
    }
    sys_, space = ss.system_from_descriptor(desc)
    traj = ss.evaluate(sys_, ss.Configuration({0: 0, 1: 0}), [0, 1], 2)
    assert traj == [{0: 0, 1: 0}, {0: 1, 1: 0}, {0: 1, 1: 1}]


def test_named_descriptors():
    for desc in (
        {"system": "odometer", "m": [2, 2]},
        {"system": "full_shift", "alphabet": 3},
        {"system": "counterexample"},
    ):
        sys_, space = ss.system_from_descriptor(desc)
        assert space.allowed(0)
