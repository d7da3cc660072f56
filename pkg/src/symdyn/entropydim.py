"""Pattern-count entropy over graph balls and along subisometry orbits.

Everything here is exact for product pattern spaces: the number of patterns
on a finite region is the product of the per-cell allowed counts, so log
counts are plain sums.  All inf/sup-style quantities are finite-window
proxies computed over the probe the caller supplies, never limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .netgraph import Ball, Digraph, Subisometry, Vertex, sort_vertices
from .symsys import PatternSpace


class NonDisjointBallsError(Exception):
    """A weak-independence family contained overlapping balls."""


@dataclass(frozen=True)
class EntropyEstimate:
    """Per-radius pattern-density report around one vertex.

    ratios[i] = log2(pattern count on B(v, radii[i])) / |B(v, radii[i])|;
    the proxies are the min/max ratio over the upper half of the window.
    """

    center: Vertex
    radii: tuple
    log2_counts: tuple
    ball_sizes: tuple
    ratios: tuple
    lower_proxy: float
    upper_proxy: float


def pattern_log_count(space: PatternSpace, region: Iterable[Vertex]) -> float:
    """log2 of the number of patterns on a finite region (exact, product form)."""
    return float(sum(math.log2(len(space.allowed(v))) for v in set(region)))


def ball_entropy(
    space: PatternSpace, g: Digraph, v: Vertex, r_min: int, r_max: int
) -> EntropyEstimate:
    if not (2 <= r_min < r_max):
        raise ValueError("need 2 <= r_min < r_max")
    radii = tuple(range(r_min, r_max + 1))
    log2_counts = []
    ball_sizes = []
    for r in radii:
        members = g.ball_members([v], r)
        ball_sizes.append(len(members))
        log2_counts.append(pattern_log_count(space, members))
    ratios = tuple(c / s for c, s in zip(log2_counts, ball_sizes))
    tail = ratios[len(ratios) // 2 :]
    return EntropyEstimate(
        center=v,
        radii=radii,
        log2_counts=tuple(log2_counts),
        ball_sizes=tuple(ball_sizes),
        ratios=ratios,
        lower_proxy=min(tail),
        upper_proxy=max(tail),
    )


def weak_independence_report(
    space: PatternSpace, g: Digraph, ball_families: Sequence[Sequence[Ball]]
) -> dict:
    """Pattern-count additivity over families of pairwise disjoint balls.

    For each family the ratio compares the joint log count on the union
    against the sum of per-ball log counts; product spaces are exactly
    additive, so the ratio is 1 whenever the sum is nonzero.  The report's
    epsilon is the minimum ratio over all families.
    """
    per_family = []
    for fam in ball_families:
        seen: set = set()
        for ball in fam:
            members = set(ball.members)
            if seen & members:
                raise NonDisjointBallsError(
                    f"balls overlap at {sort_vertices(seen & members)[:4]}"
                )
            seen |= members
        joint = pattern_log_count(space, seen)
        parts = sum(pattern_log_count(space, b.members) for b in fam)
        ratio = joint / parts if parts > 0 else 1.0
        per_family.append(
            {
                "balls": len(fam),
                "joint_log2": joint,
                "sum_log2": parts,
                "ratio": ratio,
                "additive": math.isclose(joint, parts, rel_tol=0, abs_tol=1e-9),
            }
        )
    epsilon = min((f["ratio"] for f in per_family), default=1.0)
    return {"families": per_family, "epsilon": epsilon}


def orbit_region(tau: Subisometry, base: Iterable[Vertex], n: int) -> set:
    """Union of the first n+1 tau-images of a finite base set."""
    region = set(base)
    current = set(base)
    for _ in range(n):
        current = {tau(v) for v in current}
        region |= current
    return region


def tau_entropy_profile(
    space: PatternSpace, tau: Subisometry, base: Iterable[Vertex], n_max: int
) -> dict:
    """Per-N pattern growth along a subisometry orbit of a finite base set.

    values[N-1] = log2 |patterns on union of tau^0..tau^N images| / N; the
    log counts themselves are also reported since their increments carry the
    bits-per-step reading.
    """
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    base = sort_vertices(base)
    region = set(base)
    current = set(base)
    ns = []
    log2_counts = []
    values = []
    region_sizes = []
    for n in range(1, n_max + 1):
        current = {tau(v) for v in current}
        region |= current
        c = pattern_log_count(space, region)
        ns.append(n)
        log2_counts.append(c)
        values.append(c / n)
        region_sizes.append(len(region))
    return {
        "n": ns,
        "log2_counts": log2_counts,
        "values": values,
        "region_sizes": region_sizes,
    }
