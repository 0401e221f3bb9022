"""Admissible-path rules shared (as *data*, not code) by engine and oracle.

``ForwardDag`` restricts propagation to ribs that strictly increase the
hop distance from the source, which makes the path set finite on any
lattice.  ``MaxHops`` instead admits every simple path of bounded hop
count.  Engine and oracle each interpret these rules with their own
traversal code so that they stay independent cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ForwardDag:
    pass


@dataclass(frozen=True)
class MaxHops:
    hops: int

    def __post_init__(self):
        if self.hops < 1:
            raise ValueError("MaxHops bound must be positive")


FORWARD_DAG = ForwardDag()

Admissibility = ForwardDag | MaxHops
