"""Bounded minimum-cost flow with exact rational data.

Successive shortest augmenting paths on reduced costs, so optimal node
potentials (the duals the cost-recovery step needs) come out of the solve
for free.  Negative arc costs are absorbed into the initial potentials by a
label-correcting pass; a negative-cost cycle is rejected as an input error.
Every returned result is re-checked against the reduced-cost optimality
conditions and the strong-duality identity before it leaves this module.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

from .numeric import Rational

ZERO = Fraction(0)


class McfError(ValueError):
    """Malformed network input — distinct from an infeasible instance."""


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    cost: Rational
    capacity: Rational


@dataclass(frozen=True)
class FlowNetwork:
    """Nodes with balanced supplies plus capacitated arcs (lower bounds 0)."""

    node_count: int
    supplies: tuple[Rational, ...]
    arcs: tuple[Arc, ...]

    def __post_init__(self):
        if self.node_count <= 0:
            raise McfError("network needs at least one node")
        if len(self.supplies) != self.node_count:
            raise McfError("one supply per node required")
        if sum(self.supplies, ZERO) != 0:
            raise McfError("supplies must balance to zero")
        for idx, arc in enumerate(self.arcs):
            if not (0 <= arc.tail < self.node_count and 0 <= arc.head < self.node_count):
                raise McfError(f"arc {idx} references unknown node")
            if arc.tail == arc.head:
                raise McfError(f"arc {idx} is a self-loop")
            if arc.capacity < 0:
                raise McfError(f"arc {idx} has negative capacity")


@dataclass(frozen=True)
class McfResult:
    flow: tuple[Rational, ...]
    objective: Rational
    potentials: tuple[Rational, ...]


@dataclass(frozen=True)
class Infeasible:
    """No conserving flow within bounds.

    `cut` is a node set whose net supply exceeds its outgoing capacity
    (Hoffman certificate), taken from the last shortest-path search.
    """

    cut: frozenset[int]


def network(node_count, supplies, arcs) -> FlowNetwork:
    """Convenience constructor coercing plain numbers to rationals."""
    return FlowNetwork(
        node_count,
        tuple(Fraction(s) for s in supplies),
        tuple(Arc(t, h, Fraction(c), Fraction(u)) for (t, h, c, u) in arcs),
    )


def solve(net: FlowNetwork):
    """Optimal flow and certifying potentials, or Infeasible with a cut."""
    flows, potentials, shipped, wanted, reachable = _augment_all(net)
    if shipped < wanted:
        return Infeasible(cut=frozenset(v for v in reachable if v < net.node_count))
    objective = sum((a.cost * f for a, f in zip(net.arcs, flows)), ZERO)
    # internal labels p keep c + p[u] - p[v] >= 0 on residual arcs; the
    # certifying potentials use the r = c - pi(tail) + pi(head) convention
    result = McfResult(
        tuple(flows), objective, tuple(-potentials[i] for i in range(net.node_count))
    )
    _check_certificate(net, result)
    return result


def feasibility_check(net: FlowNetwork) -> bool:
    """True iff some flow satisfies conservation and bounds."""
    _, _, shipped, wanted, _ = _augment_all(net)
    return shipped == wanted


def _augment_all(net: FlowNetwork):
    """Max-flow from a super source over cheapest paths.

    Returns (arc flows, potentials p with reduced costs c + p[u] - p[v] >= 0
    on residual arcs, shipped units, wanted units, last reachable set).
    The spec-facing potentials are pi = -p.
    """
    n = net.node_count
    source, sink = n, n + 1
    tails, heads, costs, caps = [], [], [], []
    for arc in net.arcs:
        tails.append(arc.tail)
        heads.append(arc.head)
        costs.append(arc.cost)
        caps.append(arc.capacity)
    wanted = ZERO
    for node, supply in enumerate(net.supplies):
        if supply > 0:
            tails.append(source)
            heads.append(node)
            costs.append(ZERO)
            caps.append(supply)
            wanted += supply
        elif supply < 0:
            tails.append(node)
            heads.append(sink)
            costs.append(ZERO)
            caps.append(-supply)
    flows = [ZERO] * len(tails)
    adjacency = [[] for _ in range(n + 2)]
    for idx in range(len(tails)):
        adjacency[tails[idx]].append((idx, True))
        adjacency[heads[idx]].append((idx, False))

    potentials = _initial_potentials(n + 2, tails, heads, costs, caps, flows)

    shipped = ZERO
    reachable: set[int] = set()
    while True:
        dist, parent, reachable = _dijkstra(
            source, n + 2, adjacency, tails, heads, costs, caps, flows, potentials
        )
        if sink not in reachable or shipped == wanted:
            break
        amount = None
        node = sink
        while node != source:
            idx, forward = parent[node]
            residual = caps[idx] - flows[idx] if forward else flows[idx]
            amount = residual if amount is None or residual < amount else amount
            node = tails[idx] if forward else heads[idx]
        node = sink
        while node != source:
            idx, forward = parent[node]
            if forward:
                flows[idx] += amount
                node = tails[idx]
            else:
                flows[idx] -= amount
                node = heads[idx]
        shipped += amount
        # unreached nodes shift by the full path length, otherwise arcs
        # leaving them could turn reduced-negative
        bound = dist[sink]
        for v in range(n + 2):
            d = dist.get(v, bound)
            potentials[v] += d if d < bound else bound
        if shipped == wanted:
            # one more search only to refresh `reachable` is unnecessary
            break
    arc_flows = flows[: len(net.arcs)]
    return arc_flows, potentials, shipped, wanted, reachable


def _initial_potentials(size, tails, heads, costs, caps, flows):
    """Label-correcting fixpoint from a virtual root (all labels 0).

    Produces p with c + p[u] - p[v] >= 0 on every residual arc; a negative
    cycle cannot reach a fixpoint and is reported as an input error.
    """
    p = [ZERO] * size
    for _round in range(size + 1):
        changed = False
        for idx in range(len(tails)):
            if caps[idx] - flows[idx] > 0:
                u, v = tails[idx], heads[idx]
                candidate = p[u] + costs[idx]
                if candidate < p[v]:
                    p[v] = candidate
                    changed = True
            if flows[idx] > 0:
                u, v = heads[idx], tails[idx]
                candidate = p[u] - costs[idx]
                if candidate < p[v]:
                    p[v] = candidate
                    changed = True
        if not changed:
            return p
    raise McfError("negative-cost cycle detected")


def _dijkstra(source, size, adjacency, tails, heads, costs, caps, flows, potentials):
    dist = {source: ZERO}
    parent = {}
    done = set()
    heap = [(ZERO, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for idx, forward in adjacency[u]:
            if forward:
                if caps[idx] - flows[idx] <= 0:
                    continue
                v = heads[idx]
                reduced = costs[idx] + potentials[u] - potentials[v]
            else:
                if flows[idx] <= 0:
                    continue
                v = tails[idx]
                reduced = -costs[idx] + potentials[u] - potentials[v]
            assert reduced >= 0, "potential invariant violated"
            candidate = d + reduced
            if v not in dist or candidate < dist[v]:
                dist[v] = candidate
                parent[v] = (idx, forward)
                heapq.heappush(heap, (candidate, v))
    return dist, parent, done


def _check_certificate(net: FlowNetwork, result: McfResult):
    """Conservation, bounds, reduced-cost optimality and strong duality."""
    balance = [ZERO] * net.node_count
    for arc, flow in zip(net.arcs, result.flow):
        assert 0 <= flow <= arc.capacity, "flow bound violated"
        balance[arc.tail] += flow
        balance[arc.head] -= flow
    for node in range(net.node_count):
        assert balance[node] == net.supplies[node], "conservation violated"
    dual_value = sum(
        (p * b for p, b in zip(result.potentials, net.supplies)), ZERO
    )
    for arc, flow in zip(net.arcs, result.flow):
        reduced = arc.cost - result.potentials[arc.tail] + result.potentials[arc.head]
        if reduced > 0:
            assert flow == 0, "positive reduced cost with positive flow"
        elif reduced < 0:
            assert flow == arc.capacity, "negative reduced cost below capacity"
            dual_value += reduced * arc.capacity
    assert dual_value == result.objective, "strong duality identity violated"
