"""Parametric sub-problem machinery.

For a multiplier value z the dual sub-problem is a circulation LP whose
value function is concave and piecewise linear in z.  This module builds the
shifted bounded-flow problem for a given z, evaluates the value function
exactly through the flow solver, recovers the certifying duals and their
slope, extrapolates segment extents, and runs the five-point turning test.

The sign bookkeeping of the variable substitution (solver works on shifted
flows, consumers see raw sub-problem variables) lives entirely inside
`eval_psi`; everything downstream sees raw-space values only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from . import mcf
from .numeric import NEG_INF, POS_INF, Rational

ZERO = Fraction(0)


class InstanceError(ValueError):
    """Invalid problem data; the message names the violated requirement."""


@dataclass(frozen=True)
class Hitchcock:
    """Transportation structure: sources with supplies, terminals with demands."""

    supplies: tuple[int, ...]
    demands: tuple[int, ...]


@dataclass(frozen=True)
class ShortestPath:
    source: int
    sink: int
    path_arcs: tuple[int, ...]


@dataclass(frozen=True)
class GeneralNetwork:
    pass


Structure = Union[Hitchcock, ShortestPath, GeneralNetwork]


@dataclass(frozen=True)
class InverseInstance:
    """Validated problem data in node-arc incidence form.

    Arcs double as LP variables; supplies follow the out-minus-in
    convention.  Instances are immutable after validation, so concurrent
    evaluations at different z are safe.
    """

    structure: Structure
    node_count: int
    arcs: tuple[tuple[int, int], ...]
    supplies: tuple[Rational, ...]
    costs: tuple[Rational, ...]
    weights: tuple[int, ...]
    x0: tuple[int, ...]
    target: Rational

    @property
    def j_zero(self) -> tuple[int, ...]:
        return tuple(j for j, v in enumerate(self.x0) if v == 0)

    @property
    def j_bar(self) -> tuple[int, ...]:
        return tuple(j for j, v in enumerate(self.x0) if v > 0)

    @property
    def x0_max(self) -> int:
        return max(self.x0[j] for j in self.j_bar)

    @property
    def d_max(self) -> int:
        return max(self.weights)

    @property
    def cost_of_x0(self) -> Rational:
        return sum((c * v for c, v in zip(self.costs, self.x0)), ZERO)


def _incidence_balance(instance: InverseInstance, values) -> list:
    out_minus_in = [ZERO] * instance.node_count
    for (tail, head), v in zip(instance.arcs, values):
        out_minus_in[tail] += v
        out_minus_in[head] -= v
    return out_minus_in


def _validate(instance: InverseInstance) -> InverseInstance:
    n = len(instance.arcs)
    for name, vec in (("costs", instance.costs), ("weights", instance.weights),
                      ("x0", instance.x0)):
        if len(vec) != n:
            raise InstanceError(f"{name} must have one entry per arc")
    for j, d in enumerate(instance.weights):
        if d <= 0:
            raise InstanceError(f"weights must be positive (weight {j + 1} is {d})")
        if int(d) != d:
            raise InstanceError(f"weights must be integral (weight {j + 1} is {d})")
    for j, v in enumerate(instance.x0):
        if int(v) != v:
            raise InstanceError(f"feasible solution must be integral (entry {j + 1} is {v})")
        if v < 0:
            raise InstanceError(f"feasible solution must be nonnegative (entry {j + 1})")
    for j, (tail, head) in enumerate(instance.arcs):
        if not (0 <= tail < instance.node_count and 0 <= head < instance.node_count):
            raise InstanceError(f"arc {j + 1} references an unknown node")
        if tail == head:
            raise InstanceError(f"arc {j + 1} is a self-loop")
    if len(instance.supplies) != instance.node_count:
        raise InstanceError("one supply per node required")
    if sum(instance.supplies, ZERO) != 0:
        raise InstanceError("supplies must balance to zero")
    balance = _incidence_balance(instance, instance.x0)
    for node in range(instance.node_count):
        if balance[node] != instance.supplies[node]:
            raise InstanceError(
                f"feasible solution violates conservation at node {node + 1}"
            )
    if not instance.j_bar:
        raise InstanceError("feasible solution must have a positive component")
    return instance


def hitchcock_instance(supplies, demands, costs, weights, x0, target) -> InverseInstance:
    """Transportation instance; sources first, then terminals, arcs row-major."""
    m, n = len(supplies), len(demands)
    if m == 0 or n == 0:
        raise InstanceError("need at least one source and one terminal")
    for i, a in enumerate(supplies):
        if a <= 0:
            raise InstanceError(f"source supply {i + 1} must be positive")
    for j, b in enumerate(demands):
        if b <= 0:
            raise InstanceError(f"terminal demand {j + 1} must be positive")
    arcs = tuple((i, m + j) for i in range(m) for j in range(n))
    node_supplies = tuple(Fraction(a) for a in supplies) + tuple(
        -Fraction(b) for b in demands
    )
    return _validate(
        InverseInstance(
            Hitchcock(tuple(supplies), tuple(demands)),
            m + n,
            arcs,
            node_supplies,
            tuple(Fraction(c) for c in costs),
            tuple(weights),
            tuple(x0),
            Fraction(target),
        )
    )


def shortest_path_instance(node_count, arcs, source, sink, path_arcs,
                           costs, weights, target) -> InverseInstance:
    """Path-cost instance; the given arc sequence must be a simple s-t path."""
    if source == sink:
        raise InstanceError("source and sink must differ")
    x0 = [0] * len(arcs)
    at = source
    visited = {source}
    for idx, arc_id in enumerate(path_arcs):
        if not (0 <= arc_id < len(arcs)):
            raise InstanceError(f"path arc {arc_id + 1} does not exist")
        tail, head = arcs[arc_id]
        if tail != at:
            raise InstanceError(f"path is not connected at arc {arc_id + 1}")
        if head in visited:
            raise InstanceError("path must be simple (repeated node)")
        visited.add(head)
        at = head
        x0[arc_id] = 1
    if at != sink:
        raise InstanceError("path must end at the sink")
    supplies = [ZERO] * node_count
    supplies[source] = Fraction(1)
    supplies[sink] = Fraction(-1)
    instance = _validate(
        InverseInstance(
            ShortestPath(source, sink, tuple(path_arcs)),
            node_count,
            tuple(arcs),
            tuple(supplies),
            tuple(Fraction(c) for c in costs),
            tuple(weights),
            tuple(x0),
            Fraction(target),
        )
    )
    _reject_negative_cycles(instance)
    return instance


def general_instance(node_count, supplies, arcs, costs, weights, x0,
                     target) -> InverseInstance:
    return _validate(
        InverseInstance(
            GeneralNetwork(),
            node_count,
            tuple(arcs),
            tuple(Fraction(s) for s in supplies),
            tuple(Fraction(c) for c in costs),
            tuple(weights),
            tuple(x0),
            Fraction(target),
        )
    )


def _reject_negative_cycles(instance: InverseInstance):
    """Label-correcting pass; the forward problem requires no negative cycle."""
    labels = [ZERO] * instance.node_count
    for _round in range(instance.node_count + 1):
        changed = False
        for (tail, head), cost in zip(instance.arcs, instance.costs):
            if labels[tail] + cost < labels[head]:
                labels[head] = labels[tail] + cost
                changed = True
        if not changed:
            return
    raise InstanceError("cost vector admits a negative-cost cycle")


def separation_bound(instance: InverseInstance) -> Rational:
    """Minimum spacing of turning coordinates: 1 / (2 |J-bar| x0_max)^2."""
    return Fraction(1, (2 * len(instance.j_bar) * instance.x0_max) ** 2)


def zero_flow_interval(instance: InverseInstance) -> tuple[Rational, Rational]:
    """The z-range on which the zero circulation is trivially feasible."""
    lo = max(Fraction(-instance.weights[j], instance.x0[j]) for j in instance.j_bar)
    hi = min(Fraction(instance.weights[j], instance.x0[j]) for j in instance.j_bar)
    return lo, hi


def y_bounds(instance: InverseInstance, j: int, z: Rational) -> tuple[Rational, Rational]:
    """Box of the raw sub-problem variable j at multiplier z."""
    d = Fraction(instance.weights[j])
    if instance.x0[j] > 0:
        shift = instance.x0[j] * z
        return shift - d, shift + d
    return -d, ZERO


@dataclass(frozen=True)
class BreveProblem:
    """Shifted sub-problem ready for the flow solver.

    Raw variables relate to solver flows by y_j = x0_j - (flow_j + shift_j);
    `offset` is the cost of the shift, so the raw optimum is
    cost_of_x0 - offset - (flow optimum).
    """

    network: mcf.FlowNetwork
    shift: tuple[Rational, ...]
    offset: Rational
    known_infeasible: bool


def build_breve_dz(instance: InverseInstance, z: Rational) -> BreveProblem:
    z = Fraction(z)
    shift = []
    caps = []
    for j in range(len(instance.arcs)):
        d = Fraction(instance.weights[j])
        if instance.x0[j] > 0:
            shift.append((1 - z) * instance.x0[j] - d)
            caps.append(2 * d)
        else:
            shift.append(ZERO)
            caps.append(d)
    supplies = list(instance.supplies)
    for j in instance.j_bar:
        tail, head = instance.arcs[j]
        supplies[tail] -= shift[j]
        supplies[head] += shift[j]
    has_out = [False] * instance.node_count
    has_in = [False] * instance.node_count
    for tail, head in instance.arcs:
        has_out[tail] = True
        has_in[head] = True
    known_infeasible = any(
        (supplies[i] > 0 and not has_out[i]) or (supplies[i] < 0 and not has_in[i])
        for i in range(instance.node_count)
    )
    net = mcf.FlowNetwork(
        instance.node_count,
        tuple(supplies),
        tuple(
            mcf.Arc(t, h, c, cap)
            for (t, h), c, cap in zip(instance.arcs, instance.costs, caps)
        ),
    )
    offset = sum((instance.costs[j] * shift[j] for j in instance.j_bar), ZERO)
    return BreveProblem(net, tuple(shift), offset, known_infeasible)


@dataclass(frozen=True)
class PsiPoint:
    """One value-function sample: feasible with value and witness, or not."""

    z: Rational
    psi: Optional[Rational]
    y: Optional[tuple]

    @property
    def feasible(self) -> bool:
        return self.psi is not None


def eval_psi(instance: InverseInstance, z: Rational) -> PsiPoint:
    point, _ = eval_psi_with_duals(instance, z)
    return point


def eval_psi_with_duals(instance: InverseInstance, z: Rational):
    """PsiPoint plus the underlying flow result (None when infeasible)."""
    z = Fraction(z)
    breve = build_breve_dz(instance, z)
    result = None
    if not breve.known_infeasible:
        result = mcf.solve(breve.network)
    if result is None or isinstance(result, mcf.Infeasible):
        lo, hi = zero_flow_interval(instance)
        assert not lo <= z <= hi, "zero circulation must be feasible here"
        return PsiPoint(z, None, None), None
    y = tuple(
        instance.x0[j] - (result.flow[j] + breve.shift[j])
        for j in range(len(instance.arcs))
    )
    psi = sum((c * v for c, v in zip(instance.costs, y)), ZERO)
    assert psi == instance.cost_of_x0 - breve.offset - result.objective
    for node, net_flow in enumerate(_incidence_balance(instance, y)):
        assert net_flow == 0, "witness is not a circulation"
    for j, v in enumerate(y):
        lo, hi = y_bounds(instance, j, z)
        assert lo <= v <= hi, "witness violates its box"
    return PsiPoint(z, psi, y), result


@dataclass(frozen=True)
class DualSolution:
    """Certifying duals of the sub-problem at one z, with their slope.

    The multiplier of the sign constraint on zero-support variables is kept
    as the slack of the corresponding inequality (beta stays 0 there), which
    preserves the exact identity psi = sum d(alpha+beta) + z * slope.
    """

    pi: tuple[Rational, ...]
    alpha: tuple[Rational, ...]
    beta: tuple[Rational, ...]
    slope: Rational


def recover_duals(instance: InverseInstance, z: Rational, point: PsiPoint,
                  flow_result: mcf.McfResult) -> DualSolution:
    assert point.feasible, "duals exist only at feasible points"
    z = Fraction(z)
    pi = flow_result.potentials
    alpha, beta = [], []
    for j, (tail, head) in enumerate(instance.arcs):
        reduced = instance.costs[j] - pi[tail] + pi[head]
        if instance.x0[j] > 0:
            alpha.append(max(-reduced, ZERO))
            beta.append(max(reduced, ZERO))
        else:
            alpha.append(max(-reduced, ZERO))
            beta.append(ZERO)
    slope = sum(
        ((beta[j] - alpha[j]) * instance.x0[j] for j in instance.j_bar), ZERO
    )
    duals = DualSolution(pi, tuple(alpha), tuple(beta), slope)
    _certify_duals(instance, z, point, duals)
    return duals


def _certify_duals(instance, z, point, duals):
    """Dual feasibility, complementary slackness and strong duality, exactly."""
    total = ZERO
    for j, (tail, head) in enumerate(instance.arcs):
        lhs = duals.pi[tail] - duals.pi[head] - duals.alpha[j] + duals.beta[j]
        lo, hi = y_bounds(instance, j, z)
        if instance.x0[j] > 0:
            assert lhs == instance.costs[j], "dual equality violated"
        else:
            assert lhs <= instance.costs[j], "dual inequality violated"
        if duals.alpha[j] > 0:
            assert point.y[j] == lo, "slack lower bound with positive multiplier"
        if duals.beta[j] > 0:
            assert point.y[j] == hi, "slack upper bound with positive multiplier"
        total += instance.weights[j] * (duals.alpha[j] + duals.beta[j])
    assert point.psi == total + z * duals.slope, "strong duality identity violated"


def segment_extent(instance: InverseInstance, z0: Rational, z1: Rational,
                   y0, y1) -> tuple:
    """Exact extent of the linear piece through (z0, y0).

    Given optimal witnesses at two turning-free coordinates, the per-variable
    rates k_j determine how far the linear extrapolation stays within its
    boxes; empty case sets yield -inf / +inf sentinels.
    """
    z0, z1 = Fraction(z0), Fraction(z1)
    if z0 == z1:
        raise ValueError("segment extent needs two distinct coordinates")
    left, right = NEG_INF, POS_INF
    for j in range(len(instance.arcs)):
        k = (y0[j] - y1[j]) / (z0 - z1)
        d = Fraction(instance.weights[j])
        x = instance.x0[j]
        if x == 0:
            if k > 0:
                lo_cand = (k * z0 - d - y0[j]) / k
                hi_cand = (k * z0 - y0[j]) / k
            elif k < 0:
                lo_cand = (k * z0 - y0[j]) / k
                hi_cand = (k * z0 - d - y0[j]) / k
            else:
                continue
        else:
            if k > x:
                lo_cand = (k * z0 - d - y0[j]) / (k - x)
                hi_cand = (k * z0 + d - y0[j]) / (k - x)
            elif k < x:
                lo_cand = (k * z0 + d - y0[j]) / (k - x)
                hi_cand = (k * z0 - d - y0[j]) / (k - x)
            else:
                continue
        left = lo_cand if left == NEG_INF or lo_cand > left else left
        right = hi_cand if right == POS_INF or hi_cand < right else right
    return left, right


@dataclass(frozen=True)
class Turning:
    k_left: Rational
    k_right: Rational


@dataclass(frozen=True)
class NotTurning:
    k: Rational


class TurningTestError(RuntimeError):
    """An offset point of the five-point test left the feasible interval."""


def is_turning_coordinate(instance: InverseInstance, z: Rational):
    """Five-point kink test at z (offsets of a quarter and half separation)."""
    z = Fraction(z)
    step = separation_bound(instance) / 4
    center = eval_psi(instance, z)
    if not center.feasible:
        raise TurningTestError(f"sub-problem infeasible at {z}")
    chords = []
    for offs in (-2, -1, 1, 2):
        probe = eval_psi(instance, z + offs * step)
        if not probe.feasible:
            raise TurningTestError(
                f"offset point {z + offs * step} infeasible; "
                "z is within half a separation of a break point"
            )
        chords.append((center.psi - probe.psi) / (-offs * step))
    k1, k2, k3, k4 = chords
    if k1 == k2 and k3 == k4 and k2 != k3:
        return Turning(k1, k3)
    if k2 == k3:
        return NotTurning(k2)
    if k1 == k2:
        return NotTurning(k1)
    assert k3 == k4, "two kinks inside one separation radius"
    return NotTurning(k3)
