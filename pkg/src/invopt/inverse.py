"""Top-level solver: break points, slope queries, the multiplier binary
search with its case analysis, and recovery of the optimal adjusted costs.

Every optimal answer is certified before it is returned: the adjusted costs
hit the target value exactly, the dual certificate of optimality of the
given solution is re-checked arithmetically, and an independent forward flow
solve under the adjusted costs reproduces the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import mcf, subproblem
from .numeric import NEG_INF, POS_INF, Rational, is_finite
from .subproblem import (
    DualSolution,
    InverseInstance,
    eval_psi_with_duals,
    recover_duals,
    segment_extent,
    separation_bound,
)

ZERO = Fraction(0)


@dataclass(frozen=True)
class BreakPoints:
    """Feasibility interval ends; +/-inf sentinels when a side never empties."""

    z_left: object
    z_right: object


@dataclass
class SearchState:
    tau_low: Rational
    tau_high: Rational
    iteration: int = 0


@dataclass(frozen=True)
class InverseSolution:
    z_star: Rational
    c_star: tuple[Rational, ...]
    objective: Rational
    alpha: tuple[Rational, ...]
    beta: tuple[Rational, ...]
    pi: tuple[Rational, ...]
    certificate: tuple[Rational, ...]
    psi_star: Rational
    breaks: BreakPoints
    delta: Rational
    big_delta: Rational
    case: str
    iterations: int
    k_minus: Optional[Rational]
    k_plus: Optional[Rational]
    status: str = "optimal"


@dataclass(frozen=True)
class InfeasibleInverse:
    case: str
    probe_slope: Rational
    breaks: BreakPoints
    delta: Rational
    big_delta: Rational
    iterations: int = 0
    status: str = "infeasible"


def delta(instance: InverseInstance) -> Rational:
    """Target slope: cost of the supported part of x0 minus the target value."""
    supported = sum(
        (instance.costs[j] * instance.x0[j] for j in instance.j_bar), ZERO
    )
    return supported - instance.target


def big_delta(instance: InverseInstance) -> Rational:
    return separation_bound(instance)


def search_radius(instance: InverseInstance) -> Rational:
    """Initial half-width bracketing every turning coordinate."""
    n = len(instance.arcs)
    return Fraction((n + len(instance.j_bar)) * instance.d_max + 1)


def _feasible(instance, z) -> bool:
    breve = subproblem.build_breve_dz(instance, z)
    if breve.known_infeasible:
        return False
    return mcf.feasibility_check(breve.network)


def lbp(instance: InverseInstance):
    """Left break point, or the -inf sentinel when the region never empties."""
    half = separation_bound(instance) / 2
    low = -search_radius(instance)
    if _feasible(instance, low):
        return NEG_INF
    high = ZERO
    while high - low >= half:
        mid = (high + low) / 2
        if _feasible(instance, mid):
            high = mid
        else:
            low = mid
    z0, z1 = high, high + half
    y0 = subproblem.eval_psi(instance, z0)
    y1 = subproblem.eval_psi(instance, z1)
    assert y0.feasible and y1.feasible
    left, _ = segment_extent(instance, z0, z1, y0.y, y1.y)
    assert is_finite(left), "break point exists on this side"
    assert _feasible(instance, left), "snapped break point must be feasible"
    assert not _feasible(instance, left - half), "break point snapped too early"
    return left


def rbp(instance: InverseInstance):
    """Right break point, mirror image of the left search."""
    half = separation_bound(instance) / 2
    high = search_radius(instance)
    if _feasible(instance, high):
        return POS_INF
    low = ZERO
    while high - low >= half:
        mid = (high + low) / 2
        if _feasible(instance, mid):
            low = mid
        else:
            high = mid
    z0, z1 = low, low - half
    y0 = subproblem.eval_psi(instance, z0)
    y1 = subproblem.eval_psi(instance, z1)
    assert y0.feasible and y1.feasible
    _, right = segment_extent(instance, z0, z1, y0.y, y1.y)
    assert is_finite(right), "break point exists on this side"
    assert _feasible(instance, right), "snapped break point must be feasible"
    assert not _feasible(instance, right + half), "break point snapped too early"
    return right


def _slope_probe(instance, breaks: BreakPoints, z):
    """Duals at z, shifted half a separation inward when z is a break point."""
    half = separation_bound(instance) / 2
    if is_finite(breaks.z_left) and z == breaks.z_left:
        probe = z + half
    elif is_finite(breaks.z_right) and z == breaks.z_right:
        probe = z - half
    else:
        probe = Fraction(z)
    point, flow = eval_psi_with_duals(instance, probe)
    if not point.feasible:
        raise ValueError(f"slope query outside the feasible interval: {z}")
    duals = recover_duals(instance, probe, point, flow)
    return duals, probe, point


def slope_at(instance: InverseInstance, breaks: BreakPoints, z) -> Rational:
    """Slope of the value function at z (one-sided at the break points)."""
    duals, _, _ = _slope_probe(instance, breaks, z)
    return duals.slope


def iteration_bound(instance: InverseInstance) -> int:
    """Ceil of log2(initial width / separation)."""
    width_over_delta = (
        2 * (len(instance.arcs) + len(instance.j_bar)) * instance.d_max + 2
    ) * (2 * len(instance.j_bar) * instance.x0_max) ** 2
    return max(1, (width_over_delta - 1).bit_length())


def _tc_case(breaks: BreakPoints) -> str:
    left, right = is_finite(breaks.z_left), is_finite(breaks.z_right)
    if left and right:
        return "1.3"
    if not left and right:
        return "2.3"
    if left and not right:
        return "3.3"
    return "4.3"


@dataclass(frozen=True)
class RecoveryInfo:
    c_star: tuple[Rational, ...]
    alpha: tuple[Rational, ...]
    beta: tuple[Rational, ...]
    pi: tuple[Rational, ...]
    k_minus: Optional[Rational]
    k_plus: Optional[Rational]
    lam: Optional[Rational]


def _violated_cut(instance, z) -> frozenset:
    """Node set certifying infeasibility of the sub-problem at z."""
    breve = subproblem.build_breve_dz(instance, z)
    outcome = mcf.solve(breve.network)
    assert isinstance(outcome, mcf.Infeasible), "cut requested at a feasible point"
    return outcome.cut


def _cut_ray(instance, cut):
    """Unbounded dual direction read off a violated cut.

    Returns (alpha_hat, beta_hat, pi_hat, v0, v1) where v0 + v1*z is the cut
    slack; the direction is dual-feasible for the homogeneous system and
    changes the slope at rate -v1 per unit step.
    """
    n = len(instance.arcs)
    alpha_hat = [ZERO] * n
    beta_hat = [ZERO] * n
    pi_hat = tuple(Fraction(-1) if i in cut else ZERO for i in range(instance.node_count))
    v0, v1 = ZERO, ZERO
    for j, (tail, head) in enumerate(instance.arcs):
        entering = head in cut and tail not in cut
        leaving = tail in cut and head not in cut
        d = Fraction(instance.weights[j])
        x = instance.x0[j]
        if entering:
            alpha_hat[j] = Fraction(1)
            v0 -= d
            if x > 0:
                v1 += x
        elif leaving:
            if x > 0:
                beta_hat[j] = Fraction(1)
                v1 -= x
            v0 -= d if x > 0 else ZERO
    return tuple(alpha_hat), tuple(beta_hat), pi_hat, v0, v1


def recover_cost(instance: InverseInstance, z_star, breaks: Optional[BreakPoints] = None):
    """Optimal adjusted costs at the critical value: (c_star, alpha, beta, pi)."""
    if breaks is None:
        breaks = BreakPoints(lbp(instance), rbp(instance))
    info = _recover(instance, Fraction(z_star), breaks, delta(instance))
    return info.c_star, info.alpha, info.beta, info.pi


def _combine(instance, duals_list, lam_list):
    n = len(instance.arcs)
    alpha = [ZERO] * n
    beta = [ZERO] * n
    pi = [ZERO] * instance.node_count
    for duals, lam in zip(duals_list, lam_list):
        for j in range(n):
            alpha[j] += lam * duals.alpha[j]
            beta[j] += lam * duals.beta[j]
        for i in range(instance.node_count):
            pi[i] += lam * duals.pi[i]
    return alpha, beta, pi


def _recover(instance, z_star, breaks, target_slope) -> RecoveryInfo:
    half = separation_bound(instance) / 2
    at_left = is_finite(breaks.z_left) and z_star == breaks.z_left
    at_right = is_finite(breaks.z_right) and z_star == breaks.z_right

    k_minus = k_plus = None
    lam = None
    if at_left:
        plus, _, _ = _slope_probe(instance, breaks, breaks.z_left)
        k_plus = plus.slope
        assert k_plus <= target_slope, "left break point accepted with steep slope"
        if k_plus == target_slope:
            alpha, beta, pi = list(plus.alpha), list(plus.beta), list(plus.pi)
        else:
            cut = _violated_cut(instance, z_star - half)
            a_hat, b_hat, pi_hat, v0, v1 = _cut_ray(instance, cut)
            assert v0 + v1 * z_star == 0, "certifying cut is not tight at the break point"
            rate = -v1
            assert rate > 0, "cut ray cannot raise the slope"
            t = (target_slope - k_plus) / rate
            alpha = [a + t * ah for a, ah in zip(plus.alpha, a_hat)]
            beta = [b + t * bh for b, bh in zip(plus.beta, b_hat)]
            pi = [p + t * ph for p, ph in zip(plus.pi, pi_hat)]
    elif at_right:
        minus, _, _ = _slope_probe(instance, breaks, breaks.z_right)
        k_minus = minus.slope
        assert k_minus >= target_slope, "right break point accepted with shallow slope"
        if k_minus == target_slope:
            alpha, beta, pi = list(minus.alpha), list(minus.beta), list(minus.pi)
        else:
            cut = _violated_cut(instance, z_star + half)
            a_hat, b_hat, pi_hat, v0, v1 = _cut_ray(instance, cut)
            assert v0 + v1 * z_star == 0, "certifying cut is not tight at the break point"
            rate = -v1
            assert rate < 0, "cut ray cannot lower the slope"
            t = (target_slope - k_minus) / rate
            alpha = [a + t * ah for a, ah in zip(minus.alpha, a_hat)]
            beta = [b + t * bh for b, bh in zip(minus.beta, b_hat)]
            pi = [p + t * ph for p, ph in zip(minus.pi, pi_hat)]
    else:
        minus, _, _ = _slope_probe(instance, breaks, z_star - half)
        plus, _, _ = _slope_probe(instance, breaks, z_star + half)
        k_minus, k_plus = minus.slope, plus.slope
        assert k_plus <= target_slope <= k_minus, "critical value does not bracket"
        if k_minus == k_plus:
            # flat match: any point of the segment is optimal
            lam = ZERO
            alpha, beta, pi = list(plus.alpha), list(plus.beta), list(plus.pi)
        else:
            lam = (target_slope - k_plus) / (k_minus - k_plus)
            alpha, beta, pi = _combine(instance, (minus, plus), (lam, 1 - lam))

    for j in range(len(alpha)):
        overlap = min(alpha[j], beta[j])
        if overlap > 0:
            alpha[j] -= overlap
            beta[j] -= overlap
    c_star = tuple(
        c + a - b for c, a, b in zip(instance.costs, alpha, beta)
    )
    return RecoveryInfo(c_star, tuple(alpha), tuple(beta), tuple(pi),
                        k_minus, k_plus, lam)


def _chord(p_hi, p_lo):
    return (p_hi.psi - p_lo.psi) / (p_hi.z - p_lo.z)


def solve(instance: InverseInstance):
    """Binary search for the critical value, then cost recovery, certified."""
    breaks = BreakPoints(lbp(instance), rbp(instance))
    big = separation_bound(instance)
    half = big / 2
    target_slope = delta(instance)
    radius = search_radius(instance)
    bound = iteration_bound(instance)

    z_star = None
    case = None
    if not is_finite(breaks.z_left):
        tau_low = -radius
        k_end = slope_at(instance, breaks, tau_low)
        if k_end < target_slope:
            label = "2.2" if is_finite(breaks.z_right) else "4.2"
            return InfeasibleInverse(label, k_end, breaks, target_slope, big)
        k_low = k_end
    else:
        tau_low = breaks.z_left
        k_low = slope_at(instance, breaks, tau_low)
        if k_low <= target_slope:
            z_star = breaks.z_left
            case = "1.2" if is_finite(breaks.z_right) else "3.2"
    if not is_finite(breaks.z_right):
        tau_high = radius
        k_end = slope_at(instance, breaks, tau_high)
        if k_end > target_slope:
            label = "3.1" if is_finite(breaks.z_left) else "4.1"
            return InfeasibleInverse(label, k_end, breaks, target_slope, big)
        k_high = k_end
    else:
        tau_high = breaks.z_right
        k_high = slope_at(instance, breaks, tau_high)
        if k_high >= target_slope:
            z_star = breaks.z_right
            case = "2.1" if not is_finite(breaks.z_left) else "1.1"

    state = SearchState(tau_low, tau_high)
    while state.tau_high - state.tau_low > big and z_star is None:
        assert k_low >= target_slope >= k_high, "bracket invariant violated"
        zk = (state.tau_low + state.tau_high) / 2
        center, center_flow = eval_psi_with_duals(instance, zk)
        probes = [
            subproblem.eval_psi(instance, zk + offs * big / 4)
            for offs in (-2, -1, 1, 2)
        ]
        assert center.feasible and all(p.feasible for p in probes)
        k1 = _chord(center, probes[0])
        k2 = _chord(center, probes[1])
        k3 = _chord(probes[2], center)
        k4 = _chord(probes[3], center)
        if k1 == k2 and k3 == k4 and k2 != k3:
            if k4 >= target_slope:
                state.tau_low = probes[3].z
                k_low = k4
            elif k1 < target_slope:
                state.tau_high = probes[0].z
                k_high = k1
            else:
                z_star = zk
                case = _tc_case(breaks)
        else:
            kz = recover_duals(instance, zk, center, center_flow).slope
            if kz >= target_slope:
                state.tau_low = zk
                k_low = kz
            else:
                state.tau_high = zk
                k_high = kz
        state.iteration += 1
        assert state.iteration <= bound, "iteration bound exceeded"

    flat_duals = None
    if z_star is None:
        z_star, case, flat_duals = _locate_in_bracket(
            instance, breaks, state, target_slope, big)

    if flat_duals is not None:
        info = _info_from_single(instance, flat_duals)
    else:
        info = _recover(instance, z_star, breaks, target_slope)
    point, _ = eval_psi_with_duals(instance, z_star)
    assert point.feasible
    objective = sum(
        (Fraction(instance.weights[j]) * (info.alpha[j] + info.beta[j])
         for j in range(len(instance.arcs))),
        ZERO,
    )
    solution = InverseSolution(
        z_star=z_star,
        c_star=info.c_star,
        objective=objective,
        alpha=info.alpha,
        beta=info.beta,
        pi=info.pi,
        certificate=point.y,
        psi_star=point.psi,
        breaks=breaks,
        delta=target_slope,
        big_delta=big,
        case=case,
        iterations=state.iteration,
        k_minus=info.k_minus,
        k_plus=info.k_plus,
    )
    _certify_solution(instance, solution)
    return solution


def _locate_in_bracket(instance, breaks, state, target_slope, big):
    """Pin the critical value once the bracket is within one separation.

    Endpoints that happen to sit exactly on a kink are detected first (their
    point duals would be ambiguous); otherwise the two boundary lines meet at
    the unique interior kink.
    """
    half = big / 2
    for tau in (state.tau_low, state.tau_high):
        if (is_finite(breaks.z_left) and tau == breaks.z_left) or (
            is_finite(breaks.z_right) and tau == breaks.z_right
        ):
            continue
        if is_finite(breaks.z_left) and tau - half < breaks.z_left:
            continue
        if is_finite(breaks.z_right) and tau + half > breaks.z_right:
            continue
        verdict = subproblem.is_turning_coordinate(instance, tau)
        if isinstance(verdict, subproblem.Turning):
            assert verdict.k_right <= target_slope <= verdict.k_left, (
                "bracket endpoint kink must be the critical value"
            )
            return tau, _tc_case(breaks), None
    lo_duals, lo_probe, _ = _slope_probe(instance, breaks, state.tau_low)
    hi_duals, _, _ = _slope_probe(instance, breaks, state.tau_high)
    k_lo, k_hi = lo_duals.slope, hi_duals.slope
    if k_lo == k_hi:
        # a target-slope segment reached through an unbounded end
        assert k_lo == target_slope, "parallel boundary lines off the target slope"
        return lo_probe, "flat", lo_duals
    psi_lo = subproblem.eval_psi(instance, state.tau_low)
    psi_hi = subproblem.eval_psi(instance, state.tau_high)
    assert psi_lo.feasible and psi_hi.feasible
    z_star = (
        psi_hi.psi - psi_lo.psi - k_hi * state.tau_high + k_lo * state.tau_low
    ) / (k_lo - k_hi)
    assert state.tau_low <= z_star <= state.tau_high
    return z_star, _tc_case(breaks), None


def _info_from_single(instance, duals) -> RecoveryInfo:
    """Recovery from one dual solution whose slope already matches the target."""
    alpha = list(duals.alpha)
    beta = list(duals.beta)
    c_star = tuple(c + a - b for c, a, b in zip(instance.costs, alpha, beta))
    return RecoveryInfo(c_star, tuple(alpha), tuple(beta), duals.pi,
                        duals.slope, duals.slope, None)


def _certify_solution(instance, solution: InverseSolution):
    """Independent certification of every optimality claim, all exact."""
    value = sum(
        (c * x for c, x in zip(solution.c_star, instance.x0)), ZERO
    )
    assert value == instance.target, "adjusted costs miss the target value"
    for j, (tail, head) in enumerate(instance.arcs):
        reduced = solution.pi[tail] - solution.pi[head]
        if instance.x0[j] > 0:
            assert reduced == solution.c_star[j], "support arc not tight"
        else:
            assert reduced <= solution.c_star[j], "dual certificate violated"
        assert min(solution.alpha[j], solution.beta[j]) == 0
        assert solution.alpha[j] >= 0 and solution.beta[j] >= 0
    assert solution.objective == solution.psi_star - solution.delta * solution.z_star, (
        "perturbation cost disagrees with the dual optimum"
    )
    forward = forward_optimum(instance, solution.c_star)
    assert forward == instance.target, "forward re-solve misses the target"


def forward_optimum(instance: InverseInstance, costs) -> Rational:
    """Optimal value of the forward problem under the given costs.

    Capacities are capped at a bound no extreme optimal flow exceeds (and
    that keeps x0 feasible), so the bounded flow solver applies.
    """
    cap = sum((s for s in instance.supplies if s > 0), ZERO)
    cap = max(cap, Fraction(max(instance.x0)))
    net = mcf.FlowNetwork(
        instance.node_count,
        instance.supplies,
        tuple(
            mcf.Arc(t, h, Fraction(c), cap)
            for (t, h), c in zip(instance.arcs, costs)
        ),
    )
    outcome = mcf.solve(net)
    assert isinstance(outcome, mcf.McfResult), "x0 witnesses feasibility"
    return outcome.objective
