"""Dense exact-arithmetic reference solvers, used only by the test suite.

Deliberately a different algorithm family from the flow-based fast path:
everything here works on dense rational matrices.  `enumerate_vertices_solve`
is the ground-truth basic-solution enumerator for small systems;
`simplex_solve` is an exact two-phase bounded-variable simplex that scales to
the inverse-problem LP (whose standard form is too wide to enumerate) and is
itself cross-checked against the enumerator in the tests.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction

from .numeric import Rational
from .subproblem import InverseInstance, PsiPoint

ZERO = Fraction(0)
ONE = Fraction(1)

#: Column cap for exhaustive enumeration and arc cap for the inverse oracle.
#: Exponential methods — raise via the environment only for the slow suite.
ENUM_CAP_ENV = "INVOPT_ORACLE_ENUM_CAP"
INVERSE_CAP_ENV = "INVOPT_ORACLE_CAP"
DEFAULT_ENUM_CAP = 12
DEFAULT_INVERSE_CAP = 8


@dataclass(frozen=True)
class DenseLp:
    """Equality-constrained LP with per-variable bounds (None = unbounded)."""

    rows: tuple[tuple[Rational, ...], ...]
    rhs: tuple[Rational, ...]
    objective: tuple[Rational, ...]
    lower: tuple
    upper: tuple
    maximize: bool = True


@dataclass(frozen=True)
class LpOptimal:
    value: Rational
    point: tuple[Rational, ...]


@dataclass(frozen=True)
class LpInfeasible:
    pass


@dataclass(frozen=True)
class LpUnbounded:
    pass


def _enum_cap() -> int:
    return int(os.environ.get(ENUM_CAP_ENV, DEFAULT_ENUM_CAP))


def _inverse_cap() -> int:
    return int(os.environ.get(INVERSE_CAP_ENV, DEFAULT_INVERSE_CAP))


def _rref(rows, rhs):
    """Row-reduce [A | b]; returns (reduced rows, reduced rhs) or None if inconsistent."""
    work = [list(row) + [r] for row, r in zip(rows, rhs)]
    ncols = len(rows[0]) if rows else 0
    pivot_row = 0
    for col in range(ncols):
        pivot = next((i for i in range(pivot_row, len(work)) if work[i][col] != 0), None)
        if pivot is None:
            continue
        work[pivot_row], work[pivot] = work[pivot], work[pivot_row]
        factor = work[pivot_row][col]
        work[pivot_row] = [v / factor for v in work[pivot_row]]
        for i in range(len(work)):
            if i != pivot_row and work[i][col] != 0:
                f = work[i][col]
                work[i] = [a - f * b for a, b in zip(work[i], work[pivot_row])]
        pivot_row += 1
    reduced_rows, reduced_rhs = [], []
    for row in work:
        if any(v != 0 for v in row[:-1]):
            reduced_rows.append(tuple(row[:-1]))
            reduced_rhs.append(row[-1])
        elif row[-1] != 0:
            return None
    return reduced_rows, reduced_rhs


def _solve_square(matrix, rhs):
    """Gaussian elimination; None when singular."""
    size = len(rhs)
    work = [list(matrix[i]) + [rhs[i]] for i in range(size)]
    for col in range(size):
        pivot = next((i for i in range(col, size) if work[i][col] != 0), None)
        if pivot is None:
            return None
        work[col], work[pivot] = work[pivot], work[col]
        factor = work[col][col]
        work[col] = [v / factor for v in work[col]]
        for i in range(size):
            if i != col and work[i][col] != 0:
                f = work[i][col]
                work[i] = [a - f * b for a, b in zip(work[i], work[col])]
    return [work[i][size] for i in range(size)]


def enumerate_vertices_solve(lp: DenseLp, max_columns: int | None = None, _rays: bool = True):
    """Exact optimum by exhaustive basic-solution enumeration.

    Valid whenever the feasible set is pointed (every variable without a
    finite bound must be basic in some vertex); our test LPs all have fully
    bounded variables.  Unboundedness is detected by a recession-direction
    pass over improving rays.
    """
    cap = max_columns if max_columns is not None else _enum_cap()
    n = len(lp.objective)
    if n > cap:
        raise ValueError(f"enumeration capped at {cap} columns (got {n}); "
                         f"raise {ENUM_CAP_ENV} for the slow suite")
    for lo, up in zip(lp.lower, lp.upper):
        if lo is not None and up is not None and lo > up:
            return LpInfeasible()
    sign = ONE if lp.maximize else -ONE
    reduced = _rref(lp.rows, lp.rhs) if lp.rows else ([], [])
    if reduced is None:
        return LpInfeasible()
    rows, rhs = reduced
    rank = len(rows)

    best = None
    if rank == 0:
        point = []
        for j in range(n):
            c = sign * lp.objective[j]
            if c > 0:
                if lp.upper[j] is None:
                    return LpUnbounded()
                point.append(lp.upper[j])
            elif c < 0:
                if lp.lower[j] is None:
                    return LpUnbounded()
                point.append(lp.lower[j])
            else:
                fallback = lp.lower[j] if lp.lower[j] is not None else lp.upper[j]
                point.append(fallback if fallback is not None else ZERO)
        value = sum((lp.objective[j] * point[j] for j in range(n)), ZERO)
        return LpOptimal(value, tuple(point))

    for basis in itertools.combinations(range(n), rank):
        matrix = [[rows[i][j] for j in basis] for i in range(rank)]
        nonbasic = [j for j in range(n) if j not in basis]
        choices = []
        for j in nonbasic:
            opts = [b for b in (lp.lower[j], lp.upper[j]) if b is not None]
            if lp.lower[j] is not None and lp.lower[j] == lp.upper[j]:
                opts = [lp.lower[j]]
            choices.append(opts)
        if any(not opts for opts in choices):
            continue
        for assignment in itertools.product(*choices):
            rhs_shift = list(rhs)
            for j, val in zip(nonbasic, assignment):
                if val != 0:
                    for i in range(rank):
                        rhs_shift[i] -= rows[i][j] * val
            solution = _solve_square(matrix, rhs_shift)
            if solution is None:
                break  # singular basis; no assignment helps
            point = [ZERO] * n
            for j, val in zip(nonbasic, assignment):
                point[j] = val
            feasible = True
            for idx, j in enumerate(basis):
                val = solution[idx]
                if (lp.lower[j] is not None and val < lp.lower[j]) or (
                    lp.upper[j] is not None and val > lp.upper[j]
                ):
                    feasible = False
                    break
                point[j] = val
            if not feasible:
                continue
            value = sum((lp.objective[j] * point[j] for j in range(n)), ZERO)
            if best is None or sign * value > sign * best.value:
                best = LpOptimal(value, tuple(point))
    if best is None:
        return LpInfeasible()
    if _rays:
        ray = enumerate_vertices_solve(_recession_lp(lp), max_columns=cap, _rays=False)
        assert isinstance(ray, LpOptimal)
        if ray.value > 0:
            return LpUnbounded()
    return best


def _recession_lp(lp: DenseLp) -> DenseLp:
    """Improving-ray test problem: directions boxed to [-1, 1] where unbounded."""
    lower = tuple(ZERO if lo is not None else -ONE for lo in lp.lower)
    upper = tuple(ZERO if up is not None else ONE for up in lp.upper)
    objective = tuple((c if lp.maximize else -c) for c in lp.objective)
    zeros = tuple(ZERO for _ in lp.rhs)
    return DenseLp(lp.rows, zeros, objective, lower, upper, maximize=True)


class _Simplex:
    """Two-phase bounded-variable simplex with Bland's rule, all rational."""

    def __init__(self, lp: DenseLp):
        self.lp = lp
        self.m = len(lp.rows)
        self.n = len(lp.objective)
        self.ncols = self.n + self.m
        self.lower = list(lp.lower) + [ZERO] * self.m
        self.upper = list(lp.upper) + [None] * self.m
        self.values = [ZERO] * self.ncols
        self.status = [None] * self.ncols  # "B" | "L" | "U" | "F"
        for j in range(self.n):
            if self.lower[j] is not None:
                self.values[j], self.status[j] = self.lower[j], "L"
            elif self.upper[j] is not None:
                self.values[j], self.status[j] = self.upper[j], "U"
            else:
                self.values[j], self.status[j] = ZERO, "F"
        self.tab = []
        self.rhs = []
        self.basis = []
        for i in range(self.m):
            resid = lp.rhs[i] - sum(
                (lp.rows[i][j] * self.values[j] for j in range(self.n)), ZERO
            )
            s = ONE if resid >= 0 else -ONE
            row = [s * lp.rows[i][j] for j in range(self.n)] + [ZERO] * self.m
            row[self.n + i] = ONE
            self.tab.append(row)
            self.rhs.append(s * lp.rhs[i])
            self.basis.append(self.n + i)
            self.status[self.n + i] = "B"

    def _refresh_basic_values(self):
        for i, b in enumerate(self.basis):
            val = self.rhs[i]
            for j in range(self.ncols):
                if self.status[j] != "B" and self.values[j] != 0 and self.tab[i][j] != 0:
                    val -= self.tab[i][j] * self.values[j]
            self.values[b] = val

    def _pivot(self, row: int, col: int):
        factor = self.tab[row][col]
        self.tab[row] = [v / factor for v in self.tab[row]]
        self.rhs[row] /= factor
        for i in range(len(self.tab)):
            if i != row and self.tab[i][col] != 0:
                f = self.tab[i][col]
                self.tab[i] = [a - f * b for a, b in zip(self.tab[i], self.tab[row])]
                self.rhs[i] -= f * self.rhs[row]
        self.basis[row] = col
        self.status[col] = "B"

    def _iterate(self, costs, enterable):
        while True:
            self._refresh_basic_values()
            cb = [costs[b] for b in self.basis]
            entering = None
            for j in range(self.ncols):
                if self.status[j] == "B" or not enterable(j):
                    continue
                cbar = costs[j] - sum(
                    (cb[i] * self.tab[i][j] for i in range(len(self.tab))
                     if self.tab[i][j] != 0),
                    ZERO,
                )
                if self.status[j] in ("L", "F") and cbar < 0:
                    entering = (j, ONE)
                    break
                if self.status[j] in ("U", "F") and cbar > 0:
                    entering = (j, -ONE)
                    break
            if entering is None:
                return "optimal"
            e, direction = entering
            limit = None
            action = None
            if self.lower[e] is not None and self.upper[e] is not None:
                limit = self.upper[e] - self.lower[e]
                action = ("flip",)
            for i in range(len(self.tab)):
                rate = -self.tab[i][e] * direction
                if rate == 0:
                    continue
                b = self.basis[i]
                if rate > 0:
                    if self.upper[b] is None:
                        continue
                    gap = self.upper[b] - self.values[b]
                    hit = "U"
                else:
                    if self.lower[b] is None:
                        continue
                    gap = self.values[b] - self.lower[b]
                    hit = "L"
                ratio = gap / abs(rate)
                if limit is None or ratio < limit or (
                    ratio == limit and action is not None and action[0] == "leave"
                    and b < self.basis[action[1]]
                ):
                    limit = ratio
                    action = ("leave", i, hit)
            if limit is None:
                return "unbounded"
            if action[0] == "flip":
                self.status[e] = "U" if self.status[e] == "L" else "L"
                self.values[e] = self.upper[e] if self.status[e] == "U" else self.lower[e]
                continue
            _, row, hit = action
            leaving = self.basis[row]
            self.values[e] = self.values[e] + direction * limit
            self.status[leaving] = hit
            self.values[leaving] = self.upper[leaving] if hit == "U" else self.lower[leaving]
            self._pivot(row, e)

    def solve(self):
        lp = self.lp
        for lo, up in zip(lp.lower, lp.upper):
            if lo is not None and up is not None and lo > up:
                return LpInfeasible()
        phase1 = [ZERO] * self.n + [ONE] * self.m
        outcome = self._iterate(phase1, enterable=lambda j: j < self.n)
        assert outcome == "optimal", "phase 1 is bounded below by zero"
        self._refresh_basic_values()
        if sum((self.values[self.n + i] for i in range(self.m)), ZERO) > 0:
            return LpInfeasible()
        self._evict_artificials()
        phase2 = [(-c if lp.maximize else c) for c in lp.objective] + [ZERO] * len(
            self.tab
        )
        phase2 = phase2[: self.n] + [ZERO] * (self.ncols - self.n)
        outcome = self._iterate(phase2, enterable=lambda j: j < self.n)
        if outcome == "unbounded":
            return LpUnbounded()
        self._refresh_basic_values()
        point = tuple(self.values[: self.n])
        value = sum((lp.objective[j] * point[j] for j in range(self.n)), ZERO)
        return LpOptimal(value, point)

    def _evict_artificials(self):
        """Pivot zero-valued artificials out of the basis; drop redundant rows."""
        row = 0
        while row < len(self.tab):
            b = self.basis[row]
            if b < self.n:
                row += 1
                continue
            col = next(
                (j for j in range(self.n)
                 if self.status[j] != "B" and self.tab[row][j] != 0),
                None,
            )
            if col is not None:
                # degenerate pivot: artificial sits at zero
                self.status[b] = "L"
                self.values[b] = ZERO
                self._pivot(row, col)
                row += 1
            else:
                del self.tab[row]
                del self.rhs[row]
                self.status[b] = "L"
                self.values[b] = ZERO
                del self.basis[row]


def simplex_solve(lp: DenseLp):
    """Exact bounded-variable simplex (Bland's rule, deterministic)."""
    return _Simplex(lp).solve()


def dz_dense_lp(instance: InverseInstance, z: Rational) -> DenseLp:
    """The parametric sub-problem at z as a dense LP over the raw variables."""
    n = len(instance.arcs)
    rows = [[ZERO] * n for _ in range(instance.node_count)]
    for j, (tail, head) in enumerate(instance.arcs):
        rows[tail][j] += ONE
        rows[head][j] -= ONE
    lower, upper = [], []
    for j in range(n):
        d = Fraction(instance.weights[j])
        if instance.x0[j] > 0:
            shift = instance.x0[j] * z
            lower.append(shift - d)
            upper.append(shift + d)
        else:
            lower.append(-d)
            upper.append(ZERO)
    return DenseLp(
        tuple(tuple(r) for r in rows),
        tuple(ZERO for _ in range(instance.node_count)),
        tuple(instance.costs),
        tuple(lower),
        tuple(upper),
        maximize=True,
    )


def psi_sweep(instance: InverseInstance, z_values) -> list[PsiPoint]:
    """Value-function samples computed by the dense oracle, not the fast path."""
    points = []
    for z in z_values:
        outcome = simplex_solve(dz_dense_lp(instance, z))
        if isinstance(outcome, LpInfeasible):
            points.append(PsiPoint(z, None, None))
        else:
            assert isinstance(outcome, LpOptimal), "sub-problem is box-bounded"
            points.append(PsiPoint(z, outcome.value, outcome.point))
    return points


@dataclass(frozen=True)
class OracleInverse:
    status: str  # "optimal" | "infeasible"
    objective: Rational | None
    c_star: tuple | None


def riovlp2_dense_lp(instance: InverseInstance) -> tuple[DenseLp, dict]:
    """The linearized inverse problem over (pi, alpha, beta) in standard form.

    pi is split into nonnegative parts so the polyhedron is pointed; slacks
    linearize the inequality rows of the zero-support variables.
    """
    narcs = len(instance.arcs)
    nnodes = instance.node_count
    j_zero = [j for j in range(narcs) if instance.x0[j] == 0]
    col_pi_pos = 0
    col_pi_neg = nnodes
    col_alpha = 2 * nnodes
    col_beta = 2 * nnodes + narcs
    col_slack = 2 * nnodes + 2 * narcs
    ncols = col_slack + len(j_zero)
    rows, rhs = [], []
    slack_of = {j: col_slack + idx for idx, j in enumerate(j_zero)}
    for j, (tail, head) in enumerate(instance.arcs):
        row = [ZERO] * ncols
        row[col_pi_pos + tail] += ONE
        row[col_pi_pos + head] -= ONE
        row[col_pi_neg + tail] -= ONE
        row[col_pi_neg + head] += ONE
        row[col_alpha + j] = -ONE
        row[col_beta + j] = ONE
        if instance.x0[j] == 0:
            row[slack_of[j]] = ONE
        rows.append(tuple(row))
        rhs.append(instance.costs[j])
    row = [ZERO] * ncols
    target_shift = instance.target
    for j in range(narcs):
        if instance.x0[j] > 0:
            row[col_alpha + j] = Fraction(instance.x0[j])
            row[col_beta + j] = -Fraction(instance.x0[j])
            target_shift -= instance.costs[j] * instance.x0[j]
    rows.append(tuple(row))
    rhs.append(target_shift)
    objective = [ZERO] * ncols
    for j in range(narcs):
        objective[col_alpha + j] = Fraction(instance.weights[j])
        objective[col_beta + j] = Fraction(instance.weights[j])
    lp = DenseLp(
        tuple(rows),
        tuple(rhs),
        tuple(objective),
        tuple(ZERO for _ in range(ncols)),
        tuple(None for _ in range(ncols)),
        maximize=False,
    )
    return lp, {"alpha": col_alpha, "beta": col_beta}


def oracle_inverse(instance: InverseInstance, max_arcs: int | None = None) -> OracleInverse:
    """Reference optimum of the inverse problem (status, objective, costs)."""
    cap = max_arcs if max_arcs is not None else _inverse_cap()
    if len(instance.arcs) > cap:
        raise ValueError(f"inverse oracle capped at {cap} arcs; "
                         f"raise {INVERSE_CAP_ENV} for the slow suite")
    lp, cols = riovlp2_dense_lp(instance)
    outcome = simplex_solve(lp)
    if isinstance(outcome, LpInfeasible):
        return OracleInverse("infeasible", None, None)
    assert isinstance(outcome, LpOptimal), "objective is bounded below by zero"
    narcs = len(instance.arcs)
    alpha = outcome.point[cols["alpha"]: cols["alpha"] + narcs]
    beta = outcome.point[cols["beta"]: cols["beta"] + narcs]
    c_star = tuple(c + a - b for c, a, b in zip(instance.costs, alpha, beta))
    return OracleInverse("optimal", outcome.value, c_star)
