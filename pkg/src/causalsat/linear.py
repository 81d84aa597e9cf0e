"""Exact linear feasibility and the complete comp/lin fragment solver.

Feasibility of conjunctions of rational linear constraints is decided by
Gaussian substitution of equalities followed by Fourier-Motzkin elimination,
with a feasible rational point reconstructed by back-substitution.  No
floating point, no pivoting degeneracies.

`solve_linear` decides a purely probabilistic formula whose terms are linear
(sums, rational literals, products only with a constant side): it atomizes
events over the formula's description space, searches atom polarities
DPLL-style with unit propagation, and tests each branch's conjunctive system
for rational feasibility.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .lang import (
    EAnd,
    FAnd,
    FGeq,
    FNot,
    Formula,
    Signature,
    TConst,
    TCond,
    TProb,
    TProd,
    TSum,
    Term,
    classify,
    f_and,
    f_eq,
    f_gt,
    f_or,
)
from .rat import ONE, ZERO, Rat, rat
from .statedesc import (
    DeltaContext,
    StateDescription,
    build_context,
    entails,
    iterate_descriptions,
)


class FragmentError(ValueError):
    """Term outside the linear fragment (conditioning or a real product)."""


# ---------------------------------------------------------------------------
# linear expressions and constraints

LinExpr = dict[int, object]  # var index -> rational coefficient

EQ, GEQ, GT = "=", ">=", ">"


@dataclass(frozen=True)
class LinConstraint:
    """``sum(coeffs) + const REL 0`` with REL one of =, >=, >."""

    coeffs: tuple[tuple[int, object], ...]
    const: object
    rel: str

    @staticmethod
    def make(coeffs: LinExpr, const, rel: str) -> "LinConstraint":
        items = tuple(sorted((k, v) for k, v in coeffs.items() if v != 0))
        return LinConstraint(items, const, rel)

    def expr(self) -> LinExpr:
        return dict(self.coeffs)


def _canon(c: LinConstraint) -> LinConstraint:
    if not c.coeffs:
        return c
    scale = ONE / abs(c.coeffs[0][1])
    return LinConstraint(
        tuple((k, v * scale) for k, v in c.coeffs), c.const * scale, c.rel
    )


def _subst(c: LinConstraint, var: int, expr: LinExpr, const) -> LinConstraint:
    coeffs = dict(c.coeffs)
    coef = coeffs.pop(var, None)
    if coef is None:
        return c
    new_const = c.const + coef * const
    for k, v in expr.items():
        new_coef = coeffs.get(k, ZERO) + coef * v
        if new_coef == 0:
            coeffs.pop(k, None)
        else:
            coeffs[k] = new_coef
    return LinConstraint.make(coeffs, new_const, c.rel)


def feasible_point(
    constraints: Iterable[LinConstraint], nvars: int, method: str = "auto"
) -> Optional[list]:
    """A rational point satisfying every constraint, or None.

    Small systems go through projection (equalities removed by substitution,
    the rest by Fourier-Motzkin with strictness tracked through
    combinations); projection densifies exponentially on larger systems, so
    those are handed to the exact simplex instead.  Both engines are exact
    and agree; the cutover is purely a matter of cost.
    """
    constraints = list(constraints)
    if method == "simplex" or (method == "auto" and nvars > 16):
        return _simplex_feasible_point(constraints, nvars)
    return _fm_feasible_point(constraints, nvars)


def _fm_feasible_point(constraints, nvars: int) -> Optional[list]:
    eqs = []
    ineqs = []
    for c in constraints:
        (eqs if c.rel == EQ else ineqs).append(c)

    subs: list[tuple[int, LinExpr, object]] = []  # var = expr + const
    while True:
        eqs = [c for c in eqs if c.coeffs or c.const != 0]
        for c in eqs:
            if not c.coeffs and c.const != 0:
                return None
        candidates = [c for c in eqs if c.coeffs]
        if not candidates:
            break
        pick = min(candidates, key=lambda c: (len(c.coeffs), c.coeffs[0][0]))
        var, coef = pick.coeffs[0]
        rest = {k: -v / coef for k, v in pick.coeffs[1:]}
        const = -pick.const / coef
        subs.append((var, rest, const))
        eqs = [_subst(c, var, rest, const) for c in eqs if c is not pick]
        ineqs = [_subst(c, var, rest, const) for c in ineqs]

    # Fourier-Motzkin over the remaining inequality variables
    steps: list[tuple[int, list, list]] = []
    ineqs = list({_canon(c) for c in ineqs})
    while True:
        for c in ineqs:
            if not c.coeffs:
                if c.rel == GEQ and c.const < 0:
                    return None
                if c.rel == GT and c.const <= 0:
                    return None
        ineqs = [c for c in ineqs if c.coeffs]
        if not ineqs:
            break
        occur: dict[int, list[int]] = {}
        for idx, c in enumerate(ineqs):
            for k, _ in c.coeffs:
                occur.setdefault(k, []).append(idx)

        def cost(v: int) -> tuple:
            lowers = uppers = 0
            for idx in occur[v]:
                coef = dict(ineqs[idx].coeffs)[v]
                if coef > 0:  # c*v + rest REL 0 with c>0 bounds v from below
                    lowers += 1
                else:
                    uppers += 1
            return (lowers * uppers, v)

        var = min(occur, key=cost)
        lowers: list[tuple[LinExpr, object, bool]] = []  # v >= expr (+strict)
        uppers: list[tuple[LinExpr, object, bool]] = []  # v <= expr
        rest_cons = []
        for c in ineqs:
            coeffs = dict(c.coeffs)
            coef = coeffs.pop(var, None)
            if coef is None:
                rest_cons.append(c)
                continue
            expr = {k: -v / coef for k, v in coeffs.items()}
            const = -c.const / coef
            if coef > 0:
                lowers.append((expr, const, c.rel == GT))
            else:
                uppers.append((expr, const, c.rel == GT))
        steps.append((var, lowers, uppers))
        new_cons = []
        for (le, lc, ls), (ue, uc, us) in itertools.product(lowers, uppers):
            coeffs = dict(ue)
            for k, v in le.items():
                nv = coeffs.get(k, ZERO) - v
                if nv == 0:
                    coeffs.pop(k, None)
                else:
                    coeffs[k] = nv
            new_cons.append(
                LinConstraint.make(coeffs, uc - lc, GT if (ls or us) else GEQ)
            )
        ineqs = list({_canon(c) for c in rest_cons + new_cons})

    # reconstruct a witness backwards
    point: dict[int, object] = {}

    def value_of(expr: LinExpr, const):
        return sum((v * point.get(k, ZERO) for k, v in expr.items()), const)

    for var, lowers, uppers in reversed(steps):
        lo = None
        lo_strict = False
        for expr, const, strict in lowers:
            val = value_of(expr, const)
            if lo is None or val > lo:
                lo, lo_strict = val, strict
            elif val == lo:
                lo_strict = lo_strict or strict
        hi = None
        hi_strict = False
        for expr, const, strict in uppers:
            val = value_of(expr, const)
            if hi is None or val < hi:
                hi, hi_strict = val, strict
            elif val == hi:
                hi_strict = hi_strict or strict
        if lo is None and hi is None:
            point[var] = ZERO
        elif lo is None:
            point[var] = hi - 1
        elif hi is None:
            point[var] = lo + 1
        elif lo == hi:
            assert not (lo_strict or hi_strict), "elimination left an empty interval"
            point[var] = lo
        else:
            assert lo < hi, "elimination left an empty interval"
            point[var] = (lo + hi) / 2
    for var, expr, const in reversed(subs):
        point[var] = value_of(expr, const)
    return [point.get(i, ZERO) for i in range(nvars)]


# ---------------------------------------------------------------------------
# terms to linear forms


def linearize_term(t: Term, prob_vec) -> tuple[LinExpr, object]:
    """Linear form of a term; ``prob_vec`` maps an event to coefficient dict.

    Products are folded when one side is constant; a genuine product or a
    conditional raises FragmentError.
    """
    if isinstance(t, TProb):
        return dict(prob_vec(t.event)), ZERO
    if isinstance(t, TConst):
        return {}, t.value()
    if isinstance(t, TSum):
        le, lc = linearize_term(t.left, prob_vec)
        re, rc = linearize_term(t.right, prob_vec)
        out = dict(le)
        for k, v in re.items():
            out[k] = out.get(k, ZERO) + v
        return out, lc + rc
    if isinstance(t, TProd):
        le, lc = linearize_term(t.left, prob_vec)
        re, rc = linearize_term(t.right, prob_vec)
        if not le:
            return {k: lc * v for k, v in re.items()}, lc * rc
        if not re:
            return {k: rc * v for k, v in le.items()}, rc * lc
        raise FragmentError("product of two non-constant terms is outside the linear fragment")
    raise FragmentError("conditional probability term is outside the linear fragment")


# ---------------------------------------------------------------------------
# exact simplex (for systems where projection would densify)


def _simplex_feasible_point(constraints: list, nvars: int) -> Optional[list]:
    """Two-phase primal simplex with Bland's rule over exact rationals.

    Strict inequalities share one slack variable whose value is maximized in
    a second phase; the system is strictly feasible iff that maximum is
    positive.  Plain nonnegativity rows become column bounds instead of rows.
    """
    nonneg = set()
    rows_in: list[LinConstraint] = []
    for c in constraints:
        if (
            c.rel == GEQ
            and c.const == 0
            and len(c.coeffs) == 1
            and c.coeffs[0][1] > 0
        ):
            nonneg.add(c.coeffs[0][0])
        else:
            rows_in.append(c)

    cols: dict[int, tuple[int, Optional[int]]] = {}
    next_col = 0
    for i in range(nvars):
        if i in nonneg:
            cols[i] = (next_col, None)
            next_col += 1
        else:
            cols[i] = (next_col, next_col + 1)
            next_col += 2

    has_strict = any(c.rel == GT for c in rows_in)
    sigma = None
    if has_strict:
        sigma = next_col
        next_col += 1

    rows: list[dict[int, object]] = []
    rhs: list[object] = []

    def add_row(expr: dict[int, object], b):
        if not expr:
            rows.append({})
            rhs.append(b)
            return
        if b < 0:
            expr = {j: -v for j, v in expr.items()}
            b = -b
        rows.append(expr)
        rhs.append(b)

    for c in rows_in:
        expr: dict[int, object] = {}
        for i, coef in c.coeffs:
            pos, neg = cols[i]
            expr[pos] = expr.get(pos, ZERO) + coef
            if neg is not None:
                expr[neg] = expr.get(neg, ZERO) - coef
        b = -c.const
        if c.rel == EQ:
            add_row(expr, b)
        else:
            if c.rel == GT:
                expr[sigma] = expr.get(sigma, ZERO) - ONE
            surplus = next_col
            next_col += 1
            expr[surplus] = -ONE
            add_row(expr, b)
    if sigma is not None:
        slack = next_col
        next_col += 1
        add_row({sigma: ONE, slack: ONE}, ONE)

    m = len(rows)
    artificials = list(range(next_col, next_col + m))
    basis: list[int] = []
    for r in range(m):
        rows[r] = dict(rows[r])
        rows[r][artificials[r]] = ONE
        basis.append(artificials[r])
    banned = set(artificials)
    total_cols = next_col + m

    # objective row: expression of (negated artificial mass) in nonbasics
    obj: dict[int, object] = {}
    obj_const = ZERO
    for r in range(m):
        for j, v in rows[r].items():
            if j not in banned:
                obj[j] = obj.get(j, ZERO) + v
        obj_const -= rhs[r]

    def pivot(r: int, e: int):
        nonlocal obj_const
        fac = rows[r][e]
        rows[r] = {j: v / fac for j, v in rows[r].items() if v != 0}
        rhs[r] = rhs[r] / fac
        prow, pb = rows[r], rhs[r]
        for r2 in range(m):
            if r2 == r:
                continue
            coef = rows[r2].get(e)
            if not coef:
                continue
            new = dict(rows[r2])
            for j, v in prow.items():
                nv = new.get(j, ZERO) - coef * v
                if nv == 0:
                    new.pop(j, None)
                else:
                    new[j] = nv
            rows[r2] = new
            rhs[r2] -= coef * pb
        coef = obj.get(e)
        if coef:
            for j, v in prow.items():
                nv = obj.get(j, ZERO) - coef * v
                if nv == 0:
                    obj.pop(j, None)
                else:
                    obj[j] = nv
            obj_const += coef * pb
        basis[r] = e

    def run_phase(stop_when_positive: bool) -> bool:
        """Maximize obj; True when optimal, early-exit on positive value."""
        while True:
            if stop_when_positive and obj_const > 0:
                return True
            entering = None
            for j in sorted(obj):
                if j not in banned and obj[j] > 0:
                    entering = j
                    break
            if entering is None:
                return True
            leaving = None
            best = None
            for r in range(m):
                coef = rows[r].get(entering)
                if coef and coef > 0:
                    ratio = rhs[r] / coef
                    if best is None or ratio < best or (ratio == best and basis[r] < basis[leaving]):
                        best = ratio
                        leaving = r
            if leaving is None:
                return True  # unbounded improvement; value can grow
            pivot(leaving, entering)

    run_phase(stop_when_positive=False)
    if obj_const != 0:
        return None

    # drive leftover artificials out of the basis, drop redundant rows
    for r in range(m):
        if basis[r] in banned:
            sub = next((j for j in sorted(rows[r]) if j not in banned and rows[r][j] != 0), None)
            if sub is not None:
                pivot(r, sub)
            else:
                rows[r] = {basis[r]: ONE}
                rhs[r] = ZERO

    if sigma is not None:
        obj.clear()
        obj_const = ZERO
        srow = next((r for r in range(m) if basis[r] == sigma), None)
        if srow is None:
            obj[sigma] = ONE
        else:
            for j, v in rows[srow].items():
                if j != sigma:
                    obj[j] = -v
            obj_const = rhs[srow]
        run_phase(stop_when_positive=True)
        if obj_const <= 0:
            return None

    values: dict[int, object] = {basis[r]: rhs[r] for r in range(m)}
    point = []
    for i in range(nvars):
        pos, neg = cols[i]
        val = values.get(pos, ZERO)
        if neg is not None:
            val -= values.get(neg, ZERO)
        point.append(val)
    return point


# ---------------------------------------------------------------------------
# conditional elimination by case split


def eliminate_conditionals(phi: Formula) -> Formula:
    """Rewrite atoms with a conditional term on one whole side.

    ``P(e|g) REL t`` splits on the conditioning event: either its probability
    is zero and the term counts as one, or it is positive and the comparison
    cross-multiplies to ``P(e & g) REL t * P(g)``.  Conditionals nested under
    sums or products are left for the polynomial route.
    """
    zero = TConst(0, 1)
    one = TConst(1, 1)

    def split(cond: TCond, make_atom) -> Formula:
        pg = TProb(cond.given)
        peg = TProb(EAnd(cond.event, cond.given))
        zero_branch = f_and(f_eq(pg, zero), make_atom(one, None))
        pos_branch = f_and(f_gt(pg, zero), make_atom(peg, pg))
        return f_or(zero_branch, pos_branch)

    def rewrite_atom(atom: FGeq) -> Formula:
        if isinstance(atom.left, TCond):
            cond = atom.left

            def make(la, scale):
                rhs = atom.right if scale is None else TProd(atom.right, scale)
                return rewrite_atom(FGeq(la, rhs))

            return split(cond, make)
        if isinstance(atom.right, TCond):
            cond = atom.right

            def make(ra, scale):
                lhs = atom.left if scale is None else TProd(atom.left, scale)
                return rewrite_atom(FGeq(lhs, ra))

            return split(cond, make)
        return atom

    def walk(f: Formula) -> Formula:
        if isinstance(f, FGeq):
            return rewrite_atom(f)
        if isinstance(f, FNot):
            return FNot(walk(f.body))
        return FAnd(walk(f.left), walk(f.right))

    return walk(phi)


# ---------------------------------------------------------------------------
# DPLL over atom polarities


@dataclass
class _Skeleton:
    atoms: list[FGeq]
    index: dict[FGeq, int]
    root: Formula

    @staticmethod
    def of(phi: Formula) -> "_Skeleton":
        atoms: list[FGeq] = []
        index: dict[FGeq, int] = {}

        def walk(f: Formula):
            if isinstance(f, FGeq):
                if f not in index:
                    index[f] = len(atoms)
                    atoms.append(f)
            elif isinstance(f, FNot):
                walk(f.body)
            else:
                walk(f.left)
                walk(f.right)

        walk(phi)
        return _Skeleton(atoms, index, phi)

    def eval3(self, f: Formula, assign: dict[int, bool]) -> Optional[bool]:
        if isinstance(f, FGeq):
            return assign.get(self.index[f])
        if isinstance(f, FNot):
            v = self.eval3(f.body, assign)
            return None if v is None else not v
        l = self.eval3(f.left, assign)
        if l is False:
            return False
        r = self.eval3(f.right, assign)
        if r is False:
            return False
        if l is True and r is True:
            return True
        return None

    def units(self, assign: dict[int, bool]) -> Optional[dict[int, bool]]:
        """Literals forced if the root is to hold; None signals a conflict."""
        forced: dict[int, bool] = {}

        def push(idx: int, pol: bool) -> bool:
            known = assign.get(idx, forced.get(idx))
            if known is None:
                forced[idx] = pol
                return True
            return known == pol

        ok = True

        def walk(f: Formula, pol: bool):
            nonlocal ok
            if not ok:
                return
            if isinstance(f, FGeq):
                ok = push(self.index[f], pol)
                return
            if isinstance(f, FNot):
                walk(f.body, not pol)
                return
            if pol:
                walk(f.left, True)
                walk(f.right, True)
            else:
                l = self.eval3(f.left, assign)
                r = self.eval3(f.right, assign)
                if l is True:
                    walk(f.right, False)
                elif r is True:
                    walk(f.left, False)

        walk(self.root, True)
        return forced if ok else None

    def undetermined_atom(self, assign: dict[int, bool]) -> Optional[int]:
        for i in range(len(self.atoms)):
            if i not in assign:
                return i
        return None


@dataclass
class LinearResult:
    status: str  # sat | unsat
    measure: Optional[dict[StateDescription, object]]
    ctx: DeltaContext
    assignment: Optional[dict[int, bool]] = None
    stats: dict = field(default_factory=dict)


def solve_linear(
    phi: Formula,
    sig: Signature,
    max_descriptions: int = 250_000,
) -> LinearResult:
    """Complete satisfiability for purely probabilistic linear formulas.

    Events are atomized over the formula's full description space (one
    unknown per complete assignment of mentioned variables, total mass one),
    which is exact: a measure on those descriptions is precisely a model
    restricted to what the formula can see.
    """
    frag = classify(phi)
    if frag.causal:
        raise FragmentError("causal formula; reduce it before calling the linear solver")
    ctx = build_context(phi, sig)
    if ctx.description_count() > max_descriptions:
        raise FragmentError(
            f"description space of size {ctx.description_count()} exceeds {max_descriptions}"
        )
    deltas = list(iterate_descriptions(ctx))
    n = len(deltas)

    vec_cache: dict = {}

    def prob_vec(event) -> LinExpr:
        got = vec_cache.get(event)
        if got is None:
            got = {i: ONE for i, d in enumerate(deltas) if entails(d, event)}
            vec_cache[event] = got
        return got

    skel = _Skeleton.of(phi)
    atom_forms = []
    for atom in skel.atoms:
        le, lc = linearize_term(atom.left, prob_vec)
        re, rc = linearize_term(atom.right, prob_vec)
        diff = dict(le)
        for k, v in re.items():
            diff[k] = diff.get(k, ZERO) - v
        atom_forms.append((diff, lc - rc))

    base = [LinConstraint.make({i: ONE}, ZERO, GEQ) for i in range(n)]
    base.append(LinConstraint.make({i: ONE for i in range(n)}, -ONE, EQ))

    def atom_constraint(idx: int, pol: bool) -> LinConstraint:
        expr, const = atom_forms[idx]
        if pol:
            return LinConstraint.make(expr, const, GEQ)
        return LinConstraint.make({k: -v for k, v in expr.items()}, -const, GT)

    stats = {"atoms": len(skel.atoms), "nodes": 0, "feasibility_checks": 0}

    def search(assign: dict[int, bool]) -> Optional[tuple[list, dict[int, bool]]]:
        stats["nodes"] += 1
        while True:
            if skel.eval3(skel.root, assign) is False:
                return None
            forced = skel.units(assign)
            if forced is None:
                return None
            if not forced:
                break
            assign = {**assign, **forced}
        cons = base + [atom_constraint(i, pol) for i, pol in assign.items()]
        stats["feasibility_checks"] += 1
        point = feasible_point(cons, n)
        if point is None:
            return None
        if skel.eval3(skel.root, assign) is True:
            return point, assign
        pick = skel.undetermined_atom(assign)
        for pol in (True, False):
            got = search({**assign, pick: pol})
            if got is not None:
                return got
        return None

    got = search({})
    if got is None:
        return LinearResult("unsat", None, ctx, None, stats)
    point, assign = got
    measure = {d: point[i] for i, d in enumerate(deltas) if point[i] != 0}
    return LinearResult("sat", measure, ctx, assign, stats)
