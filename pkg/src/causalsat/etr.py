"""Polynomial systems over probabilities and their solvers.

`build_etr` performs the textbook construction: unknowns are the masses of a
given description set summing to one, event probabilities become mass sums,
conditionals get a ratio variable with a zero-denominator case split, and the
Boolean structure is lowered to a conjunctive polynomial system with binary
selector variables (a disjunct's constraints are relaxed to tautologies when
its selector is off).

`encode_pure_prob` is the solving-oriented exact encoder: mentioned variables
are grouped by co-occurrence, each group gets one unknown per joint
assignment, and satisfiability of the system is equivalent to satisfiability
of the purely probabilistic input (a product measure across groups realizes
any group-wise solution).

The numeric backend is an incomplete multi-start least-squares search: it
reports a witness only when the float residual clears tolerance and the
witness survives exact rational re-evaluation at a nearby rational point; it
never reports unsat.  Complete nonlinear decisions are delegated to an
external SMT solver over the emitted QF_NRA text.
"""

from __future__ import annotations

import itertools
import math
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .lang import (
    EAnd,
    EBox,
    ENot,
    Event,
    FAnd,
    FGeq,
    FNot,
    Formula,
    PAnd,
    PAssign,
    PNot,
    Signature,
    TCond,
    TConst,
    TProb,
    TProd,
    TSum,
    Term,
    classify,
    iter_boxes,
    iter_events,
)
from .rat import ONE, ZERO, Rat, rat
from .statedesc import StateDescription, entails

# ---------------------------------------------------------------------------
# polynomial expressions


class PExpr:
    __slots__ = ()


@dataclass(frozen=True)
class PConst(PExpr):
    value: object


@dataclass(frozen=True)
class PVar(PExpr):
    index: int


@dataclass(frozen=True)
class PAdd(PExpr):
    items: tuple[PExpr, ...]


@dataclass(frozen=True)
class PMul(PExpr):
    items: tuple[PExpr, ...]


def padd(*items: PExpr) -> PExpr:
    flat: list[PExpr] = []
    const = ZERO
    for it in items:
        if isinstance(it, PAdd):
            flat.extend(it.items)
        elif isinstance(it, PConst):
            const += it.value
        else:
            flat.append(it)
    if const != 0 or not flat:
        flat.append(PConst(const))
    return flat[0] if len(flat) == 1 else PAdd(tuple(flat))


def pmul(*items: PExpr) -> PExpr:
    flat: list[PExpr] = []
    const = ONE
    for it in items:
        if isinstance(it, PMul):
            flat.extend(it.items)
        elif isinstance(it, PConst):
            const *= it.value
        else:
            flat.append(it)
    if const == 0:
        return PConst(ZERO)
    if const != 1 or not flat:
        flat.append(PConst(const))
    return flat[0] if len(flat) == 1 else PMul(tuple(flat))


def psub(a: PExpr, b: PExpr) -> PExpr:
    return padd(a, pmul(PConst(-ONE), b))


def eval_exact(expr: PExpr, xs: Sequence) -> object:
    if isinstance(expr, PConst):
        return expr.value
    if isinstance(expr, PVar):
        return xs[expr.index]
    if isinstance(expr, PAdd):
        return sum((eval_exact(e, xs) for e in expr.items), ZERO)
    out = ONE
    for e in expr.items:
        out *= eval_exact(e, xs)
    return out


def eval_float(expr: PExpr, xs) -> float:
    if isinstance(expr, PConst):
        return float(expr.value)
    if isinstance(expr, PVar):
        return float(xs[expr.index])
    if isinstance(expr, PAdd):
        return sum(eval_float(e, xs) for e in expr.items)
    out = 1.0
    for e in expr.items:
        out *= eval_float(e, xs)
    return out


def expand(expr: PExpr) -> dict[tuple[int, ...], object]:
    """Monomial map (sorted variable multiset -> coefficient)."""
    if isinstance(expr, PConst):
        return {(): expr.value} if expr.value != 0 else {}
    if isinstance(expr, PVar):
        return {(expr.index,): ONE}
    if isinstance(expr, PAdd):
        out: dict[tuple[int, ...], object] = {}
        for it in expr.items:
            for mono, coef in expand(it).items():
                new = out.get(mono, ZERO) + coef
                if new == 0:
                    out.pop(mono, None)
                else:
                    out[mono] = new
        return out
    out = {(): ONE}
    for it in expr.items:
        nxt: dict[tuple[int, ...], object] = {}
        for m1, c1 in out.items():
            for m2, c2 in expand(it).items():
                mono = tuple(sorted(m1 + m2))
                new = nxt.get(mono, ZERO) + c1 * c2
                if new == 0:
                    nxt.pop(mono, None)
                else:
                    nxt[mono] = new
        out = nxt
    return out


def degree(expr: PExpr) -> int:
    return max((len(m) for m in expand(expr)), default=0)


EQ, GEQ, GT = "=", ">=", ">"


@dataclass(frozen=True)
class EtrConstraint:
    """``expr REL 0`` with REL one of =, >=, >."""

    expr: PExpr
    rel: str


@dataclass(frozen=True)
class EtrVar:
    name: str
    lo: Optional[object] = ZERO
    hi: Optional[object] = ONE
    binary: bool = False
    kind: str = "prob"  # prob | atom | aux | selector | free
    assignment: Optional[tuple[tuple[str, str], ...]] = None
    note: str = ""


@dataclass
class EtrSystem:
    variables: list[EtrVar]
    constraints: list[EtrConstraint]
    simplex_groups: list[tuple[int, ...]]

    def var_names(self) -> list[str]:
        return [v.name for v in self.variables]


def check_point_exact(system: EtrSystem, point: Sequence) -> bool:
    """Exact satisfaction of every constraint and bound at a rational point."""
    if point is None or len(point) != len(system.variables):
        return False
    for var, val in zip(system.variables, point):
        if var.lo is not None and val < var.lo:
            return False
        if var.hi is not None and val > var.hi:
            return False
    for c in system.constraints:
        v = eval_exact(c.expr, point)
        if c.rel == EQ and v != 0:
            return False
        if c.rel == GEQ and v < 0:
            return False
        if c.rel == GT and v <= 0:
            return False
    return True


# ---------------------------------------------------------------------------
# formula -> system builder


class _Builder:
    def __init__(self):
        self.variables: list[EtrVar] = []
        self.constraints: list[EtrConstraint] = []
        self.simplex_groups: list[tuple[int, ...]] = []
        self._binarity: list[EtrConstraint] = []
        self._aux_count = 0
        self._sel_count = 0
        self._cond_cache: dict[tuple[Event, Event], int] = {}

    def add_var(self, var: EtrVar) -> int:
        self.variables.append(var)
        return len(self.variables) - 1

    def cond_var(self, event: Event, given: Event, event_poly) -> int:
        key = (event, given)
        got = self._cond_cache.get(key)
        if got is not None:
            return got
        idx = self.add_var(EtrVar(f"y{self._aux_count}", ZERO, ONE, False, "aux"))
        self._aux_count += 1
        self._cond_cache[key] = idx
        pg = event_poly(given)
        peg = event_poly(EAnd(event, given))
        # either the condition has probability zero and the ratio counts as 1,
        # or it is positive and the ratio variable cross-multiplies exactly
        branch = (
            "or",
            [
                ("and", [("lit", EtrConstraint(pg, EQ)), ("lit", EtrConstraint(psub(PVar(idx), PConst(ONE)), EQ))]),
                ("and", [("lit", EtrConstraint(pg, GT)), ("lit", EtrConstraint(psub(pmul(PVar(idx), pg), peg), EQ))]),
            ],
        )
        self._pending_branches.append(branch)
        return idx

    def term_poly(self, t: Term, event_poly) -> PExpr:
        if isinstance(t, TProb):
            return event_poly(t.event)
        if isinstance(t, TCond):
            return PVar(self.cond_var(t.event, t.given, event_poly))
        if isinstance(t, TConst):
            return PConst(t.value())
        if isinstance(t, TSum):
            return padd(self.term_poly(t.left, event_poly), self.term_poly(t.right, event_poly))
        return pmul(self.term_poly(t.left, event_poly), self.term_poly(t.right, event_poly))

    def formula_tree(self, phi: Formula, event_poly, negated=False):
        if isinstance(phi, FGeq):
            l = self.term_poly(phi.left, event_poly)
            r = self.term_poly(phi.right, event_poly)
            if negated:
                return ("lit", EtrConstraint(psub(r, l), GT))
            return ("lit", EtrConstraint(psub(l, r), GEQ))
        if isinstance(phi, FNot):
            return self.formula_tree(phi.body, event_poly, not negated)
        kind = "or" if negated else "and"
        return (
            kind,
            [
                self.formula_tree(phi.left, event_poly, negated),
                self.formula_tree(phi.right, event_poly, negated),
            ],
        )

    def lower(self, node) -> list[EtrConstraint]:
        tag = node[0]
        if tag == "lit":
            return [node[1]]
        if tag == "and":
            out = []
            for child in node[1]:
                out.extend(self.lower(child))
            return out
        # disjunction: one binary selector per child; a child's constraints
        # relax to tautologies when its selector is off
        selectors = []
        out = []
        for child in node[1]:
            s = self.add_var(EtrVar(f"s{self._sel_count}", ZERO, ONE, True, "selector"))
            self._sel_count += 1
            selectors.append(s)
            self._binarity.append(
                EtrConstraint(pmul(PVar(s), psub(PConst(ONE), PVar(s))), EQ)
            )
            for c in self.lower(child):
                out.append(_relax(c, s))
        out.append(
            EtrConstraint(padd(*[PVar(s) for s in selectors], PConst(-ONE)), GEQ)
        )
        return out

    def run(self, phi: Formula, event_poly) -> None:
        self._pending_branches: list = []
        tree = self.formula_tree(phi, event_poly)
        # conditional-ratio case splits are conjoined at the top level
        conjuncts = [tree] + self._pending_branches
        self.constraints.extend(self.lower(("and", conjuncts)))
        self.constraints.extend(self._binarity)

    def system(self) -> EtrSystem:
        return EtrSystem(self.variables, self.constraints, self.simplex_groups)


def _relax(c: EtrConstraint, s: int) -> EtrConstraint:
    """Constraint implied only when the binary selector s is 1.

    q = 0 becomes s*q = 0; q >= 0 becomes s*q >= s - 1 (trivial at s = 0);
    strict inequalities relax the same way.
    """
    if c.rel == EQ:
        return EtrConstraint(pmul(PVar(s), c.expr), EQ)
    relaxed = padd(pmul(PVar(s), c.expr), psub(PConst(ONE), PVar(s)))
    return EtrConstraint(relaxed, c.rel)


def build_etr(
    psi: Formula, deltas: Sequence[StateDescription], sig: Optional[Signature] = None
) -> EtrSystem:
    """Polynomial system with one mass unknown per description, summing to 1.

    Event probabilities become sums over the entailing descriptions; the
    Boolean structure and conditional case splits are lowered to a
    conjunctive system with selector variables.
    """
    if classify(psi).causal:
        raise ValueError("system construction expects a purely probabilistic formula")
    b = _Builder()
    for i, d in enumerate(deltas):
        b.add_var(EtrVar(f"x{i}", ZERO, ONE, False, "prob", None, d.render()))
    n = len(deltas)
    b.simplex_groups.append(tuple(range(n)))
    b.constraints.append(
        EtrConstraint(padd(*([PVar(i) for i in range(n)] + [PConst(-ONE)])), EQ)
    )

    cache: dict[Event, PExpr] = {}

    def event_poly(ev: Event) -> PExpr:
        got = cache.get(ev)
        if got is None:
            hits = [PVar(i) for i, d in enumerate(deltas) if entails(d, ev)]
            got = padd(*hits) if hits else PConst(ZERO)
            cache[ev] = got
        return got

    b.run(psi, event_poly)
    return b.system()


def _event_variables(ev: Event) -> set[str]:
    out = set()
    for box in iter_boxes(ev):
        if not box.interv.trivial:
            raise ValueError("pure-probability encoder got a causal event")
        stack = [box.body]
        while stack:
            p = stack.pop()
            if isinstance(p, PAssign):
                out.add(p.var)
            elif isinstance(p, PNot):
                stack.append(p.body)
            else:
                stack.append(p.left)
                stack.append(p.right)
    return out


def _eval_prop(p, env) -> bool:
    if isinstance(p, PAssign):
        return env[p.var] == p.value
    if isinstance(p, PNot):
        return not _eval_prop(p.body, env)
    return _eval_prop(p.left, env) and _eval_prop(p.right, env)


def _eval_event(ev: Event, env) -> bool:
    if isinstance(ev, EBox):
        return _eval_prop(ev.body, env)
    if isinstance(ev, ENot):
        return not _eval_event(ev.body, env)
    return _eval_event(ev.left, env) and _eval_event(ev.right, env)


def encode_pure_prob(psi: Formula, sig: Signature) -> EtrSystem:
    """Exact system for a purely probabilistic formula of any fragment.

    Mentioned variables are grouped by co-occurrence inside events; each
    group gets one mass unknown per joint assignment of its variables.  The
    input is satisfiable over finite models iff the system is solvable: a
    solution yields a product measure across groups and conversely.
    """
    frag = classify(psi)
    if frag.causal:
        raise ValueError("pure-probability encoder needs a causal-free formula")
    events = list(dict.fromkeys(iter_events(psi)))
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    def union(a: str, b: str):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for ev in events:
        vs = sorted(_event_variables(ev))
        for v in vs:
            parent.setdefault(v, v)
        for a, b in zip(vs, vs[1:]):
            union(a, b)
    groups: dict[str, list[str]] = {}
    for v in sorted(parent):
        groups.setdefault(find(v), []).append(v)
    group_list = [tuple(sorted(vs, key=sig.names.index)) for _, vs in sorted(groups.items())]
    group_list.sort()

    b = _Builder()
    var_index: dict[tuple[tuple[str, str], ...], int] = {}
    for gi, gvars in enumerate(group_list):
        indices = []
        for combo in itertools.product(*(sig.domain(v) for v in gvars)):
            assignment = tuple(zip(gvars, combo))
            name = f"p{gi}_" + "_".join(f"{v}{val}" for v, val in assignment)
            idx = b.add_var(EtrVar(name, ZERO, ONE, False, "atom", assignment))
            var_index[assignment] = idx
            indices.append(idx)
        b.simplex_groups.append(tuple(indices))
        b.constraints.append(
            EtrConstraint(padd(*([PVar(i) for i in indices] + [PConst(-ONE)])), EQ)
        )

    group_of = {vs: vs for vs in group_list}

    cache: dict[Event, PExpr] = {}

    def event_poly(ev: Event) -> PExpr:
        got = cache.get(ev)
        if got is None:
            vs = _event_variables(ev)
            gvars = next((g for g in group_list if vs <= set(g)), None)
            if gvars is None:
                if vs:
                    raise ValueError("event spans no single group")
                # variable-free event: constant truth value
                got = PConst(ONE if _eval_event(ev, {}) else ZERO)
                cache[ev] = got
                return got
            hits = []
            for combo in itertools.product(*(sig.domain(v) for v in gvars)):
                env = dict(zip(gvars, combo))
                if _eval_event(ev, env):
                    hits.append(PVar(var_index[tuple(zip(gvars, combo))]))
            got = padd(*hits) if hits else PConst(ZERO)
            cache[ev] = got
        return got

    b.run(psi, event_poly)
    return b.system()


# ---------------------------------------------------------------------------
# numeric search


@dataclass
class NumericResult:
    status: str  # sat | unknown
    witness: Optional[list[float]] = None
    residual: Optional[float] = None
    rational_point: Optional[list] = None
    restarts_used: int = 0


_ROUND_DENOMS = (1, 2, 3, 4, 6, 8, 12, 16, 24, 60, 1000, 10**6, 10**9, 10**12)


def _rationalize(x: float, denom: int):
    return Rat(Fraction(x).limit_denominator(denom))


def _exact_residual(system: EtrSystem, point, tol) -> Optional[object]:
    worst = ZERO
    for var, val in zip(system.variables, point):
        if var.lo is not None and val < var.lo:
            worst = max(worst, var.lo - val)
        if var.hi is not None and val > var.hi:
            worst = max(worst, val - var.hi)
    for c in system.constraints:
        v = eval_exact(c.expr, point)
        if c.rel == EQ:
            worst = max(worst, abs(v))
        elif c.rel == GEQ:
            worst = max(worst, -v if v < 0 else ZERO)
        else:
            if v <= 0:
                return None
    return worst if worst <= tol else None


def certify_rational(system: EtrSystem, witness, tol=rat(1, 10**9)):
    """Nearby rational point with exact residual below tolerance, or None."""
    for denom in _ROUND_DENOMS:
        point = []
        for var, x in zip(system.variables, witness):
            r = _rationalize(x, denom)
            if var.binary:
                r = ONE if x > 0.5 else ZERO
            if var.lo is not None and r < var.lo:
                r = var.lo
            if var.hi is not None and r > var.hi:
                r = var.hi
            point.append(r)
        if _exact_residual(system, point, tol) is not None:
            return point
    return None


def solve_etr_numeric(
    system: EtrSystem,
    restarts: int = 64,
    seed: int = 0,
    tol: float = 1e-9,
    strict_margin: float = 1e-7,
    binary_enum_cap: int = 12,
) -> NumericResult:
    """Multi-start projected least-squares over the constraint violations.

    Binary selectors are enumerated outright when few; a witness is reported
    only when the float residual clears tolerance and a nearby rational point
    re-checks exactly.  Unsatisfiability is never claimed.
    """
    from scipy.optimize import least_squares

    n = len(system.variables)
    binaries = [i for i, v in enumerate(system.variables) if v.binary]
    free = [i for i in range(n) if i not in set(binaries)]
    rng = np.random.default_rng(seed)

    lo = np.array(
        [float(v.lo) if v.lo is not None else -10.0 for v in system.variables]
    )
    hi = np.array([float(v.hi) if v.hi is not None else 10.0 for v in system.variables])

    combos: Iterable[tuple[int, ...]]
    if binaries and len(binaries) <= binary_enum_cap:
        combos = list(itertools.product((0.0, 1.0), repeat=len(binaries)))
    else:
        combos = [None]

    def residual_vec(full: np.ndarray) -> np.ndarray:
        out = []
        for c in system.constraints:
            v = eval_float(c.expr, full)
            if c.rel == EQ:
                out.append(v)
            elif c.rel == GEQ:
                out.append(min(v, 0.0))
            else:
                out.append(min(v - strict_margin, 0.0))
        return np.array(out or [0.0])

    def max_violation(full: np.ndarray) -> float:
        worst = 0.0
        for c in system.constraints:
            v = eval_float(c.expr, full)
            if c.rel == EQ:
                worst = max(worst, abs(v))
            elif c.rel == GEQ:
                worst = max(worst, -min(v, 0.0))
            else:
                worst = max(worst, -min(v, 0.0) + (strict_margin if v <= 0 else 0.0))
        return worst

    used = 0
    best: Optional[tuple[float, np.ndarray]] = None
    per_combo = restarts if combos == [None] else max(1, restarts // len(combos))
    for combo in combos:
        for _ in range(per_combo):
            used += 1
            full = lo + (hi - lo) * rng.random(n)
            if combo is not None:
                for b, val in zip(binaries, combo):
                    full[b] = val
            idx = list(range(n)) if combo is None else free
            if idx:

                def fun(xs, full=full, idx=idx):
                    buf = full.copy()
                    buf[idx] = xs
                    return residual_vec(buf)

                res = least_squares(
                    fun,
                    full[idx],
                    bounds=(lo[idx], hi[idx]),
                    method="trf",
                    xtol=1e-15,
                    ftol=1e-15,
                    gtol=1e-15,
                )
                full[idx] = res.x
            violation = max_violation(full)
            if best is None or violation < best[0]:
                best = (violation, full.copy())
            if violation < tol:
                point = certify_rational(system, full)
                if point is not None:
                    return NumericResult("sat", list(map(float, full)), violation, point, used)
    residual = best[0] if best else None
    witness = list(map(float, best[1])) if best else None
    return NumericResult("unknown", witness, residual, None, used)


# ---------------------------------------------------------------------------
# SMT-LIB emission and the external solver client


class SolverLaunchError(RuntimeError):
    pass


class SolverTimeoutError(RuntimeError):
    pass


class MalformedResponseError(RuntimeError):
    pass


def _smt_rat(value) -> str:
    num, den = value.numerator, value.denominator
    if den == 1:
        return str(num) if num >= 0 else f"(- {-num})"
    body = f"(/ {abs(num)} {den})"
    return body if num >= 0 else f"(- {body})"


def _smt_expr(expr: PExpr, names: Sequence[str]) -> str:
    if isinstance(expr, PConst):
        return _smt_rat(expr.value)
    if isinstance(expr, PVar):
        return names[expr.index]
    op = "+" if isinstance(expr, PAdd) else "*"
    parts = " ".join(_smt_expr(e, names) for e in expr.items)
    return f"({op} {parts})"


def emit_smtlib(system: EtrSystem) -> str:
    """Deterministic QF_NRA rendering of the system (golden-file stable)."""
    names = system.var_names()
    lines = ["(set-logic QF_NRA)", "(set-option :produce-models true)"]
    for v in system.variables:
        if v.note:
            lines.append(f"; {v.name} = mass of {v.note}")
        elif v.assignment:
            pretty = " ".join(f"{a}={b}" for a, b in v.assignment)
            lines.append(f"; {v.name} = mass of {pretty}")
    for v in system.variables:
        lines.append(f"(declare-const {v.name} Real)")
    for v in system.variables:
        if v.lo is not None:
            lines.append(f"(assert (>= {v.name} {_smt_rat(v.lo)}))")
        if v.hi is not None:
            lines.append(f"(assert (<= {v.name} {_smt_rat(v.hi)}))")
    for c in system.constraints:
        body = _smt_expr(c.expr, names)
        op = {"=": "=", ">=": ">=", ">": ">"}[c.rel]
        lines.append(f"(assert ({op} {body} 0))")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


@dataclass
class ExternalResult:
    status: str  # sat | unsat | unknown
    model: Optional[dict[str, object]]
    raw: str


def _sexprs(text: str):
    """Minimal s-expression reader: atoms are whitespace/paren-delimited."""
    toks = re.findall(r"\(|\)|[^\s()]+", text)
    pos = 0

    def read():
        nonlocal pos
        tok = toks[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(toks) and toks[pos] != ")":
                items.append(read())
            pos += 1  # closing paren (tolerate truncation)
            return items
        return tok

    out = []
    while pos < len(toks):
        if toks[pos] == ")":
            pos += 1
            continue
        out.append(read())
    return out


def _sexp_value(node):
    if isinstance(node, str):
        if re.fullmatch(r"-?\d+", node):
            return rat(int(node))
        if re.fullmatch(r"-?\d+\.\d+(\?)?", node):
            return Rat(Fraction(node.rstrip("?")))
        return None
    if not node:
        return None
    if node[0] == "/" and len(node) == 3:
        a, b = _sexp_value(node[1]), _sexp_value(node[2])
        return None if a is None or b is None or b == 0 else a / b
    if node[0] == "-" and len(node) == 2:
        inner = _sexp_value(node[1])
        return None if inner is None else -inner
    return None


def _walk_define_funs(node, model):
    if not isinstance(node, list):
        return
    if len(node) >= 5 and node[0] == "define-fun" and node[2] == []:
        value = _sexp_value(node[4])
        if value is not None and isinstance(node[1], str):
            model[node[1]] = value
        return
    for item in node:
        _walk_define_funs(item, model)


def parse_external_output(raw: str) -> ExternalResult:
    status = None
    for line in raw.splitlines():
        word = line.strip()
        if word in ("sat", "unsat", "unknown"):
            status = word
            break
    if status is None:
        raise MalformedResponseError(f"no sat/unsat/unknown verdict in output: {raw[:200]!r}")
    model: Optional[dict[str, object]] = None
    if status == "sat":
        model = {}
        for node in _sexprs(raw[raw.index(status) + len(status):]):
            _walk_define_funs(node, model)
        if not model:
            model = None
    return ExternalResult(status, model, raw)


def run_external(text: str, command: str, timeout_ms: int = 30_000) -> ExternalResult:
    """Run the configured solver command on the emitted file.

    The command string may contain a ``{file}`` placeholder; otherwise the
    file path is appended.  Launch failures, timeouts and malformed output
    raise distinct exceptions.
    """
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(text)
        path = fh.name
    argv = shlex.split(command)
    if any("{file}" in a for a in argv):
        argv = [a.replace("{file}", path) for a in argv]
    else:
        argv = argv + [path]
    try:
        proc = subprocess.run(
            argv,
            capture_output=True,
            text=True,
            timeout=timeout_ms / 1000.0,
        )
    except FileNotFoundError as exc:
        raise SolverLaunchError(f"cannot launch {argv[0]!r}: {exc}") from None
    except subprocess.TimeoutExpired:
        raise SolverTimeoutError(f"solver exceeded {timeout_ms} ms") from None
    return parse_external_output(proc.stdout)
