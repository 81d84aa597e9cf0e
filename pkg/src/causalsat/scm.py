"""Finite structural causal models and their exact semantics.

A model carries a signature of endogenous variables, finitely many exogenous
variables with an exact rational distribution over their joint assignments,
and one total function table per endogenous variable.  Tables are explicit
(no expression language): recursivity checks are exhaustive table scans, and
all probabilities come out as exact rationals.

Models are immutable; interventions build fresh models sharing the unchanged
tables.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .lang import (
    EAnd,
    EBox,
    ENot,
    Event,
    FAnd,
    FGeq,
    FNot,
    Formula,
    Intervention,
    LangError,
    PAnd,
    PAssign,
    PNot,
    Prop,
    Signature,
    TConst,
    TCond,
    TProb,
    TProd,
    TSum,
    Term,
)
from .rat import ONE, ZERO, Rat, rat, rat_str


class SCMError(ValueError):
    """Malformed model or model file."""


class NonConvergenceError(SCMError):
    """Equations failed to reach a fixpoint (non-recursive input)."""


class ScopeError(SCMError):
    """Influence enumeration over too many variables; pass an explicit scope."""


ExoAssign = tuple[str, ...]
EndoAssign = tuple[str, ...]
FunctionTable = dict[tuple[tuple[str, ...], ExoAssign], str]

INFLUENCE_SCOPE_CAP = 6


@dataclass(frozen=True, eq=False)
class SCM:
    sig: Signature
    exo: tuple[tuple[str, tuple[str, ...]], ...]
    dist: tuple[tuple[ExoAssign, object], ...]  # exo assignment -> rational weight
    functions: Mapping[str, FunctionTable]

    def __post_init__(self):
        names = set(self.sig.names)
        if names & {n for n, _ in self.exo}:
            raise SCMError("endogenous and exogenous names overlap")
        total = ZERO
        seen = set()
        for u, w in self.dist:
            if len(u) != len(self.exo):
                raise SCMError("distribution entry does not assign every exogenous variable")
            for (name, dom), val in zip(self.exo, u):
                if val not in dom:
                    raise SCMError(f"value {val!r} not in the domain of exogenous {name!r}")
            if u in seen:
                raise SCMError("duplicate distribution entry")
            seen.add(u)
            if w < 0:
                raise SCMError("negative weight in the exogenous distribution")
            total += w
        if total != ONE:
            raise SCMError(f"exogenous weights sum to {total}, expected exactly 1")
        for var in self.sig.names:
            if var not in self.functions:
                raise SCMError(f"missing function table for {var!r}")
        exo_space = list(itertools.product(*(dom for _, dom in self.exo)))
        for var in self.sig.names:
            table = self.functions[var]
            others = [self.sig.domain(v) for v in self.sig.names if v != var]
            expected = {
                (combo, u)
                for combo in itertools.product(*others)
                for u in exo_space
            }
            if set(table) != expected:
                raise SCMError(f"function table for {var!r} is not total over the product space")
            dom = self.sig.domain(var)
            for val in table.values():
                if val not in dom:
                    raise SCMError(f"table for {var!r} outputs {val!r} outside its domain")

    @property
    def exo_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.exo)

    def others(self, var: str) -> tuple[str, ...]:
        return tuple(v for v in self.sig.names if v != var)


def make_scm(
    sig: Signature,
    exo: Sequence[tuple[str, Sequence[str]]],
    dist: Mapping[ExoAssign, object] | Iterable[tuple[ExoAssign, object]],
    fns: Mapping[str, Callable[[Mapping[str, str]], str]],
    max_table_size: int = 1_000_000,
) -> SCM:
    """Materialize function tables from callables over an environment dict.

    Each callable sees every other endogenous variable and every exogenous
    variable by name and returns the output value.
    """
    exo_t = tuple((n, tuple(d)) for n, d in exo)
    entries = dist.items() if isinstance(dist, Mapping) else dist
    dist_t = tuple(sorted(((tuple(u), rat(w)) for u, w in entries)))
    endo = sig.names
    exo_space = list(itertools.product(*(d for _, d in exo_t)))
    tables: dict[str, FunctionTable] = {}
    for var in endo:
        others = tuple(v for v in endo if v != var)
        size = 1
        for v in others:
            size *= len(sig.domain(v))
        size *= len(exo_space)
        if size > max_table_size:
            raise SCMError(f"table for {var!r} would have {size} entries")
        table: FunctionTable = {}
        for combo in itertools.product(*(sig.domain(v) for v in others)):
            env = dict(zip(others, combo))
            for u in exo_space:
                env.update(zip((n for n, _ in exo_t), u))
                table[(combo, u)] = fns[var](env)
        tables[var] = table
    return SCM(sig, exo_t, dist_t, tables)


# ---------------------------------------------------------------------------
# solving the equations


def _solve(m: SCM, u: ExoAssign, interv: Intervention) -> EndoAssign:
    """Unique solution of the (recursive) equations under u and an override.

    Jacobi iteration from the least assignment; a recursive model stabilizes
    within n passes, anything that fails to stabilize in n+1 is rejected.
    """
    endo = m.sig.names
    pinned = {v: interv.value(v) for v in interv.domain_vars()}
    cur = tuple(pinned.get(v) or m.sig.domain(v)[0] for v in endo)
    for _ in range(len(endo) + 1):
        nxt = []
        for idx, var in enumerate(endo):
            if var in pinned:
                nxt.append(pinned[var])
                continue
            others = tuple(val for j, val in enumerate(cur) if j != idx)
            nxt.append(m.functions[var][(others, u)])
        nxt = tuple(nxt)
        if nxt == cur:
            return cur
        cur = nxt
    raise NonConvergenceError(
        f"equations did not stabilize within {len(endo)} passes under {interv}"
    )


class Evaluator:
    """Caching evaluator for one model; all public helpers route through it."""

    def __init__(self, m: SCM):
        self.m = m
        self._solutions: dict[tuple[Intervention, ExoAssign], EndoAssign] = {}
        self._event_prob: dict[Event, object] = {}

    def solution(self, u: ExoAssign, interv: Intervention) -> EndoAssign:
        key = (interv, u)
        out = self._solutions.get(key)
        if out is None:
            out = _solve(self.m, u, interv)
            self._solutions[key] = out
        return out

    def _eval_prop(self, p: Prop, env: dict[str, str]) -> bool:
        if isinstance(p, PAssign):
            return env[p.var] == p.value
        if isinstance(p, PNot):
            return not self._eval_prop(p.body, env)
        return self._eval_prop(p.left, env) and self._eval_prop(p.right, env)

    def eval_event(self, u: ExoAssign, ev: Event) -> bool:
        if isinstance(ev, EBox):
            endo = self.solution(u, ev.interv)
            env = dict(zip(self.m.sig.names, endo))
            return self._eval_prop(ev.body, env)
        if isinstance(ev, ENot):
            return not self.eval_event(u, ev.body)
        return self.eval_event(u, ev.left) and self.eval_event(u, ev.right)

    def event_prob(self, ev: Event):
        out = self._event_prob.get(ev)
        if out is None:
            out = ZERO
            for u, w in self.m.dist:
                if w != 0 and self.eval_event(u, ev):
                    out += w
            self._event_prob[ev] = out
        return out

    def term_value(self, t: Term):
        if isinstance(t, TProb):
            return self.event_prob(t.event)
        if isinstance(t, TCond):
            den = self.event_prob(t.given)
            if den == 0:
                return ONE
            return self.event_prob(EAnd(t.event, t.given)) / den
        if isinstance(t, TConst):
            return t.value()
        if isinstance(t, TSum):
            return self.term_value(t.left) + self.term_value(t.right)
        return self.term_value(t.left) * self.term_value(t.right)

    def check(self, phi: Formula) -> bool:
        if isinstance(phi, FGeq):
            return self.term_value(phi.left) >= self.term_value(phi.right)
        if isinstance(phi, FNot):
            return not self.check(phi.body)
        return self.check(phi.left) and self.check(phi.right)

    def atom_values(self, phi: Formula) -> list[tuple[Formula, object, object]]:
        """Every comparison atom with the exact values of both sides."""
        out = []

        def walk(f: Formula):
            if isinstance(f, FGeq):
                out.append((f, self.term_value(f.left), self.term_value(f.right)))
            elif isinstance(f, FNot):
                walk(f.body)
            else:
                walk(f.left)
                walk(f.right)

        walk(phi)
        return out


def eval_event(m: SCM, u: ExoAssign, ev: Event) -> bool:
    return Evaluator(m).eval_event(u, ev)


def term_value(m: SCM, t: Term):
    return Evaluator(m).term_value(t)


def model_check(m: SCM, phi: Formula) -> bool:
    return Evaluator(m).check(phi)


def apply_intervention(interv: Intervention, m: SCM) -> SCM:
    """Surgical replacement: pinned variables get constant tables."""
    for var in interv.domain_vars():
        m.sig.check_assignment(var, interv.value(var))
    functions = dict(m.functions)
    for var in interv.domain_vars():
        value = interv.value(var)
        functions[var] = {key: value for key in m.functions[var]}
    return SCM(m.sig, m.exo, m.dist, functions)


# ---------------------------------------------------------------------------
# recursivity and influence


def is_recursive(m: SCM, order: Sequence[str]) -> bool:
    """Does every table ignore the variables not strictly below it in order?"""
    order = tuple(order)
    if sorted(order) != sorted(m.sig.names):
        raise SCMError("order must enumerate exactly the endogenous variables")
    rank = {v: i for i, v in enumerate(order)}
    for var in m.sig.names:
        others = m.others(var)
        below_idx = [i for i, v in enumerate(others) if rank[v] < rank[var]]
        seen: dict = {}
        for (combo, u), val in m.functions[var].items():
            key = (tuple(combo[i] for i in below_idx), u)
            prev = seen.setdefault(key, val)
            if prev != val:
                return False
    return True


def table_dependencies(m: SCM, var: str) -> set[str]:
    """Other endogenous variables whose value the table actually reads."""
    others = m.others(var)
    deps = set()
    table = m.functions[var]
    for j, w in enumerate(others):
        grouped: dict = {}
        for (combo, u), val in table.items():
            key = (combo[:j] + combo[j + 1 :], u)
            prev = grouped.setdefault(key, val)
            if prev != val:
                deps.add(w)
                break
    return deps


def find_recursive_order(m: SCM) -> Optional[tuple[str, ...]]:
    """Some order under which the model is recursive, or None (cyclic).

    Deterministic: picks the signature-least available variable at each step.
    """
    deps = {v: table_dependencies(m, v) for v in m.sig.names}
    remaining = list(m.sig.names)
    out = []
    placed: set[str] = set()
    while remaining:
        pick = next((v for v in remaining if deps[v] <= placed), None)
        if pick is None:
            return None
        out.append(pick)
        placed.add(pick)
        remaining.remove(pick)
    return tuple(out)


def influences(
    m: SCM,
    scope: Optional[Iterable[str]] = None,
    cap: int = INFLUENCE_SCOPE_CAP,
) -> frozenset[tuple[str, str]]:
    """Pairs (Vi, Vj): two interventions differing only at Vi move Vj somewhere
    of positive probability.  Enumerates every intervention with domain inside
    the scope, so the scope is capped; pass one explicitly for larger models.
    """
    endo = m.sig.names
    if scope is None:
        if len(endo) > cap:
            raise ScopeError(
                f"{len(endo)} endogenous variables exceed the cap of {cap}; pass scope="
            )
        scope = endo
    scope = tuple(v for v in endo if v in set(scope))
    ev = Evaluator(m)
    out: set[tuple[str, str]] = set()
    for vi in scope:
        rest = [v for v in scope if v != vi]
        vi_dom = m.sig.domain(vi)
        for k in range(len(rest) + 1):
            for subset in itertools.combinations(rest, k):
                for values in itertools.product(*(m.sig.domain(v) for v in subset)):
                    base = list(zip(subset, values))
                    for a, b in itertools.combinations(vi_dom, 2):
                        ia = Intervention(tuple(sorted(base + [(vi, a)])))
                        ib = Intervention(tuple(sorted(base + [(vi, b)])))
                        for u, w in m.dist:
                            if w == 0:
                                continue
                            sa = ev.solution(u, ia)
                            sb = ev.solution(u, ib)
                            for j, vj in enumerate(endo):
                                if vj == vi or vj in subset:
                                    continue
                                if sa[j] != sb[j]:
                                    out.add((vi, vj))
    return frozenset(out)


def compatible_with(
    m: SCM, order: Sequence[str], cap: int = INFLUENCE_SCOPE_CAP
) -> bool:
    """No influence pair runs backwards against the order."""
    order = tuple(order)
    rank = {v: i for i, v in enumerate(order)}
    rel = influences(m, cap=cap)
    return all(rank[a] < rank[b] for a, b in rel)


# ---------------------------------------------------------------------------
# JSON interchange


def scm_to_dict(m: SCM) -> dict:
    endo = [{"name": n, "domain": list(d)} for n, d in m.sig.variables]
    exo = [{"name": n, "domain": list(d)} for n, d in m.exo]
    dist = [
        {"u": dict(zip(m.exo_names, u)), "w": rat_str(w)}
        for u, w in m.dist
    ]
    functions = {}
    for var in m.sig.names:
        others = m.others(var)
        rows = []
        for (combo, u), val in sorted(m.functions[var].items()):
            rows.append(
                {
                    "given": dict(zip(others, combo)),
                    "u": dict(zip(m.exo_names, u)),
                    "value": val,
                }
            )
        functions[var] = rows
    return {"endogenous": endo, "exogenous": exo, "dist": dist, "functions": functions}


def _expect(cond: bool, msg: str):
    if not cond:
        raise SCMError(msg)


def scm_from_dict(data: dict) -> SCM:
    _expect(isinstance(data, dict), "model file must be a JSON object")
    for key in ("endogenous", "exogenous", "dist", "functions"):
        _expect(key in data, f"missing key {key!r}")

    def var_list(items, where):
        out = []
        _expect(isinstance(items, list), f"{where} must be a list")
        for i, it in enumerate(items):
            _expect(
                isinstance(it, dict) and "name" in it and "domain" in it,
                f"{where}[{i}] needs 'name' and 'domain'",
            )
            _expect(
                isinstance(it["domain"], list) and it["domain"],
                f"{where}[{i}].domain must be a nonempty list",
            )
            out.append((str(it["name"]), tuple(str(v) for v in it["domain"])))
        return out

    endo = var_list(data["endogenous"], "endogenous")
    exo = var_list(data["exogenous"], "exogenous")
    try:
        sig = Signature(tuple(endo))
    except LangError as exc:
        raise SCMError(str(exc)) from None
    exo_names = [n for n, _ in exo]

    def read_assignment(obj, names, where) -> tuple[str, ...]:
        _expect(isinstance(obj, dict), f"{where} must be an object")
        _expect(set(obj) == set(names), f"{where} must assign exactly {sorted(names)}")
        return tuple(str(obj[n]) for n in names)

    dist = []
    _expect(isinstance(data["dist"], list), "dist must be a list")
    for i, entry in enumerate(data["dist"]):
        _expect(
            isinstance(entry, dict) and "u" in entry and "w" in entry,
            f"dist[{i}] needs 'u' and 'w'",
        )
        u = read_assignment(entry["u"], exo_names, f"dist[{i}].u")
        try:
            w = rat(str(entry["w"]))
        except (ValueError, ZeroDivisionError):
            raise SCMError(f"dist[{i}].w is not a rational") from None
        dist.append((u, w))

    _expect(isinstance(data["functions"], dict), "functions must be an object")
    functions: dict[str, FunctionTable] = {}
    for var in sig.names:
        _expect(var in data["functions"], f"missing function table for {var!r}")
        others = tuple(v for v in sig.names if v != var)
        table: FunctionTable = {}
        rows = data["functions"][var]
        _expect(isinstance(rows, list), f"functions[{var!r}] must be a list")
        for i, row in enumerate(rows):
            where = f"functions[{var!r}][{i}]"
            _expect(
                isinstance(row, dict) and "given" in row and "u" in row and "value" in row,
                f"{where} needs 'given', 'u' and 'value'",
            )
            combo = read_assignment(row["given"], others, f"{where}.given")
            u = read_assignment(row["u"], exo_names, f"{where}.u")
            _expect((combo, u) not in table, f"{where} duplicates an entry")
            table[(combo, u)] = str(row["value"])
        functions[var] = table
    try:
        return SCM(sig, tuple(exo), tuple(sorted(dist)), functions)
    except SCMError:
        raise
    except ValueError as exc:
        raise SCMError(str(exc)) from None


def scm_to_json(m: SCM, indent: Optional[int] = None) -> str:
    return json.dumps(scm_to_dict(m), indent=indent, sort_keys=True)


def scm_from_json(text: str) -> SCM:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SCMError(f"invalid JSON: {exc}") from None
    return scm_from_dict(data)
