"""Restricted state descriptions and compatibility with a variable order.

A state description fixes, for every intervention and every variable a
formula mentions, the value that variable takes upon that intervention.  The
candidate values per variable are the mentioned ones plus at most one fresh
"anything else" value, so the description space stays formula-sized rather
than signature-sized.

The compatibility check is the three-verdict scan over the description's
results table: an intervention contradicting its own results makes the
description unsatisfiable; two interventions that leave a variable free,
agree on everything ordered below it, yet disagree on the variable itself
are incompatible with the order.  Compatible descriptions are exactly those
with a deterministic model respecting the order, which is also how
`compatible_descriptions` enumerates them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .lang import (
    EAnd,
    EBox,
    ENot,
    Event,
    Intervention,
    PAssign,
    Signature,
    TOP,
    p_and,
    print_event,
)
from .rat import ONE, ZERO, rat
from .scm import SCM, SCMError

COMPATIBLE = "compatible"
UNSATISFIABLE = "unsatisfiable"
INCOMPATIBLE = "incompatible_with_order"


class StateDescError(ValueError):
    pass


class CoverageError(StateDescError):
    """Event mentions an intervention or variable outside the context."""


@dataclass(frozen=True)
class DeltaContext:
    """Interventions, variables and candidate values harvested from a formula."""

    sig: Signature
    interventions: tuple[Intervention, ...]
    variables: tuple[str, ...]
    assignments: tuple[tuple[str, ...], ...]  # aligned with variables, domain order
    fresh: tuple[Optional[str], ...]

    def __post_init__(self):
        if len(self.variables) != len(self.assignments) or len(self.variables) != len(self.fresh):
            raise StateDescError("misaligned context fields")
        var_set = set(self.variables)
        for var, cands, fresh in zip(self.variables, self.assignments, self.fresh):
            dom = self.sig.domain(var)
            if not cands or any(v not in dom for v in cands):
                raise StateDescError(f"candidate values for {var!r} must be nonempty domain values")
            if fresh is not None and fresh not in cands:
                raise StateDescError(f"fresh value for {var!r} must be one of its candidates")
        for interv in self.interventions:
            for var, val in interv.assignments:
                if var not in var_set:
                    raise StateDescError(f"intervention touches {var!r} outside the context")
                if val not in self.candidates(var):
                    raise StateDescError(f"intervention value {val!r} missing from candidates of {var!r}")
        if len(set(self.interventions)) != len(self.interventions):
            raise StateDescError("duplicate interventions in context")

    def candidates(self, var: str) -> tuple[str, ...]:
        return self.assignments[self.variables.index(var)]

    def var_index(self, var: str) -> int:
        return self.variables.index(var)

    def interv_index(self, interv: Intervention) -> int:
        try:
            return self.interventions.index(interv)
        except ValueError:
            raise CoverageError(f"intervention [{interv.assignments}] not in context") from None

    def description_count(self) -> int:
        n = 1
        for cands in self.assignments:
            n *= len(cands) ** len(self.interventions)
        return n


def make_context(
    sig: Signature,
    interventions: Iterable[Intervention],
    variables: Iterable[str],
    mentioned: Optional[Mapping[str, Iterable[str]]] = None,
) -> DeltaContext:
    """Build a context directly (tests and callers that bypass a formula).

    With ``mentioned`` omitted, every domain value counts as mentioned (no
    fresh value).  Intervention values always count as mentioned.
    """
    variables = tuple(v for v in sig.names if v in set(variables))
    interventions = tuple(_sorted_interventions(interventions))
    mentioned_map: dict[str, set[str]] = {
        v: set(sig.domain(v)) if mentioned is None else set(mentioned.get(v, ()))
        for v in variables
    }
    for interv in interventions:
        for var, val in interv.assignments:
            mentioned_map.setdefault(var, set()).add(val)
    cands, fresh = _candidates(sig, variables, mentioned_map)
    return DeltaContext(sig, interventions, variables, cands, fresh)


def _sorted_interventions(interventions: Iterable[Intervention]) -> list[Intervention]:
    return sorted(set(interventions), key=lambda i: (not i.trivial, i.assignments))


def _candidates(sig, variables, mentioned_map):
    cands = []
    fresh = []
    for var in variables:
        dom = sig.domain(var)
        seen = mentioned_map.get(var, set())
        star = next((v for v in dom if v not in seen), None)
        keep = tuple(v for v in dom if v in seen or v == star)
        cands.append(keep)
        fresh.append(star)
    return tuple(cands), tuple(fresh)


def build_context(phi, sig: Signature) -> DeltaContext:
    """Context of a formula: its interventions (plus the trivial one), its
    variables, and per variable the mentioned values plus one fresh value.

    The trivial intervention is always included; this inflates the
    description space but keeps bare events expressible in every context.
    The fresh value is the least-index unmentioned domain value; a variable
    whose domain is exhausted by mentioned values gets none.
    """
    from .lang import mentioned_interventions, mentioned_values, mentioned_variables

    interventions = tuple(_sorted_interventions(set(mentioned_interventions(phi)) | {TOP}))
    variables = tuple(v for v in sig.names if v in mentioned_variables(phi))
    mentioned_map = {v: set(vals) for v, vals in mentioned_values(phi).items()}
    cands, fresh = _candidates(sig, variables, mentioned_map)
    return DeltaContext(sig, interventions, variables, cands, fresh)


@dataclass(frozen=True)
class StateDescription:
    """One cell of the description space: a total results table."""

    ctx: DeltaContext
    table: tuple[tuple[str, ...], ...]  # [intervention index][variable index]

    def __post_init__(self):
        if len(self.table) != len(self.ctx.interventions):
            raise StateDescError("table has the wrong number of intervention rows")
        for row, _ in zip(self.table, self.ctx.interventions):
            if len(row) != len(self.ctx.variables):
                raise StateDescError("table row has the wrong number of variables")
            for val, cands in zip(row, self.ctx.assignments):
                if val not in cands:
                    raise StateDescError(f"table value {val!r} is not a candidate")

    def result(self, interv: Intervention, var: str) -> str:
        return self.table[self.ctx.interv_index(interv)][self.ctx.var_index(var)]

    def as_event(self) -> Event:
        """The canonical conjunction over interventions of boxed results."""
        parts = []
        for interv, row in zip(self.ctx.interventions, self.table):
            body = p_and(*[PAssign(v, val) for v, val in zip(self.ctx.variables, row)])
            parts.append(EBox(interv, body))
        out = parts[0]
        for ev in parts[1:]:
            out = EAnd(out, ev)
        return out

    def render(self) -> str:
        return print_event(self.as_event())


def description_from_results(
    ctx: DeltaContext, results: Mapping[Intervention, Mapping[str, str]]
) -> StateDescription:
    table = tuple(
        tuple(results[interv][var] for var in ctx.variables) for interv in ctx.interventions
    )
    return StateDescription(ctx, table)


def iterate_descriptions(ctx: DeltaContext) -> Iterator[StateDescription]:
    """Deterministic lexicographic stream over the whole description space."""
    cells = [ctx.assignments[v] for _ in ctx.interventions for v in range(len(ctx.variables))]
    width = len(ctx.variables)
    for flat in itertools.product(*cells):
        table = tuple(
            tuple(flat[r * width : (r + 1) * width]) for r in range(len(ctx.interventions))
        )
        yield StateDescription(ctx, table)


# ---------------------------------------------------------------------------
# compatibility with an order


@dataclass(frozen=True)
class CompatibilityVerdict:
    status: str
    variable: Optional[str] = None
    interventions: tuple[Intervention, ...] = ()

    @property
    def compatible(self) -> bool:
        return self.status == COMPATIBLE


def check_compatibility(
    delta: StateDescription, order: Sequence[str], trace: Optional[list] = None
) -> CompatibilityVerdict:
    """Scan the results table along the order.

    Rejects as unsatisfiable when an intervention's own assignment clashes
    with its recorded result, as incompatible when two interventions leaving
    a variable free agree on all earlier results yet disagree on it.
    """
    ctx = delta.ctx
    order = tuple(order)
    if sorted(order) != sorted(ctx.variables):
        raise StateDescError("order must enumerate exactly the context variables")
    col = [ctx.var_index(v) for v in order]
    rows = list(range(len(ctx.interventions)))
    if trace is not None:
        header = ["intervention"] + list(order)
        lines = [header]
        for r in rows:
            name = "[]" if ctx.interventions[r].trivial else "[" + ", ".join(
                f"{v}={val}" for v, val in ctx.interventions[r].assignments
            ) + "]"
            lines.append([name] + [delta.table[r][c] for c in col])
        widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
        for row in lines:
            trace.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))

    for i, var in enumerate(order):
        ci = col[i]
        for r in rows:
            interv = ctx.interventions[r]
            pinned = interv.value(var)
            if pinned is not None and delta.table[r][ci] != pinned:
                if trace is not None:
                    trace.append(
                        f"reject: intervention pins {var}={pinned} but results say {var}={delta.table[r][ci]}"
                    )
                return CompatibilityVerdict(UNSATISFIABLE, var, (interv,))
        free = [r for r in rows if ctx.interventions[r].value(var) is None]
        for a, b in itertools.combinations(free, 2):
            if delta.table[a][ci] == delta.table[b][ci]:
                continue
            if all(delta.table[a][col[j]] == delta.table[b][col[j]] for j in range(i)):
                if trace is not None:
                    trace.append(
                        f"reject at {var}: two interventions agree below but differ on {var}"
                    )
                return CompatibilityVerdict(
                    INCOMPATIBLE, var, (ctx.interventions[a], ctx.interventions[b])
                )
    if trace is not None:
        trace.append("compatible")
    return CompatibilityVerdict(COMPATIBLE)


# ---------------------------------------------------------------------------
# entailment against a complete description


def entails(delta: StateDescription, event: Event) -> bool:
    """Does the description force the event?

    Boxed literals are looked up directly in the results table; negation and
    conjunction evaluate classically (they distribute over the box).
    """
    ctx = delta.ctx

    def eval_prop(p, row) -> bool:
        if isinstance(p, PAssign):
            if p.var not in ctx.variables:
                raise CoverageError(f"variable {p.var!r} not covered by the description")
            return delta.table[row][ctx.var_index(p.var)] == p.value
        from .lang import PAnd, PNot

        if isinstance(p, PNot):
            return not eval_prop(p.body, row)
        return eval_prop(p.left, row) and eval_prop(p.right, row)

    def eval_event(ev: Event) -> bool:
        if isinstance(ev, EBox):
            row = ctx.interv_index(ev.interv)
            return eval_prop(ev.body, row)
        if isinstance(ev, ENot):
            return not eval_event(ev.body)
        return eval_event(ev.left) and eval_event(ev.right)

    return eval_event(event)


# ---------------------------------------------------------------------------
# deterministic models of a description, and models from measures


def _delta_functions(delta: StateDescription, order: Sequence[str]):
    """Per-variable maps from full-domain prefixes to values, built along the
    order; entries unconstrained by the description default to the least
    domain value."""
    ctx = delta.ctx
    order = tuple(order)
    fns: dict[str, dict[tuple[str, ...], str]] = {}
    for i, var in enumerate(order):
        prior = order[:i]
        table: dict[tuple[str, ...], str] = {}
        for prefix in itertools.product(*(ctx.sig.domain(v) for v in prior)):
            value = None
            for r, interv in enumerate(ctx.interventions):
                if interv.value(var) is not None:
                    continue
                results = delta.table[r]
                if all(
                    results[ctx.var_index(pv)] == pval for pv, pval in zip(prior, prefix)
                ):
                    value = results[ctx.var_index(var)]
                    break
            table[prefix] = value if value is not None else ctx.sig.domain(var)[0]
        fns[var] = table
    return fns


class MeasureError(StateDescError):
    pass


def model_from_measure(
    ctx: DeltaContext,
    order: Sequence[str],
    mu: Mapping[StateDescription, object],
) -> SCM:
    """One-exogenous-variable model inducing the given measure on descriptions.

    The exogenous variable ranges over the support; under u = delta the
    equations follow a deterministic model of delta built along the order.
    Requires every support description compatible with the order and weights
    summing to one.
    """
    order = tuple(order)
    support = sorted((d for d, w in mu.items() if rat(w) != 0), key=lambda d: d.table)
    weights = [rat(mu[d]) for d in support]
    if not support:
        raise MeasureError("measure has empty support")
    if any(w < 0 for w in weights):
        raise MeasureError("negative weight")
    if sum(weights, ZERO) != ONE:
        raise MeasureError("weights must sum to exactly 1")
    for d in support:
        if d.ctx != ctx:
            raise MeasureError("description from a different context")
        verdict = check_compatibility(d, order)
        if not verdict.compatible:
            raise MeasureError(f"support description is {verdict.status} at {verdict.variable}")

    sig = ctx.sig.restrict(ctx.variables)
    exo_name = "U"
    while sig.has_variable(exo_name):
        exo_name = "_" + exo_name
    exo_values = tuple(f"d{i}" for i in range(len(support)))
    delta_fns = [_delta_functions(d, order) for d in support]
    order_pos = {v: i for i, v in enumerate(order)}

    fns = {}
    for var in sig.names:
        prior = order[: order_pos[var]]

        def fn(env, var=var, prior=prior):
            idx = int(env[exo_name][1:])
            prefix = tuple(env[p] for p in prior)
            return delta_fns[idx][var][prefix]

        fns[var] = fn

    from .scm import make_scm

    return make_scm(
        sig,
        [(exo_name, exo_values)],
        {(v,): w for v, w in zip(exo_values, weights)},
        fns,
    )


# ---------------------------------------------------------------------------
# enumerating the compatible descriptions of an order


def compatible_descriptions(
    ctx: DeltaContext, order: Sequence[str], cap: int = 500_000
) -> list[StateDescription]:
    """All descriptions compatible with the order, via the deterministic
    models that witness them.

    A description is compatible exactly when some deterministic assignment of
    each variable from its earlier candidates satisfies it, so enumerating
    those assignments and reading off the induced results sweeps the whole
    compatible set without filtering the full description space.
    """
    order = tuple(order)
    if sorted(order) != sorted(ctx.variables):
        raise StateDescError("order must enumerate exactly the context variables")
    cands = {v: ctx.candidates(v) for v in order}
    prefix_spaces = []
    model_count = 1
    for i, var in enumerate(order):
        prefixes = list(itertools.product(*(cands[v] for v in order[:i])))
        prefix_spaces.append(prefixes)
        model_count *= len(cands[var]) ** len(prefixes)
        if model_count > cap:
            raise StateDescError(
                f"{model_count}+ deterministic models exceed the cap of {cap}"
            )

    out = set()
    choice_spaces = [
        itertools.product(cands[var], repeat=len(prefix_spaces[i]))
        for i, var in enumerate(order)
    ]
    for choices in itertools.product(*choice_spaces):
        fns = [dict(zip(prefix_spaces[i], choices[i])) for i in range(len(order))]
        rows = []
        results_by_var: dict[str, str] = {}
        for interv in ctx.interventions:
            results_by_var.clear()
            for i, var in enumerate(order):
                pinned = interv.value(var)
                if pinned is not None:
                    results_by_var[var] = pinned
                else:
                    prefix = tuple(results_by_var[v] for v in order[:i])
                    results_by_var[var] = fns[i][prefix]
            rows.append(tuple(results_by_var[v] for v in ctx.variables))
        out.add(tuple(rows))
    return [StateDescription(ctx, table) for table in sorted(out)]
