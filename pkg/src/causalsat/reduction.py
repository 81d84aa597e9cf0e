"""Causal-to-probabilistic reduction, certificates, and the decision loop.

A certificate is a variable order plus a set of state descriptions, each
compatible with the order.  The reduction replaces every event probability
by the probability of the disjunction of fresh, mutually exclusive atoms
(assignments of one fresh variable) standing for the certificate's
descriptions that entail the event; a satisfying measure on the fresh atoms
pulls back to a finite recursive model through `model_from_measure`.

One deviation from the bare substitution: the produced formula also asserts
that the fresh atoms carry all the probability mass.  Without it the empty
measure (everything on the reserved "none" value) can satisfy the image of
an unsatisfiable input, e.g. ``P(A=1) >= P((A=1 | ~A=1)) & P(A=0) >= P((A=1
| ~A=1))``, whose image would be solved by the zero vector.  The mass
constraint restores soundness and costs completeness nothing: a small model
concentrates on the certificate's descriptions anyway.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .lang import (
    Event,
    FAnd,
    FGeq,
    FNot,
    Formula,
    PAssign,
    PNot,
    PAnd,
    Signature,
    TCond,
    TConst,
    TProb,
    TProd,
    TSum,
    Term,
    classify,
    e_of,
    f_and,
    f_eq,
    node_count,
    p_or,
    print_formula,
)
from .rat import ONE, ZERO, rat
from .scm import SCM, model_check
from .statedesc import (
    COMPATIBLE,
    DeltaContext,
    StateDescription,
    build_context,
    check_compatibility,
    compatible_descriptions,
    entails,
    model_from_measure,
)


class CertificateError(ValueError):
    """Certificate fails description-space membership or compatibility."""


class BudgetExhausted(RuntimeError):
    """Certificate enumeration hit its budget before the stream ended."""


class WitnessVerificationError(AssertionError):
    """A solver-produced witness failed to model-check; internal inconsistency."""


@dataclass(frozen=True)
class Certificate:
    order: tuple[str, ...]
    descriptions: tuple[StateDescription, ...]


@dataclass
class ReductionResult:
    psi: Formula
    sig: Signature
    fresh_var: str
    mapping: tuple[tuple[StateDescription, PAssign], ...]
    ctx: DeltaContext

    def dictionary(self) -> list[tuple[str, str]]:
        return [(d.render(), f"{a.var}={a.value}") for d, a in self.mapping]


def validate_certificate(cert: Certificate, ctx: DeltaContext):
    if sorted(cert.order) != sorted(ctx.variables):
        raise CertificateError("order must enumerate the formula's variables")
    if len(set(cert.descriptions)) != len(cert.descriptions):
        raise CertificateError("duplicate descriptions in certificate")
    for d in cert.descriptions:
        if d.ctx != ctx:
            raise CertificateError("description does not belong to the formula's space")
        verdict = check_compatibility(d, cert.order)
        if verdict.status != COMPATIBLE:
            raise CertificateError(
                f"description is {verdict.status} at {verdict.variable}"
            )


def reduce_with_certificate(
    phi: Formula, sig: Signature, cert: Certificate, ctx: Optional[DeltaContext] = None
) -> ReductionResult:
    """Substitute fresh mutually exclusive atoms for the certificate's
    descriptions throughout the formula's events."""
    ctx = ctx or build_context(phi, sig)
    validate_certificate(cert, ctx)
    k = len(cert.descriptions)
    values = tuple(str(i) for i in range(max(k, 1) + 1))
    fresh = "W"
    psi_sig = Signature(((fresh, values),))
    atoms = [PAssign(fresh, str(i)) for i in range(k)]

    sub_cache: dict[Event, Event] = {}

    def sub_event(ev: Event) -> Event:
        got = sub_cache.get(ev)
        if got is not None:
            return got
        hits = [atoms[i] for i, d in enumerate(cert.descriptions) if entails(d, ev)]
        if hits:
            out = e_of(p_or(*hits))
        else:
            out = e_of(PAnd(PAssign(fresh, "0"), PAssign(fresh, "1")))
        sub_cache[ev] = out
        return out

    def sub_term(t: Term) -> Term:
        if isinstance(t, TProb):
            return TProb(sub_event(t.event))
        if isinstance(t, TCond):
            return TCond(sub_event(t.event), sub_event(t.given))
        if isinstance(t, TSum):
            return TSum(sub_term(t.left), sub_term(t.right))
        if isinstance(t, TProd):
            return TProd(sub_term(t.left), sub_term(t.right))
        return t

    def sub_formula(f: Formula) -> Formula:
        if isinstance(f, FGeq):
            return FGeq(sub_term(f.left), sub_term(f.right))
        if isinstance(f, FNot):
            return FNot(sub_formula(f.body))
        return FAnd(sub_formula(f.left), sub_formula(f.right))

    body = sub_formula(phi)
    if atoms:
        image = e_of(p_or(*atoms))
    else:
        image = e_of(PAnd(PAssign(fresh, "0"), PAssign(fresh, "1")))
    everything = e_of(p_or(PAssign(fresh, "0"), PNot(PAssign(fresh, "0"))))
    mass = f_eq(TProb(image), TProb(everything))
    psi = FAnd(body, mass)
    mapping = tuple(zip(cert.descriptions, atoms))
    return ReductionResult(psi, psi_sig, fresh, mapping, ctx)


# ---------------------------------------------------------------------------
# certificate enumeration


def enumerate_certificates(
    phi: Formula,
    sig: Signature,
    budget: Optional[int] = 10_000,
    ctx: Optional[DeltaContext] = None,
    max_size: Optional[int] = None,
) -> Iterator[Certificate]:
    """Deterministic stream of (order, description subset) pairs.

    Orders come in permutation order of the formula's variables; subsets of
    each order's compatible descriptions come by increasing size, so small
    certificates are tried first.  Raises BudgetExhausted when the budget
    runs out mid-stream, distinguishable from honest exhaustion.
    """
    ctx = ctx or build_context(phi, sig)
    cap = node_count(phi) if max_size is None else max_size
    yielded = 0
    for order in itertools.permutations(ctx.variables):
        compat = compatible_descriptions(ctx, order)
        for size in range(0, min(cap, len(compat)) + 1):
            for subset in itertools.combinations(compat, size):
                if budget is not None and yielded >= budget:
                    raise BudgetExhausted(f"certificate budget of {budget} exhausted")
                yielded += 1
                yield Certificate(order, subset)


# ---------------------------------------------------------------------------
# the decision loop


@dataclass
class Decision:
    status: str  # sat | unsat | unknown
    witness: Optional[SCM] = None
    witness_verified: bool = False
    certificate: Optional[Certificate] = None
    measure: Optional[dict] = None
    reason: Optional[str] = None
    stats: dict = field(default_factory=dict)


def _pull_back_measure(result_measure, red: ReductionResult):
    """Measure over the fresh variable's values -> measure over descriptions."""
    k = len(red.mapping)
    by_value: dict[str, object] = {}
    for desc, weight in result_measure.items():
        value = desc.table[0][0]
        by_value[value] = by_value.get(value, ZERO) + weight
    none_value = str(max(k, 1))
    if by_value.get(none_value, ZERO) != 0:
        raise WitnessVerificationError("mass escaped to the reserved none-atom")
    return {
        d: by_value.get(str(i), ZERO)
        for i, (d, _) in enumerate(red.mapping)
        if by_value.get(str(i), ZERO) != 0
    }


def decide_causal_sat(
    phi: Formula,
    sig: Signature,
    backend: str = "linear",
    mode: str = "maximal",
    budget_certs: int = 10_000,
    solver_cmd: Optional[str] = None,
    timeout_ms: int = 30_000,
    seed: int = 0,
    restarts: int = 64,
) -> Decision:
    """Decide satisfiability over finite recursive models.

    ``maximal`` mode tries one certificate per variable order, containing
    every description compatible with that order; by zero-extension this is
    equivalent to trying all subsets and exponentially cheaper, and keeps the
    unsat verdict honest.  ``exhaustive`` mode replays the literal
    (order, bounded subset) stream of `enumerate_certificates`.
    """
    from .etr import encode_pure_prob, emit_smtlib, run_external, solve_etr_numeric
    from .linear import FragmentError, eliminate_conditionals, solve_linear

    ctx = build_context(phi, sig)
    stats = {"certificates": 0, "solver_calls": 0, "backend": backend, "mode": mode}
    causal = classify(phi).causal

    def solve_reduced(cert: Certificate) -> Optional[Decision]:
        stats["certificates"] += 1
        red = reduce_with_certificate(phi, sig, cert, ctx)
        stats["solver_calls"] += 1
        if backend == "linear":
            result = solve_linear(eliminate_conditionals(red.psi), red.sig)
            if result.status == "unsat":
                return None
            mu = _pull_back_measure(result.measure, red)
            return _finish(cert, red, mu)
        system = encode_pure_prob(red.psi, red.sig)
        if backend == "numeric":
            res = solve_etr_numeric(system, restarts=restarts, seed=seed)
            if res.status != "sat":
                return None
            mu = _exact_measure_from_point(system, res.rational_point, red)
            if mu is None:
                return Decision(
                    "unknown",
                    reason="numeric witness found but not exactly certifiable",
                    stats=stats,
                )
            return _finish(cert, red, mu)
        if backend == "external":
            if not solver_cmd:
                raise ValueError("external backend needs a solver command")
            out = run_external(emit_smtlib(system), solver_cmd, timeout_ms=timeout_ms)
            if out.status == "unsat":
                return None
            if out.status == "unknown":
                return Decision("unknown", reason="external solver returned unknown", stats=stats)
            point = _rational_point_from_model(system, out.model)
            mu = _exact_measure_from_point(system, point, red) if point else None
            if mu is None:
                return Decision(
                    "sat",
                    witness=None,
                    witness_verified=False,
                    certificate=cert,
                    reason="external solver reported sat; no exact witness extracted",
                    stats=stats,
                )
            return _finish(cert, red, mu)
        raise ValueError(f"unknown backend {backend!r}")

    def _finish(cert: Certificate, red: ReductionResult, mu) -> Decision:
        witness = model_from_measure(ctx, cert.order, mu)
        if not model_check(witness, phi):
            raise WitnessVerificationError(
                "reconstructed witness fails to model-check the input formula"
            )
        return Decision("sat", witness, True, cert, mu, None, stats)

    complete = backend in ("linear", "external")
    truncated = False
    pending: Optional[Decision] = None

    if mode == "maximal":
        orders = (
            list(itertools.permutations(ctx.variables)) if causal else [ctx.variables]
        )
        for order in orders:
            if stats["certificates"] >= budget_certs:
                truncated = True
                break
            cert = Certificate(order, tuple(compatible_descriptions(ctx, order)))
            got = solve_reduced(cert)
            if got is not None:
                if got.status == "unknown":
                    pending = got
                    continue
                return got
    elif mode == "exhaustive":
        try:
            for cert in enumerate_certificates(phi, sig, budget_certs, ctx):
                got = solve_reduced(cert)
                if got is not None:
                    if got.status == "unknown":
                        pending = got
                        continue
                    return got
        except BudgetExhausted:
            truncated = True
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if pending is not None:
        return pending
    if truncated:
        return Decision("unknown", reason="certificate budget exhausted", stats=stats)
    if not complete:
        return Decision(
            "unknown",
            reason="numeric search cannot certify unsatisfiability",
            stats=stats,
        )
    return Decision("unsat", stats=stats)


def _exact_measure_from_point(system, point, red: ReductionResult):
    """Exact description measure from a rational point, or None."""
    if point is None:
        return None
    from .etr import check_point_exact

    if not check_point_exact(system, point):
        return None
    by_value: dict[str, object] = {}
    for var, value in zip(system.variables, point):
        if var.kind == "atom" and var.assignment is not None:
            assignment = dict(var.assignment)
            by_value[assignment[red.fresh_var]] = value
    k = len(red.mapping)
    if by_value.get(str(max(k, 1)), ZERO) != 0:
        return None
    mu = {
        d: by_value.get(str(i), ZERO)
        for i, (d, _) in enumerate(red.mapping)
        if by_value.get(str(i), ZERO) != 0
    }
    if sum(mu.values(), ZERO) != ONE:
        return None
    return mu


def _rational_point_from_model(system, model):
    if not model:
        return None
    point = []
    for var in system.variables:
        val = model.get(var.name)
        if val is None:
            return None
        point.append(val)
    return point


# ---------------------------------------------------------------------------
# entailment


@dataclass
class Entailment:
    status: str  # entails | counterexample | unknown
    counterexample: Optional[SCM] = None
    decision: Optional[Decision] = None


def check_entailment(
    gammas: Sequence[Formula], phi: Formula, sig: Signature, **kwargs
) -> Entailment:
    """Gamma entails phi iff the conjunction of Gamma with phi's negation has
    no finite recursive model."""
    parts = list(gammas) + [FNot(phi)]
    query = f_and(*parts)
    decision = decide_causal_sat(query, sig, **kwargs)
    if decision.status == "unsat":
        return Entailment("entails", None, decision)
    if decision.status == "sat":
        return Entailment("counterexample", decision.witness, decision)
    return Entailment("unknown", None, decision)
