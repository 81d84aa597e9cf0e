import random

import pytest

import oracles
from causalsat.gadget import (
    EtrInverseInstance,
    contradiction_instance,
    encode_etr_inverse,
    mass_of,
    random_satisfiable_instance,
    x_of,
)
from causalsat.lang import FAnd, FGeq, FNot, TCond, classify, iter_terms, print_formula
from causalsat.rat import ONE, ZERO, rat


def _witness_masses(enc, xs):
    """Per-variable value distributions realizing the planted witness under
    an independent product measure."""
    inst = enc.instance
    n = inst.n
    masses = {}
    for i in range(1, n + 1):
        m = mass_of(xs[i - 1], n)
        masses[f"D{i}"] = {"1": m, "0": ONE - m}
    for c, (i, j) in enumerate(inst.inverses):
        if i == j:
            m = mass_of(xs[i - 1], n)
            masses[f"Dc{c}"] = {"1": m, "0": ONE - m}
    if inst.plus:
        dist = {}
        total = ZERO
        for c, (i, j, k) in enumerate(inst.plus):
            dist[str(2 * c + 1)] = mass_of(xs[i - 1], n)
            dist[str(2 * c + 2)] = mass_of(xs[j - 1], n)
            total += dist[str(2 * c + 1)] + dist[str(2 * c + 2)]
        assert total <= ONE
        dist["0"] = ONE - total
        masses["S"] = dist
    for name, domain in enc.sig.variables:
        if name.startswith("E"):
            masses[name] = {v: rat(1, len(domain)) for v in domain}
    return masses


def test_self_product_instance_is_satisfiable_at_one():
    inst = EtrInverseInstance(1, inverses=((1, 1),))
    enc = encode_etr_inverse(inst)
    frag = classify(enc.formula)
    assert (frag.arithmetic, frag.causal) == ("cond", False)
    xs = [ONE]
    assert inst.holds(xs)
    masses = _witness_masses(enc, xs)
    assert masses["D1"]["1"] == rat(1, 2)  # solution map sends 1 to 1/(2n)
    assert oracles.product_measure_check(enc.formula, enc.sig, masses)


def test_wrong_mass_fails_the_encoding():
    inst = EtrInverseInstance(1, inverses=((1, 1),))
    enc = encode_etr_inverse(inst)
    masses = _witness_masses(enc, [ONE])
    masses["D1"] = {"1": rat(1, 3), "0": rat(2, 3)}
    assert not oracles.product_measure_check(enc.formula, enc.sig, masses)


def test_solution_maps_are_inverse():
    for x in (rat(1, 2), ONE, rat(7, 5), rat(2)):
        for n in (1, 2, 4):
            assert x_of(mass_of(x, n), n) == x


def test_contradiction_instance_unsatisfiable_linearly():
    inst = contradiction_instance()
    assert not inst.holds([ZERO]) and not inst.holds([ONE])
    enc = encode_etr_inverse(inst)

    # Dropping the conditional (independence) atoms keeps a sound unsat test:
    # if the remaining linear conjunction has no model, neither has the whole.
    def drop_cond(f):
        if isinstance(f, FAnd):
            l, r = drop_cond(f.left), drop_cond(f.right)
            if l is None:
                return r
            if r is None:
                return l
            return FAnd(l, r)
        if any(isinstance(t, TCond) for t in iter_terms(f)):
            return None
        return f

    linear_part = drop_cond(enc.formula)
    from causalsat.linear import solve_linear

    assert solve_linear(linear_part, enc.sig).status == "unsat"


def test_random_planted_instances_check_out():
    rng = random.Random(77)
    seen_plus = seen_inv = 0
    for _ in range(12):
        n = rng.randint(1, 3)
        inst, xs = random_satisfiable_instance(rng, n)
        assert inst.holds(xs)
        enc = encode_etr_inverse(inst)
        assert not classify(enc.formula).causal
        masses = _witness_masses(enc, xs)
        assert oracles.product_measure_check(enc.formula, enc.sig, masses)
        seen_plus += bool(inst.plus)
        seen_inv += bool(inst.inverses)
    assert seen_inv  # product constraints exercised


def test_range_constraints_enforced():
    inst = EtrInverseInstance(2)
    enc = encode_etr_inverse(inst)
    masses = _witness_masses(enc, [rat(1, 2), rat(2)])
    assert oracles.product_measure_check(enc.formula, enc.sig, masses)
    # out of range: x = 1/4 gives mass 1/16 < 1/(4n) = 1/8
    bad = _witness_masses(enc, [rat(1, 2), rat(2)])
    bad["D1"] = {"1": rat(1, 16), "0": rat(15, 16)}
    assert not oracles.product_measure_check(enc.formula, enc.sig, bad)


def test_gadget_external_roundtrip(solver_cmd):
    from causalsat.etr import emit_smtlib, encode_pure_prob, run_external

    rng = random.Random(88)
    for _ in range(5):
        inst, xs = random_satisfiable_instance(rng, rng.randint(1, 3))
        enc = encode_etr_inverse(inst)
        system = encode_pure_prob(enc.formula, enc.sig)
        out = run_external(emit_smtlib(system), solver_cmd, timeout_ms=60_000)
        assert out.status == "sat"
    enc = encode_etr_inverse(contradiction_instance())
    system = encode_pure_prob(enc.formula, enc.sig)
    out = run_external(emit_smtlib(system), solver_cmd, timeout_ms=60_000)
    assert out.status == "unsat"
