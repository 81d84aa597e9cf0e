import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import models
from causalsat.lang import (
    PAssign,
    binary_signature,
    e_and,
    e_box,
    e_not,
    e_of,
    f_and,
    f_eq,
    f_gt,
    intervention,
    parse_formula,
    TConst,
    TProb,
    TCond,
    TSum,
)
from causalsat.rat import ONE, ZERO, rat
from causalsat.scm import (
    Evaluator,
    NonConvergenceError,
    SCMError,
    apply_intervention,
    compatible_with,
    eval_event,
    find_recursive_order,
    influences,
    is_recursive,
    make_scm,
    model_check,
    scm_from_json,
    scm_to_json,
    term_value,
)

SIG3 = binary_signature("X", "Z", "Y")


def test_chain_recursive_orders():
    m = models.frontdoor_chain()
    assert is_recursive(m, ("X", "Z", "Y"))
    assert not is_recursive(m, ("Y", "Z", "X"))


def test_constant_model_recursive_under_every_order():
    m = models.constant_scm({"X": "0", "Z": "1", "Y": "0"}, SIG3)
    for order in itertools.permutations(("X", "Z", "Y")):
        assert is_recursive(m, order)
        assert compatible_with(m, order)


def test_apply_intervention_trivial_and_pinning():
    m = models.frontdoor_chain()
    same = apply_intervention(intervention([]), m)
    phi = parse_formula("P(Z=1) >= 0/1", SIG3)
    assert term_value(same, phi.left) == term_value(m, phi.left)
    pinned = apply_intervention(intervention([("X", "1")]), m)
    assert term_value(pinned, TProb(e_of(PAssign("Z", "1")))) == rat(1, 2)
    assert term_value(m, TProb(e_of(PAssign("Z", "1")))) == rat(1, 8)  # original untouched
    all_pinned = apply_intervention(
        intervention([("X", "0"), ("Z", "0"), ("Y", "1")]), m
    )
    assert term_value(all_pinned, TProb(e_of(PAssign("Y", "1")))) == ONE


def test_eval_event_vectors():
    m = models.frontdoor_chain()
    u = ("1", "1", "1", "1")  # order U, UX, UZ, UY
    assert eval_event(m, u, e_of(PAssign("Y", "1")))
    for u in itertools.product("01", repeat=4):
        assert eval_event(m, u, e_box(intervention([("X", "0")]), PAssign("X", "0")))
        assert not eval_event(m, u, e_box(intervention([("X", "0")]), PAssign("X", "1")))


def test_term_values_of_coupled_pair():
    sig = binary_signature("V1", "V2")
    t = TProb(e_box(intervention([("V1", "1")]), PAssign("V2", "1")))
    assert term_value(models.iid_pair(), t) == rat(1, 2)
    assert term_value(models.coupled_pair(), t) == rat(3, 4)
    phi = parse_formula("P([V1=1] V2=1) = P([V1=1] V2=0)", sig)
    assert model_check(models.iid_pair(), phi)
    assert not model_check(models.coupled_pair(), phi)


def test_zero_denominator_convention():
    m = models.constant_scm({"X": "0", "Z": "0", "Y": "0"}, SIG3)
    t = TCond(e_of(PAssign("Y", "1")), e_of(PAssign("X", "1")))
    assert term_value(m, t) == ONE


def test_complement_additivity():
    rng = random.Random(7)
    for _ in range(25):
        m, _ = models.random_recursive_scm(rng)
        ev = models.random_event(rng, m.sig, 2)
        total = term_value(m, TProb(ev)) + term_value(m, TProb(e_not(ev)))
        assert total == ONE


def test_addition_validity_exact():
    rng = random.Random(11)
    for _ in range(40):
        m, _ = models.random_recursive_scm(rng)
        e1 = models.random_event(rng, m.sig, 2)
        e2 = models.random_event(rng, m.sig, 2)
        lhs = term_value(m, TProb(e_and(e1, e2))) + term_value(m, TProb(e_and(e1, e_not(e2))))
        assert lhs == term_value(m, TProb(e1))


def test_definiteness_validity_exact():
    rng = random.Random(13)
    for _ in range(40):
        m, _ = models.random_recursive_scm(rng)
        alpha = models.random_intervention(rng, m.sig)
        for var in m.sig.names:
            total = sum(
                (term_value(m, TProb(e_box(alpha, PAssign(var, v)))) for v in m.sig.domain(var)),
                ZERO,
            )
            assert total == ONE
            for v, w in itertools.combinations(m.sig.domain(var), 2):
                both = TProb(e_box(alpha, PAssign(var, v)))
                # no variable takes two values under one intervention
                conj = TProb(
                    e_box(alpha, __import__("causalsat.lang", fromlist=["p_and"]).p_and(PAssign(var, v), PAssign(var, w)))
                )
                assert term_value(m, conj) == ZERO


def _recursion_formula(sig, a, b):
    xa, xb = "1", "0"
    lhs = f_gt(
        TProb(
            e_and(
                e_box(intervention([(a, "1")]), PAssign(b, "1")),
                e_box(intervention([(a, "0")]), PAssign(b, "0")),
            )
        ),
        TConst(0, 1),
    )
    rhs = f_eq(
        TProb(
            e_and(
                e_box(intervention([(b, "1")]), PAssign(a, "1")),
                e_box(intervention([(b, "0")]), PAssign(a, "0")),
            )
        ),
        TConst(0, 1),
    )
    from causalsat.lang import f_implies

    return f_implies(lhs, rhs)


def test_recursion_validity_on_random_models():
    rng = random.Random(17)
    count = 0
    while count < 40:
        m, order = models.random_recursive_scm(rng, max_endo=2)
        if len(m.sig.names) < 2:
            continue
        count += 1
        a, b = m.sig.names
        assert model_check(m, _recursion_formula(m.sig, a, b))
        assert model_check(m, _recursion_formula(m.sig, b, a))


def test_intervention_idempotent_under_evaluation():
    rng = random.Random(19)
    for _ in range(15):
        m, _ = models.random_recursive_scm(rng)
        i = models.random_intervention(rng, m.sig)
        once = apply_intervention(i, m)
        twice = apply_intervention(i, once)
        ev = models.random_event(rng, m.sig, 2)
        for u, w in m.dist:
            assert eval_event(once, u, ev) == eval_event(twice, u, ev)


def test_recursive_implies_compatible():
    rng = random.Random(23)
    for _ in range(20):
        m, order = models.random_recursive_scm(rng)
        assert is_recursive(m, order)
        assert compatible_with(m, order)


def test_influences_vectors():
    m = models.frontdoor_chain()
    rel = influences(m)
    assert ("X", "Z") in rel
    assert ("Z", "Y") in rel
    assert ("Y", "X") not in rel
    assert compatible_with(m, ("X", "Z", "Y"))
    assert not compatible_with(m, ("Y", "Z", "X"))
    const = models.constant_scm({"X": "0", "Z": "0", "Y": "0"}, SIG3)
    assert influences(const) == frozenset()


def test_influence_scope_guard():
    sig = binary_signature(*[f"V{i}" for i in range(8)])
    m = models.constant_scm({v: "0" for v in sig.names}, sig)
    from causalsat.scm import ScopeError

    with pytest.raises(ScopeError):
        influences(m)
    assert influences(m, scope=("V0", "V1")) == frozenset()


def test_find_recursive_order():
    m = models.frontdoor_chain()
    assert find_recursive_order(m) == ("X", "Z", "Y")
    cyc = make_scm(
        binary_signature("A", "B"),
        [("U", ("0", "1"))],
        {("0",): rat(1, 2), ("1",): rat(1, 2)},
        {"A": lambda e: "1" if e["B"] == "0" else "0", "B": lambda e: "1" if e["A"] == "0" else "0"},
    )
    assert find_recursive_order(cyc) is None
    with pytest.raises(NonConvergenceError):
        eval_event(cyc, ("0",), e_of(PAssign("A", "1")))


def test_json_round_trip_and_validation():
    m = models.frontdoor_chain()
    again = scm_from_json(scm_to_json(m))
    phi = parse_formula("P([X=1] Z=1) = P(Z=1 | X=1)", SIG3)
    assert model_check(m, phi) and model_check(again, phi)
    assert scm_to_json(again) == scm_to_json(m)

    import json

    data = json.loads(scm_to_json(m))
    del data["functions"]["X"][0]
    with pytest.raises(SCMError, match="not total"):
        scm_from_json(json.dumps(data))
    data = json.loads(scm_to_json(m))
    data["dist"][0]["w"] = "1/3"
    with pytest.raises(SCMError, match="sum"):
        scm_from_json(json.dumps(data))
    with pytest.raises(SCMError, match="JSON"):
        scm_from_json("{broken")


def test_weights_must_be_nonnegative_and_total():
    with pytest.raises(SCMError):
        models.single_var_measure("X", {"0": rat(3, 2), "1": rat(-1, 2)})
    with pytest.raises(SCMError):
        models.single_var_measure("X", {"0": rat(1, 2), "1": rat(1, 3)})


def test_parallel_evaluations_deterministic():
    # evaluator caches must not leak across interventions
    m = models.frontdoor_chain()
    ev = Evaluator(m)
    t1 = TProb(e_box(intervention([("X", "1")]), PAssign("Z", "1")))
    t2 = TProb(e_of(PAssign("Z", "1")))
    a1, a2 = ev.term_value(t1), ev.term_value(t2)
    assert (a1, a2) == (ev.term_value(t1), ev.term_value(t2))
    assert a1 == rat(1, 2) and a2 == rat(1, 8)
