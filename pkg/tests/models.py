"""Shared model builders for the test suite."""

from __future__ import annotations

import itertools
import random

from causalsat.lang import (
    EBox,
    Event,
    Intervention,
    PAssign,
    PNot,
    PAnd,
    Signature,
    binary_signature,
    e_and,
    e_box,
    e_not,
    e_of,
    intervention,
    p_and,
)
from causalsat.rat import ONE, Rat, rat
from causalsat.scm import SCM, make_scm


def iid_pair() -> SCM:
    """Two independent fair bits."""
    sig = binary_signature("V1", "V2")
    exo = [("U1", ("0", "1")), ("U2", ("0", "1"))]
    dist = {u: rat(1, 4) for u in itertools.product("01", "01")}
    return make_scm(sig, exo, dist, {"V1": lambda e: e["U1"], "V2": lambda e: e["U2"]})


def coupled_pair() -> SCM:
    """Same joint law as `iid_pair`, but intervening on V1 moves V2."""
    sig = binary_signature("V1", "V2")
    exo = [("U1", ("0", "1")), ("U2", ("0", "1"))]
    dist = {u: rat(1, 4) for u in itertools.product("01", "01")}
    return make_scm(
        sig,
        exo,
        dist,
        {
            "V1": lambda e: "1" if e["U1"] == e["U2"] else "0",
            "V2": lambda e: "1"
            if e["U1"] == "1" or (e["V1"] == "1" and e["U1"] == "0" and e["U2"] == "1")
            else "0",
        },
    )


def frontdoor_chain() -> SCM:
    """AND-gate chain X -> Z -> Y with a hidden common cause of X and Y."""
    sig = binary_signature("X", "Z", "Y")
    exo = [(n, ("0", "1")) for n in ("U", "UX", "UZ", "UY")]
    dist = {u: rat(1, 16) for u in itertools.product("01", repeat=4)}
    land = lambda *bits: "1" if all(b == "1" for b in bits) else "0"
    return make_scm(
        sig,
        exo,
        dist,
        {
            "X": lambda e: land(e["U"], e["UX"]),
            "Z": lambda e: land(e["X"], e["UZ"]),
            "Y": lambda e: land(e["Z"], e["U"], e["UY"]),
        },
    )


def constant_scm(values: dict[str, str], sig: Signature) -> SCM:
    exo = [("U0", ("0",))]
    dist = {("0",): ONE}
    return make_scm(sig, exo, dist, {v: (lambda e, v=v: values[v]) for v in sig.names})


def single_var_measure(name: str, weights: dict[str, object]) -> SCM:
    """One endogenous variable distributed exactly as given."""
    domain = tuple(weights)
    sig = Signature(((name, domain),))
    exo = [("U", domain)]
    dist = {(v,): rat(w) for v, w in weights.items()}
    return make_scm(sig, exo, dist, {name: lambda e: e["U"]})


def random_rational_weights(rng: random.Random, k: int) -> list:
    raw = [rng.randint(0, 6) for _ in range(k)]
    while sum(raw) == 0:
        raw = [rng.randint(0, 6) for _ in range(k)]
    total = sum(raw)
    return [rat(r, total) for r in raw]


def random_recursive_scm(rng: random.Random, max_endo: int = 3, max_exo_states: int = 4) -> SCM:
    """Recursive by construction: tables read only order-earlier variables."""
    n = rng.randint(1, max_endo)
    names = [f"V{i+1}" for i in range(n)]
    sig = binary_signature(*names)
    order = names[:]
    rng.shuffle(order)
    pos = {v: i for i, v in enumerate(order)}
    k = rng.randint(1, max_exo_states)
    exo_vals = tuple(str(i) for i in range(k))
    weights = random_rational_weights(rng, k)
    dist = {(v,): w for v, w in zip(exo_vals, weights)}

    tables = {}
    for v in names:
        below = [w for w in names if pos[w] < pos[v]]
        choice = {}
        for combo in itertools.product("01", repeat=len(below)):
            for u in exo_vals:
                choice[(combo, u)] = str(rng.randint(0, 1))
        tables[v] = (below, choice)

    def fn(env, v=None):
        below, choice = tables[v]
        return choice[(tuple(env[w] for w in below), env["_U"])]

    return make_scm(
        sig,
        [("_U", exo_vals)],
        dist,
        {v: (lambda e, v=v: fn(e, v)) for v in names},
    ), tuple(order)


def random_prop(rng: random.Random, sig: Signature, depth: int = 2):
    if depth == 0 or rng.random() < 0.4:
        var = rng.choice(sig.names)
        return PAssign(var, rng.choice(sig.domain(var)))
    if rng.random() < 0.5:
        return PNot(random_prop(rng, sig, depth - 1))
    return PAnd(random_prop(rng, sig, depth - 1), random_prop(rng, sig, depth - 1))


def random_intervention(rng: random.Random, sig: Signature) -> Intervention:
    vars_ = [v for v in sig.names if rng.random() < 0.5]
    return intervention([(v, rng.choice(sig.domain(v))) for v in vars_])


def random_event(rng: random.Random, sig: Signature, depth: int = 2) -> Event:
    if depth == 0 or rng.random() < 0.5:
        return e_box(random_intervention(rng, sig), random_prop(rng, sig, 1))
    if rng.random() < 0.5:
        return e_not(random_event(rng, sig, depth - 1))
    return e_and(random_event(rng, sig, depth - 1), random_event(rng, sig, depth - 1))
