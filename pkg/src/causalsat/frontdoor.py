"""Front-door models and the exact identification identity.

Generates random models over the graph X -> Z -> Y with a hidden common
cause of X and Y: independent exogenous coins with random rational biases
feed random function tables wired along the graph.  Sampling rejects
degenerate joints (some P(X=x, Z=z) = 0), under which the conditional
identities hit the zero-denominator convention and genuinely fail.

For every accepted model the four causal-observational equalities hold at
all instantiations, and the causal effect equals the observational
adjustment sum exactly in rational arithmetic; both are verified by model
checking rather than assumed.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Optional

from .lang import (
    Formula,
    PAssign,
    Signature,
    TCond,
    TProb,
    TProd,
    binary_signature,
    e_box,
    e_of,
    f_eq,
    intervention,
    t_sum,
)
from .rat import ONE, Rat, rat
from .scm import SCM, Evaluator, make_scm


FRONTDOOR_SIG = binary_signature("X", "Z", "Y")


def _random_bias(rng: random.Random):
    den = rng.randint(2, 9)
    return rat(rng.randint(1, den - 1), den)


def random_frontdoor_scm(seed: int, max_attempts: int = 500) -> SCM:
    """Random model on the front-door graph with a fully positive P(X, Z)."""
    rng = random.Random(seed)
    for _ in range(max_attempts):
        biases = {name: _random_bias(rng) for name in ("U", "UX", "UZ", "UY")}
        exo = [(name, ("0", "1")) for name in ("U", "UX", "UZ", "UY")]
        dist = {}
        for combo in itertools.product("01", repeat=4):
            w = ONE
            for (name, _), val in zip(exo, combo):
                w *= biases[name] if val == "1" else ONE - biases[name]
            dist[tuple(combo)] = w
        fx = {key: str(rng.randint(0, 1)) for key in itertools.product("01", "01")}
        fz = {key: str(rng.randint(0, 1)) for key in itertools.product("01", "01")}
        fy = {key: str(rng.randint(0, 1)) for key in itertools.product("01", "01", "01")}
        m = make_scm(
            FRONTDOOR_SIG,
            exo,
            dist,
            {
                "X": lambda e, fx=fx: fx[(e["U"], e["UX"])],
                "Z": lambda e, fz=fz: fz[(e["X"], e["UZ"])],
                "Y": lambda e, fy=fy: fy[(e["Z"], e["U"], e["UY"])],
            },
        )
        ev = Evaluator(m)
        joint = [ev.event_prob(_joint_xz(x, z)) for x in "01" for z in "01"]
        if all(w > 0 for w in joint):
            return m
    raise RuntimeError(f"no positive front-door model found for seed {seed}")


def _joint_xz(x: str, z: str):
    from .lang import e_and

    return e_and(e_of(PAssign("X", x)), e_of(PAssign("Z", z)))


def _p(event) -> TProb:
    return TProb(event)


def _box(assigns, prop) -> TProb:
    return TProb(e_box(intervention(assigns), prop))


def gamma_formulas(sig: Signature = FRONTDOOR_SIG) -> list[Formula]:
    """The four causal-observational equality families, all instantiations."""
    from .lang import PAnd, e_and

    out: list[Formula] = []
    vals = ("0", "1")
    # effect of X on Z is its conditional law
    for x in vals:
        for z in vals:
            out.append(
                f_eq(
                    _box([("X", x)], PAssign("Z", z)),
                    TCond(e_of(PAssign("Z", z)), e_of(PAssign("X", x))),
                )
            )
    # intervening on Z leaves X alone
    for z in vals:
        for x in vals:
            out.append(
                f_eq(_box([("Z", z)], PAssign("X", x)), _p(e_of(PAssign("X", x))))
            )
    # conditioning on the mediator under do(X) equals the double intervention,
    # which equals intervening on the mediator alone
    for x in vals:
        for z in vals:
            for y in vals:
                out.append(
                    f_eq(
                        TCond(
                            e_box(intervention([("X", x)]), PAssign("Y", y)),
                            e_box(intervention([("X", x)]), PAssign("Z", z)),
                        ),
                        _box([("X", x), ("Z", z)], PAssign("Y", y)),
                    )
                )
                out.append(
                    f_eq(
                        _box([("X", x), ("Z", z)], PAssign("Y", y)),
                        _box([("Z", z)], PAssign("Y", y)),
                    )
                )
    # conditioning on X under do(Z) equals observational conditioning
    for z in vals:
        for x in vals:
            for y in vals:
                out.append(
                    f_eq(
                        TCond(
                            e_box(intervention([("Z", z)]), PAssign("Y", y)),
                            e_box(intervention([("Z", z)]), PAssign("X", x)),
                        ),
                        TCond(
                            e_of(PAssign("Y", y)),
                            e_of(PAnd(PAssign("X", x), PAssign("Z", z))),
                        ),
                    )
                )
    return out


def adjustment_term(x: str, y: str):
    """The observational adjustment sum for the effect of X=x on Y=y."""
    from .lang import PAnd

    vals = ("0", "1")
    outer = []
    for z in vals:
        inner = []
        for xp in vals:
            inner.append(
                TProd(
                    TCond(e_of(PAssign("Y", y)), e_of(PAnd(PAssign("X", xp), PAssign("Z", z)))),
                    _p(e_of(PAssign("X", xp))),
                )
            )
        outer.append(TProd(TCond(e_of(PAssign("Z", z)), e_of(PAssign("X", x))), t_sum(*inner)))
    return t_sum(*outer)


def identification_formula(x: str, y: str) -> Formula:
    """Causal effect equals the adjustment sum (a polynomial-fragment atom)."""
    return f_eq(_box([("X", x)], PAssign("Y", y)), adjustment_term(x, y))


@dataclass
class DemoReport:
    seed: int
    gamma_ok: bool
    identity_ok: bool

    @property
    def ok(self) -> bool:
        return self.gamma_ok and self.identity_ok


def verify_frontdoor(m: SCM) -> tuple[bool, bool]:
    ev = Evaluator(m)
    gamma_ok = all(ev.check(g) for g in gamma_formulas(m.sig))
    identity_ok = all(
        ev.check(identification_formula(x, y)) for x in "01" for y in "01"
    )
    return gamma_ok, identity_ok


def run_demo(seed: int, count: int = 1) -> list[DemoReport]:
    out = []
    for s in range(seed, seed + count):
        m = random_frontdoor_scm(s)
        gamma_ok, identity_ok = verify_frontdoor(m)
        out.append(DemoReport(s, gamma_ok, identity_ok))
    return out
