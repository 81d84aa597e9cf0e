"""Encoder from inverse-constrained real feasibility into conditional
probability formulas.

An instance asks for reals x_1..x_n in [1/2, 2] obeying equations of the
forms x_i + x_j = x_k and x_i * x_j = 1.  The encoding uses one event per
variable with mass x_i / 2n, expresses each product equation as independence
plus a pinned joint mass, each sum equation through two fresh disjoint
events carrying the summands, and realizes every rational constant 1/N as a
cell of a fresh N-way equiprobable partition, so the output formula compares
only probability and conditional-probability terms.

Self-products x_i * x_i = 1 need care: independence of an event with itself
forces mass 0 or 1, clashing with the pinned joint.  The encoder therefore
introduces a clone event pinned to the same mass and states independence
against the clone, which is satisfiable exactly when x_i = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .lang import (
    Event,
    Formula,
    PAssign,
    PNot,
    Signature,
    TProb,
    TCond,
    e_of,
    f_and,
    f_eq,
    f_geq,
    p_or,
)
from .rat import ONE, Rat, rat


@dataclass(frozen=True)
class EtrInverseInstance:
    """Constraints over x_1..x_n, indices 1-based."""

    n: int
    plus: tuple[tuple[int, int, int], ...] = ()  # x_i + x_j = x_k
    inverses: tuple[tuple[int, int], ...] = ()  # x_i * x_j = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("instance needs at least one variable")
        for triple in self.plus:
            if len(triple) != 3 or any(not 1 <= i <= self.n for i in triple):
                raise ValueError(f"bad sum constraint {triple}")
        for pair in self.inverses:
            if len(pair) != 2 or any(not 1 <= i <= self.n for i in pair):
                raise ValueError(f"bad product constraint {pair}")

    def holds(self, xs: Sequence) -> bool:
        if len(xs) != self.n:
            return False
        if any(not (rat(1, 2) <= x <= rat(2)) for x in xs):
            return False
        for i, j, k in self.plus:
            if xs[i - 1] + xs[j - 1] != xs[k - 1]:
                return False
        for i, j in self.inverses:
            if xs[i - 1] * xs[j - 1] != 1:
                return False
        return True


def mass_of(x, n: int):
    """Solution map into the encoding: x maps to x / 2n."""
    return rat(x) / (2 * n)


def x_of(mass, n: int):
    return rat(mass) * (2 * n)


@dataclass
class GadgetEncoding:
    formula: Formula
    sig: Signature
    instance: EtrInverseInstance
    var_events: tuple[Event, ...]  # event whose mass encodes x_i / 2n

    def intended_masses(self, xs: Sequence):
        return [mass_of(x, self.instance.n) for x in xs]


def encode_etr_inverse(inst: EtrInverseInstance) -> GadgetEncoding:
    n = inst.n
    decls: list[tuple[str, tuple[str, ...]]] = []
    for i in range(1, n + 1):
        decls.append((f"D{i}", ("0", "1")))
    clone_events: dict[int, int] = {}  # constraint index -> clone variable tag
    for c, (i, j) in enumerate(inst.inverses):
        if i == j:
            decls.append((f"Dc{c}", ("0", "1")))
            clone_events[c] = c
    if inst.plus:
        decls.append(("S", tuple(str(v) for v in range(2 * len(inst.plus) + 1))))

    # fresh equiprobable partitions realizing the constants 1/N
    consts = {n, 4 * n}
    if inst.inverses:
        consts.add(4 * n * n)
    part_vars = {N: f"E{N}" for N in sorted(consts)}
    for N, name in sorted(part_vars.items()):
        decls.append((name, tuple(str(v + 1) for v in range(N))))

    sig = Signature(tuple(decls))

    def delta(i: int) -> Event:
        return e_of(PAssign(f"D{i}", "1"))

    def const_event(N: int) -> Event:
        return e_of(PAssign(part_vars[N], "1"))

    var_events = tuple(delta(i) for i in range(1, n + 1))
    parts: list[Formula] = []

    for i in range(1, n + 1):
        parts.append(f_geq(TProb(const_event(n)), TProb(delta(i))))
        parts.append(f_geq(TProb(delta(i)), TProb(const_event(4 * n))))

    for c, (i, j) in enumerate(inst.inverses):
        if i == j:
            partner = e_of(PAssign(f"Dc{c}", "1"))
            parts.append(f_eq(TProb(partner), TProb(delta(i))))
        else:
            partner = delta(j)
        joint = _event_and(delta(i), partner)
        parts.append(f_eq(TCond(delta(i), partner), TProb(delta(i))))
        parts.append(f_eq(TProb(joint), TProb(const_event(4 * n * n))))

    for c, (i, j, k) in enumerate(inst.plus):
        a = e_of(PAssign("S", str(2 * c + 1)))
        b = e_of(PAssign("S", str(2 * c + 2)))
        parts.append(f_eq(TProb(a), TProb(delta(i))))
        parts.append(f_eq(TProb(b), TProb(delta(j))))
        both = e_of(p_or(PAssign("S", str(2 * c + 1)), PAssign("S", str(2 * c + 2))))
        parts.append(f_eq(TProb(both), TProb(delta(k))))

    for N, name in sorted(part_vars.items()):
        cells = [PAssign(name, str(v + 1)) for v in range(N)]
        everything = e_of(p_or(cells[0], PNot(cells[0])))
        parts.append(f_eq(TProb(e_of(p_or(*cells))), TProb(everything)))
        for v in range(N - 1):
            parts.append(f_eq(TProb(e_of(cells[v])), TProb(e_of(cells[v + 1]))))

    return GadgetEncoding(f_and(*parts), sig, inst, var_events)


def _event_and(a: Event, b: Event) -> Event:
    from .lang import e_and

    return e_and(a, b)


def contradiction_instance() -> EtrInverseInstance:
    """x1 + x1 = x1 forces x1 = 0 while x1 * x1 = 1 forces |x1| = 1."""
    return EtrInverseInstance(1, plus=((1, 1, 1),), inverses=((1, 1),))


def random_satisfiable_instance(rng, n: int) -> tuple[EtrInverseInstance, list]:
    """Instance with a planted rational witness in [1/2, 2].

    Values are chosen so that some relations hold by construction; only
    constraints true of the planted witness are emitted.
    """
    xs: list = [None] * n
    order = list(range(n))
    rng.shuffle(order)
    inverses: list[tuple[int, int]] = []
    plus: list[tuple[int, int, int]] = []
    idx = 0
    while idx < len(order):
        i = order[idx]
        if xs[i] is not None:
            idx += 1
            continue
        roll = rng.random()
        if roll < 0.3:
            xs[i] = ONE
            inverses.append((i + 1, i + 1))
            idx += 1
        elif roll < 0.6 and idx + 1 < len(order) and xs[order[idx + 1]] is None:
            j = order[idx + 1]
            num = rng.randint(2, 4)
            den = rng.randint(2, 4)
            a = rat(num, den)
            if a < rat(1, 2) or a > 2:
                a = rat(3, 2)
            xs[i] = a
            xs[j] = 1 / a
            inverses.append((i + 1, j + 1))
            idx += 2
        else:
            num = rng.randint(2, 4)
            xs[i] = rat(num, 4) + rat(1, 4)  # 3/4 .. 5/4
            idx += 1
    budget = 2 * n  # keeps the fresh disjoint events embeddable in one variable
    for i in range(n):
        for j in range(i, n):
            s = xs[i] + xs[j]
            for k in range(n):
                if xs[k] == s and rng.random() < 0.5 and s <= budget:
                    plus.append((i + 1, j + 1, k + 1))
                    budget -= s
    inst = EtrInverseInstance(n, tuple(plus), tuple(inverses))
    assert inst.holds(xs)
    return inst, xs
