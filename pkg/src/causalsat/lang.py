"""Syntax for the probabilistic and causal languages.

The language tower has four layers, mirrored by four node families:

* interventions  -- conjunctions of assignments (possibly empty, written [] never;
  the trivial intervention is implicit in bare events),
* propositional events over variable assignments (``PAssign``/``PNot``/``PAnd``),
* causal events ``[intervention] prop`` closed under negation/conjunction
  (``EBox``/``ENot``/``EAnd``),
* probability terms (``TProb``/``TCond``/``TSum``/``TProd`` plus exact rational
  literals ``TConst``) compared by ``>=`` and closed under ``~`` and ``&``.

Concrete syntax (UTF-8, newline-insensitive)::

    sig X:{0,1}; Y:{0,1};
    P([X=1] Y=1) >= P(Y=1) & ~(P(X=1) = 1/2)

Events use ``X=1``, ``~``, ``&``, ``|``; a bare variable name ``X`` abbreviates
``X=1`` when 1 is in its domain.  Inside ``P(...)`` a bar at the top level is
the conditioning bar; parenthesize to get disjunction: ``P((A | B))``.

ASTs built through the factory helpers (`e_and`, `e_not`, `f_eq`, ...) are in
canonical form: trivially-boxed events are merged so that printing followed by
parsing reproduces the exact structure.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .rat import Rat, rat


class LangError(ValueError):
    """Ill-formed formula or signature."""


class ParseError(LangError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.message = message
        self.text = text
        self.pos = pos
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, column {col})")

    def caret_diagnostic(self) -> str:
        lines = self.text.splitlines() or [""]
        src = lines[self.line - 1] if self.line - 1 < len(lines) else ""
        return "\n".join([src, " " * (self.col - 1) + "^", str(self)])


# ---------------------------------------------------------------------------
# signature


@dataclass(frozen=True)
class Signature:
    """Declared variables with finite domains of value identifiers."""

    variables: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        seen = set()
        for name, domain in self.variables:
            if name in seen:
                raise LangError(f"duplicate variable {name!r}")
            if name == "P":
                raise LangError("'P' is reserved and cannot name a variable")
            seen.add(name)
            if not domain:
                raise LangError(f"variable {name!r} has an empty domain")
            if len(set(domain)) != len(domain):
                raise LangError(f"variable {name!r} has duplicate domain values")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.variables)

    def domain(self, var: str) -> tuple[str, ...]:
        for name, domain in self.variables:
            if name == var:
                return domain
        raise LangError(f"unknown variable {var!r}")

    def has_variable(self, var: str) -> bool:
        return any(name == var for name, _ in self.variables)

    def check_assignment(self, var: str, value: str):
        if value not in self.domain(var):
            raise LangError(f"value {value!r} not in the domain of {var!r}")

    def restrict(self, keep: Iterable[str]) -> "Signature":
        keep = set(keep)
        return Signature(tuple((n, d) for n, d in self.variables if n in keep))


def signature(*decls: tuple[str, Iterable[str]]) -> Signature:
    return Signature(tuple((name, tuple(domain)) for name, domain in decls))


def binary_signature(*names: str) -> Signature:
    return signature(*((name, ("0", "1")) for name in names))


# ---------------------------------------------------------------------------
# interventions


@dataclass(frozen=True)
class Intervention:
    """Partial assignment of values to variables; empty means trivial."""

    assignments: tuple[tuple[str, str], ...]

    def __post_init__(self):
        names = [v for v, _ in self.assignments]
        if len(set(names)) != len(names):
            raise LangError("intervention assigns a variable twice")
        if tuple(sorted(self.assignments)) != self.assignments:
            raise LangError("intervention assignments must be sorted")

    @property
    def trivial(self) -> bool:
        return not self.assignments

    def domain_vars(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.assignments)

    def value(self, var: str) -> Optional[str]:
        for v, val in self.assignments:
            if v == var:
                return val
        return None


TOP = Intervention(())


def intervention(pairs: Iterable[tuple[str, str]]) -> Intervention:
    return Intervention(tuple(sorted(pairs)))


# ---------------------------------------------------------------------------
# propositional layer


class Prop:
    __slots__ = ()


@dataclass(frozen=True)
class PAssign(Prop):
    var: str
    value: str


@dataclass(frozen=True)
class PNot(Prop):
    body: Prop


@dataclass(frozen=True)
class PAnd(Prop):
    left: Prop
    right: Prop


def p_and(*props: Prop) -> Prop:
    items = list(props)
    if not items:
        raise LangError("empty conjunction")
    out = items[0]
    for p in items[1:]:
        out = PAnd(out, p)
    return out


def p_or(*props: Prop) -> Prop:
    items = list(props)
    if not items:
        raise LangError("empty disjunction")
    out = items[0]
    for p in items[1:]:
        out = PNot(PAnd(PNot(out), PNot(p)))
    return out


# ---------------------------------------------------------------------------
# causal-event layer


class Event:
    __slots__ = ()


@dataclass(frozen=True)
class EBox(Event):
    interv: Intervention
    body: Prop


@dataclass(frozen=True)
class ENot(Event):
    body: Event


@dataclass(frozen=True)
class EAnd(Event):
    left: Event
    right: Event


def e_of(prop: Prop) -> Event:
    return EBox(TOP, prop)


def e_box(interv: Intervention, body: Prop) -> Event:
    return EBox(interv, body)


def e_not(ev: Event) -> Event:
    # A trivially boxed event is kept canonical by pushing connectives inside
    # the box, so that printing (which drops the empty box) round-trips.
    if isinstance(ev, EBox) and ev.interv.trivial:
        return EBox(TOP, PNot(ev.body))
    return ENot(ev)


def e_and(*events: Event) -> Event:
    items = list(events)
    if not items:
        raise LangError("empty conjunction")
    out = items[0]
    for ev in items[1:]:
        if (
            isinstance(out, EBox)
            and out.interv.trivial
            and isinstance(ev, EBox)
            and ev.interv.trivial
        ):
            out = EBox(TOP, PAnd(out.body, ev.body))
        else:
            out = EAnd(out, ev)
    return out


def e_or(*events: Event) -> Event:
    items = list(events)
    if not items:
        raise LangError("empty disjunction")
    out = items[0]
    for ev in items[1:]:
        out = e_not(e_and(e_not(out), e_not(ev)))
    return out


# ---------------------------------------------------------------------------
# terms and formulas


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class TProb(Term):
    event: Event


@dataclass(frozen=True)
class TCond(Term):
    event: Event
    given: Event


@dataclass(frozen=True)
class TSum(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class TProd(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class TConst(Term):
    num: int
    den: int

    def __post_init__(self):
        if self.den <= 0:
            raise LangError("rational literal must have a positive denominator")
        if self.num < 0:
            raise LangError("rational literal must be nonnegative")

    def value(self):
        return rat(self.num, self.den)


def t_const(value) -> TConst:
    r = rat(value)
    return TConst(int(r.numerator), int(r.denominator))


def t_sum(*terms: Term) -> Term:
    out = terms[0]
    for t in terms[1:]:
        out = TSum(out, t)
    return out


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class FGeq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class FNot(Formula):
    body: Formula


@dataclass(frozen=True)
class FAnd(Formula):
    left: Formula
    right: Formula


def f_and(*formulas: Formula) -> Formula:
    out = formulas[0]
    for f in formulas[1:]:
        out = FAnd(out, f)
    return out


def f_or(*formulas: Formula) -> Formula:
    out = formulas[0]
    for f in formulas[1:]:
        out = FNot(FAnd(FNot(out), FNot(f)))
    return out


def f_eq(a: Term, b: Term) -> Formula:
    return FAnd(FGeq(a, b), FGeq(b, a))


def f_gt(a: Term, b: Term) -> Formula:
    return FNot(FGeq(b, a))


def f_geq(a: Term, b: Term) -> Formula:
    return FGeq(a, b)


def f_leq(a: Term, b: Term) -> Formula:
    return FGeq(b, a)


def f_lt(a: Term, b: Term) -> Formula:
    return FNot(FGeq(a, b))


def f_implies(a: Formula, b: Formula) -> Formula:
    return FNot(FAnd(a, FNot(b)))


# ---------------------------------------------------------------------------
# structural scans


@dataclass(frozen=True)
class Fragment:
    arithmetic: str  # comp | lin | cond | poly
    causal: bool

    def __str__(self):
        return f"({self.arithmetic}, {'causal' if self.causal else 'prob'})"


def iter_terms(phi: Formula):
    stack = [phi]
    while stack:
        node = stack.pop()
        if isinstance(node, FGeq):
            yield node.left
            yield node.right
        elif isinstance(node, FNot):
            stack.append(node.body)
        elif isinstance(node, FAnd):
            stack.append(node.left)
            stack.append(node.right)


def iter_events(phi: Formula):
    def from_term(t: Term):
        if isinstance(t, TProb):
            yield t.event
        elif isinstance(t, TCond):
            yield t.event
            yield t.given
        elif isinstance(t, (TSum, TProd)):
            yield from from_term(t.left)
            yield from from_term(t.right)

    for t in iter_terms(phi):
        yield from from_term(t)


def iter_boxes(event: Event):
    stack = [event]
    while stack:
        node = stack.pop()
        if isinstance(node, EBox):
            yield node
        elif isinstance(node, ENot):
            stack.append(node.body)
        elif isinstance(node, EAnd):
            stack.append(node.left)
            stack.append(node.right)


def classify(phi: Formula) -> Fragment:
    """Least fragment admitting every term, and whether a real box occurs.

    A conditional term coexisting with sums or products forces ``poly``:
    conditioning is eliminable only there.  Rational literals never raise the
    fragment (they are a surface extension; see `desugar_constants`).
    """
    has_sum = has_prod = has_cond = False

    def walk(t: Term):
        nonlocal has_sum, has_prod, has_cond
        if isinstance(t, TSum):
            has_sum = True
            walk(t.left)
            walk(t.right)
        elif isinstance(t, TProd):
            has_prod = True
            walk(t.left)
            walk(t.right)
        elif isinstance(t, TCond):
            has_cond = True

    for t in iter_terms(phi):
        walk(t)
    if has_prod or (has_cond and has_sum):
        arith = "poly"
    elif has_cond:
        arith = "cond"
    elif has_sum:
        arith = "lin"
    else:
        arith = "comp"
    causal = any(not box.interv.trivial for ev in iter_events(phi) for box in iter_boxes(ev))
    return Fragment(arith, causal)


def mentioned_interventions(phi: Formula) -> set[Intervention]:
    """All interventions syntactically occurring in events of phi.

    The trivial intervention is a member exactly when a bare (un-boxed) event
    occurs somewhere.
    """
    return {box.interv for ev in iter_events(phi) for box in iter_boxes(ev)}


def _prop_assignments(p: Prop):
    stack = [p]
    while stack:
        node = stack.pop()
        if isinstance(node, PAssign):
            yield node
        elif isinstance(node, PNot):
            stack.append(node.body)
        elif isinstance(node, PAnd):
            stack.append(node.left)
            stack.append(node.right)


def mentioned_variables(phi: Formula) -> set[str]:
    out: set[str] = set()
    for ev in iter_events(phi):
        for box in iter_boxes(ev):
            out.update(box.interv.domain_vars())
            for a in _prop_assignments(box.body):
                out.add(a.var)
    return out


def mentioned_values(phi: Formula) -> dict[str, set[str]]:
    """Values appearing per variable, positively or negated, boxes included."""
    out: dict[str, set[str]] = {}
    for ev in iter_events(phi):
        for box in iter_boxes(ev):
            for var, val in box.interv.assignments:
                out.setdefault(var, set()).add(val)
            for a in _prop_assignments(box.body):
                out.setdefault(a.var, set()).add(a.value)
    return out


def node_count(phi: Formula) -> int:
    """|phi| as the number of AST nodes (formula, term, event, prop layers)."""

    def prop(p: Prop) -> int:
        if isinstance(p, PAssign):
            return 1
        if isinstance(p, PNot):
            return 1 + prop(p.body)
        return 1 + prop(p.left) + prop(p.right)

    def event(ev: Event) -> int:
        if isinstance(ev, EBox):
            return 1 + prop(ev.body)
        if isinstance(ev, ENot):
            return 1 + event(ev.body)
        return 1 + event(ev.left) + event(ev.right)

    def term(t: Term) -> int:
        if isinstance(t, TProb):
            return 1 + event(t.event)
        if isinstance(t, TCond):
            return 1 + event(t.event) + event(t.given)
        if isinstance(t, TConst):
            return 1
        return 1 + term(t.left) + term(t.right)

    def formula(f: Formula) -> int:
        if isinstance(f, FGeq):
            return 1 + term(f.left) + term(f.right)
        if isinstance(f, FNot):
            return 1 + formula(f.body)
        return 1 + formula(f.left) + formula(f.right)

    return formula(phi)


def check_formula(phi: Formula, sig: Signature):
    """Raise LangError unless every assignment respects the signature."""
    for ev in iter_events(phi):
        for box in iter_boxes(ev):
            for var, val in box.interv.assignments:
                sig.check_assignment(var, val)
            for a in _prop_assignments(box.body):
                sig.check_assignment(a.var, a.value)


# ---------------------------------------------------------------------------
# tokenizer


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<int>[0-9]+)"
    r"|(?P<sym>>=|<=|[=<>&|~+*/()\[\]{};:,]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # ident | int | sym | eof
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ParseError(f"unexpected character {text[at]!r}", text, at)
        if m.group("ident"):
            toks.append(_Tok("ident", m.group("ident"), m.start("ident")))
        elif m.group("int"):
            toks.append(_Tok("int", m.group("int"), m.start("int")))
        else:
            toks.append(_Tok("sym", m.group("sym"), m.start("sym")))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, sig: Optional[Signature]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.sig = sig

    # -- token plumbing

    def peek(self, ahead=0) -> _Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            self.fail(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text

    def fail(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        raise ParseError(msg, self.text, tok.pos)

    # -- signature header

    def parse_signature(self) -> Signature:
        t = self.next()
        if t.text != "sig":
            self.fail("expected 'sig' header", t)
        decls = []
        while self.peek().kind == "ident" and self.peek(1).text == ":":
            name = self.next().text
            self.expect(":")
            self.expect("{")
            values = [self.parse_value()]
            while self.at(","):
                self.next()
                values.append(self.parse_value())
            self.expect("}")
            self.expect(";")
            decls.append((name, tuple(values)))
        if not decls:
            self.fail("signature declares no variables")
        try:
            return Signature(tuple(decls))
        except LangError as exc:
            raise ParseError(str(exc), self.text, t.pos) from None

    def parse_value(self) -> str:
        t = self.next()
        if t.kind not in ("ident", "int"):
            self.fail("expected a value identifier", t)
        return t.text

    # -- formulas

    def parse_formula(self) -> Formula:
        out = self.parse_funary()
        while self.at("&"):
            self.next()
            out = FAnd(out, self.parse_funary())
        return out

    def parse_funary(self) -> Formula:
        if self.at("~"):
            self.next()
            return FNot(self.parse_funary())
        return self.parse_fprimary()

    def parse_fprimary(self) -> Formula:
        if self.at("(") and not self._paren_is_term():
            self.next()
            out = self.parse_formula()
            self.expect(")")
            return out
        return self.parse_atom()

    def _paren_is_term(self) -> bool:
        # Look past the matching ')' -- a comparison, '+', '*' or '/' after it
        # means the parenthesis opened a term, not a formula.
        depth = 0
        j = self.i
        while j < len(self.toks):
            t = self.toks[j]
            if t.text == "(":
                depth += 1
            elif t.text == ")":
                depth -= 1
                if depth == 0:
                    nxt = self.toks[j + 1] if j + 1 < len(self.toks) else None
                    return nxt is not None and nxt.text in (">=", "<=", "=", "<", ">", "+", "*", "/")
            j += 1
        return False

    def parse_atom(self) -> Formula:
        left = self.parse_term()
        op = self.next()
        if op.text == ">=":
            return FGeq(left, self.parse_term())
        if op.text == "<=":
            return FGeq(self.parse_term(), left)
        if op.text == "=":
            return f_eq(left, self.parse_term())
        if op.text == ">":
            return f_gt(left, self.parse_term())
        if op.text == "<":
            return f_lt(left, self.parse_term())
        self.fail("expected a comparison operator", op)

    # -- terms

    def parse_term(self) -> Term:
        out = self.parse_addend()
        while self.at("+"):
            self.next()
            out = TSum(out, self.parse_addend())
        return out

    def parse_addend(self) -> Term:
        out = self.parse_factor()
        while self.at("*"):
            self.next()
            out = TProd(out, self.parse_factor())
        return out

    def parse_factor(self) -> Term:
        t = self.peek()
        if t.text == "P":
            return self.parse_prob()
        if t.kind == "int":
            self.next()
            num = int(t.text)
            if self.at("/"):
                self.next()
                d = self.next()
                if d.kind != "int":
                    self.fail("expected a denominator", d)
                if int(d.text) == 0:
                    self.fail("zero denominator", d)
                return TConst(num, int(d.text))
            return TConst(num, 1)
        if t.text == "(":
            self.next()
            out = self.parse_term()
            self.expect(")")
            return out
        self.fail("expected a term")

    def parse_prob(self) -> Term:
        self.expect("P")
        self.expect("(")
        ev = self.parse_event(parg_top=True)
        if self.at("|"):
            self.next()
            given = self.parse_event(parg_top=True)
            self.expect(")")
            return TCond(ev, given)
        self.expect(")")
        return TProb(ev)

    # -- events (returns canonical Event; bare propositional regions stay
    #    propositional until they must combine with a boxed sibling)

    def parse_event(self, parg_top=False) -> Event:
        val = self.parse_edisj(parg_top)
        return val if isinstance(val, Event) else EBox(TOP, val)

    def parse_edisj(self, parg_top=False) -> Union[Event, Prop]:
        out = self.parse_econj()
        while self.at("|") and not parg_top:
            self.next()
            nxt = self.parse_econj()
            out = self._combine(out, nxt, "or")
        return out

    def parse_econj(self) -> Union[Event, Prop]:
        out = self.parse_eunary()
        while self.at("&"):
            self.next()
            nxt = self.parse_eunary()
            out = self._combine(out, nxt, "and")
        return out

    def _combine(self, a, b, op: str):
        if isinstance(a, Prop) and isinstance(b, Prop):
            return p_and(a, b) if op == "and" else p_or(a, b)
        a = a if isinstance(a, Event) else EBox(TOP, a)
        b = b if isinstance(b, Event) else EBox(TOP, b)
        return e_and(a, b) if op == "and" else e_or(a, b)

    def parse_eunary(self) -> Union[Event, Prop]:
        if self.at("~"):
            self.next()
            body = self.parse_eunary()
            if isinstance(body, Prop):
                return PNot(body)
            return e_not(body)
        return self.parse_eprimary()

    def parse_eprimary(self) -> Union[Event, Prop]:
        if self.at("("):
            self.next()
            out = self.parse_edisj()
            self.expect(")")
            return out
        if self.at("["):
            return self.parse_box()
        return self.parse_passign()

    def parse_box(self) -> Event:
        self.expect("[")
        pairs = [self.parse_iassign()]
        while self.at("&"):
            self.next()
            pairs.append(self.parse_iassign())
        self.expect("]")
        tok = self.peek()
        body = self.parse_punary()
        try:
            return EBox(intervention(pairs), body)
        except LangError as exc:
            raise ParseError(str(exc), self.text, tok.pos) from None

    def parse_iassign(self) -> tuple[str, str]:
        a = self.parse_passign()
        return (a.var, a.value)

    # propositional-only parsing for box bodies (no nested boxes)

    def parse_pdisj(self) -> Prop:
        out = self.parse_pconj()
        while self.at("|"):
            self.next()
            out = p_or(out, self.parse_pconj())
        return out

    def parse_pconj(self) -> Prop:
        out = self.parse_punary()
        while self.at("&"):
            self.next()
            out = p_and(out, self.parse_punary())
        return out

    def parse_punary(self) -> Prop:
        if self.at("~"):
            self.next()
            return PNot(self.parse_punary())
        if self.at("("):
            self.next()
            out = self.parse_pdisj()
            self.expect(")")
            return out
        if self.at("["):
            self.fail("interventions cannot be nested inside a box")
        return self.parse_passign()

    def parse_passign(self) -> PAssign:
        t = self.next()
        if t.kind != "ident":
            self.fail("expected a variable", t)
        var = t.text
        if self.sig is not None and not self.sig.has_variable(var):
            self.fail(f"unknown variable {var!r}", t)
        if self.at("="):
            self.next()
            vt = self.next()
            if vt.kind not in ("ident", "int"):
                self.fail("expected a value", vt)
            value = vt.text
            if self.sig is not None and value not in self.sig.domain(var):
                self.fail(f"value {value!r} not in the domain of {var!r}", vt)
            return PAssign(var, value)
        # bare variable abbreviates V=1 (paper-style q for X=1)
        if self.sig is not None:
            if "1" not in self.sig.domain(var):
                self.fail(f"bare {var!r} needs 1 in its domain", t)
        return PAssign(var, "1")


def parse_signature(text: str) -> Signature:
    p = _Parser(text, None)
    sig = p.parse_signature()
    if p.peek().kind != "eof":
        p.fail("trailing input after signature")
    return sig


def parse_formula(text: str, sig: Signature) -> Formula:
    p = _Parser(text, sig)
    out = p.parse_formula()
    if p.peek().kind != "eof":
        p.fail("trailing input after formula")
    return out


def parse_event(text: str, sig: Signature) -> Event:
    p = _Parser(text, sig)
    out = p.parse_event()
    if p.peek().kind != "eof":
        p.fail("trailing input after event")
    return out


def parse_document(text: str, sig: Optional[Signature] = None) -> tuple[Signature, Formula]:
    """Parse an optional ``sig`` header followed by one formula."""
    p = _Parser(text, None)
    if p.at("sig"):
        sig = p.parse_signature()
    elif sig is None:
        p.fail("no signature: provide a 'sig' header or pass one separately")
    p.sig = sig
    out = p.parse_formula()
    if p.peek().kind != "eof":
        p.fail("trailing input after formula")
    return sig, out


# ---------------------------------------------------------------------------
# printer (output reparses to a structurally identical AST)

_P_OR, _P_AND, _P_NOT, _P_ATOM = 1, 2, 3, 4


def _wrap(s: str, level: int, ctx: int) -> str:
    return f"({s})" if level < ctx else s


def _or_parts_prop(p: Prop):
    if isinstance(p, PNot) and isinstance(p.body, PAnd):
        l, r = p.body.left, p.body.right
        if isinstance(l, PNot) and isinstance(r, PNot):
            return l.body, r.body
    return None


def print_prop(p: Prop, ctx: int = _P_OR) -> str:
    parts = _or_parts_prop(p)
    if parts is not None:
        s = f"{print_prop(parts[0], _P_OR)} | {print_prop(parts[1], _P_AND)}"
        return _wrap(s, _P_OR, ctx)
    if isinstance(p, PAssign):
        return f"{p.var}={p.value}"
    if isinstance(p, PNot):
        return _wrap("~" + print_prop(p.body, _P_NOT), _P_NOT, ctx)
    s = f"{print_prop(p.left, _P_AND)} & {print_prop(p.right, _P_NOT)}"
    return _wrap(s, _P_AND, ctx)


def _or_parts_event(ev: Event):
    if isinstance(ev, ENot) and isinstance(ev.body, EAnd):
        l, r = ev.body.left, ev.body.right
        if isinstance(l, ENot) and isinstance(r, ENot):
            return l.body, r.body
    return None


def print_intervention(i: Intervention) -> str:
    return " & ".join(f"{v}={val}" for v, val in i.assignments)


def print_event(ev: Event, ctx: int = _P_OR) -> str:
    if isinstance(ev, EBox):
        if ev.interv.trivial:
            return print_prop(ev.body, ctx)
        s = f"[{print_intervention(ev.interv)}] {print_prop(ev.body, _P_NOT)}"
        return _wrap(s, _P_NOT, ctx)
    parts = _or_parts_event(ev)
    if parts is not None:
        s = f"{print_event(parts[0], _P_OR)} | {print_event(parts[1], _P_AND)}"
        return _wrap(s, _P_OR, ctx)
    if isinstance(ev, ENot):
        return _wrap("~" + print_event(ev.body, _P_NOT), _P_NOT, ctx)
    s = f"{print_event(ev.left, _P_AND)} & {print_event(ev.right, _P_NOT)}"
    return _wrap(s, _P_AND, ctx)


def _print_parg(ev: Event) -> str:
    # inside P(...) a top-level '|' would read as conditioning
    s = print_event(ev, _P_AND)
    return s


_T_SUM, _T_PROD, _T_LEAF = 1, 2, 3


def print_term(t: Term, ctx: int = _T_SUM) -> str:
    if isinstance(t, TProb):
        return f"P({_print_parg(t.event)})"
    if isinstance(t, TCond):
        return f"P({_print_parg(t.event)} | {_print_parg(t.given)})"
    if isinstance(t, TConst):
        return str(t.num) if t.den == 1 else f"{t.num}/{t.den}"
    if isinstance(t, TSum):
        s = f"{print_term(t.left, _T_SUM)} + {print_term(t.right, _T_PROD)}"
        return _wrap(s, _T_SUM, ctx)
    s = f"{print_term(t.left, _T_PROD)} * {print_term(t.right, _T_LEAF)}"
    return _wrap(s, _T_PROD, ctx)


_F_AND, _F_NOT, _F_ATOM = 1, 2, 3


def _eq_parts(f: Formula):
    if isinstance(f, FAnd) and isinstance(f.left, FGeq) and isinstance(f.right, FGeq):
        if f.left.left == f.right.right and f.left.right == f.right.left:
            return f.left.left, f.left.right
    return None


def print_formula(f: Formula, ctx: int = _F_AND) -> str:
    eq = _eq_parts(f)
    if eq is not None:
        return _wrap(f"{print_term(eq[0])} = {print_term(eq[1])}", _F_ATOM, ctx)
    if isinstance(f, FGeq):
        return f"{print_term(f.left)} >= {print_term(f.right)}"
    if isinstance(f, FNot):
        if isinstance(f.body, FGeq):
            return _wrap(f"{print_term(f.body.right)} > {print_term(f.body.left)}", _F_ATOM, ctx)
        return _wrap("~" + print_formula(f.body, _F_NOT), _F_NOT, ctx)
    s = f"{print_formula(f.left, _F_AND)} & {print_formula(f.right, _F_NOT)}"
    return _wrap(s, _F_AND, ctx)


def print_signature(sig: Signature) -> str:
    decls = " ".join(f"{n}:{{{','.join(d)}}};" for n, d in sig.variables)
    return f"sig {decls}"


# ---------------------------------------------------------------------------
# rational-literal desugaring (paper-pure encoding via fresh event partitions)


def desugar_constants(phi: Formula, sig: Signature) -> tuple[Formula, Signature]:
    """Replace rational literals by probabilities of fresh partition events.

    Each denominator q gets a fresh variable with q equiprobable values; p/q
    becomes the probability of a p-cell disjunction (a sum of full partitions
    plus a remainder when p > q).  Equiprobability constraints are conjoined.
    The result is satisfiability-equivalent to the input and literal-free.
    """
    dens: list[int] = []

    def collect(t: Term):
        if isinstance(t, TConst):
            if t.den not in dens:
                dens.append(t.den)
        elif isinstance(t, (TSum, TProd)):
            collect(t.left)
            collect(t.right)

    for t in iter_terms(phi):
        collect(t)
    if not dens:
        return phi, sig

    used = set(sig.names)
    var_for: dict[int, str] = {}
    for q in sorted(dens):
        name = f"C{q}"
        while name in used:
            name = "_" + name
        used.add(name)
        var_for[q] = name
    sig2 = Signature(
        sig.variables + tuple((var_for[q], tuple(str(i + 1) for i in range(q))) for q in sorted(dens))
    )

    def cells_event(q: int, count: int) -> Event:
        var = var_for[q]
        if count == 0:
            return e_of(PAnd(PAssign(var, "1"), PNot(PAssign(var, "1"))))
        return e_of(p_or(*[PAssign(var, str(i + 1)) for i in range(count)]))

    def rewrite(t: Term) -> Term:
        if isinstance(t, TConst):
            whole, part = divmod(t.num, t.den)
            pieces = [TProb(cells_event(t.den, t.den))] * whole
            if part or not pieces:
                pieces.append(TProb(cells_event(t.den, part)))
            return t_sum(*pieces)
        if isinstance(t, TSum):
            return TSum(rewrite(t.left), rewrite(t.right))
        if isinstance(t, TProd):
            return TProd(rewrite(t.left), rewrite(t.right))
        return t

    def rw_formula(f: Formula) -> Formula:
        if isinstance(f, FGeq):
            return FGeq(rewrite(f.left), rewrite(f.right))
        if isinstance(f, FNot):
            return FNot(rw_formula(f.body))
        return FAnd(rw_formula(f.left), rw_formula(f.right))

    out = rw_formula(phi)
    for q in sorted(dens):
        var = var_for[q]
        for i in range(1, q):
            out = FAnd(
                out,
                f_eq(
                    TProb(e_of(PAssign(var, str(i)))),
                    TProb(e_of(PAssign(var, str(i + 1)))),
                ),
            )
    return out, sig2
