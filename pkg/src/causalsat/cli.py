"""Command-line surface.

Subcommands: parse, classify, check, solve, entail, reduce, emit-smt,
demo-frontdoor.  Formula files may start with a ``sig`` header, or a
separate signature file is passed with --sig.  Exit codes: 0 sat/true/pass,
1 unsat/false/fail, 2 usage or parse error, 3 unknown.

Machine output (--format json) is line-delimited JSON with sorted keys and
no timing, so identical inputs, seed and configuration give byte-identical
output.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import frontdoor
from .etr import emit_smtlib, encode_pure_prob
from .lang import (
    Intervention,
    LangError,
    ParseError,
    Signature,
    TOP,
    classify,
    intervention,
    parse_document,
    parse_formula,
    parse_signature,
    print_formula,
    print_intervention,
    print_term,
)
from .rat import rat_str
from .reduction import (
    BudgetExhausted,
    Certificate,
    CertificateError,
    Decision,
    check_entailment,
    decide_causal_sat,
    enumerate_certificates,
    reduce_with_certificate,
)
from .scm import (
    Evaluator,
    SCMError,
    find_recursive_order,
    scm_from_json,
    scm_to_json,
    table_dependencies,
)
from .statedesc import StateDescription, build_context, description_from_results

EXIT_TRUE, EXIT_FALSE, EXIT_USAGE, EXIT_UNKNOWN = 0, 1, 2, 3


class _Out:
    def __init__(self, fmt: str):
        self.fmt = fmt

    def record(self, **fields):
        if self.fmt == "json":
            print(json.dumps(fields, sort_keys=True))

    def human(self, text: str):
        if self.fmt == "human":
            print(text)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_inputs(args) -> tuple[Signature, object]:
    sig = None
    if getattr(args, "sig", None):
        sig = parse_signature(_read(args.sig))
    text = _read(args.formula)
    return parse_document(text, sig)


def _add_common(p, solver=False):
    p.add_argument("--sig", help="signature file (overridden by a sig header)")
    p.add_argument("--format", choices=("human", "json"), default="human")
    p.add_argument("-v", "--verbose", action="count", default=0)
    if solver:
        p.add_argument("--backend", choices=("linear", "numeric", "external"), default="linear")
        p.add_argument("--solver-cmd", default=None, help="external solver command, {file} placeholder allowed")
        p.add_argument("--mode", choices=("maximal", "exhaustive"), default="maximal")
        p.add_argument("--budget-certs", type=int, default=10_000)
        p.add_argument("--budget-restarts", type=int, default=64)
        p.add_argument("--timeout-ms", type=int, default=30_000)
        p.add_argument("--seed", type=int, default=0)


def cmd_parse(args, out: _Out) -> int:
    sig, phi = _load_inputs(args)
    frag = classify(phi)
    out.human(print_formula(phi))
    out.human(f"fragment: {frag.arithmetic}, causal: {'yes' if frag.causal else 'no'}")
    out.record(record="parse", canonical=print_formula(phi), fragment=frag.arithmetic,
               causal=frag.causal)
    return EXIT_TRUE


def cmd_classify(args, out: _Out) -> int:
    sig, phi = _load_inputs(args)
    frag = classify(phi)
    out.human(f"fragment: {frag.arithmetic}, causal: {'yes' if frag.causal else 'no'}")
    out.record(record="classify", fragment=frag.arithmetic, causal=frag.causal)
    return EXIT_TRUE


def _nonrecursive_report(m) -> str:
    deps = {v: table_dependencies(m, v) for v in m.sig.names}
    # walk one cycle and show a witnessing pair of table rows for its first edge
    seen: dict[str, Optional[str]] = {}

    def dfs(v, stack):
        seen[v] = "open"
        for w in sorted(deps[v]):
            if seen.get(w) == "open":
                return stack[stack.index(w):] + [w]
            if w not in seen:
                got = dfs(w, stack + [w])
                if got:
                    return got
        seen[v] = "done"
        return None

    cycle = None
    for v in m.sig.names:
        if v not in seen:
            cycle = dfs(v, [v])
            if cycle:
                break
    if not cycle:
        return "no recursive order exists"
    w, v = cycle[0], cycle[1] if len(cycle) > 1 else cycle[0]
    # exhibit two entries of v's table differing only at w
    others = m.others(v)
    j = others.index(w)
    grouped: dict = {}
    for (combo, u), val in sorted(m.functions[v].items()):
        key = (combo[:j] + combo[j + 1:], u)
        if key in grouped and grouped[key][1] != val:
            (c0, u0), v0 = grouped[key][0], grouped[key][1]
            return (
                f"cycle {' -> '.join(cycle)}; table of {v} reads {w}: "
                f"given={dict(zip(others, c0))}, u={dict(zip(m.exo_names, u0))} -> {v0} but "
                f"given={dict(zip(others, combo))}, u={dict(zip(m.exo_names, u))} -> {val}"
            )
        grouped.setdefault(key, ((combo, u), val))
    return f"cycle {' -> '.join(cycle)}"


def cmd_check(args, out: _Out) -> int:
    m = scm_from_json(_read(args.model))
    sig = m.sig
    if args.sig:
        sig = parse_signature(_read(args.sig))
        if sig != m.sig:
            raise SCMError("--sig disagrees with the model's endogenous signature")
    _, phi = parse_document(_read(args.formula), m.sig)
    order = find_recursive_order(m)
    if order is None:
        report = _nonrecursive_report(m)
        out.human(f"model rejected: not recursive ({report})")
        out.record(record="check", error="non-recursive", detail=report)
        return EXIT_USAGE
    ev = Evaluator(m)
    verdict = ev.check(phi)
    for atom, lhs, rhs in ev.atom_values(phi):
        left, right = print_term(atom.left), print_term(atom.right)
        out.human(f"  {left} = {rat_str(lhs)}   {right} = {rat_str(rhs)}")
        out.record(record="atom", left=left, right=right, lhs=rat_str(lhs), rhs=rat_str(rhs))
    out.human(f"result: {'true' if verdict else 'false'}")
    out.record(record="check", result=verdict)
    return EXIT_TRUE if verdict else EXIT_FALSE


def _emit_reduction_trace(out: _Out, phi, sig, cert: Certificate, verbose: int = 0):
    from .statedesc import check_compatibility

    red = reduce_with_certificate(phi, sig, cert)
    out.human("certificate:")
    out.human(f"  order: {' < '.join(cert.order)}")
    for desc, atom in red.mapping:
        out.human(f"  {desc.render()}  ->  {atom.var}={atom.value}")
        if verbose:
            trace = []
            check_compatibility(desc, cert.order, trace=trace)
            for line in trace:
                out.human("    | " + line)
    out.human("psi: " + print_formula(red.psi))
    out.record(
        record="reduction",
        order=list(cert.order),
        dictionary=[[d, a] for d, a in red.dictionary()],
        psi=print_formula(red.psi),
    )


def _decision_exit(out: _Out, d: Decision, command: str, witness_out=None) -> int:
    payload = {"record": "verdict", "command": command, "status": d.status}
    if d.reason:
        payload["reason"] = d.reason
    out.record(**payload)
    out.record(record="stats", **d.stats)
    if d.status == "sat":
        out.human("SAT")
        if d.witness is not None:
            js = scm_to_json(d.witness)
            out.record(record="witness", model=json.loads(js), verified=d.witness_verified)
            if witness_out:
                with open(witness_out, "w", encoding="utf-8") as fh:
                    fh.write(scm_to_json(d.witness, indent=2) + "\n")
                out.human(f"witness written to {witness_out}")
            else:
                out.human(js)
        return EXIT_TRUE
    if d.status == "unsat":
        out.human("UNSAT")
        return EXIT_FALSE
    out.human(f"UNKNOWN ({d.reason})")
    return EXIT_UNKNOWN


def cmd_solve(args, out: _Out) -> int:
    sig, phi = _load_inputs(args)
    d = decide_causal_sat(
        phi,
        sig,
        backend=args.backend,
        mode=args.mode,
        budget_certs=args.budget_certs,
        solver_cmd=args.solver_cmd,
        timeout_ms=args.timeout_ms,
        seed=args.seed,
        restarts=args.budget_restarts,
    )
    if args.emit_reduction and d.certificate is not None:
        _emit_reduction_trace(out, phi, sig, d.certificate)
    return _decision_exit(out, d, "solve", args.witness_out)


def cmd_entail(args, out: _Out) -> int:
    sig = parse_signature(_read(args.sig)) if args.sig else None
    gamma_text = _read(args.gamma)
    gammas = []
    lines = [ln.strip() for ln in gamma_text.splitlines()]
    idx = 0
    if lines and lines[0].startswith("sig"):
        sig = parse_signature(lines[0])
        idx = 1
    if sig is None:
        raise LangError("entail needs a signature (header line in the gamma file or --sig)")
    for ln in lines[idx:]:
        if ln:
            gammas.append(parse_formula(ln, sig))
    _, phi = parse_document(_read(args.formula), sig)
    res = check_entailment(
        gammas,
        phi,
        sig,
        backend=args.backend,
        mode=args.mode,
        budget_certs=args.budget_certs,
        solver_cmd=args.solver_cmd,
        timeout_ms=args.timeout_ms,
        seed=args.seed,
        restarts=args.budget_restarts,
    )
    out.record(record="verdict", command="entail", status=res.status)
    if res.status == "entails":
        out.human("ENTAILS")
        return EXIT_TRUE
    if res.status == "counterexample":
        out.human("NOT ENTAILED; counterexample model:")
        js = scm_to_json(res.counterexample)
        out.human(js)
        out.record(record="witness", model=json.loads(js), verified=True)
        return EXIT_FALSE
    out.human("UNKNOWN")
    return EXIT_UNKNOWN


def _intervention_from_string(text: str, sig: Signature) -> Intervention:
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise LangError(f"intervention must look like [X=1 & Y=0] or [], got {text!r}")
    body = body[1:-1].strip()
    if not body:
        return TOP
    pairs = []
    for part in body.split("&"):
        var, _, val = part.partition("=")
        var, val = var.strip(), val.strip()
        sig.check_assignment(var, val)
        pairs.append((var, val))
    return intervention(pairs)


def _certificate_from_json(data: dict, phi, sig) -> Certificate:
    ctx = build_context(phi, sig)
    order = tuple(data["order"])
    descs = []
    for entry in data["descriptions"]:
        results = {}
        for key, assigns in entry.items():
            results[_intervention_from_string(key, sig)] = dict(assigns)
        descs.append(description_from_results(ctx, results))
    return Certificate(order, tuple(descs))


def cmd_reduce(args, out: _Out) -> int:
    sig, phi = _load_inputs(args)
    if args.certificate:
        cert = _certificate_from_json(json.loads(_read(args.certificate)), phi, sig)
    else:
        cert = None
        try:
            for cand in enumerate_certificates(phi, sig, args.budget_certs):
                try:
                    reduce_with_certificate(phi, sig, cand)
                except CertificateError:
                    continue
                cert = cand
                break
        except BudgetExhausted:
            pass
        if cert is None:
            out.human("no valid certificate within budget")
            out.record(record="verdict", command="reduce", status="unknown",
                       reason="no valid certificate within budget")
            return EXIT_UNKNOWN
    _emit_reduction_trace(out, phi, sig, cert)
    return EXIT_TRUE


def cmd_emit_smt(args, out: _Out) -> int:
    sig, phi = _load_inputs(args)
    if classify(phi).causal:
        ctx = build_context(phi, sig)
        from .statedesc import compatible_descriptions

        order = ctx.variables
        cert = Certificate(order, tuple(compatible_descriptions(ctx, order)))
        red = reduce_with_certificate(phi, sig, cert, ctx)
        system = encode_pure_prob(red.psi, red.sig)
    else:
        system = encode_pure_prob(phi, sig)
    text = emit_smtlib(system)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        out.human(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_TRUE


def cmd_demo_frontdoor(args, out: _Out) -> int:
    reports = frontdoor.run_demo(args.seed, args.count)
    ok = True
    for r in reports:
        out.human(
            f"seed {r.seed}: constraints {'ok' if r.gamma_ok else 'FAIL'}, "
            f"identification {'ok' if r.identity_ok else 'FAIL'}"
        )
        out.record(record="demo", seed=r.seed, gamma_ok=r.gamma_ok, identity_ok=r.identity_ok)
        ok = ok and r.ok
    out.human(f"{sum(r.ok for r in reports)}/{len(reports)} passed")
    out.record(record="verdict", command="demo-frontdoor",
               status="pass" if ok else "fail")
    return EXIT_TRUE if ok else EXIT_FALSE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="causalsat")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a formula and print its canonical form")
    p.add_argument("--formula", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("classify", help="print the formula's fragment")
    p.add_argument("--formula", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("check", help="model-check a formula against an SCM file")
    p.add_argument("--model", required=True)
    p.add_argument("--formula", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("solve", help="decide satisfiability")
    p.add_argument("--formula", required=True)
    p.add_argument("--emit-reduction", action="store_true")
    p.add_argument("--witness-out", default=None)
    _add_common(p, solver=True)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("entail", help="does a set of assumptions entail a formula")
    p.add_argument("--gamma", required=True, help="file with one formula per line")
    p.add_argument("--formula", required=True)
    _add_common(p, solver=True)
    p.set_defaults(fn=cmd_entail)

    p = sub.add_parser("reduce", help="emit the probabilistic reduction of a formula")
    p.add_argument("--formula", required=True)
    p.add_argument("--certificate", default=None, help="JSON certificate file")
    p.add_argument("--budget-certs", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(fn=cmd_reduce)

    p = sub.add_parser("emit-smt", help="emit the formula's polynomial system as SMT-LIB")
    p.add_argument("--formula", required=True)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_emit_smt)

    p = sub.add_parser("demo-frontdoor", help="verify random front-door models")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    _add_common(p)
    p.set_defaults(fn=cmd_demo_frontdoor)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    out = _Out(args.format)
    try:
        return args.fn(args, out)
    except ParseError as exc:
        sys.stderr.write(exc.caret_diagnostic() + "\n")
        return EXIT_USAGE
    except (LangError, SCMError, CertificateError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
