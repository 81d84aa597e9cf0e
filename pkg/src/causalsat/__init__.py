"""Satisfiability, model checking and entailment for probabilistic and
causal languages over finite structural causal models."""

from .lang import (
    Fragment,
    Intervention,
    LangError,
    ParseError,
    Signature,
    TOP,
    classify,
    mentioned_interventions,
    mentioned_variables,
    parse_document,
    parse_formula,
    parse_signature,
    print_formula,
)
from .scm import (
    SCM,
    SCMError,
    apply_intervention,
    eval_event,
    influences,
    is_recursive,
    make_scm,
    model_check,
    scm_from_json,
    scm_to_json,
    term_value,
)
from .statedesc import (
    DeltaContext,
    StateDescription,
    build_context,
    check_compatibility,
    entails,
    iterate_descriptions,
    model_from_measure,
)
from .reduction import (
    Certificate,
    Decision,
    check_entailment,
    decide_causal_sat,
    enumerate_certificates,
    reduce_with_certificate,
)
from .linear import solve_linear
from .etr import build_etr, emit_smtlib, encode_pure_prob, run_external, solve_etr_numeric
from .gadget import EtrInverseInstance, encode_etr_inverse

__all__ = [name for name in dir() if not name.startswith("_")]
