"""Permissioned consent ledger with contract automation, a multi-agent
simulator, and a local-view authenticity checker."""

from .actions import (
    Action,
    ActionTag,
    ConsentContent,
    ConsentMode,
    DataKind,
    Decision,
    Verdict,
)
from .consent import (
    ConsentRecord,
    Phase,
    Validity,
    algorithm1_gate,
    fold_consent,
    project_consent_state,
)
from .contracts import ContractEngine, sc1_evaluate, sc2_evaluate
from .identity import AgentIdentity, Keypair, Role
from .ledger import (
    Chain,
    Ledger,
    ValidationResult,
    extract_evidence,
    load_and_validate,
    validate_chain,
    verify_evidence,
    verify_evidence_for_holder,
)
from .semf import AuthResult, Symbol, check_auth, check_design_goals
from .simnet import Scenario, TraceEvent, replay, run_scenario, standard_scenarios

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionTag",
    "AgentIdentity",
    "AuthResult",
    "Chain",
    "ConsentContent",
    "ConsentMode",
    "ConsentRecord",
    "ContractEngine",
    "DataKind",
    "Decision",
    "Keypair",
    "Ledger",
    "Phase",
    "Role",
    "Scenario",
    "Symbol",
    "TraceEvent",
    "ValidationResult",
    "Validity",
    "Verdict",
    "algorithm1_gate",
    "check_auth",
    "check_design_goals",
    "extract_evidence",
    "fold_consent",
    "load_and_validate",
    "project_consent_state",
    "replay",
    "run_scenario",
    "sc1_evaluate",
    "sc2_evaluate",
    "standard_scenarios",
    "validate_chain",
    "verify_evidence",
    "verify_evidence_for_holder",
    "__version__",
]
