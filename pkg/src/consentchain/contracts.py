"""Contract automation over committed blocks.

Two pure decision procedures plus the engine that drives them:

  * sc1_evaluate: a consent stays valid unless its window has expired or the
    user withdrew. Two boolean inputs, total over all four combinations.
  * sc2_evaluate: a data access is valid only when the report is committed,
    the consent decision was an explicit grant, the consent is still valid
    per sc1, and the subject's device setting for that data kind is enabled.
    Any other combination yields a warning: the default is refusal.

The engine reacts to block commits. Withdrawals that actually moved a consent
out of its granted phase and expiry crossings (first block whose timestamp
reaches the consent's expiry tick) trigger sc1; committed self reports
trigger sc2. Results are signed by the engine's own registered identity,
submitted to the pending pool, and so appear in the next produced block.
Every result's inputs are digested so a verifier can re-derive the verdict
from chain state alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .actions import (
    Action,
    ActionTag,
    ConsentMode,
    ContractContent,
    Decision,
    Verdict,
    compose_action,
)
from .codec import Writer, digest
from .consent import ConsentRecord, Phase, Validity, device_privacy_view, fold_consent
from .identity import Keypair
from .ledger import Chain, Ledger, Locator, sign_transaction


class Contract(Enum):
    SC1 = 1
    SC2 = 2


class TriggerKind(Enum):
    WITHDRAW_COMMITTED = "WithdrawCommitted"
    EXPIRY_REACHED = "ExpiryReached"
    REPORT_COMMITTED = "ReportCommitted"


@dataclass(frozen=True)
class ContractTrigger:
    kind: TriggerKind
    rf: bytes
    block_index: int
    locator: Locator | None  # the committed transaction that tripped it


@dataclass(frozen=True)
class ContractResult:
    contract: Contract
    rf: bytes
    verdict: Verdict
    trigger: ContractTrigger
    inputs_digest: bytes


def sc1_evaluate(expired: bool, withdrawn: bool) -> Verdict:
    """Consent validity switch: invalid iff expired or withdrawn."""
    if expired or withdrawn:
        return Verdict.CONSENT_INVALID
    return Verdict.CONSENT_STILL_VALID


def sc2_evaluate(
    report_committed: bool,
    decision: Decision | None,
    sc1_valid: bool,
    device_enabled: bool,
) -> Verdict:
    """Access validity: every conjunct must hold, otherwise warn (fail closed)."""
    if report_committed and decision == Decision.GRANTED and sc1_valid and device_enabled:
        return Verdict.ACCESS_VALID
    return Verdict.ACCESS_INVALID_WARNING


def sc1_inputs_digest(rf: bytes, expired: bool, withdrawn: bool) -> bytes:
    w = Writer()
    w.u8(Contract.SC1.value)
    w.bytes(rf)
    w.u8(1 if expired else 0)
    w.u8(1 if withdrawn else 0)
    return digest(w.getvalue())


def sc2_inputs_digest(
    rf: bytes,
    report_locator: Locator,
    report_committed: bool,
    decision: Decision | None,
    sc1_valid: bool,
    device_enabled: bool,
) -> bytes:
    w = Writer()
    w.u8(Contract.SC2.value)
    w.bytes(rf)
    w.u64(report_locator[0])
    w.u32(report_locator[1])
    w.u8(1 if report_committed else 0)
    w.u8(0 if decision is None else decision.value)
    w.u8(1 if sc1_valid else 0)
    w.u8(1 if device_enabled else 0)
    return digest(w.getvalue())


# -- chain-projected inputs -------------------------------------------------


def consent_state_before(chain: Chain, rf: bytes, upto: Locator) -> ConsentRecord | None:
    """Record folded from everything committed strictly before a position."""
    events = [
        (ts, action)
        for ts, action, loc in chain.iter_committed()
        if action.rf == rf and loc < upto
    ]
    record, _ = fold_consent(events)
    return record


def consent_state_through(chain: Chain, rf: bytes, block_index: int) -> ConsentRecord | None:
    events = [
        (ts, action)
        for ts, action, loc in chain.iter_committed()
        if action.rf == rf and loc[0] <= block_index
    ]
    record, _ = fold_consent(events)
    return record


def subject_of(chain: Chain, rf: bytes, upto: Locator | None = None) -> bytes | None:
    """The consent subject as the chain shows it: whoever signed the decision."""
    phase = None
    for _ts, action, loc in chain.iter_committed():
        if upto is not None and loc >= upto:
            break
        if action.rf != rf:
            continue
        if action.tag == ActionTag.SEND_CONSENT_REQUEST and phase is None:
            phase = Phase.REQUESTED
        elif action.tag == ActionTag.SEND_CONSENT_RESPONSE and phase == Phase.REQUESTED:
            return chain.sender_of(loc)
    return None


def decision_of(record: ConsentRecord | None) -> Decision | None:
    if record is None or record.phase == Phase.REQUESTED:
        return None
    if record.phase == Phase.DENIED:
        return Decision.DENIED
    return Decision.GRANTED  # granted at some point: Granted/Withdrawn/Expired


def sc1_committed(chain: Chain, rf: bytes, through_block: int | None = None) -> bool:
    for _ts, action, loc in chain.iter_committed():
        if through_block is not None and loc[0] > through_block:
            break
        if action.tag == ActionTag.SC1_RESULT and action.rf == rf and action.payload.verdict == Verdict.CONSENT_INVALID:
            return True
    return False


def refs_through(chain: Chain, through_block: int) -> list[bytes]:
    seen: list[bytes] = []
    have: set[bytes] = set()
    for _ts, action, loc in chain.iter_committed():
        if loc[0] > through_block:
            break
        if action.rf is not None and action.rf not in have:
            have.add(action.rf)
            seen.append(action.rf)
    return seen


def evaluate_block(chain: Chain, block_index: int) -> list[ContractResult]:
    """Triggers raised by one block, as a pure function of the chain prefix.

    Deterministic and re-derivable: running it again over the same prefix
    yields the same results, which is what verifiers do to audit committed
    verdicts.
    """
    block = chain.blocks[block_index]
    results: list[ContractResult] = []

    # Withdrawals that actually ended a granted consent.
    for t, tx in enumerate(block.transactions):
        if tx.action.tag != ActionTag.SEND_WITHDRAW_CONSENT:
            continue
        rf = tx.action.rf
        before = consent_state_before(chain, rf, (block_index, t))
        if before is None or before.phase != Phase.GRANTED:
            continue  # stray withdraw: fold no-op, no trigger
        expired = block.timestamp >= before.expiry
        results.append(
            ContractResult(
                contract=Contract.SC1,
                rf=rf,
                verdict=sc1_evaluate(expired=expired, withdrawn=True),
                trigger=ContractTrigger(TriggerKind.WITHDRAW_COMMITTED, rf, block_index, (block_index, t)),
                inputs_digest=sc1_inputs_digest(rf, expired, True),
            )
        )

    # Expiry crossings: first block at or past a granted consent's expiry.
    queued = {r.rf for r in results}
    for rf in refs_through(chain, block_index):
        if rf in queued or sc1_committed(chain, rf, block_index):
            continue
        record = consent_state_through(chain, rf, block_index)
        if record is None or record.phase != Phase.GRANTED or record.validity != Validity.VALID:
            continue
        if block.timestamp < record.expiry:
            continue
        results.append(
            ContractResult(
                contract=Contract.SC1,
                rf=rf,
                verdict=sc1_evaluate(expired=True, withdrawn=False),
                trigger=ContractTrigger(TriggerKind.EXPIRY_REACHED, rf, block_index, None),
                inputs_digest=sc1_inputs_digest(rf, True, False),
            )
        )

    # Committed self reports: judge each access.
    for t, tx in enumerate(block.transactions):
        if tx.action.tag != ActionTag.SEND_SELF_REPORT_DATA_ACCESS:
            continue
        rf = tx.action.rf
        loc = (block_index, t)
        record = consent_state_before(chain, rf, loc)
        decision = decision_of(record)
        if record is not None and decision == Decision.GRANTED:
            expired = block.timestamp >= record.expiry
            withdrawn = record.phase == Phase.WITHDRAWN
            sc1_valid = sc1_evaluate(expired, withdrawn) == Verdict.CONSENT_STILL_VALID
        else:
            sc1_valid = False
        subject = subject_of(chain, rf, loc)
        if record is not None and subject is not None:
            device_enabled = device_privacy_view(chain, subject, upto=loc)[record.content.data_kind]
        else:
            device_enabled = True  # no subject on chain; the decision gate already refuses
        verdict = sc2_evaluate(True, decision, sc1_valid, device_enabled)
        results.append(
            ContractResult(
                contract=Contract.SC2,
                rf=rf,
                verdict=verdict,
                trigger=ContractTrigger(TriggerKind.REPORT_COMMITTED, rf, block_index, loc),
                inputs_digest=sc2_inputs_digest(rf, loc, True, decision, sc1_valid, device_enabled),
            )
        )
    return results


def rederive_results(chain: Chain) -> list[ContractResult]:
    """Expected results for every block of the chain, in trigger order."""
    out: list[ContractResult] = []
    for k in range(chain.height()):
        out.extend(evaluate_block(chain, k))
    return out


def result_action(result: ContractResult) -> tuple[ActionTag, ContractContent]:
    tag = ActionTag.SC1_RESULT if result.contract == Contract.SC1 else ActionTag.SC2_RESULT
    return tag, ContractContent(result.verdict, result.inputs_digest)


class ContractEngine:
    """Signs and submits contract verdicts under its own registered identity."""

    def __init__(self, keypair: Keypair, ledger: Ledger) -> None:
        self.keypair = keypair
        self.ledger = ledger
        self._nonce = ledger.chain.last_nonce(keypair.identity.address)
        self._done_blocks: set[int] = set()
        self.emitted: list[ContractResult] = []

    def attach(self) -> None:
        self.ledger.on_commit.append(self.on_commit)

    def on_commit(self, block) -> None:
        # Idempotent per block: re-delivery of the same commit emits nothing.
        if block.index in self._done_blocks:
            return
        self._done_blocks.add(block.index)
        for result in evaluate_block(self.ledger.chain, block.index):
            tag, content = result_action(result)
            action = compose_action(tag, result.rf, content, self.keypair.identity)
            self._nonce += 1
            tx = sign_transaction(self.keypair, action, self._nonce)
            outcome = self.ledger.submit(tx, now=block.timestamp)
            if not outcome.accepted:  # engine submissions are well-formed by construction
                raise RuntimeError(f"engine submission rejected: {outcome.reason} {outcome.detail}")
            self.emitted.append(result)


def collection_mode(chain: Chain, rf: bytes) -> ConsentMode | None:
    for _ts, action, _loc in chain.iter_committed():
        if action.tag == ActionTag.SEND_CONSENT_REQUEST and action.rf == rf:
            return action.payload.mode
    return None
