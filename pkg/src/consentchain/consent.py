"""Per-consent lifecycle state, folded from committed actions.

The record for a consent reference is a pure left fold over the committed
actions that mention it, in chain order. The transition table is total: every
(phase, event-kind) pair either transitions or is an explicit no-op, and stray
no-ops (a response with no request, a withdraw on a denied consent, a contract
verdict out of place) are reported as anomalies without disturbing the record.
Validity is fail-closed and monotone: once INVALID it never returns to VALID.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Iterator

from .actions import (
    Action,
    ActionTag,
    ConsentContent,
    DataKind,
    Decision,
    Verdict,
)


class ConsentError(ValueError):
    pass


class UnknownReference(ConsentError):
    """The chain never mentions the requested consent reference."""


class Phase(Enum):
    REQUESTED = "Requested"
    GRANTED = "Granted"
    DENIED = "Denied"
    WITHDRAWN = "Withdrawn"
    EXPIRED = "Expired"


class Validity(Enum):
    NOT_YET_DECIDED = "NotYetDecided"
    VALID = "Valid"
    INVALID = "Invalid"


class EventKind(Enum):
    """Per-consent fold alphabet, extracted from committed actions."""

    REQUEST = "request"
    GRANT = "grant"
    DENY = "deny"
    WITHDRAW = "withdraw"
    SC1_INVALID = "sc1_invalid"
    SC1_VALID = "sc1_valid"
    SC2 = "sc2"


@dataclass(frozen=True)
class ConsentRecord:
    rf: bytes
    content: ConsentContent
    phase: Phase
    validity: Validity
    requested_at: int
    decided_at: int | None = None
    invalidated_at: int | None = None

    @property
    def expiry(self) -> int:
        return self.content.expiry


# (phase-or-None, event-kind) -> (next-phase or None to keep, validity-or-None
# to keep, is-transition, is-anomaly). Exhaustive over the cross product; the
# totality test enumerates it.
_KEEP = None
_T = True  # transition
_N = False  # no-op

TRANSITIONS: dict[tuple[Phase | None, EventKind], tuple[Phase | None, Validity | None, bool, bool]] = {}


def _rule(phase: Phase | None, kind: EventKind, next_phase: Phase | None, validity: Validity | None, transition: bool, anomaly: bool) -> None:
    TRANSITIONS[(phase, kind)] = (next_phase, validity, transition, anomaly)


# No record yet: only a request creates one; everything else is a stray.
_rule(None, EventKind.REQUEST, Phase.REQUESTED, Validity.NOT_YET_DECIDED, _T, False)
for _k in (EventKind.GRANT, EventKind.DENY, EventKind.WITHDRAW, EventKind.SC1_INVALID, EventKind.SC1_VALID):
    _rule(None, _k, _KEEP, _KEEP, _N, True)
_rule(None, EventKind.SC2, _KEEP, _KEEP, _N, False)

# Requested: awaiting the explicit decision.
_rule(Phase.REQUESTED, EventKind.REQUEST, _KEEP, _KEEP, _N, True)
_rule(Phase.REQUESTED, EventKind.GRANT, Phase.GRANTED, Validity.VALID, _T, False)
_rule(Phase.REQUESTED, EventKind.DENY, Phase.DENIED, Validity.INVALID, _T, False)
_rule(Phase.REQUESTED, EventKind.WITHDRAW, _KEEP, _KEEP, _N, True)
_rule(Phase.REQUESTED, EventKind.SC1_INVALID, _KEEP, Validity.INVALID, _N, True)
_rule(Phase.REQUESTED, EventKind.SC1_VALID, _KEEP, _KEEP, _N, True)
_rule(Phase.REQUESTED, EventKind.SC2, _KEEP, _KEEP, _N, False)

# Granted: may be withdrawn by the user or expired by the contract.
_rule(Phase.GRANTED, EventKind.REQUEST, _KEEP, _KEEP, _N, True)
_rule(Phase.GRANTED, EventKind.GRANT, _KEEP, _KEEP, _N, True)
_rule(Phase.GRANTED, EventKind.DENY, _KEEP, _KEEP, _N, True)
_rule(Phase.GRANTED, EventKind.WITHDRAW, Phase.WITHDRAWN, Validity.INVALID, _T, False)
_rule(Phase.GRANTED, EventKind.SC1_INVALID, Phase.EXPIRED, Validity.INVALID, _T, False)
_rule(Phase.GRANTED, EventKind.SC1_VALID, _KEEP, _KEEP, _N, True)
_rule(Phase.GRANTED, EventKind.SC2, _KEEP, _KEEP, _N, False)

# Terminal phases: everything is a no-op; the only non-anomalous arrival is the
# contract confirming a withdrawal it was triggered by.
for _terminal in (Phase.DENIED, Phase.WITHDRAWN, Phase.EXPIRED):
    for _k in (EventKind.REQUEST, EventKind.GRANT, EventKind.DENY, EventKind.WITHDRAW, EventKind.SC1_VALID):
        _rule(_terminal, _k, _KEEP, _KEEP, _N, True)
    _rule(_terminal, EventKind.SC2, _KEEP, _KEEP, _N, False)
_rule(Phase.DENIED, EventKind.SC1_INVALID, _KEEP, _KEEP, _N, True)
_rule(Phase.WITHDRAWN, EventKind.SC1_INVALID, _KEEP, _KEEP, _N, False)
_rule(Phase.EXPIRED, EventKind.SC1_INVALID, _KEEP, _KEEP, _N, True)


def event_kind(action: Action) -> EventKind | None:
    """Fold alphabet letter for a committed action, or None if irrelevant."""
    if action.tag == ActionTag.SEND_CONSENT_REQUEST:
        return EventKind.REQUEST
    if action.tag == ActionTag.SEND_CONSENT_RESPONSE:
        return EventKind.GRANT if action.payload.decision == Decision.GRANTED else EventKind.DENY
    if action.tag == ActionTag.SEND_WITHDRAW_CONSENT:
        return EventKind.WITHDRAW
    if action.tag == ActionTag.SC1_RESULT:
        if action.payload.verdict == Verdict.CONSENT_INVALID:
            return EventKind.SC1_INVALID
        return EventKind.SC1_VALID
    if action.tag == ActionTag.SC2_RESULT:
        return EventKind.SC2
    return None


@dataclass(frozen=True)
class ConsentAnomaly:
    rf: bytes
    timestamp: int
    kind: EventKind
    phase: Phase | None
    note: str


def fold_consent(
    events: Iterable[tuple[int, Action]]
) -> tuple[ConsentRecord | None, list[ConsentAnomaly]]:
    """Left fold over one consent reference's committed actions.

    events: (block timestamp, action) in chain order, all sharing one rf.
    Returns the final record (None if no request ever committed) and the
    stray-action anomalies encountered.
    """
    record: ConsentRecord | None = None
    anomalies: list[ConsentAnomaly] = []
    for timestamp, action in events:
        kind = event_kind(action)
        if kind is None:
            continue
        phase = record.phase if record is not None else None
        next_phase, validity, is_transition, is_anomaly = TRANSITIONS[(phase, kind)]
        if is_anomaly:
            anomalies.append(
                ConsentAnomaly(
                    rf=action.rf or b"",
                    timestamp=timestamp,
                    kind=kind,
                    phase=phase,
                    note=f"{kind.value} ignored in phase {phase.value if phase else 'absent'}",
                )
            )
        if record is None:
            if is_transition and kind == EventKind.REQUEST:
                record = ConsentRecord(
                    rf=action.rf,
                    content=action.payload,
                    phase=Phase.REQUESTED,
                    validity=Validity.NOT_YET_DECIDED,
                    requested_at=timestamp,
                )
            continue
        changes: dict = {}
        if next_phase is not None:
            changes["phase"] = next_phase
        if validity is not None and validity != record.validity:
            # INVALID is monotone; VALID only ever arrives via the grant.
            if record.validity != Validity.INVALID or validity == Validity.INVALID:
                changes["validity"] = validity
                if validity == Validity.INVALID and record.invalidated_at is None:
                    changes["invalidated_at"] = timestamp
        if kind in (EventKind.GRANT, EventKind.DENY) and is_transition:
            changes["decided_at"] = timestamp
        if changes:
            record = replace(record, **changes)
    return record, anomalies


def _events_for(chain, rf: bytes) -> Iterator[tuple[int, Action]]:
    for timestamp, action, _locator in chain.iter_committed():
        if action.rf == rf:
            yield timestamp, action


def project_consent_state(chain, rf: bytes) -> ConsentRecord:
    """Fold the chain's committed actions for one consent reference."""
    record, _ = fold_consent(_events_for(chain, rf))
    if record is None:
        # Never requested; stray mentions alone establish no consent.
        raise UnknownReference(rf.hex())
    return record


def consent_anomalies(chain) -> list[ConsentAnomaly]:
    """All stray-action anomalies across every consent reference on chain."""
    refs: list[bytes] = []
    seen: set[bytes] = set()
    for _ts, action, _loc in chain.iter_committed():
        if action.rf is not None and action.rf not in seen:
            seen.add(action.rf)
            refs.append(action.rf)
    out: list[ConsentAnomaly] = []
    for rf in refs:
        _, anomalies = fold_consent(_events_for(chain, rf))
        out.extend(anomalies)
    out.sort(key=lambda a: (a.timestamp, a.rf))
    return out


def algorithm1_gate(record: ConsentRecord, now: int) -> bool:
    """Is processing lawful right now under this record?

    True only for a granted, still-valid consent strictly inside its window:
    the window is half-open, so lawfulness ends exactly at the expiry tick.
    """
    return (
        record.phase == Phase.GRANTED
        and record.validity == Validity.VALID
        and now < record.expiry
    )


def device_privacy_view(chain, user_address: bytes, upto: tuple[int, int] | None = None) -> dict[DataKind, bool]:
    """Last-writer-wins device settings for one user; every kind defaults on.

    upto, when given, is an exclusive (block, tx) bound so contract evaluation
    can ask for the view as of a particular commit position.
    """
    view: dict[DataKind, bool] = {kind: True for kind in DataKind}
    for _ts, action, locator in chain.iter_committed():
        if upto is not None and locator >= upto:
            break
        if action.tag != ActionTag.SET_DEVICE_PRIVACY:
            continue
        if chain.sender_of(locator) != user_address:
            continue
        view[action.payload.data_kind] = action.payload.enabled
    return view
