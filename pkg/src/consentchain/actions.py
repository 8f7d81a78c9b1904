"""Consent protocol action algebra.

Every on-chain and on-device event is an Action: a tag, an optional consent
reference, and a tag-specific payload. Send* tags are submitted by agents and
committed in blocks; Recv* tags are device-side observations bound to a
committed counterpart and never enter the pending pool; SC*Result tags are
emitted only by the contract engine. SetDevicePrivacy carries no consent
reference. RegisterAgent is ledger infrastructure (registry bootstrap), not a
protocol action, and is excluded from traces and property alphabets.

compose_action is the single constructor agents use: it enforces role rules
(who may say what) and content completeness (a consent request must state
purpose, requester, data kind, mode, and expiry; a response must carry an
explicit decision; there is no default grant).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .codec import CodecError, Reader, Writer, digest
from .identity import AgentIdentity, Role

CONSENT_REF_SIZE = 16
MAX_DETAIL_BYTES = 4096


class ActionError(ValueError):
    """Base for action construction/validation failures."""


class UnknownTag(ActionError):
    pass


class RoleViolation(ActionError):
    pass


class IncompleteContent(ActionError):
    pass


class ActionTag(Enum):
    SEND_CONSENT_REQUEST = 1
    RECV_CONSENT_REQUEST = 2
    SEND_CONSENT_RESPONSE = 3
    RECV_CONSENT_RESPONSE = 4
    SEND_SELF_REPORT_DATA_ACCESS = 5
    RECV_SELF_REPORT_DATA_ACCESS = 6
    SEND_REPORT_DATA_AVAILABLE = 7
    RECV_REPORT_DATA_AVAILABLE = 8
    SEND_WITHDRAW_CONSENT = 9
    RECV_WITHDRAW_CONSENT = 10
    SET_DEVICE_PRIVACY = 11
    SC1_RESULT = 12
    SC2_RESULT = 13
    REGISTER_AGENT = 14  # infrastructure, outside the protocol alphabet


# Send tag -> matching receive tag; receives are bound to committed sends.
RECV_FOR_SEND = {
    ActionTag.SEND_CONSENT_REQUEST: ActionTag.RECV_CONSENT_REQUEST,
    ActionTag.SEND_CONSENT_RESPONSE: ActionTag.RECV_CONSENT_RESPONSE,
    ActionTag.SEND_SELF_REPORT_DATA_ACCESS: ActionTag.RECV_SELF_REPORT_DATA_ACCESS,
    ActionTag.SEND_REPORT_DATA_AVAILABLE: ActionTag.RECV_REPORT_DATA_AVAILABLE,
    ActionTag.SEND_WITHDRAW_CONSENT: ActionTag.RECV_WITHDRAW_CONSENT,
}
SEND_FOR_RECV = {v: k for k, v in RECV_FOR_SEND.items()}


class DataKind(Enum):
    STEPS = 1
    HEART_RATE = 2
    SLEEP = 3
    LOCATION = 4


class ConsentMode(Enum):
    PROCESS = 1
    COLLECT = 2


class Decision(Enum):
    GRANTED = 1
    DENIED = 2


class Verdict(Enum):
    CONSENT_STILL_VALID = 1
    CONSENT_INVALID = 2
    ACCESS_VALID = 3
    ACCESS_INVALID_WARNING = 4


@dataclass(frozen=True)
class ConsentContent:
    """What a consent request asks for."""

    purpose: str
    requester_address: bytes
    data_kind: DataKind
    mode: ConsentMode
    expiry: int  # logical tick t_v; the granted window is [decision, t_v)

    def encode(self) -> bytes:
        w = Writer()
        w.text(self.purpose)
        w.bytes(self.requester_address)
        w.u8(self.data_kind.value)
        w.u8(self.mode.value)
        w.u64(self.expiry)
        return w.getvalue()

    @staticmethod
    def decode(r: Reader) -> "ConsentContent":
        return ConsentContent(
            purpose=r.text(),
            requester_address=r.bytes(),
            data_kind=DataKind(r.u8()),
            mode=ConsentMode(r.u8()),
            expiry=r.u64(),
        )


@dataclass(frozen=True)
class ResponseContent:
    decision: Decision

    def encode(self) -> bytes:
        return Writer().u8(self.decision.value).getvalue()

    @staticmethod
    def decode(r: Reader) -> "ResponseContent":
        return ResponseContent(Decision(r.u8()))


@dataclass(frozen=True)
class ReportContent:
    """Free-text access detail for self reports / availability notices."""

    detail: str

    def encode(self) -> bytes:
        return Writer().text(self.detail).getvalue()

    @staticmethod
    def decode(r: Reader) -> "ReportContent":
        return ReportContent(r.text())


@dataclass(frozen=True)
class EmptyContent:
    def encode(self) -> bytes:
        return b""

    @staticmethod
    def decode(r: Reader) -> "EmptyContent":
        return EmptyContent()


@dataclass(frozen=True)
class DeviceContent:
    data_kind: DataKind
    enabled: bool

    def encode(self) -> bytes:
        return Writer().u8(self.data_kind.value).u8(1 if self.enabled else 0).getvalue()

    @staticmethod
    def decode(r: Reader) -> "DeviceContent":
        kind = DataKind(r.u8())
        flag = r.u8()
        if flag not in (0, 1):
            raise CodecError(f"bad enabled flag: {flag}")
        return DeviceContent(kind, bool(flag))


@dataclass(frozen=True)
class ContractContent:
    verdict: Verdict
    inputs_digest: bytes

    def encode(self) -> bytes:
        return Writer().u8(self.verdict.value).bytes(self.inputs_digest).getvalue()

    @staticmethod
    def decode(r: Reader) -> "ContractContent":
        return ContractContent(Verdict(r.u8()), r.bytes())


@dataclass(frozen=True)
class RegisterContent:
    candidate: AgentIdentity
    ra_signature: bytes  # RA signing the candidate's encoded identity
    validator: bool

    def encode(self) -> bytes:
        w = Writer()
        w.bytes(self.candidate.encode())
        w.bytes(self.ra_signature)
        w.u8(1 if self.validator else 0)
        return w.getvalue()

    @staticmethod
    def decode(r: Reader) -> "RegisterContent":
        candidate = AgentIdentity.decode(Reader(r.bytes()))
        ra_signature = r.bytes()
        flag = r.u8()
        if flag not in (0, 1):
            raise CodecError(f"bad validator flag: {flag}")
        return RegisterContent(candidate, ra_signature, bool(flag))


Payload = Union[
    ConsentContent,
    ResponseContent,
    ReportContent,
    EmptyContent,
    DeviceContent,
    ContractContent,
    RegisterContent,
]

_PAYLOAD_TYPE: dict[ActionTag, type] = {
    ActionTag.SEND_CONSENT_REQUEST: ConsentContent,
    ActionTag.RECV_CONSENT_REQUEST: ConsentContent,
    ActionTag.SEND_CONSENT_RESPONSE: ResponseContent,
    ActionTag.RECV_CONSENT_RESPONSE: ResponseContent,
    ActionTag.SEND_SELF_REPORT_DATA_ACCESS: ReportContent,
    ActionTag.RECV_SELF_REPORT_DATA_ACCESS: ReportContent,
    ActionTag.SEND_REPORT_DATA_AVAILABLE: ReportContent,
    ActionTag.RECV_REPORT_DATA_AVAILABLE: ReportContent,
    ActionTag.SEND_WITHDRAW_CONSENT: EmptyContent,
    ActionTag.RECV_WITHDRAW_CONSENT: EmptyContent,
    ActionTag.SET_DEVICE_PRIVACY: DeviceContent,
    ActionTag.SC1_RESULT: ContractContent,
    ActionTag.SC2_RESULT: ContractContent,
    ActionTag.REGISTER_AGENT: RegisterContent,
}

# Which roles may compose which Send/observation tags.
_SENDER_ROLES: dict[ActionTag, frozenset[Role]] = {
    ActionTag.SEND_CONSENT_REQUEST: frozenset({Role.FITNESS_PROVIDER, Role.REQUESTER}),
    ActionTag.RECV_CONSENT_REQUEST: frozenset({Role.USER}),
    ActionTag.SEND_CONSENT_RESPONSE: frozenset({Role.USER}),
    ActionTag.RECV_CONSENT_RESPONSE: frozenset({Role.FITNESS_PROVIDER, Role.REQUESTER}),
    ActionTag.SEND_SELF_REPORT_DATA_ACCESS: frozenset({Role.FITNESS_PROVIDER, Role.REQUESTER}),
    ActionTag.RECV_SELF_REPORT_DATA_ACCESS: frozenset({Role.USER}),
    ActionTag.SEND_REPORT_DATA_AVAILABLE: frozenset({Role.FITNESS_PROVIDER}),
    ActionTag.RECV_REPORT_DATA_AVAILABLE: frozenset({Role.USER}),
    ActionTag.SEND_WITHDRAW_CONSENT: frozenset({Role.USER}),
    ActionTag.RECV_WITHDRAW_CONSENT: frozenset({Role.FITNESS_PROVIDER, Role.REQUESTER}),
    ActionTag.SET_DEVICE_PRIVACY: frozenset({Role.USER}),
    ActionTag.SC1_RESULT: frozenset({Role.CONTRACT_ENGINE}),
    ActionTag.SC2_RESULT: frozenset({Role.CONTRACT_ENGINE}),
    ActionTag.REGISTER_AGENT: frozenset({Role.REGULATORY_AUTHORITY}),
}

_NO_REF_TAGS = {ActionTag.SET_DEVICE_PRIVACY, ActionTag.REGISTER_AGENT}


@dataclass(frozen=True)
class Action:
    tag: ActionTag
    rf: bytes | None  # 128-bit consent reference; absent only where allowed
    payload: Payload

    def encode(self) -> bytes:
        w = Writer()
        w.u8(self.tag.value)
        w.maybe_bytes(self.rf)
        w.bytes(self.payload.encode())
        return w.getvalue()

    @staticmethod
    def decode(r: Reader) -> "Action":
        try:
            tag = ActionTag(r.u8())
        except ValueError as exc:
            raise CodecError(f"unknown action tag: {exc}") from exc
        rf = r.maybe_bytes()
        if rf is not None and len(rf) != CONSENT_REF_SIZE:
            raise CodecError(f"bad consent ref length: {len(rf)}")
        payload_reader = Reader(r.bytes())
        payload = _PAYLOAD_TYPE[tag].decode(payload_reader)
        payload_reader.expect_end()
        return Action(tag, rf, payload)

    def payload_digest(self) -> bytes:
        return digest(self.payload.encode())


def validate_action_shape(action: Action) -> None:
    """Structural checks independent of chain state. Raises ActionError."""
    if not isinstance(action.tag, ActionTag):
        raise UnknownTag(f"not an action tag: {action.tag!r}")
    expected = _PAYLOAD_TYPE[action.tag]
    if type(action.payload) is not expected:
        raise IncompleteContent(
            f"{action.tag.name} requires {expected.__name__}, got {type(action.payload).__name__}"
        )
    if action.tag in _NO_REF_TAGS:
        if action.rf is not None:
            raise IncompleteContent(f"{action.tag.name} carries no consent ref")
    else:
        if action.rf is None:
            raise IncompleteContent(f"{action.tag.name} requires a consent ref")
        if len(action.rf) != CONSENT_REF_SIZE:
            raise IncompleteContent(f"consent ref must be {CONSENT_REF_SIZE} bytes")
    if isinstance(action.payload, ConsentContent):
        content = action.payload
        if not content.purpose.strip():
            raise IncompleteContent("consent request purpose must be non-empty")
        if len(content.requester_address) != 32:
            raise IncompleteContent("requester_address must be a 32-byte address")
        if content.expiry <= 0:
            raise IncompleteContent("expiry tick must be positive")
    if isinstance(action.payload, ReportContent):
        if len(action.payload.detail.encode("utf-8")) > MAX_DETAIL_BYTES:
            raise IncompleteContent(f"report detail exceeds {MAX_DETAIL_BYTES} bytes")
    if isinstance(action.payload, ContractContent):
        if len(action.payload.inputs_digest) != 32:
            raise IncompleteContent("inputs_digest must be a 32-byte digest")


def compose_action(tag: ActionTag, rf: bytes | None, payload: Payload, sender: AgentIdentity) -> Action:
    """Build an action, enforcing role rules and content completeness."""
    if not isinstance(tag, ActionTag):
        raise UnknownTag(f"not an action tag: {tag!r}")
    allowed = _SENDER_ROLES[tag]
    if sender.role not in allowed:
        raise RoleViolation(
            f"{sender.display_id} ({sender.role.name}) may not compose {tag.name}"
        )
    action = Action(tag, rf, payload)
    validate_action_shape(action)
    return action
