"""Scenario-driven multi-agent simulation.

A scenario is a small JSON document: agents and their roles, which of them
act as validators, a script of timed intents, optional adversarial
injections, and a horizon of logical ticks. Running one produces a chain,
a global trace of events as they became visible (committed transactions,
device-side receive observations, rejected submissions, injected device
events), an anomaly list, and a step-coverage map over the consent flows.

Per tick the order is fixed: adversarial injections first, then scripted
intents, then block production (which fires the contract engine), then
receive observations for whatever just committed. Everything is driven by
the scenario seed and logical ticks, so a rerun is byte-identical.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .actions import (
    Action,
    ActionTag,
    ConsentContent,
    ConsentMode,
    ContractContent,
    DataKind,
    Decision,
    DeviceContent,
    EmptyContent,
    RECV_FOR_SEND,
    RegisterContent,
    ReportContent,
    ResponseContent,
    Verdict,
    compose_action,
)
from .codec import Writer, ZERO_DIGEST
from .consent import consent_anomalies
from .contracts import ContractEngine, TriggerKind
from .identity import Keypair, Role
from .ledger import (
    CHAIN_MAGIC,
    CHAIN_VERSION,
    Block,
    Chain,
    Ledger,
    Locator,
    SignedTransaction,
    make_block,
    parse_blocks,
    sign_transaction,
)

ENGINE_DISPLAY = "SC"

ROLE_NAMES = {
    Role.USER: "User",
    Role.FITNESS_PROVIDER: "FitnessProvider",
    Role.REQUESTER: "Requester",
    Role.REGULATORY_AUTHORITY: "RegulatoryAuthority",
    Role.CONTRACT_ENGINE: "ContractEngine",
}
NAME_ROLES = {v: k for k, v in ROLE_NAMES.items()}

TAG_NAMES = {
    ActionTag.SEND_CONSENT_REQUEST: "SendConsentRequest",
    ActionTag.RECV_CONSENT_REQUEST: "RecvConsentRequest",
    ActionTag.SEND_CONSENT_RESPONSE: "SendConsentResponse",
    ActionTag.RECV_CONSENT_RESPONSE: "RecvConsentResponse",
    ActionTag.SEND_SELF_REPORT_DATA_ACCESS: "SendSelfReportDataAccess",
    ActionTag.RECV_SELF_REPORT_DATA_ACCESS: "RecvSelfReportDataAccess",
    ActionTag.SEND_REPORT_DATA_AVAILABLE: "SendReportDataAvailable",
    ActionTag.RECV_REPORT_DATA_AVAILABLE: "RecvReportDataAvailable",
    ActionTag.SEND_WITHDRAW_CONSENT: "SendWithdrawConsent",
    ActionTag.RECV_WITHDRAW_CONSENT: "RecvWithdrawConsent",
    ActionTag.SET_DEVICE_PRIVACY: "SetDevicePrivacy",
    ActionTag.SC1_RESULT: "SC1Result",
    ActionTag.SC2_RESULT: "SC2Result",
    ActionTag.REGISTER_AGENT: "RegisterAgent",
}
NAME_TAGS = {v: k for k, v in TAG_NAMES.items()}

KIND_NAMES = {
    DataKind.STEPS: "Steps",
    DataKind.HEART_RATE: "HeartRate",
    DataKind.SLEEP: "Sleep",
    DataKind.LOCATION: "Location",
}
NAME_KINDS = {v: k for k, v in KIND_NAMES.items()}

MODE_NAMES = {ConsentMode.PROCESS: "Process", ConsentMode.COLLECT: "Collect"}
NAME_MODES = {v: k for k, v in MODE_NAMES.items()}

DECISION_NAMES = {Decision.GRANTED: "Granted", Decision.DENIED: "Denied"}
NAME_DECISIONS = {v: k for k, v in DECISION_NAMES.items()}


class ScenarioError(ValueError):
    """Malformed scenario or trace input."""


class Intent(Enum):
    REQUEST_CONSENT = "RequestConsent"
    RESPOND = "Respond"
    WITHDRAW = "Withdraw"
    SELF_REPORT = "SelfReport"
    REPORT_AVAILABLE = "ReportAvailable"
    SET_DEVICE = "SetDevice"
    TICK = "Tick"


class InjectionKind(Enum):
    TAMPER_COMMITTED_TX = "TamperCommittedTx"
    FABRICATE_SIGNED_TX = "FabricateSignedTx"
    UNLAWFUL_PROCESS_REPORT = "UnlawfulProcessReport"
    UNBOUND_RECV = "UnboundRecv"


@dataclass(frozen=True)
class ScriptEvent:
    tick: int
    actor: str
    intent: Intent
    params: dict


@dataclass(frozen=True)
class Injection:
    tick: int
    kind: InjectionKind
    target: dict


@dataclass
class Scenario:
    name: str
    seed: int
    agents: list[tuple[str, Role]]
    validators: list[str]
    script: list[ScriptEvent]
    adversary: list[Injection]
    horizon: int

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "agents": [[display, ROLE_NAMES[role]] for display, role in self.agents],
            "validators": list(self.validators),
            "script": [
                {"tick": e.tick, "actor": e.actor, "intent": e.intent.value, "params": e.params}
                for e in self.script
            ],
            "adversary": [
                {"tick": i.tick, "kind": i.kind.value, "target": i.target}
                for i in self.adversary
            ],
            "horizon": self.horizon,
        }

    @staticmethod
    def from_json(doc: dict) -> "Scenario":
        try:
            agents = [(str(d), NAME_ROLES[r]) for d, r in doc["agents"]]
            script = [
                ScriptEvent(int(e["tick"]), str(e["actor"]), Intent(e["intent"]), dict(e.get("params", {})))
                for e in doc["script"]
            ]
            adversary = [
                Injection(int(i["tick"]), InjectionKind(i["kind"]), dict(i.get("target", {})))
                for i in doc.get("adversary", [])
            ]
            scenario = Scenario(
                name=str(doc["name"]),
                seed=int(doc["seed"]),
                agents=agents,
                validators=[str(v) for v in doc["validators"]],
                script=script,
                adversary=adversary,
                horizon=int(doc["horizon"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc
        scenario.validate()
        return scenario

    def validate(self) -> None:
        displays = [d for d, _ in self.agents]
        if len(set(displays)) != len(displays):
            raise ScenarioError("duplicate agent display ids")
        if ENGINE_DISPLAY in displays:
            raise ScenarioError(f"display id {ENGINE_DISPLAY!r} is reserved for the contract engine")
        roles = dict(self.agents)
        if Role.REGULATORY_AUTHORITY not in roles.values():
            raise ScenarioError("no regulatory authority among the agents")
        if Role.CONTRACT_ENGINE in roles.values():
            raise ScenarioError("the contract engine is implicit, not a scripted agent")
        for v in self.validators:
            if v not in roles:
                raise ScenarioError(f"validator {v!r} is not an agent")
        if not self.validators:
            raise ScenarioError("at least one validator is required")
        if self.horizon < 1:
            raise ScenarioError("horizon must be at least one tick")
        for e in self.script:
            if not 1 <= e.tick <= self.horizon:
                raise ScenarioError(f"script tick {e.tick} outside 1..{self.horizon}")
            if e.actor not in roles:
                raise ScenarioError(f"script actor {e.actor!r} is not an agent")
        for i in self.adversary:
            if not 1 <= i.tick <= self.horizon:
                raise ScenarioError(f"injection tick {i.tick} outside 1..{self.horizon}")


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return Scenario.from_json(doc)


# -- the global trace --------------------------------------------------------


def format_locator(loc: Locator | None) -> str | None:
    return None if loc is None else f"{loc[0]}:{loc[1]}"


def parse_locator(text: str | None) -> Locator | None:
    if text is None:
        return None
    b, _, t = text.partition(":")
    return (int(b), int(t))


STATUSES = ("committed", "observed", "rejected", "injected")


@dataclass(frozen=True)
class TraceEvent:
    """One visible event: exactly six fields, one JSON object per line."""

    tick: int
    actor: str
    tag: str
    rf: str | None  # consent reference, hex
    locator: str | None  # "block:tx" for committed context, else null
    status: str

    def to_json(self) -> dict:
        return {
            "tick": self.tick,
            "actor": self.actor,
            "tag": self.tag,
            "rf": self.rf,
            "locator": self.locator,
            "status": self.status,
        }

    @staticmethod
    def from_json(doc: dict) -> "TraceEvent":
        try:
            event = TraceEvent(
                tick=int(doc["tick"]),
                actor=str(doc["actor"]),
                tag=str(doc["tag"]),
                rf=None if doc["rf"] is None else str(doc["rf"]),
                locator=None if doc["locator"] is None else str(doc["locator"]),
                status=str(doc["status"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed trace event: {exc}") from exc
        if event.tag not in NAME_TAGS:
            raise ScenarioError(f"unknown trace tag: {event.tag}")
        if event.status not in STATUSES:
            raise ScenarioError(f"unknown trace status: {event.status}")
        return event


def write_trace(path: str | Path, events: list[TraceEvent]) -> None:
    lines = [json.dumps(e.to_json(), sort_keys=True) for e in events]
    Path(path).write_text("".join(line + "\n" for line in lines))


def parse_trace_text(text: str) -> list[TraceEvent]:
    events = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"trace line {n}: {exc}") from exc
        events.append(TraceEvent.from_json(doc))
    return events


def read_trace(path: str | Path) -> list[TraceEvent]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read trace {path}: {exc}") from exc
    return parse_trace_text(text)


# -- flow step coverage ------------------------------------------------------

STEP_LABELS = {
    "1.1a": "provider submits a processing consent request",
    "1.1b": "requester submits a collection consent request",
    "1.2": "consent request committed",
    "1.3": "user device receives the request",
    "2": "user reviews the request on the device",
    "3.1": "user submits a consent response",
    "3.2": "consent response committed",
    "3.3a": "provider receives the response",
    "3.3b": "requester receives the response",
    "4.1": "provider submits a processing self report",
    "4.2": "processing self report committed",
    "4.3": "user device receives the self report",
    "5.1": "access-validity contract triggered by the processing report",
    "5.2": "access-validity verdict computed",
    "5.3": "access-validity result committed",
    "6.1": "provider prepares an availability notice",
    "6.2": "requester submits a collection self report",
    "6.3": "collection self report committed",
    "6.4": "availability notice submitted",
    "6.5": "availability notice committed",
    "6.6a": "user device receives the collection self report",
    "6.6b": "user device receives the availability notice",
    "7.1": "access-validity contract triggered by the collection report",
    "7.2": "access-validity verdict computed",
    "7.3": "access-validity result committed",
    "1.1w": "user submits a withdrawal",
    "1.2w": "withdrawal committed",
    "1.3w": "withdrawal visible to the contract layer",
    "1.4wa": "provider receives the withdrawal",
    "1.4wb": "requester receives the withdrawal",
    "2.1w": "consent-validity contract triggered by the withdrawal",
    "2.2w": "consent-validity verdict computed",
    "2.3w": "consent-validity result committed",
}


@dataclass
class RunResult:
    scenario: Scenario
    seed: int
    seed_override: bool
    chain: Chain
    ledger: Ledger
    engine: ContractEngine
    trace: list[TraceEvent]
    anomalies: list[dict]
    coverage: dict[str, int]
    refs: dict[str, bytes]
    rf_meta: dict[bytes, dict] = field(default_factory=dict)


# -- genesis -----------------------------------------------------------------


def make_genesis(ra: Keypair, registrations: list[tuple[Keypair, bool]]) -> Chain:
    """Genesis block: the authority registers itself first, then every agent
    and the contract engine, flagging validators. Produced and signed by the
    authority at tick zero."""
    txs: list[SignedTransaction] = []
    nonce = 0
    for keypair, validator in registrations:
        content = RegisterContent(keypair.identity, ra.sign(keypair.identity.encode()), validator)
        action = compose_action(ActionTag.REGISTER_AGENT, None, content, ra.identity)
        nonce += 1
        txs.append(sign_transaction(ra, action, nonce))
    block = make_block(0, ZERO_DIGEST, 0, txs, ra)
    return Chain([block])


# -- the run loop ------------------------------------------------------------

_OCCURRENCE_TAGS = {
    "request": ActionTag.SEND_CONSENT_REQUEST,
    "response": ActionTag.SEND_CONSENT_RESPONSE,
    "report": ActionTag.SEND_SELF_REPORT_DATA_ACCESS,
    "available": ActionTag.SEND_REPORT_DATA_AVAILABLE,
    "withdraw": ActionTag.SEND_WITHDRAW_CONSENT,
}

# Commit routing: who observes a committed send on their device.
_ROUTE_TO_SUBJECT = {
    ActionTag.SEND_CONSENT_REQUEST,
    ActionTag.SEND_SELF_REPORT_DATA_ACCESS,
    ActionTag.SEND_REPORT_DATA_AVAILABLE,
}
_ROUTE_TO_REQUESTER = {
    ActionTag.SEND_CONSENT_RESPONSE,
    ActionTag.SEND_WITHDRAW_CONSENT,
}


class _Run:
    def __init__(self, scenario: Scenario, seed: int, seed_override: bool) -> None:
        scenario.validate()
        self.scenario = scenario
        self.seed = seed
        self.seed_override = seed_override
        self.rng = random.Random(seed)
        self.keypairs: dict[str, Keypair] = {}
        roles = dict(scenario.agents)
        for display, role in scenario.agents:
            self.keypairs[display] = Keypair.derive(seed, display, role)
        self.engine_keys = Keypair.derive(seed, ENGINE_DISPLAY, Role.CONTRACT_ENGINE)
        ra_display = next(d for d, r in scenario.agents if r == Role.REGULATORY_AUTHORITY)
        self.ra = self.keypairs[ra_display]

        registrations = [(self.ra, ra_display in scenario.validators)]
        registrations += [
            (self.keypairs[d], d in scenario.validators)
            for d, _ in scenario.agents
            if d != ra_display
        ]
        registrations.append((self.engine_keys, False))
        chain = make_genesis(self.ra, registrations)

        producer_keys = {self.ra.identity.address: self.ra}
        for v in scenario.validators:
            producer_keys[self.keypairs[v].identity.address] = self.keypairs[v]
        self.ledger = Ledger(chain=chain, producer_keys=producer_keys)
        for display in roles:
            self.ledger.add_replica(display)
        self.engine = ContractEngine(self.engine_keys, self.ledger)
        self.engine.attach()

        self.trace: list[TraceEvent] = []
        self.anomalies: list[dict] = []
        self.coverage: dict[str, int] = {}
        self.refs: dict[str, bytes] = {}
        self.rf_meta: dict[bytes, dict] = {}
        self.nonces: dict[str, int] = {}

    # -- helpers ------------------------------------------------------------

    def mark(self, *labels: str) -> None:
        for label in labels:
            self.coverage[label] = self.coverage.get(label, 0) + 1

    def ref(self, name: str) -> bytes:
        if name not in self.refs:
            self.refs[name] = self.rng.getrandbits(128).to_bytes(16, "big")
        return self.refs[name]

    def known_ref(self, name: str) -> bytes:
        if name not in self.refs:
            raise ScenarioError(f"consent reference {name!r} was never requested")
        return self.refs[name]

    def next_nonce(self, display: str) -> int:
        self.nonces[display] = self.nonces.get(display, 0) + 1
        return self.nonces[display]

    def anomaly(self, tick: int, kind: str, **detail) -> None:
        entry = {"tick": tick, "kind": kind}
        entry.update(detail)
        self.anomalies.append(entry)

    def submit(self, tick: int, display: str, tag: ActionTag, rf: bytes | None, payload) -> bool:
        keypair = self.keypairs[display]
        action = compose_action(tag, rf, payload, keypair.identity)
        tx = sign_transaction(keypair, action, self.next_nonce(display))
        outcome = self.ledger.submit(tx, now=tick)
        if not outcome.accepted:
            self.trace.append(
                TraceEvent(tick, display, TAG_NAMES[tag], rf.hex() if rf else None, None, "rejected")
            )
            self.anomaly(
                tick,
                "rejected_submission",
                actor=display,
                tag=TAG_NAMES[tag],
                rf=rf.hex() if rf else None,
                reason=outcome.reason.value,
                detail=outcome.detail,
            )
        return outcome.accepted

    # -- scripted intents ----------------------------------------------------

    def run_event(self, e: ScriptEvent) -> None:
        p = e.params
        role = self.keypairs[e.actor].identity.role
        try:
            if e.intent == Intent.REQUEST_CONSENT:
                rf = self.ref(p["ref"])
                content = ConsentContent(
                    purpose=p["purpose"],
                    requester_address=self.keypairs[e.actor].identity.address,
                    data_kind=NAME_KINDS[p["data_kind"]],
                    mode=NAME_MODES[p["mode"]],
                    expiry=int(p["expiry"]),
                )
                if rf not in self.rf_meta:
                    self.rf_meta[rf] = {
                        "subject": p["user"],
                        "requester": e.actor,
                        "mode": content.mode,
                        "data_kind": content.data_kind,
                    }
                if self.submit(e.tick, e.actor, ActionTag.SEND_CONSENT_REQUEST, rf, content):
                    self.mark("1.1a" if role == Role.FITNESS_PROVIDER else "1.1b")
            elif e.intent == Intent.RESPOND:
                rf = self.known_ref(p["ref"])
                content = ResponseContent(NAME_DECISIONS[p["decision"]])
                if self.submit(e.tick, e.actor, ActionTag.SEND_CONSENT_RESPONSE, rf, content):
                    self.mark("2", "3.1")
            elif e.intent == Intent.WITHDRAW:
                rf = self.known_ref(p["ref"])
                if self.submit(e.tick, e.actor, ActionTag.SEND_WITHDRAW_CONSENT, rf, EmptyContent()):
                    self.mark("1.1w")
            elif e.intent == Intent.SELF_REPORT:
                rf = self.known_ref(p["ref"])
                mode = self.rf_meta[rf]["mode"]
                if self.submit(e.tick, e.actor, ActionTag.SEND_SELF_REPORT_DATA_ACCESS, rf, ReportContent(p["detail"])):
                    self.mark("4.1" if mode == ConsentMode.PROCESS else "6.2")
            elif e.intent == Intent.REPORT_AVAILABLE:
                rf = self.known_ref(p["ref"])
                if self.submit(e.tick, e.actor, ActionTag.SEND_REPORT_DATA_AVAILABLE, rf, ReportContent(p["detail"])):
                    self.mark("6.1", "6.4")
            elif e.intent == Intent.SET_DEVICE:
                content = DeviceContent(NAME_KINDS[p["data_kind"]], bool(p["enabled"]))
                self.submit(e.tick, e.actor, ActionTag.SET_DEVICE_PRIVACY, None, content)
            elif e.intent == Intent.TICK:
                pass
        except KeyError as exc:
            raise ScenarioError(f"script event at tick {e.tick} missing parameter {exc}") from exc

    # -- adversarial injections ----------------------------------------------

    def run_injection(self, inj: Injection) -> None:
        t = inj.target
        try:
            if inj.kind == InjectionKind.TAMPER_COMMITTED_TX:
                self.tamper(inj.tick, t["node"], self.known_ref(t["ref"]), t["occurrence"], int(t.get("nth", 0)))
            elif inj.kind == InjectionKind.FABRICATE_SIGNED_TX:
                self.fabricate(inj.tick, t["claim_sender"], t["signer"], self.known_ref(t["ref"]), t["decision"])
            elif inj.kind == InjectionKind.UNLAWFUL_PROCESS_REPORT:
                rf = self.known_ref(t["ref"])
                mode = self.rf_meta[rf]["mode"]
                if self.submit(inj.tick, t["actor"], ActionTag.SEND_SELF_REPORT_DATA_ACCESS, rf, ReportContent(t["detail"])):
                    self.mark("4.1" if mode == ConsentMode.PROCESS else "6.2")
            elif inj.kind == InjectionKind.UNBOUND_RECV:
                self.unbound_recv(inj.tick, t["actor"], t["tag"], self.known_ref(t["ref"]))
        except KeyError as exc:
            raise ScenarioError(f"injection at tick {inj.tick} missing target field {exc}") from exc

    def tamper(self, tick: int, node: str, rf: bytes, occurrence: str, nth: int) -> None:
        """Flip one committed transaction inside a single replica's bytes.
        The shared chain is untouched; only that node's copy diverges."""
        if node not in self.ledger.replicas:
            raise ScenarioError(f"no replica for node {node!r}")
        tag = _OCCURRENCE_TAGS.get(occurrence)
        if tag is None:
            raise ScenarioError(f"unknown tamper occurrence {occurrence!r}")
        spots = [loc for _ts, action, loc in self.chain.iter_committed() if action.rf == rf and action.tag == tag]
        if nth >= len(spots):
            raise ScenarioError(f"no committed {occurrence} #{nth} for that reference")
        b, t = spots[nth]
        blocks, result = parse_blocks(self.ledger.replicas[node])
        if blocks is None:
            raise ScenarioError(f"replica for {node!r} does not parse: {result.detail}")
        block = blocks[b]
        old_tx = block.transactions[t]
        mutated = _mutate_action(old_tx.action)
        if mutated is not None:
            new_tx = SignedTransaction(mutated, old_tx.sender_address, old_tx.nonce, old_tx.signature)
        else:
            new_tx = SignedTransaction(old_tx.action, old_tx.sender_address, old_tx.nonce + 1, old_tx.signature)
        txs = list(block.transactions)
        txs[t] = new_tx
        blocks[b] = _with_transactions(block, txs)
        self.ledger.replicas[node] = _encode_blocks(blocks)

    def fabricate(self, tick: int, claim_sender: str, signer: str, rf: bytes, decision: str) -> None:
        """Submit a response claiming one agent's address but signed by
        another's key. Admission must refuse it on the signature check."""
        victim = self.keypairs[claim_sender].identity
        attacker = self.keypairs[signer]
        action = Action(ActionTag.SEND_CONSENT_RESPONSE, rf, ResponseContent(NAME_DECISIONS[decision]))
        nonce = max(
            self.chain.last_nonce(victim.address),
            self.ledger._pending_nonces.get(victim.address, 0),
        ) + 1
        unsigned = SignedTransaction(action, victim.address, nonce, b"")
        tx = SignedTransaction(action, victim.address, nonce, attacker.sign(unsigned.signing_bytes()))
        outcome = self.ledger.submit(tx, now=tick)
        if outcome.accepted:
            return  # would commit normally; on_block records it
        self.trace.append(
            TraceEvent(tick, claim_sender, TAG_NAMES[action.tag], rf.hex(), None, "rejected")
        )
        self.anomaly(
            tick,
            "rejected_submission",
            actor=claim_sender,
            tag=TAG_NAMES[action.tag],
            rf=rf.hex(),
            reason=outcome.reason.value,
            detail=outcome.detail,
        )

    def unbound_recv(self, tick: int, actor: str, tag_name: str, rf: bytes) -> None:
        """A device shows a receive that no committed send backs."""
        tag = NAME_TAGS.get(tag_name)
        if tag is None or tag not in {recv for recv in RECV_FOR_SEND.values()}:
            raise ScenarioError(f"unbound receive needs a receive tag, got {tag_name!r}")
        self.trace.append(TraceEvent(tick, actor, tag_name, rf.hex(), None, "injected"))
        self.anomaly(tick, "unbound_receive", actor=actor, tag=tag_name, rf=rf.hex())

    # -- commit and observation bookkeeping -----------------------------------

    @property
    def chain(self) -> Chain:
        return self.ledger.chain

    def on_block(self, block) -> None:
        b = block.index
        for t, tx in enumerate(block.transactions):
            if tx.action.tag == ActionTag.REGISTER_AGENT:
                continue
            display = self.chain.registry.by_address[tx.sender_address].display_id
            rf = tx.action.rf
            self.trace.append(
                TraceEvent(
                    block.timestamp,
                    display,
                    TAG_NAMES[tx.action.tag],
                    rf.hex() if rf else None,
                    format_locator((b, t)),
                    "committed",
                )
            )
            self.mark_commit(tx.action, (b, t), block.timestamp)
        for t, tx in enumerate(block.transactions):
            self.observe(tx.action, (b, t), block.timestamp)

    def mark_commit(self, action: Action, loc: Locator, tick: int) -> None:
        tag = action.tag
        if tag == ActionTag.SEND_CONSENT_REQUEST:
            self.mark("1.2")
        elif tag == ActionTag.SEND_CONSENT_RESPONSE:
            self.mark("3.2")
        elif tag == ActionTag.SEND_WITHDRAW_CONSENT:
            self.mark("1.2w", "1.3w")
        elif tag == ActionTag.SEND_SELF_REPORT_DATA_ACCESS:
            mode = self.rf_meta.get(action.rf, {}).get("mode")
            self.mark("4.2" if mode == ConsentMode.PROCESS else "6.3")
        elif tag == ActionTag.SEND_REPORT_DATA_AVAILABLE:
            self.mark("6.5")
        elif tag == ActionTag.SC1_RESULT:
            trigger = self._trigger_of(action.payload)
            if trigger is not None and trigger.kind == TriggerKind.WITHDRAW_COMMITTED:
                self.mark("2.3w")
        elif tag == ActionTag.SC2_RESULT:
            mode = self.rf_meta.get(action.rf, {}).get("mode")
            self.mark("5.3" if mode == ConsentMode.PROCESS else "7.3")
            if action.payload.verdict == Verdict.ACCESS_INVALID_WARNING:
                self.anomaly(
                    tick,
                    "sc_warning",
                    rf=action.rf.hex(),
                    locator=format_locator(loc),
                    detail="access judged invalid",
                )

    def _trigger_of(self, content: ContractContent):
        for result in self.engine.emitted:
            if result.inputs_digest == content.inputs_digest:
                return result.trigger
        return None

    def observe(self, action: Action, loc: Locator, tick: int) -> None:
        recv_tag = RECV_FOR_SEND.get(action.tag)
        if recv_tag is None:
            return
        meta = self.rf_meta.get(action.rf)
        if meta is None:
            return
        if action.tag in _ROUTE_TO_SUBJECT:
            receiver = meta["subject"]
        else:
            receiver = meta["requester"]
        self.trace.append(
            TraceEvent(tick, receiver, TAG_NAMES[recv_tag], action.rf.hex(), format_locator(loc), "observed")
        )
        role = self.keypairs[receiver].identity.role
        if action.tag == ActionTag.SEND_CONSENT_REQUEST:
            self.mark("1.3")
        elif action.tag == ActionTag.SEND_CONSENT_RESPONSE:
            self.mark("3.3a" if role == Role.FITNESS_PROVIDER else "3.3b")
        elif action.tag == ActionTag.SEND_SELF_REPORT_DATA_ACCESS:
            mode = meta["mode"]
            self.mark("4.3" if mode == ConsentMode.PROCESS else "6.6a")
        elif action.tag == ActionTag.SEND_REPORT_DATA_AVAILABLE:
            self.mark("6.6b")
        elif action.tag == ActionTag.SEND_WITHDRAW_CONSENT:
            self.mark("1.4wa" if role == Role.FITNESS_PROVIDER else "1.4wb")

    def mark_evaluations(self, fresh) -> None:
        for result in fresh:
            if result.trigger.kind == TriggerKind.WITHDRAW_COMMITTED:
                self.mark("2.1w", "2.2w")
            elif result.trigger.kind == TriggerKind.REPORT_COMMITTED:
                mode = self.rf_meta.get(result.rf, {}).get("mode")
                if mode == ConsentMode.PROCESS:
                    self.mark("5.1", "5.2")
                else:
                    self.mark("7.1", "7.2")

    # -- main loop ------------------------------------------------------------

    def run(self) -> RunResult:
        script_by_tick: dict[int, list[ScriptEvent]] = {}
        for e in self.scenario.script:
            script_by_tick.setdefault(e.tick, []).append(e)
        inj_by_tick: dict[int, list[Injection]] = {}
        for i in self.scenario.adversary:
            inj_by_tick.setdefault(i.tick, []).append(i)

        for tick in range(1, self.scenario.horizon + 1):
            for inj in inj_by_tick.get(tick, []):
                self.run_injection(inj)
            for e in script_by_tick.get(tick, []):
                self.run_event(e)
            emitted_before = len(self.engine.emitted)
            block = self.ledger.produce_block(tick)
            if block is not None:
                self.mark_evaluations(self.engine.emitted[emitted_before:])
                self.on_block(block)

        for node in self.ledger.final_sweep():
            self.anomaly(
                self.scenario.horizon,
                "replica_divergence",
                node=node,
                height=self.chain.height(),
            )
        for stray in consent_anomalies(self.chain):
            self.anomaly(
                stray.timestamp,
                "stray_action",
                rf=stray.rf.hex(),
                event=stray.kind.value,
                phase=stray.phase.value if stray.phase else None,
                detail=stray.note,
            )
        return RunResult(
            scenario=self.scenario,
            seed=self.seed,
            seed_override=self.seed_override,
            chain=self.chain,
            ledger=self.ledger,
            engine=self.engine,
            trace=self.trace,
            anomalies=self.anomalies,
            coverage=dict(sorted(self.coverage.items())),
            refs=dict(self.refs),
            rf_meta=dict(self.rf_meta),
        )


def run_scenario(scenario: Scenario, seed_override: int | None = None) -> RunResult:
    seed = scenario.seed if seed_override is None else seed_override
    return _Run(scenario, seed, seed_override is not None).run()


def replay(chain: Chain) -> list[TraceEvent]:
    """The committed sub-trace a chain defines on its own: every protocol
    transaction in commit order, nothing device-side, registrations skipped."""
    events = []
    for ts, action, loc in chain.iter_committed():
        if action.tag == ActionTag.REGISTER_AGENT:
            continue
        display = chain.registry.by_address[chain.sender_of(loc)].display_id
        events.append(
            TraceEvent(ts, display, TAG_NAMES[action.tag], action.rf.hex() if action.rf else None, format_locator(loc), "committed")
        )
    return events


def anomalies_payload(result: RunResult) -> dict:
    return {
        "scenario": result.scenario.name,
        "seed": result.seed,
        "seed_override": result.seed_override,
        "anomalies": result.anomalies,
    }


# -- tamper mechanics ---------------------------------------------------------


def _flip_text(s: str) -> str:
    if not s:
        return "?"
    return chr(ord(s[0]) ^ 0x01) + s[1:]


def _mutate_action(action: Action) -> Action | None:
    """Smallest semantic flip the payload type allows; None if it has no
    mutable content (the caller then bumps the nonce instead)."""
    p = action.payload
    if isinstance(p, ConsentContent):
        return Action(action.tag, action.rf, replace(p, purpose=_flip_text(p.purpose)))
    if isinstance(p, ResponseContent):
        flipped = Decision.DENIED if p.decision == Decision.GRANTED else Decision.GRANTED
        return Action(action.tag, action.rf, ResponseContent(flipped))
    if isinstance(p, ReportContent):
        return Action(action.tag, action.rf, ReportContent(_flip_text(p.detail)))
    if isinstance(p, DeviceContent):
        return Action(action.tag, action.rf, DeviceContent(p.data_kind, not p.enabled))
    if isinstance(p, ContractContent):
        flipped_verdict = {
            Verdict.CONSENT_STILL_VALID: Verdict.CONSENT_INVALID,
            Verdict.CONSENT_INVALID: Verdict.CONSENT_STILL_VALID,
            Verdict.ACCESS_VALID: Verdict.ACCESS_INVALID_WARNING,
            Verdict.ACCESS_INVALID_WARNING: Verdict.ACCESS_VALID,
        }[p.verdict]
        return Action(action.tag, action.rf, ContractContent(flipped_verdict, p.inputs_digest))
    return None


def _with_transactions(block: Block, txs: list[SignedTransaction]) -> Block:
    # Header fields and producer signature kept verbatim: the point of a
    # tamper is bytes that no longer match the signatures over them.
    return Block(
        block.index,
        block.prev_digest,
        block.timestamp,
        tuple(txs),
        block.producer_address,
        block.producer_signature,
    )


def _encode_blocks(blocks) -> bytes:
    w = Writer()
    w.raw(CHAIN_MAGIC)
    w.u8(CHAIN_VERSION)
    w.u32(len(blocks))
    for block in blocks:
        w.raw(block.encode())
    return w.getvalue()


# -- the standard scenario set ------------------------------------------------


def _agents() -> list[tuple[str, Role]]:
    return [
        ("RA", Role.REGULATORY_AUTHORITY),
        ("U1", Role.USER),
        ("FP1", Role.FITNESS_PROVIDER),
        ("R1", Role.REQUESTER),
    ]


def _ev(tick: int, actor: str, intent: Intent, **params) -> ScriptEvent:
    return ScriptEvent(tick, actor, intent, params)


def standard_scenarios() -> dict[str, Scenario]:
    """The bundled s1..s9 set: five clean flows, four adversarial ones."""
    validators = ["RA", "FP1", "R1"]

    s1 = Scenario(
        name="s1_happy_path",
        seed=7001,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "FP1", Intent.REQUEST_CONSENT, ref="rf_p", user="U1",
                purpose="weekly activity aggregation", data_kind="Steps", mode="Process", expiry=100),
            _ev(2, "R1", Intent.REQUEST_CONSENT, ref="rf_c", user="U1",
                purpose="heart-rate study cohort", data_kind="HeartRate", mode="Collect", expiry=100),
            _ev(3, "U1", Intent.RESPOND, ref="rf_p", decision="Granted"),
            _ev(4, "U1", Intent.RESPOND, ref="rf_c", decision="Granted"),
            _ev(5, "U1", Intent.SET_DEVICE, data_kind="Sleep", enabled=False),
            _ev(6, "FP1", Intent.SELF_REPORT, ref="rf_p", detail="aggregation run over step counts"),
            _ev(8, "FP1", Intent.REPORT_AVAILABLE, ref="rf_c", detail="export bundle staged"),
            _ev(9, "R1", Intent.SELF_REPORT, ref="rf_c", detail="fetched staged export"),
        ],
        adversary=[],
        horizon=20,
    )

    s2 = Scenario(
        name="s2_denied",
        seed=7002,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "FP1", Intent.REQUEST_CONSENT, ref="rf_p", user="U1",
                purpose="sleep trend modelling", data_kind="Sleep", mode="Process", expiry=50),
            _ev(3, "U1", Intent.RESPOND, ref="rf_p", decision="Denied"),
        ],
        adversary=[],
        horizon=10,
    )

    s3 = Scenario(
        name="s3_withdrawal",
        seed=7003,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "FP1", Intent.REQUEST_CONSENT, ref="rf_p", user="U1",
                purpose="step streak scoring", data_kind="Steps", mode="Process", expiry=100),
            _ev(2, "R1", Intent.REQUEST_CONSENT, ref="rf_c", user="U1",
                purpose="location density survey", data_kind="Location", mode="Collect", expiry=100),
            _ev(3, "U1", Intent.RESPOND, ref="rf_p", decision="Granted"),
            _ev(4, "U1", Intent.RESPOND, ref="rf_c", decision="Granted"),
            _ev(5, "FP1", Intent.SELF_REPORT, ref="rf_p", detail="scored current streaks"),
            _ev(7, "U1", Intent.WITHDRAW, ref="rf_p"),
            _ev(9, "U1", Intent.WITHDRAW, ref="rf_c"),
        ],
        adversary=[],
        horizon=20,
    )

    s4 = Scenario(
        name="s4_expiry",
        seed=7004,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "FP1", Intent.REQUEST_CONSENT, ref="rf_p", user="U1",
                purpose="short-lived coaching window", data_kind="Steps", mode="Process", expiry=10),
            _ev(3, "U1", Intent.RESPOND, ref="rf_p", decision="Granted"),
            # Heartbeat write after the window so a block exists whose
            # timestamp has crossed the expiry tick.
            _ev(12, "U1", Intent.SET_DEVICE, data_kind="HeartRate", enabled=True),
        ],
        adversary=[],
        horizon=50,
    )

    s5 = Scenario(
        name="s5_collection",
        seed=7005,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "R1", Intent.REQUEST_CONSENT, ref="rf_c", user="U1",
                purpose="anonymised heart-rate export", data_kind="HeartRate", mode="Collect", expiry=100),
            _ev(3, "U1", Intent.RESPOND, ref="rf_c", decision="Granted"),
            _ev(5, "FP1", Intent.REPORT_AVAILABLE, ref="rf_c", detail="export staged for pickup"),
            _ev(6, "R1", Intent.SELF_REPORT, ref="rf_c", detail="collected staged export"),
        ],
        adversary=[],
        horizon=20,
    )

    s6 = Scenario(
        name="s6_tamper",
        seed=7006,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "FP1", Intent.REQUEST_CONSENT, ref="rf_p", user="U1",
                purpose="daily summary generation", data_kind="Steps", mode="Process", expiry=100),
            _ev(3, "U1", Intent.RESPOND, ref="rf_p", decision="Granted"),
            _ev(5, "FP1", Intent.SELF_REPORT, ref="rf_p", detail="generated daily summary"),
        ],
        adversary=[
            Injection(12, InjectionKind.TAMPER_COMMITTED_TX,
                      {"node": "FP1", "ref": "rf_p", "occurrence": "report", "nth": 0}),
        ],
        horizon=14,
    )

    s7 = Scenario(
        name="s7_fabrication",
        seed=7007,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "FP1", Intent.REQUEST_CONSENT, ref="rf_p", user="U1",
                purpose="grant forgery target", data_kind="Steps", mode="Process", expiry=100),
        ],
        adversary=[
            Injection(4, InjectionKind.FABRICATE_SIGNED_TX,
                      {"claim_sender": "U1", "signer": "FP1", "ref": "rf_p", "decision": "Granted"}),
            Injection(5, InjectionKind.UNBOUND_RECV,
                      {"actor": "FP1", "tag": "RecvConsentResponse", "ref": "rf_p"}),
        ],
        horizon=12,
    )

    s8 = Scenario(
        name="s8_unlawful_access",
        seed=7008,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "FP1", Intent.REQUEST_CONSENT, ref="rf_p", user="U1",
                purpose="denied-processing attempt", data_kind="Steps", mode="Process", expiry=100),
            _ev(3, "U1", Intent.RESPOND, ref="rf_p", decision="Denied"),
        ],
        adversary=[
            Injection(6, InjectionKind.UNLAWFUL_PROCESS_REPORT,
                      {"actor": "FP1", "ref": "rf_p", "detail": "opportunistic read"}),
        ],
        horizon=14,
    )

    s9 = Scenario(
        name="s9_unbound_receive",
        seed=7009,
        agents=_agents(),
        validators=validators,
        script=[
            _ev(1, "FP1", Intent.REQUEST_CONSENT, ref="rf_p", user="U1",
                purpose="phantom display target", data_kind="Steps", mode="Process", expiry=100),
            _ev(3, "U1", Intent.RESPOND, ref="rf_p", decision="Granted"),
            _ev(5, "FP1", Intent.SELF_REPORT, ref="rf_p", detail="regular processing run"),
        ],
        adversary=[
            Injection(9, InjectionKind.UNBOUND_RECV,
                      {"actor": "U1", "tag": "RecvSelfReportDataAccess", "ref": "rf_p"}),
        ],
        horizon=16,
    )

    return {s.name: s for s in (s1, s2, s3, s4, s5, s6, s7, s8, s9)}
