"""Authenticity checking of global traces against agents' local views.

The model: a run is a word of symbols. Chain symbols (committed
transactions) are visible to every agent; device symbols (receive
observations) are visible only to the device's owner. An agent P therefore
knows its local view, the projection of the word onto what P can see, and
nothing else. A probe asks: given that some observation b happened, must one
of the authenticating events in a set Gamma have happened too? The answer is
computed over the knowledge set W_P(view): every word that projects to P's
view and satisfies the structural predicates every participant can rely on
(receives are backed by committed sends, committed entries carry verifying
signatures, contract verdicts are signed by the engine and justified by a
trigger, commit order is immutable). The probe holds when every such word
contains a member of Gamma; a word without one is a counterexample and is
reported as the witness.

Enumerating W_P exactly is exponential in the insertion bound, so two sound
shortcuts keep real probes cheap. First, if some member of Gamma is already
in P's view, every compatible word contains it and the probe holds without
enumeration. Second, candidate insertions are restricted per gap: a bound
receive can only appear after the send it binds to, so gaps before that
send admit fewer symbols. The candidate-count estimate uses the restricted
alphabets; when it still exceeds the ceiling the probe reports the estimate
instead of guessing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

from .actions import (
    ActionTag,
    Decision,
    SEND_FOR_RECV,
    Verdict,
)
from .consent import Phase, device_privacy_view, fold_consent
from .contracts import decision_of, rederive_results
from .identity import Role
from .ledger import (
    Chain,
    Locator,
    ValidationFailure,
    ValidationResult,
    extract_evidence,
    load_and_validate,
    validate_chain,
    verify_evidence_for_holder,
)
from .simnet import NAME_TAGS, TAG_NAMES, TraceEvent, parse_locator

DEFAULT_BOUND = 2
DEFAULT_CEILING = 10**6
ALPHABET_MAX = 64

PROPERTY_NAMES = (
    "dg1",
    "dg2",
    "dg3",
    "dg4",
    "dg5",
    "eq1",
    "eq2",
    "eq3",
    "eq4",
    "eq5",
    "eq6",
    "eq7",
    "eq8",
    "proof-auth",
)

DESIGN_GOALS = ("dg1", "dg2", "dg3", "dg4", "dg5")


class CheckError(ValueError):
    """Unusable input for a check: unreadable, inconsistent, or too large."""


class Origin(Enum):
    CHAIN = "chain"
    DEVICE_BOUND = "device-bound"
    DEVICE_UNBOUND = "device-unbound"


@dataclass(frozen=True)
class Symbol:
    """One letter of the global word.

    index keeps repeated observations distinct; agent is the sender address
    for chain symbols and the device owner for the rest; locator is the
    commit position for chain symbols and the claimed binding for bound
    device symbols; payload_digest is None exactly when nothing committed
    backs the symbol's content.
    """

    index: int
    tag: ActionTag
    rf: bytes | None
    agent: bytes
    payload_digest: bytes | None
    origin: Origin
    locator: Locator | None
    signer_ok: bool = True
    decision: Decision | None = None


def visible_to(symbol: Symbol, agent: bytes) -> bool:
    return symbol.origin == Origin.CHAIN or symbol.agent == agent


def project_view(word: tuple[Symbol, ...] | list[Symbol], agent: bytes) -> tuple[Symbol, ...]:
    return tuple(s for s in word if visible_to(s, agent))


@dataclass
class CheckContext:
    """Chain-derived facts the predicates consult."""

    engine_address: bytes | None = None
    digest_at: dict[Locator, bytes] = field(default_factory=dict)
    expiry_justified: set[int] = field(default_factory=set)  # symbol indexes


def knowledge_predicates(ctx: CheckContext) -> dict[str, callable]:
    """The structural predicates over candidate words.

    A1 receive origin: every bound receive is preceded by a committed send
       with the same tag counterpart, reference, and payload digest. Unbound
       receives are unconstrained here; catching them is the probe's job.
    A2 sender signatures: committed protocol entries verify against their
       registered sender.
    A3 engine signatures: committed contract results verify and were sent by
       the registered engine identity.
    A5 payload binding: every bound receive carries a payload digest, and it
       agrees with the committed bytes it claims to be bound to.
    A6 trigger justification: a consent-validity result needs a preceding
       committed withdrawal for its reference or a crossed expiry; an
       access-validity result needs a preceding committed self report.
    A7 commit order: chain symbols appear in their commit order.
    """

    def a1(word) -> bool:
        for i, s in enumerate(word):
            if s.origin != Origin.DEVICE_BOUND:
                continue
            send_tag = SEND_FOR_RECV.get(s.tag)
            if send_tag is None:
                return False
            if not any(
                c.origin == Origin.CHAIN
                and c.tag == send_tag
                and c.rf == s.rf
                and c.payload_digest is not None
                and c.payload_digest == s.payload_digest
                for c in word[:i]
            ):
                return False
        return True

    def a2(word) -> bool:
        return all(
            s.signer_ok
            for s in word
            if s.origin == Origin.CHAIN and s.tag not in (ActionTag.SC1_RESULT, ActionTag.SC2_RESULT)
        )

    def a3(word) -> bool:
        for s in word:
            if s.origin == Origin.CHAIN and s.tag in (ActionTag.SC1_RESULT, ActionTag.SC2_RESULT):
                if not s.signer_ok:
                    return False
                if ctx.engine_address is not None and s.agent != ctx.engine_address:
                    return False
        return True

    def a5(word) -> bool:
        for s in word:
            if s.origin != Origin.DEVICE_BOUND:
                continue
            if s.payload_digest is None:
                return False
            if s.locator is not None and s.locator in ctx.digest_at:
                if ctx.digest_at[s.locator] != s.payload_digest:
                    return False
        return True

    def a6(word) -> bool:
        for i, s in enumerate(word):
            if s.origin != Origin.CHAIN:
                continue
            if s.tag == ActionTag.SC1_RESULT:
                if s.index in ctx.expiry_justified:
                    continue
                if not any(
                    c.origin == Origin.CHAIN and c.tag == ActionTag.SEND_WITHDRAW_CONSENT and c.rf == s.rf
                    for c in word[:i]
                ):
                    return False
            elif s.tag == ActionTag.SC2_RESULT:
                if not any(
                    c.origin == Origin.CHAIN
                    and c.tag == ActionTag.SEND_SELF_REPORT_DATA_ACCESS
                    and c.rf == s.rf
                    for c in word[:i]
                ):
                    return False
        return True

    def a7(word) -> bool:
        last: Locator | None = None
        for s in word:
            if s.origin != Origin.CHAIN or s.locator is None:
                continue
            if last is not None and s.locator < last:
                return False
            last = s.locator
        return True

    return {"A1": a1, "A2": a2, "A3": a3, "A5": a5, "A6": a6, "A7": a7}


PAIR_PREDICATES = ("A1", "A2", "A5", "A7")
CONTRACT_PREDICATES = ("A1", "A3", "A5", "A6", "A7")


# -- candidate enumeration ----------------------------------------------------


def enumerate_compatible(view: tuple[Symbol, ...], invisible: list[Symbol], k: int):
    """All words that project back to the view, with at most k invisible
    symbols inserted into each of the len(view)+1 gaps. Unpruned; the
    checker's pruned variant is check_auth."""
    gap_words = _gap_words(invisible, k)
    gaps = len(view) + 1
    for choice in itertools.product(range(len(gap_words)), repeat=gaps):
        yield _interleave(view, [gap_words[c] for c in choice])


def _gap_words(symbols: list[Symbol], k: int) -> list[tuple[Symbol, ...]]:
    words: list[tuple[Symbol, ...]] = [()]
    for length in range(1, k + 1):
        words.extend(itertools.product(symbols, repeat=length))
    return words


def _interleave(view: tuple[Symbol, ...], fills: list[tuple[Symbol, ...]]) -> tuple[Symbol, ...]:
    out: list[Symbol] = []
    for i, fill in enumerate(fills):
        out.extend(fill)
        if i < len(view):
            out.append(view[i])
    return tuple(out)


@dataclass
class AuthResult:
    status: str  # "holds" | "violated" | "bound_explosion"
    vacuous: bool = False
    witness: tuple[Symbol, ...] | None = None
    candidates: int = 0
    estimate: int = 0


def check_auth(
    word: list[Symbol] | tuple[Symbol, ...],
    sigma: list[Symbol],
    gamma: list[Symbol],
    b: Symbol | None,
    agent: bytes,
    *,
    predicates: tuple[str, ...],
    ctx: CheckContext,
    k: int = DEFAULT_BOUND,
    ceiling: int = DEFAULT_CEILING,
) -> AuthResult:
    """Did-gamma-happen given that b happened, judged from agent's view.

    Vacuously holds when b is not in the word. Otherwise every word in
    W_agent(view) must contain some member of gamma; the first (in
    deterministic insertion order) that does not is returned as witness.
    """
    if b is not None and b not in word:
        return AuthResult("holds", vacuous=True)
    view = project_view(word, agent)
    gamma_set = set(gamma)
    if any(g in view for g in gamma_set):
        # Every compatible word contains the whole view, hence the member.
        return AuthResult("holds")

    preds = knowledge_predicates(ctx)
    chosen = [preds[name] for name in predicates]
    invisible = sorted((s for s in sigma if not visible_to(s, agent)), key=lambda s: s.index)

    allowed = _allowed_per_gap(view, invisible)
    estimate = 1
    for symbols in allowed:
        m = len(symbols)
        estimate *= sum(m**j for j in range(k + 1))
        if estimate > ceiling:
            return AuthResult("bound_explosion", estimate=estimate)

    gap_word_lists = [_gap_words(symbols, k) for symbols in allowed]
    examined = 0
    for fills in itertools.product(*gap_word_lists):
        candidate = _interleave(view, list(fills))
        examined += 1
        if not all(pred(candidate) for pred in chosen):
            continue
        if not gamma_set & set(candidate):
            # Re-validate before reporting: the witness must project back.
            if project_view(candidate, agent) != view:
                raise CheckError("witness projection drifted; refusing to report it")
            return AuthResult("violated", witness=candidate, candidates=examined)
    return AuthResult("holds", candidates=examined)


def _allowed_per_gap(view: tuple[Symbol, ...], invisible: list[Symbol]) -> list[list[Symbol]]:
    """Per-gap insertable symbols. A bound receive cannot legally precede
    the send it binds to, and that send, being a chain symbol, is either in
    the view or nowhere; so such receives are admitted only into gaps after
    the send's view position, and dropped entirely when the send is absent."""
    gaps = len(view) + 1
    allowed: list[list[Symbol]] = [[] for _ in range(gaps)]
    for s in invisible:
        if s.origin == Origin.DEVICE_BOUND:
            send_tag = SEND_FOR_RECV.get(s.tag)
            first = None
            for i, c in enumerate(view):
                if (
                    c.origin == Origin.CHAIN
                    and c.tag == send_tag
                    and c.rf == s.rf
                    and c.payload_digest is not None
                    and c.payload_digest == s.payload_digest
                ):
                    first = i
                    break
            if first is None:
                continue
            for g in range(first + 1, gaps):
                allowed[g].append(s)
        else:
            for g in range(gaps):
                allowed[g].append(s)
    return allowed


# -- building the word from run artifacts --------------------------------------


@dataclass
class Word:
    symbols: list[Symbol]
    chain: Chain
    ctx: CheckContext
    displays: dict[bytes, str]


def build_word(trace: list[TraceEvent], chain: Chain) -> Word:
    """Symbols from a trace, grounded in a validated chain.

    Committed rows are checked against the chain transaction they locate;
    observed rows take their payload digest from the transaction they claim
    to be bound to (content matching happens in the predicates, so a wrong
    binding surfaces as a violation, not an input error); injected rows get
    no digest and can never content-match anything.
    """
    registry = chain.registry
    engine_address = None
    for address in registry.order:
        if registry.by_address[address].role == Role.CONTRACT_ENGINE:
            engine_address = address
            break

    digest_at: dict[Locator, bytes] = {}
    for _ts, action, loc in chain.iter_committed():
        digest_at[loc] = action.payload_digest()

    symbols: list[Symbol] = []
    for row in trace:
        if row.status == "rejected":
            continue
        tag = NAME_TAGS.get(row.tag)
        if tag is None:
            raise CheckError(f"unknown tag in trace: {row.tag}")
        if tag == ActionTag.REGISTER_AGENT:
            continue
        identity = registry.by_display.get(row.actor)
        if identity is None:
            raise CheckError(f"trace actor {row.actor!r} is not registered on the chain")
        rf = bytes.fromhex(row.rf) if row.rf else None
        loc = parse_locator(row.locator)

        if row.status == "committed":
            if loc is None:
                raise CheckError("committed trace row without a locator")
            try:
                tx = chain.tx_at(loc)
            except IndexError as exc:
                raise CheckError(f"locator {row.locator} outside the chain") from exc
            if tx.action.tag != tag or tx.action.rf != rf or tx.sender_address != identity.address:
                raise CheckError(f"trace row at {row.locator} disagrees with the chain")
            decision = tx.action.payload.decision if tag == ActionTag.SEND_CONSENT_RESPONSE else None
            symbols.append(
                Symbol(
                    index=len(symbols),
                    tag=tag,
                    rf=rf,
                    agent=tx.sender_address,
                    payload_digest=tx.action.payload_digest(),
                    origin=Origin.CHAIN,
                    locator=loc,
                    signer_ok=True,  # the chain validated; signatures verified
                    decision=decision,
                )
            )
        elif row.status == "observed":
            if loc is None or loc not in digest_at:
                raise CheckError(f"observed trace row with unusable binding {row.locator}")
            bound = chain.tx_at(loc)
            decision = bound.action.payload.decision if tag == ActionTag.RECV_CONSENT_RESPONSE else None
            symbols.append(
                Symbol(
                    index=len(symbols),
                    tag=tag,
                    rf=rf,
                    agent=identity.address,
                    payload_digest=bound.action.payload_digest(),
                    origin=Origin.DEVICE_BOUND,
                    locator=loc,
                    decision=decision,
                )
            )
        elif row.status == "injected":
            symbols.append(
                Symbol(
                    index=len(symbols),
                    tag=tag,
                    rf=rf,
                    agent=identity.address,
                    payload_digest=None,
                    origin=Origin.DEVICE_UNBOUND,
                    locator=None,
                )
            )
        else:
            raise CheckError(f"unknown trace status {row.status!r}")

    if len(symbols) > ALPHABET_MAX:
        raise CheckError(f"trace alphabet exceeds {ALPHABET_MAX} symbols")

    ctx = CheckContext(engine_address=engine_address, digest_at=digest_at)
    _mark_expiry_justified(symbols, chain, ctx)
    displays = {addr: registry.by_address[addr].display_id for addr in registry.order}
    return Word(symbols, chain, ctx, displays)


def _mark_expiry_justified(symbols: list[Symbol], chain: Chain, ctx: CheckContext) -> None:
    """Flag consent-validity results that an expiry crossing justifies:
    the reference was granted and some block at or before the result's
    commit has a timestamp at or past the consent's expiry tick."""
    for s in symbols:
        if s.origin != Origin.CHAIN or s.tag != ActionTag.SC1_RESULT or s.locator is None:
            continue
        events = [
            (ts, action)
            for ts, action, loc in chain.iter_committed()
            if action.rf == s.rf and loc < s.locator
        ]
        record, _ = fold_consent(events)
        if record is None or decision_of(record) != Decision.GRANTED:
            continue
        crossed = any(
            block.timestamp >= record.expiry
            for block in chain.blocks[: s.locator[0] + 1]
        )
        if crossed:
            ctx.expiry_justified.add(s.index)


# -- property checking ---------------------------------------------------------


@dataclass
class PropertyOutcome:
    name: str
    status: str  # "holds" | "violated" | "bound_explosion"
    vacuous: bool
    witness: dict | None = None
    candidates: int = 0
    estimate: int = 0
    detail: str = ""


class _Checker:
    def __init__(self, word: Word, k: int, ceiling: int, replicas: dict[str, bytes] | None) -> None:
        self.word = word.symbols
        self.chain = word.chain
        self.ctx = word.ctx
        self.displays = word.displays
        self.k = k
        self.ceiling = ceiling
        self.replicas = replicas or {}
        self.records = {}
        self.subjects: dict[bytes, bytes] = {}
        refs = []
        for _ts, action, _loc in self.chain.iter_committed():
            if action.rf is not None and action.rf not in refs:
                refs.append(action.rf)
        for rf in refs:
            events = [(ts, a) for ts, a, _ in self.chain.iter_committed() if a.rf == rf]
            record, _ = fold_consent(events)
            self.records[rf] = record
        for s in self.word:
            if s.origin == Origin.CHAIN and s.tag == ActionTag.SEND_CONSENT_RESPONSE:
                self.subjects.setdefault(s.rf, s.agent)
        self.rederived = {}
        for result in rederive_results(self.chain):
            key = result.inputs_digest
            self.rederived[key] = result

    # -- witness serialization ------------------------------------------------

    def _sym(self, s: Symbol) -> dict:
        return {
            "tag": TAG_NAMES[s.tag],
            "rf": s.rf.hex() if s.rf else None,
            "agent": self.displays.get(s.agent, s.agent.hex()[:16]),
            "origin": s.origin.value,
            "locator": None if s.locator is None else f"{s.locator[0]}:{s.locator[1]}",
        }

    def _auth_witness(self, probe: Symbol, result: AuthResult) -> dict:
        return {
            "probe": self._sym(probe),
            "counterexample": [self._sym(s) for s in result.witness or ()],
        }

    # -- probe plumbing ---------------------------------------------------------

    def _pair_probe(self, b: Symbol) -> AuthResult:
        send_tag = SEND_FOR_RECV[b.tag]
        gamma = [
            s
            for s in self.word
            if s.origin == Origin.CHAIN
            and s.tag == send_tag
            and s.rf == b.rf
            and b.payload_digest is not None
            and s.payload_digest == b.payload_digest
        ]
        sigma = [s for s in self.word if s.rf == b.rf]
        return check_auth(
            self.word,
            sigma,
            gamma,
            b,
            b.agent,
            predicates=PAIR_PREDICATES,
            ctx=self.ctx,
            k=self.k,
            ceiling=self.ceiling,
        )

    def _aggregate(self, name: str, probes: list[tuple[Symbol, AuthResult]], detail: str = "") -> PropertyOutcome:
        if not probes:
            return PropertyOutcome(name, "holds", vacuous=True, detail="nothing to check")
        candidates = sum(r.candidates for _, r in probes)
        for probe, result in probes:
            if result.status == "violated":
                return PropertyOutcome(
                    name,
                    "violated",
                    vacuous=False,
                    witness=self._auth_witness(probe, result),
                    candidates=candidates,
                    detail=detail,
                )
        for probe, result in probes:
            if result.status == "bound_explosion":
                return PropertyOutcome(
                    name,
                    "bound_explosion",
                    vacuous=False,
                    witness={"probe": self._sym(probe)},
                    candidates=candidates,
                    estimate=result.estimate,
                    detail="candidate estimate exceeds the ceiling",
                )
        return PropertyOutcome(name, "holds", vacuous=False, candidates=candidates, detail=detail)

    def _violated(self, name: str, witness: dict, detail: str) -> PropertyOutcome:
        return PropertyOutcome(name, "violated", vacuous=False, witness=witness, detail=detail)

    # -- devices vs chain (dg1) -------------------------------------------------

    def dg1(self) -> PropertyOutcome:
        device = [s for s in self.word if s.origin != Origin.CHAIN]
        if not device:
            return PropertyOutcome("dg1", "holds", vacuous=True, detail="no device observations")
        for i, s in enumerate(self.word):
            if s.origin == Origin.CHAIN:
                continue
            send_tag = SEND_FOR_RECV.get(s.tag)
            backed = any(
                c.origin == Origin.CHAIN
                and c.tag == send_tag
                and c.rf == s.rf
                and s.payload_digest is not None
                and c.payload_digest == s.payload_digest
                for c in self.word[:i]
            )
            if not backed:
                return self._violated(
                    "dg1",
                    {"probe": self._sym(s)},
                    "device observation with no committed counterpart at or before it",
                )
        return PropertyOutcome("dg1", "holds", vacuous=False)

    # -- pair families (eq1..eq4, dg2) -------------------------------------------

    def _pair_family(self, name: str, recv_tag: ActionTag) -> PropertyOutcome:
        probes = [
            (s, self._pair_probe(s))
            for s in self.word
            if s.origin != Origin.CHAIN and s.tag == recv_tag
        ]
        return self._aggregate(name, probes)

    def eq1(self) -> PropertyOutcome:
        return self._pair_family("eq1", ActionTag.RECV_CONSENT_REQUEST)

    def eq2(self) -> PropertyOutcome:
        return self._pair_family("eq2", ActionTag.RECV_SELF_REPORT_DATA_ACCESS)

    def eq3(self) -> PropertyOutcome:
        return self._pair_family("eq3", ActionTag.RECV_CONSENT_RESPONSE)

    def eq4(self) -> PropertyOutcome:
        return self._pair_family("eq4", ActionTag.RECV_WITHDRAW_CONSENT)

    def dg2(self) -> PropertyOutcome:
        parts = [self.eq1(), self.eq2(), self.eq3(), self.eq4()]
        return _combine("dg2", parts)

    # -- consent lifecycle vs contract results (eq5 = dg3) ------------------------

    def _sc1_symbols(self, rf: bytes) -> list[Symbol]:
        return [
            s
            for s in self.word
            if s.origin == Origin.CHAIN and s.tag == ActionTag.SC1_RESULT and s.rf == rf
        ]

    def _result_ok(self, s: Symbol) -> bool:
        """A committed contract result must re-derive: same inputs digest,
        same verdict, sent by the engine."""
        tx = self.chain.tx_at(s.locator)
        content = tx.action.payload
        expected = self.rederived.get(content.inputs_digest)
        if expected is None:
            return False
        if expected.verdict != content.verdict:
            return False
        if self.ctx.engine_address is not None and s.agent != self.ctx.engine_address:
            return False
        return True

    def eq5(self) -> PropertyOutcome:
        granted = [
            rf
            for rf, record in self.records.items()
            if record is not None and decision_of(record) == Decision.GRANTED
        ]
        if not granted:
            return PropertyOutcome("eq5", "holds", vacuous=True, detail="no granted consent on the chain")
        probes: list[tuple[Symbol, AuthResult]] = []
        for rf in granted:
            record = self.records[rf]
            withdraw = [
                s
                for s in self.word
                if s.origin == Origin.CHAIN and s.tag == ActionTag.SEND_WITHDRAW_CONSENT and s.rf == rf
            ]
            sc1 = self._sc1_symbols(rf)
            crossed = any(block.timestamp >= record.expiry for block in self.chain.blocks)
            if record.phase == Phase.WITHDRAWN:
                if not sc1:
                    return self._violated(
                        "eq5",
                        {"rf": rf.hex()},
                        "withdrawn consent with no consent-validity result committed",
                    )
                for s in sc1:
                    if not self._result_ok(s):
                        return self._violated("eq5", {"result": self._sym(s)}, "result does not re-derive")
                    if withdraw and s.locator < min(w.locator for w in withdraw):
                        return self._violated("eq5", {"result": self._sym(s)}, "result precedes its trigger")
                recvs = [
                    s
                    for s in self.word
                    if s.origin != Origin.CHAIN and s.tag == ActionTag.RECV_WITHDRAW_CONSENT and s.rf == rf
                ]
                if not recvs:
                    return self._violated(
                        "eq5",
                        {"rf": rf.hex()},
                        "withdrawal never reached the counterparty device",
                    )
                probes.extend((s, self._pair_probe(s)) for s in recvs)
            elif crossed:
                if not sc1:
                    return self._violated(
                        "eq5",
                        {"rf": rf.hex()},
                        "expiry crossed with no consent-validity result committed",
                    )
                for s in sc1:
                    if not self._result_ok(s):
                        return self._violated("eq5", {"result": self._sym(s)}, "result does not re-derive")
            else:
                if sc1:
                    return self._violated(
                        "eq5",
                        {"result": self._sym(sc1[0])},
                        "consent-validity result without withdrawal or expiry",
                    )
        outcome = self._aggregate("eq5", probes)
        if outcome.vacuous:
            # The lifecycle facts above were checked; absence of withdrawal
            # receives does not make the property vacuous.
            return PropertyOutcome("eq5", outcome.status, vacuous=False, candidates=outcome.candidates)
        return outcome

    def dg3(self) -> PropertyOutcome:
        outcome = self.eq5()
        return PropertyOutcome("dg3", outcome.status, outcome.vacuous, outcome.witness, outcome.candidates, outcome.estimate, outcome.detail)

    # -- lawful processing (eq7, dg4) ---------------------------------------------

    def _reports(self, mode_name: str) -> list[Symbol]:
        out = []
        for s in self.word:
            if s.origin != Origin.CHAIN or s.tag != ActionTag.SEND_SELF_REPORT_DATA_ACCESS:
                continue
            record = self.records.get(s.rf)
            if record is not None:
                mode = record.content.mode.name
            else:
                # No committed request: classify by the reporter's role so
                # the report still lands in one family and gets judged.
                role = self.chain.registry.by_address[s.agent].role
                mode = "PROCESS" if role == Role.FITNESS_PROVIDER else "COLLECT"
            if mode == mode_name:
                out.append(s)
        return out

    def _granted_response(self, rf: bytes, before: Locator) -> Symbol | None:
        for s in self.word:
            if (
                s.origin == Origin.CHAIN
                and s.tag == ActionTag.SEND_CONSENT_RESPONSE
                and s.rf == rf
                and s.decision == Decision.GRANTED
                and s.locator < before
            ):
                return s
        return None

    def _consent_valid_at(self, rf: bytes, loc: Locator) -> bool:
        events = [
            (ts, action)
            for ts, action, l in self.chain.iter_committed()
            if action.rf == rf and l < loc
        ]
        record, _ = fold_consent(events)
        if record is None or record.phase != Phase.GRANTED:
            return False
        ts = self.chain.blocks[loc[0]].timestamp
        return ts < record.expiry

    def _device_enabled_at(self, rf: bytes, loc: Locator) -> bool:
        record = self.records.get(rf)
        subject = self.subjects.get(rf)
        if record is None or subject is None:
            return True
        return device_privacy_view(self.chain, subject, upto=loc)[record.content.data_kind]

    def _sc2_for(self, report: Symbol) -> Symbol | None:
        for s in self.word:
            if s.origin != Origin.CHAIN or s.tag != ActionTag.SC2_RESULT or s.rf != report.rf:
                continue
            if s.locator < report.locator:
                continue
            content = self.chain.tx_at(s.locator).action.payload
            expected = self.rederived.get(content.inputs_digest)
            if expected is not None and expected.trigger.locator == report.locator:
                return s
        return None

    def _judge_report(self, name: str, report: Symbol, require_device: bool) -> tuple[PropertyOutcome | None, list]:
        """None outcome means the report passed; otherwise the violation."""
        probes = []
        recvs = [
            s
            for s in self.word
            if s.origin != Origin.CHAIN
            and s.tag == ActionTag.RECV_SELF_REPORT_DATA_ACCESS
            and s.locator == report.locator
        ]
        if not recvs:
            return self._violated(name, {"report": self._sym(report)}, "access report never reached the subject's device"), probes
        for s in recvs:
            probes.append((s, self._pair_probe(s)))
        response = self._granted_response(report.rf, report.locator)
        if response is None:
            return self._violated(name, {"report": self._sym(report)}, "no granted consent response precedes the access"), probes
        resp_recvs = [
            s
            for s in self.word
            if s.origin != Origin.CHAIN and s.tag == ActionTag.RECV_CONSENT_RESPONSE and s.rf == report.rf
        ]
        if not resp_recvs:
            return self._violated(name, {"report": self._sym(report)}, "consent response never reached the accessor's device"), probes
        for s in resp_recvs:
            probes.append((s, self._pair_probe(s)))
        if not self._consent_valid_at(report.rf, report.locator):
            return self._violated(name, {"report": self._sym(report)}, "consent no longer valid at the access"), probes
        if require_device and not self._device_enabled_at(report.rf, report.locator):
            return self._violated(name, {"report": self._sym(report)}, "subject's device setting forbids the data kind"), probes
        verdict_symbol = self._sc2_for(report)
        if verdict_symbol is None:
            return self._violated(name, {"report": self._sym(report)}, "no access-validity result for the report"), probes
        content = self.chain.tx_at(verdict_symbol.locator).action.payload
        if content.verdict != Verdict.ACCESS_VALID or not self._result_ok(verdict_symbol):
            return self._violated(name, {"result": self._sym(verdict_symbol)}, "access judged invalid on the chain"), probes
        return None, probes

    def _report_family(self, name: str, mode_name: str, require_device: bool) -> PropertyOutcome:
        reports = self._reports(mode_name)
        if not reports:
            return PropertyOutcome(name, "holds", vacuous=True, detail="no access reports in this family")
        probes_all: list[tuple[Symbol, AuthResult]] = []
        for report in reports:
            violation, probes = self._judge_report(name, report, require_device)
            probes_all.extend(probes)
            if violation is not None:
                return violation
        outcome = self._aggregate(name, probes_all)
        return PropertyOutcome(name, outcome.status, vacuous=False, witness=outcome.witness, candidates=outcome.candidates, estimate=outcome.estimate, detail=outcome.detail)

    def eq7(self) -> PropertyOutcome:
        return self._report_family("eq7", "PROCESS", require_device=False)

    def dg4(self) -> PropertyOutcome:
        outcome = self._report_family("dg4", "PROCESS", require_device=True)
        return outcome

    # -- lawful collection (eq6, eq8, dg5) ------------------------------------------

    def _availability(self) -> list[Symbol]:
        return [
            s
            for s in self.word
            if s.origin == Origin.CHAIN and s.tag == ActionTag.SEND_REPORT_DATA_AVAILABLE
        ]

    def eq6(self) -> PropertyOutcome:
        notices = self._availability()
        if not notices:
            return PropertyOutcome("eq6", "holds", vacuous=True, detail="no availability notices")
        probes: list[tuple[Symbol, AuthResult]] = []
        for notice in notices:
            recvs = [
                s
                for s in self.word
                if s.origin != Origin.CHAIN
                and s.tag == ActionTag.RECV_REPORT_DATA_AVAILABLE
                and s.locator == notice.locator
            ]
            if not recvs:
                return self._violated("eq6", {"notice": self._sym(notice)}, "availability notice never reached the subject's device")
            probes.extend((s, self._pair_probe(s)) for s in recvs)
            if self._granted_response(notice.rf, notice.locator) is None:
                return self._violated("eq6", {"notice": self._sym(notice)}, "no granted consent response precedes the notice")
            if not self._consent_valid_at(notice.rf, notice.locator):
                return self._violated("eq6", {"notice": self._sym(notice)}, "consent no longer valid at the notice")
        outcome = self._aggregate("eq6", probes)
        return PropertyOutcome("eq6", outcome.status, vacuous=False, witness=outcome.witness, candidates=outcome.candidates, estimate=outcome.estimate, detail=outcome.detail)

    def eq8(self) -> PropertyOutcome:
        return self._report_family("eq8", "COLLECT", require_device=False)

    def dg5(self) -> PropertyOutcome:
        eq6 = self.eq6()
        eq8 = self._report_family("dg5", "COLLECT", require_device=True)
        if eq6.vacuous and eq8.vacuous:
            return PropertyOutcome("dg5", "holds", vacuous=True, detail="no collection activity")
        parts = [p for p in (eq6, eq8) if not p.vacuous]
        combined = _combine("dg5", parts)
        return combined

    # -- proof of authenticity -------------------------------------------------------

    def proof_auth(self) -> PropertyOutcome:
        bound = [s for s in self.word if s.origin == Origin.DEVICE_BOUND]
        refs = sorted(self.records, key=lambda rf: rf.hex())
        if not bound and not refs:
            return PropertyOutcome("proof-auth", "holds", vacuous=True, detail="nothing received, nothing to prove")
        probes = [(s, self._pair_probe(s)) for s in bound]
        for probe, result in probes:
            if result.status != "holds":
                return self._aggregate("proof-auth", probes)
        holders = self.replicas or {"self": self.chain.serialize()}
        for rf in refs:
            bundle = extract_evidence(self.chain, rf)
            for holder in sorted(holders):
                check = verify_evidence_for_holder(bundle, holders[holder])
                if not check.ok:
                    return self._violated(
                        "proof-auth",
                        {"rf": rf.hex(), "holder": holder, "failed_block": check.failed_block},
                        f"evidence rejected: {check.reason}",
                    )
        outcome = self._aggregate("proof-auth", probes)
        return PropertyOutcome("proof-auth", outcome.status, vacuous=False, candidates=outcome.candidates, detail="receives authentic and evidence bundles verified")


def _combine(name: str, parts: list[PropertyOutcome]) -> PropertyOutcome:
    candidates = sum(p.candidates for p in parts)
    for p in parts:
        if p.status == "violated":
            return PropertyOutcome(name, "violated", vacuous=False, witness=p.witness, candidates=candidates, detail=p.detail)
    for p in parts:
        if p.status == "bound_explosion":
            return PropertyOutcome(name, "bound_explosion", vacuous=False, witness=p.witness, candidates=candidates, estimate=p.estimate, detail=p.detail)
    vacuous = all(p.vacuous for p in parts)
    return PropertyOutcome(name, "holds", vacuous=vacuous, candidates=candidates)


def _all_violated(properties: tuple[str, ...], result: ValidationResult) -> dict[str, PropertyOutcome]:
    witness = {
        "chain_invalid": {
            "first_bad_index": result.first_bad_index,
            "reason": result.reason.value if result.reason else None,
            "detail": result.detail,
        }
    }
    return {
        name: PropertyOutcome(name, "violated", vacuous=False, witness=witness, detail="committed view does not validate")
        for name in properties
    }


def check_design_goals(
    trace: list[TraceEvent],
    chain: Chain | bytes,
    *,
    properties: tuple[str, ...] = DESIGN_GOALS,
    k: int = DEFAULT_BOUND,
    ceiling: int = DEFAULT_CEILING,
    replicas: dict[str, bytes] | None = None,
) -> dict[str, PropertyOutcome]:
    """Evaluate the requested properties over one run's artifacts.

    The chain is the committed view the devices are compared against; if it
    does not validate there is no trustworthy view at all, and every
    requested property is reported violated with the failing block as
    witness rather than silently judged against corrupt data. Chain bytes
    that do not even decode are an input error, not a verdict.
    """
    for name in properties:
        if name not in PROPERTY_NAMES:
            raise CheckError(f"unknown property {name!r}")
    if isinstance(chain, (bytes, bytearray)):
        loaded, result = load_and_validate(bytes(chain))
        if loaded is None:
            if result.reason == ValidationFailure.PARSE_ERROR:
                raise CheckError(f"chain bytes do not decode: {result.detail}")
            return _all_violated(properties, result)
        chain = loaded
    else:
        result = validate_chain(chain)
        if not result.ok:
            return _all_violated(properties, result)
    word = build_word(trace, chain)
    checker = _Checker(word, k, ceiling, replicas)
    evaluators = {
        "dg1": checker.dg1,
        "dg2": checker.dg2,
        "dg3": checker.dg3,
        "dg4": checker.dg4,
        "dg5": checker.dg5,
        "eq1": checker.eq1,
        "eq2": checker.eq2,
        "eq3": checker.eq3,
        "eq4": checker.eq4,
        "eq5": checker.eq5,
        "eq6": checker.eq6,
        "eq7": checker.eq7,
        "eq8": checker.eq8,
        "proof-auth": checker.proof_auth,
    }
    return {name: evaluators[name]() for name in properties}


def properties_payload(outcomes: dict[str, PropertyOutcome], *, k: int, ceiling: int) -> dict:
    return {
        "bound": k,
        "ceiling": ceiling,
        "properties": {
            name: {
                "status": o.status,
                "vacuous": o.vacuous,
                "witness": o.witness,
                "candidates": o.candidates,
                "estimate": o.estimate,
                "detail": o.detail,
            }
            for name, o in outcomes.items()
        },
    }
