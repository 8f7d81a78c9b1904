"""Append-only permissioned ledger.

Blocks chain by digest over the block header (index, prev_digest, timestamp,
transactions, producer_address); the producer signs that header digest, so the
signature itself sits outside the digested region. Consequences, relied on by
validation's failure attribution:

  * a payload byte flip in block k changes digest(header k) and is reported at
    k as a digest mismatch against block k+1's recorded prev_digest (or, for
    the final block, as a producer signature failure);
  * a flip inside the producer signature leaves the header digest intact and
    is reported at k as a bad producer signature.

Registration rides in ordinary signed transactions: the genesis block's
transaction list is exactly the registry export, bootstrapped by the
regulatory authority's self-signed first entry. Block production is
round-robin over the RA-designated validators, one block per tick, and nonces
strictly increase per sender so a committed transaction can never be replayed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator

from .actions import (
    Action,
    ActionError,
    ActionTag,
    ConsentContent,
    RegisterContent,
    SEND_FOR_RECV,
    _SENDER_ROLES,
    validate_action_shape,
)
from .codec import CodecError, Reader, Writer, ZERO_DIGEST, digest
from .identity import AgentIdentity, Keypair, Role, verify

CHAIN_MAGIC = b"CCHN"
CHAIN_VERSION = 0x01


class LedgerError(Exception):
    pass


class UnauthorizedRegistrar(LedgerError):
    pass


class DuplicateAddress(LedgerError):
    pass


class NotScheduledProducer(LedgerError):
    pass


class InvalidChainError(LedgerError):
    pass


class CorruptChainFile(LedgerError):
    pass


class ValidationFailure(Enum):
    PARSE_ERROR = "ParseError"
    BAD_STRUCTURE = "BadStructure"
    NON_MONOTONIC_TIMESTAMP = "NonMonotonicTimestamp"
    DIGEST_MISMATCH = "DigestMismatch"
    NOT_SCHEDULED_PRODUCER = "NotScheduledProducer"
    BAD_PRODUCER_SIGNATURE = "BadProducerSignature"
    UNKNOWN_SENDER = "UnknownSender"
    BAD_SIGNATURE = "BadSignature"
    STALE_NONCE = "StaleNonce"
    MALFORMED_ACTION = "MalformedAction"


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    first_bad_index: int | None = None
    reason: ValidationFailure | None = None
    detail: str = ""

    @staticmethod
    def valid() -> "ValidationResult":
        return ValidationResult(True)

    @staticmethod
    def invalid(index: int, reason: ValidationFailure, detail: str = "") -> "ValidationResult":
        return ValidationResult(False, index, reason, detail)


@dataclass(frozen=True)
class SignedTransaction:
    action: Action
    sender_address: bytes
    nonce: int
    signature: bytes

    def signing_bytes(self) -> bytes:
        w = Writer()
        w.bytes(self.action.encode())
        w.bytes(self.sender_address)
        w.u64(self.nonce)
        return w.getvalue()

    def encode(self) -> bytes:
        w = Writer()
        w.bytes(self.action.encode())
        w.bytes(self.sender_address)
        w.u64(self.nonce)
        w.bytes(self.signature)
        return w.getvalue()

    @staticmethod
    def decode(r: Reader) -> "SignedTransaction":
        action_reader = Reader(r.bytes())
        action = Action.decode(action_reader)
        action_reader.expect_end()
        sender = r.bytes()
        nonce = r.u64()
        signature = r.bytes()
        return SignedTransaction(action, sender, nonce, signature)


def sign_transaction(keypair: Keypair, action: Action, nonce: int) -> SignedTransaction:
    unsigned = SignedTransaction(action, keypair.identity.address, nonce, b"")
    return SignedTransaction(action, keypair.identity.address, nonce, keypair.sign(unsigned.signing_bytes()))


@dataclass(frozen=True)
class Block:
    index: int
    prev_digest: bytes
    timestamp: int
    transactions: tuple[SignedTransaction, ...]
    producer_address: bytes
    producer_signature: bytes

    def header_bytes(self) -> bytes:
        w = Writer()
        w.u64(self.index)
        w.bytes(self.prev_digest)
        w.u64(self.timestamp)
        w.u32(len(self.transactions))
        for tx in self.transactions:
            w.bytes(tx.encode())
        w.bytes(self.producer_address)
        return w.getvalue()

    def block_digest(self) -> bytes:
        return digest(self.header_bytes())

    def encode(self) -> bytes:
        w = Writer()
        w.raw(self.header_bytes())
        w.bytes(self.producer_signature)
        return w.getvalue()

    @staticmethod
    def decode(r: Reader) -> "Block":
        index = r.u64()
        prev_digest = r.bytes()
        timestamp = r.u64()
        count = r.u32()
        txs = []
        for _ in range(count):
            tx_reader = Reader(r.bytes())
            txs.append(SignedTransaction.decode(tx_reader))
            tx_reader.expect_end()
        producer_address = r.bytes()
        producer_signature = r.bytes()
        return Block(index, prev_digest, timestamp, tuple(txs), producer_address, producer_signature)


def make_block(
    index: int,
    prev_digest: bytes,
    timestamp: int,
    transactions: list[SignedTransaction],
    producer: Keypair,
) -> Block:
    unsigned = Block(index, prev_digest, timestamp, tuple(transactions), producer.identity.address, b"")
    return Block(
        index,
        prev_digest,
        timestamp,
        tuple(transactions),
        producer.identity.address,
        producer.sign(unsigned.block_digest()),
    )


class Registry:
    """Address -> identity map, writable only through RA-signed registrations."""

    def __init__(self) -> None:
        self.by_address: dict[bytes, AgentIdentity] = {}
        self.by_display: dict[str, AgentIdentity] = {}
        self.order: list[bytes] = []
        self.validators: list[bytes] = []
        self.ra: AgentIdentity | None = None

    def register(self, candidate: AgentIdentity, ra_signature: bytes, validator: bool) -> None:
        if candidate.address != digest(candidate.public_key):
            raise UnauthorizedRegistrar("candidate address does not match its public key")
        if candidate.address in self.by_address:
            raise DuplicateAddress(candidate.display_id)
        if candidate.display_id in self.by_display:
            raise DuplicateAddress(candidate.display_id)
        if self.ra is None:
            # Bootstrap: the first registration must be the authority itself,
            # self-signed; everything afterwards requires its signature.
            if candidate.role != Role.REGULATORY_AUTHORITY:
                raise UnauthorizedRegistrar("first registration must be the regulatory authority")
            if not verify(candidate.public_key, ra_signature, candidate.encode()):
                raise UnauthorizedRegistrar("authority self-signature does not verify")
        else:
            if not verify(self.ra.public_key, ra_signature, candidate.encode()):
                raise UnauthorizedRegistrar(f"registration of {candidate.display_id} lacks a valid authority signature")
        self.by_address[candidate.address] = candidate
        self.by_display[candidate.display_id] = candidate
        self.order.append(candidate.address)
        if validator:
            self.validators.append(candidate.address)
        if candidate.role == Role.REGULATORY_AUTHORITY and self.ra is None:
            self.ra = candidate


def register_agent(ra_identity: AgentIdentity | None, candidate: AgentIdentity, ra_signature: bytes, *, registry: Registry, validator: bool = False) -> Registry:
    """Apply one registration to a registry and return it.

    ra_identity is the claimed registrar; it must match the registry's
    authority (or be the bootstrapping authority itself).
    """
    if registry.ra is not None:
        if ra_identity is None or ra_identity.address != registry.ra.address:
            raise UnauthorizedRegistrar("registrar is not the regulatory authority")
    registry.register(candidate, ra_signature, validator)
    return registry


def scheduled_producer(index: int, ra_address: bytes, validators: list[bytes]) -> bytes:
    """Round-robin schedule: genesis by the authority, then validators in
    registration order keyed by block index."""
    if index == 0:
        return ra_address
    if not validators:
        raise NotScheduledProducer("no validators designated")
    return validators[(index - 1) % len(validators)]


Locator = tuple[int, int]  # (block index, transaction index)


class Chain:
    """Validated sequence of blocks plus state derived from them."""

    def __init__(self, blocks: list[Block] | None = None) -> None:
        self.blocks: list[Block] = []
        self.registry = Registry()
        self._nonces: dict[bytes, int] = {}
        self._request_refs: set[bytes] = set()
        for block in blocks or []:
            self.append(block)

    # -- derived state ----------------------------------------------------

    def append(self, block: Block) -> None:
        self.blocks.append(block)
        for tx in block.transactions:
            self._nonces[tx.sender_address] = max(self._nonces.get(tx.sender_address, 0), tx.nonce)
            if tx.action.tag == ActionTag.REGISTER_AGENT:
                content: RegisterContent = tx.action.payload
                # Chains are appended after validation; re-registering here
                # keeps the derived registry in step.
                self.registry.register(content.candidate, content.ra_signature, content.validator)
            elif tx.action.tag == ActionTag.SEND_CONSENT_REQUEST:
                self._request_refs.add(tx.action.rf)

    def height(self) -> int:
        return len(self.blocks)

    def head_digest(self) -> bytes:
        if not self.blocks:
            return ZERO_DIGEST
        return self.blocks[-1].block_digest()

    def last_timestamp(self) -> int:
        return self.blocks[-1].timestamp if self.blocks else 0

    def last_nonce(self, sender: bytes) -> int:
        return self._nonces.get(sender, 0)

    def has_request(self, rf: bytes) -> bool:
        return rf in self._request_refs

    def tx_at(self, locator: Locator) -> SignedTransaction:
        b, t = locator
        return self.blocks[b].transactions[t]

    def sender_of(self, locator: Locator) -> bytes:
        return self.tx_at(locator).sender_address

    def iter_committed(self) -> Iterator[tuple[int, Action, Locator]]:
        for b, block in enumerate(self.blocks):
            for t, tx in enumerate(block.transactions):
                yield block.timestamp, tx.action, (b, t)

    # -- serialization -----------------------------------------------------

    def serialize(self) -> bytes:
        w = Writer()
        w.raw(CHAIN_MAGIC)
        w.u8(CHAIN_VERSION)
        w.u32(len(self.blocks))
        for block in self.blocks:
            w.raw(block.encode())
        return w.getvalue()

    @staticmethod
    def deserialize(data: bytes) -> "Chain":
        blocks, result = parse_blocks(data)
        if blocks is None:
            raise CorruptChainFile(result.detail)
        return Chain(blocks)


def parse_blocks(data: bytes) -> tuple[list[Block] | None, ValidationResult]:
    """Decode chain bytes without judging chain validity.

    A decode failure at block j is attributed to block j only after the
    cleanly parsed prefix re-validates: a corrupted length prefix in an
    earlier block shifts every later read, and that shift always breaks the
    earlier block's own producer signature or digest link, which pins the
    failure at or before the damaged block.
    """
    r = Reader(data)
    try:
        magic = r.raw(4)
        if magic != CHAIN_MAGIC:
            return None, ValidationResult.invalid(0, ValidationFailure.PARSE_ERROR, "bad magic")
        version = r.u8()
        if version != CHAIN_VERSION:
            return None, ValidationResult.invalid(0, ValidationFailure.PARSE_ERROR, f"unsupported version {version}")
        count = r.u32()
    except CodecError as exc:
        return None, ValidationResult.invalid(0, ValidationFailure.PARSE_ERROR, str(exc))
    blocks: list[Block] = []
    for k in range(count):
        try:
            blocks.append(Block.decode(r))
        except (CodecError, ValueError) as exc:
            return None, _parse_failure(blocks, k, str(exc))
    if r.remaining():
        return None, _parse_failure(blocks, max(count - 1, 0), "trailing bytes")
    return blocks, ValidationResult.valid()


def _parse_failure(prefix: list[Block], k: int, detail: str) -> ValidationResult:
    if prefix:
        prior = validate_blocks(prefix)
        if not prior.ok:
            return prior
    return ValidationResult.invalid(k, ValidationFailure.PARSE_ERROR, detail)


def validate_chain(chain: Chain) -> ValidationResult:
    return validate_blocks(chain.blocks)


def validate_blocks(blocks: list[Block]) -> ValidationResult:
    """Full re-verification: structure, digest links, producer schedule and
    signatures, transaction signatures, nonces, and action-level rules."""
    if not blocks:
        return ValidationResult.invalid(0, ValidationFailure.BAD_STRUCTURE, "empty chain")
    registry = Registry()
    nonces: dict[bytes, int] = {}
    request_refs: set[bytes] = set()
    invalid = ValidationResult.invalid

    for k, block in enumerate(blocks):
        if block.index != k:
            return invalid(k, ValidationFailure.BAD_STRUCTURE, f"index {block.index} at position {k}")
        if k == 0:
            if block.prev_digest != ZERO_DIGEST:
                return invalid(0, ValidationFailure.BAD_STRUCTURE, "genesis prev_digest not zero")
            if not block.transactions:
                return invalid(0, ValidationFailure.BAD_STRUCTURE, "genesis carries no registrations")
            if any(tx.action.tag != ActionTag.REGISTER_AGENT for tx in block.transactions):
                return invalid(0, ValidationFailure.BAD_STRUCTURE, "genesis must contain only registrations")
        else:
            if block.timestamp < blocks[k - 1].timestamp:
                return invalid(k, ValidationFailure.NON_MONOTONIC_TIMESTAMP, f"{block.timestamp} < {blocks[k - 1].timestamp}")

        # Link attribution: block k's bytes are pinned by block k+1, so a
        # mismatch names k, not k+1.
        if k + 1 < len(blocks) and block.block_digest() != blocks[k + 1].prev_digest:
            return invalid(k, ValidationFailure.DIGEST_MISMATCH, "next block's prev_digest disagrees")

        if k == 0:
            # Transactions first: the genesis registrations bootstrap the
            # registry that the producer checks below depend on.
            result = _validate_transactions(block, k, registry, nonces, request_refs)
            if result is not None:
                return result
            result = _validate_producer(block, k, registry)
            if result is not None:
                return result
        else:
            result = _validate_producer(block, k, registry)
            if result is not None:
                return result
            result = _validate_transactions(block, k, registry, nonces, request_refs)
            if result is not None:
                return result
    return ValidationResult.valid()


def _validate_producer(block: Block, k: int, registry: Registry) -> ValidationResult | None:
    invalid = ValidationResult.invalid
    if registry.ra is None:
        return invalid(k, ValidationFailure.BAD_STRUCTURE, "no authority registered")
    try:
        expected = scheduled_producer(k, registry.ra.address, registry.validators)
    except NotScheduledProducer as exc:
        return invalid(k, ValidationFailure.NOT_SCHEDULED_PRODUCER, str(exc))
    if block.producer_address != expected:
        return invalid(k, ValidationFailure.NOT_SCHEDULED_PRODUCER, "producer out of schedule")
    producer = registry.by_address.get(block.producer_address)
    if producer is None:
        return invalid(k, ValidationFailure.UNKNOWN_SENDER, "producer not registered")
    if not verify(producer.public_key, block.producer_signature, block.block_digest()):
        return invalid(k, ValidationFailure.BAD_PRODUCER_SIGNATURE, f"block {k}")
    return None


def check_transaction(
    tx: SignedTransaction,
    *,
    registry: Registry,
    last_nonce: int,
    request_refs: set[bytes],
    now: int | None,
) -> tuple[ValidationFailure, str] | None:
    """One transaction's admission rules; shared by submission and replay.

    now is the current tick at submission; None during chain re-validation,
    where the block timestamp stands in via the caller's request_refs state.
    Returns None when acceptable, else (failure, detail).
    """
    action = tx.action
    try:
        validate_action_shape(action)
    except ActionError as exc:
        return ValidationFailure.MALFORMED_ACTION, str(exc)
    if action.tag in SEND_FOR_RECV:
        return ValidationFailure.MALFORMED_ACTION, "receive observations are never committed"
    if action.tag == ActionTag.REGISTER_AGENT:
        if registry.ra is not None and tx.sender_address != registry.ra.address:
            return ValidationFailure.MALFORMED_ACTION, "registration not sent by the authority"
        sender_identity = action.payload.candidate if registry.ra is None else registry.ra
    else:
        sender_identity = registry.by_address.get(tx.sender_address)
        if sender_identity is None:
            return ValidationFailure.UNKNOWN_SENDER, tx.sender_address.hex()[:16]
        if sender_identity.role not in _SENDER_ROLES[action.tag]:
            return ValidationFailure.MALFORMED_ACTION, f"{sender_identity.display_id} may not commit {action.tag.name}"
    if not verify(sender_identity.public_key, tx.signature, tx.signing_bytes()):
        return ValidationFailure.BAD_SIGNATURE, f"{action.tag.name} signature does not verify against sender"
    if tx.nonce <= last_nonce:
        return ValidationFailure.STALE_NONCE, f"nonce {tx.nonce} <= {last_nonce}"
    if action.tag == ActionTag.SEND_CONSENT_REQUEST:
        if action.rf in request_refs:
            return ValidationFailure.MALFORMED_ACTION, "consent reference already requested"
        if now is not None and action.payload.expiry <= now:
            return ValidationFailure.MALFORMED_ACTION, "expiry not in the future"
    return None


def _validate_transactions(
    block: Block,
    k: int,
    registry: Registry,
    nonces: dict[bytes, int],
    request_refs: set[bytes],
) -> ValidationResult | None:
    for t, tx in enumerate(block.transactions):
        failure = check_transaction(
            tx,
            registry=registry,
            last_nonce=nonces.get(tx.sender_address, 0),
            request_refs=request_refs,
            now=None,
        )
        if failure is not None:
            reason, detail = failure
            return ValidationResult.invalid(k, reason, f"tx {t}: {detail}")
        if tx.action.tag == ActionTag.REGISTER_AGENT:
            content: RegisterContent = tx.action.payload
            try:
                registry.register(content.candidate, content.ra_signature, content.validator)
            except LedgerError as exc:
                return ValidationResult.invalid(k, ValidationFailure.MALFORMED_ACTION, f"tx {t}: {exc}")
            if k == 0 and tx.sender_address != content.candidate.address and tx.sender_address != registry.ra.address:
                return ValidationResult.invalid(k, ValidationFailure.MALFORMED_ACTION, f"tx {t}: genesis registration from stranger")
        elif tx.action.tag == ActionTag.SEND_CONSENT_REQUEST:
            if tx.action.payload.expiry <= block.timestamp:
                return ValidationResult.invalid(k, ValidationFailure.MALFORMED_ACTION, f"tx {t}: expiry not beyond commit time")
            request_refs.add(tx.action.rf)
        nonces[tx.sender_address] = tx.nonce
    return None


def load_and_validate(data: bytes) -> tuple[Chain | None, ValidationResult]:
    """Parse then validate; parse failures come back as PARSE_ERROR results.

    A Chain object is only constructed once the blocks are known valid, so
    derived state (the registry) is always well-formed when a chain is
    returned.
    """
    blocks, parse_result = parse_blocks(data)
    if blocks is None:
        return None, parse_result
    result = validate_blocks(blocks)
    if not result.ok:
        return None, result
    return Chain(blocks), result


# -- submission and production -------------------------------------------


@dataclass(frozen=True)
class SubmitResult:
    accepted: bool
    reason: ValidationFailure | None = None
    detail: str = ""


@dataclass
class Ledger:
    """One authority node: the chain, its pending pool, and replica copies."""

    chain: Chain
    producer_keys: dict[bytes, Keypair]
    on_commit: list[Callable[[Block], None]] = field(default_factory=list)
    replicas: dict[str, bytes] = field(default_factory=dict)
    pending: list[SignedTransaction] = field(default_factory=list)
    divergences: list[tuple[str, int]] = field(default_factory=list)
    _pending_nonces: dict[bytes, int] = field(default_factory=dict)
    _pending_refs: set[bytes] = field(default_factory=set)
    _last_export: bytes = b""

    def __post_init__(self) -> None:
        self._last_export = self.chain.serialize()
        for name in self.replicas:
            self.replicas[name] = self._last_export

    def add_replica(self, name: str) -> None:
        self.replicas[name] = self._last_export

    def submit(self, tx: SignedTransaction, now: int) -> SubmitResult:
        last = max(self.chain.last_nonce(tx.sender_address), self._pending_nonces.get(tx.sender_address, 0))
        refs = self.chain._request_refs | self._pending_refs
        failure = check_transaction(tx, registry=self.chain.registry, last_nonce=last, request_refs=refs, now=now)
        if failure is not None:
            reason, detail = failure
            return SubmitResult(False, reason, detail)
        self.pending.append(tx)
        self._pending_nonces[tx.sender_address] = tx.nonce
        if tx.action.tag == ActionTag.SEND_CONSENT_REQUEST:
            self._pending_refs.add(tx.action.rf)
        return SubmitResult(True)

    def next_producer(self) -> bytes:
        return scheduled_producer(self.chain.height(), self.chain.registry.ra.address, self.chain.registry.validators)

    def produce_block(self, tick: int) -> Block | None:
        """Commit the pending pool as one block, or nothing when idle."""
        if not self.pending:
            return None
        if tick < self.chain.last_timestamp():
            raise LedgerError(f"tick {tick} behind chain time {self.chain.last_timestamp()}")
        producer_address = self.next_producer()
        producer = self.producer_keys.get(producer_address)
        if producer is None:
            raise NotScheduledProducer("scheduled producer's key is not held by this node")
        block = make_block(
            index=self.chain.height(),
            prev_digest=self.chain.head_digest(),
            timestamp=tick,
            transactions=self.pending,
            producer=producer,
        )
        self.pending = []
        self._pending_nonces = {}
        self._pending_refs = set()
        self.chain.append(block)
        for hook in list(self.on_commit):
            hook(block)
        self.sync_replicas()
        return block

    def sync_replicas(self) -> list[str]:
        """Detect byte divergence since the last sync, then re-align copies."""
        diverged = [name for name, copy in self.replicas.items() if copy != self._last_export]
        for name in diverged:
            self.divergences.append((name, self.chain.height() - 1))
        self._last_export = self.chain.serialize()
        for name in self.replicas:
            self.replicas[name] = self._last_export
        return diverged

    def final_sweep(self) -> list[str]:
        """End-of-run divergence check; diverged copies are left untouched
        so tampering evidence survives into the run's artifacts."""
        expected = self.chain.serialize()
        diverged = [name for name, copy in self.replicas.items() if copy != expected]
        for name in diverged:
            self.divergences.append((name, self.chain.height() - 1))
        return diverged


def prefer_chain(a: Chain, b: Chain) -> Chain:
    """Fork choice at desk scale: valid beats invalid, longer beats shorter,
    then the lower head digest for determinism."""
    a_ok = validate_chain(a).ok
    b_ok = validate_chain(b).ok
    if a_ok != b_ok:
        return a if a_ok else b
    if a.height() != b.height():
        return a if a.height() > b.height() else b
    return a if a.head_digest() <= b.head_digest() else b


# -- evidence ---------------------------------------------------------------


@dataclass(frozen=True)
class EvidenceEntry:
    block_index: int
    tx_index: int
    timestamp: int
    tx_bytes: bytes


@dataclass(frozen=True)
class EvidenceBundle:
    """Everything a third party needs, given only a trusted head digest, to
    re-verify that these entries are committed, ordered, and untampered."""

    rf: bytes
    head_digest: bytes
    chain_bytes: bytes
    entries: tuple[EvidenceEntry, ...]


@dataclass(frozen=True)
class EvidenceCheck:
    ok: bool
    failed_block: int | None = None
    reason: str = ""


def extract_evidence(chain: Chain, rf: bytes) -> EvidenceBundle:
    result = validate_chain(chain)
    if not result.ok:
        raise InvalidChainError(f"block {result.first_bad_index}: {result.reason.value}")
    entries = []
    for b, block in enumerate(chain.blocks):
        for t, tx in enumerate(block.transactions):
            if tx.action.rf == rf:
                entries.append(EvidenceEntry(b, t, block.timestamp, tx.encode()))
    if not entries:
        raise InvalidChainError(f"no committed transaction mentions {rf.hex()}")
    return EvidenceBundle(rf=rf, head_digest=chain.head_digest(), chain_bytes=chain.serialize(), entries=tuple(entries))


def verify_evidence(bundle: EvidenceBundle, head_digest: bytes) -> EvidenceCheck:
    chain, result = load_and_validate(bundle.chain_bytes)
    if not result.ok:
        return EvidenceCheck(False, result.first_bad_index, result.reason.value)
    if chain.head_digest() != head_digest:
        return EvidenceCheck(False, chain.height() - 1, "head digest disagrees with holder")
    last: Locator | None = None
    for entry in bundle.entries:
        loc = (entry.block_index, entry.tx_index)
        if last is not None and loc <= last:
            return EvidenceCheck(False, entry.block_index, "entries out of commit order")
        last = loc
        if entry.block_index >= chain.height():
            return EvidenceCheck(False, entry.block_index, "entry beyond chain head")
        block = chain.blocks[entry.block_index]
        if entry.tx_index >= len(block.transactions):
            return EvidenceCheck(False, entry.block_index, "entry transaction missing")
        if block.timestamp != entry.timestamp:
            return EvidenceCheck(False, entry.block_index, "entry timestamp disagrees")
        tx = block.transactions[entry.tx_index]
        if tx.encode() != entry.tx_bytes:
            return EvidenceCheck(False, entry.block_index, "entry bytes disagree with chain")
        if tx.action.rf != bundle.rf:
            return EvidenceCheck(False, entry.block_index, "entry mentions a different consent")
    return EvidenceCheck(True)


def verify_evidence_for_holder(bundle: EvidenceBundle, holder_copy: bytes) -> EvidenceCheck:
    """Verification as a chain holder performs it: trust nothing but your own
    copy; its head digest anchors the bundle. A tampered copy fails at the
    tampered block before the bundle is even considered."""
    chain, result = load_and_validate(holder_copy)
    if not result.ok:
        return EvidenceCheck(False, result.first_bad_index, result.reason.value)
    return verify_evidence(bundle, chain.head_digest())
