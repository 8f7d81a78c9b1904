"""Hand-driven deployment for tests that need precise chain shapes."""

import random

from consentchain.actions import (
    ActionTag,
    ConsentContent,
    ConsentMode,
    DataKind,
    Decision,
    DeviceContent,
    EmptyContent,
    ReportContent,
    ResponseContent,
    compose_action,
)
from consentchain.contracts import ContractEngine
from consentchain.identity import Keypair, Role
from consentchain.ledger import Ledger, sign_transaction
from consentchain.simnet import make_genesis

ROSTER = (
    ("RA", Role.REGULATORY_AUTHORITY),
    ("U1", Role.USER),
    ("FP1", Role.FITNESS_PROVIDER),
    ("R1", Role.REQUESTER),
)


class World:
    """Authority, one user, a provider, a requester, and an attached engine.

    Scripts drive the ledger directly; nonces are tracked per sender so a
    test can interleave submissions freely.
    """

    def __init__(self, seed=42, validators=("RA", "FP1", "R1"), engine=True, extra=()):
        self.seed = seed
        roster = ROSTER + tuple((d, role or Role.USER) for d, role in extra)
        self.keys = {d: Keypair.derive(seed, d, r) for d, r in roster}
        self.keys["SC"] = Keypair.derive(seed, "SC", Role.CONTRACT_ENGINE)
        registrations = [(self.keys[d], d in validators) for d, _ in roster]
        registrations.append((self.keys["SC"], False))
        chain = make_genesis(self.keys["RA"], registrations)
        producers = {self.keys[d].identity.address: self.keys[d] for d, _ in roster}
        self.ledger = Ledger(chain=chain, producer_keys=producers)
        self.engine = ContractEngine(self.keys["SC"], self.ledger)
        if engine:
            self.engine.attach()
        self.rng = random.Random(seed)
        self.nonces = {}

    @property
    def chain(self):
        return self.ledger.chain

    def address(self, display):
        return self.keys[display].identity.address

    def ref(self):
        return self.rng.getrandbits(128).to_bytes(16, "big")

    def tx(self, display, tag, rf, payload):
        keypair = self.keys[display]
        address = keypair.identity.address
        if display not in self.nonces:
            self.nonces[display] = self.chain.last_nonce(address)
        self.nonces[display] += 1
        action = compose_action(tag, rf, payload, keypair.identity)
        return sign_transaction(keypair, action, self.nonces[display])

    def submit(self, display, tag, rf, payload, now):
        result = self.ledger.submit(self.tx(display, tag, rf, payload), now)
        assert result.accepted, f"{tag.name} rejected: {result.reason} {result.detail}"
        return result

    def produce(self, tick):
        return self.ledger.produce_block(tick)

    # -- canned protocol moves ------------------------------------------------

    def request(self, rf, sender="FP1", mode=ConsentMode.PROCESS, kind=DataKind.STEPS, expiry=100, now=1):
        content = ConsentContent("research", self.address(sender), kind, mode, expiry)
        self.submit(sender, ActionTag.SEND_CONSENT_REQUEST, rf, content, now)

    def respond(self, rf, decision=Decision.GRANTED, now=2):
        self.submit("U1", ActionTag.SEND_CONSENT_RESPONSE, rf, ResponseContent(decision), now)

    def withdraw(self, rf, now=3):
        self.submit("U1", ActionTag.SEND_WITHDRAW_CONSENT, rf, EmptyContent(), now)

    def report(self, rf, sender="FP1", detail="processed", now=3):
        self.submit(sender, ActionTag.SEND_SELF_REPORT_DATA_ACCESS, rf, ReportContent(detail), now)

    def notice(self, rf, detail="available", now=3):
        self.submit("FP1", ActionTag.SEND_REPORT_DATA_AVAILABLE, rf, ReportContent(detail), now)

    def set_device(self, kind, enabled, now=1):
        self.set_device_as("U1", kind, enabled, now)

    def set_device_as(self, display, kind, enabled, now=1):
        self.submit(display, ActionTag.SET_DEVICE_PRIVACY, None, DeviceContent(kind, enabled), now)

    def granted_consent(self, rf=None, expiry=100, ticks=(1, 2)):
        """Request then grant; returns the reference. Blocks at the given ticks."""
        rf = rf or self.ref()
        self.request(rf, expiry=expiry, now=ticks[0])
        self.produce(ticks[0])
        self.respond(rf, now=ticks[1])
        self.produce(ticks[1])
        return rf
