"""Consent lifecycle fold, checked against an independent explicit oracle."""

import itertools

import pytest

from consentchain.actions import (
    Action,
    ActionTag,
    ConsentContent,
    ConsentMode,
    ContractContent,
    DataKind,
    Decision,
    EmptyContent,
    ResponseContent,
    Verdict,
)
from consentchain.consent import (
    ConsentRecord,
    EventKind,
    Phase,
    TRANSITIONS,
    UnknownReference,
    Validity,
    algorithm1_gate,
    consent_anomalies,
    device_privacy_view,
    fold_consent,
    project_consent_state,
)
from helpers import World

RF = bytes(16)
LETTERS = ("request", "grant", "deny", "withdraw")


def act(letter):
    if letter == "request":
        content = ConsentContent("study", bytes(32), DataKind.STEPS, ConsentMode.PROCESS, 50)
        return Action(ActionTag.SEND_CONSENT_REQUEST, RF, content)
    if letter == "grant":
        return Action(ActionTag.SEND_CONSENT_RESPONSE, RF, ResponseContent(Decision.GRANTED))
    if letter == "deny":
        return Action(ActionTag.SEND_CONSENT_RESPONSE, RF, ResponseContent(Decision.DENIED))
    if letter == "withdraw":
        return Action(ActionTag.SEND_WITHDRAW_CONSENT, RF, EmptyContent())
    if letter == "sc1_invalid":
        return Action(ActionTag.SC1_RESULT, RF, ContractContent(Verdict.CONSENT_INVALID, bytes(32)))
    raise ValueError(letter)


def fold(letters):
    return fold_consent((tick, act(letter)) for tick, letter in enumerate(letters, start=1))


def oracle(letters):
    """Explicit walk of the lifecycle graph, written separately from the
    fold's transition table. Returns (phase name, validity name, no-op count)."""
    phase = None
    validity = None
    strays = 0
    for letter in letters:
        if phase is None:
            if letter == "request":
                phase, validity = "Requested", "NotYetDecided"
            else:
                strays += 1
        elif phase == "Requested":
            if letter == "grant":
                phase = "Granted"
                if validity != "Invalid":  # invalidity latches
                    validity = "Valid"
            elif letter == "deny":
                phase, validity = "Denied", "Invalid"
            elif letter == "sc1_invalid":
                validity = "Invalid"
                strays += 1
            else:
                strays += 1
        elif phase == "Granted":
            if letter == "withdraw":
                phase, validity = "Withdrawn", "Invalid"
            elif letter == "sc1_invalid":
                phase, validity = "Expired", "Invalid"
            else:
                strays += 1
        else:
            # Denied, Withdrawn, Expired: terminal. The contract confirming
            # the withdrawal it was triggered by is the one non-stray echo.
            if not (phase == "Withdrawn" and letter == "sc1_invalid"):
                strays += 1
    return phase, validity, strays


def all_sequences(alphabet, max_len):
    for length in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=length)


def test_transition_table_total():
    phases = [None] + list(Phase)
    for phase in phases:
        for kind in EventKind:
            assert (phase, kind) in TRANSITIONS
    assert len(TRANSITIONS) == len(phases) * len(EventKind)


def test_fold_matches_oracle_exhaustively():
    count = 0
    for letters in all_sequences(LETTERS, 5):
        record, anomalies = fold(letters)
        phase, validity, strays = oracle(letters)
        if record is None:
            assert phase is None
        else:
            assert record.phase.value == phase
            assert record.validity.value == validity
        assert len(anomalies) == strays
        count += 1
    assert count == sum(4**n for n in range(6))


def test_fold_matches_oracle_with_contract_events():
    for letters in all_sequences(LETTERS + ("sc1_invalid",), 4):
        record, anomalies = fold(letters)
        phase, validity, strays = oracle(letters)
        if record is None:
            assert phase is None
        else:
            assert (record.phase.value, record.validity.value) == (phase, validity)
        assert len(anomalies) == strays


def test_phases_never_revisited():
    for letters in all_sequences(LETTERS, 5):
        seen = []
        for n in range(1, len(letters) + 1):
            record, _ = fold(letters[:n])
            if record is not None:
                seen.append(record.phase)
        left = set()
        for previous, current in zip(seen, seen[1:]):
            if current != previous:
                left.add(previous)
            assert current not in left


def test_first_request_creates_record():
    record, _ = fold(["request"])
    assert record.phase == Phase.REQUESTED
    assert record.validity == Validity.NOT_YET_DECIDED
    assert record.requested_at == 1
    assert record.decided_at is None


def test_withdraw_then_contract_confirmation():
    record, anomalies = fold(["request", "grant", "withdraw", "sc1_invalid"])
    assert record.phase == Phase.WITHDRAWN
    assert record.validity == Validity.INVALID
    assert record.invalidated_at == 3
    assert anomalies == []


def test_stray_withdraw_after_denial():
    record, anomalies = fold(["request", "deny", "withdraw"])
    assert record.phase == Phase.DENIED
    assert len(anomalies) == 1
    assert anomalies[0].kind == EventKind.WITHDRAW
    assert anomalies[0].phase == Phase.DENIED


def test_invalid_is_monotone():
    record, _ = fold(["request", "grant", "withdraw"])
    assert record.validity == Validity.INVALID
    # a later stray grant cannot resurrect validity
    record, _ = fold(["request", "grant", "withdraw", "grant"])
    assert record.phase == Phase.WITHDRAWN
    assert record.validity == Validity.INVALID


def test_gate_boundary():
    record, _ = fold(["request", "grant"])
    assert record.expiry == 50
    assert algorithm1_gate(record, 3)
    assert algorithm1_gate(record, 49)
    assert not algorithm1_gate(record, 50)
    assert not algorithm1_gate(record, 51)


def test_gate_requires_granted_and_valid():
    denied, _ = fold(["request", "deny"])
    assert not algorithm1_gate(denied, 3)
    withdrawn, _ = fold(["request", "grant", "withdraw"])
    assert not algorithm1_gate(withdrawn, 3)
    pending, _ = fold(["request"])
    assert not algorithm1_gate(pending, 3)


def test_project_consent_state_on_chain():
    world = World()
    rf = world.granted_consent()
    record = project_consent_state(world.chain, rf)
    assert record.phase == Phase.GRANTED
    assert record.validity == Validity.VALID
    assert record.requested_at == 1
    assert record.decided_at == 2


def test_project_unknown_reference():
    world = World()
    with pytest.raises(UnknownReference):
        project_consent_state(world.chain, bytes(16))


def test_consent_anomalies_on_chain():
    world = World()
    rf = world.ref()
    world.request(rf, now=1)
    world.produce(1)
    world.respond(rf, Decision.DENIED, now=2)
    world.produce(2)
    world.withdraw(rf, now=3)
    world.produce(3)
    anomalies = consent_anomalies(world.chain)
    assert len(anomalies) == 1
    assert anomalies[0].rf == rf
    assert anomalies[0].kind == EventKind.WITHDRAW


def test_device_view_defaults_enabled():
    world = World()
    view = device_privacy_view(world.chain, world.address("U1"))
    assert view == {kind: True for kind in DataKind}


def test_device_view_last_writer_wins():
    world = World()
    world.set_device(DataKind.HEART_RATE, False, now=1)
    world.produce(1)
    view = device_privacy_view(world.chain, world.address("U1"))
    assert view[DataKind.HEART_RATE] is False
    assert view[DataKind.STEPS] is True
    world.set_device(DataKind.HEART_RATE, True, now=2)
    world.produce(2)
    view = device_privacy_view(world.chain, world.address("U1"))
    assert view[DataKind.HEART_RATE] is True


def test_device_views_independent_per_user():
    world = World(extra=(("U2", None),))
    world.set_device(DataKind.SLEEP, False, now=1)
    world.produce(1)
    world.set_device_as("U2", DataKind.LOCATION, False, now=2)
    world.produce(2)
    first = device_privacy_view(world.chain, world.address("U1"))
    second = device_privacy_view(world.chain, world.address("U2"))
    assert first[DataKind.SLEEP] is False and first[DataKind.LOCATION] is True
    assert second[DataKind.SLEEP] is True and second[DataKind.LOCATION] is False


def test_device_view_upto_bound():
    world = World()
    world.set_device(DataKind.STEPS, False, now=1)
    block = world.produce(1)
    locator = (block.index, 0)
    before = device_privacy_view(world.chain, world.address("U1"), upto=locator)
    after = device_privacy_view(world.chain, world.address("U1"))
    assert before[DataKind.STEPS] is True
    assert after[DataKind.STEPS] is False


def test_record_is_frozen():
    record, _ = fold(["request"])
    assert isinstance(record, ConsentRecord)
    with pytest.raises(AttributeError):
        record.phase = Phase.GRANTED
