"""Local-view authenticity checking: the bounded enumeration against a
brute-force reference, word construction from run artifacts, and the
property reports over every standard scenario."""

import dataclasses
import random

import pytest

from consentchain.actions import ActionTag
from consentchain.ledger import Chain, ValidationFailure
from consentchain.semf import (
    CONTRACT_PREDICATES,
    CheckContext,
    CheckError,
    DESIGN_GOALS,
    Origin,
    PAIR_PREDICATES,
    PROPERTY_NAMES,
    Symbol,
    build_word,
    check_auth,
    check_design_goals,
    enumerate_compatible,
    knowledge_predicates,
    project_view,
)
from consentchain.simnet import TraceEvent
from semf_oracle import (
    ADDR_A,
    ADDR_B,
    DIGESTS,
    ENGINE_ADDR,
    REFS,
    longest_hidden_run,
    oracle_check,
    oracle_cost,
    random_case,
    restated_predicates,
    view_of,
)


def sym(index, tag, origin, rf=REFS[0], agent=ADDR_A, digest=DIGESTS[0], locator=None, signer_ok=True):
    return Symbol(index, tag, rf, agent, digest, origin, locator, signer_ok=signer_ok)


# -- visibility and candidate enumeration --------------------------------------


def test_chain_symbols_are_visible_to_everyone():
    committed = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_B, locator=(0, 0))
    device = sym(1, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, agent=ADDR_B)
    word = [committed, device]
    assert project_view(word, ADDR_A) == (committed,)
    assert project_view(word, ADDR_B) == (committed, device)
    assert project_view(word, ADDR_A) == view_of(word, ADDR_A)
    assert project_view(word, ADDR_B) == view_of(word, ADDR_B)


def test_enumerate_compatible_counts_and_projections():
    send = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_B, locator=(0, 0))
    recv = sym(1, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_UNBOUND, agent=ADDR_B, digest=None)
    view = (send,)
    words_k1 = list(enumerate_compatible(view, [recv], k=1))
    assert len(words_k1) == 4
    assert sorted(len(w) for w in words_k1) == [1, 2, 2, 3]
    for w in words_k1:
        assert project_view(w, ADDR_A) == view
    words_k2 = list(enumerate_compatible(view, [recv], k=2))
    assert len(words_k2) == 9
    assert max(longest_hidden_run(w, ADDR_A) for w in words_k2) == 2


# -- check_auth unit behaviour ---------------------------------------------------


def test_probe_absent_from_word_is_vacuous():
    send = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_B, locator=(0, 0))
    stray = sym(1, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_UNBOUND, agent=ADDR_B, digest=None)
    result = check_auth(
        [send], [send, stray], [send], stray, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1,
    )
    assert result.status == "holds"
    assert result.vacuous
    assert result.candidates == 0


def test_gamma_member_in_view_short_circuits():
    send = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_B, locator=(0, 0))
    result = check_auth(
        [send], [send], [send], send, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1,
    )
    assert result.status == "holds"
    assert not result.vacuous
    assert result.candidates == 0


def test_unbound_receive_proves_nothing_happened():
    ghost = sym(0, ActionTag.RECV_CONSENT_RESPONSE, Origin.DEVICE_UNBOUND, digest=None)
    result = check_auth(
        [ghost], [ghost], [], ghost, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1,
    )
    assert result.status == "violated"
    assert result.witness == (ghost,)
    assert result.candidates == 1


def test_unbacked_bound_receive_has_no_compatible_words():
    # A bound receive whose claimed send exists nowhere: every candidate
    # fails the receive-origin predicate, so the probe holds and the
    # word-level backing check is what flags the symbol instead.
    orphan = sym(0, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND)
    result = check_auth(
        [orphan], [orphan], [], orphan, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1,
    )
    assert result.status == "holds"
    assert not result.vacuous
    assert result.candidates == 1


def test_own_receive_is_knowable_but_not_others():
    send = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_A, locator=(0, 0))
    recv = sym(1, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, agent=ADDR_B)
    word = [send, recv]
    mine = check_auth(
        word, word, [recv], send, ADDR_B,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1,
    )
    assert mine.status == "holds"
    theirs = check_auth(
        word, word, [recv], send, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1,
    )
    assert theirs.status == "violated"
    assert theirs.witness == (send,)


def test_unmatched_bound_receive_never_enters_candidates():
    send = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_B, locator=(0, 0))
    matched = sym(1, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, agent=ADDR_B, digest=DIGESTS[0])
    unmatched = sym(2, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, agent=ADDR_B, digest=DIGESTS[1])

    grows = check_auth(
        [send], [send, matched], [matched], send, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1, ceiling=1,
    )
    assert grows.status == "bound_explosion"
    assert grows.estimate == 2

    pruned = check_auth(
        [send], [send, unmatched], [unmatched], send, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1, ceiling=1,
    )
    assert pruned.status == "violated"
    assert pruned.candidates == 1
    assert pruned.witness == (send,)


def test_bound_receive_only_fills_gaps_after_its_send():
    first = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_B, locator=(0, 0))
    second = sym(
        1, ActionTag.SEND_SELF_REPORT_DATA_ACCESS, Origin.CHAIN,
        rf=REFS[1], agent=ADDR_B, digest=DIGESTS[1], locator=(1, 0),
    )
    recv = sym(2, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, agent=ADDR_B, digest=DIGESTS[0])
    word = [first, second]
    sigma = [first, second, recv]

    # Three gaps, but the receive may not precede its send: 1 * 2 * 2.
    squeezed = check_auth(
        word, sigma, [recv], first, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1, ceiling=3,
    )
    assert squeezed.status == "bound_explosion"
    assert squeezed.estimate == 4

    result = check_auth(
        word, sigma, [recv], first, ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=1, ceiling=10,
    )
    assert result.status == "violated"
    assert result.witness == (first, second)
    assert result.candidates == 1


def test_estimate_arithmetic_and_explosion():
    committed = [
        sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_B, locator=(0, 0)),
        sym(1, ActionTag.SEND_SELF_REPORT_DATA_ACCESS, Origin.CHAIN, agent=ADDR_B, digest=DIGESTS[1], locator=(1, 0)),
    ]
    hidden = [
        sym(2 + i, ActionTag.RECV_CONSENT_RESPONSE, Origin.DEVICE_UNBOUND, agent=ADDR_B, digest=None)
        for i in range(3)
    ]
    sigma = committed + hidden

    # Three gaps, three insertable symbols, runs up to two: (1+3+9)^3.
    blown = check_auth(
        committed, sigma, [], committed[0], ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=2, ceiling=1000,
    )
    assert blown.status == "bound_explosion"
    assert blown.estimate == 13**3
    assert blown.witness is None

    allowed = check_auth(
        committed, sigma, [], committed[0], ADDR_A,
        predicates=PAIR_PREDICATES, ctx=CheckContext(), k=2, ceiling=13**3,
    )
    assert allowed.status == "violated"
    assert allowed.candidates == 1
    assert allowed.witness == tuple(committed)


# -- predicate semantics ---------------------------------------------------------


def test_receive_origin_predicate():
    a1 = knowledge_predicates(CheckContext())["A1"]
    send = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, agent=ADDR_B, locator=(0, 0))
    recv = sym(1, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, agent=ADDR_B)
    assert a1([send, recv])
    assert not a1([recv, send])
    assert not a1([recv])
    bare = sym(2, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, agent=ADDR_B, digest=None)
    assert not a1([send, bare])
    ghost = sym(3, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_UNBOUND, agent=ADDR_B, digest=None)
    assert a1([ghost])


def test_sender_signature_predicate_exempts_contract_results():
    a2 = knowledge_predicates(CheckContext())["A2"]
    bad_send = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, locator=(0, 0), signer_ok=False)
    bad_result = sym(1, ActionTag.SC1_RESULT, Origin.CHAIN, locator=(1, 0), signer_ok=False)
    assert not a2([bad_send])
    assert a2([bad_result])


def test_engine_signature_predicate():
    ctx = CheckContext(engine_address=ENGINE_ADDR)
    a3 = knowledge_predicates(ctx)["A3"]
    genuine = sym(0, ActionTag.SC1_RESULT, Origin.CHAIN, agent=ENGINE_ADDR, locator=(0, 0))
    imposter = sym(1, ActionTag.SC1_RESULT, Origin.CHAIN, agent=ADDR_A, locator=(1, 0))
    forged = sym(2, ActionTag.SC2_RESULT, Origin.CHAIN, agent=ENGINE_ADDR, locator=(2, 0), signer_ok=False)
    assert a3([genuine])
    assert not a3([imposter])
    assert not a3([forged])
    anonymous = knowledge_predicates(CheckContext())["A3"]
    assert anonymous([imposter])


def test_payload_binding_predicate():
    ctx = CheckContext(digest_at={(4, 0): DIGESTS[0]})
    a5 = knowledge_predicates(ctx)["A5"]
    agreeing = sym(0, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, digest=DIGESTS[0], locator=(4, 0))
    lying = sym(1, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, digest=DIGESTS[1], locator=(4, 0))
    unlocated = sym(2, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, digest=DIGESTS[1])
    empty = sym(3, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND, digest=None)
    assert a5([agreeing])
    assert not a5([lying])
    assert a5([unlocated])
    assert not a5([empty])


def test_trigger_justification_predicate():
    ctx = CheckContext()
    a6 = knowledge_predicates(ctx)["A6"]
    withdraw = sym(0, ActionTag.SEND_WITHDRAW_CONSENT, Origin.CHAIN, locator=(0, 0))
    verdict = sym(1, ActionTag.SC1_RESULT, Origin.CHAIN, agent=ENGINE_ADDR, locator=(1, 0))
    report = sym(2, ActionTag.SEND_SELF_REPORT_DATA_ACCESS, Origin.CHAIN, locator=(2, 0))
    access = sym(3, ActionTag.SC2_RESULT, Origin.CHAIN, agent=ENGINE_ADDR, locator=(3, 0))
    assert a6([withdraw, verdict])
    assert not a6([verdict])
    assert a6([report, access])
    assert not a6([access])
    justified = CheckContext(expiry_justified={verdict.index})
    assert knowledge_predicates(justified)["A6"]([verdict])


def test_commit_order_predicate():
    a7 = knowledge_predicates(CheckContext())["A7"]
    early = sym(0, ActionTag.SEND_CONSENT_REQUEST, Origin.CHAIN, locator=(0, 0))
    late = sym(1, ActionTag.SEND_CONSENT_RESPONSE, Origin.CHAIN, locator=(3, 0))
    device = sym(2, ActionTag.RECV_CONSENT_REQUEST, Origin.DEVICE_BOUND)
    assert a7([early, late])
    assert not a7([late, early])
    assert a7([early, device, late])
    assert a7([early, early])


# -- agreement with the brute-force reference ------------------------------------


def test_check_auth_matches_brute_force():
    rng = random.Random(90210)
    cases = probes = violated = bound_two = 0
    while probes < 110:
        symbols, ctx = random_case(rng)
        sigma = list(symbols)
        word = [s for s in symbols if rng.random() < 0.8] or sigma[:1]
        ran = 0
        for _ in range(2):
            agent = ADDR_A if rng.random() < 0.5 else ADDR_B
            predicates = PAIR_PREDICATES if rng.random() < 0.5 else CONTRACT_PREDICATES
            view_len = len(view_of(word, agent))
            k = 2 if oracle_cost(len(sigma), view_len, 2) <= 40_000 else 1
            if oracle_cost(len(sigma), view_len, k) > 150_000:
                continue
            if rng.random() < 0.05:
                b = None
            elif rng.random() < 0.85:
                b = rng.choice(word)
            else:
                b = rng.choice(sigma)
            gamma = rng.sample(sigma, rng.randrange(0, 3))

            got = check_auth(
                word, sigma, gamma, b, agent,
                predicates=predicates, ctx=ctx, k=k, ceiling=10**8,
            )
            assert got.status in ("holds", "violated")
            want = oracle_check(word, sigma, gamma, b, agent, predicates, ctx, k)
            assert (got.status, got.vacuous) == want

            if got.status == "violated":
                violated += 1
                witness = got.witness
                assert witness is not None
                assert view_of(witness, agent) == view_of(word, agent)
                assert longest_hidden_run(witness, agent) <= k
                assert not (set(gamma) & set(witness))
                checks = restated_predicates(ctx)
                for name in predicates:
                    assert checks[name](witness)
            ran += 1
            probes += 1
            bound_two += k == 2
        cases += ran > 0
    assert cases >= 50
    assert violated >= 15
    assert bound_two >= 10


def test_violations_persist_at_larger_bound():
    rng = random.Random(4242)
    upheld = 0
    for _ in range(200):
        symbols, ctx = random_case(rng)
        sigma = list(symbols)
        word = [s for s in symbols if rng.random() < 0.85] or sigma[:1]
        agent = ADDR_A if rng.random() < 0.5 else ADDR_B
        predicates = PAIR_PREDICATES if rng.random() < 0.5 else CONTRACT_PREDICATES
        b = rng.choice(word)
        gamma = rng.sample(sigma, rng.randrange(0, 3))
        tight = check_auth(
            word, sigma, gamma, b, agent,
            predicates=predicates, ctx=ctx, k=1, ceiling=20_000,
        )
        if tight.status != "violated":
            continue
        loose = check_auth(
            word, sigma, gamma, b, agent,
            predicates=predicates, ctx=ctx, k=2, ceiling=20_000,
        )
        if loose.status == "bound_explosion":
            continue
        assert loose.status == "violated"
        upheld += 1
    assert upheld >= 25


# -- building the word from run artifacts ----------------------------------------


def mutate_trace(trace, index, **changes):
    rows = list(trace)
    rows[index] = dataclasses.replace(rows[index], **changes)
    return rows


def row_index(trace, status):
    return next(i for i, row in enumerate(trace) if row.status == status)


def test_word_symbols_ground_in_the_chain(runs):
    run = runs["s1_happy_path"]
    word = build_word(run.trace, run.chain)
    origins = [s.origin for s in word.symbols]
    assert origins.count(Origin.CHAIN) == 10
    assert origins.count(Origin.DEVICE_BOUND) == 7
    for s in word.symbols:
        assert s.locator in word.ctx.digest_at
        assert s.payload_digest == word.ctx.digest_at[s.locator]
    assert word.ctx.engine_address == run.chain.registry.by_display["SC"].address
    assert word.ctx.expiry_justified == set()


def test_injected_rows_become_unbound_symbols(runs):
    run = runs["s9_unbound_receive"]
    word = build_word(run.trace, run.chain)
    ghosts = [s for s in word.symbols if s.origin is Origin.DEVICE_UNBOUND]
    assert len(ghosts) == 1
    assert ghosts[0].tag is ActionTag.RECV_SELF_REPORT_DATA_ACCESS
    assert ghosts[0].payload_digest is None
    assert ghosts[0].locator is None


def test_expiry_crossing_marks_validity_results(runs):
    expired = build_word(runs["s4_expiry"].trace, runs["s4_expiry"].chain)
    verdicts = [s for s in expired.symbols if s.tag is ActionTag.SC1_RESULT]
    assert len(verdicts) == 1
    assert expired.ctx.expiry_justified == {verdicts[0].index}

    withdrawn = build_word(runs["s3_withdrawal"].trace, runs["s3_withdrawal"].chain)
    assert any(s.tag is ActionTag.SC1_RESULT for s in withdrawn.symbols)
    assert withdrawn.ctx.expiry_justified == set()


def test_committed_row_requires_locator(runs):
    run = runs["s1_happy_path"]
    rows = mutate_trace(run.trace, row_index(run.trace, "committed"), locator=None)
    with pytest.raises(CheckError, match="without a locator"):
        build_word(rows, run.chain)


def test_committed_row_locator_must_exist(runs):
    run = runs["s1_happy_path"]
    rows = mutate_trace(run.trace, row_index(run.trace, "committed"), locator="99:0")
    with pytest.raises(CheckError, match="outside the chain"):
        build_word(rows, run.chain)


def test_committed_row_must_agree_with_the_chain(runs):
    run = runs["s1_happy_path"]
    i = row_index(run.trace, "committed")
    with pytest.raises(CheckError, match="disagrees"):
        build_word(mutate_trace(run.trace, i, tag="SendWithdrawConsent"), run.chain)
    with pytest.raises(CheckError, match="disagrees"):
        build_word(mutate_trace(run.trace, i, rf="00" * 16), run.chain)


def test_observed_row_needs_usable_binding(runs):
    run = runs["s1_happy_path"]
    i = row_index(run.trace, "observed")
    with pytest.raises(CheckError, match="unusable binding"):
        build_word(mutate_trace(run.trace, i, locator="50:0"), run.chain)
    with pytest.raises(CheckError, match="unusable binding"):
        build_word(mutate_trace(run.trace, i, locator=None), run.chain)


def test_unknown_actor_rejected(runs):
    run = runs["s1_happy_path"]
    rows = mutate_trace(run.trace, row_index(run.trace, "observed"), actor="MALLORY")
    with pytest.raises(CheckError, match="not registered"):
        build_word(rows, run.chain)


def test_unknown_tag_rejected(runs):
    run = runs["s1_happy_path"]
    rows = mutate_trace(run.trace, row_index(run.trace, "committed"), tag="Gossip")
    with pytest.raises(CheckError, match="unknown tag"):
        build_word(rows, run.chain)


def test_unknown_status_rejected(runs):
    run = runs["s1_happy_path"]
    rows = mutate_trace(run.trace, row_index(run.trace, "committed"), status="dreamed")
    with pytest.raises(CheckError, match="unknown trace status"):
        build_word(rows, run.chain)


def test_rejected_and_registration_rows_are_skipped(runs):
    run = runs["s1_happy_path"]
    baseline = len(build_word(run.trace, run.chain).symbols)
    rows = list(run.trace)
    rows.append(TraceEvent(99, "NOBODY", "Gossip", None, None, "rejected"))
    rows.append(TraceEvent(99, "NOBODY", "RegisterAgent", None, None, "committed"))
    assert len(build_word(rows, run.chain).symbols) == baseline


def test_alphabet_size_is_capped(runs):
    run = runs["s1_happy_path"]
    repeat = run.trace[row_index(run.trace, "observed")]
    rows = list(run.trace) + [dataclasses.replace(repeat) for _ in range(60)]
    with pytest.raises(CheckError, match="alphabet"):
        build_word(rows, run.chain)


# -- property reports over the standard runs --------------------------------------

# One letter per property, in PROPERTY_NAMES order: H holds, h holds
# vacuously, V violated.
EXPECTED_MATRIX = {
    "s1_happy_path":      "H H H H H  H H H h H  H H H  H",
    "s2_denied":          "H H h h h  H h H h h  h h h  H",
    "s3_withdrawal":      "H H H H h  H H H H H  h H h  H",
    "s4_expiry":          "H H H h h  H h H h H  h h h  H",
    "s5_collection":      "H H H h H  H H H h H  H h H  H",
    "s6_tamper":          "H H H H h  H H H h H  h H h  H",
    "s7_fabrication":     "V V h h h  H h V h h  h h h  H",
    "s8_unlawful_access": "H H h V h  H H H h h  h V h  H",
    "s9_unbound_receive": "V V H H h  H V H h H  h H h  H",
}


def outcome_letter(outcome):
    if outcome.status == "violated":
        return "V"
    if outcome.status == "bound_explosion":
        return "E"
    return "h" if outcome.vacuous else "H"


def test_every_property_on_every_standard_run(runs):
    assert set(EXPECTED_MATRIX) == set(runs)
    for name, row in EXPECTED_MATRIX.items():
        run = runs[name]
        reports = check_design_goals(run.trace, run.chain, properties=PROPERTY_NAMES, k=2)
        got = [outcome_letter(reports[p]) for p in PROPERTY_NAMES]
        assert got == row.split(), name


def test_default_properties_are_the_design_goals(runs):
    run = runs["s1_happy_path"]
    reports = check_design_goals(run.trace, run.chain, k=2)
    assert tuple(reports) == DESIGN_GOALS


def test_serialized_chain_is_equivalent_to_the_object(runs):
    run = runs["s1_happy_path"]
    from_object = check_design_goals(run.trace, run.chain, k=2)
    from_bytes = check_design_goals(run.trace, run.chain.serialize(), k=2)
    for name in DESIGN_GOALS:
        assert from_object[name].status == from_bytes[name].status
        assert from_object[name].vacuous == from_bytes[name].vacuous


def test_unknown_property_name_rejected(runs):
    run = runs["s1_happy_path"]
    with pytest.raises(CheckError, match="unknown property"):
        check_design_goals(run.trace, run.chain, properties=("dg1", "dg9"), k=2)


def test_invalid_chain_object_reports_requested_properties_violated(runs):
    run = runs["s1_happy_path"]
    blocks = list(run.chain.blocks)
    blocks[2] = dataclasses.replace(blocks[2], timestamp=blocks[2].timestamp + 7)
    reports = check_design_goals(run.trace, Chain(blocks), properties=("dg1", "dg4"), k=2)
    assert set(reports) == {"dg1", "dg4"}
    for outcome in reports.values():
        assert outcome.status == "violated"
        assert not outcome.vacuous
        assert "chain_invalid" in outcome.witness


def test_tampered_replica_bytes_report_all_violated(runs):
    run = runs["s6_tamper"]
    tampered = run.ledger.replicas["FP1"]
    reports = check_design_goals(run.trace, tampered, properties=PROPERTY_NAMES, k=2)
    for outcome in reports.values():
        assert outcome.status == "violated"
        info = outcome.witness["chain_invalid"]
        assert info["first_bad_index"] == 3
        assert info["reason"] == ValidationFailure.DIGEST_MISMATCH.value


def test_undecodable_chain_bytes_raise(runs):
    run = runs["s1_happy_path"]
    with pytest.raises(CheckError, match="do not decode"):
        check_design_goals(run.trace, b"not a chain at all", k=2)


def test_evidence_across_replicas_catches_tampering(runs):
    run = runs["s6_tamper"]
    outcome = check_design_goals(
        run.trace, run.chain, properties=("proof-auth",), k=2, replicas=run.ledger.replicas
    )["proof-auth"]
    assert outcome.status == "violated"
    assert not outcome.vacuous
    assert outcome.detail.startswith("evidence rejected")
    assert outcome.witness["holder"] == "FP1"
    assert outcome.witness["failed_block"] == 3


def test_fabricated_and_unbound_receives_are_named(runs):
    fabrication = check_design_goals(
        runs["s7_fabrication"].trace, runs["s7_fabrication"].chain,
        properties=("dg1", "eq3"), k=2,
    )
    probe = fabrication["dg1"].witness["probe"]
    assert probe["tag"] == "RecvConsentResponse"
    assert probe["agent"] == "FP1"
    assert probe["origin"] == "device-unbound"
    assert fabrication["eq3"].witness["probe"]["tag"] == "RecvConsentResponse"
    assert isinstance(fabrication["eq3"].witness["counterexample"], list)

    unbound = check_design_goals(
        runs["s9_unbound_receive"].trace, runs["s9_unbound_receive"].chain,
        properties=("dg2",), k=2,
    )
    probe = unbound["dg2"].witness["probe"]
    assert probe["tag"] == "RecvSelfReportDataAccess"
    assert probe["agent"] == "U1"


def test_unlawful_report_is_pinned_to_its_failing_ground(runs):
    run = runs["s8_unlawful_access"]
    outcome = check_design_goals(run.trace, run.chain, properties=("dg4",), k=2)["dg4"]
    assert outcome.status == "violated"
    assert outcome.detail == "no granted consent response precedes the access"
    assert outcome.witness["report"]["tag"] == "SendSelfReportDataAccess"


def test_vacuity_carries_a_reason(runs):
    run = runs["s2_denied"]
    reports = check_design_goals(run.trace, run.chain, properties=PROPERTY_NAMES, k=2)
    assert reports["dg3"].detail == "no granted consent on the chain"
    assert reports["dg4"].detail == "no access reports in this family"
    assert reports["dg5"].detail == "no collection activity"
    assert reports["eq2"].detail == "nothing to check"


def test_backed_receives_resolve_without_enumeration(runs):
    # Every receive in the honest run finds its committed send in the view,
    # so the probes short-circuit and nothing is enumerated.
    clean = check_design_goals(
        runs["s1_happy_path"].trace, runs["s1_happy_path"].chain, properties=("dg2",), k=2
    )["dg2"]
    assert clean.status == "holds"
    assert not clean.vacuous
    assert clean.candidates == 0

    ghost = check_design_goals(
        runs["s9_unbound_receive"].trace, runs["s9_unbound_receive"].chain, properties=("dg2",), k=2
    )["dg2"]
    assert ghost.status == "violated"
    assert ghost.candidates >= 1
