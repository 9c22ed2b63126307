# tests/test_node.py

from typing import Optional

import pytest

from chain_helpers import drop_first, extend, signed_data_tx
from src.core.chain import append_block, mine_block, new_chain, replace_block, validate_chain, validate_for_mode
from src.core.errors import PolicyNotAccepted, TargetNotStable
from src.core.hashcore import MAX_TARGET
from src.core.ledger import LedgerEditPolicy, Wallet, build_edit_tx, ledger_payload_check, strip_data
from src.core.redaction import RatioPolicy, announce, apply_redaction, propose_edit
from src.models.chain_models import BlockPayload, Chain, ChainMode
from src.models.ledger_models import FundingInput, Transaction
from src.models.sim_models import MessageKind, RoundInput
from src.services.chain_service import validate_any
from src.services.node_service import (
    ValidationCache, default_validator, new_node_state, removes_data, step_round, submit_edit_proposal,
)

WALLET = Wallet(3)


def _node(chain: Chain, params):
    return new_node_state(0, chain, params, miner_seed=1)


def _ledger_tx(height: int) -> Transaction:
    return signed_data_tx(WALLET, height, b"note:%d" % height, amount=10)


def _ledger_chain(n: int, extra=None, votes=None, base: Optional[Chain] = None) -> Chain:
    """원장 모드 범용 체인: 블록마다 트랜잭션 하나, extra[h]는 추가 항목, votes[h]는 투표"""
    extra = extra or {}
    votes = votes or {}
    c = base if base is not None else new_chain(MAX_TARGET, mode=ChainMode.LEDGER)
    for h in range(len(c.blocks) + 1, n + 1):
        entries = (_ledger_tx(h).encode(),) + tuple(extra.get(h, ()))
        c = append_block(c, mine_block(c.blocks[-1], BlockPayload(entries=entries, votes=tuple(votes.get(h, ()))),
                                          MAX_TARGET, 1, h))
    return c


class TestStepRound:
    def test_mines_and_broadcasts(self, params):
        state = _node(new_chain(MAX_TARGET), params)
        state, out = step_round(state, RoundInput(environment_txs=(b"tx-1",)), MAX_TARGET, 1, round_no=1)
        assert len(state.chain) == 2
        assert state.chain.at(2).x.entries == (b"tx-1",)
        assert [m.kind for m in out] == [MessageKind.CHAIN]
        assert state.last_events.mined is not None
        assert state.mempool == ()

    def test_failed_mining_keeps_mempool(self, params):
        state = _node(new_chain(MAX_TARGET), params)
        state, out = step_round(state, RoundInput(environment_txs=(b"tx-1",)), 1, 3, round_no=1)
        assert len(state.chain) == 1 and out == []
        assert state.mempool == (b"tx-1",)

    def test_adopts_longer_valid_chain(self, params):
        state = _node(new_chain(MAX_TARGET), params)
        longer = extend(new_chain(MAX_TARGET), 4)
        state, _ = step_round(state, RoundInput(chains=(longer,)), 1, 1)
        assert state.chain == longer and state.last_events.adopted

    def test_keeps_first_seen_on_equal_length(self, params):
        mine = extend(new_chain(MAX_TARGET), 2)
        rival = extend(new_chain(MAX_TARGET), 2, votes=[(b"\x01" * 32,)])
        state = _node(mine, params)
        state, _ = step_round(state, RoundInput(chains=(rival,)), 1, 1)
        assert state.chain == mine and not state.last_events.adopted

    def test_ignores_invalid_longer_chain(self, params):
        longer = extend(new_chain(MAX_TARGET), 4)
        broken = replace_block(longer, 3, longer.at(3).copy(update={"s": bytes(32)}))
        state = _node(new_chain(MAX_TARGET), params)
        state, _ = step_round(state, RoundInput(chains=(broken,)), 1, 1)
        assert len(state.chain) == 1

    def test_discards_mismatched_announcement(self, params):
        c = extend(new_chain(MAX_TARGET), 11)
        msg = announce(propose_edit(c, 4, drop_first(c, 4), params.k))
        forged = msg.copy(update={"declared_digest_hex": "00" * 32})
        state, _ = step_round(_node(c, params), RoundInput(candidates=(forged,)), 1, 1)
        assert state.last_events.discarded_candidates == 1
        assert len(state.pool) == 0


class TestEditLifecycle:
    def test_proposal_is_voted_and_applied(self, params):
        c = extend(new_chain(MAX_TARGET), 11)
        state = _node(c, params)
        state, msg = submit_edit_proposal(state, 4, drop_first(c, 4))
        assert msg.kind == MessageKind.CANDIDATE and msg.candidate.target_index == 4
        token = bytes.fromhex(msg.candidate.declared_digest_hex)
        assert token in state.pool

        for r in range(1, 9):
            state, _ = step_round(state, RoundInput(), MAX_TARGET, 1, round_no=r)
            if state.last_events.applied:
                break
        assert [h for h, _ in state.last_events.applied] == [4]
        assert state.chain.at(4).is_redacted()
        assert token in state.chain.at(len(c) + 1).x.votes
        assert len(state.pool) == 0
        assert validate_chain(state.chain, RatioPolicy(params))

    def test_received_announcement_joins_pool(self, params):
        c = extend(new_chain(MAX_TARGET), 11)
        _, msg = submit_edit_proposal(_node(c, params), 4, drop_first(c, 4))
        peer = new_node_state(1, c, params, miner_seed=2)
        peer, _ = step_round(peer, RoundInput(candidates=(msg.candidate,)), MAX_TARGET, 1)
        assert len(peer.pool) == 1
        assert bytes.fromhex(msg.candidate.declared_digest_hex) in peer.chain.at(len(c) + 1).x.votes

    def test_unstable_target_rejected(self, params):
        c = extend(new_chain(MAX_TARGET), 11)
        with pytest.raises(TargetNotStable):
            submit_edit_proposal(_node(c, params), 11, drop_first(c, 11))

    def test_endorsement_requires_removal(self, params):
        c = extend(new_chain(MAX_TARGET), 11)
        removal = propose_edit(c, 4, drop_first(c, 4), params.k)
        rewrite = propose_edit(c, 4, BlockPayload(entries=(b"other",) + c.at(4).x.entries[1:]), params.k)
        assert removes_data(c, removal)
        assert not removes_data(c, rewrite)


class TestLedgerAdmission:
    def _proposal(self, c: Chain):
        old = Transaction.decode(c.at(4).x.entries[0])
        return BlockPayload(entries=(strip_data(old, 1).encode(),))

    def test_proposal_without_edit_tx_is_spam(self, params):
        c = _ledger_chain(12)
        state = _node(c, params)
        new_state, msg = submit_edit_proposal(state, 4, self._proposal(c))
        assert msg is None and len(new_state.pool) == 0

    def test_proposal_with_deep_edit_tx_admitted(self, params):
        old = _ledger_tx(4)
        funding = FundingInput(prev_txid=b"\x09" * 32, output_index=0, amount=20_000)
        edit = build_edit_tx(old, strip_data(old, 1), funding, 10_000, 10_000, WALLET)
        c = _ledger_chain(12, extra={5: (edit.encode(),)})
        state, msg = submit_edit_proposal(_node(c, params), 4, self._proposal(c))
        assert msg is not None and len(state.pool) == 1


class TestLedgerEditPolicy:
    """원장 모드 체인 검증은 투표 수와 함께 k 깊이 editTx를 요구"""

    def _voted(self, params, extra=None, tail=()):
        old = _ledger_tx(4)
        c = _ledger_chain(12, extra)
        cand = propose_edit(c, 4, BlockPayload(entries=(strip_data(old, 1).encode(),)), params.k, ChainMode.LEDGER)
        n = 12 + params.ell + params.k
        votes = {h: (cand.digest(),) for h in range(13, 13 + params.required_votes)}
        c = _ledger_chain(n, extra={n: tail}, votes=votes, base=c)
        return c, cand

    def _edit_tx(self):
        old = _ledger_tx(4)
        funding = FundingInput(prev_txid=b"\x09" * 32, output_index=0, amount=20_000)
        return build_edit_tx(old, strip_data(old, 1), funding, 10_000, 10_000, WALLET)

    def test_voted_redaction_without_edit_tx_rejected(self, params):
        c, cand = self._voted(params)
        redacted = replace_block(c, 4, cand.block)
        assert validate_for_mode(redacted, RatioPolicy(params), ledger_payload_check) is None
        assert validate_for_mode(redacted, LedgerEditPolicy(params), ledger_payload_check) == 4
        assert not default_validator(_node(c, params))(redacted)
        with pytest.raises(PolicyNotAccepted):
            apply_redaction(c, 4, cand, LedgerEditPolicy(params), ledger_payload_check)
        outcome = validate_any(redacted, params, subsidy=0)
        assert not outcome.valid and outcome.first_invalid_height == 4

    def test_voted_redaction_with_deep_edit_tx_accepted(self, params):
        c, cand = self._voted(params, extra={5: (self._edit_tx().encode(),)})
        redacted = apply_redaction(c, 4, cand, LedgerEditPolicy(params), ledger_payload_check)
        assert validate_for_mode(redacted, LedgerEditPolicy(params), ledger_payload_check) is None
        assert default_validator(_node(c, params))(redacted)

    def test_edit_tx_too_recent_rejected(self, params):
        c, cand = self._voted(params, tail=(self._edit_tx().encode(),))
        assert not LedgerEditPolicy(params).edit_requests_cover(c, cand)
        redacted = replace_block(c, 4, cand.block)
        assert validate_for_mode(redacted, LedgerEditPolicy(params), ledger_payload_check) == 4


class TestValidationCache:
    def test_caches_per_chain_object(self):
        calls = []

        def validator(c):
            calls.append(c)
            return True

        cache = ValidationCache(validator)
        c = extend(new_chain(MAX_TARGET), 2)
        assert cache(c) and cache(c)
        assert len(calls) == 1
