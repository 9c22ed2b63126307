# src/services/ledger_service.py
"""
결정적 체인 생성기
원장 체인(UTXO 트랜잭션 + editTx + 코인베이스 투표)과 범용 체인(항목 + 블록 투표)을
지정한 수의 승인된 편집과 함께 생성. 각 편집은 4바이트 더미 데이터를 제거
"""

from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from ..core.chain import append_block, mine_block, new_chain
from ..core.errors import SpecInvalid
from ..core.hashcore import MAX_TARGET, ZERO_DIGEST, hash_h, u64
from ..core.ledger import (
    Wallet, assemble_block, build_edit_tx, data_output, make_coinbase,
    redact_ledger_block, strip_data, vote_token, vote_token_for,
)
from ..core.redaction import RatioPolicy, apply_redaction, candidate_digest, propose_edit
from ..models.chain_models import BlockPayload, Chain, ChainMode, PolicyParams
from ..models.ledger_models import (
    FundingInput, LedgerBlock, LedgerChain, OutputKind, Transaction, TxInput, TxOutput,
)

DUMMY_SIZE = 4


class RedactionRecord(BaseModel):
    """생성된 편집 하나: 대상 높이, (원장) 트랜잭션 위치, 투표 토큰"""
    height: int = Field(..., ge=2)
    tx_index: Optional[int] = Field(default=None, description="원장 모드에서 블록 내 위치")
    token_hex: str
    edit_height: Optional[int] = Field(default=None, description="원장 모드 editTx 높이")
    old_tx_hex: Optional[str] = Field(default=None, description="원장 모드 원본 트랜잭션 인코딩")


class BuildResult(BaseModel):
    chain: Union[LedgerChain, Chain]
    redactions: List[RedactionRecord] = Field(default_factory=list)

    class Config:
        arbitrary_types_allowed = True


def _dummy(height: int, i: int) -> bytes:
    return hash_h((b"dummy", u64(height), u64(i)))[:DUMMY_SIZE]


def eligible_targets(n_blocks: int, params: PolicyParams) -> List[int]:
    """
    편집 대상이 될 수 있는 높이
    editTx(또는 첫 투표)가 t+1, 투표 창 끝이 n-k 이하가 되어야 최종 체인에서 accept
    """
    last = n_blocks - 2 * params.k - params.ell - 1
    return list(range(2, last + 1))


def choose_targets(n_blocks: int, n_redactions: int, params: PolicyParams, seed: int) -> List[int]:
    if n_redactions < 0:
        raise SpecInvalid("편집 수는 0 이상이어야 합니다")
    eligible = eligible_targets(n_blocks, params)
    if n_redactions > len(eligible):
        raise SpecInvalid(f"편집 {n_redactions}개 요청, 가능한 대상 {len(eligible)}개 "
                          f"(블록 {n_blocks}, k={params.k}, ℓ={params.ell})")
    if n_redactions == 0:
        return []
    rng = np.random.default_rng(seed)
    return sorted(int(t) for t in rng.choice(eligible, size=n_redactions, replace=False))


class LedgerChainBuilder:
    """
    원장 체인 생성기
    - 제네시스 코인베이스가 tx_per_block개 출력으로 분배
    - 각 블록의 i번째 트랜잭션은 이전 블록 i번째 출력을 사용하고 4바이트 더미 데이터 출력을 가짐
    - 대상 t의 editTx는 t+1 블록에 들어가며 t 블록 코인베이스로 수수료 지불
    - 투표는 editTx가 k 깊이가 된 다음 블록부터 ⌈ρℓ⌉개 코인베이스에
    """

    def __init__(self, n_blocks: int, tx_per_block: int, n_redactions: int, params: PolicyParams,
                 seed: int = 0, difficulty: int = MAX_TARGET, subsidy: int = 5_000_000_000,
                 min_edit_fee: int = 10_000):
        if n_blocks < 2:
            raise SpecInvalid("블록 수는 2 이상이어야 합니다")
        if n_redactions > 0 and tx_per_block < 1:
            raise SpecInvalid("편집하려면 블록당 트랜잭션이 1개 이상 필요합니다")
        self.n_blocks = n_blocks
        self.tx_per_block = tx_per_block
        self.params = params
        self.seed = seed
        self.difficulty = difficulty
        self.subsidy = subsidy
        self.min_edit_fee = min_edit_fee
        self.wallet = Wallet(seed)
        self.targets = choose_targets(n_blocks, n_redactions, params, seed)

    def _genesis(self) -> LedgerBlock:
        fan_out = max(self.tx_per_block, 1)
        share = self.subsidy // fan_out
        coinbase = Transaction(
            inputs=(TxInput(prev_txid=ZERO_DIGEST, output_index=1),),
            outputs=tuple(TxOutput(kind=OutputKind.SPENDABLE, amount=share, script=self.wallet.public_key)
                          for _ in range(fan_out)),
            is_coinbase=True,
        )
        return assemble_block(None, [coinbase], self.difficulty, timestamp=0)

    def _regular_tx(self, height: int, i: int, prev_id: bytes, prev_index: int, amount: int) -> Transaction:
        unsigned = Transaction(
            inputs=(TxInput(prev_txid=prev_id, output_index=prev_index),),
            outputs=(
                TxOutput(kind=OutputKind.SPENDABLE, amount=amount, script=self.wallet.public_key),
                data_output(_dummy(height, i)),
            ),
        )
        return self.wallet.sign_transaction(unsigned)

    def build(self) -> BuildResult:
        blocks = [self._genesis()]
        genesis_tx = blocks[0].slots[0].tx
        genesis_id = genesis_tx.txid()
        # i번째 트랜잭션 계보의 (이전 txid, 출력 위치, 금액)
        lineage = [(genesis_id, i, genesis_tx.outputs[i].amount) for i in range(self.tx_per_block)]
        targets = set(self.targets)
        votes_at: Dict[int, List[bytes]] = {}
        pending_edit: Optional[Tuple[int, Transaction, Transaction, bytes, int]] = None
        edits: List[Tuple[int, Transaction, Transaction, int]] = []

        for h in range(2, self.n_blocks + 1):
            regular = []
            for i in range(self.tx_per_block):
                prev_id, prev_index, amount = lineage[i]
                tx = self._regular_tx(h, i, prev_id, prev_index, amount)
                regular.append(tx)
                lineage[i] = (tx.txid(), 0, amount)
            fees = 0
            extra: List[Transaction] = []
            if pending_edit is not None:
                t, old_tx, cand_tx, coinbase_id, coinbase_amount = pending_edit
                funding = FundingInput(prev_txid=coinbase_id, output_index=0, amount=coinbase_amount)
                edit_tx = build_edit_tx(old_tx, cand_tx, funding, self.min_edit_fee, self.min_edit_fee, self.wallet)
                fees += self.min_edit_fee
                extra.append(edit_tx)
                start = h + self.params.k + 1
                for v in range(start, start + self.params.required_votes):
                    votes_at.setdefault(v, []).append(vote_token(edit_tx))
                edits.append((t, old_tx, cand_tx, h))
                pending_edit = None
            coinbase = make_coinbase(h, self.subsidy + fees, self.wallet.public_key, votes_at.pop(h, ()))
            block = assemble_block(blocks[-1], [coinbase] + regular + extra, self.difficulty, timestamp=h,
                                   start_nonce=h)
            if block.header is None:
                raise SpecInvalid(f"높이 {h} 헤더를 찾지 못했습니다 (난이도가 너무 어렵습니다)")
            blocks.append(block)
            if h in targets:
                old_tx = regular[0]
                pending_edit = (h, old_tx, strip_data(old_tx, 1), coinbase.txid(), coinbase.spendable_total)

        records = []
        for t, old_tx, cand_tx, edit_height in edits:
            blocks[t - 1] = redact_ledger_block(blocks[t - 1], old_tx, cand_tx)
            token = vote_token_for(old_tx.txid(), cand_tx.txid())
            records.append(RedactionRecord(height=t, tx_index=1, token_hex=token.hex(), edit_height=edit_height,
                                           old_tx_hex=old_tx.encode().hex()))
        chain = LedgerChain(blocks=tuple(blocks), difficulty=self.difficulty)
        logger.info(f"✅ 원장 체인 생성: {self.n_blocks}개 블록, 블록당 {self.tx_per_block}개 tx, 편집 {len(records)}개")
        return BuildResult.construct(chain=chain, redactions=records)


class GenericChainBuilder:
    """
    범용 체인 생성기 (single/ext 모드)
    각 블록 항목 = tx_per_block개 항목 + 4바이트 더미, 편집 후보는 더미를 제거
    """

    def __init__(self, n_blocks: int, tx_per_block: int, n_redactions: int, params: PolicyParams,
                 seed: int = 0, difficulty: int = MAX_TARGET, mode: ChainMode = ChainMode.SINGLE):
        if n_blocks < 2:
            raise SpecInvalid("블록 수는 2 이상이어야 합니다")
        if mode == ChainMode.LEDGER:
            raise SpecInvalid("원장 모드는 LedgerChainBuilder를 사용해야 합니다")
        self.n_blocks = n_blocks
        self.tx_per_block = tx_per_block
        self.params = params
        self.seed = seed
        self.difficulty = difficulty
        self.mode = mode
        # 범용 모드는 editTx가 없으므로 첫 투표가 t+k+1
        self.targets = choose_targets(n_blocks + 1, n_redactions, params, seed)

    def build(self) -> BuildResult:
        chain = new_chain(self.difficulty, mode=self.mode)
        targets = set(self.targets)
        votes_at: Dict[int, List[bytes]] = {}
        planned: List[Tuple[int, BlockPayload, bytes]] = []
        for h in range(2, self.n_blocks + 1):
            entries = tuple(b"tx:%d:%d" % (h, i) for i in range(self.tx_per_block)) + (_dummy(h, 0),)
            payload = BlockPayload(entries=entries, votes=tuple(votes_at.pop(h, ())))
            block = mine_block(chain.blocks[-1], payload, self.difficulty, 2 ** 20, h)
            if block is None:
                raise SpecInvalid(f"높이 {h} 블록을 채굴하지 못했습니다 (난이도가 너무 어렵습니다)")
            chain = append_block(chain, block)
            if h in targets:
                new_payload = BlockPayload(entries=entries[:-1], votes=payload.votes)
                token = block.copy(update={"x": new_payload}).digest()
                start = h + self.params.k + 1
                for v in range(start, start + self.params.required_votes):
                    votes_at.setdefault(v, []).append(token)
                planned.append((h, new_payload, token))

        policy = RatioPolicy(self.params)
        records = []
        for t, new_payload, token in planned:
            cand = propose_edit(chain, t, new_payload, self.params.k, self.mode)
            if candidate_digest(cand) != token:
                raise SpecInvalid(f"높이 {t} 후보 토큰이 계획과 다릅니다")
            chain = apply_redaction(chain, t, cand, policy)
            records.append(RedactionRecord(height=t, token_hex=token.hex()))
        logger.info(f"✅ 범용 체인 생성 ({self.mode.value}): {self.n_blocks}개 블록, 편집 {len(records)}개")
        return BuildResult.construct(chain=chain, redactions=records)


def build_chain(mode: ChainMode, n_blocks: int, tx_per_block: int, n_redactions: int,
                params: PolicyParams, seed: int = 0, difficulty: int = MAX_TARGET) -> BuildResult:
    if mode == ChainMode.LEDGER:
        return LedgerChainBuilder(n_blocks, tx_per_block, n_redactions, params, seed, difficulty).build()
    return GenericChainBuilder(n_blocks, tx_per_block, n_redactions, params, seed, difficulty, mode).build()
