# tests/chain_helpers.py
"""테스트용 체인 조립 도우미"""

from typing import Optional, Sequence

from src.core.chain import append_block, mine_block
from src.core.ledger import Wallet, data_output
from src.models.chain_models import BlockPayload, CandidateBlock, Chain, PolicyParams
from src.models.ledger_models import OutputKind, Transaction, TxInput, TxOutput


def entries_for(height: int, count: int = 3) -> tuple:
    return tuple(b"e:%d:%d" % (height, i) for i in range(count))


def extend(c: Chain, blocks: int, votes: Sequence[Sequence[bytes]] = ()) -> Chain:
    """blocks개 블록을 채굴해 붙임. votes[i]는 i번째 새 블록에 넣을 투표"""
    for i in range(blocks):
        h = len(c.blocks) + 1
        block_votes = tuple(votes[i]) if i < len(votes) else ()
        payload = BlockPayload(entries=entries_for(h), votes=block_votes)
        block = mine_block(c.blocks[-1], payload, c.difficulty, 1 << 20, h)
        assert block is not None
        c = append_block(c, block)
    return c


def approve(c: Chain, cand: CandidateBlock, params: PolicyParams, n_votes: Optional[int] = None) -> Chain:
    """후보에 n_votes(기본: 필요 표 수)개 연속 투표 후 창이 k 깊이가 될 때까지 채굴"""
    n_votes = params.required_votes if n_votes is None else n_votes
    token = cand.digest()
    return extend(c, params.ell + params.k, [(token,)] * n_votes)


def drop_first(c: Chain, j: int) -> BlockPayload:
    original = c.at(j)
    return BlockPayload(entries=original.x.entries[1:], votes=original.x.votes)


def signed_data_tx(wallet: Wallet, tag: int, data: bytes = b"\x00" * 80, amount: int = 100) -> Transaction:
    """임의 입력 하나, spendable 출력 + 데이터 출력을 가진 서명된 트랜잭션"""
    unsigned = Transaction(
        inputs=(TxInput(prev_txid=bytes([tag]) * 32, output_index=0),),
        outputs=(TxOutput(kind=OutputKind.SPENDABLE, amount=amount, script=wallet.public_key), data_output(data)),
    )
    return wallet.sign_transaction(unsigned)
