# src/core/ledger.py
"""
UTXO 트랜잭션 원장 계층
머클 루트, editTx, old_merkle_root, 코인베이스 투표, 원장 편집 정책,
트랜잭션 일관성 검사, 피해자 책임 검증, 버전 간 이중 지불 연결
"""

from itertools import zip_longest
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat
from loguru import logger

from ..models.chain_models import BlockPayload, Chain, CandidateBlock, PolicyParams, PolicyVerdict
from ..models.ledger_models import (
    EDIT_MAGIC, MAX_DATA_BYTES, VOTE_MAGIC,
    BlockHeader, FundingInput, LedgerBlock, LedgerChain, LedgerViolation,
    OutputKind, Transaction, TxInput, TxOutput, TxSlot, ViolationReason,
)
from .errors import (
    AlreadySpent, CandidateMalformed, DataOutputUnspendable, EmptyLeaves, FeeTooLow,
    IndexOutOfRange, InsufficientFunds, NotARedactedSlot, TxNotFound, UnknownOutput,
)
from .hashcore import ZERO_DIGEST, Digest, hash_h, meets_target, u64
from .redaction import RatioPolicy, VoteIndex, window_verdict

OutPoint = Tuple[bytes, int]


# ---------------------------------------------------------------- 서명


class Wallet:
    """시드에서 결정적으로 만든 Ed25519 키"""

    def __init__(self, seed: Union[int, bytes]):
        seed_bytes = u64(seed) if isinstance(seed, int) else bytes(seed)
        self._key = Ed25519PrivateKey.from_private_bytes(hash_h((b"wallet-key", seed_bytes)))
        self.public_key = self._key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)

    def sign_transaction(self, tx: Transaction) -> Transaction:
        """모든 입력의 증인 = 증인 제외 txid에 대한 서명"""
        sig = self.sign(tx.txid())
        inputs = tuple(i.copy(update={"witness": sig}) for i in tx.inputs)
        return tx.copy(update={"inputs": inputs})


def verify_witness(public_key: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


# ---------------------------------------------------------------- 해시/머클


def tx_id_of(t: Transaction) -> Digest:
    return t.txid()


def merkle_root_of(leaves: Sequence[Digest]) -> Digest:
    """이진 머클 트리. 홀수 레벨은 마지막 노드를 복제"""
    if not leaves:
        raise EmptyLeaves("머클 트리 잎이 비어 있습니다")
    level = list(leaves)
    while len(level) > 1:
        level = [hash_h((l, r)) for l, r in zip_longest(level[::2], level[1::2], fillvalue=level[-1])]
    return level[0]


def slot_leaves(slots: Sequence[TxSlot], txids: Optional[Sequence[Digest]] = None) -> Tuple[List[Digest], List[Digest]]:
    """(현재 잎, 원래 잎). 편집된 자리의 현재 잎은 H(newId, oldId)"""
    txids = txids if txids is not None else [slot.tx.txid() for slot in slots]
    current, original = [], []
    for slot, txid in zip(slots, txids):
        if slot.old_txid is None:
            current.append(txid)
            original.append(txid)
        else:
            current.append(hash_h((txid, slot.old_txid)))
            original.append(slot.old_txid)
    return current, original


def vote_token_for(old_txid: Digest, cand_txid: Digest) -> Digest:
    return hash_h((old_txid, cand_txid))


def vote_token(edit_tx: Transaction) -> Digest:
    """H(oldTxId, candTxId): 코인베이스에 넣는 투표 토큰"""
    pair = edit_tx.edit_pair()
    if pair is None:
        raise CandidateMalformed("editTx가 아닙니다")
    return vote_token_for(*pair)


def data_output(payload: bytes) -> TxOutput:
    if len(payload) > MAX_DATA_BYTES:
        raise CandidateMalformed(f"데이터 출력은 {MAX_DATA_BYTES}바이트 이하여야 합니다")
    return TxOutput(kind=OutputKind.DATA, amount=0, script=payload)


def make_coinbase(height: int, reward: int, public_key: bytes, votes: Iterable[Digest] = ()) -> Transaction:
    """코인베이스: 입력은 (0, height), 출력은 보상 + VOTE 데이터 출력들"""
    outputs = [TxOutput(kind=OutputKind.SPENDABLE, amount=reward, script=public_key)]
    for token in dict.fromkeys(votes):
        outputs.append(TxOutput(kind=OutputKind.DATA, amount=0, script=VOTE_MAGIC + token))
    return Transaction(
        inputs=(TxInput(prev_txid=ZERO_DIGEST, output_index=height),),
        outputs=tuple(outputs),
        is_coinbase=True,
    )


# ---------------------------------------------------------------- 후보 트랜잭션


def _is_subsequence(short: bytes, long: bytes) -> bool:
    it = iter(long)
    return all(b in it for b in short)


def validate_candidate_tx(old_tx: Transaction, cand_tx: Transaction) -> bool:
    """
    후보는 원본과 같아야 하며 데이터 출력의 바이트를 지우는 것만 허용
    코인베이스, 투표, editTx 기록은 편집 불가
    """
    if old_tx.is_coinbase or cand_tx.is_coinbase:
        return False
    if any(o.is_consensus_data for o in old_tx.outputs):
        return False
    if old_tx.inputs != cand_tx.inputs or len(old_tx.outputs) != len(cand_tx.outputs):
        return False
    changed = False
    for old, new in zip(old_tx.outputs, cand_tx.outputs):
        if old.kind != new.kind or old.amount != new.amount:
            return False
        if old.kind == OutputKind.SPENDABLE:
            if old.script != new.script:
                return False
            continue
        if new.script == old.script:
            continue
        if new.is_consensus_data or len(new.script) >= len(old.script) \
                or not _is_subsequence(new.script, old.script):
            return False
        changed = True
    return changed


def strip_data(tx: Transaction, output_index: int, remove: Optional[bytes] = None) -> Transaction:
    """데이터 출력 하나를 비우거나(remove=None) 특정 바이트 조각을 제거한 후보"""
    outputs = list(tx.outputs)
    target = outputs[output_index]
    if not target.is_data:
        raise CandidateMalformed("데이터 출력만 편집할 수 있습니다")
    script = b"" if remove is None else target.script.replace(remove, b"", 1)
    outputs[output_index] = target.copy(update={"script": script})
    return tx.copy(update={"outputs": tuple(outputs)})


def build_edit_tx(old_tx: Transaction, cand_tx: Transaction, funding: FundingInput, fee: int,
                  min_edit_fee: int, wallet: Wallet) -> Transaction:
    """editTx: EDIT || oldTxId || candTxId 데이터 출력 + 잔돈"""
    if fee < min_edit_fee:
        raise FeeTooLow(f"editTx 수수료 {fee} < 최소 {min_edit_fee}")
    if not validate_candidate_tx(old_tx, cand_tx):
        raise CandidateMalformed("후보 트랜잭션이 원본과 일관되지 않습니다")
    if funding.amount < fee:
        raise InsufficientFunds(f"자금 {funding.amount} < 수수료 {fee}")
    outputs = [data_output(EDIT_MAGIC + old_tx.txid() + cand_tx.txid())]
    change = funding.amount - fee
    if change > 0:
        outputs.append(TxOutput(kind=OutputKind.SPENDABLE, amount=change, script=wallet.public_key))
    unsigned = Transaction(
        inputs=(TxInput(prev_txid=funding.prev_txid, output_index=funding.output_index),),
        outputs=tuple(outputs),
    )
    return wallet.sign_transaction(unsigned)


def apply_tx_redaction(slots: Sequence[TxSlot], old_tx: Transaction,
                       cand_tx: Transaction) -> Tuple[Tuple[TxSlot, ...], Digest]:
    """원본 트랜잭션을 후보로 교체하고 원래 ID를 함께 기록. 새 머클 루트 반환"""
    old_id = old_tx.txid()
    position = next((i for i, slot in enumerate(slots)
                     if slot.old_txid is None and slot.tx.txid() == old_id), None)
    if position is None:
        raise TxNotFound(f"트랜잭션 {old_id.hex()[:16]}을 찾을 수 없습니다")
    if not validate_candidate_tx(slots[position].tx, cand_tx):
        raise CandidateMalformed("후보 트랜잭션이 원본과 일관되지 않습니다")
    new_slots = tuple(slots[:position]) + (TxSlot(tx=cand_tx, old_txid=old_id),) + tuple(slots[position + 1:])
    current, _ = slot_leaves(new_slots)
    return new_slots, merkle_root_of(current)


def redact_ledger_block(block: LedgerBlock, old_tx: Transaction, cand_tx: Transaction) -> LedgerBlock:
    slots, root = apply_tx_redaction(block.slots, old_tx, cand_tx)
    header = block.header.copy(update={"merkle_root": root})
    return block.copy(update={"header": header, "slots": slots})


def locate_tx(chain: LedgerChain, txid: Digest) -> Tuple[int, int]:
    for h, block in enumerate(chain.blocks, start=1):
        for i, slot in enumerate(block.slots):
            if slot.tx.txid() == txid or slot.old_txid == txid:
                return h, i
    raise TxNotFound(f"트랜잭션 {txid.hex()[:16]}을 찾을 수 없습니다")


def apply_ledger_redaction(chain: LedgerChain, old_tx: Transaction, cand_tx: Transaction) -> LedgerChain:
    height, _ = locate_tx(chain, old_tx.txid())
    block = redact_ledger_block(chain.at(height), old_tx, cand_tx)
    blocks = chain.blocks[:height - 1] + (block,) + chain.blocks[height:]
    logger.info(f"✂️ 원장 편집 적용: 높이 {height}, tx {old_tx.txid().hex()[:16]}")
    return chain.copy(update={"blocks": blocks})


def verify_victim_claim(claimed_old_tx_bytes: bytes, slot: Tuple[int, int], chain: LedgerChain) -> bool:
    """피해자가 제시한 원본 트랜잭션 바이트를 보관된 oldTxId와 대조"""
    height, tx_index = slot
    if not 1 <= height <= len(chain.blocks):
        raise IndexOutOfRange(f"블록 높이 {height}가 범위를 벗어났습니다")
    block = chain.at(height)
    if not 0 <= tx_index < len(block.slots):
        raise IndexOutOfRange(f"트랜잭션 인덱스 {tx_index}가 범위를 벗어났습니다")
    stored = block.slots[tx_index].old_txid
    if stored is None:
        raise NotARedactedSlot(f"({height}, {tx_index})는 편집된 자리가 아닙니다")
    try:
        claimed = Transaction.decode(claimed_old_tx_bytes)
    except ValueError:
        return False
    return claimed.txid() == stored


# ---------------------------------------------------------------- UTXO


class UtxoSet:
    """
    (txId, index) → 출력
    편집된 트랜잭션은 원래 ID(정규 ID)로 보관하고 새 ID는 별칭으로 연결
    """

    def __init__(self):
        self._outputs: Dict[OutPoint, TxOutput] = {}
        self._spent: Set[OutPoint] = set()
        self._aliases: Dict[bytes, bytes] = {}

    def canonical(self, txid: bytes) -> bytes:
        return self._aliases.get(txid, txid)

    def add_transaction(self, txid: bytes, outputs: Sequence[TxOutput], old_txid: Optional[bytes] = None) -> None:
        key = old_txid if old_txid is not None else txid
        for i, out in enumerate(outputs):
            self._outputs[(key, i)] = out
        if old_txid is not None:
            self.link_lineage(old_txid, txid)

    def link_lineage(self, old_txid: bytes, new_txid: bytes) -> None:
        self._aliases[new_txid] = self.canonical(old_txid)

    def lookup(self, txid: bytes, index: int) -> TxOutput:
        key = (self.canonical(txid), index)
        if key not in self._outputs:
            raise UnknownOutput(f"출력 ({txid.hex()[:16]}, {index})가 없습니다")
        return self._outputs[key]

    def is_spendable(self, txid: bytes, index: int) -> bool:
        key = (self.canonical(txid), index)
        out = self._outputs.get(key)
        return out is not None and not out.is_data and key not in self._spent

    def register_spend(self, spend: OutPoint, spender: Optional[Transaction] = None) -> "UtxoSet":
        txid, index = spend
        out = self.lookup(txid, index)
        if out.is_data:
            raise DataOutputUnspendable(f"데이터 출력 ({txid.hex()[:16]}, {index})은 사용할 수 없습니다")
        key = (self.canonical(txid), index)
        if key in self._spent:
            raise AlreadySpent(f"출력 ({txid.hex()[:16]}, {index})은 이미 사용되었습니다")
        self._spent.add(key)
        return self

    def __len__(self) -> int:
        """사용 가능한(데이터가 아니고 아직 사용되지 않은) 출력 수"""
        return sum(1 for key, out in self._outputs.items() if not out.is_data and key not in self._spent)


def register_spend(utxo: UtxoSet, spend: OutPoint, spender: Optional[Transaction] = None) -> UtxoSet:
    """두 계보 별칭 모두에서 사용 처리 (하나의 경제적 출력)"""
    return utxo.register_spend(spend, spender)


# ---------------------------------------------------------------- 정책/레지스트리


class EditRegistry:
    """체인 사전 스캔: editTx 요청, 코인베이스 투표, 원본 트랜잭션 위치"""

    def __init__(self):
        self.requests: Dict[Tuple[bytes, bytes], int] = {}
        self.locations: Dict[bytes, Tuple[int, int]] = {}
        self.votes = VoteIndex({})

    @classmethod
    def scan(cls, chain: LedgerChain, txids: Optional[List[List[bytes]]] = None) -> "EditRegistry":
        registry = cls()
        vote_pairs = []
        for h, block in enumerate(chain.blocks, start=1):
            block_ids = txids[h - 1] if txids is not None else [s.tx.txid() for s in block.slots]
            for i, (slot, txid) in enumerate(zip(block.slots, block_ids)):
                registry.locations[slot.old_txid or txid] = (h, i)
                tx = slot.tx
                if tx.is_coinbase:
                    vote_pairs.extend((token, h) for token in tx.vote_tokens())
                    continue
                pair = tx.edit_pair()
                if pair is not None and pair not in registry.requests:
                    registry.requests[pair] = h
        registry.votes = VoteIndex.from_pairs(vote_pairs)
        return registry


class LedgerRatioPolicy:
    """
    원장 편집 정책
    editTx가 k 깊이가 된 다음 블록부터 ℓ개 블록 창에서 ⌈ρℓ⌉ 이상 코인베이스 투표
    """

    def __init__(self, params: PolicyParams):
        self.params = params

    def window(self, edit_height: int) -> Tuple[int, int]:
        start = edit_height + self.params.k + 1
        return start, start + self.params.ell - 1

    def verdict(self, registry: EditRegistry, old_txid: bytes, cand_txid: bytes, chain_length: int) -> PolicyVerdict:
        edit_height = registry.requests.get((old_txid, cand_txid))
        if edit_height is None:
            return PolicyVerdict.VOTING
        start, end = self.window(edit_height)
        token = vote_token_for(old_txid, cand_txid)
        votes = registry.votes.count_between(token, start, end)
        return window_verdict(start, votes, chain_length, self.params)


# ---------------------------------------------------------------- 블록/체인 검증


class LedgerContext:
    """블록 검증 문맥. registry가 없으면 불변 프로토콜로 검증"""

    def __init__(self, chain: LedgerChain, params: PolicyParams, subsidy: int,
                 registry: Optional[EditRegistry] = None):
        self.chain = chain
        self.policy = LedgerRatioPolicy(params)
        self.subsidy = subsidy
        self.registry = registry

    @property
    def redactable(self) -> bool:
        return self.registry is not None


def _violation(height: int, reason: ViolationReason, detail: str = "") -> LedgerViolation:
    logger.debug(f"❌ 높이 {height}: {reason.value} {detail}")
    return LedgerViolation(height=height, reason=reason, detail=detail)


def _oversized_data(tx: Transaction) -> bool:
    return any(o.is_data and len(o.script) > MAX_DATA_BYTES for o in tx.outputs)


def _check_transactions(block: LedgerBlock, height: int, txids: List[bytes],
                        utxo: UtxoSet, ctx: LedgerContext) -> Optional[LedgerViolation]:
    slots = block.slots
    if not slots or not slots[0].tx.is_coinbase or slots[0].is_redacted:
        return _violation(height, ViolationReason.BAD_COINBASE, "첫 트랜잭션은 코인베이스여야 합니다")
    coinbase = slots[0].tx
    if len(coinbase.inputs) != 1 or coinbase.inputs[0].prev_txid != ZERO_DIGEST \
            or coinbase.inputs[0].output_index != height:
        return _violation(height, ViolationReason.BAD_COINBASE, "코인베이스 입력 오류")
    if _oversized_data(coinbase):
        return _violation(height, ViolationReason.BAD_COINBASE, "코인베이스 데이터 출력 초과")
    fees = 0
    for i in range(1, len(slots)):
        slot, txid = slots[i], txids[i]
        tx = slot.tx
        if tx.is_coinbase or not tx.inputs:
            return _violation(height, ViolationReason.BAD_TRANSACTION, f"tx {i}")
        signing_id = slot.old_txid if slot.old_txid is not None else txid
        total_in = 0
        for inp in tx.inputs:
            try:
                out = utxo.lookup(inp.prev_txid, inp.output_index)
                utxo.register_spend((inp.prev_txid, inp.output_index), tx)
            except AlreadySpent as e:
                return _violation(height, ViolationReason.DOUBLE_SPEND, str(e))
            except (UnknownOutput, DataOutputUnspendable) as e:
                return _violation(height, ViolationReason.BAD_TRANSACTION, str(e))
            if not verify_witness(out.script, inp.witness, signing_id):
                return _violation(height, ViolationReason.BAD_WITNESS, f"tx {i}")
            total_in += out.amount
        if _oversized_data(tx):
            return _violation(height, ViolationReason.BAD_TRANSACTION, f"tx {i} 데이터 출력 초과")
        total_out = tx.spendable_total
        if total_out > total_in:
            return _violation(height, ViolationReason.BAD_TRANSACTION, f"tx {i} 출력 합계 초과")
        fees += total_in - total_out
        utxo.add_transaction(txid, tx.outputs, slot.old_txid)
    if coinbase.spendable_total > ctx.subsidy + fees:
        return _violation(height, ViolationReason.BAD_COINBASE, "코인베이스 보상 초과")
    utxo.add_transaction(txids[0], coinbase.outputs)
    return None


def _block_violation(block: LedgerBlock, height: int, prev: Optional[LedgerBlock],
                     utxo: UtxoSet, ctx: LedgerContext,
                     txids: Optional[List[bytes]] = None) -> Optional[LedgerViolation]:
    header = block.header
    if txids is None:
        txids = [slot.tx.txid() for slot in block.slots]
    if not txids:
        return _violation(height, ViolationReason.BAD_TRANSACTION, "빈 블록")
    redacted = [slot for slot in block.slots if slot.old_txid is not None]

    # (2) 머클 루트
    if redacted:
        if not ctx.redactable:
            return _violation(height, ViolationReason.UNAPPROVED_REDACTION, "불변 체인에 편집된 자리")
        current, original = slot_leaves(block.slots, txids)
        if merkle_root_of(current) != header.merkle_root or merkle_root_of(original) != header.old_merkle_root:
            return _violation(height, ViolationReason.MERKLE_MISMATCH)
    elif merkle_root_of(txids) != header.merkle_root or header.old_merkle_root != header.merkle_root:
        return _violation(height, ViolationReason.MERKLE_MISMATCH)

    if prev is None:
        if header.hash_prev != ZERO_DIGEST:
            return _violation(height, ViolationReason.GENESIS)
    else:
        if header.difficulty != ctx.chain.difficulty:
            return _violation(height, ViolationReason.BAD_POW, "난이도 불일치")
        if not meets_target(header.pow_digest(), header.difficulty) and not (
                redacted and meets_target(header.pow_digest(header.old_merkle_root), header.difficulty)):
            return _violation(height, ViolationReason.BAD_POW)
        prev_link = prev.header.link_digest() if ctx.redactable else prev.header.pow_digest()
        if header.hash_prev != prev_link:
            return _violation(height, ViolationReason.BAD_LINK)

    # (1) 승인되지 않은 편집
    for i, slot in enumerate(block.slots):
        if slot.old_txid is None:
            continue
        verdict = ctx.policy.verdict(ctx.registry, slot.old_txid, txids[i], len(ctx.chain.blocks))
        if verdict != PolicyVerdict.ACCEPT:
            return _violation(height, ViolationReason.UNAPPROVED_REDACTION, f"tx {i}: {verdict.value}")

    if prev is None:
        # 제네시스: 코인베이스 하나, 보상 검사만
        if len(block.slots) != 1 or not block.slots[0].tx.is_coinbase \
                or block.slots[0].tx.spendable_total > ctx.subsidy:
            return _violation(height, ViolationReason.GENESIS)
        utxo.add_transaction(txids[0], block.slots[0].tx.outputs)
        return None
    return _check_transactions(block, height, txids, utxo, ctx)


def validate_ledger_block(block: LedgerBlock, height: int, utxo: UtxoSet, ctx: LedgerContext) -> bool:
    """블록 하나 검증 후 UTXO 집합에 반영"""
    prev = ctx.chain.at(height - 1) if height > 1 else None
    return _block_violation(block, height, prev, utxo, ctx) is None


def _performed_violation(chain: LedgerChain, registry: EditRegistry,
                         policy: LedgerRatioPolicy) -> Optional[LedgerViolation]:
    """(3) 승인된 편집이 수행되지 않았으면 위반"""
    n = len(chain.blocks)
    for (old_id, cand_id), _ in registry.requests.items():
        location = registry.locations.get(old_id)
        if location is None:
            continue
        if policy.verdict(registry, old_id, cand_id, n) != PolicyVerdict.ACCEPT:
            continue
        h, i = location
        if chain.at(h).slots[i].old_txid is None:
            return _violation(h, ViolationReason.REDACTION_NOT_PERFORMED, f"tx {i}")
    return None


def find_ledger_violation(chain: LedgerChain, params: PolicyParams, subsidy: int,
                          redactable: bool = True) -> Optional[LedgerViolation]:
    """원장 체인 전체 검증. 첫 위반 또는 None"""
    if not chain.blocks:
        return LedgerViolation(height=1, reason=ViolationReason.GENESIS, detail="빈 체인")
    all_ids = [[slot.tx.txid() for slot in block.slots] for block in chain.blocks] if redactable else None
    registry = EditRegistry.scan(chain, all_ids) if redactable else None
    ctx = LedgerContext(chain, params, subsidy, registry)
    if registry is not None:
        violation = _performed_violation(chain, registry, ctx.policy)
        if violation is not None:
            return violation
    utxo = UtxoSet()
    prev = None
    for h, block in enumerate(chain.blocks, start=1):
        violation = _block_violation(block, h, prev, utxo, ctx, all_ids[h - 1] if all_ids else None)
        if violation is not None:
            return violation
        prev = block
    return None


def validate_ledger_chain(chain: LedgerChain, params: PolicyParams, subsidy: int) -> bool:
    return find_ledger_violation(chain, params, subsidy, redactable=True) is None


def validate_ledger_chain_immutable(chain: LedgerChain, params: PolicyParams, subsidy: int) -> bool:
    """불변 기준 검증기: 편집 레지스트리 없이 원래 규칙만"""
    return find_ledger_violation(chain, params, subsidy, redactable=False) is None


def mine_header(hash_prev: bytes, merkle_root: bytes, difficulty: int, timestamp: int,
                start_nonce: int = 0, max_attempts: int = 2 ** 32) -> Optional[BlockHeader]:
    """⛏️ 원장 헤더 nonce 탐색"""
    base = BlockHeader.construct(hash_prev=hash_prev, merkle_root=merkle_root, difficulty=difficulty,
                                 timestamp=timestamp, nonce=0, old_merkle_root=merkle_root)
    target_bytes = difficulty.to_bytes(32, "big")
    for attempt in range(max_attempts):
        nonce = (start_nonce + attempt) % 2 ** 64
        digest = hash_h((hash_prev, merkle_root, target_bytes, u64(timestamp), u64(nonce)))
        if meets_target(digest, difficulty):
            return base.copy(update={"nonce": nonce})
    return None


def assemble_block(prev: Optional[LedgerBlock], txs: Sequence[Transaction], difficulty: int,
                   timestamp: int, start_nonce: int = 0) -> LedgerBlock:
    slots = tuple(TxSlot.construct(tx=tx, old_txid=None) for tx in txs)
    root = merkle_root_of([tx.txid() for tx in txs])
    if prev is None:
        header = BlockHeader(hash_prev=ZERO_DIGEST, merkle_root=root, difficulty=difficulty,
                             timestamp=timestamp, nonce=0, old_merkle_root=root)
    else:
        header = mine_header(prev.header.link_digest(), root, difficulty, timestamp, start_nonce)
    return LedgerBlock.construct(header=header, slots=slots)


# ---------------------------------------------------------------- 범용 체인 연결


def ledger_payload_check(payload: BlockPayload) -> bool:
    """원장 모드 페이로드 검증: 모든 항목이 트랜잭션으로 복원되고 데이터 출력 ≤ 80바이트"""
    if not payload.is_well_formed():
        return False
    for entry in payload.entries:
        try:
            tx = Transaction.decode(entry)
        except ValueError:
            return False
        if not tx.is_coinbase and not tx.inputs:
            return False
        if _oversized_data(tx):
            return False
    return True


def edit_requests(c: Chain) -> Dict[Tuple[bytes, bytes], int]:
    """범용 체인 항목 중 editTx (old, cand) 쌍별 처음 나온 높이"""
    requests: Dict[Tuple[bytes, bytes], int] = {}
    for h, block in enumerate(c.blocks, start=1):
        for entry in block.x.entries:
            if EDIT_MAGIC not in entry:
                continue
            try:
                pair = Transaction.decode(entry).edit_pair()
            except ValueError:
                continue
            if pair is not None:
                requests.setdefault(pair, h)
    return requests


def edit_request_height(c: Chain, old_txid: bytes, cand_txid: bytes) -> Optional[int]:
    return edit_requests(c).get((old_txid, cand_txid))


def changed_entries(c: Chain, cand: CandidateBlock) -> Optional[List[Tuple[bytes, bytes]]]:
    original = c.at(cand.target_index).x.entries
    new = cand.block.x.entries
    if len(original) != len(new):
        return None
    return [(o, n) for o, n in zip(original, new) if o != n]


def ledger_admission_check(k: int):
    """후보 풀 입장 조건: 바뀐 모든 트랜잭션에 k 깊이 editTx가 있어야 함 (없으면 스팸)"""

    def check(c: Chain, cand: CandidateBlock) -> bool:
        pairs = changed_entries(c, cand)
        if not pairs:
            return False
        for old_bytes, new_bytes in pairs:
            try:
                old_id = Transaction.decode(old_bytes).txid()
                new_id = Transaction.decode(new_bytes).txid()
            except ValueError:
                return False
            h = edit_request_height(c, old_id, new_id)
            if h is None or h > len(c.blocks) - k:
                return False
        return True

    return check


def ledger_endorses(c: Chain, cand: CandidateBlock) -> bool:
    """정직한 원장 노드: 바뀐 모든 트랜잭션이 데이터만 제거했을 때만 투표"""
    pairs = changed_entries(c, cand)
    if not pairs:
        return False
    for old_bytes, new_bytes in pairs:
        try:
            if not validate_candidate_tx(Transaction.decode(old_bytes), Transaction.decode(new_bytes)):
                return False
        except ValueError:
            return False
    return True


class LedgerEditPolicy(RatioPolicy):
    """
    원장 모드 범용 체인의 편집 정책
    비율 투표에 더해 편집 블록의 후보 트랜잭션마다 k 깊이 editTx가 있어야 승인
    """

    def evaluate(self, c: Chain, cand: CandidateBlock, index: Optional[VoteIndex] = None) -> PolicyVerdict:
        verdict = super().evaluate(c, cand, index)
        if verdict != PolicyVerdict.ACCEPT:
            return verdict
        if not self.edit_requests_cover(c, cand):
            logger.debug(f"❌ 높이 {cand.target_index}: k 깊이 editTx 없는 편집")
            return PolicyVerdict.REJECT
        return verdict

    def edit_requests_cover(self, c: Chain, cand: CandidateBlock) -> bool:
        # 편집 후 블록에는 원본 트랜잭션이 없으므로 cand txid로 editTx를 찾음
        heights: Dict[bytes, int] = {}
        for (_, cand_txid), h in edit_requests(c).items():
            heights[cand_txid] = min(h, heights.get(cand_txid, h))
        limit = len(c.blocks) - self.params.k
        matched = []
        for entry in cand.block.x.entries:
            try:
                txid = Transaction.decode(entry).txid()
            except ValueError:
                return False
            if txid in heights:
                matched.append(heights[txid])
        return bool(matched) and all(h <= limit for h in matched)
