"""
트랜잭션 원장 데이터 모델들
UTXO 트랜잭션, 데이터 출력, editTx, old_merkle_root 헤더
"""

from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, Field, validator

from ..core.hashcore import (
    DIGEST_SIZE, MAX_TARGET, Digest, decode_fields, encode_fields, hash_h, read_u64, u64,
)

MAX_DATA_BYTES = 80
EDIT_MAGIC = b"EDIT"
VOTE_MAGIC = b"VOTE"


class OutputKind(str, Enum):
    SPENDABLE = "spendable"
    DATA = "data"


_KIND_BYTE = {OutputKind.SPENDABLE: b"\x00", OutputKind.DATA: b"\x01"}
_BYTE_KIND = {v: k for k, v in _KIND_BYTE.items()}


class TxOutput(BaseModel):
    """출력: spendable은 검증 키, data는 OP_RETURN 같은 임의 바이트"""
    kind: OutputKind
    amount: int = Field(default=0, ge=0, lt=2 ** 64)
    script: bytes = Field(default=b"", description="검증 키 또는 데이터 페이로드")

    class Config:
        allow_mutation = False
        frozen = True

    @validator("amount")
    def _data_amount(cls, v, values):
        if values.get("kind") == OutputKind.DATA and v != 0:
            raise ValueError("데이터 출력의 금액은 0이어야 합니다")
        return v

    @property
    def is_data(self) -> bool:
        return self.kind == OutputKind.DATA

    @property
    def is_consensus_data(self) -> bool:
        """투표/editTx 기록: 편집 불가"""
        return self.is_data and self.script[:4] in (EDIT_MAGIC, VOTE_MAGIC)


class TxInput(BaseModel):
    prev_txid: bytes = Field(..., description="참조 트랜잭션 ID")
    output_index: int = Field(..., ge=0, lt=2 ** 64)
    witness: bytes = Field(default=b"", description="서명 (ID 계산에서 제외)")

    class Config:
        allow_mutation = False
        frozen = True


class Transaction(BaseModel):
    inputs: Tuple[TxInput, ...] = Field(default=())
    outputs: Tuple[TxOutput, ...] = Field(default=())
    is_coinbase: bool = False

    class Config:
        allow_mutation = False
        frozen = True

    def encode(self, with_witness: bool = True) -> bytes:
        parts = [b"\x01" if self.is_coinbase else b"\x00", u64(len(self.inputs))]
        for i in self.inputs:
            parts += [i.prev_txid, u64(i.output_index)]
            if with_witness:
                parts.append(i.witness)
        parts.append(u64(len(self.outputs)))
        for o in self.outputs:
            parts += [_KIND_BYTE[o.kind], u64(o.amount), o.script]
        return encode_fields(parts)

    @classmethod
    def decode(cls, data: bytes) -> "Transaction":
        """증인 포함 인코딩을 복원. 형식 오류는 ValueError"""
        parts = decode_fields(data)
        pos = 0

        def take() -> bytes:
            nonlocal pos
            if pos >= len(parts):
                raise ValueError("트랜잭션 인코딩이 잘렸습니다")
            pos += 1
            return parts[pos - 1]

        flag = take()
        if flag not in (b"\x00", b"\x01"):
            raise ValueError("코인베이스 플래그 오류")
        inputs = []
        for _ in range(read_u64(take())):
            inputs.append(TxInput(prev_txid=take(), output_index=read_u64(take()), witness=take()))
        outputs = []
        for _ in range(read_u64(take())):
            kind_byte = take()
            if kind_byte not in _BYTE_KIND:
                raise ValueError("출력 종류 오류")
            outputs.append(TxOutput(kind=_BYTE_KIND[kind_byte], amount=read_u64(take()), script=take()))
        if pos != len(parts):
            raise ValueError("트랜잭션 인코딩 뒤에 남는 바이트")
        return cls(inputs=tuple(inputs), outputs=tuple(outputs), is_coinbase=flag == b"\x01")

    def txid(self) -> Digest:
        """증인을 제외한 정규 인코딩의 H"""
        return hash_h((self.encode(with_witness=False),))

    @property
    def spendable_total(self) -> int:
        return sum(o.amount for o in self.outputs)

    def edit_pair(self) -> Optional[Tuple[Digest, Digest]]:
        """첫 번째 EDIT 데이터 출력의 (oldTxId, candTxId)"""
        if self.is_coinbase:
            return None
        for o in self.outputs:
            if o.is_data and o.script[:4] == EDIT_MAGIC and len(o.script) == 4 + 2 * DIGEST_SIZE:
                return o.script[4:36], o.script[36:68]
        return None

    def vote_tokens(self) -> Tuple[Digest, ...]:
        if not self.is_coinbase:
            return ()
        return tuple(o.script[4:] for o in self.outputs
                     if o.is_data and o.script[:4] == VOTE_MAGIC and len(o.script) == 4 + DIGEST_SIZE)


class BlockHeader(BaseModel):
    hash_prev: bytes
    merkle_root: bytes
    difficulty: int = Field(..., gt=0, le=MAX_TARGET)
    timestamp: int = Field(..., ge=0, description="라운드 번호")
    nonce: int = Field(..., ge=0, lt=2 ** 64)
    old_merkle_root: bytes = Field(..., description="편집 전 트랜잭션 머클 루트")

    class Config:
        allow_mutation = False
        frozen = True

    def pow_digest(self, root: Optional[bytes] = None) -> Digest:
        """PoW 다이제스트. root를 주면 merkle_root 대신 사용"""
        return hash_h((
            self.hash_prev,
            self.merkle_root if root is None else root,
            self.difficulty.to_bytes(DIGEST_SIZE, "big"),
            u64(self.timestamp),
            u64(self.nonce),
        ))

    def link_digest(self) -> Digest:
        """다음 블록의 hash_prev: 편집 전 루트로 계산"""
        return self.pow_digest(self.old_merkle_root)


class TxSlot(BaseModel):
    """블록 내 트랜잭션 자리. 편집된 자리는 원래 ID를 함께 보관"""
    tx: Transaction
    old_txid: Optional[bytes] = Field(default=None, description="편집된 경우 원래 트랜잭션 ID")

    class Config:
        allow_mutation = False
        frozen = True

    @property
    def is_redacted(self) -> bool:
        return self.old_txid is not None


class LedgerBlock(BaseModel):
    header: BlockHeader
    slots: Tuple[TxSlot, ...]

    class Config:
        allow_mutation = False
        frozen = True


class LedgerChain(BaseModel):
    blocks: Tuple[LedgerBlock, ...] = Field(default=())
    difficulty: int = Field(..., gt=0, le=MAX_TARGET)

    class Config:
        allow_mutation = False
        frozen = True

    def __len__(self) -> int:
        return len(self.blocks)

    def at(self, height: int) -> LedgerBlock:
        return self.blocks[height - 1]


class FundingInput(BaseModel):
    """editTx 수수료를 낼 UTXO"""
    prev_txid: bytes
    output_index: int = Field(..., ge=0)
    amount: int = Field(..., ge=0)

    class Config:
        allow_mutation = False
        frozen = True


class ViolationReason(str, Enum):
    GENESIS = "genesis"
    BAD_POW = "bad-pow"
    BAD_LINK = "bad-link"
    MERKLE_MISMATCH = "merkle-mismatch"
    UNAPPROVED_REDACTION = "unapproved-redaction"
    REDACTION_NOT_PERFORMED = "redaction-not-performed"
    BAD_COINBASE = "bad-coinbase"
    BAD_TRANSACTION = "bad-transaction"
    BAD_WITNESS = "bad-witness"
    DOUBLE_SPEND = "double-spend"


class LedgerViolation(BaseModel):
    height: int
    reason: ViolationReason
    detail: str = ""

    class Config:
        allow_mutation = False
