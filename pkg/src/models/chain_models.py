"""
체인 관련 데이터 모델들
블록, 체인, 후보 블록, 정책 파라미터
"""

import math
from enum import Enum
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, Field, validator

from ..core.hashcore import (
    DIGEST_SIZE, MAX_TARGET, ZERO_DIGEST, Digest,
    decode_fields, encode_fields, hash_g, hash_h, read_u64, u64,
)


class ChainMode(str, Enum):
    """체인 검증 모드"""
    SINGLE = "single"
    EXT = "ext"
    LEDGER = "ledger"


class PolicyVerdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    VOTING = "voting"


class BlockPayload(BaseModel):
    """블록 데이터 x: 애플리케이션 항목과 후보 블록 투표"""
    entries: Tuple[bytes, ...] = Field(default=(), description="불투명 데이터 항목")
    votes: Tuple[bytes, ...] = Field(default=(), description="후보 블록 투표 토큰 (각 32바이트)")

    class Config:
        allow_mutation = False
        frozen = True

    def encode(self) -> bytes:
        return encode_fields((u64(len(self.entries)),) + self.entries + (u64(len(self.votes)),) + self.votes)

    @classmethod
    def decode(cls, data: bytes) -> "BlockPayload":
        parts = decode_fields(data)
        if not parts:
            raise ValueError("빈 페이로드 인코딩")
        n_entries = read_u64(parts[0])
        if len(parts) < n_entries + 2:
            raise ValueError("페이로드 항목 수 불일치")
        entries = tuple(parts[1:1 + n_entries])
        n_votes = read_u64(parts[1 + n_entries])
        votes = tuple(parts[2 + n_entries:])
        if len(votes) != n_votes:
            raise ValueError("투표 수 불일치")
        return cls.construct(entries=entries, votes=votes)

    def is_well_formed(self) -> bool:
        return all(len(v) == DIGEST_SIZE for v in self.votes)


class Block(BaseModel):
    """블록 ⟨s, x, ctr, y⟩. y는 이전 상태 세그먼트 목록"""
    s: bytes = Field(..., description="이전 블록 링크")
    x: BlockPayload = Field(..., description="블록 데이터")
    ctr: int = Field(..., description="PoW 카운터 (64비트)", ge=0, lt=2 ** 64)
    y: Tuple[bytes, ...] = Field(..., description="이전 상태 y^(1)..y^(l)")

    class Config:
        allow_mutation = False
        frozen = True

    @validator("y")
    def _y_min_items(cls, v):
        if len(v) < 1:
            raise ValueError("ensure this value has at least 1 items")
        return v

    def data_digest(self) -> Digest:
        """G(s, x)"""
        return hash_g((self.s, self.x.encode()))

    @property
    def y_concat(self) -> bytes:
        return b"".join(self.y)

    @property
    def original_state(self) -> Digest:
        return self.y[0]

    def digest(self, data_digest: Optional[Digest] = None) -> Digest:
        """H(ctr, G(s, x), y). 후보 블록의 투표 토큰이기도 함"""
        g = self.data_digest() if data_digest is None else data_digest
        return hash_h((u64(self.ctr), g, self.y_concat))

    def old_link(self) -> Digest:
        """H(ctr, y^(1), y^(1)): 편집 이후에도 유지되는 원래 링크"""
        y1 = self.y[0]
        return hash_h((u64(self.ctr), y1, y1))

    def is_redacted(self, data_digest: Optional[Digest] = None) -> bool:
        g = self.data_digest() if data_digest is None else data_digest
        return len(self.y) != 1 or self.y[0] != g


class GenesisConfig(BaseModel):
    payload: BlockPayload = Field(default_factory=lambda: BlockPayload(entries=(b"genesis",)))

    class Config:
        allow_mutation = False

    def block(self) -> Block:
        g = hash_g((ZERO_DIGEST, self.payload.encode()))
        return Block(s=ZERO_DIGEST, x=self.payload, ctr=0, y=(g,))


class Chain(BaseModel):
    """블록 체인. blocks[0]이 높이 1의 제네시스"""
    blocks: Tuple[Block, ...] = Field(default=(), description="블록 목록")
    difficulty: int = Field(..., description="256비트 난이도 목표값", gt=0, le=MAX_TARGET)
    mode: ChainMode = Field(default=ChainMode.SINGLE)

    class Config:
        allow_mutation = False
        frozen = True

    def __len__(self) -> int:
        return len(self.blocks)

    def at(self, height: int) -> Block:
        """1부터 시작하는 높이로 블록 조회"""
        return self.blocks[height - 1]

    @property
    def height(self) -> int:
        return len(self.blocks)


class CandidateBlock(BaseModel):
    """편집 후보 블록 B⋆"""
    target_index: int = Field(..., description="대상 블록 높이 j", ge=1)
    block: Block

    class Config:
        allow_mutation = False
        frozen = True

    def digest(self) -> Digest:
        return self.block.digest()


class PolicyParams(BaseModel):
    """편집 정책 (k, ℓ, ρ)"""
    k: int = Field(..., ge=1, description="확정 깊이")
    ell: int = Field(..., ge=1, description="투표 기간")
    rho: float = Field(..., gt=0, le=1, description="승인 비율")

    class Config:
        allow_mutation = False
        frozen = True

    @property
    def required_votes(self) -> int:
        # 부동소수점 오차로 3.0000000001이 4가 되지 않도록
        return max(1, math.ceil(self.rho * self.ell - 1e-9))

    @classmethod
    def majority(cls, k: int, ell: int) -> "PolicyParams":
        """ρ = (⌊ℓ/2⌋+1)/ℓ"""
        return cls(k=k, ell=ell, rho=(ell // 2 + 1) / ell)


class CandidatePool(BaseModel):
    """후보 블록 풀 R: 후보 다이제스트 → 후보"""
    entries: Dict[bytes, CandidateBlock] = Field(default_factory=dict)

    class Config:
        allow_mutation = False

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, digest: bytes) -> bool:
        return digest in self.entries


class CandidateAnnouncement(BaseModel):
    """후보 브로드캐스트 메시지 (시뮬레이터 와이어 형식)"""
    target_index: int = Field(..., ge=1)
    payload_entries_hex: Tuple[str, ...] = Field(default=())
    declared_digest_hex: str

    class Config:
        allow_mutation = False
        frozen = True

    @validator("declared_digest_hex")
    def _digest_hex(cls, v):
        if len(bytes.fromhex(v)) != DIGEST_SIZE:
            raise ValueError("다이제스트 길이 오류")
        return v
