# src/models/api_models.py
"""
검사 API / CLI 공용 요청·응답 모델
"""

from typing import List, Optional

from pydantic import BaseModel, Field

from .sim_models import AdversarySpec, CheckReport, SimConfig


class PolicyOverrides(BaseModel):
    """비어 있으면 설정(get_settings) 값 사용"""
    k: Optional[int] = Field(default=None, ge=1, description="확정 깊이")
    ell: Optional[int] = Field(default=None, ge=1, description="투표 기간")
    rho: Optional[float] = Field(default=None, gt=0, le=1, description="승인 비율")


class ValidationOutcome(BaseModel):
    valid: bool
    mode: str
    length: int
    first_invalid_height: Optional[int] = Field(default=None, description="처음 실패한 높이")
    reason: Optional[str] = Field(default=None, description="원장 체인 위반 사유")
    validator: str = "redactable"


class VoteStatus(BaseModel):
    verdict: str = Field(..., description="accept | reject | voting")
    first_vote: Optional[int] = Field(default=None, description="투표 창 시작 높이")
    edit_height: Optional[int] = Field(default=None, description="원장 모드 editTx 높이")
    window: Optional[List[int]] = None
    votes_in_window: int = 0
    required_votes: int


class ChainValidateRequest(PolicyOverrides):
    dump: str = Field(..., description="체인 덤프 (JSON Lines 텍스트)")
    immutable: bool = Field(default=False, description="불변 프로토콜 규칙으로 검증")

    class Config:
        schema_extra = {
            "example": {
                "dump": "{\"difficulty_hex\":\"...\",\"genesis_digest_hex\":\"...\",\"mode\":\"single\"}\n...",
                "k": 6,
                "ell": 5,
                "rho": 0.6,
            }
        }


class VoteStatusRequest(PolicyOverrides):
    dump: str = Field(..., description="체인 덤프 (JSON Lines 텍스트)")
    token_hex: str = Field(..., min_length=64, max_length=64, description="투표 토큰")


class VerifyClaimRequest(BaseModel):
    dump: str = Field(..., description="원장 체인 덤프")
    height: int = Field(..., ge=1)
    tx_index: int = Field(..., ge=0)
    claimed_tx_hex: str = Field(..., description="원본 트랜잭션 인코딩 (hex)")


class VerifyClaimResponse(BaseModel):
    verified: bool
    height: int
    tx_index: int


class SimulationRunRequest(BaseModel):
    config: SimConfig = Field(default_factory=SimConfig)
    adversary: AdversarySpec = Field(default_factory=AdversarySpec.honest)


class SimulationRunResponse(BaseModel):
    rounds: int
    final_lengths: List[int] = Field(default_factory=list, description="정직 노드의 최종 체인 길이")
    checks: List[CheckReport] = Field(default_factory=list)


class AttackRequest(BaseModel):
    scenario: str = Field(..., description="공격 시나리오 이름")
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2], max_items=20)
