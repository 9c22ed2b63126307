# src/api/chain.py
"""
체인 덤프 검사 API 라우터
덤프 텍스트를 받아 검증, 투표 상태, 피해자 주장 확인
"""

from fastapi import APIRouter, HTTPException, status
from loguru import logger

from ..core.config import get_settings
from ..core.dump import parse_any_dump
from ..core.errors import RedactableChainError
from ..models.api_models import (
    ChainValidateRequest, ValidationOutcome, VerifyClaimRequest, VerifyClaimResponse, VoteStatus,
    VoteStatusRequest,
)
from ..services.chain_service import resolve_params, validate_any, verify_claim, vote_status

router = APIRouter()


def _bad_request(e: Exception) -> HTTPException:
    return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"{type(e).__name__}: {e}")


@router.post("/validate", response_model=ValidationOutcome)
async def validate_chain_dump(request: ChainValidateRequest):
    """
    🔍 체인 덤프 전체 검증

    - single/ext/ledger 모드를 덤프 헤더로 판별
    - 실패하면 처음 실패한 높이 (원장은 위반 사유 포함)
    """
    try:
        chain = parse_any_dump(request.dump)
        return validate_any(chain, resolve_params(request), get_settings().subsidy, immutable=request.immutable)
    except RedactableChainError as e:
        logger.warning(f"⚠️ 검증 요청 거부: {e}")
        raise _bad_request(e)
    except Exception as e:
        logger.error(f"❌ 체인 검증 실패: {e}")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
                            detail=f"체인 검증 중 오류가 발생했습니다: {str(e)}")


@router.post("/vote-status", response_model=VoteStatus)
async def get_vote_status(request: VoteStatusRequest):
    """🗳️ 투표 토큰의 창, 득표 수, 판정"""
    try:
        chain = parse_any_dump(request.dump)
        return vote_status(chain, bytes.fromhex(request.token_hex), resolve_params(request))
    except (RedactableChainError, ValueError) as e:
        logger.warning(f"⚠️ 투표 상태 요청 거부: {e}")
        raise _bad_request(e)
    except Exception as e:
        logger.error(f"❌ 투표 상태 조회 실패: {e}")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
                            detail=f"투표 상태 조회 중 오류가 발생했습니다: {str(e)}")


@router.post("/verify-claim", response_model=VerifyClaimResponse)
async def verify_victim_claim(request: VerifyClaimRequest):
    """🕵️ 편집된 자리의 원본 트랜잭션 주장 확인"""
    try:
        chain = parse_any_dump(request.dump)
        ok = verify_claim(chain, request.height, request.tx_index, bytes.fromhex(request.claimed_tx_hex))
        return VerifyClaimResponse(verified=ok, height=request.height, tx_index=request.tx_index)
    except (RedactableChainError, ValueError) as e:
        logger.warning(f"⚠️ 주장 확인 요청 거부: {e}")
        raise _bad_request(e)
    except Exception as e:
        logger.error(f"❌ 주장 확인 실패: {e}")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
                            detail=f"주장 확인 중 오류가 발생했습니다: {str(e)}")
