# src/services/chain_service.py
"""
체인 덤프 검사: 검증, 투표 상태, 피해자 주장 확인
CLI와 HTTP API가 공유
"""

from typing import Optional, Union

from loguru import logger

from ..core.chain import validate_chain_immutable, validate_for_mode
from ..core.config import get_settings
from ..core.errors import SpecInvalid
from ..core.ledger import EditRegistry, LedgerRatioPolicy, find_ledger_violation, verify_victim_claim, vote_token_for
from ..core.redaction import RatioPolicy, VoteIndex
from ..models.api_models import PolicyOverrides, ValidationOutcome, VoteStatus
from ..models.chain_models import Chain, ChainMode, PolicyParams, PolicyVerdict
from ..models.ledger_models import LedgerChain
from .node_service import payload_validator_for, policy_for

AnyChain = Union[Chain, LedgerChain]


def resolve_params(overrides: Optional[PolicyOverrides] = None) -> PolicyParams:
    """요청 값이 없는 항목은 설정 기본값"""
    settings = get_settings()
    o = overrides or PolicyOverrides()
    return PolicyParams(
        k=o.k if o.k is not None else settings.k,
        ell=o.ell if o.ell is not None else settings.ell,
        rho=o.rho if o.rho is not None else settings.rho,
    )


def validate_any(chain: AnyChain, params: PolicyParams, subsidy: int, immutable: bool = False) -> ValidationOutcome:
    """
    🔍 모드에 맞는 검증기로 체인 전체 검증
    범용 체인은 처음 실패한 높이, 원장 체인은 위반 사유까지 보고
    """
    validator = "immutable" if immutable else "redactable"
    n = len(chain.blocks)
    if isinstance(chain, LedgerChain):
        violation = find_ledger_violation(chain, params, subsidy, redactable=not immutable)
        outcome = ValidationOutcome(
            valid=violation is None, mode=ChainMode.LEDGER.value, length=n, validator=validator,
            first_invalid_height=violation.height if violation else None,
            reason=violation.reason.value if violation else None,
        )
    elif immutable:
        ok = validate_chain_immutable(chain)
        outcome = ValidationOutcome(valid=ok, mode=chain.mode.value, length=n, validator=validator,
                                    reason=None if ok else "immutable-rules")
    else:
        height = validate_for_mode(chain, policy_for(chain.mode, params), payload_validator_for(chain.mode))
        outcome = ValidationOutcome(valid=height is None, mode=chain.mode.value, length=n,
                                    first_invalid_height=height, validator=validator)
    if outcome.valid:
        logger.info(f"✅ 체인 검증 통과 ({outcome.mode}, {n}개 블록)")
    else:
        logger.info(f"❌ 체인 검증 실패: 높이 {outcome.first_invalid_height} {outcome.reason or ''}".rstrip())
    return outcome


def _ledger_vote_status(chain: LedgerChain, token: bytes, params: PolicyParams) -> VoteStatus:
    registry = EditRegistry.scan(chain)
    policy = LedgerRatioPolicy(params)
    for (old_id, cand_id), edit_height in registry.requests.items():
        if vote_token_for(old_id, cand_id) != token:
            continue
        start, end = policy.window(edit_height)
        return VoteStatus(
            verdict=policy.verdict(registry, old_id, cand_id, len(chain.blocks)).value,
            first_vote=start,
            edit_height=edit_height,
            window=[start, end],
            votes_in_window=registry.votes.count_between(token, start, end),
            required_votes=params.required_votes,
        )
    return VoteStatus(verdict=PolicyVerdict.VOTING.value, required_votes=params.required_votes)


def vote_status(chain: AnyChain, token: bytes, params: PolicyParams) -> VoteStatus:
    """🗳️ 토큰의 투표 창과 판정"""
    if len(token) != 32:
        raise SpecInvalid("투표 토큰은 32바이트여야 합니다")
    if isinstance(chain, LedgerChain):
        return _ledger_vote_status(chain, token, params)
    index = VoteIndex.from_chain(chain)
    first = index.first_height(token)
    if first is None:
        return VoteStatus(verdict=PolicyVerdict.VOTING.value, required_votes=params.required_votes)
    end = first + params.ell - 1
    return VoteStatus(
        verdict=RatioPolicy(params).evaluate_token(chain, token, index).value,
        first_vote=first,
        window=[first, end],
        votes_in_window=index.count_between(token, first, end),
        required_votes=params.required_votes,
    )


def verify_claim(chain: AnyChain, height: int, tx_index: int, claimed_tx: bytes) -> bool:
    if not isinstance(chain, LedgerChain):
        raise SpecInvalid("피해자 주장 확인은 원장 체인에서만 가능합니다")
    ok = verify_victim_claim(claimed_tx, (height, tx_index), chain)
    logger.info(f"{'✅' if ok else '❌'} 피해자 주장 ({height}, {tx_index}): {'일치' if ok else '불일치'}")
    return ok
