# src/core/redaction.py
"""
후보 블록 생명주기
편집 제안, 후보 검증, 투표 토큰, (k, ℓ, ρ) 정책, 후보 풀
"""

from bisect import bisect_left, bisect_right
from typing import Callable, Dict, Iterable, List, Optional, Protocol, Tuple

from loguru import logger

from ..models.chain_models import (
    Block, BlockPayload, CandidateAnnouncement, CandidateBlock, CandidatePool,
    Chain, ChainMode, PolicyParams, PolicyVerdict,
)
from .chain import PayloadValidator, replace_block, validate_block, validate_block_ext
from .errors import (
    CandidateInvalid, GenesisImmutable, IndexOutOfRange, ModeViolation,
    NoOpEdit, PolicyNotAccepted, TargetNotStable, VotesTampered,
)
from .hashcore import Digest, hash_h, u64

AdmissionCheck = Callable[[Chain, CandidateBlock], bool]


class VoteIndex:
    """투표 토큰 → 해당 토큰을 담은 블록 높이 목록 (오름차순, 블록당 1회)"""

    def __init__(self, heights: Dict[bytes, List[int]]):
        self._heights = heights

    @classmethod
    def from_chain(cls, c: Chain) -> "VoteIndex":
        heights: Dict[bytes, List[int]] = {}
        for h, b in enumerate(c.blocks, start=1):
            for token in set(b.x.votes):
                heights.setdefault(token, []).append(h)
        return cls(heights)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[bytes, int]]) -> "VoteIndex":
        heights: Dict[bytes, List[int]] = {}
        for token, h in pairs:
            hs = heights.setdefault(token, [])
            if not hs or hs[-1] != h:
                hs.append(h)
        for hs in heights.values():
            hs.sort()
        return cls(heights)

    def first_height(self, token: bytes) -> Optional[int]:
        hs = self._heights.get(token)
        return hs[0] if hs else None

    def count_between(self, token: bytes, lo: int, hi: int) -> int:
        hs = self._heights.get(token, [])
        return bisect_right(hs, hi) - bisect_left(hs, lo)

    def __contains__(self, token: bytes) -> bool:
        return token in self._heights


def window_verdict(first_vote: Optional[int], votes_in_window: int, chain_length: int,
                   params: PolicyParams) -> PolicyVerdict:
    """첫 투표 높이 r부터 ℓ개 블록 창. 창의 끝이 k 깊이가 아니면 voting"""
    if first_vote is None:
        return PolicyVerdict.VOTING
    window_end = first_vote + params.ell - 1
    if window_end > chain_length - params.k:
        return PolicyVerdict.VOTING
    if votes_in_window >= params.required_votes:
        return PolicyVerdict.ACCEPT
    return PolicyVerdict.REJECT


def evaluate_token(c: Chain, token: Digest, params: PolicyParams,
                   index: Optional[VoteIndex] = None) -> PolicyVerdict:
    index = index or VoteIndex.from_chain(c)
    r = index.first_height(token)
    if r is None:
        return PolicyVerdict.VOTING
    votes = index.count_between(token, r, r + params.ell - 1)
    return window_verdict(r, votes, len(c.blocks), params)


def evaluate_policy(c: Chain, cand: CandidateBlock, params: PolicyParams,
                    index: Optional[VoteIndex] = None) -> PolicyVerdict:
    return evaluate_token(c, candidate_digest(cand), params, index)


class PolicyEvaluator(Protocol):
    """체인 위 투표 기록으로 후보의 승인 여부를 판정"""

    def evaluate(self, c: Chain, cand: CandidateBlock, index: Optional[VoteIndex] = None) -> PolicyVerdict:
        ...

    def evaluate_token(self, c: Chain, token: Digest, index: Optional[VoteIndex] = None) -> PolicyVerdict:
        ...

    def accepts(self, c: Chain, token: Digest, index: Optional[VoteIndex] = None) -> bool:
        ...


class RatioPolicy:
    """(k, ℓ, ρ) 비율 정책"""

    def __init__(self, params: PolicyParams):
        self.params = params

    def evaluate(self, c: Chain, cand: CandidateBlock, index: Optional[VoteIndex] = None) -> PolicyVerdict:
        return evaluate_policy(c, cand, self.params, index)

    def evaluate_token(self, c: Chain, token: Digest, index: Optional[VoteIndex] = None) -> PolicyVerdict:
        return evaluate_token(c, token, self.params, index)

    def accepts(self, c: Chain, token: Digest, index: Optional[VoteIndex] = None) -> bool:
        return self.evaluate_token(c, token, index) == PolicyVerdict.ACCEPT


def candidate_digest(cand: CandidateBlock) -> Digest:
    """H(ctr, G(s, x⋆), y⋆): 풀 키이자 체인 위 투표 토큰"""
    return cand.block.digest()


def extended_state(block: Block) -> Tuple[bytes, ...]:
    """
    다음 편집의 y⋆
    현재 데이터가 원본이면 y 그대로, 이미 편집됐으면 현재 데이터의 G를 덧붙임
    """
    g = block.data_digest()
    if len(block.y) == 1 and block.y[0] == g:
        return block.y
    return block.y + (g,)


def propose_edit(c: Chain, j: int, new_payload: BlockPayload, k: int,
                 mode: ChainMode = ChainMode.SINGLE) -> CandidateBlock:
    """
    ✂️ 편집 제안
    대상 블록의 s, ctr, y를 복사하고 데이터만 교체한 후보 블록 생성
    """
    n = len(c.blocks)
    if j < 1 or j > n:
        raise IndexOutOfRange(f"블록 높이 {j}가 범위(1..{n})를 벗어났습니다")
    if j == 1:
        raise GenesisImmutable("제네시스 블록은 편집할 수 없습니다")
    if j > n - k:
        raise TargetNotStable(f"높이 {j} 블록이 아직 {k} 깊이에 도달하지 않았습니다 (체인 길이 {n})")
    original = c.at(j)
    if new_payload.votes != original.x.votes:
        raise VotesTampered(f"높이 {j} 블록의 투표 목록을 변경할 수 없습니다")
    if new_payload == original.x:
        raise NoOpEdit(f"높이 {j} 블록의 데이터가 변경되지 않았습니다")

    if mode == ChainMode.EXT:
        y = extended_state(original)
    else:
        if original.is_redacted():
            raise ModeViolation(f"단일 편집 모드: 높이 {j} 블록은 이미 편집되었습니다")
        y = original.y
    block = Block(s=original.s, x=new_payload, ctr=original.ctr, y=y)
    cand = CandidateBlock(target_index=j, block=block)
    logger.info(f"✂️ 편집 후보 생성: 높이 {j}, 토큰 {candidate_digest(cand).hex()[:16]}")
    return cand


def _neighbor_links_ok(c: Chain, cand: CandidateBlock) -> bool:
    j = cand.target_index
    prev = c.at(j - 1)
    nxt = c.at(j + 1)
    return cand.block.s == prev.old_link() and nxt.s == cand.block.old_link()


def validate_cand(c: Chain, cand: CandidateBlock,
                  payload_validator: Optional[PayloadValidator] = None) -> bool:
    """단일 모드 후보 검증: 블록 검증 + 이전/다음 블록과의 원래 링크 유지"""
    j = cand.target_index
    if not 2 <= j <= len(c.blocks) - 1:
        return False
    if len(cand.block.y) != 1:
        return False
    if not validate_block(cand.block, c.difficulty, payload_validator):
        return False
    return _neighbor_links_ok(c, cand)


def historical_tokens(block: Block) -> List[Digest]:
    """
    이전 편집들의 투표 토큰 H(ctr, y^(i), y^(1)||..||y^(i-1)), i = 2..l
    i번째 세그먼트는 (i-1)번째 편집이 설치한 데이터의 G
    """
    ctr = u64(block.ctr)
    return [hash_h((ctr, block.y[i], b"".join(block.y[:i]))) for i in range(1, len(block.y))]


def validate_cand_ext(c: Chain, cand: CandidateBlock, policy: PolicyEvaluator,
                      payload_validator: Optional[PayloadValidator] = None,
                      index: Optional[VoteIndex] = None) -> bool:
    """다중 편집 모드 후보 검증: 이전 편집 이력 모두 승인되어 있어야 함"""
    j = cand.target_index
    if not 2 <= j <= len(c.blocks) - 1:
        return False
    if not validate_block_ext(cand.block, c.difficulty, payload_validator):
        return False
    if not _neighbor_links_ok(c, cand):
        return False
    tokens = historical_tokens(cand.block)
    if tokens and index is None:
        index = VoteIndex.from_chain(c)
    return all(policy.accepts(c, token, index=index) for token in tokens)


def matches_target(c: Chain, cand: CandidateBlock, mode: ChainMode) -> bool:
    """후보가 현재 체인의 대상 블록을 이어받는지 (s, ctr, y)"""
    j = cand.target_index
    if not 2 <= j <= len(c.blocks):
        return False
    current = c.at(j)
    if cand.block.s != current.s or cand.block.ctr != current.ctr:
        return False
    if cand.block.x.votes != current.x.votes or cand.block.x == current.x:
        return False
    if mode == ChainMode.EXT:
        return cand.block.y == extended_state(current)
    # 단일 모드: 이미 편집된 블록은 다시 편집할 수 없음
    return cand.block.y == current.y and not current.is_redacted()


def candidate_is_valid(c: Chain, cand: CandidateBlock, mode: ChainMode, policy: PolicyEvaluator,
                       payload_validator: Optional[PayloadValidator] = None) -> bool:
    if mode == ChainMode.EXT:
        return validate_cand_ext(c, cand, policy, payload_validator)
    return validate_cand(c, cand, payload_validator)


def apply_redaction(c: Chain, j: int, cand: CandidateBlock, policy: PolicyEvaluator,
                    payload_validator: Optional[PayloadValidator] = None) -> Chain:
    """승인된 후보로 높이 j 블록을 교체. 길이는 그대로"""
    index = VoteIndex.from_chain(c)
    if policy.evaluate(c, cand, index=index) != PolicyVerdict.ACCEPT:
        raise PolicyNotAccepted(f"높이 {j} 후보가 아직 승인되지 않았습니다")
    mode = c.mode
    if cand.target_index != j or not matches_target(c, cand, mode) \
            or not candidate_is_valid(c, cand, mode, policy, payload_validator):
        raise CandidateInvalid(f"높이 {j} 후보 검증 실패")
    logger.info(f"✂️ 편집 적용: 높이 {j}")
    return replace_block(c, j, cand.block)


def pool_upsert(pool: CandidatePool, c: Chain, cand: CandidateBlock, policy: PolicyEvaluator,
                payload_validator: Optional[PayloadValidator] = None,
                admission: Optional[AdmissionCheck] = None) -> CandidatePool:
    """후보 검증에 통과하면 풀에 추가. 같은 다이제스트는 무시"""
    digest = candidate_digest(cand)
    if digest in pool.entries:
        return pool
    mode = c.mode
    if not matches_target(c, cand, mode) or not candidate_is_valid(c, cand, mode, policy, payload_validator):
        logger.debug(f"⚠️ 후보 폐기: 높이 {cand.target_index}")
        return pool
    if admission is not None and not admission(c, cand):
        logger.debug(f"⚠️ 후보 폐기 (입장 조건 미충족): 높이 {cand.target_index}")
        return pool
    entries = dict(pool.entries)
    entries[digest] = cand
    return CandidatePool(entries=entries)


def pool_sweep(pool: CandidatePool, c: Chain, params: PolicyParams) -> Tuple[CandidatePool, List[CandidateBlock]]:
    """
    정책 판정으로 풀을 분할
    accept → 반환 후 제거, reject → 제거, voting → 유지
    같은 높이에 여러 후보가 승인되면 창이 먼저 닫힌 후보가 이김
    """
    if not pool.entries:
        return pool, []
    index = VoteIndex.from_chain(c)
    keep: Dict[bytes, CandidateBlock] = {}
    winners: Dict[int, Tuple[int, bytes, CandidateBlock]] = {}
    for digest, cand in pool.entries.items():
        j = cand.target_index
        if j > len(c.blocks) or not matches_target(c, cand, c.mode):
            continue
        verdict = evaluate_token(c, digest, params, index)
        if verdict == PolicyVerdict.VOTING:
            keep[digest] = cand
        elif verdict == PolicyVerdict.ACCEPT:
            close = index.first_height(digest) + params.ell - 1
            best = winners.get(j)
            if best is None or (close, digest) < best[:2]:
                winners[j] = (close, digest, cand)
    accepted = [winners[j][2] for j in sorted(winners)]
    # 편집이 적용되는 높이의 다른 후보는 더 이상 유효하지 않음
    edited = set(winners)
    keep = {d: cand for d, cand in keep.items() if cand.target_index not in edited}
    return CandidatePool(entries=keep), accepted


def announce(cand: CandidateBlock) -> CandidateAnnouncement:
    return CandidateAnnouncement(
        target_index=cand.target_index,
        payload_entries_hex=tuple(e.hex() for e in cand.block.x.entries),
        declared_digest_hex=candidate_digest(cand).hex(),
    )


def candidate_from_announcement(c: Chain, msg: CandidateAnnouncement) -> Optional[CandidateBlock]:
    """수신 노드가 자신의 체인으로 후보를 재구성하고 선언된 다이제스트를 확인"""
    j = msg.target_index
    if not 2 <= j <= len(c.blocks):
        return None
    current = c.at(j)
    try:
        entries = tuple(bytes.fromhex(e) for e in msg.payload_entries_hex)
    except ValueError:
        return None
    payload = BlockPayload(entries=entries, votes=current.x.votes)
    y = extended_state(current) if c.mode == ChainMode.EXT else current.y
    cand = CandidateBlock.construct(
        target_index=j, block=Block.construct(s=current.s, x=payload, ctr=current.ctr, y=y))
    if candidate_digest(cand).hex() != msg.declared_digest_hex:
        return None
    return cand
