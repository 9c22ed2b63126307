# src/core/chain.py
"""
체인 구조와 PoW 채굴, 블록/체인 검증
단일 편집 모드와 다중 편집(ext) 모드 모두 지원
"""

from typing import Callable, Optional, Tuple

import numpy as np
from loguru import logger

from ..models.chain_models import Block, BlockPayload, Chain, ChainMode, GenesisConfig
from .errors import EmptyChain, ModeViolation
from .hashcore import ZERO_DIGEST, Digest, hash_g, hash_h, meets_target, u64

PayloadValidator = Callable[[BlockPayload], bool]

_U64_SPACE = 2 ** 64


def structural_payload_check(payload: BlockPayload) -> bool:
    """기본 페이로드 검증: 투표는 모두 32바이트"""
    return payload.is_well_formed()


def new_chain(difficulty: int, genesis: Optional[GenesisConfig] = None,
              mode: ChainMode = ChainMode.SINGLE) -> Chain:
    genesis = genesis or GenesisConfig()
    return Chain(blocks=(genesis.block(),), difficulty=difficulty, mode=mode)


def head_of(c: Chain) -> Block:
    if not c.blocks:
        raise EmptyChain("빈 체인에는 head가 없습니다")
    return c.blocks[-1]


def prune_right(c: Chain, q: int) -> Chain:
    if q < 0:
        raise ValueError("q는 0 이상이어야 합니다")
    if q == 0:
        return c
    return c.copy(update={"blocks": c.blocks[:-q] if q < len(c.blocks) else ()})


def prune_left(c: Chain, q: int) -> Chain:
    if q < 0:
        raise ValueError("q는 0 이상이어야 합니다")
    if q == 0:
        return c
    return c.copy(update={"blocks": c.blocks[q:]})


def is_prefix(c1: Chain, c2: Chain) -> bool:
    if len(c1.blocks) > len(c2.blocks):
        return False
    return all(a is b or a == b for a, b in zip(c1.blocks, c2.blocks))


def append_block(c: Chain, block: Block) -> Chain:
    return c.copy(update={"blocks": c.blocks + (block,)})


def replace_block(c: Chain, height: int, block: Block) -> Chain:
    """pruneRight(C, n-j+1) || B⋆ || pruneLeft(C, j)"""
    i = height - 1
    return c.copy(update={"blocks": c.blocks[:i] + (block,) + c.blocks[i + 1:]})


def link_of(parent: Block) -> Digest:
    """새 블록의 s = H(ctr', G(s', x'), y')"""
    return hash_h((u64(parent.ctr), parent.data_digest(), parent.y_concat))


def mine_block(parent: Block, payload: BlockPayload, difficulty: int,
               max_attempts: int, rng_seed: int) -> Optional[Block]:
    """
    ⛏️ 시도 횟수 제한 채굴
    찾지 못하면 None (라운드당 q번 해시 질의 모델)
    """
    block, attempts = mine_block_with_attempts(parent, payload, difficulty, max_attempts, rng_seed)
    if block is not None:
        logger.debug(f"⛏️ 블록 채굴 성공: {attempts}회 시도")
    return block


def mine_block_with_attempts(parent: Block, payload: BlockPayload, difficulty: int,
                             max_attempts: int, rng_seed: int) -> Tuple[Optional[Block], int]:
    """채굴 결과와 사용한 시도 횟수를 함께 반환"""
    if max_attempts < 1:
        raise ValueError("max_attempts는 1 이상이어야 합니다")
    s = link_of(parent)
    g = hash_g((s, payload.encode()))
    start = int(np.random.default_rng(rng_seed).integers(0, _U64_SPACE, dtype=np.uint64))
    for attempt in range(max_attempts):
        ctr = (start + attempt) % _U64_SPACE
        if meets_target(hash_h((u64(ctr), g, g)), difficulty):
            return Block.construct(s=s, x=payload, ctr=ctr, y=(g,)), attempt + 1
    return None, max_attempts


def _pow_ok(b: Block, g: Digest, difficulty: int) -> bool:
    ctr = u64(b.ctr)
    if meets_target(hash_h((ctr, g, b.y_concat)), difficulty):
        return True
    y1 = b.y[0]
    return meets_target(hash_h((ctr, y1, y1)), difficulty)


def validate_block(b: Block, difficulty: int, payload_validator: Optional[PayloadValidator] = None,
                   data_digest: Optional[Digest] = None) -> bool:
    """
    단일 편집 모드 블록 검증
    H(ctr, G(s,x), y) < D 또는 H(ctr, y, y) < D
    """
    if len(b.y) != 1:
        raise ModeViolation(f"단일 편집 모드에서 y 세그먼트가 {len(b.y)}개입니다")
    if not (payload_validator or structural_payload_check)(b.x):
        return False
    g = b.data_digest() if data_digest is None else data_digest
    return _pow_ok(b, g, difficulty)


def validate_block_ext(b: Block, difficulty: int, payload_validator: Optional[PayloadValidator] = None,
                       data_digest: Optional[Digest] = None) -> bool:
    """
    다중 편집 모드 블록 검증
    H(ctr, G(s,x), y^(1)||..||y^(l)) < D 또는 H(ctr, y^(1), y^(1)) < D
    """
    if not b.y:
        return False
    if not (payload_validator or structural_payload_check)(b.x):
        return False
    g = b.data_digest() if data_digest is None else data_digest
    return _pow_ok(b, g, difficulty)


def _genesis_ok(c: Chain, genesis: Optional[Block]) -> bool:
    first = c.blocks[0]
    if genesis is not None:
        return first == genesis
    return (first.s == ZERO_DIGEST and first.ctr == 0 and len(first.y) == 1
            and first.y[0] == first.data_digest())


def _find_invalid(c: Chain, policy, ext: bool, payload_validator: Optional[PayloadValidator],
                  genesis: Optional[Block]) -> Optional[int]:
    from .redaction import VoteIndex, validate_cand, validate_cand_ext
    from ..models.chain_models import CandidateBlock, PolicyVerdict

    n = len(c.blocks)
    if n == 0:
        return 1
    if not _genesis_ok(c, genesis):
        return 1
    check_block = validate_block_ext if ext else validate_block
    index: Optional[VoteIndex] = None

    blocks = c.blocks
    g_next = None
    # head에서 제네시스 방향으로
    for j in range(n, 1, -1):
        b = blocks[j - 1]
        g = g_next if g_next is not None else b.data_digest()
        if not ext and len(b.y) != 1:
            logger.debug(f"❌ 높이 {j}: 단일 모드에서 다중 세그먼트")
            return j
        if not check_block(b, c.difficulty, payload_validator, g):
            logger.debug(f"❌ 높이 {j}: 블록 검증 실패")
            return j
        prev = blocks[j - 2]
        g_prev = prev.data_digest()
        g_next = g_prev
        if b.s == hash_h((u64(prev.ctr), g_prev, prev.y_concat)):
            continue
        if j - 1 == 1:
            logger.debug("❌ 제네시스 링크 불일치")
            return 2
        if b.s != prev.old_link():
            logger.debug(f"❌ 높이 {j - 1}: 링크 불일치")
            return j - 1
        if index is None:
            index = VoteIndex.from_chain(c)
        cand = CandidateBlock.construct(target_index=j - 1, block=prev)
        if ext:
            cand_ok = validate_cand_ext(c, cand, policy, payload_validator=payload_validator, index=index)
        else:
            cand_ok = validate_cand(c, cand, payload_validator=payload_validator)
        if not cand_ok:
            logger.debug(f"❌ 높이 {j - 1}: 편집 블록 후보 검증 실패")
            return j - 1
        if policy.evaluate(c, cand, index=index) != PolicyVerdict.ACCEPT:
            logger.debug(f"❌ 높이 {j - 1}: 승인되지 않은 편집")
            return j - 1
    return None


def first_invalid_height(c: Chain, policy, payload_validator: Optional[PayloadValidator] = None,
                         genesis: Optional[Block] = None) -> Optional[int]:
    """단일 편집 모드 체인 검증. 문제가 있는 첫 높이(head 쪽부터) 또는 None"""
    return _find_invalid(c, policy, False, payload_validator, genesis)


def first_invalid_height_ext(c: Chain, policy, payload_validator: Optional[PayloadValidator] = None,
                             genesis: Optional[Block] = None) -> Optional[int]:
    return _find_invalid(c, policy, True, payload_validator, genesis)


def validate_chain(c: Chain, policy, payload_validator: Optional[PayloadValidator] = None,
                   genesis: Optional[Block] = None) -> bool:
    return first_invalid_height(c, policy, payload_validator, genesis) is None


def validate_chain_ext(c: Chain, policy, payload_validator: Optional[PayloadValidator] = None,
                       genesis: Optional[Block] = None) -> bool:
    return first_invalid_height_ext(c, policy, payload_validator, genesis) is None


def validate_for_mode(c: Chain, policy, payload_validator: Optional[PayloadValidator] = None,
                      genesis: Optional[Block] = None) -> Optional[int]:
    """체인 모드에 맞는 검증기로 첫 오류 높이 반환"""
    if c.mode == ChainMode.EXT:
        return first_invalid_height_ext(c, policy, payload_validator, genesis)
    return first_invalid_height(c, policy, payload_validator, genesis)


def validate_chain_immutable(c: Chain, genesis: Optional[Block] = None) -> bool:
    """불변 프로토콜 기준 검증기: 첫 번째 PoW 조건과 일반 링크만 허용"""
    n = len(c.blocks)
    if n == 0 or not _genesis_ok(c, genesis):
        return False
    blocks = c.blocks
    g_prev = blocks[0].data_digest()
    for j in range(2, n + 1):
        b = blocks[j - 1]
        prev = blocks[j - 2]
        if not structural_payload_check(b.x):
            return False
        g = b.data_digest()
        if len(b.y) != 1 or b.y[0] != g:
            return False
        if not meets_target(hash_h((u64(b.ctr), g, b.y[0])), c.difficulty):
            return False
        if b.s != hash_h((u64(prev.ctr), g_prev, prev.y_concat)):
            return False
        g_prev = g
    return True


def validate_extension(parent_chain: Chain, block: Block,
                       payload_validator: Optional[PayloadValidator] = None) -> bool:
    """
    이미 검증된 체인에 블록 하나를 붙였을 때의 증분 검증
    승인 판정은 블록이 추가돼도 바뀌지 않으므로 새 블록과 링크만 확인
    """
    if not parent_chain.blocks:
        return False
    check = validate_block_ext if parent_chain.mode == ChainMode.EXT else validate_block
    if len(block.y) != 1 or block.y[0] != block.data_digest():
        return False
    if not check(block, parent_chain.difficulty, payload_validator):
        return False
    return block.s == link_of(parent_chain.blocks[-1])
