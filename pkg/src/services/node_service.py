# src/services/node_service.py
"""
노드 라운드 상태 머신
체인 갱신 → 후보 풀 → 체인 편집 → 블록 생성(투표 포함), 그리고 편집 제안
"""

from typing import Callable, Dict, List, Optional, Tuple

from loguru import logger

from ..core.chain import append_block, mine_block, validate_extension, validate_for_mode
from ..core.errors import RedactableChainError
from ..core.ledger import LedgerEditPolicy, ledger_admission_check, ledger_endorses, ledger_payload_check
from ..core.redaction import (
    RatioPolicy, VoteIndex, announce, apply_redaction, candidate_digest, candidate_from_announcement,
    evaluate_token, pool_sweep, pool_upsert, propose_edit,
)
from ..models.chain_models import (
    BlockPayload, CandidateBlock, Chain, ChainMode, PolicyParams, PolicyVerdict,
)
from ..models.sim_models import (
    Broadcast, EndorsementRule, MessageKind, NodeRole, NodeState, RoundEvents, RoundInput,
)
from ..utils.seeds import derive_seed

ChainValidator = Callable[[Chain], bool]

# 메모풀 정리 시 확인하는 최근 블록 수
MEMPOOL_TAIL = 64


def removes_data(c: Chain, cand: CandidateBlock) -> bool:
    """후보 항목이 원본 항목의 진부분 수열일 때만 (데이터 제거만 허용)"""
    original = c.at(cand.target_index).x.entries
    new = cand.block.x.entries
    if len(new) >= len(original):
        return False
    it = iter(original)
    return all(any(e == o for o in it) for e in new)


def honest_endorsement(mode: ChainMode) -> EndorsementRule:
    """정직한 노드의 기본 지지 규칙: 항상 후보를 끝까지 검사"""
    if mode == ChainMode.LEDGER:
        return ledger_endorses
    return removes_data


def payload_validator_for(mode: ChainMode):
    return ledger_payload_check if mode == ChainMode.LEDGER else None


def admission_for(mode: ChainMode, params: PolicyParams):
    return ledger_admission_check(params.k) if mode == ChainMode.LEDGER else None


def policy_for(mode: ChainMode, params: PolicyParams) -> RatioPolicy:
    """원장 모드는 투표 수와 함께 k 깊이 editTx까지 요구"""
    return LedgerEditPolicy(params) if mode == ChainMode.LEDGER else RatioPolicy(params)


def new_node_state(node_id: int, genesis_chain: Chain, params: PolicyParams, miner_seed: int,
                   endorsement: Optional[EndorsementRule] = None) -> NodeState:
    mode = genesis_chain.mode
    return NodeState(
        node_id=node_id,
        chain=genesis_chain,
        genesis=genesis_chain.blocks[0],
        params=params,
        mode=mode,
        endorsement=endorsement or honest_endorsement(mode),
        miner_seed=miner_seed,
    )


def default_validator(state: NodeState) -> ChainValidator:
    policy = policy_for(state.mode, state.params)
    payload_validator = payload_validator_for(state.mode)

    def validate(c: Chain) -> bool:
        if c.mode != state.mode or c.difficulty != state.chain.difficulty:
            return False
        return validate_for_mode(c, policy, payload_validator, state.genesis) is None

    return validate


def _entries_in_tail(c: Chain, depth: int) -> set:
    seen = set()
    for b in c.blocks[-depth:]:
        seen.update(b.x.entries)
    return seen


def _endorsed_votes(state: NodeState, chain: Chain) -> Tuple[bytes, ...]:
    if not state.pool.entries:
        return ()
    index = VoteIndex.from_chain(chain)
    votes = []
    for digest, cand in state.pool.entries.items():
        if evaluate_token(chain, digest, state.params, index) != PolicyVerdict.VOTING:
            continue
        if state.endorsement(chain, cand):
            votes.append(digest)
    return tuple(dict.fromkeys(votes))


def step_round(state: NodeState, inp: RoundInput, difficulty: int, q: int, round_no: int = 0,
               validate: Optional[ChainValidator] = None) -> Tuple[NodeState, List[Broadcast]]:
    """
    한 라운드 실행
    (1) 더 긴 유효 체인 채택 (2) 후보 풀 갱신 (3) 승인된 편집 적용 (4) 투표를 넣어 채굴
    """
    validate = validate or default_validator(state)
    policy = policy_for(state.mode, state.params)
    payload_validator = payload_validator_for(state.mode)
    chain = state.chain
    mempool = state.mempool
    outbound: List[Broadcast] = []
    adopted = False

    # (1) 체인 갱신: 엄격히 더 긴 체인만, 같은 길이면 먼저 본 것 유지
    for candidate_chain in sorted(inp.chains, key=lambda c: len(c.blocks), reverse=True):
        if len(candidate_chain.blocks) <= len(chain.blocks):
            break
        if validate(candidate_chain):
            chain = candidate_chain
            adopted = True
            logger.debug(f"🔗 노드 {state.node_id}: 길이 {len(chain.blocks)} 체인 채택")
            break

    # (2) 후보 풀
    pool = state.pool
    admission = admission_for(state.mode, state.params)
    discarded = 0
    for msg in inp.candidates:
        cand = candidate_from_announcement(chain, msg)
        if cand is None:
            discarded += 1
            continue
        before = len(pool)
        pool = pool_upsert(pool, chain, cand, policy, payload_validator, admission)
        if len(pool) == before and candidate_digest(cand) not in pool:
            discarded += 1

    # (3) 체인 편집
    pool, accepted = pool_sweep(pool, chain, state.params)
    applied = []
    for cand in accepted:
        try:
            chain = apply_redaction(chain, cand.target_index, cand, policy, payload_validator)
            applied.append((cand.target_index, candidate_digest(cand).hex()))
        except RedactableChainError as e:
            logger.warning(f"⚠️ 노드 {state.node_id}: 편집 적용 실패 ({e})")

    # (4) 블록 생성
    for entry in inp.transactions + inp.environment_txs:
        if entry not in mempool:
            mempool += (entry,)
    payload = BlockPayload(entries=mempool, votes=_endorsed_votes(state.copy(update={"pool": pool}), chain))
    seed = derive_seed(state.miner_seed, round_no)
    block = mine_block(chain.blocks[-1], payload, difficulty, q, seed)
    mined = None
    if block is not None and validate_extension(chain, block, payload_validator):
        chain = append_block(chain, block)
        mined = block
        outbound.append(Broadcast(kind=MessageKind.CHAIN, sender=state.node_id, chain=chain))

    # 고아 블록의 항목은 다시 채굴되도록 체인에 없는 것만 남김
    confirmed = _entries_in_tail(chain, MEMPOOL_TAIL)
    mempool = tuple(e for e in mempool if e not in confirmed)

    events = RoundEvents(adopted=adopted, mined=mined, applied=tuple(applied), discarded_candidates=discarded)
    new_state = state.copy(update={"chain": chain, "pool": pool, "mempool": mempool, "last_events": events})
    return new_state, outbound


def submit_edit_proposal(state: NodeState, j: int,
                         new_payload: BlockPayload) -> Tuple[NodeState, Optional[Broadcast]]:
    """편집 후보를 만들어 자신의 풀에 넣고 브로드캐스트. 입장 조건에 걸리면 (state, None)"""
    cand = propose_edit(state.chain, j, new_payload, state.params.k, state.mode)
    policy = policy_for(state.mode, state.params)
    pool = pool_upsert(state.pool, state.chain, cand, policy,
                       payload_validator_for(state.mode), admission_for(state.mode, state.params))
    if candidate_digest(cand) not in pool:
        logger.warning(f"⚠️ 노드 {state.node_id}: 높이 {j} 후보가 풀 입장 조건을 통과하지 못했습니다")
        return state, None
    msg = announce(cand)
    logger.info(f"🗳️ 노드 {state.node_id}: 높이 {j} 편집 후보 브로드캐스트")
    return state.copy(update={"pool": pool}), Broadcast(kind=MessageKind.CANDIDATE, sender=state.node_id,
                                                         candidate=msg)


def reset_node(state: NodeState, genesis_chain: Chain) -> NodeState:
    """복구된 노드는 새로 생성된 노드와 같은 상태"""
    return new_node_state(state.node_id, genesis_chain, state.params, state.miner_seed)


def corrupt_node(state: NodeState) -> NodeState:
    return state.copy(update={"role": NodeRole.CORRUPTED})


class ValidationCache:
    """체인 객체별 검증 결과 캐시 (메시지는 불변 값이라 여러 노드가 공유)"""

    def __init__(self, validator: ChainValidator):
        self._validator = validator
        self._results: Dict[int, Tuple[Chain, bool]] = {}

    def __call__(self, c: Chain) -> bool:
        hit = self._results.get(id(c))
        if hit is not None and hit[0] is c:
            return hit[1]
        result = self._validator(c)
        self._results[id(c)] = (c, result)
        return result
