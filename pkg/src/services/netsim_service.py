# src/services/netsim_service.py
"""
라운드 기반 결정적 네트워크 시뮬레이터
환경 입력, 지연 전달(최대 Δ 라운드), 오염/복구 일정, 적대자 전략,
정직 편집 제안 계획, 그리고 체인 성장/품질/편집 가능 공통 접두사/활성 검사
"""

import json
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

import numpy as np
from loguru import logger

from ..core.chain import append_block, mine_block, new_chain, validate_for_mode
from ..core.errors import ConfigInvalid, RedactableChainError
from ..core.hashcore import Digest, hash_h, target_from_hex, u64
from ..core.ledger import (
    Wallet, build_edit_tx, data_output, edit_request_height, strip_data,
)
from ..core.redaction import RatioPolicy, VoteIndex, announce, propose_edit
from ..models.chain_models import Block, BlockPayload, CandidateBlock, Chain, ChainMode
from ..models.ledger_models import FundingInput, OutputKind, Transaction, TxInput, TxOutput
from ..models.sim_models import (
    AdversarySpec, AdversaryStrategy, Broadcast, BroadcastRecord, CheckReport, DelayPolicy,
    DeliveryRecord, MessageKind, NodeRecord, NodeState, RoundInput, RoundRecord, SimConfig, SimTrace,
)
from ..utils.seeds import derive_seed
from .node_service import (
    ValidationCache, corrupt_node, new_node_state, payload_validator_for, policy_for, reset_node, step_round,
    submit_edit_proposal,
)

# 하위 시드 라벨
_DELAY_LABEL = 0xD1
_ADVERSARY_LABEL = 0xAD
_WALLET_LABEL = 0x5A

SIM_EDIT_FEE = 10_000
SIM_TX_AMOUNT = 1_000


# ---------------------------------------------------------------- 설정/환경


def check_config(cfg: SimConfig, adv: AdversarySpec) -> None:
    """실행 전 설정 불변식 확인. 위반 시 ConfigInvalid"""
    if cfg.n_corrupt >= cfg.n_nodes:
        raise ConfigInvalid(f"n_corrupt({cfg.n_corrupt})는 n_nodes({cfg.n_nodes})보다 작아야 합니다")
    if cfg.max_delay < 1:
        raise ConfigInvalid("max_delay(Δ)는 1 이상이어야 합니다")
    try:
        target_from_hex(cfg.difficulty_hex)
    except ValueError as e:
        raise ConfigInvalid(f"difficulty_hex 오류: {e}") from e
    corrupt = _initial_corrupt(cfg)
    for event in sorted(adv.corruption_schedule, key=lambda e: e.round):
        if event.node >= cfg.n_nodes:
            raise ConfigInvalid(f"오염 일정의 노드 {event.node}가 범위를 벗어났습니다")
        if event.corrupt:
            corrupt.add(event.node)
        else:
            corrupt.discard(event.node)
        if len(corrupt) >= cfg.n_nodes:
            raise ConfigInvalid(f"라운드 {event.round}: 정직한 노드가 남지 않습니다")


def _initial_corrupt(cfg: SimConfig) -> Set[int]:
    # 마지막 n_corrupt개 노드가 처음부터 오염 (노드 0은 항상 정직하게 시작)
    return set(range(cfg.n_nodes - cfg.n_corrupt, cfg.n_nodes))


def genesis_for(cfg: SimConfig) -> Chain:
    return new_chain(target_from_hex(cfg.difficulty_hex), mode=cfg.mode)


def environment_entry(cfg: SimConfig, round_no: int, i: int) -> bytes:
    """환경이 모든 정직 노드에 주는 입력. 원장 모드에서는 데이터 출력이 있는 직렬화 트랜잭션"""
    if cfg.mode != ChainMode.LEDGER:
        return b"tx:%d:%d" % (round_no, i)
    tx = Transaction(
        inputs=(TxInput(prev_txid=hash_h((b"env", u64(round_no), u64(i))), output_index=0),),
        outputs=(
            TxOutput(kind=OutputKind.SPENDABLE, amount=SIM_TX_AMOUNT, script=bytes(32)),
            data_output(b"note:%d:%d" % (round_no, i)),
        ),
    )
    return tx.encode()


def chain_validator(cfg: SimConfig, genesis: Chain) -> ValidationCache:
    """모든 정직 노드가 공유하는 검증기 (같은 규칙, 같은 제네시스)"""
    policy = policy_for(cfg.mode, cfg.policy)
    payload_validator = payload_validator_for(cfg.mode)
    genesis_block = genesis.blocks[0]

    def validate(c: Chain) -> bool:
        if c.mode != genesis.mode or c.difficulty != genesis.difficulty:
            return False
        return validate_for_mode(c, policy, payload_validator, genesis_block) is None

    return ValidationCache(validate)


class _BlockFacts:
    """블록 객체별 다이제스트/편집 여부 캐시 (체인들이 블록 객체를 공유)"""

    def __init__(self):
        self._facts: Dict[int, Tuple[Block, Digest, bool]] = {}

    def get(self, b: Block) -> Tuple[Digest, bool]:
        hit = self._facts.get(id(b))
        if hit is None or hit[0] is not b:
            g = b.data_digest()
            hit = (b, b.digest(g), b.is_redacted(g))
            self._facts[id(b)] = hit
        return hit[1], hit[2]

    def digest(self, b: Block) -> Digest:
        return self.get(b)[0]


def message_digest(msg: Broadcast, facts: _BlockFacts) -> str:
    if msg.kind == MessageKind.CHAIN:
        parts = [b"chain", msg.chain.mode.value.encode(), u64(len(msg.chain.blocks))]
        parts += [facts.digest(b) for b in msg.chain.blocks]
    elif msg.kind == MessageKind.CANDIDATE:
        c = msg.candidate
        parts = [b"candidate", u64(c.target_index), bytes.fromhex(c.declared_digest_hex)]
        parts += [bytes.fromhex(e) for e in c.payload_entries_hex]
    else:
        parts = [b"transaction", msg.transaction or b""]
    return hash_h(parts).hex()


# ---------------------------------------------------------------- 전달 스케줄러


class DeliveryScheduler:
    """
    적대자가 제어하는 전달 일정
    각 메시지를 수신자마다 1..Δ 라운드 지연. 내용은 바꾸지 않음
    """

    def __init__(self, max_delay: int, policy: DelayPolicy, seed: int):
        self.max_delay = max_delay
        self.policy = policy
        self._rng = np.random.default_rng(seed)
        self._queue: Dict[int, List[Tuple[int, int, Broadcast]]] = {}

    def delay(self) -> int:
        if self.policy == DelayPolicy.IMMEDIATE:
            return 1
        if self.policy == DelayPolicy.MAXIMUM:
            return self.max_delay
        return int(self._rng.integers(1, self.max_delay + 1))

    def schedule(self, msg_id: int, msg: Broadcast, sent_round: int, recipients: Iterable[int]) -> None:
        for recipient in recipients:
            due = sent_round + self.delay()
            self._queue.setdefault(due, []).append((recipient, msg_id, msg))

    def due(self, round_no: int) -> List[Tuple[int, int, Broadcast]]:
        return self._queue.pop(round_no, [])


# ---------------------------------------------------------------- 적대자


class Adversary:
    """
    오염된 노드들의 통합 적대자
    모든 메시지를 즉시 보고(rushing), 오염 노드 수 × q 해시 예산으로 채굴
    """

    def __init__(self, cfg: SimConfig, spec: AdversarySpec, genesis: Chain, validate: ValidationCache):
        self.cfg = cfg
        self.spec = spec
        self.chain = genesis
        self.validate = validate
        self.seed = derive_seed(cfg.master_seed, _ADVERSARY_LABEL)
        self.malicious: Optional[CandidateBlock] = None
        self.forged_tokens: Set[bytes] = set()
        self.tampered = False

    @property
    def active(self) -> bool:
        return self.spec.strategy != AdversaryStrategy.NONE

    def observe(self, messages: Iterable[Broadcast]) -> None:
        for msg in messages:
            if msg.kind != MessageKind.CHAIN or len(msg.chain.blocks) <= len(self.chain.blocks):
                continue
            if self.validate(msg.chain):
                self.chain = msg.chain
                self.tampered = False

    def _forge_chain(self) -> Optional[Chain]:
        """투표 없이 안정 블록 하나의 데이터를 바꾼 체인"""
        n = len(self.chain.blocks)
        j = n - 2 * self.cfg.k
        if j < 2:
            return None
        original = self.chain.at(j)
        forged_payload = BlockPayload(entries=(b"forged",) + original.x.entries, votes=original.x.votes)
        forged = Block(s=original.s, x=forged_payload, ctr=original.ctr, y=original.y)
        self.forged_tokens.add(forged.digest())
        logger.debug(f"🕵️ 적대자: 높이 {j} 무단 편집 체인 생성")
        blocks = self.chain.blocks[:j - 1] + (forged,) + self.chain.blocks[j:]
        return self.chain.copy(update={"blocks": blocks})

    def _craft_candidate(self) -> Optional[Broadcast]:
        """데이터를 추가하는 후보 (정직 노드는 지지하지 않음)"""
        n = len(self.chain.blocks)
        j = n - 2 * self.cfg.k
        if j < 2:
            return None
        original = self.chain.at(j)
        payload = BlockPayload(entries=original.x.entries + (b"malicious",), votes=original.x.votes)
        try:
            cand = propose_edit(self.chain, j, payload, self.cfg.k, self.cfg.mode)
        except RedactableChainError:
            return None
        self.malicious = cand
        self.forged_tokens.add(cand.digest())
        logger.debug(f"🕵️ 적대자: 높이 {j} 악성 후보 공지")
        return Broadcast(kind=MessageKind.CANDIDATE, sender=-1, candidate=announce(cand))

    def act(self, round_no: int, n_corrupt: int, provenance: Dict[Tuple[bytes, int], bool]) -> List[Broadcast]:
        out: List[Broadcast] = []
        if not self.active or n_corrupt == 0:
            return out
        attacking = round_no >= self.spec.attack_round
        if attacking and self.spec.strategy == AdversaryStrategy.UNAPPROVED_EDIT and not self.tampered:
            forged = self._forge_chain()
            if forged is not None:
                self.chain = forged
                self.tampered = True
        if attacking and self.spec.strategy == AdversaryStrategy.MALICIOUS_CANDIDATE and self.malicious is None:
            msg = self._craft_candidate()
            if msg is not None:
                out.append(msg)

        votes: Tuple[bytes, ...] = ()
        if self.malicious is not None:
            votes = (self.malicious.digest(),)
        payload = BlockPayload(entries=(b"adv:%d" % round_no,), votes=votes)
        if self.cfg.mode == ChainMode.LEDGER:
            payload = BlockPayload(entries=(environment_entry(self.cfg, round_no, 1_000_000),), votes=votes)
        block = mine_block(self.chain.blocks[-1], payload, self.chain.difficulty,
                           n_corrupt * self.cfg.q, derive_seed(self.seed, round_no))
        if block is not None:
            self.chain = append_block(self.chain, block)
            provenance.setdefault((block.s, block.ctr), True)
            out.append(Broadcast(kind=MessageKind.CHAIN, sender=-1, chain=self.chain))
        return out


# ---------------------------------------------------------------- 정직 편집 계획


class RedactionPlanner:
    """
    edit_every 라운드마다 가장 낮은 번호의 정직 노드가 편집을 제안
    안정 구간(n - 2k 이하)에서 아직 다루지 않은 블록의 첫 항목을 제거
    원장 모드는 먼저 editTx를 환경 입력으로 넣고 k 깊이가 되면 제안
    """

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.used: Set[Tuple[bytes, int]] = set()
        self.pending: Optional[Dict[str, Any]] = None
        self.wallet = Wallet(derive_seed(cfg.master_seed, _WALLET_LABEL))

    def due(self, round_no: int) -> bool:
        every = self.cfg.edit_every
        return every is not None and round_no >= self.cfg.edit_start and \
            (round_no - self.cfg.edit_start) % every == 0

    def _pick_target(self, c: Chain) -> Optional[int]:
        for j in range(len(c.blocks) - 2 * self.cfg.k, 1, -1):
            b = c.at(j)
            if (b.s, b.ctr) in self.used or not b.x.entries:
                continue
            if self.cfg.mode == ChainMode.SINGLE and b.is_redacted():
                continue
            if self.cfg.mode == ChainMode.LEDGER and _strippable_entry(b) is None:
                continue
            return j
        return None

    def step(self, round_no: int, proposer: NodeState) -> Tuple[NodeState, List[Broadcast], List[bytes], List[Dict[str, Any]]]:
        """(갱신된 제안자 상태, 공지, 새 환경 입력, 기록할 이벤트)"""
        c = proposer.chain
        if self.pending is not None:
            return self._finish_ledger_request(round_no, proposer)
        if not self.due(round_no):
            return proposer, [], [], []
        j = self._pick_target(c)
        if j is None:
            return proposer, [], [], []
        b = c.at(j)
        self.used.add((b.s, b.ctr))
        if self.cfg.mode == ChainMode.LEDGER:
            return self._open_ledger_request(round_no, proposer, j)
        payload = BlockPayload(entries=b.x.entries[1:], votes=b.x.votes)
        return self._submit(round_no, proposer, j, payload)

    def _submit(self, round_no: int, proposer: NodeState, j: int, payload: BlockPayload):
        try:
            proposer, msg = submit_edit_proposal(proposer, j, payload)
        except RedactableChainError as e:
            logger.warning(f"⚠️ 라운드 {round_no}: 편집 제안 실패 ({e})")
            return proposer, [], [], []
        if msg is None:
            return proposer, [], [], []
        event = {"round": round_no, "node": proposer.node_id, "target": j,
                 "token": msg.candidate.declared_digest_hex, "event": "proposed"}
        return proposer, [msg], [], [event]

    def _open_ledger_request(self, round_no: int, proposer: NodeState, j: int):
        b = proposer.chain.at(j)
        position, output_index = _strippable_entry(b)
        old_tx = Transaction.decode(b.x.entries[position])
        cand_tx = strip_data(old_tx, output_index)
        funding = FundingInput(prev_txid=hash_h((b"sim-fund", u64(round_no))), output_index=0,
                               amount=2 * SIM_EDIT_FEE)
        edit_tx = build_edit_tx(old_tx, cand_tx, funding, SIM_EDIT_FEE, SIM_EDIT_FEE, self.wallet)
        self.pending = {"target": j, "identity": (b.s, b.ctr), "position": position,
                        "old": old_tx, "cand": cand_tx}
        event = {"round": round_no, "node": proposer.node_id, "target": j,
                 "token": edit_tx.txid().hex(), "event": "edit-request"}
        return proposer, [], [edit_tx.encode()], [event]

    def _finish_ledger_request(self, round_no: int, proposer: NodeState):
        p = self.pending
        c = proposer.chain
        j = p["target"]
        if j > len(c.blocks) or (c.at(j).s, c.at(j).ctr) != p["identity"]:
            self.pending = None
            return proposer, [], [], []
        h = edit_request_height(c, p["old"].txid(), p["cand"].txid())
        if h is None or h > len(c.blocks) - self.cfg.k:
            return proposer, [], [], []
        self.pending = None
        b = c.at(j)
        entries = list(b.x.entries)
        entries[p["position"]] = p["cand"].encode()
        return self._submit(round_no, proposer, j, BlockPayload(entries=tuple(entries), votes=b.x.votes))


def _strippable_entry(b: Block) -> Optional[Tuple[int, int]]:
    """비-합의 데이터 출력이 있는 첫 트랜잭션 항목의 (항목 위치, 출력 위치)"""
    for position, entry in enumerate(b.x.entries):
        try:
            tx = Transaction.decode(entry)
        except ValueError:
            continue
        if tx.is_coinbase or any(o.is_consensus_data for o in tx.outputs):
            continue
        for i, o in enumerate(tx.outputs):
            if o.is_data and o.script:
                return position, i
    return None


# ---------------------------------------------------------------- 실행


def run_simulation(cfg: SimConfig, adv: Optional[AdversarySpec] = None) -> SimTrace:
    """
    설정과 적대자 명세로 전체 실행. (cfg, adv, master_seed)의 순수 함수
    """
    adv = adv or AdversarySpec.honest()
    check_config(cfg, adv)
    genesis = genesis_for(cfg)
    difficulty = genesis.difficulty
    validate = chain_validator(cfg, genesis)
    facts = _BlockFacts()
    digests: Dict[int, Tuple[Broadcast, str]] = {}

    def digest_of(msg: Broadcast) -> str:
        hit = digests.get(id(msg))
        if hit is None or hit[0] is not msg:
            hit = (msg, message_digest(msg, facts))
            digests[id(msg)] = hit
        return hit[1]

    nodes = [new_node_state(i, genesis, cfg.policy, derive_seed(cfg.master_seed, i)) for i in range(cfg.n_nodes)]
    corrupt = _initial_corrupt(cfg)
    for i in corrupt:
        nodes[i] = corrupt_node(nodes[i])
    schedule: Dict[int, List] = {}
    for event in adv.corruption_schedule:
        schedule.setdefault(event.round, []).append(event)

    scheduler = DeliveryScheduler(cfg.max_delay, adv.delay_policy, derive_seed(cfg.master_seed, _DELAY_LABEL))
    adversary = Adversary(cfg, adv, genesis, validate)
    planner = RedactionPlanner(cfg)
    trace = SimTrace.construct(
        config=cfg, adversary=adv, records=[], broadcasts=[], deliveries=[], env_txs=[],
        snapshots=[], honest=[], provenance={}, malicious_tokens=set(), applied_tokens={},
    )
    logger.info(f"🚀 시뮬레이션 시작: 노드 {cfg.n_nodes}개 (오염 {cfg.n_corrupt}), {cfg.rounds} 라운드, "
                f"Δ={cfg.max_delay}, 모드 {cfg.mode.value}")

    msg_id = 0
    pending_env: List[bytes] = []
    for r in range(1, cfg.rounds + 1):
        corruption_log = []
        for event in schedule.get(r, []):
            if event.corrupt and event.node not in corrupt:
                corrupt.add(event.node)
                nodes[event.node] = corrupt_node(nodes[event.node])
            elif not event.corrupt and event.node in corrupt:
                corrupt.discard(event.node)
                nodes[event.node] = reset_node(nodes[event.node], genesis)
            corruption_log.append(event.dict())

        # 라운드 입력 구성
        inbox: Dict[int, Dict[str, list]] = {i: {"chains": [], "candidates": [], "transactions": []}
                                             for i in range(cfg.n_nodes)}
        delivered = 0
        for recipient, mid, msg in scheduler.due(r):
            if recipient in corrupt:
                continue
            key = {MessageKind.CHAIN: "chains", MessageKind.CANDIDATE: "candidates",
                   MessageKind.TRANSACTION: "transactions"}[msg.kind]
            inbox[recipient][key].append(msg.chain if msg.kind == MessageKind.CHAIN else
                                         msg.candidate if msg.kind == MessageKind.CANDIDATE else msg.transaction)
            trace.deliveries.append(DeliveryRecord(msg_id=mid, recipient=recipient, round=r,
                                                   digest_hex=digest_of(msg)))
            delivered += 1
        env = [environment_entry(cfg, r, i) for i in range(cfg.tx_per_round)] + pending_env
        pending_env = []
        trace.env_txs.extend((r, e) for e in env)

        outbound: List[Tuple[Broadcast, bool]] = []
        node_records = []
        applied_now: List[bytes] = []
        for i in range(cfg.n_nodes):
            if i in corrupt:
                node_records.append(NodeRecord(node=i, honest=False, length=0, head_hex=""))
                continue
            box = inbox[i]
            inp = RoundInput(chains=tuple(box["chains"]), candidates=tuple(box["candidates"]),
                             transactions=tuple(box["transactions"]), environment_txs=tuple(env))
            state, sent = step_round(nodes[i], inp, difficulty, cfg.q, r, validate)
            events = state.last_events
            if events.mined is not None:
                trace.provenance.setdefault((events.mined.s, events.mined.ctr), False)
            applied_now.extend(bytes.fromhex(token) for _, token in events.applied)
            nodes[i] = state
            outbound.extend((msg, True) for msg in sent)
            node_records.append(NodeRecord(
                node=i, honest=True, length=len(state.chain.blocks),
                head_hex=facts.digest(state.chain.blocks[-1]).hex(),
                mined=events.mined is not None, adopted=events.adopted,
                applied=[j for j, _ in events.applied], pool_size=len(state.pool),
            ))

        # 정직 편집 제안 (라운드 끝, 가장 낮은 번호의 정직 노드)
        candidate_events: List[Dict[str, Any]] = []
        proposer_id = min(i for i in range(cfg.n_nodes) if i not in corrupt)
        state, announcements, new_env, candidate_events = planner.step(r, nodes[proposer_id])
        nodes[proposer_id] = state
        outbound.extend((msg, True) for msg in announcements)
        pending_env.extend(new_env)

        # 적대자: 정직 메시지를 즉시 관찰한 뒤 행동
        adversary.observe(msg for msg, _ in outbound)
        outbound.extend((msg, False) for msg in adversary.act(r, len(corrupt), trace.provenance))

        for msg, honest in outbound:
            msg_id += 1
            recipients = [i for i in range(cfg.n_nodes) if i != msg.sender]
            scheduler.schedule(msg_id, msg, r, recipients)
            trace.broadcasts.append(BroadcastRecord(msg_id=msg_id, sender=msg.sender, round=r, kind=msg.kind,
                                                    digest_hex=digest_of(msg), honest=honest))

        if applied_now:
            trace.applied_tokens[r] = sorted(set(applied_now))
        trace.snapshots.append([None if i in corrupt else nodes[i].chain for i in range(cfg.n_nodes)])
        trace.honest.append([i not in corrupt for i in range(cfg.n_nodes)])
        trace.records.append(RoundRecord(round=r, nodes=node_records, broadcasts=len(outbound),
                                         deliveries=delivered, corruption=corruption_log,
                                         candidate_events=candidate_events))

    trace.malicious_tokens = set(adversary.forged_tokens)
    lengths = [len(nodes[i].chain.blocks) for i in range(cfg.n_nodes) if i not in corrupt]
    logger.info(f"✅ 시뮬레이션 완료: 정직 체인 길이 {min(lengths)}..{max(lengths)}, "
                f"편집 적용 라운드 {len(trace.applied_tokens)}개")
    return trace


# ---------------------------------------------------------------- 기록 내보내기


def trace_jsonl_lines(trace: SimTrace) -> List[str]:
    """헤더 한 줄 + 라운드당 한 줄. 같은 입력이면 바이트 단위로 같은 출력"""
    header = {"config": json.loads(trace.config.json()), "adversary": json.loads(trace.adversary.json())}
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    by_round: Dict[int, Dict[str, list]] = {}
    for b in trace.broadcasts:
        by_round.setdefault(b.round, {"broadcasts": [], "deliveries": []})["broadcasts"].append(json.loads(b.json()))
    for d in trace.deliveries:
        by_round.setdefault(d.round, {"broadcasts": [], "deliveries": []})["deliveries"].append(json.loads(d.json()))
    for rec in trace.records:
        row = json.loads(rec.json())
        row.update(by_round.get(rec.round, {"broadcasts": [], "deliveries": []}))
        row["applied_tokens_hex"] = [t.hex() for t in trace.applied_tokens.get(rec.round, [])]
        lines.append(json.dumps(row, sort_keys=True, separators=(",", ":")))
    return lines


def write_trace(trace: SimTrace, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in trace_jsonl_lines(trace):
            f.write(line + "\n")
    logger.info(f"💾 실행 기록 저장: {path}")


# ---------------------------------------------------------------- 속성 검사


def _honest_observations(trace: SimTrace) -> List[Tuple[int, int, Chain]]:
    out = []
    for r, (row, flags) in enumerate(zip(trace.snapshots, trace.honest), start=1):
        for i, (c, honest) in enumerate(zip(row, flags)):
            if honest and c is not None:
                out.append((r, i, c))
    return out


def check_chain_growth(trace: SimTrace, tau: float, s: int) -> CheckReport:
    """
    모든 s 라운드 창에서 (끝 라운드 최소 정직 길이) - (시작 라운드 최대 정직 길이) ≥ τ·s
    """
    rounds = len(trace.records)
    if s < 1 or rounds <= s:
        return CheckReport(name="chain-growth", passed=False, threshold=tau,
                           details={"reason": f"기록이 {s} 라운드보다 짧습니다", "rounds": rounds})
    lo, hi = [], []
    for rec in trace.records:
        lengths = [n.length for n in rec.nodes if n.honest]
        lo.append(min(lengths))
        hi.append(max(lengths))
    violations = []
    worst = None
    for start in range(rounds - s):
        growth = lo[start + s] - hi[start]
        rate = growth / s
        worst = rate if worst is None else min(worst, rate)
        if growth < tau * s and len(violations) < 20:
            violations.append({"round": start + 1, "growth": growth})
    passed = worst >= tau
    logger.info(f"📊 체인 성장: 최소 성장률 {worst:.3f} (τ={tau}) → {'통과' if passed else '위반'}")
    return CheckReport(name="chain-growth", passed=passed, measured=worst, threshold=tau,
                       violations=violations, details={"s": s})


def check_chain_quality(trace: SimTrace, mu: float, ell: int) -> CheckReport:
    """최종 정직 체인의 모든 ℓ 블록 창에서 적대자 블록 비율 ≤ μ"""
    final = [c for c, honest in zip(trace.snapshots[-1], trace.honest[-1]) if honest and c is not None]
    worst = 0.0
    violations = []
    for c in {id(c): c for c in final}.values():
        marks = [trace.provenance.get((b.s, b.ctr), False) for b in c.blocks[1:]]
        if len(marks) < ell:
            continue
        window = sum(marks[:ell])
        for start in range(len(marks) - ell + 1):
            if start:
                window += marks[start + ell - 1] - marks[start - 1]
            ratio = window / ell
            worst = max(worst, ratio)
            if ratio > mu and len(violations) < 20:
                violations.append({"start_height": start + 2, "ratio": ratio})
    passed = worst <= mu
    logger.info(f"📊 체인 품질: 최대 적대자 비율 {worst:.3f} (μ={mu}) → {'통과' if passed else '위반'}")
    return CheckReport(name="chain-quality", passed=passed, measured=worst, threshold=mu,
                       violations=violations, details={"ell": ell})


class _ChainView:
    """체인별 편집 위치 → 현재 다이제스트, 그리고 지연 계산된 투표 색인"""

    def __init__(self, c: Chain, facts: _BlockFacts):
        self.chain = c
        self.redacted: Dict[int, Digest] = {}
        for h, b in enumerate(c.blocks, start=1):
            digest, is_redacted = facts.get(b)
            if is_redacted:
                self.redacted[h] = digest
        self._index: Optional[VoteIndex] = None

    def identity(self, height: int) -> Tuple[bytes, int, bytes]:
        b = self.chain.at(height)
        return b.s, b.ctr, b.y[0]

    @property
    def index(self) -> VoteIndex:
        if self._index is None:
            self._index = VoteIndex.from_chain(self.chain)
        return self._index


def _prefix_violations(trace: SimTrace, k: int, editable: bool) -> List[Dict[str, Any]]:
    policy = RatioPolicy(trace.config.policy)
    facts = _BlockFacts()
    first_seen: Dict[int, Tuple[int, int]] = {}
    last_seen: Dict[int, Tuple[int, int]] = {}
    chains: Dict[int, Chain] = {}
    for r, i, c in _honest_observations(trace):
        key = id(c)
        chains[key] = c
        first_seen.setdefault(key, (r, i))
        last_seen[key] = (r, i)
    views = {key: _ChainView(c, facts) for key, c in chains.items()}
    accepted_cache: Dict[Tuple[int, bytes], bool] = {}

    def accepted_on(key: int, token: bytes) -> bool:
        hit = accepted_cache.get((key, token))
        if hit is None:
            view = views[key]
            hit = policy.accepts(view.chain, token, index=view.index)
            accepted_cache[(key, token)] = hit
        return hit

    violations: List[Dict[str, Any]] = []
    keys = sorted(chains, key=lambda key: first_seen[key])
    for a_key in keys:
        a = views[a_key]
        m = len(a.chain.blocks) - k
        if m < 1:
            continue
        a_round, a_node = first_seen[a_key]
        a_redacted = {h: d for h, d in a.redacted.items() if h <= m}
        for b_key in keys:
            b_round, b_node = last_seen[b_key]
            if b_round < a_round or a_key == b_key:
                continue
            b = views[b_key]
            where = {"node1": a_node, "round1": a_round, "node2": b_node, "round2": b_round}
            if len(b.chain.blocks) < m or b.identity(m) != a.identity(m):
                violations.append(dict(where, index=m, kind="fork"))
                continue
            if a.redacted == b.redacted:
                continue
            b_redacted = {h: d for h, d in b.redacted.items() if h <= m}
            if a_redacted == b_redacted:
                continue
            for h in sorted(set(a_redacted) | set(b_redacted)):
                da, db = a_redacted.get(h), b_redacted.get(h)
                if da == db:
                    continue
                if not editable:
                    violations.append(dict(where, index=h, kind="differs"))
                    break
                if db is not None and not accepted_on(b_key, db):
                    violations.append(dict(where, index=h, kind="unapproved-on-later"))
                    break
                if db is None and accepted_on(b_key, da):
                    violations.append(dict(where, index=h, kind="approved-edit-missing"))
                    break
    return violations


def check_editable_common_prefix(trace: SimTrace, k: int) -> CheckReport:
    """
    k-편집 가능 공통 접두사: 앞선 관찰 C1을 k만큼 자른 것이 C2의 접두사이거나,
    다른 블록은 모두 C2 위에서 승인된 편집이어야 함
    """
    violations = _prefix_violations(trace, k, editable=True)
    passed = not violations
    logger.info(f"📊 편집 가능 공통 접두사 (k={k}): 위반 {len(violations)}건")
    return CheckReport(name="editable-common-prefix", passed=passed, measured=float(len(violations)),
                       threshold=0.0, violations=violations[:50], details={"k": k})


def check_common_prefix(trace: SimTrace, k: int) -> CheckReport:
    """편집을 허용하지 않는 일반 공통 접두사"""
    violations = _prefix_violations(trace, k, editable=False)
    logger.info(f"📊 공통 접두사 (k={k}): 위반 {len(violations)}건")
    return CheckReport(name="common-prefix", passed=not violations, measured=float(len(violations)),
                       threshold=0.0, violations=violations[:50], details={"k": k})


def check_liveness(trace: SimTrace, k: int, horizon: Optional[int] = None) -> CheckReport:
    """
    환경 입력이 모든 정직 체인에서 k 깊이가 될 때까지 걸린 라운드 u를 측정
    horizon 라운드보다 오래된 입력이 확정되지 않으면 위반
    """
    horizon = horizon if horizon is not None else 10 * k
    rounds = len(trace.records)
    depth_cache: Dict[int, Tuple[Chain, Dict[bytes, int]]] = {}

    def heights(c: Chain) -> Dict[bytes, int]:
        hit = depth_cache.get(id(c))
        if hit is None or hit[0] is not c:
            where: Dict[bytes, int] = {}
            for h, b in enumerate(c.blocks, start=1):
                for e in b.x.entries:
                    where.setdefault(e, h)
            hit = (c, where)
            depth_cache[id(c)] = hit
        return hit[1]

    def confirmed_at(r: int, entry: bytes) -> bool:
        row, flags = trace.snapshots[r - 1], trace.honest[r - 1]
        for c, honest in zip(row, flags):
            if not honest or c is None:
                continue
            h = heights(c).get(entry)
            if h is None or h > len(c.blocks) - k:
                return False
        return True

    waits: List[int] = []
    violations = []
    pending = 0
    for given, entry in trace.env_txs:
        u = next((r - given for r in range(given, rounds + 1) if confirmed_at(r, entry)), None)
        if u is not None:
            waits.append(u)
        elif given <= rounds - horizon:
            violations.append({"round": given, "entry_hex": entry.hex()[:32]})
        else:
            pending += 1
    measured = float(max(waits)) if waits else None
    logger.info(f"📊 활성: 최대 확정 지연 u={measured}, 미확정 {pending}건, 위반 {len(violations)}건")
    return CheckReport(name="liveness", passed=not violations, measured=measured, threshold=float(horizon),
                       violations=violations[:50],
                       details={"k": k, "confirmed": len(waits), "pending": pending,
                                "mean_u": float(np.mean(waits)) if waits else None})


def audit_delivery(trace: SimTrace, delta: int) -> CheckReport:
    """정직 브로드캐스트는 그동안 정직했던 모든 노드에 Δ 라운드 안에 전달"""
    got: Dict[Tuple[int, int], int] = {}
    for d in trace.deliveries:
        got.setdefault((d.msg_id, d.recipient), d.round)
    n = trace.config.n_nodes
    rounds = len(trace.records)
    violations = []
    worst = 0
    for b in trace.broadcasts:
        if not b.honest or b.round + delta > rounds:
            continue
        for i in range(n):
            if i == b.sender:
                continue
            if not all(trace.honest[r - 1][i] for r in range(b.round + 1, b.round + delta + 1)):
                continue
            at = got.get((b.msg_id, i))
            if at is None or at - b.round > delta:
                violations.append({"msg_id": b.msg_id, "recipient": i})
            else:
                worst = max(worst, at - b.round)
    return CheckReport(name="delivery", passed=not violations, measured=float(worst), threshold=float(delta),
                       violations=violations[:50])


def audit_content_integrity(trace: SimTrace) -> CheckReport:
    """전달된 메시지는 보낸 메시지와 바이트 단위로 같음"""
    sent = {b.msg_id: b.digest_hex for b in trace.broadcasts}
    violations = [{"msg_id": d.msg_id, "recipient": d.recipient}
                  for d in trace.deliveries if sent.get(d.msg_id) != d.digest_hex]
    return CheckReport(name="content-integrity", passed=not violations, measured=float(len(violations)),
                       threshold=0.0, violations=violations[:50])


def honest_adopted_tokens(trace: SimTrace, tokens: Iterable[bytes]) -> List[Dict[str, Any]]:
    """정직 노드 체인에 (현재 다이제스트 기준) 나타난 적대자 블록"""
    tokens = set(tokens)
    if not tokens:
        return []
    facts = _BlockFacts()
    seen: Set[int] = set()
    hits = []
    for r, i, c in _honest_observations(trace):
        if id(c) in seen:
            continue
        seen.add(id(c))
        for h, b in enumerate(c.blocks, start=1):
            if facts.digest(b) in tokens:
                hits.append({"round": r, "node": i, "height": h})
                break
    return hits


def standard_checks(trace: SimTrace, quality_window: Optional[int] = None) -> List[CheckReport]:
    """CLI와 API가 함께 쓰는 기본 검사 묶음. 성장/품질은 측정값만 보고 (임계값 0, 1)"""
    cfg = trace.config
    reports = [
        check_editable_common_prefix(trace, cfg.k),
        check_common_prefix(trace, cfg.k),
        check_liveness(trace, cfg.k),
        audit_delivery(trace, cfg.max_delay),
        audit_content_integrity(trace),
    ]
    window = min(quality_window or max(cfg.ell, 2 * cfg.k), max(1, len(trace.records) - 1))
    reports.append(check_chain_growth(trace, 0.0, window))
    reports.append(check_chain_quality(trace, 1.0, window))
    return reports
