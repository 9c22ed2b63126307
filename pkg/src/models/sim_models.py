"""
노드/시뮬레이터 데이터 모델들
노드 상태, 라운드 입력, 메시지, 시뮬레이션 설정과 실행 기록
"""

from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Set, Tuple

from pydantic import BaseModel, Field

from ..core.hashcore import target_to_hex
from .chain_models import (
    Block, CandidateAnnouncement, CandidateBlock, CandidatePool, Chain, ChainMode, PolicyParams,
)

EndorsementRule = Callable[[Chain, CandidateBlock], bool]


class NodeRole(str, Enum):
    HONEST = "honest"
    CORRUPTED = "corrupted"


class MessageKind(str, Enum):
    CHAIN = "chain"
    CANDIDATE = "candidate"
    TRANSACTION = "transaction"


class Broadcast(BaseModel):
    """노드가 내보내는 메시지. 내용은 전달 중 변경되지 않음"""
    kind: MessageKind
    sender: int
    chain: Optional[Chain] = None
    candidate: Optional[CandidateAnnouncement] = None
    transaction: Optional[bytes] = None

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True


class RoundInput(BaseModel):
    chains: Tuple[Chain, ...] = Field(default=(), description="전달된 체인")
    candidates: Tuple[CandidateAnnouncement, ...] = Field(default=(), description="전달된 후보 공지")
    transactions: Tuple[bytes, ...] = Field(default=(), description="전달된 트랜잭션")
    environment_txs: Tuple[bytes, ...] = Field(default=(), description="환경이 준 입력")

    class Config:
        allow_mutation = False


class RoundEvents(BaseModel):
    """한 라운드 동안 노드에서 일어난 일 (기록용)"""
    adopted: bool = False
    mined: Optional[Block] = None
    applied: Tuple[Tuple[int, str], ...] = ()
    discarded_candidates: int = 0

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True


class NodeState(BaseModel):
    """노드의 라운드 상태"""
    node_id: int
    chain: Chain
    genesis: Block
    pool: CandidatePool = Field(default_factory=CandidatePool)
    params: PolicyParams
    mode: ChainMode = ChainMode.SINGLE
    endorsement: EndorsementRule
    miner_seed: int
    role: NodeRole = NodeRole.HONEST
    mempool: Tuple[bytes, ...] = ()
    last_events: RoundEvents = Field(default_factory=RoundEvents)

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True


class AdversaryStrategy(str, Enum):
    NONE = "none"
    DELAY_ONLY = "delay-only"
    MALICIOUS_CANDIDATE = "malicious-candidate"
    UNAPPROVED_EDIT = "unapproved-edit"


class DelayPolicy(str, Enum):
    IMMEDIATE = "immediate"
    RANDOM = "random"
    MAXIMUM = "maximum"


class CorruptionEvent(BaseModel):
    round: int = Field(..., ge=1)
    node: int = Field(..., ge=0)
    corrupt: bool = Field(..., description="True면 오염, False면 복구")

    class Config:
        allow_mutation = False
        frozen = True


class AdversarySpec(BaseModel):
    strategy: AdversaryStrategy = AdversaryStrategy.NONE
    delay_policy: DelayPolicy = DelayPolicy.IMMEDIATE
    corruption_schedule: Tuple[CorruptionEvent, ...] = ()
    attack_round: int = Field(default=40, ge=1, description="공격 시작 라운드")

    class Config:
        allow_mutation = False

    @classmethod
    def honest(cls) -> "AdversarySpec":
        return cls()

    @classmethod
    def delay_only(cls) -> "AdversarySpec":
        return cls(strategy=AdversaryStrategy.DELAY_ONLY, delay_policy=DelayPolicy.RANDOM)


class SimConfig(BaseModel):
    n_nodes: int = Field(default=4, ge=1)
    n_corrupt: int = Field(default=0, ge=0)
    rounds: int = Field(default=100, ge=1)
    q: int = Field(default=4, ge=1, description="정직 노드의 라운드당 해시 시도 횟수")
    max_delay: int = Field(default=1, description="Δ: 최대 전달 지연 (라운드)")
    difficulty_hex: str = Field(default=target_to_hex(2 ** 250), description="라운드당 성공 확률을 정하는 난이도")
    k: int = Field(default=3, ge=1)
    ell: int = Field(default=5, ge=1)
    rho: float = Field(default=0.6, gt=0, le=1)
    mode: ChainMode = ChainMode.SINGLE
    master_seed: int = Field(default=0, ge=0)
    scenario: str = Field(default="honest")
    tx_per_round: int = Field(default=1, ge=0)
    edit_every: Optional[int] = Field(default=None, ge=1, description="정직 편집 제안 주기 (라운드)")
    edit_start: int = Field(default=20, ge=1)

    class Config:
        allow_mutation = False

    @property
    def policy(self) -> PolicyParams:
        return PolicyParams(k=self.k, ell=self.ell, rho=self.rho)


class NodeRecord(BaseModel):
    node: int
    honest: bool
    length: int
    head_hex: str
    mined: bool = False
    adopted: bool = False
    applied: List[int] = Field(default_factory=list)
    pool_size: int = 0


class RoundRecord(BaseModel):
    round: int
    nodes: List[NodeRecord]
    broadcasts: int = 0
    deliveries: int = 0
    corruption: List[Dict[str, Any]] = Field(default_factory=list)
    candidate_events: List[Dict[str, Any]] = Field(default_factory=list)


class BroadcastRecord(BaseModel):
    msg_id: int
    sender: int
    round: int
    kind: MessageKind
    digest_hex: str
    honest: bool


class DeliveryRecord(BaseModel):
    msg_id: int
    recipient: int
    round: int
    digest_hex: str


class SimTrace(BaseModel):
    """
    실행 기록
    체인 스냅샷과 채굴자 출처는 메모리 전용 (합의 데이터가 아님)
    """
    config: SimConfig
    adversary: AdversarySpec
    records: List[RoundRecord] = Field(default_factory=list)
    broadcasts: List[BroadcastRecord] = Field(default_factory=list)
    deliveries: List[DeliveryRecord] = Field(default_factory=list)
    env_txs: List[Tuple[int, bytes]] = Field(default_factory=list)
    snapshots: List[List[Optional[Chain]]] = Field(default_factory=list)
    honest: List[List[bool]] = Field(default_factory=list)
    provenance: Dict[Tuple[bytes, int], bool] = Field(default_factory=dict)
    malicious_tokens: Set[bytes] = Field(default_factory=set)
    applied_tokens: Dict[int, List[bytes]] = Field(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True


class CheckReport(BaseModel):
    """속성 검사 결과"""
    name: str
    passed: bool
    measured: Optional[float] = None
    threshold: Optional[float] = None
    violations: List[Dict[str, Any]] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)


class ScenarioReport(BaseModel):
    """공격 시나리오 판정 {scenario, seeds, passes, failures[], details}"""
    scenario: str
    seeds: List[int]
    passes: int
    failures: List[Dict[str, Any]] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures and self.passes == len(self.seeds)
