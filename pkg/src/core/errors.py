# src/core/errors.py
"""도메인 예외 모음"""


class RedactableChainError(Exception):
    """편집 가능 체인 관련 모든 예외의 기반 클래스"""


class EmptyChain(RedactableChainError):
    pass


class ModeViolation(RedactableChainError):
    """단일 편집 모드에서 허용되지 않는 상태"""


class PolicyNotAccepted(RedactableChainError):
    pass


class CandidateInvalid(RedactableChainError):
    pass


class IndexOutOfRange(RedactableChainError):
    pass


class GenesisImmutable(RedactableChainError):
    pass


class TargetNotStable(RedactableChainError):
    """대상 블록이 아직 k 깊이에 도달하지 않음"""


class VotesTampered(RedactableChainError):
    """후보 페이로드가 원본의 투표 목록을 건드림"""


class NoOpEdit(VotesTampered):
    """후보 페이로드가 원본과 동일"""


class EmptyLeaves(RedactableChainError):
    pass


class FeeTooLow(RedactableChainError):
    pass


class InsufficientFunds(RedactableChainError):
    pass


class CandidateMalformed(RedactableChainError):
    """후보 트랜잭션이 원본과 일관되지 않음"""


class TxNotFound(RedactableChainError):
    pass


class NotARedactedSlot(RedactableChainError):
    pass


class AlreadySpent(RedactableChainError):
    pass


class UnknownOutput(RedactableChainError):
    pass


class DataOutputUnspendable(RedactableChainError):
    pass


class ConfigInvalid(RedactableChainError):
    pass


class UnknownScenario(RedactableChainError):
    pass


class SpecInvalid(RedactableChainError):
    pass


class DumpCorrupt(RedactableChainError):
    pass
