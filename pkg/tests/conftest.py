# tests/conftest.py
"""공용 픽스처: 쉬운 난이도 체인, 편집된 체인, 원장 체인, 작은 시뮬레이션 설정"""

import json
import os
from typing import Callable

import pytest

from chain_helpers import approve, drop_first, extend
from src.core.chain import new_chain
from src.core.hashcore import MAX_TARGET, target_to_hex
from src.core.redaction import RatioPolicy, apply_redaction, propose_edit
from src.models.chain_models import Chain, ChainMode, PolicyParams
from src.models.sim_models import SimConfig
from src.services.ledger_service import BuildResult, build_chain

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def golden():
    with open(os.path.join(FIXTURES, "golden_vectors.json"), encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def params() -> PolicyParams:
    """k=2, ℓ=3, ρ=0.6 → 창당 2표 필요"""
    return PolicyParams(k=2, ell=3, rho=0.6)


@pytest.fixture
def honest_chain() -> Callable[..., Chain]:
    """최대 목표값(모든 해시 통과)으로 n개 블록 체인 생성"""

    def make(n: int, mode: ChainMode = ChainMode.SINGLE) -> Chain:
        return extend(new_chain(MAX_TARGET, mode=mode), n - 1)

    return make


@pytest.fixture
def redact() -> Callable[..., Chain]:
    """높이 j의 첫 항목을 제거하는 편집을 제안, 투표, 적용"""

    def run(c: Chain, j: int, params: PolicyParams) -> Chain:
        cand = propose_edit(c, j, drop_first(c, j), params.k, c.mode)
        c = approve(c, cand, params)
        return apply_redaction(c, j, cand, RatioPolicy(params))

    return run


@pytest.fixture
def redacted_generic(params) -> BuildResult:
    return build_chain(ChainMode.SINGLE, 20, 2, 2, params, seed=3)


@pytest.fixture
def redacted_ledger(params) -> BuildResult:
    return build_chain(ChainMode.LEDGER, 20, 2, 1, params, seed=1)


@pytest.fixture
def sim_config() -> SimConfig:
    """노드 3개, 60 라운드, 라운드당 성공 확률이 높은 난이도"""
    return SimConfig(n_nodes=3, n_corrupt=0, rounds=60, q=2, max_delay=1, k=2, ell=3, rho=0.6,
                     difficulty_hex=target_to_hex(2 ** 253))
