# src/api/simulation.py
"""
시뮬레이션 / 공격 시나리오 API 라우터
"""

from fastapi import APIRouter, HTTPException, status
from loguru import logger

from ..core.errors import RedactableChainError, UnknownScenario
from ..models.api_models import AttackRequest, SimulationRunRequest, SimulationRunResponse
from ..models.sim_models import ScenarioReport
from ..services.attack_service import run_attack_scenario
from ..services.netsim_service import run_simulation, standard_checks

router = APIRouter()

# 요청 하나가 서버를 오래 붙잡지 않도록
MAX_ROUNDS = 2_000
MAX_NODES = 32


@router.post("/run", response_model=SimulationRunResponse)
def run(request: SimulationRunRequest):
    """
    🚀 라운드 시뮬레이션 실행

    - 설정과 적대자 명세로 결정적 실행
    - 편집 가능 공통 접두사, 공통 접두사, 활성, 전달, 성장, 품질 검사 결과 반환
    """
    cfg = request.config
    if cfg.rounds > MAX_ROUNDS or cfg.n_nodes > MAX_NODES:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST,
                            detail=f"rounds ≤ {MAX_ROUNDS}, n_nodes ≤ {MAX_NODES}")
    try:
        logger.info(f"🚀 시뮬레이션 요청: 노드 {cfg.n_nodes}, 라운드 {cfg.rounds}, 시드 {cfg.master_seed}")
        trace = run_simulation(cfg, request.adversary)
        final = [c for c, honest in zip(trace.snapshots[-1], trace.honest[-1]) if honest and c is not None]
        return SimulationRunResponse(
            rounds=len(trace.records),
            final_lengths=[len(c.blocks) for c in final],
            checks=standard_checks(trace),
        )
    except RedactableChainError as e:
        logger.warning(f"⚠️ 시뮬레이션 설정 거부: {e}")
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"{type(e).__name__}: {e}")
    except Exception as e:
        logger.error(f"❌ 시뮬레이션 실패: {e}")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
                            detail=f"시뮬레이션 중 오류가 발생했습니다: {str(e)}")


@router.post("/attack", response_model=ScenarioReport)
def attack(request: AttackRequest):
    """🛡️ 공격 시나리오를 시드별로 실행하고 판정 보고"""
    try:
        return run_attack_scenario(request.scenario, seeds=request.seeds)
    except UnknownScenario as e:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=str(e))
    except RedactableChainError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"{type(e).__name__}: {e}")
    except Exception as e:
        logger.error(f"❌ 공격 시나리오 실패: {e}")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
                            detail=f"공격 시나리오 실행 중 오류가 발생했습니다: {str(e)}")
