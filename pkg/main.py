# main.py

import os
import sys
from datetime import datetime

from dotenv import load_dotenv
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from loguru import logger

from src.utils.log_config import configure_logging

# 환경 변수 로드
load_dotenv()


# 🌍 환경 감지
class EnvironmentDetector:
    @staticmethod
    def detect_environment():
        """실행 환경 자동 감지"""
        if os.getenv("LOCAL_DEV") == "true" or os.getenv("DEVELOPMENT_MODE") == "true":
            return "local_dev"
        elif os.getenv("PRODUCTION") == "true":
            return "production"
        else:
            return "default"

    @staticmethod
    def get_environment_config(env_type: str) -> dict:
        """환경별 설정 반환"""
        configs = {
            "local_dev": {
                "debug": True,
                "reload": True,
                "log_level": "debug",
                "cors_origins": ["*"],
                "description": "🏠 로컬 개발 환경에서 실행 중",
                "features": {"api_docs": True},
            },
            "production": {
                "debug": False,
                "reload": False,
                "log_level": "warning",
                "cors_origins": [o for o in os.getenv("CORS_ORIGINS", "").split(",") if o],
                "description": "🏭 프로덕션 환경에서 실행 중",
                "features": {"api_docs": False},
            },
            "default": {
                "debug": False,
                "reload": False,
                "log_level": "info",
                "cors_origins": ["*"],
                "description": "🔧 기본 환경에서 실행 중",
                "features": {"api_docs": True},
            },
        }
        return configs.get(env_type, configs["default"])


# 환경 감지 및 설정
ENVIRONMENT = EnvironmentDetector.detect_environment()
CONFIG = EnvironmentDetector.get_environment_config(ENVIRONMENT)

configure_logging(os.getenv("LOG_LEVEL") or CONFIG["log_level"])
logger.info(f"🌍 감지된 환경: {ENVIRONMENT} ({CONFIG['description']})")

app = FastAPI(
    title="🔗 Redactable Chain Inspector",
    description=f"합의 투표 기반 편집 가능 블록체인 검사 API ({CONFIG['description']})",
    version=os.getenv("VERSION", "1.0.0"),
    docs_url="/docs" if CONFIG["features"]["api_docs"] else None,
    redoc_url="/redoc" if CONFIG["features"]["api_docs"] else None,
    debug=CONFIG["debug"],
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=CONFIG["cors_origins"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

from src.api import chain, simulation  # noqa: E402

app.include_router(chain.router, prefix="/api/v1/chain", tags=["🔗 Chain"])
app.include_router(simulation.router, prefix="/api/v1/simulation", tags=["🚀 Simulation"])
logger.info("✅ API 라우터 등록 완료")


@app.get("/api/v1/health")
async def health_check():
    """헬스 체크 (환경 정보 포함)"""
    from src.core.config import get_settings

    settings = get_settings()
    return {
        "status": "healthy",
        "environment": ENVIRONMENT,
        "config": CONFIG["description"],
        "policy": {"k": settings.k, "ell": settings.ell, "rho": settings.rho, "mode": settings.mode},
        "timestamp": datetime.now().isoformat(),
        "python_version": sys.version.split()[0],
        "debug_mode": CONFIG["debug"],
    }


# 환경별 실행 (스크립트로 직접 실행할 때)
if __name__ == "__main__":
    import uvicorn

    port = int(os.getenv("API_PORT", 7860))
    logger.info(f"🚀 {CONFIG['description']} 서버 시작 (포트 {port}, 리로드 {CONFIG['reload']})")

    uvicorn.run(
        "main:app" if CONFIG["reload"] else app,
        host="0.0.0.0",
        port=port,
        reload=CONFIG["reload"],
        log_level=CONFIG["log_level"],
    )
