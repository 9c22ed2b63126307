# src/core/config.py
"""
체인 설정
기본값 → 환경 변수(.env) → key=value 설정 파일 → CLI 플래그 순으로 덮어씀
"""

import os
from typing import Any, Dict, Optional

from dotenv import dotenv_values, load_dotenv
from loguru import logger
from pydantic import BaseModel, Field, ValidationError, validator

from .errors import ConfigInvalid
from .hashcore import target_from_hex, target_to_hex

# 환경 변수 로드
load_dotenv()

MIN_RELAY_FEE = 1_000
DEFAULT_DIFFICULTY_HEX = target_to_hex(2 ** 252)

# 설정 키 → 환경 변수 이름
ENV_KEYS = {
    "k": "REDACT_K",
    "ell": "REDACT_ELL",
    "rho": "REDACT_RHO",
    "difficulty_hex": "REDACT_DIFFICULTY_HEX",
    "min_edit_fee": "REDACT_MIN_EDIT_FEE",
    "min_relay_fee": "REDACT_MIN_RELAY_FEE",
    "subsidy": "REDACT_SUBSIDY",
    "mode": "REDACT_MODE",
    "log_level": "LOG_LEVEL",
}

MODES = ("single", "ext", "ledger")


class ChainSettings(BaseModel):
    """정책 파라미터와 난이도, 수수료 설정"""
    k: int = Field(default=6, description="확정 깊이 (블록 수)")
    ell: int = Field(default=5, description="투표 기간 길이 (블록 수)")
    rho: float = Field(default=0.6, description="승인 비율 (0, 1]")
    difficulty_hex: str = Field(default=DEFAULT_DIFFICULTY_HEX, description="256비트 난이도 목표값 (hex)")
    min_relay_fee: int = Field(default=MIN_RELAY_FEE, description="표준 최소 전달 수수료")
    min_edit_fee: int = Field(default=10 * MIN_RELAY_FEE, description="editTx 최소 수수료")
    subsidy: int = Field(default=5_000_000_000, description="코인베이스 보상")
    mode: str = Field(default="single", description="single | ext | ledger")
    log_level: str = Field(default="INFO", description="loguru 로그 레벨")

    class Config:
        allow_mutation = False
        schema_extra = {
            "example": {
                "k": 6,
                "ell": 5,
                "rho": 0.6,
                "difficulty_hex": DEFAULT_DIFFICULTY_HEX,
                "min_edit_fee": 10000,
                "mode": "single",
            }
        }

    @validator("k", "ell")
    def _positive(cls, v, field):
        if v < 1:
            raise ValueError(f"{field.name}는 1 이상이어야 합니다")
        return v

    @validator("rho")
    def _ratio(cls, v):
        if not 0 < v <= 1:
            raise ValueError("rho는 (0, 1] 범위여야 합니다")
        return v

    @validator("difficulty_hex")
    def _difficulty(cls, v):
        return target_to_hex(target_from_hex(v))

    @validator("mode")
    def _mode(cls, v):
        v = v.strip().lower()
        if v not in MODES:
            raise ValueError(f"알 수 없는 모드: {v}")
        return v

    @validator("min_edit_fee", "min_relay_fee", "subsidy")
    def _non_negative(cls, v, field):
        if v < 0:
            raise ValueError(f"{field.name}는 음수일 수 없습니다")
        return v

    @property
    def difficulty(self) -> int:
        return target_from_hex(self.difficulty_hex)

    def policy_params(self):
        from ..models.chain_models import PolicyParams
        return PolicyParams(k=self.k, ell=self.ell, rho=self.rho)


def _env_overrides() -> Dict[str, Any]:
    overrides = {}
    for key, env_name in ENV_KEYS.items():
        value = os.getenv(env_name)
        if value not in (None, ""):
            overrides[key] = value
    return overrides


def build_settings(file_values: Optional[Dict[str, Any]] = None, **overrides: Any) -> ChainSettings:
    """우선순위에 따라 값을 합쳐 ChainSettings 생성. 잘못된 값이면 ConfigInvalid"""
    merged: Dict[str, Any] = {}
    merged.update(_env_overrides())
    merged.update({k: v for k, v in (file_values or {}).items() if v is not None})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(merged) - set(ChainSettings.__fields__)
    if unknown:
        raise ConfigInvalid(f"알 수 없는 설정 키: {sorted(unknown)}")
    try:
        return ChainSettings(**merged)
    except ValidationError as e:
        raise ConfigInvalid(str(e)) from e


def load_settings(path: Optional[str] = None, **overrides: Any) -> ChainSettings:
    """key=value 설정 파일(선택)과 CLI 값으로 설정 로드"""
    file_values: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise ConfigInvalid(f"설정 파일이 없습니다: {path}")
        file_values = {k.strip(): v for k, v in dotenv_values(path).items()}
        logger.debug(f"🔍 설정 파일 로드: {path} ({len(file_values)}개 키)")
    return build_settings(file_values, **overrides)


def write_settings(settings: ChainSettings, path: str) -> None:
    lines = [f"{key}={getattr(settings, key)}" for key in ("k", "ell", "rho", "difficulty_hex", "min_edit_fee", "mode")]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


_settings_instance: Optional[ChainSettings] = None


def get_settings() -> ChainSettings:
    global _settings_instance
    if _settings_instance is None:
        _settings_instance = build_settings()
        logger.info(f"✅ 체인 설정 로드 완료: k={_settings_instance.k}, ell={_settings_instance.ell}, "
                    f"rho={_settings_instance.rho}, mode={_settings_instance.mode}")
    return _settings_instance
