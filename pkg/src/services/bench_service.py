# src/services/bench_service.py
"""
검증 시간 벤치마크
결정적 체인 생성 → 덤프 → 반복 검증 시간 측정 → 기준 대비 오버헤드(%)
세 가지 실험: (a) 편집 0개 vs 불변 검증기, (b) 편집 비율, (c) 투표 기간 ℓ
"""

import math
import os
import time
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field, validator

from ..core.chain import validate_chain_immutable, validate_for_mode
from ..core.dump import read_any_dump, write_any_dump
from ..core.errors import SpecInvalid
from ..core.ledger import validate_ledger_chain, validate_ledger_chain_immutable
from ..core.redaction import RatioPolicy
from ..models.chain_models import Chain, ChainMode, PolicyParams
from ..models.ledger_models import LedgerChain
from .ledger_service import BuildResult, build_chain

REDACTABLE = "redactable"
IMMUTABLE = "immutable"

CSV_METRIC_COLUMNS = ["mean_ms", "stddev_ms", "overhead_pct", "baseline_name"]


class BenchSpec(BaseModel):
    """벤치마크 작업량. 같은 명세면 같은 체인"""
    n_blocks: int = Field(default=2000, ge=2, description="블록 수")
    tx_per_block: int = Field(default=100, ge=1, description="블록당 트랜잭션 수")
    redaction_fraction: float = Field(default=0.0, ge=0, le=1, description="편집할 블록 비율")
    k: int = Field(default=6, ge=1)
    ell: int = Field(default=5, ge=1)
    rho: float = Field(default=0.6, gt=0, le=1)
    repetitions: int = Field(default=20, ge=1, description="검증 반복 횟수")
    seed: int = Field(default=0, ge=0)
    mode: ChainMode = ChainMode.LEDGER
    subsidy: int = Field(default=5_000_000_000, ge=0)

    class Config:
        allow_mutation = False

    @validator("redaction_fraction")
    def _fraction(cls, v):
        if math.isnan(v):
            raise ValueError("redaction_fraction는 숫자여야 합니다")
        return v

    @property
    def n_redactions(self) -> int:
        return int(math.floor(self.redaction_fraction * self.n_blocks + 1e-9))

    @property
    def params(self) -> PolicyParams:
        return PolicyParams(k=self.k, ell=self.ell, rho=self.rho)

    def config_fields(self) -> Dict[str, Any]:
        return {
            "n_blocks": self.n_blocks,
            "tx_per_block": self.tx_per_block,
            "redaction_fraction": self.redaction_fraction,
            "n_redactions": self.n_redactions,
            "k": self.k,
            "ell": self.ell,
            "rho": self.rho,
            "seed": self.seed,
            "mode": self.mode.value,
        }


class BenchResult(BaseModel):
    """설정 하나의 검증 시간 통계"""
    name: str
    experiment: str = Field(default="", description="a / b / c 또는 빈 값")
    validator: str = REDACTABLE
    config: Dict[str, Any] = Field(default_factory=dict)
    repetitions: int
    runs_ms: List[float] = Field(default_factory=list)
    mean_ms: float
    stddev_ms: float
    valid: bool
    overhead_pct: Optional[float] = None
    baseline_name: Optional[str] = None

    def against(self, baseline: "BenchResult") -> "BenchResult":
        """명시한 기준 결과 대비 오버헤드를 채운 사본"""
        overhead = (self.mean_ms - baseline.mean_ms) / baseline.mean_ms * 100.0 if baseline.mean_ms > 0 else None
        return self.copy(update={"overhead_pct": overhead, "baseline_name": baseline.name})


def generate_chain(spec: BenchSpec, path: Optional[str] = None) -> BuildResult:
    """
    명세대로 체인을 만들고 path가 있으면 덤프로 저장
    정확히 ⌊비율·블록 수⌋개의 승인된 편집. 대상이 부족하면 SpecInvalid
    """
    result = build_chain(spec.mode, spec.n_blocks, spec.tx_per_block, spec.n_redactions, spec.params, spec.seed)
    if path is not None:
        write_any_dump(result.chain, path)
    return result


def _validator_for(chain: Union[Chain, LedgerChain], kind: str, params: PolicyParams, subsidy: int):
    if kind not in (REDACTABLE, IMMUTABLE):
        raise SpecInvalid(f"알 수 없는 검증기: {kind}")
    if isinstance(chain, LedgerChain):
        if kind == IMMUTABLE:
            return lambda: validate_ledger_chain_immutable(chain, params, subsidy)
        return lambda: validate_ledger_chain(chain, params, subsidy)
    if kind == IMMUTABLE:
        return lambda: validate_chain_immutable(chain)
    policy = RatioPolicy(params)
    return lambda: validate_for_mode(chain, policy) is None


def time_validation(chain: Union[Chain, LedgerChain], repetitions: int, kind: str, params: PolicyParams,
                    subsidy: int = 5_000_000_000) -> Dict[str, Any]:
    """검증 호출만 단조 시계로 측정 (파싱 제외)"""
    if repetitions < 1:
        raise SpecInvalid("repetitions는 1 이상이어야 합니다")
    run = _validator_for(chain, kind, params, subsidy)
    runs_ms = []
    valid = True
    for _ in range(repetitions):
        start = time.perf_counter()
        valid = run()
        runs_ms.append((time.perf_counter() - start) * 1000.0)
    arr = np.array(runs_ms)
    return {
        "runs_ms": runs_ms,
        "mean_ms": float(arr.mean()),
        "stddev_ms": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
        "valid": bool(valid),
    }


def bench_validate(path: str, repetitions: int, validator: str = REDACTABLE, params: Optional[PolicyParams] = None,
                   subsidy: int = 5_000_000_000, baseline: Optional[BenchResult] = None,
                   name: Optional[str] = None, experiment: str = "",
                   config: Optional[Dict[str, Any]] = None) -> BenchResult:
    """
    덤프를 한 번 읽고 전체 체인 검증을 repetitions번 측정
    깨진 덤프는 DumpCorrupt
    """
    chain = read_any_dump(path)
    params = params or PolicyParams(k=6, ell=5, rho=0.6)
    stats = time_validation(chain, repetitions, validator, params, subsidy)
    result = BenchResult(
        name=name or f"{os.path.basename(path)}:{validator}",
        experiment=experiment,
        validator=validator,
        config=config or {},
        repetitions=repetitions,
        **stats,
    )
    if not result.valid:
        logger.warning(f"⚠️ {result.name}: 체인 검증 실패")
    if baseline is not None:
        result = result.against(baseline)
    overhead = f", 오버헤드 {result.overhead_pct:.2f}%" if result.overhead_pct is not None else ""
    logger.info(f"📊 {result.name}: 평균 {result.mean_ms:.2f}ms ± {result.stddev_ms:.2f}{overhead}")
    return result


def _measure(spec: BenchSpec, workdir: str, tag: str, validator: str, experiment: str,
             baseline: Optional[BenchResult] = None) -> BenchResult:
    path = os.path.join(workdir, f"{tag}.jsonl")
    if not os.path.exists(path):
        generate_chain(spec, path)
    return bench_validate(path, spec.repetitions, validator, spec.params, spec.subsidy, baseline,
                          name=f"{tag}:{validator}", experiment=experiment, config=spec.config_fields())


def run_overhead_experiments(base: BenchSpec, workdir: str, experiments: Iterable[str] = ("a", "b", "c"),
                             fractions: Sequence[float] = (0.02, 0.04, 0.06, 0.08, 0.10),
                             ells: Sequence[int] = (5, 10, 20, 40)) -> List[BenchResult]:
    """
    (a) 편집 0개 체인: 불변 검증기 기준 대비 편집 가능 검증기
    (b) 편집 비율별: 편집 0개 편집 가능 검증 기준
    (c) ℓ별 (편집 1%, ρ = (⌊ℓ/2⌋+1)/ℓ): ℓ = 5 기준
    """
    os.makedirs(workdir, exist_ok=True)
    experiments = set(experiments)
    results: List[BenchResult] = []
    zero = base.copy(update={"redaction_fraction": 0.0})

    redactable_zero = None
    if experiments & {"a", "b"}:
        immutable = _measure(zero, workdir, "zero", IMMUTABLE, "a")
        redactable_zero = _measure(zero, workdir, "zero", REDACTABLE, "a", immutable)
        if "a" in experiments:
            results += [immutable, redactable_zero]
    if "b" in experiments:
        for fraction in fractions:
            spec = base.copy(update={"redaction_fraction": fraction})
            results.append(_measure(spec, workdir, f"fraction-{fraction:.2f}", REDACTABLE, "b", redactable_zero))
    if "c" in experiments:
        ell_baseline = None
        for ell in sorted(ells):
            params = PolicyParams.majority(base.k, ell)
            spec = base.copy(update={"ell": ell, "rho": params.rho, "redaction_fraction": 0.01})
            result = _measure(spec, workdir, f"ell-{ell}", REDACTABLE, "c", ell_baseline)
            if ell_baseline is None and ell == 5:
                ell_baseline = result
                result = result.against(result)
            results.append(result)
    return results


def fit_overhead_trend(xs: Sequence[float], ys: Sequence[float]) -> Dict[str, Any]:
    """
    오버헤드 추세 적합
    1차 기울기와, 2차 적합에서 최대 x에서의 2차항 기여 / 1차항 기여 비율
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2:
        raise SpecInvalid("추세 적합에는 점이 2개 이상 필요합니다")
    slope, intercept = np.polyfit(x, y, 1)
    report: Dict[str, Any] = {"slope": float(slope), "intercept": float(intercept),
                              "quadratic": None, "quadratic_share": None}
    if len(x) >= 3:
        a2, a1, _ = np.polyfit(x, y, 2)
        x_max = float(np.max(np.abs(x)))
        linear_term = abs(a1 * x_max)
        quad_term = abs(a2 * x_max ** 2)
        report["quadratic"] = float(a2)
        report["quadratic_share"] = float(quad_term / linear_term) if linear_term > 0 else float("inf")
    share = report["quadratic_share"]
    report["at_most_linear"] = bool(slope >= 0 and (share is None or share < 0.2))
    return report


def results_frame(results: Sequence[BenchResult]) -> pd.DataFrame:
    """CSV 열: 설정 필드…, validator, experiment, mean_ms, stddev_ms, overhead_pct, baseline_name"""
    rows = []
    for r in results:
        row = dict(r.config)
        row.update({"name": r.name, "experiment": r.experiment, "validator": r.validator,
                    "repetitions": r.repetitions, "valid": r.valid})
        row.update({"mean_ms": r.mean_ms, "stddev_ms": r.stddev_ms,
                    "overhead_pct": r.overhead_pct, "baseline_name": r.baseline_name})
        rows.append(row)
    frame = pd.DataFrame(rows)
    if frame.empty:
        return pd.DataFrame(columns=CSV_METRIC_COLUMNS)
    leading = [c for c in frame.columns if c not in CSV_METRIC_COLUMNS]
    return frame[leading + CSV_METRIC_COLUMNS]


def write_results_csv(results: Sequence[BenchResult], path: str) -> pd.DataFrame:
    frame = results_frame(results)
    frame.to_csv(path, index=False)
    logger.info(f"💾 벤치마크 결과 저장: {path} ({len(frame)}행)")
    return frame
