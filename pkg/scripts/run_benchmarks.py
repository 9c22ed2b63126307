# scripts/run_benchmarks.py

import os
import sys

from loguru import logger

# 스크립트가 src 폴더를 찾을 수 있도록 경로를 추가
sys.path.append(os.getcwd())
from src.models.chain_models import ChainMode
from src.services.bench_service import BenchSpec, fit_overhead_trend, run_overhead_experiments, write_results_csv

# --- 설정 ---
N_BLOCKS = int(os.getenv("BENCH_BLOCKS", 2000))
TX_PER_BLOCK = int(os.getenv("BENCH_TX", 100))
REPETITIONS = int(os.getenv("BENCH_REPS", 20))
WORKDIR = os.getenv("BENCH_WORKDIR", "./data/bench")
OUT_CSV = os.getenv("BENCH_OUT", "./data/bench/overhead.csv")
FRACTIONS = (0.02, 0.04, 0.06, 0.08, 0.10)
ELLS = (5, 10, 20, 40)


# -----------------

def run():
    """세 가지 오버헤드 실험을 실행하고 CSV와 추세 적합 결과를 남긴다"""
    base = BenchSpec(n_blocks=N_BLOCKS, tx_per_block=TX_PER_BLOCK, repetitions=REPETITIONS, mode=ChainMode.LEDGER)
    logger.info(f"📊 벤치마크 시작: {N_BLOCKS}개 블록 × {TX_PER_BLOCK}개 tx, {REPETITIONS}회 반복")
    results = run_overhead_experiments(base, WORKDIR, fractions=FRACTIONS, ells=ELLS)
    write_results_csv(results, OUT_CSV)

    zero = next(r for r in results if r.experiment == "a" and r.validator == "redactable")
    logger.info(f"📊 (a) 편집 0개 오버헤드: {zero.overhead_pct:.2f}%")

    by_fraction = [r for r in results if r.experiment == "b"]
    trend_b = fit_overhead_trend([r.config["n_redactions"] for r in by_fraction],
                                 [r.overhead_pct for r in by_fraction])
    logger.info(f"📊 (b) 편집 수 추세: 기울기 {trend_b['slope']:.4f}%/편집, "
                f"2차항 비중 {trend_b['quadratic_share']:.3f} → 선형 이하: {trend_b['at_most_linear']}")

    by_ell = [r for r in results if r.experiment == "c"]
    trend_c = fit_overhead_trend([r.config["ell"] for r in by_ell], [r.overhead_pct for r in by_ell])
    logger.info(f"📊 (c) ℓ 추세: 기울기 {trend_c['slope']:.4f}%/블록, "
                f"2차항 비중 {trend_c['quadratic_share']:.3f} → 선형 이하: {trend_c['at_most_linear']}")


if __name__ == "__main__":
    run()
