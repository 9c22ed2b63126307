# src/cli.py
"""
편집 가능 체인 명령줄 도구
종료 코드: 0 성공, 1 검증 실패, 2 사용법 오류 또는 잘못된 입력
"""

import argparse
import json
import os
import sys
from typing import Any, Optional, Sequence

from loguru import logger

from .core.chain import append_block, mine_block_with_attempts, new_chain
from .core.config import ChainSettings, load_settings, write_settings
from .core.dump import dump_digest, read_any_dump, write_chain_dump
from .core.errors import RedactableChainError, SpecInvalid
from .core.hashcore import target_to_hex
from .core.redaction import (
    RatioPolicy, announce, apply_redaction, candidate_digest, candidate_from_announcement,
    propose_edit,
)
from .models.chain_models import BlockPayload, CandidateAnnouncement, Chain, ChainMode
from .models.ledger_models import LedgerChain
from .models.sim_models import AdversarySpec, AdversaryStrategy, DelayPolicy, SimConfig
from .services.attack_service import SCENARIOS, run_attack_scenario
from .services.bench_service import (
    IMMUTABLE, REDACTABLE, BenchSpec, bench_validate, generate_chain, run_overhead_experiments,
    write_results_csv,
)
from .services.chain_service import validate_any, verify_claim, vote_status
from .services.netsim_service import run_simulation, standard_checks, write_trace
from .utils.log_config import configure_logging

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2


def _out(obj: Any) -> None:
    print(json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2))


def _settings(args: argparse.Namespace) -> ChainSettings:
    return load_settings(
        getattr(args, "config", None),
        k=getattr(args, "k", None),
        ell=getattr(args, "ell", None),
        rho=getattr(args, "rho", None),
        mode=getattr(args, "mode", None),
        difficulty_hex=getattr(args, "difficulty_hex", None),
        min_edit_fee=getattr(args, "min_edit_fee", None),
    )


def _entry(text: str) -> bytes:
    """hex: 접두사는 hex 바이트, 그 외는 UTF-8"""
    if text.startswith("hex:"):
        return bytes.fromhex(text[4:])
    return text.encode("utf-8")


def _generic_chain(path: str) -> Chain:
    chain = read_any_dump(path)
    if isinstance(chain, LedgerChain):
        raise SpecInvalid("이 명령은 범용 체인 덤프(single/ext)만 지원합니다")
    return chain


# ---------------------------------------------------------------- 명령


def cmd_init(args: argparse.Namespace) -> int:
    settings = _settings(args)
    mode = ChainMode(settings.mode)
    if mode == ChainMode.LEDGER:
        raise SpecInvalid("원장 체인은 bench/generate 경로로 생성합니다 (init은 single/ext)")
    chain = new_chain(settings.difficulty, mode=mode)
    write_chain_dump(chain, args.out)
    if args.write_config:
        write_settings(settings, args.write_config)
    _out({"chain": args.out, "genesis_digest_hex": chain.blocks[0].digest().hex(), "mode": mode.value,
          "difficulty_hex": target_to_hex(chain.difficulty)})
    return EXIT_OK


def cmd_mine(args: argparse.Namespace) -> int:
    settings = _settings(args)
    chain = _generic_chain(args.chain)
    policy = RatioPolicy(settings.policy_params())
    applied = []
    for path in args.apply or ():
        with open(path, "r", encoding="utf-8") as f:
            msg = CandidateAnnouncement(**json.load(f))
        cand = candidate_from_announcement(chain, msg)
        if cand is None:
            raise SpecInvalid(f"{path}: 후보를 현재 체인에서 재구성할 수 없습니다")
        chain = apply_redaction(chain, cand.target_index, cand, policy)
        applied.append(cand.target_index)
    payload = BlockPayload(entries=tuple(_entry(e) for e in args.entry or ()),
                           votes=tuple(bytes.fromhex(v) for v in args.vote or ()))
    mined = 0
    for i in range(args.count):
        block, attempts = mine_block_with_attempts(chain.blocks[-1], payload, chain.difficulty,
                                                   args.max_attempts, args.seed + i)
        if block is None:
            logger.error(f"❌ {args.max_attempts}회 시도 안에 블록을 찾지 못했습니다")
            break
        chain = append_block(chain, block)
        mined += 1
        logger.debug(f"⛏️ 높이 {len(chain.blocks)}: {attempts}회 시도")
    write_chain_dump(chain, args.out or args.chain)
    _out({"mined": mined, "length": len(chain.blocks), "applied": applied,
          "head_digest_hex": chain.blocks[-1].digest().hex()})
    return EXIT_OK if mined == args.count else EXIT_INVALID


def cmd_propose_edit(args: argparse.Namespace) -> int:
    settings = _settings(args)
    chain = _generic_chain(args.chain)
    j = args.height
    if not 1 <= j <= len(chain.blocks):
        raise SpecInvalid(f"높이 {j}가 범위(1..{len(chain.blocks)})를 벗어났습니다")
    current = chain.at(j).x
    if args.entry is not None:
        entries = tuple(_entry(e) for e in args.entry)
    else:
        drop = set(args.drop or ())
        entries = tuple(e for i, e in enumerate(current.entries) if i not in drop)
    cand = propose_edit(chain, j, BlockPayload(entries=entries, votes=current.votes), settings.k, chain.mode)
    msg = announce(cand)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(msg.json(sort_keys=True))
    _out({"target_index": j, "token_hex": candidate_digest(cand).hex(), "candidate": args.out})
    return EXIT_OK


def cmd_vote_status(args: argparse.Namespace) -> int:
    chain = read_any_dump(args.chain)
    status = vote_status(chain, bytes.fromhex(args.token), _settings(args).policy_params())
    _out(json.loads(status.json()))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    chain = read_any_dump(args.chain)
    outcome = validate_any(chain, settings.policy_params(), settings.subsidy, immutable=args.immutable)
    if outcome.valid:
        print(f"valid: {outcome.length} blocks")
        return EXIT_OK
    where = f"at height {outcome.first_invalid_height}" if outcome.first_invalid_height else ""
    print(" ".join(p for p in ("invalid", where, outcome.reason or "") if p))
    return EXIT_INVALID


def cmd_simulate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    cfg = SimConfig(
        n_nodes=args.nodes, n_corrupt=args.corrupt, rounds=args.rounds, q=args.q, max_delay=args.delta,
        difficulty_hex=args.sim_difficulty_hex or SimConfig.__fields__["difficulty_hex"].default,
        k=settings.k, ell=settings.ell, rho=settings.rho, mode=ChainMode(settings.mode),
        master_seed=args.seed, edit_every=args.edit_every, edit_start=args.edit_start,
        tx_per_round=args.tx_per_round,
    )
    strategy = AdversaryStrategy(args.strategy)
    delay = DelayPolicy(args.delay_policy) if args.delay_policy else (
        DelayPolicy.IMMEDIATE if strategy == AdversaryStrategy.NONE else DelayPolicy.RANDOM)
    adv = AdversarySpec(strategy=strategy, delay_policy=delay, attack_round=args.attack_round)
    trace = run_simulation(cfg, adv)
    if args.trace:
        write_trace(trace, args.trace)
    reports = standard_checks(trace)
    _out({"rounds": len(trace.records), "checks": [json.loads(r.json()) for r in reports]})
    editable = reports[0]
    return EXIT_OK if editable.passed else EXIT_INVALID


def cmd_attack(args: argparse.Namespace) -> int:
    names = list(SCENARIOS) if args.scenario == "all" else [args.scenario]
    seeds = list(range(args.seeds))
    reports = [run_attack_scenario(name, seeds=seeds) for name in names]
    body = [json.loads(r.json()) for r in reports]
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(body, f, ensure_ascii=False, sort_keys=True, indent=2)
    _out([{"scenario": r.scenario, "passes": r.passes, "seeds": r.seeds, "passed": r.passed} for r in reports])
    return EXIT_OK if all(r.passed for r in reports) else EXIT_INVALID


def cmd_bench(args: argparse.Namespace) -> int:
    settings = _settings(args)
    spec = BenchSpec(n_blocks=args.blocks, tx_per_block=args.tx, redaction_fraction=args.redact,
                     k=settings.k, ell=settings.ell, rho=settings.rho, repetitions=args.reps,
                     seed=args.seed, mode=ChainMode(args.bench_mode), subsidy=settings.subsidy)
    workdir = args.workdir or os.path.splitext(args.out)[0] + "_chains"
    os.makedirs(workdir, exist_ok=True)
    if args.experiments:
        results = run_overhead_experiments(spec, workdir, experiments=args.experiments.split(","))
    else:
        zero = spec.copy(update={"redaction_fraction": 0.0})
        zero_path = os.path.join(workdir, "zero.jsonl")
        generate_chain(zero, zero_path)
        if spec.n_redactions == 0:
            baseline = bench_validate(zero_path, spec.repetitions, IMMUTABLE, spec.params, spec.subsidy,
                                      name="zero:immutable", config=zero.config_fields())
        else:
            baseline = bench_validate(zero_path, spec.repetitions, REDACTABLE, spec.params, spec.subsidy,
                                      name="zero:redactable", config=zero.config_fields())
        path = os.path.join(workdir, "chain.jsonl")
        generate_chain(spec, path)
        result = bench_validate(path, spec.repetitions, REDACTABLE, spec.params, spec.subsidy, baseline,
                                name="chain:redactable", config=spec.config_fields())
        results = [baseline, result]
    write_results_csv(results, args.out)
    _out([{"name": r.name, "mean_ms": r.mean_ms, "stddev_ms": r.stddev_ms, "overhead_pct": r.overhead_pct,
           "baseline_name": r.baseline_name, "valid": r.valid} for r in results])
    return EXIT_OK if all(r.valid for r in results) else EXIT_INVALID


def cmd_dump(args: argparse.Namespace) -> int:
    if args.digest:
        print(dump_digest(args.chain))
        return EXIT_OK
    chain = read_any_dump(args.chain)
    if isinstance(chain, LedgerChain):
        rows = [{"height": h, "txs": len(b.slots), "redacted": [i for i, s in enumerate(b.slots) if s.is_redacted],
                 "header_digest_hex": b.header.link_digest().hex()} for h, b in enumerate(chain.blocks, start=1)]
        mode = ChainMode.LEDGER.value
    else:
        rows = [{"height": h, "digest_hex": b.digest().hex(), "entries": len(b.x.entries), "votes": len(b.x.votes),
                 "redacted": b.is_redacted(), "y_segments": len(b.y)}
                for h, b in enumerate(chain.blocks, start=1)]
        mode = chain.mode.value
    if args.height is not None:
        rows = [r for r in rows if r["height"] == args.height]
    _out({"mode": mode, "length": len(chain.blocks), "difficulty_hex": target_to_hex(chain.difficulty),
          "blocks": rows})
    return EXIT_OK


def cmd_verify_claim(args: argparse.Namespace) -> int:
    chain = read_any_dump(args.chain)
    ok = verify_claim(chain, args.height, args.index, bytes.fromhex(args.tx_hex))
    print("claim verified" if ok else "claim rejected")
    return EXIT_OK if ok else EXIT_INVALID


# ---------------------------------------------------------------- 인자


def _policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-f", type=str, default=None, help="key=value 설정 파일")
    p.add_argument("--k", type=int, default=None, help="확정 깊이")
    p.add_argument("--ell", type=int, default=None, help="투표 기간")
    p.add_argument("--rho", type=float, default=None, help="승인 비율")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redactchain", description="합의 투표 기반 편집 가능 블록체인 도구")
    parser.add_argument("--verbose", "-v", action="store_true", help="DEBUG 로그 출력")
    parser.set_defaults(func=None)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("init", help="제네시스 체인과 설정 파일 생성")
    _policy_flags(p)
    p.add_argument("--mode", choices=["single", "ext"], default=None)
    p.add_argument("--difficulty-hex", dest="difficulty_hex", default=None)
    p.add_argument("--min-edit-fee", dest="min_edit_fee", type=int, default=None)
    p.add_argument("--out", "-o", required=True, help="체인 덤프 경로")
    p.add_argument("--write-config", default=None, help="사용한 설정을 저장할 경로")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("mine", help="head 위에 블록 채굴")
    _policy_flags(p)
    p.add_argument("--chain", required=True)
    p.add_argument("--out", default=None, help="기본값: 입력 덤프를 덮어씀")
    p.add_argument("--entry", action="append", help="데이터 항목 (hex:… 는 바이트)")
    p.add_argument("--vote", action="append", help="투표 토큰 (hex)")
    p.add_argument("--apply", action="append", help="채굴 전에 적용할 승인된 후보 파일")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--max-attempts", dest="max_attempts", type=int, default=1 << 20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("propose-edit", help="편집 후보 생성")
    _policy_flags(p)
    p.add_argument("--chain", required=True)
    p.add_argument("--height", type=int, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--drop", type=int, action="append", help="제거할 항목 위치 (0부터)")
    group.add_argument("--entry", action="append", help="새 항목 목록")
    p.add_argument("--out", default=None, help="후보 공지 JSON 경로")
    p.set_defaults(func=cmd_propose_edit)

    p = sub.add_parser("vote-status", help="투표 토큰 판정")
    _policy_flags(p)
    p.add_argument("--chain", required=True)
    p.add_argument("--token", required=True)
    p.set_defaults(func=cmd_vote_status)

    p = sub.add_parser("validate", help="체인 덤프 검증")
    _policy_flags(p)
    p.add_argument("--chain", required=True)
    p.add_argument("--immutable", action="store_true", help="불변 프로토콜 규칙으로 검증")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="라운드 시뮬레이션 실행")
    _policy_flags(p)
    p.add_argument("--mode", choices=["single", "ext", "ledger"], default=None)
    p.add_argument("--nodes", type=int, default=4)
    p.add_argument("--corrupt", type=int, default=0)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--sim-difficulty-hex", dest="sim_difficulty_hex", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", choices=[s.value for s in AdversaryStrategy], default="none")
    p.add_argument("--delay-policy", dest="delay_policy", choices=[d.value for d in DelayPolicy], default=None)
    p.add_argument("--attack-round", dest="attack_round", type=int, default=40)
    p.add_argument("--edit-every", dest="edit_every", type=int, default=None)
    p.add_argument("--edit-start", dest="edit_start", type=int, default=20)
    p.add_argument("--tx-per-round", dest="tx_per_round", type=int, default=1)
    p.add_argument("--trace", default=None, help="JSON Lines 실행 기록 경로")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("attack", help="공격 시나리오 실행")
    p.add_argument("--scenario", required=True, choices=list(SCENARIOS) + ["all"])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--report", default=None, help="JSON 보고서 경로")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="검증 시간 벤치마크")
    _policy_flags(p)
    p.add_argument("--blocks", type=int, default=2000)
    p.add_argument("--tx", type=int, default=100)
    p.add_argument("--redact", type=float, default=0.0, help="편집 비율 0..1")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", dest="bench_mode", choices=["single", "ext", "ledger"], default="ledger")
    p.add_argument("--experiments", default=None, help="a,b,c 중 실행할 실험")
    p.add_argument("--workdir", default=None, help="생성한 체인 덤프 위치")
    p.add_argument("--out", required=True, help="CSV 경로")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dump", help="체인 덤프 요약")
    p.add_argument("--chain", required=True)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--digest", action="store_true", help="파일 SHA-256만 출력")
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("verify-claim", help="편집된 트랜잭션의 원본 주장 검증")
    p.add_argument("--chain", required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--tx-hex", dest="tx_hex", required=True, help="원본 트랜잭션 인코딩 (hex)")
    p.set_defaults(func=cmd_verify_claim)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    configure_logging("DEBUG" if args.verbose else None)
    if args.func is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (RedactableChainError, ValueError, OSError) as e:
        logger.debug(f"❌ {args.command} 실패: {e!r}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
