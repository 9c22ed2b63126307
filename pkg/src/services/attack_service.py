# src/services/attack_service.py
"""
공격 시나리오 실행기
무단 편집, 서비스 거부(편집 스팸), 거짓 피해자, 이중 지불, 합의 지연, 악성 후보
각 시나리오는 여러 시드로 돌려 {scenario, seeds, passes, failures, details} 보고서를 만든다
"""

from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from ..core.chain import append_block, mine_block, new_chain
from ..core.errors import AlreadySpent, FeeTooLow, NotARedactedSlot, UnknownScenario
from ..core.hashcore import MAX_TARGET, hash_h, u64
from ..core.ledger import (
    UtxoSet, Wallet, assemble_block, build_edit_tx, find_ledger_violation, ledger_admission_check,
    make_coinbase, strip_data, verify_victim_claim,
)
from ..core.redaction import propose_edit
from ..models.chain_models import Block, BlockPayload, Chain, ChainMode, PolicyParams
from ..models.ledger_models import (
    FundingInput, LedgerChain, OutputKind, Transaction, TxInput, TxOutput, ViolationReason,
)
from ..models.sim_models import AdversarySpec, AdversaryStrategy, DelayPolicy, ScenarioReport, SimConfig, SimTrace
from .ledger_service import LedgerChainBuilder
from .netsim_service import (
    check_chain_quality, check_common_prefix, check_editable_common_prefix, chain_validator,
    environment_entry, genesis_for, honest_adopted_tokens, run_simulation,
)

SCENARIOS = (
    "unapproved-editing",
    "denial-of-service",
    "false-victim",
    "double-spend",
    "consensus-delays",
    "malicious-candidate",
)

DEFAULT_SEEDS = tuple(range(5))
MALICIOUS_MIN_WINDOW = 30


class FeeLedger:
    """editTx 수수료 회계: 최소 편집 수수료 미만은 거부, 총액은 editTx 수에 선형"""

    def __init__(self, min_edit_fee: int):
        self.min_edit_fee = min_edit_fee
        self.paid: List[int] = []

    def submit(self, edit_tx: Transaction, funding_amount: int) -> int:
        fee = funding_amount - edit_tx.spendable_total
        if fee < self.min_edit_fee:
            raise FeeTooLow(f"editTx 수수료 {fee} < 최소 {self.min_edit_fee}")
        self.paid.append(fee)
        return fee

    @property
    def total(self) -> int:
        return sum(self.paid)


def default_attack_config() -> SimConfig:
    return SimConfig(n_nodes=4, n_corrupt=1, rounds=80, k=2, ell=5, rho=0.6, max_delay=1)


def _with_seed(cfg: SimConfig, seed: int, **extra: Any) -> SimConfig:
    update = {"master_seed": seed}
    update.update(extra)
    return cfg.copy(update=update)


# ---------------------------------------------------------------- 시뮬레이션 기반


def _unapproved_editing(cfg: SimConfig, seed: int) -> Tuple[bool, Dict[str, Any]]:
    run_cfg = _with_seed(cfg, seed, n_corrupt=max(1, cfg.n_corrupt))
    adv = AdversarySpec(strategy=AdversaryStrategy.UNAPPROVED_EDIT, delay_policy=DelayPolicy.IMMEDIATE,
                        attack_round=min(cfg.rounds // 2, 40) or 1)
    trace = run_simulation(run_cfg, adv)
    adopted = honest_adopted_tokens(trace, trace.malicious_tokens)

    # 화이트박스: 최종 정직 체인을 직접 위조해도 검증에 실패해야 함
    honest_chain = next(c for c, h in zip(trace.snapshots[-1], trace.honest[-1]) if h and c is not None)
    forged_rejected = True
    j = len(honest_chain.blocks) - 2 * run_cfg.k
    if j >= 2:
        b = honest_chain.at(j)
        forged = Block(s=b.s, x=BlockPayload(entries=(b"forged",) + b.x.entries, votes=b.x.votes),
                       ctr=b.ctr, y=b.y)
        blocks = honest_chain.blocks[:j - 1] + (forged,) + honest_chain.blocks[j:]
        tampered = honest_chain.copy(update={"blocks": blocks})
        forged_rejected = not chain_validator(run_cfg, genesis_for(run_cfg))(tampered)
    ok = not adopted and forged_rejected
    return ok, {"forged_chains": len(trace.malicious_tokens), "honest_adoptions": len(adopted),
                "whitebox_rejected": forged_rejected}


def _malicious_candidate(cfg: SimConfig, seed: int) -> Tuple[bool, Dict[str, Any]]:
    # 짧은 창에서는 소수 해시 비율로도 ⌈ρℓ⌉표를 우연히 모을 수 있음
    run_cfg = _with_seed(cfg, seed, n_corrupt=max(1, cfg.n_corrupt), ell=max(cfg.ell, MALICIOUS_MIN_WINDOW))
    adv = AdversarySpec(strategy=AdversaryStrategy.MALICIOUS_CANDIDATE, delay_policy=DelayPolicy.IMMEDIATE,
                        attack_round=min(cfg.rounds // 3, 40) or 1)
    trace = run_simulation(run_cfg, adv)
    adopted = honest_adopted_tokens(trace, trace.malicious_tokens)
    quality = check_chain_quality(trace, 1.0, run_cfg.ell)
    return not adopted, {"candidates": len(trace.malicious_tokens), "honest_adoptions": len(adopted),
                         "max_adversarial_ratio": quality.measured}


def _forge_snapshot(trace: SimTrace, k: int) -> Optional[SimTrace]:
    """마지막 라운드 한 정직 노드의 체인에 투표 없는 편집을 주입한 기록"""
    last = list(trace.snapshots[-1])
    for i, (c, honest) in enumerate(zip(last, trace.honest[-1])):
        if not honest or c is None:
            continue
        j = len(c.blocks) - 2 * k
        if j < 2:
            return None
        b = c.at(j)
        forged = Block.construct(s=b.s, x=BlockPayload(entries=(b"forged",) + b.x.entries, votes=b.x.votes),
                                 ctr=b.ctr, y=b.y)
        last[i] = c.copy(update={"blocks": c.blocks[:j - 1] + (forged,) + c.blocks[j:]})
        return trace.copy(update={"snapshots": trace.snapshots[:-1] + [last]})
    return None


def _consensus_delays(cfg: SimConfig, seed: int) -> Tuple[bool, Dict[str, Any]]:
    """
    승인된 편집만 있는 실행은 편집 가능 공통 접두사를 만족하고 (일반 공통 접두사는 위반 가능),
    무단 편집이 주입된 노드는 위반으로 보고되어야 함
    """
    run_cfg = _with_seed(cfg, seed, n_corrupt=0, edit_every=cfg.edit_every or 10,
                         edit_start=min(cfg.edit_start, max(1, cfg.rounds // 4)))
    trace = run_simulation(run_cfg, AdversarySpec.honest())
    approved = check_editable_common_prefix(trace, run_cfg.k)
    plain = check_common_prefix(trace, run_cfg.k)
    injected = _forge_snapshot(trace, run_cfg.k)
    flagged = injected is not None and not check_editable_common_prefix(injected, run_cfg.k).passed
    ok = approved.passed and flagged
    return ok, {"editable_violations": len(approved.violations), "plain_violations": len(plain.violations),
                "redaction_rounds": len(trace.applied_tokens), "injected_flagged": flagged}


# ---------------------------------------------------------------- 원장 기반


def _easy_ledger_chain(n_blocks: int, seed: int) -> Chain:
    """원장 모드 범용 체인 (editTx 없이 데이터 출력 트랜잭션만)"""
    cfg = SimConfig(mode=ChainMode.LEDGER, master_seed=seed)
    c = new_chain(MAX_TARGET, mode=ChainMode.LEDGER)
    for h in range(2, n_blocks + 1):
        payload = BlockPayload(entries=(environment_entry(cfg, h, seed),))
        c = append_block(c, mine_block(c.blocks[-1], payload, MAX_TARGET, 1024, h))
    return c


def _denial_of_service(cfg: SimConfig, seed: int) -> Tuple[bool, Dict[str, Any]]:
    min_fee = 10_000
    wallet = Wallet(seed)
    fees = FeeLedger(min_fee)
    old_tx = Transaction(
        inputs=(TxInput(prev_txid=hash_h((b"victim", u64(seed))), output_index=0),),
        outputs=(TxOutput(kind=OutputKind.SPENDABLE, amount=1_000, script=wallet.public_key),
                 TxOutput(kind=OutputKind.DATA, amount=0, script=b"spam-target-%d" % seed)),
    )
    cand_tx = strip_data(old_tx, 1)
    n_spam = 5 + seed % 5
    totals = []
    for m in range(n_spam):
        funding = FundingInput(prev_txid=hash_h((b"fund", u64(seed), u64(m))), output_index=0, amount=3 * min_fee)
        edit_tx = build_edit_tx(old_tx, cand_tx, funding, min_fee, min_fee, wallet)
        fees.submit(edit_tx, funding.amount)
        totals.append(fees.total)
    slope, intercept = np.polyfit(np.arange(1, n_spam + 1), np.array(totals, dtype=float), 1)
    linear = abs(slope - min_fee) < 1e-3 and abs(intercept) < 1e-3

    refused = False
    try:
        build_edit_tx(old_tx, cand_tx, FundingInput(prev_txid=hash_h((b"cheap", u64(seed))), output_index=0,
                                                    amount=min_fee), min_fee - 1, min_fee, wallet)
    except FeeTooLow:
        refused = True

    # editTx 없이 보낸 후보는 풀에 들어가지 못함 (스팸 취급)
    k = cfg.k
    c = _easy_ledger_chain(2 * k + 4, seed)
    target = c.at(2)
    old = Transaction.decode(target.x.entries[0])
    spam = propose_edit(c, 2, BlockPayload(entries=(strip_data(old, 1).encode(),), votes=target.x.votes), k,
                        ChainMode.LEDGER)
    admitted = ledger_admission_check(k)(c, spam)
    ok = linear and refused and not admitted
    return ok, {"edit_txs": n_spam, "total_fees": fees.total, "fee_slope": float(slope),
                "below_minimum_refused": refused, "spam_admitted": admitted}


def _small_redacted_ledger(cfg: SimConfig, seed: int):
    params = PolicyParams(k=cfg.k, ell=cfg.ell, rho=cfg.rho)
    n_blocks = 2 * params.k + params.ell + 6
    builder = LedgerChainBuilder(n_blocks, 2, 1, params, seed=seed)
    return builder, builder.build()


def _false_victim(cfg: SimConfig, seed: int) -> Tuple[bool, Dict[str, Any]]:
    _, result = _small_redacted_ledger(cfg, seed)
    chain: LedgerChain = result.chain
    record = result.redactions[0]
    slot = (record.height, record.tx_index)
    original = bytes.fromhex(record.old_tx_hex)
    true_positive = verify_victim_claim(original, slot, chain)

    old_tx = Transaction.decode(original)
    data = old_tx.outputs[1]
    forgeries = [
        old_tx.copy(update={"outputs": (old_tx.outputs[0], data.copy(update={"script": b"I was framed"}))}).encode(),
        old_tx.copy(update={"outputs": (old_tx.outputs[0].copy(update={"amount": old_tx.outputs[0].amount + 1}),
                                        data)}).encode(),
        strip_data(old_tx, 1).encode(),
        original[:-1],
        b"",
    ]
    false_positives = sum(1 for forged in forgeries if verify_victim_claim(forged, slot, chain))

    unredacted_refused = False
    try:
        verify_victim_claim(original, (record.height, 2), chain)
    except NotARedactedSlot:
        unredacted_refused = True
    ok = true_positive and false_positives == 0 and unredacted_refused
    return ok, {"true_positive": true_positive, "forgeries": len(forgeries), "false_positives": false_positives}


def _double_spend(cfg: SimConfig, seed: int) -> Tuple[bool, Dict[str, Any]]:
    builder, result = _small_redacted_ledger(cfg, seed)
    chain: LedgerChain = result.chain
    record = result.redactions[0]
    slot = chain.at(record.height).slots[record.tx_index]
    old_id, new_id = slot.old_txid, slot.tx.txid()

    # UTXO 단계: 원래 ID로 쓴 출력을 새 ID 별칭으로 다시 쓸 수 없음
    utxo = UtxoSet()
    utxo.add_transaction(new_id, slot.tx.outputs, old_txid=old_id)
    utxo.register_spend((old_id, 0))
    alias_rejected = False
    try:
        utxo.register_spend((new_id, 0))
    except AlreadySpent:
        alias_rejected = True

    # 체인 단계: 다음 블록이 이미 (old_id, 0)을 썼으므로 새 ID로 쓰는 블록은 거부
    wallet = builder.wallet
    attack = wallet.sign_transaction(Transaction(
        inputs=(TxInput(prev_txid=new_id, output_index=0),),
        outputs=(TxOutput(kind=OutputKind.SPENDABLE, amount=slot.tx.outputs[0].amount, script=wallet.public_key),),
    ))
    h = len(chain.blocks) + 1
    block = assemble_block(chain.blocks[-1], [make_coinbase(h, builder.subsidy, wallet.public_key), attack],
                           chain.difficulty, timestamp=h)
    extended = chain.copy(update={"blocks": chain.blocks + (block,)})
    violation = find_ledger_violation(extended, builder.params, builder.subsidy)
    chain_rejected = violation is not None and violation.reason == ViolationReason.DOUBLE_SPEND
    ok = alias_rejected and chain_rejected
    return ok, {"alias_rejected": alias_rejected, "chain_rejected": chain_rejected,
                "violation": violation.reason.value if violation else None}


_RUNNERS: Dict[str, Callable[[SimConfig, int], Tuple[bool, Dict[str, Any]]]] = {
    "unapproved-editing": _unapproved_editing,
    "denial-of-service": _denial_of_service,
    "false-victim": _false_victim,
    "double-spend": _double_spend,
    "consensus-delays": _consensus_delays,
    "malicious-candidate": _malicious_candidate,
}


def run_attack_scenario(name: str, cfg: Optional[SimConfig] = None,
                        seeds: Optional[List[int]] = None) -> ScenarioReport:
    """
    🛡️ 시나리오 실행
    알 수 없는 이름이면 UnknownScenario
    """
    runner = _RUNNERS.get(name)
    if runner is None:
        raise UnknownScenario(f"알 수 없는 시나리오: {name} (가능: {', '.join(SCENARIOS)})")
    cfg = cfg or default_attack_config()
    seeds = list(seeds if seeds is not None else DEFAULT_SEEDS)
    passes = 0
    failures = []
    per_seed = {}
    for seed in seeds:
        ok, details = runner(cfg, seed)
        per_seed[str(seed)] = details
        if ok:
            passes += 1
        else:
            failures.append({"seed": seed, **details})
    report = ScenarioReport(scenario=name, seeds=seeds, passes=passes, failures=failures,
                            details={"per_seed": per_seed})
    status = "✅" if report.passed else "❌"
    logger.info(f"{status} 시나리오 {name}: {passes}/{len(seeds)} 통과")
    return report
