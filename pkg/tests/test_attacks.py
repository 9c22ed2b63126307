# tests/test_attacks.py

import pytest

from chain_helpers import signed_data_tx
from src.core.errors import FeeTooLow, UnknownScenario
from src.core.ledger import Wallet, build_edit_tx, strip_data, validate_ledger_chain, verify_witness
from src.models.ledger_models import FundingInput, Transaction
from src.models.sim_models import SimConfig
from src.services.attack_service import SCENARIOS, FeeLedger, default_attack_config, run_attack_scenario
from src.services.ledger_service import LedgerChainBuilder


class TestLedgerScenarios:
    @pytest.mark.parametrize("name", ["denial-of-service", "false-victim", "double-spend"])
    def test_scenario_passes(self, name):
        report = run_attack_scenario(name, seeds=[0, 1, 2])
        assert report.passed, report.failures
        assert report.scenario == name and report.passes == 3

    def test_false_victim_details(self):
        report = run_attack_scenario("false-victim", seeds=[4])
        details = report.details["per_seed"]["4"]
        assert details["true_positive"] and details["false_positives"] == 0

    def test_double_spend_reports_reason(self):
        report = run_attack_scenario("double-spend", seeds=[0])
        assert report.details["per_seed"]["0"]["violation"] == "double-spend"


class TestFeeLedger:
    def test_fees_accumulate_linearly(self):
        wallet = Wallet(1)
        old = signed_data_tx(wallet, 1)
        fees = FeeLedger(10_000)
        for m in range(4):
            funding = FundingInput(prev_txid=bytes([m]) * 32, output_index=0, amount=25_000)
            edit = build_edit_tx(old, strip_data(old, 1), funding, 10_000, 10_000, wallet)
            assert fees.submit(edit, funding.amount) == 10_000
        assert fees.total == 40_000

    def test_underpaid_edit_refused(self):
        wallet = Wallet(1)
        old = signed_data_tx(wallet, 1)
        funding = FundingInput(prev_txid=b"\x01" * 32, output_index=0, amount=25_000)
        edit = build_edit_tx(old, strip_data(old, 1), funding, 20_000, 10_000, wallet)
        with pytest.raises(FeeTooLow):
            FeeLedger(30_000).submit(edit, funding.amount)


@pytest.mark.slow
class TestSimulationScenarios:
    @pytest.mark.parametrize("name", ["unapproved-editing", "malicious-candidate", "consensus-delays"])
    def test_scenario_passes(self, name):
        report = run_attack_scenario(name, seeds=[0, 1])
        assert report.passed, report.failures

    def test_all_scenarios_registered(self):
        cfg = default_attack_config().copy(update={"rounds": 40})
        for name in SCENARIOS:
            assert run_attack_scenario(name, cfg, seeds=[3]).scenario == name


def test_unknown_scenario():
    with pytest.raises(UnknownScenario):
        run_attack_scenario("teleport")


@pytest.mark.slow
class TestAttacksAtScale:
    def test_malicious_candidate_with_thirty_percent_power(self):
        """적대자 해시 비율 0.3, ρ = 0.6: 정직 노드가 지지하지 않은 후보는 20개 시드 모두 미승인"""
        cfg = SimConfig(n_nodes=10, n_corrupt=3, rounds=150, k=2, ell=5, rho=0.6, max_delay=1)
        report = run_attack_scenario("malicious-candidate", cfg, seeds=list(range(20)))
        assert report.passes == 20, report.failures
        assert all(d["honest_adoptions"] == 0 for d in report.details["per_seed"].values())

    def test_victim_claims(self):
        report = run_attack_scenario("false-victim", seeds=list(range(200)))
        per_seed = list(report.details["per_seed"].values())
        assert report.passes == 200, report.failures
        assert all(d["true_positive"] for d in per_seed)
        assert sum(d["false_positives"] for d in per_seed) == 0

    def test_lineage_double_spends(self):
        report = run_attack_scenario("double-spend", seeds=list(range(50)))
        assert report.passes == 50, report.failures
        assert {d["violation"] for d in report.details["per_seed"].values()} == {"double-spend"}

    @pytest.mark.parametrize("seed", range(10))
    def test_redacted_witnesses_verify(self, params, seed):
        """편집된 트랜잭션의 서명은 보관된 원래 ID로 검증"""
        builder = LedgerChainBuilder(20, 2, 1, params, seed=seed)
        result = builder.build()
        (record,) = result.redactions
        slot = result.chain.at(record.height).slots[record.tx_index]
        assert slot.old_txid == Transaction.decode(bytes.fromhex(record.old_tx_hex)).txid()
        assert all(verify_witness(builder.wallet.public_key, inp.witness, slot.old_txid) for inp in slot.tx.inputs)
        assert validate_ledger_chain(result.chain, params, builder.subsidy)
