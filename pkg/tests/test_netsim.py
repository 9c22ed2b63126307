# tests/test_netsim.py

import hashlib

import pytest

from src.core.dump import dump_text
from src.core.errors import ConfigInvalid
from src.core.hashcore import MAX_TARGET, target_to_hex
from src.models.chain_models import ChainMode
from src.models.sim_models import AdversarySpec, AdversaryStrategy, CorruptionEvent, DelayPolicy, SimConfig
from src.services.netsim_service import (
    audit_content_integrity, audit_delivery, check_chain_growth, check_chain_quality, check_common_prefix,
    check_config, check_editable_common_prefix, check_liveness, honest_adopted_tokens, run_simulation,
    standard_checks, trace_jsonl_lines, write_trace,
)
from src.services.ledger_service import build_chain


def _solo(**extra) -> SimConfig:
    """노드 하나, 매 라운드 채굴 성공"""
    fields = dict(n_nodes=1, rounds=30, q=1, max_delay=1, k=2, ell=3, rho=0.6,
                  difficulty_hex=target_to_hex(MAX_TARGET))
    fields.update(extra)
    return SimConfig(**fields)


class TestDeterminism:
    def test_same_inputs_same_trace(self, sim_config):
        a = trace_jsonl_lines(run_simulation(sim_config))
        b = trace_jsonl_lines(run_simulation(sim_config))
        assert a == b
        assert len(a) == sim_config.rounds + 1

    def test_seed_changes_trace(self, sim_config):
        a = trace_jsonl_lines(run_simulation(sim_config))
        b = trace_jsonl_lines(run_simulation(sim_config.copy(update={"master_seed": 9})))
        assert a[1:] != b[1:]

    def test_write_trace(self, sim_config, tmp_path):
        trace = run_simulation(sim_config)
        path = tmp_path / "trace.jsonl"
        write_trace(trace, str(path))
        assert path.read_text(encoding="utf-8").splitlines() == trace_jsonl_lines(trace)


class TestNetworkAudits:
    def test_honest_messages_arrive_unchanged(self, sim_config):
        trace = run_simulation(sim_config)
        assert audit_delivery(trace, sim_config.max_delay).passed
        assert audit_content_integrity(trace).passed
        assert honest_adopted_tokens(trace, trace.malicious_tokens) == []

    def test_maximum_delay_policy(self, sim_config):
        cfg = sim_config.copy(update={"max_delay": 3, "rounds": 20})
        trace = run_simulation(cfg, AdversarySpec(delay_policy=DelayPolicy.MAXIMUM))
        sent = {b.msg_id: b.round for b in trace.broadcasts}
        assert trace.deliveries
        assert all(d.round - sent[d.msg_id] == 3 for d in trace.deliveries)
        assert audit_delivery(trace, 3).passed


class TestProperties:
    def test_solo_miner_grows_every_round(self):
        trace = run_simulation(_solo())
        report = check_chain_growth(trace, 1.0, 5)
        assert report.passed and report.measured == pytest.approx(1.0)
        assert trace.records[-1].nodes[0].length == 31

    def test_impossible_target_does_not_grow(self):
        trace = run_simulation(_solo(difficulty_hex=target_to_hex(1), rounds=10))
        report = check_chain_growth(trace, 0.1, 5)
        assert not report.passed and report.measured == 0

    def test_growth_needs_enough_rounds(self):
        report = check_chain_growth(run_simulation(_solo(rounds=3)), 0.5, 5)
        assert not report.passed

    def test_quality_without_adversary(self, sim_config):
        report = check_chain_quality(run_simulation(sim_config), 0.0, 3)
        assert report.passed and report.measured == 0

    def test_liveness_solo(self):
        report = check_liveness(run_simulation(_solo()), k=2)
        assert report.passed
        assert report.measured == pytest.approx(2.0)

    def test_standard_checks_shape(self, sim_config):
        names = [r.name for r in standard_checks(run_simulation(sim_config))]
        assert names == ["editable-common-prefix", "common-prefix", "liveness", "delivery",
                         "content-integrity", "chain-growth", "chain-quality"]


class TestRedactionsInSimulation:
    @pytest.mark.parametrize("mode", [ChainMode.SINGLE, ChainMode.LEDGER])
    def test_planned_edits_are_applied(self, mode):
        trace = run_simulation(_solo(rounds=40, edit_every=5, edit_start=10, mode=mode))
        assert trace.applied_tokens
        assert check_editable_common_prefix(trace, 2).passed
        assert not check_common_prefix(trace, 2).passed
        events = [e["event"] for rec in trace.records for e in rec.candidate_events]
        assert "proposed" in events
        if mode == ChainMode.LEDGER:
            assert "edit-request" in events

    def test_single_mode_edits_each_block_once(self):
        trace = run_simulation(_solo(rounds=60, edit_every=3, edit_start=10))
        final = trace.snapshots[-1][0]
        redacted = [h for h in range(1, len(final) + 1) if final.at(h).is_redacted()]
        assert len(redacted) >= 2
        assert all(len(final.at(h).y) == 1 for h in redacted)


class TestConfig:
    @pytest.mark.parametrize("update", [
        {"n_corrupt": 3},
        {"max_delay": 0},
        {"difficulty_hex": "zz"},
    ])
    def test_invalid_configs(self, sim_config, update):
        with pytest.raises(ConfigInvalid):
            check_config(sim_config.copy(update=update), AdversarySpec())

    def test_schedule_out_of_range(self, sim_config):
        spec = AdversarySpec(corruption_schedule=(CorruptionEvent(round=2, node=7, corrupt=True),))
        with pytest.raises(ConfigInvalid):
            run_simulation(sim_config, spec)

    def test_schedule_leaves_no_honest_node(self, sim_config):
        spec = AdversarySpec(corruption_schedule=tuple(
            CorruptionEvent(round=5, node=i, corrupt=True) for i in range(3)))
        with pytest.raises(ConfigInvalid):
            check_config(sim_config, spec)

    def test_recovered_node_restarts(self, sim_config):
        spec = AdversarySpec(corruption_schedule=(
            CorruptionEvent(round=5, node=1, corrupt=True),
            CorruptionEvent(round=10, node=1, corrupt=False),
        ))
        trace = run_simulation(sim_config, spec)
        assert trace.honest[5][1] is False and trace.honest[9][1] is True
        assert trace.snapshots[5][1] is None


SPOT_CONFIGS = [
    (dict(n_nodes=1, rounds=30, q=1, difficulty_hex=target_to_hex(MAX_TARGET)), AdversarySpec.honest()),
    (dict(n_nodes=3, rounds=60, q=2, difficulty_hex=target_to_hex(2 ** 253)), AdversarySpec.honest()),
    (dict(n_nodes=4, n_corrupt=1, rounds=60, max_delay=2, difficulty_hex=target_to_hex(2 ** 252)),
     AdversarySpec.delay_only()),
    (dict(n_nodes=3, rounds=50, q=2, edit_every=5, edit_start=15, difficulty_hex=target_to_hex(2 ** 254)),
     AdversarySpec.honest()),
    (dict(n_nodes=3, rounds=50, q=2, edit_every=5, edit_start=15, mode=ChainMode.EXT,
          difficulty_hex=target_to_hex(2 ** 254)), AdversarySpec.honest()),
    (dict(n_nodes=2, rounds=50, q=2, edit_every=6, edit_start=15, mode=ChainMode.LEDGER,
          difficulty_hex=target_to_hex(2 ** 254)), AdversarySpec.honest()),
    (dict(n_nodes=4, n_corrupt=1, rounds=60, difficulty_hex=target_to_hex(2 ** 253)),
     AdversarySpec(strategy=AdversaryStrategy.MALICIOUS_CANDIDATE, attack_round=20)),
]
BUILD_SPOTS = [(ChainMode.SINGLE, 3, 2), (ChainMode.EXT, 3, 2), (ChainMode.LEDGER, 1, 1)]


def _fingerprint(lines) -> str:
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


@pytest.mark.slow
class TestReplay:
    """같은 시드로 다시 돌리면 JSON Lines 출력이 바이트 단위로 같음"""

    @pytest.mark.parametrize("spot", range(len(SPOT_CONFIGS)))
    def test_simulation_replays(self, spot):
        fields, adv = SPOT_CONFIGS[spot]
        cfg = SimConfig(k=2, ell=3, rho=0.6, master_seed=spot, **fields)
        first = _fingerprint(trace_jsonl_lines(run_simulation(cfg, adv)))
        assert _fingerprint(trace_jsonl_lines(run_simulation(cfg, adv))) == first

    @pytest.mark.parametrize("mode,seed,redactions", BUILD_SPOTS)
    def test_chain_generation_replays(self, params, mode, seed, redactions):
        first = dump_text(build_chain(mode, 20, 2, redactions, params, seed=seed).chain)
        assert dump_text(build_chain(mode, 20, 2, redactions, params, seed=seed).chain) == first


@pytest.mark.slow
class TestAtScale:
    @pytest.mark.parametrize("seed", range(20))
    def test_editable_common_prefix_with_delays(self, seed):
        """10 노드 중 2개가 지연만 하는 적대자, 400 라운드, 최소 3회 편집"""
        cfg = SimConfig(n_nodes=10, n_corrupt=2, rounds=400, q=1, max_delay=1, k=4, ell=5, rho=0.6,
                        difficulty_hex=target_to_hex(2 ** 250), master_seed=seed, edit_every=20, edit_start=40)
        trace = run_simulation(cfg, AdversarySpec.delay_only())
        redactions = {t for tokens in trace.applied_tokens.values() for t in tokens}
        assert len(redactions) >= 3
        report = check_editable_common_prefix(trace, cfg.k)
        assert report.passed, report.violations[:3]
