# tests/test_cli.py

import json

import pytest

from src.cli import EXIT_INVALID, EXIT_OK, EXIT_USAGE, main
from src.core.config import ENV_KEYS
from src.core.dump import read_chain_dump, write_ledger_dump
from src.core.hashcore import MAX_TARGET, target_to_hex

MAX_HEX = target_to_hex(MAX_TARGET)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ENV_KEYS.values():
        monkeypatch.delenv(name, raising=False)


def _json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.fixture
def workdir(tmp_path, capsys):
    """k=2, ℓ=3 설정 파일과 11개 블록 체인"""
    chain = str(tmp_path / "chain.jsonl")
    config = str(tmp_path / "chain.env")
    assert main(["init", "--out", chain, "--difficulty-hex", MAX_HEX, "--k", "2", "--ell", "3",
                 "--write-config", config]) == EXIT_OK
    assert main(["mine", "--chain", chain, "--count", "10", "--entry", "hello", "--entry", "world"]) == EXIT_OK
    capsys.readouterr()
    return tmp_path, chain, config


class TestEditFlow:
    def test_propose_vote_apply_validate(self, workdir, capsys):
        tmp_path, chain, config = workdir
        cand = str(tmp_path / "cand.json")

        assert main(["propose-edit", "--config", config, "--chain", chain, "--height", "4", "--drop", "0",
                     "--out", cand]) == EXIT_OK
        token = _json(capsys)["token_hex"]

        assert main(["mine", "--chain", chain, "--count", "2", "--vote", token]) == EXIT_OK
        capsys.readouterr()
        assert main(["vote-status", "--config", config, "--chain", chain, "--token", token]) == EXIT_OK
        status = _json(capsys)
        assert status["verdict"] == "voting" and status["votes_in_window"] == 2

        assert main(["mine", "--chain", chain, "--count", "3"]) == EXIT_OK
        capsys.readouterr()
        assert main(["vote-status", "--config", config, "--chain", chain, "--token", token]) == EXIT_OK
        assert _json(capsys)["verdict"] == "accept"

        assert main(["mine", "--config", config, "--chain", chain, "--apply", cand]) == EXIT_OK
        assert _json(capsys)["applied"] == [4]
        redacted = read_chain_dump(chain)
        assert redacted.at(4).x.entries == (b"world",)

        assert main(["validate", "--config", config, "--chain", chain]) == EXIT_OK
        assert capsys.readouterr().out.startswith("valid: 17 blocks")
        assert main(["validate", "--config", config, "--chain", chain, "--immutable"]) == EXIT_INVALID
        assert capsys.readouterr().out.startswith("invalid")

    def test_apply_before_acceptance_fails(self, workdir, capsys):
        tmp_path, chain, config = workdir
        cand = str(tmp_path / "cand.json")
        assert main(["propose-edit", "--config", config, "--chain", chain, "--height", "4", "--drop", "0",
                     "--out", cand]) == EXIT_OK
        assert main(["mine", "--config", config, "--chain", chain, "--apply", cand]) == EXIT_USAGE

    def test_dump_summary(self, workdir, capsys):
        _, chain, _ = workdir
        assert main(["dump", "--chain", chain, "--height", "4"]) == EXIT_OK
        summary = _json(capsys)
        assert summary["length"] == 11 and summary["mode"] == "single"
        assert [b["height"] for b in summary["blocks"]] == [4]
        assert summary["blocks"][0]["entries"] == 2

        assert main(["dump", "--chain", chain, "--digest"]) == EXIT_OK
        assert len(capsys.readouterr().out.strip()) == 64


class TestLedgerCommands:
    def test_verify_claim(self, redacted_ledger, tmp_path, capsys):
        path = str(tmp_path / "ledger.jsonl")
        write_ledger_dump(redacted_ledger.chain, path)
        (record,) = redacted_ledger.redactions
        args = ["verify-claim", "--chain", path, "--height", str(record.height), "--index", str(record.tx_index)]
        assert main(args + ["--tx-hex", record.old_tx_hex]) == EXIT_OK
        assert "claim verified" in capsys.readouterr().out
        assert main(args + ["--tx-hex", "00ff"]) == EXIT_INVALID

    def test_validate_ledger(self, redacted_ledger, tmp_path):
        path = str(tmp_path / "ledger.jsonl")
        write_ledger_dump(redacted_ledger.chain, path)
        policy = ["--k", "2", "--ell", "3", "--rho", "0.6"]
        assert main(["validate", "--chain", path] + policy) == EXIT_OK
        assert main(["validate", "--chain", path, "--immutable"] + policy) == EXIT_INVALID

    def test_verify_claim_needs_ledger(self, workdir):
        _, chain, _ = workdir
        assert main(["verify-claim", "--chain", chain, "--height", "2", "--index", "0", "--tx-hex", "00"]) == EXIT_USAGE


class TestRunners:
    def test_bench(self, tmp_path, capsys):
        out = str(tmp_path / "bench.csv")
        assert main(["bench", "--blocks", "30", "--tx", "2", "--redact", "0.1", "--reps", "1",
                     "--k", "2", "--ell", "3", "--out", out]) == EXIT_OK
        rows = _json(capsys)
        assert [r["name"] for r in rows] == ["zero:redactable", "chain:redactable"]
        assert rows[1]["baseline_name"] == "zero:redactable"
        assert (tmp_path / "bench.csv").exists()

    def test_simulate(self, tmp_path, capsys):
        trace = tmp_path / "trace.jsonl"
        assert main(["simulate", "--nodes", "1", "--rounds", "10", "--q", "1", "--sim-difficulty-hex", MAX_HEX,
                     "--k", "2", "--ell", "3", "--trace", str(trace)]) == EXIT_OK
        report = _json(capsys)
        assert report["rounds"] == 10
        assert report["checks"][0]["name"] == "editable-common-prefix"
        assert len(trace.read_text(encoding="utf-8").splitlines()) == 11

    def test_attack(self, tmp_path, capsys):
        report = tmp_path / "attack.json"
        assert main(["attack", "--scenario", "double-spend", "--seeds", "1", "--report", str(report)]) == EXIT_OK
        assert _json(capsys)[0]["passed"]
        assert json.loads(report.read_text(encoding="utf-8"))[0]["scenario"] == "double-spend"


class TestUsageErrors:
    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_command(self):
        assert main(["teleport"]) == EXIT_USAGE

    def test_missing_dump(self, tmp_path):
        assert main(["validate", "--chain", str(tmp_path / "absent.jsonl")]) == EXIT_USAGE

    @pytest.mark.parametrize("token", ["zz", "ab" * 31])
    def test_bad_token(self, workdir, token):
        _, chain, _ = workdir
        assert main(["vote-status", "--chain", chain, "--token", token]) == EXIT_USAGE

    def test_init_rejects_ledger_config(self, tmp_path):
        config = tmp_path / "ledger.env"
        config.write_text("mode=ledger\n", encoding="utf-8")
        assert main(["init", "--config", str(config), "--out", str(tmp_path / "c.jsonl")]) == EXIT_USAGE

    def test_unstable_height(self, workdir):
        _, chain, config = workdir
        assert main(["propose-edit", "--config", config, "--chain", chain, "--height", "11",
                     "--drop", "0"]) == EXIT_USAGE
