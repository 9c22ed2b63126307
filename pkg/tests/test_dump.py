# tests/test_dump.py

import json

import pytest

from src.core.dump import (
    chain_dump_lines, dump_digest, dump_text, parse_any_dump, read_any_dump, read_chain_dump, read_ledger_dump,
    write_any_dump, write_chain_dump, write_ledger_dump,
)
from src.core.errors import DumpCorrupt
from src.models.ledger_models import LedgerChain


class TestRoundTrip:
    def test_generic_chain(self, redacted_generic, tmp_path):
        path = str(tmp_path / "chain.jsonl")
        write_chain_dump(redacted_generic.chain, path)
        assert read_chain_dump(path) == redacted_generic.chain
        assert read_any_dump(path) == redacted_generic.chain

    def test_ledger_chain(self, redacted_ledger, tmp_path):
        path = str(tmp_path / "ledger.jsonl")
        write_ledger_dump(redacted_ledger.chain, path)
        loaded = read_ledger_dump(path)
        assert loaded == redacted_ledger.chain
        assert isinstance(read_any_dump(path), LedgerChain)

    def test_in_memory_text(self, redacted_generic, redacted_ledger):
        assert parse_any_dump(dump_text(redacted_generic.chain)) == redacted_generic.chain
        assert parse_any_dump(dump_text(redacted_ledger.chain)) == redacted_ledger.chain

    def test_redaction_record_in_ledger_dump(self, redacted_ledger):
        (record,) = redacted_ledger.redactions
        line = json.loads(dump_text(redacted_ledger.chain).splitlines()[record.height])
        assert [r["tx_index"] for r in line["redactions"]] == [1]
        assert len(line["redactions"][0]["old_txid_hex"]) == 64

    def test_digest_is_stable(self, redacted_generic, tmp_path):
        a, b = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
        write_any_dump(redacted_generic.chain, a)
        write_any_dump(redacted_generic.chain, b)
        assert dump_digest(a) == dump_digest(b)
        assert len(dump_digest(a)) == 64


class TestCorruptDumps:
    @pytest.fixture
    def lines(self, honest_chain):
        return chain_dump_lines(honest_chain(4))

    def test_empty(self):
        with pytest.raises(DumpCorrupt):
            parse_any_dump("\n\n")

    def test_not_json(self, lines):
        with pytest.raises(DumpCorrupt):
            parse_any_dump("\n".join(lines[:2] + ["{oops"]))

    def test_header_not_object(self, lines):
        with pytest.raises(DumpCorrupt):
            parse_any_dump("\n".join(["[1, 2]"] + lines[1:]))

    def test_height_gap(self, lines):
        with pytest.raises(DumpCorrupt):
            parse_any_dump("\n".join(lines[:2] + lines[3:]))

    def test_genesis_mismatch(self, lines):
        header = json.loads(lines[0])
        header["genesis_digest_hex"] = "00" * 32
        with pytest.raises(DumpCorrupt):
            parse_any_dump("\n".join([json.dumps(header)] + lines[1:]))

    def test_bad_hex(self, lines):
        record = json.loads(lines[2])
        record["s_hex"] = "zz"
        with pytest.raises(DumpCorrupt):
            parse_any_dump("\n".join(lines[:2] + [json.dumps(record)] + lines[3:]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DumpCorrupt):
            read_chain_dump(str(tmp_path / "absent.jsonl"))
