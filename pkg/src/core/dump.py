# src/core/dump.py
"""
체인 덤프 (JSON Lines)
첫 줄은 헤더, 이후 블록당 한 줄. 노드, 시뮬레이터, CLI, 벤치마크가 공유하는 형식
"""

import hashlib
import json
from typing import Any, Dict, Iterable, List, Optional, Union

from loguru import logger
from pydantic import ValidationError

from ..models.chain_models import Block, BlockPayload, Chain, ChainMode
from ..models.ledger_models import BlockHeader, LedgerBlock, LedgerChain, Transaction, TxSlot
from .errors import DumpCorrupt
from .hashcore import target_from_hex, target_to_hex


def _line(obj: Dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _hex(data: str, field: str) -> bytes:
    try:
        return bytes.fromhex(data)
    except (TypeError, ValueError) as e:
        raise DumpCorrupt(f"{field}: 잘못된 hex 값") from e


def block_record(height: int, b: Block) -> Dict[str, Any]:
    return {
        "height": height,
        "s_hex": b.s.hex(),
        "payload": {
            "entries_hex": [e.hex() for e in b.x.entries],
            "votes_hex": [v.hex() for v in b.x.votes],
        },
        "ctr": b.ctr,
        "y_segments_hex": [y.hex() for y in b.y],
    }


def chain_dump_lines(c: Chain) -> List[str]:
    header = {
        "difficulty_hex": target_to_hex(c.difficulty),
        "genesis_digest_hex": c.blocks[0].digest().hex() if c.blocks else "",
        "mode": c.mode.value,
    }
    return [_line(header)] + [_line(block_record(h, b)) for h, b in enumerate(c.blocks, start=1)]


def ledger_dump_lines(chain: LedgerChain) -> List[str]:
    header = {
        "difficulty_hex": target_to_hex(chain.difficulty),
        "genesis_digest_hex": chain.blocks[0].header.link_digest().hex() if chain.blocks else "",
        "mode": ChainMode.LEDGER.value,
    }
    lines = [_line(header)]
    for h, block in enumerate(chain.blocks, start=1):
        hd = block.header
        lines.append(_line({
            "height": h,
            "header": {
                "hash_prev_hex": hd.hash_prev.hex(),
                "merkle_root_hex": hd.merkle_root.hex(),
                "old_merkle_root_hex": hd.old_merkle_root.hex(),
                "timestamp": hd.timestamp,
                "nonce": hd.nonce,
            },
            "txs": [slot.tx.encode().hex() for slot in block.slots],
            "redactions": [{"tx_index": i, "old_txid_hex": slot.old_txid.hex()}
                           for i, slot in enumerate(block.slots) if slot.old_txid is not None],
        }))
    return lines


def write_lines(lines: Iterable[str], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def write_chain_dump(c: Chain, path: str) -> None:
    write_lines(chain_dump_lines(c), path)
    logger.info(f"💾 체인 덤프 저장: {path} ({len(c.blocks)}개 블록)")


def write_ledger_dump(chain: LedgerChain, path: str) -> None:
    write_lines(ledger_dump_lines(chain), path)
    logger.info(f"💾 원장 덤프 저장: {path} ({len(chain.blocks)}개 블록)")


def _parse_records(text: str) -> List[Dict[str, Any]]:
    raw = [line for line in text.splitlines() if line.strip()]
    if not raw:
        raise DumpCorrupt("빈 덤프 파일")
    records = []
    for n, line in enumerate(raw, start=1):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as e:
            raise DumpCorrupt(f"{n}번째 줄이 JSON이 아닙니다") from e
    if not isinstance(records[0], dict):
        raise DumpCorrupt("헤더 줄이 객체가 아닙니다")
    return records


def _read_records(path: str) -> List[Dict[str, Any]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise DumpCorrupt(f"덤프를 읽을 수 없습니다: {path}") from e
    return _parse_records(text)


def _check_heights(records: List[Dict[str, Any]]) -> None:
    for expected, rec in enumerate(records, start=1):
        if not isinstance(rec, dict) or rec.get("height") != expected:
            got = rec.get("height") if isinstance(rec, dict) else rec
            raise DumpCorrupt(f"높이 순서 오류: {got} (기대값 {expected})")


def _chain_from_records(records: List[Dict[str, Any]]) -> Chain:
    header, body = records[0], records[1:]
    _check_heights(body)
    try:
        mode = ChainMode(header["mode"])
        if mode == ChainMode.LEDGER and body and "header" in body[0]:
            raise DumpCorrupt("원장 덤프는 read_ledger_dump로 읽어야 합니다")
        difficulty = target_from_hex(header["difficulty_hex"])
        blocks = []
        for rec in body:
            payload = BlockPayload(
                entries=tuple(_hex(e, "entries_hex") for e in rec["payload"]["entries_hex"]),
                votes=tuple(_hex(v, "votes_hex") for v in rec["payload"]["votes_hex"]),
            )
            blocks.append(Block(
                s=_hex(rec["s_hex"], "s_hex"),
                x=payload,
                ctr=rec["ctr"],
                y=tuple(_hex(y, "y_segments_hex") for y in rec["y_segments_hex"]),
            ))
        chain = Chain(blocks=tuple(blocks), difficulty=difficulty, mode=mode)
    except (KeyError, TypeError, ValueError, ValidationError) as e:
        if isinstance(e, DumpCorrupt):
            raise
        raise DumpCorrupt(f"덤프 형식 오류: {e}") from e
    if chain.blocks and chain.blocks[0].digest().hex() != header.get("genesis_digest_hex"):
        raise DumpCorrupt("제네시스 다이제스트 불일치")
    return chain


def _ledger_from_records(records: List[Dict[str, Any]]) -> LedgerChain:
    header, body = records[0], records[1:]
    _check_heights(body)
    try:
        if header["mode"] != ChainMode.LEDGER.value:
            raise DumpCorrupt("원장 덤프가 아닙니다")
        difficulty = target_from_hex(header["difficulty_hex"])
        blocks = []
        for rec in body:
            hd = rec["header"]
            redacted = {r["tx_index"]: _hex(r["old_txid_hex"], "old_txid_hex") for r in rec["redactions"]}
            slots = tuple(
                TxSlot(tx=Transaction.decode(_hex(tx_hex, "txs")), old_txid=redacted.get(i))
                for i, tx_hex in enumerate(rec["txs"])
            )
            if any(i >= len(slots) for i in redacted):
                raise DumpCorrupt("편집 기록의 tx_index가 범위를 벗어났습니다")
            blocks.append(LedgerBlock(
                header=BlockHeader(
                    hash_prev=_hex(hd["hash_prev_hex"], "hash_prev_hex"),
                    merkle_root=_hex(hd["merkle_root_hex"], "merkle_root_hex"),
                    difficulty=difficulty,
                    timestamp=hd["timestamp"],
                    nonce=hd["nonce"],
                    old_merkle_root=_hex(hd["old_merkle_root_hex"], "old_merkle_root_hex"),
                ),
                slots=slots,
            ))
        chain = LedgerChain(blocks=tuple(blocks), difficulty=difficulty)
    except (KeyError, TypeError, ValueError, ValidationError) as e:
        if isinstance(e, DumpCorrupt):
            raise
        raise DumpCorrupt(f"원장 덤프 형식 오류: {e}") from e
    if chain.blocks and chain.blocks[0].header.link_digest().hex() != header.get("genesis_digest_hex"):
        raise DumpCorrupt("제네시스 다이제스트 불일치")
    return chain


def _any_from_records(records: List[Dict[str, Any]]) -> Union[Chain, LedgerChain]:
    # 범용 체인도 ledger 모드일 수 있으므로 블록 형태로 구분
    if records[0].get("mode") == ChainMode.LEDGER.value and len(records) > 1 \
            and isinstance(records[1], dict) and "header" in records[1]:
        return _ledger_from_records(records)
    return _chain_from_records(records)


def read_chain_dump(path: str) -> Chain:
    chain = _chain_from_records(_read_records(path))
    logger.debug(f"🔍 체인 덤프 로드: {path} ({len(chain.blocks)}개 블록)")
    return chain


def read_ledger_dump(path: str) -> LedgerChain:
    chain = _ledger_from_records(_read_records(path))
    logger.debug(f"🔍 원장 덤프 로드: {path} ({len(chain.blocks)}개 블록)")
    return chain


def read_any_dump(path: str) -> Union[Chain, LedgerChain]:
    return _any_from_records(_read_records(path))


def parse_any_dump(text: str) -> Union[Chain, LedgerChain]:
    """메모리의 덤프 텍스트(HTTP 요청 본문 등)를 파싱"""
    return _any_from_records(_parse_records(text))


def dump_text(chain: Union[Chain, LedgerChain]) -> str:
    lines = ledger_dump_lines(chain) if isinstance(chain, LedgerChain) else chain_dump_lines(chain)
    return "\n".join(lines) + "\n"


def write_any_dump(chain: Union[Chain, LedgerChain], path: str) -> None:
    if isinstance(chain, LedgerChain):
        write_ledger_dump(chain, path)
    else:
        write_chain_dump(chain, path)


def dump_digest(path: str, chunk_size: Optional[int] = 1 << 16) -> str:
    """덤프 파일 바이트의 SHA-256 (결정성 비교용)"""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            h.update(chunk)
    return h.hexdigest()
