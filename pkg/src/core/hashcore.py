# src/core/hashcore.py
"""
해시 코어
모든 모듈이 같은 바이트로 해시하도록 정규 인코딩, H/G 해시, 난이도 비교를 제공
"""

import hashlib
import struct
from typing import List, Sequence

Digest = bytes

DIGEST_SIZE = 32
MAX_TARGET = 2 ** 256 - 1
ZERO_DIGEST = b"\x00" * DIGEST_SIZE

# 도메인 분리 태그
H_TAG = b"\x48"
G_TAG = b"\x47"

_U64 = struct.Struct("<Q")


def u64(value: int) -> bytes:
    """64비트 부호 없는 정수를 리틀 엔디언 8바이트로"""
    return _U64.pack(value)


def read_u64(data: bytes) -> int:
    if len(data) != 8:
        raise ValueError(f"u64 필드 길이 오류: {len(data)}")
    return _U64.unpack(data)[0]


def encode_fields(parts: Sequence[bytes]) -> bytes:
    """
    정규 인코딩
    각 필드를 8바이트 리틀 엔디언 길이 + 원본 바이트로 이어 붙임 (단사)
    """
    return b"".join(_U64.pack(len(p)) + bytes(p) for p in parts)


def decode_fields(data: bytes) -> List[bytes]:
    """encode_fields의 역연산. 형식이 깨졌으면 ValueError"""
    parts: List[bytes] = []
    pos, end = 0, len(data)
    while pos < end:
        if pos + 8 > end:
            raise ValueError("길이 접두사가 잘렸습니다")
        (size,) = _U64.unpack_from(data, pos)
        pos += 8
        if pos + size > end:
            raise ValueError("필드 본문이 잘렸습니다")
        parts.append(data[pos:pos + size])
        pos += size
    return parts


def _tagged_sha256(tag: bytes, parts: Sequence[bytes]) -> Digest:
    if len(parts) == 0:
        raise ValueError("해시 입력 필드가 비어 있습니다")
    return hashlib.sha256(tag + encode_fields(parts)).digest()


def hash_h(parts: Sequence[bytes]) -> Digest:
    """H: 블록 연결과 투표 토큰에 쓰는 해시"""
    return _tagged_sha256(H_TAG, parts)


def hash_g(parts: Sequence[bytes]) -> Digest:
    """G: 블록 데이터 상태 해시"""
    return _tagged_sha256(G_TAG, parts)


def digest_to_int(d: Digest) -> int:
    return int.from_bytes(d, "big")


def meets_target(d: Digest, target: int) -> bool:
    """빅 엔디언 정수값이 target 미만이면 True"""
    return int.from_bytes(d, "big") < target


def check_target(target: int) -> int:
    if not 0 < target <= MAX_TARGET:
        raise ValueError(f"난이도 목표값 범위 오류: {target}")
    return target


def target_to_hex(target: int) -> str:
    return check_target(target).to_bytes(DIGEST_SIZE, "big").hex()


def target_from_hex(text: str) -> int:
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    return check_target(int(text, 16))
