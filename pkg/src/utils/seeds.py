# src/utils/seeds.py
"""마스터 시드에서 (노드, 라운드)별 하위 시드 파생"""

from ..core.hashcore import hash_h, u64


def derive_seed(master_seed: int, *labels: int) -> int:
    """H(master, labels...)의 앞 8바이트"""
    parts = [b"seed", u64(master_seed % 2 ** 64)] + [u64(label % 2 ** 64) for label in labels]
    return int.from_bytes(hash_h(parts)[:8], "big")
