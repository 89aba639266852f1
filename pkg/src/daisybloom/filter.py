"""Bit-array filter with a per-element number of hash positions.

Hash positions use double hashing over one keyed 128-bit hash of the element
id. The hash is fixed here so other implementations can reproduce it bit for
bit. All arithmetic is modulo 2**64::

    mix(z)  = splitmix64 finalizer:
              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
              z ^ (z >> 31)
    key1    = mix(seed + 1 * 0x9E3779B97F4A7C15)
    key2    = mix(seed + 2 * 0x9E3779B97F4A7C15)
    g1      = mix(x ^ key1)          # high half
    g2      = mix(x ^ key2) | 1      # low half, forced odd
    h_i(x)  = (g1 + i * g2) mod m,   i = 1, 2, ...

``h_1 .. h_k`` is always a prefix of ``h_1 .. h_k'`` for ``k <= k'``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .distributions import SampledSet
from .planner import FilterPlan

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

SNAPSHOT_MAGIC = b"DAISYBF1"


def _mix(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


def hash_keys(seed: int) -> tuple[int, int]:
    seed &= MASK64
    return _mix(seed + GOLDEN), _mix(seed + 2 * GOLDEN)


def hash128(seed: int, x: int) -> tuple[int, int]:
    """``(g1, g2)`` for one element."""
    k1, k2 = hash_keys(seed)
    return _mix(x ^ k1), _mix(x ^ k2) | 1


def hash128_array(seed: int, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = hash_keys(seed)
    xs = np.asarray(xs).astype(np.uint64)
    g1 = _mix_array(xs ^ np.uint64(k1))
    g2 = _mix_array(xs ^ np.uint64(k2)) | np.uint64(1)
    return g1, g2


def positions(seed: int, x: int, k: int, m: int) -> list[int]:
    """The first ``k`` positions ``h_1(x) .. h_k(x)`` in an array of ``m`` bits."""
    if k < 0 or m < 1:
        raise ValueError(f"need k >= 0 and m >= 1, got k={k}, m={m}")
    g1, g2 = hash128(seed, x)
    a, b = g1 % m, g2 % m
    return [(a + i * b) % m for i in range(1, k + 1)]


def _residues(seed: int, xs: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    g1, g2 = hash128_array(seed, xs)
    mm = np.uint64(m)
    return (g1 % mm).astype(np.int64), (g2 % mm).astype(np.int64)


class DaisyFilter:
    """A Bloom filter whose element ``x`` uses ``plan.k_int[x]`` hash positions.

    ``X`` counts slot writes with multiplicity: inserting the same id twice
    adds its hash count twice even though no bit changes the second time.
    ``max_probe`` records the largest number of positions any single insert
    or query has touched.
    """

    def __init__(self, plan: FilterPlan, seed: int = 0) -> None:
        self.plan = plan
        self.seed = seed & MASK64
        self.m = plan.m_bits
        self.words = np.zeros((self.m + 63) // 64, dtype=np.uint64)
        self.X = 0
        self.inserted = 0
        self.max_probe = 0

    def _check_id(self, x: int) -> int:
        x = int(x)
        if not 0 <= x < self.plan.universe.u:
            raise ValueError(f"element {x} outside universe [0, {self.plan.universe.u})")
        return x

    def _check_ids(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        if xs.size and (xs.min() < 0 or xs.max() >= self.plan.universe.u):
            raise ValueError(f"element ids outside universe [0, {self.plan.universe.u})")
        return xs

    def _get(self, pos: int) -> bool:
        return bool((int(self.words[pos >> 6]) >> (pos & 63)) & 1)

    def insert(self, x: int) -> None:
        x = self._check_id(x)
        k = int(self.plan.k_int[x])
        for pos in positions(self.seed, x, k, self.m):
            self.words[pos >> 6] |= np.uint64(1 << (pos & 63))
        self.X += k
        self.inserted += 1
        self.max_probe = max(self.max_probe, k)

    def query(self, x: int) -> bool:
        x = self._check_id(x)
        k = int(self.plan.k_int[x])
        self.max_probe = max(self.max_probe, k)
        return all(self._get(pos) for pos in positions(self.seed, x, k, self.m))

    __contains__ = query

    def insert_many(self, xs) -> None:
        """Insert ids in order; same end state as repeated :meth:`insert`."""
        xs = self._check_ids(xs)
        if xs.size == 0:
            return
        k = self.plan.k_int[xs]
        a, b = _residues(self.seed, xs, self.m)
        marks = np.zeros(self.words.size * 64, dtype=bool)
        for i in range(1, int(k.max()) + 1):
            sel = k >= i
            marks[(a[sel] + i * b[sel]) % self.m] = True
        packed = np.packbits(marks, bitorder="little").view("<u8")
        self.words |= packed.astype(np.uint64)
        self.X += int(k.sum())
        self.inserted += int(xs.size)
        self.max_probe = max(self.max_probe, int(k.max()))

    def query_many(self, xs) -> np.ndarray:
        """Boolean YES/NO answers for an array of ids."""
        xs = self._check_ids(xs)
        yes = np.ones(xs.size, dtype=bool)
        if xs.size == 0:
            return yes
        k = self.plan.k_int[xs]
        kmax = int(k.max())
        if kmax == 0:
            return yes
        self.max_probe = max(self.max_probe, kmax)
        bits = self.unpacked()
        a, b = _residues(self.seed, xs, self.m)
        live = np.flatnonzero(k >= 1)
        for i in range(1, kmax + 1):
            if live.size == 0:
                break
            hit = bits[(a[live] + i * b[live]) % self.m]
            yes[live[~hit]] = False
            live = live[hit]
            live = live[k[live] > i]
        return yes

    def unpacked(self) -> np.ndarray:
        """The bit array as ``m`` booleans."""
        raw = np.unpackbits(self.words.astype("<u8").view(np.uint8), bitorder="little")
        return raw[: self.m].astype(bool)

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def zero_fraction(self) -> float:
        return (self.m - self.popcount()) / self.m

    def save(self, path: str | Path) -> None:
        write_snapshot(path, self.words, self.m, self.seed)

    @classmethod
    def load(cls, path: str | Path, plan: FilterPlan) -> "DaisyFilter":
        """Restore bits and seed from a snapshot; ``X`` and counters start at zero."""
        words, m, seed = read_snapshot(path)
        if m != plan.m_bits:
            raise ValueError(f"snapshot has {m} bits but plan expects {plan.m_bits}")
        f = cls(plan, seed)
        f.words[:] = words
        return f


def build(plan: FilterPlan, s: SampledSet, seed: int) -> DaisyFilter:
    """Filter holding every draw of ``s`` (duplicates included in ``X``)."""
    if s.draws.size and int(s.draws.max()) >= plan.universe.u:
        raise ValueError("sampled set does not belong to the plan's universe")
    f = DaisyFilter(plan, seed)
    f.insert_many(s.draws)
    return f


def write_snapshot(path: str | Path, words: np.ndarray, m_bits: int, seed: int) -> None:
    """``DAISYBF1`` + m_bits (u64 LE) + seed (u64 LE) + words (u64 LE)."""
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<QQ", m_bits, seed & MASK64))
        fh.write(np.asarray(words, dtype="<u8").tobytes())


def read_snapshot(path: str | Path) -> tuple[np.ndarray, int, int]:
    data = Path(path).read_bytes()
    if len(data) < 24 or data[:8] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a filter snapshot")
    m_bits, seed = struct.unpack_from("<QQ", data, 8)
    nwords = (m_bits + 63) // 64
    body = data[24:]
    if len(body) != 8 * nwords:
        raise ValueError(f"{path}: expected {nwords} words, found {len(body) / 8:g}")
    words = np.frombuffer(body, dtype="<u8").astype(np.uint64)
    return words, m_bits, seed
