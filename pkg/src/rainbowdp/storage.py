"""Precomputed table container and the RDPT binary file format.

Layout (little-endian, no padding)::

    magic        4s   b"RDPT"
    version      u16  1 = rainbow-DP table, 2 = baseline table
    n_bits       u8
    k_bits       u8   (0 allowed only in version 2, for fixed-length methods)
    c            f64
    t_hat        u32
    l            u16
    table_index  u16
    m0_tilde     u64
    seed         u64
    function_id  u8 length + UTF-8 bytes
                 (version 2 stores "<method>:<function_id>")
    m0           u64  number of records
    precomp_inv  u64
    records      m0 x (len u32, ep u64, sp u64)
    checksum     u64  CRC-64/XZ over every preceding byte

CRC-64/XZ: reflected ECMA-182 polynomial 0x42F0E1EBA9EA3693
(reversed 0xC96C5795D7870F42), init and final xor 0xFFFFFFFFFFFFFFFF.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .core import ConfigError, SpaceParams

MAGIC = b"RDPT"
VERSION_RDP = 1
VERSION_BASELINE = 2

RECORD_DTYPE = np.dtype([("len", "<u4"), ("ep", "<u8"), ("sp", "<u8")])

_HEAD = struct.Struct("<4sHBBdIHHQQ")
_TAIL = struct.Struct("<QQ")


class TableFormatError(ValueError):
    """A table file failed to parse; ``field`` names the offending part."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _crc_table():
    poly = 0xC96C5795D7870F42
    table = np.zeros(256, dtype=np.uint64)
    for b in range(256):
        crc = b
        for _ in range(8):
            crc = (crc >> 1) ^ poly if crc & 1 else crc >> 1
        table[b] = crc
    return table


_CRC_TABLE = _crc_table()


@njit(cache=True)
def _crc64_update(data, table):
    crc = np.uint64(0xFFFFFFFFFFFFFFFF)
    for b in data:
        crc = table[np.uint8(crc) ^ b] ^ (crc >> np.uint64(8))
    return crc ^ np.uint64(0xFFFFFFFFFFFFFFFF)


def crc64(data: bytes) -> int:
    return int(_crc64_update(np.frombuffer(data, dtype=np.uint8), _CRC_TABLE))


def sort_records(lens, eps, sps):
    order = np.lexsort((sps, eps, lens))
    return lens[order], eps[order], sps[order]


def build_length_index(lens: np.ndarray, t_hat: int) -> np.ndarray:
    """``idx[L]:idx[L+1]`` is the slice of records with length L (1 <= L <= t_hat)."""
    return np.searchsorted(lens, np.arange(t_hat + 2), side="left").astype(np.int64)


@dataclass(eq=False)
class PrecompTable:
    """One sorted rainbow-DP table.

    Records live in three parallel int64 arrays sorted by (len, ep, sp).
    """

    params: SpaceParams
    table_index: int
    lens: np.ndarray
    eps: np.ndarray
    sps: np.ndarray
    precomp_invocations: int
    length_index: np.ndarray = field(init=False)

    def __post_init__(self):
        self.lens = np.ascontiguousarray(self.lens, dtype=np.int64)
        self.eps = np.ascontiguousarray(self.eps, dtype=np.int64)
        self.sps = np.ascontiguousarray(self.sps, dtype=np.int64)
        if not 0 <= self.table_index < self.params.l:
            raise ConfigError(f"table_index {self.table_index} outside [0, {self.params.l})")
        self.length_index = build_length_index(self.lens, self.params.t_hat)

    @property
    def m0(self) -> int:
        return len(self.lens)

    def records(self):
        from .offline import ChainRecord

        return [
            ChainRecord(int(a), int(b), int(c)) for a, b, c in zip(self.sps, self.lens, self.eps)
        ]

    def __eq__(self, other):
        if not isinstance(other, PrecompTable):
            return NotImplemented
        return (
            self.params == other.params
            and self.table_index == other.table_index
            and self.precomp_invocations == other.precomp_invocations
            and np.array_equal(self.lens, other.lens)
            and np.array_equal(self.eps, other.eps)
            and np.array_equal(self.sps, other.sps)
        )

    def lookup(self, length: int, ep: int) -> list[int]:
        return lookup(self, length, ep)


def lookup(table: PrecompTable, length: int, ep: int) -> list[int]:
    """Start points of all records with exactly this (len, ep), ascending."""
    if not 1 <= length <= table.params.t_hat:
        raise ValueError(f"chain length {length} outside [1, {table.params.t_hat}]")
    lo, hi = table.length_index[length], table.length_index[length + 1]
    seg = table.eps[lo:hi]
    a = np.searchsorted(seg, ep, side="left")
    b = np.searchsorted(seg, ep, side="right")
    return [int(v) for v in table.sps[lo + a : lo + b]]


def _encode(version, n_bits, k_bits, c, t_hat, l, table_index, m0_tilde, seed, fn_tag,
            lens, eps, sps, precomp_invocations) -> bytes:
    tag = fn_tag.encode("utf-8")
    if len(tag) > 255:
        raise ConfigError("function id too long")
    recs = np.empty(len(lens), dtype=RECORD_DTYPE)
    recs["len"] = lens
    recs["ep"] = eps
    recs["sp"] = sps
    body = b"".join(
        [
            _HEAD.pack(MAGIC, version, n_bits, k_bits, c, t_hat, l, table_index, m0_tilde, seed),
            bytes([len(tag)]),
            tag,
            _TAIL.pack(len(lens), precomp_invocations),
            recs.tobytes(),
        ]
    )
    return body + struct.pack("<Q", crc64(body))


def _decode(data: bytes):
    if len(data) < 4 or data[:4] != MAGIC:
        raise TableFormatError("magic", "not an RDPT file")
    if len(data) < _HEAD.size + 1:
        raise TableFormatError("header", "file truncated")
    magic, version, n_bits, k_bits, c, t_hat, l, table_index, m0_tilde, seed = _HEAD.unpack_from(data)
    if version not in (VERSION_RDP, VERSION_BASELINE):
        raise TableFormatError("version", f"unsupported format version {version}")
    pos = _HEAD.size
    n = data[pos]
    pos += 1
    if len(data) < pos + n + _TAIL.size:
        raise TableFormatError("function_id", "file truncated")
    try:
        fn_tag = data[pos : pos + n].decode("utf-8")
    except UnicodeDecodeError as e:
        raise TableFormatError("function_id", "invalid UTF-8") from e
    pos += n
    m0, precomp = _TAIL.unpack_from(data, pos)
    pos += _TAIL.size
    end = pos + m0 * RECORD_DTYPE.itemsize
    if len(data) != end + 8:
        raise TableFormatError("records", f"expected {end + 8} bytes, file has {len(data)}")
    (stored,) = struct.unpack_from("<Q", data, end)
    if crc64(data[:end]) != stored:
        raise TableFormatError("checksum", "CRC-64 mismatch")
    recs = np.frombuffer(data, dtype=RECORD_DTYPE, count=m0, offset=pos)
    header = dict(
        version=version, n_bits=n_bits, k_bits=k_bits, c=c, t_hat=t_hat, l=l,
        table_index=table_index, m0_tilde=m0_tilde, seed=seed, fn_tag=fn_tag,
        precomp_invocations=precomp,
    )
    return header, recs["len"].astype(np.int64), recs["ep"].astype(np.int64), recs["sp"].astype(np.int64)


def save(table: PrecompTable, path) -> None:
    p = table.params
    data = _encode(
        VERSION_RDP, p.n_bits, p.k_bits, p.c, p.t_hat, p.l, table.table_index, p.m0_tilde,
        p.seed, p.function_id, table.lens, table.eps, table.sps, table.precomp_invocations,
    )
    Path(path).write_bytes(data)


def load(path) -> PrecompTable:
    h, lens, eps, sps = _decode(Path(path).read_bytes())
    if h["version"] != VERSION_RDP:
        raise TableFormatError("version", "file holds a baseline table, not a rainbow-DP table")
    try:
        params = SpaceParams(
            n_bits=h["n_bits"], k_bits=h["k_bits"], c=h["c"], t_hat=h["t_hat"], l=h["l"],
            m0_tilde=h["m0_tilde"], seed=h["seed"], function_id=h["fn_tag"],
        )
    except ConfigError as e:
        raise TableFormatError("params", str(e)) from e
    if len(lens) and (lens[0] < 1 or lens[-1] > params.t_hat):
        raise TableFormatError("records", "chain length out of range")
    if len(lens) > 1 and np.any(np.diff(lens) < 0):
        raise TableFormatError("records", "records not sorted by length")
    return PrecompTable(params, h["table_index"], lens, eps, sps, h["precomp_invocations"])


def save_raw(path, version, header: dict, lens, eps, sps, precomp_invocations) -> None:
    """Low-level writer shared with the baseline tables."""
    data = _encode(
        version, header["n_bits"], header["k_bits"], header["c"], header["t_hat"], header["l"],
        header["table_index"], header["m0_tilde"], header["seed"], header["fn_tag"],
        lens, eps, sps, precomp_invocations,
    )
    Path(path).write_bytes(data)


def load_raw(path):
    return _decode(Path(path).read_bytes())
