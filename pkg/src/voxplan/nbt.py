"""Minimal strict NBT parser/encoder (big-endian, optionally gzipped).

Covers the 13 standard tag types. Values are represented by small typed
wrappers so numeric widths survive a round trip.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass


class NbtError(Exception):
    pass


class TruncatedInput(NbtError):
    pass


class UnknownTag(NbtError):
    pass


class BadUtf8(NbtError):
    pass


class DepthLimitExceeded(NbtError):
    pass


TAG_END = 0
TAG_BYTE = 1
TAG_SHORT = 2
TAG_INT = 3
TAG_LONG = 4
TAG_FLOAT = 5
TAG_DOUBLE = 6
TAG_BYTE_ARRAY = 7
TAG_STRING = 8
TAG_LIST = 9
TAG_COMPOUND = 10
TAG_INT_ARRAY = 11
TAG_LONG_ARRAY = 12

DEFAULT_DEPTH_LIMIT = 64


@dataclass(frozen=True)
class Byte:
    value: int


@dataclass(frozen=True)
class Short:
    value: int


@dataclass(frozen=True)
class Int:
    value: int


@dataclass(frozen=True)
class Long:
    value: int


@dataclass(frozen=True)
class Float:
    value: float


@dataclass(frozen=True)
class Double:
    value: float


@dataclass(frozen=True)
class ByteArray:
    value: bytes


@dataclass(frozen=True)
class String:
    value: str


@dataclass(frozen=True)
class List:
    item_tag: int
    items: tuple


@dataclass(frozen=True)
class Compound:
    items: dict  # name -> value; insertion-ordered, unique keys

    def __getitem__(self, key):
        return self.items[key]

    def get(self, key, default=None):
        return self.items.get(key, default)

    def __contains__(self, key):
        return key in self.items


@dataclass(frozen=True)
class IntArray:
    value: tuple


@dataclass(frozen=True)
class LongArray:
    value: tuple


_TAG_OF_TYPE = {
    Byte: TAG_BYTE, Short: TAG_SHORT, Int: TAG_INT, Long: TAG_LONG,
    Float: TAG_FLOAT, Double: TAG_DOUBLE, ByteArray: TAG_BYTE_ARRAY,
    String: TAG_STRING, List: TAG_LIST, Compound: TAG_COMPOUND,
    IntArray: TAG_INT_ARRAY, LongArray: TAG_LONG_ARRAY,
}


def tag_of(value) -> int:
    try:
        return _TAG_OF_TYPE[type(value)]
    except KeyError:
        raise UnknownTag(f"not an NBT value: {type(value)!r}") from None


class _Reader:
    def __init__(self, data: bytes, depth_limit: int):
        self.data = data
        self.pos = 0
        self.depth_limit = depth_limit

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedInput(f"wanted {n} bytes at offset {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        (v,) = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return v

    def read_string(self) -> str:
        n = self.unpack(">H")
        raw = self.take(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise BadUtf8(str(e)) from e

    def read_payload(self, tag: int, depth: int):
        if depth > self.depth_limit:
            raise DepthLimitExceeded(f"nesting deeper than {self.depth_limit}")
        if tag == TAG_BYTE:
            return Byte(self.unpack(">b"))
        if tag == TAG_SHORT:
            return Short(self.unpack(">h"))
        if tag == TAG_INT:
            return Int(self.unpack(">i"))
        if tag == TAG_LONG:
            return Long(self.unpack(">q"))
        if tag == TAG_FLOAT:
            return Float(self.unpack(">f"))
        if tag == TAG_DOUBLE:
            return Double(self.unpack(">d"))
        if tag == TAG_BYTE_ARRAY:
            n = self.unpack(">i")
            if n < 0:
                raise TruncatedInput(f"negative byte-array length {n}")
            return ByteArray(bytes(self.take(n)))
        if tag == TAG_STRING:
            return String(self.read_string())
        if tag == TAG_LIST:
            item_tag = self.unpack(">b")
            n = self.unpack(">i")
            if n < 0:
                raise TruncatedInput(f"negative list length {n}")
            if item_tag == TAG_END and n > 0:
                raise UnknownTag("non-empty list of TAG_End")
            items = tuple(self.read_payload(item_tag, depth + 1) for _ in range(n))
            return List(item_tag, items)
        if tag == TAG_COMPOUND:
            items = {}
            while True:
                child_tag = self.unpack(">B")
                if child_tag == TAG_END:
                    return Compound(items)
                if child_tag > TAG_LONG_ARRAY:
                    raise UnknownTag(f"tag id {child_tag}")
                name = self.read_string()
                items[name] = self.read_payload(child_tag, depth + 1)
        if tag == TAG_INT_ARRAY:
            n = self.unpack(">i")
            if n < 0:
                raise TruncatedInput(f"negative int-array length {n}")
            return IntArray(tuple(self.unpack(">i") for _ in range(n)))
        if tag == TAG_LONG_ARRAY:
            n = self.unpack(">i")
            if n < 0:
                raise TruncatedInput(f"negative long-array length {n}")
            return LongArray(tuple(self.unpack(">q") for _ in range(n)))
        raise UnknownTag(f"tag id {tag}")


def parse_nbt(data: bytes, depth_limit: int = DEFAULT_DEPTH_LIMIT):
    """Parse one named root tag. Returns (name, value)."""
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    r = _Reader(data, depth_limit)
    tag = r.unpack(">B")
    if tag == TAG_END or tag > TAG_LONG_ARRAY:
        raise UnknownTag(f"root tag id {tag}")
    name = r.read_string()
    value = r.read_payload(tag, 0)
    return name, value


def encode_nbt(name: str, value, compress: bool = False) -> bytes:
    out = bytearray()
    out.append(tag_of(value))
    _write_string(out, name)
    _write_payload(out, value)
    raw = bytes(out)
    return gzip.compress(raw) if compress else raw


def _write_string(out: bytearray, s: str) -> None:
    raw = s.encode("utf-8")
    out += struct.pack(">H", len(raw))
    out += raw


def _write_payload(out: bytearray, value) -> None:
    if isinstance(value, Byte):
        out += struct.pack(">b", value.value)
    elif isinstance(value, Short):
        out += struct.pack(">h", value.value)
    elif isinstance(value, Int):
        out += struct.pack(">i", value.value)
    elif isinstance(value, Long):
        out += struct.pack(">q", value.value)
    elif isinstance(value, Float):
        out += struct.pack(">f", value.value)
    elif isinstance(value, Double):
        out += struct.pack(">d", value.value)
    elif isinstance(value, ByteArray):
        out += struct.pack(">i", len(value.value))
        out += value.value
    elif isinstance(value, String):
        _write_string(out, value.value)
    elif isinstance(value, List):
        out += struct.pack(">bi", value.item_tag, len(value.items))
        for item in value.items:
            if tag_of(item) != value.item_tag:
                raise UnknownTag("heterogeneous list")
            _write_payload(out, item)
    elif isinstance(value, Compound):
        for name, item in value.items.items():
            out.append(tag_of(item))
            _write_string(out, name)
            _write_payload(out, item)
        out.append(TAG_END)
    elif isinstance(value, IntArray):
        out += struct.pack(">i", len(value.value))
        for v in value.value:
            out += struct.pack(">i", v)
    elif isinstance(value, LongArray):
        out += struct.pack(">i", len(value.value))
        for v in value.value:
            out += struct.pack(">q", v)
    else:
        raise UnknownTag(f"not an NBT value: {type(value)!r}")
