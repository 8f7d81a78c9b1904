"""Canonical byte encoding shared by every chain structure.

One encoding, no alternatives: integers are big-endian fixed width, byte
sequences carry a 32-bit big-endian length prefix, lists carry a 32-bit
element count, enum values are single tag bytes. Field order is declaration
order of the owning type. Two structurally equal values always serialize to
the same bytes; that is what digests and signatures are computed over.
"""

from __future__ import annotations

import hashlib

DIGEST_SIZE = 32
ZERO_DIGEST = b"\x00" * DIGEST_SIZE

U8_MAX = 0xFF
U32_MAX = 0xFFFF_FFFF
U64_MAX = 0xFFFF_FFFF_FFFF_FFFF


class CodecError(ValueError):
    """Raised when bytes cannot be decoded as the requested structure."""


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


class Writer:
    """Accumulates canonical bytes."""

    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, value: int) -> "Writer":
        if not 0 <= value <= U8_MAX:
            raise CodecError(f"u8 out of range: {value}")
        self._parts.append(value.to_bytes(1, "big"))
        return self

    def u32(self, value: int) -> "Writer":
        if not 0 <= value <= U32_MAX:
            raise CodecError(f"u32 out of range: {value}")
        self._parts.append(value.to_bytes(4, "big"))
        return self

    def u64(self, value: int) -> "Writer":
        if not 0 <= value <= U64_MAX:
            raise CodecError(f"u64 out of range: {value}")
        self._parts.append(value.to_bytes(8, "big"))
        return self

    def raw(self, data: bytes) -> "Writer":
        # Unprefixed; only for fixed framing like file magic.
        self._parts.append(bytes(data))
        return self

    def bytes(self, data: bytes) -> "Writer":
        self.u32(len(data))
        self._parts.append(bytes(data))
        return self

    def text(self, value: str) -> "Writer":
        return self.bytes(value.encode("utf-8"))

    def maybe_bytes(self, data: bytes | None) -> "Writer":
        # Presence byte then the sequence; encodes optional fields.
        if data is None:
            return self.u8(0)
        self.u8(1)
        return self.bytes(data)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    """Decodes canonical bytes; every read checks bounds."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise CodecError("unexpected end of input")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return int.from_bytes(self._take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def bytes(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        try:
            return self.bytes().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CodecError(f"invalid utf-8: {exc}") from exc

    def maybe_bytes(self) -> bytes | None:
        flag = self.u8()
        if flag == 0:
            return None
        if flag == 1:
            return self.bytes()
        raise CodecError(f"bad presence byte: {flag}")

    def remaining(self) -> int:
        return len(self._data) - self._pos

    def expect_end(self) -> None:
        if self.remaining():
            raise CodecError(f"{self.remaining()} trailing bytes")
