"""Netpbm (PGM/PPM) reading and writing for the ``apply`` command."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .exceptions import ContractError, ParseError

_MAGICS = {b"P2": (1, False), b"P5": (1, True), b"P3": (3, False), b"P6": (3, True)}
_WHITESPACE = b" \t\r\n\v\f"


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def skip_space(self):
        buf = self.buf
        while self.pos < len(buf):
            ch = buf[self.pos : self.pos + 1]
            if ch == b"#":
                end = buf.find(b"\n", self.pos)
                self.pos = len(buf) if end < 0 else end + 1
            elif ch in _WHITESPACE:
                self.pos += 1
            else:
                break

    def token(self, what):
        self.skip_space()
        start = self.pos
        while self.pos < len(self.buf) and self.buf[self.pos : self.pos + 1] not in _WHITESPACE:
            if self.buf[self.pos : self.pos + 1] == b"#":
                break
            self.pos += 1
        if start == self.pos:
            raise ParseError(f"expected {what}, found end of data", start)
        return self.buf[start : self.pos], start

    def integer(self, what, minimum=0):
        tok, at = self.token(what)
        try:
            value = int(tok)
        except ValueError:
            raise ParseError(f"expected {what}, got {tok[:16]!r}", at) from None
        if value < minimum:
            raise ParseError(f"{what} must be >= {minimum}, got {value}", at)
        return value


def decode_netpbm(buf: bytes):
    """Decode a P2/P3/P5/P6 image into an ``(h, w, c)`` float32 array in [0, 1]."""
    reader = _Reader(buf)
    magic = buf[:2]
    if magic not in _MAGICS:
        raise ParseError(f"unsupported or missing magic number {magic!r}", 0)
    channels, binary = _MAGICS[magic]
    reader.pos = 2
    width = reader.integer("width", 1)
    height = reader.integer("height", 1)
    maxval = reader.integer("maxval", 1)
    if maxval > 65535:
        raise ParseError(f"maxval {maxval} exceeds 65535", reader.pos)
    count = width * height * channels
    if binary:
        if reader.pos >= len(buf) or buf[reader.pos : reader.pos + 1] not in _WHITESPACE:
            raise ParseError("missing whitespace after maxval", reader.pos)
        start = reader.pos + 1
        itemsize = 1 if maxval < 256 else 2
        expected = count * itemsize
        actual = len(buf) - start
        if actual < expected:
            raise ParseError(
                f"truncated raster: expected {expected} bytes, got {actual}", start + actual
            )
        dtype = np.dtype(np.uint8) if itemsize == 1 else np.dtype(">u2")
        values = np.frombuffer(buf, dtype=dtype, count=count, offset=start)
    else:
        values = np.empty(count, dtype=np.int64)
        for n in range(count):
            values[n] = reader.integer("sample")
    if values.max(initial=0) > maxval:
        raise ParseError(f"sample exceeds maxval {maxval}", None)
    img = values.astype(np.float32).reshape(height, width, channels)
    return img / np.float32(maxval)


def read_image(path):
    return decode_netpbm(Path(path).read_bytes())


def encode_netpbm(t) -> bytes:
    """Encode a 1- or 3-channel map as binary PGM/PPM, clamping to [0, 1] and rounding to 8 bits."""
    t = np.asarray(t)
    if t.ndim == 2:
        t = t[:, :, None]
    h, w, c = t.shape
    if c not in (1, 3):
        raise ContractError(f"can only write 1- or 3-channel images, got {c} channels")
    magic = b"P5" if c == 1 else b"P6"
    raster = np.rint(np.clip(t, 0.0, 1.0) * 255.0).astype(np.uint8)
    return magic + f"\n{w} {h}\n255\n".encode() + raster.tobytes()


def write_image(path, t):
    Path(path).write_bytes(encode_netpbm(t))
