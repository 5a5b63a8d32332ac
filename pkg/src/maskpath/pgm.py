"""Portable graymap (PGM) reader/writer for defect masks.

Both the ASCII ``P2`` and binary ``P5`` variants are supported, with
maxval up to 255 and ``#`` comments in the header. Masks are written with
0 for background and 255 for foreground; on read, samples are scaled to
the 0..255 range and anything >= 128 counts as foreground. Files written
as P5 round-trip byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FileFormatError
from .mask_core import BinaryMask

__all__ = ["read_pgm", "write_pgm"]

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Pull ``count`` whitespace-separated header tokens, honoring # comments.

    Returns the tokens and the offset of the byte right after the single
    whitespace character that terminates the last token.
    """
    tokens: list[bytes] = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1] in _WHITESPACE:
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < n and data[i : i + 1] not in _WHITESPACE and data[i : i + 1] != b"#":
            i += 1
        if i == start:
            raise FileFormatError("truncated PGM header")
        tokens.append(data[start:i])
        if len(tokens) == count:
            if i < n and data[i : i + 1] in _WHITESPACE:
                i += 1  # exactly one whitespace byte separates header from raster
            elif i < n:
                raise FileFormatError("PGM header not terminated by whitespace")
    return tokens, i


def read_pgm(path) -> BinaryMask:
    """Load a P2 or P5 graymap and threshold it into a binary mask."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P2", b"P5"):
        raise FileFormatError("not a PGM file (expected P2 or P5 magic)")
    tokens, offset = _header_tokens(data, 4)
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FileFormatError(f"non-numeric PGM header field: {exc}") from None
    if width < 1 or height < 1:
        raise FileFormatError("PGM dimensions must be positive")
    if not 1 <= maxval <= 255:
        raise FileFormatError("only 8-bit PGM (maxval 1..255) is supported")

    if magic == b"P5":
        raster = data[offset : offset + width * height]
        if len(raster) != width * height:
            raise FileFormatError("P5 raster shorter than width*height")
        samples = np.frombuffer(raster, dtype=np.uint8)
    else:
        text = data[offset:]
        # strip comments before splitting
        lines = [line.split(b"#", 1)[0] for line in text.split(b"\n")]
        fields = b" ".join(lines).split()
        if len(fields) != width * height:
            raise FileFormatError(
                f"P2 raster has {len(fields)} samples, expected {width * height}"
            )
        try:
            samples = np.array([int(f) for f in fields], dtype=np.int64)
        except ValueError as exc:
            raise FileFormatError(f"non-numeric P2 sample: {exc}") from None
    if samples.max(initial=0) > maxval:
        raise FileFormatError("PGM sample exceeds declared maxval")
    scaled = samples.astype(np.int64) * 255 // maxval
    cells = (scaled >= 128).astype(np.uint8).reshape(height, width)
    return BinaryMask(cells)


def write_pgm(path, mask: BinaryMask, format: str = "P5") -> None:
    """Write a mask as a graymap, foreground 255 on background 0."""
    if format not in ("P2", "P5"):
        raise ValueError("format must be 'P2' or 'P5'")
    gray = (mask.cells * np.uint8(255)).astype(np.uint8)
    header = f"{format}\n{mask.width} {mask.height}\n255\n".encode("ascii")
    if format == "P5":
        body = gray.tobytes()
    else:
        body = b"\n".join(b" ".join(b"%d" % v for v in row) for row in gray) + b"\n"
    Path(path).write_bytes(header + body)
