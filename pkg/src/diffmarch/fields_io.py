"""Text serialization of fields and PGM mask input.

Field file format ("FMFIELD"): one header line ``FMFIELD nx ny h`` followed
by ny rows of nx decimal values.  Values are written with shortest
round-trip precision, so serialize/parse is bit-exact for finite fields.
"""

from __future__ import annotations

import numpy as np

from .errors import FieldParseError
from .grid import Grid2D, ScalarField, make_grid

MAGIC = "FMFIELD"


def write_field(field: ScalarField, path) -> None:
    grid = field.grid
    rows = field.to_matrix()
    with open(path, "w") as fh:
        fh.write(f"{MAGIC} {grid.nx} {grid.ny} {grid.h!r}\n")
        for j in range(grid.ny):
            fh.write(" ".join(repr(v) for v in rows[j].tolist()))
            fh.write("\n")


def read_field(path) -> ScalarField:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FieldParseError("line 1: empty file, expected FMFIELD header")

    header = lines[0].split()
    if len(header) != 4 or header[0] != MAGIC:
        raise FieldParseError(f"line 1: malformed header {lines[0]!r}")
    try:
        nx, ny = int(header[1]), int(header[2])
        h = float(header[3])
    except ValueError:
        raise FieldParseError(f"line 1: non-numeric header fields in {lines[0]!r}") from None
    grid = make_grid(nx, ny, h)

    values = np.empty((ny, nx))
    row = 0
    for ln, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens:
            continue
        if row >= ny:
            raise FieldParseError(f"line {ln}: expected {ny} rows, found more")
        if len(tokens) != nx:
            raise FieldParseError(f"line {ln}: expected {nx} values, found {len(tokens)}")
        try:
            values[row] = [float(t) for t in tokens]
        except ValueError:
            raise FieldParseError(f"line {ln}: non-numeric token in row") from None
        row += 1
    if row != ny:
        raise FieldParseError(f"line {len(lines)}: expected {ny} rows, found {row}")
    return ScalarField(grid, values.reshape(-1))


def read_mask_image(path) -> ScalarField:
    """Read an 8-bit grayscale PGM (P2 or P5) as a binary field.

    Pixels brighter than 127 map to 1.  The grid spacing defaults to
    1/max(nx, ny).
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P2":
        return _parse_pgm_ascii(data)
    if data[:2] == b"P5":
        return _parse_pgm_binary(data)
    raise FieldParseError(f"unsupported magic number {data[:2]!r} (need P2 or P5)")


def _mask_grid(nx: int, ny: int) -> Grid2D:
    return make_grid(nx, ny, 1.0 / max(nx, ny))


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def _parse_pgm_ascii(data: bytes) -> ScalarField:
    tokens = _strip_comments(data.decode("latin-1")).split()
    if len(tokens) < 4:
        raise FieldParseError("truncated PGM header")
    try:
        nx, ny, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError:
        raise FieldParseError("non-numeric PGM header token") from None
    if maxval <= 0 or maxval > 255:
        raise FieldParseError(f"unsupported PGM maxval {maxval} (need 1..255)")
    samples = tokens[4:]
    if len(samples) != nx * ny:
        raise FieldParseError(f"PGM raster has {len(samples)} samples, expected {nx * ny}")
    try:
        pixels = np.array([int(t) for t in samples], dtype=np.int64)
    except ValueError:
        raise FieldParseError("non-numeric PGM raster token") from None
    if pixels.min() < 0 or pixels.max() > maxval:
        raise FieldParseError("PGM sample outside [0, maxval]")
    return ScalarField(_mask_grid(nx, ny), (pixels > 127).astype(np.float64))


def _parse_pgm_binary(data: bytes) -> ScalarField:
    # Header: magic, nx, ny, maxval as ASCII with '#' comments, then exactly
    # one whitespace byte before the raster.
    header: list[int] = []
    pos = 2
    while len(header) < 3:
        if pos >= len(data):
            raise FieldParseError("truncated PGM header")
        ch = data[pos : pos + 1]
        if ch in b" \t\r\n":
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos : pos + 1] not in b"\r\n":
                pos += 1
        else:
            start = pos
            while pos < len(data) and data[pos : pos + 1] not in b" \t\r\n#":
                pos += 1
            token = data[start:pos]
            try:
                header.append(int(token))
            except ValueError:
                raise FieldParseError(f"non-numeric PGM header token {token!r}") from None
    nx, ny, maxval = header
    if maxval <= 0 or maxval > 255:
        raise FieldParseError(f"unsupported PGM maxval {maxval} (need 1..255)")
    raster = data[pos + 1 :]
    if len(raster) < nx * ny:
        raise FieldParseError(f"PGM raster has {len(raster)} bytes, expected {nx * ny}")
    pixels = np.frombuffer(raster, dtype=np.uint8, count=nx * ny)
    return ScalarField(_mask_grid(nx, ny), (pixels > 127).astype(np.float64))
