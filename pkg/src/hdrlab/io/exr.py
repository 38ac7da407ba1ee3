"""OpenEXR subset: single-part scanline images.

Writes uncompressed files with HALF or FLOAT B/G/R channels. Reads NONE,
ZIPS and ZIP compression. Anything else (tiles, multipart, deep data, other
codecs, subsampled channels) is rejected with :class:`UnsupportedFeature`.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from ..core import DEFAULT_NITS_PER_UNIT, RadianceFrame
from .errors import FormatError, UnsupportedFeature

MAGIC = b"\x76\x2f\x31\x01"
VERSION = 2

_TILED = 0x200
_LONG_NAMES = 0x400
_NON_IMAGE = 0x800
_MULTIPART = 0x1000
_KNOWN_FLAGS = _TILED | _LONG_NAMES | _NON_IMAGE | _MULTIPART

UINT, HALF, FLOAT = 0, 1, 2
_PIXEL_DTYPES = {HALF: np.dtype("<f2"), FLOAT: np.dtype("<f4")}

NO_COMPRESSION, RLE, ZIPS, ZIP = 0, 1, 2, 3
_COMPRESSION_NAMES = {
    0: "NONE", 1: "RLE", 2: "ZIPS", 3: "ZIP", 4: "PIZ", 5: "PXR24",
    6: "B44", 7: "B44A", 8: "DWAA", 9: "DWAB", 10: "HTJ2K",
}
_LINES_PER_CHUNK = {NO_COMPRESSION: 1, ZIPS: 1, ZIP: 16}

# Largest finite value that still rounds to a finite half.
_HALF_ROUND_LIMIT = 65520.0
_MAX_HEADER_ATTRS = 1024
_MAX_DIM = 1 << 20


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise FormatError(f"truncated file while reading {what}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def cstr(self, what: str, limit: int = 255) -> bytes:
        end = self.buf.find(b"\0", self.pos, self.pos + limit + 1)
        if end < 0:
            if self.pos + limit + 1 > len(self.buf):
                raise FormatError(f"truncated file while reading {what}")
            raise FormatError(f"{what} is not null-terminated within {limit} bytes")
        out = self.buf[self.pos:end]
        self.pos = end + 1
        return out


def _parse_chlist(value: bytes) -> list[tuple[str, int]]:
    r = _Reader(value)
    channels = []
    while True:
        name = r.cstr("channel name")
        if not name:
            break
        ptype, _linear, _r0, _r1, _r2, xs, ys = r.unpack("<iBBBBii", "channel record")
        try:
            decoded = name.decode("ascii")
        except UnicodeDecodeError:
            raise FormatError("channel name is not ASCII") from None
        if ptype not in (UINT, HALF, FLOAT):
            raise FormatError(f"channel {decoded!r} has invalid pixel type {ptype}")
        if ptype == UINT:
            raise UnsupportedFeature(f"unsupported feature: UINT channel {decoded!r}")
        if (xs, ys) != (1, 1):
            raise UnsupportedFeature(f"unsupported feature: subsampled channel {decoded!r} ({xs}x{ys})")
        channels.append((decoded, ptype))
    if r.pos != len(value):
        raise FormatError("trailing bytes after channel list")
    names = [c[0] for c in channels]
    if len(set(names)) != len(names):
        raise FormatError("duplicate channel names")
    return channels


_ATTR_TYPES = {
    "channels": "chlist",
    "compression": "compression",
    "dataWindow": "box2i",
    "displayWindow": "box2i",
    "lineOrder": "lineOrder",
    "pixelAspectRatio": "float",
    "screenWindowCenter": "v2f",
    "screenWindowWidth": "float",
}
_REQUIRED = tuple(_ATTR_TYPES)


def _parse_header(r: _Reader) -> dict:
    if r.take(4, "magic") != MAGIC:
        raise FormatError("bad magic number: not an OpenEXR file")
    (version_field,) = r.unpack("<I", "version")
    version, flags = version_field & 0xFF, version_field & ~0xFF
    if version != VERSION:
        raise FormatError(f"unsupported EXR version {version}")
    if flags & ~_KNOWN_FLAGS:
        raise FormatError(f"unknown version flags 0x{flags:x}")
    if flags & _TILED:
        raise UnsupportedFeature("unsupported feature: tiled images")
    if flags & _MULTIPART:
        raise UnsupportedFeature("unsupported feature: multipart files")
    if flags & _NON_IMAGE:
        raise UnsupportedFeature("unsupported feature: deep data")
    name_limit = 255 if flags & _LONG_NAMES else 31

    attrs: dict[str, tuple[str, bytes]] = {}
    for _ in range(_MAX_HEADER_ATTRS):
        name = r.cstr("attribute name", name_limit)
        if not name:
            break
        atype = r.cstr("attribute type", name_limit)
        (size,) = r.unpack("<i", "attribute size")
        if size < 0:
            raise FormatError(f"negative attribute size for {name!r}")
        value = r.take(size, f"attribute {name!r}")
        try:
            key, tname = name.decode("ascii"), atype.decode("ascii")
        except UnicodeDecodeError:
            raise FormatError("attribute name or type is not ASCII") from None
        if key in attrs:
            raise FormatError(f"duplicate attribute {key!r}")
        attrs[key] = (tname, value)
    else:
        raise FormatError("too many header attributes")

    for key in _REQUIRED:
        if key not in attrs:
            raise FormatError(f"missing required attribute {key!r}")
        if attrs[key][0] != _ATTR_TYPES[key]:
            raise FormatError(f"attribute {key!r} has type {attrs[key][0]!r}, expected {_ATTR_TYPES[key]!r}")
    if "type" in attrs or "tiles" in attrs:
        kind = attrs.get("type", ("", b""))[1].rstrip(b"\0").decode("ascii", "replace")
        if "tiles" in attrs or kind not in ("", "scanlineimage"):
            raise UnsupportedFeature(f"unsupported feature: part type {kind or 'tiled'!r}")

    def fixed(key, fmt):
        value = attrs[key][1]
        if len(value) != struct.calcsize(fmt):
            raise FormatError(f"attribute {key!r} has wrong size {len(value)}")
        return struct.unpack(fmt, value)

    (compression,) = fixed("compression", "<B")
    if compression not in _LINES_PER_CHUNK:
        label = _COMPRESSION_NAMES.get(compression)
        if label is None:
            raise FormatError(f"invalid compression code {compression}")
        raise UnsupportedFeature(f"unsupported feature: {label} compression")
    (line_order,) = fixed("lineOrder", "<B")
    if line_order > 2:
        raise FormatError(f"invalid lineOrder {line_order}")
    xmin, ymin, xmax, ymax = fixed("dataWindow", "<iiii")
    fixed("displayWindow", "<iiii")
    fixed("pixelAspectRatio", "<f")
    fixed("screenWindowCenter", "<ff")
    fixed("screenWindowWidth", "<f")
    width, height = xmax - xmin + 1, ymax - ymin + 1
    if width < 1 or height < 1 or width > _MAX_DIM or height > _MAX_DIM:
        raise FormatError(f"invalid dataWindow ({xmin},{ymin})-({xmax},{ymax})")

    channels = _parse_chlist(attrs["channels"][1])
    names = [c[0] for c in channels]
    if names != sorted(names):
        raise FormatError("channel list is not sorted")
    missing = [c for c in "RGB" if c not in names]
    if missing:
        raise FormatError(f"dataWindow/channel inconsistency: missing channel(s) {', '.join(missing)}")

    extra = {k: v for k, v in attrs.items() if k not in _ATTR_TYPES}
    return {
        "compression": compression, "width": width, "height": height,
        "ymin": ymin, "channels": channels, "extra": extra,
    }


def _unfilter_zip(raw: bytes) -> bytes:
    # inverse of OpenEXR's ZIP predictor + byte interleave
    d = np.frombuffer(raw, dtype=np.uint8).astype(np.int64) - 128
    if d.size:
        d[0] += 128
    t = (np.cumsum(d) & 0xFF).astype(np.uint8)
    half = (t.size + 1) // 2
    out = np.empty_like(t)
    out[0::2] = t[:half]
    out[1::2] = t[half:]
    return out.tobytes()


def read_exr_header(path) -> dict:
    """Parse and validate only the header of ``path``."""
    return _parse_header(_Reader(Path(path).read_bytes()))


def read_exr(path, nits_per_unit: float = DEFAULT_NITS_PER_UNIT) -> RadianceFrame:
    frame, _ = read_exr_with_attributes(path, nits_per_unit)
    return frame


def read_exr_pixels(path) -> tuple[np.ndarray, dict]:
    """Decode ``path`` into a float32 ``(h, w, 3)`` array plus extra string attributes.

    Unlike :func:`read_exr` no radiance invariants are applied, so model-range
    frames with negative components can be read back.
    """
    buf = Path(path).read_bytes()
    r = _Reader(buf)
    hdr = _parse_header(r)
    w, h, channels = hdr["width"], hdr["height"], hdr["channels"]
    per_chunk = _LINES_PER_CHUNK[hdr["compression"]]
    n_chunks = -(-h // per_chunk)
    offsets = np.frombuffer(r.take(8 * n_chunks, "scanline offset table"), dtype="<u8")
    table_end = r.pos

    row_bytes = sum(_PIXEL_DTYPES[p].itemsize for _, p in channels) * w
    planes = {name: np.empty((h, w), dtype=np.float32) for name, _ in channels}
    seen = np.zeros(n_chunks, dtype=bool)
    for off in offsets:
        off = int(off)
        if off < table_end or off + 8 > len(buf):
            raise FormatError(f"scanline offset {off} out of bounds")
        y, size = struct.unpack_from("<ii", buf, off)
        rel = y - hdr["ymin"]
        if rel < 0 or rel >= h or rel % per_chunk:
            raise FormatError(f"chunk has invalid y coordinate {y}")
        idx = rel // per_chunk
        if seen[idx]:
            raise FormatError(f"duplicate chunk for y={y}")
        seen[idx] = True
        lines = min(per_chunk, h - rel)
        expected = lines * row_bytes
        if size < 0 or off + 8 + size > len(buf):
            raise FormatError(f"truncated file: chunk y={y} needs {size} bytes")
        data = buf[off + 8:off + 8 + size]
        if hdr["compression"] != NO_COMPRESSION and size < expected:
            try:
                data = zlib.decompress(data)
            except zlib.error as exc:
                raise FormatError(f"corrupt ZIP data in chunk y={y}: {exc}") from None
            if len(data) != expected:
                raise FormatError(f"chunk y={y} inflates to {len(data)} bytes, expected {expected}")
            data = _unfilter_zip(data)
        elif size != expected:
            raise FormatError(f"chunk y={y} has {size} bytes, expected {expected}")
        pos = 0
        for line in range(lines):
            for name, ptype in channels:
                dt = _PIXEL_DTYPES[ptype]
                n = dt.itemsize * w
                planes[name][rel + line] = np.frombuffer(data, dtype=dt, count=w, offset=pos)
                pos += n
    if not seen.all():
        raise FormatError("missing scanline chunks")

    pixels = np.stack([planes["R"], planes["G"], planes["B"]], axis=-1)
    extra = {}
    for key, (tname, value) in hdr["extra"].items():
        if tname == "string":
            extra[key] = value.decode("utf-8", "replace")
    return pixels, extra


def read_exr_with_attributes(path, nits_per_unit: float = DEFAULT_NITS_PER_UNIT):
    pixels, extra = read_exr_pixels(path)
    if not np.all(np.isfinite(pixels)):
        raise FormatError("non-finite pixel values")
    if np.any(pixels < 0):
        raise FormatError("negative radiance values")
    return RadianceFrame(pixels, nits_per_unit=nits_per_unit), extra


def _attr(name: str, atype: str, value: bytes) -> bytes:
    return name.encode() + b"\0" + atype.encode() + b"\0" + struct.pack("<i", len(value)) + value


def write_exr(path, frame, precision: str = "half", clamp_half: bool = False,
              attributes: dict | None = None) -> None:
    """Write an uncompressed scanline EXR.

    ``frame`` may be any frame object with float pixels or a raw
    ``(h, w, 3)`` array. ``attributes`` adds extra string attributes.
    Values outside the half range raise ``ValueError`` unless
    ``clamp_half`` is set.
    """
    px = np.asarray(getattr(frame, "pixels", frame), dtype=np.float32)
    if px.ndim != 3 or px.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) pixels, got {px.shape}")
    h, w = px.shape[:2]
    if precision == "half":
        ptype = HALF
        if not np.all(np.isfinite(px)):
            raise ValueError("non-finite pixel values")
        over = np.abs(px) >= _HALF_ROUND_LIMIT
        if over.any():
            if not clamp_half:
                raise ValueError(f"value exceeds half range: {float(np.abs(px).max())}")
            px = np.clip(px, -65504.0, 65504.0)
        data = px.astype("<f2")
    elif precision == "float":
        ptype = FLOAT
        data = px.astype("<f4")
    else:
        raise ValueError(f"precision must be 'half' or 'float', not {precision!r}")

    chlist = b"".join(n.encode() + b"\0" + struct.pack("<iBBBBii", ptype, 0, 0, 0, 0, 1, 1) for n in "BGR") + b"\0"
    box = struct.pack("<iiii", 0, 0, w - 1, h - 1)
    attrs = [
        ("channels", "chlist", chlist),
        ("compression", "compression", bytes([NO_COMPRESSION])),
        ("dataWindow", "box2i", box),
        ("displayWindow", "box2i", box),
        ("lineOrder", "lineOrder", bytes([0])),
        ("pixelAspectRatio", "float", struct.pack("<f", 1.0)),
        ("screenWindowCenter", "v2f", struct.pack("<ff", 0.0, 0.0)),
        ("screenWindowWidth", "float", struct.pack("<f", 1.0)),
    ]
    for key, val in (attributes or {}).items():
        if key in _ATTR_TYPES or not key or len(key) > 31:
            raise ValueError(f"invalid extra attribute name {key!r}")
        attrs.append((key, "string", str(val).encode("utf-8")))
    attrs.sort(key=lambda a: a[0])

    header = MAGIC + struct.pack("<I", VERSION) + b"".join(_attr(*a) for a in attrs) + b"\0"
    # channel-planar scanlines, channel-list order B, G, R
    rows = np.ascontiguousarray(data[:, :, ::-1].transpose(0, 2, 1))
    row_bytes = rows[0].nbytes
    table_start = len(header)
    first = table_start + 8 * h
    offsets = first + np.arange(h, dtype=np.uint64) * (8 + row_bytes)
    out = bytearray(header)
    out += offsets.astype("<u8").tobytes()
    for y in range(h):
        out += struct.pack("<ii", y, row_bytes)
        out += rows[y].tobytes()
    Path(path).write_bytes(bytes(out))
