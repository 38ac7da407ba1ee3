"""Frame sequences stored as directories of numbered image files."""

from __future__ import annotations

import re
from pathlib import Path

from ..core import Clip, RadianceFrame, SdrFrame
from .errors import FormatError
from .exr import read_exr, write_exr
from .pfm import read_pfm
from .sdr import read_sdr, write_sdr

_NUMBERED = re.compile(r"(\d+)$")
RADIANCE_SUFFIXES = (".exr", ".pfm")
SDR_SUFFIXES = (".png",)


def frame_name(index: int, suffix: str, stem: str = "frame") -> str:
    return f"{stem}_{index:06d}{suffix}"


def list_frames(directory, suffixes) -> list[Path]:
    """Image files in ``directory`` ordered by their trailing frame number."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    found = []
    for p in directory.iterdir():
        if p.is_file() and p.suffix.lower() in suffixes:
            m = _NUMBERED.search(p.stem)
            found.append((int(m.group(1)) if m else -1, p.name, p))
    found.sort(key=lambda item: (item[0], item[1]))
    return [p for _, _, p in found]


def read_radiance(path, nits_per_unit: float = 100.0) -> RadianceFrame:
    path = Path(path)
    if path.suffix.lower() == ".exr":
        return read_exr(path, nits_per_unit)
    if path.suffix.lower() == ".pfm":
        return read_pfm(path, nits_per_unit)
    raise FormatError(f"{path}: unsupported radiance format (use .exr or .pfm)")


def read_radiance_clip(source, nits_per_unit: float = 100.0, limit: int | None = None, fps=24) -> Clip:
    """Load a clip from a numbered-frame directory or a single image file."""
    source = Path(source)
    if source.is_file():
        return Clip((read_radiance(source, nits_per_unit),), fps=fps)
    paths = list_frames(source, RADIANCE_SUFFIXES)
    if limit is not None:
        paths = paths[:limit]
    if not paths:
        raise FileNotFoundError(f"no .exr/.pfm frames in {source}")
    return Clip(tuple(read_radiance(p, nits_per_unit) for p in paths), fps=fps)


def read_sdr_frames(source, limit: int | None = None) -> list[SdrFrame]:
    source = Path(source)
    if source.is_file():
        return [read_sdr(source)]
    paths = list_frames(source, SDR_SUFFIXES)
    if limit is not None:
        paths = paths[:limit]
    if not paths:
        raise FileNotFoundError(f"no .png frames in {source}")
    return [read_sdr(p) for p in paths]


def write_radiance_clip(directory, clip: Clip, precision: str = "float") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for i, frame in enumerate(clip):
        p = directory / frame_name(i, ".exr")
        write_exr(p, frame, precision=precision)
        out.append(p)
    return out


def write_sdr_clip(directory, frames) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for i, frame in enumerate(frames):
        p = directory / frame_name(i, ".png")
        write_sdr(p, frame)
        out.append(p)
    return out
