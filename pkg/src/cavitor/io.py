"""File formats: fields, recordings, 16-bit PGM images, INI configs and phantom files, CSV, provenance.

Binary files start with ``key: value`` text lines closed by a line ``end``, followed by
little-endian float64 blocks in row-major order.
"""
from __future__ import annotations

import configparser
import csv
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, basis
from .cutoff import parse_cutoff
from .grids import SIDES, CartesianGrid, PolarGrid
from .phantom import Bump, PhantomSpec, eigenmode, three_bumps
from .recording import BoundaryRecording

_F64 = np.dtype("<f8")


class FormatError(ValueError):
    pass


# ---------------------------------------------------------------- binary helpers

def _write_blocks(path, header: dict, blocks: list[np.ndarray]) -> None:
    with open(path, "wb") as fh:
        for k, v in header.items():
            fh.write(f"{k}: {v}\n".encode())
        fh.write(b"end\n")
        for b in blocks:
            fh.write(np.ascontiguousarray(b, dtype=_F64).tobytes())


def _read_blocks(path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    header = {}
    pos = 0
    while True:
        nl = raw.find(b"\n", pos)
        if nl < 0:
            raise FormatError(f"{path}: header not terminated")
        line = raw[pos:nl].decode()
        pos = nl + 1
        if line == "end":
            break
        k, sep, v = line.partition(": ")
        if not sep:
            raise FormatError(f"{path}: bad header line {line!r}")
        header[k] = v
    return header, raw[pos:]


def _take(buf: bytes, offset: int, shape: tuple[int, ...]) -> tuple[np.ndarray, int]:
    n = int(np.prod(shape))
    end = offset + 8 * n
    if end > len(buf):
        raise FormatError("data block shorter than the header says")
    return np.frombuffer(buf[offset:end], dtype=_F64).reshape(shape).copy(), end


# ---------------------------------------------------------------- fields

def write_field(path, data: np.ndarray, grid, **meta) -> None:
    data = np.asarray(data, dtype=float)
    if data.shape != grid.shape:
        raise FormatError(f"field shape {data.shape} does not match grid {grid.shape}")
    header = {"format": "cavitor-field 1", "kind": grid.kind, "dims": f"{data.shape[0]} {data.shape[1]}"}
    blocks = [data]
    if isinstance(grid, CartesianGrid):
        header["extents"] = f"{grid.A!r} {grid.B!r}"
        variable = bool(np.ptp(grid.c) > 0)
        header["variable_c"] = int(variable)
        if variable:
            blocks.append(grid.c)
    else:
        header["extents"] = "1.0 6.283185307179586"
    for k, v in meta.items():
        header[k] = v
    _write_blocks(path, header, blocks)


def read_field(path):
    """Returns ``(data, grid)``."""
    header, buf = _read_blocks(path)
    if header.get("format") != "cavitor-field 1":
        raise FormatError(f"{path}: not a field file")
    n0, n1 = (int(v) for v in header["dims"].split())
    data, off = _take(buf, 0, (n0, n1))
    if header["kind"] == "polar":
        grid = PolarGrid(n0 - 1, n1)
    else:
        A, B = (float(v) for v in header["extents"].split())
        c = 1.0
        if int(header.get("variable_c", 0)):
            c, off = _take(buf, off, (n0, n1))
        grid = CartesianGrid(n0 - 1, n1 - 1, A, B, c)
    return data, grid


# ---------------------------------------------------------------- recordings

def write_recording(path, rec: BoundaryRecording) -> None:
    header = {
        "format": "cavitor-recording 1",
        "geometry": rec.geometry.name,
        "n_detectors": rec.n_detectors,
        "dt": repr(rec.dt),
        "T": repr(rec.duration),
        "n_samples": rec.n_samples,
        "sides": ",".join(rec.sides) if rec.sides else "all",
        "meta": json.dumps(rec.meta, sort_keys=True, default=str),
    }
    _write_blocks(path, header, [rec.detectors, rec.samples])


def read_recording(path) -> BoundaryRecording:
    header, buf = _read_blocks(path)
    if header.get("format") != "cavitor-recording 1":
        raise FormatError(f"{path}: not a recording file")
    nd, ns = int(header["n_detectors"]), int(header["n_samples"])
    det, off = _take(buf, 0, (nd, 2))
    samples, _ = _take(buf, off, (nd, ns))
    sides = None if header["sides"] == "all" else tuple(header["sides"].split(","))
    return BoundaryRecording(basis.parse_geometry(header["geometry"]), det, float(header["dt"]), samples,
                             sides, json.loads(header.get("meta", "{}")))


def recording_to_csv(path, rec: BoundaryRecording) -> None:
    """Wide CSV: a time column, then one column per detector."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"d{i}" for i in range(rec.n_detectors)])
        for j, t in enumerate(rec.times):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in rec.samples[:, j]])


def recording_from_csv(path, geometry, detectors, sides=None) -> BoundaryRecording:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    arr = np.array([[float(v) for v in r] for r in rows])
    dt = float(arr[1, 0] - arr[0, 0]) if len(arr) > 1 else 1.0
    return BoundaryRecording(geometry, detectors, dt, arr[:, 1:].T, sides)


# ---------------------------------------------------------------- images

def write_pgm(path, data: np.ndarray) -> tuple[float, float]:
    """16-bit binary PGM with linear min-max scaling; the scale goes in a comment line."""
    a = np.asarray(data, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    span = hi - lo if hi > lo else 1.0
    img = np.rint((a - lo) / span * 65535).astype(">u2")
    img = img.T[::-1] if a.ndim == 2 else img  # x to the right, y up
    with open(path, "wb") as fh:
        fh.write(f"P5\n# min={lo!r} max={hi!r}\n{img.shape[1]} {img.shape[0]}\n65535\n".encode())
        fh.write(img.tobytes())
    return lo, hi


def read_pgm(path) -> tuple[np.ndarray, float, float]:
    """Inverse of :func:`write_pgm` up to quantisation; returns ``(field, min, max)``."""
    raw = Path(path).read_bytes()
    lines, pos = [], 0
    while len(lines) < 4:
        nl = raw.find(b"\n", pos)
        lines.append(raw[pos:nl].decode())
        pos = nl + 1
    if lines[0] != "P5" or not lines[1].startswith("# min="):
        raise FormatError(f"{path}: not a cavitor PGM")
    parts = dict(p.split("=") for p in lines[1][2:].split())
    lo, hi = float(parts["min"]), float(parts["max"])
    w, h = (int(v) for v in lines[2].split())
    img = np.frombuffer(raw[pos:pos + 2 * w * h], dtype=">u2").reshape(h, w)
    span = hi - lo if hi > lo else 1.0
    return (img[::-1].T.astype(float) / 65535 * span + lo), lo, hi


# ---------------------------------------------------------------- CSV

def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- phantom files

def _floats(text: str) -> list[float]:
    return [basis.eval_number(p) for p in text.replace(";", ",").split(",") if p.strip()]


def read_phantom(path) -> PhantomSpec:
    """INI phantom description.

    ``[phantom]`` holds ``kind`` (``bumps``, ``eigenmode``, ``default``, ``file``) and ``geometry``;
    bumps are sections ``[bump.N]`` with ``center``, ``radius``, ``amplitude``, ``smoothness``.
    """
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FormatError(f"cannot read phantom file {path}")
    return phantom_from_config(cp, Path(path).parent)


def phantom_from_config(cp: configparser.ConfigParser, base: Path | None = None) -> PhantomSpec:
    sec = cp["phantom"]
    geometry = basis.parse_geometry(sec.get("geometry", "square"))
    kind = sec.get("kind", "default")
    if kind == "default":
        return three_bumps(geometry)
    if kind == "eigenmode":
        n, l = (int(v) for v in sec["index"].split(","))
        return eigenmode(geometry, n, l)
    if kind == "file":
        p = Path(sec["path"])
        if base is not None and not p.is_absolute():
            p = base / p
        return PhantomSpec("file", geometry, path=str(p))
    if kind == "bumps":
        bumps = []
        for name in sorted((s for s in cp.sections() if s.startswith("bump.")), key=lambda s: int(s[5:])):
            b = cp[name]
            cx, cy = _floats(b["center"])
            bumps.append(Bump((cx, cy), basis.eval_number(b["radius"]), basis.eval_number(b.get("amplitude", "1")),
                              int(b.get("smoothness", "3"))))
        return PhantomSpec("bumps", geometry, tuple(bumps), label=sec.get("label", ""))
    raise FormatError(f"unknown phantom kind {kind!r}")


def write_phantom(path, spec: PhantomSpec) -> None:
    cp = configparser.ConfigParser()
    geo = spec.geometry.name
    if isinstance(spec.geometry, basis.Rectangle) and geo != "square":
        geo = f"rectangle:{spec.geometry.A!r},{spec.geometry.B!r}"
    cp["phantom"] = {"kind": spec.kind, "geometry": geo, "label": spec.label}
    if spec.kind == "eigenmode":
        cp["phantom"]["index"] = f"{spec.index[0]},{spec.index[1]}"
    elif spec.kind == "file":
        cp["phantom"]["path"] = str(spec.path)
    else:
        for i, b in enumerate(spec.bumps):
            cp[f"bump.{i}"] = {"center": f"{b.center[0]!r},{b.center[1]!r}", "radius": repr(b.radius),
                               "amplitude": repr(b.amplitude), "smoothness": str(b.smoothness)}
    with open(path, "w") as fh:
        cp.write(fh)


# ---------------------------------------------------------------- run configuration

@dataclass
class RunConfig:
    geometry: str = "disk"
    backend: str = "auto"
    resolution: str = "128,256"
    dt: str = "cfl"
    cutoff: str = "bump:0.5"
    T: list[float] = field(default_factory=lambda: [10.6])
    detectors: str = "full"
    n_detectors: int = 0
    phantom: str = "default"
    data_source: str = "spectral"
    out: str = "out"
    seed: int = 0
    noise: float = 0.0

    def __post_init__(self):
        self.T = [float(t) for t in self.T]
        if not self.T or sorted(self.T) != self.T:
            raise FormatError(f"T list must be non-empty and ascending, got {self.T}")
        ph = self.phantom
        if not (ph == "default" or ph.startswith("eigen:")):
            path = ph[6:] if ph.startswith("field:") else ph
            if not Path(path).exists():
                raise FormatError(f"phantom file {path} does not exist")
        basis.parse_geometry(self.geometry)
        parse_cutoff(self.cutoff)
        if self.data_source not in ("fdtd", "spectral"):
            raise FormatError(f"unknown data source {self.data_source!r}")
        if self.detectors not in ("full",) and not set(self.detectors.split(",")) <= set(SIDES):
            raise FormatError(f"unknown detector layout {self.detectors!r}")
        if self.geometry == "disk" and self.detectors != "full":
            raise FormatError("the disk only supports full-boundary data")

    @property
    def sides(self) -> tuple[str, ...] | None:
        return None if self.detectors == "full" else tuple(self.detectors.split(","))

    def grid_resolution(self) -> tuple[int, int]:
        a, _, b = self.resolution.partition(",")
        return (int(a), int(b or a))

    @classmethod
    def from_ini(cls, path) -> "RunConfig":
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise FormatError(f"cannot read config {path}")
        return cls.from_parser(cp)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "RunConfig":
        kw = {}
        run = cp["run"] if cp.has_section("run") else {}
        for k in ("geometry", "backend", "resolution", "dt", "detectors", "phantom", "data_source", "out"):
            if k in run:
                kw[k] = run[k]
        if "T" in run:
            kw["T"] = _floats(run["T"])
        for k, conv in (("seed", int), ("noise", float), ("n_detectors", int)):
            if k in run:
                kw[k] = conv(run[k])
        if cp.has_section("cutoff"):
            c = cp["cutoff"]
            kw["cutoff"] = f"{c.get('class', 'bump')}:{c.get('flat_end', '0.5')}"
        return cls(**kw)

    def to_ini(self, path) -> None:
        cp = configparser.ConfigParser()
        d = asdict(self)
        kind, _, t0 = self.cutoff.partition(":")
        d.pop("cutoff")
        d["T"] = ",".join(repr(t) for t in self.T)
        cp["run"] = {k: str(v) for k, v in d.items()}
        cp["cutoff"] = {"class": kind, "flat_end": t0 or "0.5"}
        with open(path, "w") as fh:
            cp.write(fh)


def write_provenance(path, config: dict, timings: dict | None = None, **extra) -> None:
    doc = {
        "package": "cavitor", "version": __version__,
        "python": platform.python_version(), "numpy": np.__version__,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "config": config, "timings": timings or {}, **extra,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable))


def read_provenance(path) -> dict:
    return json.loads(Path(path).read_text())


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return str(o)
