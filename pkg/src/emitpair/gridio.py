"""CSV and PGM export of raster maps.

CSV layout: '#'-prefixed header lines (grid geometry, channel, one canonical
JSON metadata line), then one ``x,y,value`` row per pixel in row-major order
(y outer, x inner), 17 significant digits, LF line endings.  Missing pixels
(NaN) leave the value field empty.  17 digits round-trip IEEE doubles
exactly, so import_csv(export_csv(g)) reproduces the raster bit-for-bit.

PGM exports are binary P5 with 16-bit big-endian samples, mapping
[vmin, vmax] (default [0, 1]) linearly onto [0, 65535]; missing pixels write
0 and a sidecar ``<path>.mask.pgm`` holds 65535 for valid pixels, 0 for
missing ones.  No timestamps are written anywhere: identical grids give
identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .scan import MapChannel, MapGrid

__all__ = ["export_csv", "import_csv", "export_pgm"]

_FMT = "{:.17g}"


def export_csv(grid: MapGrid, path) -> Path:
    """Write a raster with its provenance header; returns the path written."""
    path = Path(path)
    xs, ys = grid.pixel_centers_lambda()
    lines = [
        "# emitpair raster v1",
        f"# channel: {grid.channel.value}",
        f"# origin: {_FMT.format(grid.origin[0])} {_FMT.format(grid.origin[1])}",
        f"# extent: {_FMT.format(grid.extent[0])} {_FMT.format(grid.extent[1])}",
        f"# resolution: {grid.nx} {grid.ny}",
        "# metadata: " + json.dumps(grid.metadata, sort_keys=True, default=_json_default),
    ]
    vals = grid.values
    for iy in range(grid.ny):
        y = _FMT.format(ys[iy])
        for ix in range(grid.nx):
            v = vals[iy, ix]
            sval = "" if not np.isfinite(v) else _FMT.format(v)
            lines.append(f"{_FMT.format(xs[ix])},{y},{sval}")
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def import_csv(path) -> MapGrid:
    """Rebuild a MapGrid from an exported CSV file."""
    path = Path(path)
    channel = None
    origin = extent = None
    nx = ny = None
    metadata: dict = {}
    values: list[float] = []
    for line in path.read_text().splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("channel:"):
                channel = MapChannel(body.split(":", 1)[1].strip())
            elif body.startswith("origin:"):
                origin = tuple(float(t) for t in body.split(":", 1)[1].split())
            elif body.startswith("extent:"):
                extent = tuple(float(t) for t in body.split(":", 1)[1].split())
            elif body.startswith("resolution:"):
                nx, ny = (int(t) for t in body.split(":", 1)[1].split())
            elif body.startswith("metadata:"):
                metadata = json.loads(body.split(":", 1)[1])
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ConfigError(f"malformed raster row: {line!r}")
        values.append(float(parts[2]) if parts[2] else np.nan)
    if None in (channel, origin, extent, nx, ny):
        raise ConfigError(f"{path}: missing raster header lines")
    if len(values) != nx * ny:
        raise ConfigError(f"{path}: expected {nx * ny} rows, found {len(values)}")
    return MapGrid(origin=origin, extent=extent, nx=nx, ny=ny,
                   values=np.array(values).reshape(ny, nx),
                   channel=channel, metadata=metadata)


def export_pgm(grid: MapGrid, path, vmin: float = 0.0, vmax: float = 1.0) -> Path:
    """Write a 16-bit P5 rendering plus a validity-mask sidecar.

    The default [0, 1] range suits correlation rasters; pass explicit
    vmin/vmax for LDOS/CDOS channels.
    """
    if not vmax > vmin:
        raise ConfigError("vmax must exceed vmin")
    path = Path(path)
    v = grid.values
    finite = np.isfinite(v)
    scaled = np.zeros_like(v)
    scaled[finite] = np.clip((v[finite] - vmin) / (vmax - vmin), 0.0, 1.0)
    pixels = np.round(scaled * 65535.0).astype(">u2")
    pixels[~finite] = 0
    _write_pgm(path, grid, pixels)
    mask = np.where(finite, 65535, 0).astype(">u2")
    _write_pgm(Path(str(path) + ".mask.pgm"), grid, mask)
    return path


def _write_pgm(path: Path, grid: MapGrid, pixels: np.ndarray) -> None:
    header = (f"P5\n# emitpair {grid.channel.value} raster\n"
              f"{grid.nx} {grid.ny}\n65535\n").encode("ascii")
    path.write_bytes(header + pixels.tobytes())
