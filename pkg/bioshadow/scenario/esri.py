"""ESRI ASCII grid reading and writing.

Six header lines (``ncols``, ``nrows``, ``xllcorner``, ``yllcorner``,
``cellsize``, ``NODATA_value``) followed by ``nrows`` lines of ``ncols``
whitespace-separated values, northern row first.
"""
from pathlib import Path
from typing import Any
from typing import Union

import numpy as np
from pydantic import BaseModel

from bioshadow.exceptions import ScenarioParseError
from bioshadow.types import ValueRaster


__all__ = ["AsciiGrid", "read_ascii_grid", "write_ascii_grid"]


HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")
HEADER_ALIASES = {"xllcenter": "xllcorner", "yllcenter": "yllcorner"}
DEFAULT_NODATA = -9999.0


class AsciiGrid(BaseModel):
    ncols: int
    nrows: int
    xllcorner: float = 0.0
    yllcorner: float = 0.0
    cellsize: float = 1.0
    nodata_value: float = DEFAULT_NODATA
    data: ValueRaster

    class Config:
        allow_mutation = False

    @property
    def shape(self):
        return self.nrows, self.ncols


def _parse_header(lines, file: str):
    header = {}
    n_header_lines = 0
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts:
            continue
        key = parts[0].lower()
        key = HEADER_ALIASES.get(key, key)
        if key not in HEADER_KEYS:
            break
        if len(parts) != 2:
            raise ScenarioParseError(f"Malformed header line {line.strip()!r}", file=file, line=lineno)
        try:
            header[key] = int(parts[1]) if key in ("ncols", "nrows") else float(parts[1])
        except ValueError:
            raise ScenarioParseError(
                f"Header value for {parts[0]} is not a number: {parts[1]!r}", file=file, line=lineno
            )
        n_header_lines = lineno
    for key in ("ncols", "nrows"):
        if key not in header:
            raise ScenarioParseError(f"Missing {key} header", file=file, line=n_header_lines + 1)
        if header[key] < 1:
            raise ScenarioParseError(f"{key} must be positive, got {header[key]}", file=file)
    return header, n_header_lines


def read_ascii_grid(path: Union[str, Path], display_name: str = None) -> AsciiGrid:
    path = Path(path)
    file = display_name or str(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioParseError("Raster file not found", file=file)
    except (OSError, UnicodeDecodeError) as e:
        raise ScenarioParseError(f"Cannot read raster: {e}", file=file)

    lines = text.splitlines()
    header, n_header_lines = _parse_header(lines, file)
    nrows, ncols = header["nrows"], header["ncols"]

    rows = []
    for lineno, line in enumerate(lines[n_header_lines:], start=n_header_lines + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != ncols:
            raise ScenarioParseError(f"Expected {ncols} values, found {len(parts)}", file=file, line=lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError as e:
            raise ScenarioParseError(f"Non-numeric raster value: {e}", file=file, line=lineno)
    if len(rows) != nrows:
        raise ScenarioParseError(f"Header declares nrows={nrows} but {len(rows)} data rows were found", file=file)

    return AsciiGrid(
        ncols=ncols,
        nrows=nrows,
        xllcorner=header.get("xllcorner", 0.0),
        yllcorner=header.get("yllcorner", 0.0),
        cellsize=header.get("cellsize", 1.0),
        nodata_value=header.get("nodata_value", DEFAULT_NODATA),
        data=np.array(rows, dtype=np.float64).reshape(nrows, ncols),
    )


def _format_value(v: Any, integer: bool) -> str:
    if integer:
        return str(int(v))
    return repr(float(v))


def write_ascii_grid(
        path: Union[str, Path],
        data: np.ndarray,
        *,
        cellsize: float = 1.0,
        nodata: float = DEFAULT_NODATA,
        xllcorner: float = 0.0,
        yllcorner: float = 0.0,
) -> Path:
    path = Path(path)
    data = np.asarray(data)
    integer = np.issubdtype(data.dtype, np.integer)
    nrows, ncols = data.shape
    lines = [
        f"ncols {ncols}",
        f"nrows {nrows}",
        f"xllcorner {float(xllcorner)!r}",
        f"yllcorner {float(yllcorner)!r}",
        f"cellsize {float(cellsize)!r}",
        f"NODATA_value {_format_value(nodata, integer and float(nodata).is_integer())}",
    ]
    for row in data:
        lines.append(" ".join(_format_value(v, integer) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    return path
