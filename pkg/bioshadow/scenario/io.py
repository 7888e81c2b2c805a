"""Scenario packages on disk.

::

    manifest.json
    rasters/current.asc  rasters/potential.asc  rasters/elevation.asc
    rasters/<cost layer>.asc
    species.csv          species_id,suitable_classes,elev_min,elev_max,range_file
    ranges/<species>.csv cell_id
    technologies.csv     technology_id,from_classes,to_class,cost_layer
"""
import json
import logging
import re
from pathlib import Path
from typing import Dict
from typing import List
from typing import Union

import numpy as np
import pandas as pd
from pydantic import BaseModel
from pydantic import Field
from pydantic import PositiveInt
from pydantic import ValidationError
from typing_extensions import Literal

from bioshadow.exceptions import ScenarioParseError
from bioshadow.exceptions import ScenarioValidationError
from bioshadow.sar import ZConfig
from bioshadow.scenario.costs import DEFAULT_DISCOUNT_RATE
from bioshadow.scenario.costs import rent_raster_to_asset
from bioshadow.scenario.esri import read_ascii_grid
from bioshadow.scenario.esri import write_ascii_grid
from bioshadow.scenario.model import GridSpec
from bioshadow.scenario.model import Scenario
from bioshadow.scenario.model import SpeciesSpec
from bioshadow.scenario.model import TechnologySpec
from bioshadow.scenario.validation import validate


__all__ = ["Manifest", "load_scenario", "save_scenario", "MANIFEST_NAME"]


log = logging.getLogger(__name__)


MANIFEST_NAME = "manifest.json"
SPECIES_COLUMNS = ["species_id", "suitable_classes", "elev_min", "elev_max", "range_file"]
TECHNOLOGY_COLUMNS = ["technology_id", "from_classes", "to_class", "cost_layer"]


class ManifestZ(BaseModel):
    central: float = 0.25
    low: float = 0.15
    high: float = 0.35

    def to_config(self) -> ZConfig:
        return ZConfig(z_central=self.central, z_low=self.low, z_high=self.high)


class CostSettings(BaseModel):
    kind: Literal["asset", "rent"] = "asset"
    discount_rate: float = Field(DEFAULT_DISCOUNT_RATE, gt=0)


class RasterRefs(BaseModel):
    current: str = "rasters/current.asc"
    potential: str = "rasters/potential.asc"
    elevation: str = "rasters/elevation.asc"


class Manifest(BaseModel):
    grid: GridSpec
    aggregation_factor: PositiveInt = 1
    z: ManifestZ = ManifestZ()
    classes: Dict[int, str]
    costs: CostSettings = CostSettings()
    rasters: RasterRefs = RasterRefs()
    species: str = "species.csv"
    technologies: str = "technologies.csv"


def _format_validation_error(e: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
    )


def _read_manifest(root: Path) -> Manifest:
    path = root / MANIFEST_NAME
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioParseError("Manifest not found", file=MANIFEST_NAME)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"Invalid JSON: {e.msg}", file=MANIFEST_NAME, line=e.lineno)
    try:
        return Manifest.parse_obj(raw)
    except ValidationError as e:
        raise ScenarioParseError(_format_validation_error(e), file=MANIFEST_NAME)


def _read_raster(root: Path, ref: str, grid: GridSpec, integer: bool = False) -> np.ndarray:
    asc = read_ascii_grid(root / ref, display_name=ref)
    if asc.shape != grid.shape:
        raise ScenarioParseError(
            f"Dimension mismatch: raster is {asc.nrows}x{asc.ncols} (nrows x ncols),"
            f" manifest grid is {grid.rows}x{grid.cols}",
            file=ref,
        )
    data = np.array(asc.data)
    if asc.nodata_value != grid.nodata:
        data[data == asc.nodata_value] = grid.nodata
    if integer:
        if not np.all(np.mod(data, 1) == 0):
            raise ScenarioParseError("Class raster contains non-integer values", file=ref)
        return data.astype(np.int64)
    return data


def _read_table(root: Path, ref: str, columns: List[str]) -> pd.DataFrame:
    try:
        df = pd.read_csv(root / ref, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise ScenarioParseError("File not found", file=ref)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ScenarioParseError(f"Malformed CSV: {e}", file=ref)
    df.columns = [c.strip() for c in df.columns]
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ScenarioParseError(f"Missing column(s) {missing}", file=ref, line=1)
    return df


def _read_range(root: Path, ref: str, grid: GridSpec) -> frozenset:
    if not ref:
        return frozenset()
    if ref.lower().endswith(".asc"):
        mask = _read_raster(root, ref, grid)
        return frozenset(np.flatnonzero((mask != grid.nodata) & (mask != 0)).tolist())
    try:
        df = pd.read_csv(root / ref, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise ScenarioParseError("Range file not found", file=ref)
    except pd.errors.EmptyDataError:
        return frozenset()
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ScenarioParseError(f"Malformed CSV: {e}", file=ref)
    column = "cell_id" if "cell_id" in df.columns else df.columns[0]
    ids = []
    for i, value in enumerate(df[column], start=2):
        try:
            ids.append(int(value))
        except ValueError:
            raise ScenarioParseError(f"Cell id {value!r} is not an integer", file=ref, line=i)
    return frozenset(ids)


def _read_species(root: Path, ref: str, grid: GridSpec, sources: Dict[str, str]) -> List[SpeciesSpec]:
    df = _read_table(root, ref, SPECIES_COLUMNS)
    species = []
    for i, row in enumerate(df.itertuples(index=False), start=2):
        row = row._asdict()
        range_ref = row["range_file"].strip()
        try:
            spec = SpeciesSpec(
                species_id=row["species_id"].strip(),
                suitable_classes=row["suitable_classes"],
                elevation_min=row["elev_min"],
                elevation_max=row["elev_max"],
                range_mask=_read_range(root, range_ref, grid),
            )
        except ValidationError as e:
            raise ScenarioParseError(_format_validation_error(e), file=ref, line=i)
        if range_ref:
            sources[f"range:{spec.species_id}"] = range_ref
        species.append(spec)
    return species


def _cost_layer_name(value: str) -> str:
    return Path(value).stem if value.lower().endswith(".asc") else value


def _cost_layer_path(value: str) -> str:
    return value if value.lower().endswith(".asc") else f"rasters/{value}.asc"


def _read_technologies(root: Path, ref: str):
    df = _read_table(root, ref, TECHNOLOGY_COLUMNS)
    technologies = []
    layer_paths = {}
    for i, row in enumerate(df.itertuples(index=False), start=2):
        row = row._asdict()
        layer = row["cost_layer"].strip()
        try:
            tech = TechnologySpec(
                technology_id=row["technology_id"].strip(),
                from_classes=row["from_classes"],
                to_class=row["to_class"].strip(),
                cost_layer_ref=_cost_layer_name(layer),
            )
        except ValidationError as e:
            raise ScenarioParseError(_format_validation_error(e), file=ref, line=i)
        technologies.append(tech)
        layer_paths[tech.cost_layer_ref] = _cost_layer_path(layer)
    return technologies, layer_paths


def load_scenario(path: Union[str, Path], check: bool = True) -> Scenario:
    """Parse a scenario package.

    With ``check=True`` (the default) the scenario is validated and blocking
    problems raise :class:`ScenarioValidationError`.
    """
    root = Path(path)
    if not root.is_dir():
        raise ScenarioParseError("Scenario package directory not found", file=str(root))
    manifest = _read_manifest(root)
    grid = manifest.grid
    sources = {
        "current": manifest.rasters.current,
        "potential": manifest.rasters.potential,
        "elevation": manifest.rasters.elevation,
        "species": manifest.species,
        "technologies": manifest.technologies,
    }

    current = _read_raster(root, manifest.rasters.current, grid, integer=True)
    potential = _read_raster(root, manifest.rasters.potential, grid, integer=True)
    elevation = _read_raster(root, manifest.rasters.elevation, grid)
    species = _read_species(root, manifest.species, grid, sources)
    technologies, layer_paths = _read_technologies(root, manifest.technologies)

    cost_layers = {}
    for name, layer_ref in layer_paths.items():
        layer = _read_raster(root, layer_ref, grid)
        if manifest.costs.kind == "rent":
            layer = rent_raster_to_asset(layer, grid.nodata, manifest.costs.discount_rate)
        cost_layers[name] = layer
        sources[f"cost:{name}"] = layer_ref

    try:
        scenario = Scenario(
            grid=grid,
            classes=manifest.classes,
            current_classes=current,
            potential_classes=potential,
            elevation=elevation,
            cost_layers=cost_layers,
            species=species,
            technologies=technologies,
            aggregation_factor=manifest.aggregation_factor,
            z=manifest.z.to_config(),
            sources=sources,
        )
    except ValidationError as e:
        raise ScenarioParseError(_format_validation_error(e), file=MANIFEST_NAME)

    log.info(
        f"Loaded scenario {root}: {grid.rows}x{grid.cols} grid, {len(species)} species,"
        f" {len(technologies)} technologies, aggregation factor {manifest.aggregation_factor}"
    )

    if check:
        report = validate(scenario)
        if not report.ok:
            raise ScenarioValidationError(report)
        for issue in report.warnings:
            log.warning(str(issue))
    return scenario


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    grid = scenario.grid
    cellsize = float(np.sqrt(grid.cell_area))
    rasters = RasterRefs()

    write_ascii_grid(root / rasters.current, scenario.current_classes, cellsize=cellsize, nodata=grid.nodata)
    write_ascii_grid(root / rasters.potential, scenario.potential_classes, cellsize=cellsize, nodata=grid.nodata)
    write_ascii_grid(root / rasters.elevation, scenario.elevation, cellsize=cellsize, nodata=grid.nodata)
    for name in sorted(scenario.cost_layers):
        write_ascii_grid(
            root / _cost_layer_path(name), scenario.cost_layers[name], cellsize=cellsize, nodata=grid.nodata
        )

    species_rows = []
    (root / "ranges").mkdir(exist_ok=True)
    for i, species in enumerate(scenario.species):
        range_ref = f"ranges/{i:04d}_{_safe_name(species.species_id)}.csv"
        pd.DataFrame({"cell_id": sorted(species.range_mask)}, dtype=np.int64).to_csv(
            root / range_ref, index=False, lineterminator="\n"
        )
        species_rows.append({
            "species_id": species.species_id,
            "suitable_classes": species.suitable_classes.to_text(),
            "elev_min": repr(float(species.elevation_min)),
            "elev_max": repr(float(species.elevation_max)),
            "range_file": range_ref,
        })
    pd.DataFrame(species_rows, columns=SPECIES_COLUMNS).to_csv(
        root / "species.csv", index=False, lineterminator="\n"
    )

    tech_rows = [
        {
            "technology_id": tech.technology_id,
            "from_classes": tech.from_classes.to_text(),
            "to_class": str(tech.to_class),
            "cost_layer": tech.cost_layer_ref,
        }
        for tech in scenario.technologies
    ]
    pd.DataFrame(tech_rows, columns=TECHNOLOGY_COLUMNS).to_csv(
        root / "technologies.csv", index=False, lineterminator="\n"
    )

    manifest = Manifest(
        grid=grid,
        aggregation_factor=scenario.aggregation_factor,
        z=ManifestZ(central=scenario.z.z_central, low=scenario.z.z_low, high=scenario.z.z_high),
        classes=scenario.classes,
        costs=CostSettings(kind="asset"),
        rasters=rasters,
    )
    payload = json.loads(manifest.json(by_alias=True))
    payload["classes"] = {str(k): scenario.classes[k] for k in sorted(scenario.classes)}
    with open(root / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(payload, indent=2) + "\n")
    log.info(f"Saved scenario package to {root}")
    return root
