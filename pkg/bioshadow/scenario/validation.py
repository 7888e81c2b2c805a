import logging
from collections import Counter
from typing import List
from typing import Optional

import numpy as np
from pydantic import BaseModel
from typing_extensions import Literal

from bioshadow.scenario.habitat import SpeciesHabitat
from bioshadow.scenario.model import Scenario


__all__ = ["Issue", "ValidationReport", "validate"]


log = logging.getLogger(__name__)


class Issue(BaseModel):
    severity: Literal["error", "warning"]
    code: str
    message: str
    file: Optional[str] = None

    def __str__(self):
        where = f"{self.file}: " if self.file else ""
        return f"[{self.code}] {where}{self.message}"


class ValidationReport(BaseModel):
    errors: List[Issue] = []
    warnings: List[Issue] = []
    excluded_species: List[str] = []

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, code: str, message: str, file: Optional[str] = None):
        self.errors.append(Issue(severity="error", code=code, message=message, file=file))

    def warn(self, code: str, message: str, file: Optional[str] = None):
        self.warnings.append(Issue(severity="warning", code=code, message=message, file=file))

    def render(self) -> str:
        lines = [f"{len(self.errors)} error(s), {len(self.warnings)} warning(s)"]
        lines.extend(f"ERROR   {issue}" for issue in self.errors)
        lines.extend(f"WARNING {issue}" for issue in self.warnings)
        return "\n".join(lines)


def _check_shapes(scenario: Scenario, report: ValidationReport) -> bool:
    expected = scenario.grid.shape
    layers = [
        ("current", scenario.current_classes),
        ("potential", scenario.potential_classes),
        ("elevation", scenario.elevation),
    ]
    layers.extend((f"cost:{k}", v) for k, v in scenario.cost_layers.items())
    ok = True
    for name, arr in layers:
        if arr.shape != expected:
            report.error(
                "dimension-mismatch",
                f"Raster {name!r} has shape {arr.shape}, expected {expected}",
                file=scenario.sources.get(name),
            )
            ok = False
    return ok


def _check_class_raster(scenario: Scenario, name: str, arr: np.ndarray, report: ValidationReport):
    legend = set(scenario.classes)
    codes = set(np.unique(arr).tolist())
    nodata = scenario.nodata_class()
    if nodata is not None:
        codes.discard(nodata)
    unknown = sorted(codes - legend)
    if unknown:
        report.error(
            "unknown-class",
            f"Raster {name!r} contains class codes missing from the legend: {unknown}",
            file=scenario.sources.get(name),
        )


def _check_technologies(scenario: Scenario, report: ValidationReport):
    legend = set(scenario.classes)
    source = scenario.sources.get("technologies")
    for tech_id, count in Counter(t.technology_id for t in scenario.technologies).items():
        if count > 1:
            report.error("duplicate-technology", f"Technology {tech_id!r} is defined {count} times", file=source)
    if not scenario.technologies:
        report.warn("no-technologies", "Scenario defines no technologies", file=source)
    for tech in scenario.technologies:
        unknown = sorted(set(tech.from_classes) - legend)
        if not tech.restores_potential and tech.to_class not in legend:
            unknown.append(tech.to_class)
        if unknown:
            report.error(
                "unknown-class",
                f"Technology {tech.technology_id!r} references unknown class codes {unknown}",
                file=source,
            )
        if tech.cost_layer_ref not in scenario.cost_layers:
            report.error(
                "missing-cost-layer",
                f"Technology {tech.technology_id!r} references missing cost layer {tech.cost_layer_ref!r}",
                file=source,
            )


def _check_costs(scenario: Scenario, report: ValidationReport, shapes_ok: bool):
    nodata = scenario.grid.nodata
    for name, layer in scenario.cost_layers.items():
        file = scenario.sources.get(f"cost:{name}")
        data = layer[layer != nodata]
        if np.isnan(data).any():
            report.error("invalid-cost", f"Cost layer {name!r} contains NaN values", file=file)
        elif (data < 0).any():
            negatives = int((data < 0).sum())
            report.error("negative-cost", f"Cost layer {name!r} contains {negatives} negative value(s)", file=file)
    if not shapes_ok:
        return
    valid = scenario.valid_mask()
    for tech in scenario.technologies:
        if tech.cost_layer_ref not in scenario.cost_layers:
            continue
        cost = scenario.cost_layer(tech)
        post = tech.post_classes(scenario.current_classes, scenario.potential_classes)
        applicable = (
            valid
            & np.isin(scenario.current_classes, np.fromiter(tech.from_classes, dtype=np.int64))
            & (post != scenario.current_classes)
        )
        zero = int((applicable & (cost == 0)).sum())
        if zero:
            report.warn(
                "zero-cost",
                f"Technology {tech.technology_id!r} has {zero} applicable cell(s) with zero cost",
                file=scenario.sources.get(f"cost:{tech.cost_layer_ref}"),
            )


def _check_species(scenario: Scenario, report: ValidationReport):
    legend = set(scenario.classes)
    source = scenario.sources.get("species")
    reachable = set(np.unique(scenario.potential_classes).tolist())
    reachable.update(t.to_class for t in scenario.technologies if not t.restores_potential)
    for species_id, count in Counter(s.species_id for s in scenario.species).items():
        if count > 1:
            report.error("duplicate-species", f"Species {species_id!r} is defined {count} times", file=source)
    for species in scenario.species:
        unknown = sorted(set(species.suitable_classes) - legend)
        if unknown:
            report.error(
                "unknown-class",
                f"Species {species.species_id!r} references unknown class codes {unknown}",
                file=source,
            )
        out_of_grid = [c for c in species.range_mask if not 0 <= c < scenario.n_cells]
        if out_of_grid:
            report.error(
                "range-out-of-grid",
                f"Species {species.species_id!r} range lists {len(out_of_grid)} cell id(s) outside the grid",
                file=scenario.sources.get(f"range:{species.species_id}", source),
            )
        unreachable = sorted(set(species.suitable_classes) - reachable)
        if unreachable and len(unreachable) == len(species.suitable_classes):
            report.warn(
                "unreachable-class",
                f"No suitable class of species {species.species_id!r} occurs in the potential map"
                " or as a technology target",
                file=source,
            )


def validate(scenario: Scenario) -> ValidationReport:
    report = ValidationReport()
    shapes_ok = _check_shapes(scenario, report)
    _check_class_raster(scenario, "current", scenario.current_classes, report)
    _check_class_raster(scenario, "potential", scenario.potential_classes, report)
    _check_technologies(scenario, report)
    _check_species(scenario, report)
    _check_costs(scenario, report, shapes_ok)

    if shapes_ok:
        habitat = SpeciesHabitat(scenario)
        report.excluded_species = list(habitat.excluded)
        for species_id in habitat.excluded:
            report.warn(
                "species-excluded",
                f"Species {species_id!r} has no potential habitat (range, elevation band and"
                " suitable classes do not coincide) and is excluded",
                file=scenario.sources.get("species"),
            )
        if habitat.n_species == 0:
            report.error("no-species", "No species has potential habitat; the index is undefined")

    log.debug(f"Validation finished with {len(report.errors)} error(s) and {len(report.warnings)} warning(s)")
    return report
