"""Pricing project impacts at a target-compatible shadow price.

A project footprint forces land-class changes on a set of cells. Its impact
is the change of the biodiversity index in percentage points, evaluated on
the current land cover or on the land cover after restoring up to the target,
and it is priced at the constant shadow price of that target.
"""
import json
import logging
from pathlib import Path
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Union

import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import ValidationError
from pydantic import validator
from typing_extensions import Literal

from bioshadow.curve import PERCENTAGE_POINT
from bioshadow.curve import ShadowPriceQuote
from bioshadow.curve import build_curve
from bioshadow.curve import shadow_price
from bioshadow.exceptions import ConfigurationMismatch
from bioshadow.exceptions import DomainError
from bioshadow.exceptions import ScenarioParseError
from bioshadow.exceptions import TargetUnreachable
from bioshadow.exceptions import UnknownClassError
from bioshadow.prioritizer.candidates import CandidateSet
from bioshadow.prioritizer.candidates import enumerate_candidates
from bioshadow.prioritizer.main import PrioritizerMode
from bioshadow.prioritizer.main import RestorationSequence
from bioshadow.prioritizer.main import RestorationStep
from bioshadow.prioritizer.main import restored_classes
from bioshadow.prioritizer.main import run_prioritizer
from bioshadow.sar import EPSILON
from bioshadow.sar import ZConfig
from bioshadow.sar import biodiversity_index
from bioshadow.scenario.habitat import SpeciesHabitat
from bioshadow.scenario.model import Scenario


__all__ = [
    "FootprintChange",
    "ProjectFootprint",
    "ProjectImpact",
    "ProjectAppraisal",
    "PriceTableRow",
    "load_footprint",
    "project_delta_index",
    "price_project",
    "price_table",
]


log = logging.getLogger(__name__)


class FootprintChange(BaseModel):
    cell_id: int = Field(..., ge=0)
    forced_class: int

    class Config:
        allow_mutation = False


class ProjectFootprint(BaseModel):
    label: str = ""
    changes: List[FootprintChange] = []

    class Config:
        allow_mutation = False

    @validator("changes")
    def cell_ids_unique(cls, v):
        seen = set()
        for change in v:
            if change.cell_id in seen:
                raise ValueError(f"cell_id {change.cell_id} appears more than once in the footprint")
            seen.add(change.cell_id)
        return v


class ProjectImpact(BaseModel):
    label: str = ""
    delta_pp: float
    z: float
    target: Optional[float] = None
    evaluation_state: Literal["baseline", "at_target"] = "baseline"
    index_before: float
    index_after: float

    class Config:
        allow_mutation = False


class ProjectAppraisal(BaseModel):
    label: str = ""
    target: float
    z: float
    delta_index_pp: float
    shadow_price_per_pp: float
    total_cost: float

    class Config:
        allow_mutation = False

    def export(self) -> Dict[str, Union[str, float]]:
        return {
            "label": self.label,
            "target": self.target,
            "z": self.z,
            "delta_pp": self.delta_index_pp,
            "price_per_pp": self.shadow_price_per_pp,
            "total_cost": self.total_cost,
        }


class PriceTableRow(BaseModel):
    target: float
    z_label: str
    z: float
    baseline_index: float
    price_per_pp: Optional[float] = None
    delta_pp: Optional[float] = None
    total_cost: Optional[float] = None
    unreachable: bool = False


def load_footprint(path: Union[str, Path]) -> ProjectFootprint:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioParseError("Footprint file not found", file=str(path))
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"Invalid JSON: {e.msg}", file=str(path), line=e.lineno)
    try:
        return ProjectFootprint.parse_obj(data)
    except ValidationError as e:
        raise ScenarioParseError(f"Invalid footprint: {e}", file=str(path))


def _forced_classes(scenario: Scenario, classes: np.ndarray, footprint: ProjectFootprint) -> np.ndarray:
    forced = np.array(classes, dtype=np.int64)
    flat = forced.reshape(-1)
    for change in footprint.changes:
        if change.cell_id >= scenario.n_cells:
            raise DomainError(
                f"Footprint cell {change.cell_id} lies outside the {scenario.grid.rows}x{scenario.grid.cols} grid"
            )
        if change.forced_class not in scenario.classes:
            raise UnknownClassError(f"Footprint forces unknown class code {change.forced_class}")
        flat[change.cell_id] = change.forced_class
    return forced


def project_delta_index(
        scenario: Scenario,
        footprint: ProjectFootprint,
        z: Optional[float] = None,
        evaluation_state: Literal["baseline", "at_target"] = "baseline",
        target: Optional[float] = None,
        sequence: Optional[Union[RestorationSequence, Sequence[RestorationStep]]] = None,
        *,
        habitat: Optional[SpeciesHabitat] = None,
) -> ProjectImpact:
    """Index change, in percentage points, of forcing the footprint on the chosen land cover.

    For ``at_target`` the land cover is the current one with ``sequence``
    executed; the sequence is built when only ``target`` is supplied.
    """
    z = scenario.z.z_central if z is None else z
    habitat = habitat or SpeciesHabitat(scenario)
    if evaluation_state == "at_target":
        if target is None:
            raise ValueError("at_target evaluation needs a target")
        if sequence is None:
            sequence = run_prioritizer(enumerate_candidates(scenario, habitat), habitat, z, target=target)
        steps = sequence.steps if isinstance(sequence, RestorationSequence) else list(sequence)
        classes = restored_classes(scenario, steps)
    elif evaluation_state == "baseline":
        classes = np.asarray(scenario.current_classes)
    else:
        raise ValueError(f"Unknown evaluation state {evaluation_state!r}")

    before = biodiversity_index(habitat.states(classes), z).value
    after = biodiversity_index(habitat.states(_forced_classes(scenario, classes, footprint)), z).value
    delta_pp = (after - before) * PERCENTAGE_POINT
    log.debug(f"Footprint {footprint.label!r} ({evaluation_state}): index {before!r} -> {after!r}")
    return ProjectImpact(
        label=footprint.label,
        delta_pp=delta_pp,
        z=z,
        target=target if evaluation_state == "at_target" else None,
        evaluation_state=evaluation_state,
        index_before=before,
        index_after=after,
    )


def price_project(quote: ShadowPriceQuote, impact: Union[ProjectImpact, float]) -> ProjectAppraisal:
    """Harms (negative deltas) cost ``|delta| x price``; gains earn the mirrored credit."""
    if isinstance(impact, ProjectImpact):
        if abs(impact.z - quote.z) > EPSILON:
            raise ConfigurationMismatch(f"Quote was built with z={quote.z!r} but the impact with z={impact.z!r}")
        if impact.target is not None and abs(impact.target - quote.target) > EPSILON:
            raise ConfigurationMismatch(
                f"Quote is for target {quote.target!r} but the impact was evaluated at target {impact.target!r}"
            )
        delta_pp, label = impact.delta_pp, impact.label
    else:
        delta_pp, label = float(impact), ""
    price = quote.price_per_percentage_point
    total = -delta_pp * price if delta_pp != 0 else 0.0
    return ProjectAppraisal(
        label=label,
        target=quote.target,
        z=quote.z,
        delta_index_pp=delta_pp,
        shadow_price_per_pp=price,
        total_cost=total,
    )


def price_table(
        scenario: Scenario,
        targets: Sequence[float],
        footprint: ProjectFootprint,
        zconfig: Optional[ZConfig] = None,
        mode: PrioritizerMode = PrioritizerMode.LAZY,
        *,
        threads: int = 1,
        candidates: Optional[CandidateSet] = None,
) -> List[PriceTableRow]:
    """Shadow price, project delta and project cost for every (z, target) pair."""
    zconfig = zconfig or scenario.z
    habitat = SpeciesHabitat(scenario)
    if candidates is None:
        candidates = enumerate_candidates(scenario, habitat)
    rows = []
    for label, z in zconfig.labelled():
        sequence = run_prioritizer(candidates, habitat, z, mode, threads=threads)
        curve = build_curve(sequence)
        for target in targets:
            try:
                quote = shadow_price(curve, target)
            except TargetUnreachable as e:
                log.warning(f"Price table entry z={z!r}, target={target!r}: {e}")
                rows.append(PriceTableRow(
                    target=target, z_label=label, z=z, baseline_index=sequence.baseline_index, unreachable=True,
                ))
                continue
            prefix = sequence.steps[:quote.marginal_step or 0]
            impact = project_delta_index(
                scenario, footprint, z, "at_target", target, prefix, habitat=habitat,
            )
            appraisal = price_project(quote, impact)
            rows.append(PriceTableRow(
                target=target,
                z_label=label,
                z=z,
                baseline_index=sequence.baseline_index,
                price_per_pp=appraisal.shadow_price_per_pp,
                delta_pp=appraisal.delta_index_pp,
                total_cost=appraisal.total_cost,
            ))
    return rows
