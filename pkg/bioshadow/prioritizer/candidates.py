"""Candidate restoration actions.

A candidate converts one decision unit (a cell, or a block of cells when the
scenario aggregates) with one technology. Its species deltas follow the
habitat extent rule: inside a species' potential extent, a cell whose class
turns suitable adds one cell of habitat and a cell whose class turns
unsuitable removes one. Block candidates sum the deltas and costs of their
member cells.
"""
import logging
import math
from typing import Dict
from typing import Iterator
from typing import List
from typing import Optional
from typing import Sequence
from typing import overload

import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import validator

from bioshadow.exceptions import UnknownClassError
from bioshadow.scenario.habitat import SpeciesHabitat
from bioshadow.scenario.habitat import suitable_mask
from bioshadow.scenario.model import Scenario
from bioshadow.scenario.model import TechnologySpec


__all__ = [
    "CandidateAction",
    "CandidateSet",
    "applicable_mask",
    "cost_effectiveness",
    "enumerate_candidates",
]


log = logging.getLogger(__name__)


class CandidateAction(BaseModel):
    # Decision-unit id; equals the grid cell id when aggregation_factor == 1.
    cell_id: int = Field(..., ge=0)
    technology_id: str
    cost: float = Field(..., ge=0)
    species_deltas: Dict[str, int] = {}

    class Config:
        allow_mutation = False

    @validator("species_deltas")
    def no_zero_deltas(cls, v):
        zeros = [k for k, d in v.items() if d == 0]
        if zeros:
            raise ValueError(f"species_deltas must omit zero entries, got zeros for {zeros}")
        return v


def cost_effectiveness(mb: float, cost: float) -> float:
    """``mb / cost``; a zero-cost action maps to ``+inf`` (or ``-inf`` when it does harm)."""
    if cost > 0:
        return mb / cost
    if mb == 0:
        return 0.0
    return math.copysign(math.inf, mb)


def applicable_mask(scenario: Scenario, technology: TechnologySpec) -> np.ndarray:
    """Cells where ``technology`` changes the current class and has a usable cost."""
    current = scenario.current_classes
    post = technology.post_classes(current, scenario.potential_classes)
    cost = scenario.cost_layer(technology)
    return (
        scenario.valid_mask()
        & np.isin(current, np.fromiter(technology.from_classes, dtype=np.int64))
        & (post != current)
        & (cost != scenario.grid.nodata)
        & np.isfinite(cost)
    )


def _lexical_rank(ids: List[str]) -> np.ndarray:
    rank = np.empty(len(ids), dtype=np.int64)
    rank[sorted(range(len(ids)), key=ids.__getitem__)] = np.arange(len(ids))
    return rank


def _check_classes(scenario: Scenario):
    legend = set(scenario.classes)
    for tech in scenario.technologies:
        unknown = sorted(set(tech.from_classes) - legend)
        if not tech.restores_potential and tech.to_class not in legend:
            unknown.append(tech.to_class)
        if unknown:
            raise UnknownClassError(
                f"Technology {tech.technology_id!r} references unknown class codes {unknown}"
            )


class CandidateSet(Sequence[CandidateAction]):
    """All candidates of a scenario, stored column-wise.

    Rows are ordered by decision unit, then technology id. Species entries of
    row ``j`` live in ``species_index[indptr[j]:indptr[j + 1]]`` and
    ``deltas[...]`` with the same slice, in species order. ``static_rank`` is
    the position of each row under the (cost, unit id, technology id)
    tie-break order.
    """

    def __init__(
            self,
            *,
            species_ids: List[str],
            technology_ids: List[str],
            unit_ids: np.ndarray,
            tech_index: np.ndarray,
            costs: np.ndarray,
            indptr: np.ndarray,
            species_index: np.ndarray,
            deltas: np.ndarray,
    ):
        self.species_ids = list(species_ids)
        self.technology_ids = list(technology_ids)
        self.unit_ids = np.asarray(unit_ids, dtype=np.int64)
        self.tech_index = np.asarray(tech_index, dtype=np.int64)
        self.costs = np.asarray(costs, dtype=np.float64)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.species_index = np.asarray(species_index, dtype=np.int64)
        self.deltas = np.asarray(deltas, dtype=np.int64)

        order = np.lexsort((_lexical_rank(self.technology_ids)[self.tech_index], self.unit_ids, self.costs))
        self.static_rank = np.empty(len(order), dtype=np.int64)
        self.static_rank[order] = np.arange(len(order))

    def __repr__(self):
        return (
            f"{self.__class__.__name__}(n_candidates={len(self)}, n_species={len(self.species_ids)},"
            f" technologies={self.technology_ids!r})"
        )

    def __len__(self) -> int:
        return len(self.unit_ids)

    @overload
    def __getitem__(self, j: int) -> CandidateAction: ...

    @overload
    def __getitem__(self, j: slice) -> List[CandidateAction]: ...

    def __getitem__(self, j):
        if isinstance(j, slice):
            return [self[i] for i in range(*j.indices(len(self)))]
        if j < 0:
            j += len(self)
        if not 0 <= j < len(self):
            raise IndexError(j)
        return CandidateAction(
            cell_id=int(self.unit_ids[j]),
            technology_id=self.technology_ids[self.tech_index[j]],
            cost=float(self.costs[j]),
            species_deltas=self.row_deltas(j),
        )

    def __iter__(self) -> Iterator[CandidateAction]:
        for j in range(len(self)):
            yield self[j]

    @property
    def n_entries(self) -> int:
        return len(self.species_index)

    def row_deltas(self, j: int) -> Dict[str, int]:
        a, b = self.indptr[j], self.indptr[j + 1]
        return {self.species_ids[s]: int(d) for s, d in zip(self.species_index[a:b], self.deltas[a:b])}

    def row_of_entry(self) -> np.ndarray:
        return np.repeat(np.arange(len(self), dtype=np.int64), np.diff(self.indptr))

    def has_negative_deltas(self) -> bool:
        return bool((self.deltas < 0).any())

    def select(self, rows: np.ndarray) -> "CandidateSet":
        """Sub-set of rows, kept in their original order."""
        rows = np.sort(np.asarray(rows, dtype=np.int64))
        lengths = np.diff(self.indptr)[rows]
        entries = (
            np.concatenate([np.arange(self.indptr[j], self.indptr[j + 1]) for j in rows])
            if len(rows) else np.empty(0, dtype=np.int64)
        )
        return CandidateSet(
            species_ids=self.species_ids,
            technology_ids=self.technology_ids,
            unit_ids=self.unit_ids[rows],
            tech_index=self.tech_index[rows],
            costs=self.costs[rows],
            indptr=np.concatenate([[0], np.cumsum(lengths)]),
            species_index=self.species_index[entries],
            deltas=self.deltas[entries],
        )

    def restrict_technologies(self, technology_ids: Sequence[str]) -> "CandidateSet":
        keep = [i for i, t in enumerate(self.technology_ids) if t in set(technology_ids)]
        return self.select(np.flatnonzero(np.isin(self.tech_index, keep)))

    def scale_costs(self, factor: float) -> "CandidateSet":
        return CandidateSet(
            species_ids=self.species_ids,
            technology_ids=self.technology_ids,
            unit_ids=self.unit_ids,
            tech_index=self.tech_index,
            costs=self.costs * factor,
            indptr=self.indptr,
            species_index=self.species_index,
            deltas=self.deltas,
        )


def enumerate_candidates(scenario: Scenario, habitat: Optional[SpeciesHabitat] = None) -> CandidateSet:
    _check_classes(scenario)
    if habitat is None:
        habitat = SpeciesHabitat(scenario)

    unit_of_cell = scenario.decision_unit_ids().ravel()
    n_units = scenario.n_decision_units
    current = scenario.current_classes
    pre_suitable = [suitable_mask(current, s) for s in habitat.species]

    unit_parts, tech_parts, cost_parts, delta_blocks = [], [], [], []
    for t, tech in enumerate(scenario.technologies):
        applicable = applicable_mask(scenario, tech)
        cells = np.flatnonzero(applicable)
        if not len(cells):
            log.debug(f"Technology {tech.technology_id!r} applies to no cell")
            continue
        units_of_applicable = unit_of_cell[cells]
        units = np.unique(units_of_applicable)
        block_cost = np.bincount(
            units_of_applicable, weights=scenario.cost_layer(tech).ravel()[cells], minlength=n_units
        )

        post = tech.post_classes(current, scenario.potential_classes)
        block_deltas = np.zeros((habitat.n_species, len(units)), dtype=np.int64)
        for i, species in enumerate(habitat.species):
            cell_delta = (
                suitable_mask(post, species).astype(np.int64) - pre_suitable[i].astype(np.int64)
            ) * habitat.extents[i]
            cell_delta = cell_delta.ravel()[cells]
            if cell_delta.any():
                summed = np.bincount(units_of_applicable, weights=cell_delta, minlength=n_units)
                block_deltas[i] = np.rint(summed[units]).astype(np.int64)

        unit_parts.append(units)
        tech_parts.append(np.full(len(units), t, dtype=np.int64))
        cost_parts.append(block_cost[units])
        delta_blocks.append(block_deltas)

    technology_ids = [t.technology_id for t in scenario.technologies]
    if not unit_parts:
        log.warning("Scenario has no candidate restoration actions")
        return CandidateSet(
            species_ids=habitat.species_ids,
            technology_ids=technology_ids,
            unit_ids=np.empty(0, dtype=np.int64),
            tech_index=np.empty(0, dtype=np.int64),
            costs=np.empty(0),
            indptr=np.zeros(1, dtype=np.int64),
            species_index=np.empty(0, dtype=np.int64),
            deltas=np.empty(0, dtype=np.int64),
        )

    unit_ids = np.concatenate(unit_parts)
    tech_index = np.concatenate(tech_parts)
    costs = np.concatenate(cost_parts)
    deltas = np.concatenate(delta_blocks, axis=1).T

    order = np.lexsort((_lexical_rank(technology_ids)[tech_index], unit_ids))
    unit_ids, tech_index, costs, deltas = unit_ids[order], tech_index[order], costs[order], deltas[order]

    rows, species_index = np.nonzero(deltas)
    indptr = np.concatenate([[0], np.cumsum(np.bincount(rows, minlength=len(unit_ids)))])
    candidates = CandidateSet(
        species_ids=habitat.species_ids,
        technology_ids=technology_ids,
        unit_ids=unit_ids,
        tech_index=tech_index,
        costs=costs,
        indptr=indptr,
        species_index=species_index,
        deltas=deltas[rows, species_index],
    )
    log.info(f"Enumerated {len(candidates)} candidates over {len(technology_ids)} technologies")
    return candidates
