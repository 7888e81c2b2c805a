"""Per-species habitat derivation.

A cell belongs to a species' potential extent when it lies inside the species'
range, inside its elevation band, has data in every layer, and its potential
class is suitable. ``OH`` is the size of that extent and ``H`` counts the
extent cells whose current class is suitable, so ``H <= OH`` always holds.
"""
import logging
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np

from bioshadow.sar import SpeciesState
from bioshadow.scenario.model import Scenario
from bioshadow.scenario.model import SpeciesSpec


__all__ = [
    "SpeciesHabitat",
    "derive_species_states",
    "derive_species_states_with_exclusions",
    "suitable_mask",
]


log = logging.getLogger(__name__)


def suitable_mask(classes: np.ndarray, species: SpeciesSpec) -> np.ndarray:
    return np.isin(classes, np.fromiter(species.suitable_classes, dtype=np.int64))


def _range_mask(scenario: Scenario, species: SpeciesSpec) -> np.ndarray:
    mask = np.zeros(scenario.n_cells, dtype=bool)
    ids = np.fromiter(species.range_mask, dtype=np.int64)
    ids = ids[(ids >= 0) & (ids < scenario.n_cells)]
    mask[ids] = True
    return mask.reshape(scenario.grid.shape)


class SpeciesHabitat:
    """Potential extents of the species retained for the index (``OH > 0``)."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        valid = scenario.valid_mask()
        kept: List[SpeciesSpec] = []
        extents: List[np.ndarray] = []
        self.excluded: List[str] = []
        for species in scenario.species:
            extent = (
                valid
                & _range_mask(scenario, species)
                & (scenario.elevation >= species.elevation_min)
                & (scenario.elevation <= species.elevation_max)
                & suitable_mask(scenario.potential_classes, species)
            )
            if not extent.any():
                self.excluded.append(species.species_id)
                continue
            kept.append(species)
            extents.append(extent)
        if self.excluded:
            log.warning(
                f"Excluded {len(self.excluded)} species with no potential habitat:"
                f" {', '.join(self.excluded)}"
            )
        self.species: List[SpeciesSpec] = kept
        if extents:
            self.extents = np.stack(extents).astype(bool)
        else:
            self.extents = np.zeros((0,) + scenario.grid.shape, dtype=bool)
        self.OH = self.extents.reshape(len(kept), int(np.prod(scenario.grid.shape))).sum(axis=1).astype(np.int64)

    def __repr__(self):
        return f"{self.__class__.__name__}(n_species={self.n_species}, excluded={len(self.excluded)})"

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def species_ids(self) -> List[str]:
        return [s.species_id for s in self.species]

    def habitat_counts(self, classes: Optional[np.ndarray] = None) -> np.ndarray:
        """``H`` per retained species for a land-cover raster (default: current classes)."""
        if classes is None:
            classes = self.scenario.current_classes
        counts = np.empty(self.n_species, dtype=np.int64)
        for i, species in enumerate(self.species):
            counts[i] = np.count_nonzero(self.extents[i] & suitable_mask(classes, species))
        return counts

    def states(self, classes: Optional[np.ndarray] = None) -> List[SpeciesState]:
        counts = self.habitat_counts(classes)
        return [
            SpeciesState(species_id=s.species_id, H=int(h), OH=int(oh))
            for s, h, oh in zip(self.species, counts, self.OH)
        ]


def derive_species_states(scenario: Scenario) -> List[SpeciesState]:
    return SpeciesHabitat(scenario).states()


def derive_species_states_with_exclusions(scenario: Scenario) -> Tuple[List[SpeciesState], List[str]]:
    habitat = SpeciesHabitat(scenario)
    return habitat.states(), list(habitat.excluded)
