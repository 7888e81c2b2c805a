import logging
import math
from typing import Dict
from typing import List
from typing import Mapping
from typing import Optional

import numpy as np

from bioshadow.exceptions import DomainError
from bioshadow.prioritizer.candidates import CandidateAction
from bioshadow.prioritizer.candidates import CandidateSet
from bioshadow.sar import SpeciesState
from bioshadow.sar import delta_persistence_array
from bioshadow.sar import persistence_array
from bioshadow.scenario.habitat import SpeciesHabitat


__all__ = ["HabitatState", "GainTable", "apply_action"]


log = logging.getLogger(__name__)


def apply_action(states: Mapping[str, SpeciesState], action: CandidateAction) -> Dict[str, SpeciesState]:
    """Return new states with the action's deltas applied; ``states`` is left untouched."""
    updated = dict(states)
    for species_id, delta in action.species_deltas.items():
        try:
            state = states[species_id]
        except KeyError:
            raise DomainError(
                f"Action {action.cell_id}/{action.technology_id} references unknown species {species_id!r}"
            )
        new_h = state.H + delta
        if not 0 <= new_h <= state.OH:
            raise DomainError(
                f"Applying {action.cell_id}/{action.technology_id} moves species {species_id!r}"
                f" to H={new_h!r} outside [0, {state.OH!r}]"
            )
        updated[species_id] = SpeciesState(species_id=species_id, H=new_h, OH=state.OH)
    return updated


class HabitatState:
    """Habitat counts of the retained species while a sequence is built."""
    _value: np.ndarray

    def __repr__(self):
        return f"{self.__class__.__name__}(n_species={self.n_species}, z={self.z!r}, index={self.index()!r})"

    def __init__(self, H: np.ndarray, OH: np.ndarray, z: float, *, species_ids: Optional[List[str]] = None):
        H = np.array(H, dtype=np.int64)
        OH = np.array(OH, dtype=np.int64)
        if H.shape != OH.shape or H.ndim != 1:
            raise ValueError(f"H and OH must be 1-D and of equal length, got {H.shape} and {OH.shape}")
        if (OH <= 0).any() or (H < 0).any() or (H > OH).any():
            raise DomainError("Habitat counts must satisfy 0 <= H <= OH with OH > 0")
        self.OH = OH
        self.z = z
        self.species_ids = list(species_ids) if species_ids is not None else [str(i) for i in range(len(H))]
        self._value = H

    @classmethod
    def from_habitat(cls, habitat: SpeciesHabitat, z: float, classes: Optional[np.ndarray] = None) -> "HabitatState":
        return cls(habitat.habitat_counts(classes), habitat.OH, z, species_ids=habitat.species_ids)

    @property
    def value(self) -> np.ndarray:
        return self._value

    @property
    def n_species(self) -> int:
        return len(self.OH)

    def index(self) -> float:
        value = math.fsum(persistence_array(self._value, self.OH, self.z).tolist()) / self.n_species
        return min(max(value, 0.0), 1.0)

    def states(self) -> Dict[str, SpeciesState]:
        return {
            sid: SpeciesState(species_id=sid, H=int(h), OH=int(oh))
            for sid, h, oh in zip(self.species_ids, self._value, self.OH)
        }

    def apply(self, species_index: np.ndarray, deltas: np.ndarray) -> None:
        new_h = self._value[species_index] + deltas
        bad = (new_h < 0) | (new_h > self.OH[species_index])
        if bad.any():
            s = int(np.asarray(species_index)[bad][0])
            raise DomainError(
                f"Species {self.species_ids[s]!r} would move to H={int(new_h[bad][0])} outside [0, {int(self.OH[s])}]"
            )
        self._value[species_index] = new_h


class GainTable:
    """Persistence change of every distinct (species, delta) pair of a candidate set.

    Candidates sharing a pair read the same float, so any way of summing a row
    in entry order gives the same marginal benefit.
    """

    def __init__(self, candidates: CandidateSet, state: HabitatState):
        self.state = state
        keys = candidates.species_index * (2 * self._span(candidates) + 1) + candidates.deltas
        _, first, self.entry_pair = np.unique(keys, return_index=True, return_inverse=True)
        self.entry_pair = self.entry_pair.ravel()
        self.pair_species = candidates.species_index[first]
        self.pair_delta = candidates.deltas[first]
        self.gains = np.zeros(len(first), dtype=np.float64)
        self.refresh()

    @staticmethod
    def _span(candidates: CandidateSet) -> int:
        return int(np.abs(candidates.deltas).max()) if candidates.n_entries else 0

    def refresh(self, species: Optional[np.ndarray] = None) -> None:
        """Recompute the gains of pairs on ``species`` (all pairs by default).

        A pair whose delta would move ``H`` outside ``[0, OH]`` gets a NaN gain.
        """
        pairs = slice(None) if species is None else np.isin(self.pair_species, species)
        s = self.pair_species[pairs]
        H = self.state.value[s]
        OH = self.state.OH[s]
        dH = self.pair_delta[pairs]
        with np.errstate(invalid="ignore"):
            gains = delta_persistence_array(H, OH, dH, self.state.z)
        gains[(H + dH < 0) | (H + dH > OH)] = np.nan
        self.gains[pairs] = gains

    def entry_gains(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        return self.gains[self.entry_pair[start:stop]]
