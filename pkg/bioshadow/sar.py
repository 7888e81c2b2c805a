"""Species-area persistence math.

A species keeping ``H`` of its ``OH`` cells of suitable habitat persists with
probability ``(H / OH) ** z``. The biodiversity index is the mean persistence
over all species, and restoration actions are scored by how much they move it.
"""
import math
from typing import TYPE_CHECKING
from typing import Iterable
from typing import Mapping

import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import root_validator

from bioshadow.exceptions import DomainError


if TYPE_CHECKING:
    from bioshadow.prioritizer.candidates import CandidateAction


__all__ = [
    "EPSILON",
    "ZConfig",
    "SpeciesState",
    "PersistenceIndex",
    "persistence",
    "biodiversity_index",
    "marginal_persistence_derivative",
    "discrete_delta_persistence",
    "cell_marginal_benefit",
    "persistence_array",
    "delta_persistence_array",
]


# Absolute tolerance for index comparisons.
EPSILON = 1e-12


class ZConfig(BaseModel):
    """Central estimate and sensitivity bounds of the species-area exponent."""
    z_central: float = 0.25
    z_low: float = 0.15
    z_high: float = 0.35

    class Config:
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def check_ordering(cls, values):
        low, central, high = values["z_low"], values["z_central"], values["z_high"]
        if not 0 < low <= central <= high < 1:
            raise ValueError(f"z values must satisfy 0 < low <= central <= high < 1, got ({low}, {central}, {high})")
        return values

    def labelled(self):
        return [("low", self.z_low), ("central", self.z_central), ("high", self.z_high)]


class SpeciesState(BaseModel):
    species_id: str
    H: float = Field(..., ge=0)
    OH: float = Field(..., gt=0)

    class Config:
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def check_habitat(cls, values):
        if values["H"] > values["OH"]:
            raise ValueError(f"H ({values['H']}) cannot exceed OH ({values['OH']})")
        return values

    @property
    def ratio(self) -> float:
        return self.H / self.OH


class PersistenceIndex(BaseModel):
    value: float = Field(..., ge=0, le=1)
    n_species: int = Field(..., ge=1)

    class Config:
        allow_mutation = False

    @property
    def extinction_risk(self) -> float:
        return 1.0 - self.value


def _check_z(z: float) -> None:
    if not 0 < z < 1:
        raise DomainError(f"z must lie strictly between 0 and 1, got {z!r}")


def _check_habitat(H: float, OH: float) -> None:
    if OH <= 0:
        raise DomainError(f"OH must be positive, got {OH!r}")
    if H < 0 or H > OH:
        raise DomainError(f"H must lie in [0, OH={OH!r}], got {H!r}")


def persistence(state: SpeciesState, z: float) -> float:
    _check_z(z)
    _check_habitat(state.H, state.OH)
    return (state.H / state.OH) ** z


def biodiversity_index(states: Iterable[SpeciesState], z: float) -> PersistenceIndex:
    states = list(states)
    if not states:
        raise DomainError("The biodiversity index needs at least one species")
    value = math.fsum(persistence(s, z) for s in states) / len(states)
    return PersistenceIndex(value=min(max(value, 0.0), 1.0), n_species=len(states))


def marginal_persistence_derivative(state: SpeciesState, z: float) -> float:
    """Analytic d/dH of ``(H / OH) ** z``, i.e. ``(z / H) * (H / OH) ** z``.

    Diagnostic only; prioritization uses whole-cell steps.
    """
    _check_z(z)
    _check_habitat(state.H, state.OH)
    if state.H == 0:
        raise DomainError("The persistence derivative is singular at H = 0; use discrete_delta_persistence")
    return (z / state.H) * (state.H / state.OH) ** z


def discrete_delta_persistence(state: SpeciesState, z: float, dH: float) -> float:
    _check_z(z)
    _check_habitat(state.H, state.OH)
    new_h = state.H + dH
    if new_h < 0 or new_h > state.OH:
        raise DomainError(f"H + dH = {new_h!r} falls outside [0, {state.OH!r}] for species {state.species_id!r}")
    if dH == 0:
        return 0.0
    return (new_h / state.OH) ** z - (state.H / state.OH) ** z


def cell_marginal_benefit(
        action: "CandidateAction",
        current_states: Mapping[str, SpeciesState],
        z: float,
        n_species: int
) -> float:
    if n_species < 1:
        raise DomainError("n_species must be at least 1")
    deltas = []
    for species_id, delta in sorted(action.species_deltas.items()):
        try:
            state = current_states[species_id]
        except KeyError:
            raise DomainError(
                f"Action {action.cell_id}/{action.technology_id} references unknown species {species_id!r}"
            )
        deltas.append(discrete_delta_persistence(state, z, delta))
    return math.fsum(deltas) / n_species


# Vectorized forms used by the prioritizer. Inputs are assumed valid.

def persistence_array(H: np.ndarray, OH: np.ndarray, z: float) -> np.ndarray:
    return np.power(np.asarray(H, dtype=np.float64) / OH, z)


def delta_persistence_array(H: np.ndarray, OH: np.ndarray, dH: np.ndarray, z: float) -> np.ndarray:
    H = np.asarray(H, dtype=np.float64)
    OH = np.asarray(OH, dtype=np.float64)
    return np.power((H + dH) / OH, z) - np.power(H / OH, z)
