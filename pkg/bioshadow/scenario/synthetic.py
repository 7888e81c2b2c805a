"""Seeded desk-scale scenarios.

Land cover follows a small IUCN-like legend. Potential vegetation is natural
everywhere, and part of the grid is currently converted to arable, pasture or
plantation. The technologies mirror the usual restoration levers: restoring
potential vegetation, arable to grassland, arable to forest, and destocking
pasture.
"""
import logging
from typing import Dict
from typing import List

import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import PositiveInt
from typing_extensions import Literal

from bioshadow.sar import ZConfig
from bioshadow.scenario.costs import DEFAULT_DISCOUNT_RATE
from bioshadow.scenario.costs import rent_to_asset
from bioshadow.scenario.habitat import SpeciesHabitat
from bioshadow.scenario.model import POTENTIAL
from bioshadow.scenario.model import GridSpec
from bioshadow.scenario.model import Scenario
from bioshadow.scenario.model import SpeciesSpec
from bioshadow.scenario.model import TechnologySpec


__all__ = ["SyntheticParams", "gen_synthetic", "CLASS_LEGEND"]


log = logging.getLogger(__name__)


FOREST, SHRUBLAND, GRASSLAND, WETLAND = 100, 300, 400, 500
ARABLE, PASTURE, PLANTATION = 1401, 1402, 1403

NATURAL_CLASSES = [FOREST, SHRUBLAND, GRASSLAND, WETLAND]
CONVERTED_CLASSES = [ARABLE, PASTURE, PLANTATION]
CONVERTED_SHARES = [0.5, 0.35, 0.15]

CLASS_LEGEND = {
    FOREST: "Forest",
    SHRUBLAND: "Shrubland",
    GRASSLAND: "Grassland",
    WETLAND: "Wetlands (inland)",
    ARABLE: "Arable land",
    PASTURE: "Pastureland",
    PLANTATION: "Plantations",
}

# (name, from classes, to class, cost multiplier on the land asset value)
TECHNOLOGY_TEMPLATES = [
    ("restore_natural", CONVERTED_CLASSES, POTENTIAL, 1.0),
    ("arable_to_grassland", [ARABLE], GRASSLAND, 0.9),
    ("arable_to_forest", [ARABLE], FOREST, 1.1),
    ("destocking", [PASTURE], GRASSLAND, 0.6),
]

PATCH_SIZE = 5
CONVERTED_SHARE = 0.4
MAX_ELEVATION = 1500.0


class SyntheticParams(BaseModel):
    rows: PositiveInt = 20
    cols: PositiveInt = 20
    n_species: PositiveInt = 10
    n_technologies: PositiveInt = 1
    cost_distribution: Literal["lognormal", "uniform", "constant"] = "lognormal"
    range_density: float = Field(0.3, gt=0, le=1)
    suitability_density: float = Field(0.4, gt=0, le=1)
    loss_species_share: float = Field(0.2, ge=0, le=1)
    aggregation_factor: PositiveInt = 1
    cell_area_km2: float = Field(1.0, gt=0)
    z: ZConfig = ZConfig()


def _potential_map(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    coarse = rng.choice(NATURAL_CLASSES, size=(-(-rows // PATCH_SIZE), -(-cols // PATCH_SIZE)))
    return np.kron(coarse, np.ones((PATCH_SIZE, PATCH_SIZE), dtype=np.int64))[:rows, :cols].astype(np.int64)


def _current_map(rng: np.random.Generator, potential: np.ndarray) -> np.ndarray:
    converted = rng.random(potential.shape) < CONVERTED_SHARE
    use = rng.choice(CONVERTED_CLASSES, size=potential.shape, p=CONVERTED_SHARES)
    return np.where(converted, use, potential).astype(np.int64)


def _elevation_map(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    gradient = np.linspace(0.0, MAX_ELEVATION, rows)[:, None] * np.ones((1, cols))
    noise = rng.normal(0.0, 100.0, size=(rows, cols))
    return np.round(np.clip(gradient + noise, 0.0, None), 1)


def _annual_rent(rng: np.random.Generator, shape, distribution: str) -> np.ndarray:
    if distribution == "lognormal":
        rent = rng.lognormal(mean=np.log(300.0), sigma=0.6, size=shape)
    elif distribution == "uniform":
        rent = rng.uniform(50.0, 600.0, size=shape)
    else:
        rent = np.full(shape, 250.0)
    return rent


def _range_disc(rng: np.random.Generator, rows: int, cols: int, density: float) -> frozenset:
    radius = np.sqrt(density * rows * cols / np.pi)
    r0, c0 = rng.uniform(0, rows), rng.uniform(0, cols)
    rr, cc = np.mgrid[0:rows, 0:cols]
    inside = (rr + 0.5 - r0) ** 2 + (cc + 0.5 - c0) ** 2 <= radius ** 2
    if not inside.any():
        inside[min(int(r0), rows - 1), min(int(c0), cols - 1)] = True
    return frozenset(np.flatnonzero(inside).tolist())


def _species(rng: np.random.Generator, params: SyntheticParams) -> List[SpeciesSpec]:
    species = []
    for i in range(params.n_species):
        suitable = [c for c in NATURAL_CLASSES if rng.random() < params.suitability_density]
        if not suitable:
            suitable = [int(rng.choice(NATURAL_CLASSES))]
        if rng.random() < params.loss_species_share:
            suitable.append(int(rng.choice([ARABLE, PASTURE])))
        low = float(np.round(rng.uniform(0.0, 0.6 * MAX_ELEVATION), 1))
        high = float(np.round(low + rng.uniform(0.4, 1.2) * MAX_ELEVATION, 1))
        species.append(SpeciesSpec(
            species_id=f"sp{i + 1:03d}",
            suitable_classes=suitable,
            elevation_min=low,
            elevation_max=high,
            range_mask=_range_disc(rng, params.rows, params.cols, params.range_density),
        ))
    return species


def _technologies(rng: np.random.Generator, params: SyntheticParams, rent: np.ndarray):
    technologies = []
    cost_layers: Dict[str, np.ndarray] = {}
    asset = rent_to_asset(rent, DEFAULT_DISCOUNT_RATE)
    for k in range(params.n_technologies):
        name, from_classes, to_class, multiplier = TECHNOLOGY_TEMPLATES[k % len(TECHNOLOGY_TEMPLATES)]
        if k >= len(TECHNOLOGY_TEMPLATES):
            name = f"{name}_{k // len(TECHNOLOGY_TEMPLATES) + 1}"
        layer = f"cost_{name}"
        noise = rng.uniform(0.9, 1.1, size=rent.shape)
        cost_layers[layer] = np.round(asset * multiplier * noise, 2)
        technologies.append(TechnologySpec(
            technology_id=name,
            from_classes=from_classes,
            to_class=to_class,
            cost_layer_ref=layer,
        ))
    return technologies, cost_layers


def _ensure_restorable(scenario: Scenario, rng: np.random.Generator) -> Scenario:
    """Guarantee a retained species and an index below 1.

    The first species is widened to the whole grid when nothing is retained,
    and one of its extent cells is switched to a converted class it cannot
    use when every species already holds its full habitat.
    """
    habitat = SpeciesHabitat(scenario)
    if habitat.n_species == 0:
        first = scenario.species[0]
        widened = first.copy(update={
            "range_mask": frozenset(range(scenario.n_cells)),
            "elevation_min": 0.0,
            "elevation_max": float(scenario.elevation.max()),
            "suitable_classes": first.suitable_classes | frozenset(NATURAL_CLASSES),
        })
        scenario = scenario.copy(update={"species": [widened] + scenario.species[1:]})
        habitat = SpeciesHabitat(scenario)
    counts = habitat.habitat_counts()
    if np.all(counts == habitat.OH):
        cells = np.flatnonzero(habitat.extents[0])
        cell = int(cells[rng.integers(len(cells))])
        current = np.array(scenario.current_classes)
        unsuitable = [c for c in CONVERTED_CLASSES if c not in habitat.species[0].suitable_classes]
        current.flat[cell] = unsuitable[0]
        scenario = scenario.with_current_classes(current)
    return scenario


def gen_synthetic(seed: int, params: SyntheticParams = None, **kwargs) -> Scenario:
    """Generate a deterministic scenario; keyword arguments override ``params`` fields."""
    if params is None:
        params = SyntheticParams(**kwargs)
    elif kwargs:
        params = SyntheticParams(**{**params.dict(), **kwargs})

    rng = np.random.default_rng(seed)
    rows, cols = params.rows, params.cols
    potential = _potential_map(rng, rows, cols)
    current = _current_map(rng, potential)
    elevation = _elevation_map(rng, rows, cols)
    rent = _annual_rent(rng, (rows, cols), params.cost_distribution)
    species = _species(rng, params)
    technologies, cost_layers = _technologies(rng, params, rent)

    scenario = Scenario(
        grid=GridSpec(rows=rows, cols=cols, cell_area=params.cell_area_km2),
        classes=dict(CLASS_LEGEND),
        current_classes=current,
        potential_classes=potential,
        elevation=elevation,
        cost_layers=cost_layers,
        species=species,
        technologies=technologies,
        aggregation_factor=params.aggregation_factor,
        z=params.z,
    )
    scenario = _ensure_restorable(scenario, rng)
    log.info(f"Generated synthetic scenario seed={seed} ({rows}x{cols}, {params.n_species} species)")
    return scenario
