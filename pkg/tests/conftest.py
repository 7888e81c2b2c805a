from typing import Dict
from typing import List
from typing import Optional

import numpy as np
import pytest

from bioshadow.sar import ZConfig
from bioshadow.scenario.io import save_scenario
from bioshadow.scenario.model import GridSpec
from bioshadow.scenario.model import Scenario
from bioshadow.scenario.model import SpeciesSpec
from bioshadow.scenario.model import TechnologySpec
from bioshadow.scenario.synthetic import gen_synthetic


FOREST = 100
GRASSLAND = 400
ARABLE = 1401
PASTURE = 1402

LEGEND = {FOREST: "Forest", GRASSLAND: "Grassland", ARABLE: "Arable land", PASTURE: "Pastureland"}


def species(species_id: str, suitable, cells, elevation_min: float = 0.0, elevation_max: float = 1000.0):
    return SpeciesSpec(
        species_id=species_id,
        suitable_classes=suitable,
        elevation_min=elevation_min,
        elevation_max=elevation_max,
        range_mask=frozenset(cells),
    )


def technology(technology_id: str, from_classes, to_class, cost_layer_ref: Optional[str] = None):
    return TechnologySpec(
        technology_id=technology_id,
        from_classes=from_classes,
        to_class=to_class,
        cost_layer_ref=cost_layer_ref or f"cost_{technology_id}",
    )


def build_scenario(
        current,
        potential,
        species_list: List[SpeciesSpec],
        technologies: List[TechnologySpec],
        costs: Dict[str, object],
        *,
        elevation=None,
        aggregation_factor: int = 1,
        z: ZConfig = ZConfig(),
        classes: Optional[Dict[int, str]] = None,
) -> Scenario:
    current = np.atleast_2d(np.array(current, dtype=np.int64))
    potential = np.atleast_2d(np.array(potential, dtype=np.int64))
    rows, cols = current.shape
    if elevation is None:
        elevation = np.full((rows, cols), 100.0)
    return Scenario(
        grid=GridSpec(rows=rows, cols=cols, cell_area=1.0),
        classes=dict(classes or LEGEND),
        current_classes=current,
        potential_classes=potential,
        elevation=np.atleast_2d(np.array(elevation, dtype=np.float64)),
        cost_layers={k: np.atleast_2d(np.array(v, dtype=np.float64)) for k, v in costs.items()},
        species=species_list,
        technologies=technologies,
        aggregation_factor=aggregation_factor,
        z=z,
    )


@pytest.fixture
def two_cell_scenario() -> Scenario:
    """One forest species with OH=2, H=0; restoring costs 10 and 20."""
    return build_scenario(
        current=[[ARABLE, ARABLE]],
        potential=[[FOREST, FOREST]],
        species_list=[species("sp1", [FOREST], [0, 1])],
        technologies=[technology("arable_to_forest", [ARABLE], FOREST)],
        costs={"cost_arable_to_forest": [[10.0, 20.0]]},
    )


@pytest.fixture
def mixed_species_scenario() -> Scenario:
    """One grassland-potential cell where planting forest helps one species and harms another."""
    return build_scenario(
        current=[[ARABLE]],
        potential=[[GRASSLAND]],
        species_list=[
            species("forest_sp", [FOREST, GRASSLAND], [0]),
            species("arable_sp", [ARABLE, GRASSLAND], [0]),
            species("generalist_sp", [ARABLE, FOREST, GRASSLAND], [0]),
        ],
        technologies=[technology("arable_to_forest", [ARABLE], FOREST)],
        costs={"cost_arable_to_forest": [[5.0]]},
    )


@pytest.fixture
def three_by_three_scenario() -> Scenario:
    """Forest potential everywhere, four forest cells today."""
    current = np.full((3, 3), ARABLE)
    current.flat[[0, 2, 4, 8]] = FOREST
    return build_scenario(
        current=current,
        potential=np.full((3, 3), FOREST),
        species_list=[species("sp1", [FOREST], range(9))],
        technologies=[technology("arable_to_forest", [ARABLE], FOREST)],
        costs={"cost_arable_to_forest": np.arange(1.0, 10.0).reshape(3, 3)},
    )


@pytest.fixture
def synthetic_scenario() -> Scenario:
    return gen_synthetic(42, rows=12, cols=12, n_species=8, n_technologies=3)


@pytest.fixture
def scenario_dir(tmp_path, synthetic_scenario):
    return save_scenario(synthetic_scenario, tmp_path / "scenario")
