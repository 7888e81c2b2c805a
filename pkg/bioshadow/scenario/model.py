from typing import Dict
from typing import FrozenSet
from typing import List
from typing import Optional
from typing import Sequence
from typing import Union

import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import PositiveInt
from pydantic import root_validator
from pydantic import validator
from typing_extensions import Literal

from bioshadow.sar import ZConfig
from bioshadow.types import ClassCodes
from bioshadow.types import ClassRaster
from bioshadow.types import ValueRaster
from bioshadow.utils.misc import block_ids
from bioshadow.utils.misc import block_shape


__all__ = ["POTENTIAL", "GridSpec", "SpeciesSpec", "TechnologySpec", "Scenario"]


# ``TechnologySpec.to_class`` value meaning "convert to the cell's potential class".
POTENTIAL = "potential"


class GridSpec(BaseModel):
    rows: PositiveInt
    cols: PositiveInt
    cell_area: float = Field(..., gt=0, alias="cell_area_km2")
    nodata: float = -9999.0

    class Config:
        allow_mutation = False
        allow_population_by_field_name = True

    @property
    def shape(self):
        return self.rows, self.cols

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols


class SpeciesSpec(BaseModel):
    species_id: str
    suitable_classes: ClassCodes
    elevation_min: float
    elevation_max: float
    range_mask: FrozenSet[int] = frozenset()

    class Config:
        allow_mutation = False

    @validator("species_id")
    def species_id_not_blank(cls, v):
        if not v.strip():
            raise ValueError("species_id cannot be blank")
        return v

    @validator("suitable_classes")
    def suitable_classes_not_empty(cls, v):
        if not v:
            raise ValueError("suitable_classes cannot be empty")
        return v

    @root_validator(skip_on_failure=True)
    def check_elevation_band(cls, values):
        if values["elevation_min"] > values["elevation_max"]:
            raise ValueError(
                f"elevation_min ({values['elevation_min']}) exceeds elevation_max ({values['elevation_max']})"
            )
        return values


class TechnologySpec(BaseModel):
    """A land-use conversion that restores habitat, e.g. arable to grassland.

    ``to_class`` is either a class code or ``"potential"``, which converts a
    cell to its potential-natural class.
    """
    technology_id: str
    from_classes: ClassCodes
    to_class: Union[int, Literal["potential"]]
    cost_layer_ref: str

    class Config:
        allow_mutation = False

    @validator("technology_id")
    def technology_id_not_blank(cls, v):
        if not v.strip():
            raise ValueError("technology_id cannot be blank")
        return v

    @validator("from_classes")
    def from_classes_not_empty(cls, v):
        if not v:
            raise ValueError("from_classes cannot be empty")
        return v

    @root_validator(skip_on_failure=True)
    def check_to_class(cls, values):
        if values["to_class"] != POTENTIAL and values["to_class"] in values["from_classes"]:
            raise ValueError(f"to_class {values['to_class']} is also one of the from_classes")
        return values

    @property
    def restores_potential(self) -> bool:
        return self.to_class == POTENTIAL

    def post_classes(self, current: np.ndarray, potential: np.ndarray) -> np.ndarray:
        if self.restores_potential:
            return np.asarray(potential)
        return np.full_like(current, self.to_class)


class Scenario(BaseModel):
    """The complete, immutable input of a pricing run.

    Rasters are indexed ``[row, col]`` with row 0 the northern edge, and cell
    ids run row-major from there.
    """
    grid: GridSpec
    classes: Dict[int, str]
    current_classes: ClassRaster
    potential_classes: ClassRaster
    elevation: ValueRaster
    cost_layers: Dict[str, ValueRaster]
    species: List[SpeciesSpec]
    technologies: List[TechnologySpec]
    aggregation_factor: PositiveInt = 1
    z: ZConfig = ZConfig()
    # Logical layer name -> package file it came from; only used for error messages.
    sources: Dict[str, str] = {}

    class Config:
        allow_mutation = False

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        if set(self.cost_layers) != set(other.cost_layers):
            return False
        return (
            self.grid == other.grid
            and self.classes == other.classes
            and np.array_equal(self.current_classes, other.current_classes)
            and np.array_equal(self.potential_classes, other.potential_classes)
            and np.array_equal(self.elevation, other.elevation)
            and all(np.array_equal(self.cost_layers[k], other.cost_layers[k]) for k in self.cost_layers)
            and self.species == other.species
            and self.technologies == other.technologies
            and self.aggregation_factor == other.aggregation_factor
            and self.z == other.z
        )

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    @property
    def decision_shape(self):
        return block_shape(self.grid.rows, self.grid.cols, self.aggregation_factor)

    @property
    def n_decision_units(self) -> int:
        block_rows, block_cols = self.decision_shape
        return block_rows * block_cols

    def decision_unit_ids(self) -> np.ndarray:
        return block_ids(self.grid.rows, self.grid.cols, self.aggregation_factor)

    def nodata_class(self) -> Optional[int]:
        nodata = self.grid.nodata
        return int(nodata) if float(nodata).is_integer() else None

    def valid_mask(self) -> np.ndarray:
        """Cells with data in the current, potential and elevation layers."""
        valid = self.elevation != self.grid.nodata
        valid &= np.isfinite(self.elevation)
        code = self.nodata_class()
        if code is not None:
            valid &= self.current_classes != code
            valid &= self.potential_classes != code
        return valid

    def cost_layer(self, technology: TechnologySpec) -> np.ndarray:
        return self.cost_layers[technology.cost_layer_ref]

    def restrict_technologies(self, technology_ids: Sequence[str]) -> "Scenario":
        keep = [t for t in self.technologies if t.technology_id in set(technology_ids)]
        return self.copy(update={"technologies": keep})

    def scale_costs(self, factor: float) -> "Scenario":
        scaled = {}
        for k, layer in self.cost_layers.items():
            arr = np.where(layer == self.grid.nodata, layer, layer * factor)
            arr.setflags(write=False)
            scaled[k] = arr
        return self.copy(update={"cost_layers": scaled})

    def with_current_classes(self, current: np.ndarray) -> "Scenario":
        arr = np.array(current, dtype=np.int64)
        arr.setflags(write=False)
        return self.copy(update={"current_classes": arr})
