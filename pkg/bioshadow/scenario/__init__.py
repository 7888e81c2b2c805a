# flake8: noqa: F401
from bioshadow.scenario.costs import rent_to_asset
from bioshadow.scenario.habitat import SpeciesHabitat
from bioshadow.scenario.habitat import derive_species_states
from bioshadow.scenario.io import load_scenario
from bioshadow.scenario.io import save_scenario
from bioshadow.scenario.model import GridSpec
from bioshadow.scenario.model import Scenario
from bioshadow.scenario.model import SpeciesSpec
from bioshadow.scenario.model import TechnologySpec
from bioshadow.scenario.synthetic import SyntheticParams
from bioshadow.scenario.synthetic import gen_synthetic
from bioshadow.scenario.validation import ValidationReport
from bioshadow.scenario.validation import validate
