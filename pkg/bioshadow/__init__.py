# flake8: noqa: F401
"""Target-compatible biodiversity shadow prices from marginal restoration cost curves."""

__version__ = "0.1.0"

from . import prioritizer
from . import scenario
from .cba import ProjectFootprint
from .cba import price_project
from .cba import project_delta_index
from .core import ShadowPricer
from .curve import MbrcCurve
from .curve import ShadowPriceQuote
from .curve import build_curve
from .curve import shadow_price
from .curve import sweep_z
from .prioritizer import PrioritizerMode
from .prioritizer import build_sequence
from .sar import ZConfig
from .scenario import gen_synthetic
from .scenario import load_scenario
from .scenario import save_scenario
