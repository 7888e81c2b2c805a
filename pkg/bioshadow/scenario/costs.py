from typing import Union

import numpy as np

from bioshadow.exceptions import DomainError


__all__ = ["DEFAULT_DISCOUNT_RATE", "rent_to_asset", "rent_raster_to_asset"]


DEFAULT_DISCOUNT_RATE = 0.05


def rent_to_asset(annual_rent: Union[float, np.ndarray], discount_rate: float = DEFAULT_DISCOUNT_RATE):
    """Present value of a perpetual annual rent, ``rent / rate``."""
    if not discount_rate > 0:
        raise DomainError(f"discount_rate must be positive, got {discount_rate!r}")
    return annual_rent / discount_rate


def rent_raster_to_asset(rent: np.ndarray, nodata: float, discount_rate: float = DEFAULT_DISCOUNT_RATE) -> np.ndarray:
    """Convert a rent raster cell-by-cell, leaving NODATA cells untouched."""
    rent = np.asarray(rent, dtype=np.float64)
    return np.where(rent == nodata, rent, rent_to_asset(rent, discount_rate))
