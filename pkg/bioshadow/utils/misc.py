from typing import List
from typing import Tuple

import numpy as np


def block_shape(rows: int, cols: int, factor: int) -> Tuple[int, int]:
    """Number of decision blocks along each axis; edge blocks may be partial."""
    return -(-rows // factor), -(-cols // factor)


def block_ids(rows: int, cols: int, factor: int) -> np.ndarray:
    """Row-major decision-block id of every cell of a ``rows x cols`` grid."""
    _, block_cols = block_shape(rows, cols, factor)
    r = np.arange(rows) // factor
    c = np.arange(cols) // factor
    return r[:, None] * block_cols + c[None, :]


def even_chunks(n: int, parts: int) -> List[Tuple[int, int]]:
    """Split ``range(n)`` into at most ``parts`` contiguous, nearly equal ``(start, stop)`` ranges."""
    if n <= 0:
        return []
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
