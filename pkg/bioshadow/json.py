from typing import Any

import numpy as np
import pandas as pd
from pydantic.json import pydantic_encoder


__all__ = ["bioshadow_encoder"]


def bioshadow_encoder(o: Any) -> Any:
    if isinstance(o, np.integer):
        return int(o)
    elif isinstance(o, np.floating):
        return float(o)
    elif isinstance(o, np.ndarray):
        return o.tolist()
    elif isinstance(o, frozenset):
        # Sorted so that identical sets always serialize identically.
        return sorted(o)
    elif isinstance(o, pd.DataFrame):
        return o.to_dict(orient="records")
    else:
        return pydantic_encoder(o)
