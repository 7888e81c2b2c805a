import json

import numpy as np
import pandas as pd
import pytest

from bioshadow.json import bioshadow_encoder
from bioshadow.sar import ZConfig
from bioshadow.types import ClassCodes


@pytest.mark.parametrize(
    ["input", "expected_output"],
    [
        (np.int64(7), "7"),
        (np.float64(0.25), "0.25"),
        (np.array([[1, 2], [3, 4]]), "[[1, 2], [3, 4]]"),
        (frozenset({1402, 100, 1401}), "[100, 1401, 1402]"),
        (ClassCodes.validate("1401|100"), "[100, 1401]"),
        (ZConfig(), '{"z_central": 0.25, "z_low": 0.15, "z_high": 0.35}'),
        (
            pd.DataFrame([{"step": 1, "cell_id": 4}, {"step": 2, "cell_id": 0}]),
            '[{"step": 1, "cell_id": 4}, {"step": 2, "cell_id": 0}]'
        )
    ]
)
def test_encoding(input, expected_output):
    output = json.dumps(input, default=bioshadow_encoder)
    assert output == expected_output


def test_encoding_unknown_type():
    with pytest.raises(TypeError):
        json.dumps(object(), default=bioshadow_encoder)
