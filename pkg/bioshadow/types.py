from typing import Any
from typing import Dict
from typing import Iterable

import numpy as np
from pydantic import BaseConfig
from pydantic.fields import ModelField


__all__ = ["ClassCodes", "Raster", "ClassRaster", "ValueRaster"]


CLASS_CODE_SEPARATOR = "|"


class ClassCodes(frozenset):
    """A set of integer habitat class codes.

    Accepts ``"100|1401"``, a single integer, or any iterable of integers.
    """

    @classmethod
    def __modify_schema__(cls, field_schema: Dict[str, Any]) -> None:
        field_schema.update(type="array", items={"type": "integer"}, uniqueItems=True)

    @classmethod
    def __get_validators__(cls):
        yield cls.validate

    @classmethod
    def validate(cls, value: Any, field: ModelField = None, config: BaseConfig = None) -> "ClassCodes":
        if value.__class__ == cls:
            return value

        if isinstance(value, str):
            parts = [p.strip() for p in value.split(CLASS_CODE_SEPARATOR)]
            items = [p for p in parts if p]
        elif isinstance(value, (int, np.integer)):
            items = [value]
        elif isinstance(value, Iterable):
            items = list(value)
        else:
            raise ValueError(f"Cannot interpret {value!r} as a set of class codes")

        codes = []
        for item in items:
            if isinstance(item, float) and not item.is_integer():
                raise ValueError(f"Class code {item!r} is not an integer")
            try:
                codes.append(int(item))
            except (TypeError, ValueError):
                raise ValueError(f"Class code {item!r} is not an integer")
        return cls(codes)

    def to_text(self) -> str:
        return CLASS_CODE_SEPARATOR.join(str(c) for c in sorted(self))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({sorted(self)!r})"


class Raster:
    """Read-only 2-D numpy array; subclasses fix the dtype."""
    dtype: Any = np.float64

    @classmethod
    def __modify_schema__(cls, field_schema: Dict[str, Any]) -> None:
        field_schema.update(type="array", items={"type": "array"})

    @classmethod
    def __get_validators__(cls):
        yield cls.validate

    @classmethod
    def validate(cls, value: Any, field: ModelField = None, config: BaseConfig = None) -> np.ndarray:
        try:
            arr = np.array(value, dtype=cls.dtype)
        except (TypeError, ValueError) as e:
            raise ValueError(f"Cannot convert value to a {np.dtype(cls.dtype).name} raster: {e}")
        if arr.ndim != 2:
            raise ValueError(f"Raster must be 2-dimensional, got {arr.ndim} dimension(s)")
        arr.setflags(write=False)
        return arr


class ClassRaster(Raster):
    dtype = np.int64


class ValueRaster(Raster):
    dtype = np.float64
