from typing import Annotated

import numpy as np
from pydantic import BeforeValidator, PlainSerializer


def _as_float_array(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


# numpy array field that round-trips through JSON as nested lists.
# Models using it must set ``arbitrary_types_allowed=True``.
FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(lambda a: np.asarray(a).tolist(), return_type=list),
]
