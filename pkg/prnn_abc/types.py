import typing

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]
ReferenceTriple = typing.Tuple[float, float, float]
Overrides = typing.Dict[str, typing.Any]
Grid = typing.Mapping[str, typing.Sequence[float]]
