"""Finite-field trace functions, complete exponential sums and bilinear forms.

Hot kernels are compiled with numba when available; set
``EXPSUMS_BACKEND=numpy`` to force the pure-numpy path.
"""

__version__ = "0.1.0"

from ._accel import BACKEND  # noqa: E402
from .errors import ExpSumsError  # noqa: E402

__all__ = ["BACKEND", "ExpSumsError", "__version__"]
