"""Total generalised variation with variable (Orlicz-type) growth on pixel grids.

Setting ``MOTGV_THREADS`` caps the worker threads of the numerical backends;
it must be set before the package is first imported.
"""

import os as _os

_threads = _os.environ.get("MOTGV_THREADS", "")
if _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import *  # noqa: E402,F401,F403
from .fields import *  # noqa: E402,F401,F403
from .phi import *  # noqa: E402,F401,F403
from .orlicz import *  # noqa: E402,F401,F403
from .prox import *  # noqa: E402,F401,F403
from .grid_ops import *  # noqa: E402,F401,F403
from .tgv import *  # noqa: E402,F401,F403
from .solver import *  # noqa: E402,F401,F403
from .io import *  # noqa: E402,F401,F403
from .oracle import oracle_denoise, oracle_tgv  # noqa: E402,F401

__version__ = "0.1.0"
