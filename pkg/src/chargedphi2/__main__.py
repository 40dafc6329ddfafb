"""`python -m chargedphi2` entry: pin thread counts before numerics load."""

import os
import sys

_threads = os.environ.get("CHARGEDPHI2_THREADS")
if _threads:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, _threads)

from .cli import main  # noqa: E402

sys.exit(main())
