"""Default numerical tolerances.

Each default can be overridden at import time through an environment
variable:

==================  =======================  =======
variable            meaning                  default
==================  =======================  =======
TRILEMMA_TOL_PSD    psd eigenvalue slack     1e-9
TRILEMMA_TOL_STRICT strict positivity floor  1e-9
TRILEMMA_TOL_RANK   relative Choi rank cut   1e-8
TRILEMMA_P_FLOOR    posterior division floor 1e-12
==================  =======================  =======
"""

import os

MIN_TOLERANCE = 1e-12


def _from_env(name, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    value = float(raw)
    if not value >= MIN_TOLERANCE:
        raise ValueError(f"{name}={raw!r} must be >= {MIN_TOLERANCE}")
    return value


TOL_PSD = _from_env("TRILEMMA_TOL_PSD", 1e-9)
TOL_STRICT = _from_env("TRILEMMA_TOL_STRICT", 1e-9)
TOL_RANK = _from_env("TRILEMMA_TOL_RANK", 1e-8)
P_FLOOR = _from_env("TRILEMMA_P_FLOOR", 1e-12)

# equality of operators built by different routes
TOL_EQ = 1e-9
# Hermiticity residual accepted at input boundaries
TOL_HERM = 1e-12
