"""Default tolerances and budgets.

Every default can be overridden through an environment variable named
``SEPPRES_<NAME>`` (for example ``SEPPRES_SR_TOL=1e-10``). Overrides are read
once at import time.
"""

import os

_DEFAULTS = {
    # relative threshold on Schmidt coefficients (against the largest one)
    "SR_TOL": 1e-8,
    # second operator-Schmidt coefficient over the first
    "REALIGN_TOL": 1e-7,
    # condition-number gate for results that assume invertibility
    "COND_BOUND": 1e6,
    "PRESERVE_TOL": 1e-8,
    "KRAUS_TOL": 1e-10,
    "PARALLEL_TOL": 1e-8,
    "SEESAW_RESTARTS": 50,
    "SEESAW_MAX_ITERS": 500,
    "SEESAW_TOL": 1e-12,
    "GME_RESTARTS": 20,
    "GME_MAX_ITERS": 300,
    "GME_TOL": 1e-12,
    "PRESERVE_SAMPLES": 200,
}


def _read(name, default):
    raw = os.environ.get(f"SEPPRES_{name}")
    if raw is None:
        return default
    return type(default)(float(raw)) if isinstance(default, int) else float(raw)


SR_TOL = _read("SR_TOL", _DEFAULTS["SR_TOL"])
REALIGN_TOL = _read("REALIGN_TOL", _DEFAULTS["REALIGN_TOL"])
COND_BOUND = _read("COND_BOUND", _DEFAULTS["COND_BOUND"])
PRESERVE_TOL = _read("PRESERVE_TOL", _DEFAULTS["PRESERVE_TOL"])
KRAUS_TOL = _read("KRAUS_TOL", _DEFAULTS["KRAUS_TOL"])
PARALLEL_TOL = _read("PARALLEL_TOL", _DEFAULTS["PARALLEL_TOL"])
SEESAW_RESTARTS = _read("SEESAW_RESTARTS", _DEFAULTS["SEESAW_RESTARTS"])
SEESAW_MAX_ITERS = _read("SEESAW_MAX_ITERS", _DEFAULTS["SEESAW_MAX_ITERS"])
SEESAW_TOL = _read("SEESAW_TOL", _DEFAULTS["SEESAW_TOL"])
GME_RESTARTS = _read("GME_RESTARTS", _DEFAULTS["GME_RESTARTS"])
GME_MAX_ITERS = _read("GME_MAX_ITERS", _DEFAULTS["GME_MAX_ITERS"])
GME_TOL = _read("GME_TOL", _DEFAULTS["GME_TOL"])
PRESERVE_SAMPLES = _read("PRESERVE_SAMPLES", _DEFAULTS["PRESERVE_SAMPLES"])


def snapshot():
    """Current effective defaults, for echoing into reports."""
    return {name.lower(): globals()[name] for name in _DEFAULTS}
