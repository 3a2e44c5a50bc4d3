"""Hot-path kernels: rule masks, max-debt selection and ledger updates.

The numba build is used when numba imports cleanly; set
``UNISON_SIM_NO_JIT=1`` to force the pure-numpy path.  Both modules expose the
same functions and are checked against each other in the test suite.
"""

import os

from . import _numpy

BACKEND = "numpy"
_impl = _numpy

if os.environ.get("UNISON_SIM_NO_JIT", "").strip().lower() not in ("1", "true", "yes"):
    try:
        from . import _jit as _impl  # noqa: F811

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba missing
        _impl = _numpy

N_RULES = 10
guard_mask = _impl.guard_mask
command = _impl.command
enabled_masks = _impl.enabled_masks
refresh_around = _impl.refresh_around
bad_edges = _impl.bad_edges
fair_select = _impl.fair_select
max_enabled_debt = _impl.max_enabled_debt
commit = _impl.commit
fair_step = _impl.fair_step

__all__ = [
    "BACKEND",
    "N_RULES",
    "guard_mask",
    "command",
    "enabled_masks",
    "refresh_around",
    "bad_edges",
    "fair_select",
    "max_enabled_debt",
    "commit",
    "fair_step",
]
