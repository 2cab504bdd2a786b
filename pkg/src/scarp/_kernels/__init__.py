"""Kernel backend selection.

The compiled extension (``_core``, built from Cython) is used when it
imported cleanly; otherwise the pure-Python twin takes over.  Set
``SCARP_KERNEL=pure`` to force the fallback, ``SCARP_KERNEL=compiled`` to
require the extension.  Both backends implement the same functions with
bit-identical results.
"""

from __future__ import annotations

import os

from . import pure

_FORCE = os.environ.get("SCARP_KERNEL", "").lower()
_impl = pure
_BACKEND = "pure"

if _FORCE not in ("pure", "py", "python"):
    try:
        from . import _core as _compiled  # type: ignore[attr-defined]

        _impl = _compiled
        _BACKEND = "compiled"
    except ImportError:
        if _FORCE in ("compiled", "c"):
            raise


def backend_name() -> str:
    return _BACKEND


def available_backends() -> dict[str, object]:
    out: dict[str, object] = {"pure": pure}
    try:
        from . import _core  # type: ignore[attr-defined]

        out["compiled"] = _core
    except ImportError:
        pass
    return out


phi = _impl.phi
failure_prob = _impl.failure_prob
seq_stats = _impl.seq_stats
split = _impl.split
trip_stats = _impl.trip_stats
poisson_binomial_tail = _impl.poisson_binomial_tail
objective_value = _impl.objective_value
split_value = _impl.split_value
ox_child = _impl.ox_child
execute_batch = _impl.execute_batch
local_search = _impl.local_search
