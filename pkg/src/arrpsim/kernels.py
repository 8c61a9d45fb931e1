"""Insertion-kernel selector: compiled extension when available, else Python twin."""

from __future__ import annotations

import logging

log = logging.getLogger(__name__)

try:
    from arrpsim import _insertion_c as _impl
    if not hasattr(_impl, "best_insertions"):
        raise ImportError("stale extension build")
    COMPILED = True
except ImportError:  # extension not built; the pure twin is slower but identical
    from arrpsim import _insertion_py as _impl
    COMPILED = False
    log.info("compiled insertion kernel unavailable, using pure-Python fallback")

best_insertions = _impl.best_insertions
evaluate_insertion = _impl.evaluate_insertion


def fleet_arrays(fleet):
    """The packed schedule arrays in the order the kernels take them."""
    return (fleet.s_node, fleet.s_kind, fleet.s_e, fleet.s_l, fleet.s_a, fleet.s_t,
            fleet.s_pair, fleet.s_alpha, fleet.s_tdir, fleet.s_D, fleet.s_q,
            fleet.s_occ_after, fleet.sched_len, fleet.onboard_q)
