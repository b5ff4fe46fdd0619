"""Air-time overhead of CSI acquisition and IRS reconfiguration schemes.

Every scheme's overhead is ``min(alpha, 1)`` where ``alpha`` is the share of
a coherence interval (or update period) spent on pilots or localization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence


@dataclass(frozen=True)
class OverheadParams:
    q_elements: int = 100
    n_plt: int = 3
    n_pth: int = 5
    n_grd: int = 20
    n_cbk: int = 25
    c_const: float = 1.0
    t_sym_s: float = 1.0 / 15_000
    t_coh_s: float = 0.024
    t_loc_s: float | None = None
    t_upd_s: float = 10.0
    log_base: float = 2.0

    def __post_init__(self):
        if self.t_sym_s <= 0 or self.t_coh_s <= 0:
            raise ValueError("symbol and coherence times must be positive")
        for name in ("q_elements", "n_plt", "n_pth", "n_cbk", "c_const"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.n_grd < 1:
            raise ValueError("n_grd must be at least 1")
        if self.t_loc_s is None:
            object.__setattr__(self, "t_loc_s", localization_time_bound(self))

    def with_(self, **kw) -> "OverheadParams":
        return replace(self, **kw)


def _log(x: float, base: float) -> float:
    return math.log(x) if base == math.e else math.log(x, base)


def localization_time_bound(p: OverheadParams) -> float:
    """Pilot time of sparsity-based localization, C * N_pth * log(N_grd) * T_sym."""
    return p.c_const * p.n_pth * _log(p.n_grd, p.log_base) * p.t_sym_s


def onoff_dft_alpha(p: OverheadParams) -> float:
    return p.q_elements * p.n_plt * p.t_sym_s / p.t_coh_s


def sparsity_alpha(p: OverheadParams, log_base: float | None = None) -> float:
    base = p.log_base if log_base is None else log_base
    return p.c_const * p.n_pth * _log(p.n_grd, base) * p.t_sym_s / p.t_coh_s


def codebook_alpha(p: OverheadParams) -> float:
    return p.n_cbk * p.n_plt * p.t_sym_s / p.t_coh_s


def overhead_proposed_alpha(t_loc_s, t_upd_s, n_plt, t_sym_s, t_coh_s) -> float:
    """Localization once per update period plus pilots once per coherence time."""
    if t_loc_s >= t_upd_s:
        raise ValueError("localization time must be shorter than the update period")
    return t_loc_s / t_upd_s + (t_upd_s - t_loc_s) * n_plt * t_sym_s / (t_upd_s * t_coh_s)


def proposed_alpha(p: OverheadParams) -> float:
    return overhead_proposed_alpha(p.t_loc_s, p.t_upd_s, p.n_plt, p.t_sym_s, p.t_coh_s)


def overhead_onoff_dft(p: OverheadParams) -> float:
    return min(onoff_dft_alpha(p), 1.0)


def overhead_sparsity(p: OverheadParams, log_base: float | None = None) -> float:
    return min(sparsity_alpha(p, log_base), 1.0)


def overhead_codebook(p: OverheadParams) -> float:
    return min(codebook_alpha(p), 1.0)


def overhead_proposed(p: OverheadParams) -> float:
    return min(proposed_alpha(p), 1.0)


def reconfiguration_overhead(t_loc_s: float, t_upd_s: float) -> float:
    return min(t_loc_s / t_upd_s, 1.0)


class AverageOverhead(NamedTuple):
    total: float
    reconfiguration: float


def average_overhead(traces: Sequence, p: OverheadParams) -> AverageOverhead:
    """Mean proposed-scheme overhead over traces, each at its own mean T_upd.

    A trace whose mean update period does not exceed T_loc relocalizes
    continuously and counts as full overhead.
    """
    if not traces:
        raise ValueError("need at least one trace")
    total = recon = 0.0
    for tr in traces:
        t_upd = tr.mean_t_upd_s
        if not t_upd > p.t_loc_s:
            total += 1.0
            recon += 1.0
            continue
        total += min(overhead_proposed_alpha(p.t_loc_s, t_upd, p.n_plt, p.t_sym_s, p.t_coh_s), 1.0)
        recon += reconfiguration_overhead(p.t_loc_s, t_upd)
    n = len(traces)
    return AverageOverhead(total / n, recon / n)


def comparison_table(p: OverheadParams):
    """Rows of (scheme, alpha_preclamp, overhead) for every benchmark scheme."""
    rows = [
        ("onoff_dft", onoff_dft_alpha(p)),
        ("sparsity_log2", sparsity_alpha(p, 2.0)),
        ("sparsity_ln", sparsity_alpha(p, math.e)),
        ("codebook", codebook_alpha(p)),
    ]
    if p.t_loc_s < p.t_upd_s:
        rows.append(("proposed", proposed_alpha(p)))
    return [(name, a, min(a, 1.0)) for name, a in rows]
