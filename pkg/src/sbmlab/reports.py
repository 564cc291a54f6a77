"""Comparability reports: measured constants for two-sided bounds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import ArgumentError

__all__ = ["ComparabilityReport", "combine_reports"]


@dataclass
class ComparabilityReport:
    """Extremal density-to-envelope ratios over one grid region.

    ``inf_ratio``/``sup_ratio`` are the measured extremes of exact/envelope;
    ``c_outer`` is the smallest single constant making the two-sided bound
    envelope/c <= exact <= c * envelope hold on the region.
    """

    region: str
    inf_ratio: float
    sup_ratio: float
    witness_inf: tuple
    witness_sup: tuple
    n_points: int
    stderr: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_points > 0 and not self.inf_ratio <= self.sup_ratio:
            raise ArgumentError("inf ratio above sup ratio")
        if self.n_points > 0 and not self.inf_ratio > 0.0:
            raise ArgumentError("ratios must be positive")

    @property
    def c_outer(self) -> float:
        return max(self.sup_ratio, 1.0 / self.inf_ratio)

    @property
    def spread(self) -> float:
        return self.sup_ratio / self.inf_ratio

    def to_json(self) -> dict:
        return {
            "region": self.region,
            "inf_ratio": self.inf_ratio,
            "sup_ratio": self.sup_ratio,
            "c_outer": self.c_outer,
            "spread": self.spread,
            "witness_inf": list(self.witness_inf),
            "witness_sup": list(self.witness_sup),
            "n_points": self.n_points,
            "stderr": self.stderr,
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def combine_reports(reports: list[ComparabilityReport],
                    region: str = "all") -> ComparabilityReport:
    """Merge per-region reports into one overall report."""
    live = [r for r in reports if r.n_points > 0]
    if not live:
        raise ArgumentError("no populated regions to combine")
    lo = min(live, key=lambda r: r.inf_ratio)
    hi = max(live, key=lambda r: r.sup_ratio)
    return ComparabilityReport(
        region=region,
        inf_ratio=lo.inf_ratio,
        sup_ratio=hi.sup_ratio,
        witness_inf=lo.witness_inf,
        witness_sup=hi.witness_sup,
        n_points=sum(r.n_points for r in live),
    )
