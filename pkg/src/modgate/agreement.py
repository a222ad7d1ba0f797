"""Krippendorff's alpha for nominal data with missing cells.

Each unit with m >= 2 recorded values contributes every ordered value pair
with weight 1/(m-1) to a coincidence matrix; alpha = 1 - D_o/D_e where D_o
sums observed off-diagonal coincidences and D_e the chance-expected ones.
Computed in exact rationals so alpha is exactly 1 under zero disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .domain import AnnotationMatrix
from .errors import DegenerateAgreement, NoPairableValues


@dataclass(frozen=True)
class AgreementReport:
    alpha: float
    n_pairable: int
    units_used: int
    units_dropped: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "n_pairable": self.n_pairable,
            "units_used": self.units_used,
            "units_dropped": self.units_dropped,
        }


def krippendorff_alpha(am: AnnotationMatrix) -> AgreementReport:
    pairable = {}
    dropped = 0
    for unit in am.units:
        values = am.unit_values(unit)
        if len(values) >= 2:
            pairable[unit] = values
        else:
            dropped += 1
    if not pairable:
        raise NoPairableValues("no unit has two or more recorded values")

    labels = sorted({v for values in pairable.values() for v in values})
    index = {label: i for i, label in enumerate(labels)}
    size = len(labels)
    coincidence = [[Fraction(0)] * size for _ in range(size)]
    for values in pairable.values():
        m = len(values)
        weight = Fraction(1, m - 1)
        for i in range(m):
            for j in range(m):
                if i != j:
                    coincidence[index[values[i]]][index[values[j]]] += weight

    marginals = [sum(row) for row in coincidence]
    n = sum(marginals)
    observed = sum(
        coincidence[c][k] for c in range(size) for k in range(size) if c != k
    ) / n
    expected = sum(
        marginals[c] * marginals[k] for c in range(size) for k in range(size) if c != k
    ) / (n * (n - 1))
    if expected == 0:
        raise DegenerateAgreement(
            "all pairable values share one label; alpha is undefined"
        )
    alpha = 1 - observed / expected
    return AgreementReport(
        alpha=float(alpha),
        n_pairable=int(n),
        units_used=len(pairable),
        units_dropped=dropped,
    )
