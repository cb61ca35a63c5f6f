"""Human-alignment statistics: win ratios, rank correlation, annotator agreement.

Undefined statistics (zero rank variance, chance agreement of 1) are
reported as NaN rather than silently coerced to a number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

WIN_VALUES = {"win": 1.0, "loss": 0.0, "tie": 0.5}


def win_rate(outcomes: list[str]) -> float:
    """Mean preference value over outcomes mapped win=1, loss=0, tie=0.5."""
    if not outcomes:
        raise ValueError("win_rate of an empty outcome list is undefined")
    try:
        values = [WIN_VALUES[o] for o in outcomes]
    except KeyError as exc:
        raise ValueError(f"unknown outcome {exc.args[0]!r}") from None
    return float(np.mean(values))


def spearman_rho(x, y) -> float:
    """Rank correlation: average ranks for ties, then Pearson on the ranks.

    Returns NaN when either series has zero rank variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"inputs must be equal-length 1-D, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    rx = rankdata(x)
    ry = rankdata(y)
    sx = rx.std()
    sy = ry.std()
    if sx == 0.0 or sy == 0.0:
        return float("nan")
    cov = float(np.mean((rx - rx.mean()) * (ry - ry.mean())))
    return cov / (sx * sy)


def cohen_kappa(a: list, b: list) -> float:
    """Chance-corrected agreement between two label sequences.

    kappa = (p_o - p_e) / (1 - p_e) with p_e from the marginal label
    frequencies; returns NaN when p_e == 1 (both raters constant and equal).
    """
    if len(a) != len(b):
        raise ValueError(f"label lists differ in length: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise ValueError("need at least 1 paired label")
    n = len(a)
    labels = sorted(set(a) | set(b), key=str)
    index = {lab: i for i, lab in enumerate(labels)}
    table = np.zeros((len(labels), len(labels)), dtype=float)
    for la, lb in zip(a, b):
        table[index[la], index[lb]] += 1.0
    table /= n
    p_o = float(np.trace(table))
    p_e = float(np.sum(table.sum(axis=1) * table.sum(axis=0)))
    if p_e >= 1.0 - 1e-15:
        return float("nan")
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class AlignmentRecord:
    """Per-dimension agreement between benchmark scores and human preferences."""

    dimension_id: str
    bench_win_rates: dict[str, float]
    human_win_rates: dict[str, float]
    rho: float
    annotator_kappas: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name, rates in (
            ("bench", self.bench_win_rates),
            ("human", self.human_win_rates),
        ):
            for model, rate in rates.items():
                if not 0.0 <= rate <= 1.0:
                    raise ValueError(f"{name} win-rate for {model} out of [0,1]: {rate}")


def align_dimension(
    dimension_id: str,
    bench_win_rates: dict[str, float],
    human_win_rates: dict[str, float],
    annotator_labels: list[tuple[list, list]] | None = None,
) -> AlignmentRecord:
    """Correlate per-model benchmark and human win-rates for one dimension.

    ``annotator_labels`` holds (rater_a, rater_b) label-sequence pairs; each
    pair contributes one Cohen's kappa to the record.
    """
    models = sorted(bench_win_rates)
    if sorted(human_win_rates) != models:
        raise ValueError("bench and human win-rates must cover the same models")
    if len(models) < 2:
        raise ValueError("need at least 2 models to correlate")
    bench = [bench_win_rates[m] for m in models]
    human = [human_win_rates[m] for m in models]
    kappas = tuple(cohen_kappa(a, b) for a, b in (annotator_labels or []))
    return AlignmentRecord(
        dimension_id=dimension_id,
        bench_win_rates=dict(bench_win_rates),
        human_win_rates=dict(human_win_rates),
        rho=spearman_rho(bench, human),
        annotator_kappas=kappas,
    )
