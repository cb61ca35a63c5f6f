import math

import numpy as np
import pytest

from animetric.stats import align_dimension, cohen_kappa, spearman_rho, win_rate


# --- independent oracles -------------------------------------------------

def rank_by_sort(values):
    """Average ranks via O(n^2) counting, independent of scipy."""
    ranks = []
    for v in values:
        less = sum(1 for w in values if w < v)
        equal = sum(1 for w in values if w == v)
        ranks.append(less + (equal + 1) / 2.0)
    return ranks


def pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y)) / n
    vx = sum((a - mx) ** 2 for a in x) / n
    vy = sum((b - my) ** 2 for b in y) / n
    if vx == 0 or vy == 0:
        return float("nan")
    return cov / math.sqrt(vx * vy)


def spearman_oracle(x, y):
    return pearson(rank_by_sort(x), rank_by_sort(y))


def kappa_oracle(a, b):
    n = len(a)
    table = {}
    for la, lb in zip(a, b):
        table[(la, lb)] = table.get((la, lb), 0) + 1
    labels = set(a) | set(b)
    p_o = sum(table.get((lab, lab), 0) for lab in labels) / n
    p_e = 0.0
    for lab in labels:
        row = sum(v for (la, _), v in table.items() if la == lab) / n
        col = sum(v for (_, lb), v in table.items() if lb == lab) / n
        p_e += row * col
    if p_e >= 1.0 - 1e-15:
        return float("nan")
    return (p_o - p_e) / (1.0 - p_e)


# --- win_rate -------------------------------------------------------------

def test_win_rate_examples():
    assert win_rate(["win", "loss", "tie"]) == pytest.approx(0.5)
    assert win_rate(["win"] * 7) == 1.0
    assert win_rate(["tie"] * 3) == 0.5


def test_win_rate_empty_and_unknown():
    with pytest.raises(ValueError):
        win_rate([])
    with pytest.raises(ValueError, match="draw"):
        win_rate(["win", "draw"])


def test_win_rate_mirror_property():
    rng = np.random.default_rng(3)
    swap = {"win": "loss", "loss": "win", "tie": "tie"}
    for _ in range(50):
        outcomes = list(rng.choice(["win", "loss", "tie"], size=rng.integers(1, 20)))
        mirrored = [swap[o] for o in outcomes]
        assert win_rate(outcomes + mirrored) == pytest.approx(0.5)


# --- spearman_rho -----------------------------------------------------------

def test_spearman_examples():
    assert spearman_rho([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    assert spearman_rho([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


def test_spearman_errors_and_undefined():
    with pytest.raises(ValueError):
        spearman_rho([1], [2])
    with pytest.raises(ValueError):
        spearman_rho([1, 2], [1, 2, 3])
    assert math.isnan(spearman_rho([5, 5, 5], [1, 2, 3]))


def test_spearman_against_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = int(rng.integers(2, 11))
        # Integer draws make ties common enough to exercise average ranks.
        x = rng.integers(0, 5, size=n).astype(float)
        y = rng.integers(0, 5, size=n).astype(float)
        expected = spearman_oracle(list(x), list(y))
        got = spearman_rho(x, y)
        if math.isnan(expected):
            assert math.isnan(got)
        else:
            assert got == pytest.approx(expected, abs=1e-9)


def test_spearman_monotone_transform_invariance():
    rng = np.random.default_rng(12)
    for _ in range(50):
        x = rng.normal(size=6)
        y = rng.normal(size=6)
        base = spearman_rho(x, y)
        assert spearman_rho(np.exp(x), y) == pytest.approx(base, abs=1e-12)
        assert spearman_rho(x, 3 * y + 7) == pytest.approx(base, abs=1e-12)


# --- cohen_kappa ------------------------------------------------------------

def test_kappa_examples():
    assert cohen_kappa(list("AABB"), list("AABB")) == pytest.approx(1.0)
    # p_o = 0.5 and p_e = 0.5 from the marginals
    assert cohen_kappa(list("AABB"), list("ABAB")) == pytest.approx(0.0)
    # total disagreement with symmetric marginals
    assert cohen_kappa(list("AABB"), list("BBAA")) == pytest.approx(-1.0)


def test_kappa_errors_and_undefined():
    with pytest.raises(ValueError):
        cohen_kappa(["A"], ["A", "B"])
    with pytest.raises(ValueError):
        cohen_kappa([], [])
    assert math.isnan(cohen_kappa(["A", "A"], ["A", "A"]))


def test_kappa_against_brute_force():
    rng = np.random.default_rng(13)
    for _ in range(300):
        n = int(rng.integers(1, 11))
        a = list(rng.choice(list("ABC"), size=n))
        b = list(rng.choice(list("ABC"), size=n))
        expected = kappa_oracle(a, b)
        got = cohen_kappa(a, b)
        if math.isnan(expected):
            assert math.isnan(got)
        else:
            assert got == pytest.approx(expected, abs=1e-9)


# --- alignment record -------------------------------------------------------

def test_align_dimension():
    record = align_dimension(
        "anticipation",
        bench_win_rates={"m1": 0.8, "m2": 0.2, "m3": 0.5},
        human_win_rates={"m1": 0.9, "m2": 0.1, "m3": 0.5},
        annotator_labels=[(list("AAB"), list("AAB"))],
    )
    assert record.rho == pytest.approx(1.0)
    assert record.annotator_kappas[0] == pytest.approx(1.0)


def test_align_dimension_model_mismatch():
    with pytest.raises(ValueError):
        align_dimension("d", {"m1": 0.5, "m2": 0.5}, {"m1": 0.5})
