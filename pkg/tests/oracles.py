"""Brute-force scoring oracles for cross-checking the metrics module.

Everything here is computed the slow, obvious way from an explicit
contingency table; the production implementations must agree to 1e-12.
"""

from __future__ import annotations


def contingency(gold, pred):
    cats = sorted(set(gold) | set(pred))
    table = {(g, p): 0 for g in cats for p in cats}
    for g, p in zip(gold, pred):
        table[(g, p)] += 1
    return cats, table


def kappa_oracle(gold, pred) -> float:
    cats, table = contingency(gold, pred)
    n = len(gold)
    p_o = sum(table[(c, c)] for c in cats) / n
    row = {c: sum(table[(c, p)] for p in cats) for c in cats}
    col = {c: sum(table[(g, c)] for g in cats) for c in cats}
    p_e = sum(row[c] * col[c] for c in cats) / (n * n)
    if p_e >= 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def prf_oracle(gold, pred, positive) -> tuple[float, float, float, float]:
    """(precision, recall, f1, accuracy) for one positive class."""
    cats, table = contingency(gold, pred)
    tp = table.get((positive, positive), 0)
    fp = sum(table.get((g, positive), 0) for g in cats if g != positive)
    fn = sum(table.get((positive, p), 0) for p in cats if p != positive)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = sum(table[(c, c)] for c in cats) / len(gold)
    return precision, recall, f1, accuracy
