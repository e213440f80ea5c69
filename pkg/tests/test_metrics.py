from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prosotag.core import Boundary, Emphasis, LabelCombination, Prototype
from prosotag.metrics import (
    LabeledPair,
    MetricsError,
    binary_scores,
    cohens_kappa,
    emphasis_metrics,
    evaluate_predictions,
    prototype_eval,
    segmentation_metrics,
)

from oracles import kappa_oracle, prf_oracle

B, I = Boundary.B, Boundary.I
CM, PD, QU = Prototype.CONTINUATION, Prototype.CONCLUSION, \
    Prototype.REQUEST_FOR_RESPONSE
E, N = Emphasis.EMPHASIZED, Emphasis.NONE


def pair(i: int, gold: tuple, pred: tuple) -> LabeledPair:
    return LabeledPair(LabelCombination(*gold), LabelCombination(*pred),
                       i, i == 0)


class TestCohensKappa:
    def test_perfect_agreement_mixed_categories(self):
        gold = ["a", "b", "c", "a", "b"]
        assert cohens_kappa(gold, list(gold)) == 1.0

    def test_constructed_point_six(self):
        # 2x2 table with p_o = 0.8 and p_e = 0.5:
        # kappa = (0.8 - 0.5) / (1 - 0.5) = 0.6
        gold = ["a"] * 5 + ["b"] * 5
        pred = ["a", "a", "a", "a", "b", "a", "b", "b", "b", "b"]
        assert cohens_kappa(gold, pred) == pytest.approx(0.6, abs=1e-12)

    def test_degenerate_single_category(self):
        assert cohens_kappa(["x", "x"], ["x", "x"]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(MetricsError, match="length"):
            cohens_kappa(["a"], ["a", "b"])
        with pytest.raises(MetricsError, match="empty"):
            cohens_kappa([], [])

    def test_matches_bruteforce_oracle_on_random_lists(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            n = int(rng.integers(2, 200))
            gold = [f"c{k}" for k in rng.integers(0, 3, n)]
            pred = [f"c{k}" for k in rng.integers(0, 3, n)]
            assert cohens_kappa(gold, pred) == pytest.approx(
                kappa_oracle(gold, pred), abs=1e-12)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(7)
        gold = [f"c{k}" for k in rng.integers(0, 3, 100)]
        pred = [f"c{k}" for k in rng.integers(0, 3, 100)]
        base = cohens_kappa(gold, pred)
        for perm in itertools.permutations("012"):
            mapping = {f"c{i}": f"r{p}" for i, p in enumerate(perm)}
            assert cohens_kappa([mapping[g] for g in gold],
                                [mapping[p] for p in pred]) == \
                pytest.approx(base, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("abc")),
                min_size=1, max_size=80))
def test_property_kappa_bounds_and_oracle(pairs):
    gold = [g for g, _ in pairs]
    pred = [p for _, p in pairs]
    k = cohens_kappa(gold, pred)
    assert -1.0 - 1e-12 <= k <= 1.0 + 1e-12
    assert k == pytest.approx(kappa_oracle(gold, pred), abs=1e-12)
    assert cohens_kappa(gold, gold) == pytest.approx(1.0)


def test_binary_scores_match_oracle():
    rng = np.random.default_rng(3)
    gold = ["e" if x else "n" for x in rng.integers(0, 2, 300)]
    pred = ["e" if x else "n" for x in rng.integers(0, 2, 300)]
    s = binary_scores(gold, pred, "e")
    precision, recall, f1, accuracy = prf_oracle(gold, pred, "e")
    assert s.precision == pytest.approx(precision, abs=1e-12)
    assert s.recall == pytest.approx(recall, abs=1e-12)
    assert s.f1 == pytest.approx(f1, abs=1e-12)
    assert s.accuracy == pytest.approx(accuracy, abs=1e-12)
    assert s.kappa == pytest.approx(kappa_oracle(gold, pred), abs=1e-12)


class TestSegmentation:
    def test_all_correct_both_variants(self):
        pairs = [pair(0, (B, CM, N), (B, CM, N)),
                 pair(1, (I, CM, N), (I, CM, N)),
                 pair(0, (B, PD, N), (B, PD, N)),
                 pair(1, (I, PD, N), (I, PD, N))]
        assert segmentation_metrics(pairs, True).kappa == 1.0
        assert segmentation_metrics(pairs, False).kappa == 1.0

    def test_wos_drops_exactly_one_pair_per_turn(self):
        pairs = [pair(i % 3, (B if i % 3 == 0 else I, CM, N),
                      (B, CM, N)) for i in range(9)]
        full = segmentation_metrics(pairs, True)
        wos = segmentation_metrics(pairs, False)
        assert full.n - wos.n == 3  # three turns

    def test_only_turn_initial_correct_wos_drops_kappa(self):
        # Turn-initial words agree (B); every other word is flipped.
        pairs = []
        for _ in range(4):
            pairs.append(pair(0, (B, CM, N), (B, CM, N)))
            pairs.append(pair(1, (I, CM, N), (B, CM, N)))
            pairs.append(pair(2, (B, CM, N), (I, CM, N)))
        full = segmentation_metrics(pairs, True)
        wos = segmentation_metrics(pairs, False)
        assert wos.kappa <= full.kappa
        assert wos.kappa == pytest.approx(-1.0)  # perfectly anti-correlated rest

    def test_empty_after_filtering(self):
        with pytest.raises(MetricsError):
            segmentation_metrics([pair(0, (B, CM, N), (B, CM, N))], False)


class TestEmphasis:
    def test_all_correct(self):
        pairs = [pair(i, (B if i == 0 else I, CM, E if i % 2 else N),
                      (B if i == 0 else I, CM, E if i % 2 else N))
                 for i in range(6)]
        scores = emphasis_metrics(pairs)
        assert scores.accuracy == 1.0
        assert scores.kappa == 1.0

    def test_flipped_balanced_set_kappa_minus_one(self):
        pairs = []
        for i in range(10):
            gold = E if i < 5 else N
            flipped = N if gold is E else E
            pairs.append(pair(i, (B if i == 0 else I, CM, gold),
                              (B if i == 0 else I, CM, flipped)))
        assert emphasis_metrics(pairs).kappa == pytest.approx(-1.0)


def five_iu_turn(missed_boundary_at: int = -1) -> list[LabeledPair]:
    """One turn of five 2-word IUs; optionally miss one predicted B."""
    pairs = []
    protos = [CM, PD, CM, QU, PD]
    for k in range(5):
        for j in range(2):
            i = 2 * k + j
            gold_b = B if j == 0 else I
            pred_b = gold_b
            if i == missed_boundary_at:
                pred_b = I
            pairs.append(pair(i, (gold_b, protos[k], N),
                              (pred_b, protos[k], N)))
    return pairs


class TestPrototypeEval:
    def test_oracle_predictions_full_coverage(self):
        report = prototype_eval(five_iu_turn())
        assert report.coverage == 1.0
        assert report.kappa == 1.0
        assert report.n_ius == 5
        assert report.first_last_agreement == 1.0
        for scores in report.per_class.values():
            assert scores.accuracy == 1.0

    def test_missed_boundary_excludes_iu_and_neighbor(self):
        # Missing the predicted B at word 4 (start of the third IU)
        # fails the third IU's left edge and the second IU's right edge;
        # the remaining three IUs stay well-identified.
        report = prototype_eval(five_iu_turn(missed_boundary_at=4))
        assert report.n_well_identified == 3
        assert report.coverage == pytest.approx(3 / 5)

    def test_spurious_internal_boundary_breaks_span_match(self):
        pairs = five_iu_turn()
        broken = pairs[3]  # word 3 = second word of the second IU
        pairs[3] = LabeledPair(broken.gold,
                               LabelCombination(B, broken.pred.prototype, N),
                               broken.index, broken.turn_initial)
        report = prototype_eval(pairs)
        # The second IU gains an internal B (span mismatch); its
        # neighbor's edges are intact since word 4's B is still there.
        assert report.n_well_identified == 4

    def test_last_word_wins_on_disagreement(self):
        pairs = [pair(0, (B, QU, N), (B, CM, N)),
                 pair(1, (I, QU, N), (I, QU, N))]
        report = prototype_eval(pairs)
        assert report.n_well_identified == 1
        assert report.kappa == 1.0  # last word's QU matches gold
        assert report.first_last_agreement == 0.0

    def test_no_well_identified_error(self):
        pairs = [pair(0, (B, CM, N), (I, CM, N))]
        with pytest.raises(MetricsError, match="well-identified"):
            prototype_eval(pairs)

    def test_per_class_matches_oracle(self):
        rng = np.random.default_rng(11)
        pairs = []
        protos = list(Prototype)
        for t in range(40):
            n = int(rng.integers(1, 4))
            for k in range(n):
                proto = protos[int(rng.integers(3))]
                pred_proto = protos[int(rng.integers(3))]
                pairs.append(pair(k, (B, proto, N), (B, pred_proto, N)))
        report = prototype_eval(pairs)
        gold = []
        pred = []
        for p in pairs:  # single-word IUs: every one is well-identified
            gold.append(p.gold.prototype.value)
            pred.append(p.pred.prototype.value)
        assert report.kappa == pytest.approx(kappa_oracle(gold, pred), abs=1e-12)
        for code in ("cm", "pd", "qu"):
            g = [x if x == code else "rest" for x in gold]
            q = [x if x == code else "rest" for x in pred]
            expected = prf_oracle(g, q, code)
            got = report.per_class[code]
            assert (got.precision, got.recall, got.f1, got.accuracy) == \
                pytest.approx(expected, abs=1e-12)


def test_evaluate_predictions_composite():
    pairs = five_iu_turn()
    report = evaluate_predictions(pairs)
    assert report.segmentation.kappa == 1.0
    assert report.segmentation_wos.n == report.segmentation.n - 1
    assert report.emphasis.accuracy == 1.0
    assert report.prototype.coverage == 1.0
