"""Voting, sharding, and combined-model training."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgevote.ensemble import (
    EmptyMemberList,
    Ensemble,
    UnknownAlgorithm,
    UnnormalizedInput,
    VotingMode,
    dumps_ensemble,
    ensemble_from_dict,
    ensemble_predict,
    ensemble_predict_batch,
    ensemble_to_dict,
    hard_vote,
    loads_ensemble,
    member_seeds,
    parse_combo,
    shard_indices,
    soft_vote,
    train_sharded,
    train_whole_data,
)
from edgevote.models import evaluate
from helpers import fast_hp

probs_strategy = st.lists(
    st.floats(min_value=0.0, max_value=1.0, allow_nan=False).map(
        lambda p: (1.0 - p, p)
    ),
    min_size=2,
    max_size=9,
)


class TestHardVote:
    def test_majority_one(self):
        p = hard_vote([1, 1, 0], [(0.2, 0.8), (0.3, 0.7), (0.6, 0.4)])
        assert p.label == 1
        assert p.probs == (1 / 3, 2 / 3)

    def test_majority_zero(self):
        p = hard_vote([0, 0, 0], [(0.6, 0.4), (0.7, 0.3), (0.8, 0.2)])
        assert p.label == 0
        assert p.probs == (1.0, 0.0)

    def test_tie_falls_back_to_soft(self):
        p = hard_vote([1, 0], [(0.1, 0.9), (0.6, 0.4)])
        # soft sums: class0 0.7, class1 1.3
        assert p.label == 1
        assert p.probs == (0.35, 0.65)

    def test_single_member_rejected(self):
        with pytest.raises(EmptyMemberList):
            hard_vote([1], [(0.1, 0.9)])

    @given(st.lists(st.booleans(), min_size=3, max_size=9).filter(lambda v: len(v) % 2 == 1))
    def test_odd_member_count_never_ties(self, votes):
        labels = [int(v) for v in votes]
        probs = [(0.5, 0.5)] * len(labels)
        p = hard_vote(labels, probs)
        majority = 1 if sum(labels) * 2 > len(labels) else 0
        assert p.label == majority


class TestSoftVote:
    def test_high_confidence_wins(self):
        p = soft_vote([(0.1, 0.9), (0.8, 0.2)])
        assert p.label == 1
        assert p.probs == (0.45, 0.55)

    def test_identical_members_idempotent(self):
        p = soft_vote([(0.3, 0.7)] * 5)
        assert p.probs == (0.3, 0.7)
        assert p.label == 1

    def test_exact_tie_resolves_to_zero(self):
        p = soft_vote([(0.4, 0.6), (0.6, 0.4)])
        assert p.label == 0
        assert p.probs == (0.5, 0.5)

    def test_unnormalized_rejected(self):
        with pytest.raises(UnnormalizedInput):
            soft_vote([(0.5, 0.6), (0.5, 0.5)])

    def test_empty_rejected(self):
        with pytest.raises(EmptyMemberList):
            soft_vote([])

    @given(probs_strategy)
    def test_permutation_invariance(self, probs):
        rng = np.random.default_rng(0)
        base = soft_vote(probs)
        for _ in range(5):
            shuffled = [probs[i] for i in rng.permutation(len(probs))]
            assert soft_vote(shuffled) == base

    @given(probs_strategy)
    def test_output_is_valid_prediction(self, probs):
        p = soft_vote(probs)
        assert 0.0 <= p.probs[0] <= 1.0
        assert abs(sum(p.probs) - 1.0) <= 1e-9


class TestOneHotAgreement:
    def test_soft_equals_hard_on_one_hot_members(self):
        for bits in range(8):
            labels = [(bits >> i) & 1 for i in range(3)]
            probs = [(0.0, 1.0) if lab else (1.0, 0.0) for lab in labels]
            assert soft_vote(probs).label == hard_vote(labels, probs).label


class TestCombos:
    def test_parse(self):
        assert parse_combo("svm-dt-lr") == ("svm", "dt", "lr")
        assert parse_combo("rf-svm-lr") == ("rf", "svm", "lr")

    def test_unknown_algorithm(self):
        with pytest.raises(UnknownAlgorithm):
            parse_combo("svm-xgb-lr")


class TestShards:
    def test_pima_train_sizes(self):
        shards = shard_indices(375, 3, seed=0)
        assert tuple(len(s) for s in shards) == (125, 125, 125)

    def test_disjoint_cover_with_remainder(self):
        shards = shard_indices(101, 3, seed=4)
        sizes = [len(s) for s in shards]
        assert sizes == [34, 34, 33]
        flat = [i for s in shards for i in s]
        assert sorted(flat) == list(range(101))

    def test_deterministic(self):
        assert shard_indices(50, 4, seed=7) == shard_indices(50, 4, seed=7)
        assert shard_indices(50, 4, seed=7) != shard_indices(50, 4, seed=8)

    def test_member_seeds_distinct(self):
        seeds = member_seeds(0, 3)
        assert len(set(seeds)) == 3
        assert member_seeds(0, 3) == seeds


@pytest.fixture(scope="module")
def trained(prepared):
    hp = fast_hp(seed=2)
    return train_sharded(
        parse_combo("svm-dt-lr"),
        prepared["Xtr"], prepared["ytr"], hp, 2,
        prepared["Xva"], prepared["yva"],
    )


class TestTraining:
    def test_member_kinds_follow_combo(self, trained):
        assert tuple(m.kind for m in trained.members) == ("svm", "tree", "logreg")
        assert trained.combo_name == "svm-dt-lr"

    def test_whole_data_beats_chance(self, prepared):
        ens = train_whole_data(
            parse_combo("svm-dt-lr"),
            prepared["Xtr"], prepared["ytr"], fast_hp(seed=2), 2,
            prepared["Xva"], prepared["yva"],
        )
        preds = ensemble_predict_batch(ens, prepared["Xte"])
        rep = evaluate(preds, prepared["yte"])
        assert rep.accuracy > 0.6

    def test_deterministic_serialization(self, prepared, trained):
        again = train_sharded(
            parse_combo("svm-dt-lr"),
            prepared["Xtr"], prepared["ytr"], fast_hp(seed=2), 2,
            prepared["Xva"], prepared["yva"],
        )
        assert dumps_ensemble(again) == dumps_ensemble(trained)

    def test_batch_matches_single(self, trained, prepared):
        X = prepared["Xte"][:10]
        batch = ensemble_predict_batch(trained, X)
        singles = [ensemble_predict(trained, row) for row in X]
        assert [p.label for p in batch] == [p.label for p in singles]

    def test_identical_members_match_single(self, trained, prepared):
        member = trained.members[2]
        from edgevote.models import predict

        clone = Ensemble(members=(member,) * 3, mode=VotingMode.SOFT, combo_name="lr-lr-lr")
        X = prepared["Xte"][:20]
        ens_labels = [p.label for p in ensemble_predict_batch(clone, X)]
        single_labels = [predict(member, row).label for row in X]
        assert ens_labels == single_labels

    def test_round_trip(self, trained, prepared):
        back = loads_ensemble(dumps_ensemble(trained))
        X = prepared["Xte"][:15]
        assert [p.label for p in ensemble_predict_batch(back, X)] == [
            p.label for p in ensemble_predict_batch(trained, X)
        ]
        assert back.mode is trained.mode

    def test_unknown_algorithm_in_combo(self, prepared):
        with pytest.raises(UnknownAlgorithm):
            train_sharded(("svm", "nope"), prepared["Xtr"], prepared["ytr"], fast_hp(), 0)

    def test_bad_mode_document(self, trained):
        doc = ensemble_to_dict(trained)
        doc["mode"] = "fuzzy"
        from edgevote.models import SerializationError

        with pytest.raises(SerializationError):
            ensemble_from_dict(doc)
