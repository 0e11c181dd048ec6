import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scorekit.exceptions import DataError, DimMismatch, MissingEmbedding, ZeroVector
from scorekit.embeddings import EmbeddingSet
from scorekit.protocol import Trial, TrialSet, parse_trials
from scorekit.scoring import (
    ScoreSet,
    Stage,
    cosine,
    read_score_records,
    score_trials,
    scores_for_trials,
    write_scores,
)

from .conftest import random_embedding_set
from .oracles import cosine_scalar

finite_vec = st.lists(
    st.floats(-100.0, 100.0, allow_nan=False), min_size=2, max_size=12
).filter(lambda v: any(abs(x) > 1e-3 for x in v))


class TestCosine:
    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_scale_invariance_exact_case(self):
        assert cosine([2.0, 0.0], [1.0, 0.0]) == 1.0

    def test_45_degrees(self):
        assert abs(cosine([1.0, 1.0], [1.0, 0.0]) - 1.0 / np.sqrt(2)) < 1e-15

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            cosine([1.0, 0.0], [1.0, 0.0, 0.0])

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            cosine([0.0, 0.0], [1.0, 0.0])

    @given(finite_vec, finite_vec)
    @settings(max_examples=60)
    def test_symmetry(self, a, b):
        if len(a) != len(b):
            a, b = a[: min(len(a), len(b))], b[: min(len(a), len(b))]
        assert abs(cosine(a, b) - cosine(b, a)) <= 1e-15

    @given(finite_vec, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    @settings(max_examples=60)
    def test_positive_scaling(self, v, alpha, beta):
        w = [x + 1.5 for x in v]
        lhs = cosine([alpha * x for x in v], [beta * x for x in w])
        assert abs(lhs - cosine(v, w)) <= 1e-12

    def test_range(self, rng):
        for _ in range(50):
            a, b = rng.standard_normal((2, 8))
            assert -1.0 - 1e-12 <= cosine(a, b) <= 1.0 + 1e-12


class TestScoreTrials:
    def test_identical_vectors_score_one(self):
        emb = EmbeddingSet(("x",), [[0.3, 0.4]])
        trials = TrialSet((Trial("x", "x"),))
        out = score_trials(trials, emb, emb)
        assert out.scores[0] == pytest.approx(1.0, abs=1e-12)
        assert out.stage is Stage.RAW

    def test_missing_embedding(self):
        emb = EmbeddingSet(("x",), [[1.0, 0.0]])
        trials = TrialSet((Trial("x", "y"),))
        with pytest.raises(MissingEmbedding):
            score_trials(trials, emb, emb)

    def test_matches_scalar_loop_oracle(self, rng):
        enroll = random_embedding_set(rng, "e", 10, 16)
        test = random_embedding_set(rng, "t", 15, 16)
        trials = TrialSet(
            tuple(
                Trial(e, t)
                for e in enroll.ids
                for t in rng.choice(test.ids, size=10, replace=False)
            )
        )
        assert len(trials) == 100
        out = score_trials(trials, enroll, test)
        for trial, got in zip(trials, out.scores):
            want = cosine_scalar(
                enroll.vector(trial.enroll_id), test.vector(trial.test_id)
            )
            assert got == pytest.approx(want, abs=1e-12)

    def test_order_preserved(self, rng):
        enroll = random_embedding_set(rng, "e", 4, 8)
        test = random_embedding_set(rng, "t", 4, 8)
        trials = TrialSet(
            tuple(Trial(e, t) for e in enroll.ids for t in test.ids)
        )
        out = score_trials(trials, enroll, test)
        assert len(out) == 16
        assert out.trials is trials


class TestScoreSet:
    def test_length_mismatch(self):
        trials = TrialSet((Trial("a", "b"),))
        with pytest.raises(DataError):
            ScoreSet(trials, [1.0, 2.0])

    def test_non_finite_rejected(self):
        trials = TrialSet((Trial("a", "b"),))
        with pytest.raises(DataError):
            ScoreSet(trials, [np.nan])

    def test_scores_read_only(self):
        trials = TrialSet((Trial("a", "b"),))
        ss = ScoreSet(trials, [0.5])
        with pytest.raises(ValueError):
            ss.scores[0] = 1.0


class TestScoreFiles:
    def test_round_trip_17_digits(self, rng):
        trials = TrialSet(tuple(Trial(f"e{i}", f"t{i}") for i in range(20)))
        ss = ScoreSet(trials, rng.standard_normal(20))
        buf = io.StringIO()
        write_scores(ss, buf)
        buf.seek(0)
        records, order = read_score_records(buf)
        back = scores_for_trials(trials, records)
        assert np.array_equal(back.scores, ss.scores)
        assert order == [t.pair_ids for t in trials]

    def test_missing_score_for_trial(self):
        trials = parse_trials("a\tb\nc\td\n", key_present=False)
        with pytest.raises(DataError, match="no score"):
            scores_for_trials(trials, {("a", "b"): 1.0})

    def test_extra_score_rejected(self):
        trials = parse_trials("a\tb\n", key_present=False)
        with pytest.raises(DataError, match="unknown trial"):
            scores_for_trials(trials, {("a", "b"): 1.0, ("x", "y"): 2.0})
