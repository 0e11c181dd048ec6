"""Trial scoring with cosine similarity, and the ScoreSet container.

Scores move through the back-end in stages (raw -> snorm -> chnorm ->
calibrated / fused); the stage is tracked in memory so downstream reports can
flag, for instance, actDCF computed on uncalibrated scores.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, MissingChannelPair, ZeroVector
from .protocol import TrialSet
from .validation import as_vector, check_same_dim, readonly


class Stage(str, enum.Enum):
    RAW = "raw"
    SNORM = "snorm"
    CHNORM = "chnorm"
    CALIBRATED = "calibrated"
    FUSED = "fused"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ScoreSet:
    """Per-trial scores aligned to a TrialSet."""

    trials: TrialSet
    scores: np.ndarray
    stage: Stage = Stage.RAW

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1 or scores.shape[0] != len(self.trials):
            raise DataError(
                f"{scores.shape} scores for {len(self.trials)} trials"
            )
        if not np.all(np.isfinite(scores)):
            raise DataError("scores contain non-finite values")
        object.__setattr__(self, "scores", readonly(scores))
        object.__setattr__(self, "stage", Stage(self.stage))

    def __len__(self):
        return len(self.trials)

    def replace_scores(self, scores, stage):
        return ScoreSet(self.trials, scores, stage)


def resolve_channel_pairs(score_set, pairs=None):
    """Per-trial channel pairs for a score set, defaulting to the trials'.

    Every trial must have a pair; a missing one is an error, not a guess.
    """
    pairs = tuple(pairs) if pairs is not None else score_set.trials.channel_pairs
    if len(pairs) != len(score_set):
        raise DataError(
            f"{len(pairs)} channel pairs for {len(score_set)} trials"
        )
    for i, p in enumerate(pairs):
        if p is None:
            t = score_set.trials[i]
            raise MissingChannelPair(
                f"trial {t.enroll_id}\t{t.test_id} has no channel pair"
            )
    return pairs


def cosine(x1, x2):
    """Cosine similarity between two nonzero vectors of equal dimension."""
    x1 = as_vector(x1, "x1")
    x2 = as_vector(x2, "x2")
    check_same_dim(x1, x2)
    n1 = np.linalg.norm(x1)
    n2 = np.linalg.norm(x2)
    if n1 == 0.0 or n2 == 0.0:
        raise ZeroVector("cosine of a zero vector is undefined")
    return float(np.dot(x1, x2) / (n1 * n2))


def unit_rows(matrix, what="embedding"):
    """Row-normalize a matrix to unit norm; zero rows are an error."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ZeroVector(f"{what} matrix contains a zero vector")
    return matrix / norms


def score_trials(trials, enroll, test):
    """Cosine-score every trial; one score per trial, order preserved."""
    e = unit_rows(enroll.rows(trials.enroll_ids), "enroll")
    t = unit_rows(test.rows(trials.test_ids), "test")
    scores = np.einsum("ij,ij->i", e, t)
    return ScoreSet(trials, scores, Stage.RAW)


# --- score files -------------------------------------------------------------


def write_scores(score_set, fp):
    for trial, s in zip(score_set.trials, score_set.scores):
        fp.write(f"{trial.enroll_id}\t{trial.test_id}\t{s:.17g}\n")


def read_score_records(fp, path=None):
    """Read ``enroll<TAB>test<TAB>score`` lines as an ordered pair -> score map."""
    records = {}
    order = []
    for line_no, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise DataError(f"{path or '<scores>'}:{line_no}: expected 3 columns")
        try:
            score = float(cols[2])
        except ValueError:
            raise DataError(
                f"{path or '<scores>'}:{line_no}: bad score {cols[2]!r}"
            ) from None
        pair = (cols[0], cols[1])
        if pair in records:
            raise DataError(
                f"{path or '<scores>'}:{line_no}: duplicate trial "
                f"{cols[0]}\t{cols[1]}"
            )
        records[pair] = score
        order.append(pair)
    return records, order


def scores_for_trials(trials, records, stage=Stage.RAW):
    """Align a pair -> score map to a TrialSet (every trial must be scored)."""
    trial_pairs = {t.pair_ids for t in trials}
    extra = set(records) - trial_pairs
    if extra:
        pair = sorted(extra)[0]
        raise DataError(f"score for unknown trial {pair[0]}\t{pair[1]}")
    scores = np.empty(len(trials))
    for i, t in enumerate(trials):
        try:
            scores[i] = records[t.pair_ids]
        except KeyError:
            raise DataError(
                f"no score for trial {t.enroll_id}\t{t.test_id}"
            ) from None
    return ScoreSet(trials, scores, stage)


def read_scores(path, trials, stage=Stage.RAW):
    with open(path, "r", encoding="utf-8") as fp:
        records, _ = read_score_records(fp, path)
    return scores_for_trials(trials, records, stage)
