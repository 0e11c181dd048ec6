"""Score normalization: adaptive s-norm and per-channel-pair z-scoring.

Adaptive s-norm symmetrizes each raw trial score against an impostor cohort:
the trial's enroll and test embeddings are each scored against the whole
cohort, the n best-scoring impostors per side provide (mu, sigma), and

    S_hat = (S - mu_1) / sigma_1 + (S - mu_2) / sigma_2

Channel normalization then z-scores within each (enroll, test) source-type
pair, removing the per-channel offsets visible in cross-channel trials:

    S_hat = (S - mu_ch) / sigma_ch

When both are applied, adaptive s-norm always runs first.

All statistics are population (divide-by-N) moments; a zero sigma is a hard
error at application time, never silently floored, since a fudged sigma would
corrupt calibration downstream.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .embeddings import EmbeddingSet
from .exceptions import (
    CohortTooSmall,
    DataError,
    DegenerateCohort,
    DegenerateSigma,
    MissingPairStats,
    ZeroVector,
)
from .protocol import ALL_PAIRS, ChannelPair
from .scoring import Stage, resolve_channel_pairs, unit_rows
from .validation import as_vector


@dataclass(frozen=True)
class CohortStats:
    """Mean / population std of the n best cohort scores for one embedding."""

    mu: float
    sigma: float
    n: int


@dataclass(frozen=True)
class PairStats:
    mu: float
    sigma: float
    count: int

    @property
    def degenerate(self):
        return self.sigma == 0.0


@dataclass(frozen=True)
class ChannelPairStats:
    """Per channel pair (mu, sigma, count); absent pairs were never observed."""

    stats: dict

    def __post_init__(self):
        for pair in self.stats:
            if not isinstance(pair, ChannelPair):
                raise DataError(f"bad channel pair key {pair!r}")

    def __getitem__(self, pair):
        return self.stats[pair]

    def __contains__(self, pair):
        return pair in self.stats

    def pairs(self):
        return tuple(p for p in ALL_PAIRS if p in self.stats)

    def degenerate_pairs(self):
        return tuple(p for p in self.pairs() if self.stats[p].degenerate)


# --- adaptive s-norm ---------------------------------------------------------


def _check_n_top(n, cohort_size):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DataError(f"cohort depth n must be a positive integer, got {n!r}")
    if n > cohort_size:
        raise CohortTooSmall(
            f"n={n} exceeds cohort size {cohort_size}"
        )


def _topn_rows(scores, n):
    """Top-n values per row, sorted descending (deterministic reductions)."""
    m = scores.shape[1]
    if n < m:
        scores = np.partition(scores, m - n, axis=1)[:, m - n :]
    return -np.sort(-scores, axis=1)


def topn_stats(x, cohort, n):
    """Statistics of the n best cohort scores for a single embedding."""
    x = as_vector(x, "embedding")
    _check_n_top(n, len(cohort))
    if not np.any(x):
        raise ZeroVector("cannot score a zero embedding against the cohort")
    unit = x / np.linalg.norm(x)
    top = _topn_rows((unit_rows(cohort.matrix, "cohort") @ unit)[None, :], n)
    return CohortStats(float(top.mean()), float(top.std()), n)


class AdaptiveSNorm(BaseEstimator):
    """Adaptive s-norm over a top-n impostor cohort.

    Parameters
    ----------
    n_top : int
        Number of best-scoring impostors used per side.  There is no
        sensible default; the cohort depth is protocol-specific.

    Fitting stores the cohort; ``transform`` scores each unique enroll and
    test embedding against it exactly once, caches the per-id statistics,
    and normalizes every trial score.
    """

    def __init__(self, n_top=None):
        self.n_top = n_top

    def fit(self, cohort, y=None):
        if not isinstance(cohort, EmbeddingSet):
            raise DataError("cohort must be an EmbeddingSet")
        _check_n_top(self.n_top, len(cohort))
        self.cohort_ = cohort
        self.cohort_unit_ = unit_rows(cohort.matrix, "cohort")
        return self

    def _side_stats(self, ids, emb_set):
        """mu/sigma arrays aligned to ``ids``; one cohort pass per unique id."""
        unique = sorted(set(ids))
        rows = unit_rows(emb_set.rows(unique), "trial-side")
        top = _topn_rows(rows @ self.cohort_unit_.T, self.n_top)
        mu = top.mean(axis=1)
        sigma = top.std(axis=1)
        pos = {u: k for k, u in enumerate(unique)}
        idx = np.fromiter((pos[i] for i in ids), dtype=np.intp, count=len(ids))
        return mu[idx], sigma[idx]

    def transform(self, score_set, enroll, test):
        if not hasattr(self, "cohort_"):
            raise NotFittedError("AdaptiveSNorm must be fit on a cohort first")
        trials = score_set.trials
        mu1, sigma1 = self._side_stats(trials.enroll_ids, enroll)
        mu2, sigma2 = self._side_stats(trials.test_ids, test)
        for side, sigma in (("enroll", sigma1), ("test", sigma2)):
            bad = np.nonzero(sigma == 0.0)[0]
            if bad.size:
                t = trials[int(bad[0])]
                raise DegenerateCohort(
                    f"zero top-{self.n_top} cohort sigma on {side} side of "
                    f"trial {t.enroll_id}\t{t.test_id}"
                )
        s = score_set.scores
        normalized = (s - mu1) / sigma1 + (s - mu2) / sigma2
        return score_set.replace_scores(normalized, Stage.SNORM)


def adaptive_snorm(score_set, enroll, test, cohort, n_top):
    """Functional form of :class:`AdaptiveSNorm` (fit + transform)."""
    return AdaptiveSNorm(n_top).fit(cohort).transform(score_set, enroll, test)


# --- channel normalization -----------------------------------------------------


def estimate_channel_stats(score_set, pairs=None):
    """Population mean/std of the scores within each observed channel pair."""
    pairs = resolve_channel_pairs(score_set, pairs)
    stats = {}
    for pair in ALL_PAIRS:
        idx = [i for i, p in enumerate(pairs) if p == pair]
        if not idx:
            continue
        group = score_set.scores[idx]
        stats[pair] = PairStats(
            float(group.mean()), float(group.std()), len(group)
        )
    return ChannelPairStats(stats)


def channel_norm(score_set, stats, pairs=None):
    """Apply per-pair z-scoring with the supplied statistics."""
    pairs = resolve_channel_pairs(score_set, pairs)
    mu = np.empty(len(score_set))
    sigma = np.empty(len(score_set))
    for i, pair in enumerate(pairs):
        if pair not in stats:
            raise MissingPairStats(f"no statistics for channel pair {pair}")
        ps = stats[pair]
        if ps.degenerate:
            raise DegenerateSigma(f"sigma is zero for channel pair {pair}")
        mu[i] = ps.mu
        sigma[i] = ps.sigma
    normalized = (score_set.scores - mu) / sigma
    return score_set.replace_scores(normalized, Stage.CHNORM)


class ChannelNorm(BaseEstimator):
    """Per-channel-pair score z-scoring, reusable across score sets.

    Fit estimates per-pair statistics (typically on a dev score set) and
    ``transform`` applies them, e.g. to evaluation scores.
    """

    def fit(self, score_set, pairs=None):
        self.stats_ = estimate_channel_stats(score_set, pairs)
        return self

    def transform(self, score_set, pairs=None):
        if not hasattr(self, "stats_"):
            raise NotFittedError("ChannelNorm must be fit first")
        return channel_norm(score_set, self.stats_, pairs)

    def fit_transform(self, score_set, pairs=None):
        return self.fit(score_set, pairs).transform(score_set, pairs)

    @classmethod
    def from_stats(cls, stats):
        est = cls()
        est.stats_ = stats
        return est


def normalize_pipeline(
    score_set,
    enroll=None,
    test=None,
    cohort=None,
    n_top=None,
    apply_snorm=False,
    apply_chnorm=False,
    channel_stats=None,
    pairs=None,
):
    """Run the normalization stages in their fixed order: s-norm, then
    channel norm.  With ``channel_stats=None`` the channel statistics are
    estimated on the (post-s-norm) scores themselves.
    """
    out = score_set
    if apply_snorm:
        if enroll is None or test is None or cohort is None:
            raise DataError("s-norm needs enroll, test and cohort embeddings")
        out = adaptive_snorm(out, enroll, test, cohort, n_top)
    if apply_chnorm:
        stats = channel_stats
        if stats is None:
            stats = estimate_channel_stats(out, pairs)
        out = channel_norm(out, stats, pairs)
    return out


# --- channel stats file -------------------------------------------------------


def write_channel_stats(stats, fp):
    for pair in stats.pairs():
        ps = stats[pair]
        fp.write(f"{pair.key}\t{ps.mu:.17g}\t{ps.sigma:.17g}\t{ps.count}\n")


def read_channel_stats(fp, path=None):
    stats = {}
    for line_no, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise DataError(f"{path or '<stats>'}:{line_no}: expected 4 columns")
        pair = ChannelPair.from_key(cols[0])
        try:
            mu, sigma, count = float(cols[1]), float(cols[2]), int(cols[3])
        except ValueError:
            raise DataError(
                f"{path or '<stats>'}:{line_no}: bad statistics"
            ) from None
        stats[pair] = PairStats(mu, sigma, count)
    return ChannelPairStats(stats)
