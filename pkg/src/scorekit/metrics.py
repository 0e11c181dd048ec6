"""Detection metrics: DET curve, EER, minDCF, actDCF, score distributions.

The DET curve is the exact step function of the empirical score
distributions, built from one sort.  With the accept-iff-score>=t convention,
the operating point at threshold t is

    p_miss(t) = #targets   <  t / #targets
    p_fa(t)   = #nontargets >= t / #nontargets

and the curve enumerates every achievable (p_miss, p_fa) state: one point
per distinct score value plus one rejecting-everything endpoint.  EER is
read off the linearly interpolated curve where p_miss = p_fa.

Detection costs are normalized by min(c_miss * p_target,
c_fa * (1 - p_target)); minDCF minimizes over the curve's thresholds while
actDCF fixes the Bayes threshold implied by the cost parameters, so
min_dcf <= act_dcf holds structurally.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, OneClassOnly
from .protocol import ALL_PAIRS
from .scoring import resolve_channel_pairs
from .validation import readonly


@dataclass(frozen=True)
class DcfParams:
    """Operating point of the detection cost function."""

    p_target: float = 0.05
    c_miss: float = 1.0
    c_fa: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p_target < 1.0:
            raise DataError(f"p_target must lie in (0, 1), got {self.p_target}")
        if not (self.c_miss > 0 and self.c_fa > 0):
            raise DataError("c_miss and c_fa must be positive")

    @property
    def normalizer(self):
        return min(
            self.c_miss * self.p_target, self.c_fa * (1.0 - self.p_target)
        )

    @property
    def bayes_threshold(self):
        """LLR threshold beta = ln(c_fa (1-p) / (c_miss p)); accept iff >= beta."""
        return math.log(
            self.c_fa * (1.0 - self.p_target) / (self.c_miss * self.p_target)
        )

    @property
    def effective_prior(self):
        return (
            self.c_miss
            * self.p_target
            / (self.c_miss * self.p_target + self.c_fa * (1.0 - self.p_target))
        )


def _as_params_list(params):
    if isinstance(params, DcfParams):
        return [params]
    params = list(params)
    if not params:
        raise DataError("at least one DcfParams operating point is required")
    return params


@dataclass(frozen=True)
class DetCurve:
    """Step-function operating points; thresholds strictly increasing."""

    thresholds: np.ndarray
    p_miss: np.ndarray
    p_fa: np.ndarray

    def __post_init__(self):
        for name in ("thresholds", "p_miss", "p_fa"):
            object.__setattr__(
                self, name, readonly(np.asarray(getattr(self, name), dtype=np.float64))
            )


def _scores_labels(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError("scores and labels must be aligned 1-d arrays")
    n_target = int(labels.sum())
    n_nontarget = labels.size - n_target
    if n_target == 0 or n_nontarget == 0:
        raise OneClassOnly(
            f"need both classes: {n_target} targets, {n_nontarget} nontargets"
        )
    return scores, labels, n_target, n_nontarget


def det_curve(scores, labels):
    """Exact DET operating points from a single sort.

    ``labels`` is a boolean array, True for target trials.
    """
    scores, labels, n_target, n_nontarget = _scores_labels(scores, labels)
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    is_target = labels[order]

    # prefix[i] = count among the i lowest scores
    targets_below = np.concatenate(([0], np.cumsum(is_target)))
    nontargets_below = np.concatenate(([0], np.cumsum(~is_target)))
    first = np.ones(s.size, dtype=bool)
    first[1:] = s[1:] != s[:-1]
    pos = np.nonzero(first)[0]

    thresholds = np.append(s[pos], np.nextafter(s[-1], np.inf))
    p_miss = np.append(targets_below[pos], n_target) / n_target
    p_fa = (n_nontarget - np.append(nontargets_below[pos], n_nontarget)) / n_nontarget
    return DetCurve(thresholds, p_miss, p_fa)


def eer(curve):
    """Equal error rate on the linearly interpolated DET curve."""
    diff = curve.p_miss - curve.p_fa  # non-decreasing along the curve
    k = int(np.searchsorted(diff >= 0, True))
    if diff[k] == 0.0:
        return float(curve.p_miss[k])
    # interpolate on the segment straddling the p_miss = p_fa diagonal
    frac = -diff[k - 1] / (diff[k] - diff[k - 1])
    return float(
        curve.p_miss[k - 1] + frac * (curve.p_miss[k] - curve.p_miss[k - 1])
    )


def min_dcf(curve, params):
    """Minimum normalized detection cost over the curve's thresholds.

    With a sequence of operating points, the mean of the per-point minima.
    """
    values = []
    for p in _as_params_list(params):
        cost = (
            p.c_miss * p.p_target * curve.p_miss
            + p.c_fa * (1.0 - p.p_target) * curve.p_fa
        )
        values.append(float(cost.min()) / p.normalizer)
    return float(np.mean(values))


def act_dcf(scores, labels, params):
    """Normalized detection cost at the fixed Bayes threshold.

    ``scores`` are expected to be calibrated log-likelihood ratios; the
    threshold is beta = ln(c_fa (1-p) / (c_miss p)), accept iff score >= beta.
    With a sequence of operating points, the mean over them.
    """
    scores, labels, n_target, n_nontarget = _scores_labels(scores, labels)
    values = []
    for p in _as_params_list(params):
        beta = p.bayes_threshold
        p_miss = np.count_nonzero(labels & (scores < beta)) / n_target
        p_fa = np.count_nonzero(~labels & (scores >= beta)) / n_nontarget
        cost = p.c_miss * p.p_target * p_miss + p.c_fa * (1.0 - p.p_target) * p_fa
        values.append(cost / p.normalizer)
    return float(np.mean(values))


# --- reports -------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsReport:
    eer: float
    min_dcf: float
    act_dcf: float
    n_target: int
    n_nontarget: int
    stage: str | None = None
    per_channel: dict | None = None


def evaluate_scores(score_set, params, per_channel=False):
    """EER / minDCF / actDCF for a labeled score set.

    With ``per_channel`` a sub-report is computed for every channel pair that
    has trials of both classes (pairs with a single class are skipped; their
    error rates are undefined).
    """
    labels = score_set.trials.target_mask
    scores = score_set.scores
    curve = det_curve(scores, labels)
    report = MetricsReport(
        eer=eer(curve),
        min_dcf=min_dcf(curve, params),
        act_dcf=act_dcf(scores, labels, params),
        n_target=int(labels.sum()),
        n_nontarget=int((~labels).sum()),
        stage=score_set.stage.value,
        per_channel=None,
    )
    if not per_channel:
        return report

    pairs = score_set.trials.channel_pairs
    sub = {}
    for pair in ALL_PAIRS:
        idx = np.array([i for i, p in enumerate(pairs) if p == pair], dtype=np.intp)
        if idx.size == 0:
            continue
        sub_labels = labels[idx]
        if sub_labels.all() or not sub_labels.any():
            continue
        sub_scores = scores[idx]
        sub_curve = det_curve(sub_scores, sub_labels)
        sub[pair] = MetricsReport(
            eer=eer(sub_curve),
            min_dcf=min_dcf(sub_curve, params),
            act_dcf=act_dcf(sub_scores, sub_labels, params),
            n_target=int(sub_labels.sum()),
            n_nontarget=int((~sub_labels).sum()),
            stage=score_set.stage.value,
        )
    return MetricsReport(
        report.eer,
        report.min_dcf,
        report.act_dcf,
        report.n_target,
        report.n_nontarget,
        report.stage,
        sub,
    )


def write_metrics_report(report, fp):
    fp.write("subset\teer\tmin_dcf\tact_dcf\tn_target\tn_nontarget\tstage\n")

    def row(name, r):
        fp.write(
            f"{name}\t{r.eer:.6g}\t{r.min_dcf:.6g}\t{r.act_dcf:.6g}"
            f"\t{r.n_target}\t{r.n_nontarget}\t{r.stage or '-'}\n"
        )

    row("pooled", report)
    for pair, sub in (report.per_channel or {}).items():
        row(pair.key, sub)


# --- score distributions ---------------------------------------------------------


@dataclass(frozen=True)
class ClassSummary:
    count: int
    mean: float | None
    std: float | None


@dataclass(frozen=True)
class PairDistribution:
    target_hist: np.ndarray
    nontarget_hist: np.ndarray
    target: ClassSummary
    nontarget: ClassSummary


@dataclass(frozen=True)
class DistributionReport:
    """Per-channel-pair target/impostor histograms over shared uniform bins."""

    bin_edges: np.ndarray
    per_pair: dict


def _class_summary(values):
    if values.size == 0:
        return ClassSummary(0, None, None)
    return ClassSummary(values.size, float(values.mean()), float(values.std()))


def distribution_report(score_set, pairs=None, n_bins=60):
    """Histogram target vs impostor scores within each channel pair.

    Bins are uniform over the pooled score range so pairs are directly
    comparable.
    """
    pairs = resolve_channel_pairs(score_set, pairs)
    labels = score_set.trials.target_mask
    scores = score_set.scores
    lo, hi = float(scores.min()), float(scores.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, n_bins + 1)

    per_pair = {}
    for pair in ALL_PAIRS:
        idx = np.array([i for i, p in enumerate(pairs) if p == pair], dtype=np.intp)
        if idx.size == 0:
            continue
        tar = scores[idx[labels[idx]]]
        non = scores[idx[~labels[idx]]]
        per_pair[pair] = PairDistribution(
            target_hist=np.histogram(tar, bins=edges)[0],
            nontarget_hist=np.histogram(non, bins=edges)[0],
            target=_class_summary(tar),
            nontarget=_class_summary(non),
        )
    return DistributionReport(readonly(edges), per_pair)


def write_distribution_report(report, fp):
    fp.write("pair\tclass\tcount\tmean\tstd\thistogram\n")
    for pair, dist in report.per_pair.items():
        for cls, summary, hist in (
            ("target", dist.target, dist.target_hist),
            ("nontarget", dist.nontarget, dist.nontarget_hist),
        ):
            mean = "-" if summary.mean is None else f"{summary.mean:.6g}"
            std = "-" if summary.std is None else f"{summary.std:.6g}"
            counts = ",".join(str(int(c)) for c in hist)
            fp.write(f"{pair.key}\t{cls}\t{summary.count}\t{mean}\t{std}\t{counts}\n")
