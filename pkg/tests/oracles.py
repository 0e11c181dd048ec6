"""Independent brute-force reference implementations.

These deliberately avoid the library's vectorized code paths (single-sort
DET construction, partition-based top-n selection, cached cohort stats) so
agreement between the two routes is meaningful.
"""

import math

import numpy as np


def cosine_scalar(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return dot / (na * nb)


def population_variance_two_pass(values):
    n = len(values)
    mean = sum(values) / n
    return sum((v - mean) ** 2 for v in values) / n


def topn_mean_std(x, cohort_ids, cohort_vectors, n):
    """Score x against every cohort member, sort by (-score, id), slice n."""
    scored = sorted(
        ((cosine_scalar(x, vec), cid) for cid, vec in zip(cohort_ids, cohort_vectors)),
        key=lambda t: (-t[0], t[1]),
    )
    top = [s for s, _ in scored[:n]]
    mean = sum(top) / n
    std = math.sqrt(population_variance_two_pass(top))
    return mean, std


def snorm_brute(trials, enroll, test, cohort, n):
    """Eq.-style symmetric normalization, one full cohort re-sort per side."""
    cohort_ids = list(cohort.ids)
    cohort_vectors = [cohort.vector(i) for i in cohort_ids]
    out = []
    for trial in trials:
        x1 = enroll.vector(trial.enroll_id)
        x2 = test.vector(trial.test_id)
        s = cosine_scalar(x1, x2)
        mu1, sigma1 = topn_mean_std(x1, cohort_ids, cohort_vectors, n)
        mu2, sigma2 = topn_mean_std(x2, cohort_ids, cohort_vectors, n)
        if sigma1 == 0.0 or sigma2 == 0.0:
            raise ZeroDivisionError("degenerate cohort stats")
        out.append((s - mu1) / sigma1 + (s - mu2) / sigma2)
    return np.array(out)


def det_points_recount(scores, labels):
    """(threshold, p_miss, p_fa) at every distinct score plus one above max.

    Counts are recomputed from scratch per threshold (O(N^2) total work).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    tar = scores[labels]
    non = scores[~labels]
    thresholds = sorted(set(scores.tolist()))
    thresholds.append(np.nextafter(thresholds[-1], np.inf))
    points = []
    for t in thresholds:
        p_miss = np.count_nonzero(tar < t) / tar.size
        p_fa = np.count_nonzero(non >= t) / non.size
        points.append((t, p_miss, p_fa))
    return points


def min_dcf_recount(scores, labels, p_target, c_miss=1.0, c_fa=1.0):
    best = math.inf
    for _, p_miss, p_fa in det_points_recount(scores, labels):
        cost = c_miss * p_target * p_miss + c_fa * (1.0 - p_target) * p_fa
        best = min(best, cost)
    return best / min(c_miss * p_target, c_fa * (1.0 - p_target))


def act_dcf_recount(scores, labels, p_target, c_miss=1.0, c_fa=1.0):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    beta = math.log(c_fa * (1.0 - p_target) / (c_miss * p_target))
    tar = scores[labels]
    non = scores[~labels]
    p_miss = np.count_nonzero(tar < beta) / tar.size
    p_fa = np.count_nonzero(non >= beta) / non.size
    cost = c_miss * p_target * p_miss + c_fa * (1.0 - p_target) * p_fa
    return cost / min(c_miss * p_target, c_fa * (1.0 - p_target))


def channel_stats_brute(scores, pairs):
    """Two-pass population mean/std per channel pair key."""
    groups = {}
    for s, p in zip(scores, pairs):
        groups.setdefault(p, []).append(float(s))
    out = {}
    for pair, values in groups.items():
        mean = sum(values) / len(values)
        std = math.sqrt(population_variance_two_pass(values))
        out[pair] = (mean, std, len(values))
    return out


def wate_brute(enroll, frames, rs_values, threshold):
    """Recognizability-weighted mean of normalized surviving frames."""
    surviving = [
        (np.asarray(f, dtype=float) / np.linalg.norm(f), rs)
        for f, rs in zip(frames, rs_values)
        if rs >= threshold
    ]
    total = sum(rs for _, rs in surviving)
    mean = sum(f * rs for f, rs in surviving) / total
    return cosine_scalar(enroll, mean)


def greedy_trace_exhaustive(named_scores, labels, params, train_fn, actdcf_fn):
    """Re-run the greedy selection with its own bookkeeping.

    ``train_fn(matrix, labels)`` returns fused scores; ``actdcf_fn(scores)``
    the criterion.  Candidate evaluation is exhaustive at every step.
    """
    names = sorted(named_scores)
    per_system = {}
    for name in names:
        fused = train_fn(named_scores[name].reshape(-1, 1), labels)
        per_system[name] = actdcf_fn(fused)
    current = min(names, key=lambda n: (per_system[n], n))
    selected = [current]
    trace = [per_system[current]]
    while True:
        candidates = {}
        for name in names:
            if name in selected:
                continue
            matrix = np.column_stack([named_scores[n] for n in selected + [name]])
            candidates[name] = actdcf_fn(train_fn(matrix, labels))
        if not candidates:
            break
        best = min(candidates, key=lambda n: (candidates[n], n))
        if candidates[best] >= trace[-1] - 1e-6:
            break
        selected.append(best)
        trace.append(candidates[best])
    return selected, trace
