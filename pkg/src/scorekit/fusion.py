"""Score-level fusion: linear logistic fusion and greedy system selection.

Linear fusion generalizes calibration to several aligned systems: the fused
LLR is w . s + b with (w, b) trained on the same prior-weighted logistic
objective, so fused scores come out calibrated.

Greedy fusion builds a submission iteratively.  Starting from the single
system with the best dev actDCF (after per-system calibration), each step
refits the fusion with every unused candidate added and keeps the candidate
giving the largest actDCF improvement, stopping once no candidate improves
the (mean) actDCF by more than an absolute epsilon.

The full submission recipe chains four steps: per-system calibration,
per-modality greedy fusion, cross-modality linear fusion, and a final
calibration of the fused scores.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .calibration import (
    AffineCalibrator,
    DcfParams,
    fit_logistic,
    training_prior,
)
from .exceptions import DataError
from .metrics import act_dcf
from .validation import check_same_length

_MIN_IMPROVEMENT = 1e-6


class LinearFuser(BaseEstimator):
    """Prior-weighted logistic fusion of aligned score columns.

    ``fit`` takes a (n_trials, n_systems) score matrix; ``transform``
    returns the fused LLR scores.  With one column this reduces exactly to
    :class:`AffineCalibrator`.
    """

    def __init__(self, params=DcfParams(), tol=1e-9, max_iter=100):
        self.params = params
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, scores, labels):
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores.reshape(-1, 1)
        prior = training_prior(self.params)
        w, b, n_iter = fit_logistic(scores, labels, prior, self.tol, self.max_iter)
        self.weights_ = w
        self.offset_ = b
        self.n_iter_ = n_iter
        return self

    def transform(self, scores):
        if not hasattr(self, "weights_"):
            raise NotFittedError("LinearFuser must be fit first")
        scores = np.asarray(scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores.reshape(-1, 1)
        if scores.shape[1] != self.weights_.size:
            raise DataError(
                f"{scores.shape[1]} systems, fuser trained on {self.weights_.size}"
            )
        return scores @ self.weights_ + self.offset_

    def fit_transform(self, scores, labels):
        return self.fit(scores, labels).transform(scores)


@dataclass(frozen=True)
class GreedySelection:
    """Outcome of greedy fusion: selection order, dev actDCF trace, model."""

    systems: tuple
    trace: tuple
    fusion: LinearFuser

    def fused_scores(self, named_scores):
        matrix = np.column_stack([named_scores[n] for n in self.systems])
        return self.fusion.transform(matrix)


def _as_named_arrays(named_scores):
    out = {}
    length = None
    for name, scores in named_scores.items():
        arr = np.asarray(
            getattr(scores, "scores", scores), dtype=np.float64
        )
        if length is None:
            length = arr.size
        elif arr.size != length:
            raise DataError(f"system {name!r} is not aligned to the others")
        out[name] = arr
    return out


def greedy_fuse(named_scores, labels, params=DcfParams(), tol=1e-9, max_iter=100):
    """Iterative system selection minimizing dev actDCF.

    ``named_scores`` maps system name -> aligned score array (or ScoreSet).
    Candidates are scanned in lexicographic name order, so ties are broken
    deterministically in favor of the smaller name.
    """
    arrays = _as_named_arrays(named_scores)
    if not arrays:
        raise DataError("greedy fusion needs at least one system")
    labels = np.asarray(labels, dtype=bool)

    def dev_actdcf(fused):
        return act_dcf(fused, labels, params)

    # step 1: best single system after per-system calibration
    best_name, best_value, best_fuser = None, None, None
    for name in sorted(arrays):
        fuser = LinearFuser(params, tol, max_iter).fit(arrays[name], labels)
        value = dev_actdcf(fuser.transform(arrays[name]))
        if best_value is None or value < best_value:
            best_name, best_value, best_fuser = name, value, fuser

    selected = [best_name]
    trace = [best_value]
    fuser = best_fuser

    while True:
        remaining = [n for n in sorted(arrays) if n not in selected]
        if not remaining:
            break
        step_name, step_value, step_fuser = None, None, None
        for name in remaining:
            matrix = np.column_stack([arrays[n] for n in selected + [name]])
            candidate = LinearFuser(params, tol, max_iter).fit(matrix, labels)
            value = dev_actdcf(candidate.transform(matrix))
            if step_value is None or value < step_value:
                step_name, step_value, step_fuser = name, value, candidate
        if step_value >= trace[-1] - _MIN_IMPROVEMENT:
            break
        selected.append(step_name)
        trace.append(step_value)
        fuser = step_fuser

    return GreedySelection(tuple(selected), tuple(trace), fuser)


# --- submission pipeline ----------------------------------------------------------


@dataclass(frozen=True)
class PipelineResult:
    scores: np.ndarray
    calibrations: dict
    audio_selection: GreedySelection | None
    video_selection: GreedySelection | None
    cross_fusion: LinearFuser | None
    final_calibration: AffineCalibrator


def submission_pipeline(
    audio_systems,
    video_systems,
    labels,
    params=DcfParams(),
    tol=1e-9,
    max_iter=100,
):
    """Run the 4-step submission recipe on aligned, labeled dev systems.

    1. per-system calibration;
    2. per-modality greedy fusion (audio and video separately);
    3. cross-modality linear fusion (identity when a modality is empty);
    4. final calibration of the fused scores.
    """
    audio = _as_named_arrays(audio_systems or {})
    video = _as_named_arrays(video_systems or {})
    if not audio and not video:
        raise DataError("at least one modality must have systems")
    labels = np.asarray(labels, dtype=bool)

    # step 1
    calibrations = {}
    calibrated = {}
    for name, scores in {**audio, **video}.items():
        cal = AffineCalibrator(params, tol, max_iter).fit(scores, labels)
        calibrations[name] = cal
        calibrated[name] = cal.transform(scores)

    # step 2
    def fuse_modality(names):
        if not names:
            return None, None
        subset = {n: calibrated[n] for n in names}
        selection = greedy_fuse(subset, labels, params, tol, max_iter)
        return selection, selection.fused_scores(subset)

    audio_selection, audio_scores = fuse_modality(audio)
    video_selection, video_scores = fuse_modality(video)

    # step 3
    cross_fusion = None
    if audio_scores is not None and video_scores is not None:
        cross_fusion = LinearFuser(params, tol, max_iter)
        matrix = np.column_stack([audio_scores, video_scores])
        fused = cross_fusion.fit_transform(matrix, labels)
    else:
        fused = audio_scores if audio_scores is not None else video_scores

    # step 4
    final_calibration = AffineCalibrator(params, tol, max_iter).fit(fused, labels)
    final_scores = final_calibration.transform(fused)

    return PipelineResult(
        scores=final_scores,
        calibrations=calibrations,
        audio_selection=audio_selection,
        video_selection=video_selection,
        cross_fusion=cross_fusion,
        final_calibration=final_calibration,
    )


# --- model files ------------------------------------------------------------------


def write_fusion(fuser, system_names, fp):
    check_same_length(fuser.weights_, system_names, "weights and system names")
    fp.write("# fusion\t" + "\t".join(system_names) + "\n")
    weights = ",".join(f"{w:.17g}" for w in fuser.weights_)
    fp.write(f"{weights}\t{fuser.offset_:.17g}\n")


def read_fusion(fp, path=None):
    """Returns (system_names, weights, offset)."""
    names = None
    for line in fp:
        line = line.rstrip("\n")
        if not line:
            continue
        if line.startswith("# fusion\t"):
            names = tuple(line.split("\t")[1:])
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise DataError(f"{path or '<model>'}: expected 'w1,..,wk<TAB>b'")
        weights = np.array([float(x) for x in cols[0].split(",")])
        offset = float(cols[1])
        if names is not None and len(names) != weights.size:
            raise DataError(f"{path or '<model>'}: header/weight count mismatch")
        return names, weights, offset
    raise DataError(f"{path or '<model>'}: no model line found")
