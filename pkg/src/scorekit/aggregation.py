"""Multi-frame test aggregation for video trials.

An enrollment image is compared against many test-video frames.  Four
reduction methods are supported:

* MS    max cosine score over frames
* ATE   cosine against the mean of the l2-normalized frames
* WATE  cosine against the recognizability-weighted mean of the normalized
        frames, dropping frames whose recognizability falls below a threshold
* MRS   cosine against the single most recognizable frame

Recognizability of a frame is an affine function of its cosine distance to a
fixed "unrecognizable identity" centroid, computed offline per extractor and
supplied as an input here.  With the stock constants (0.35 offset, 0.89
scale) the value spans roughly 0..1 on real data; it is deliberately not
clamped, since clamping would silently distort WATE weights.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    AllFramesUnrecognizable,
    DataError,
    MalformedLine,
    NoFrames,
)
from .scoring import ScoreSet, Stage, cosine, unit_rows
from .validation import as_vector, check_same_dim


class AggregationMethod(str, enum.Enum):
    MS = "MS"
    ATE = "ATE"
    WATE = "WATE"
    MRS = "MRS"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RecognizabilityParams:
    """Unrecognizable-identity centroid plus the affine constants."""

    ui_embedding: np.ndarray
    offset: float = 0.35
    scale: float = 0.89
    wate_threshold: float = 0.65

    def __post_init__(self):
        object.__setattr__(
            self, "ui_embedding", as_vector(self.ui_embedding, "ui_embedding")
        )
        if not self.scale > 0:
            raise DataError("recognizability scale must be > 0")
        if not 0.0 <= self.wate_threshold <= 1.0:
            raise DataError("WATE threshold must lie in [0, 1]")


def recognizability(x_t, params):
    """((1 - cos(x_t, ui)) - offset) / scale; decreasing in the cosine."""
    return ((1.0 - cosine(x_t, params.ui_embedding)) - params.offset) / params.scale


def _frame_recognizability(frames, params):
    ui = params.ui_embedding / np.linalg.norm(params.ui_embedding)
    cos = unit_rows(frames, "frame") @ ui
    return ((1.0 - cos) - params.offset) / params.scale


def aggregate_frames(enroll, frames, method, params=None):
    """Reduce a (n_frames, dim) block of test frames to one trial score.

    ``params`` is required for WATE and MRS.
    """
    method = AggregationMethod(method)
    enroll = as_vector(enroll, "enroll")
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise NoFrames("at least one test frame is required")
    check_same_dim(enroll, frames)

    if method is AggregationMethod.MS:
        scores = unit_rows(frames, "frame") @ (enroll / np.linalg.norm(enroll))
        return float(scores.max())

    if method is AggregationMethod.ATE:
        return cosine(enroll, unit_rows(frames, "frame").mean(axis=0))

    if params is None:
        raise DataError(f"{method} aggregation needs recognizability params")
    rs = _frame_recognizability(frames, params)

    if method is AggregationMethod.MRS:
        return cosine(enroll, frames[int(np.argmax(rs))])

    # WATE
    keep = rs >= params.wate_threshold
    if not np.any(keep):
        raise AllFramesUnrecognizable(
            f"no frame reaches recognizability {params.wate_threshold}"
        )
    unit = unit_rows(frames[keep], "frame")
    weights = rs[keep]
    weighted = weights @ unit / weights.sum()
    return cosine(enroll, weighted)


# --- frame tables -------------------------------------------------------------


def parse_frame_table(fp, path=None):
    """Parse ``test_id<TAB>frame_index<TAB>embedding_id`` lines.

    Returns test_id -> list of embedding ids, ordered by frame index.
    """
    rows = {}
    for line_no, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 3 or not cols[0] or not cols[2]:
            raise MalformedLine(
                f"expected 'test_id<TAB>frame_index<TAB>embedding_id', "
                f"got {line!r}",
                line_no,
                path,
            )
        try:
            frame_index = int(cols[1])
        except ValueError:
            raise MalformedLine(
                f"bad frame index {cols[1]!r}", line_no, path
            ) from None
        frames = rows.setdefault(cols[0], {})
        if frame_index in frames:
            raise DataError(
                f"duplicate frame {frame_index} for test id {cols[0]!r}"
            )
        frames[frame_index] = cols[2]
    return {
        test_id: [frames[k] for k in sorted(frames)]
        for test_id, frames in rows.items()
    }


def score_multiframe_trials(
    trials, enroll, frame_embeddings, frame_table, method, params=None
):
    """Aggregate frame scores for every trial; test ids index the frame table."""
    scores = np.empty(len(trials))
    for i, trial in enumerate(trials):
        frame_ids = frame_table.get(trial.test_id)
        if not frame_ids:
            raise NoFrames(f"no frames listed for test id {trial.test_id!r}")
        frames = frame_embeddings.rows(frame_ids)
        scores[i] = aggregate_frames(
            enroll.vector(trial.enroll_id), frames, method, params
        )
    return ScoreSet(trials, scores, Stage.RAW)
