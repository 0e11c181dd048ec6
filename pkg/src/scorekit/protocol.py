"""Trial protocol parsing: trial lists, keys, segment metadata, channel pairs.

All on-disk formats are UTF-8, LF-terminated, tab-separated:

* metadata file:  ``segment_id<TAB>{tel|mic}``
* trial list:     ``enroll_id<TAB>test_id``
* key file:       ``enroll_id<TAB>test_id<TAB>{target|nontarget}``

Parsing is total: every input either yields a value or raises a positioned
error.  Parsed structures are immutable and safe for shared read-only use.
"""

import enum
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import (
    BadLabel,
    DuplicateSegment,
    DuplicateTrial,
    MalformedLine,
    MissingMeta,
    UnknownSourceType,
)

TARGET = "target"
NONTARGET = "nontarget"


class SourceType(str, enum.Enum):
    """Recording medium of a segment.  The protocol knows exactly two."""

    TEL = "tel"
    MIC = "mic"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ChannelPair:
    """Ordered (enroll side, test side) source types; (tel,mic) != (mic,tel)."""

    enroll_side: SourceType
    test_side: SourceType

    @property
    def key(self):
        return f"{self.enroll_side.value}-{self.test_side.value}"

    @classmethod
    def from_key(cls, key):
        try:
            e, t = key.split("-")
            return cls(SourceType(e), SourceType(t))
        except ValueError:
            raise UnknownSourceType(f"bad channel pair {key!r}") from None

    def __str__(self):
        return self.key


ALL_PAIRS = tuple(
    ChannelPair(e, t) for e in SourceType for t in SourceType
)


@dataclass(frozen=True)
class SegmentMeta:
    segment_id: str
    source_type: SourceType


@dataclass(frozen=True)
class Trial:
    enroll_id: str
    test_id: str
    label: str | None = None
    channel_pair: ChannelPair | None = None

    def __post_init__(self):
        if not self.enroll_id or not self.test_id:
            raise MalformedLine("trial ids must be non-empty")
        if self.label is not None and self.label not in (TARGET, NONTARGET):
            raise BadLabel(f"bad label {self.label!r}")

    @property
    def pair_ids(self):
        return (self.enroll_id, self.test_id)


@dataclass(frozen=True)
class TrialSet:
    """Ordered, duplicate-free sequence of trials."""

    trials: tuple

    def __post_init__(self):
        seen = set()
        for t in self.trials:
            if t.pair_ids in seen:
                raise DuplicateTrial(
                    f"duplicate trial {t.enroll_id}\t{t.test_id}"
                )
            seen.add(t.pair_ids)

    def __len__(self):
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    def __getitem__(self, i):
        return self.trials[i]

    @property
    def has_labels(self):
        return bool(self.trials) and self.trials[0].label is not None

    @cached_property
    def enroll_ids(self):
        return tuple(t.enroll_id for t in self.trials)

    @cached_property
    def test_ids(self):
        return tuple(t.test_id for t in self.trials)

    @cached_property
    def target_mask(self):
        """Boolean array, True for target trials.  Requires labels."""
        if not self.has_labels:
            raise BadLabel("trial set carries no labels")
        return np.array([t.label == TARGET for t in self.trials], dtype=bool)

    @cached_property
    def channel_pairs(self):
        """Tuple of per-trial channel pairs (entries may be None)."""
        return tuple(t.channel_pair for t in self.trials)

    def with_channel_pairs(self, meta):
        """Return a copy with channel pairs derived from ``meta``."""
        trials = tuple(
            Trial(t.enroll_id, t.test_id, t.label, channel_pair_of(t, meta))
            for t in self.trials
        )
        return TrialSet(trials)


def _lines(text):
    if isinstance(text, str):
        text = io.StringIO(text)
    for line_no, line in enumerate(text, start=1):
        line = line.rstrip("\n")
        if line:
            yield line_no, line


def parse_segment_meta(text, path=None):
    """Parse ``segment_id<TAB>source_type`` lines into an id -> meta map."""
    meta = {}
    for line_no, line in _lines(text):
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0]:
            raise MalformedLine(
                f"expected 'segment_id<TAB>source_type', got {line!r}",
                line_no,
                path,
            )
        seg_id, src = cols
        try:
            source_type = SourceType(src)
        except ValueError:
            raise UnknownSourceType(
                f"unknown source type {src!r}", line_no, path
            ) from None
        if seg_id in meta:
            raise DuplicateSegment(f"duplicate segment id {seg_id!r}")
        meta[seg_id] = SegmentMeta(seg_id, source_type)
    return meta


def write_segment_meta(meta, fp):
    for seg in meta.values():
        fp.write(f"{seg.segment_id}\t{seg.source_type.value}\n")


def channel_pair_of(trial, meta):
    """Ordered channel pair of a trial, enroll side first."""
    for seg_id in trial.pair_ids:
        if seg_id not in meta:
            raise MissingMeta(f"segment {seg_id!r} not in metadata")
    return ChannelPair(
        meta[trial.enroll_id].source_type, meta[trial.test_id].source_type
    )


def parse_trials(text, key_present, meta=None, path=None):
    """Parse a trial list (or key file, when ``key_present``) into a TrialSet.

    Labels are filled iff ``key_present``; channel pairs are filled iff a
    metadata map is supplied.
    """
    want_cols = 3 if key_present else 2
    trials = []
    seen = set()
    for line_no, line in _lines(text):
        cols = line.split("\t")
        if len(cols) != want_cols or not cols[0] or not cols[1]:
            raise MalformedLine(
                f"expected {want_cols} tab-separated columns, got {line!r}",
                line_no,
                path,
            )
        label = None
        if key_present:
            label = cols[2]
            if label not in (TARGET, NONTARGET):
                raise BadLabel(f"bad label {label!r}", line_no, path)
        pair = (cols[0], cols[1])
        if pair in seen:
            raise DuplicateTrial(f"duplicate trial {cols[0]}\t{cols[1]}")
        seen.add(pair)
        trial = Trial(cols[0], cols[1], label)
        if meta is not None:
            trial = Trial(cols[0], cols[1], label, channel_pair_of(trial, meta))
        trials.append(trial)
    return TrialSet(tuple(trials))


def write_trials(trial_set, fp):
    """Serialize a TrialSet back to its on-disk form (pairs derived from
    metadata are not written; they are not part of the format)."""
    for t in trial_set:
        if t.label is None:
            fp.write(f"{t.enroll_id}\t{t.test_id}\n")
        else:
            fp.write(f"{t.enroll_id}\t{t.test_id}\t{t.label}\n")
