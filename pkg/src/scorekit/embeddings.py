"""Embedding storage, normalization, fusion and codecs.

An :class:`EmbeddingSet` maps string ids to fixed-dimension float vectors,
held as one matrix for vectorized scoring.  A set whose coordinates are
classifier logits (one per training class) may carry ``class_labels``; such
sets support weighted fusion and class filtering.

On-disk formats:

* text:   ``id<TAB>v1,v2,...,vD`` one record per line, 17 significant digits
* binary: magic ``EMB1``, u32 dim, u64 count, then per record
  u16 id length, UTF-8 id, dim float32 values; little-endian throughout
"""

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import (
    BadIndex,
    BadMagic,
    BadWeights,
    ClassMismatch,
    DataError,
    DimMismatch,
    EmptyPool,
    IdMismatch,
    MissingEmbedding,
    TruncatedFile,
    ZeroVector,
)
from .validation import as_matrix, as_vector, readonly

_MAGIC = b"EMB1"


def l2_normalize(v):
    """Scale ``v`` to unit euclidean norm, preserving direction."""
    v = as_vector(v, "vector")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return v / norm


@dataclass(frozen=True)
class EmbeddingRecord:
    id: str
    vector: np.ndarray

    @property
    def dim(self):
        return self.vector.shape[0]


@dataclass(frozen=True)
class EmbeddingSet:
    """Immutable id -> vector store over a single (n, dim) matrix.

    ``class_labels``, when present, names the coordinate axes (one training
    class per dimension) and marks the set as a class-posterior logit set.
    """

    ids: tuple
    matrix: np.ndarray
    class_labels: tuple | None = None

    def __post_init__(self):
        matrix = as_matrix(self.matrix, "embedding matrix")
        object.__setattr__(self, "matrix", readonly(matrix))
        object.__setattr__(self, "ids", tuple(self.ids))
        if len(self.ids) != matrix.shape[0]:
            raise DataError(
                f"{len(self.ids)} ids for {matrix.shape[0]} vectors"
            )
        if len(set(self.ids)) != len(self.ids):
            raise DataError("embedding ids must be unique")
        if self.class_labels is not None:
            object.__setattr__(self, "class_labels", tuple(self.class_labels))
            if len(self.class_labels) != matrix.shape[1]:
                raise ClassMismatch(
                    f"{len(self.class_labels)} class labels for "
                    f"dim {matrix.shape[1]}"
                )

    @classmethod
    def from_dict(cls, mapping, class_labels=None):
        ids = tuple(mapping)
        matrix = np.array([np.asarray(mapping[i], dtype=np.float64) for i in ids])
        return cls(ids, matrix, class_labels)

    @property
    def dim(self):
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.ids)

    def __contains__(self, id_):
        return id_ in self.index

    def __iter__(self):
        for i, id_ in enumerate(self.ids):
            yield EmbeddingRecord(id_, self.matrix[i])

    @cached_property
    def index(self):
        return {id_: i for i, id_ in enumerate(self.ids)}

    def vector(self, id_):
        try:
            return self.matrix[self.index[id_]]
        except KeyError:
            raise MissingEmbedding(f"no embedding for id {id_!r}") from None

    def rows(self, ids):
        """(len(ids), dim) view of the vectors for ``ids``, in order."""
        try:
            idx = np.fromiter(
                (self.index[i] for i in ids), dtype=np.intp, count=len(ids)
            )
        except KeyError as exc:
            raise MissingEmbedding(f"no embedding for id {exc.args[0]!r}") from None
        return self.matrix[idx]


def fuse_cl(sets, weights):
    """Weighted sum of class-logit sets sharing classes and ids.

    Weights are relative: the result is ``sum(w_i * v_i) / sum(w)``, so any
    positive rescaling of ``weights`` yields the same fused set.  Record
    order follows the first input set.
    """
    sets = list(sets)
    if len(sets) < 2:
        raise BadWeights("fusion needs at least two input sets")
    weights = as_vector(weights, "weights")
    if len(weights) != len(sets):
        raise BadWeights(f"{len(weights)} weights for {len(sets)} sets")
    wsum = weights.sum()
    if not wsum > 0:
        raise BadWeights("weights must sum to a positive value")

    first = sets[0]
    for s in sets[1:]:
        if s.dim != first.dim:
            raise ClassMismatch(f"dim mismatch: {s.dim} vs {first.dim}")
        if s.class_labels != first.class_labels:
            raise ClassMismatch("class label sequences differ between sets")
        if set(s.ids) != set(first.ids):
            raise IdMismatch("id sets differ between inputs")

    fused = np.zeros_like(first.matrix)
    for w, s in zip(weights, sets):
        if s is first:
            fused += w * s.matrix
        else:
            perm = np.fromiter(
                (s.index[i] for i in first.ids), dtype=np.intp, count=len(first)
            )
            fused += w * s.matrix[perm]
    fused /= wsum
    return EmbeddingSet(first.ids, fused, first.class_labels)


def filter_classes(emb_set, keep):
    """Project every vector onto the kept class coordinates."""
    keep = np.asarray(keep, dtype=np.intp)
    if keep.size == 0:
        raise BadIndex("keep indices must be non-empty")
    if np.any(keep < 0) or np.any(keep >= emb_set.dim):
        raise BadIndex(f"keep indices out of range for dim {emb_set.dim}")
    if np.any(np.diff(keep) <= 0):
        raise BadIndex("keep indices must be strictly increasing")
    labels = emb_set.class_labels
    if labels is not None:
        labels = tuple(labels[i] for i in keep)
    return EmbeddingSet(emb_set.ids, emb_set.matrix[:, keep], labels)


def rank_class_informativeness(pool):
    """Rank classes by how much their logit varies over a pool of embeddings.

    A class whose logit is (near-)constant across the pool cannot separate
    identities; the score is the per-class population variance.  Returns a
    permutation of ``0..dim-1``, most informative first, ties broken by
    ascending index.
    """
    if len(pool) == 0:
        raise EmptyPool("informativeness pool is empty")
    var = np.var(pool.matrix, axis=0)
    return np.argsort(-var, kind="stable")


# --- codecs ------------------------------------------------------------------


def write_embeddings_text(emb_set, fp):
    for rec in emb_set:
        values = ",".join(format(x, ".17g") for x in rec.vector)
        fp.write(f"{rec.id}\t{values}\n")


def read_embeddings_text(fp, path=None):
    ids = []
    vectors = []
    dim = None
    for line_no, line in enumerate(fp, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0]:
            raise DataError(f"{path or '<text>'}:{line_no}: bad embedding line")
        try:
            vec = np.array([float(x) for x in cols[1].split(",")])
        except ValueError:
            raise DataError(
                f"{path or '<text>'}:{line_no}: bad vector component"
            ) from None
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise DimMismatch(
                f"{path or '<text>'}:{line_no}: dim {vec.size}, expected {dim}"
            )
        ids.append(cols[0])
        vectors.append(vec)
    if not ids:
        raise DataError(f"{path or '<text>'}: no embedding records")
    return EmbeddingSet(tuple(ids), np.array(vectors))


def write_embeddings_binary(emb_set, fp):
    fp.write(_MAGIC)
    fp.write(struct.pack("<IQ", emb_set.dim, len(emb_set)))
    for rec in emb_set:
        id_bytes = rec.id.encode("utf-8")
        fp.write(struct.pack("<H", len(id_bytes)))
        fp.write(id_bytes)
        fp.write(rec.vector.astype("<f4").tobytes())


def _read_exact(fp, n, what):
    buf = fp.read(n)
    if len(buf) != n:
        raise TruncatedFile(f"file ended while reading {what}")
    return buf


def read_embeddings_binary(fp):
    magic = fp.read(len(_MAGIC))
    if magic != _MAGIC:
        raise BadMagic(f"expected magic {_MAGIC!r}, got {magic!r}")
    dim, count = struct.unpack("<IQ", _read_exact(fp, 12, "header"))
    ids = []
    vectors = np.empty((count, dim))
    for k in range(count):
        (id_len,) = struct.unpack("<H", _read_exact(fp, 2, "record id length"))
        ids.append(_read_exact(fp, id_len, "record id").decode("utf-8"))
        raw = _read_exact(fp, 4 * dim, "record vector")
        vectors[k] = np.frombuffer(raw, dtype="<f4")
    return EmbeddingSet(tuple(ids), vectors)


def write_embeddings(path, emb_set, fmt="binary"):
    if fmt == "binary":
        with open(path, "wb") as fp:
            write_embeddings_binary(emb_set, fp)
    elif fmt == "text":
        with open(path, "w", encoding="utf-8") as fp:
            write_embeddings_text(emb_set, fp)
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")


def read_embeddings(path):
    """Load an embedding file, sniffing binary vs text by the magic bytes."""
    with open(path, "rb") as fp:
        is_binary = fp.read(len(_MAGIC)) == _MAGIC
    if is_binary:
        with open(path, "rb") as fp:
            return read_embeddings_binary(fp)
    with open(path, "r", encoding="utf-8") as fp:
        return read_embeddings_text(fp, path=path)
