import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scorekit.embeddings import (
    EmbeddingSet,
    filter_classes,
    fuse_cl,
    l2_normalize,
    rank_class_informativeness,
    read_embeddings,
    read_embeddings_binary,
    read_embeddings_text,
    write_embeddings,
    write_embeddings_binary,
    write_embeddings_text,
)
from scorekit.exceptions import (
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
from scorekit.scoring import cosine

from .oracles import population_variance_two_pass


class TestL2Normalize:
    def test_three_four_five(self):
        assert np.allclose(l2_normalize([3.0, 4.0]), [0.6, 0.8], atol=1e-15)

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            l2_normalize([0.0, 0.0])

    def test_identity_on_unit(self):
        assert np.array_equal(l2_normalize([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])

    @given(
        st.lists(
            st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=16
        ).filter(lambda v: any(abs(x) > 1e-6 for x in v))
    )
    def test_unit_norm_and_direction(self, v):
        u = l2_normalize(v)
        assert abs(np.linalg.norm(u) - 1.0) <= 1e-12
        assert cosine(u, v) >= 1.0 - 1e-12


class TestEmbeddingSet:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError):
            EmbeddingSet(("a", "a"), np.eye(2))

    def test_missing_id(self):
        s = EmbeddingSet(("a",), [[1.0, 2.0]])
        with pytest.raises(MissingEmbedding):
            s.vector("b")

    def test_rows_order(self):
        s = EmbeddingSet(("a", "b"), [[1.0, 0.0], [0.0, 1.0]])
        assert np.array_equal(s.rows(["b", "a", "b"]), [[0, 1], [1, 0], [0, 1]])

    def test_matrix_read_only(self):
        s = EmbeddingSet(("a",), [[1.0, 2.0]])
        with pytest.raises(ValueError):
            s.matrix[0, 0] = 3.0


class TestFuseCl:
    def _pair(self, v1, v2, labels=None):
        a = EmbeddingSet(("x", "y"), np.array([v1, v1]), labels)
        b = EmbeddingSet(("x", "y"), np.array([v2, v2]), labels)
        return a, b

    def test_equal_weights_average(self):
        a, b = self._pair([1.0, 0.0], [0.0, 1.0])
        fused = fuse_cl([a, b], [0.5, 0.5])
        assert np.allclose(fused.matrix, [[0.5, 0.5], [0.5, 0.5]])

    def test_zero_weight_identity(self):
        a, b = self._pair([1.0, 2.0], [5.0, -1.0])
        fused = fuse_cl([a, b], [1.0, 0.0])
        assert np.array_equal(fused.matrix, a.matrix)
        assert fused.ids == a.ids

    def test_class_label_mismatch(self):
        a = EmbeddingSet(("x",), [[1.0, 0.0]], class_labels=("A", "B"))
        b = EmbeddingSet(("x",), [[0.0, 1.0]], class_labels=("B", "A"))
        with pytest.raises(ClassMismatch):
            fuse_cl([a, b], [0.5, 0.5])

    def test_id_mismatch(self):
        a = EmbeddingSet(("x",), [[1.0]])
        b = EmbeddingSet(("y",), [[1.0]])
        with pytest.raises(IdMismatch):
            fuse_cl([a, b], [0.5, 0.5])

    def test_id_alignment_not_positional(self):
        a = EmbeddingSet(("x", "y"), [[1.0], [2.0]])
        b = EmbeddingSet(("y", "x"), [[20.0], [10.0]])
        fused = fuse_cl([a, b], [0.5, 0.5])
        assert fused.ids == ("x", "y")
        assert np.allclose(fused.matrix[:, 0], [5.5, 11.0])

    def test_bad_weights(self):
        a, b = self._pair([1.0], [2.0])
        with pytest.raises(BadWeights):
            fuse_cl([a, b], [1.0])
        with pytest.raises(BadWeights):
            fuse_cl([a, b], [1.0, -1.0])
        with pytest.raises(BadWeights):
            fuse_cl([a], [1.0])

    def test_permutation_invariance_equal_weights(self, rng):
        sets = [
            EmbeddingSet(("p", "q"), rng.standard_normal((2, 3)))
            for _ in range(3)
        ]
        f1 = fuse_cl(sets, [1.0, 1.0, 1.0])
        f2 = fuse_cl(sets[::-1], [1.0, 1.0, 1.0])
        assert np.allclose(f1.matrix, f2.rows(f1.ids), atol=1e-12)

    @given(st.floats(1e-3, 1e3))
    @settings(max_examples=30)
    def test_weight_scale_invariance(self, alpha):
        a = EmbeddingSet(("x",), [[1.0, -2.0]])
        b = EmbeddingSet(("x",), [[3.0, 0.5]])
        f1 = fuse_cl([a, b], [0.3, 0.7])
        f2 = fuse_cl([a, b], [0.3 * alpha, 0.7 * alpha])
        assert np.allclose(f1.matrix, f2.matrix, rtol=1e-12, atol=1e-12)


class TestFilterClasses:
    def test_identity(self):
        s = EmbeddingSet(("a",), [[1.0, 2.0, 3.0, 4.0]])
        assert np.array_equal(filter_classes(s, [0, 1, 2, 3]).matrix, s.matrix)

    def test_projection(self):
        s = EmbeddingSet(("a",), [[5.0, 1.0, 9.0, 2.0]])
        assert np.array_equal(filter_classes(s, [0, 2]).matrix, [[5.0, 9.0]])

    def test_bad_index(self):
        s = EmbeddingSet(("a",), [[1.0, 2.0, 3.0, 4.0]])
        with pytest.raises(BadIndex):
            filter_classes(s, [4])
        with pytest.raises(BadIndex):
            filter_classes(s, [])
        with pytest.raises(BadIndex):
            filter_classes(s, [2, 1])

    def test_labels_filtered(self):
        s = EmbeddingSet(("a",), [[1.0, 2.0, 3.0]], class_labels=("u", "v", "w"))
        assert filter_classes(s, [0, 2]).class_labels == ("u", "w")

    def test_composition(self, rng):
        s = EmbeddingSet(("a", "b"), rng.standard_normal((2, 8)))
        outer = np.array([0, 2, 3, 5, 7])
        inner = np.array([1, 2, 4])
        left = filter_classes(filter_classes(s, outer), inner)
        right = filter_classes(s, outer[inner])
        assert np.array_equal(left.matrix, right.matrix)


class TestRankInformativeness:
    def test_constant_class_least_informative(self):
        pool = EmbeddingSet(
            ("a", "b", "c"), [[1.0, 0.0], [1.0, 5.0], [1.0, -5.0]]
        )
        assert rank_class_informativeness(pool).tolist() == [1, 0]

    def test_all_constant_preserves_order(self):
        pool = EmbeddingSet(("a", "b"), [[2.0, 3.0, 4.0], [2.0, 3.0, 4.0]])
        assert rank_class_informativeness(pool).tolist() == [0, 1, 2]

    def test_empty_pool(self):
        with pytest.raises(EmptyPool):
            rank_class_informativeness(EmbeddingSet((), np.empty((0, 3))))

    def test_matches_two_pass_variance(self, rng):
        pool = EmbeddingSet(
            tuple(f"r{i}" for i in range(10)), rng.standard_normal((10, 3))
        )
        variances = [
            population_variance_two_pass(pool.matrix[:, j].tolist())
            for j in range(3)
        ]
        expected = sorted(range(3), key=lambda j: (-variances[j], j))
        got = rank_class_informativeness(pool).tolist()
        assert got == expected


class TestCodecs:
    def test_binary_round_trip_bit_exact(self, rng):
        values = rng.random((40, 512), dtype=np.float32).astype(np.float64)
        s = EmbeddingSet(tuple(f"id{i}" for i in range(40)), values)
        buf = io.BytesIO()
        write_embeddings_binary(s, buf)
        buf.seek(0)
        back = read_embeddings_binary(buf)
        assert back.ids == s.ids
        assert np.array_equal(back.matrix, s.matrix)

    def test_binary_file_round_trip_bytes(self, rng):
        values = rng.random((5, 7), dtype=np.float32).astype(np.float64)
        s = EmbeddingSet(tuple("abcde"), values)
        buf1 = io.BytesIO()
        write_embeddings_binary(s, buf1)
        buf1.seek(0)
        buf2 = io.BytesIO()
        write_embeddings_binary(read_embeddings_binary(buf1), buf2)
        assert buf1.getvalue() == buf2.getvalue()

    def test_bad_magic(self):
        with pytest.raises(BadMagic):
            read_embeddings_binary(io.BytesIO(b"NOPE" + b"\x00" * 16))

    def test_truncated(self, rng):
        s = EmbeddingSet(("a", "b"), rng.standard_normal((2, 4)))
        buf = io.BytesIO()
        write_embeddings_binary(s, buf)
        data = buf.getvalue()
        with pytest.raises(TruncatedFile):
            read_embeddings_binary(io.BytesIO(data[:-3]))

    def test_text_round_trip(self, rng):
        s = EmbeddingSet(("a", "b"), rng.standard_normal((2, 6)))
        buf = io.StringIO()
        write_embeddings_text(s, buf)
        buf.seek(0)
        back = read_embeddings_text(buf)
        assert back.ids == s.ids
        assert np.array_equal(back.matrix, s.matrix)  # 17 digits round-trips

    def test_text_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            read_embeddings_text(io.StringIO("a\t1,2\nb\t1,2,3\n"))

    def test_sniffing_reader(self, tmp_path, rng):
        # binary stores float32, so use float32-representable values there
        s32 = EmbeddingSet(
            ("a", "b"),
            rng.standard_normal((2, 3)).astype(np.float32).astype(np.float64),
        )
        s64 = EmbeddingSet(("a", "b"), rng.standard_normal((2, 3)))
        bin_path = tmp_path / "x.emb"
        txt_path = tmp_path / "x.tsv"
        write_embeddings(bin_path, s32, fmt="binary")
        write_embeddings(txt_path, s64, fmt="text")
        assert np.array_equal(read_embeddings(bin_path).matrix, s32.matrix)
        assert np.array_equal(read_embeddings(txt_path).matrix, s64.matrix)
