import io

import pytest
from hypothesis import given, strategies as st

from scorekit.exceptions import (
    BadLabel,
    DuplicateSegment,
    DuplicateTrial,
    MalformedLine,
    MissingMeta,
    UnknownSourceType,
)
from scorekit.protocol import (
    ALL_PAIRS,
    ChannelPair,
    SourceType,
    Trial,
    TrialSet,
    channel_pair_of,
    parse_segment_meta,
    parse_trials,
    write_segment_meta,
    write_trials,
)


class TestSegmentMeta:
    def test_basic_parse(self):
        meta = parse_segment_meta("u1\ttel\nu2\tmic\n")
        assert meta["u1"].source_type is SourceType.TEL
        assert meta["u2"].source_type is SourceType.MIC
        assert len(meta) == 2

    def test_empty_input(self):
        assert parse_segment_meta("") == {}

    def test_unknown_source_type(self):
        with pytest.raises(UnknownSourceType) as exc:
            parse_segment_meta("u1\tsat\n")
        assert exc.value.line_no == 1

    def test_duplicate_segment(self):
        with pytest.raises(DuplicateSegment):
            parse_segment_meta("u1\ttel\nu1\ttel\n")

    def test_malformed_line(self):
        with pytest.raises(MalformedLine) as exc:
            parse_segment_meta("u1\ttel\nu2 mic\n")
        assert exc.value.line_no == 2

    def test_round_trip(self):
        text = "a\ttel\nb\tmic\nc\ttel\n"
        out = io.StringIO()
        write_segment_meta(parse_segment_meta(text), out)
        assert out.getvalue() == text


class TestTrials:
    META = {"e1": "tel", "t1": "mic"}

    def _meta(self):
        return parse_segment_meta("e1\ttel\nt1\tmic\n")

    def test_key_line_with_meta(self):
        ts = parse_trials("e1\tt1\ttarget\n", key_present=True, meta=self._meta())
        (trial,) = ts
        assert trial.label == "target"
        assert trial.channel_pair == ChannelPair(SourceType.TEL, SourceType.MIC)

    def test_duplicate_trial(self):
        with pytest.raises(DuplicateTrial):
            parse_trials("e1\tt1\ttarget\ne1\tt1\ttarget\n", key_present=True)

    def test_missing_label_when_key_expected(self):
        with pytest.raises(MalformedLine) as exc:
            parse_trials("e1\tt1\n", key_present=True)
        assert exc.value.line_no == 1

    def test_bad_label(self):
        with pytest.raises(BadLabel) as exc:
            parse_trials("e1\tt1\tgenuine\n", key_present=True)
        assert exc.value.line_no == 1

    def test_unexpected_label_column(self):
        with pytest.raises(MalformedLine):
            parse_trials("e1\tt1\ttarget\n", key_present=False)

    def test_label_iff_key(self):
        ts = parse_trials("e1\tt1\n", key_present=False)
        assert ts[0].label is None
        assert not ts.has_labels

    def test_round_trip_without_key(self):
        text = "e1\tt1\ne2\tt2\ne1\tt2\n"
        out = io.StringIO()
        write_trials(parse_trials(text, key_present=False), out)
        assert out.getvalue() == text

    def test_round_trip_with_key(self):
        text = "e1\tt1\ttarget\ne2\tt2\tnontarget\n"
        out = io.StringIO()
        write_trials(parse_trials(text, key_present=True), out)
        assert out.getvalue() == text

    @given(
        st.lists(
            st.tuples(
                st.text("abcdef", min_size=1, max_size=4),
                st.text("uvwxyz", min_size=1, max_size=4),
                st.sampled_from(["target", "nontarget"]),
            ),
            min_size=1,
            max_size=20,
            unique_by=lambda t: (t[0], t[1]),
        )
    )
    def test_round_trip_property(self, rows):
        text = "".join(f"{e}\t{t}\t{lab}\n" for e, t, lab in rows)
        out = io.StringIO()
        write_trials(parse_trials(text, key_present=True), out)
        assert out.getvalue() == text


class TestChannelPairs:
    def test_ordered_pairs_distinct(self):
        tel_mic = ChannelPair(SourceType.TEL, SourceType.MIC)
        mic_tel = ChannelPair(SourceType.MIC, SourceType.TEL)
        assert tel_mic != mic_tel
        assert len(ALL_PAIRS) == 4

    def test_pair_of_trial(self):
        meta = parse_segment_meta("e\ttel\nt\ttel\n")
        pair = channel_pair_of(Trial("e", "t"), meta)
        assert pair == ChannelPair(SourceType.TEL, SourceType.TEL)

    def test_enroll_side_first(self):
        meta = parse_segment_meta("e\ttel\nt\tmic\n")
        assert channel_pair_of(Trial("e", "t"), meta).key == "tel-mic"

    def test_missing_meta(self):
        meta = parse_segment_meta("e\ttel\n")
        with pytest.raises(MissingMeta):
            channel_pair_of(Trial("e", "t"), meta)

    def test_pair_key_round_trip(self):
        for pair in ALL_PAIRS:
            assert ChannelPair.from_key(pair.key) == pair

    def test_pairs_subset_of_four(self, fixture_small):
        assert set(fixture_small.trials.channel_pairs) <= set(ALL_PAIRS)


class TestTrialSet:
    def test_duplicate_rejected_at_construction(self):
        with pytest.raises(DuplicateTrial):
            TrialSet((Trial("a", "b"), Trial("a", "b")))

    def test_target_mask(self):
        ts = parse_trials("e1\tt1\ttarget\ne2\tt2\tnontarget\n", key_present=True)
        assert ts.target_mask.tolist() == [True, False]

    def test_target_mask_requires_labels(self):
        ts = parse_trials("e1\tt1\n", key_present=False)
        with pytest.raises(BadLabel):
            ts.target_mask
