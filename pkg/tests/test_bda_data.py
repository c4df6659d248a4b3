import io

import pytest
from hypothesis import given, strategies as st

from perspective_rsa.bda.data import (
    CONDITIONS,
    RATING_COLUMNS,
    TRIAL_COLUMNS,
    DataError,
    RatingRecord,
    TrialRecord,
    read_ratings,
    read_trials,
    write_ratings,
    write_trials,
)
from perspective_rsa.semantics import ALL_UTTERANCES, Utterance

ids = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789_-", min_size=1, max_size=8)
trials = st.builds(TrialRecord, ids, st.sampled_from(CONDITIONS), st.booleans(), st.sampled_from(ALL_UTTERANCES))
fits = st.floats(0.0, 100.0, allow_nan=False)
ratings = st.builds(RatingRecord, ids, ids, st.sampled_from(["scripted", "unscripted"]), ids, ids, fits, fits)

HEADER = ",".join(TRIAL_COLUMNS)


@given(st.lists(trials, max_size=30))
def test_trial_round_trip(records):
    buf = io.StringIO()
    write_trials(records, buf)
    assert read_trials(io.StringIO(buf.getvalue())) == records


@given(st.lists(ratings, max_size=30))
def test_rating_round_trip(records):
    buf = io.StringIO()
    write_ratings(records, buf)
    assert read_ratings(io.StringIO(buf.getvalue())) == records


def test_header_only_gives_empty_list():
    assert read_trials(io.StringIO(HEADER + "\n")) == []
    assert read_ratings(io.StringIO(",".join(RATING_COLUMNS) + "\n")) == []


def test_all_flags_give_the_full_utterance():
    rows = read_trials(io.StringIO(HEADER + "\ns1,same_shape,0,1,1,1\n"))
    assert rows[0].mentioned == Utterance.of("shape", "color", "texture")
    assert rows[0].distractor_present


def test_comment_lines_and_blank_rows_are_skipped(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("# manifest=x.json\n" + HEADER + "\n\ns1,distractor_absent,1,1,0,0\n")
    rows = read_trials(p)
    assert len(rows) == 1 and rows[0].occluded


@pytest.mark.parametrize("row,msg", [
    ("s1,same_size,0,1,0,0", "unknown condition"),
    ("s1,same_shape,2,1,0,0", "occluded must be 0 or 1"),
    ("s1,same_shape,0,yes,0,0", "mention_shape must be 0 or 1"),
    ("s1,same_shape,0,0,0,0", "empty utterance"),
    ("s1,same_shape,0,1,0", "expected 6 fields"),
])
def test_malformed_trials_report_the_row(tmp_path, row, msg):
    p = tmp_path / "bad.csv"
    p.write_text(HEADER + "\ns0,same_shape,0,1,0,0\n" + row + "\n")
    with pytest.raises(DataError) as err:
        read_trials(p)
    assert err.value.row == 3
    assert msg in str(err.value) and "bad.csv:row 3" in str(err.value)


def test_bad_header_and_empty_file():
    with pytest.raises(DataError, match="expected header"):
        read_trials(io.StringIO("speaker,condition\n"))
    with pytest.raises(DataError, match="empty file"):
        read_trials(io.StringIO(""))


@pytest.mark.parametrize("row", [
    "j,i,scripted,s,l,101,0",
    "j,i,scripted,s,l,nan,0",
    "j,i,scripted,s,l,abc,0",
    "j,i,improvised,s,l,50,0",
])
def test_malformed_ratings(row):
    with pytest.raises(DataError) as err:
        read_ratings(io.StringIO(",".join(RATING_COLUMNS) + "\n" + row + "\n"))
    assert err.value.row == 2


def test_informativity():
    r = RatingRecord("j", "i", "scripted", "s", "l", 80.0, 30.0)
    assert r.informativity == 50.0
