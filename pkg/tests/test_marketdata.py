import datetime as dt
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volstat.errors import (
    DuplicateDate,
    EmptyInput,
    EmptyIntersection,
    InputError,
    MalformedRow,
    NegativeLevel,
    NonPositivePrice,
)
from volstat.marketdata import (
    CsvFormat,
    DatedSeries,
    IndexKind,
    IndexSeries,
    PriceSeries,
    align,
    parse_date,
    parse_index_csv,
    parse_price_csv,
    scan_price_csv,
    write_series_csv,
)


def test_two_rows_parse_ascending():
    s = parse_price_csv("Date,Close\n2016-12-29,2249.26\n2016-12-30,2238.83\n")
    assert len(s) == 2
    assert s.observations() == [(dt.date(2016, 12, 29), 2249.26), (dt.date(2016, 12, 30), 2238.83)]


def test_zero_close_rejected():
    with pytest.raises(NonPositivePrice) as info:
        parse_price_csv("Date,Close\n2016-12-29,2249.26\n2016-12-30,0.0\n")
    assert info.value.line == 3


def test_shuffled_rows_same_series():
    rows = [f"2016-01-{d:02d},{100 + d}.5" for d in range(4, 29)]
    shuffled = rows[:]
    random.Random(7).shuffle(shuffled)
    a = parse_price_csv("Date,Close\n" + "\n".join(rows))
    b = parse_price_csv("Date,Close\n" + "\n".join(shuffled))
    assert a == b


def test_index_single_row():
    s = parse_index_csv("Date,Close\n1990-01-02,17.24\n", IndexKind.VIX)
    assert len(s) == 1 and s.kind is IndexKind.VIX and s.values[0] == 17.24


def test_negative_level():
    with pytest.raises(NegativeLevel):
        parse_index_csv("Date,Close\n1990-01-02,-1.0\n")


def test_row_count_matches_line_count(tmp_path):
    dates = np.arange(np.datetime64("1990-01-01"), np.datetime64("2016-12-31"))
    text = "Date,Close\n" + "".join(f"{d},{10 + i % 7}\n" for i, d in enumerate(dates))
    # independent count: data lines = non-empty lines minus header
    expected = sum(1 for ln in text.splitlines() if ln.strip()) - 1
    assert len(parse_index_csv(text)) == expected


def test_malformed_and_missing_cells():
    with pytest.raises(MalformedRow):
        parse_price_csv("Date,Close\n2016-13-01,5\n")
    with pytest.raises(MalformedRow):
        parse_price_csv("Date,Close\n2016-12-01,\n")
    with pytest.raises(MalformedRow):
        parse_price_csv("Date,Close\n2016-12-01,abc\n")


def test_duplicate_date():
    with pytest.raises(DuplicateDate):
        parse_price_csv("Date,Close\n2016-12-01,5\n2016-12-01,6\n")


def test_empty_input():
    with pytest.raises(EmptyInput):
        parse_price_csv("")
    with pytest.raises(EmptyInput):
        parse_price_csv("Date,Close\n")


def test_scan_is_total():
    text = ("Date,Close\n2016-12-01,5\n2016-12-02,-1\n2016-12-03,x\n"
            "2016-12-01,7\n2016-12-05,8\n")
    res = scan_price_csv(text)
    assert res.row_count == 5
    assert res.accepted_count + len(res.rejected) == res.row_count
    assert [type(e) for e in res.rejected] == [NonPositivePrice, MalformedRow, DuplicateDate]


def test_us_dates_tabs_and_bytes():
    fmt = CsvFormat(date_column="day", value_column="px", date_format="us")
    s = parse_price_csv(b"day\tpx\n1/2/1990\t359.69\n12/31/1990\t330.22\n", fmt)
    assert s.dates[0] == np.datetime64("1990-01-02")
    assert parse_date("3/4/2001", "us") == dt.date(2001, 3, 4)


def test_case_insensitive_columns():
    s = parse_price_csv("date,close\n2016-12-01,5\n")
    assert len(s) == 1


def test_series_invariants():
    with pytest.raises(InputError):
        PriceSeries(["2016-01-02", "2016-01-01"], [1.0, 2.0])
    with pytest.raises(InputError):
        IndexSeries(["2016-01-01"], [-0.1])


def test_align_identity_and_disjoint():
    a = DatedSeries(["2016-01-04", "2016-01-05"], [1.0, 2.0])
    b = DatedSeries(["2016-01-04", "2016-01-05"], [3.0, 4.0])
    panel = align([("a", a), ("b", b)])
    assert len(panel) == 2 and panel.names == ["a", "b"]
    c = DatedSeries(["2017-01-04"], [1.0])
    with pytest.raises(EmptyIntersection):
        align([("a", a), ("c", c)])


def test_align_drops_holiday():
    days = np.arange(np.datetime64("2016-06-27"), np.datetime64("2016-07-09"))
    a = DatedSeries(days, np.arange(days.size, dtype=float))
    holiday = np.datetime64("2016-07-04")
    b = DatedSeries(days[days != holiday], np.ones(days.size - 1))
    panel = align([("a", a), ("b", b)])
    assert set(days.tolist()) - set(panel.dates.tolist()) == {holiday.item()}


date_values = st.lists(
    st.tuples(st.dates(dt.date(1950, 1, 1), dt.date(2050, 1, 1)),
              st.floats(1e-6, 1e9, allow_nan=False, allow_infinity=False)),
    min_size=1, max_size=40, unique_by=lambda t: t[0])


@given(date_values)
def test_round_trip(rows):
    rows = sorted(rows)
    s = PriceSeries([d for d, _ in rows], [v for _, v in rows])
    assert parse_price_csv(write_series_csv(s)) == s
    fmt = CsvFormat(date_format="us", delimiter="\t")
    assert parse_price_csv(write_series_csv(s, fmt), fmt) == s


@settings(max_examples=50)
@given(date_values, date_values)
def test_align_idempotent(ra, rb):
    a = DatedSeries(*zip(*sorted(ra)))
    b = DatedSeries(*zip(*sorted(rb)))
    try:
        panel = align([("a", a), ("b", b)])
    except EmptyIntersection:
        assert not set(a.dates.tolist()) & set(b.dates.tolist())
        return
    again = align(panel.as_series())
    assert np.array_equal(again.dates, panel.dates)
    for name in panel.names:
        assert np.array_equal(again.columns[name], panel.columns[name])
    assert set(panel.dates.tolist()) == set(a.dates.tolist()) & set(b.dates.tolist())
