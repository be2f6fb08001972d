import json

import pytest
from hypothesis import given, strategies as st

from modules.errors import DuplicateRank, MissingUrl, ParseError
from modules.ingest import (
    ExpertEntry, ExpertList, dedup, load_expert_list, normalize_url, save_expert_list, truncate, window,
)


def write_csv(path, rows, header="rank,label,url"):
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


def expert_of(urls, name="fixture"):
    entries = tuple(ExpertEntry(rank=rank, label=f"entry {rank}", url=url) for rank, url in enumerate(urls, start=1))
    return ExpertList(name=name, entries=entries)


def billboard_urls():
    """50 chart positions; artists repeat at 10, 15, 20, 25, 30, 35, 40 and 45"""
    repeats = {10: 1, 15: 2, 20: 3, 25: 4, 30: 5, 35: 6, 40: 7, 45: 8}
    return [f"http://artist{repeats.get(position, position):02d}.example/" for position in range(1, 51)]


def test_load_fifty_universities(tmp_path):
    rows = [f"{rank},University {rank},http://www.univ{rank:02d}.edu/" for rank in range(1, 51)]
    expert = load_expert_list(write_csv(tmp_path / "ARWU.csv", rows))
    assert expert.name == "ARWU"
    assert len(expert) == 50
    assert [entry.rank for entry in expert.entries] == list(range(1, 51))
    assert expert.items()[0].id == "http://www.univ01.edu/"


def test_rows_are_sorted_by_rank(tmp_path):
    rows = ["3,Kellogg,http://www.kellogg.northwestern.edu/", "1,Harvard,http://www.hbs.edu/",
            "2,Stanford,http://www.gsb.stanford.edu/"]
    expert = load_expert_list(write_csv(tmp_path / "mba.csv", rows))
    assert [entry.label for entry in expert.entries] == ["Harvard", "Stanford", "Kellogg"]


def test_ranks_are_renumbered(tmp_path):
    rows = ["2,A,http://a.example/", "5,B,http://b.example/", "9,C,http://c.example/"]
    expert = load_expert_list(write_csv(tmp_path / "gaps.csv", rows))
    assert [entry.rank for entry in expert.entries] == [1, 2, 3]


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ParseError):
        load_expert_list(path)


def test_header_only(tmp_path):
    with pytest.raises(ParseError):
        load_expert_list(write_csv(tmp_path / "header.csv", []))


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_expert_list(tmp_path / "nope.csv")


def test_duplicate_rank_names_the_line(tmp_path):
    rows = [f"{rank},Item {rank},http://item{rank}.example/" for rank in range(1, 8)]
    rows.append("7,Another,http://another.example/")
    with pytest.raises(DuplicateRank) as err:
        load_expert_list(write_csv(tmp_path / "dup.csv", rows))
    assert err.value.line == 9
    assert str(err.value).startswith("line 9:")


@pytest.mark.parametrize("row, error", [
    ("1,Harvard,", MissingUrl),
    ("1,Harvard", MissingUrl),
    ("1,Harvard,www.hbs.edu", ParseError),
    ("one,Harvard,http://www.hbs.edu/", ParseError),
    ("0,Harvard,http://www.hbs.edu/", ParseError),
    ("1,,http://www.hbs.edu/", ParseError),
])
def test_bad_rows(tmp_path, row, error):
    with pytest.raises(error) as err:
        load_expert_list(write_csv(tmp_path / "bad.csv", [row]))
    assert err.value.line == 2


def test_missing_column(tmp_path):
    with pytest.raises(ParseError):
        load_expert_list(write_csv(tmp_path / "cols.csv", ["1,Harvard"], header="rank,label"))


def test_json_list(tmp_path):
    path = tmp_path / "WTA.json"
    path.write_text(json.dumps([
        {"rank": 2, "label": "Second", "url": "http://second.example/"},
        {"rank": 1, "label": "First", "url": "HTTP://First.Example/Home"},
    ]), encoding="utf-8")
    expert = load_expert_list(path)
    assert expert.name == "WTA"
    assert expert.ids() == ["http://first.example/Home", "http://second.example/"]


def test_json_with_provenance(tmp_path):
    path = tmp_path / "list.json"
    path.write_text(json.dumps({
        "name": "Fortune",
        "source_url": "http://money.cnn.com/",
        "retrieved_on": "2008-02-08",
        "entries": [{"rank": 1, "label": "Wal-Mart", "url": "http://www.walmart.com/"}],
    }), encoding="utf-8")
    expert = load_expert_list(path)
    assert expert.name == "Fortune"
    assert expert.retrieved_on.isoformat() == "2008-02-08"


def test_normalize_url_keeps_path_case():
    assert normalize_url("  HTTP://WWW.HBS.EDU/Faculty/Index.html ") == "http://www.hbs.edu/Faculty/Index.html"


def test_save_and_load(tmp_path):
    rows = ['1,"Wal-Mart Stores, Inc.",http://www.walmart.com/', "2,Exxon Mobil,http://www.exxonmobil.com/"]
    original = load_expert_list(write_csv(tmp_path / "Fortune.csv", rows))
    copy_dir = tmp_path / "copy"
    copy_dir.mkdir()
    save_expert_list(original, copy_dir / "Fortune.csv")
    reloaded = load_expert_list(copy_dir / "Fortune.csv")
    assert reloaded.entries == original.entries
    assert reloaded.name == original.name


def test_dedup_keeps_best_ranked():
    urls = [f"http://e{rank}.example/" for rank in range(1, 10)]
    urls[8] = urls[1]
    expert = expert_of(urls)
    deduped = dedup(expert)
    assert len(deduped) == 8
    assert deduped.entries[1].label == "entry 2"
    assert [entry.rank for entry in deduped.entries] == list(range(1, 9))


def test_dedup_by_label():
    expert = ExpertList(name="x", entries=(
        ExpertEntry(1, "Artist", "http://a.example/"),
        ExpertEntry(2, "Artist", "http://b.example/"),
        ExpertEntry(3, "Other", "http://c.example/"),
    ))
    assert [entry.url for entry in dedup(expert, "label").entries] == ["http://a.example/", "http://c.example/"]


def test_dedup_without_duplicates_changes_nothing():
    expert = expert_of([f"http://e{rank}.example/" for rank in range(1, 6)])
    assert dedup(expert) == expert


def test_billboard_windows():
    chart = expert_of(billboard_urls(), name="Billboard")
    assert [len(window(chart, n)) for n in (10, 25, 50)] == [9, 21, 42]
    assert [len(window(chart, n, windowed=False)) for n in (10, 25, 50)] == [10, 25, 42]
    assert len(dedup(chart)) == 42


def test_truncate():
    expert = expert_of([f"http://e{rank}.example/" for rank in range(1, 51)])
    assert len(truncate(expert, 25)) == 25
    assert truncate(expert, 25).entries == expert.entries[:25]
    assert truncate(expert, 80) == expert
    with pytest.raises(ValueError):
        truncate(expert, 0)


@given(
    hosts=st.lists(st.integers(0, 15), min_size=1, max_size=40),
    n=st.integers(1, 50),
)
def test_dedup_then_truncate_is_contiguous_and_idempotent(hosts, n):
    expert = expert_of([f"http://h{host}.example/" for host in hosts])
    once = truncate(dedup(expert), n)
    assert len(once) <= n
    assert [entry.rank for entry in once.entries] == list(range(1, len(once) + 1))
    assert dedup(dedup(expert)) == dedup(expert)
    assert truncate(once, n) == once
