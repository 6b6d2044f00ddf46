import numpy as np
import pytest

from bdsbm.exceptions import IngestError
from bdsbm.ingest import (
    DISCARD,
    JITTER,
    IngestConfig,
    PublicationRecord,
    ancestor_closure,
    ingest,
    parse_publications,
    parse_timestamp,
)
from bdsbm.model import TemporalNetwork

CONFIG = IngestConfig(t_start=0.0, t_end=100.0, ancestor_window=10.0, bin_width=20.0)

CORPUS = [
    (5.0, "a"),
    (12.0, "a,b"),
    (15.0, "b,c"),
    (33.0, "a,c"),
    (41.0, "c,d"),
    (55.0, "d,e"),
    (58.0, "a,b"),
    (95.0, "a,e"),
    (97.0, "x,y"),  # never linked to the seed author
]


def records(rows):
    return [PublicationRecord(tuple(a.split(",")), t) for t, a in rows]


def scan_edges(rows, authors, config):
    """Per-bin co-authorship pairs found by a direct scan of the records."""
    ids = {a: i for i, a in enumerate(authors)}
    n_bins = int(np.ceil((config.t_end - config.t0) / config.bin_width))
    out = [set() for _ in range(n_bins)]
    for t, names in rows:
        if not config.t0 <= t <= config.t_end:
            continue
        s = min(int((t - config.t0) / config.bin_width), n_bins - 1)
        people = [ids[a] for a in names.split(",") if a in ids]
        for x in people:
            for y in people:
                if x < y:
                    out[s].add((x, y))
    return out


def test_isolated_seed_author():
    v0, V = ancestor_closure(records([(1.0, "solo"), (50.0, "p,q")]), CONFIG)
    assert v0 == V == {"solo"}


def test_chain_closure():
    rows = [(1.0, "a"), (20.0, "a,b"), (30.0, "b,c"), (40.0, "c,d"), (50.0, "e,f")]
    v0, V = ancestor_closure(records(rows), CONFIG)
    assert v0 == {"a"} and V == {"a", "b", "c", "d"}


def test_corpus_matches_scan():
    result = ingest(records(CORPUS), CONFIG)
    assert result.authors == ["a", "b", "c", "d", "e"]
    h = result.history
    assert h.n0 == 1 and h.t0 == 10.0 and h.tT == 100.0
    expected = sorted([(12.0, 1, 1), (15.0, 1, 2), (41.0, 1, 3), (55.0, 1, 4),
                       (58.0 + 20, -1, 1), (41.0 + 20, -1, 2), (55.0 + 20, -1, 3)])
    got = list(zip(h.times.tolist(), h.kinds.tolist(), h.ids.tolist()))
    assert got == expected
    oracle = scan_edges(CORPUS, result.authors, CONFIG)
    assert len(result.snapshots.times) == len(oracle) == 5
    for s, e in enumerate(result.snapshots.edges):
        assert set(map(tuple, e.tolist())) == oracle[s]
    TemporalNetwork(h, result.snapshots)


def test_single_newborn_birth_and_death():
    result = ingest(records([(1.0, "a"), (30.0, "a,b")]), CONFIG)
    h = result.history
    np.testing.assert_array_equal(h.times, [30.0, 50.0])
    np.testing.assert_array_equal(h.kinds, [1, -1])
    late = ingest(records([(1.0, "a"), (90.0, "a,b")]), CONFIG).history
    # death would fall after the window end, so it is censored
    np.testing.assert_array_equal(late.kinds, [1])


TIED = [(1.0, "a"), (20.0, "a,p"), (20.0, "a,q"), (25.0, "p"), (26.0, "p")]


def test_tie_discards_author_with_fewer_publications():
    cfg = IngestConfig(0.0, 100.0, 10.0, 20.0)
    result = ingest(records(TIED), cfg)
    assert result.discarded == ["q"]
    assert result.authors == ["a", "p"]
    assert np.all(np.diff(result.history.times) > 0)


def test_tie_with_equal_counts_keeps_smallest_id():
    cfg = IngestConfig(0.0, 100.0, 10.0, 20.0)
    result = ingest(records([(1.0, "a"), (20.0, "a,r"), (20.0, "a,q")]), cfg)
    assert result.discarded == ["r"]


def test_jitter_keeps_everyone():
    cfg = IngestConfig(0.0, 100.0, 10.0, 20.0, tie_rule=JITTER)
    result = ingest(records(TIED), cfg)
    assert result.discarded == []
    assert set(result.authors) == {"a", "p", "q"}
    h = result.history
    assert np.all(np.diff(h.times) > 0)
    np.testing.assert_allclose(h.times[:2], [20.0, 20.0], atol=1e-4)


def test_timestamps():
    assert parse_timestamp("86400") == 1.0
    assert parse_timestamp("1970-01-02T00:00:00Z") == 1.0
    assert parse_timestamp("1970-01-02T12:00:00+00:00") == 1.5
    assert parse_timestamp("1970-01-03") == 2.0
    with pytest.raises(IngestError):
        parse_timestamp("yesterday")


def test_parse_publications():
    lines = ["# comment", "", "86400\toriginal\ta, b", "1970-01-03Z\trevision\tc"]
    recs = parse_publications(lines)
    assert [r.authors for r in recs] == [("a", "b"), ("c",)]
    assert [r.timestamp for r in recs] == [1.0, 2.0]
    assert recs[1].kind == "revision"
    with pytest.raises(IngestError):
        parse_publications(["1\toriginal"])
    with pytest.raises(IngestError):
        parse_publications(["1\tpreprint\ta"])


def test_errors():
    with pytest.raises(IngestError):
        ancestor_closure([], CONFIG)
    with pytest.raises(IngestError):
        ancestor_closure(records([(50.0, "a")]), CONFIG)
    with pytest.raises(IngestError):
        IngestConfig(0.0, 10.0, 20.0, 1.0)
    with pytest.raises(IngestError):
        IngestConfig(0.0, 10.0, 1.0, 0.0)
    assert DISCARD == IngestConfig(0.0, 10.0, 1.0, 1.0).tie_rule
