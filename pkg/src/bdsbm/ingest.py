"""Turn timestamped publication records into an event history and snapshots.

Times are measured in days since the Unix epoch. The first
``ancestor_window`` days of ``[t_start, t_end]`` form the seed period:
authors publishing there are the initial population and are present for the
whole observation window ``[t0, t_end]`` with ``t0 = t_start +
ancestor_window``. Every other author reachable from them through
co-authorship inside the observation window is born at their first
publication there and dies one bin after their last one (no death is
recorded if that falls at or after ``t_end``).

Observations are binned into consecutive windows of ``bin_width`` days
starting at ``t0``; two authors are linked in a bin if they co-authored a
record inside it. A bin's snapshot is stamped with the bin's end (clipped to
``t_end``), so every author with a record in the bin is alive at that time.
"""
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .exceptions import IngestError
from .model import EventHistory, SnapshotSeries

DISCARD = "discard-fewer-publications"
JITTER = "epsilon-jitter"
TIE_RULES = (DISCARD, JITTER)
KINDS = ("original", "revision")
SECONDS_PER_DAY = 86400.0
JITTER_FRACTION = 1e-6


@dataclass(frozen=True)
class PublicationRecord:
    authors: tuple
    timestamp: float
    kind: str = "original"

    def __post_init__(self):
        authors = tuple(dict.fromkeys(str(a) for a in self.authors))
        if not authors or any(not a for a in authors):
            raise IngestError("a record needs at least one non-empty author id")
        if not math.isfinite(self.timestamp):
            raise IngestError("record timestamp must be finite")
        if self.kind not in KINDS:
            raise IngestError(f"record kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "authors", authors)


@dataclass(frozen=True)
class IngestConfig:
    """Window, seed period and binning, all in days."""

    t_start: float
    t_end: float
    ancestor_window: float
    bin_width: float
    tie_rule: str = DISCARD
    max_authors: Optional[int] = None

    def __post_init__(self):
        if not self.bin_width > 0:
            raise IngestError("bin width must be positive")
        if not self.t_end > self.t_start:
            raise IngestError("t_end must exceed t_start")
        if not 0 <= self.ancestor_window < self.t_end - self.t_start:
            raise IngestError("the ancestor window must lie inside the overall window")
        if self.tie_rule not in TIE_RULES:
            raise IngestError(f"tie rule must be one of {TIE_RULES}")
        if self.max_authors is not None and self.max_authors < 1:
            raise IngestError("max_authors must be positive")

    @property
    def t0(self):
        return self.t_start + self.ancestor_window

    @property
    def n_bins(self):
        return max(1, math.ceil((self.t_end - self.t0) / self.bin_width - 1e-9))

    def bin_of(self, t):
        return min(int((t - self.t0) // self.bin_width), self.n_bins - 1)

    def snapshot_times(self):
        ends = self.t0 + self.bin_width * np.arange(1, self.n_bins + 1)
        return np.minimum(ends, self.t_end)


@dataclass
class IngestResult:
    history: EventHistory
    snapshots: SnapshotSeries
    authors: list
    discarded: list


def parse_timestamp(text):
    """Days since the epoch from epoch seconds or an ISO-8601 string.

    ISO strings without an offset are taken as UTC.
    """
    text = str(text).strip()
    try:
        return float(text) / SECONDS_PER_DAY
    except ValueError:
        pass
    iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    try:
        stamp = datetime.fromisoformat(iso)
    except ValueError as exc:
        raise IngestError(f"unparseable timestamp {text!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp() / SECONDS_PER_DAY


def parse_publications(lines):
    """Records from ``timestamp<TAB>kind<TAB>author1,author2,...`` lines.

    Blank lines and lines starting with ``#`` are skipped.
    """
    records = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise IngestError(f"line {lineno}: expected 3 tab-separated fields")
        stamp, kind, authors = parts
        names = [a.strip() for a in authors.split(",") if a.strip()]
        try:
            records.append(PublicationRecord(tuple(names), parse_timestamp(stamp), kind.strip()))
        except IngestError as exc:
            raise IngestError(f"line {lineno}: {exc}") from exc
    return records


def read_publications(path):
    with open(path, encoding="utf-8") as fh:
        return parse_publications(fh)


def _observed(records, config):
    return [r for r in records if config.t0 <= r.timestamp <= config.t_end]


def ancestor_closure(records, config):
    """Initial population and the co-authorship closure around it.

    Returns
    -------
    v0 : set of str
        Authors with a record in ``[t_start, t0)``.
    V : set of str
        ``v0`` plus everybody linked to it by a chain of joint records in
        ``[t0, t_end]``.
    """
    if not records:
        raise IngestError("no publication records")
    v0 = {a for r in records if config.t_start <= r.timestamp < config.t0 for a in r.authors}
    if not v0:
        raise IngestError("no author published inside the ancestor window")
    neighbours = defaultdict(set)
    for r in _observed(records, config):
        for a in r.authors:
            neighbours[a].update(r.authors)
    V = set(v0)
    queue = deque(sorted(v0))
    while queue:
        a = queue.popleft()
        for b in sorted(neighbours[a] - V):
            V.add(b)
            queue.append(b)
    return v0, V


def _top_degree(records, v0, V, limit):
    degree = defaultdict(set)
    for r in records:
        members = [a for a in r.authors if a in V]
        for a in members:
            degree[a].update(members)
    ranked = sorted(V, key=lambda a: (-(len(degree[a]) - 1), a))
    kept = set(ranked[:limit])
    return v0 & kept, kept


def build_history_and_snapshots(records, V, config, v0=None):
    """Event history and binned snapshots of the authors in ``V``.

    Parameters
    ----------
    records : list of PublicationRecord
    V : set of str
        From :func:`ancestor_closure`.
    config : IngestConfig
    v0 : set of str, optional
        Recomputed from the records when omitted.

    Returns
    -------
    IngestResult
        Dense ids: the initial population in sorted author order, then
        newborns in birth order.
    """
    if v0 is None:
        v0 = {a for r in records if config.t_start <= r.timestamp < config.t0
              for a in r.authors} & set(V)
    V = set(V)
    if config.max_authors is not None and len(V) > config.max_authors:
        v0, V = _top_degree(_observed(records, config), set(v0), V, config.max_authors)
    if not v0:
        raise IngestError("the initial population is empty")

    observed = _observed(records, config)
    pubs = defaultdict(list)
    for r in observed:
        for a in r.authors:
            if a in V:
                pubs[a].append(r.timestamp)
    count = {a: len(p) for a, p in pubs.items()}
    newborns = sorted(a for a in V - v0 if pubs[a])

    birth = {a: min(pubs[a]) for a in newborns}
    death = {}
    for a in newborns:
        d = max(pubs[a]) + config.bin_width
        if d < config.t_end:
            death[a] = d

    discarded = []
    if config.tie_rule == JITTER:
        rank = {a: j for j, a in enumerate(newborns)}
        offset = {a: rank[a] * JITTER_FRACTION * config.bin_width for a in newborns}
        birth = {a: t + offset[a] for a, t in birth.items()}
        death = {a: t + offset[a] for a, t in death.items() if t + offset[a] < config.t_end}
        late = [a for a, t in birth.items() if t > config.t_end]
        if late:
            raise IngestError(f"jittered births fall after t_end for {late}")
        ties = _tie_groups(birth, death)
        if ties:
            raise IngestError(f"unresolved event-time ties remain: {ties[0]}")
    else:
        while True:
            ties = _tie_groups(birth, death)
            if not ties:
                break
            group = ties[0]
            keep = min(group, key=lambda a: (-count[a], a))
            for a in sorted(group):
                if a != keep:
                    discarded.append(a)
                    birth.pop(a, None)
                    death.pop(a, None)
        V = V - set(discarded)
        newborns = [a for a in newborns if a in birth]

    ancestors = sorted(v0)
    order = sorted(newborns, key=lambda a: (birth[a], a))
    authors = ancestors + order
    ids = {a: i for i, a in enumerate(authors)}
    events = [(birth[a], 1, ids[a]) for a in order] + [(t, -1, ids[a]) for a, t in death.items()]
    events.sort()
    times = [e[0] for e in events]
    history = EventHistory(config.t0, config.t_end, len(ancestors), times,
                           [e[1] for e in events], [e[2] for e in events])

    snap_times = config.snapshot_times()
    per_bin = [set() for _ in snap_times]
    for r in observed:
        members = sorted(ids[a] for a in r.authors if a in ids)
        bucket = per_bin[config.bin_of(r.timestamp)]
        for x in range(len(members)):
            for y in range(x + 1, len(members)):
                bucket.add((members[x], members[y]))
    edges = tuple(np.array(sorted(b), dtype=np.int64).reshape(-1, 2) for b in per_bin)
    for s, e in enumerate(edges):
        if e.size:
            t = snap_times[s]
            alive = (history.birth_time[e] <= t) & (t <= history.death_time[e])
            if not alive.all():
                bad = [authors[i] for i in e[~alive.all(axis=1)][0]]
                raise IngestError(f"bin {s}: co-authors {bad} are not alive at its snapshot time")
    return IngestResult(history, SnapshotSeries(snap_times, edges), authors, discarded)


def _tie_groups(birth, death):
    """Groups of distinct authors sharing an event time, earliest first."""
    at = defaultdict(set)
    for a, t in birth.items():
        at[t].add(a)
    for a, t in death.items():
        at[t].add(a)
    return [sorted(at[t]) for t in sorted(at) if len(at[t]) > 1]


def ingest(records, config):
    """Closure followed by history and snapshot construction."""
    v0, V = ancestor_closure(records, config)
    return build_history_and_snapshots(records, V, config, v0)
