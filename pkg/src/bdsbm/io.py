"""Readers and writers for the on-disk formats.

=================  ===================================================
file               content
=================  ===================================================
events.csv         header ``tau,b,id``; rows sorted by ``tau``
meta.json          ``{"t0", "tT", "v0": [ids], "snapshot_times": [...]}``
snapshots.csv      header ``t,i,j`` with ``i < j``
labels.csv         header ``id,k``; communities are 1-based
params.json        ``{"K", "rate_mode", "lambda", "mu", "beta", "pi"}``
memberships.csv    header ``id,delta_1,...,delta_K``
elbo.csv           header ``iter,elbo``
icl.csv            header ``K,seed,elbo,icl``
=================  ===================================================

CSV floats are written with 17 significant digits; JSON floats use Python's
shortest round-trip representation. Both read back bit-exactly.
"""
import csv
import json
import os

import numpy as np

from .exceptions import InputError
from .model import EventHistory, ModelParams, SnapshotSeries


def fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path, header):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            found = next(reader, None)
            if found is None or [h.strip() for h in found[: len(header)]] != list(header):
                raise InputError(f"{path}: expected header {','.join(header)}")
            return found, [row for row in reader if row]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False, allow_nan=True)
        fh.write("\n")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _tolist(x):
    return np.asarray(x).tolist() if isinstance(x, np.ndarray) else x


# data sets -----------------------------------------------------------------


def write_dataset(directory, history, snapshots, extra_meta=None):
    """Write ``events.csv``, ``snapshots.csv`` and ``meta.json``."""
    os.makedirs(directory, exist_ok=True)
    _write_csv(
        os.path.join(directory, "events.csv"), ["tau", "b", "id"],
        ([fmt(t), int(b), int(i)] for t, b, i in zip(history.times, history.kinds, history.ids)),
    )
    rows = []
    for t, e in zip(snapshots.times, snapshots.edges):
        rows.extend([fmt(t), int(i), int(j)] for i, j in e)
    _write_csv(os.path.join(directory, "snapshots.csv"), ["t", "i", "j"], rows)
    meta = {
        "t0": float(history.t0),
        "tT": float(history.tT),
        "v0": list(range(history.n0)),
        "snapshot_times": [float(t) for t in snapshots.times],
    }
    meta.update(extra_meta or {})
    _write_json(os.path.join(directory, "meta.json"), meta)


def read_dataset(directory):
    """Inverse of :func:`write_dataset`.

    Returns
    -------
    history : EventHistory
    snapshots : SnapshotSeries
    """
    meta = read_json(os.path.join(directory, "meta.json"))
    try:
        t0, tT, v0 = float(meta["t0"]), float(meta["tT"]), list(meta["v0"])
        snap_times = [float(t) for t in meta["snapshot_times"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"meta.json is malformed: {exc}") from exc
    if v0 != list(range(len(v0))):
        raise InputError("v0 must list the ids 0 .. N0 - 1")
    _, rows = _read_csv(os.path.join(directory, "events.csv"), ["tau", "b", "id"])
    try:
        times = [float(r[0]) for r in rows]
        kinds = [int(r[1]) for r in rows]
        ids = [int(r[2]) for r in rows]
    except (ValueError, IndexError) as exc:
        raise InputError(f"events.csv is malformed: {exc}") from exc
    history = EventHistory(t0, tT, len(v0), times, kinds, ids)

    _, rows = _read_csv(os.path.join(directory, "snapshots.csv"), ["t", "i", "j"])
    index = {t: s for s, t in enumerate(snap_times)}
    edges = [[] for _ in snap_times]
    for r in rows:
        try:
            t, i, j = float(r[0]), int(r[1]), int(r[2])
        except (ValueError, IndexError) as exc:
            raise InputError(f"snapshots.csv is malformed: {exc}") from exc
        if t not in index:
            raise InputError(f"snapshots.csv: time {r[0]} is not listed in meta.json")
        edges[index[t]].append((i, j))
    snapshots = SnapshotSeries(np.array(snap_times), tuple(
        np.array(e, dtype=np.int64).reshape(-1, 2) for e in edges))
    return history, snapshots


# labels and fits ------------------------------------------------------------


def write_labels(path, labels):
    _write_csv(path, ["id", "k"], ([i, int(k) + 1] for i, k in enumerate(labels)))


def read_labels(path):
    """0-based labels indexed by id."""
    _, rows = _read_csv(path, ["id", "k"])
    try:
        pairs = sorted((int(r[0]), int(r[1])) for r in rows)
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path} is malformed: {exc}") from exc
    if [i for i, _ in pairs] != list(range(len(pairs))):
        raise InputError(f"{path}: ids must be 0 .. N - 1 with no gaps")
    labels = np.array([k for _, k in pairs], dtype=np.int64) - 1
    if labels.size and labels.min() < 0:
        raise InputError(f"{path}: communities are 1-based")
    return labels


def params_to_dict(params):
    return {
        "K": params.K,
        "rate_mode": params.rate_mode,
        "lambda": _tolist(params.lam),
        "mu": _tolist(params.mu),
        "beta": params.beta.tolist(),
        "pi": params.pi.tolist(),
    }


def write_params(path, params):
    _write_json(path, params_to_dict(params))


def read_params(path):
    d = read_json(path)
    try:
        params = ModelParams(d["lambda"], d["mu"], d["beta"], d["pi"], d.get("rate_mode", "shared"))
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc}") from exc
    if "K" in d and int(d["K"]) != params.K:
        raise InputError(f"{path}: K does not match beta")
    return params


def write_memberships(path, delta):
    delta = np.asarray(delta)
    header = ["id"] + [f"delta_{k + 1}" for k in range(delta.shape[1])]
    _write_csv(path, header, ([i] + [fmt(x) for x in row] for i, row in enumerate(delta)))


def read_memberships(path):
    found, rows = _read_csv(path, ["id"])
    K = len(found) - 1
    delta = np.zeros((len(rows), K))
    for r in rows:
        delta[int(r[0])] = [float(x) for x in r[1:]]
    return delta


def write_elbo(path, trace):
    _write_csv(path, ["iter", "elbo"], ([t, fmt(v)] for t, v in enumerate(trace)))


def write_icl_table(directory, table):
    os.makedirs(directory, exist_ok=True)
    _write_csv(os.path.join(directory, "icl.csv"), ["K", "seed", "elbo", "icl"],
               ([r.K, r.seed, fmt(r.elbo), fmt(r.icl)] for r in table.rows))
    best = table.row_for(table.selected_K)
    _write_json(os.path.join(directory, "selection.json"), {
        "selected_K": table.selected_K,
        "selected_seed": None if best is None else best.seed,
        "best_icl": {str(K): v for K, v in table.best_icl.items()},
        "histogram": {str(K): v for K, v in table.histogram.items()},
        "failed_cells": [{"K": r.K, "seed": r.seed, "error": r.error}
                         for r in table.rows if r.error],
    })


def write_report(directory, rep):
    os.makedirs(directory, exist_ok=True)
    _write_json(os.path.join(directory, "report.json"), {
        "accuracy": rep.accuracy,
        "permutation": [int(p) + 1 for p in rep.permutation],
        "confusion": rep.confusion.tolist(),
    })
    _write_csv(os.path.join(directory, "accuracy_series.csv"), ["t", "accuracy"],
               ([fmt(t), fmt(a)] for t, a in zip(rep.times, rep.accuracy_series)))


def write_authors(path, authors):
    _write_csv(path, ["id", "author"], enumerate(authors))
