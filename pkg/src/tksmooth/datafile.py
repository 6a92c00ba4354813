"""JSON dataset and estimate files.

A dataset document::

    {"format": "tksmooth-dataset", "version": 1,
     "model": {"name": "linear" | "vdp", "params": {...}},
     "n": 2, "N": 100, "t": [...], "z": [[...], ...],
     "truth": [[...], ...] (optional), "meta": {...}}

``model.params`` holds the constructor arguments of the built-in model
(``dt``, ``sigma2``, ``s``, ``r`` for linear; additionally ``mu``, ``q``, ``x0``
for vdp), so the smoother model is rebuilt exactly from the file.
"""
import csv
import io
import json

import numpy as np

from .experiments import linear_model, vdp_model
from .models import StateTrajectory

FORMAT = "tksmooth-dataset"
VERSION = 1


class DataFileError(ValueError):
    pass


def dataset_document(name, params, times, z, truth=None, meta=None):
    z = np.asarray(z, dtype=float).reshape(len(times), -1)
    doc = {"format": FORMAT, "version": VERSION,
           "model": {"name": name, "params": dict(params)},
           "n": 2, "N": len(times),
           "t": [float(t) for t in times],
           "z": z.tolist()}
    if truth is not None:
        doc["truth"] = np.asarray(truth, dtype=float).tolist()
    if meta:
        doc["meta"] = meta
    return doc


def model_from_document(doc):
    if doc.get("format") != FORMAT:
        raise DataFileError(f"not a {FORMAT} document")
    try:
        name = doc["model"]["name"]
        params = dict(doc["model"].get("params", {}))
        z = np.asarray(doc["z"], dtype=float)
        times = np.asarray(doc["t"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise DataFileError(f"malformed dataset: missing {exc}") from None
    if z.ndim != 2 or z.shape[0] != times.size or z.shape[1] != 1:
        raise DataFileError("z must hold one scalar measurement per time stamp")
    if name == "linear":
        model = linear_model(z[:, 0], **params)
    elif name == "vdp":
        model = vdp_model(z[:, 0], **params)
    else:
        raise DataFileError(f"unknown model {name!r}")
    return model, times


def dumps_json(doc):
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def estimate_document(report, times):
    return {"format": "tksmooth-estimate", "version": VERSION,
            "smoother": report.kind.value, "status": report.status.value,
            "iterations": report.iterations, "objective": report.objective,
            "t": [float(t) for t in times], "x": report.estimate.states.tolist()}


def records_to_csv(records):
    if not records:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})
    return buf.getvalue()


def estimate_to_csv(estimate: StateTrajectory):
    cols = ["t"] + [f"x{i + 1}" for i in range(estimate.n)]
    recs = [dict(zip(cols, [float(t), *map(float, row)])) for t, row in zip(estimate.times, estimate.states)]
    return records_to_csv(recs)
