"""Serialization of profiles, certificates and reports; every write is atomic."""

from __future__ import annotations

import io
import json
import os
import tempfile

import numpy as np

from .weights import WeightCertificate


def atomic_write(path, text):
    """Write ``text`` to a sibling temp file, then rename it over ``path``."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=folder)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(rows, dtype=float).reshape(-1, len(header)), fmt="%.17g",
               delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def flux_csv(profile):
    return csv_text(("r", "theta", "flux"), profile.to_records())


def flux_json(profile):
    return json_text({"r": profile.r_grid.tolist(), "theta": profile.theta_grid.tolist(),
                      "flux": profile.values.tolist(), "method": profile.method})


def weight_csv(w2):
    return csv_text(("r", "w2"), w2.to_records())


def weight_json(w2, intervals=None):
    doc = {"r": w2.r_grid.tolist(), "w2": w2.values.tolist(),
           "witnesses": [None if w is None else w.to_dict() for w in w2.witnesses]}
    if intervals is not None:
        doc["intervals"] = [{"alpha": a, "beta": b, "L": L} for a, b, L in intervals.triples()]
    return json_text(doc)


def certificate_json(cert: WeightCertificate):
    return json_text(cert.to_dict())


def read_certificate(path) -> WeightCertificate:
    with open(path, encoding="utf-8") as fh:
        return WeightCertificate.from_dict(json.load(fh))


def reports_jsonl(reports):
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in reports)
