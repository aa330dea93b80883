"""Text formats: JSON documents for models/configs, CSV for tables.

Model document::

    {
      "n": 2, "m": 1,
      "A": [[0.5, 0.1], [0.0, 0.25]],      # row-major, n rows of n
      "B": [[1.0], [2.0]],                 # n rows of m
      "C": [[1.0, 0.0]],                   # optional output map, p rows of n
      "state_box":   {"lower": [...], "upper": [...]},   # optional
      "control_box": {"lower": [...], "upper": [...]}    # optional
    }

Gain: ``{"K": [[...]], "sign": "negative" | "positive"}``.
Threshold policy: ``{"low_watermark", "high_watermark", "increment",
"u_min", "u_max"}``.  Topology: one key per :class:`Topology` field.
Corpus: ``{"seed", "n_articles", "n_authors"}``.

Trajectory CSV: header ``t,x1..xn,u1..um``, one row per state; the final row
has empty control cells.  Floats are written with ``repr`` so files round-trip
exactly and are byte-stable.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import fields
from pathlib import Path

import numpy as np

from .controller import FeedbackSign, GainMatrix, ThresholdPolicy
from .errors import FormatError
from .hybridsim import BenchRow, Topology
from .statespace import BoxConstraint, LinearModel, Trajectory

BENCH_HEADER = ["query_index", "articles_extracted", "records_per_second", "total_time_s"]
RATIO_HEADER = ["articles_extracted", "local_total_time_s", "hybrid_total_time_s", "ratio"]
FIT_HEADER = ["n", "m", "transitions", "residual_rms", "condition_indicator"]


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


# -- JSON helpers -------------------------------------------------------------

def _load_json(text, path=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(exc.msg, line=exc.lineno, path=path) from exc
    if not isinstance(doc, dict):
        raise FormatError("top-level value must be an object", path=path)
    return doc


def _line_of(text, key):
    if text is None:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def _require(doc, key, text=None, path=None):
    if key not in doc:
        raise FormatError("missing required field", key=key, path=path)
    return doc[key]


def _matrix(value, key, rows=None, cols=None, text=None, path=None):
    line = _line_of(text, key)
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise FormatError("expected a list of rows", key=key, line=line, path=path)
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise FormatError("rows must be equal-length lists of numbers", key=key, line=line, path=path)
    if M.size == 0 and rows is not None and cols is not None:
        M = M.reshape(rows, cols)
    if M.ndim != 2:
        raise FormatError("rows must be equal-length lists of numbers", key=key, line=line, path=path)
    if not np.all(np.isfinite(M)):
        raise FormatError("entries must be finite", key=key, line=line, path=path)
    if rows is not None and M.shape[0] != rows:
        raise FormatError(f"expected {rows} rows, got {M.shape[0]}", key=key, line=line, path=path)
    if cols is not None and M.shape[1] != cols:
        raise FormatError(f"expected {cols} columns, got {M.shape[1]}", key=key, line=line, path=path)
    return M


def _box(value, key, dim, text=None, path=None):
    line = _line_of(text, key)
    if not isinstance(value, dict):
        raise FormatError("expected an object with lower/upper", key=key, line=line, path=path)
    try:
        lo = np.array(_require(value, "lower", path=path), dtype=float)
        hi = np.array(_require(value, "upper", path=path), dtype=float)
    except (TypeError, ValueError):
        raise FormatError("bounds must be lists of numbers", key=key, line=line, path=path)
    if lo.shape != (dim,) or hi.shape != (dim,):
        raise FormatError(f"bounds must have {dim} entries", key=key, line=line, path=path)
    try:
        return BoxConstraint(lo, hi)
    except ValueError as exc:
        raise FormatError(str(exc), key=key, line=line, path=path) from exc


def _int_field(doc, key, text=None, path=None, minimum=1):
    value = _require(doc, key, text, path)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise FormatError(f"expected an integer >= {minimum}", key=key, line=_line_of(text, key), path=path)
    return value


def model_from_dict(doc, text=None, path=None):
    """Parse a model document; returns ``(LinearModel, C or None)``."""
    n = _int_field(doc, "n", text, path)
    m = _int_field(doc, "m", text, path)
    A = _matrix(_require(doc, "A", path=path), "A", n, n, text, path)
    B = _matrix(_require(doc, "B", path=path), "B", n, m, text, path)
    C = None
    if doc.get("C") is not None:
        C = _matrix(doc["C"], "C", None, n, text, path)
    sbox = _box(doc["state_box"], "state_box", n, text, path) if doc.get("state_box") else None
    cbox = _box(doc["control_box"], "control_box", m, text, path) if doc.get("control_box") else None
    known = {"n", "m", "A", "B", "C", "state_box", "control_box", "kind"}
    for key in doc:
        if key not in known:
            raise FormatError("unknown field", key=key, line=_line_of(text, key), path=path)
    return LinearModel(A, B, sbox, cbox), C


def model_to_dict(model: LinearModel, C=None):
    doc = {"n": model.n, "m": model.m, "A": model.A.tolist(), "B": model.B.tolist()}
    if C is not None:
        doc["C"] = np.atleast_2d(np.asarray(C, dtype=float)).tolist()
    for key, box in (("state_box", model.state_box), ("control_box", model.control_box)):
        if box is not None:
            doc[key] = {"lower": box.lower.tolist(), "upper": box.upper.tolist()}
    return doc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def read_model(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", path=path) from exc
    return model_from_dict(_load_json(text, path), text, path)


def write_model(path, model, C=None):
    Path(path).write_text(dumps(model_to_dict(model, C)))


def gain_from_dict(doc, path=None):
    K = _matrix(_require(doc, "K", path=path), "K", path=path)
    try:
        sign = FeedbackSign(doc.get("sign", "negative"))
    except ValueError:
        raise FormatError("sign must be 'positive' or 'negative'", key="sign", path=path)
    return GainMatrix(K, sign)


def gain_to_dict(gain: GainMatrix):
    return {"K": gain.K.tolist(), "sign": gain.sign.value}


def policy_from_dict(doc, path=None):
    names = [f.name for f in fields(ThresholdPolicy)]
    values = {}
    for key in names:
        v = _require(doc, key, path=path)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise FormatError("expected a number", key=key, path=path)
        values[key] = float(v)
    try:
        return ThresholdPolicy(**values)
    except ValueError as exc:
        raise FormatError(str(exc), path=path) from exc


def policy_to_dict(policy: ThresholdPolicy):
    return {f.name: getattr(policy, f.name) for f in fields(ThresholdPolicy)}


def topology_from_dict(doc, path=None, text=None):
    names = {f.name for f in fields(Topology)}
    for key in doc:
        if key not in names:
            raise FormatError("unknown topology field", key=key, line=_line_of(text, key), path=path)
    values = {}
    for key, v in doc.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0 or math.isnan(v):
            raise FormatError("expected a non-negative number", key=key, line=_line_of(text, key), path=path)
        values[key] = float(v)
    try:
        return Topology(**values)
    except ValueError as exc:
        raise FormatError(str(exc), path=path) from exc


def corpus_params_from_dict(doc, path=None, text=None):
    seed = doc.get("seed", 2013)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise FormatError("expected a non-negative integer", key="seed", line=_line_of(text, "seed"), path=path)
    size = _int_field(doc, "n_articles", text, path) if "n_articles" in doc else 1000
    authors = _int_field(doc, "n_authors", text, path) if "n_authors" in doc else 10
    return seed, size, authors


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", path=path) from exc
    return _load_json(text, path), text


def read_topology(path):
    doc, text = read_json(path)
    return topology_from_dict(doc, path, text)


# -- CSV ----------------------------------------------------------------------

def table_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def trajectory_csv(traj: Trajectory) -> str:
    n, m = traj.n, traj.m
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
    rows = []
    for t, x in enumerate(traj.states):
        u = [fmt(v) for v in traj.controls[t]] if t < traj.horizon else [""] * m
        rows.append([str(t)] + [fmt(v) for v in x] + u)
    return table_csv(header, rows)


def write_trajectory(path, traj):
    Path(path).write_text(trajectory_csv(traj))


def _parse_header(header, path):
    if not header or header[0] != "t":
        raise FormatError("trajectory header must start with 't'", line=1, path=path)
    xs = [h for h in header[1:] if h.startswith("x")]
    us = [h for h in header[1:] if h.startswith("u")]
    if header[1:] != xs + us or xs != [f"x{i + 1}" for i in range(len(xs))] \
            or us != [f"u{j + 1}" for j in range(len(us))] or not xs:
        raise FormatError("header must be t,x1..xn,u1..um", line=1, path=path)
    return len(xs), len(us)


def _float(cell, key, line, path):
    try:
        v = float(cell)
    except ValueError:
        raise FormatError(f"not a number: {cell!r}", key=key, line=line, path=path)
    if not math.isfinite(v):
        raise FormatError("non-finite value", key=key, line=line, path=path)
    return v


def parse_trajectory(text, path=None) -> Trajectory:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise FormatError("empty trajectory file", path=path)
    header = rows[0]
    n, m = _parse_header(header, path)
    states, controls = [], []
    body = [r for r in rows[1:] if r]
    if not body:
        raise FormatError("trajectory needs at least one state row", line=2, path=path)
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != 1 + n + m:
            raise FormatError(f"expected {1 + n + m} cells, got {len(row)}", line=line, path=path)
        states.append([_float(c, header[1 + k], line, path) for k, c in enumerate(row[1:1 + n])])
        ucells = row[1 + n:]
        last = i == len(body) - 1
        if last:
            if any(c.strip() for c in ucells):
                raise FormatError("final row must have empty control cells", line=line, path=path)
        else:
            controls.append([_float(c, header[1 + n + k], line, path) for k, c in enumerate(ucells)])
    return Trajectory(np.array(states), np.array(controls, dtype=float).reshape(len(controls), m))


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", path=path) from exc
    return parse_trajectory(text, path)


def read_controls(path, m) -> np.ndarray:
    """Controls file: header ``u1..um`` then one row per time step."""
    path = Path(path)
    try:
        rows = list(csv.reader(io.StringIO(path.read_text())))
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", path=path) from exc
    expected = [f"u{j + 1}" for j in range(m)]
    if not rows or rows[0] != expected:
        raise FormatError(f"header must be {','.join(expected)}", line=1, path=path)
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != m:
            raise FormatError(f"expected {m} cells, got {len(row)}", line=i, path=path)
        out.append([_float(c, expected[k], i, path) for k, c in enumerate(row)])
    return np.array(out, dtype=float).reshape(len(out), m)


def controls_csv(controls) -> str:
    controls = np.atleast_2d(np.asarray(controls, dtype=float))
    m = controls.shape[1]
    return table_csv([f"u{j + 1}" for j in range(m)], [[fmt(v) for v in row] for row in controls])


def bench_csv(rows) -> str:
    return table_csv(BENCH_HEADER, [[fmt(r.query_index), fmt(r.articles_extracted),
                                     fmt(r.records_per_second), fmt(r.total_time_s)] for r in rows])


def parse_bench_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != BENCH_HEADER:
        raise FormatError("unexpected benchmark header", line=1)
    return [BenchRow(int(r[0]), int(r[1]), float(r[2]), float(r[3])) for r in rows[1:] if r]


def ratio_rows(local_rows, hybrid_rows):
    """Pair local and hybrid rows by batch size (unmatched sizes dropped)."""
    hybrid_by_n = {r.articles_extracted: r for r in hybrid_rows}
    out = []
    for lr in local_rows:
        hr = hybrid_by_n.get(lr.articles_extracted)
        if hr is not None:
            out.append((lr.articles_extracted, lr.total_time_s, hr.total_time_s,
                        hr.total_time_s / lr.total_time_s))
    return out


def ratio_csv(pairs) -> str:
    return table_csv(RATIO_HEADER, [[fmt(n), fmt(l), fmt(h), fmt(r)] for n, l, h, r in pairs])


def fit_report_csv(result, transitions) -> str:
    model = result.model
    return table_csv(FIT_HEADER, [[fmt(model.n), fmt(model.m), fmt(transitions),
                                   fmt(result.residual_rms), fmt(result.condition_indicator)]])
