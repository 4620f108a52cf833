"""CSV datasets and JSON rule files.

CSV layout: a header ``f0,...,f{p-1},label``, one row per observation,
labels 0/1, floats written with ``repr`` so a write-read cycle is lossless.
JSON floats are written as shortest round-trip decimals; non-finite values
become the strings "inf", "-inf" and "nan".
"""

import csv
import io as _io
import json
import math

import numpy as np

from .classifiers import DiagQdaRule, LabeledDataset, LdaRule
from .gaussian import AffineFrontier, QuadraticFrontier

RULE_FORMAT = "hdgauss-rule"
RULE_VERSION = 1


class SchemaError(ValueError):
    """Input file does not follow the expected layout."""


def _header(p, with_label=True):
    return [f"f{i}" for i in range(p)] + (["label"] if with_label else [])


def format_float(v):
    return repr(float(v))


def write_dataset(path_or_file, data):
    rows = [_header(data.dim)]
    for x, y in zip(data.features, data.labels):
        rows.append([format_float(v) for v in x] + [str(int(y))])
    _write_rows(path_or_file, rows)


def _write_rows(path_or_file, rows):
    if hasattr(path_or_file, "write"):
        csv.writer(path_or_file, lineterminator="\n").writerows(rows)
        return
    with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _parse_header(header, require_label):
    if not header:
        raise SchemaError("line 1: missing header row")
    header = [h.strip() for h in header]
    has_label = header[-1] == "label"
    feats = header[:-1] if has_label else header
    if require_label and not has_label:
        raise SchemaError("line 1: last column must be 'label'")
    for j, name in enumerate(feats):
        if name != f"f{j}":
            raise SchemaError(f"line 1, column {j + 1}: expected 'f{j}', got {name!r}")
    return len(feats), has_label


def read_table(path_or_text, require_label=True):
    """Parse a dataset CSV; returns (features, labels or None).

    Errors name the 1-based line and column of the first offending cell.
    """
    if isinstance(path_or_text, _io.StringIO):
        lines = list(csv.reader(path_or_text))
    else:
        with open(path_or_text, newline="", encoding="utf-8") as fh:
            lines = list(csv.reader(fh))
    if not lines:
        raise SchemaError("line 1: missing header row")
    p, has_label = _parse_header(lines[0], require_label)
    width = p + has_label
    feats = np.empty((len(lines) - 1, p))
    labels = np.empty(len(lines) - 1, dtype=np.int64) if has_label else None
    count = 0
    for k, row in enumerate(lines[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise SchemaError(f"line {k}: expected {width} columns, got {len(row)}")
        for j in range(p):
            try:
                v = float(row[j])
            except ValueError:
                raise SchemaError(
                    f"line {k}, column {j + 1} (f{j}): not a number: {row[j]!r}") from None
            if not math.isfinite(v):
                raise SchemaError(f"line {k}, column {j + 1} (f{j}): non-finite value")
            feats[count, j] = v
        if has_label:
            lab = row[p].strip()
            if lab not in ("0", "1"):
                raise SchemaError(
                    f"line {k}, column {p + 1} (label): expected 0 or 1, got {lab!r}")
            labels[count] = int(lab)
        count += 1
    feats = feats[:count]
    return feats, (labels[:count] if has_label else None)


def read_dataset(path):
    feats, labels = read_table(path, require_label=True)
    return LabeledDataset(feats, labels)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def _unclean_float(v):
    return float(v) if isinstance(v, str) else v


def dumps(obj):
    """Deterministic JSON text: sorted keys, shortest round-trip floats."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def rule_to_dict(rule):
    if isinstance(rule, LdaRule):
        return {"format": RULE_FORMAT, "version": RULE_VERSION, "kind": "affine",
                "procedure": rule.procedure, "normal": rule.normal, "center": rule.center,
                "selected": None if rule.selected is None else list(rule.selected),
                "info": rule.info}
    if isinstance(rule, AffineFrontier):
        return {"format": RULE_FORMAT, "version": RULE_VERSION, "kind": "affine",
                "procedure": "bayes", "normal": rule.normal, "center": rule.center,
                "selected": None, "info": {}}
    if isinstance(rule, DiagQdaRule):
        return {"format": RULE_FORMAT, "version": RULE_VERSION, "kind": "diag-qda",
                "procedure": rule.procedure, "means1": rule.means1, "means0": rule.means0,
                "var1": rule.var1, "var0": rule.var0,
                "mean_selected": list(rule.mean_selected),
                "var_selected": list(rule.var_selected),
                "g_hat": rule.g_hat, "a_hat": rule.a_hat, "offset": rule.offset,
                "info": rule.info}
    if isinstance(rule, QuadraticFrontier):
        return {"format": RULE_FORMAT, "version": RULE_VERSION, "kind": "quadratic",
                "procedure": "bayes", "quad": rule.quad, "linear": rule.linear,
                "center": rule.center, "offset": rule.offset, "info": {}}
    raise TypeError(f"cannot serialize rule of type {type(rule).__name__}")


def _need(d, *keys):
    missing = [k for k in keys if k not in d]
    if missing:
        raise SchemaError(f"rule file is missing field(s): {missing}")


def rule_from_dict(d):
    if not isinstance(d, dict) or d.get("format") != RULE_FORMAT:
        raise SchemaError(f"not a rule file (expected format {RULE_FORMAT!r})")
    if d.get("version") != RULE_VERSION:
        raise SchemaError(f"unsupported rule version {d.get('version')!r}")
    kind = d.get("kind")
    info = {k: _unclean_float(v) for k, v in d.get("info", {}).items()}
    try:
        if kind == "affine":
            _need(d, "normal", "center")
            return LdaRule(d["normal"], d["center"], d.get("selected"),
                           d.get("procedure", "custom"), info)
        if kind == "diag-qda":
            _need(d, "means1", "means0", "var1", "var0", "mean_selected",
                  "var_selected", "g_hat", "a_hat", "offset")
            return DiagQdaRule(d["means1"], d["means0"], d["var1"], d["var0"],
                               d["mean_selected"], d["var_selected"], d["g_hat"],
                               d["a_hat"], d["offset"], info)
        if kind == "quadratic":
            _need(d, "quad", "linear", "center", "offset")
            return QuadraticFrontier(d["quad"], d["linear"], d["center"], d["offset"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"invalid rule file: {exc}") from None
    raise SchemaError(f"unknown rule kind {kind!r}")


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def read_json(path):
    """Load JSON, turning syntax errors into SchemaError with line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: JSON parse error at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from None


def write_rule(path, rule):
    write_json(path, rule_to_dict(rule))


def read_rule(path):
    return rule_from_dict(read_json(path))


def write_table(path, rows):
    """List of flat dicts as CSV; columns are the union of keys in first-seen order."""
    cols = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    out = [cols]
    for r in rows:
        out.append(["" if r.get(c) is None else
                    (format_float(r[c]) if isinstance(r[c], (float, np.floating))
                     else str(r[c])) for c in cols])
    _write_rows(path, out)


def read_matrix(path, p):
    """Covariance from a .json file (nested list, or {"diagonal": [...]}) or a
    headerless CSV; must be p x p."""
    if str(path).endswith(".json"):
        obj = read_json(path)
        if isinstance(obj, dict) and "diagonal" in obj:
            mat = np.diag(np.asarray(obj["diagonal"], dtype=float))
        else:
            mat = np.asarray(obj, dtype=float)
    else:
        try:
            mat = np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))
        except ValueError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    if mat.shape != (p, p):
        raise SchemaError(f"{path}: covariance must be {p} x {p}, got {mat.shape}")
    return mat
