"""Plain-text output formats: CSV with 17 significant digits and JSON with
sorted keys, so reruns of the same configuration are byte-identical."""

import csv
import json
import math

import numpy as np


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [[float(v) for v in row] for row in reader]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan
        return x if math.isfinite(x) else fmt(x)
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def write_path_csv(path, sample):
    """A single path as ``t,value`` rows."""
    write_csv(path, ["t", "value"], zip(sample.grid.points, sample.values))


def write_coeffs_csv(path, coeffs):
    """Rows ``j,k,f_jk``; ``f0`` and ``f1`` appear as ``j = -1`` with ``k = 0, 1``."""
    rows = [(-1, 0, float(coeffs.f0)), (-1, 1, float(coeffs.f1))]
    for j, row in enumerate(coeffs.levels):
        rows.extend((j, k + 1, float(v)) for k, v in enumerate(np.asarray(row)))
    write_csv(path, ["j", "k", "f_jk"], rows)


def write_matrix_csv(path, M):
    M = np.asarray(M)
    write_csv(path, [f"c{i + 1}" for i in range(M.shape[1])], M.tolist())
