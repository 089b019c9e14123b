"""Writers and readers for profiles, fields, norm estimates and reports"""

import csv
import io
import json
import logging
import math
import os
from typing import Any

import numpy as np

logger = logging.getLogger(__name__)

CSV_FIELD_LIMIT = 128


def to_plain(value: Any) -> Any:
    """JSON-ready copy: numpy scalars to Python, complex to [re, im], non-finite to None"""
    if isinstance(value, dict):
        return {str(key): to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_plain(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_plain(float(value.real)), to_plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def profile_to_csv(profile) -> str:
    """node,re,im rows of a RadialProfile"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['node', 're', 'im'])
    samples = np.asarray(profile.samples, dtype=complex)
    for node, value in zip(profile.nodes, samples):
        writer.writerow([repr(float(node)), repr(float(value.real)), repr(float(value.imag))])
    return buffer.getvalue()


def profile_from_csv(text: str, measure: str = 'lebesgue', mode_index: int = 0):
    from abnorm.core.radial_reduction import RadialGrid, RadialProfile

    rows = list(csv.reader(io.StringIO(text)))[1:]
    data = np.array([[float(x) for x in row] for row in rows if row])
    grid = RadialGrid.from_nodes(data[:, 0], measure)
    return RadialProfile(grid, data[:, 1] + 1j * data[:, 2], mode_index)


def norm_estimate_to_json(estimate) -> str:
    return json.dumps(to_plain(estimate.to_dict()), sort_keys=True)


def field_to_bytes(plane_field) -> bytes:
    """Header (n, extent) as little-endian float64, then n^2 complex pairs row-major"""
    header = np.array([plane_field.n, plane_field.extent], dtype='<f8')
    body = np.ascontiguousarray(plane_field.samples, dtype='<c16')
    return header.tobytes() + body.tobytes()


def field_from_bytes(data: bytes):
    from abnorm.core.planar_field import PlaneField

    header = np.frombuffer(data[:16], dtype='<f8')
    n, extent = int(header[0]), float(header[1])
    samples = np.frombuffer(data[16:], dtype='<c16')
    if samples.size != n * n:
        raise ValueError(f"expected {n * n} samples, found {samples.size}")
    return PlaneField(samples.reshape(n, n).copy(), extent)


def field_to_csv(plane_field) -> str:
    """x,y,re,im rows; only for small fields"""
    if plane_field.n > CSV_FIELD_LIMIT:
        raise ValueError(f"CSV export is limited to n <= {CSV_FIELD_LIMIT}")
    axis = -plane_field.extent / 2.0 + plane_field.spacing * np.arange(plane_field.n)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['x', 'y', 're', 'im'])
    for row, y in enumerate(axis):
        for column, x in enumerate(axis):
            value = complex(plane_field.samples[row, column])
            writer.writerow([repr(float(x)), repr(float(y)), repr(value.real), repr(value.imag)])
    return buffer.getvalue()


def write_text(path: str, text: str):
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(text)
    logger.debug(f"wrote {path}")


def write_norm_artifacts(estimate, directory: str) -> str:
    """<kind>_p<p>.json and the witness as <kind>_p<p>_witness.csv; returns the stem"""
    os.makedirs(directory, exist_ok=True)
    stem = os.path.join(directory, f"{estimate.kind}_p{estimate.p:g}")
    write_text(f"{stem}.json", norm_estimate_to_json(estimate))
    write_text(f"{stem}_witness.csv", profile_to_csv(estimate.witness))
    return stem
