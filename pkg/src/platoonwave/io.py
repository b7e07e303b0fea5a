"""CSV/JSON readers and writers for traces, spectra and experiment tables."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .dynamics import SimulationTrace
from .params import PlatoonParams, Topology
from .spectral import SpectralScan

FLOAT_FMT = "%.17g"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, Topology):
        return obj.value
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    # json has no inf/nan; write them as strings so the files stay standard
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_clean(json.loads(json.dumps(obj, default=_json_default, allow_nan=True))),
                      indent=2, sort_keys=False)
    path.write_text(text + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def trace_metadata(trace: SimulationTrace) -> dict:
    meta = trace.params.to_dict() if trace.params is not None else {}
    meta.update({
        "topology": trace.topology.value if trace.topology is not None else None,
        "dt": trace.dt,
        "t_end": trace.t_end,
        "diverged": trace.diverged,
    })
    return meta


def write_trace(trace: SimulationTrace, path) -> tuple[Path, Path]:
    """Write ``path`` (CSV) and ``path`` with suffix ``.json`` (metadata)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ",".join(["t"] + [f"e_{i}" for i in range(trace.errors.shape[1])])
    np.savetxt(path, np.column_stack([trace.times, trace.errors]), fmt=FLOAT_FMT,
               delimiter=",", header=header, comments="")
    meta_path = write_json(path.with_suffix(".json"), trace_metadata(trace))
    return path, meta_path


def read_trace(path) -> SimulationTrace:
    path = Path(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    meta_path = path.with_suffix(".json")
    meta = read_json(meta_path) if meta_path.exists() else {}
    params = PlatoonParams.from_dict(meta) if "N" in meta else None
    dt = float(meta["dt"]) if "dt" in meta else float(data[1, 0] - data[0, 0])
    topology = Topology.coerce(meta["topology"]) if meta.get("topology") else None
    return SimulationTrace(params, dt, data[:, 0], data[:, 1:], bool(meta.get("diverged", False)),
                           topology, meta.get("t_end"))


SPECTRUM_HEADER = ["m", "phi", "re_nu1", "im_nu1", "re_nu2", "im_nu2", "re_nu3", "im_nu3",
                   "c1", "alpha1", "c2", "alpha2", "c3", "alpha3"]


def write_spectrum(scan: SpectralScan, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    m = np.arange(scan.phi.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        vel = np.where(scan.phi[:, None] > 0, -scan.roots.imag / scan.phi[:, None], np.nan)
    cols = [m, scan.phi]
    for k in range(3):
        cols += [scan.roots[:, k].real, scan.roots[:, k].imag]
    for k in range(3):
        cols += [vel[:, k], scan.roots[:, k].real]
    np.savetxt(path, np.column_stack(cols), fmt=FLOAT_FMT, delimiter=",",
               header=",".join(SPECTRUM_HEADER), comments="")
    return path


def write_rows(path, rows: list[dict], fieldnames: list[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return path


def read_rows(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
