"""CSV schemas and all-or-nothing output directories."""
from __future__ import annotations

import csv
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MetadataMismatch
from .pointprocess import CorrelationEstimate, RescaledProcess, SpectrumRecord

SPECTRA_HEADER = ["realization", "seed", "h", "delta", "re", "im"]
RESCALED_HEADER = ["ensemble", "z0_re", "z0_im", "h", "R", "realization", "w_re", "w_im"]
CORR_HEADER = ["bin_lo_r2", "bin_hi_r2", "pairs", "khat", "stderr"]
CURVES_HEADER = ["r2", "value", "curve_name"]


def fmt(x: float) -> str:
    return "%.17g" % x


@contextmanager
def atomic_outputs(out_dir: str | Path):
    """Yield a staging directory; its files move into ``out_dir`` only on success."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    try:
        yield stage
        for f in sorted(stage.iterdir()):
            os.replace(f, out / f.name)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def _writer(path: Path, header):
    fh = open(path, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    return fh, w


def write_spectra(path: Path, records: list[SpectrumRecord]) -> None:
    fh, w = _writer(path, SPECTRA_HEADER)
    with fh:
        for i, rec in enumerate(records):
            for z in rec.eigenvalues:
                w.writerow([i, rec.seed, fmt(rec.h), fmt(rec.delta), fmt(z.real), fmt(z.imag)])


def read_spectra(path: Path, ensemble: str = "spectrum") -> list[SpectrumRecord]:
    rows: dict[int, list] = {}
    meta: dict[int, tuple] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            i = int(r["realization"])
            meta[i] = (float(r["h"]), float(r["delta"]), int(r["seed"]))
            rows.setdefault(i, []).append(complex(float(r["re"]), float(r["im"])))
    out = []
    for i in sorted(rows):
        h, d, s = meta[i]
        out.append(SpectrumRecord(h, d, s, ensemble, np.array(rows[i])))
    return out


@dataclass
class RescaledEnsemble:
    ensemble: str
    processes: list[RescaledProcess]


def write_rescaled(path: Path, ensemble: str, processes: list[RescaledProcess]) -> None:
    """One row per point; a realisation without points gets a row with empty ``w`` fields."""
    fh, w = _writer(path, RESCALED_HEADER)
    with fh:
        for i, p in enumerate(processes):
            head = [ensemble, fmt(p.z0.real), fmt(p.z0.imag), fmt(p.h), fmt(p.windowRadius), i]
            if p.points.size == 0:
                w.writerow(head + ["", ""])
            for z in p.points:
                w.writerow(head + [fmt(z.real), fmt(z.imag)])


def read_rescaled(path: Path) -> RescaledEnsemble:
    pts: dict[int, list] = {}
    meta = None
    ensemble = ""
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            m = (complex(float(r["z0_re"]), float(r["z0_im"])), float(r["h"]), float(r["R"]))
            if meta is None:
                meta, ensemble = m, r["ensemble"]
            elif m != meta:
                raise MetadataMismatch(f"{path}: rows disagree on z0, h or R")
            lst = pts.setdefault(int(r["realization"]), [])
            if r["w_re"] != "":
                lst.append(complex(float(r["w_re"]), float(r["w_im"])))
    if meta is None:
        raise MetadataMismatch(f"{path}: no rows")
    z0, h, R = meta
    procs = [RescaledProcess(z0, h, R, np.array(pts[i], dtype=complex)) for i in sorted(pts)]
    return RescaledEnsemble(ensemble, procs)


def write_corr(path: Path, est: CorrelationEstimate) -> None:
    fh, w = _writer(path, CORR_HEADER)
    with fh:
        e = est.binEdges
        for k in range(e.size - 1):
            w.writerow([fmt(e[k]), fmt(e[k + 1]), int(est.pairCounts[k]), fmt(est.khat[k]), fmt(est.stderr[k])])


def read_corr(path: Path, windowRadius: float = float("nan")) -> CorrelationEstimate:
    lo, hi, pairs, khat, se = [], [], [], [], []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            lo.append(float(r["bin_lo_r2"]))
            hi.append(float(r["bin_hi_r2"]))
            pairs.append(int(r["pairs"]))
            khat.append(float(r["khat"]))
            se.append(float(r["stderr"]))
    if not lo:
        raise ValueError(f"{path}: no bins")
    edges = np.array(lo + [hi[-1]])
    return CorrelationEstimate(edges, np.array(pairs), np.array(khat), np.array(se), 0, float("nan"), windowRadius)


def write_curves(path: Path, curves: dict[str, tuple[np.ndarray, np.ndarray]]) -> None:
    fh, w = _writer(path, CURVES_HEADER)
    with fh:
        for name, (x, y) in curves.items():
            for a, b in zip(x, y):
                w.writerow([fmt(a), fmt(b), name])


def read_curves(path: Path) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    acc: dict[str, tuple[list, list]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            xs, ys = acc.setdefault(r["curve_name"], ([], []))
            xs.append(float(r["r2"]))
            ys.append(float(r["value"]))
    return {k: (np.array(x), np.array(y)) for k, (x, y) in acc.items()}
