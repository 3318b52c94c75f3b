"""File formats: dataset CSV + schema sidecar, posterior container, reports.

The dataset format is a plain CSV with columns id, cause, covariates
prefixed x_, then one column per declared symptom. Causes are 1-based in
files and empty for unknown; missing cells are empty strings. A schema
sidecar declares the cause count and each symptom's kind, one per line:

    causes: 4
    s00: binary
    s04: categorical(none|mild|severe)

Posterior snapshots go into a small versioned binary container: magic,
version byte, an explicit little-endian marker, a JSON metadata block, then
length-prefixed named arrays. Nothing in the file depends on wall-clock
time, so identical runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (Dataset, SymptomSpec, decode_categorical, expand_categorical,
                   expansion_map)
from .model import ChainMeta, PosteriorSamples

MAGIC = b"VAFACTOR"
FORMAT_VERSION = 1


# ------------------------------------------------------------- schema text

def schema_to_text(specs: tuple[SymptomSpec, ...], n_causes: int) -> str:
    lines = [f"causes: {n_causes}"]
    for spec in specs:
        if spec.kind == "categorical":
            lines.append(f"{spec.name}: categorical({'|'.join(spec.categories)})")
        else:
            lines.append(f"{spec.name}: {spec.kind}")
    return "\n".join(lines) + "\n"


def schema_from_text(text: str) -> tuple[tuple[SymptomSpec, ...], int]:
    lines = [ln for ln in (raw.strip() for raw in text.splitlines())
             if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("causes:"):
        raise ValueError("schema must declare 'causes: <count>' on its first line")
    try:
        n_causes = int(lines[0].split(":", 1)[1])
    except ValueError:
        raise ValueError("cause count must be an integer") from None
    specs = []
    for line in lines[1:]:
        if ":" not in line:
            raise ValueError(f"malformed schema line: {line!r}")
        name, kind = (part.strip() for part in line.split(":", 1))
        if kind.startswith("categorical(") and kind.endswith(")"):
            cats = tuple(kind[len("categorical("):-1].split("|"))
            specs.append(SymptomSpec(name, "categorical", cats))
        else:
            specs.append(SymptomSpec(name, kind))
    return tuple(specs), n_causes


def write_schema(path, specs: tuple[SymptomSpec, ...], n_causes: int) -> None:
    Path(path).write_text(schema_to_text(specs, n_causes))


def read_schema(path) -> tuple[tuple[SymptomSpec, ...], int]:
    return schema_from_text(Path(path).read_text())


# ------------------------------------------------------------ dataset CSV

def _fmt(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(float(value))


def write_dataset(path, data: Dataset, covariate_names=None) -> None:
    """Write one dataset as CSV; the schema goes in its own sidecar file."""
    n_cov = data.n_covariates - 1
    if covariate_names is None:
        covariate_names = [f"v{j + 1}" for j in range(n_cov)]
    if len(covariate_names) != n_cov:
        raise ValueError("one covariate name per non-intercept column required")
    ids = data.ids or tuple(f"r{i:04d}" for i in range(data.n))
    groups: dict[int, list[int]] = {}
    for col, (raw_idx, _) in enumerate(expansion_map(data.specs_raw)):
        groups.setdefault(raw_idx, []).append(col)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "cause"] + [f"x_{name}" for name in covariate_names]
                        + [spec.name for spec in data.specs_raw])
        for i in range(data.n):
            row = [ids[i], "" if data.y[i] < 0 else str(data.y[i] + 1)]
            row.extend(_fmt(v) for v in data.x[i, 1:])
            for raw_idx, spec in enumerate(data.specs_raw):
                cells = data.values[i, groups[raw_idx]]
                if spec.kind == "categorical":
                    label = decode_categorical(spec, cells)
                    row.append("" if label is None else label)
                else:
                    row.append("" if np.isnan(cells[0]) else _fmt(cells[0]))
            writer.writerow(row)


def dataset_covariate_names(path) -> tuple[str, ...]:
    """Names of the x_ columns in a dataset CSV header, prefix stripped."""
    with open(path, newline="") as fh:
        try:
            header = next(csv.reader(fh))
        except StopIteration:
            raise ValueError(f"{path}: empty dataset file") from None
    return tuple(name[2:] for name in header if name.startswith("x_"))


def read_dataset(path, schema_path) -> Dataset:
    """Parse a dataset CSV against its schema sidecar."""
    specs, n_causes = read_schema(schema_path)
    return read_dataset_using(path, specs, n_causes)


def read_dataset_using(path, specs: tuple[SymptomSpec, ...], n_causes: int) -> Dataset:
    """Parse a dataset CSV against an already-loaded schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty dataset file") from None
        rows = list(reader)
    if header[:2] != ["id", "cause"]:
        raise ValueError(f"{path}: header must start with id,cause")
    cov_cols = [j for j, name in enumerate(header) if name.startswith("x_")]
    sym_names = [name for j, name in enumerate(header)
                 if j >= 2 and j not in cov_cols]
    if sym_names != [spec.name for spec in specs]:
        raise ValueError(f"{path}: symptom columns do not match the schema")
    sym_cols = [header.index(name) for name in sym_names]
    ids, y, x_rows, value_rows = [], [], [], []
    for line_no, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{line_no}: wrong field count")
        ids.append(row[0])
        cause = row[1].strip()
        if cause == "":
            y.append(-1)
        else:
            label = int(cause)
            if not 1 <= label <= n_causes:
                raise ValueError(f"{path}:{line_no}: cause {label} out of range")
            y.append(label - 1)
        x_rows.append([1.0] + [float(row[j]) for j in cov_cols])
        cells = []
        for spec, j in zip(specs, sym_cols):
            raw = row[j].strip()
            if spec.kind == "categorical":
                cells.extend(expand_categorical(spec, raw if raw else None))
            else:
                cells.append(np.nan if raw == "" else float(raw))
        value_rows.append(cells)
    return Dataset(specs_raw=specs, values=np.array(value_rows, dtype=float),
                   x=np.array(x_rows, dtype=float), y=np.array(y, dtype=int),
                   n_causes=n_causes, ids=tuple(ids))


# -------------------------------------------------------- posterior file

@dataclass(frozen=True)
class PosteriorFile:
    """Decoded contents of one trained-model container."""

    samples: PosteriorSamples
    specs: tuple[SymptomSpec, ...]
    n_causes: int
    covariates: tuple[str, ...]
    scales: np.ndarray


def _pack_bytes(out: list[bytes], payload: bytes) -> None:
    out.append(struct.pack("<Q", len(payload)))
    out.append(payload)


def _pack_array(out: list[bytes], name: str, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
    _pack_bytes(out, name.encode())
    _pack_bytes(out, arr.dtype.str.encode())
    out.append(struct.pack("<Q", arr.ndim))
    out.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
    out.append(arr.tobytes(order="C"))


class _Cursor:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ValueError("posterior file truncated")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def take_u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def take_block(self) -> bytes:
        return self.take(self.take_u64())


def write_posterior(path, samples: PosteriorSamples,
                    specs: tuple[SymptomSpec, ...], n_causes: int,
                    covariates: tuple[str, ...], scales: np.ndarray) -> None:
    meta = {
        "iterations": samples.meta.iterations,
        "burn_in": samples.meta.burn_in,
        "thinning": samples.meta.thinning,
        "seed": samples.meta.seed,
        "n_causes": n_causes,
        "covariates": list(covariates),
        "schema": schema_to_text(specs, n_causes),
    }
    out: list[bytes] = [MAGIC, struct.pack("<B", FORMAT_VERSION), b"<"]
    _pack_bytes(out, json.dumps(meta, sort_keys=True, separators=(",", ":")).encode())
    arrays = [("scales", np.asarray(scales, dtype=float))]
    arrays += [(name, getattr(samples, name)) for name in PosteriorSamples.ARRAY_FIELDS]
    out.append(struct.pack("<Q", len(arrays)))
    for name, arr in arrays:
        _pack_array(out, name, arr)
    Path(path).write_bytes(b"".join(out))


def read_posterior(path) -> PosteriorFile:
    cur = _Cursor(Path(path).read_bytes())
    if cur.take(len(MAGIC)) != MAGIC:
        raise ValueError(f"{path}: not a posterior file")
    version = struct.unpack("<B", cur.take(1))[0]
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    if cur.take(1) != b"<":
        raise ValueError(f"{path}: unsupported byte order")
    meta = json.loads(cur.take_block().decode())
    arrays = {}
    for _ in range(cur.take_u64()):
        name = cur.take_block().decode()
        dtype = np.dtype(cur.take_block().decode())
        ndim = cur.take_u64()
        shape = struct.unpack(f"<{ndim}Q", cur.take(8 * ndim))
        raw = cur.take(dtype.itemsize * int(np.prod(shape, dtype=np.int64)))
        arrays[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    missing = set(PosteriorSamples.ARRAY_FIELDS) - set(arrays)
    if missing or "scales" not in arrays:
        raise ValueError(f"{path}: missing arrays {sorted(missing | {'scales'})}")
    chain_meta = ChainMeta(iterations=meta["iterations"], burn_in=meta["burn_in"],
                           thinning=meta["thinning"], seed=meta["seed"])
    samples = PosteriorSamples(
        meta=chain_meta,
        **{name: arrays[name] for name in PosteriorSamples.ARRAY_FIELDS})
    specs, n_causes = schema_from_text(meta["schema"])
    return PosteriorFile(samples=samples, specs=specs, n_causes=n_causes,
                         covariates=tuple(meta["covariates"]),
                         scales=arrays["scales"])


# ------------------------------------------------------------- reports

def write_predictions(path, ids, probs: np.ndarray, top: np.ndarray) -> None:
    """Per-decedent cause probabilities and 1-based top cause, as CSV."""
    probs = np.asarray(probs, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "top_cause"]
                        + [f"p_cause{c + 1}" for c in range(probs.shape[1])])
        for i, rid in enumerate(ids):
            writer.writerow([rid, str(int(top[i]) + 1)]
                            + [repr(float(p)) for p in probs[i]])


def read_predictions(path) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Returns (ids, probs, top) with top back on the 0-based scale."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["id", "top_cause"]:
            raise ValueError(f"{path}: not a predictions file")
        ids, top, probs = [], [], []
        for row in reader:
            ids.append(row[0])
            top.append(int(row[1]) - 1)
            probs.append([float(v) for v in row[2:]])
    return tuple(ids), np.array(probs, dtype=float), np.array(top, dtype=int)


def write_csmf(path, mean: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cause", "mean", "lo", "hi"])
        for c in range(len(mean)):
            writer.writerow([str(c + 1), repr(float(mean[c])),
                             repr(float(lo[c])), repr(float(hi[c]))])


def read_csmf(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["cause", "mean", "lo", "hi"]:
            raise ValueError(f"{path}: not a CSMF file")
        table = np.array([[float(v) for v in row[1:]] for row in reader])
    return table[:, 0], table[:, 1], table[:, 2]


def write_truth(path, ids, labels: np.ndarray, n_causes: int) -> None:
    """True causes for held-out rows, keyed by row id, 1-based in the file."""
    record = {
        "n_causes": n_causes,
        "labels": {rid: int(lab) + 1 for rid, lab in zip(ids, labels)},
    }
    Path(path).write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")


def read_truth(path) -> tuple[dict[str, int], int]:
    record = json.loads(Path(path).read_text())
    labels = {rid: int(lab) - 1 for rid, lab in record["labels"].items()}
    return labels, int(record["n_causes"])


def write_metrics(path, values: dict) -> None:
    Path(path).write_text(json.dumps(values, sort_keys=True, indent=1) + "\n")


def read_metrics(path) -> dict:
    return json.loads(Path(path).read_text())
