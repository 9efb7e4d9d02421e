"""Per-iteration run records and their versioned CSV serialization.

One row per oracle exchange.  Vector fields are flattened into per-component
columns, so the outer approximation and protected feasible set of a
constrained run can be rebuilt from the file alone.  Floats are written with
``repr`` and parse back bit-exactly; identical configs therefore produce
byte-identical files.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import SchemaError

SCHEMA_VERSION = "oracle-transfer-trace-v1"


@dataclass(frozen=True)
class TraceRow:
    t: int
    x: np.ndarray
    f_tilde: float | None = None
    g_tilde: np.ndarray | None = None
    f_hat: float | None = None
    g_hat: np.ndarray | None = None
    shift: float | None = None
    flag_raw: str | None = None
    flag_repaired: str | None = None
    sep_g_tilde: np.ndarray | None = None
    sep_g_hat: np.ndarray | None = None
    f_exact: float | None = None
    best_gap: float | None = None
    mc_stderr: float | None = None


@dataclass
class RunSummary:
    transfer: str
    algorithm: str
    final_point: np.ndarray
    final_gap: float | None = None
    final_feasible: bool | None = None
    bound: float | None = None
    bound_ok: bool | None = None
    raw_extensible: bool | None = None
    repaired_extensible: bool | None = None
    wall_time: float = 0.0
    config_hash: str = ""
    n_rows: int = 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["final_point"] = [float(v) for v in np.asarray(self.final_point).reshape(-1)]
        return d


@dataclass
class RunTrace:
    rows: list[TraceRow]
    final_point: np.ndarray
    summary: RunSummary | None = None

    @property
    def dim(self) -> int:
        return int(np.asarray(self.final_point).reshape(-1).shape[0])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return repr(float(v))


def _vec_cols(name: str, dim: int) -> list[str]:
    return [f"{name}_{i}" for i in range(dim)]


def trace_columns(dim: int) -> list[str]:
    cols = ["t"] + _vec_cols("x", dim)
    cols += ["f_tilde"] + _vec_cols("g_tilde", dim)
    cols += ["f_hat"] + _vec_cols("g_hat", dim)
    cols += ["shift", "flag_raw", "flag_repaired"]
    cols += _vec_cols("sep_g_tilde", dim) + _vec_cols("sep_g_hat", dim)
    cols += ["f_exact", "best_gap", "mc_stderr"]
    return cols


def _row_record(row: TraceRow, dim: int) -> list[str]:
    def vec(v):
        if v is None:
            return [""] * dim
        return [_fmt(c) for c in np.asarray(v).reshape(-1)]

    rec = [str(row.t)] + vec(row.x)
    rec += [_fmt(row.f_tilde)] + vec(row.g_tilde)
    rec += [_fmt(row.f_hat)] + vec(row.g_hat)
    rec += [_fmt(row.shift), row.flag_raw or "", row.flag_repaired or ""]
    rec += vec(row.sep_g_tilde) + vec(row.sep_g_hat)
    rec += [_fmt(row.f_exact), _fmt(row.best_gap), _fmt(row.mc_stderr)]
    return rec


def write_trace_csv(trace: RunTrace, path, config_hash: str = "") -> None:
    dim = trace.dim
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={SCHEMA_VERSION} dim={dim} config_hash={config_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(trace_columns(dim))
        for row in trace.rows:
            writer.writerow(_row_record(row, dim))
        writer.writerow(["final"] + [_fmt(v) for v in np.asarray(trace.final_point).reshape(-1)])


def _parse_float(s: str) -> float | None:
    return None if s == "" else float(s)


def _parse_vec(cells: list[str]) -> np.ndarray | None:
    if all(c == "" for c in cells):
        return None
    return np.array([float(c) for c in cells])


def read_trace_csv(path) -> tuple[RunTrace, str]:
    """Read a trace file; returns (trace, config_hash)."""
    with open(path, newline="") as fh:
        header = fh.readline().strip()
        if not header.startswith("# schema="):
            raise SchemaError(f"{path}: missing schema header line")
        fields = dict(part.split("=", 1) for part in header[2:].split() if "=" in part)
        if fields.get("schema") != SCHEMA_VERSION:
            raise SchemaError(f"{path}: unsupported schema {fields.get('schema')!r}")
        dim = int(fields["dim"])
        config_hash = fields.get("config_hash", "")
        reader = csv.reader(fh)
        cols = next(reader)
        if cols != trace_columns(dim):
            raise SchemaError(f"{path}: column layout does not match schema")
        rows: list[TraceRow] = []
        final_point = None
        for rec in reader:
            if rec and rec[0] == "final":
                final_point = np.array([float(c) for c in rec[1 : 1 + dim]])
                continue
            it = iter(rec)
            t = int(next(it))
            take = lambda k: [next(it) for _ in range(k)]
            x = _parse_vec(take(dim))
            f_tilde = _parse_float(next(it))
            g_tilde = _parse_vec(take(dim))
            f_hat = _parse_float(next(it))
            g_hat = _parse_vec(take(dim))
            shift = _parse_float(next(it))
            flag_raw = next(it) or None
            flag_repaired = next(it) or None
            sep_g_tilde = _parse_vec(take(dim))
            sep_g_hat = _parse_vec(take(dim))
            f_exact = _parse_float(next(it))
            best_gap = _parse_float(next(it))
            mc_stderr = _parse_float(next(it))
            rows.append(TraceRow(t, x, f_tilde, g_tilde, f_hat, g_hat, shift,
                                 flag_raw, flag_repaired, sep_g_tilde, sep_g_hat,
                                 f_exact, best_gap, mc_stderr))
    if final_point is None:
        raise SchemaError(f"{path}: missing final-point row")
    return RunTrace(rows=rows, final_point=final_point), config_hash


def rows_equal(a: TraceRow, b: TraceRow) -> bool:
    """Bit-exact equality of two rows (None fields must match exactly)."""

    def veq(u, v):
        if u is None or v is None:
            return (u is None) == (v is None)
        return np.array_equal(np.asarray(u), np.asarray(v))

    def feq(u, v):
        if u is None or v is None:
            return (u is None) == (v is None)
        return float(u) == float(v) or (np.isnan(u) and np.isnan(v))

    return (a.t == b.t and veq(a.x, b.x) and feq(a.f_tilde, b.f_tilde)
            and veq(a.g_tilde, b.g_tilde) and feq(a.f_hat, b.f_hat)
            and veq(a.g_hat, b.g_hat) and feq(a.shift, b.shift)
            and a.flag_raw == b.flag_raw and a.flag_repaired == b.flag_repaired
            and veq(a.sep_g_tilde, b.sep_g_tilde) and veq(a.sep_g_hat, b.sep_g_hat)
            and feq(a.f_exact, b.f_exact) and feq(a.best_gap, b.best_gap)
            and feq(a.mc_stderr, b.mc_stderr))
