"""Labeled event collections and the event CSV format.

CSV layout: header ``f0,...,f{d-1},label[,weight]``, one event per line,
decimal-point floats, UTF-8, LF line endings.  Binary labels are +1 (signal)
and -1 (background); regression labels are arbitrary reals.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError


class CsvFormatError(InputError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


@dataclass(frozen=True)
class EventSet:
    x: np.ndarray
    label: np.ndarray
    weight: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "label", np.asarray(self.label, dtype=float).reshape(-1))
        if self.label.shape[0] != x.shape[0]:
            raise InputError(f"{self.label.shape[0]} labels for {x.shape[0]} events")
        if self.weight is not None:
            w = np.asarray(self.weight, dtype=float).reshape(-1)
            if w.shape[0] != x.shape[0]:
                raise InputError(f"{w.shape[0]} weights for {x.shape[0]} events")
            object.__setattr__(self, "weight", w)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def __len__(self):
        return self.x.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.ones(len(self)) if self.weight is None else self.weight

    @property
    def is_signal(self) -> np.ndarray:
        return self.label > 0

    def check_binary(self) -> None:
        bad = ~np.isin(self.label, (1.0, -1.0))
        if bad.any():
            raise InputError(f"binary labels must be +1 or -1; event {int(np.argmax(bad))} has {self.label[bad][0]}")

    def subset(self, mask) -> "EventSet":
        return EventSet(self.x[mask], self.label[mask], None if self.weight is None else self.weight[mask])

    @classmethod
    def concat(cls, parts) -> "EventSet":
        parts = list(parts)
        weights = None
        if any(p.weight is not None for p in parts):
            weights = np.concatenate([p.weights for p in parts])
        return cls(np.vstack([p.x for p in parts]), np.concatenate([p.label for p in parts]), weights)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(events: EventSet, path) -> None:
    d = events.dim
    header = [f"f{i}" for i in range(d)] + ["label"]
    if events.weight is not None:
        header.append("weight")
    integral = np.all(events.label == np.round(events.label))
    lines = [",".join(header)]
    for i in range(len(events)):
        row = [_fmt(v) for v in events.x[i]]
        lab = events.label[i]
        row.append(str(int(lab)) if integral else _fmt(lab))
        if events.weight is not None:
            row.append(_fmt(events.weight[i]))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv(path) -> EventSet:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(path, 1, "empty file") from None
        header = [h.strip() for h in header]
        if "label" not in header:
            raise CsvFormatError(path, 1, "header lacks a 'label' column")
        d = header.index("label")
        if d < 1 or header[:d] != [f"f{i}" for i in range(d)]:
            raise CsvFormatError(path, 1, f"expected header f0,...,f{{d-1}},label[,weight], got {','.join(header)}")
        has_weight = header[d + 1 :] == ["weight"]
        if len(header) != d + 1 + has_weight:
            raise CsvFormatError(path, 1, f"unexpected columns after label: {header[d + 1:]}")
        width = len(header)
        rows = []
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise CsvFormatError(path, reader.line_num, f"expected {width} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise CsvFormatError(path, reader.line_num, str(exc)) from None
    data = np.array(rows, dtype=float).reshape(len(rows), width)
    return EventSet(data[:, :d], data[:, d], data[:, d + 1] if has_weight else None)
