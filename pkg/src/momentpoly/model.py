"""Trained polynomial response ``F(x) = sum_m c_m z^m`` with ``z = preprocess(x)``.

Coefficients are the folded unknowns of the moment system: multiplicities and
Taylor factorials are already absorbed, so evaluation needs no combinatorial
factor.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptySampleError, InputError, ModelLoadError
from .events import EventSet
from .moments import accumulate_sharded, combine_binary, combine_regression
from .solver import assemble, solve
from .tensor_index import Basis, basis_size, get_basis

FORMAT_VERSION = 1
PREPROC_MODES = ("none", "affine", "squash")


@dataclass(frozen=True)
class Preprocessor:
    """Per-feature ``u = (x - offset) / scale``; ``squash`` then applies ``tanh``.

    With ``clip`` set, affine outputs are clamped to [-1, 1] so points outside the
    training box see the polynomial at the box edge instead of an extrapolation.
    """

    mode: str
    offsets: tuple[float, ...]
    scales: tuple[float, ...]
    clip: bool = False

    def __post_init__(self):
        if self.mode not in PREPROC_MODES:
            raise InputError(f"unknown preprocessor mode {self.mode!r}")
        if len(self.offsets) != len(self.scales):
            raise InputError("offsets and scales differ in length")
        if not all(s > 0 and math.isfinite(s) for s in self.scales):
            raise InputError("preprocessor scales must be positive and finite")

    @classmethod
    def identity(cls, d: int) -> "Preprocessor":
        return cls("none", (0.0,) * d, (1.0,) * d)

    @classmethod
    def fit(cls, mode: str, x) -> "Preprocessor":
        """Affine: map the training range onto [-1, 1].  Squash: standardize then tanh."""
        x = np.asarray(x, dtype=float)
        d = x.shape[1]
        if mode == "none":
            return cls.identity(d)
        finite = x[np.isfinite(x).all(axis=1)]
        if finite.shape[0] == 0:
            raise EmptySampleError("no finite events to fit the preprocessor")
        if mode == "affine":
            lo, hi = finite.min(axis=0), finite.max(axis=0)
            offsets, scales = (hi + lo) / 2, (hi - lo) / 2
        elif mode == "squash":
            offsets, scales = finite.mean(axis=0), finite.std(axis=0)
        else:
            raise InputError(f"unknown preprocessor mode {mode!r}")
        scales = np.where(scales > 0, scales, 1.0)
        return cls(mode, tuple(map(float, offsets)), tuple(map(float, scales)), clip=mode == "affine")

    @property
    def dim(self) -> int:
        return len(self.offsets)

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.mode == "none":
            return x
        u = (x - np.asarray(self.offsets)) / np.asarray(self.scales)
        if self.mode == "squash":
            return np.tanh(u)
        return np.clip(u, -1.0, 1.0) if self.clip else u

    def inverse(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.mode == "none":
            return z
        u = np.arctanh(z) if self.mode == "squash" else z
        return u * np.asarray(self.scales) + np.asarray(self.offsets)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "offsets": list(self.offsets), "scales": list(self.scales), "clip": self.clip}


@dataclass(frozen=True)
class PolyModel:
    dim: int
    degree: int
    preprocessor: Preprocessor
    coefficients: np.ndarray = field(repr=False)
    mode: str = "binary"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float).reshape(-1)
        expected = basis_size(self.dim, self.degree)
        if coeffs.shape[0] != expected:
            raise InputError(f"need {expected} coefficients for d={self.dim}, degree={self.degree}, got {coeffs.shape[0]}")
        if self.preprocessor.dim != self.dim:
            raise InputError("preprocessor dimension does not match the model")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def basis(self) -> Basis:
        return get_basis(self.dim, self.degree)

    def evaluate(self, x):
        """Response for one feature vector (returns float) or rows of a matrix (returns array)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise InputError(f"expected {self.dim} features, got shape {x.shape[1:] if not single else x.shape[1:]}")
        if not np.isfinite(x).all():
            raise InputError("non-finite feature value")
        z = self.preprocessor.transform(x)
        out = np.empty(x.shape[0])
        chunk = max(1, 4_000_000 // self.basis.size)
        for start in range(0, x.shape[0], chunk):
            out[start : start + chunk] = self.basis.powers(z[start : start + chunk]) @ self.coefficients
        return float(out[0]) if single else out

    __call__ = evaluate

    def to_document(self) -> dict:
        meta = {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in self.metadata.items()}
        return {
            "format_version": FORMAT_VERSION,
            "dimension": self.dim,
            "degree": self.degree,
            "ordering": "lexical",
            "mode": self.mode,
            "preprocessor": self.preprocessor.to_dict(),
            "coefficients": [float(c) for c in self.coefficients],
            "metadata": meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), indent=1)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def from_document(cls, doc: dict) -> "PolyModel":
        if not isinstance(doc, dict):
            raise ModelLoadError("model document must be a JSON object")
        version = doc.get("format_version")
        if version != FORMAT_VERSION:
            raise ModelLoadError(f"unsupported model format_version {version!r} (expected {FORMAT_VERSION})")
        try:
            d, degree = doc["dimension"], doc["degree"]
            pre, coeffs = doc["preprocessor"], doc["coefficients"]
        except KeyError as exc:
            raise ModelLoadError(f"model document lacks field {exc.args[0]!r}") from None
        if not (isinstance(d, int) and isinstance(degree, int) and d >= 1 and degree >= 0):
            raise ModelLoadError(f"invalid dimension/degree {d!r}/{degree!r}")
        if doc.get("ordering", "lexical") != "lexical":
            raise ModelLoadError(f"unsupported monomial ordering {doc['ordering']!r}")
        expected = basis_size(d, degree)
        if not isinstance(coeffs, list) or len(coeffs) != expected:
            n = len(coeffs) if isinstance(coeffs, list) else type(coeffs).__name__
            raise ModelLoadError(f"expected {expected} coefficients for d={d}, degree={degree}, got {n}")
        try:
            pp = Preprocessor(pre["mode"], tuple(map(float, pre["offsets"])), tuple(map(float, pre["scales"])),
                              bool(pre.get("clip", False)))
            return cls(d, degree, pp, np.array(coeffs, dtype=float), doc.get("mode", "binary"),
                       dict(doc.get("metadata", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelLoadError(f"malformed model document: {exc}") from None

    @classmethod
    def loads(cls, text: str) -> "PolyModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelLoadError(f"model document is not valid JSON: {exc}") from None
        return cls.from_document(doc)

    @classmethod
    def load(cls, path) -> "PolyModel":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


@dataclass
class FitConfig:
    degree: int
    lam: float = 0.0
    preproc: str = "affine"
    mode: str = "binary"
    priors: tuple[float, float] = (1.0, 1.0)
    seed: int | None = None
    n_shards: int | None = None


def fit_report(events: EventSet, config: FitConfig) -> tuple[PolyModel, dict]:
    """Run the full training pipeline; return the model and a timing/diagnostics report."""
    if config.degree < 0:
        raise InputError("degree must be >= 0")
    if config.mode not in ("binary", "regression"):
        raise InputError(f"unknown fit mode {config.mode!r}")
    t0 = time.perf_counter()
    pre = Preprocessor.fit(config.preproc, events.x)
    z = pre.transform(events.x)
    w = events.weights
    order = 2 * config.degree
    meta = {}
    if config.mode == "binary":
        events.check_binary()
        sig = events.is_signal
        if not sig.any() or sig.all():
            raise EmptySampleError("binary fit needs at least one signal and one background event")
        acc_s = accumulate_sharded(z[sig], order, w[sig], n_shards=config.n_shards)
        acc_b = accumulate_sharded(z[~sig], order, w[~sig], n_shards=config.n_shards)
        cm = combine_binary(acc_s.normalize(), acc_b.normalize(), config.degree, config.priors)
        meta.update(n_signal=int(acc_s.n_events), n_background=int(acc_b.n_events))
        rejected = acc_s.n_rejected + acc_b.n_rejected
    else:
        if len(events) == 0:
            raise EmptySampleError("regression fit needs at least one event")
        acc = accumulate_sharded(z, order, w, target=events.label, target_order=config.degree,
                                 n_shards=config.n_shards)
        cm = combine_regression(acc.normalize(), config.degree)
        meta.update(n_events=int(acc.n_events))
        rejected = acc.n_rejected
    t1 = time.perf_counter()
    system = assemble(cm)
    t2 = time.perf_counter()
    rep = solve(system, config.lam)
    t3 = time.perf_counter()
    meta["lambda"] = config.lam
    meta["condition_estimate"] = rep.condition
    meta["seed"] = config.seed
    model = PolyModel(events.dim, config.degree, pre, rep.solution, config.mode, meta)
    report = {
        "basis_size": system.size,
        "condition_estimate": rep.condition if math.isfinite(rep.condition) else None,
        "residual_norm": rep.residual_norm,
        "lambda": config.lam,
        "n_rejected": int(rejected),
        "accumulate_seconds": t1 - t0,
        "assemble_seconds": t2 - t1,
        "solve_seconds": t3 - t2,
        **{k: v for k, v in meta.items() if k.startswith("n_")},
    }
    return model, report


def fit(events: EventSet, config: FitConfig) -> PolyModel:
    return fit_report(events, config)[0]
