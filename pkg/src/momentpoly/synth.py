"""Seeded Gaussian-mixture samples and their analytic optimal response.

Two built-in setups:

``fig1``
    1-D: signal N(0, 0.5^2); background an equal mix of N(-2, 0.7^2) and
    N(+2, 0.7^2).
``sec3``
    3-D: twelve signal Gaussians centred on a shuffled 3x2x2 grid inside the
    unit cube, each with its own diagonal widths drawn from [0.02, 0.06];
    background uniform on the unit cube.

Seeds are split with :func:`split_seed`, which spawns children of a
``numpy.random.SeedSequence`` and reduces each to one 64-bit integer.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import InputError, SpecError
from .events import EventSet


def split_seed(seed: int, n: int) -> list[int]:
    """``n`` independent 64-bit sub-seeds derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


@dataclass(frozen=True)
class Gaussian:
    mean: tuple[float, ...]
    cov: tuple  # diagonal variances, or full matrix as nested tuples
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))
        cov = np.asarray(self.cov, dtype=float)
        d = len(self.mean)
        if cov.ndim == 1:
            if cov.shape != (d,) or np.any(cov <= 0):
                raise SpecError(f"diagonal covariance must have {d} positive entries")
            object.__setattr__(self, "cov", tuple(map(float, cov)))
        elif cov.shape == (d, d):
            if not np.allclose(cov, cov.T):
                raise SpecError("covariance matrix must be symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise SpecError("covariance matrix must be positive definite") from None
            object.__setattr__(self, "cov", tuple(tuple(map(float, r)) for r in cov))
        else:
            raise SpecError(f"covariance shape {cov.shape} does not match dimension {d}")
        if not self.weight > 0:
            raise SpecError("component weights must be positive")

    @property
    def dim(self) -> int:
        return len(self.mean)

    def _chol(self) -> np.ndarray:
        cov = np.asarray(self.cov)
        return np.diag(np.sqrt(cov)) if cov.ndim == 1 else np.linalg.cholesky(cov)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return np.asarray(self.mean) + z @ self._chol().T

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        L = self._chol()
        diff = (x - np.asarray(self.mean)).T
        sol = np.linalg.solve(L, diff) if L.shape[0] else diff
        maha = np.sum(sol**2, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        return -0.5 * (self.dim * np.log(2 * np.pi) + logdet + maha)

    def to_dict(self) -> dict:
        return {"type": "gaussian", "mean": list(self.mean), "cov": _listify(self.cov), "weight": self.weight}


@dataclass(frozen=True)
class Uniform:
    low: tuple[float, ...]
    high: tuple[float, ...]
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "low", tuple(float(v) for v in self.low))
        object.__setattr__(self, "high", tuple(float(v) for v in self.high))
        if len(self.low) != len(self.high) or not all(h > l for l, h in zip(self.low, self.high)):
            raise SpecError("uniform support box must be non-degenerate")
        if not self.weight > 0:
            raise SpecError("component weights must be positive")

    @property
    def dim(self) -> int:
        return len(self.low)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, self.dim))

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        low, high = np.asarray(self.low), np.asarray(self.high)
        inside = np.all((x >= low) & (x <= high), axis=1)
        return np.where(inside, -np.sum(np.log(high - low)), -np.inf)

    def to_dict(self) -> dict:
        return {"type": "uniform", "low": list(self.low), "high": list(self.high), "weight": self.weight}


def _listify(v):
    return [_listify(e) for e in v] if isinstance(v, (tuple, list)) else v


def _component_from_dict(d: dict):
    kind = d.get("type", "gaussian")
    try:
        if kind == "gaussian":
            return Gaussian(tuple(d["mean"]), _tuplify(d["cov"]), float(d.get("weight", 1.0)))
        if kind == "uniform":
            return Uniform(tuple(d["low"]), tuple(d["high"]), float(d.get("weight", 1.0)))
    except KeyError as exc:
        raise SpecError(f"{kind} component lacks field {exc.args[0]!r}") from None
    raise SpecError(f"unknown component type {kind!r}")


def _tuplify(v):
    return tuple(_tuplify(e) for e in v) if isinstance(v, list) else v


@dataclass(frozen=True)
class MixtureSpec:
    dim: int
    signal: tuple = field(default=())
    background: tuple = field(default=())
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "signal", tuple(self.signal))
        object.__setattr__(self, "background", tuple(self.background))
        for label, comps in (("signal", self.signal), ("background", self.background)):
            if not comps:
                raise SpecError(f"{label} mixture has no components")
            for c in comps:
                if c.dim != self.dim:
                    raise SpecError(f"{label} component of dimension {c.dim} in a {self.dim}-d spec")

    @staticmethod
    def _weights(comps) -> np.ndarray:
        w = np.array([c.weight for c in comps], dtype=float)
        return w / w.sum()

    def _class_log_pdf(self, comps, x: np.ndarray) -> np.ndarray:
        logs = np.stack([c.log_pdf(x) for c in comps])
        return logsumexp(logs + np.log(self._weights(comps))[:, None], axis=0)

    def log_density(self, which: str, x) -> np.ndarray:
        x = self._as_points(x)
        comps = self.signal if which == "signal" else self.background
        return self._class_log_pdf(comps, x)

    def _as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or (x.ndim == 1 and self.dim == 1 and x.shape[0] != 1):
            x = x.reshape(-1, 1)
        elif x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.dim:
            raise InputError(f"expected {self.dim}-d points, got shape {x.shape}")
        return x

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dim,
            "signal": [c.to_dict() for c in self.signal],
            "background": [c.to_dict() for c in self.background],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        try:
            return cls(
                int(d["dimension"]),
                tuple(_component_from_dict(c) for c in d["signal"]),
                tuple(_component_from_dict(c) for c in d["background"]),
                d.get("name", "custom"),
            )
        except KeyError as exc:
            raise SpecError(f"mixture spec lacks field {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path) -> "MixtureSpec":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise SpecError(f"mixture spec is not valid JSON: {exc}") from None


def _draw_class(comps, weights, rng: np.random.Generator, n: int) -> np.ndarray:
    counts = rng.multinomial(n, weights)
    parts = [c.draw(rng, k) for c, k in zip(comps, counts) if k]
    x = np.vstack(parts)
    return x[rng.permutation(n)]


def sample(spec: MixtureSpec, n: int, seed: int) -> EventSet:
    """Exactly ``n`` signal events (label +1) followed by ``n`` background events (label -1)."""
    if n < 1:
        raise InputError(f"need n >= 1 events per class, got {n}")
    s_seed, b_seed = split_seed(seed, 2)
    xs = _draw_class(spec.signal, spec._weights(spec.signal), np.random.default_rng(s_seed), n)
    xb = _draw_class(spec.background, spec._weights(spec.background), np.random.default_rng(b_seed), n)
    labels = np.concatenate([np.ones(n), -np.ones(n)])
    return EventSet(np.vstack([xs, xb]), labels)


def optimal_response(spec: MixtureSpec, x):
    """(s - b) / (s + b) from the mixture densities, via tanh of half the log ratio."""
    pts = spec._as_points(x)
    ls = spec.log_density("signal", pts)
    lb = spec.log_density("background", pts)
    undefined = np.isneginf(ls) & np.isneginf(lb)
    if undefined.any():
        raise InputError(f"both densities vanish at {pts[np.argmax(undefined)]}")
    with np.errstate(invalid="ignore"):
        out = np.tanh(0.5 * (ls - lb))
    scalar = np.ndim(x) == 0 or (np.ndim(x) == 1 and pts.shape[0] == 1)
    return float(out[0]) if scalar else out


def fig1_spec() -> MixtureSpec:
    return MixtureSpec(
        1,
        (Gaussian((0.0,), (0.25,)),),
        (Gaussian((-2.0,), (0.49,), 0.5), Gaussian((2.0,), (0.49,), 0.5)),
        name="fig1",
    )


def sec3_spec(seed: int = 3) -> MixtureSpec:
    rng = np.random.default_rng(seed)
    grid = [(x, y, z) for x in (1 / 6, 1 / 2, 5 / 6) for y in (0.25, 0.75) for z in (0.25, 0.75)]
    order = rng.permutation(len(grid))
    peaks = []
    for i in order:
        sigma = rng.uniform(0.02, 0.06, size=3)
        peaks.append(Gaussian(grid[i], tuple(sigma**2)))
    background = (Uniform((0.0,) * 3, (1.0,) * 3),)
    return MixtureSpec(3, tuple(peaks), background, name="sec3")


BUILTIN_SPECS = {"fig1": fig1_spec, "sec3": sec3_spec}


def resolve_spec(name_or_path: str) -> MixtureSpec:
    if name_or_path in BUILTIN_SPECS:
        return BUILTIN_SPECS[name_or_path]()
    path = Path(name_or_path)
    if not path.exists():
        raise SpecError(f"no built-in spec or spec file named {name_or_path!r}")
    return MixtureSpec.load(path)
