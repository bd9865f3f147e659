"""Response histograms, binned purity curves, AUC and monotonicity statistics."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .errors import DegenerateCurveError, EmptySampleError, InputError

DEFAULT_BINS = 20
DEFAULT_MIN_OCCUPANCY = 25


def _resolve_range(values: list[np.ndarray], value_range):
    if value_range is not None:
        lo, hi = map(float, value_range)
    else:
        allv = np.concatenate([v for v in values if v.size])
        lo, hi = float(allv.min()), float(allv.max())
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise InputError("histogram range must be finite")
    if hi < lo:
        raise InputError(f"inverted histogram range [{lo}, {hi}]")
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    signal: np.ndarray
    background: np.ndarray
    underflow: tuple[float, float]
    overflow: tuple[float, float]


def response_histogram(signal_resp, background_resp, n_bins: int = DEFAULT_BINS, value_range=None,
                       signal_weight=None, background_weight=None) -> Histogram:
    """Per-class (weighted) counts; values outside the range go to under/overflow."""
    rs = np.asarray(signal_resp, dtype=float).reshape(-1)
    rb = np.asarray(background_resp, dtype=float).reshape(-1)
    if rs.size + rb.size == 0:
        raise EmptySampleError("no responses to histogram")
    if n_bins < 1:
        raise InputError("n_bins must be >= 1")
    lo, hi = _resolve_range([rs, rb], value_range)
    edges = np.linspace(lo, hi, n_bins + 1)
    out = []
    under, over = [], []
    for r, w in ((rs, signal_weight), (rb, background_weight)):
        w = np.ones_like(r) if w is None else np.asarray(w, dtype=float).reshape(-1)
        inside = (r >= lo) & (r <= hi)
        counts, _ = np.histogram(r[inside], bins=edges, weights=w[inside])
        out.append(counts)
        under.append(float(w[r < lo].sum()))
        over.append(float(w[r > hi].sum()))
    return Histogram(edges, out[0], out[1], tuple(under), tuple(over))


@dataclass(frozen=True)
class PurityCurve:
    edges: np.ndarray
    n_signal: np.ndarray
    n_background: np.ndarray
    w_signal: np.ndarray
    w_background: np.ndarray
    purity: np.ndarray  # NaN where the bin is below the occupancy threshold
    min_occupancy: int
    mean_response: np.ndarray | None = None  # weighted mean response per bin

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def counts(self) -> np.ndarray:
        return self.n_signal + self.n_background

    @property
    def populated(self) -> np.ndarray:
        return ~np.isnan(self.purity)

    @property
    def ideal(self) -> np.ndarray:
        """(F + 1) / 2 at each bin's mean response (the centre for empty bins), clipped to [0, 1]."""
        f = self.centers if self.mean_response is None else np.where(
            np.isnan(self.mean_response), self.centers, self.mean_response)
        return np.clip((f + 1.0) / 2.0, 0.0, 1.0)

    def binomial_sigma(self) -> np.ndarray:
        # Laplace-smoothed so that pure bins still carry a finite error
        n = self.counts
        p = (self.n_signal + 1.0) / (n + 2.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sqrt(p * (1 - p) / n)


def purity_curve(responses, is_signal, weights=None, n_bins: int = DEFAULT_BINS, value_range=None,
                 min_occupancy: int = DEFAULT_MIN_OCCUPANCY) -> PurityCurve:
    r = np.asarray(responses, dtype=float).reshape(-1)
    sig = np.asarray(is_signal, dtype=bool).reshape(-1)
    if r.shape != sig.shape:
        raise InputError("responses and labels differ in length")
    if not sig.any() or sig.all():
        raise InputError("purity curve needs both classes present")
    w = np.ones_like(r) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    lo, hi = _resolve_range([r], value_range)
    edges = np.linspace(lo, hi, n_bins + 1)
    inside = (r >= lo) & (r <= hi)
    hist = lambda mask, ww=None: np.histogram(r[inside & mask], bins=edges,
                                              weights=None if ww is None else ww[inside & mask])[0]
    n_s, n_b = hist(sig), hist(~sig)
    w_s, w_b = hist(sig, w), hist(~sig, w)
    total = w_s + w_b
    w_r = np.histogram(r[inside], bins=edges, weights=(w * r)[inside])[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        mean_r = np.where(total > 0, w_r / total, np.nan)
    keep = ((n_s + n_b) >= max(min_occupancy, 1)) & (total > 0)
    purity = np.full(n_bins, np.nan)
    purity[keep] = w_s[keep] / total[keep]
    if not keep.any():
        raise DegenerateCurveError(f"no bin holds at least {min_occupancy} events")
    return PurityCurve(edges, n_s, n_b, w_s.astype(float), w_b.astype(float), purity, min_occupancy, mean_r)


def max_isotonic_violation(curve: PurityCurve) -> float:
    """Largest purity decrease between consecutive populated bins (0 if monotone)."""
    p = curve.purity[curve.populated]
    if p.size < 2:
        return 0.0
    return float(max(0.0, np.max(p[:-1] - p[1:])))


def isotonic_excess(curve: PurityCurve, n_sigma: float = 3.0) -> float:
    """Largest decrease between consecutive populated bins beyond ``n_sigma`` combined binomial errors.

    Non-positive means the curve is ascending within noise.
    """
    idx = np.flatnonzero(curve.populated)
    if idx.size < 2:
        return 0.0
    p, sig = curve.purity[idx], curve.binomial_sigma()[idx]
    drop = p[:-1] - p[1:]
    tol = n_sigma * np.sqrt(sig[:-1] ** 2 + sig[1:] ** 2)
    return float(np.max(drop - tol))


def spearman(curve: PurityCurve) -> float:
    m = curve.populated
    if m.sum() < 2:
        return float("nan")
    rho = spearmanr(curve.centers[m], curve.purity[m]).statistic
    return float(rho)


def rms_from_ideal(curve: PurityCurve) -> float:
    m = curve.populated
    return float(np.sqrt(np.mean((curve.purity[m] - curve.ideal[m]) ** 2)))


def auc(scores, is_signal, weights=None) -> float:
    """Weighted, tie-aware rank AUC: P(score_s > score_b) + P(tie) / 2."""
    s = np.asarray(scores, dtype=float).reshape(-1)
    sig = np.asarray(is_signal, dtype=bool).reshape(-1)
    w = np.ones_like(s) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    if not sig.any() or sig.all():
        raise InputError("AUC needs both classes present")
    uniq, inv = np.unique(s, return_inverse=True)
    ws = np.bincount(inv, weights=w * sig, minlength=uniq.size)
    wb = np.bincount(inv, weights=w * ~sig, minlength=uniq.size)
    below = np.concatenate([[0.0], np.cumsum(wb)[:-1]])
    return float(np.sum(ws * (below + 0.5 * wb)) / (ws.sum() * wb.sum()))


def roc_curve(scores, is_signal, weights=None) -> tuple[np.ndarray, np.ndarray]:
    """(false positive rate, true positive rate) sweeping the threshold downward."""
    s = np.asarray(scores, dtype=float).reshape(-1)
    sig = np.asarray(is_signal, dtype=bool).reshape(-1)
    w = np.ones_like(s) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    order = np.argsort(-s, kind="stable")
    s, sig, w = s[order], sig[order], w[order]
    tp = np.cumsum(w * sig)
    fp = np.cumsum(w * ~sig)
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tpr = np.r_[0.0, tp[last] / tp[-1]]
    fpr = np.r_[0.0, fp[last] / fp[-1]]
    return fpr, tpr


def auc_trapezoid(scores, is_signal, weights=None) -> float:
    fpr, tpr = roc_curve(scores, is_signal, weights)
    return float(np.trapezoid(tpr, fpr)) if hasattr(np, "trapezoid") else float(np.trapz(tpr, fpr))


@dataclass
class EvalReport:
    auc: float
    spearman: float
    max_isotonic_violation: float
    isotonic_excess: float
    rms_from_ideal: float
    response_min: float
    response_max: float
    n_populated_bins: int
    bayes_auc: float | None = None
    auc_gap: float | None = None
    curve: PurityCurve | None = field(default=None, repr=False)
    histogram: Histogram | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("curve", "histogram")}
        if self.histogram is not None:
            out["underflow"] = {"signal": self.histogram.underflow[0], "background": self.histogram.underflow[1]}
            out["overflow"] = {"signal": self.histogram.overflow[0], "background": self.histogram.overflow[1]}
        return out


def evaluate_responses(responses, is_signal, weights=None, n_bins: int = DEFAULT_BINS,
                       min_occupancy: int = DEFAULT_MIN_OCCUPANCY, bayes=None) -> EvalReport:
    """Report for precomputed responses; ``bayes`` optionally holds optimal responses on the same inputs."""
    r = np.asarray(responses, dtype=float).reshape(-1)
    sig = np.asarray(is_signal, dtype=bool).reshape(-1)
    w = None if weights is None else np.asarray(weights, dtype=float)
    hist = response_histogram(r[sig], r[~sig], n_bins,
                              signal_weight=None if w is None else w[sig],
                              background_weight=None if w is None else w[~sig])
    curve = purity_curve(r, sig, w, n_bins, min_occupancy=min_occupancy)
    report = EvalReport(
        auc=auc(r, sig, w),
        spearman=spearman(curve),
        max_isotonic_violation=max_isotonic_violation(curve),
        isotonic_excess=isotonic_excess(curve),
        rms_from_ideal=rms_from_ideal(curve),
        response_min=float(r.min()),
        response_max=float(r.max()),
        n_populated_bins=int(curve.populated.sum()),
        curve=curve,
        histogram=hist,
    )
    if bayes is not None:
        report.bayes_auc = auc(bayes, sig, w)
        report.auc_gap = report.bayes_auc - report.auc
    return report


def evaluate_model(model, events, spec=None, n_bins: int = DEFAULT_BINS,
                   min_occupancy: int = DEFAULT_MIN_OCCUPANCY) -> EvalReport:
    """Evaluate a model on held-out binary events (disjointness from training is the caller's job)."""
    if events.dim != model.dim:
        raise InputError(f"model expects {model.dim} features, data has {events.dim}")
    events.check_binary()
    responses = model.evaluate(events.x)
    bayes = None
    if spec is not None:
        from .synth import optimal_response

        bayes = optimal_response(spec, events.x)
    return evaluate_responses(responses, events.is_signal, events.weight, n_bins, min_occupancy, bayes)


def write_histogram_csv(hist: Histogram, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["bin_lo", "bin_hi", "n_signal", "n_background"])
        for i in range(len(hist.signal)):
            wr.writerow([repr(float(hist.edges[i])), repr(float(hist.edges[i + 1])),
                         repr(float(hist.signal[i])), repr(float(hist.background[i]))])


def write_purity_csv(curve: PurityCurve, path) -> None:
    ideal = curve.ideal
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["bin_lo", "bin_hi", "n_signal", "n_background", "purity", "ideal_purity"])
        for i in range(len(curve.purity)):
            p = curve.purity[i]
            wr.writerow([repr(float(curve.edges[i])), repr(float(curve.edges[i + 1])),
                         int(curve.n_signal[i]), int(curve.n_background[i]),
                         "" if np.isnan(p) else repr(float(p)), repr(float(ideal[i]))])
