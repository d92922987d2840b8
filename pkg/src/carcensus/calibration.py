"""Isotonic calibration of detection scores to correctness probabilities."""

from dataclasses import dataclass

import numpy as np

from carcensus._io import atomic_write_text, dumps_json, read_json


@dataclass(frozen=True)
class IsotonicMap:
    """Monotone piecewise-linear map through ``(score, probability)`` knots."""

    scores: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.scores) != len(self.probs) or not self.scores:
            raise ValueError("an isotonic map needs at least one knot")
        if any(not b > a for a, b in zip(self.scores, self.scores[1:])):
            raise ValueError("knot scores must be strictly increasing")
        if any(b < a for a, b in zip(self.probs, self.probs[1:])):
            raise ValueError("knot probabilities must be nondecreasing")
        if any(not 0.0 <= p <= 1.0 for p in self.probs):
            raise ValueError("knot probabilities must lie in [0, 1]")

    @property
    def knots(self):
        return list(zip(self.scores, self.probs))

    def __call__(self, score):
        return calibrate(self, score)

    def to_json(self):
        return {"knots": [[s, p] for s, p in zip(self.scores, self.probs)]}

    @classmethod
    def from_json(cls, d):
        knots = d["knots"]
        return cls(tuple(float(s) for s, _ in knots), tuple(float(p) for _, p in knots))


def pava(values, weights=None):
    """Weighted pool-adjacent-violators: nondecreasing least-squares fit.

    Returns one fitted value per input, in input order.
    """
    y = np.asarray(values, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    # block stack: weighted sum, total weight, length
    sums, wts, lens = [], [], []
    for yi, wi in zip(y, w):
        sums.append(yi * wi)
        wts.append(wi)
        lens.append(1)
        while len(sums) > 1 and sums[-2] / wts[-2] > sums[-1] / wts[-1]:
            s, ww, n = sums.pop(), wts.pop(), lens.pop()
            sums[-1] += s
            wts[-1] += ww
            lens[-1] += n
    return np.repeat([s / ww for s, ww in zip(sums, wts)], lens)


def _merge_ties(scores, labels):
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    y = labels[order]
    uniq, start, counts = np.unique(s, return_index=True, return_counts=True)
    means = np.add.reduceat(y, start) / counts
    return uniq, means, counts.astype(float)


def _check_inputs(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise ValueError("scores and labels must be 1-D and of equal length")
    if scores.size == 0:
        raise ValueError("cannot fit an isotonic map to empty input")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be binary (0 or 1)")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    return scores, labels


def fit_isotonic(scores, labels):
    """Fit the nondecreasing score-to-probability map minimizing squared error.

    Tied scores are merged into one knot whose label is their mean, weighted
    by the tie count.
    """
    scores, labels = _check_inputs(scores, labels)
    knots, means, counts = _merge_ties(scores, labels)
    p = np.clip(pava(means, counts), 0.0, 1.0)
    # interior knots of a constant block do not change the interpolant
    keep = np.ones(len(p), dtype=bool)
    keep[1:-1] = (p[1:-1] != p[:-2]) | (p[1:-1] != p[2:])
    return IsotonicMap(tuple(knots[keep].tolist()), tuple(p[keep].tolist()))


def fitted_values(scores, labels):
    """Per-point fitted probabilities, in input order."""
    scores, labels = _check_inputs(scores, labels)
    return np.asarray(calibrate(fit_isotonic(scores, labels), scores), dtype=float)


def calibrate(imap, score):
    """Linear interpolation between knots, constant beyond the end knots.

    Accepts a scalar or an array of scores.
    """
    out = np.interp(score, imap.scores, imap.probs)
    return float(out) if np.ndim(out) == 0 else out


def save_calibration(path, imap):
    atomic_write_text(path, dumps_json(imap.to_json()))


def load_calibration(path):
    return IsotonicMap.from_json(read_json(path))
