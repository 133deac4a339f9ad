"""Damping-rate fits, grid extrapolation, order scans, recurrence detection.

The measured signal is the electric energy E_h(t); its square root
behaves like |cos(omega t)| times exp(gamma t) while Landau damping is
clean, so the log of the peak sequence is fitted with ordinary least
squares and the slope is the damping rate gamma.

The truncated velocity expansion eventually echoes: free streaming on a
discrete set of characteristic speeds refocuses after a time growing
like sqrt(M), and the field jumps back far above the fitted envelope.
``detect_recurrence`` brackets that first departure between consecutive
peaks; ``auto_fit`` uses it to stop the fit window before the echo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DampingFit",
    "ExtrapolationFit",
    "NoRecurrenceError",
    "auto_fit",
    "detect_recurrence",
    "extrapolate_rate",
    "fit_damping_rate",
    "moment_convergence",
    "trace_peaks",
]


class NoRecurrenceError(Exception):
    """The trace never leaves the fitted envelope by the given factor."""


@dataclass
class DampingFit:
    """Least-squares fit of ln(peak sqrt(E_h)) = gamma t + intercept."""

    gamma: float
    intercept: float
    peaks: np.ndarray    # (n, 2) columns (t, sqrt(E_h))
    residual: float      # rms residual of the log fit

    def envelope(self, t):
        return np.exp(self.gamma * np.asarray(t) + self.intercept)


@dataclass
class ExtrapolationFit:
    """gamma(dx) = gamma0 + gamma1 dx fitted over a resolution sweep."""

    gamma0: float
    gamma1: float
    points: np.ndarray   # (n, 2) columns (dx, gamma), sorted by dx
    residual: float      # rms residual of the line


def _peak_indices(y: np.ndarray) -> list[int]:
    """Strict local maxima; a flat plateau counts once, at its midpoint."""
    out = []
    n = y.size
    i = 1
    while i < n - 1:
        if y[i] > y[i - 1]:
            j = i
            while j + 1 < n and y[j + 1] == y[j]:
                j += 1
            if j + 1 < n and y[j + 1] < y[j]:
                out.append((i + j) // 2)
            i = j + 1
        else:
            i += 1
    return out


def trace_peaks(trace) -> np.ndarray:
    """Peaks of sqrt(E_h) over the whole trace, shape (n, 2) as (t, value)."""
    y = np.sqrt(np.asarray(trace.E_h, dtype=float))
    t = np.asarray(trace.t, dtype=float)
    idx = _peak_indices(y)
    return np.column_stack([t[idx], y[idx]]) if idx else np.empty((0, 2))


def _ols_log(peaks: np.ndarray) -> DampingFit:
    t = peaks[:, 0]
    logs = np.log(peaks[:, 1])
    slope, intercept = np.polyfit(t, logs, 1)
    resid = logs - (slope * t + intercept)
    return DampingFit(float(slope), float(intercept), peaks,
                      float(np.sqrt(np.mean(resid * resid))))


def fit_damping_rate(trace, window: tuple[float, float]) -> DampingFit:
    """Fit the damping rate from the sqrt(E_h) peaks inside [a, b].

    A window whose samples are all equal fits rate zero by convention.
    Fewer than three peaks raise ValueError ("insufficient peaks").
    """
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise ValueError("fit window must have positive width")
    t = np.asarray(trace.t, dtype=float)
    sel = (t >= a) & (t <= b)
    if not sel.any():
        raise ValueError("fit window contains no samples")
    y = np.sqrt(np.asarray(trace.E_h, dtype=float)[sel])
    ts = t[sel]
    if y.max() == y.min():
        const = math.log(y[0]) if y[0] > 0.0 else 0.0
        return DampingFit(0.0, const, np.column_stack([ts, y]), 0.0)
    idx = _peak_indices(y)
    if len(idx) < 3:
        raise ValueError(f"insufficient peaks in window ({len(idx)} found, need 3)")
    return _ols_log(np.column_stack([ts[idx], y[idx]]))


def detect_recurrence(trace, fit: DampingFit,
                      threshold_factor: float = 10.0) -> tuple[float, float]:
    """Bracket the first peak that exceeds the fitted envelope.

    Returns consecutive peak times (t_lo, t_hi) with the departure at
    t_hi.  Raises NoRecurrenceError when no peak ever exceeds
    threshold_factor times the envelope.
    """
    if not threshold_factor > 1.0:
        raise ValueError("threshold factor must exceed 1")
    peaks = trace_peaks(trace)
    if peaks.shape[0] == 0:
        raise NoRecurrenceError("no recurrence in window (trace has no peaks)")
    above = peaks[:, 1] > threshold_factor * fit.envelope(peaks[:, 0])
    hits = np.nonzero(above)[0]
    if hits.size == 0:
        raise NoRecurrenceError("no recurrence in window")
    i = int(hits[0])
    if i == 0:
        raise ValueError("first peak already exceeds the envelope; "
                         "the fit does not describe the early trace")
    return float(peaks[i - 1, 0]), float(peaks[i, 0])


def _drop_trough_artifacts(peaks):
    """Trim trailing peaks that sit far below the preceding one.

    Where a rising echo interferes destructively with the decaying
    oscillation, a tiny local maximum can appear inside the trough a
    few orders of magnitude below the true envelope.  A genuine
    envelope sample never falls that fast between adjacent peaks, so a
    trailing value below 5% of its predecessor is discarded.
    """
    n = peaks.shape[0]
    while n >= 2 and peaks[n - 1, 1] < 0.05 * peaks[n - 2, 1]:
        n -= 1
    return peaks[:n]


def _run_from(peaks, start):
    stop = start + 1
    while stop < peaks.shape[0] and peaks[stop, 1] < peaks[stop - 1, 1]:
        stop += 1
    return peaks[start:stop]


def _decay_prefix(peaks):
    """Initial strictly decreasing run of peak values.

    The run normally starts at the first peak and stops at the first
    peak that fails to decrease, which marks either an echo or an
    interference dip; echoes can rebound above the initial amplitude,
    so starting anywhere later risks latching onto the echo train.
    Only when the leading run is too short for a fit (a rising
    transient) is the run from the largest peak considered instead.
    """
    run = _run_from(peaks, 0)
    if run.shape[0] < 3:
        alt = _run_from(peaks, int(np.argmax(peaks[:, 1])))
        if alt.shape[0] > run.shape[0]:
            run = alt
    return _drop_trough_artifacts(run)


def auto_fit(trace, threshold_factor: float = 10.0) -> DampingFit:
    """Damping fit with an automatic window that stops before an echo.

    A first fit uses the initial run of decaying peaks.  If that
    envelope detects a recurrence, the final fit keeps only the run
    peaks strictly before the bracket, so no sample touched by the
    echo enters the regression.  Without a detected recurrence the
    decay-run fit is returned when the run covers at least 3 peaks,
    and a fit over all peaks otherwise.
    """
    peaks = trace_peaks(trace)
    if peaks.shape[0] == 0:
        y = np.asarray(trace.E_h, dtype=float)
        if y.size and y.max() == y.min():
            val = math.sqrt(y[0])
            t = np.asarray(trace.t, dtype=float)
            return DampingFit(0.0, math.log(val) if val > 0 else 0.0,
                              np.column_stack([t, np.full(t.size, val)]), 0.0)
        raise ValueError("insufficient peaks (none found)")
    if peaks.shape[0] < 3:
        raise ValueError(f"insufficient peaks ({peaks.shape[0]} found, need 3)")
    prefix = _decay_prefix(peaks)
    first = _ols_log(prefix if prefix.shape[0] >= 3 else peaks)
    try:
        t_lo, _ = detect_recurrence(trace, first, threshold_factor)
    except NoRecurrenceError:
        return first if prefix.shape[0] >= 3 else _ols_log(peaks)
    except ValueError:
        return first
    kept = prefix[prefix[:, 0] < t_lo]
    if kept.shape[0] < 3:
        if prefix.shape[0] >= 3:
            return first
        raise ValueError("insufficient peaks before the detected recurrence")
    return _ols_log(kept)


def extrapolate_rate(points) -> ExtrapolationFit:
    """Fit gamma(dx) = gamma0 + gamma1 dx over (dx, gamma) pairs."""
    pts = np.asarray(sorted((float(a), float(b)) for a, b in points), dtype=float)
    if pts.shape[0] < 3:
        raise ValueError("need at least three resolutions to extrapolate")
    dx = pts[:, 0]
    if np.any(np.diff(dx) <= 1e-12 * dx[-1]):
        raise ValueError("duplicate grid spacings in extrapolation input")
    gamma1, gamma0 = np.polyfit(dx, pts[:, 1], 1)
    resid = pts[:, 1] - (gamma0 + gamma1 * dx)
    return ExtrapolationFit(float(gamma0), float(gamma1), pts,
                            float(np.sqrt(np.mean(resid * resid))))


def moment_convergence(rates) -> tuple[list[tuple[int, float]], float]:
    """Log-differences of a damping-rate scan in the expansion degree.

    For rates following gamma(M) = g0 + g1 lambda^(-M) on an arithmetic
    M grid, ln |gamma(M_i) - gamma(M_{i-1})| is linear in M_i with slope
    -ln lambda.  Returns the (M_i, log-difference) pairs and the fitted
    slope.  Raises if the spacing is not constant or the successive
    differences are not one-signed (no geometric trend to read off).
    """
    pts = sorted((int(mm), float(g)) for mm, g in rates)
    if len(pts) < 3:
        raise ValueError("need at least three rates")
    ms = np.array([p[0] for p in pts], dtype=float)
    gs = np.array([p[1] for p in pts], dtype=float)
    steps = np.diff(ms)
    if not np.all(steps == steps[0]) or steps[0] <= 0:
        raise ValueError("expansion degrees must be equally spaced")
    diffs = np.diff(gs)
    if np.any(diffs == 0.0):
        raise ValueError("successive rates are equal; no trend to fit")
    if not (np.all(diffs > 0.0) or np.all(diffs < 0.0)):
        raise ValueError("rate differences change sign; not in the convergent regime")
    logd = np.log(np.abs(diffs))
    slope = float(np.polyfit(ms[1:], logd, 1)[0])
    return [(int(m), float(v)) for m, v in zip(ms[1:], logd)], slope
