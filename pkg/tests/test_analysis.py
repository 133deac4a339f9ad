import math
from types import SimpleNamespace

import numpy as np
import pytest

from vlasolve.analysis import (
    DampingFit,
    NoRecurrenceError,
    auto_fit,
    detect_recurrence,
    extrapolate_rate,
    fit_damping_rate,
    moment_convergence,
    trace_peaks,
)


def make_trace(t, amplitude):
    t = np.asarray(t, dtype=float)
    a = np.asarray(amplitude, dtype=float)
    return SimpleNamespace(t=t, E_h=a * a)


def damped_cosine(t, gamma, omega=1.4):
    return np.exp(gamma * t) * np.abs(np.cos(omega * t))


def test_known_rate_recovered():
    t = np.linspace(0.0, 25.0, 4001)
    tr = make_trace(t, damped_cosine(t, -0.1533))
    fit = fit_damping_rate(tr, (0.0, 25.0))
    assert fit.gamma == pytest.approx(-0.1533, abs=1e-3)
    assert fit.peaks.shape[0] >= 10
    assert fit.residual < 1e-2


def test_fit_is_scale_invariant():
    t = np.linspace(0.0, 20.0, 3001)
    a = make_trace(t, damped_cosine(t, -0.21))
    b = make_trace(t, 100.0 * damped_cosine(t, -0.21))
    fa = fit_damping_rate(a, (0.0, 20.0))
    fb = fit_damping_rate(b, (0.0, 20.0))
    assert fb.gamma == pytest.approx(fa.gamma, abs=1e-13)
    assert fb.intercept == pytest.approx(fa.intercept + math.log(100.0),
                                         rel=1e-10)


def test_window_selects_regime():
    # two-regime decay: the window decides which slope is measured
    t = np.linspace(0.0, 40.0, 8001)
    expo = -0.1 * np.minimum(t, 20.0) - 0.3 * np.maximum(t - 20.0, 0.0)
    tr = make_trace(t, np.exp(expo) * np.abs(np.cos(1.4 * t)))
    early = fit_damping_rate(tr, (0.5, 19.5))
    late = fit_damping_rate(tr, (20.5, 39.5))
    assert early.gamma == pytest.approx(-0.1, abs=2e-3)
    assert late.gamma == pytest.approx(-0.3, abs=2e-3)


def test_envelope_evaluation():
    fit = DampingFit(-0.5, 1.0, np.empty((0, 2)), 0.0)
    assert fit.envelope(0.0) == pytest.approx(math.e)
    assert fit.envelope(2.0) == pytest.approx(1.0)


def test_constant_window_fits_zero_rate():
    t = np.linspace(0.0, 5.0, 101)
    tr = make_trace(t, np.full(101, 2.0))
    fit = fit_damping_rate(tr, (0.0, 5.0))
    assert fit.gamma == 0.0
    assert fit.intercept == pytest.approx(math.log(2.0))
    assert fit.residual == 0.0


def test_window_validation():
    t = np.linspace(0.0, 10.0, 501)
    tr = make_trace(t, damped_cosine(t, -0.2))
    with pytest.raises(ValueError):
        fit_damping_rate(tr, (3.0, 3.0))
    with pytest.raises(ValueError):
        fit_damping_rate(tr, (5.0, 1.0))
    with pytest.raises(ValueError):
        fit_damping_rate(tr, (11.0, 12.0))


def test_too_few_peaks_is_an_error():
    t = np.linspace(0.0, 5.0, 1001)
    tr = make_trace(t, damped_cosine(t, -0.2))
    with pytest.raises(ValueError, match="insufficient peaks"):
        fit_damping_rate(tr, (0.0, 5.0))


def test_peak_plateau_counts_once():
    t = np.arange(7.0)
    amp = np.array([0.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0])
    tr = make_trace(t, amp)
    peaks = trace_peaks(tr)
    assert peaks.shape == (1, 2)
    assert peaks[0, 0] == 3.0
    assert peaks[0, 1] == 2.0


def test_monotone_trace_has_no_peaks():
    t = np.linspace(0.0, 1.0, 50)
    assert trace_peaks(make_trace(t, np.exp(-t))).shape == (0, 2)


class TestRecurrence:
    def echo_trace(self, gamma=-0.1, t_echo=40.0, height=5.0, t_end=50.0):
        t = np.linspace(0.0, t_end, int(200 * t_end) + 1)
        base = damped_cosine(t, gamma)
        bump = height * np.exp(-((t - t_echo) / 1.5) ** 2)
        return make_trace(t, base + bump)

    def test_bracket_contains_injected_echo(self):
        tr = self.echo_trace()
        fit = fit_damping_rate(tr, (0.0, 30.0))
        t_lo, t_hi = detect_recurrence(tr, fit)
        assert t_lo < 40.0 <= t_hi + 0.1
        assert t_hi == pytest.approx(40.0, abs=2.3)  # within one period
        # the flagged peak breaks the envelope tenfold and every
        # earlier one does not
        peaks = trace_peaks(tr)
        ratio = peaks[:, 1] / fit.envelope(peaks[:, 0])
        before = peaks[:, 0] < t_hi
        assert np.all(ratio[before] <= 10.0)
        assert ratio[np.argmax(peaks[:, 0] == t_hi)] > 10.0

    def test_clean_decay_never_triggers(self):
        t = np.linspace(0.0, 50.0, 5001)
        tr = make_trace(t, damped_cosine(t, -0.1))
        fit = fit_damping_rate(tr, (0.0, 30.0))
        with pytest.raises(NoRecurrenceError):
            detect_recurrence(tr, fit)

    def test_threshold_must_exceed_one(self):
        tr = self.echo_trace()
        fit = fit_damping_rate(tr, (0.0, 30.0))
        with pytest.raises(ValueError):
            detect_recurrence(tr, fit, threshold_factor=1.0)

    def test_rejects_envelope_below_first_peak(self):
        tr = self.echo_trace()
        bogus = DampingFit(-1.0, -20.0, np.empty((0, 2)), 0.0)
        with pytest.raises(ValueError, match="first peak"):
            detect_recurrence(tr, bogus)

    def test_tighter_threshold_fires_earlier(self):
        tr = self.echo_trace(height=20.0)
        fit = fit_damping_rate(tr, (0.0, 30.0))
        lo_strict, _ = detect_recurrence(tr, fit, threshold_factor=3.0)
        lo_loose, _ = detect_recurrence(tr, fit, threshold_factor=100.0)
        assert lo_strict <= lo_loose


class TestAutoFit:
    def test_matches_manual_window_on_clean_decay(self):
        t = np.linspace(0.0, 25.0, 4001)
        tr = make_trace(t, damped_cosine(t, -0.1533))
        auto = auto_fit(tr)
        manual = fit_damping_rate(tr, (0.0, 25.0))
        assert auto.gamma == pytest.approx(manual.gamma, abs=1e-6)

    def test_stops_before_echo(self):
        t = np.linspace(0.0, 50.0, 10001)
        base = damped_cosine(t, -0.2)
        echo = 0.8 * np.exp(-((t - 35.0) / 3.0) ** 2) * np.abs(np.cos(1.4 * t))
        tr = make_trace(t, base + echo)
        fit = auto_fit(tr)
        assert fit.gamma == pytest.approx(-0.2, abs=2e-3)
        # every kept peak precedes the echo ramp
        assert fit.peaks[-1, 0] < 32.0

    def test_drops_interference_dip_artifact(self):
        """A spurious tiny maximum inside a pre-echo trough must not
        enter the fit; it sits orders of magnitude below the envelope
        and would wreck the slope."""
        t = np.linspace(0.0, 50.0, 20001)
        base = damped_cosine(t, -0.2)
        echo = 0.8 * np.exp(-((t - 35.0) / 3.0) ** 2) * np.abs(np.cos(1.4 * t))
        # plant the artifact in a zero of the cosine, below 5% of the
        # neighbouring peaks
        dip = 1e-7 * np.exp(-(((t - 24.67) / 0.03) ** 2))
        tr = make_trace(t, base + echo + dip)
        fit = auto_fit(tr)
        assert fit.gamma == pytest.approx(-0.2, abs=2e-3)
        assert np.min(fit.peaks[:, 1]) > 1e-4

    def test_echo_rebounding_above_start_is_excluded(self):
        # the echo tops the very first peak; a window anchored at the
        # global maximum would fit the echo instead of the decay
        t = np.linspace(0.0, 50.0, 10001)
        base = damped_cosine(t, -0.25)
        echo = 3.0 * np.exp(-((t - 38.0) / 2.5) ** 2) * np.abs(np.cos(1.4 * t))
        tr = make_trace(t, base + echo)
        fit = auto_fit(tr)
        assert fit.gamma == pytest.approx(-0.25, abs=3e-3)

    def test_constant_trace_convention(self):
        t = np.linspace(0.0, 2.0, 11)
        fit = auto_fit(make_trace(t, np.full(11, 3.0)))
        assert fit.gamma == 0.0
        assert fit.intercept == pytest.approx(math.log(3.0))

    def test_too_few_peaks(self):
        t = np.linspace(0.0, 3.0, 601)
        tr = make_trace(t, damped_cosine(t, -0.1))
        with pytest.raises(ValueError, match="insufficient peaks"):
            auto_fit(tr)


class TestExtrapolation:
    def test_exact_line(self):
        dxs = np.array([0.8, 0.1, 0.4, 0.2])
        pts = [(dx, -0.15 + 2.0 * dx) for dx in dxs]
        fit = extrapolate_rate(pts)
        assert fit.gamma0 == pytest.approx(-0.15, abs=1e-13)
        assert fit.gamma1 == pytest.approx(2.0, rel=1e-13)
        assert fit.residual < 1e-14
        np.testing.assert_allclose(fit.points[:, 0], np.sort(dxs))

    def test_residual_reports_off_line_scatter(self):
        pts = [(0.1, -0.10), (0.2, -0.20), (0.3, -0.25), (0.4, -0.40)]
        fit = extrapolate_rate(pts)
        line = fit.gamma0 + fit.gamma1 * fit.points[:, 0]
        want = np.sqrt(np.mean((fit.points[:, 1] - line) ** 2))
        assert fit.residual == pytest.approx(want, rel=1e-12)
        assert fit.residual > 1e-3

    def test_rejects_degenerate_input(self):
        with pytest.raises(ValueError):
            extrapolate_rate([(0.1, -0.1), (0.2, -0.2)])
        with pytest.raises(ValueError):
            extrapolate_rate([(0.1, -0.1), (0.1, -0.11), (0.2, -0.2)])


class TestMomentConvergence:
    def test_geometric_ansatz_slope(self):
        # gamma(M) = g0 + c 2^(-M): the log-differences fall on a line
        # of slope -ln 2 exactly
        ms = [10, 12, 14, 16, 18, 20]
        rates = [(m, -0.15 + 0.5 * 2.0 ** (-m)) for m in ms]
        pairs, slope = moment_convergence(rates)
        assert slope == pytest.approx(-math.log(2.0), rel=1e-10)
        assert [p[0] for p in pairs] == ms[1:]
        want0 = math.log(abs(0.5 * (2.0**-12 - 2.0**-10)))
        assert pairs[0][1] == pytest.approx(want0, rel=1e-12)

    def test_input_order_does_not_matter(self):
        rates = [(14, -0.14), (10, -0.10), (12, -0.12999)]
        a = moment_convergence(rates)
        b = moment_convergence(list(reversed(rates)))
        assert a[1] == pytest.approx(b[1], rel=1e-14)

    def test_rejects_uneven_spacing(self):
        with pytest.raises(ValueError):
            moment_convergence([(10, -0.1), (12, -0.12), (15, -0.13)])

    def test_rejects_sign_changes_and_plateaus(self):
        with pytest.raises(ValueError):
            moment_convergence([(10, -0.1), (12, -0.2), (14, -0.15)])
        with pytest.raises(ValueError):
            moment_convergence([(10, -0.1), (12, -0.1), (14, -0.1)])
        with pytest.raises(ValueError):
            moment_convergence([(10, -0.1), (12, -0.12)])
