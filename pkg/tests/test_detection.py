"""Detection chain: SPCM model, gate geometry, TAC semantics, HBT splitting,
and the coincidence correlator against analytic oracles."""

import math

import numpy as np
import pytest
from scipy import integrate

from fibersps.detection import (
    CoincidenceHistogram,
    DetectorParams,
    GateSchedule,
    apply_detector,
    apply_gate,
    correlate,
    hbt_split,
    histogram_delays,
    read_delays_csv,
    read_histogram_csv,
    spectral_detection_ratio,
    tac_first_stop,
    write_delays_csv,
    write_histogram_csv,
)
from fibersps.emitter import add_poisson_background, simulate_cw
from fibersps.events import PhotonEventStream, read_stream_csv, write_stream_csv
from fibersps.physics import EmitterParams


def poisson_stream(rate_hz, duration_ns, seed, channel=0):
    """Independent homogeneous Poisson stream (test-local generator)."""
    rng = np.random.default_rng(seed)
    n = rng.poisson(rate_hz * duration_ns * 1e-9)
    times = np.sort(rng.uniform(0.0, duration_ns, n))
    return PhotonEventStream(
        times_ns=times,
        channels=np.full(n, channel, dtype=np.int64),
        duration_ns=duration_ns,
        seed=seed,
    )


class TestApplyDetector:
    def test_perfect_detector_is_identity(self):
        s = poisson_stream(1e4, 1e9, seed=1)
        out = apply_detector(s, DetectorParams(1.0, 0.0, 0.0), seed=2)
        assert np.array_equal(out.times_ns, s.times_ns)

    def test_binomial_survival(self):
        s = poisson_stream(1e5, 1e9, seed=3)  # ~1e5 events
        out = apply_detector(s, DetectorParams(0.35, 0.0, 0.0), seed=4)
        n, p = len(s), 0.35
        assert abs(len(out) - n * p) < 3 * math.sqrt(n * p * (1 - p))

    def test_dead_time_removes_second_event(self):
        s = PhotonEventStream(
            times_ns=np.array([100.0, 110.0]),
            channels=np.zeros(2, dtype=np.int64),
            duration_ns=1000.0,
        )
        out = apply_detector(s, DetectorParams(1.0, 0.0, 50.0), seed=0)
        assert list(out.times_ns) == [100.0]

    def test_dead_time_min_gap_invariant(self):
        s = poisson_stream(1e7, 1e8, seed=5)  # dense: mean gap 100 ns
        out = apply_detector(s, DetectorParams(1.0, 0.0, 50.0), seed=6)
        assert len(out) > 0
        assert np.all(np.diff(out.times_ns) >= 50.0)

    def test_dark_counts_merged(self):
        s = poisson_stream(0.0, 100e9, seed=7)  # empty input, 100 s
        assert len(s) == 0
        out = apply_detector(s, DetectorParams(1.0, 500.0, 0.0), seed=8)
        expected = 500.0 * 100.0
        assert abs(len(out) - expected) < 3 * math.sqrt(expected)

    def test_deterministic(self):
        s = poisson_stream(1e4, 1e9, seed=9)
        a = apply_detector(s, DetectorParams(0.35, 100.0, 50.0), seed=10)
        b = apply_detector(s, DetectorParams(0.35, 100.0, 50.0), seed=10)
        assert np.array_equal(a.times_ns, b.times_ns)


class TestSpectralDetectionRatio:
    QE = {900: 0.35, 1050: 0.05}

    def test_equal_intensities_gives_qe_ratio(self):
        ratio = spectral_detection_ratio(self.QE, {900: 1.0, 1050: 1.0})
        assert ratio == pytest.approx(7.0, rel=1e-12)

    def test_equal_everything_gives_one(self):
        ratio = spectral_detection_ratio({900: 0.2, 1050: 0.2}, {900: 1.0, 1050: 1.0})
        assert ratio == 1.0

    def test_weighted_intensities(self):
        ratio = spectral_detection_ratio(self.QE, {900: 1.0, 1050: 2.0})
        assert ratio == pytest.approx(0.35 / 0.1, rel=1e-12)

    def test_zero_denominator_rejected(self):
        with pytest.raises(ValueError):
            spectral_detection_ratio(self.QE, {900: 1.0, 1050: 0.0})

    def test_mismatched_keys_rejected(self):
        with pytest.raises(ValueError):
            spectral_detection_ratio(self.QE, {900: 1.0, 1064: 1.0})


class TestApplyGate:
    GATE = GateSchedule(repetition_rate=20_000.0, gate_width=45_000.0, phase=0.0)

    def test_paper_geometry_example(self):
        s = PhotonEventStream(
            times_ns=np.array([10_000.0, 47_000.0]),
            channels=np.zeros(2, dtype=np.int64),
            duration_ns=100_000.0,
        )
        out = apply_gate(s, self.GATE)
        assert list(out.times_ns) == [47_000.0]

    def test_zero_width_is_identity(self):
        s = poisson_stream(1e5, 1e8, seed=11)
        gate = GateSchedule(repetition_rate=20_000.0, gate_width=0.0)
        out = apply_gate(s, gate)
        assert np.array_equal(out.times_ns, s.times_ns)

    def test_uniform_retention_fraction(self):
        # 5 us active per 50 us period -> 10% retained
        s = poisson_stream(2e5, 500e6, seed=12)  # ~1e5 events over 0.5 s
        out = apply_gate(s, self.GATE)
        n, p = len(s), 0.10
        assert abs(len(out) - n * p) < 3 * math.sqrt(n * p * (1 - p))

    def test_no_event_inside_any_window(self):
        s = poisson_stream(1e6, 1e9, seed=13)
        out = apply_gate(s, self.GATE)
        pos = np.mod(out.times_ns - self.GATE.phase, self.GATE.period_ns)
        assert np.all(pos >= self.GATE.gate_width)

    def test_phase_shifts_windows(self):
        gate = GateSchedule(repetition_rate=20_000.0, gate_width=45_000.0, phase=5_000.0)
        s = PhotonEventStream(
            times_ns=np.array([2_000.0, 10_000.0]),
            channels=np.zeros(2, dtype=np.int64),
            duration_ns=50_000.0,
        )
        out = apply_gate(s, gate)
        assert list(out.times_ns) == [2_000.0]


def _stream(times, duration=1e6):
    times = np.asarray(times, dtype=float)
    return PhotonEventStream(
        times_ns=times, channels=np.zeros(times.size, dtype=np.int64), duration_ns=duration
    )


class TestTacFirstStop:
    def test_first_stop_wins(self):
        delays = tac_first_stop(_stream([0.0]), _stream([100.0, 200.0]), 500.0)
        assert list(delays) == [100.0]

    def test_out_of_range_contributes_nothing(self):
        delays = tac_first_stop(_stream([0.0]), _stream([600.0]), 500.0)
        assert list(delays) == []

    def test_stop_consumed_once(self):
        delays = tac_first_stop(_stream([0.0, 50.0]), _stream([100.0]), 500.0)
        assert list(delays) == [100.0]

    def test_stop_at_start_time_not_taken(self):
        # window is open at the start: (start, start + range]
        delays = tac_first_stop(_stream([100.0]), _stream([100.0, 130.0]), 500.0)
        assert list(delays) == [30.0]

    def test_multiple_windows(self):
        delays = tac_first_stop(
            _stream([0.0, 1000.0, 2000.0]),
            _stream([40.0, 900.0, 1007.0, 2499.0, 2600.0]),
            500.0,
        )
        assert list(delays) == [40.0, 7.0, 499.0]


class TestHbtSplit:
    def _input(self, seed=14):
        return poisson_stream(2e4, 1e9, seed=seed)  # ~2e4 events

    def test_conservation_and_disjointness(self):
        s = self._input()
        a, b = hbt_split(s, 0.5, 0.8, seed=15)
        n, t = len(s), 0.8
        survivors = len(a) + len(b)
        assert abs(survivors - n * t) < 3 * math.sqrt(n * t * (1 - t))
        ia = set(a.metadata["source_index"].tolist())
        ib = set(b.metadata["source_index"].tolist())
        assert not (ia & ib)
        assert len(ia) == len(a) and len(ib) == len(b)

    def test_balanced_split_with_loss(self):
        s = self._input()
        a, b = hbt_split(s, 0.5, 0.8, seed=16)
        for arm in (a, b):
            expected = len(s) * 0.4
            assert abs(len(arm) - expected) < 3 * math.sqrt(expected)

    def test_everything_to_a(self):
        s = self._input()
        a, b = hbt_split(s, 1.0, 1.0, seed=17)
        assert np.array_equal(a.times_ns, s.times_ns)
        assert len(b) == 0

    def test_one_to_three_split_at_forty_percent(self):
        s = self._input()
        a, b = hbt_split(s, 0.25, 0.4, seed=18)
        pool = len(s) * 0.4
        assert abs(len(a) - 0.25 * pool) < 3 * math.sqrt(0.25 * pool)
        assert abs(len(b) - 0.75 * pool) < 3 * math.sqrt(0.75 * pool)

    def test_parameter_validation(self):
        s = self._input()
        with pytest.raises(ValueError):
            hbt_split(s, 1.5, 0.5, seed=0)
        with pytest.raises(ValueError):
            hbt_split(s, 0.5, -0.1, seed=0)


class TestCorrelate:
    def test_uncorrelated_poisson_is_flat(self):
        a = poisson_stream(5e4, 20e9, seed=19)
        b = poisson_stream(5e4, 20e9, seed=20)
        hist = correlate(a, b, 1.0, 50.0)
        # expected ~50 counts/bin; every bin within 3 sigma at this seed
        z = (hist.counts - hist.normalization) / np.sqrt(hist.normalization)
        assert np.max(np.abs(z)) < 3.0
        mean_tol = 3.0 / math.sqrt(hist.normalization * hist.counts.size)
        assert abs(hist.g2.mean() - 1.0) < mean_tol

    def test_symmetry_under_stream_exchange(self):
        a = poisson_stream(2e4, 10e9, seed=21)
        b = poisson_stream(2e4, 10e9, seed=22)
        ab = correlate(a, b, 1.0, 50.0)
        ba = correlate(b, a, 1.0, 50.0)
        assert np.array_equal(ab.counts, ba.counts[::-1])

    def test_single_emitter_matches_dip_model(self):
        # MC vs analytic: bin-averaged dip, oracle integral by quadrature
        p = EmitterParams(tau_life=452e-6, tau_abs=5.5e-9)
        emitted = simulate_cw(p, 100e9, seed=23)
        a, b = hbt_split(emitted, 0.5, 1.0, seed=24)
        hist = correlate(a, b, 1.0, 50.0)
        rate = 1.0 / 5.5 + 1.0 / 452_000.0  # per ns

        def dip(tau):
            return 1.0 - math.exp(-rate * abs(tau))

        for center, count in zip(hist.centers, hist.counts):
            avg, _ = integrate.quad(dip, center - 0.5, center + 0.5)
            expected = hist.normalization * avg
            sigma = math.sqrt(max(expected, 1.0))
            assert abs(count - expected) < 3.5 * sigma

    def test_background_only_is_flat_unity(self):
        empty = _stream([], duration=50e9)
        s = add_poisson_background(empty, 1e5, seed=125)
        a, b = hbt_split(s, 0.5, 1.0, seed=126)
        hist = correlate(a, b, 1.0, 50.0)
        z = (hist.counts - hist.normalization) / np.sqrt(hist.normalization)
        assert abs(hist.g2.mean() - 1.0) < 3.0 / math.sqrt(
            hist.normalization * hist.counts.size
        )
        assert np.max(np.abs(z)) < 3.0

    def test_empty_stream_rejected(self):
        a = _stream([])
        b = _stream([10.0])
        with pytest.raises(ValueError):
            correlate(a, b, 1.0, 50.0)

    def test_binning_validation(self):
        a = _stream([10.0])
        b = _stream([20.0])
        with pytest.raises(ValueError):
            correlate(a, b, 3.0, 50.0)  # not a multiple
        with pytest.raises(ValueError):
            correlate(a, b, 0.0, 50.0)

    def test_invariants_of_histogram(self):
        a = poisson_stream(1e4, 1e9, seed=27)
        b = poisson_stream(1e4, 1e9, seed=28)
        hist = correlate(a, b, 2.0, 20.0)
        assert len(hist.bin_edges) == len(hist.counts) + 1
        assert hist.counts.sum() == hist.total_pairs
        assert np.all(hist.g2 >= 0)
        assert hist.centers[hist.counts.size // 2] == 0.0


class TestHistogramDelays:
    def test_basic_binning(self):
        hist = histogram_delays(np.array([0.5, 1.5, 1.7, 9.9]), 1.0, 10.0)
        assert hist.counts.sum() == 4
        assert hist.counts[0] == 1 and hist.counts[1] == 2 and hist.counts[9] == 1
        assert hist.normalization == 1.0

    def test_out_of_range_dropped(self):
        hist = histogram_delays(np.array([5.0, 15.0]), 1.0, 10.0)
        assert hist.total_pairs == 1


class TestFileRoundTrips:
    def test_stream_round_trip(self, tmp_path):
        s = poisson_stream(1e4, 1e9, seed=29)
        path = str(tmp_path / "stream.csv")
        write_stream_csv(s, path)
        back = read_stream_csv(path)
        assert np.array_equal(back.times_ns, s.times_ns)
        assert np.array_equal(back.channels, s.channels)
        assert back.duration_ns == s.duration_ns

    def test_stream_malformed_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_ns,channel\n1.0,0\nnot-a-number,0\n")
        with pytest.raises(ValueError, match="line 3"):
            read_stream_csv(str(path))

    def test_histogram_round_trip(self, tmp_path):
        a = poisson_stream(1e4, 1e9, seed=30)
        b = poisson_stream(1e4, 1e9, seed=31)
        hist = correlate(a, b, 1.0, 25.0)
        path = str(tmp_path / "hist.csv")
        write_histogram_csv(hist, path)
        back = read_histogram_csv(path)
        assert np.array_equal(back.counts, hist.counts)
        assert np.allclose(back.bin_edges, hist.bin_edges)
        assert back.normalization == pytest.approx(hist.normalization, rel=1e-12)

    def test_histogram_round_trip_without_sidecar(self, tmp_path):
        hist = histogram_delays(np.array([0.5, 1.5, 1.7, 9.9]), 1.0, 10.0)
        path = str(tmp_path / "h.csv")
        write_histogram_csv(hist, path)
        (tmp_path / "h.meta.json").unlink()
        back = read_histogram_csv(path)
        assert np.array_equal(back.counts, hist.counts)
        assert np.allclose(back.bin_edges, hist.bin_edges)

    def test_delays_round_trip(self, tmp_path):
        delays = np.array([1.25, 7.5, 400.0])
        path = str(tmp_path / "delays.csv")
        write_delays_csv(delays, path)
        assert np.array_equal(read_delays_csv(path), delays)
