import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftcs.decoder import decode_outcome
from ftcs.experiments import (
    CSV_FIELDS,
    ExperimentError,
    NoCrossingError,
    SweepGrid,
    SweepResult,
    SweepRow,
    ThresholdEstimate,
    TrialConfig,
    count_failures,
    crossing_from_curves,
    find_threshold,
    run_trial,
    sample_trial,
    sweep,
    wilson_interval,
)
from ftcs.lattices import LatticeSpec, logical_cut, syndrome_graph
from ftcs.noise import RateError, parity_of


@pytest.fixture(scope="module")
def small_grid() -> SweepGrid:
    return SweepGrid("cubic", (4, 6), "pauli", (0.02, 0.026, 0.032), 1000, seed=11)


@pytest.fixture(scope="module")
def small_result(small_grid) -> SweepResult:
    return sweep(small_grid)


def synthetic(rates, sizes, f):
    return {L: (np.asarray(rates), np.array([f(p, L) for p in rates]), None) for L in sizes}


class TestTrialConfig:
    def test_key_depends_on_cell(self):
        a = TrialConfig(("cubic", 4), "pauli", 0.02, seed=1)
        assert a.key == TrialConfig(("cubic", 4), "pauli", 0.02, seed=1).key
        assert a.key != TrialConfig(("cubic", 6), "pauli", 0.02, seed=1).key
        assert a.key != TrialConfig(("cubic", 4), "pauli", 0.021, seed=1).key
        assert a.key != TrialConfig(("cubic", 4), "pauli", 0.02, seed=2).key

    @pytest.mark.parametrize("kwargs, err", [
        (dict(model="bitflip"), ValueError),
        (dict(model="pauli", p=1.2), RateError),
        (dict(model="erasure", p_erase=-0.1), RateError),
        (dict(model="pauli", p=0.1, p_erase=0.1), ValueError),
        (dict(model="erasure", p=0.1), ValueError),
        (dict(model="weighted", p=-1.0), RateError),
        (dict(model="pauli", trials=0), ValueError),
        (dict(model="pauli", axis="w"), ValueError),
    ])
    def test_validation(self, kwargs, err):
        with pytest.raises(err):
            TrialConfig(("cubic", 4), **kwargs)

    def test_rate(self):
        assert TrialConfig(("cubic", 4), "erasure", p_erase=0.3).rate == 0.3
        assert TrialConfig(("cubic", 4), "mixed", 0.01, 0.3).rate == 0.01


class TestRunTrial:
    def test_zero_rate_never_fails(self):
        g = syndrome_graph("cubic", 4)
        cut = logical_cut(g)
        cfg = TrialConfig(("cubic", 4), "pauli", 0.0, trials=100)
        assert not any(run_trial(g, cut, cfg, t) for t in range(100))

    def test_winding_loop_fails(self):
        # the cut itself has a nonempty boundary; a loop that winds once across it has none
        g = syndrome_graph("cubic", 2)
        cutm = logical_cut(g, "x").mask_for(g)
        assert parity_of(g, cutm).any()
        loop = np.array([set(e) == {0, 1} for e in g.edges.tolist()])
        assert not parity_of(g, loop).any()
        out = decode_outcome(g, loop, None, cutm)
        assert out.logical_failure and out.residual_syndrome_empty

    def test_above_threshold(self):
        cfg = TrialConfig(("cubic", 6), "pauli", 0.04, trials=1000, seed=5)
        assert count_failures(cfg) / 1000 > 0.05

    def test_run_trial_matches_count(self):
        cfg = TrialConfig(("diamond", 4), "pauli", 0.06, trials=200, seed=2)
        g = syndrome_graph("diamond", 4)
        cut = logical_cut(g)
        assert sum(run_trial(g, cut, cfg, t) for t in range(200)) == count_failures(cfg)

    def test_sample_trial_is_even(self):
        cfg = TrialConfig(("triamond", 4), "mixed", 0.05, 0.1, seed=3)
        g = syndrome_graph("triamond", 4)
        for t in range(50):
            assert parity_of(g, sample_trial(g, cfg, t).flipped).sum() % 2 == 0

    def test_chunks_add_up(self):
        cfg = TrialConfig(("cubic", 4), "erasure", p_erase=0.25, trials=300, seed=9)
        assert count_failures(cfg, 0, 100) + count_failures(cfg, 100, 300) == count_failures(cfg)


class TestSweep:
    def test_cells(self, small_result):
        assert len(small_result.rows) == 6
        assert [(r.L, r.p) for r in small_result.rows] == [(L, p) for L in (4, 6) for p in (0.02, 0.026, 0.032)]
        for r in small_result.rows:
            assert r.ci_lo <= r.rate <= r.ci_hi and r.trials == 1000

    def test_rates_increase_with_p(self, small_result):
        for L in (4, 6):
            _, f, _ = small_result.curve(L)
            assert f[0] <= f[-1]

    def test_deterministic(self, small_grid, small_result):
        assert sweep(small_grid).to_csv() == small_result.to_csv()

    def test_chunk_invariance(self, small_grid, small_result):
        assert sweep(small_grid, chunk=333).to_csv() == small_result.to_csv()

    def test_worker_invariance(self, small_grid, small_result):
        assert sweep(small_grid, workers=2, chunk=250).to_csv() == small_result.to_csv()

    def test_resume(self, small_grid, small_result):
        seen = []
        out = sweep(small_grid, done=small_result.rows[:4], on_row=seen.append)
        assert out.to_csv() == small_result.to_csv()
        assert seen == out.rows

    def test_zero_column(self):
        res = sweep(SweepGrid("triamond", (4,), "erasure", (0.0, 0.3), 200, seed=1))
        assert res.rows[0].failures == 0

    def test_csv_roundtrip(self, small_result):
        text = small_result.to_csv()
        assert text.splitlines()[0] == ",".join(CSV_FIELDS)
        assert SweepResult.from_csv(text).to_csv() == text

    def test_csv_bad_header(self):
        with pytest.raises(ValueError, match="header"):
            SweepResult.from_csv("a,b\n1,2\n")

    def test_errors_identify_cell(self, monkeypatch):
        import ftcs.experiments as ex

        def boom(*a, **k):
            raise RuntimeError("decoder bug")

        monkeypatch.setattr(ex, "count_failures", boom)
        with pytest.raises(ExperimentError) as info:
            ex.sweep(SweepGrid("cubic", (4,), "pauli", (0.01,), 10, seed=0))
        assert info.value.cell["L"] == 4 and "decoder bug" in str(info.value)

    def test_triamond_erasure_crossing(self):
        res = sweep(SweepGrid("triamond", (4, 6, 8), "erasure", (0.50, 0.55, 0.60), 3000, seed=21))
        est = find_threshold(res, bootstrap=100)
        assert abs(est.crossing - 0.55) <= 0.02


class TestThreshold:
    def test_synthetic_linear(self):
        est = crossing_from_curves(synthetic(np.linspace(0.05, 0.15, 7), (4, 6, 8), lambda p, L: (p - 0.1) * L))
        assert est.crossing == pytest.approx(0.1, abs=1e-9)
        assert est.sizes == (6, 8) and est.bootstrap == 0

    @settings(max_examples=30)
    @given(pc=st.floats(0.2, 0.4), a=st.floats(0.5, 3.0))
    def test_synthetic_scaling_law(self, pc, a):
        rates = np.linspace(pc - 0.1, pc + 0.1, 9)
        est = crossing_from_curves(
            synthetic(rates, (4, 6, 8), lambda p, L: 0.5 + 0.5 * np.tanh(a * (p - pc) * L)), bootstrap=0)
        assert est.crossing == pytest.approx(pc, abs=2e-3)

    def test_no_crossing_lists_ordering(self):
        curves = synthetic([0.1, 0.2, 0.3], (4, 6, 8), lambda p, L: p / L)
        with pytest.raises(NoCrossingError, match="L8=") as info:
            crossing_from_curves(curves)
        assert "Widen" in str(info.value)

    def test_needs_sizes_and_rates(self):
        with pytest.raises(NoCrossingError):
            crossing_from_curves(synthetic([0.1, 0.2, 0.3], (4,), lambda p, L: p))
        with pytest.raises(NoCrossingError):
            crossing_from_curves(synthetic([0.1, 0.2], (4, 6), lambda p, L: (p - 0.15) * L))

    def test_bootstrap(self, small_result):
        a = find_threshold(small_result, bootstrap=200, seed=3)
        b = find_threshold(small_result, bootstrap=200, seed=3)
        assert a == b
        assert 0.02 <= a.crossing <= 0.032
        assert a.uncertainty > 0 and a.bootstrap == 200
        assert a.window == (0.02, 0.032)

    def test_estimate_json(self, small_result):
        est = find_threshold(small_result, bootstrap=50)
        d = json.loads(json.dumps(est.to_json()))
        assert d["format"] == "ftcs-threshold" and d["method"] == est.method
        assert ThresholdEstimate.from_json(d) == est

    def test_mixed_sweeps_rejected(self, small_result):
        other = sweep(SweepGrid("diamond", (4,), "pauli", (0.05,), 10, seed=1))
        with pytest.raises(NoCrossingError, match="mixes"):
            find_threshold(SweepResult(small_result.rows + other.rows))


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0.03 < hi < 0.04
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-4) and hi == pytest.approx(0.5962, abs=1e-4)


def test_row_validation():
    with pytest.raises(ValueError):
        SweepRow.from_counts(TrialConfig(LatticeSpec("cubic", 4), "pauli", 0.1, trials=10), 11)
