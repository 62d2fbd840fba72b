"""Oracle, bench construction and precision-report tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amps.analysis import Waveform, WaveformError, WaveformSet
from amps.netlist import parse_netlist, validate
from amps.rectifier import (
    BenchConfig,
    IdealOutputs,
    bench_dc_transfer,
    bench_netlist_path,
    build_bench_netlist,
    compare,
    ideal_dual_phase,
    run_bench,
)

HALF_AMP = 200e-6


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


def test_oracle_negative_input_mirrored():
    out = ideal_dual_phase(-200e-6)
    assert out == IdealOutputs(200e-6, -200e-6)


def test_oracle_zero_input():
    assert ideal_dual_phase(0.0) == IdealOutputs(0.0, 0.0)


def test_oracle_positive_input_blocked():
    assert ideal_dual_phase(200e-6) == IdealOutputs(0.0, 0.0)


def test_oracle_vectorized():
    iin = np.array([-1e-6, 0.0, 2e-6])
    out = ideal_dual_phase(iin)
    assert np.array_equal(out.out_plus, [1e-6, 0.0, 0.0])
    assert np.array_equal(out.out_minus, [-1e-6, 0.0, 0.0])


def test_oracle_rejects_nonfinite():
    with pytest.raises(ValueError):
        ideal_dual_phase(float("nan"))


@settings(max_examples=300)
@given(st.floats(min_value=-1e-3, max_value=1e-3, allow_nan=False))
def test_oracle_antisymmetry_of_outputs(iin):
    out = ideal_dual_phase(iin)
    assert out.out_plus == -out.out_minus
    assert out.out_plus >= 0.0 and out.out_minus <= 0.0
    if iin >= 0:
        assert out.out_plus == 0.0
    else:
        assert out.out_plus == abs(iin)


@settings(max_examples=200)
@given(
    iin=st.floats(min_value=-1e-3, max_value=1e-3, allow_nan=False),
    k=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
)
def test_oracle_positive_scaling(iin, k):
    base = ideal_dual_phase(iin)
    scaled = ideal_dual_phase(k * iin)
    assert scaled.out_plus == pytest.approx(k * base.out_plus, rel=1e-12)
    assert scaled.out_minus == pytest.approx(k * base.out_minus, rel=1e-12)


# ---------------------------------------------------------------------------
# bench netlist
# ---------------------------------------------------------------------------


def test_bench_netlist_validates_clean():
    doc = parse_netlist(build_bench_netlist(BenchConfig()))
    assert [d for d in validate(doc) if d.severity == "error"] == []


def test_bench_netlist_deterministic():
    assert build_bench_netlist(BenchConfig()) == build_bench_netlist(BenchConfig())


def test_bench_netlist_temp_only_changes_temp_directive():
    base = build_bench_netlist(BenchConfig()).splitlines()
    hot = build_bench_netlist(BenchConfig(temp=100)).splitlines()
    assert len(base) == len(hot)
    diffs = [(a, b) for a, b in zip(base, hot) if a != b]
    assert diffs == [(".TEMP 25.0", ".TEMP 100.0")]


def test_bundled_corpus_matches_builder():
    assert bench_netlist_path().read_text() == build_bench_netlist(BenchConfig())


def test_bench_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(amplitude_pp=0.0)
    with pytest.raises(ValueError):
        BenchConfig(frequency=-1.0)


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def synthetic_set(cfg: BenchConfig, noise_sigma: float = 0.0, seed: int = 0):
    """Oracle waveforms for a given config, optionally with gaussian error."""
    n = cfg.periods * cfg.steps_per_period
    t = np.arange(n + 1) / (cfg.frequency * cfg.steps_per_period)
    iin = (cfg.amplitude_pp / 2) * np.sin(2 * np.pi * cfg.frequency * t)
    ideal = ideal_dual_phase(iin)
    plus = ideal.out_plus.copy()
    minus = ideal.out_minus.copy()
    if noise_sigma:
        rng = np.random.default_rng(seed)
        plus = plus + rng.normal(0.0, noise_sigma, plus.size)
        minus = minus + rng.normal(0.0, noise_sigma, minus.size)
    ws = WaveformSet()
    for name, vals in (("iin", iin), ("out_plus", plus), ("out_minus", minus)):
        ws.waveforms.append(Waveform(name, t, vals))
        ws.units[name] = "A"
    return ws


def test_compare_identity_is_zero_error():
    cfg = BenchConfig(periods=4, steps_per_period=200)
    rep = compare(synthetic_set(cfg), cfg)
    assert rep.rms_error_plus == 0.0
    assert rep.rms_error_minus == 0.0
    assert rep.peak_error_plus == 0.0
    assert rep.peak_error_minus == 0.0
    assert rep.zero_crossing_width == 0.0
    assert rep.dc_power == 0.0  # no supply waveforms in the synthetic set


def test_compare_one_percent_noise():
    cfg = BenchConfig(periods=8, steps_per_period=500)
    sigma = 0.01 * HALF_AMP
    rep = compare(synthetic_set(cfg, noise_sigma=sigma, seed=3), cfg)
    assert rep.rms_error_plus == pytest.approx(0.01, rel=0.2)
    assert rep.rms_error_minus == pytest.approx(0.01, rel=0.2)


def test_compare_missing_waveforms():
    cfg = BenchConfig(periods=4, steps_per_period=200)
    ws = synthetic_set(cfg)
    ws.waveforms = [w for w in ws.waveforms if w.name != "out_minus"]
    with pytest.raises(WaveformError, match="out_minus"):
        compare(ws, cfg)


def test_compare_needs_two_periods_after_discard():
    cfg = BenchConfig(periods=2, steps_per_period=200)
    with pytest.raises(WaveformError, match="at least 2"):
        compare(synthetic_set(cfg), cfg)


def test_compare_window_is_last_75_percent():
    cfg = BenchConfig(periods=4, steps_per_period=200)
    rep = compare(synthetic_set(cfg), cfg)
    t0, t1 = rep.window
    total = cfg.periods / cfg.frequency
    assert t0 == pytest.approx(0.25 * total, rel=1e-12)
    assert t1 == pytest.approx(total, rel=1e-12)


# ---------------------------------------------------------------------------
# simulated bench behavior (short runs; full-scale runs live in acceptance)
# ---------------------------------------------------------------------------


def test_dc_transfer_monotone_in_conduction():
    cfg = BenchConfig()
    iin, out_plus, _ = bench_dc_transfer(cfg, -200e-6, 0.0, 10e-6)
    sel = iin < -10e-6
    diffs = np.diff(out_plus[sel])
    assert np.all(diffs <= 1e-12)  # non-increasing as iin rises toward zero


def test_short_transient_dual_phase_symmetry():
    cfg = BenchConfig(periods=6, steps_per_period=200)
    ws = run_bench(cfg)
    t = ws.get("out_plus").times
    sel = t >= 0.25 * t[-1]
    p = ws.get("out_plus").values[sel]
    m = ws.get("out_minus").values[sel]
    sym = np.sqrt(np.mean((p + m) ** 2)) / HALF_AMP
    assert sym < 0.10


def test_run_bench_returns_contract_columns():
    cfg = BenchConfig(periods=4, steps_per_period=100)
    ws = run_bench(cfg)
    assert ws.names() == ["iin", "out_plus", "out_minus", "i_vdd", "i_vss"]
    assert ws.stats["max_kcl_excess"] <= 0.0
