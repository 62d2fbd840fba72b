"""Dual-phase half-wave current rectifier: bench netlist, oracle, comparison.

The bench injects a sinusoidal current into a CMOS comparator/steering cell
and mirrors the conducted half-cycle to two complementary current outputs
measured through zero-volt ammeter branches.  ``ideal_dual_phase`` is the
exact behavioral contract the simulated bench is compared against: negative
input half-cycles appear mirrored at both outputs, positive half-cycles are
blocked.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files

import numpy as np

from .analysis import PrecisionReport, Waveform, WaveformError, WaveformSet
from .netlist import parse_netlist
from .solver import (
    SolverOptions,
    TransientOptions,
    build_graph,
    dc_sweep,
    solve_transient,
)

# The 0.5 um CMOS model cards used by every bench variant.
MODEL_CARDS = """\
.MODEL CMOSN NMOS LEVEL = 3 TOX = 1.4E-8 NSUB = 1E17
+ GAMMA = 0.5483559 PHI = 0.7 VTO = 0.7640855 DELTA = 3.0541177
+ UO = 662.6984452 ETA = 3.162045E-6 THETA = 0.1013999
+ KP = 1.259355E-4 VMAX = 1.442228E5 KAPPA = 0.3 RSH = 7.513418E-3
+ NFS = 1E12 TPG = 1 XJ = 3E-7 LD = 1E-13 WD = 2.334779E-7
+ CGDO = 2.15E-10 CGSO = 2.15E-10 CGBO = 1E-10 CJ = 4.258447E-4
+ PB = 0.9140376 MJ = 0.435903 CJSW = 3.147465E-10 MJSW = 0.1977689
.MODEL CMOSP PMOS LEVEL = 3 TOX = 1.4E-8 NSUB = 1E17
+ GAMMA = 0.6243261 PHI = 0.7 VTO = -0.9444911 DELTA = 0.1118368
+ UO = 250 ETA = 0 THETA = 0.1633973 KP = 3.924644E-5 VMAX = 1E6
+ KAPPA = 30.1015109 RSH = 33.9672594 NFS = 1E12 TPG = -1 XJ = 2E-7
+ LD = 5E-13 WD = 4.11531E-7 CGDO = 2.34E-10 CGSO = 2.34E-10
+ CGBO = 1E-10 CJ = 7.285722E-4 PB = 0.96443 MJ = 0.5
+ CJSW = 2.955161E-10 MJSW = 0.3184873"""


@dataclass(frozen=True)
class BenchConfig:
    """Bench operating conditions; defaults reproduce the 1 kHz / 25 degC run."""

    amplitude_pp: float = 400e-6  # A peak-to-peak
    frequency: float = 1e3  # Hz
    temp: float = 25.0  # degC
    vdd: float = 1.5  # V
    vss: float = -1.5  # V
    w: float = 1.5e-6  # m, all nine devices
    l: float = 0.15e-6  # m
    periods: int = 20
    steps_per_period: int = 1000

    def __post_init__(self):
        if self.amplitude_pp <= 0:
            raise ValueError("amplitude_pp must be positive")
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.periods < 1 or self.steps_per_period < 10:
            raise ValueError("need at least 1 period and 10 steps per period")


@dataclass(frozen=True)
class IdealOutputs:
    """Exact rectifier outputs: out_plus >= 0, out_minus <= 0, mirror images."""

    out_plus: float | np.ndarray
    out_minus: float | np.ndarray


def ideal_dual_phase(iin):
    """Exact dual-phase half-wave transfer.

    A negative input current is routed through the conduction path and
    mirrored to both outputs (out_plus = -iin, out_minus = iin); a
    non-negative input leaves both outputs at zero.  Accepts scalars or
    numpy arrays.
    """
    arr = np.asarray(iin, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("input current must be finite")
    neg = arr < 0.0
    out_plus = np.where(neg, -arr, 0.0)
    out_minus = np.where(neg, arr, 0.0)
    if arr.ndim == 0:
        return IdealOutputs(float(out_plus), float(out_minus))
    return IdealOutputs(out_plus, out_minus)


def build_bench_netlist(cfg: BenchConfig) -> str:
    """Emit the nine-transistor bench netlist for one configuration.

    M3/M4 form the input comparator (CMOS inverter), M1/M2 the steering
    followers: M1 conducts the negative input half-cycle, M2 dumps the
    positive one.  The diode M5 turns M1's current into a gate drive that
    M6 copies to the sourcing output and M7 copies toward M8/M9, whose
    mirror sinks the same magnitude at the complementary output.  Both
    outputs terminate in 0 V ammeter branches.
    """
    amp = cfg.amplitude_pp / 2.0
    h = 1.0 / (cfg.frequency * cfg.steps_per_period)
    tstop = cfg.periods / cfg.frequency
    vdd, vss, temp = float(cfg.vdd), float(cfg.vss), float(cfg.temp)
    freq = float(cfg.frequency)
    wl = f"W={float(cfg.w)!r} L={float(cfg.l)!r}"
    return f"""dual-phase half-wave current rectifier bench
* supplies and input current
VDD vdd 0 DC {vdd!r}
VSS vss 0 DC {vss!r}
IIN 0 in SIN(0 {amp!r} {freq!r})
* input comparator (CMOS inverter) and steering pair
M3 cmp in vdd vdd CMOSP {wl}
M4 cmp in vss vss CMOSN {wl}
M1 mir cmp in vss CMOSN {wl}
M2 vss cmp in vdd CMOSP {wl}
* mirror diode, sourcing output, and the re-mirrored sinking output
M5 mir mir vdd vdd CMOSP {wl}
M6 outp mir vdd vdd CMOSP {wl}
M7 cpy mir vdd vdd CMOSP {wl}
M8 cpy cpy vss vss CMOSN {wl}
M9 outm cpy vss vss CMOSN {wl}
* zero-volt ammeter branches
VOUTP outp 0 DC 0
VOUTM outm 0 DC 0
{MODEL_CARDS}
.TEMP {temp!r}
.TRAN {h!r} {tstop!r}
.END
"""


def bench_netlist_path():
    """Path to the bundled default bench netlist."""
    return files("amps").joinpath("data/rectifier_bench.cir")


_BENCH_RENAMES = {
    "i(IIN)": "iin",
    "i(VOUTP)": "out_plus",
    "i(VOUTM)": "out_minus",
    "i(VDD)": "i_vdd",
    "i(VSS)": "i_vss",
}
BENCH_COLUMNS = ("iin", "out_plus", "out_minus", "i_vdd", "i_vss")


def run_bench(cfg: BenchConfig, options: SolverOptions | None = None) -> WaveformSet:
    """Transient-simulate one bench configuration.

    Returns the five contract waveforms (iin, out_plus, out_minus, i_vdd,
    i_vss) on a shared time base; solver statistics ride along in ``stats``.
    """
    options = options or SolverOptions()
    doc = parse_netlist(build_bench_netlist(cfg))
    graph = build_graph(doc, cfg.temp)
    topts = TransientOptions(
        tstep=1.0 / (cfg.frequency * cfg.steps_per_period),
        tstop=cfg.periods / cfg.frequency,
        ic="from_op",
    )
    raw = solve_transient(graph, topts, options)
    out = WaveformSet(shared_time=True, stats=dict(raw.stats))
    for raw_name, name in _BENCH_RENAMES.items():
        w = raw.get(raw_name)
        out.waveforms.append(Waveform(name, w.times, w.values))
        out.units[name] = "A"
    return out


def bench_dc_transfer(
    cfg: BenchConfig,
    start: float,
    stop: float,
    step: float,
    options: SolverOptions | None = None,
    source: str = "IIN",
):
    """DC-sweep the bench input current.

    Returns (iin, out_plus, out_minus) arrays; non-converged points are NaN.
    """
    options = options or SolverOptions()
    doc = parse_netlist(build_bench_netlist(cfg))
    graph = build_graph(doc, cfg.temp)
    names = [src.name for src in graph.vsources]
    k_plus = names.index("VOUTP")
    k_minus = names.index("VOUTM")
    curve = dc_sweep(graph, source, start, stop, step, options)
    iin = np.array([v for v, _ in curve])
    out_plus = np.array(
        [op.branch_currents[k_plus] if op.converged else np.nan for _, op in curve]
    )
    out_minus = np.array(
        [op.branch_currents[k_minus] if op.converged else np.nan for _, op in curve]
    )
    return iin, out_plus, out_minus


def _windowed(w: Waveform, t0: float, t1: float):
    sel = (w.times >= t0 - 1e-15) & (w.times <= t1 + 1e-15)
    return w.times[sel], w.values[sel]


def compare(sim: WaveformSet, cfg: BenchConfig) -> PrecisionReport:
    """Quantify a simulated bench run against the exact oracle.

    The first 25% of the record is discarded as startup; at least two full
    periods must remain.  RMS and peak errors are normalized to half the
    peak-to-peak input amplitude; ``zero_crossing_width`` is the time per
    period the sourcing output strays more than 5% of half-amplitude from
    ideal; ``dc_power`` is the mean total supply power over the window.
    """
    missing = [name for name in ("iin", "out_plus", "out_minus") if name not in sim]
    if missing:
        raise WaveformError(f"missing required waveforms: {', '.join(missing)}")
    w_iin = sim.get("iin")
    t_lo, t_hi = w_iin.span
    t0 = t_lo + 0.25 * (t_hi - t_lo)
    n_periods = (t_hi - t0) * cfg.frequency
    if n_periods < 2.0 - 1e-9:
        raise WaveformError(
            f"retained window holds {n_periods:.2f} periods; need at least 2"
        )
    half_amp = cfg.amplitude_pp / 2.0

    t, iin = _windowed(w_iin, t0, t_hi)
    ideal = ideal_dual_phase(iin)
    span = t[-1] - t[0]

    def norm_rms(err: np.ndarray) -> float:
        return float(np.sqrt(np.trapezoid(err * err, t) / span)) / half_amp

    _, sim_p = _windowed(sim.get("out_plus"), t0, t_hi)
    _, sim_m = _windowed(sim.get("out_minus"), t0, t_hi)
    err_p = sim_p - ideal.out_plus
    err_m = sim_m - ideal.out_minus

    band = 0.05 * half_amp
    exceeded = (np.abs(err_p) > band).astype(float)
    width_total = float(np.trapezoid(exceeded, t))

    dc_power = 0.0
    if "i_vdd" in sim and "i_vss" in sim:
        _, i_vdd = _windowed(sim.get("i_vdd"), t0, t_hi)
        _, i_vss = _windowed(sim.get("i_vss"), t0, t_hi)
        inst = np.abs(cfg.vdd * i_vdd) + np.abs(cfg.vss * i_vss)
        dc_power = float(np.trapezoid(inst, t) / span)

    return PrecisionReport(
        rms_error_plus=norm_rms(err_p),
        rms_error_minus=norm_rms(err_m),
        peak_error_plus=float(np.max(np.abs(err_p))) / half_amp,
        peak_error_minus=float(np.max(np.abs(err_m))) / half_amp,
        zero_crossing_width=width_total / n_periods,
        dc_power=dc_power,
        window=(float(t0), float(t_hi)),
    )
