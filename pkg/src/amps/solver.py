"""Modified nodal analysis: DC operating points, DC sweeps, transient runs.

Unknowns are the non-ground node voltages followed by the branch currents of
the voltage sources.  Nonlinear solves are damped Newton-Raphson over dense
LU; DC convergence falls back to gmin stepping and then source stepping.
Transient integration is fixed-step trapezoidal with a backward-Euler first
step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import Waveform, WaveformSet
from .device import MosfetParams, derive_params, eval_mosfet, overlap_caps
from .netlist import ElementKind, NetlistDocument, validate


class SingularMatrixError(RuntimeError):
    def __init__(self, pivot: int):
        self.pivot = pivot
        super().__init__(f"singular MNA matrix (zero pivot at index {pivot})")


class NonConvergenceError(RuntimeError):
    def __init__(self, where: str, residual: float, strategy_log: list[str] | None = None):
        self.where = where
        self.residual = residual
        self.strategy_log = strategy_log or []
        msg = f"Newton did not converge (worst residual {residual:.3e} at {where})"
        if strategy_log:
            msg += "; tried: " + " | ".join(strategy_log)
        super().__init__(msg)


class TransientNonConvergence(RuntimeError):
    def __init__(self, time: float, partial: WaveformSet, cause: Exception):
        self.time = time
        self.partial = partial
        self.cause = cause
        super().__init__(f"transient aborted at t={time:.6e}s: {cause}")


@dataclass
class SolverOptions:
    reltol: float = 1e-3
    abstol_i: float = 1e-12  # A
    vntol: float = 1e-6  # V
    gmin: float = 1e-12  # S
    max_newton_iters: int = 100
    gmin_steps: int = 10  # decades from 1e-2 down to gmin
    source_steps: int = 10
    vstep_clamp: float = 0.3  # V, per-update damping on nonlinear-device nodes

    def __post_init__(self):
        for name in ("reltol", "abstol_i", "vntol", "gmin", "vstep_clamp"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.gmin_steps < 1 or self.source_steps < 1:
            raise ValueError("gmin_steps and source_steps must be >= 1")


@dataclass
class OperatingPoint:
    """Converged node voltages and voltage-source branch currents."""

    voltages: np.ndarray  # length n
    branch_currents: np.ndarray  # length m
    converged: bool
    iterations: int
    residual_excess: float = float("nan")  # max KCL residual minus its tolerance


@dataclass
class TransientOptions:
    tstep: float
    tstop: float
    method: str = "trapezoidal"
    ic: str = "from_op"  # "from_op" | "zero_start"

    def __post_init__(self):
        if self.tstep <= 0:
            raise ValueError("tstep must be positive")
        if self.tstop < 10 * self.tstep:
            raise ValueError("tstop must be at least 10*tstep")
        if self.method != "trapezoidal":
            raise ValueError(f"unsupported method {self.method!r}")
        if self.ic not in ("from_op", "zero_start"):
            raise ValueError(f"unknown initial-condition mode {self.ic!r}")


TransferCurve = list[tuple[float, OperatingPoint]]


@dataclass(frozen=True)
class _VSource:
    name: str
    p: int
    m: int
    spec: object


@dataclass(frozen=True)
class _ISource:
    name: str
    p: int
    m: int
    spec: object


@dataclass(frozen=True)
class _Mosfet:
    name: str
    d: int
    g: int
    s: int
    b: int
    params: MosfetParams


class CircuitGraph:
    """A netlist resolved against one temperature, ready for assembly.

    Node numbering is dense and deterministic (order of first appearance);
    ground is index 0 and never gets a matrix row.
    """

    def __init__(self, doc: NetlistDocument, temp: float):
        diags = validate(doc)
        errors = [d for d in diags if d.severity == "error"]
        if errors:
            lines = "; ".join(f"{d.message} [{d.location}]" for d in errors)
            raise ValueError(f"netlist validation failed: {lines}")
        self.doc = doc
        self.temp = temp
        self.node_names: list[str] = [""] * len(doc.nodes)
        for name, idx in doc.nodes.items():
            self.node_names[idx] = name
        self.n = len(doc.nodes) - 1
        self.vsources: list[_VSource] = []
        self.isources: list[_ISource] = []
        self.mosfets: list[_Mosfet] = []
        res: list[tuple[int, int, float]] = []
        caps: list[tuple[int, int, float]] = []
        nod = doc.nodes
        for e in doc.elements:
            if e.kind is ElementKind.RESISTOR:
                res.append((nod[e.nodes[0]], nod[e.nodes[1]], 1.0 / e.value))
            elif e.kind is ElementKind.CAPACITOR:
                if e.value > 0:
                    caps.append((nod[e.nodes[0]], nod[e.nodes[1]], e.value))
            elif e.kind is ElementKind.VSOURCE:
                self.vsources.append(_VSource(e.name, nod[e.nodes[0]], nod[e.nodes[1]], e.source))
            elif e.kind is ElementKind.ISOURCE:
                self.isources.append(_ISource(e.name, nod[e.nodes[0]], nod[e.nodes[1]], e.source))
            else:
                params = derive_params(doc.models[e.model], e.w, e.l, temp)
                d, g, s, b = (nod[x] for x in e.nodes)
                self.mosfets.append(_Mosfet(e.name, d, g, s, b, params))
                cgd, cgs, cgb = overlap_caps(params)
                for (na, nb, c) in ((g, d, cgd), (g, s, cgs), (g, b, cgb)):
                    if c > 0:
                        caps.append((na, nb, c))
        self.m = len(self.vsources)
        self.size = self.n + self.m
        self.res_a = np.array([a for a, _, _ in res], dtype=int)
        self.res_b = np.array([b for _, b, _ in res], dtype=int)
        self.res_g = np.array([g for _, _, g in res], dtype=float)
        self.cap_a = np.array([a for a, _, _ in caps], dtype=int)
        self.cap_b = np.array([b for _, b, _ in caps], dtype=int)
        self.cap_c = np.array([c for _, _, c in caps], dtype=float)
        mos_nodes = sorted(
            {t for mos in self.mosfets for t in (mos.d, mos.g, mos.s, mos.b) if t != 0}
        )
        self.mos_rows = np.array([j - 1 for j in mos_nodes], dtype=int)
        self._j_static = self._build_static()

    def _build_static(self) -> np.ndarray:
        n, size = self.n, self.size
        J = np.zeros((size, size))
        for a, b, g in zip(self.res_a, self.res_b, self.res_g):
            ra, rb = a - 1, b - 1
            if a:
                J[ra, ra] += g
            if b:
                J[rb, rb] += g
            if a and b:
                J[ra, rb] -= g
                J[rb, ra] -= g
        for k, src in enumerate(self.vsources):
            row = n + k
            if src.p:
                J[src.p - 1, row] += 1.0
                J[row, src.p - 1] += 1.0
            if src.m:
                J[src.m - 1, row] -= 1.0
                J[row, src.m - 1] -= 1.0
        return J

    def find_source(self, name: str):
        name = name.upper()
        for src in self.vsources + self.isources:
            if src.name == name:
                return src
        raise KeyError(f"no source named {name}")


def build_graph(doc: NetlistDocument, temp: float) -> CircuitGraph:
    """Resolve a validated netlist at one temperature."""
    return CircuitGraph(doc, temp)


# ---------------------------------------------------------------------------
# Assembly and the Newton core
# ---------------------------------------------------------------------------


def _find_zero_pivot(a: np.ndarray) -> int:
    """Partial-pivoting elimination to locate the failing pivot column."""
    u = a.astype(float).copy()
    size = u.shape[0]
    for k in range(size):
        p = k + int(np.argmax(np.abs(u[k:, k])))
        if abs(u[p, k]) < 1e-300:
            return k
        if p != k:
            u[[k, p]] = u[[p, k]]
        nz = u[k + 1:, k] / u[k, k]
        u[k + 1:, k:] -= np.outer(nz, u[k, k:])
    return size - 1


def _lu_solve(J: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Dense LU with partial pivoting (LAPACK); raises SingularMatrixError."""
    try:
        return np.linalg.solve(J, rhs)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(_find_zero_pivot(J)) from None


class _System:
    """One assembly context: time point, source scale/overrides, gmin, caps."""

    def __init__(
        self,
        graph: CircuitGraph,
        options: SolverOptions,
        *,
        time: float = 0.0,
        source_scale: float = 1.0,
        overrides: dict[str, float] | None = None,
        gmin: float | None = None,
        cap_geq: np.ndarray | None = None,
    ):
        self.g = graph
        self.opt = options
        self.time = time
        self.scale = source_scale
        self.overrides = overrides or {}
        self.gmin = options.gmin if gmin is None else gmin
        self.cap_geq = cap_geq
        self.cap_ieq = None if cap_geq is None else np.zeros_like(cap_geq)
        base = graph._j_static.copy()
        base[graph.mos_rows, graph.mos_rows] += self.gmin
        if cap_geq is not None:
            for (a, b, geq) in zip(graph.cap_a, graph.cap_b, cap_geq):
                ra, rb = a - 1, b - 1
                if a:
                    base[ra, ra] += geq
                if b:
                    base[rb, rb] += geq
                if a and b:
                    base[ra, rb] -= geq
                    base[rb, ra] -= geq
        self._j_base = base

    def source_value(self, name: str, spec) -> float:
        if name in self.overrides:
            return self.scale * self.overrides[name]
        return self.scale * spec.value_at(self.time)

    def assemble(self, x: np.ndarray):
        """Residual F(x), Jacobian J(x) and per-row current/voltage scales."""
        g = self.g
        n, m = g.n, g.m
        J = self._j_base.copy()
        fe = np.zeros(n + 1)  # node residuals, slot 0 collects ground
        se = np.zeros(n + 1)  # local current scale per node
        V = np.empty(n + 1)
        V[0] = 0.0
        V[1:] = x[:n]
        if g.res_g.size:
            cur = g.res_g * (V[g.res_a] - V[g.res_b])
            np.add.at(fe, g.res_a, cur)
            np.add.at(fe, g.res_b, -cur)
            np.maximum.at(se, g.res_a, np.abs(cur))
            np.maximum.at(se, g.res_b, np.abs(cur))
        if self.cap_geq is not None and g.cap_c.size:
            cur = self.cap_geq * (V[g.cap_a] - V[g.cap_b]) + self.cap_ieq
            np.add.at(fe, g.cap_a, cur)
            np.add.at(fe, g.cap_b, -cur)
            np.maximum.at(se, g.cap_a, np.abs(cur))
            np.maximum.at(se, g.cap_b, np.abs(cur))
        for src in g.isources:
            cur = self.source_value(src.name, src.spec)
            fe[src.p] += cur
            fe[src.m] -= cur
            se[src.p] = max(se[src.p], abs(cur))
            se[src.m] = max(se[src.m], abs(cur))
        fb = np.zeros(m)
        sb = np.zeros(m)
        for k, src in enumerate(g.vsources):
            ik = x[n + k]
            fe[src.p] += ik
            fe[src.m] -= ik
            se[src.p] = max(se[src.p], abs(ik))
            se[src.m] = max(se[src.m], abs(ik))
            e = self.source_value(src.name, src.spec)
            fb[k] = V[src.p] - V[src.m] - e
            sb[k] = abs(e)
        for mos in g.mosfets:
            vd, vg, vs, vb = V[mos.d], V[mos.g], V[mos.s], V[mos.b]
            ev = eval_mosfet(mos.params, vg - vs, vd - vs, vb - vs)
            fe[mos.d] += ev.id
            fe[mos.s] -= ev.id
            a = abs(ev.id)
            se[mos.d] = max(se[mos.d], a)
            se[mos.s] = max(se[mos.s], a)
            gsum = ev.gm + ev.gds + ev.gmbs
            rd, rg, rs, rb = mos.d - 1, mos.g - 1, mos.s - 1, mos.b - 1
            if mos.d:
                J[rd, rd] += ev.gds
                if mos.g:
                    J[rd, rg] += ev.gm
                if mos.b:
                    J[rd, rb] += ev.gmbs
                if mos.s:
                    J[rd, rs] -= gsum
            if mos.s:
                J[rs, rs] += gsum
                if mos.d:
                    J[rs, rd] -= ev.gds
                if mos.g:
                    J[rs, rg] -= ev.gm
                if mos.b:
                    J[rs, rb] -= ev.gmbs
        if g.mos_rows.size:
            fe[1:][g.mos_rows] += self.gmin * x[:n][g.mos_rows]
        F = np.concatenate((fe[1:], fb))
        scale = np.concatenate((se[1:], sb))
        return F, J, scale

    def residual_excess(self, F: np.ndarray, scale: np.ndarray) -> float:
        """Largest residual above its tolerance; <= 0 when within tolerance."""
        n = self.g.n
        opt = self.opt
        tol_nodes = opt.abstol_i + opt.reltol * scale[:n]
        tol_branch = opt.vntol + opt.reltol * scale[n:]
        excess = np.concatenate((np.abs(F[:n]) - tol_nodes, np.abs(F[n:]) - tol_branch))
        return float(excess.max()) if excess.size else 0.0

    def worst_row_name(self, F: np.ndarray, scale: np.ndarray) -> str:
        n = self.g.n
        opt = self.opt
        tol = np.concatenate(
            (opt.abstol_i + opt.reltol * scale[:n], opt.vntol + opt.reltol * scale[n:])
        )
        idx = int(np.argmax(np.abs(F) - tol))
        if idx < n:
            return f"node {self.g.node_names[idx + 1]}"
        return f"source {self.g.vsources[idx - n].name}"


def _newton(sys: _System, x0: np.ndarray, options: SolverOptions):
    """Damped Newton iteration.

    Counts applied updates; convergence requires both the KCL residual and
    the proposed (undamped) voltage step to be within tolerance.  Returns
    (x, iterations, residual_excess).
    """
    g = sys.g
    n = g.n
    x = np.asarray(x0, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite initial guess")
    clamp = options.vstep_clamp
    last = (None, None)
    for iterations in range(options.max_newton_iters + 1):
        F, J, scale = sys.assemble(x)
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(J))):
            raise NonConvergenceError("non-finite assembly", float("inf"))
        excess = sys.residual_excess(F, scale)
        dx = _lu_solve(J, -F)
        vmax = float(np.max(np.abs(x[:n]))) if n else 0.0
        dv = float(np.max(np.abs(dx[:n]))) if n else 0.0
        if excess <= 0.0 and dv < options.vntol + options.reltol * vmax:
            return x, iterations, excess
        if iterations == options.max_newton_iters:
            last = (F, scale)
            break
        step = dx.copy()
        if g.mos_rows.size:
            step[g.mos_rows] = np.clip(step[g.mos_rows], -clamp, clamp)
        x += step
    F, scale = last
    raise NonConvergenceError(sys.worst_row_name(F, scale), sys.residual_excess(F, scale))


# ---------------------------------------------------------------------------
# Public solve operations
# ---------------------------------------------------------------------------


def newton_solve(
    graph: CircuitGraph,
    initial_guess: np.ndarray | None,
    options: SolverOptions,
    source_scale: float = 1.0,
    gmin_override: float | None = None,
    _overrides: dict[str, float] | None = None,
) -> OperatingPoint:
    """Single Newton solve of the DC system (sources at their t=0 values)."""
    x0 = np.zeros(graph.size) if initial_guess is None else initial_guess
    sys = _System(
        graph,
        options,
        source_scale=source_scale,
        gmin=gmin_override,
        overrides=_overrides,
    )
    x, iters, excess = _newton(sys, x0, options)
    return OperatingPoint(
        voltages=x[: graph.n].copy(),
        branch_currents=x[graph.n:].copy(),
        converged=True,
        iterations=iters,
        residual_excess=excess,
    )


def solve_dc(
    graph: CircuitGraph,
    options: SolverOptions,
    _overrides: dict[str, float] | None = None,
    _x0: np.ndarray | None = None,
) -> OperatingPoint:
    """DC operating point with homotopy fallbacks.

    Tries a plain Newton solve, then gmin stepping (one decade per step from
    1e-2 S down to gmin), then source stepping, each warm-starting from the
    previous stage's progress.
    """
    log: list[str] = []
    try:
        return newton_solve(graph, _x0, options, _overrides=_overrides)
    except (NonConvergenceError, SingularMatrixError) as exc:
        log.append(f"plain: {exc}")
    # gmin stepping
    x = np.zeros(graph.size)
    gmins = np.geomspace(1e-2, options.gmin, options.gmin_steps + 1)
    try:
        op = None
        for gval in gmins:
            op = newton_solve(graph, x, options, gmin_override=float(gval), _overrides=_overrides)
            x = np.concatenate((op.voltages, op.branch_currents))
        return op
    except (NonConvergenceError, SingularMatrixError) as exc:
        log.append(f"gmin stepping: {exc}")
    # source stepping
    x = np.zeros(graph.size)
    try:
        op = None
        for scale in np.linspace(1.0 / options.source_steps, 1.0, options.source_steps):
            op = newton_solve(graph, x, options, source_scale=float(scale), _overrides=_overrides)
            x = np.concatenate((op.voltages, op.branch_currents))
        return op
    except (NonConvergenceError, SingularMatrixError) as exc:
        log.append(f"source stepping: {exc}")
    raise NonConvergenceError("all homotopies exhausted", float("nan"), log)


def _sweep_values(start: float, stop: float, step: float) -> list[float]:
    if start == stop:
        return [start]
    if step == 0 or (stop - start) * step < 0:
        raise ValueError("sweep step must be nonzero and sign-consistent with stop-start")
    count = int(math.floor((stop - start) / step + 1e-9))
    values = [start + i * step for i in range(count + 1)]
    if abs(values[-1] - stop) <= abs(step) * 1e-9:
        values[-1] = stop
    else:
        values.append(stop)  # clamp the last step to the endpoint
    return values


def dc_sweep(
    graph: CircuitGraph,
    source_name: str,
    start: float,
    stop: float,
    step: float,
    options: SolverOptions,
) -> TransferCurve:
    """Sweep one source's DC value, warm-starting each point.

    Non-convergent points are recorded (``converged=False``, NaN vectors) and
    the sweep continues.
    """
    src = graph.find_source(source_name)  # KeyError if unknown
    curve: TransferCurve = []
    x_prev: np.ndarray | None = None
    for value in _sweep_values(start, stop, step):
        overrides = {src.name: value}
        try:
            if x_prev is None:
                op = solve_dc(graph, options, _overrides=overrides)
            else:
                try:
                    op = newton_solve(graph, x_prev, options, _overrides=overrides)
                except (NonConvergenceError, SingularMatrixError):
                    op = solve_dc(graph, options, _overrides=overrides, _x0=x_prev)
            x_prev = np.concatenate((op.voltages, op.branch_currents))
        except (NonConvergenceError, SingularMatrixError):
            op = OperatingPoint(
                voltages=np.full(graph.n, np.nan),
                branch_currents=np.full(graph.m, np.nan),
                converged=False,
                iterations=0,
            )
        curve.append((value, op))
    return curve


def solve_transient(
    graph: CircuitGraph,
    topts: TransientOptions,
    sopts: SolverOptions,
) -> WaveformSet:
    """Fixed-step transient analysis.

    Capacitors use the trapezoidal companion (conductance 2C/h plus history
    current); the first accepted step is backward Euler.  The result holds
    every node voltage and every source branch current at each accepted time,
    with solver statistics in ``WaveformSet.stats``.
    """
    h = topts.tstep
    nsteps = int(math.floor(topts.tstop / h + 1e-9))
    if nsteps < 10:
        raise ValueError("transient needs at least 10 steps")
    n, m = graph.n, graph.m
    if topts.ic == "from_op":
        op0 = solve_dc(graph, sopts)
        x = np.concatenate((op0.voltages, op0.branch_currents))
        max_excess = op0.residual_excess
        total_iters = op0.iterations
    else:
        x = np.zeros(graph.size)
        max_excess = float("-inf")
        total_iters = 0

    volts = np.empty((nsteps + 1, n))
    currents = np.empty((nsteps + 1, m))
    volts[0] = x[:n]
    currents[0] = x[n:]

    caps = graph.cap_c
    V = np.concatenate(([0.0], x[:n]))
    v_prev = V[graph.cap_a] - V[graph.cap_b] if caps.size else np.zeros(0)
    i_prev = np.zeros_like(v_prev)

    sys_be = _System(graph, sopts, time=h, cap_geq=caps / h if caps.size else None)
    sys_tr = _System(graph, sopts, time=h, cap_geq=2.0 * caps / h if caps.size else None)

    def build_ws(upto: int) -> WaveformSet:
        times = np.arange(upto + 1) * h
        ws = WaveformSet(shared_time=True)
        ws.stats["max_kcl_excess"] = max_excess
        ws.stats["newton_iterations"] = total_iters
        ws.stats["steps"] = upto
        ws.stats["tstep"] = h
        if upto < 1:  # failed on the very first step: no valid waveforms yet
            return ws
        for j in range(1, n + 1):
            name = f"v({graph.node_names[j]})"
            ws.waveforms.append(Waveform(name, times, volts[: upto + 1, j - 1]))
            ws.units[name] = "V"
        for k, src in enumerate(graph.vsources):
            name = f"i({src.name})"
            ws.waveforms.append(Waveform(name, times, currents[: upto + 1, k]))
            ws.units[name] = "A"
        for src in graph.isources:
            name = f"i({src.name})"
            vals = np.array([src.spec.value_at(t) for t in times])
            ws.waveforms.append(Waveform(name, times, vals))
            ws.units[name] = "A"
        return ws

    for k in range(1, nsteps + 1):
        t = k * h
        sys = sys_be if k == 1 else sys_tr
        sys.time = t
        if caps.size:
            if k == 1:
                sys.cap_ieq = -sys.cap_geq * v_prev
            else:
                sys.cap_ieq = -sys.cap_geq * v_prev - i_prev
        try:
            try:
                x, iters, excess = _newton(sys, x, sopts)
            except (NonConvergenceError, SingularMatrixError):
                x, iters, excess = _rescue_step(sys, x, sopts)
        except (NonConvergenceError, SingularMatrixError) as exc:
            raise TransientNonConvergence(t, build_ws(k - 1), exc) from exc
        total_iters += iters
        max_excess = max(max_excess, excess)
        volts[k] = x[:n]
        currents[k] = x[n:]
        if caps.size:
            V = np.concatenate(([0.0], x[:n]))
            v_new = V[graph.cap_a] - V[graph.cap_b]
            i_prev = sys.cap_geq * v_new + sys.cap_ieq
            v_prev = v_new
    return build_ws(nsteps)


def _rescue_step(sys: _System, x0: np.ndarray, options: SolverOptions):
    """gmin-stepping homotopy for a stubborn transient step."""
    x = x0.copy()
    nominal = sys.gmin
    iters_total = 0
    try:
        for gval in np.geomspace(1e-2, nominal, options.gmin_steps + 1):
            rows = sys.g.mos_rows
            sys._j_base[rows, rows] += gval - sys.gmin
            sys.gmin = float(gval)
            x, iters, excess = _newton(sys, x, options)
            iters_total += iters
    finally:
        rows = sys.g.mos_rows
        sys._j_base[rows, rows] += nominal - sys.gmin
        sys.gmin = nominal
    return x, iters_total, excess
