"""MOSFET compact model: parameter derivation and bias-point evaluation.

The evaluated model is a documented subset of the level-3 card it is fed
from: square-law conduction, body effect (GAMMA/PHI), THETA mobility
degradation, constant overlap capacitances and standard temperature laws
(-2 mV/degC threshold drift, T^-1.5 mobility scaling).  Card parameters
outside this subset (NSUB, DELTA, ETA, VMAX, KAPPA, RSH, NFS, TPG, XJ, WD
and the junction-capacitance group) are parsed and retained but not
evaluated.  There is no channel-length-modulation term: saturation output
conductance comes only from the solver's gmin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .netlist import ModelCard

# oxide permittivity, F/m
EPS_OX = 3.45313e-11
# nominal temperature for the mobility law (27 degC), kelvin
TNOM_K = 300.15
# threshold drift, V per degC (magnitude shrinks with temperature)
VTH_TC = 2.0e-3


class Region(Enum):
    CUTOFF = "cutoff"
    TRIODE = "triode"
    SATURATION = "saturation"


@dataclass(frozen=True, slots=True)
class MosfetParams:
    """Geometry- and temperature-resolved device parameters."""

    polarity: str  # "NMOS" | "PMOS"
    vth0: float  # V, signed (negative for PMOS)
    gamma: float  # V^0.5
    phi: float  # V
    kp_eff: float  # A/V^2, temperature-adjusted
    theta: float  # 1/V
    w: float  # m
    leff: float  # m
    cgdo_f: float  # F, absolute gate-drain overlap
    cgso_f: float  # F, absolute gate-source overlap
    cgbo_f: float  # F, absolute gate-bulk overlap
    temp: float  # degC


@dataclass(frozen=True, slots=True)
class DeviceEval:
    """Drain current and its exact partial derivatives at one bias point."""

    id: float  # A, conventional drain->source current
    gm: float  # A/V, d(id)/d(vgs)
    gds: float  # A/V, d(id)/d(vds)
    gmbs: float  # A/V, d(id)/d(vbs)
    region: Region


class MissingModelParameter(ValueError):
    pass


def derive_params(card: ModelCard, w: float, l: float, temp: float) -> MosfetParams:
    """Resolve a model card plus geometry and temperature into device parameters.

    Requires VTO and at least one of KP or (UO with TOX).  UO is taken in the
    SPICE card unit of cm^2/(V*s) and converted to SI before multiplying by
    the oxide capacitance; KP takes precedence when both are present.
    """
    if not -50.0 <= temp <= 150.0:
        raise ValueError(f"temperature {temp} degC outside supported range [-50, 150]")
    p = card.params
    if "VTO" not in p:
        raise MissingModelParameter(f"model {card.name}: VTO is required")
    ld = p.get("LD", 0.0)
    leff = l - 2.0 * ld
    if leff <= 0:
        raise ValueError(f"model {card.name}: L - 2*LD must be > 0 (got {leff})")
    if "KP" in p:
        kp = p["KP"]
    elif "UO" in p and "TOX" in p:
        cox = EPS_OX / p["TOX"]
        kp = p["UO"] * 1e-4 * cox
    else:
        raise MissingModelParameter(
            f"model {card.name}: need KP, or UO together with TOX"
        )
    t_k = temp + 273.15
    kp_eff = kp * (t_k / TNOM_K) ** -1.5
    vto = p["VTO"]
    if card.polarity == "NMOS":
        vth0 = vto - VTH_TC * (temp - 27.0)
    else:
        vth0 = vto + VTH_TC * (temp - 27.0)
    if kp_eff <= 0:
        raise ValueError(f"model {card.name}: non-positive transconductance")
    return MosfetParams(
        polarity=card.polarity,
        vth0=vth0,
        gamma=p.get("GAMMA", 0.0),
        phi=p.get("PHI", 0.7),
        kp_eff=kp_eff,
        theta=p.get("THETA", 0.0),
        w=w,
        leff=leff,
        cgdo_f=p.get("CGDO", 0.0) * w,
        cgso_f=p.get("CGSO", 0.0) * w,
        cgbo_f=p.get("CGBO", 0.0) * leff,
        temp=temp,
    )


def overlap_caps(p: MosfetParams) -> tuple[float, float, float]:
    """Constant (gate-drain, gate-source, gate-bulk) capacitances in farads."""
    return (p.cgdo_f, p.cgso_f, p.cgbo_f)


def _eval_forward(
    vth0: float,
    gamma: float,
    phi: float,
    beta: float,
    theta: float,
    vgs: float,
    vds: float,
    vbs: float,
) -> tuple[float, float, float, float, Region]:
    """Normalized NMOS evaluation, vds >= 0.

    Returns (id, d/dvgs, d/dvds, d/dvbs, region).
    """
    vbs_c = vbs if vbs < phi - 1e-6 else phi - 1e-6
    sq = math.sqrt(phi - vbs_c)
    vth = vth0 + gamma * (sq - math.sqrt(phi))
    # dvth/dvbs, zero past the clamp
    dvth = -gamma / (2.0 * sq) if vbs < phi - 1e-6 else 0.0
    vov = vgs - vth
    if vov <= 0.0:
        return (0.0, 0.0, 0.0, 0.0, Region.CUTOFF)
    u = 1.0 / (1.0 + theta * vov)
    du = -theta * u * u  # du/dvov
    if vds < vov:
        core = vov * vds - 0.5 * vds * vds
        cur = beta * u * core
        dvov = beta * (du * core + u * vds)
        gds = beta * u * (vov - vds)
        region = Region.TRIODE
    else:
        cur = 0.5 * beta * u * vov * vov
        dvov = 0.5 * beta * vov * (du * vov + 2.0 * u)
        gds = 0.0
        region = Region.SATURATION
    # vov = vgs - vth(vbs):  d/dvgs = dvov,  d/dvbs = -dvth * dvov
    return (cur, dvov, gds, -dvth * dvov, region)


def eval_mosfet(p: MosfetParams, vgs: float, vds: float, vbs: float) -> DeviceEval:
    """Evaluate drain current and partials at a bias point.

    PMOS devices are evaluated by negating all terminal voltages, running the
    NMOS equations with the threshold magnitude, and negating the current;
    the conductances come out positive either way.  A negative (effective)
    vds is handled by the source/drain swap symmetry.
    """
    if not (math.isfinite(vgs) and math.isfinite(vds) and math.isfinite(vbs)):
        raise ValueError(f"non-finite bias point ({vgs}, {vds}, {vbs})")
    pmos = p.polarity == "PMOS"
    if pmos:
        vgs, vds, vbs = -vgs, -vds, -vbs
        vth0 = -p.vth0
    else:
        vth0 = p.vth0
    beta = p.kp_eff * (p.w / p.leff)
    if vds >= 0.0:
        cur, gm, gds, gmbs, region = _eval_forward(
            vth0, p.gamma, p.phi, beta, p.theta, vgs, vds, vbs
        )
    else:
        # swap source and drain: primed device sees the reversed branch
        c, g_m, g_ds, g_mbs, region = _eval_forward(
            vth0, p.gamma, p.phi, beta, p.theta, vgs - vds, -vds, vbs - vds
        )
        cur = -c
        gm = -g_m
        gds = g_m + g_ds + g_mbs
        gmbs = -g_mbs
    if pmos:
        cur = -cur
    return DeviceEval(id=cur, gm=gm, gds=gds, gmbs=gmbs, region=region)
