"""SPICE-subset netlist parsing, validation and serialization.

The accepted grammar is deliberately small: the first line is the title,
``*`` starts a comment line, ``;`` starts an inline comment, ``+`` continues
the previous card.  Element cards are M/R/C/V/I, dot cards are ``.MODEL``,
``.OP``, ``.DC``, ``.TRAN``, ``.TEMP`` and ``.END``.  Keywords and element
names are case-insensitive, node names are case-sensitive.  See
``docs/netlist_format.md`` for the full reference.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Union


class NetlistError(ValueError):
    """Netlist syntax or semantic error, carrying a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Engineering-notation numbers
# ---------------------------------------------------------------------------

_NUM_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([a-zA-Z]*)$"
)

# Engineering suffixes (decimal exponents), case-insensitive.
# "meg" must be tested before "m".
_SUFFIX_EXP = {
    "f": -15,
    "p": -12,
    "n": -9,
    "u": -6,
    "m": -3,
    "k": 3,
    "g": 9,
    "t": 12,
}


def parse_number(token: str) -> float:
    """Parse a SPICE number such as ``4.7k``, ``400uA``, ``1.4E-8`` or ``10meg``.

    Trailing unit letters after a recognized suffix are ignored
    (``400uA`` -> 4.0e-4).  When the mantissa has no exponent of its own the
    suffix is folded into the decimal literal before conversion, so e.g.
    ``200u`` parses to exactly 2e-4.  Raises ``ValueError`` on malformed input.
    """
    m = _NUM_RE.match(token.strip())
    if m is None:
        raise ValueError(f"malformed number: {token!r}")
    head = m.group(1)
    tail = m.group(2).lower()
    if not tail:
        return float(head)
    if tail.startswith("meg"):
        exp = 6
    else:
        exp = _SUFFIX_EXP.get(tail[0])
    if exp is None:
        # bare unit letters (e.g. "1.5V"), no scaling
        return float(head)
    if "e" in head or "E" in head:
        return float(head) * 10.0**exp
    return float(f"{head}e{exp}")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


class ElementKind(Enum):
    MOSFET = "M"
    RESISTOR = "R"
    CAPACITOR = "C"
    VSOURCE = "V"
    ISOURCE = "I"


@dataclass(frozen=True)
class DcSpec:
    """Constant source value (volts or amps)."""

    value: float

    def value_at(self, t: float) -> float:
        return self.value


@dataclass(frozen=True)
class SinSpec:
    """Sinusoidal source: offset + amplitude * sin(2*pi*frequency*t)."""

    offset: float
    amplitude: float
    frequency: float

    def value_at(self, t: float) -> float:
        import math

        return self.offset + self.amplitude * math.sin(2.0 * math.pi * self.frequency * t)


SourceSpec = Union[DcSpec, SinSpec]


@dataclass(frozen=True)
class ElementCard:
    """One parsed element line.

    ``nodes`` is (n+, n-) for two-terminal elements and
    (drain, gate, source, bulk) for MOSFETs.  ``value`` holds resistance or
    capacitance, ``source`` the V/I source spec, ``model``/``w``/``l`` the
    MOSFET extras.
    """

    kind: ElementKind
    name: str
    nodes: tuple[str, ...]
    value: float | None = None
    source: SourceSpec | None = None
    model: str | None = None
    w: float | None = None
    l: float | None = None


@dataclass(frozen=True)
class ModelCard:
    """A ``.MODEL`` statement: polarity, level and an ordered parameter map.

    Unknown parameter keys are retained verbatim, never dropped; the device
    model decides which ones it evaluates.
    """

    name: str
    polarity: str  # "NMOS" | "PMOS"
    level: int
    params: dict[str, float]


@dataclass(frozen=True)
class OpDirective:
    pass


@dataclass(frozen=True)
class DcSweepDirective:
    source: str
    start: float
    stop: float
    step: float


@dataclass(frozen=True)
class TranDirective:
    tstep: float
    tstop: float


@dataclass(frozen=True)
class TempDirective:
    temps: tuple[float, ...]


AnalysisDirective = Union[OpDirective, DcSweepDirective, TranDirective, TempDirective]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    location: str


@dataclass
class NetlistDocument:
    """Structured circuit description produced by :func:`parse_netlist`.

    ``nodes`` maps node name to a dense index; ground ``"0"`` is always
    index 0.  Immutable by convention after construction.
    """

    title: str
    elements: list[ElementCard] = field(default_factory=list)
    models: dict[str, ModelCard] = field(default_factory=dict)
    directives: list[AnalysisDirective] = field(default_factory=list)
    nodes: dict[str, int] = field(default_factory=lambda: {"0": 0})


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _logical_lines(text: str) -> list[tuple[int, str]]:
    """Strip comments, join ``+`` continuations; returns (line_no, card) pairs.

    The first line is always the title and is not returned here.
    """
    out: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if lineno == 1:
            continue  # title handled by caller
        line = raw.split(";", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("*"):
            continue
        if stripped.startswith("+"):
            if not out:
                raise NetlistError("continuation line with no preceding card", lineno)
            prev_no, prev = out[-1]
            out[-1] = (prev_no, prev + " " + stripped[1:].strip())
        else:
            out.append((lineno, stripped))
    return out


_EQ_SPACING = re.compile(r"\s*=\s*")


def _num(token: str, lineno: int) -> float:
    try:
        return parse_number(token)
    except ValueError as exc:
        raise NetlistError(str(exc), lineno) from None


def parse_model_card(line: str, lineno: int | None = None) -> ModelCard:
    """Parse a joined ``.MODEL`` line into a :class:`ModelCard`.

    ``key = value`` pairs tolerate spaces around ``=``.  LEVEL is pulled into
    its own field (default 3); everything else lands in ``params`` in source
    order, keys uppercased.
    """
    flat = _EQ_SPACING.sub("=", line.strip())
    tokens = flat.split()
    if not tokens or tokens[0].upper() != ".MODEL":
        raise NetlistError("not a .MODEL card", lineno)
    if len(tokens) < 3:
        raise NetlistError(".MODEL needs a name and a polarity keyword", lineno)
    name = tokens[1].upper()
    polarity = tokens[2].upper()
    if polarity not in ("NMOS", "PMOS"):
        raise NetlistError(
            f"model {name}: missing polarity keyword (got {tokens[2]!r})", lineno
        )
    level = 3
    params: dict[str, float] = {}
    for tok in tokens[3:]:
        if "=" not in tok:
            raise NetlistError(f"model {name}: expected key=value, got {tok!r}", lineno)
        key, _, val = tok.partition("=")
        key = key.upper()
        try:
            num = parse_number(val)
        except ValueError:
            raise NetlistError(
                f"model {name}: value of {key} is not a number: {val!r}", lineno
            ) from None
        if key == "LEVEL":
            level = int(num)
        else:
            params[key] = num
    if "TOX" in params and params["TOX"] <= 0:
        raise NetlistError(f"model {name}: TOX must be > 0", lineno)
    if "PHI" in params and params["PHI"] <= 0:
        raise NetlistError(f"model {name}: PHI must be > 0", lineno)
    return ModelCard(name=name, polarity=polarity, level=level, params=params)


def _parse_source_tokens(tokens: list[str], lineno: int) -> SourceSpec:
    text = " ".join(tokens)
    m = re.match(r"^(?:DC\s+)?([^\s()]+)$", text, re.IGNORECASE)
    if m and not text.upper().startswith("SIN"):
        return DcSpec(_num(m.group(1), lineno))
    m = re.match(r"^SIN\s*\(\s*([^)]*)\)$", text, re.IGNORECASE)
    if m:
        args = m.group(1).split()
        if len(args) != 3:
            raise NetlistError(
                f"SIN takes exactly 3 arguments (offset amplitude frequency), got {len(args)}",
                lineno,
            )
        offset, amplitude, frequency = (_num(a, lineno) for a in args)
        if frequency <= 0:
            raise NetlistError("SIN frequency must be > 0", lineno)
        return SinSpec(offset, amplitude, frequency)
    raise NetlistError(f"unrecognized source specification: {text!r}", lineno)


def parse_netlist(text: str) -> NetlistDocument:
    """Parse full netlist text into a :class:`NetlistDocument`.

    The first line is the title (SPICE convention).  Raises
    :class:`NetlistError` with a line number on any syntax problem.
    """
    if not text.strip():
        raise NetlistError("empty netlist")
    lines = text.splitlines()
    doc = NetlistDocument(title=lines[0].strip())
    seen_names: set[str] = set()

    def node_index(name: str) -> None:
        if name not in doc.nodes:
            doc.nodes[name] = len(doc.nodes)

    for lineno, card in _logical_lines(text):
        first = card[0].upper()
        if first == ".":
            _parse_directive(card, lineno, doc)
            continue
        if first not in "MRCVI":
            raise NetlistError(f"unknown card leading letter {card[0]!r}", lineno)
        flat = _EQ_SPACING.sub("=", card)
        tokens = flat.split()
        name = tokens[0].upper()
        if name in seen_names:
            raise NetlistError(f"duplicate element name {name}", lineno)
        seen_names.add(name)
        kind = ElementKind(first)
        if kind is ElementKind.MOSFET:
            elem = _parse_mosfet(name, tokens, lineno)
        elif kind in (ElementKind.RESISTOR, ElementKind.CAPACITOR):
            elem = _parse_rc(kind, name, tokens, lineno)
        else:
            if len(tokens) < 4:
                raise NetlistError(f"{name}: expected 2 nodes and a source spec", lineno)
            spec = _parse_source_tokens(tokens[3:], lineno)
            elem = ElementCard(kind=kind, name=name, nodes=(tokens[1], tokens[2]), source=spec)
        for n in elem.nodes:
            node_index(n)
        doc.elements.append(elem)
    return doc


def _parse_mosfet(name: str, tokens: list[str], lineno: int) -> ElementCard:
    if len(tokens) < 6:
        raise NetlistError(f"{name}: expected d g s b model W=.. L=..", lineno)
    nodes = tuple(tokens[1:5])
    model = tokens[5].upper()
    w = l = None
    for tok in tokens[6:]:
        if "=" not in tok:
            raise NetlistError(f"{name}: expected key=value, got {tok!r}", lineno)
        key, _, val = tok.partition("=")
        key = key.upper()
        if key == "W":
            w = _num(val, lineno)
        elif key == "L":
            l = _num(val, lineno)
        else:
            raise NetlistError(f"{name}: unknown MOSFET parameter {key}", lineno)
    if w is None or l is None:
        raise NetlistError(f"{name}: both W and L are required", lineno)
    if w <= 0 or l <= 0:
        raise NetlistError(f"{name}: W and L must be > 0", lineno)
    return ElementCard(
        kind=ElementKind.MOSFET, name=name, nodes=nodes, model=model, w=w, l=l
    )


def _parse_rc(kind: ElementKind, name: str, tokens: list[str], lineno: int) -> ElementCard:
    if len(tokens) != 4:
        raise NetlistError(f"{name}: expected 2 nodes and a value", lineno)
    value = _num(tokens[3], lineno)
    if kind is ElementKind.RESISTOR and value <= 0:
        raise NetlistError(f"{name}: resistance must be > 0", lineno)
    if kind is ElementKind.CAPACITOR and value < 0:
        raise NetlistError(f"{name}: capacitance must be >= 0", lineno)
    return ElementCard(kind=kind, name=name, nodes=(tokens[1], tokens[2]), value=value)


def _parse_directive(card: str, lineno: int, doc: NetlistDocument) -> None:
    flat = _EQ_SPACING.sub("=", card)
    tokens = flat.split()
    word = tokens[0].upper()
    if word == ".MODEL":
        model = parse_model_card(card, lineno)
        doc.models[model.name] = model
    elif word == ".OP":
        doc.directives.append(OpDirective())
    elif word == ".DC":
        if len(tokens) != 5:
            raise NetlistError(".DC needs: source start stop step", lineno)
        start, stop, step = (_num(t, lineno) for t in tokens[2:5])
        if step == 0:
            raise NetlistError(".DC step must be nonzero", lineno)
        if (stop - start) * step < 0:
            raise NetlistError(".DC step sign inconsistent with stop-start", lineno)
        doc.directives.append(DcSweepDirective(tokens[1].upper(), start, stop, step))
    elif word == ".TRAN":
        if len(tokens) != 3:
            raise NetlistError(".TRAN needs: tstep tstop", lineno)
        tstep, tstop = _num(tokens[1], lineno), _num(tokens[2], lineno)
        if not (tstop > tstep > 0):
            raise NetlistError(".TRAN requires tstop > tstep > 0", lineno)
        doc.directives.append(TranDirective(tstep, tstop))
    elif word == ".TEMP":
        if len(tokens) < 2:
            raise NetlistError(".TEMP needs at least one temperature", lineno)
        doc.directives.append(TempDirective(tuple(_num(t, lineno) for t in tokens[1:])))
    elif word == ".END":
        pass
    else:
        raise NetlistError(f"unknown directive {tokens[0]}", lineno)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate(doc: NetlistDocument) -> list[Diagnostic]:
    """Semantic checks on a parsed netlist.

    Errors: dangling node (single terminal reference), no ground node,
    MOSFET with unresolved model, no sources.  Warnings: unused models.
    """
    diags: list[Diagnostic] = []
    refcount: dict[str, int] = {}
    used_models: set[str] = set()
    has_source = False
    for elem in doc.elements:
        for n in elem.nodes:
            refcount[n] = refcount.get(n, 0) + 1
        if elem.kind is ElementKind.MOSFET:
            used_models.add(elem.model)
            if elem.model not in doc.models:
                diags.append(
                    Diagnostic("error", f"unresolved model {elem.model}", elem.name)
                )
        if elem.kind in (ElementKind.VSOURCE, ElementKind.ISOURCE):
            has_source = True
    if "0" not in refcount:
        diags.append(Diagnostic("error", "no ground node", "0"))
    for node, count in refcount.items():
        if count == 1:
            diags.append(Diagnostic("error", f"dangling node {node}", node))
    if not has_source:
        diags.append(Diagnostic("error", "circuit has no sources", doc.title))
    for name in doc.models:
        if name not in used_models:
            diags.append(Diagnostic("warning", f"unused model {name}", name))
    return diags


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_netlist(doc: NetlistDocument) -> str:
    """Emit canonical netlist text that reparses to a structurally equal document."""
    out = [doc.title]
    for model in doc.models.values():
        parts = [f".MODEL {model.name} {model.polarity} LEVEL = {model.level}"]
        parts += [f"{k} = {_fmt(v)}" for k, v in model.params.items()]
        out.append(" ".join(parts))
    for e in doc.elements:
        if e.kind is ElementKind.MOSFET:
            out.append(
                f"{e.name} {' '.join(e.nodes)} {e.model} W={_fmt(e.w)} L={_fmt(e.l)}"
            )
        elif e.kind in (ElementKind.RESISTOR, ElementKind.CAPACITOR):
            out.append(f"{e.name} {' '.join(e.nodes)} {_fmt(e.value)}")
        else:
            if isinstance(e.source, DcSpec):
                spec = f"DC {_fmt(e.source.value)}"
            else:
                spec = (
                    f"SIN({_fmt(e.source.offset)} {_fmt(e.source.amplitude)} "
                    f"{_fmt(e.source.frequency)})"
                )
            out.append(f"{e.name} {' '.join(e.nodes)} {spec}")
    for d in doc.directives:
        if isinstance(d, OpDirective):
            out.append(".OP")
        elif isinstance(d, DcSweepDirective):
            out.append(f".DC {d.source} {_fmt(d.start)} {_fmt(d.stop)} {_fmt(d.step)}")
        elif isinstance(d, TranDirective):
            out.append(f".TRAN {_fmt(d.tstep)} {_fmt(d.tstop)}")
        elif isinstance(d, TempDirective):
            out.append(".TEMP " + " ".join(_fmt(t) for t in d.temps))
    out.append(".END")
    return "\n".join(out) + "\n"
