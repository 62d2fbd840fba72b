"""Walk through the netlist front end: parsing, validation, round-tripping.

Run:  python demos/01_netlist_parsing.py
"""

from amps.netlist import parse_netlist, parse_number, serialize_netlist, validate
from amps.rectifier import bench_netlist_path

# Engineering notation is accepted everywhere a number is: suffixes are
# case-insensitive and trailing unit letters are ignored.
for token in ("400uA", "1.5V", "0.15u", "10meg", "1.4E-8", "2k"):
    print(f"parse_number({token!r:>9}) = {parse_number(token):.6e}")

# The bundled rectifier bench is the repo's reference netlist.
text = bench_netlist_path().read_text()
doc = parse_netlist(text)
print(f"\ntitle: {doc.title}")
print(f"elements: {len(doc.elements)}  models: {sorted(doc.models)}  "
      f"nodes: {len(doc.nodes)} (ground included)")
for elem in doc.elements[:5]:
    print(f"  {elem.kind.name:<9} {elem.name:<6} nodes={elem.nodes}")

mosfets = [e for e in doc.elements if e.kind.name == "MOSFET"]
print(f"MOSFETs: {[m.name for m in mosfets]}")

# Validation returns diagnostics instead of raising: an empty error list is
# the contract for every bundled netlist.
diags = validate(doc)
print(f"\ndiagnostics: {diags if diags else 'none - netlist is clean'}")

# Serialization emits canonical text that reparses to an equal document.
assert parse_netlist(serialize_netlist(doc)) == doc
print("round-trip: serialize -> parse gives a structurally equal document")

# The full CMOSN model card is recovered parameter for parameter.
cmosn = doc.models["CMOSN"]
print(f"\nCMOSN: polarity={cmosn.polarity} level={cmosn.level} "
      f"({len(cmosn.params)} named parameters)")
for key in ("VTO", "GAMMA", "KP", "THETA", "CGDO"):
    print(f"  {key:<5} = {cmosn.params[key]:.7g}")
