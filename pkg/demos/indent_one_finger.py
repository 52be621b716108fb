"""Push a rigid circle into one finger and look at how the face wraps.

    python3 demos/indent_one_finger.py [inclination]
"""
import sys

from auxgrip import (
    Indenter, LatticeSpec, build_lattice, conformity_radius, curvature_profile, curvature_ratio,
    simulate_indentation,
)
from auxgrip.study import contact_zone

inc = float(sys.argv[1]) if len(sys.argv) > 1 else 45.0
model = build_lattice(LatticeSpec().with_inclination(inc))
print(f"Aux({inc:g}): {model.n_nodes} nodes, {len(model.elements)} beams")

h = simulate_indentation(model, Indenter.touching(model, radius=26.5, total_travel=2.5))
for s in h.steps[::2]:
    p = ", ".join(f"{v:+.3f}" for v in s.port_reactions)
    print(f"  travel {s.travel:4.2f} mm  contact {s.contact_force_resultant:6.3f} N  ports [{p}]")

final = h.steps[-1]
cp = curvature_profile(final.deformed_face)
r2 = conformity_radius(contact_zone(final.deformed_face, final.contact_point_forces))
print(f"average face curvature {cp.average_curvature:.4f} 1/mm")
print(f"contact-zone radius {r2:.1f} mm, R1/R2 = {curvature_ratio(26.5, r2):.3f}")
