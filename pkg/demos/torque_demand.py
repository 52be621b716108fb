"""Crank torque needed to hold a grasp, at the reference posture and across a sweep."""
import numpy as np

from auxgrip import MechanismGeometry, MechanismState, required_torque
from auxgrip.errors import SingularityError
from auxgrip.mechanism import LinearSchedule

g = MechanismGeometry()
ref = MechanismState(phi=90.0, xi=90.0, eta=0.0, mu=90.0, zeta=0.0, theta=0.0)
for f in (0.2, 0.4, 0.6, 0.8, 1.0):
    print(f"F_k = {f:.1f} N  ->  tau = {required_torque(ref, g, f):7.3f} N mm")

# follow the crank through its stroke with the default linkage schedule
sched = LinearSchedule(g)
for crank in np.linspace(0, 90, 7):
    s = sched(crank)
    print(f"crank {crank:5.1f} deg  eta+xi {s.eta + s.xi:7.1f}  tau/F {required_torque(s, g, 1.0):8.3f}")

try:
    required_torque(MechanismState(45.0, 40.0, -40.0, 45.0), g, 1.0)
except SingularityError as exc:
    print("toggle posture:", exc)
