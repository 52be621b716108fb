"""Auxetic gripper finger toolkit: lattice models, corotational beam FE with
rigid-circle contact, conformity metrics, mechanism torque and sensor data reduction."""
from .errors import (
    AuxgripError, ContactChatterError, ConstructionError, ConvergenceError, FitError,
    GeometryError, IngestionError, InputError, ScheduleError, SingularityError,
    SingularStiffnessError,
)
from .frame import LatticeModel, Material, Section, rectangular_section
from .fem import BoundaryConditions, SolveSettings, solve_linear, solve_nonlinear
from .lattice import (
    LatticeSpec, UnitCellSpec, build_lattice, effective_poisson_ratio, gibson_ashby_poisson,
)
from .contact import Indenter, simulate_indentation
from .metrics import (
    ContactProfile, curvature_profile, conformity_radius, curvature_ratio, extract_centerline,
    fit_circle, force_stats,
)
from .mechanism import MechanismGeometry, MechanismState, required_torque, torque_curve
from .sensors import BeamGaugeParams, fit_with_bands, load_series, strain_to_force
from .study import RunConfig, run_study

__version__ = "0.1.0"
