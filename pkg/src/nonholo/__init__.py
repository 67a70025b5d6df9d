"""Port-Hamiltonian control of nonholonomic systems with chained structure."""

from .car import CarParams, build_car, car_chained, car_reduced
from .chained import ChainedSystem, WChart, fw_forward, fw_inverse, qz_perp, s_matrix
from .control import ControllerParams, control_w, control_z, shaped_hamiltonian
from .core import ConstrainedPHSystem, ReducedPHSystem, reduce
from .sim import SimConfig, Status, TrajectoryRecord, diagnostics, run_closed_loop

__version__ = "0.1.0"
