"""Simulation and control of parallel lattices of single-thruster swimming modules."""

__version__ = "0.1.0"

from .control import (ControllerGains, ControllerState, LatticeController, Observation,
                      Setpoint, allocate, control_step, invert_thrust, velocity_loop, yaw_loop)
from .guard import GuardVerdict, TailGeometry, check_assumptions, geometric_clearance, sign_invariant
from .lattice import (AggregateParams, BoatParams, LatticeConfig, ThrustCurve, aggregate,
                      reference_params, structural_matrix)
from .sim import DisturbanceSpec, LatticeState, SimConfig, Trajectory, run, step_cycle
from .waveform import CycleSchedule, WaveformCommand, discontinuity, motor_angle, schedule_cycle
