"""Simulation, training and benchmarking of quantum computational displacement sensing.

A qubit coupled to an oscillator is driven by N layers of qubit rotations
and echoed conditional displacements (U), exposed to an unknown displacement
D(alpha), unwound with U^dag and read out; training shapes the excitation
probability p_e(alpha) into a binary classifier of alpha.
"""
from .exceptions import ConfigError, ConvergenceWarning, DegenerateBranch, TruncationWarning
from .protocol import CircuitParams, ProtocolConfig, ReadoutModel, run_protocol, evaluate
from .pulse import PhysicalParams
from .tasks import LabeledDataset, TaskSpec, generate
from .training import TrainConfig, TrainReport, train, train_on

__version__ = "0.1.0"
