"""Approximation of statistical solutions of 1D conservation laws with
a posteriori error control in the 2-Wasserstein distance."""

from .dgspace import DGState, Mesh, l2_project
from .ensemble import (
    EmpiricalMeasure,
    FieldAtom,
    PolyAtom,
    SampleSet,
    compute_ensemble,
    reference_measure,
    sample_initial,
)
from .estimator import EstimatorReport, StateBox, build_report, estimate_constants
from .quadrature import LegendreBasis, QuadratureRule, gauss_legendre, legendre_eval
from .reconstruction import SpaceTimeReconstruction, spatial_reconstruct, temporal_reconstruct
from .solver import SolverConfig, Trajectory, run_deterministic, ssp_rk3_step, tvbm_limit
from .study import ExperimentConfig, StudyResult, compute_eoc, load_config
from .systems import (
    Burgers,
    EulerIdealGas,
    LinearAdvection,
    ManufacturedEuler,
    manufactured_solution,
    manufactured_source,
)
from .transport import TransportPlan, assignment_oracle, cost_matrix, solve_emd, wasserstein2

__version__ = "0.1.0"
