"""Data-driven eigenstructure assignment and sparse pole placement.

Everything is computed from open-loop experiment matrices ``(X0, X, U)``;
a plant model is only needed to generate data or to verify results.
"""

from .assignment import AssignmentSpec, FeedbackGain, assign, closed_form_gain, select_eigvecs, \
    solve_gamma
from .dataset import Dataset, KernelPair, PlantModel, check_persistency, kernel_pair, \
    load_dataset, reconstruct_trajectory, restrict_to_T1, save_dataset, simulate_experiments
from .errors import (ConjugacyViolation, DDAssignError, EigvecsDependent, EmptySubspace,
                     ExcitationFailure, IllConditionedAssignment, Infeasible,
                     InsufficientExperiments, InvalidInput, InvalidSpec, NotPersistent,
                     ParseError, ReconstructionFailure, SpectrumNotConjugateClosed,
                     TargetNotAllowable, TooLarge)
from .numkit import DEFAULT_TOL, Tolerances, principal_angles, subspaces_equal
from .oracle import batch_reactor, model_gain_for_assignment, verify_closed_loop
from .placement import build_constraints, membership_residual
from .sparse import SolveReport, SolverOptions, SparsityPattern, enumerate_patterns, \
    solve_max_sparse, solve_structured
from .subspace import SubspaceBasis, allowable_subspace, model_subspace_oracle, \
    subspaces_for_spectrum

__version__ = "0.1.0"
