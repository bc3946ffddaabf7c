"""Material-symmetry discovery for soft fibrous solids.

Fits a sparse twelve-term invariant-based hyperelastic energy to
tension, compression and shear data with L1 regularization, and
classifies the effective material symmetry through stiffness regression
and Welch statistics.
"""

__version__ = "0.1.0"

from ._kernels import backend_name as kernel_backend
from .analysis import (
    StiffnessSummary,
    WelchResult,
    anisotropy_report,
    regress_stiffness,
    shear_stiffness,
    welch_t_test,
)
from .dataio import Experiment, ExperimentSet, NoiseSpec, load_csv, synthesize
from .discovery import (
    DiscoveredModel,
    TrainingConfig,
    enumerate_subsets_bestfit,
    loss,
    loss_gradient,
    r_squared,
    train,
)
from .energy import (
    ModelWeights,
    energy_gradient,
    load_model,
    reference_models,
    save_model,
    term_energy,
    weight_gradient,
)
from .errors import DomainError, MatsymError, TrainingError, ValidationError
from .kinematics import (
    FiberDirection,
    InvariantDerivatives,
    InvariantSet,
    LoadingMode,
    invariant_derivatives,
    invariants_from_gradient,
    invariants_shear,
    invariants_uniaxial,
    shear_gradient,
    uniaxial_gradient,
)
from .stress import (
    LoadingCase,
    StressSample,
    predict_curve,
    pressure,
    shear_stress,
    uniaxial_stress,
)
