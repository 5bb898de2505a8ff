"""Zero-shot domain adaptation by kernel regression on the Grassmannian."""

from .adaptation import (
    AlignmentMap,
    GfkKernel,
    gfk_classify,
    gfk_kernel,
    learn_subspace,
    sa_classify,
    subspace_alignment,
)
from .data import DomainDataset, DomainManifest
from .grassmann import PrincipalAngles, Subspace, distance, make_subspace, principal_angles
from .manifold_opt import (
    OptimizerConfig,
    OptimizerTrace,
    WeightedAnchorSet,
    bc_gradient,
    bc_objective,
    cayley_step,
    minimize_bc,
)
from .pipeline import EvalReport, evaluate_all_targets, evaluate_target, zsda_predict
from .regression import (
    KernelSpec,
    TrainingSet,
    fit_normalizer,
    kernel_regression_euclidean,
    kernel_weights,
    predict_subspace,
)
from .synth import SynthConfig, generate_synthetic

__version__ = "0.1.0"
