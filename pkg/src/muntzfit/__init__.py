"""muntzfit: power-law exponent discovery with trainable Muntz expansions."""

from .analysis import RecoveryReport, dominant_exponent, gram_condition, match_exponents, rate_curve
from .basis import ExponentBounds, MuntzModel, SignedMuntzModel
from .estimator import PowerLawRegressor
from .losses import LossBreakdown, LossWeights, total_loss
from .optim import InitSpec, TrainSchedule, TrainTrace, init_model, train
from .problems import (
    SingularODE,
    SingularPoisson,
    SupervisedFit,
    Wedge,
    bc_adaptive_bounds,
    poisson_exact,
    supervised_targets,
    wedge_problem,
    wedge_spectrum,
)
from .sampling import CollocationSet, graded_1d, make_collocation, wedge_sample

__version__ = "0.1.0"
