"""One-hidden-layer teacher networks on Gaussian-mixture inputs.

Modules
-------
mixture     Gaussian mixture sampling, density and score functions.
teacher     The teacher network ``H(W, x) = mean_j sigmoid(w_j^T x)``.
risk        Cross-entropy loss, derivatives, population/group risks, aligned error.
train       Gradient descent, rate fitting and the multi-start success test.
tensorinit  Moment-based (tensor) initialization.
theory      Curvature surrogate and derived complexity quantities.
bench       Experiment specs, sweep runners and the command-line interface.
"""

from .mixture import MixtureParams, detect_symmetry, log_pdf, pdf, sample, score
from .risk import aligned_error, empirical_risk, excess_risk, group_risk, population_risk
from .teacher import TeacherModel, draw_labels, forward
from .tensorinit import InitConfig, tensor_init
from .theory import report, rho
from .train import TrainConfig, auto_step_size, fit_rate, gd_train, trial_success

__version__ = "0.1.0"

__all__ = [
    "MixtureParams",
    "TeacherModel",
    "TrainConfig",
    "InitConfig",
    "aligned_error",
    "auto_step_size",
    "detect_symmetry",
    "draw_labels",
    "empirical_risk",
    "excess_risk",
    "fit_rate",
    "forward",
    "gd_train",
    "group_risk",
    "log_pdf",
    "pdf",
    "population_risk",
    "report",
    "rho",
    "sample",
    "score",
    "tensor_init",
    "trial_success",
]
