"""Maximum relative entropy inference of species abundances and diversity."""

__version__ = "0.1.0"

from .diversity import (  # noqa: E402
    DiversityReport,
    SamplingConfig,
    me_diversity,
    shannon,
    simpson,
)
from .discrete import (  # noqa: E402
    DiscreteModel,
    DiscretePosterior,
    MomentSpecDiscrete,
    attainable_range,
    bayes_update,
    me_update,
    tilted_update,
)
from .simplex import (  # noqa: E402
    MomentConstraint,
    PriorSpec,
    SampleBank,
    SpeciesCounts,
    ZetaEstimate,
    draw_bank,
    grid_oracle,
    log_multinomial,
    posterior_means,
    zeta_at,
)
from .solver import BetaSolution, SolverConfig, solve_beta  # noqa: E402
from .kernels import BACKEND  # noqa: E402
