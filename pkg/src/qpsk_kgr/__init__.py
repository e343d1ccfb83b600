"""Key generation rates of QPSK CV-QKD with state-discrimination receivers over a pure-loss wiretap channel."""

from .constellation import (
    Channel,
    Constellation,
    GramMatrix,
    gram_matrix,
    make_constellation,
    transmissivity,
)
from .feedforward import CascadeSpec, cascade_conditional_probs, ff_kgr, no_click_probs
from .heterodyne import HeterodyneGrid, het_holevo, het_kgr, het_mutual_information
from .infotheory import (
    CoherentMixture,
    KgrPoint,
    holevo_information,
    kgr,
    mixture_eigenvalues,
    mutual_information,
    shannon_entropy,
    von_neumann_entropy,
)
from .optimizer import OptimizationBudget, SweepResult, maximize_kor, maximize_pgm, sweep
from .receivers import (
    FockVector,
    ProbabilityKernel,
    ReceiverSpec,
    build_receiver,
    conditional_probabilities,
    error_probability,
    reference_vector_fock,
)

__version__ = "0.1.0"
