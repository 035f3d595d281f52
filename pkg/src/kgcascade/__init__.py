"""Klein-Gordon lattice / small-dispersion NLS simulator suite.

Subpackages by concern:

* ``lattice``: the periodic KG lattice and its symplectic integrator
* ``spectral``: normal-mode data, specific energies, weighted norms
* ``nls``: pseudo-spectral small-dispersion NLS with growth detection
* ``normal_form``: zero-momentum polynomial algebra and the NLS derivation
* ``bridge``: lattice <-> continuum dictionary and co-evolution metrics
* ``cli`` / ``config`` / ``serialize``: experiment orchestration and output
"""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    KGIntegrator,
    KGParams,
    LatticeGrid,
    LatticeState,
    discrete_laplacian,
    hamiltonian_energy,
    make_single_mode_datum,
    step,
)
from .nls import (  # noqa: F401
    NLSParams,
    NLSState,
    SplitStepIntegrator,
    detect_growth,
    kuksin_membership,
    lambda_star,
    sobolev_norm,
    split_step,
)
from .normal_form import (  # noqa: F401
    ZeroMomentumPolynomial,
    flow_average,
    homological_solution,
    kg_nls_coefficients,
    lie_transform_truncated,
    momentum,
    poisson_bracket,
    poly_norm,
)
from .spectral import (  # noqa: F401
    ModeSpectrum,
    SpecificSpectrum,
    WeightedSeq,
    cascade_metric,
    dft_modes,
    mode_frequency,
    project_low,
    specific_spectrum,
    weighted_norm,
)
from .bridge import (  # noqa: F401
    RegimeParams,
    aliased_specific_energy,
    approximation_error,
    build_approximate_lattice_solution,
    lattice_to_continuum_modes,
    regime_check,
)
