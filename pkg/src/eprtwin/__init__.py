"""Digital twin of coincidence-free position-momentum EPR-correlation measurements."""
from .biphoton import (
    BiphotonAmplitude,
    DoubleGaussianParams,
    Grid1D,
    fourier_pair,
    make_double_gaussian,
    normalize,
    oracle_axis,
    sigma_minus,
)
from .correlations import (
    check_factorization_condition,
    conditional_distribution,
    cross_spectral_density,
    epr_witness,
    schmidt_number,
    standard_deviation,
    uncertainty_product,
)
from .instrument import CameraConfig, ImagingConfig, Interferogram, simulate_experiment
from .analysis import EprReport, fit_gaussian, metrics, run_pipeline

__version__ = "0.1.0"
