"""Local jet pattern texture descriptor and classifiers."""

from .classify import (ClassModel, chi_square, fit_nsc, nnc_predict, nsc_predict,
                       nsc_residuals, sqrt_preprocess)
from .encoder import (FeatureConfig, SamplingGeometry, extract_feature, histogram, lbp_feature,
                      ljp_code, uniform_map)
from .harness import (Dataset, ExperimentConfig, ExperimentReport, add_awgn, generate_synthetic,
                      load_dataset, run_experiment, standardize, stratified_kfold)
from .jetspace import JetVector, compute_jet, contrast_normalize, reflect_jet, rotate_jet
from .kernels import DtgKernel, dtg_kernel_2d, dtg_taps_1d, hermite_eval

__version__ = "0.1.0"
