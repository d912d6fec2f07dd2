"""Simulation of polarization Bell tests with a down-conversion source and
imperfect photodetectors."""

from .chsh import (
    TSIRELSON_BOUND,
    BellResult,
    BellSettings,
    NoCoincidenceError,
    PipelineCorrelator,
    bell_parameter,
    correlation,
    maximize_bell,
)
from .detectors import (
    CoincidenceProbabilities,
    DetectorParams,
    PostprocessingModel,
    click_probability,
    coincidence_probabilities,
    detector_response,
)
from .fock import (
    AnalyzerSetting,
    JointPhotonDistribution,
    PairBlockState,
    PdcSource,
    apply_analyzer,
    build_pdc_state,
    joint_photon_distribution,
)
from .tomography import (
    PRESETS,
    TomographyBasis,
    TwoQubitDensityMatrix,
    measure_correlation_matrix,
    metric_tensor,
    reconstruct_density,
    xi_matrix,
)

__version__ = "0.1.0"
