"""Active array imaging of point scatterers from intensity-only data."""

from .errors import (
    ConfigError,
    ConsistencyError,
    ImagingError,
    ParseError,
    PhaseChainError,
    PreconditionError,
    SingularGreenError,
)
from .forward import (
    IntensityRecord,
    ResponseMatrix,
    apply_noise,
    assemble_response_born,
    assemble_response_paraxial,
    hankel_from_scene,
    measure_intensities,
)
from .geometry import (
    ArrayGeometry,
    ImagingGrid,
    Scene,
    fresnel_diagnostics,
    green,
    green_vector,
    linear_array,
    optimal_grid_count,
    sensing_matrix,
)
from .imaging import (
    detect_peaks,
    localization_report,
    music_pseudospectrum,
    subspace_split,
)
from .phase_recovery import (
    IntensityOracle,
    SimulatorOracle,
    polarization_product,
    recover_paraxial_six,
    recover_response_symmetric,
    recover_time_reversal,
)

__version__ = "0.1.0"
