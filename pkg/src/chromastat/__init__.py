"""chromastat: colorimetry, a Euclidean group model of perceived colors, and
Hotelling T^2 tests for color differences between groups of images."""

__version__ = "0.1.0"

from .colorimetry import (  # noqa: E402
    ColorMatchingFunctions,
    LinearRgb,
    SpectralDistribution,
    Tristimulus,
    UnitRgb,
    gamma_decode,
    gamma_encode,
    integrate_tristimulus,
    load_cmf,
    srgb_to_xyz,
    xyz_to_srgb,
)
from .errors import (  # noqa: E402
    ChromaError,
    DataFormatError,
    DomainError,
    InsufficientSampleError,
    SingularCovarianceError,
)
from .mvstat import SampleGroup, T2Result, hotelling_t2, pairwise_t2  # noqa: E402
from .perceptual import (  # noqa: E402
    EuclideanTriple,
    PositiveTriple,
    group_act,
    group_difference,
    h_map,
    induced_op,
    loglog_map,
)
