"""Component sizes of random graphs in the critical window.

Exact intensities and moments of the limiting point process, extreme-point
laws, branching-process formulas, and two Monte Carlo samplers (G(n, p)
components and reflected Brownian excursions) to check them against.
"""
from .errors import (
    CritWindowError,
    InsufficientSamplesError,
    PrecisionError,
    QuadratureError,
    SeriesError,
)
from .intensity import IntensityParams, intensity_label, intensity_total, label_distribution
from .moments import (
    Estimate,
    count_variance,
    expected_count,
    expected_weight,
    factorial_moments,
    weight_variance,
)
from .quadrature import QuadratureSpec, integrate
from .records import ExperimentManifest, PointSample

__version__ = "0.1.0"
