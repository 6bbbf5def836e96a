"""Mediation tests, total-effect rejection geometry and simulation."""

from .dataset import Dataset, VariableSpec, complete_cases, describe, load_csv, percentize
from .estimation import MediationFit, ModelSpec, fit, fit_lad, fit_lse, ols_fit, sobel_test
from .geometry import (
    CriticalValues,
    RegionId,
    critical_values,
    in_region,
    p0_boundary,
    region_boundary_samples,
    verify_complementary_superfluous,
    witness_competitive,
    witness_indirect_only,
    witness_sobel_io,
)
from .reduction import CanonicalCoords, GeometryPoint, canonical_reduce, coords_to_estimates, geometry_point
from .simulation import SimulationConfig, SimulationReport, export_report, import_report, run_study
from .typology import ContributionReport, TypologyVerdict, classify, percent_contributions

__version__ = "0.1.0"
