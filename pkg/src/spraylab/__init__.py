"""Pointwise curvature laboratory for sprays and Finsler metrics.

Quantities are computed through truncated multivariate Taylor jets at
individual tangent points, so every derivative is exact to the carried
order and every identity can be checked numerically.
"""

from .catalog import MetricSpec, build, family_names, family_summary, sample
from .errors import (
    AdmissibilityError,
    ConfigError,
    DegreeBudgetError,
    JetDomainError,
    SprayLabError,
)
from .expressions import ScalarField, as_field
from .geometry import (
    DEFAULT_DEGREE,
    FinslerMetric,
    MetricFrame,
    MetricSpray,
    PerturbedSpray,
    Spray,
    SprayStack,
    TangentPoint,
    stack_for,
)
from .measures import MeasureStack, VolumeForm, bh_density, volume_form
from .projective import (
    WEYL_ROUTES,
    WO_ROUTES,
    ProjectiveSpray,
    ProjectiveStack,
    berwald_weyl,
    bweyl_residual,
    einstein_wo_check,
    projective_eval,
    projective_spray,
    projective_stack,
    volume_change,
    volume_change_wo,
    weyl,
)
from .verify import (
    REGISTRY,
    SuiteReport,
    Tolerances,
    as_volume,
    check_names,
    fd_oracle,
    identity_suite,
    theorem_check,
    theorem_names,
    theorem_summary,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "ConfigError",
    "DEFAULT_DEGREE",
    "DegreeBudgetError",
    "FinslerMetric",
    "JetDomainError",
    "MeasureStack",
    "MetricFrame",
    "MetricSpec",
    "MetricSpray",
    "PerturbedSpray",
    "ProjectiveSpray",
    "ProjectiveStack",
    "REGISTRY",
    "ScalarField",
    "Spray",
    "SprayLabError",
    "SprayStack",
    "SuiteReport",
    "TangentPoint",
    "Tolerances",
    "VolumeForm",
    "WEYL_ROUTES",
    "WO_ROUTES",
    "as_field",
    "as_volume",
    "berwald_weyl",
    "bh_density",
    "build",
    "bweyl_residual",
    "check_names",
    "einstein_wo_check",
    "family_names",
    "family_summary",
    "fd_oracle",
    "identity_suite",
    "projective_eval",
    "projective_spray",
    "projective_stack",
    "sample",
    "stack_for",
    "theorem_check",
    "theorem_names",
    "theorem_summary",
    "volume_change",
    "volume_change_wo",
    "volume_form",
    "weyl",
    "__version__",
]
