"""Optimal transport on the unit sphere: costs, curvature, and diagnostics."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AntipodalEndpoint,
    AntipodalError,
    ConfigError,
    CutLocusError,
    DegenerateAxis,
    DomainError,
    DominatedSupportError,
    GradientOutOfRange,
    InfeasibleError,
    NonConvergence,
    PlanInvariantError,
    SphereOTError,
    UnsupportedDimension,
)
from .geometry import (  # noqa: F401
    SpherePoint,
    TangentFrame,
    TangentVector,
    distance,
    exp_map,
    fibonacci_grid,
    log_map,
    orthonormal_frame,
    parallel_transport,
)
from .mtw import (  # noqa: F401
    CurvatureQuery,
    MtwReport,
    certify_as,
    inequality_constants,
    mtw_closed_form,
    mtw_fd,
)
from .costs import (  # noqa: F401
    CostPair,
    CostProfile,
    antenna,
    c_exp,
    c_segment,
    cost,
    cost_matrix,
    custom_profile,
    grad_x,
    hessian_xx,
    hessian_xy,
    mixed_determinant,
    original_antenna_cost,
    profile_by_name,
    quadratic,
    tabulated_profile,
)
from .potentials import (  # noqa: F401
    CConvexPotential,
    ContactSet,
    Subdifferential,
    c_transform,
    contact_set,
    critical_point_classifier,
    evaluate,
    read_potential,
    ridge_point,
    subdifferential,
    verify_subdiff_eq_csubdiff,
    write_potential,
)
from .transport import (  # noqa: F401
    DiscreteMeasure,
    MonotonicityReport,
    TransportMap,
    TransportPlan,
    check_c_monotone,
    extract_map,
    gradient_inclusion_margin,
    load_measure,
    load_plan,
    pushforward_check,
    save_measure,
    save_plan,
    solve_entropic,
    solve_exact,
)
from .diagnostics import (  # noqa: F401
    GrowthConditionReport,
    MassBoundReport,
    StayAwayReport,
    chart_coordinate_potential,
    growth_condition,
    hemisphere_infimum,
    holder_exponent,
    lemma_del_loep_check,
    ma_residual,
    mass_bound_check,
    pushforward_density,
    sigma_lower_bound,
    sphere_area,
    stay_away,
    uniform_density,
    volume_weights,
)
