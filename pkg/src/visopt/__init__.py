"""Visibility structure, visibility metrics and their derivatives, and Norcent optimization."""

from .critical import (
    CriticalStructure,
    InflectionSegment,
    PartitionFace,
    SegmentKind,
    build_partition,
    critical_structure,
    inflection_segments,
    locate,
    segment_bound,
)
from .errors import *  # noqa: F401,F403
from .geometry import (
    Environment,
    FreeSpace,
    Polygon,
    ProjectedRay,
    ReflexVertexInfo,
    build_free_space,
    first_contact,
    point_in_free_space,
    project_ray,
    project_rotated_ray,
    ray_bundle,
    segment_in_free_space,
)
from .gradients import (
    DirectionalDerivative,
    GeneralizedGradient,
    c_fraction,
    cone_direction,
    dd_area,
    dd_metric,
    fd_oracle,
    generalized_gradient,
    gradient_grid,
    mu_dd,
)
from .metrics import (
    MetricConfig,
    Pose,
    disk_symdiff_formula,
    evaluate,
    lipschitz_estimate,
    metric_V,
    metric_V_area,
    metric_V_fov,
    metric_V_range,
    sym_diff_area,
)
from .norcent import (
    AugmentedObjective,
    NorcentConfig,
    NorcentRun,
    compass_test,
    project_to_domain,
    run_multistart,
    run_norcent,
    runs_to_csv,
)
from .render import render_scene
from .scenario import Scenario, load_scenario, scenario_from_dict
from .visibility import (
    Anchor,
    AnchorSet,
    Orientation,
    VisibilityRegion,
    anchors,
    visibility_polygon,
    visibility_region,
    visible_vertices,
)
