"""Multi-cell cooperative downlink: exact conditional outage and Monte Carlo campaigns."""

__version__ = "0.1.0"

from .campaign import CampaignConfig, CampaignResult, optimize_radii, outage_curve, run_campaign, run_realization
from .channel import ChannelConfig, LinkTable, build_link_table
from .errors import (
    BracketFailure,
    ConfigError,
    DegenerateLink,
    FarFieldViolation,
    PlacementInfeasible,
    SingularEta,
)
from .outage import (
    OutageBatch,
    OutageProblem,
    appendix_integral_oracle,
    cdf_S,
    cdf_Z,
    invert_threshold,
    mc_outage_oracle,
    outage_probability,
    shannon_rate,
    xi_coefficient,
)
from .policy import Assignment, PolicyConfig
from .spatial import SpatialConfig, Topology, place_points
