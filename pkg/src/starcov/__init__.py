"""Covert-rate analysis and optimization for a STAR-RIS-aided RSMA downlink.

A mode-switching STAR-RIS splits its K elements into K_n reflecting elements
(serving the covert user Bob, and scrambling the warden Willie's radiometer)
and K_m transmitting elements (serving the public user Grace).  The package
provides:

* closed-form detection-error analysis at the warden, with a Monte Carlo
  oracle that validates it,
* closed-form transmit-power and common-rate allocation,
* penalty-based successive convex approximation over lifted phase-shift
  matrices, backed by a self-contained complex-Hermitian SDP solver,
* alternating-optimization drivers for the RSMA scheme and a NOMA benchmark,
  plus a sweep engine and CLI for reproducing the experiment grids.
"""

from .scenario import Scenario, PathLossSet, dbm_to_linear, path_loss, derive_path_losses
from .channel import ChannelRealization, CompositeGains, LiftedMatrices, sample_channels, composite_gains, build_lifted
from .rates import PowerAllocation, RateAllocation, NomaAllocation, RateReport, rsma_rates, noma_rates
from .covert import DetectionContext, CovertStats, dep, optimal_threshold, madep, madep_inverse, mc_min_dep
from .sdp import SdpProblem, SdpSolution, solve, real_embed
from .errors import Infeasible

__version__ = "0.1.0"

__all__ = [
    "Scenario", "PathLossSet", "dbm_to_linear", "path_loss", "derive_path_losses",
    "ChannelRealization", "CompositeGains", "LiftedMatrices", "sample_channels",
    "composite_gains", "build_lifted",
    "PowerAllocation", "RateAllocation", "NomaAllocation", "RateReport",
    "rsma_rates", "noma_rates",
    "DetectionContext", "CovertStats", "dep", "optimal_threshold", "madep",
    "madep_inverse", "mc_min_dep",
    "SdpProblem", "SdpSolution", "solve", "real_embed",
    "Infeasible",
]
