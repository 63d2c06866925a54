import numpy as np
import pytest

from starcov.covert import DetectionContext
from starcov.scenario import Scenario, derive_path_losses


@pytest.fixture(scope="session")
def default_scenario():
    """Baseline experiment setup shared across the suites."""
    return Scenario()


@pytest.fixture(scope="session")
def madep_scenario():
    """Detection-analysis setup: 40 reflecting elements, 25 dBm."""
    return Scenario(k_n=40, k_m=24, pt_dbm=25.0)


def base_context(scenario, reflection_enabled=True, h_aw2=None):
    losses = derive_path_losses(scenario)
    lam_n = losses.lambda_n if reflection_enabled else 0.0
    return DetectionContext(
        delta1=scenario.pt / losses.l_aw,
        delta2=scenario.pt / losses.l_aw,
        phi=losses.phi,
        lambda_n=lam_n,
        lambda_aw=scenario.lambda_aw,
        sigma2_w=scenario.sigma2_w,
        h_aw2=h_aw2,
    )


def conditional_context(ctx, cover_fraction, h_aw2=None):
    """Context at a given cover-power fraction a0+a2 (full-power hypothesis fixed)."""
    return DetectionContext(
        delta1=ctx.delta2 * cover_fraction,
        delta2=ctx.delta2,
        phi=ctx.phi,
        lambda_n=ctx.lambda_n,
        lambda_aw=ctx.lambda_aw,
        sigma2_w=ctx.sigma2_w,
        h_aw2=h_aw2,
    )
