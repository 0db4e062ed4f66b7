"""Shared-spectrum mobile-cell link analysis toolkit.

Analytic success probabilities and ergodic rate for a vehicle-mounted
small cell whose downlink backhaul and in-vehicle access link share one
sub-channel, cross-validated by an independent Monte Carlo simulator.
"""

__version__ = "0.1.0"

from .params import SirThresholdGrid, SystemParams, validate  # noqa: F401
