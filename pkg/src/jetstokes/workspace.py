"""Shared per-configuration caches.

A Workspace owns the radial tables plus every factorization and operator
block derived from one DomainConfig: LU factors of the per-mode elliptic
operators and the assembled constrained-mode operators. All caches are
filled lazily and never invalidated (configs are frozen).
"""

from .discretization import tables_for


class Workspace:
    """Container tying a DomainConfig to its derived numerical objects."""

    def __init__(self, config):
        self.config = config
        self.tables = tables_for(config)
        # (|n|, |m|) -> RadialOperator, filled by modesolve.radial_operator
        self.radial_ops = {}
        # n >= 0 -> ModeOperator, filled by stokesop.mode_operator
        self.mode_ops = {}
