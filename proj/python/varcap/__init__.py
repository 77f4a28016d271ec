"""Robust aggregated VAR capability curves for unbalanced distribution feeders.

Thin wrapper over the compiled extension; see the ``varcap`` CLI for the
batch workflow (fit-errors, sweep, validate, pf, plot).
"""

from ._varcap import *  # noqa: F401,F403
from ._varcap import __version__  # noqa: F401
