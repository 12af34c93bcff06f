"""Graph and text prompt tuning against frozen encoders.

Thin wrapper over the C++ core; matrices come back as numpy arrays.
"""

from ._morpher import *  # noqa: F401,F403
from ._morpher import __doc__  # noqa: F401

__version__ = "0.1.0"
