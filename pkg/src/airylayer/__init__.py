"""
airylayer: semiclassical Airy-layer asymptotics of spectral Wigner functions.

Classical flow and midpoint geometry, fold (Airy) and non-degenerate
predictions, Herman-Kluk Wigner propagators, exact quantum references and
a batch harness that compares them.
"""

from __future__ import annotations

from .errors import *  # noqa: F401,F403
from .classical import *  # noqa: F401,F403
from .specfun import *  # noqa: F401,F403
from .midpoint import *  # noqa: F401,F403
from .airy_predictor import *  # noqa: F401,F403
from .quantum import *  # noqa: F401,F403
from .herman_kluk import *  # noqa: F401,F403
from .config import RunConfig, Query, load_config, parse_config, generate_queries  # noqa: F401

__version__ = "0.1.0"
