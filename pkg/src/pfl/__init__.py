"""PFL: a probabilistic functional language with exact interval semantics."""
from .interval import BOTTOM, RationalInterval
from .lang import parse, pretty, typecheck
from .machine import Outcome, run_trace
from .valuation import EventPair, SimpleValuation, pushforward_exhaustive

__all__ = [
    "BOTTOM", "RationalInterval", "parse", "pretty", "typecheck",
    "Outcome", "run_trace", "EventPair", "SimpleValuation", "pushforward_exhaustive",
]
__version__ = "0.1.0"
