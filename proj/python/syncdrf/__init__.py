"""Python front end for the syncdrf analyzer.

Functions take program source text. JSON results are returned as dicts.
"""

import json

from . import _core
from ._core import EngineError, PreconditionError, generate_race_free_program

__all__ = [
    "EngineError",
    "PreconditionError",
    "analyze",
    "dot",
    "generate_race_free_program",
    "metacheck",
    "print_program",
    "races",
]


def analyze(source, analysis="rel", domain="octagon", recency=False, regions=None,
            owned="oracle", depth=12, havoc=(0, 1, 2)):
    """Run the analysis and check assertions. Returns the report as a dict."""
    return json.loads(_core.analyze(source, analysis, domain, recency, regions, owned,
                                    depth, list(havoc), "json"))


def races(source, depth=12, havoc=(0, 1, 2), regions=None):
    return json.loads(_core.races(source, depth, list(havoc), regions))


def metacheck(source, depth=12, havoc=(0, 1, 2), samples=200, seed=1, regions=None):
    return json.loads(_core.metacheck(source, depth, list(havoc), samples, seed, regions))


def print_program(source):
    return _core.print_program(source)


def dot(source):
    return _core.dot(source)
