"""Numerical laboratory for Sturmian CMV matrices and Gordon-type eigenvalue exclusion."""

__version__ = "0.1.0"

from .cmv import CmvOperator, VerblunskySequence  # noqa: E402
from .contfrac import Frequency, cf_expand, convergents  # noqa: E402
from .errors import CmvlabError  # noqa: E402
from .gordon import (  # noqa: E402
    check_three_block,
    check_two_block,
    eigenvalue_excluder,
    gordon_sequence_test,
    rotcode_phase_measure,
)
from .tracemap import TraceSetup, bounded_orbit_test, spectrum_scan, trace_orbit  # noqa: E402
from .transfer import gz_cocycle, szego_cocycle  # noqa: E402
from .words import RotationInterval, Word, mechanical_word, sturmian_word, substitution_word  # noqa: E402

__all__ = [
    "CmvOperator", "VerblunskySequence", "Frequency", "cf_expand", "convergents", "CmvlabError",
    "check_two_block", "check_three_block", "eigenvalue_excluder", "gordon_sequence_test",
    "rotcode_phase_measure", "TraceSetup", "bounded_orbit_test", "spectrum_scan", "trace_orbit",
    "gz_cocycle", "szego_cocycle", "RotationInterval", "Word", "mechanical_word", "sturmian_word",
    "substitution_word",
]
