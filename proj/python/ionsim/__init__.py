"""Trapped-ion spin-oscillator simulator.

A single trapped ion (spin-1/2 tensored with a truncated harmonic oscillator)
driven by resonant laser pulses: native sideband interactions, compilation of
operator expressions into pulse programs via commutator gadgets, nonlinear
Mach-Zehnder interferometry on Fock states, and projection-noise/Allan-variance
phase metrology.
"""

from ionsim._core import *  # noqa: F401,F403
from ionsim._core import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
