"""ncflab: a desk-scale numerical laboratory for noncommutative Fourier
summability.

Subpackages cover the finite trace-algebra core (:mod:`ncflab.ncmat`),
rational-angle quantum tori (:mod:`ncflab.qtorus`), operator-valued grids
and Fourier multipliers (:mod:`ncflab.optorus`), the microlocal multiplier
decomposition and its geometric audits (:mod:`ncflab.multilab`),
directional/Kakeya averages (:mod:`ncflab.kakeya`), noncommutative
square/maximal norms (:mod:`ncflab.sqmax`), and the analytic interpolation
constant (:mod:`ncflab.interp`).  The ``ncflab`` command line drives the
experiments; see :mod:`ncflab.cli`.
"""

__version__ = "0.1.0"
