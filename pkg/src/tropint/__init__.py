"""Tropical limit toolkit for plane curve periods.

Submodules:
    puiseux    truncated convergent Puiseux series arithmetic and root lifting
    plpoly     bivariate polynomials over the series field, tropicalization data
    tropcurve  tropical plane curves, thickness/multiplicity, level functions
    periods    metric graphs, cycle bases, tropical period matrices
    numverify  numeric period computation on the complex curve at small eps
    render     matplotlib figure output
    cli        command line entry point
"""

__version__ = "0.1.0"
