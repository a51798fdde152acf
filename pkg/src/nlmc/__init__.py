"""Invariant checking of nonlinear real transition systems by incremental
reduction to linear arithmetic with uninterpreted functions."""

import sys as _sys

__version__ = "0.1.0"

# Exact rational model values can legitimately grow thousands of digits
# during refinement (continued-fraction-like convergence toward irrational
# witnesses); the CPython int<->str conversion guard would abort mid-run.
if hasattr(_sys, "set_int_max_str_digits"):
    if _sys.get_int_max_str_digits() < 1_000_000:
        _sys.set_int_max_str_digits(1_000_000)
