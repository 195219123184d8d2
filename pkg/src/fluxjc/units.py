"""Unit conversions.

Config files and public APIs use GHz / MHz / ns / us.  Internal dynamics
run in angular frequency (rad/ns); these helpers are the single boundary
where the 2*pi and scale factors enter.
"""

import numpy as np

TWO_PI = 2.0 * np.pi


def mhz_to_rad_ns(f_mhz):
    """Linear frequency in MHz -> angular frequency in rad/ns."""
    return TWO_PI * 1e-3 * np.asarray(f_mhz, dtype=float)


def rad_ns_to_mhz(w):
    return np.asarray(w, dtype=float) / (TWO_PI * 1e-3)


def ghz_to_mhz(f_ghz):
    return 1e3 * np.asarray(f_ghz, dtype=float)


def us_to_ns(t_us):
    return 1e3 * np.asarray(t_us, dtype=float)
