"""Closed-form flux-hardware models.

SQUID-tunable transmon spectrum and flux-noise sensitivity, the Bessel-J1
law for the parametrically activated coupling, and an ideal transmission-line
(ABCD) model of the on-chip stub filter.
"""

import math
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np


class FluxSingularityError(ZeroDivisionError):
    """Symmetric-SQUID sensitivity diverges where cos(phi_e) vanishes."""


@dataclass(frozen=True)
class SquidParams:
    """Asymmetric-SQUID transmon: charging energy, larger junction, ratio, flux.

    phi_e is the reduced flux pi * Phi_e / Phi_0.
    """

    e_c_ghz: float
    e_j1_ghz: float
    gamma: float
    phi_e: float = 0.0

    def __post_init__(self):
        if self.e_c_ghz <= 0 or self.e_j1_ghz <= 0:
            raise ValueError("energies must be positive")
        if self.gamma < 1.0:
            raise ValueError("gamma = E_J2/E_J1 must be >= 1 by convention")

    def at_flux(self, phi_e: float) -> "SquidParams":
        return replace(self, phi_e=phi_e)


def transmon_freq(params: SquidParams) -> float:
    """Transmon frequency in GHz at the given reduced flux.

    omega_T = sqrt(8 E_C E_J1 sqrt(gamma^2 + 2 gamma cos(2 phi_e) + 1)) - E_C.
    At gamma = 1 the inner root reduces to 2 E_J |cos phi_e|.
    """
    g = params.gamma
    root = math.sqrt(g * g + 2.0 * g * math.cos(2.0 * params.phi_e) + 1.0)
    return math.sqrt(8.0 * params.e_c_ghz * params.e_j1_ghz * root) - params.e_c_ghz


def flux_sensitivity(params: SquidParams) -> float:
    """d(omega_T)/d(Phi_e/Phi_0) in GHz per flux quantum.

    Analytic derivative of transmon_freq; vanishes at both sweet spots
    (phi_e = 0 and, for gamma > 1, phi_e = pi/2).  The symmetric SQUID has no
    upper sweet spot: the derivative diverges as cos(phi_e) -> 0.
    """
    g = params.gamma
    phi = params.phi_e
    r = g * g + 2.0 * g * math.cos(2.0 * phi) + 1.0
    if r <= 0 or (g == 1.0 and math.cos(phi) <= 1e-12):
        raise FluxSingularityError(
            "flux sensitivity is singular for a symmetric SQUID at phi_e = pi/2"
        )
    pref = math.sqrt(8.0 * params.e_c_ghz * params.e_j1_ghz)
    d_dphi = -pref * g * math.sin(2.0 * phi) / r ** 0.75
    return d_dphi * math.pi  # phi_e = pi * Phi/Phi_0


def fit_squid_params(f_min_ghz: float, f_max_ghz: float, e_c_ghz: float = 0.18
                     ) -> SquidParams:
    """Junction energy and asymmetry from the tuning-range endpoints.

    The maximum frequency sits at phi_e = 0 (inner root gamma + 1) and the
    minimum at phi_e = pi/2 (gamma - 1); with the charging energy fixed the
    endpoint ratio determines gamma and either endpoint then fixes E_J1.
    """
    if not 0 < f_min_ghz < f_max_ghz:
        raise ValueError("need 0 < f_min < f_max")
    hi = (f_max_ghz + e_c_ghz) ** 2
    lo = (f_min_ghz + e_c_ghz) ** 2
    ratio = hi / lo
    gamma = (ratio + 1.0) / (ratio - 1.0)
    e_j1 = hi / (8.0 * e_c_ghz * (gamma + 1.0))
    return SquidParams(e_c_ghz, e_j1, gamma)


# -- Bessel J1 ----------------------------------------------------------------


def bessel_j1(x: float) -> float:
    """First-kind Bessel function of order one.

    Ascending power series for moderate arguments, Hankel asymptotic
    expansion (adaptively truncated at its smallest term) beyond.
    """
    ax = abs(x)
    if ax < 14.0:
        return _j1_series(x)
    sign = 1.0 if x >= 0 else -1.0
    return sign * _j1_asymptotic(ax)


def _j1_series(x: float) -> float:
    # J1(x) = sum_k (-1)^k (x/2)^(2k+1) / (k! (k+1)!)
    h = 0.5 * x
    term = h
    total = term
    k = 0
    while True:
        k += 1
        term *= -(h * h) / (k * (k + 1))
        total += term
        if abs(term) < 1e-17 * (abs(total) + 1e-300):
            return total
        if k > 200:  # pragma: no cover - series always converges first
            return total


def _j1_asymptotic(x: float) -> float:
    # J1(x) ~ sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)], chi = x - 3 pi / 4,
    # with P, Q the even/odd Hankel coefficient sums a_k(mu=4) / x^k.
    mu = 4.0
    p = 1.0
    q = 0.0
    a = 1.0
    prev = math.inf
    for k in range(1, 40):
        a *= (mu - (2 * k - 1) ** 2) / (8.0 * k)
        term = a / x ** k
        if abs(term) > prev:  # asymptotic tail started growing: stop
            break
        prev = abs(term)
        if k % 2 == 1:
            q += term if (k // 2) % 2 == 0 else -term
        else:
            p += -term if (k // 2) % 2 == 1 else term
        if abs(term) < 1e-17:
            break
    chi = x - 0.75 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


# -- parametric coupling ------------------------------------------------------


@dataclass(frozen=True)
class ParametricModel:
    """Flux-pumped sideband coupling: static g, current scale nu, pump drive."""

    g_mhz: float
    nu_ua: float
    i_p_ua: float = 0.0
    l_phi0_per_ma: float = 0.0
    omega_m_mhz: float = 0.0
    omega_t_ghz: float = 0.0
    domega_dphi_ghz: float = 0.0

    def __post_init__(self):
        if self.nu_ua <= 0:
            raise ValueError("current scale nu must be positive")


def g_effective(model: ParametricModel) -> float:
    """Parametric coupling g * J1(I_p / nu), in MHz."""
    return model.g_mhz * bessel_j1(model.i_p_ua / model.nu_ua)


def inductance_from_nu(nu_ua: float, omega_m_mhz: float, domega_dphi_ghz: float
                       ) -> float:
    """Effective pump mutual inductance (Phi_0/mA) from the fitted scale nu.

    Inverts nu = (2 pi (domega_T/dphi_e) L / omega_m)^-1 with L in Phi_0/mA
    and nu in uA.
    """
    if nu_ua <= 0 or omega_m_mhz <= 0 or domega_dphi_ghz == 0:
        raise ValueError("nu, omega_m must be positive and domega/dphi nonzero")
    omega_m_ghz = 1e-3 * omega_m_mhz
    return omega_m_ghz / (2.0 * math.pi * abs(domega_dphi_ghz) * 1e-3 * nu_ua)


def nu_from_inductance(l_phi0_per_ma: float, omega_m_mhz: float,
                       domega_dphi_ghz: float) -> float:
    """Current scale nu (uA) implied by a pump mutual inductance."""
    if l_phi0_per_ma <= 0 or omega_m_mhz <= 0 or domega_dphi_ghz == 0:
        raise ValueError("L, omega_m must be positive and domega/dphi nonzero")
    omega_m_ghz = 1e-3 * omega_m_mhz
    return 1e3 * omega_m_ghz / (
        2.0 * math.pi * abs(domega_dphi_ghz) * l_phi0_per_ma
    )


# -- stub filter (ABCD model) -------------------------------------------------


@dataclass(frozen=True)
class FilterSection:
    """One ideal lossless element: a series line or a shunt stub."""

    topology: str  # "series-line" | "open-stub" | "short-stub"
    impedance_ohm: float
    length_rad: float  # electrical length at the reference frequency

    def __post_init__(self):
        if self.topology not in ("series-line", "open-stub", "short-stub"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.impedance_ohm <= 0:
            raise ValueError("impedance must be positive")


@dataclass(frozen=True)
class FilterNetwork:
    sections: Tuple[FilterSection, ...]
    reference_ghz: float = 1.0
    port_ohm: float = 50.0

    @classmethod
    def of(cls, sections: Sequence[FilterSection], reference_ghz: float = 1.0,
           port_ohm: float = 50.0) -> "FilterNetwork":
        return cls(tuple(sections), reference_ghz, port_ohm)


def _section_abcd(sec: FilterSection, theta: float) -> np.ndarray:
    z = sec.impedance_ohm
    if sec.topology == "series-line":
        return np.array(
            [[math.cos(theta), 1j * z * math.sin(theta)],
             [1j * math.sin(theta) / z, math.cos(theta)]],
            dtype=complex,
        )
    # shunt stub: input admittance of an open/shorted line
    if sec.topology == "open-stub":
        y = 1j * math.tan(theta) / z
    else:
        y = -1j / (z * math.tan(theta)) if math.tan(theta) != 0 else complex(np.inf)
    return np.array([[1.0, 0.0], [y, 1.0]], dtype=complex)


def filter_s21(network: FilterNetwork, freq_ghz: float) -> float:
    """|S21| in dB of the cascaded two-port between matched ports."""
    abcd = np.eye(2, dtype=complex)
    for sec in network.sections:
        theta = sec.length_rad * freq_ghz / network.reference_ghz
        abcd = abcd @ _section_abcd(sec, theta)
    a, b = abcd[0]
    c, d = abcd[1]
    z0 = network.port_ohm
    s21 = 2.0 / (a + b / z0 + c * z0 + d)
    mag = abs(s21)
    if mag == 0:
        return -math.inf
    return 20.0 * math.log10(mag)


def filter_s12(network: FilterNetwork, freq_ghz: float) -> float:
    """|S12| in dB; equals S21 for these reciprocal networks (det ABCD = 1)."""
    abcd = np.eye(2, dtype=complex)
    for sec in network.sections:
        theta = sec.length_rad * freq_ghz / network.reference_ghz
        abcd = abcd @ _section_abcd(sec, theta)
    a, b = abcd[0]
    c, d = abcd[1]
    z0 = network.port_ohm
    det = a * d - b * c
    s12 = 2.0 * det / (a + b / z0 + c * z0 + d)
    mag = abs(s12)
    if mag == 0:
        return -math.inf
    return 20.0 * math.log10(mag)


def chebyshev_stub_lowpass(cutoff_ghz: float = 1.0, g1: float = 1.5963,
                           g2: float = 1.0967, port_ohm: float = 50.0
                           ) -> FilterNetwork:
    """Third-order equal-ripple low-pass from open stubs and connecting lines.

    Richards transformation of the series-first prototype (L1 = g1, C2 = g2,
    L3 = g1) plus Kuroda shifts of matched end sections turns both series
    stubs into shunt open stubs: stub - line - stub - line - stub, all an
    eighth wave at cutoff.  The magnitude response is exactly the lumped
    Chebyshev one in the Richards variable tan(theta).  Defaults give the
    0.5 dB ripple design (g1 = g3 = 1.5963, g2 = 1.0967).
    """
    z_outer = port_ohm * (1.0 + g1) / g1
    z_line = port_ohm * (1.0 + g1)
    z_center = port_ohm / g2
    eighth = math.pi / 4.0
    sections = (
        FilterSection("open-stub", z_outer, eighth),
        FilterSection("series-line", z_line, eighth),
        FilterSection("open-stub", z_center, eighth),
        FilterSection("series-line", z_line, eighth),
        FilterSection("open-stub", z_outer, eighth),
    )
    return FilterNetwork(sections, reference_ghz=cutoff_ghz, port_ohm=port_ohm)


def device_filter(cutoff_ghz: float = 1.0, port_ohm: float = 50.0
                  ) -> FilterNetwork:
    """The on-chip filter's published impedance ladder (130 / 81 / 46 ohm).

    Those values coincide with the 0.5 dB ripple stub low-pass rounded to the
    ohm; electrical lengths are not published, so commensurate eighth-wave
    sections at the chosen cutoff are used.
    """
    eighth = math.pi / 4.0
    sections = (
        FilterSection("open-stub", 81.0, eighth),
        FilterSection("series-line", 130.0, eighth),
        FilterSection("open-stub", 46.0, eighth),
        FilterSection("series-line", 130.0, eighth),
        FilterSection("open-stub", 81.0, eighth),
    )
    return FilterNetwork(sections, reference_ghz=cutoff_ghz, port_ohm=port_ohm)


def sensitivity_curve(params: SquidParams, n_points: int = 101
                      ) -> List[Tuple[float, float, float]]:
    """(Phi/Phi_0, freq_GHz, sensitivity_GHz_per_Phi0) over half a flux period."""
    out = []
    for frac in np.linspace(0.0, 0.5, n_points):
        p = params.at_flux(math.pi * frac)
        try:
            sens = flux_sensitivity(p)
        except FluxSingularityError:
            sens = math.inf
        out.append((float(frac), transmon_freq(p), sens))
    return out
