"""Truncated cavity (x) transmon Hilbert space and resonant JC structure.

Basis ordering is cavity-major: index(n, s) = 2*n + s with s = 0 for the
transmon ground state |g> and s = 1 for |e>.  The transmon is exactly
two-level.  All operators are dense complex matrices.
"""

from dataclasses import dataclass, field

import numpy as np

from .units import mhz_to_rad_ns


class InvalidDimsError(ValueError):
    pass


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceDims:
    """Truncation of the joint space: cavity_levels Fock states x 2 transmon levels."""

    cavity_levels: int
    transmon_levels: int = 2

    def __post_init__(self):
        if self.cavity_levels < 2:
            raise InvalidDimsError(f"cavity_levels must be >= 2, got {self.cavity_levels}")
        if self.transmon_levels != 2:
            raise InvalidDimsError("transmon is modeled as exactly two-level")

    @property
    def dim(self) -> int:
        return 2 * self.cavity_levels

    def index(self, n: int, s: int) -> int:
        if not (0 <= n < self.cavity_levels and s in (0, 1)):
            raise TruncationError(f"|{n},{'ge'[s] if s in (0, 1) else s}> outside truncation")
        return 2 * n + s


@dataclass(frozen=True)
class DressedLabel:
    """Eigenstate label |N+>, |N-> of the resonant JC Hamiltonian; N=0 is |0>.

    sign is +1 / -1 for the excited doublets and 0 for the unique ground state.
    """

    n: int
    sign: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("manifold index must be >= 0")
        if self.n == 0 and self.sign != 0:
            raise ValueError("ground state carries no sign")
        if self.n > 0 and self.sign not in (+1, -1):
            raise ValueError("excited manifolds need sign +1 or -1")

    @classmethod
    def parse(cls, text: str) -> "DressedLabel":
        text = text.strip()
        if text in ("0", "g", "0g"):
            return cls(0, 0)
        if text.endswith("+"):
            return cls(int(text[:-1]), +1)
        if text.endswith("-"):
            return cls(int(text[:-1]), -1)
        raise ValueError(f"cannot parse dressed label {text!r}")

    def __str__(self):
        if self.n == 0:
            return "0"
        return f"{self.n}{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class SystemModel:
    """Physical parameters of the device model.

    Frequencies are linear (MHz / GHz), times in us except the ns-scale
    tomography parameters.
    """

    g_mhz: float = 12.2
    delta_mhz: float = 0.0
    omega_cav_ghz: float = 6.868
    chi_mhz: float = 1.62
    t1_cav_us: float = 500.0
    t1_q_us: float = 15.0
    t2_q_us: float = 2.7
    parity_map_time_ns: float = 272.0
    pi2_sigma_ns: float = 8.0

    def __post_init__(self):
        for name in ("g_mhz", "t1_cav_us", "t1_q_us", "t2_q_us", "parity_map_time_ns"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.t2_q_us >= 2.0 * self.t1_q_us:
            raise ValueError("T2 must satisfy T2 < 2*T1 for a positive pure-dephasing time")

    @property
    def t_phi_us(self) -> float:
        return 1.0 / (1.0 / self.t2_q_us - 1.0 / (2.0 * self.t1_q_us))


@dataclass(frozen=True)
class OperatorSet:
    """Dense operators on the joint space; cavity ops act as identity on the transmon factor."""

    dims: SpaceDims
    a: np.ndarray = field(repr=False)
    a_dag: np.ndarray = field(repr=False)
    sigma_minus: np.ndarray = field(repr=False)
    sigma_plus: np.ndarray = field(repr=False)
    sigma_z: np.ndarray = field(repr=False)
    n_cav: np.ndarray = field(repr=False)
    identity: np.ndarray = field(repr=False)


def build_operators(dims: SpaceDims) -> OperatorSet:
    """Tensor-product ladder and Pauli operators for the truncated space."""
    dc = dims.cavity_levels
    a_c = np.diag(np.sqrt(np.arange(1, dc)), 1).astype(complex)
    i_c = np.eye(dc, dtype=complex)
    i_t = np.eye(2, dtype=complex)
    sm_t = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
    sz_t = np.array([[1, 0], [0, -1]], dtype=complex)  # |g><g| - |e><e|

    a = np.kron(a_c, i_t)
    sm = np.kron(i_c, sm_t)
    ops = OperatorSet(
        dims=dims,
        a=a,
        a_dag=a.conj().T,
        sigma_minus=sm,
        sigma_plus=sm.conj().T,
        sigma_z=np.kron(i_c, sz_t),
        n_cav=np.kron(a_c.conj().T @ a_c, i_t),
        identity=np.eye(dims.dim, dtype=complex),
    )
    for m in (ops.a, ops.a_dag, ops.sigma_minus, ops.sigma_plus, ops.sigma_z, ops.n_cav, ops.identity):
        m.flags.writeable = False
    return ops


def jc_hamiltonian(ops: OperatorSet, g_mhz: float, delta_mhz: float = 0.0) -> np.ndarray:
    """Resonant-frame JC Hamiltonian, in rad/ns.

    H = -2*pi*Delta sp sm + 2*pi*g (a^dag sm + a sp); positive Delta lowers
    the |e> branch.
    """
    if g_mhz <= 0:
        raise ValueError("coupling must be positive")
    g = mhz_to_rad_ns(g_mhz)
    d = mhz_to_rad_ns(delta_mhz)
    return (-d) * (ops.sigma_plus @ ops.sigma_minus) + g * (
        ops.a_dag @ ops.sigma_minus + ops.a @ ops.sigma_plus
    )


def dressed_state(dims: SpaceDims, label: DressedLabel) -> np.ndarray:
    """|N+-> = (|N,g> +- |N-1,e>)/sqrt(2); |0> = |0,g>."""
    if label.n >= dims.cavity_levels:
        raise TruncationError(f"|{label}> outside truncation D_c={dims.cavity_levels}")
    psi = np.zeros(dims.dim, dtype=complex)
    if label.n == 0:
        psi[dims.index(0, 0)] = 1.0
        return psi
    psi[dims.index(label.n, 0)] = 1.0 / np.sqrt(2.0)
    psi[dims.index(label.n - 1, 1)] = label.sign / np.sqrt(2.0)
    return psi


def dressed_energy_mhz(label: DressedLabel, g_mhz: float) -> float:
    """Ideal eigenfrequency +-sqrt(N) g of |N+->, in MHz relative to the rotating frame."""
    if label.n == 0:
        return 0.0
    return label.sign * np.sqrt(label.n) * g_mhz


def sideband_frequency(n: int, color: str, g_mhz: float) -> float:
    """JC sideband frequency in MHz relative to the rotating frame at omega_cav.

    red:  |N+> <-> |(N+1)->  at -(sqrt(N+1)+sqrt(N)) g
    blue: |N-> <-> |(N+1)+>  at +(sqrt(N+1)+sqrt(N)) g
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    mag = (np.sqrt(n + 1) + np.sqrt(n)) * g_mhz
    if color == "red":
        return -mag
    if color == "blue":
        return +mag
    raise ValueError(f"color must be 'red' or 'blue', got {color!r}")


def transition_frequency_mhz(lower: DressedLabel, upper: DressedLabel, g_mhz: float) -> float:
    """Ideal drive frequency (rotating frame, MHz) for |lower> <-> |upper>, with upper = lower + 1 excitation."""
    if upper.n != lower.n + 1:
        raise ValueError("transition must raise the excitation number by one")
    return dressed_energy_mhz(upper, g_mhz) - dressed_energy_mhz(lower, g_mhz)


def sigma_plus_element(lower: DressedLabel, upper: DressedLabel) -> float:
    """<upper|sigma_plus|lower> for a single-excitation dressed transition.

    Ground transitions |0> -> |1+-> have magnitude 1/sqrt(2); all other
    |N+-> -> |(N+1)+-> transitions have magnitude 1/2.  The sign follows the
    upper state's branch.
    """
    if upper.n != lower.n + 1:
        raise ValueError("transition must raise the excitation number by one")
    if lower.n == 0:
        return upper.sign / np.sqrt(2.0)
    return upper.sign * 0.5


def adiabatic_map(dims: SpaceDims, direction: str = "undress") -> np.ndarray:
    """Unitary implementing the ideal adiabatic detuning.

    undress: |N+> -> |N,g>, |N-> -> |N-1,e>, |0> -> |0,g>.  The stranded top
    state |D_c-1, e> is mapped to itself.  dress is the inverse.
    """
    u = np.zeros((dims.dim, dims.dim), dtype=complex)
    e0 = np.zeros(dims.dim)
    e0[dims.index(0, 0)] = 1.0
    u += np.outer(e0, dressed_state(dims, DressedLabel(0, 0)).conj())
    for n in range(1, dims.cavity_levels):
        for sign, (tn, ts) in ((+1, (n, 0)), (-1, (n - 1, 1))):
            tgt = np.zeros(dims.dim)
            tgt[dims.index(tn, ts)] = 1.0
            u += np.outer(tgt, dressed_state(dims, DressedLabel(n, sign)).conj())
    top = dims.index(dims.cavity_levels - 1, 1)
    u[top, top] = 1.0
    if direction == "undress":
        return u
    if direction == "dress":
        return u.conj().T
    raise ValueError(f"direction must be 'dress' or 'undress', got {direction!r}")
