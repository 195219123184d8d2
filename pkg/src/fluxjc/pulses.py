"""Drive envelopes, tones and multi-tone schedules.

Amplitudes are physical transmon-drive amplitudes in MHz (the coefficient
Omega such that the drive Hamiltonian is (Omega/2)(e^{-i(delta t + phi)}
sigma_plus + h.c.) after angular conversion).  The effective Rabi rate on a
dressed transition is |<u|sigma_plus|l>| * Omega.
"""

import json
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .calibration import CalibrationTable, Transition
from .hilbert import sigma_plus_element
from .units import mhz_to_rad_ns

# Gaussian pulses span [0, 4*sigma]; the tail value at +-2*sigma is subtracted
# so the envelope vanishes at both ends.
_GAUSS_CUT = math.exp(-2.0)

# Flat (J_x) tones get raised-cosine edges of this length; the plateau is
# scaled up so the integrated amplitude is unchanged.
_EDGE_NS = 2.0


@dataclass(frozen=True)
class Envelope:
    """Scalar drive envelope; `amplitude_mhz` is the peak, `phase` in rad."""

    kind: str  # gaussian | flat | cosine_ramp
    duration_ns: float
    amplitude_mhz: float
    phase: float = 0.0
    sigma_ns: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "flat", "cosine_ramp"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.duration_ns <= 0:
            raise ValueError("duration must be positive")
        if not np.isfinite(self.amplitude_mhz):
            raise ValueError("amplitude must be finite")
        if self.kind == "gaussian":
            if self.sigma_ns is None or self.sigma_ns <= 0:
                raise ValueError("gaussian envelope needs sigma > 0")
            if abs(self.duration_ns - 4.0 * self.sigma_ns) > 1e-9:
                raise ValueError("gaussian duration must equal 4*sigma")

    def shape(self, t):
        """Unit-peak envelope shape at local time t in [0, duration]."""
        t = np.asarray(t, dtype=float)
        inside = (t >= 0.0) & (t <= self.duration_ns)
        if self.kind == "gaussian":
            s = self.sigma_ns
            raw = np.exp(-((t - 2.0 * s) ** 2) / (2.0 * s * s))
            val = (raw - _GAUSS_CUT) / (1.0 - _GAUSS_CUT)
        elif self.kind == "flat":
            edge = min(_EDGE_NS, 0.25 * self.duration_ns)
            # plateau rescale keeps the integral at amplitude*duration
            scale = self.duration_ns / (self.duration_ns - edge)
            val = np.ones_like(t)
            rising = t < edge
            falling = t > self.duration_ns - edge
            val = np.where(rising, 0.5 * (1.0 - np.cos(np.pi * t / edge)), val)
            val = np.where(
                falling, 0.5 * (1.0 - np.cos(np.pi * (self.duration_ns - t) / edge)), val
            )
            val = scale * val
        else:  # cosine_ramp: half-cosine rise over the full duration
            val = 0.5 * (1.0 - np.cos(np.pi * t / self.duration_ns))
        return np.where(inside, val, 0.0)

    def value_mhz(self, t):
        return self.amplitude_mhz * self.shape(t)

    def integral_mhz_ns(self) -> float:
        """Integral of the envelope over its duration (MHz * ns), analytic."""
        if self.kind == "gaussian":
            s = self.sigma_ns
            raw = s * math.sqrt(2.0 * math.pi) * math.erf(math.sqrt(2.0))
            return self.amplitude_mhz * (raw - 4.0 * s * _GAUSS_CUT) / (1.0 - _GAUSS_CUT)
        if self.kind == "flat":
            return self.amplitude_mhz * self.duration_ns
        return self.amplitude_mhz * 0.5 * self.duration_ns


def gaussian_shape_integral_ns(sigma_ns: float) -> float:
    """Integral of the unit-peak offset-subtracted Gaussian shape, in ns."""
    raw = sigma_ns * math.sqrt(2.0 * math.pi) * math.erf(math.sqrt(2.0))
    return (raw - 4.0 * sigma_ns * _GAUSS_CUT) / (1.0 - _GAUSS_CUT)


@dataclass(frozen=True)
class Tone:
    """One drive tone: detuning relative to the cavity rotating frame plus envelope."""

    detuning_mhz: float
    envelope: Envelope
    target: Optional[Transition] = None
    max_detuning_mhz: float = 500.0

    def __post_init__(self):
        if abs(self.detuning_mhz) >= self.max_detuning_mhz:
            raise ValueError(
                f"|detuning| = {abs(self.detuning_mhz)} MHz exceeds sanity bound"
            )

    @property
    def duration_ns(self) -> float:
        return self.envelope.duration_ns


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered, possibly overlapping tones with absolute start times (ns)."""

    segments: Tuple[Tuple[float, Tone], ...] = ()
    total_duration_ns: float = 0.0

    def __post_init__(self):
        starts = [s for s, _ in self.segments]
        if any(b < a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start times must be non-decreasing")
        end = max((s + t.duration_ns for s, t in self.segments), default=0.0)
        if self.total_duration_ns + 1e-9 < end:
            raise ValueError("total_duration shorter than the last tone")

    @classmethod
    def from_tones(cls, tones: Sequence[Tuple[float, Tone]]) -> "PulseSchedule":
        tones = tuple(sorted(tones, key=lambda st: st[0]))
        end = max((s + t.duration_ns for s, t in tones), default=0.0)
        return cls(tones, end)

    def shifted(self, dt_ns: float) -> "PulseSchedule":
        return PulseSchedule(
            tuple((s + dt_ns, t) for s, t in self.segments),
            self.total_duration_ns + dt_ns,
        )

    def to_json(self) -> str:
        payload = {
            "total_duration_ns": self.total_duration_ns,
            "tones": [
                {
                    "start_ns": s,
                    "detuning_mhz": t.detuning_mhz,
                    "kind": t.envelope.kind,
                    "duration_ns": t.envelope.duration_ns,
                    "amplitude_mhz": t.envelope.amplitude_mhz,
                    "phase_rad": t.envelope.phase,
                    "sigma_ns": t.envelope.sigma_ns,
                    "target": str(t.target) if t.target else None,
                }
                for s, t in self.segments
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PulseSchedule":
        payload = json.loads(text)
        tones = []
        for d in payload["tones"]:
            env = Envelope(
                kind=d["kind"],
                duration_ns=d["duration_ns"],
                amplitude_mhz=d["amplitude_mhz"],
                phase=d["phase_rad"],
                sigma_ns=d["sigma_ns"],
            )
            target = Transition.parse(d["target"]) if d.get("target") else None
            tones.append((d["start_ns"], Tone(d["detuning_mhz"], env, target)))
        return cls(tuple(tones), payload["total_duration_ns"])


def sequence_concat(*schedules: PulseSchedule) -> PulseSchedule:
    """Time-shifted concatenation; total duration is the sum of the parts."""
    tones: List[Tuple[float, Tone]] = []
    offset = 0.0
    for sched in schedules:
        for s, t in sched.segments:
            tones.append((s + offset, t))
        offset += sched.total_duration_ns
    return PulseSchedule(tuple(sorted(tones, key=lambda st: st[0])), offset)


def gaussian_pulse(
    trans: Transition,
    table: CalibrationTable,
    omega_cav_ghz: float,
    angle: float,
    phase: float = 0.0,
    sigma_ns: Optional[float] = None,
) -> Tone:
    """Calibrated Gaussian tone with integrated Rabi angle `angle` on `trans`.

    The physical amplitude accounts for the dressed matrix element, so the
    rotation angle in the target two-level subspace equals `angle`.
    """
    if not (0.0 <= angle <= 2.0 * math.pi + 1e-12):
        raise ValueError("angle must lie in [0, 2*pi]")
    row = table.get(trans)
    sigma = sigma_ns if sigma_ns is not None else row.sigma_ns
    if sigma is None:
        raise ValueError(f"transition {trans} has no calibrated sigma; pass sigma_ns")
    m = abs(sigma_plus_element(trans.lower, trans.upper))
    shape_integral = gaussian_shape_integral_ns(sigma)
    # angle = m * integral(Omega_ang dt) = m * 2pi*1e-3 * amplitude_mhz * shape_integral
    amp = angle / (m * mhz_to_rad_ns(1.0) * shape_integral)
    env = Envelope("gaussian", 4.0 * sigma, amp, phase, sigma)
    return Tone(table.detuning_mhz(trans, omega_cav_ghz), env, trans)


def gaussian_pi_pulse(trans, table, omega_cav_ghz, angle=math.pi, phase=0.0):
    return gaussian_pulse(trans, table, omega_cav_ghz, angle, phase)


@dataclass(frozen=True)
class JxSpec:
    """Multi-tone spin-Jx drive over a chain of d dressed levels.

    chain entries are consecutive dressed labels; tone n (1 <= n < d) drives
    the chain's n-th transition with physical amplitude
    A_n = 2 * eta_n * amplitude * sqrt(n (d - n)).
    """

    chain: Tuple
    amplitude_mhz: float
    eta: Optional[Tuple[float, ...]] = None
    phases: Optional[Tuple[float, ...]] = None
    amplitudes_mhz: Optional[Tuple[complex, ...]] = None  # optional per-tone override
    detunings_mhz: Optional[Tuple[float, ...]] = None  # optional per-tone override
    reversed_: bool = False

    def __post_init__(self):
        if len(self.chain) < 2:
            raise ValueError("chain needs at least two levels")
        if self.amplitude_mhz <= 0:
            raise ValueError("overall amplitude must be positive")
        if self.eta is not None and any(e <= 0 for e in self.eta):
            raise ValueError("eta factors must be positive")

    @property
    def d(self) -> int:
        return len(self.chain)

    def transitions(self) -> List[Transition]:
        return [Transition(lo, hi) for lo, hi in zip(self.chain, self.chain[1:])]

    def reversed(self) -> "JxSpec":
        return replace(self, reversed_=not self.reversed_)


def default_eta(spec: JxSpec) -> Tuple[float, ...]:
    """Scale factors that calibrate out the dressed matrix elements.

    With eta_n = 1/(2 |m_n|) every tone contributes the same effective Jx
    matrix element; this is what a power-Rabi calibration of each link yields
    in this model (regular sidebands give 1, ground transitions 1/sqrt(2)).
    """
    out = []
    for tr in spec.transitions():
        m = abs(sigma_plus_element(tr.lower, tr.upper))
        out.append(1.0 / (2.0 * m))
    return tuple(out)


def jx_amplitudes_mhz(spec: JxSpec) -> List[complex]:
    """Per-tone complex physical amplitudes A_n (MHz)."""
    d = spec.d
    eta = spec.eta if spec.eta is not None else default_eta(spec)
    phases = spec.phases if spec.phases is not None else (0.0,) * (d - 1)
    if spec.amplitudes_mhz is not None:
        amps = [complex(a) for a in spec.amplitudes_mhz]
    else:
        amps = [
            2.0 * eta[n - 1] * spec.amplitude_mhz * math.sqrt(n * (d - n))
            * np.exp(1j * phases[n - 1])
            for n in range(1, d)
        ]
    if spec.reversed_:
        amps = [a.conjugate() for a in amps]
    return amps


def jx_duration_ns(spec: JxSpec) -> float:
    """Total Jx time pi/A (A converted from MHz to rad/ns)."""
    return math.pi / mhz_to_rad_ns(spec.amplitude_mhz)


def jx_detunings_mhz(spec: JxSpec, table: CalibrationTable,
                     omega_cav_ghz: float) -> List[float]:
    """Per-tone drive detunings (MHz), calibrated unless overridden."""
    if spec.detunings_mhz is not None:
        return [float(d) for d in spec.detunings_mhz]
    return [table.detuning_mhz(tr, omega_cav_ghz) for tr in spec.transitions()]


def jx_schedule(spec: JxSpec, table: CalibrationTable, omega_cav_ghz: float) -> PulseSchedule:
    """d-1 simultaneous flat tones implementing the Jx drive for time pi/A."""
    duration = jx_duration_ns(spec)
    amps = jx_amplitudes_mhz(spec)
    dets = jx_detunings_mhz(spec, table, omega_cav_ghz)
    tones = []
    for tr, a, det in zip(spec.transitions(), amps, dets):
        env = Envelope("flat", duration, abs(a), float(np.angle(a)))
        tones.append((0.0, Tone(det, env, tr)))
    return PulseSchedule(tuple(tones), duration)
