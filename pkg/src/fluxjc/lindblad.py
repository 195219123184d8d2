"""Time-dependent driven JC evolution with dissipation.

The propagator is piecewise constant on the envelope sampling grid (default
1 ns, midpoint sampling).  Open-system steps use a Strang splitting of the
Liouvillian exponential: the (time-independent) dissipator half-step is a
precomputed matrix exponential, the Hamiltonian step is an exact unitary
conjugation.  Both factors are trace preserving, so the trace is conserved
to machine precision.  A full Liouvillian-exponential step is available as
`method="full"` for cross-checks.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .hilbert import OperatorSet, SpaceDims, SystemModel, adiabatic_map, jc_hamiltonian
from .pulses import PulseSchedule
from .units import mhz_to_rad_ns, us_to_ns


class IntegratorError(RuntimeError):
    pass


@dataclass(frozen=True)
class CollapseSet:
    """Scaled jump operators built from the model's decoherence times."""

    operators: tuple

    @classmethod
    def from_model(
        cls,
        ops: OperatorSet,
        model: SystemModel,
        cavity_loss: bool = True,
        transmon_loss: bool = True,
        dephasing: bool = True,
    ) -> "CollapseSet":
        out = []
        if cavity_loss:
            out.append(np.sqrt(1.0 / us_to_ns(model.t1_cav_us)) * ops.a)
        if transmon_loss:
            out.append(np.sqrt(1.0 / us_to_ns(model.t1_q_us)) * ops.sigma_minus)
        if dephasing:
            out.append(np.sqrt(1.0 / (2.0 * us_to_ns(model.t_phi_us))) * ops.sigma_z)
        return cls(tuple(out))

    @classmethod
    def none(cls) -> "CollapseSet":
        return cls(())

    def __bool__(self):
        return len(self.operators) > 0


@dataclass(frozen=True)
class RampSpec:
    """Detuning ramp Delta(t), MHz over ns."""

    delta_start_mhz: float
    delta_end_mhz: float
    duration_ns: float
    shape: str = "cosine"

    def __post_init__(self):
        if self.duration_ns < 0:
            raise ValueError("ramp duration must be >= 0")
        if self.shape not in ("cosine", "linear"):
            raise ValueError(f"unknown ramp shape {self.shape!r}")

    def delta_mhz(self, t):
        if self.duration_ns == 0:
            return np.full_like(np.asarray(t, dtype=float), self.delta_end_mhz)
        x = np.clip(np.asarray(t, dtype=float) / self.duration_ns, 0.0, 1.0)
        if self.shape == "linear":
            frac = x
        else:
            frac = 0.5 * (1.0 - np.cos(np.pi * x))
        return self.delta_start_mhz + (self.delta_end_mhz - self.delta_start_mhz) * frac


@dataclass(frozen=True)
class FluxModSpec:
    """Sinusoidal detuning (frequency) modulation about a parking detuning."""

    depth_mhz: float
    pump_freq_mhz: float
    parking_delta_mhz: float

    def __post_init__(self):
        if self.depth_mhz < 0 or self.pump_freq_mhz < 0:
            raise ValueError("amplitudes must be >= 0")


@dataclass
class Trajectory:
    times_ns: np.ndarray
    states: List[np.ndarray]  # density matrices (or |psi><psi| projections)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def populations(self, basis_vectors: Sequence[np.ndarray]) -> np.ndarray:
        out = np.empty((len(self.times_ns), len(basis_vectors)))
        for i, rho in enumerate(self.states):
            for j, v in enumerate(basis_vectors):
                out[i, j] = np.real(v.conj() @ rho @ v)
        return out

    def to_csv(self, labels: Sequence[str], basis_vectors: Sequence[np.ndarray]) -> str:
        pops = self.populations(basis_vectors)
        lines = ["time_ns," + ",".join(labels) + ",trace,purity"]
        for i, t in enumerate(self.times_ns):
            rho = self.states[i]
            tr = np.real(np.trace(rho))
            purity = np.real(np.trace(rho @ rho))
            row = [f"{t:.6g}"] + [f"{p:.12g}" for p in pops[i]] + [f"{tr:.12g}", f"{purity:.12g}"]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _check_physical(rho: np.ndarray):
    if np.max(np.abs(rho - rho.conj().T)) > 1e-9:
        raise IntegratorError("initial state is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-9:
        raise IntegratorError("initial state must have unit trace")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise IntegratorError("initial state is not positive")


def dissipator_superop(collapse: CollapseSet, dim: int) -> np.ndarray:
    """Liouvillian of the jump terms, acting on vec(rho) (column stacking)."""
    eye = np.eye(dim)
    L = np.zeros((dim * dim, dim * dim), dtype=complex)
    for c in collapse.operators:
        cdc = c.conj().T @ c
        L += np.kron(c.conj(), c)
        L -= 0.5 * np.kron(eye, cdc)
        L -= 0.5 * np.kron(cdc.T, eye)
    return L


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    dim = h.shape[0]
    eye = np.eye(dim)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def drive_hamiltonian(schedule: PulseSchedule, ops: OperatorSet, t_ns: float) -> np.ndarray:
    """Sum of active tone terms (Omega/2)(e^{-i(delta t + phi)} sp + h.c.) at time t."""
    h = np.zeros_like(ops.identity)
    for start, tone in schedule.segments:
        tl = t_ns - start
        if tl < 0.0 or tl > tone.duration_ns:
            continue
        amp = mhz_to_rad_ns(tone.envelope.value_mhz(tl))
        if amp == 0.0:
            continue
        delta = mhz_to_rad_ns(tone.detuning_mhz)
        phase = np.exp(-1j * (delta * t_ns + tone.envelope.phase))
        h = h + (0.5 * amp) * (phase * ops.sigma_plus + np.conj(phase) * ops.sigma_minus)
    return h


def evolve(
    rho0: np.ndarray,
    schedule: PulseSchedule,
    model: SystemModel,
    ops: OperatorSet,
    *,
    ramp: Optional[RampSpec] = None,
    open_system: bool = True,
    collapse: Optional[CollapseSet] = None,
    h0: Optional[np.ndarray] = None,
    dt_ns: float = 1.0,
    duration_ns: Optional[float] = None,
    record_every: int = 0,
    method: str = "splitting",
) -> Trajectory:
    """Propagate a density matrix through a pulse schedule.

    h0 overrides the static part of the Hamiltonian (rad/ns); by default it is
    the ideal JC Hamiltonian at the model detuning.  If `ramp` is given the
    static part follows jc_hamiltonian(g, Delta(t)) instead.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = np.outer(rho0, rho0.conj())
    _check_physical(rho0)

    if collapse is None:
        collapse = CollapseSet.from_model(ops, model) if open_system else CollapseSet.none()
    if not open_system:
        collapse = CollapseSet.none()
    dim = ops.identity.shape[0]

    total = duration_ns if duration_ns is not None else schedule.total_duration_ns
    if ramp is not None:
        total = max(total, ramp.duration_ns)
    n_steps = max(1, int(np.ceil(total / dt_ns - 1e-9))) if total > 0 else 0

    if h0 is None and ramp is None:
        h0 = jc_hamiltonian(ops, model.g_mhz, model.delta_mhz)

    dissipative = bool(collapse)
    if dissipative:
        ld = dissipator_superop(collapse, dim)
        if method == "splitting":
            e_half = expm(ld * (0.5 * dt_ns))

    times = [0.0]
    states = [rho0.copy()]
    rho = rho0.copy()
    for k in range(n_steps):
        t0 = k * dt_ns
        t1 = min((k + 1) * dt_ns, total)
        step = t1 - t0
        tm = 0.5 * (t0 + t1)
        if ramp is not None:
            hk = jc_hamiltonian(ops, model.g_mhz, float(ramp.delta_mhz(tm)))
        else:
            hk = h0
        hk = hk + drive_hamiltonian(schedule, ops, tm)
        if not dissipative:
            u = expm(-1j * hk * step)
            rho = u @ rho @ u.conj().T
        elif method == "splitting":
            if step != dt_ns:
                eh = expm(ld * (0.5 * step))
            else:
                eh = e_half
            v = eh @ rho.reshape(-1, order="F")
            rho = v.reshape(dim, dim, order="F")
            u = expm(-1j * hk * step)
            rho = u @ rho @ u.conj().T
            v = eh @ rho.reshape(-1, order="F")
            rho = v.reshape(dim, dim, order="F")
        elif method == "full":
            prop = expm((hamiltonian_superop(hk) + ld) * step)
            v = prop @ rho.reshape(-1, order="F")
            rho = v.reshape(dim, dim, order="F")
        else:
            raise ValueError(f"unknown method {method!r}")
        if record_every and ((k + 1) % record_every == 0 or k == n_steps - 1):
            times.append(t1)
            states.append(rho.copy())

    if not record_every:
        times.append(total)
        states.append(rho)
    tr = np.real(np.trace(rho))
    if abs(tr - 1.0) > 1e-6:
        raise IntegratorError(f"trace drifted to {tr}; step size too coarse")
    return Trajectory(np.asarray(times), states)


def evolve_unitary(
    schedule: PulseSchedule,
    model: SystemModel,
    ops: OperatorSet,
    *,
    h0: Optional[np.ndarray] = None,
    ramp: Optional[RampSpec] = None,
    dt_ns: float = 1.0,
    duration_ns: Optional[float] = None,
) -> np.ndarray:
    """Total closed-system propagator of the schedule (product of step unitaries)."""
    dim = ops.identity.shape[0]
    total = duration_ns if duration_ns is not None else schedule.total_duration_ns
    if ramp is not None:
        total = max(total, ramp.duration_ns)
    if h0 is None and ramp is None:
        h0 = jc_hamiltonian(ops, model.g_mhz, model.delta_mhz)
    n_steps = max(1, int(np.ceil(total / dt_ns - 1e-9))) if total > 0 else 0
    u_total = np.eye(dim, dtype=complex)
    for k in range(n_steps):
        t0 = k * dt_ns
        t1 = min((k + 1) * dt_ns, total)
        tm = 0.5 * (t0 + t1)
        if ramp is not None:
            hk = jc_hamiltonian(ops, model.g_mhz, float(ramp.delta_mhz(tm)))
        else:
            hk = h0
        hk = hk + drive_hamiltonian(schedule, ops, tm)
        u_total = expm(-1j * hk * (t1 - t0)) @ u_total
    return u_total


def adiabatic_detune(
    rho: np.ndarray,
    ramp: RampSpec,
    model: SystemModel,
    ops: OperatorSet,
    mode: str = "ideal",
    open_system: bool = False,
    dt_ns: float = 1.0,
) -> np.ndarray:
    """Map the resonant frame to the detuned product frame.

    ideal: instantaneous change of basis |N+> -> |N,g>, |N-> -> |N-1,e>.
    simulated: integrate the ramp Delta(t).
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if mode == "ideal":
        u = adiabatic_map(ops.dims, "undress")
        return u @ rho @ u.conj().T
    if mode != "simulated":
        raise ValueError(f"mode must be 'ideal' or 'simulated', got {mode!r}")
    empty = PulseSchedule()
    traj = evolve(
        rho, empty, model, ops,
        ramp=ramp, open_system=open_system, dt_ns=dt_ns, duration_ns=ramp.duration_ns,
    )
    return traj.final


@dataclass
class ChevronResult:
    pump_freqs_mhz: np.ndarray
    times_ns: np.ndarray
    exchange_map: np.ndarray  # P(|1,g>) indexed [pump_freq, time]
    g_eff_mhz: Optional[float]


def parametric_chevron(
    spec: FluxModSpec,
    model: SystemModel,
    ops: OperatorSet,
    pump_freqs_mhz: Sequence[float],
    max_duration_ns: float,
    dt_ns: float = 0.5,
    fit_resonant: bool = True,
) -> ChevronResult:
    """Excitation exchange under Delta(t) = Delta0 + depth cos(2 pi f_m t).

    Starts from |0,e>; records the |1,g> population.  At the resonant pump
    (f_m = Delta0) the oscillation period pi/g_eff yields the fitted g_eff.
    """
    if spec.parking_delta_mhz <= 0:
        raise ValueError("parking detuning must be positive")
    dims = ops.dims
    psi0 = np.zeros(dims.dim, dtype=complex)
    psi0[dims.index(0, 1)] = 1.0
    tgt = np.zeros(dims.dim, dtype=complex)
    tgt[dims.index(1, 0)] = 1.0

    n_steps = int(np.ceil(max_duration_ns / dt_ns))
    times = np.arange(n_steps + 1) * dt_ns
    pump_freqs_mhz = np.asarray(pump_freqs_mhz, dtype=float)
    pmap = np.empty((len(pump_freqs_mhz), n_steps + 1))
    for i, fm in enumerate(pump_freqs_mhz):
        psi = psi0.copy()
        pmap[i, 0] = abs(tgt.conj() @ psi) ** 2
        wm = mhz_to_rad_ns(fm)
        for k in range(n_steps):
            tm = (k + 0.5) * dt_ns
            delta = spec.parking_delta_mhz + spec.depth_mhz * np.cos(wm * tm)
            hk = jc_hamiltonian(ops, model.g_mhz, delta)
            psi = expm(-1j * hk * dt_ns) @ psi
            pmap[i, k + 1] = abs(tgt.conj() @ psi) ** 2

    g_eff = None
    if fit_resonant:
        i_res = int(np.argmin(np.abs(pump_freqs_mhz - spec.parking_delta_mhz)))
        g_eff = fit_exchange_geff_mhz(times, pmap[i_res])
    return ChevronResult(pump_freqs_mhz, times, pmap, g_eff)


def fit_exchange_geff_mhz(times_ns: np.ndarray, population: np.ndarray) -> float:
    """Cosine-fit oracle: P(t) = a(1 - cos(2 g_eff t))/2 + c -> g_eff in MHz."""
    from scipy.optimize import curve_fit

    p = np.asarray(population, dtype=float)
    # frequency seed from the dominant FFT bin
    q = p - p.mean()
    freqs = np.fft.rfftfreq(len(times_ns), times_ns[1] - times_ns[0])
    k = 1 + int(np.argmax(np.abs(np.fft.rfft(q))[1:]))
    f0 = max(freqs[k], freqs[1] * 0.5)

    def fmodel(t, amp, f, c):
        return amp * (1.0 - np.cos(2.0 * np.pi * f * t)) / 2.0 + c

    if np.ptp(p) < 1e-6:
        return 0.0
    popt, _ = curve_fit(fmodel, times_ns, p, p0=[np.ptp(p), f0, p.min()], maxfev=20000)
    f_osc_per_ns = abs(popt[1])
    # oscillation angular frequency = 2 g_eff  =>  g_eff = pi * f_osc
    return np.pi * f_osc_per_ns / mhz_to_rad_ns(1.0)
