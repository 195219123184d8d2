"""Command-line runner: configuration, deterministic seeding and file output.

Every subcommand reads a flat ``key = value`` config (dotted section names;
a JSON mirror with nested objects is also accepted), runs one protocol
end-to-end, and writes CSV/JSON artifacts plus a ``summary.json`` listing
every emitted file with its SHA-256 content hash and the result of any
``--check`` tolerance tests.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 tolerance miss
(only with ``--check``).

Randomness: one 64-bit seed; each stage draws from
``numpy.random.SeedSequence([seed, STAGE_IDS[stage]])`` so adding a stage
never perturbs another stage's stream.
"""

import argparse
import hashlib
import json
import math
import os
import sys

STAGE_IDS = {
    "prepare": 1,
    "multitone": 2,
    "givens": 3,
    "calibrate": 4,
    "tomography": 5,
    "reconstruct": 6,
    "error-budget": 7,
    "hardware": 8,
    "parametric": 9,
    "spectrum": 10,
}

_THREAD_ENV = "FLUXJC_THREADS"


class ConfigError(ValueError):
    pass


class CheckFailure(Exception):
    """A --check tolerance was missed; carries the summary for reporting."""


def _coerce(text):
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def _flatten(obj, prefix=""):
    out = {}
    for key, val in obj.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, name + "."))
        else:
            out[name] = val
    return out


def parse_config(path):
    """Flat key = value text, or a JSON mirror (flattened with dots)."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.endswith(".json"):
        try:
            return _flatten(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    cfg = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        cfg[key.strip()] = _coerce(val)
    return cfg


class Run:
    """One subcommand invocation: config access, seeding, artifact collection."""

    def __init__(self, command, cfg, seed, out_dir):
        self.command = command
        self.cfg = cfg
        self.seed = seed
        self.out_dir = out_dir
        self.files = {}
        self.checks = []

    def get(self, key, default=None, required=False):
        if key in self.cfg:
            return self.cfg[key]
        if required:
            raise ConfigError(f"missing config key {key!r}")
        return default

    def stage_seed(self, stage):
        import numpy as np

        return int(np.random.SeedSequence(
            [self.seed, STAGE_IDS[stage]]
        ).generate_state(1)[0])

    def emit(self, name, text):
        self.files[name] = text

    def check(self, name, passed, detail):
        self.checks.append({"name": name, "passed": bool(passed),
                            "detail": detail})

    def model(self):
        from .hilbert import SystemModel

        fields = ("g_mhz", "delta_mhz", "omega_cav_ghz", "chi_mhz",
                  "t1_cav_us", "t1_q_us", "t2_q_us", "parity_map_time_ns",
                  "pi2_sigma_ns")
        kwargs = {f: self.cfg[f"model.{f}"] for f in fields
                  if f"model.{f}" in self.cfg}
        try:
            return SystemModel(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def dims(self, default_levels=10):
        from .hilbert import InvalidDimsError, SpaceDims

        try:
            return SpaceDims(int(self.get("dims.cavity_levels",
                                          default_levels)))
        except InvalidDimsError as exc:
            raise ConfigError(str(exc)) from exc

    def table(self):
        from .calibration import CalibrationTable

        path = self.get("table.path")
        if path is None:
            return CalibrationTable.device_default()
        try:
            with open(path) as fh:
                return CalibrationTable.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read table {path}: {exc}") from exc

    def write_all(self, exit_code):
        os.makedirs(self.out_dir, exist_ok=True)
        hashes = {}
        for name, text in sorted(self.files.items()):
            data = text.encode()
            with open(os.path.join(self.out_dir, name), "wb") as fh:
                fh.write(data)
            hashes[name] = hashlib.sha256(data).hexdigest()
        summary = {
            "command": self.command,
            "seed": self.seed,
            "config": {k: self.cfg[k] for k in sorted(self.cfg)},
            "files": hashes,
            "checks": self.checks,
            "exit_code": exit_code,
        }
        with open(os.path.join(self.out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return summary


def _fmt(x):
    return f"{float(x):.12g}"


def _csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else _fmt(cell) for cell in row
        ))
    return "\n".join(lines) + "\n"


# -- subcommands ---------------------------------------------------------------


def cmd_spectrum(run):
    import numpy as np

    from .hilbert import (DressedLabel, build_operators, dressed_energy_mhz,
                          dressed_state, jc_hamiltonian, sideband_frequency)
    from .units import rad_ns_to_mhz

    model = run.model()
    dims = run.dims(default_levels=8)
    ops = build_operators(dims)
    h = jc_hamiltonian(ops, model.g_mhz)
    rows = []
    worst = 0.0
    for n in range(1, min(7, dims.cavity_levels)):
        for sign in (+1, -1):
            lbl = DressedLabel(n, sign)
            psi = dressed_state(dims, lbl)
            diag = rad_ns_to_mhz(float(np.real(psi.conj() @ h @ psi)))
            ideal = dressed_energy_mhz(lbl, model.g_mhz)
            rel = abs(diag - ideal) / abs(ideal)
            worst = max(worst, rel)
            rows.append((str(lbl), ideal, diag, rel))
    run.emit("spectrum.csv",
             _csv(("label", "ideal_mhz", "diag_mhz", "rel_err"), rows))
    side = [(n, sideband_frequency(n, "red", model.g_mhz),
             sideband_frequency(n, "blue", model.g_mhz))
            for n in range(0, min(6, dims.cavity_levels - 1))]
    run.emit("sidebands.csv", _csv(("n", "red_mhz", "blue_mhz"), side))
    run.check("spectrum-relative-error", worst < 1e-10, f"worst {worst:.3g}")


def cmd_prepare(run):
    from .protocols import (SynthesisError, TargetState, prep_fidelity_ideal,
                            synthesize_ladder_prep)

    model = run.model()
    dims = run.dims()
    table = run.table()
    target = TargetState.parse(str(run.get("protocol.target", required=True)))
    schedule = synthesize_ladder_prep(target, table, model, dims)
    fid = prep_fidelity_ideal(schedule, target, table, model, dims)
    run.emit("schedule.json", schedule.to_json() + "\n")
    run.emit("prepare.csv", _csv(
        ("target", "duration_ns", "ideal_fidelity"),
        ((str(target), schedule.total_duration_ns, fid),),
    ))
    run.check("prepare-ideal-fidelity", fid > 0.99, f"fidelity {fid:.6f}")


def cmd_multitone(run):
    from .hilbert import DressedLabel
    from .protocols import TargetState, optimize_multitone
    from .pulses import jx_amplitudes_mhz

    model = run.model()
    dims = run.dims()
    table = run.table()
    target = TargetState.parse(str(run.get("protocol.target", required=True)))
    duration = float(run.get("protocol.duration_ns", required=True))
    chain_s = str(run.get("protocol.chain", required=True))
    chain = tuple(DressedLabel.parse(p) for p in chain_s.split(","))
    res = optimize_multitone(
        target, duration, chain, table, model, dims,
        seed=run.stage_seed("multitone"),
    )
    amps = jx_amplitudes_mhz(res.spec)
    run.emit("amplitudes.csv", _csv(
        ("tone", "re_mhz", "im_mhz"),
        [(str(tr), a.real, a.imag)
         for tr, a in zip(res.spec.transitions(), amps)],
    ))
    run.emit("multitone.csv", _csv(
        ("target", "duration_ns", "fidelity", "converged", "iterations"),
        ((str(target), duration, res.fidelity, str(res.converged).lower(),
          str(res.iterations)),),
    ))
    run.check("multitone-fidelity", res.fidelity > 0.99,
              f"fidelity {res.fidelity:.6f}")


def cmd_givens(run):
    import numpy as np

    from .calibration import Transition
    from .protocols import (GivensSpec, ensure_chain_calibrated,
                            givens_parity_curve, optimize_givens_amplitudes)

    model = run.model()
    dims = run.dims()
    table = run.table()
    n_a = int(run.get("protocol.n_a", 1))
    n_b = int(run.get("protocol.n_b", 4))
    amp = float(run.get("protocol.amplitude_mhz", 1.0))
    thetas_s = run.get("protocol.thetas")
    if thetas_s is None:
        thetas = np.linspace(0.0, math.pi, 17)
    else:
        thetas = np.array([float(t) for t in str(thetas_s).split(",")])
    spec = GivensSpec(n_a, n_b, 0.0, amplitude_mhz=amp)
    chain = spec.jx_chain()
    table = ensure_chain_calibrated(
        table, [Transition(lo, hi) for lo, hi in zip(chain, chain[1:])], model
    )
    if bool(run.get("protocol.optimize", True)):
        spec = optimize_givens_amplitudes(
            spec, table, model, dims, seed=run.stage_seed("givens")
        )
    parity = givens_parity_curve(thetas, spec, table, model, dims)
    run.emit("parity.csv", _csv(
        ("theta_rad", "parity", "neg_cos_theta"),
        [(t, p, -math.cos(t)) for t, p in zip(thetas, parity)],
    ))
    dev = float(np.max(np.abs(parity - (-np.cos(thetas)))))
    run.check("givens-parity-law", dev < 0.02, f"max deviation {dev:.4f}")


def cmd_calibrate(run):
    import numpy as np

    from .calibration import CalibrationRow, Transition
    from .protocols import (calibrate_power_rabi, calibrate_ramp,
                            calibrate_sigma, calibrate_spectroscopy)
    from .hilbert import DressedLabel

    model = run.model()
    dims = run.dims()
    table = run.table()
    kind = str(run.get("protocol.kind", required=True))
    if kind == "spectroscopy":
        initial = DressedLabel.parse(str(run.get("protocol.initial", "0")))
        lo = float(run.get("protocol.freq_start_ghz", 6.80))
        hi = float(run.get("protocol.freq_stop_ghz", 6.94))
        n = int(run.get("protocol.points", 141))
        res = calibrate_spectroscopy(
            initial, np.linspace(lo, hi, n), model, table, dims
        )
        run.emit("spectroscopy.csv", _csv(
            ("freq_ghz", "parity"), list(zip(res.freqs_ghz, res.parity))
        ))
        run.emit("peaks.csv", _csv(("peak_ghz",), [(p,) for p in res.peaks_ghz]))
    elif kind == "power_rabi":
        trans = Transition.parse(str(run.get("protocol.transition",
                                             required=True)))
        res = calibrate_power_rabi(trans, model, table, dims)
        run.emit("power_rabi.csv", _csv(
            ("amplitude_mhz", "parity"),
            list(zip(res.amplitudes_mhz, res.parity)),
        ))
        run.emit("power_rabi_fit.csv", _csv(
            ("transition", "pi_amplitude_mhz", "rabi_rate_mhz", "r_squared"),
            ((str(trans), res.pi_amplitude_mhz, res.rabi_rate_mhz,
              res.r_squared),),
        ))
        append_to = run.get("protocol.append_to")
        if append_to:
            row = CalibrationRow(trans, table.get(trans).freq_ghz,
                                 res.rabi_rate_mhz, table.get(trans).sigma_ns)
            with open(append_to, "a") as fh:
                s = "-" if row.sigma_ns is None else f"{row.sigma_ns:g}"
                fh.write(f"{row.trans}  {row.freq_ghz:.4f}  "
                         f"{row.rabi_mhz:g}  {s}\n")
        run.check("power-rabi-fit", res.r_squared > 0.99,
                  f"R^2 {res.r_squared:.5f}")
    elif kind == "sigma":
        trans = Transition.parse(str(run.get("protocol.transition",
                                             required=True)))
        res = calibrate_sigma(trans, model, table, dims,
                              open_system=bool(run.get("run.open_system",
                                                       True)))
        run.emit("sigma.csv", _csv(
            ("sigma_ns", "parity_return"),
            list(zip(res.sigmas_ns, res.parity_return)),
        ))
        run.emit("sigma_fit.csv", _csv(
            ("transition", "sigma_opt_ns", "at_boundary"),
            ((str(trans), res.sigma_opt_ns, str(res.at_boundary).lower()),),
        ))
    elif kind == "ramp":
        res = calibrate_ramp(model, dims,
                             delta_end_mhz=float(
                                 run.get("protocol.delta_end_mhz", 100.0)))
        run.emit("ramp.csv", _csv(
            ("duration_ns", "population"),
            list(zip(res.durations_ns, res.populations)),
        ))
        run.emit("ramp_fit.csv", _csv(
            ("minimal_duration_ns", "plateau"),
            ((res.minimal_duration_ns, res.plateau),),
        ))
        run.check("ramp-duration",
                  100.0 <= res.minimal_duration_ns <= 400.0,
                  f"minimal duration {res.minimal_duration_ns:g} ns")
    else:
        raise ConfigError(f"unknown calibrate kind {kind!r}")


def cmd_tomography(run):
    import numpy as np

    from .hilbert import adiabatic_map, build_operators
    from .lindblad import CollapseSet, evolve
    from .protocols import (TargetState, calibrated_hamiltonian,
                            synthesize_ladder_prep)
    from .tomography import make_grid, measured_wigner_grid, vacuum_reference

    model = run.model()
    dims = run.dims()
    table = run.table()
    target = TargetState.parse(str(run.get("protocol.target", required=True)))
    extent = float(run.get("grid.extent", 2.5))
    points = int(run.get("grid.points", 21))
    open_sys = bool(run.get("run.open_system", True))
    ops = build_operators(dims)
    collapse = (CollapseSet.from_model(ops, model) if open_sys
                else CollapseSet.none())
    schedule = synthesize_ladder_prep(target, table, model, dims)
    h0 = calibrated_hamiltonian(table, dims, model.g_mhz)
    rho0 = np.zeros((dims.dim, dims.dim), dtype=complex)
    rho0[0, 0] = 1.0
    traj = evolve(rho0, schedule, model, ops, open_system=open_sys,
                  collapse=collapse, h0=h0)
    undress = adiabatic_map(dims, "undress")
    rho = undress @ traj.final @ undress.conj().T
    alphas = make_grid("square", extent, points)
    w = measured_wigner_grid(rho, alphas, model, dims, collapse=collapse)
    w0 = vacuum_reference(model, dims, collapse=collapse)
    run.emit("wigner.csv", _csv(
        ("re_alpha", "im_alpha", "value", "normalized"),
        [(a.real, a.imag, v, v / w0) for a, v in zip(alphas, w)],
    ))
    run.emit("wigner_meta.csv", _csv(
        ("target", "extent", "points", "vacuum_reference"),
        ((str(target), extent, str(points), w0),),
    ))


def cmd_reconstruct(run):
    import numpy as np

    from .protocols import TargetState
    from .reconstruction import (bayesian_infer, build_map, fidelity,
                                 linear_inversion)

    path = run.get("protocol.input", required=True)
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1)
    except OSError as exc:
        raise ConfigError(f"cannot read Wigner data {path}: {exc}") from exc
    alphas = raw[:, 0] + 1j * raw[:, 1]
    values = raw[:, 3] if raw.shape[1] > 3 else raw[:, 2]
    d = int(run.get("protocol.d", 6))
    reps = int(run.get("protocol.repetitions", 400))
    trunc = int(run.get("dims.cavity_levels", 10))
    wmap = build_map(alphas, d, trunc=trunc)
    rho_li = linear_inversion(values, wmap)
    res = bayesian_infer(rho_li, repetitions=reps, d=d,
                         seed=run.stage_seed("reconstruct"))
    rho = res.posterior_mean()
    rows = [(i, j, rho[i, j].real, rho[i, j].imag)
            for i in range(d) for j in range(d)]
    run.emit("rho_mean.csv", _csv(("row", "col", "re", "im"), rows))
    meta = [("acceptance_rate", res.acceptance_rate)]
    target_s = run.get("protocol.target")
    if target_s:
        target = TargetState.parse(str(target_s))
        mean, std = res.fidelity_stats(target.density_matrix(d))
        meta += [("fidelity_mean", mean), ("fidelity_std", std)]
    run.emit("reconstruct_meta.csv", _csv(
        ("key", "value"), [(k, v) for k, v in meta]
    ))


def cmd_error_budget(run):
    from .protocols import error_budget

    model = run.model()
    dims = run.dims()
    table = run.table()
    result = error_budget(
        model, table, dims,
        d=int(run.get("protocol.d", 6)),
        repetitions=int(run.get("protocol.repetitions", 400)),
        seed=run.stage_seed("error-budget"),
    )
    run.emit("budget.csv", result.to_csv())
    targets = {
        "pulse": (98.4, 95.1),
        "pulse+t1": (98.3, 94.4),
        "pulse+t1+tphi": (93.2, 87.7),
    }
    worst = 0.0
    for i, row in enumerate(result.rows):
        for j in range(2):
            got = 100.0 * result.fidelity_mean[i, j]
            worst = max(worst, abs(got - targets[row][j]))
    run.check("error-budget-regression", worst <= 1.5,
              f"worst cell deviation {worst:.2f} pp")


def cmd_hardware(run):
    import numpy as np

    from .hardware import (SquidParams, chebyshev_stub_lowpass, device_filter,
                           filter_s21, fit_squid_params, flux_sensitivity,
                           transmon_freq)

    e_c = float(run.get("protocol.e_c_ghz", 0.18))
    f_min = float(run.get("protocol.f_min_ghz", 5.44))
    f_max = float(run.get("protocol.f_max_ghz", 7.26))
    sq = fit_squid_params(f_min, f_max, e_c_ghz=e_c)
    run.emit("squid_fit.csv", _csv(
        ("e_c_ghz", "e_j1_ghz", "gamma"),
        ((sq.e_c_ghz, sq.e_j1_ghz, sq.gamma),),
    ))
    phis = np.linspace(0.0, math.pi, 201)
    run.emit("tuning_curve.csv", _csv(
        ("phi_e_rad", "freq_ghz", "sensitivity_ghz_per_phi0"),
        [(p, transmon_freq(sq.at_flux(p)), flux_sensitivity(sq.at_flux(p)))
         for p in phis],
    ))
    freqs = np.linspace(0.05, 12.0, 240)
    filt = device_filter()
    cheb = chebyshev_stub_lowpass(float(run.get("protocol.cutoff_ghz", 6.0)))
    run.emit("filter_s21.csv", _csv(
        ("freq_ghz", "s21_db_device", "s21_db_chebyshev"),
        [(f, filter_s21(filt, f), filter_s21(cheb, f)) for f in freqs],
    ))
    # identity checks (criterion: symmetric-SQUID reduction, sweet-spot zeros)
    sym = SquidParams(e_c_ghz=e_c, e_j1_ghz=sq.e_j1_ghz, gamma=1.0, phi_e=0.3)
    ref = math.sqrt(8.0 * e_c * 2.0 * sq.e_j1_ghz * abs(math.cos(0.3))) - e_c
    dev = abs(transmon_freq(sym) - ref)
    run.check("squid-gamma1-identity", dev < 1e-12, f"deviation {dev:.3g}")
    zero = max(abs(flux_sensitivity(sq.at_flux(0.0))),
               abs(flux_sensitivity(sq.at_flux(math.pi / 2.0))))
    run.check("sweet-spot-zeros", zero < 1e-10, f"max |slope| {zero:.3g}")
    gammas = np.linspace(1.5, 8.0, 14)
    sens = [abs(flux_sensitivity(SquidParams(e_c, sq.e_j1_ghz, g,
                                             math.pi / 4.0)))
            for g in gammas]
    mono = all(b < a for a, b in zip(sens, sens[1:]))
    run.check("sensitivity-monotone-in-gamma", mono,
              "strictly decreasing at phi_e=pi/4" if mono else "not monotone")


def cmd_parametric(run):
    import numpy as np
    from scipy.special import j1 as scipy_j1

    from .hardware import ParametricModel, bessel_j1, g_effective
    from .hilbert import build_operators
    from .lindblad import FluxModSpec, parametric_chevron

    model = run.model()
    dims = run.dims(default_levels=4)
    ops = build_operators(dims)
    delta0 = float(run.get("protocol.parking_delta_mhz", 100.0))
    depth = float(run.get("protocol.depth_mhz", 40.0))
    spec = FluxModSpec(depth, delta0, delta0)
    pumps = np.linspace(delta0 - 6.0, delta0 + 6.0, 13)
    res = parametric_chevron(spec, model, ops, pumps,
                             float(run.get("protocol.max_duration_ns", 600.0)))
    rows = []
    for i, fm in enumerate(res.pump_freqs_mhz):
        for k, t in enumerate(res.times_ns):
            rows.append((fm, t, res.exchange_map[i, k]))
    run.emit("chevron.csv", _csv(("pump_mhz", "time_ns", "p_exchange"), rows))
    run.emit("chevron_fit.csv", _csv(
        ("parking_delta_mhz", "depth_mhz", "g_eff_mhz"),
        ((delta0, depth, res.g_eff_mhz if res.g_eff_mhz is not None else
          float("nan")),),
    ))
    xs = np.linspace(0.0, 12.0, 121)
    ours = np.array([bessel_j1(float(x)) for x in xs])
    worst = float(np.max(np.abs(ours - scipy_j1(xs))))
    run.check("bessel-j1-accuracy", worst < 1e-10, f"max |err| {worst:.3g}")
    g0 = float(run.get("protocol.g0_mhz", model.g_mhz))
    nu = float(run.get("protocol.nu_ua", 1.0))
    ratios = np.linspace(0.05, 4.0, 40)
    geff = [g_effective(ParametricModel(g0, nu, i_p_ua=r * nu))
            for r in ratios]
    run.emit("geff_vs_depth.csv", _csv(
        ("depth_over_nu", "g_eff_mhz"), list(zip(ratios, geff))
    ))
    peak = int(np.argmax(geff))
    mono = (all(b >= a for a, b in zip(geff[:peak], geff[1:peak + 1]))
            and all(b <= a for a, b in zip(geff[peak:], geff[peak + 1:])))
    run.check("geff-single-maximum", mono and 0 < peak < len(geff) - 1,
              f"peak at depth/nu = {ratios[peak]:.2f}")


def cmd_noop(run):
    pass


COMMANDS = {
    "spectrum": cmd_spectrum,
    "prepare": cmd_prepare,
    "multitone": cmd_multitone,
    "givens": cmd_givens,
    "calibrate": cmd_calibrate,
    "tomography": cmd_tomography,
    "reconstruct": cmd_reconstruct,
    "error-budget": cmd_error_budget,
    "hardware": cmd_hardware,
    "parametric": cmd_parametric,
    "noop": cmd_noop,
}


def _cap_threads(n):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="fluxjc",
        description="flux-activated JC control: simulation and synthesis runner",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None,
                        help="flat key=value config (or .json mirror)")
    parser.add_argument("--seed", type=int, default=None,
                        help="64-bit master seed (default: config key 'seed' or 0)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--check", action="store_true",
                        help="exit 4 if any tolerance check fails")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"BLAS thread cap (default: ${_THREAD_ENV} if set)")
    args = parser.parse_args(argv)

    if args.threads is not None:
        _cap_threads(args.threads)
    elif os.environ.get(_THREAD_ENV):
        _cap_threads(int(os.environ[_THREAD_ENV]))

    try:
        cfg = parse_config(args.config) if args.config else {}
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        run = Run(args.command, cfg, seed, args.out)
        COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"fluxjc: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - map module failures to exit 3
        print(f"fluxjc: {args.command} failed: "
              f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    failed = [c for c in run.checks if not c["passed"]]
    code = 4 if (args.check and failed) else 0
    run.write_all(code)
    for c in run.checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']}: {c['detail']}")
    print(f"wrote {len(run.files) + 1} files to {run.out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
