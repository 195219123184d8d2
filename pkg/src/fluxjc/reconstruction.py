"""Density-matrix reconstruction from Wigner data.

Pipeline: linear inversion through the precomputed measurement map
X = M Y + V, followed by Markov-chain Monte Carlo sampling of physical
density matrices under a Gaussian pseudo-likelihood centered on the
linear-inversion summary.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .tomography import displacement_operator, parity_diagonal, wigner_exact


class IllConditionedGridError(ValueError):
    pass


class SamplerStuckError(RuntimeError):
    pass


# -- real parametrization of a Hermitian unit-trace matrix --------------------


def param_vector(rho: np.ndarray) -> np.ndarray:
    """First D-1 diagonal entries, then Re/Im of the upper triangle (row-major)."""
    rho = np.asarray(rho)
    d = rho.shape[0]
    parts = [np.real(np.diag(rho)[: d - 1])]
    iu = np.triu_indices(d, 1)
    parts.append(np.real(rho[iu]))
    parts.append(np.imag(rho[iu]))
    return np.concatenate(parts)


def rho_from_params(y: np.ndarray, d: int) -> np.ndarray:
    """Inverse of param_vector; last diagonal entry enforces unit trace."""
    y = np.asarray(y, dtype=float)
    if y.size != d * d - 1:
        raise ValueError(f"parameter vector must have length {d * d - 1}")
    rho = np.zeros((d, d), dtype=complex)
    diag = y[: d - 1]
    rho[np.arange(d - 1), np.arange(d - 1)] = diag
    rho[d - 1, d - 1] = 1.0 - diag.sum()
    iu = np.triu_indices(d, 1)
    n_off = iu[0].size
    re = y[d - 1 : d - 1 + n_off]
    im = y[d - 1 + n_off :]
    rho[iu] = re + 1j * im
    rho[(iu[1], iu[0])] = re - 1j * im
    return rho


# -- measurement map ----------------------------------------------------------


@dataclass
class WignerMap:
    """Linear map from the parameter vector to raw Wigner values on a grid."""

    m: np.ndarray
    v: np.ndarray
    grid: np.ndarray
    d: int
    trunc: int

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.m))


def _embed(rho_small: np.ndarray, trunc: int) -> np.ndarray:
    d = rho_small.shape[0]
    out = np.zeros((trunc, trunc), dtype=complex)
    out[:d, :d] = rho_small
    return out


def build_map(grid: Sequence[complex], d: int, trunc: Optional[int] = None,
              weights: Optional[np.ndarray] = None) -> WignerMap:
    """Wigner responses of the basis perturbations around the all-zero state.

    trunc is the Fock truncation used when evaluating the displaced parity;
    it must match the truncation of the data being inverted.  weights
    replaces the ideal (-1)^n parity diagonal with a calibrated measurement
    kernel (e.g. the Ramsey contrasts of a finite-length parity map),
    normalized so the vacuum reads 1.
    """
    grid = np.asarray(grid, dtype=complex)
    if grid.size < d * d - 1:
        raise IllConditionedGridError(
            f"{grid.size} grid points cannot determine {d * d - 1} parameters"
        )
    trunc = trunc if trunc is not None else d + 14
    if weights is None:
        weights = parity_diagonal(trunc)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.size != trunc:
            raise ValueError(f"need {trunc} weights, got {weights.size}")
    # kernel K(a) = D(a) diag(w) D(a)^dag, so the response is tr(K rho)
    kernels = []
    for a in grid:
        dmat = displacement_operator(trunc, a)
        kernels.append((dmat * weights) @ dmat.conj().T)

    def response(rho_small):
        big = _embed(rho_small, trunc)
        return np.array([float(np.real(np.sum(k.T * big))) for k in kernels])

    n_params = d * d - 1
    ref = rho_from_params(np.zeros(n_params), d)
    v = response(ref)
    m = np.empty((grid.size, n_params))
    for j in range(n_params):
        y = np.zeros(n_params)
        y[j] = 1.0
        m[:, j] = response(rho_from_params(y, d) - ref)
    wmap = WignerMap(m, v, grid, d, trunc)
    if wmap.condition_number > 1e8:
        raise IllConditionedGridError(
            f"grid is ill conditioned (cond = {wmap.condition_number:.3g})"
        )
    return wmap


def linear_inversion(x: np.ndarray, wmap: WignerMap) -> np.ndarray:
    """Least-squares estimate via the left Moore-Penrose pseudoinverse."""
    x = np.asarray(x, dtype=float)
    y, *_ = np.linalg.lstsq(wmap.m, x - wmap.v, rcond=None)
    return rho_from_params(y, wmap.d)


def has_negative_eigenvalue(rho: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.linalg.eigvalsh(rho).min() < -tol)


def project_physical(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize (used only to seed the sampler)."""
    w, u = np.linalg.eigh(np.asarray(rho, dtype=complex))
    w = np.clip(w, 0.0, None)
    if w.sum() == 0:
        w[:] = 1.0
    w /= w.sum()
    return (u * w) @ u.conj().T


# -- Bayesian inference -------------------------------------------------------


def _theta_to_rho(theta: np.ndarray, d: int, iu: tuple) -> np.ndarray:
    """rho = T^dag T / tr(T^dag T) with T complex upper-triangular."""
    t = np.zeros((d, d), dtype=complex)
    t[np.arange(d), np.arange(d)] = theta[:d]
    n_off = iu[0].size
    t[iu] = theta[d : d + n_off] + 1j * theta[d + n_off :]
    rho = t.conj().T @ t
    return rho / np.real(np.trace(rho))


def _rho_to_theta(rho: np.ndarray, d: int, iu: tuple) -> np.ndarray:
    w, u = np.linalg.eigh(np.asarray(rho, dtype=complex))
    w = np.clip(w, 1e-8, None)
    w /= w.sum()
    rho_pd = (u * w) @ u.conj().T
    ell = np.linalg.cholesky(rho_pd)  # rho = L L^dag = (L^dag)^dag (L^dag)
    t = ell.conj().T
    theta = np.zeros(d * d)
    theta[:d] = np.real(np.diag(t))
    off = t[iu]
    theta[d : d + iu[0].size] = np.real(off)
    theta[d + iu[0].size :] = np.imag(off)
    return theta


@dataclass
class ReconstructionResult:
    rho_li: np.ndarray
    samples: List[np.ndarray]
    acceptance_rate: float

    def posterior_mean(self) -> np.ndarray:
        return np.mean(self.samples, axis=0)

    def fidelity_stats(self, target: np.ndarray) -> tuple:
        vals = np.array([fidelity(s, target) for s in self.samples])
        return float(vals.mean()), float(vals.std())


def bayesian_infer(
    rho_li: np.ndarray,
    repetitions: int,
    d: Optional[int] = None,
    seed: int = 0,
    n_samples: int = 2 ** 10,
    thinning: int = 2 ** 7,
    burn_in: int = 4000,
) -> ReconstructionResult:
    """Random-walk Metropolis over the Cholesky factor of rho.

    Pseudo-likelihood: Gaussian in the parameter summary with variance
    1/(repetitions * (d^2 - 1)); uniform prior over the factor parameters.
    Deterministic given the seed.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    rho_li = np.asarray(rho_li, dtype=complex)
    d = d if d is not None else rho_li.shape[0]
    iu = np.triu_indices(d, 1)
    var = 1.0 / (repetitions * (d * d - 1))
    y_data = param_vector(rho_li)

    rng = np.random.default_rng(seed)
    theta = _rho_to_theta(project_physical(rho_li), d, iu)
    n_par = theta.size

    def logl(th):
        y = param_vector(_theta_to_rho(th, d, iu))
        r = y - y_data
        return -0.5 * float(r @ r) / var

    cur_logl = logl(theta)
    step = 0.05 * np.sqrt(var) * np.sqrt(n_par)
    accepted = 0
    proposed = 0
    samples: List[np.ndarray] = []
    total_iters = burn_in + n_samples * thinning
    window_acc = 0
    window_n = 0
    for i in range(total_iters):
        prop = theta + step * rng.standard_normal(n_par)
        new_logl = logl(prop)
        proposed += 1
        window_n += 1
        if np.log(rng.random()) < new_logl - cur_logl:
            theta = prop
            cur_logl = new_logl
            accepted += 1
            window_acc += 1
        if i < burn_in and window_n == 100:
            rate = window_acc / window_n
            step *= np.exp(0.3 * (rate - 0.23))
            window_acc = 0
            window_n = 0
        if i >= burn_in and (i - burn_in + 1) % thinning == 0:
            samples.append(_theta_to_rho(theta, d, iu))

    rate = accepted / proposed
    if rate < 0.01:
        raise SamplerStuckError(f"acceptance rate {rate:.3%} after adaptation")
    return ReconstructionResult(rho_li, samples, rate)


# -- fidelity -----------------------------------------------------------------


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ u.conj().T


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """Uhlmann fidelity F = (tr sqrt(sqrt(rho) target sqrt(rho)))^2."""
    rho = np.asarray(rho, dtype=complex)
    target = np.asarray(target, dtype=complex)
    for m in (rho, target):
        if np.max(np.abs(m - m.conj().T)) > 1e-8 or abs(np.trace(m) - 1.0) > 1e-6:
            raise ValueError("fidelity inputs must be physical density matrices")
        if np.linalg.eigvalsh(m).min() < -1e-7:
            raise ValueError("fidelity inputs must be positive semidefinite")
    s = _sqrtm_psd(rho)
    inner = s @ target @ s
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    f = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(f, 0.0), 1.0)
