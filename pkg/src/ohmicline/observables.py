"""Measured quantities: Bloch components, photon profiles in mode and
position space, currents, decay fits, emission spectra, susceptibility."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from . import mps
from .model import SIGMA_X, SIGMA_Y, SIGMA_Z, ModeBasis, SpinBosonModel, \
    spectral_density
from .mps import MpsState


@dataclass
class PhotonProfile:
    """Occupations per mode (n_k), per site (n_i) and the bond current
    proxy c_i = <x_{i+1} - x_i>; ``reference`` tags what was subtracted."""

    n_k: np.ndarray
    n_i: np.ndarray
    currents: np.ndarray
    reference: str = "absolute"


@dataclass
class DecayFit:
    gamma: float
    asymptote: float
    amplitude: float
    markovian_gamma: float
    window: tuple
    residual: float
    converged: bool = True


@dataclass
class SusceptibilityResult:
    alpha: float
    chi_x: float
    epsilon_used: float
    p_x_plus: float
    p_x_minus: float
    low_signal: bool = False


# ---------------------------------------------------------------------------
# qubit and mode expectations


def qubit_bloch(state: MpsState):
    """(sx, sy, sz); P_z = (sz+1)/2, P_x = (sx+1)/2 via bloch_populations."""
    vals = mps.site_expectations(state, {0: SIGMA_X})
    sx = vals[0].real
    sy = mps.site_expectations(state, {0: SIGMA_Y})[0].real
    sz = mps.site_expectations(state, {0: SIGMA_Z})[0].real
    return sx, sy, sz


def bloch_populations(state: MpsState):
    """(P_z, P_x) = ((sz+1)/2, (sx+1)/2)."""
    sx, _, sz = qubit_bloch(state)
    return 0.5 * (sz + 1.0), 0.5 * (sx + 1.0)


def _num_op(d: int) -> np.ndarray:
    return np.diag(np.arange(d)).astype(complex)


def mode_occupations(state: MpsState) -> np.ndarray:
    """<a_k^dag a_k> per mode site."""
    L = state.n_sites - 1
    ops = {1 + i: _num_op(state.phys_dims[1 + i]) for i in range(L)}
    vals = mps.site_expectations(state, ops)
    return np.array([max(vals[1 + i].real, 0.0) for i in range(L)])


# ---------------------------------------------------------------------------
# quadratures and position-space profiles


def quadrature_moments(state: MpsState, basis: ModeBasis,
                       omega0: float = 1.0):
    """First moments <x_k>, <p_k> and second-moment matrices <x_k x_l>,
    <p_k p_l> in the mode quadrature convention of the model."""
    L = state.n_sites - 1
    d = state.phys_dims[1]
    a = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    adag = a.conj().T
    w = basis.frequencies
    cx = np.sqrt(omega0 / (2.0 * w))
    cp = np.sqrt(w / (2.0 * omega0))
    xop = (a + adag)
    pop = 1j * (adag - a)
    x_first = mps.site_expectations(state, {1 + i: xop for i in range(L)})
    p_first = mps.site_expectations(state, {1 + i: pop for i in range(L)})
    x1 = cx * np.array([x_first[1 + i].real for i in range(L)])
    p1 = cp * np.array([p_first[1 + i].real for i in range(L)])
    Cx = mps.correlation_matrix(state, {1 + i: xop for i in range(L)})
    Cp = mps.correlation_matrix(state, {1 + i: pop for i in range(L)})
    xx = np.real(np.outer(cx, cx) * 0.5 * (Cx + Cx.conj().T))
    pp = np.real(np.outer(cp, cp) * 0.5 * (Cp + Cp.conj().T))
    return x1, p1, xx, pp


def site_occupations(state: MpsState, basis: ModeBasis,
                     omega0: float = 1.0) -> np.ndarray:
    """Photon number per local oscillator, n_i = (x_i^2 + p_i^2 - 1)/2,
    rotated from mode space through the orthogonal transform."""
    _, _, xx, pp = quadrature_moments(state, basis, omega0)
    S = basis.transform
    tot = S.T @ (xx + pp) @ S
    return 0.5 * (np.diag(tot).real - 1.0)


def vacuum_site_occupations(basis: ModeBasis, omega0: float = 1.0
                            ) -> np.ndarray:
    """Closed form for the uncoupled-chain ground state: every mode in
    vacuum still gives nonzero local photon number (squeezed vacuum)."""
    w = basis.frequencies
    S = basis.transform
    diag = omega0 / (2.0 * w) + w / (2.0 * omega0)
    return 0.5 * ((S ** 2 * diag[:, None]).sum(axis=0) - 1.0)


def site_current(state: MpsState, basis: ModeBasis,
                 omega0: float = 1.0) -> np.ndarray:
    """Bond current proxy c_i = <x_{i+1} - x_i> from first moments."""
    L = state.n_sites - 1
    d = state.phys_dims[1]
    a = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    xop = a + a.conj().T
    w = basis.frequencies
    cx = np.sqrt(omega0 / (2.0 * w))
    vals = mps.site_expectations(state, {1 + i: xop for i in range(L)})
    x_modes = cx * np.array([vals[1 + i].real for i in range(L)])
    x_sites = basis.transform.T @ x_modes
    return np.diff(x_sites)


def photon_profile(state: MpsState, basis: ModeBasis, omega0: float = 1.0,
                   reference_n_k=None, reference_n_i=None,
                   reference: str = "absolute") -> PhotonProfile:
    n_k = mode_occupations(state)
    n_i = site_occupations(state, basis, omega0)
    if reference_n_k is not None:
        n_k = n_k - reference_n_k
    if reference_n_i is not None:
        n_i = n_i - reference_n_i
    return PhotonProfile(n_k=n_k, n_i=n_i,
                         currents=site_current(state, basis, omega0),
                         reference=reference)


# ---------------------------------------------------------------------------
# decay fit


def markovian_rate(model: SpinBosonModel) -> float:
    """Master-equation prediction for the P_z relaxation rate,
    gamma = J_std(w_at)/2 with J_std the standard spin-boson spectral
    function (whose coupling operator carries a factor 1/2).  For this
    Hamiltonian J_std is exactly twice :func:`spectral_density`, so the
    rate equals the golden-rule value 2 pi g^2 |u|^2 rho(w_at) --
    numerically J(w_at) in this module's normalization."""
    w, J = spectral_density(model)
    return float(np.interp(model.omega_at, w, J))


def decay_fit(times, p_z, model: SpinBosonModel,
              transient: float = None) -> DecayFit:
    """Fit P_z(t) = a exp(-gamma t) + asymptote over a window that skips
    the initial non-Markovian transient (default 2/w_at)."""
    times = np.asarray(times, dtype=float)
    p_z = np.asarray(p_z, dtype=float)
    if transient is None:
        transient = 2.0 / model.omega_at
    mask = times >= transient
    if mask.sum() < 4:
        raise ValueError("too few points after the transient window")
    t = times[mask]
    y = p_z[mask]
    gamma0 = markovian_rate(model)
    if not np.isfinite(gamma0) or gamma0 <= 0:
        gamma0 = 1.0 / max(t[-1] - t[0], 1e-9)
    c0 = float(y[-1])
    a0 = float(np.clip(y[0] - c0, 1e-6, None))

    def law(tt, a, gamma, c):
        return a * np.exp(-gamma * tt) + c

    converged = True
    try:
        popt, _ = curve_fit(law, t, y, p0=(a0, gamma0, c0),
                            bounds=([0.0, 0.0, 0.0], [2.0, np.inf, 1.0]),
                            maxfev=20000)
    except RuntimeError:
        popt = (a0, gamma0, c0)
        converged = False
    residual = float(np.sqrt(np.mean((law(t, *popt) - y) ** 2)))
    return DecayFit(gamma=float(popt[1]), asymptote=float(popt[2]),
                    amplitude=float(popt[0]), markovian_gamma=gamma0,
                    window=(float(t[0]), float(t[-1])), residual=residual,
                    converged=converged)


# ---------------------------------------------------------------------------
# emission spectrum


def quench_background(model: SpinBosonModel, gs_n_k, t: float) -> np.ndarray:
    """Reference mode occupations for radiation emitted after a sudden
    switch-on of the coupling: the interacting ground-state cloud plus
    the coherent polarization transient of the displaced modes,

        n_k += beta_k^2 (4 sin^2(w_k t / 2) - 1),  beta_k = g u_k / w_k,

    which is the exact quench dynamics of each mode in the degenerate
    (cat) limit.  At weak coupling beta_k^2 is negligible and this
    reduces to the ground-state reference; at strong coupling it removes
    the slow low-frequency cloud build-up that would otherwise swamp the
    emitted photon."""
    from .model import analytic_cat_occupations
    beta2 = analytic_cat_occupations(model)
    w = model.basis.frequencies
    return np.asarray(gs_n_k, dtype=float) \
        + beta2 * (4.0 * np.sin(0.5 * w * t) ** 2 - 1.0)


def emission_peak(n_k, reference_n_k, basis: ModeBasis,
                  band_cutoff: float = None):
    """Relative photon distribution over the ground-state reference,
    normalized to unit sum; returns (omega_peak, spectrum).

    ``omega_peak`` is the weighted median of the distribution (optionally
    restricted to modes with omega <= ``band_cutoff``).  For a narrow
    line it coincides with the dominant bin; for the broad lines of the
    ultrastrong-coupling regime it is robust against the low-frequency
    pileup left by the sudden switch-on of the coupling, which makes a
    bare argmax meaningless once the linewidth approaches the line
    frequency."""
    rel = np.asarray(n_k, dtype=float) - np.asarray(reference_n_k,
                                                    dtype=float)
    pos = np.clip(rel, 0.0, None)
    total = pos.sum()
    if total <= 0.0:
        raise ValueError("relative photon spectrum has no positive weight")
    spectrum = pos / total
    w = basis.frequencies
    mask = np.ones(len(w), dtype=bool) if band_cutoff is None \
        else (w <= band_cutoff)
    if spectrum[mask].sum() <= 0.0:
        mask = np.ones(len(w), dtype=bool)
    weights = spectrum[mask] / spectrum[mask].sum()
    cum = np.cumsum(weights) - 0.5 * weights
    return float(np.interp(0.5, cum, w[mask])), spectrum


def scattering_fractions(rel_n_i, i_q: int, exclusion: int = None):
    """(transmitted, reflected) fractions of the outgoing radiation in the
    relative real-space profile after a scattering run.

    A window of ``exclusion`` sites on each side of the coupling site is
    left out of both counts: at ultrastrong coupling the driven qubit
    carries a sizable dressing cloud pinned to its location, which
    belongs to neither outgoing channel and would otherwise be booked as
    reflected weight.  Fractions are normalized to the outgoing weight
    (left + right of the excluded window), so a freely propagating
    packet reports transmission 1 regardless of the window size."""
    pos = np.clip(np.asarray(rel_n_i, dtype=float), 0.0, None)
    L = len(pos)
    if exclusion is None:
        exclusion = max(2, min(10, L // 10))
    right = pos[min(i_q + 1 + exclusion, L):].sum()
    left = pos[:max(i_q - exclusion, 0)].sum()
    outgoing = right + left
    if outgoing <= 0.0:
        return float("nan"), float("nan")
    return float(right / outgoing), float(left / outgoing)


def spectrum_is_spread(spectrum, threshold: float = 0.25) -> bool:
    """True when no single bin holds more than ``threshold`` of the
    weight (the strong-coupling 'spread in frequency space' regime)."""
    return float(np.max(spectrum)) <= threshold


# ---------------------------------------------------------------------------
# susceptibility


def stationary_p_x(times, p_x, window_fraction: float = 0.1) -> float:
    """Average of P_x over the final fraction of the run ('t -> infinity'
    operationalized before boundary revivals)."""
    times = np.asarray(times, dtype=float)
    p_x = np.asarray(p_x, dtype=float)
    t_cut = times[-1] - window_fraction * (times[-1] - times[0])
    return float(np.mean(p_x[times >= t_cut]))


def susceptibility(model: SpinBosonModel, run_emission, epsilon: float = None,
                   window_fraction: float = 0.1,
                   noise_floor: float = 1e-7) -> SusceptibilityResult:
    """Central-difference susceptibility chi_x = -dP_x/deps from a pair of
    emission runs at +/- eps.

    ``run_emission(model)`` must return ``(times, p_x_series)`` for the
    spontaneous-emission protocol with the bias baked into ``model``.
    The sign convention makes chi_x the (positive) response of the
    bias-favored sigma_x population.
    """
    from dataclasses import replace
    if epsilon is None:
        epsilon = 1e-3 * model.omega_at
    res = {}
    for sgn in (+1.0, -1.0):
        biased = replace(model, epsilon=sgn * epsilon)
        times, p_x = run_emission(biased)
        res[sgn] = stationary_p_x(times, p_x, window_fraction)
    chi = (res[-1.0] - res[+1.0]) / (2.0 * epsilon)
    low_signal = abs(res[+1.0] - res[-1.0]) < 10.0 * noise_floor
    from .model import spectral_alpha
    try:
        alpha, _ = spectral_alpha(model)
    except ValueError:
        alpha = float("nan")
    return SusceptibilityResult(alpha=alpha, chi_x=float(chi),
                                epsilon_used=float(epsilon),
                                p_x_plus=res[+1.0], p_x_minus=res[-1.0],
                                low_signal=low_signal)
