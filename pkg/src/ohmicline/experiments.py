"""Scenario runners: ground, emit, scatter, susceptibility, circuit.

Each run produces an :class:`ExperimentRecord` and can be written to one
directory per run id: CSV files for series/profiles (stable float
formatting, byte-identical across reruns) plus a JSON metadata sidecar
with the fully resolved configuration.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from . import __version__, mps, observables as obs
from .config import ExperimentConfig, OhmicConfigError, config_dict
from .circuit import LineCouplingSpec, coupling_curve, usc_band
from .model import alpha_integrated, effective_frequency, make_model, \
    spectral_alpha
from .propagate import KrylovParams, TrotterPlan, evolve, ground_state
from .mps import CompressionParams, make_product_state


class ConvergenceFailure(RuntimeError):
    """A scenario could not reach its convergence target."""


@dataclass
class ExperimentRecord:
    metadata: dict
    series: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# shared plumbing


def _kparams(config: ExperimentConfig) -> KrylovParams:
    comp = CompressionParams(chi_max=config.chi_max,
                             svd_cutoff=config.svd_cutoff)
    return KrylovParams(subspace_dim=config.krylov_m,
                        residual_tol=config.krylov_tol, compression=comp)


def _model(config: ExperimentConfig, g: float = None,
           kind: str = None, epsilon: float = None) -> SpinBosonModel:
    return make_model(
        config.L, config.omega_at,
        config.g if g is None else g,
        epsilon=config.epsilon if epsilon is None else epsilon,
        coupling_kind=kind or config.coupling_kind,
        i_q=config.resolved_i_q(), omega0=config.omega0,
        n_max=config.n_max)


def _ground(model, config):
    state, energy, log = ground_state(
        model, schedule=config.gs_schedule, energy_tol=config.gs_tol,
        kparams=_kparams(config), interaction=config.interaction)
    stuck = [w for w in log.warnings if "max_steps" in w]
    if stuck:
        raise ConvergenceFailure("; ".join(stuck))
    return state, energy, log


def _metadata(config: ExperimentConfig) -> dict:
    return {"config": config_dict(config), "code_version": __version__}


def _spectral_fit(model):
    """Power-law fit of the spectral density, or NaNs when the chain is
    too short to populate the fit window."""
    try:
        return spectral_alpha(model)
    except ValueError:
        return float("nan"), float("nan")


def g_for_target_alpha(config: ExperimentConfig, alpha: float) -> float:
    """Coupling that realizes a target Ohmic strength for this geometry,
    using the integrated low-frequency spectral weight (alpha scales
    exactly as g^2)."""
    ref = _model(config, g=1.0)
    return float(np.sqrt(alpha / alpha_integrated(ref)))


def revival_time(config: ExperimentConfig) -> float:
    """Round-trip time of emitted radiation to the nearest reflecting
    edge and back at the maximal group velocity omega0 (sites per unit
    time).  An edge the qubit sits against (distance < 2 sites) is part
    of the local coupling structure, not a propagation path, so it is
    excluded -- an end-coupled qubit only revives off the far edge."""
    i_q = config.resolved_i_q()
    distances = [d for d in (i_q, config.L - 1 - i_q) if d >= 2]
    distance = min(distances) if distances else config.L - 1
    return 2.0 * distance / config.omega0


# ---------------------------------------------------------------------------
# scenarios


def run_ground(config: ExperimentConfig) -> ExperimentRecord:
    """Ground-state profiles: the alpha = 0 squeezed-vacuum baseline and
    the interacting ground state for the requested coupling kinds."""
    record = ExperimentRecord(metadata=_metadata(config))
    kinds = ["flux", "charge"] if config.coupling_kind == "both" \
        else [config.coupling_kind]
    base_model = _model(config, g=0.0, kind=kinds[0])
    basis = base_model.basis
    n_i_vac = obs.vacuum_site_occupations(basis, config.omega0)
    record.profiles["site"] = np.arange(config.L)
    record.profiles["n_i_baseline"] = n_i_vac
    record.profiles["mode"] = np.arange(1, config.L + 1)
    record.profiles["omega_k"] = basis.frequencies
    for kind in kinds:
        model = _model(config, kind=kind)
        state, energy, _ = _ground(model, config)
        prof = obs.photon_profile(state, basis, config.omega0)
        p_z, p_x = obs.bloch_populations(state)
        record.profiles[f"n_i_{kind}"] = prof.n_i
        record.profiles[f"n_k_{kind}"] = prof.n_k
        record.profiles[f"current_{kind}"] = prof.currents
        alpha, s_exp = _spectral_fit(model)
        record.scalars.update({
            f"energy_{kind}": energy,
            f"P_z_{kind}": p_z,
            f"P_x_{kind}": p_x,
            f"alpha_fit_{kind}": alpha,
            f"spectral_exponent_{kind}": s_exp,
        })
    return record


def _emission_evolution(model, config, reference_n_i=None,
                        initial=None):
    """Quench evolution from the uncoupled excited product state (or a
    supplied initial state); returns series dict, final state, grid."""
    if initial is None:
        initial = make_product_state((0.0, 1.0), [0] * model.L, model.n_max)
    n_steps = max(1, int(round(config.t_final / config.dt)))
    plan = TrotterPlan(dt=config.dt, n_steps=n_steps, mode="real")
    series = {"t": [], "P_z": [], "P_x": []}
    grid_rows = []
    grid_times = []

    def callback(state, t, n):
        p_z, p_x = obs.bloch_populations(state)
        series["t"].append(t)
        series["P_z"].append(p_z)
        series["P_x"].append(p_x)
        if config.profile_stride and (n + 1) % config.profile_stride == 0:
            n_i = obs.site_occupations(state, model.basis, config.omega0)
            ref = reference_n_i if reference_n_i is not None else 0.0
            grid_rows.append(n_i - ref)
            grid_times.append(t)

    final, log = evolve(initial, model, plan, _kparams(config),
                        interaction=config.interaction,
                        energy_stride=config.energy_stride,
                        callback=callback)
    series = {k: np.array(v) for k, v in series.items()}
    series["energy"] = np.array(log.energies)
    series["norm"] = np.array(log.norms)
    series["truncation"] = np.array(log.truncation)
    series["max_chi"] = np.array(log.max_bond)
    grid = (np.array(grid_rows), np.array(grid_times)) if grid_rows else None
    return series, final, grid


def run_emit(config: ExperimentConfig) -> ExperimentRecord:
    """Spontaneous emission: quench from the uncoupled excited state,
    relaxation fit, and the emitted photon's frequency distribution
    relative to the interacting ground state."""
    record = ExperimentRecord(metadata=_metadata(config))
    model = _model(config)
    t_revival = revival_time(config)
    if config.t_final > t_revival:
        warnings.warn(
            f"t_final={config.t_final} exceeds the boundary-revival "
            f"estimate {t_revival}: late-time observables contain "
            "reflections", RuntimeWarning)
        record.metadata["revival_warning"] = t_revival
    gs_state, gs_energy, _ = _ground(model, config)
    gs_n_k = obs.mode_occupations(gs_state)
    gs_p_z, _ = obs.bloch_populations(gs_state)
    initial_n_i = obs.vacuum_site_occupations(model.basis, config.omega0)
    series, final, grid = _emission_evolution(
        model, config, reference_n_i=initial_n_i)
    record.series = series
    if grid is not None:
        record.grids["n_i_rel"] = grid[0]
        record.grids["t"] = grid[1]
    n_k = obs.mode_occupations(final)
    record.profiles["mode"] = np.arange(1, config.L + 1)
    record.profiles["omega_k"] = model.basis.frequencies
    record.profiles["n_k"] = n_k
    record.profiles["n_k_ground"] = gs_n_k
    try:
        fit = obs.decay_fit(series["t"], series["P_z"], model)
        gamma, asymptote, resid = fit.gamma, fit.asymptote, fit.residual
    except ValueError:
        gamma = asymptote = resid = float("nan")
    alpha, s_exp = _spectral_fit(model)
    record.scalars.update({
        "gamma": gamma,
        "markovian_gamma": obs.markovian_rate(model),
        "asymptote": asymptote,
        "fit_residual": resid,
        "P_z_ground": gs_p_z,
        "ground_energy": gs_energy,
        "alpha_fit": alpha,
        "spectral_exponent": s_exp,
    })
    background = obs.quench_background(model, gs_n_k, config.t_final)
    record.profiles["n_k_background"] = background
    try:
        omega_peak, spectrum = obs.emission_peak(
            n_k, background, model.basis, band_cutoff=2.0 * config.omega_at)
        record.profiles["spectrum"] = spectrum
        record.scalars["omega_peak"] = omega_peak
        record.scalars["spectrum_max_bin"] = float(spectrum.max())
    except ValueError:
        record.scalars["omega_peak"] = float("nan")
    if alpha < 1.0:
        record.scalars["omega_eff"] = effective_frequency(
            config.omega_at, model.basis.omega_c, alpha)
    return record


def wavepacket_amplitudes(model, omega: float, x_center: float,
                          sigma_omega: float, n_photons: float,
                          clip_tol: float = 0.05) -> np.ndarray:
    """Per-mode displacement amplitudes of a Gaussian coherent packet:
    envelope exp(-(w_k-w)^2 / 4 sigma^2) with spatial phase exp(-i k x0),
    normalized so sum |beta_k|^2 = n_photons."""
    w = model.basis.frequencies
    k = model.basis.k_values
    env = np.exp(-((w - omega) ** 2) / (4.0 * sigma_omega ** 2))
    # fraction of the continuum envelope outside the band
    lo = (1.0 + erf((w[0] - omega) / (np.sqrt(2.0) * sigma_omega))) / 2.0
    hi = (1.0 - erf((w[-1] - omega) / (np.sqrt(2.0) * sigma_omega))) / 2.0
    if lo + hi > clip_tol:
        raise OhmicConfigError(
            f"wavepacket envelope clipped by {lo + hi:.1%} at the band "
            "edges; widen the band or narrow the packet")
    beta = env * np.exp(-1j * k * x_center)
    beta *= np.sqrt(n_photons / np.sum(np.abs(beta) ** 2))
    return beta


def run_scatter(config: ExperimentConfig) -> ExperimentRecord:
    """Single-packet scattering: displace a coherent wavepacket on top of
    the interacting ground state, evolve through the collision, report
    transmitted/reflected photon fractions from the relative real-space
    profile."""
    record = ExperimentRecord(metadata=_metadata(config))
    model = _model(config)
    i_q = config.resolved_i_q()
    sigma = config.sigma_omega
    if sigma <= 0.0:
        spacing = np.diff(model.basis.frequencies)
        sigma = 8.0 * float(np.interp(config.omega,
                                      model.basis.frequencies[:-1],
                                      spacing))
    x_center = config.x_center
    if x_center < 0.0:
        x_center = max(i_q - config.L // 4, 2)
    beta = wavepacket_amplitudes(model, config.omega, x_center, sigma,
                                 config.n_photons)
    gs_state, _, _ = _ground(model, config)
    gs_n_i = obs.site_occupations(gs_state, model.basis, config.omega0)
    state = gs_state
    for m_idx in range(model.L):
        if abs(beta[m_idx]) > 1e-12:
            state = mps.displace(state, 1 + m_idx, beta[m_idx])
    series, final, grid = _emission_evolution(
        model, config, reference_n_i=gs_n_i, initial=state)
    record.series = series
    if grid is not None:
        record.grids["n_i_rel"] = grid[0]
        record.grids["t"] = grid[1]
    n_i = obs.site_occupations(final, model.basis, config.omega0)
    rel = n_i - gs_n_i
    record.profiles["site"] = np.arange(config.L)
    record.profiles["n_i_rel"] = rel
    transmitted, reflected = obs.scattering_fractions(rel, i_q)
    record.scalars.update({
        "transmitted_fraction": transmitted,
        "reflected_fraction": reflected,
        "omega": config.omega,
        "sigma_omega": float(sigma),
        "x_center": float(x_center),
    })
    return record


def _susceptibility_point(config: ExperimentConfig, g: float,
                          epsilon: float):
    """(P_x_plus, P_x_minus, chi_x) from a pair of biased emission runs."""
    res = {}
    for sgn in (+1.0, -1.0):
        model = _model(config, g=g, epsilon=sgn * epsilon)
        series, _, _ = _emission_evolution(model, config)
        res[sgn] = obs.stationary_p_x(series["t"], series["P_x"])
    chi = (res[-1.0] - res[+1.0]) / (2.0 * epsilon)
    return res[+1.0], res[-1.0], float(chi)


def run_susceptibility(config: ExperimentConfig) -> ExperimentRecord:
    """Stationary susceptibility chi_x versus alpha from paired biased
    emission runs, with the a/omega_eff fit over the sub-localization
    points."""
    record = ExperimentRecord(metadata=_metadata(config))
    epsilon = config.epsilon_bias or 1e-3 * config.omega_at
    alphas = np.array(config.alpha_grid, dtype=float)
    gs = [g_for_target_alpha(config, a) for a in alphas]

    def point(g):
        return _susceptibility_point(config, g, epsilon)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(point, gs))
    else:
        results = [point(g) for g in gs]
    chi = np.array([r[2] for r in results])
    record.profiles["alpha"] = alphas
    record.profiles["g"] = np.array(gs)
    record.profiles["chi_x"] = chi
    record.profiles["P_x_plus"] = np.array([r[0] for r in results])
    record.profiles["P_x_minus"] = np.array([r[1] for r in results])
    noise = 1e-7
    record.profiles["low_signal"] = np.array(
        [abs(r[0] - r[1]) < 10 * noise for r in results]).astype(int)
    fit_mask = alphas < 1.0
    if fit_mask.sum() >= 2:
        w_eff = np.array([
            effective_frequency(config.omega_at,
                                np.sqrt(2.0) * config.omega0, a)
            for a in alphas[fit_mask]])
        x = 1.0 / w_eff
        y = chi[fit_mask]
        a_fit = float(np.dot(x, y) / np.dot(x, x))
        resid = float(np.linalg.norm(y - a_fit * x) / np.linalg.norm(y))
        record.scalars["fit_a"] = a_fit
        record.scalars["fit_residual"] = resid
    record.scalars["epsilon_bias"] = float(epsilon)
    return record


def run_circuit(config: ExperimentConfig) -> ExperimentRecord:
    """Effective qubit-line coupling versus small-junction size."""
    record = ExperimentRecord(metadata=_metadata(config))
    grid = np.linspace(config.alphaJ_min, config.alphaJ_max,
                       config.alphaJ_steps)
    line = LineCouplingSpec(L_ind=config.L_ind, C_cap=config.C_cap)
    points = coupling_curve(grid, line, EJ=config.EJ, EC=config.EC,
                            f_bias=config.f_bias, n_cutoff=config.n_cutoff)
    record.profiles["alphaJ"] = np.array([p.alphaJ for p in points])
    record.profiles["omega_at"] = np.array([p.omega_at for p in points])
    record.profiles["m01"] = np.array([p.m01 for p in points])
    record.profiles["g_eff"] = np.array([p.g_eff for p in points])
    record.profiles["ratio"] = np.array([p.ratio for p in points])
    record.profiles["converged"] = np.array(
        [p.converged for p in points]).astype(int)
    band = usc_band(points)
    if band is not None:
        record.scalars["usc_band_low"] = band[0]
        record.scalars["usc_band_high"] = band[1]
    record.scalars["lambda"] = line.lam
    if not all(p.converged for p in points):
        raise ConvergenceFailure(
            "charge-basis cutoff did not converge at some grid points")
    return record


RUNNERS = {
    "ground": run_ground,
    "emit": run_emit,
    "scatter": run_scatter,
    "susceptibility": run_susceptibility,
    "circuit": run_circuit,
}


def run_scenario(config: ExperimentConfig) -> ExperimentRecord:
    if config.scenario not in RUNNERS:
        raise OhmicConfigError(
            f"scenario must be one of {tuple(RUNNERS)}, "
            f"got {config.scenario!r}")
    start = time.time()
    record = RUNNERS[config.scenario](config)
    record.metadata["wall_time_s"] = time.time() - start
    record.scalars = {k: float(v) for k, v in record.scalars.items()}
    return record


# ---------------------------------------------------------------------------
# output


def _fmt_cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _write_atomic(path: str, data: str):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _csv_text(columns: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    names = list(columns)
    writer.writerow(names)
    length = len(next(iter(columns.values())))
    for name in names:
        if len(columns[name]) != length:
            raise ValueError(f"column {name} has inconsistent length")
    for row in zip(*(columns[n] for n in names)):
        writer.writerow([_fmt_cell(x) for x in row])
    return buf.getvalue()


def write_record(record: ExperimentRecord, config: ExperimentConfig) -> str:
    """Write one run directory; returns its path."""
    out = os.path.join(config.out_dir, config.resolved_run_id())
    os.makedirs(out, exist_ok=True)
    if record.series:
        _write_atomic(os.path.join(out, "series.csv"),
                      _csv_text(record.series))
    if record.profiles:
        groups = {}
        for name, col in record.profiles.items():
            groups.setdefault(len(col), {})[name] = col
        for n, (length, cols) in enumerate(sorted(groups.items())):
            fname = "profiles.csv" if len(groups) == 1 else \
                f"profiles_{length}.csv"
            _write_atomic(os.path.join(out, fname), _csv_text(cols))
    for name, grid in record.grids.items():
        if np.ndim(grid) != 2:
            continue
        rows = "\n".join(
            ",".join(repr(float(x)) for x in row) for row in grid)
        _write_atomic(os.path.join(out, f"grid_{name}.csv"), rows + "\n")
    meta = dict(record.metadata)
    meta["scalars"] = record.scalars
    _write_atomic(os.path.join(out, "metadata.json"),
                  json.dumps(meta, indent=2, sort_keys=True, default=float))
    return out
