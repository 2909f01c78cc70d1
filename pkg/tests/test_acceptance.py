"""End-to-end validation of the physics claims, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
numbers.  The heavy L = 121 real-time evolutions (criteria 4-6, 8-10)
are cached under ``tests/.cache``: the first full run takes a few hours,
subsequent runs replay from disk in seconds.  ``-m "not slow"`` skips
the heavy criteria.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from conftest import cached_run
from ohmicline import observables as obs
from ohmicline.circuit import FluxQubitSpec, LineCouplingSpec, \
    coupling_curve, phi_minus_operator, qubit_spectrum, usc_band
from ohmicline.config import ExperimentConfig
from ohmicline.dense import dense_build, exact_evolve, exact_ground, \
    mps_to_dense
from ohmicline.experiments import g_for_target_alpha, run_scenario, \
    write_record
from ohmicline.model import ChainSpec, SIGMA_Z, analytic_cat_occupations, \
    build_modes, make_model, spectral_alpha
from ohmicline.mps import CompressionParams, make_product_state
from ohmicline.propagate import KrylovParams, TrotterPlan, evolve, \
    ground_state


def _report(num: int, desc: str, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {desc} " \
           f"({detail})"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# shared heavy runs (cached on disk)

EMIT_ALPHAS = (0.03, 0.06, 0.1, 0.2, 0.3, 0.5, 0.8)

EMIT_BASE = dict(scenario="emit", L=121, omega_at=1.0 / 3.0, n_max=4,
                 chi_max=40, svd_cutoff=1e-10, dt=0.05, t_final=75.0,
                 gs_tol=1e-8, run_id="acceptance-emit")

SCATTER_OMEGAS = (0.10, 0.14, 0.18, 0.22, 0.26, 0.30)

MID_BASE = dict(L=101, i_q="mid", omega_at=1.0 / 3.0, n_max=4, chi_max=24,
                svd_cutoff=1e-10, dt=0.05, gs_tol=1e-8)


@pytest.fixture(scope="module")
def emission_runs():
    """End-coupled L = 121 spontaneous-emission runs per target alpha."""
    out = {}
    for alpha in EMIT_ALPHAS:
        cfg = ExperimentConfig(**EMIT_BASE)
        if alpha >= 0.7:
            # deep in the polarization regime the parity doublet is
            # near-degenerate and truncation noise sets an energy floor
            # above the default tolerance
            cfg = replace(cfg, gs_tol=1e-6)
        cfg = replace(cfg, g=g_for_target_alpha(cfg, alpha))
        out[alpha] = cached_run(cfg)
    return out


@pytest.fixture(scope="module")
def mid_emission():
    """Mid-chain emission at alpha ~ 0.2 (reference peak for scattering)."""
    cfg = ExperimentConfig(scenario="emit", t_final=40.0,
                           run_id="acceptance-mid-emit", **MID_BASE)
    cfg = replace(cfg, g=g_for_target_alpha(cfg, 0.2))
    return cached_run(cfg)


@pytest.fixture(scope="module")
def scatter_scan():
    """Mid-chain single-packet transmission versus packet frequency."""
    out = {}
    for omega in SCATTER_OMEGAS:
        cfg = ExperimentConfig(scenario="scatter", t_final=45.0,
                               omega=omega, sigma_omega=0.04, x_center=25.0,
                               run_id="acceptance-scatter", **MID_BASE)
        cfg = replace(cfg, g=g_for_target_alpha(cfg, 0.2))
        out[omega] = cached_run(cfg)
    return out


@pytest.fixture(scope="module")
def susceptibility_run():
    cfg = ExperimentConfig(scenario="susceptibility", L=61, n_max=5,
                           chi_max=16, svd_cutoff=1e-10, dt=0.05,
                           t_final=50.0, gs_tol=1e-8, epsilon_bias=2e-3,
                           alpha_grid=(0.1, 0.2, 0.3, 0.4, 1.2),
                           run_id="acceptance-chi")
    return cached_run(cfg)


# ---------------------------------------------------------------------------
# 1-2: oracle equivalence on dense-solvable instances


ORACLE_GS = (0.1, 0.3, 0.6)


def _oracle_model(g):
    return make_model(4, 1.0 / 3.0, g, n_max=3)


def _oracle_kparams():
    return KrylovParams(compression=CompressionParams(chi_max=16,
                                                      svd_cutoff=1e-14))


def test_criterion_01_oracle_statics():
    worst = 0.0
    for g in ORACLE_GS:
        m = _oracle_model(g)
        e_exact, _ = exact_ground(dense_build(m))
        _, e_mps, _ = ground_state(m, schedule=(0.5, 0.1, 0.02, 0.005,
                                                0.002),
                                   energy_tol=1e-12,
                                   kparams=_oracle_kparams())
        worst = max(worst, abs(e_mps - e_exact))
    _report(1, "ground energy matches exact diagonalization", worst <= 1e-6,
            f"max |dE| = {worst:.2e} <= 1e-6 over g = {ORACLE_GS}")


def _quench_error(m, dense, dt, t_total):
    """(max |dP_z|, endpoint |dP_z|) of the split-step evolution."""
    plan = TrotterPlan(dt=dt, n_steps=int(round(t_total / dt)), mode="real")
    p_z, ts = [], []

    def cb(state, t, n):
        p_z.append(obs.bloch_populations(state)[0])
        ts.append(t)

    s0 = make_product_state((0.0, 1.0), [0] * m.L, m.n_max)
    evolve(s0, m, plan, _oracle_kparams(), interaction="exact", callback=cb)
    psi0 = mps_to_dense(make_product_state((0.0, 1.0), [0] * m.L, m.n_max))
    sz = np.kron(SIGMA_Z, np.eye(dense.dim // 2))
    _, series = exact_evolve(dense, psi0, np.array(ts), {"sz": sz})
    err = np.abs(np.array(p_z) - 0.5 * (series["sz"] + 1.0))
    return float(err.max()), float(err[-1])


def test_criterion_02_oracle_dynamics():
    t_total = 30.0  # t * omega_at = 10
    worst_err, ratios = 0.0, []
    for g in ORACLE_GS:
        m = _oracle_model(g)
        dense = dense_build(m)
        max_err, end_coarse = _quench_error(m, dense, 0.05, t_total)
        _, end_fine = _quench_error(m, dense, 0.025, t_total)
        worst_err = max(worst_err, max_err)
        ratios.append(end_coarse / end_fine)
    ok = worst_err <= 1e-3 and all(3.0 <= r <= 5.0 for r in ratios)
    _report(2, "quench P_z matches exact propagation, 2nd-order in dt", ok,
            f"max |dP_z| = {worst_err:.2e} <= 1e-3, dt-halving ratios "
            + ", ".join(f"{r:.2f}" for r in ratios) + " in [3, 5]")


# ---------------------------------------------------------------------------
# 3: Ohmic spectral law


def test_criterion_03_spectral_law():
    grid = (0.2, 0.4, 0.6, 0.8)
    exponents, ratios = [], []
    for g in grid:
        alpha, s = spectral_alpha(make_model(121, 1.0 / 3.0, g, n_max=2))
        exponents.append(s)
        ratios.append(alpha / g ** 2)
    spread = (max(ratios) - min(ratios)) / np.mean(ratios)
    ok = all(0.9 <= s <= 1.1 for s in exponents) and spread <= 1e-6
    _report(3, "spectral exponent s = 1 and alpha proportional to g^2", ok,
            f"s in [{min(exponents):.4f}, {max(exponents):.4f}], "
            f"alpha/g^2 spread = {spread:.1e} <= 1e-6")


# ---------------------------------------------------------------------------
# 4-6: spontaneous emission against the closed-form laws


@pytest.mark.slow
def test_criterion_04_markovian_decay(emission_runs):
    details, ok = [], True
    for alpha in (0.03, 0.06, 0.1):
        s = emission_runs[alpha].scalars
        rel = abs(s["gamma"] - s["markovian_gamma"]) / s["markovian_gamma"]
        da = abs(s["asymptote"] - s["P_z_ground"])
        ok = ok and rel <= 0.20 and da <= 0.05
        details.append(f"a={alpha}: dgamma {rel:.1%}, dasymptote {da:.3f}")
    _report(4, "decay rate matches the master-equation prediction", ok,
            "; ".join(details))


@pytest.mark.slow
def test_criterion_05_relaxation_to_ground_state(emission_runs):
    details, ok = [], True
    for alpha in (0.1, 0.3, 0.5):
        rec = emission_runs[alpha]
        t = np.asarray(rec.series["t"])
        p_z = np.asarray(rec.series["P_z"])
        window = (t >= 54.0) & (t <= 66.0)  # t * omega_at ~ 20
        diff = abs(float(np.mean(p_z[window]))
                   - rec.scalars["P_z_ground"])
        ok = ok and diff <= 0.05
        details.append(f"a={alpha}: |P_z - P_z_gs| = {diff:.3f}")
    _report(5, "P_z relaxes to the ground-state Bloch vector", ok,
            "; ".join(details))


def _peak_from_record(rec, L, omega_at):
    """Recompute the emission-line frequency and spectrum from the stored
    mode profiles (independent of the scalars cached at run time)."""
    mc = rec.metadata["config"]["model"]
    i_q = L // 2 if mc["i_q"] == "mid" else int(mc["i_q"])
    model = make_model(L, omega_at, mc["g"], coupling_kind=mc
                       ["coupling_kind"], i_q=i_q, n_max=mc["n_max"])
    background = obs.quench_background(
        model, np.asarray(rec.profiles["n_k_ground"]),
        rec.metadata["config"]["numerics"]["t_final"])
    return obs.emission_peak(np.asarray(rec.profiles["n_k"]), background,
                             model.basis, band_cutoff=2.0 * omega_at)


@pytest.mark.slow
def test_criterion_06_renormalized_emission_peak(emission_runs):
    details, ok = [], True
    for alpha in (0.1, 0.2, 0.3):
        rec = emission_runs[alpha]
        peak, _ = _peak_from_record(rec, 121, 1.0 / 3.0)
        freqs = np.asarray(rec.profiles["omega_k"])
        spacing = float(np.interp(rec.scalars["omega_eff"], freqs[:-1],
                                  np.diff(freqs)))
        tol = max(2.0 * spacing, 0.20 * rec.scalars["omega_eff"])
        diff = abs(peak - rec.scalars["omega_eff"])
        ok = ok and diff <= tol
        details.append(f"a={alpha}: |peak-w_eff| = {diff:.4f} <= {tol:.4f}")
    _, spectrum = _peak_from_record(emission_runs[0.8], 121, 1.0 / 3.0)
    max_bin = float(np.max(spectrum))
    ok = ok and max_bin <= 0.25
    details.append(f"a=0.8 spread: max bin {max_bin:.3f} <= 0.25")
    _report(6, "emission peaks at the adiabatically renormalized frequency",
            ok, "; ".join(details))


# ---------------------------------------------------------------------------
# 7: degenerate (cat) limit


@pytest.mark.slow
def test_criterion_07_cat_limit():
    m = make_model(41, 1e-3, 0.3, n_max=4)
    kp = KrylovParams(compression=CompressionParams(chi_max=16,
                                                    svd_cutoff=1e-14))
    state, _, _ = ground_state(m, schedule=(0.5, 0.1, 0.02, 0.005),
                               energy_tol=1e-10, kparams=kp)
    n_k = obs.mode_occupations(state)
    ref = analytic_cat_occupations(m)
    mask = ref > 1e-4
    rel = np.abs(n_k[mask] - ref[mask]) / ref[mask]
    ok = bool(rel.max() <= 0.05)
    _report(7, "cat-limit mode occupations match g^2 |u_k|^2 / w_k^2", ok,
            f"max rel err {rel.max():.2%} <= 5% on {mask.sum()} modes")


# ---------------------------------------------------------------------------
# 8: scattering resonance at the emission frequency


@pytest.mark.slow
def test_criterion_08_scattering_resonance(mid_emission, scatter_scan):
    peak, _ = _peak_from_record(mid_emission, 101, 1.0 / 3.0)
    freqs = np.asarray(mid_emission.profiles["omega_k"])
    spacing = float(np.interp(peak, freqs[:-1], np.diff(freqs)))
    omegas = np.array(sorted(scatter_scan))
    trans = np.array([obs.scattering_fractions(
        np.asarray(scatter_scan[w].profiles["n_i_rel"]), 50)[0]
        for w in omegas])
    w_min = float(omegas[np.argmin(trans)])
    diff = abs(w_min - peak)
    ok = diff <= 2.0 * spacing
    _report(8, "transmission minimum sits at the emission peak", ok,
            f"min T = {trans.min():.3f} at w = {w_min:.3f}, emission peak "
            f"{peak:.3f}, |dw| = {diff:.4f} <= {2 * spacing:.4f}")


# ---------------------------------------------------------------------------
# 9: stationary susceptibility


@pytest.mark.slow
def test_criterion_09_susceptibility(susceptibility_run):
    rec = susceptibility_run
    alphas = np.asarray(rec.profiles["alpha"])
    chi = np.asarray(rec.profiles["chi_x"])
    resid = rec.scalars["fit_residual"]
    chi_02 = float(chi[np.argmin(np.abs(alphas - 0.2))])
    chi_12 = float(chi[np.argmin(np.abs(alphas - 1.2))])
    ok = resid <= 0.20 and abs(chi_12) < 0.1 * abs(chi_02)
    # Known red: the model's stationary susceptibility does not follow
    # a/w_eff at this tolerance under any coherent protocol -- the
    # quasi-stationary finite-time value undershoots at alpha >= 0.3
    # (no plateau before the revival bound) while the exact
    # ground-state linear response overshoots (residual 0.32); see the
    # susceptibility entry in the decisions ledger for the full
    # measurement survey.
    _report(9, "chi_x fits a/w_eff and collapses in the localized phase",
            ok, f"fit residual {resid:.1%} (<= 20% required), "
                f"chi(1.2)/chi(0.2) = {chi_12 / chi_02:.3f} (|.| < 0.1)")


# ---------------------------------------------------------------------------
# 10: numerical hygiene of the real-time evolution


@pytest.mark.slow
def test_criterion_10_numerical_hygiene(emission_runs):
    details, ok = [], True
    for alpha in (0.1, 0.2):
        rec = emission_runs[alpha]
        loss = np.abs(np.asarray(rec.series["norm"]) - 1.0)
        trunc = np.asarray(rec.series["truncation"])
        norm_ok = bool(np.all(loss <= trunc + 1e-12))
        t = np.asarray(rec.series["t"])
        energy = np.asarray(rec.series["energy"])
        m = np.isfinite(energy) & (t <= 60.0)  # t * omega_at = 20
        # the initial-state energy sits near the (arbitrary) zero of H,
        # so normalize by the bandwidth unit omega_0 = 1 when larger
        scale = max(abs(energy[m][0]), 1.0)
        drift = float(np.max(np.abs(energy[m] - energy[m][0])) / scale)
        ok = ok and norm_ok and drift <= 1e-3
        details.append(f"a={alpha}: max norm loss {loss.max():.1e} "
                       f"(bounded: {norm_ok}), energy drift {drift:.1e}")
    _report(10, "norm loss bounded by truncation, energy conserved", ok,
            "; ".join(details))


# ---------------------------------------------------------------------------
# 11: circuit module


def test_criterion_11_circuit_coupling_curve():
    line = LineCouplingSpec(L_ind=36.0, C_cap=36.0)
    grid = np.linspace(0.5, 0.9, 17)
    points = coupling_curve(grid, line, EJ=1.0, EC=0.02, f_bias=0.5,
                            n_cutoff=10)
    mid = [p for p in points if 0.55 <= p.alphaJ <= 0.85]
    m01 = np.array([p.m01 for p in mid])
    increasing = bool(np.all(np.diff(m01) > 0))
    band = usc_band(points)
    overlap = band is not None and band[0] <= 0.7 and band[1] >= 0.6
    # charge-basis convergence: splitting and matrix element stable in
    # the cutoff to 1e-4 relative
    conv = all(p.converged for p in points)
    rels = []
    for aJ in (0.6, 0.75):
        m01_by_nc = []
        for nc in (10, 14):
            spec = FluxQubitSpec(EJ=1.0, EC=0.02, alphaJ=aJ, f_bias=0.5,
                                 n_cutoff=nc)
            _, _, vecs = qubit_spectrum(spec, check_convergence=False)
            phi = phi_minus_operator(nc)
            m01_by_nc.append(abs(np.vdot(vecs[:, 0], phi @ vecs[:, 1])))
        rels.append(abs(m01_by_nc[1] - m01_by_nc[0]) / m01_by_nc[1])
    cutoff_ok = conv and max(rels) <= 1e-4
    ok = increasing and overlap and cutoff_ok
    _report(11, "circuit coupling curve and USC band", ok,
            f"m01 increasing: {increasing}, USC band {band} overlaps "
            f"[0.6, 0.7]: {overlap}, cutoff rel change {max(rels):.1e}")


# ---------------------------------------------------------------------------
# 12: determinism


def test_criterion_12_determinism(tmp_path):
    base = ExperimentConfig(scenario="ground", L=10, n_max=2, g=0.3,
                            chi_max=12, gs_tol=1e-8, run_id="det")
    outputs = []
    for sub in ("a", "b"):
        cfg = replace(base, out_dir=str(tmp_path / sub))
        outputs.append(write_record(run_scenario(cfg), cfg))
    import os
    names = sorted(f for f in os.listdir(outputs[0]) if f.endswith(".csv"))
    identical = bool(names)
    for name in names:
        with open(os.path.join(outputs[0], name), "rb") as fh:
            a = fh.read()
        with open(os.path.join(outputs[1], name), "rb") as fh:
            b = fh.read()
        identical = identical and a == b
    _report(12, "identical configs produce byte-identical CSVs", identical,
            f"{len(names)} CSV files compared")
