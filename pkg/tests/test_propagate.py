"""Time evolution: splitting factors, Krylov exponential, ground state."""

import numpy as np
import pytest
from scipy.linalg import expm

from ohmicline import dense, mps, propagate
from ohmicline.dense import dense_build, mps_to_dense, mpo_to_dense
from ohmicline.model import build_h0_mpo, build_hi_mpo, make_model
from ohmicline.mps import CompressionParams
from ohmicline.propagate import KrylovParams, Stepper, TrotterPlan, \
    evolve, ground_state, interaction_step_mpo, krylov_exp_apply


@pytest.fixture(scope="module")
def small():
    return make_model(3, 1 / 3, 0.3, n_max=2)


@pytest.fixture(scope="module")
def small_dense(small):
    return dense_build(small)


def excited(model):
    return mps.make_product_state([0.0, 1.0], [0] * model.L, model.n_max)


KP = KrylovParams(subspace_dim=10, residual_tol=1e-10,
                  compression=CompressionParams(chi_max=32,
                                                svd_cutoff=1e-14))


def test_h0_half_step_matches_dense(small):
    s = excited(small)
    out = propagate.h0_half_step(s, small, dt=0.3)
    H0 = mpo_to_dense(build_h0_mpo(small))
    expected = expm(-0.15j * H0) @ mps_to_dense(s)
    assert np.allclose(mps_to_dense(out), expected, atol=1e-12)


def test_h0_half_step_imaginary_damps(small):
    s = excited(small)
    out = propagate.h0_half_step(s, small, dt=0.5, mode="imaginary")
    H0 = mpo_to_dense(build_h0_mpo(small))
    expected = expm(-0.25 * H0) @ mps_to_dense(s)
    assert np.allclose(mps_to_dense(out), expected, atol=1e-12)


def test_krylov_matches_dense_expm(small, small_dense):
    hi = build_hi_mpo(small)
    s = excited(small)
    coeff = -0.4j * small.g
    out, residual = krylov_exp_apply(hi, s, coeff, KP)
    HI = mpo_to_dense(hi)
    expected = expm(coeff * HI) @ mps_to_dense(s)
    assert residual < 1e-10
    assert np.linalg.norm(mps_to_dense(out) - expected) < 1e-8


def test_krylov_raises_on_hopeless_budget(small):
    hi = build_hi_mpo(small)
    s = excited(small)
    tight = KrylovParams(subspace_dim=2, residual_tol=1e-14,
                         compression=KP.compression)
    with pytest.raises(propagate.KrylovConvergenceError):
        krylov_exp_apply(hi, s, -4.0j * small.g, tight)


def test_exact_interaction_mpo_equals_expm(small):
    coeff = -0.35j
    op = interaction_step_mpo(small, coeff)
    HI = mpo_to_dense(build_hi_mpo(small))
    expected = expm(coeff * small.g * HI)
    assert np.allclose(mpo_to_dense(op), expected, atol=1e-10)


@pytest.mark.parametrize("interaction", ["krylov", "exact"])
def test_strang_step_second_order(small, small_dense, interaction):
    """Halving dt must shrink the one-period endpoint error ~4x."""
    H = small_dense.hamiltonian
    psi0 = mps_to_dense(excited(small))
    t_total = 2.0
    errs = []
    for dt in (0.1, 0.05):
        n = int(round(t_total / dt))
        s = excited(small)
        stepper = Stepper(small, dt, "real", KP, interaction)
        for _ in range(n):
            s, _ = stepper.step(s)
        exact = expm(-1j * H * t_total) @ psi0
        v = mps_to_dense(s)
        phase = np.vdot(v, exact)
        errs.append(np.linalg.norm(v * phase / abs(phase) - exact))
    assert 2.5 < errs[0] / errs[1] < 6.0


def test_evolve_logs_and_callback(small):
    plan = TrotterPlan(dt=0.1, n_steps=5)
    seen = []
    final, log = evolve(excited(small), small, plan, KP,
                        interaction="exact", energy_stride=1,
                        callback=lambda s, t, n: seen.append(t))
    assert len(log.times) == 5
    assert len(seen) == 5
    # Strang splitting conserves a shadow Hamiltonian; <H> wobbles O(dt^2)
    assert np.allclose(np.diff(log.energies), 0.0, atol=1e-4)
    assert np.allclose(log.norms, 1.0, atol=1e-8)


def test_ground_state_matches_exact(small, small_dense):
    e_exact, _ = dense.exact_ground(small_dense)
    state, energy, log = ground_state(small, kparams=KP, energy_tol=1e-10)
    assert energy == pytest.approx(e_exact, abs=1e-8)
    assert mps.norm(state) == pytest.approx(1.0, rel=1e-10)
    assert not log.warnings


def test_ground_state_with_bias_polarizes():
    m = make_model(3, 1 / 3, 0.3, epsilon=0.1, n_max=2)
    state, _, _ = ground_state(m, kparams=KP, energy_tol=1e-10)
    from ohmicline.observables import qubit_bloch
    sx, _, _ = qubit_bloch(state)
    assert sx < -0.05  # positive eps sigma_x/2 favors negative <sigma_x>


def test_trotter_plan_validation():
    with pytest.raises(ValueError):
        TrotterPlan(dt=-0.1, n_steps=1)
    with pytest.raises(ValueError):
        TrotterPlan(dt=0.1, n_steps=0)
    with pytest.raises(ValueError):
        TrotterPlan(dt=0.1, n_steps=1, mode="complex")
