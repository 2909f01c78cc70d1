"""Real- and imaginary-time evolution.

The step is a second-order Strang splitting

    exp(c H0/2) exp(c g H_I) exp(c H0/2),   c = -i dt (real) or -dt (imag).

The H0 factor is exact (single-site phases / damps).  The interaction
factor is applied either by a Krylov (Arnoldi) approximation of
exp(c g H_I)|psi> built on compressed MPS arithmetic, or exactly: since
H_I = sigma_x B with B a sum of commuting single-mode operators, the
exponential is a qubit-controlled product of single-mode maps and fits in
a bond-dimension-2 MPO.  The Krylov route is the reference algorithm; the
exact route is preferred for long production runs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import mps
from .mps import CompressionParams, MpoOperator, MpsState
from .model import SpinBosonModel, build_h_mpo, build_hi_mpo, \
    qubit_hamiltonian_matrix


class KrylovConvergenceError(RuntimeError):
    """Krylov residual estimate above tolerance after m vectors."""

    def __init__(self, residual: float, subspace_dim: int):
        super().__init__(
            f"Krylov residual {residual:.3e} above tolerance with "
            f"m={subspace_dim}")
        self.residual = residual
        self.subspace_dim = subspace_dim


@dataclass(frozen=True)
class TrotterPlan:
    dt: float
    n_steps: int
    mode: str = "real"  # "real" or "imaginary"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.mode not in ("real", "imaginary"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class KrylovParams:
    subspace_dim: int = 8
    residual_tol: float = 1e-8
    compression: CompressionParams = field(default_factory=CompressionParams)

    def __post_init__(self):
        if self.subspace_dim < 2:
            raise ValueError("subspace_dim must be at least 2")


@dataclass
class EvolutionLog:
    """Per-step diagnostics of one evolution."""

    times: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    max_bond: list = field(default_factory=list)
    truncation: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def record(self, t, nrm, energy, chi, trunc):
        self.times.append(t)
        self.norms.append(nrm)
        self.energies.append(energy)
        self.max_bond.append(chi)
        self.truncation.append(trunc)


# ---------------------------------------------------------------------------
# exact H0 factor


def h0_half_step(state: MpsState, model: SpinBosonModel, dt: float,
                 mode: str = "real") -> MpsState:
    """exp(c H0 dt/2)|psi> with c = -i (real) or -1 (imaginary), applied as
    single-site maps; bond dimensions unchanged."""
    c = -0.5j * dt if mode == "real" else -0.5 * dt
    tensors = list(state.tensors)
    uq = expm(c * qubit_hamiltonian_matrix(model))
    tensors[0] = np.tensordot(uq, tensors[0], axes=(1, 1)).transpose(1, 0, 2)
    ns = np.arange(model.n_max + 1)
    for i, w in enumerate(model.basis.frequencies):
        phase = np.exp(c * w * ns)
        tensors[1 + i] = tensors[1 + i] * phase[None, :, None]
    return MpsState(tensors, center=None, truncation_log=state.truncation_log)


# ---------------------------------------------------------------------------
# Krylov interaction factor


def krylov_exp_apply(hi: MpoOperator, state: MpsState, coefficient: complex,
                     params: KrylovParams):
    """Approximate exp(coefficient * H_I)|psi> in an Arnoldi subspace.

    Basis vectors are compressed MPS; the small Hessenberg matrix is
    exponentiated densely.  Returns ``(state, residual_estimate)``;
    raises :class:`KrylovConvergenceError` when the residual stays above
    ``params.residual_tol`` after ``subspace_dim`` vectors.
    """
    if coefficient == 0:
        return state.copy(), 0.0
    m = params.subspace_dim
    comp = params.compression
    beta = mps.norm(state)
    vecs = [mps.scale(state, 1.0 / beta)]
    H = np.zeros((m + 1, m), dtype=complex)
    used = m
    residual = np.inf
    for j in range(m):
        w = mps.apply_mpo(hi, vecs[j], comp)
        # modified Gram-Schmidt against all previous basis vectors
        coeffs = [1.0]
        for i in range(j + 1):
            h = mps.inner(vecs[i], w)
            H[i, j] = h
            coeffs.append(-h)
        perp = mps.add_states([w] + vecs[:j + 1], coeffs)
        perp, _, hnext = mps._compress_core(perp, comp, exact_error=False)
        H[j + 1, j] = hnext
        u = expm(coefficient * H[:j + 1, :j + 1])[:, 0]
        residual = abs(coefficient) * hnext * abs(u[-1])
        used = j + 1
        if residual < params.residual_tol or hnext < 1e-13:
            break
        if used < m:
            vecs.append(perp)
    if residual >= params.residual_tol:
        raise KrylovConvergenceError(float(residual), m)
    u = expm(coefficient * H[:used, :used])[:, 0] * beta
    out = mps.add_states(vecs[:used], u)
    out, _, nrm = mps._compress_core(out, comp, exact_error=False)
    return mps.scale(out, nrm), float(residual)


# ---------------------------------------------------------------------------
# exact interaction factor


def interaction_step_mpo(model: SpinBosonModel, coefficient: complex
                         ) -> MpoOperator:
    """exp(coefficient * g * H_I) as a bond-dimension-2 MPO.

    In the sigma_x eigenbasis the interaction is a product of single-mode
    displacement-type exponentials controlled by the qubit, so the
    operator is exact within the truncated Fock space.
    """
    d = model.n_max + 1
    adag = np.diag(np.sqrt(np.arange(1, d)), -1).astype(complex)
    a = adag.conj().T
    c = coefficient * model.g
    p_plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)
    p_minus = 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)
    w0 = np.zeros((1, 2, 2, 2), dtype=complex)
    w0[0, :, :, 0] = p_plus
    w0[0, :, :, 1] = p_minus
    tensors = [w0]
    L = model.L
    for i in range(L):
        b = np.conj(model.u_k[i]) * a + model.u_k[i] * adag
        dp = expm(c * b)
        dm = expm(-c * b)
        if i == L - 1:
            t = np.zeros((2, d, d, 1), dtype=complex)
            t[0, :, :, 0] = dp
            t[1, :, :, 0] = dm
        else:
            t = np.zeros((2, d, d, 2), dtype=complex)
            t[0, :, :, 0] = dp
            t[1, :, :, 1] = dm
        tensors.append(t)
    return MpoOperator(tensors, hermitian=False)


# ---------------------------------------------------------------------------
# stepping


class Stepper:
    """Caches the per-(model, dt, mode) operators of one Strang step."""

    def __init__(self, model: SpinBosonModel, dt: float, mode: str,
                 kparams: KrylovParams, interaction: str = "krylov"):
        if interaction not in ("krylov", "exact"):
            raise ValueError(f"unknown interaction method {interaction!r}")
        self.model = model
        self.dt = dt
        self.mode = mode
        self.kparams = kparams
        self.interaction = interaction
        self.coefficient = (-1j * dt) if mode == "real" else (-dt)
        self.hi_mpo = build_hi_mpo(model) if interaction == "krylov" else None
        self.exact_mpo = (interaction_step_mpo(model, self.coefficient)
                          if interaction == "exact" else None)

    def _apply_interaction(self, state, coefficient, depth=0):
        if self.interaction == "exact":
            return mps.apply_mpo(self.exact_mpo, state,
                                 self.kparams.compression)
        try:
            out, _ = krylov_exp_apply(self.hi_mpo, state,
                                      coefficient * self.model.g,
                                      self.kparams)
            return out
        except KrylovConvergenceError:
            if depth >= 4:
                raise
            half = self._apply_interaction(state, coefficient / 2, depth + 1)
            return self._apply_interaction(half, coefficient / 2, depth + 1)

    def step(self, state: MpsState):
        """One full Strang step; returns (state, step_log_dict).  The
        returned state is normalized; the pre-normalization norm and the
        truncation added during the step are logged."""
        trunc0 = state.truncation_log
        s = h0_half_step(state, self.model, self.dt, self.mode)
        s = self._apply_interaction(s, self.coefficient)
        s = h0_half_step(s, self.model, self.dt, self.mode)
        nrm = mps.norm(s)
        s = mps.scale(s, 1.0 / nrm)
        log = {
            "norm": nrm,
            "truncation": s.truncation_log - trunc0,
            "max_bond": s.max_bond,
        }
        return s, log


def trotter_step(state: MpsState, model: SpinBosonModel, dt: float,
                 mode: str, kparams: KrylovParams,
                 interaction: str = "krylov"):
    """Single second-order step (convenience wrapper around Stepper)."""
    return Stepper(model, dt, mode, kparams, interaction).step(state)


def evolve(state: MpsState, model: SpinBosonModel, plan: TrotterPlan,
           kparams: KrylovParams, interaction: str = "krylov",
           h_mpo: MpoOperator = None, energy_stride: int = 0,
           callback=None):
    """Run ``plan.n_steps`` steps, collecting an :class:`EvolutionLog`.

    ``energy_stride`` > 0 evaluates <H> every that many steps (0 = never);
    ``callback(state, t, step_index)`` is invoked after each step.
    """
    stepper = Stepper(model, plan.dt, plan.mode, kparams, interaction)
    if energy_stride and h_mpo is None:
        h_mpo = build_h_mpo(model)
    log = EvolutionLog()
    s = state
    t = 0.0
    for n in range(plan.n_steps):
        s, step_log = stepper.step(s)
        t += plan.dt
        energy = (mps.expectation(s, h_mpo)
                  if energy_stride and (n + 1) % energy_stride == 0
                  else np.nan)
        log.record(t, step_log["norm"], energy, step_log["max_bond"],
                   step_log["truncation"])
        if callback is not None:
            callback(s, t, n)
    return s, log


# ---------------------------------------------------------------------------
# ground state


DEFAULT_SCHEDULE = (0.5, 0.1, 0.02)


def symmetric_seed(model: SpinBosonModel) -> MpsState:
    """Equal-weight qubit superposition times vacuum: overlaps both parity
    sectors, so imaginary time cannot get stuck in one at eps = 0."""
    amp = np.array([1.0, 1.0]) / np.sqrt(2.0)
    return mps.make_product_state(amp, [0] * model.L, model.n_max)


def ground_state(model: SpinBosonModel, schedule=DEFAULT_SCHEDULE,
                 energy_tol: float = 1e-9, kparams: KrylovParams = None,
                 interaction: str = "exact", seed: MpsState = None,
                 max_steps_per_stage: int = 2000):
    """Imaginary-time evolution until the energy change per unit tau drops
    below ``energy_tol`` relative, stage by stage over ``schedule`` of
    decreasing dt.  Returns (state, energy, EvolutionLog)."""
    if kparams is None:
        kparams = KrylovParams()
    s = seed if seed is not None else symmetric_seed(model)
    h_mpo = build_h_mpo(model)
    log = EvolutionLog()
    energy = mps.expectation(s, h_mpo)
    tau = 0.0
    scale_e = max(abs(energy), model.omega0)
    for dt in schedule:
        stepper = Stepper(model, dt, "imaginary", kparams, interaction)
        for n in range(max_steps_per_stage):
            s, step_log = stepper.step(s)
            tau += dt
            new_energy = mps.expectation(s, h_mpo)
            scale_e = max(abs(new_energy), model.omega0)
            log.record(tau, step_log["norm"], new_energy,
                       step_log["max_bond"], step_log["truncation"])
            if new_energy > energy + 1e-10 * scale_e:
                log.warnings.append(
                    f"energy increased by {new_energy - energy:.3e} at "
                    f"tau={tau:.3f} (dt={dt}): dt too large or chi too small")
            converged = abs(new_energy - energy) / dt < energy_tol * scale_e
            energy = new_energy
            if converged:
                break
        else:
            log.warnings.append(
                f"stage dt={dt} hit max_steps_per_stage={max_steps_per_stage}")
    return s, float(energy), log
