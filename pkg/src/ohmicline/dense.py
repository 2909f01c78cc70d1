"""Dense exact-diagonalization reference for small instances.

Basis ordering is qubit-major, then modes 1..L Fock-minor, i.e. the state
vector index is built with numpy.kron(qubit, mode_1, ..., mode_L).  The
MPS/MPO dense reconstructions below use the same ordering, so vectors are
directly comparable across modules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SIGMA_X, SIGMA_Z, SpinBosonModel, qubit_hamiltonian_matrix
from .mps import MpoOperator, MpsState

# full matrices are built, so the guard bounds the matrix side length
MAX_DENSE_DIM = 8192


class DimensionOverflowError(ValueError):
    """Requested dense model exceeds the size guard."""


def _mode_ops(n_max: int):
    d = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    return a, a.conj().T, np.diag(np.arange(d)).astype(complex)


def _embed(ops: dict, dims) -> np.ndarray:
    """kron product with ``ops[site]`` inserted and identities elsewhere."""
    out = np.eye(1, dtype=complex)
    for i, d in enumerate(dims):
        m = ops.get(i, np.eye(d, dtype=complex))
        out = np.kron(out, m)
    return out


@dataclass
class DenseModel:
    model: SpinBosonModel
    hamiltonian: np.ndarray

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def dense_build(model: SpinBosonModel) -> DenseModel:
    """Full Hamiltonian matrix of the truncated model."""
    dims = model.phys_dims
    D = 1
    for d in dims:  # python ints: no silent overflow for large chains
        D *= d
    if D > MAX_DENSE_DIM:
        raise DimensionOverflowError(
            f"dense dimension {D} exceeds guard {MAX_DENSE_DIM}")
    a, adag, num = _mode_ops(model.n_max)
    H = _embed({0: qubit_hamiltonian_matrix(model)}, dims)
    for i, w in enumerate(model.basis.frequencies):
        H += w * _embed({1 + i: num}, dims)
    for i, u in enumerate(model.u_k):
        coupling = model.g * (np.conj(u) * a + u * adag)
        H += _embed({0: SIGMA_X, 1 + i: coupling}, dims)
    residual = np.abs(H - H.conj().T).max()
    if residual > 1e-12:
        raise ValueError(f"hermiticity residual {residual:.2e}")
    return DenseModel(model=model, hamiltonian=H)


def exact_ground(dense: DenseModel):
    """Lowest eigenpair (energy, normalized state vector)."""
    evals, evecs = np.linalg.eigh(dense.hamiltonian)
    return float(evals[0]), evecs[:, 0]


def exact_evolve(dense: DenseModel, state0: np.ndarray, times,
                 observables: dict = None):
    """Unitary evolution via eigendecomposition.  Returns the state at
    each time and, if ``observables`` (name -> matrix) is given, a dict of
    expectation-value series."""
    evals, evecs = np.linalg.eigh(dense.hamiltonian)
    c0 = evecs.conj().T @ state0
    states = []
    series = {name: [] for name in (observables or {})}
    for t in times:
        psi = evecs @ (np.exp(-1j * evals * t) * c0)
        states.append(psi)
        for name, op in (observables or {}).items():
            series[name].append(float(np.real(np.vdot(psi, op @ psi))))
    return np.array(states), {k: np.array(v) for k, v in series.items()}


def parity_matrix(model: SpinBosonModel) -> np.ndarray:
    """sigma_z x (-1)^(total photon number); commutes with H at eps = 0."""
    dims = model.phys_dims
    signs = np.diag((-1.0) ** np.arange(model.n_max + 1)).astype(complex)
    ops = {0: SIGMA_Z}
    for i in range(model.L):
        ops[1 + i] = signs
    return _embed(ops, dims)


# ---------------------------------------------------------------------------
# dense reconstructions of tensor trains (test oracles)


def mps_to_dense(state: MpsState) -> np.ndarray:
    v = state.tensors[0]  # (1, d, r)
    vec = v.reshape(v.shape[1], v.shape[2])
    for t in state.tensors[1:]:
        vec = np.tensordot(vec, t, axes=(1, 0))
        vec = vec.reshape(-1, t.shape[2])
    return vec[:, 0]


def mpo_to_dense(op: MpoOperator) -> np.ndarray:
    t = op.tensors[0]
    mat = t.transpose(0, 1, 2, 3)  # (1, po, pi, r)
    mat = mat.reshape(t.shape[1], t.shape[2], t.shape[3])
    for w in op.tensors[1:]:
        # mat (PO, PI, r) x w (r, po, pi, r') -> (PO, PI, po, pi, r')
        mat = np.tensordot(mat, w, axes=(2, 0))
        PO, PI, po, pi, r = mat.shape
        mat = mat.transpose(0, 2, 1, 3, 4).reshape(PO * po, PI * pi, r)
    return mat[:, :, 0]
