"""Tensor-train (MPS/MPO) arithmetic.

States are lists of rank-3 tensors with index order (left bond, physical,
right bond); operators are rank-4 tensors (left bond, physical out,
physical in, right bond).  Site 0 carries the qubit (dimension 2), the
remaining sites carry truncated Fock spaces.  All operations return new
objects; nothing is mutated in place.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from scipy.linalg import expm


class ShapeMismatchError(ValueError):
    """Tensor trains with incompatible site structure."""


@dataclass(frozen=True)
class CompressionParams:
    """Truncation policy: hard bond-dimension cap plus a relative
    singular-value cutoff (singular values below ``svd_cutoff`` times the
    largest one at a bond are discarded)."""

    chi_max: int = 40
    svd_cutoff: float = 1e-12

    def __post_init__(self):
        if self.chi_max < 1:
            raise ValueError(f"chi_max must be >= 1, got {self.chi_max}")
        if not 0.0 <= self.svd_cutoff < 1.0:
            raise ValueError(f"svd_cutoff must be in [0, 1), got {self.svd_cutoff}")


@dataclass
class MpsState:
    """Matrix product state.

    Attributes
    ----------
    tensors : list of complex rank-3 arrays, one per site.
    center : orthogonality-center index, or None when unknown.
    truncation_log : accumulated relative discarded weight over the
        lifetime of this state (carried through derived states).
    """

    tensors: list
    center: int | None = None
    truncation_log: float = 0.0

    def __post_init__(self):
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[-1] != 1:
            raise ShapeMismatchError("boundary bonds must have dimension 1")
        for a, b in zip(self.tensors[:-1], self.tensors[1:]):
            if a.shape[-1] != b.shape[0]:
                raise ShapeMismatchError(
                    f"bond mismatch: {a.shape} followed by {b.shape}")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> list:
        return [t.shape[1] for t in self.tensors]

    @property
    def bond_dims(self) -> list:
        return [t.shape[-1] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max([1] + self.bond_dims)

    def copy(self) -> "MpsState":
        return MpsState([t.copy() for t in self.tensors], self.center,
                        self.truncation_log)


@dataclass
class MpoOperator:
    """Matrix product operator with an explicit hermiticity flag."""

    tensors: list
    hermitian: bool = False

    def __post_init__(self):
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[-1] != 1:
            raise ShapeMismatchError("boundary MPO bonds must have dimension 1")
        for a, b in zip(self.tensors[:-1], self.tensors[1:]):
            if a.shape[-1] != b.shape[0]:
                raise ShapeMismatchError(
                    f"MPO bond mismatch: {a.shape} followed by {b.shape}")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)


# ---------------------------------------------------------------------------
# construction


def make_product_state(qubit_amplitudes, occupations, n_max: int) -> MpsState:
    """Bond-dimension-1 state |qubit> ⊗ |n_1> ⊗ ... ⊗ |n_L>.

    ``occupations`` lists the Fock index of every mode site; each must not
    exceed ``n_max``.
    """
    q = np.asarray(qubit_amplitudes, dtype=complex).reshape(2)
    tensors = [q.reshape(1, 2, 1)]
    d = n_max + 1
    for i, n in enumerate(occupations):
        if not 0 <= n <= n_max:
            raise ValueError(f"occupation {n} at mode {i} exceeds n_max={n_max}")
        t = np.zeros((1, d, 1), dtype=complex)
        t[0, n, 0] = 1.0
        tensors.append(t)
    return MpsState(tensors, center=0)


def random_state(phys_dims, chi: int, rng) -> MpsState:
    """Random complex MPS with internal bonds capped at ``chi``."""
    L = len(phys_dims)
    tensors = []
    left = 1
    for i, d in enumerate(phys_dims):
        right = 1 if i == L - 1 else chi
        t = rng.standard_normal((left, d, right)) + 1j * rng.standard_normal(
            (left, d, right))
        tensors.append(t)
        left = right
    state = MpsState(tensors)
    return normalize(state)


# ---------------------------------------------------------------------------
# contractions


def inner(a: MpsState, b: MpsState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.n_sites != b.n_sites or a.phys_dims != b.phys_dims:
        raise ShapeMismatchError("states have incompatible site structure")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        # env (la, lb) -> (la, p, rb) -> (ra, rb)
        tmp = np.tensordot(env, tb, axes=(1, 0))
        env = np.tensordot(np.conj(ta), tmp, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


def norm(state: MpsState) -> float:
    return float(np.sqrt(max(inner(state, state).real, 0.0)))


def normalize(state: MpsState) -> MpsState:
    nrm = norm(state)
    if nrm == 0.0:
        raise ValueError("cannot normalize a zero state")
    tensors = list(state.tensors)
    tensors[0] = tensors[0] / nrm
    return replace(state, tensors=tensors)


def scale(state: MpsState, c: complex) -> MpsState:
    tensors = list(state.tensors)
    tensors[0] = tensors[0] * c
    return replace(state, tensors=tensors)


def add_states(states, coeffs) -> MpsState:
    """Linear combination sum_j coeffs[j] |states[j]> as a block MPS."""
    ref = states[0]
    for s in states[1:]:
        if s.phys_dims != ref.phys_dims:
            raise ShapeMismatchError("cannot add states of different structure")
    L = ref.n_sites
    tensors = []
    for i in range(L):
        parts = [s.tensors[i] for s in states]
        if i == 0:
            parts = [c * t for c, t in zip(coeffs, parts)]
            blk = np.concatenate(parts, axis=2)
        elif i == L - 1:
            blk = np.concatenate(parts, axis=0)
        else:
            ls = [t.shape[0] for t in parts]
            rs = [t.shape[2] for t in parts]
            d = parts[0].shape[1]
            blk = np.zeros((sum(ls), d, sum(rs)), dtype=complex)
            lo = ro = 0
            for t, l, r in zip(parts, ls, rs):
                blk[lo:lo + l, :, ro:ro + r] = t
                lo += l
                ro += r
        tensors.append(blk)
    trunc = max(s.truncation_log for s in states)
    return MpsState(tensors, center=None, truncation_log=trunc)


# ---------------------------------------------------------------------------
# canonical forms


def _qr_left(t):
    l, d, r = t.shape
    q, rr = np.linalg.qr(t.reshape(l * d, r))
    return q.reshape(l, d, -1), rr


def _qr_right(t):
    l, d, r = t.shape
    q, rr = np.linalg.qr(t.reshape(l, d * r).conj().T)
    # t = rr^H q^H with q^H having orthonormal rows
    return q.conj().T.reshape(-1, d, r), rr.conj().T


def canonicalize(state: MpsState, center: int) -> MpsState:
    """Mixed-canonical gauge with the orthogonality center at ``center``.

    Tensors left of the center become left-isometries, tensors right of it
    right-isometries; the full contraction is unchanged.
    """
    L = state.n_sites
    if not 0 <= center < L:
        raise ValueError(f"center {center} out of range for {L} sites")
    if state.center == center:
        return state
    tensors = [t.copy() for t in state.tensors]
    for i in range(center):
        q, r = _qr_left(tensors[i])
        tensors[i] = q
        tensors[i + 1] = np.tensordot(r, tensors[i + 1], axes=(1, 0))
    for i in range(L - 1, center, -1):
        q, r = _qr_right(tensors[i])
        tensors[i] = q
        tensors[i - 1] = np.tensordot(tensors[i - 1], r, axes=(2, 0))
    return MpsState(tensors, center=center, truncation_log=state.truncation_log)


def isometry_residuals(state: MpsState):
    """Max-norm deviation of each tensor from its isometry condition,
    relative to the declared center.  Used by tests and sanity checks."""
    if state.center is None:
        raise ValueError("state has no declared orthogonality center")
    res = []
    for i, t in enumerate(state.tensors):
        l, d, r = t.shape
        if i < state.center:
            m = t.reshape(l * d, r)
            res.append(np.abs(m.conj().T @ m - np.eye(r)).max())
        elif i > state.center:
            m = t.reshape(l, d * r)
            res.append(np.abs(m @ m.conj().T - np.eye(l)).max())
        else:
            res.append(0.0)
    return res


def compress(state: MpsState, params: CompressionParams,
             exact_error: bool = True):
    """Truncate every bond to ``params`` and normalize.

    Returns ``(new_state, truncation_error)``.  With ``exact_error`` the
    reported error is the exact relative infidelity 1 - |<out|in>|^2/|in|^4
    (one extra inner product); otherwise it is the accumulated sum of
    relative discarded squared singular values, which agrees to first
    order and is cheaper inside tight evolution loops.
    """
    out, err, _ = _compress_core(state, params, exact_error)
    return out, err


def _robust_svd(mat: np.ndarray):
    """SVD with a fallback from the fast divide-and-conquer driver to the
    slower but unconditionally convergent Jacobi-style one; gesdd is
    known to fail occasionally on ill-conditioned inputs."""
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(mat, full_matrices=False,
                                lapack_driver="gesvd")


def _compress_core(state: MpsState, params: CompressionParams,
                   exact_error: bool):
    """Shared compression kernel; also returns the input norm so callers
    that must preserve magnitude (operator application, Krylov) can
    rescale the normalized output."""
    s = canonicalize(state, state.n_sites - 1)
    tensors = s.tensors
    L = len(tensors)
    norm2 = float(np.vdot(tensors[-1], tensors[-1]).real)
    if norm2 == 0.0:
        raise ValueError("cannot compress a zero state")
    discarded = 0.0
    running = norm2
    for i in range(L - 1, 0, -1):
        l, d, r = tensors[i].shape
        u, sv, vh = _robust_svd(tensors[i].reshape(l, d * r))
        keep = int(np.sum(sv > params.svd_cutoff * sv[0]))
        keep = max(1, min(keep, params.chi_max))
        w_cut = float(np.sum(sv[keep:] ** 2))
        discarded += w_cut / running
        running -= w_cut
        tensors[i] = vh[:keep].reshape(keep, d, r)
        carry = u[:, :keep] * sv[:keep]
        tensors[i - 1] = np.tensordot(tensors[i - 1], carry, axes=(2, 0))
    out = MpsState(tensors, center=0)
    nrm = float(np.linalg.norm(tensors[0]))
    out.tensors[0] = out.tensors[0] / nrm
    if exact_error:
        fid = abs(inner(out, state)) ** 2 / norm2
        err = max(0.0, 1.0 - fid)
    else:
        err = discarded
    out.truncation_log = state.truncation_log + err
    return out, err, float(np.sqrt(norm2))


# ---------------------------------------------------------------------------
# operator application and expectations


def apply_mpo(op: MpoOperator, state: MpsState, params: CompressionParams,
              exact_error: bool = False) -> MpsState:
    """Compressed O|psi>, magnitude preserved (up to truncation).  The
    truncation error of the compression is accumulated into the returned
    state's ``truncation_log``."""
    if op.n_sites != state.n_sites:
        raise ShapeMismatchError("operator/state length mismatch")
    tensors = []
    for w, a in zip(op.tensors, state.tensors):
        if w.shape[2] != a.shape[1]:
            raise ShapeMismatchError(
                f"physical dimension mismatch: MPO {w.shape} on site {a.shape}")
        # (lw, po, pi, rw) x (l, pi, r) -> (lw, po, rw, l, r)
        t = np.tensordot(w, a, axes=(2, 1))
        t = t.transpose(0, 3, 1, 2, 4)
        lw, l, po, rw, r = t.shape
        tensors.append(t.reshape(lw * l, po, rw * r))
    raw = MpsState(tensors, truncation_log=state.truncation_log)
    out, _, nrm = _compress_core(raw, params, exact_error=exact_error)
    return scale(out, nrm)


def apply_mpo_uncompressed(op: MpoOperator, state: MpsState) -> MpsState:
    """O|psi> at full bond dimension (for small oracle comparisons)."""
    tensors = []
    for w, a in zip(op.tensors, state.tensors):
        t = np.tensordot(w, a, axes=(2, 1)).transpose(0, 3, 1, 2, 4)
        lw, l, po, rw, r = t.shape
        tensors.append(t.reshape(lw * l, po, rw * r))
    return MpsState(tensors, truncation_log=state.truncation_log)


def expectation(state: MpsState, op: MpoOperator):
    """<psi|O|psi>; returns a real number when the operator is flagged
    hermitian, a complex one otherwise."""
    if op.n_sites != state.n_sites:
        raise ShapeMismatchError("operator/state length mismatch")
    env = np.ones((1, 1, 1), dtype=complex)  # (la, lw, lb)
    for w, a in zip(op.tensors, state.tensors):
        # env (la, lw, lb) ; a (lb, pi, rb) -> (la, lw, pi, rb)
        tmp = np.tensordot(env, a, axes=(2, 0))
        # w (lw, po, pi, rw) -> (la, rb, po, rw)
        tmp = np.tensordot(tmp, w, axes=([1, 2], [0, 2]))
        tmp = tmp.transpose(0, 2, 3, 1)  # (la, po, rw, rb)
        # conj(a) (la, po, ra) -> (ra, rw, rb)
        env = np.tensordot(np.conj(a), tmp, axes=([0, 1], [0, 1]))
    val = complex(env[0, 0, 0])
    return val.real if op.hermitian else val


def site_expectations(state: MpsState, ops: dict) -> dict:
    """Expectation of one single-site operator per requested site,
    in a single O(L) sweep; keys of ``ops`` are site indices."""
    s = canonicalize(state, 0)
    norm2 = float(np.vdot(s.tensors[0], s.tensors[0]).real)
    last = max(ops)
    # with the center at 0, right environments are identities, so a single
    # left-to-right sweep up to the last requested site suffices
    out = {}
    env = np.ones((1, 1), dtype=complex)
    for i in range(last + 1):
        t = s.tensors[i]
        tmp = np.tensordot(env, t, axes=(1, 0))              # (la, p, rb)
        if i in ops:
            o = np.asarray(ops[i], dtype=complex)
            loc = np.tensordot(o, tmp, axes=(1, 1))          # (po, la, rb)
            val = np.tensordot(np.conj(t), loc.transpose(1, 0, 2),
                               axes=([0, 1, 2], [0, 1, 2]))
            out[i] = complex(val) / norm2
        if i < last:
            env = np.tensordot(np.conj(t), tmp, axes=([0, 1], [0, 1]))
    return out


def correlation_matrix(state: MpsState, ops: dict) -> np.ndarray:
    """Two-point functions <O_i O_j> for all ordered pairs i < j of the
    sites in ``ops`` plus diagonals <O_i^2>, returned as a dense hermitian
    matrix indexed in the sorted site order."""
    sites = sorted(ops)
    idx = {site: n for n, site in enumerate(sites)}
    N = len(sites)
    C = np.zeros((N, N), dtype=complex)
    s = canonicalize(state, 0)
    norm2 = float(np.vdot(s.tensors[0], s.tensors[0]).real)
    L = s.n_sites
    # plain left environments up to each site
    plain = [np.ones((1, 1), dtype=complex)]
    for t in s.tensors[:-1]:
        tmp = np.tensordot(plain[-1], t, axes=(1, 0))
        plain.append(np.tensordot(np.conj(t), tmp, axes=([0, 1], [0, 1])))
    for i in sites:
        oi = np.asarray(ops[i], dtype=complex)
        t = s.tensors[i]
        tmp = np.tensordot(plain[i], t, axes=(1, 0))
        tmp = np.tensordot(oi, tmp, axes=(1, 1)).transpose(1, 0, 2)
        env = np.tensordot(np.conj(t), tmp, axes=([0, 1], [0, 1]))
        # diagonal: <O_i^2>
        tmp2 = np.tensordot(oi @ oi, np.tensordot(plain[i], t, axes=(1, 0)),
                            axes=(1, 1)).transpose(1, 0, 2)
        val = np.tensordot(np.conj(t), tmp2, axes=([0, 1, 2], [0, 1, 2]))
        C[idx[i], idx[i]] = complex(val) / norm2
        for j in range(i + 1, L):
            tj = s.tensors[j]
            if j in ops:
                oj = np.asarray(ops[j], dtype=complex)
                tmp = np.tensordot(env, tj, axes=(1, 0))
                tmp = np.tensordot(oj, tmp, axes=(1, 1)).transpose(1, 0, 2)
                val = np.tensordot(np.conj(tj), tmp,
                                   axes=([0, 1, 2], [0, 1, 2]))
                C[idx[i], idx[j]] = complex(val) / norm2
            tmp = np.tensordot(env, tj, axes=(1, 0))
            env = np.tensordot(np.conj(tj), tmp, axes=([0, 1], [0, 1]))
    return C + np.tril(C.conj().T, -1)


# ---------------------------------------------------------------------------
# local gates


def apply_site_operator(state: MpsState, site: int, matrix) -> MpsState:
    """Apply a single-site operator without changing bond dimensions."""
    m = np.asarray(matrix, dtype=complex)
    tensors = list(state.tensors)
    tensors[site] = np.tensordot(m, tensors[site],
                                 axes=(1, 1)).transpose(1, 0, 2)
    return MpsState(tensors, center=None, truncation_log=state.truncation_log)


def displacement_matrix(amplitude: complex, n_max: int) -> np.ndarray:
    """exp(beta a^dag - beta* a) in the truncated Fock space."""
    d = n_max + 1
    adag = np.diag(np.sqrt(np.arange(1, d)), -1)
    gen = amplitude * adag - np.conj(amplitude) * adag.conj().T
    return expm(gen)


def displace(state: MpsState, site: int, amplitude: complex) -> MpsState:
    """Displace one mode by ``amplitude`` (truncated displacement operator),
    then renormalize.  Site 0 is the qubit and cannot be displaced."""
    if site < 1:
        raise ValueError("displacement acts on mode sites (site >= 1)")
    n_max = state.phys_dims[site] - 1
    if abs(amplitude) ** 2 > n_max / 4:
        warnings.warn(
            f"displacement |beta|^2={abs(amplitude)**2:.3g} is large for "
            f"n_max={n_max}; truncation unreliable", RuntimeWarning)
    mat = displacement_matrix(amplitude, n_max)
    return normalize(apply_site_operator(state, site, mat))


# ---------------------------------------------------------------------------
# simple MPOs


def identity_mpo(phys_dims) -> MpoOperator:
    tensors = [np.eye(d, dtype=complex).reshape(1, d, d, 1) for d in phys_dims]
    return MpoOperator(tensors, hermitian=True)


def single_site_mpo(phys_dims, site: int, matrix,
                    hermitian: bool = False) -> MpoOperator:
    op = identity_mpo(phys_dims)
    m = np.asarray(matrix, dtype=complex)
    tensors = list(op.tensors)
    d = phys_dims[site]
    tensors[site] = m.reshape(1, d, d, 1)
    return MpoOperator(tensors, hermitian=hermitian)


def sum_mpo(a: MpoOperator, b: MpoOperator) -> MpoOperator:
    """Direct-sum MPO representing A + B."""
    if a.n_sites != b.n_sites:
        raise ShapeMismatchError("MPO length mismatch")
    L = a.n_sites
    tensors = []
    for i in range(L):
        ta, tb = a.tensors[i], b.tensors[i]
        la, po, pi, ra = ta.shape
        lb, _, _, rb = tb.shape
        if i == 0:
            blk = np.concatenate([ta, tb], axis=3)
        elif i == L - 1:
            blk = np.concatenate([ta, tb], axis=0)
        else:
            blk = np.zeros((la + lb, po, pi, ra + rb), dtype=complex)
            blk[:la, :, :, :ra] = ta
            blk[la:, :, :, ra:] = tb
        tensors.append(blk)
    return MpoOperator(tensors, hermitian=a.hermitian and b.hermitian)
