"""Ab-initio estimate of the qubit-line coupling.

Three-junction flux qubit diagonalized in the two-variable charge
(number-phase) basis, the galvanic coupling operator built from its sine
expansion, and the effective coupling g_eff versus the small-junction
size ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class CutoffConvergenceError(RuntimeError):
    """Charge-basis cutoff too small for the requested accuracy."""


@dataclass(frozen=True)
class FluxQubitSpec:
    """3-Josephson-junction flux qubit.  ``alphaJ`` is the size ratio of
    the small junction; ``f_bias`` the external frustration in units of
    the flux quantum."""

    EJ: float = 1.0
    EC: float = 0.02
    alphaJ: float = 0.7
    f_bias: float = 0.5
    n_cutoff: int = 10

    def __post_init__(self):
        if not 0.0 < self.alphaJ < 1.5:
            raise ValueError(f"alphaJ={self.alphaJ} outside (0, 1.5)")
        if self.n_cutoff < 5:
            raise ValueError("n_cutoff must be at least 5")


@dataclass(frozen=True)
class LineCouplingSpec:
    """Lumped line cell seen by the qubit.  ``lam`` maps the phi_minus
    matrix element to an energy: the zero-point amplitude of the
    antisymmetric line mode divided by 2 L_ind, with the mode frequency
    taken as the cell resonance 1/sqrt(L_ind C_cap)."""

    L_ind: float = 1.0
    C_cap: float = 1.0

    def __post_init__(self):
        if self.L_ind <= 0 or self.C_cap <= 0:
            raise ValueError("line parameters must be positive")

    @property
    def omega_ref(self) -> float:
        return 1.0 / np.sqrt(self.L_ind * self.C_cap)

    @property
    def phi_zp(self) -> float:
        # sqrt(Z/2) with Z = sqrt(L/C), hbar = 1
        return np.sqrt(0.5 * np.sqrt(self.L_ind / self.C_cap))

    @property
    def lam(self) -> float:
        return self.phi_zp / (2.0 * self.L_ind)


# Preset that lands the ultrastrong-coupling crossing of g_eff/omega_at
# inside the alphaJ ~ 0.6-0.7 band; recorded as a derived calibration.
USC_PRESET = {
    "EJ": 1.0,
    "EC": 0.02,       # EJ/EC = 50
    "f_bias": 0.5,
    "n_cutoff": 10,
    "L_ind": 36.0,
    "C_cap": 36.0,
}


def _shift(nc: int) -> np.ndarray:
    """Charge raising operator e^{i phi} in the truncated charge basis."""
    dim = 2 * nc + 1
    return np.diag(np.ones(dim - 1), -1)


def qubit_hamiltonian(spec: FluxQubitSpec) -> np.ndarray:
    """Two-variable charge-basis Hamiltonian.

    Kinetic part from the junction capacitance matrix
    C [[1+a, -a], [-a, 1+a]]; potential
    -EJ [cos phi1 + cos phi2 + a cos(2 pi f + phi1 - phi2)].
    """
    nc = spec.n_cutoff
    dim = 2 * nc + 1
    n = np.diag(np.arange(-nc, nc + 1)).astype(float)
    eye = np.eye(dim)
    a = spec.alphaJ
    det = 1.0 + 2.0 * a
    n1 = np.kron(n, eye)
    n2 = np.kron(eye, n)
    T = 4.0 * spec.EC / det * ((1.0 + a) * (n1 @ n1 + n2 @ n2)
                               + 2.0 * a * (n1 @ n2))
    s = _shift(nc)
    cos1 = 0.5 * np.kron(s + s.T, eye)
    cos2 = 0.5 * np.kron(eye, s + s.T)
    # e^{i(phi1 - phi2)} raises n1 and lowers n2
    t12 = np.kron(s, s.T)
    phase = np.exp(2j * np.pi * spec.f_bias)
    cos3 = 0.5 * (phase * t12 + np.conj(phase) * t12.T)
    U = -spec.EJ * (cos1 + cos2 + a * cos3)
    H = T.astype(complex) + U
    return 0.5 * (H + H.conj().T)


def qubit_spectrum(spec: FluxQubitSpec, n_levels: int = 5,
                   check_convergence: bool = True, rtol: float = 1e-4):
    """Lowest levels, the qubit splitting E1 - E0, and eigenvectors.

    With ``check_convergence`` the splitting is recomputed at
    n_cutoff + 2 and a relative change above ``rtol`` raises
    :class:`CutoffConvergenceError`.
    """
    H = qubit_hamiltonian(spec)
    evals, evecs = np.linalg.eigh(H)
    omega_at = float(evals[1] - evals[0])
    if check_convergence:
        from dataclasses import replace
        bigger = replace(spec, n_cutoff=spec.n_cutoff + 2)
        ev2 = np.linalg.eigvalsh(qubit_hamiltonian(bigger))
        gap2 = float(ev2[1] - ev2[0])
        if abs(gap2 - omega_at) > rtol * abs(omega_at):
            raise CutoffConvergenceError(
                f"E1-E0 changed by {abs(gap2 - omega_at):.3e} "
                f"({abs(gap2 - omega_at)/abs(omega_at):.2e} relative) when "
                f"n_cutoff {spec.n_cutoff} -> {spec.n_cutoff + 2}")
    return evals[:n_levels].copy(), omega_at, evecs[:, :n_levels].copy()


def phi_minus_operator(n_cutoff: int) -> np.ndarray:
    """The galvanic coupling operator via its sine expansion

        phi_m ~ (3/2) sin(phi_m) - (3/10) sin(2 phi_m) + (1/30) sin(3 phi_m)

    built from charge-basis shift matrices; hermitian by construction."""
    nc = n_cutoff
    dim = 2 * nc + 1
    eye = np.eye(dim)
    s = _shift(nc)
    # e^{i j (phi1 - phi2)}
    op = np.zeros((dim * dim, dim * dim), dtype=complex)
    for j, coeff in ((1, 1.5), (2, -0.3), (3, 1.0 / 30.0)):
        tj = np.kron(np.linalg.matrix_power(s, j),
                     np.linalg.matrix_power(s.T, j))
        op += coeff * (tj - tj.conj().T) / 2j
    return op


def sine_series(phi):
    """Scalar form of the expansion (documentation/testing helper)."""
    phi = np.asarray(phi, dtype=float)
    return (1.5 * np.sin(phi) - 0.3 * np.sin(2 * phi)
            + np.sin(3 * phi) / 30.0)


@dataclass
class CouplingPoint:
    alphaJ: float
    omega_at: float
    m01: float
    g_eff: float
    ratio: float
    converged: bool = True


def coupling_curve(alphaJ_grid, line: LineCouplingSpec,
                   EJ: float = 1.0, EC: float = 0.02, f_bias: float = 0.5,
                   n_cutoff: int = 10, usc_threshold: float = 0.25):
    """Scan the small-junction ratio: per point the qubit splitting, the
    matrix element m01 = |<0|phi_m|1>|, g_eff = lam * m01 and the ratio
    g_eff/omega_at.  Points whose charge-basis cutoff fails to converge
    are flagged rather than dropped."""
    points = []
    for aJ in alphaJ_grid:
        spec = FluxQubitSpec(EJ=EJ, EC=EC, alphaJ=float(aJ), f_bias=f_bias,
                             n_cutoff=n_cutoff)
        try:
            _, omega_at, vecs = qubit_spectrum(spec)
            converged = True
        except CutoffConvergenceError:
            _, omega_at, vecs = qubit_spectrum(spec,
                                               check_convergence=False)
            converged = False
        phi = phi_minus_operator(n_cutoff)
        m01 = float(abs(np.vdot(vecs[:, 0], phi @ vecs[:, 1])))
        g_eff = line.lam * m01
        points.append(CouplingPoint(alphaJ=float(aJ), omega_at=omega_at,
                                    m01=m01, g_eff=g_eff,
                                    ratio=g_eff / omega_at,
                                    converged=converged))
    return points


def usc_band(points, usc_threshold: float = 0.25):
    """(alphaJ_low, alphaJ_high) of the contiguous region with
    g_eff/omega_at >= threshold, or None if never crossed."""
    above = [p.alphaJ for p in points if p.ratio >= usc_threshold]
    if not above:
        return None
    return min(above), max(above)


def lagrangian_terms(line: LineCouplingSpec) -> dict:
    """Numeric coefficients of the lumped-element Lagrangian pieces:
    the line oscillator (C/2, 1/2L), the qubit renormalization 1/(8L)
    raising the bare potential curvature along phi_minus, and the
    interaction 1/(2L) (phi_m phi_m - phi_p phi_p); phi_plus locks to the
    line and does not enter the qubit."""
    return {
        "interaction": 1.0 / (2.0 * line.L_ind),
        "qubit_renormalization": 1.0 / (8.0 * line.L_ind),
        "capacitive": line.C_cap / 2.0,
        "curvature_shift": 1.0 / (4.0 * line.L_ind),
    }
