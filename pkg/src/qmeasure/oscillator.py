"""Harmonic-oscillator eigenbasis tools.

Everything the eigenbasis measurement engine needs from the oscillator
itself: stable evaluation of the normalized eigenfunctions, free-evolution
phase factors, shared Gauss-Legendre quadrature helpers, and projection of
Gaussian packets onto a truncated basis.

Conventions used throughout the package: levels are indexed from n = 0 with
energy E_n = hbar*omega*(n + 1/2); a Gaussian of width sigma means
psi(x) ~ exp(-(x - x0)^2 / (2 sigma^2)), so the ground state has
sigma^2 = hbar/(m*omega).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when a quadrature grid fails its convergence check."""


@dataclass(frozen=True)
class OscillatorBasis:
    """Truncated energy eigenbasis of a 1-D harmonic oscillator.

    Parameters
    ----------
    mass, omega : float
        Particle mass and angular frequency (both > 0).
    n_max : int
        Number of retained levels; coefficients run over n = 0 .. n_max-1.
    hbar : float
        Reduced Planck constant, default 1.
    """

    mass: float
    omega: float
    n_max: int
    hbar: float = 1.0

    def __post_init__(self):
        if self.mass <= 0 or self.omega <= 0 or self.hbar <= 0:
            raise ValueError("mass, omega and hbar must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def length_scale(self) -> float:
        """Ground-state width sqrt(hbar/(m*omega))."""
        return float(np.sqrt(self.hbar / (self.mass * self.omega)))

    def turning_point(self, n: int) -> float:
        """Classical turning point of level n."""
        return float(np.sqrt((2 * n + 1.0)) * self.length_scale)


def level_energies(basis: OscillatorBasis) -> np.ndarray:
    """E_n = hbar*omega*(n + 1/2) for all retained levels."""
    n = np.arange(basis.n_max)
    return basis.hbar * basis.omega * (n + 0.5)


def free_phase_factors(basis: OscillatorBasis, dt: float) -> np.ndarray:
    """Diagonal of the free propagator, exp(-i E_n dt / hbar)."""
    return np.exp(-1j * basis.omega * dt * (np.arange(basis.n_max) + 0.5))


def eigenfunction_matrix(basis: OscillatorBasis, x) -> np.ndarray:
    """Normalized eigenfunctions u_0..u_{n_max-1} evaluated at x.

    Returns an array of shape (n_max,) + x.shape. Uses the three-term
    recurrence on the normalized Hermite functions, which is stable upward
    (unnormalized Hermite polynomials overflow near n ~ 150; the normalized
    functions stay O(1) for any level).
    """
    xi = np.asarray(x, dtype=float) * np.sqrt(basis.mass * basis.omega / basis.hbar)
    out = np.empty((basis.n_max,) + xi.shape)
    out[0] = (basis.mass * basis.omega / (np.pi * basis.hbar)) ** 0.25 * np.exp(-0.5 * xi**2)
    if basis.n_max > 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, basis.n_max - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


def eigenfunction(basis: OscillatorBasis, n: int, x) -> np.ndarray:
    """Single normalized eigenfunction u_n(x)."""
    if not 0 <= n < basis.n_max:
        raise ValueError(f"level {n} outside retained range 0..{basis.n_max - 1}")
    return eigenfunction_matrix(basis, x)[n]


@dataclass
class EigenState:
    """State vector in the truncated eigenbasis."""

    basis: OscillatorBasis
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (self.basis.n_max,):
            raise ValueError("coefficient vector must have length n_max")
        self.coefficients = c

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def normalized(self) -> "EigenState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return EigenState(self.basis, self.coefficients / n)


def position_wavefunction(state: EigenState, x) -> np.ndarray:
    """psi(x) = sum_n c_n u_n(x) on the given sample points."""
    u = eigenfunction_matrix(state.basis, x)
    return np.tensordot(state.coefficients, u, axes=(0, 0))


def position_moments(state: EigenState) -> tuple[float, float]:
    """Mean and variance of position, via the tridiagonal x matrix."""
    b = state.basis
    c = state.coefficients
    s = np.sqrt(b.hbar / (2.0 * b.mass * b.omega))
    n = np.arange(b.n_max)
    nrm2 = float(np.vdot(c, c).real)
    if nrm2 == 0.0:
        raise ValueError("moments of the zero state are undefined")
    # <x>: couples n and n+1
    off1 = np.sqrt(n[1:])  # <n-1|a|n> ladder weights
    mean = 2.0 * s * float(np.sum((np.conj(c[:-1]) * c[1:]).real * off1))
    # <x^2>: diagonal (2n+1), and n <-> n+2 with sqrt((n+1)(n+2))
    diag = (2 * n + 1.0)
    x2 = float(np.sum(np.abs(c) ** 2 * diag))
    if b.n_max > 2:
        off2 = np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
        x2 += 2.0 * float(np.sum((np.conj(c[:-2]) * c[2:]).real * off2))
    x2 *= s**2
    mean /= nrm2
    x2 /= nrm2
    return mean, x2 - mean**2


# ---------------------------------------------------------------------------
# quadrature helpers shared by the weight-matrix and projection code
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Quadrature:
    """Nodes and weights of a fixed rule on [-halfwidth, halfwidth]."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def halfwidth(self) -> float:
        return float(np.max(np.abs(self.nodes)))


def gauss_legendre(lo: float, hi: float, points: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [lo, hi]."""
    if hi <= lo:
        raise ValueError("empty integration interval")
    x, w = np.polynomial.legendre.leggauss(int(points))
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def domain_halfwidth(basis: OscillatorBasis, reach: float = 0.0) -> float:
    """Half-width that covers both the basis support and any wider packet.

    The highest retained level oscillates out to its classical turning point
    and decays as a Gaussian beyond it; six length scales of margin push the
    tail below 1e-12. `reach` extends the domain for wide packets or
    off-center filters (pass e.g. |center| + 8*width).
    """
    lx = basis.length_scale
    return max(float(reach), 8.0 * lx, basis.turning_point(basis.n_max - 1) + 6.0 * lx)


def basis_quadrature(basis: OscillatorBasis, reach: float = 0.0, points: int = 800) -> Quadrature:
    """Full-domain Gauss-Legendre rule for integrals against eigenfunctions."""
    L = domain_halfwidth(basis, reach)
    x, w = gauss_legendre(-L, L, points)
    return Quadrature(x, w)


def project_gaussian(
    basis: OscillatorBasis,
    width: float,
    center: float = 0.0,
    quad: Quadrature | None = None,
) -> tuple[EigenState, float]:
    """Expand a normalized Gaussian packet in the truncated basis.

    Parameters
    ----------
    width : float
        Packet width sigma (> 0), psi ~ exp(-(x-center)^2/(2 sigma^2)).
    quad : Quadrature, optional
        Integration rule; by default one sized to the packet.

    Returns
    -------
    state : EigenState
        The projected state, renormalized to unit norm.
    captured : float
        Norm fraction sum |c_n|^2 of the exact packet retained by the
        truncation, so that truncation loss stays visible.
    """
    if width <= 0:
        raise ValueError("packet width must be positive")
    if quad is None:
        quad = basis_quadrature(basis, reach=abs(center) + 8.0 * width)
    x, w = quad.nodes, quad.weights
    psi = (np.pi * width**2) ** -0.25 * np.exp(-((x - center) ** 2) / (2.0 * width**2))
    # convergence guard: the rule must at least integrate the packet itself
    packet_norm = float(np.sum(w * psi**2))
    if abs(packet_norm - 1.0) > 1e-9:
        raise QuadratureError(
            f"quadrature cannot resolve the packet (norm {packet_norm!r}); "
            "widen the domain or raise the node count"
        )
    u = eigenfunction_matrix(basis, x)
    coeff = (u * w) @ psi
    captured = float(np.sum(coeff**2))
    state = EigenState(basis, coeff.astype(complex) / np.sqrt(captured))
    return state, captured
