"""Free particle on the line and half-line with self-adjoint wall conditions.

The half-line Hamiltonian family is parametrised by the Robin condition
ψ(0) = β ψ'(0), with β = 0 the hard (Dirichlet) wall, β = NEUMANN the
reflecting (Neumann) wall, and β < 0 supporting the single bound state
exp(x/β) at energy -ħ²/(2mβ²).  The restricted propagator is realised
directly as exp(-iH_β t/ħ) on a finite grid; for the two parity walls an
independent image-method realisation (parity extension plus exact spectral
evolution) is provided as well.

The propagator split on the line reads, for ψ supported in x ≥ 0,

    U(t)ψ = [boundary convolution] + U_r^β(t)ψ,

where the convolution carries amplitude across x = 0 through the wall values
a(s) = (U_r ψ)(0) and b(s) = ∂ₓ(U_r ψ)(0):

    χ(x) = (iħ/2m) ∫₀ᵗ ds [ g(x,0,t-s)·b(s) - ∂_ξ g(x,ξ,t-s)|₀ ·a(s) ]

with g the free kernel.  The integrable endpoint of the convolution is
handled by the substitution s = t - u².

Natural units m = ħ = 1 by default; both are keywords or system fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .qcore import DomainError

NEUMANN = "neumann"


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid x_j = x_min + j·dx, j = 0..n-1, right endpoint excluded."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.n < 8:
            raise ValueError(f"grid needs n >= 8, got {self.n}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    def is_symmetric(self) -> bool:
        """Symmetric about 0 with an even point count, so x = 0 sits on a node."""
        scale = max(abs(self.x_min), abs(self.x_max), 1.0)
        return self.n % 2 == 0 and abs(self.x_min + self.x_max) < 1e-12 * scale


def _require_symmetric(grid: SpatialGrid) -> int:
    if not grid.is_symmetric():
        raise ValueError("operation needs a grid symmetric about x = 0 "
                         "with x = 0 on a node")
    return grid.n // 2


@dataclass
class WaveFunction:
    """Sampled state.  norm² = Σ|ψ_j|²·dx (plain Riemann weight)."""

    grid: SpatialGrid
    samples: np.ndarray
    representation: str = "position"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, "
                             f"got shape {self.samples.shape}")
        if self.representation not in ("position", "momentum"):
            raise ValueError(f"unknown representation {self.representation!r}")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.grid.dx))

    def normalized(self) -> "WaveFunction":
        nrm = self.norm()
        if nrm < 1e-14:
            raise DomainError("cannot normalise a (near) null state")
        return WaveFunction(self.grid, self.samples / nrm, self.representation)

    def inner(self, other: "WaveFunction") -> complex:
        if other.grid != self.grid or other.representation != self.representation:
            raise ValueError("inner product needs matching grids and representations")
        return complex(np.vdot(self.samples, other.samples) * self.grid.dx)


@dataclass(frozen=True)
class GaussianPacket:
    """ψ(x) ∝ exp(-(x-x₀)²/4σ² + ip₀(x-x₀)/ħ), optionally (anti)symmetrised."""

    x0: float
    p0: float
    sigma: float
    parity: str | None = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.parity not in (None, "even", "odd"):
            raise ValueError(f"parity must be None, 'even' or 'odd', got {self.parity!r}")

    def build(self, grid: SpatialGrid, hbar: float = 1.0) -> WaveFunction:
        x = grid.x
        psi = np.exp(-((x - self.x0) ** 2) / (4 * self.sigma ** 2)
                     + 1j * self.p0 * (x - self.x0) / hbar)
        if self.parity is not None:
            _require_symmetric(grid)
            mirrored = _reflect_full(psi)
            psi = psi + mirrored if self.parity == "even" else psi - mirrored
        return WaveFunction(grid, psi).normalized()


def gaussian_packet(grid: SpatialGrid, x0: float, p0: float, sigma: float,
                    parity: str | None = None, hbar: float = 1.0) -> WaveFunction:
    return GaussianPacket(x0, p0, sigma, parity).build(grid, hbar)


def _reflect_full(samples: np.ndarray) -> np.ndarray:
    """x -> -x on a symmetric periodic grid; node 0 and node x_min are fixed."""
    n = samples.shape[0]
    idx = (-np.arange(n)) % n
    return samples[idx]


def free_kernel(x, y, t: float, mass: float = 1.0, hbar: float = 1.0):
    """g(x,y,t) = sqrt(m/2πiħt)·exp(im(x-y)²/2ħt), the forward branch
    sqrt(1/i) = e^{-iπ/4}."""
    if t <= 0:
        raise ValueError(f"free kernel needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    amp = np.sqrt(mass / (2 * np.pi * hbar * t)) * np.exp(-1j * np.pi / 4)
    return amp * np.exp(1j * mass * (x - y) ** 2 / (2 * hbar * t))


def to_momentum(psi: WaveFunction, hbar: float = 1.0) -> WaveFunction:
    """Unitary transform to φ(p) = (2πħ)^{-1/2} ∫ ψ(x) e^{-ipx/ħ} dx."""
    if psi.representation != "position":
        raise ValueError("state is already in momentum representation")
    g = psi.grid
    k = 2 * np.pi * np.fft.fftfreq(g.n, g.dx)
    phi = g.dx / np.sqrt(2 * np.pi * hbar) * np.fft.fft(psi.samples)
    phi *= np.exp(-1j * k * g.x_min)
    order = np.argsort(k, kind="stable")
    p = hbar * k[order]
    dp = p[1] - p[0]
    pgrid = SpatialGrid(p[0], p[0] + dp * g.n, g.n)
    return WaveFunction(pgrid, phi[order], "momentum")


def to_position(phi: WaveFunction, grid: SpatialGrid, hbar: float = 1.0) -> WaveFunction:
    """Inverse of to_momentum back onto the originating position grid."""
    if phi.representation != "momentum":
        raise ValueError("state is not in momentum representation")
    k_sorted = phi.grid.x / hbar
    k = 2 * np.pi * np.fft.fftfreq(grid.n, grid.dx)
    order = np.argsort(k, kind="stable")
    spec = np.empty(grid.n, dtype=complex)
    if not np.allclose(k[order], k_sorted, atol=1e-9):
        raise ValueError("momentum grid does not match the target position grid")
    spec[order] = phi.samples
    spec *= np.exp(1j * k * grid.x_min)
    psi = np.fft.ifft(spec) * np.sqrt(2 * np.pi * hbar) / grid.dx
    return WaveFunction(grid, psi, "position")


def spectral_evolve_line(psi: WaveFunction, t: float,
                         mass: float = 1.0, hbar: float = 1.0) -> WaveFunction:
    """Free evolution by phase e^{-ip²t/2mħ}; exact dispersion on the grid,
    valid for either sign of t."""
    if psi.representation == "momentum":
        p = psi.grid.x
        out = psi.samples * np.exp(-1j * p ** 2 * t / (2 * mass * hbar))
        return WaveFunction(psi.grid, out, "momentum")
    g = psi.grid
    k = 2 * np.pi * np.fft.fftfreq(g.n, g.dx)
    spec = np.fft.fft(psi.samples) * np.exp(-1j * hbar * k ** 2 * t / (2 * mass))
    return WaveFunction(g, np.fft.ifft(spec), "position")


def phq_nonzero_check(psi: WaveFunction, mass: float = 1.0,
                      hbar: float = 1.0) -> float:
    """‖(1-θ)·(-ħ²/2m)∂²ₓ(θψ)‖ on the grid: the amplitude the kinetic term
    moves across the cut at x = 0 in one application.

    Grid convention: the inner cut keeps x ≥ 0, the outer keeps x ≤ 0; both
    contain the cut node, where the distributional weight (δ, δ') of the
    product lives.  For ψ(0) ≠ 0 the norm grows like dx^{-3/2} under
    refinement, for odd ψ (ψ(0) = 0, ψ'(0) ≠ 0) like dx^{-1/2}.
    """
    j0 = _require_symmetric(psi.grid)
    dx = psi.grid.dx
    inner = psi.samples.copy()
    inner[:j0] = 0.0                       # keep x >= 0
    d2 = np.zeros_like(inner)
    d2[1:-1] = (inner[:-2] - 2 * inner[1:-1] + inner[2:]) / dx ** 2
    out = (-hbar ** 2 / (2 * mass)) * d2
    out[j0 + 1:] = 0.0                     # keep x <= 0
    return float(np.sqrt(np.sum(np.abs(out) ** 2) * dx))


@dataclass(frozen=True)
class HalfLineSystem:
    """Half-line [0, L] with wall condition ψ(0) = βψ'(0) and a hard outer
    wall at x = L.  States live on nodes x_j = j·dx, dx = L/n."""

    L: float
    n: int
    beta: float | str
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.n < 8:
            raise ValueError(f"n must be >= 8, got {self.n}")
        if self.mass <= 0 or self.hbar <= 0:
            raise ValueError("mass and hbar must be positive")
        if isinstance(self.beta, str):
            if self.beta != NEUMANN:
                raise ValueError(f"string beta must be {NEUMANN!r}, got {self.beta!r}")
        elif not np.isfinite(self.beta):
            raise ValueError("finite beta required; use NEUMANN for the "
                             "reflecting wall")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.n)

    @property
    def is_neumann(self) -> bool:
        return isinstance(self.beta, str)

    @property
    def is_dirichlet(self) -> bool:
        return not self.is_neumann and self.beta == 0.0

    def half_grid(self) -> SpatialGrid:
        return SpatialGrid(0.0, self.L, self.n)

    def full_grid(self) -> SpatialGrid:
        return SpatialGrid(-self.L, self.L, 2 * self.n)


def halfline_norm(samples: np.ndarray, sys: HalfLineSystem) -> float:
    """Half-line norm with the half-cell weight at the wall node.

    The wall node controls the half cell [0, dx/2], so the faithful quadrature
    is trapezoidal there; this is the norm the restricted propagator
    conserves exactly.
    """
    s = np.asarray(samples)
    w = np.abs(s) ** 2
    return float(np.sqrt((0.5 * w[0] + w[1:].sum()) * sys.dx))


def build_halfline_hamiltonian(sys: HalfLineSystem):
    """Discrete H_β: central second differences with the Robin ghost point
    eliminated, half-cell weight at the wall node absorbed symmetrically.

    The wall row comes from eliminating the ghost value ψ(-dx) through the
    second-order relation ψ(-dx) = ψ(dx) - 2dx·ψ(0)/β and weighting the wall
    node by its half cell; rescaling that node by √2 restores a plainly
    symmetric matrix whose eigenpairs are those of the weighted problem.
    For β = 0 the wall value is pinned to zero and the matrix acts on the
    n-1 interior nodes only.

    Returns a qcore.Operator (real symmetric tridiagonal entries).
    """
    from .qcore import Operator

    diag, off = _halfline_tridiag(sys)
    m = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    return Operator(m)


def _halfline_tridiag(sys: HalfLineSystem) -> tuple[np.ndarray, np.ndarray]:
    kappa = sys.hbar ** 2 / (2 * sys.mass * sys.dx ** 2)
    if sys.is_dirichlet:
        dim = sys.n - 1
        diag = np.full(dim, 2 * kappa)
        off = np.full(dim - 1, -kappa)
        return diag, off
    robin = 0.0 if sys.is_neumann else sys.dx / sys.beta
    diag = np.full(sys.n, 2 * kappa)
    diag[0] = 2 * kappa * (1 + robin)
    off = np.full(sys.n - 1, -kappa)
    off[0] = -np.sqrt(2.0) * kappa
    return diag, off


@lru_cache(maxsize=64)
def halfline_eigensystem(sys: HalfLineSystem) -> tuple[np.ndarray, np.ndarray]:
    """Cached eigenpairs of the discrete H_β.  Safe under concurrent readers:
    population is idempotent and the arrays are frozen read-only."""
    diag, off = _halfline_tridiag(sys)
    evals, evecs = scipy.linalg.eigh_tridiagonal(diag, off)
    evals.flags.writeable = False
    evecs.flags.writeable = False
    return evals, evecs


def _propagate_half_samples(h: np.ndarray, sys: HalfLineSystem, t: float) -> np.ndarray:
    """exp(-iH_β t/ħ) h through the cached eigensystem (any sign of t)."""
    evals, evecs = halfline_eigensystem(sys)
    if sys.is_dirichlet:
        c = evecs.T @ h[1:]
        out = np.zeros_like(h)
        out[1:] = evecs @ (np.exp(-1j * evals * t / sys.hbar) * c)
        return out
    phi = h.astype(complex).copy()
    phi[0] /= np.sqrt(2.0)
    c = evecs.T @ phi
    phi_t = evecs @ (np.exp(-1j * evals * t / sys.hbar) * c)
    phi_t[0] *= np.sqrt(2.0)
    return phi_t


def _image_extension(h: np.ndarray, sys: HalfLineSystem) -> np.ndarray:
    """Parity extension of half-line samples onto the symmetric full grid."""
    n = sys.n
    f = np.zeros(2 * n, dtype=complex)
    f[n:] = h
    if sys.is_dirichlet:
        f[n] = 0.0
        f[1:n] = -h[1:][::-1]
    elif sys.is_neumann:
        f[1:n] = h[1:][::-1]
    else:
        raise ValueError("image method exists only for beta = 0 or NEUMANN")
    return f


def image_method_propagate(psi_half: WaveFunction, sys: HalfLineSystem,
                           t: float) -> WaveFunction:
    """Restricted propagation by images: odd (Dirichlet) or even (Neumann)
    extension, exact spectral evolution on [-L, L), restriction to x ≥ 0."""
    if psi_half.grid != sys.half_grid():
        raise ValueError("state grid does not match the half-line system")
    f = _image_extension(psi_half.samples, sys)
    full = WaveFunction(sys.full_grid(), f)
    out = spectral_evolve_line(full, t, sys.mass, sys.hbar)
    return WaveFunction(sys.half_grid(), out.samples[sys.n:])


def restricted_propagate(psi_half: WaveFunction, sys: HalfLineSystem, t: float,
                         method: str = "eig",
                         reverse: bool = False) -> WaveFunction:
    """U_r^β(t) ψ = exp(-iH_β t/ħ) ψ on [0, L].

    method="eig" uses the eigendecomposition of the discrete H_β (every β);
    method="images" uses the parity extension (β = 0 and NEUMANN only).
    Forward evolution only; set reverse=True for the documented time-reversed
    branch exp(+iH_β t/ħ).  Conserves the half-cell-weighted norm exactly.
    """
    if t < 0:
        raise ValueError("t must be >= 0; use reverse=True for backward evolution")
    if psi_half.grid != sys.half_grid():
        raise ValueError("state grid does not match the half-line system")
    t_eff = -t if reverse else t
    if method == "images":
        return image_method_propagate(psi_half, sys, t_eff)
    if method != "eig":
        raise ValueError(f"unknown method {method!r}")
    out = _propagate_half_samples(psi_half.samples, sys, t_eff)
    return WaveFunction(sys.half_grid(), out)


def wall_flux(psi_half: WaveFunction, sys: HalfLineSystem) -> float:
    """Probability flux (ħ/m)·Im(ψ̄ ψ')(0) with the Robin-consistent boundary
    pair: ψ'(0) from the one-sided second-order stencil and ψ(0) = β ψ'(0).

    Real β makes ψ̄(0)ψ'(0) = β|ψ'(0)|² real, so no probability leaks through
    the wall; the returned value is the roundoff-level residual of that
    statement.
    """
    a, b = _boundary_pair(psi_half.samples, sys)
    return float(sys.hbar / sys.mass * (np.conj(a) * b).imag)


def _boundary_pair(h: np.ndarray, sys: HalfLineSystem) -> tuple[complex, complex]:
    """(value, derivative) of a half-line state at the wall, scheme-consistent."""
    b = (-3.0 * h[0] + 4.0 * h[1] - h[2]) / (2 * sys.dx)
    if sys.is_dirichlet:
        return 0.0 + 0.0j, complex(b)
    if sys.is_neumann:
        return complex(h[0]), 0.0 + 0.0j
    return complex(sys.beta * b), complex(b)


def grid_zeno_product(psi: WaveFunction, sys: HalfLineSystem, t: float,
                      n: int) -> WaveFunction:
    """Position-projector Zeno product on the grid: θ [U(δt) θ]ⁿ ψ.

    Interleaves exact free evolution with projection onto x ≥ 0.  Used to
    probe which wall condition the projective limit selects; the measured
    drift is toward the hard (Dirichlet) wall.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if psi.grid != sys.full_grid():
        raise ValueError("state grid does not match the full-line system grid")
    g = psi.grid
    k = 2 * np.pi * np.fft.fftfreq(g.n, g.dx)
    phase = np.exp(-1j * sys.hbar * k ** 2 * (t / n) / (2 * sys.mass))
    cur = psi.samples.copy()
    cur[:sys.n] = 0.0
    for _ in range(n):
        cur = np.fft.ifft(np.fft.fft(cur) * phase)
        cur[:sys.n] = 0.0
    return WaveFunction(g, cur)


@dataclass(frozen=True)
class LinePdxParts:
    """Pieces of the split U(t)ψ = crossing + U_r^β(t)ψ for right-supported ψ."""

    evolved: np.ndarray       # U(t)ψ on the full grid
    crossing: np.ndarray      # boundary convolution, full grid
    restricted: np.ndarray    # U_r^β(t)ψ embedded on the full grid
    k_cut: float
    n_quad: int

    def residual_norm(self, dx: float) -> float:
        r = self.evolved - self.crossing - self.restricted
        return float(np.sqrt(np.sum(np.abs(r) ** 2) * dx))


def line_pdx_terms(psi: WaveFunction, sys: HalfLineSystem, t: float,
                   n_quad: int = 400, k_cut: float | None = None,
                   support_tol: float = 1e-6) -> LinePdxParts:
    """Assemble the line split for a state supported in x ≥ 0.

    The crossing convolution is evaluated in the grid's own momentum basis,
    where each mode sees the source S(k) = ∫₀ᵗ ds e^{-iħk²(t-s)/2m}(b(s)+ik·a(s)).
    Two regimes are joined smoothly at the quadrature resolution limit k_cut:

    * |k| < k_cut — composite Simpson after the substitution s = t-u²
      refined to u = √t·sin θ, which clusters nodes at both endpoints
      (the s = t kernel singularity and the s = 0 wall boundary layer).
    * |k| > k_cut — integration-by-parts asymptotics
      S ≈ (f(t) - f(0)e^{-iħk²t/2m})·2m/(iħk²) per source component, exact
      for the jump and kink the crossing term carries at x = 0, valid
      precisely where the oscillation e^{-iħk²u²/2m} outruns any quadrature.

    k_cut defaults to the largest wavenumber the θ grid resolves
    (phase step ≤ 0.4 rad); pass a value to override.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if n_quad < 2 or n_quad % 2:
        raise ValueError(f"n_quad must be even and >= 2, got {n_quad}")
    if psi.representation != "position" or psi.grid != sys.full_grid():
        raise ValueError("psi must be a position state on the system's full grid")
    n, dx = sys.n, sys.dx
    mass, hbar = sys.mass, sys.hbar
    samples = psi.samples
    left_mass = np.sqrt(np.sum(np.abs(samples[:n]) ** 2) * dx)
    if left_mass > support_tol * max(psi.norm(), 1e-30):
        raise DomainError(f"state has weight {left_mass:.3e} in x < 0; "
                          "the split needs right-supported input")

    g = psi.grid
    k = 2 * np.pi * np.fft.fftfreq(g.n, g.dx)
    spec0 = np.fft.fft(samples)
    k_nyq = np.pi / dx
    if k_cut is None:
        # phase step (ħk²t/2m)·(π/2n_quad)·|sin 2θ| ≤ 0.4 rad within the zone
        k_cut = np.sqrt(0.4 * (4 / np.pi) * n_quad * mass / (hbar * t))
    k_cut = float(min(k_cut, 0.9 * k_nyq))

    theta = np.linspace(0.0, np.pi / 2, n_quad + 1)
    u = np.sqrt(t) * np.sin(theta)
    dth = theta[1] - theta[0]
    w_simp = np.ones(n_quad + 1)
    w_simp[1:-1:2] = 4.0
    w_simp[2:-1:2] = 2.0
    w_simp *= dth / 3.0
    wj = w_simp * t * np.sin(2 * theta)    # ds = t·sin2θ dθ under s = t·cos²θ
    s_nodes = t - u ** 2

    a_s, b_s = _wall_data(samples[n:], sys, s_nodes)

    disp = np.exp(-1j * hbar * np.outer(u ** 2, k ** 2) / (2 * mass))
    src_quad = (wj * b_s) @ disp + 1j * k * ((wj * a_s) @ disp)

    # Endpoint asymptotics: s_nodes runs t -> 0, so f(t)=f[0], f(0)=f[-1].
    mu = hbar * k ** 2 / (2 * mass)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(mu > 0, 1.0 / np.where(mu > 0, mu, 1.0), 0.0)
    tail = np.exp(-1j * mu * t)
    i_b = (b_s[0] - b_s[-1] * tail) * inv / 1j
    i_a = (a_s[0] - a_s[-1] * tail) * inv / 1j
    src_asym = i_b + 1j * k * i_a

    w_q = _raised_cosine_window(k, 0.7 * k_cut, k_cut)
    source = w_q * src_quad + (1.0 - w_q) * src_asym
    guard = _raised_cosine_window(k, 0.85 * k_nyq, 0.95 * k_nyq)

    delta = np.zeros(g.n, dtype=complex)
    delta[n] = 1.0 / dx
    d_spec = np.fft.fft(delta)
    chi_spec = (1j * hbar / (2 * mass)) * guard * d_spec * source
    crossing = np.fft.ifft(chi_spec)

    evolved = np.fft.ifft(spec0 * np.exp(-1j * hbar * k ** 2 * t / (2 * mass)))
    restricted = np.zeros(g.n, dtype=complex)
    half = WaveFunction(sys.half_grid(), samples[n:])
    method = "eig" if not (sys.is_dirichlet or sys.is_neumann) else "images"
    restricted[n:] = restricted_propagate(half, sys, t, method=method).samples

    return LinePdxParts(evolved=evolved, crossing=crossing,
                        restricted=restricted, k_cut=k_cut,
                        n_quad=n_quad)


def _raised_cosine_window(k: np.ndarray, k_pass: float, k_stop: float) -> np.ndarray:
    ak = np.abs(k)
    w = np.ones_like(ak)
    ramp = (ak - k_pass) / max(k_stop - k_pass, 1e-300)
    mask = ramp > 0
    w[mask] = 0.5 * (1 + np.cos(np.pi * np.clip(ramp[mask], 0.0, 1.0)))
    w[ak >= k_stop] = 0.0
    return w


def _wall_data(h0: np.ndarray, sys: HalfLineSystem,
               s_nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Wall value a(s) and derivative b(s) of U_r^β(s)ψ at each quadrature node.

    Parity walls: the extension is smooth through x = 0, so the derivative is
    taken spectrally (exact for the grid).  Finite β: eigenfunction route with
    the one-sided stencil consistent with the Robin condition.
    """
    n = sys.n
    if sys.is_dirichlet or sys.is_neumann:
        f = _image_extension(h0, sys)
        k = 2 * np.pi * np.fft.fftfreq(2 * n, sys.dx)
        spec = np.fft.fft(f)
        e0 = np.exp(2j * np.pi * np.arange(2 * n) * n / (2 * n))  # value at x=0
        disp = np.exp(-1j * sys.hbar * np.outer(s_nodes, k ** 2) / (2 * sys.mass))
        if sys.is_dirichlet:
            a = np.zeros(len(s_nodes), dtype=complex)
            b = (disp * (1j * k * spec)) @ e0 / (2 * n)
        else:
            a = (disp * spec) @ e0 / (2 * n)
            b = np.zeros(len(s_nodes), dtype=complex)
        return a, b
    evals, evecs = halfline_eigensystem(sys)
    phi = h0.astype(complex).copy()
    phi[0] /= np.sqrt(2.0)
    c = evecs.T @ phi
    phases = np.exp(-1j * np.outer(s_nodes, evals) / sys.hbar)
    head = (phases * c) @ evecs[:3, :].T          # φ at the first three nodes
    psi0 = np.sqrt(2.0) * head[:, 0]
    b = (-3.0 * psi0 + 4.0 * head[:, 1] - head[:, 2]) / (2 * sys.dx)
    return sys.beta * b, b


def line_pdx_residual(psi: WaveFunction, sys: HalfLineSystem, t: float,
                      n_quad: int = 400, k_cut: float | None = None) -> float:
    """‖U(t)ψ - [crossing + U_r^β(t)ψ]‖ over the full grid."""
    parts = line_pdx_terms(psi, sys, t, n_quad=n_quad, k_cut=k_cut)
    return parts.residual_norm(sys.dx)
