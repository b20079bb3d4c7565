"""Finite-dimensional quantum kernel: unitaries, Zeno products, and the
path-decomposition split of a propagator at a projector boundary.

Everything here acts on dense complex matrices.  The central identity is the
splitting of the evolution operator by the first crossing of the boundary
between the subspaces picked out by a projector P and its complement Q = 1 - P:

    U(t) = U(t)P + ∫₀ᵗ ds U(t-s) Ṗ U_r(s) + U_r(t),      Ṗ = (i/ħ)[H, P]

where U_r(t) is the restricted propagator, realised as the Zeno limit of
interleaved evolution and projection,

    U_r(t) = lim_{n→∞} U(nδt) Q(nδt) Q((n-1)δt) ... Q(δt) Q,   δt = t/n,

with Q(s) = U†(s) Q U(s).  The limit is never taken symbolically: callers pick
a finite n, and the generator form Q exp(-i QHQ t/ħ) Q is available separately
for cross-checks.  Natural units ħ = 1 by default; ħ is a keyword everywhere.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """An input violates a mathematical precondition (not merely a bad type)."""


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, Operator):
        return a.mat
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


class Operator:
    """Dense complex square matrix with the predicates used across the package."""

    __slots__ = ("mat",)

    def __init__(self, mat):
        m = np.asarray(mat, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise ValueError("operator entries must be finite")
        self.mat = m

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls(np.eye(dim, dtype=complex))

    @classmethod
    def zeros(cls, dim: int) -> "Operator":
        return cls(np.zeros((dim, dim), dtype=complex))

    def dagger(self) -> "Operator":
        return Operator(self.mat.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def norm(self) -> float:
        """Operator (spectral) norm."""
        return float(np.linalg.norm(self.mat, 2))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return np.linalg.norm(self.mat - self.mat.conj().T, 2) <= tol

    def is_unitary(self, tol: float = 1e-10) -> bool:
        d = self.mat.conj().T @ self.mat - np.eye(self.dim)
        return np.linalg.norm(d, 2) <= tol

    def is_projector(self, tol: float = 1e-10) -> bool:
        idem = np.linalg.norm(self.mat @ self.mat - self.mat, 2) <= tol
        return idem and self.is_hermitian(tol)

    def apply(self, vec) -> np.ndarray:
        return self.mat @ np.asarray(vec, dtype=complex)

    def __matmul__(self, other) -> "Operator":
        return Operator(self.mat @ _as_matrix(other))

    def __add__(self, other) -> "Operator":
        return Operator(self.mat + _as_matrix(other))

    def __sub__(self, other) -> "Operator":
        return Operator(self.mat - _as_matrix(other))

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.mat * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(-self.mat)

    def __repr__(self) -> str:
        return f"Operator(dim={self.dim})"


@dataclass(frozen=True)
class ZenoSchedule:
    """Uniform projection schedule on [0, t] with n evolution intervals.

    n = 0 is the degenerate convention "project once, never evolve"; products
    built from it reduce to the bare projector.
    """

    t: float
    n: int

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"schedule time must be >= 0, got {self.t}")
        if self.n < 0:
            raise ValueError(f"interval count must be >= 0, got {self.n}")

    @property
    def dt(self) -> float:
        if self.n == 0:
            return 0.0
        return self.t / self.n

    @property
    def times(self) -> np.ndarray:
        """Projection instants t_k = k·δt for k = 0..n."""
        return np.linspace(0.0, self.t, self.n + 1)


@dataclass(frozen=True)
class PdxTerms:
    """The three pieces of the propagator split at a projector boundary."""

    boundary: Operator      # U(t) P
    crossing: Operator      # ∫₀ᵗ ds U(t-s) Ṗ U_r(s)
    restricted: Operator    # U_r(t)
    quad_points: int

    @property
    def total(self) -> Operator:
        return self.boundary + self.crossing + self.restricted


@dataclass(frozen=True)
class DecoherenceMatrix:
    """2x2 decoherence functional d(i,j) = Tr(C_i ρ C_j†) for a history pair."""

    d: np.ndarray
    labels: tuple[str, str] = ("stay", "cross")

    @property
    def d11(self) -> float:
        return float(self.d[0, 0].real)

    @property
    def d22(self) -> float:
        return float(self.d[1, 1].real)

    @property
    def d12(self) -> complex:
        return complex(self.d[0, 1])

    def total(self) -> complex:
        return complex(self.d.sum())

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.abs(self.d - self.d.conj().T).max() <= tol)

    def is_consistent(self, rel_tol: float = 1e-6) -> bool:
        """Interference is negligible against the branch probabilities."""
        scale = max(self.d11, self.d22, 1e-30)
        return abs(self.d12.real) <= rel_tol * scale


def evolve(H, t: float, hbar: float = 1.0) -> Operator:
    """exp(-iHt/ħ) through the eigendecomposition of hermitian H.

    The result is unitary to machine precision for any t.
    """
    m = _as_matrix(H)
    herm_defect = np.linalg.norm(m - m.conj().T, 2)
    if herm_defect > 1e-10 * max(1.0, np.linalg.norm(m, 2)):
        raise DomainError(f"H is not hermitian (defect {herm_defect:.3e})")
    evals, vecs = np.linalg.eigh(m)
    phases = np.exp(-1j * evals * (t / hbar))
    return Operator((vecs * phases) @ vecs.conj().T)


def pdot(H, P, hbar: float = 1.0) -> Operator:
    """Heisenberg velocity of the projector: Ṗ = (i/ħ)[H, P]."""
    h, p = _as_matrix(H), _as_matrix(P)
    if h.shape != p.shape:
        raise ValueError(f"dimension mismatch: H is {h.shape}, P is {p.shape}")
    return Operator((1j / hbar) * (h @ p - p @ h))


def _check_projector(P, what: str = "P") -> np.ndarray:
    p = _as_matrix(P)
    if not Operator(p).is_projector(1e-10):
        raise DomainError(f"{what} is not an orthogonal projector")
    return p


def decomposition_of_unity_residual(H, P, schedule: ZenoSchedule,
                                    hbar: float = 1.0) -> float:
    """Residual ‖1 - [P + Σ_k P(t_k)Q(t_{k-1})···Q + Q(t_n)···Q]‖.

    The bracketed sum telescopes to the identity for every n and every set of
    times, so the residual is pure numerical noise; anything above ~1e-12
    indicates a broken projector or evolution.
    """
    h = _as_matrix(H)
    p = _check_projector(P)
    q = np.eye(p.shape[0]) - p
    total = p.copy()
    chain = q.copy()          # Q(t_{k-1}) ... Q(t_0), with t_0 = 0
    for tk in schedule.times[1:]:
        u = evolve(h, tk, hbar).mat
        p_t = u.conj().T @ p @ u
        q_t = u.conj().T @ q @ u
        total = total + p_t @ chain
        chain = q_t @ chain
    total = total + chain
    return float(np.linalg.norm(np.eye(p.shape[0]) - total, 2))


def zeno_product(H, Q, schedule: ZenoSchedule, hbar: float = 1.0) -> Operator:
    """Finite-n Zeno approximant U(nδt) Q(nδt) ··· Q(δt) Q of U_r(t).

    Telescoping the Heisenberg projectors gives the equivalent stable form
    Q [U(δt) Q]ⁿ, evaluated with a logarithmic number of matrix products.
    For n = 0 the product degenerates to Q itself.
    """
    h = _as_matrix(H)
    q = _check_projector(Q, "Q")
    if schedule.n == 0:
        return Operator(q)
    step = evolve(h, schedule.dt, hbar).mat @ q
    return Operator(q @ np.linalg.matrix_power(step, schedule.n))


def restricted_limit(H, Q, t: float, hbar: float = 1.0) -> Operator:
    """Generator form Q exp(-i QHQ t/ħ) Q of the restricted propagator.

    In finite dimension the Zeno product converges to this at rate O(1/n);
    it serves as the cross-check for the finite-n route, not as its default.
    """
    h = _as_matrix(H)
    q = _check_projector(Q, "Q")
    qhq = q @ h @ q
    qhq = 0.5 * (qhq + qhq.conj().T)       # scrub roundoff asymmetry
    return Operator(q @ evolve(qhq, t, hbar).mat @ q)


def zeno_limit_richardson(H, Q, t: float, n: int, hbar: float = 1.0) -> Operator:
    """Richardson step in 1/n: 2·Z(2n) - Z(n) cancels the leading Zeno error."""
    z_n = zeno_product(H, Q, ZenoSchedule(t, n), hbar)
    z_2n = zeno_product(H, Q, ZenoSchedule(t, 2 * n), hbar)
    return 2.0 * z_2n - z_n


def pdx_assemble(H, P, t: float, n_zeno: int, n_quad: int,
                 hbar: float = 1.0, ur: str = "zeno") -> PdxTerms:
    """Assemble boundary, crossing, and restricted terms of the propagator split.

    The crossing convolution ∫₀ᵗ ds U(t-s) Ṗ U_r(s) uses composite Simpson on
    n_quad uniformly spaced nodes (n_quad odd).  U_r(s) comes from the Zeno
    product with interval count scaled as n_zeno·s/t, keeping the slice width
    fixed across nodes (ur="zeno"), or from the generator form (ur="limit").
    """
    if n_quad < 3 or n_quad % 2 == 0:
        raise ValueError(f"n_quad must be odd and >= 3, got {n_quad}")
    if n_zeno < 1:
        raise ValueError(f"n_zeno must be >= 1, got {n_zeno}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if ur not in ("zeno", "limit"):
        raise ValueError(f"unknown ur mode {ur!r}")
    h = _as_matrix(H)
    p = _check_projector(P)
    dim = p.shape[0]
    q = np.eye(dim) - p
    pd = pdot(h, p, hbar).mat

    herm_defect = np.linalg.norm(h - h.conj().T, 2)
    if herm_defect > 1e-10 * max(1.0, np.linalg.norm(h, 2)):
        raise DomainError(f"H is not hermitian (defect {herm_defect:.3e})")
    evals, vecs = np.linalg.eigh(h)

    def u_of(tau: float) -> np.ndarray:
        return (vecs * np.exp(-1j * evals * (tau / hbar))) @ vecs.conj().T

    if ur == "limit":
        qhq = q @ h @ q
        qhq = 0.5 * (qhq + qhq.conj().T)
        qe, qv = np.linalg.eigh(qhq)

    def u_r(s: float) -> np.ndarray:
        if ur == "limit":
            ur_s = (qv * np.exp(-1j * qe * (s / hbar))) @ qv.conj().T
            return q @ ur_s @ q
        n_s = int(np.ceil(n_zeno * s / t)) if t > 0 else 0
        if n_s == 0:
            return q.astype(complex)
        step = u_of(s / n_s) @ q
        return q @ np.linalg.matrix_power(step, n_s)

    s_nodes = np.linspace(0.0, t, n_quad)
    ds = s_nodes[1] - s_nodes[0] if n_quad > 1 else 0.0
    weights = np.ones(n_quad)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    weights *= ds / 3.0

    crossing = np.zeros((dim, dim), dtype=complex)
    for s, w in zip(s_nodes, weights):
        crossing += w * (u_of(t - s) @ pd @ u_r(s))

    boundary = Operator(u_of(t) @ p)
    restricted = Operator(u_r(t))
    return PdxTerms(boundary=boundary, crossing=Operator(crossing),
                    restricted=restricted, quad_points=n_quad)


def _check_density_matrix(rho) -> np.ndarray:
    r = _as_matrix(rho)
    if np.linalg.norm(r - r.conj().T, 2) > 1e-8:
        raise DomainError("rho is not hermitian")
    if abs(np.trace(r) - 1.0) > 1e-8:
        raise DomainError(f"rho has trace {np.trace(r):.6g}, expected 1")
    if np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() < -1e-10:
        raise DomainError("rho has a negative eigenvalue")
    return r


def decoherence_functional(H, Q, rho, t: float, n_zeno: int,
                           hbar: float = 1.0,
                           richardson: bool = False) -> DecoherenceMatrix:
    """d(i,j) = Tr(C_i ρ C_j†) for the pair "stayed in Q" vs "crossed".

    C₁ = U†(t) U_r(t) with U_r from the n_zeno-slice Zeno product; C₂ = 1 - C₁.
    The sum Σ_ij d(i,j) = Tr ρ = 1 holds structurally; vanishing Re d(1,2)
    is the consistency condition that lets the diagonal be read as
    probabilities.

    richardson=True replaces the plain product with the 1/n extrapolant
    2·Z(2n) - Z(n).  Raw products cannot push the slice error below the
    float drift n·ε, so the extrapolant is the route to limit-accurate
    entries at large n_zeno.
    """
    h = _as_matrix(H)
    rho_m = _check_density_matrix(rho)
    u = evolve(h, t, hbar).mat
    if richardson:
        u_r = zeno_limit_richardson(h, Q, t, n_zeno, hbar).mat
    else:
        u_r = zeno_product(h, Q, ZenoSchedule(t, n_zeno), hbar).mat
    c1 = u.conj().T @ u_r
    c2 = np.eye(c1.shape[0]) - c1
    ops = (c1, c2)
    d = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            d[i, j] = np.trace(ops[i] @ rho_m @ ops[j].conj().T)
    return DecoherenceMatrix(d=d)


@dataclass(frozen=True)
class NoGoReport:
    """Numerical record of the obstruction to [H, T] = iħ·1 in finite dimension."""

    dim: int
    hbar: float
    trials: int
    seed: int
    trace_target: complex                  # trace of iħ·1 = iħ·dim
    max_abs_trace_commutator: float        # sup over samples of |tr [H, T]|
    min_defect_spectral: float             # min ‖[H,T] - iħ1‖₂ over samples
    min_defect_frobenius: float
    spectral_floor: float                  # ħ  (|tr M|/dim lower bound)
    frobenius_floor: float                 # ħ·√dim


def conjugate_time_no_go(H, trials: int = 1000, rng_seed: int = 42,
                         hbar: float = 1.0) -> NoGoReport:
    """Sample hermitian T and document why no T can satisfy [H, T] = iħ·1.

    Every commutator is traceless while iħ·1 has trace iħ·dim, so the defect
    ‖[H,T] - iħ·1‖ is bounded below by ħ (spectral norm) and ħ√dim (Frobenius)
    no matter how T is chosen.  The report carries the observed minima.
    """
    h = _as_matrix(H)
    if not Operator(h).is_hermitian(1e-10 * max(1.0, np.linalg.norm(h, 2))):
        raise DomainError("H is not hermitian")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    dim = h.shape[0]
    rng = np.random.default_rng(rng_seed)
    target = 1j * hbar * np.eye(dim)
    max_trace = 0.0
    min_spec = np.inf
    min_frob = np.inf
    for _ in range(trials):
        a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        t_op = 0.5 * (a + a.conj().T)
        comm = h @ t_op - t_op @ h
        max_trace = max(max_trace, abs(np.trace(comm)))
        defect = comm - target
        min_spec = min(min_spec, np.linalg.norm(defect, 2))
        min_frob = min(min_frob, np.linalg.norm(defect, "fro"))
    return NoGoReport(
        dim=dim, hbar=hbar, trials=trials, seed=rng_seed,
        trace_target=complex(1j * hbar * dim),
        max_abs_trace_commutator=float(max_trace),
        min_defect_spectral=float(min_spec),
        min_defect_frobenius=float(min_frob),
        spectral_floor=float(hbar),
        frobenius_floor=float(hbar * np.sqrt(dim)),
    )


@dataclass(frozen=True)
class TwoStateSystem:
    """H = ħω σ₁ on the basis (up, down); down is the monitored subspace.

    Closed forms below are trigonometric identities, independent of the
    numeric evolution/quadrature routes, and serve as oracles for them:

        U(t) = [[cos ωt, -i sin ωt], [-i sin ωt, cos ωt]]
        U_r(t) -> Q,   crossing -> [[0, -i sin ωt], [0, cos ωt - 1]]
    """

    omega: float
    hbar: float = 1.0

    def hamiltonian(self) -> Operator:
        return Operator(self.hbar * self.omega *
                        np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex))

    def projector_up(self) -> Operator:
        return Operator(np.diag([1.0, 0.0]).astype(complex))

    def projector_down(self) -> Operator:
        return Operator(np.diag([0.0, 1.0]).astype(complex))

    def unitary(self, t: float) -> Operator:
        th = self.omega * t
        c, s = np.cos(th), np.sin(th)
        return Operator(np.array([[c, -1j * s], [-1j * s, c]]))

    def pdot_closed(self) -> Operator:
        return Operator(self.omega * np.array([[0.0, -1j], [1j, 0.0]]))

    def crossing_closed(self, t: float) -> Operator:
        th = self.omega * t
        return Operator(np.array([[0.0, -1j * np.sin(th)],
                                  [0.0, np.cos(th) - 1.0]]))

    def boundary_closed(self, t: float) -> Operator:
        return self.unitary(t) @ self.projector_up()

    def zeno_survival(self, n: int, t: float) -> float:
        """Survival probability of down after n projective slices: cos²ⁿ(ωt/n)."""
        if n == 0:
            return 1.0
        return float(np.cos(self.omega * t / n) ** (2 * n))

    def decoherence_closed(self, t: float) -> tuple[float, float, complex]:
        """(d11, d22, d12) for initial down in the continuous-monitoring limit."""
        c = np.cos(self.omega * t)
        return 1.0, float(2.0 - 2.0 * c), complex(c - 1.0)
