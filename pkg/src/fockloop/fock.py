"""Truncated Fock-space linear algebra for a single cavity mode.

States are real symmetric (n_max+1) x (n_max+1) density matrices; every
operator used by the feedback loop (photon-number projectors, displacements
along the real quadrature, thermal relaxation) maps real matrices to real
matrices, so complex storage is never needed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .errors import NumericsError, TruncationWarning

# Eigenvalues of a valid state may dip below zero by roughly (kappa*T_a)^2
# after an Euler relaxation step; dips inside this window are clamped to
# zero and the state renormalized, anything worse is a hard error.
PSD_CLAMP = 1e-8
# Fast-path positivity certificate: a Cholesky success on rho + CERT_SHIFT*I
# proves every eigenvalue exceeds -CERT_SHIFT, which is deep inside the
# clamp window, so such states pass unchanged without an eigenvalue solve.
CERT_SHIFT = 1e-13


def annihilation(n_max: int) -> np.ndarray:
    """Ladder operator a with a[n-1, n] = sqrt(n), truncated at n_max."""
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1)), k=1)


def number_diag(n_max: int) -> np.ndarray:
    """Diagonal of the photon-number operator a^T a."""
    return np.arange(n_max + 1, dtype=float)


def raise_lower_diag(n_max: int) -> np.ndarray:
    """Diagonal of the truncated a a^T (equals n+1 except 0 at the cutoff)."""
    d = np.arange(1.0, n_max + 2)
    d[n_max] = 0.0
    return d


def quadrature_generator(n_max: int) -> np.ndarray:
    """Antisymmetric generator a^T - a of real-quadrature displacements."""
    a = annihilation(n_max)
    return a.T - a


def fidelity(rho: np.ndarray, n_tag: int) -> float:
    """Overlap with the target Fock state, i.e. the population of level n_tag."""
    return float(rho[n_tag, n_tag])


def mean_photon(rho: np.ndarray) -> float:
    diag = np.diagonal(rho)
    return float(np.arange(len(diag)) @ diag)


def population_split(rho: np.ndarray, n_tag: int) -> tuple[float, float, float]:
    """Probability mass below, at, and above the target level."""
    diag = np.diagonal(rho)
    return (float(diag[:n_tag].sum()), float(diag[n_tag]), float(diag[n_tag + 1 :].sum()))


def validate_density(rho: np.ndarray, *, trace_tol: float = 1e-10,
                     sym_tol: float = 1e-12, psd_tol: float = PSD_CLAMP) -> None:
    """Raise NumericsError unless rho is a valid real symmetric state."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NumericsError(f"density matrix must be square, got shape {rho.shape}")
    if np.iscomplexobj(rho):
        raise NumericsError("density matrix must be real")
    tr = float(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise NumericsError(f"trace {tr!r} deviates from 1 beyond {trace_tol}")
    asym = float(np.abs(rho - rho.T).max())
    if asym > sym_tol:
        raise NumericsError(f"asymmetry {asym!r} exceeds {sym_tol}")
    lo = float(np.linalg.eigvalsh(rho)[0])
    if lo < -psd_tol:
        raise NumericsError(f"eigenvalue {lo!r} below -{psd_tol}")


class DisplacementFactory:
    """Exact orthogonal displacement matrices exp(alpha * (a^T - a)).

    The antisymmetric generator is eigendecomposed once; each build is then a
    single complex sandwich product, and the result is orthogonal to machine
    precision, so displacement conjugation preserves trace, symmetry and
    positivity exactly.
    """

    def __init__(self, n_max: int):
        self.n_max = n_max
        self.dim = n_max + 1
        self.alpha_max = math.sqrt(n_max)
        k = quadrature_generator(n_max)
        # i*K is Hermitian for real antisymmetric K, so eigh applies.
        mu, u = np.linalg.eigh(1j * k)
        self._mu = mu
        self._u = np.ascontiguousarray(u)
        self._uh = np.ascontiguousarray(u.conj().T)

    def build(self, alpha: float) -> np.ndarray:
        """Displacement matrix for a real amplitude alpha (in sqrt-photon units)."""
        if abs(alpha) > self.alpha_max:
            raise NumericsError(
                f"displacement amplitude {alpha!r} exceeds sqrt(n_max) = {self.alpha_max!r}")
        w = np.exp(-1j * alpha * self._mu)
        d = (self._u * w) @ self._uh
        return np.ascontiguousarray(d.real)

    def apply(self, rho: np.ndarray, alpha: float) -> np.ndarray:
        d = self.build(alpha)
        return conjugate_symmetric(rho, d)


def conjugate_symmetric(rho: np.ndarray, d: np.ndarray) -> np.ndarray:
    """d @ rho @ d.T, re-symmetrized to keep the stored state exactly symmetric."""
    out = np.dot(np.dot(d, rho), d.T)
    out += out.T
    out *= 0.5
    return out


_FACTORIES: dict[int, DisplacementFactory] = {}


def displacement_factory(n_max: int) -> DisplacementFactory:
    f = _FACTORIES.get(n_max)
    if f is None:
        f = _FACTORIES[n_max] = DisplacementFactory(n_max)
    return f


def displacement_matrix(alpha: float, n_max: int) -> np.ndarray:
    return displacement_factory(n_max).build(alpha)


def apply_displacement(rho: np.ndarray, alpha: float) -> np.ndarray:
    """Displace a state along the real quadrature by alpha."""
    return displacement_factory(rho.shape[0] - 1).apply(rho, alpha)


def bch_quadratic(rho: np.ndarray, alpha: float) -> np.ndarray:
    """Second-order commutator expansion of a displacement conjugation.

    Approximates D(alpha) rho D(-alpha) as
    rho - alpha [rho, K] + alpha^2/2 [[rho, K], K] with K = a^T - a.
    Used as a small-amplitude oracle; the residual scales as alpha^3.
    """
    k = quadrature_generator(rho.shape[0] - 1)
    c1 = rho @ k - k @ rho
    c2 = c1 @ k - k @ c1
    return rho - alpha * c1 + (alpha * alpha / 2.0) * c2


def poisson_tail_above(nbar: float, n_max: int) -> float:
    """Probability a Poisson(nbar) draw exceeds n_max (untruncated reference)."""
    if nbar == 0.0:
        return 0.0
    term = math.exp(-nbar)
    total = term
    for n in range(1, n_max + 1):
        term *= nbar / n
        total += term
    return max(0.0, 1.0 - total)


def coherent_state(alpha0: float, n_max: int) -> np.ndarray:
    """Coherent state of real amplitude alpha0 as a displaced truncated vacuum.

    Built with the same exact orthogonal displacement the loop uses, so the
    result is exactly unit-trace and positive. Warns when the untruncated
    Poisson distribution would put more than 1e-2 of its mass above n_max.
    """
    tail = poisson_tail_above(alpha0 * alpha0, n_max)
    if tail > 1e-2:
        warnings.warn(
            f"coherent state nbar={alpha0 * alpha0:.3f} has Poisson mass "
            f"{tail:.3e} above the n_max={n_max} cutoff",
            TruncationWarning, stacklevel=2)
    c = displacement_matrix(alpha0, n_max)[:, 0]
    rho = np.outer(c, c)
    rho /= np.trace(rho)
    return rho


def fock_state(n: int, n_max: int) -> np.ndarray:
    rho = np.zeros((n_max + 1, n_max + 1))
    rho[n, n] = 1.0
    return rho


@dataclass(frozen=True)
class RelaxationParams:
    """Cavity-environment coupling over one feedback period.

    T_cav is the energy lifetime in seconds (math.inf switches damping off),
    T_a the loop period, n_th the thermal occupancy of the environment.
    """

    T_cav: float
    T_a: float
    n_th: float

    def __post_init__(self):
        if not (self.T_cav > 0.0):
            raise NumericsError(f"T_cav must be positive, got {self.T_cav!r}")
        if not (self.T_a > 0.0):
            raise NumericsError(f"T_a must be positive, got {self.T_a!r}")
        if self.n_th < 0.0:
            raise NumericsError(f"n_th must be non-negative, got {self.n_th!r}")

    @property
    def kappa(self) -> float:
        return 0.0 if math.isinf(self.T_cav) else 1.0 / self.T_cav

    @property
    def kappa_dt(self) -> float:
        return self.kappa * self.T_a


def lindblad(rho: np.ndarray, params: RelaxationParams) -> np.ndarray:
    """Generator of thermal relaxation: downward channel at kappa*(1+n_th)
    with operator a, upward channel at kappa*n_th with operator a^T.

    All products use the truncated operators, which makes the trace of the
    result exactly zero in floating point up to rounding.
    """
    n_max = rho.shape[0] - 1
    a = annihilation(n_max)
    ad = a.T
    kappa = params.kappa
    down = a @ rho @ ad - 0.5 * ((ad @ a) @ rho + rho @ (ad @ a))
    up = ad @ rho @ a - 0.5 * ((a @ ad) @ rho + rho @ (a @ ad))
    return kappa * (1.0 + params.n_th) * down + kappa * params.n_th * up


class LindbladKernel:
    """Precomputed elementwise form of one Euler relaxation step.

    rho + T_a * L(rho) decomposes into a Hadamard mask on rho plus shifted
    Hadamard products for the jump gains, which keeps the hot loop free of
    matrix products. Also owns the LAPACK handle for the positivity guard.
    """

    def __init__(self, params: RelaxationParams, n_max: int):
        self.params = params
        self.n_max = n_max
        dim = n_max + 1
        kdt = params.kappa_dt
        self.kappa_dt = kdt
        if kdt * dim > 0.05:
            raise NumericsError(
                f"kappa*T_a*(n_max+1) = {kdt * dim:.4f} exceeds 0.05; the Euler "
                "relaxation step is not trustworthy at this coarseness")
        if kdt * dim > 0.01:
            warnings.warn(
                f"kappa*T_a*(n_max+1) = {kdt * dim:.4f} above 0.01; Euler "
                "relaxation error may be noticeable", stacklevel=2)
        n = number_diag(n_max)
        aad = raise_lower_diag(n_max)
        decay_diag = (1.0 + params.n_th) * n + params.n_th * aad
        self.decay_diag = decay_diag
        # 1 - (kdt/2)(A_i + A_j) applied elementwise.
        self.mask = 1.0 - (kdt / 2.0) * (decay_diag[:, None] + decay_diag[None, :])
        s_down = np.sqrt(np.arange(1.0, n_max + 1))
        self.gain_down = kdt * (1.0 + params.n_th) * np.outer(s_down, s_down)
        self.gain_up = kdt * params.n_th * np.outer(s_down, s_down)
        self._syev, self._potrf = get_lapack_funcs(
            ("syev", "potrf"), (np.empty((dim, dim)),))
        self._scratch = np.empty((dim, dim))
        self._diag_stride = dim + 1

    def euler(self, rho: np.ndarray) -> np.ndarray:
        """rho + T_a * L(rho) without the positivity guard."""
        out = self.mask * rho
        out[:-1, :-1] += self.gain_down * rho[1:, 1:]
        out[1:, 1:] += self.gain_up * rho[:-1, :-1]
        return out

    def psd_certificate(self, rho: np.ndarray) -> bool:
        """True when all eigenvalues provably exceed -CERT_SHIFT."""
        np.copyto(self._scratch, rho)
        self._scratch.flat[:: self._diag_stride] += CERT_SHIFT
        _, info = self._potrf(self._scratch, lower=1, overwrite_a=1, clean=0)
        return info == 0

    def min_eigenvalue(self, rho: np.ndarray) -> float:
        np.copyto(self._scratch, rho)
        w, _, info = self._syev(self._scratch, compute_v=0, lower=1, overwrite_a=1)
        if info != 0:
            raise NumericsError(f"eigenvalue solve failed (info={info})")
        return float(w[0])


def relax_step(rho: np.ndarray, kernel: LindbladKernel) -> np.ndarray:
    """One Euler relaxation step with the documented positivity policy.

    States certified positive within CERT_SHIFT skip the eigenvalue solve;
    dips between -CERT_SHIFT and 0 therefore pass unclamped, which stays
    five orders of magnitude inside the PSD_CLAMP tolerance.
    """
    if kernel.kappa_dt == 0.0:
        return rho
    out = kernel.euler(rho)
    if kernel.psd_certificate(out):
        return out
    lo = kernel.min_eigenvalue(out)
    if lo >= 0.0:
        return out
    if lo < -PSD_CLAMP:
        raise NumericsError(
            f"relaxation produced eigenvalue {lo!r} below the -{PSD_CLAMP} clamp window")
    w, v = np.linalg.eigh(out)
    np.clip(w, 0.0, None, out=w)
    out = (v * w) @ v.T
    out /= np.trace(out)
    out += out.T
    out *= 0.5
    return out
