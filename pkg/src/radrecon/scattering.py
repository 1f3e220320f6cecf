"""Scattering by a potential on a voxel grid, far fields and Born-level inversion.

Conventions
-----------
The outgoing Green function of ``-Δ + v - κ²`` solves

    R⁺_v(x, y) = -G⁺(x - y) + ∫ G⁺(x - z) v(z) R⁺_v(z, y) dz,

with ``G⁺(x) = -e^{iκ|x|}/(4π|x|)``, and its scattered part is
``R⁺_{v,sc} = R⁺_v - R₀⁺``. The total wave for incidence ``θ`` solves
``ψ⁺ = e^{iκθ·x} + ∫ G⁺(x - z) v ψ⁺ dz`` and its scattered part behaves like
``e^{iκ|x|}/|x| · A(θ, x̂)``. In the Born approximation
``A(θ, θ') = -v̂(κ(θ' - θ)) / (4π)`` with ``v̂(ξ) = ∫ v(z) e^{-iξ·z} dz``.

Far from the scatterer the scattered Green function and the scattered
plane wave are linked by

    R⁺_{v,sc}(x, y) = e^{iκ|x|}/(4π|x|) · ψ⁺_sc(y, -x̂) + O(|x|⁻²),

which :func:`farfield_from_green` inverts. The sign follows from the
definitions above and is checked numerically in the test suite.

Discretisation
--------------
Collocation at voxel centres with equal weights. The self-cell term is the
integral of ``G⁺`` over a ball with the voxel's volume,
``-[a e^{iκa}/(iκ) + (e^{iκa} - 1)/κ²]`` with ``a = (3·vol/4π)^{1/3}``, so the
matrix stays symmetric and reciprocity holds to round-off.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import mpmath as mp
import numpy as np
import scipy.linalg as sla

from . import mpctx
from .awseries import mp_unit
from .errors import (
    BornValidityWarning,
    GridSizeError,
    PipelineStageError,
    RadReconError,
    SingularSystemError,
    ValidationError,
)
from .fields import PotentialGrid, check_kappa, green_outgoing
from .planeops import (
    PlaneFrame,
    PlaneGrid,
    farfield_basis,
    fit_outgoing,
    fit_outgoing_hybrid,
)
from .rayrecover import RecoverParams, extrapolate_estimates, recovery_operator

__all__ = [
    "MAX_AXIS",
    "MAX_VOXELS",
    "LSOperator",
    "GreenMatrixProblem",
    "GreenSolution",
    "ls_solve",
    "r_v_sc",
    "FarField",
    "farfield_series",
    "farfield_from_green",
    "scattering_amplitude",
    "ball_fourier",
    "born_amplitude_ball",
    "potential_fourier",
    "reciprocity_report",
    "ConeSet",
    "FourierQuadrature",
    "fourier_quadrature",
    "band_limited",
    "LSGreenData",
    "PipelineConfig",
    "PipelineResult",
    "born_pipeline",
    "theorem3_pipeline",
]

MAX_AXIS = 24
MAX_VOXELS = 6000
SINGULAR_RCOND = 1e-12


def self_cell_integral(volume: float, kappa: float) -> complex:
    """``∫ G⁺`` over a ball of the given volume centred at the singularity."""
    a = (3.0 * volume / (4.0 * math.pi)) ** (1.0 / 3.0)
    ea = np.exp(1j * kappa * a)
    return complex(-(a * ea / (1j * kappa) + (ea - 1.0) / kappa**2))


class LSOperator:
    """Factorised Lippmann-Schwinger system for one potential and wavenumber.

    The LU factorisation is computed once and then shared by every source,
    plane wave and evaluation point, so an instance can serve parallel
    read-only callers.

    Parameters
    ----------
    potential : PotentialGrid
    kappa : float

    Raises
    ------
    GridSizeError
        If the grid exceeds :data:`MAX_AXIS` voxels per axis or the number of
        nonzero voxels exceeds :data:`MAX_VOXELS`.
    SingularSystemError
        If the discretised equation is (numerically) not uniquely solvable.
    """

    def __init__(self, potential: PotentialGrid, kappa: float):
        self.kappa = check_kappa(kappa)
        self.potential = potential
        if potential.n > MAX_AXIS:
            raise GridSizeError(f"potential grid has {potential.n} voxels per axis; limit is {MAX_AXIS}")
        z, v = potential.active()
        if len(z) > MAX_VOXELS:
            raise GridSizeError(f"{len(z)} nonzero voxels exceed the dense-solver limit {MAX_VOXELS}")
        self.centers = z
        self.values = v
        self.volume = potential.voxel_volume
        self.kernel = self._kernel_matrix()
        M = len(z)
        self.system = np.eye(M, dtype=complex) - self.kernel * v[None, :]
        if M:
            with warnings.catch_warnings():
                # singularity is reported through rcond below
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                self._lu = sla.lu_factor(self.system)
            anorm = np.linalg.norm(self.system, 1)
            rcond, info = sla.lapack.zgecon(self._lu[0], anorm, norm="1")
            self.rcond = float(rcond)
            if not self.rcond > SINGULAR_RCOND:
                raise SingularSystemError(
                    f"Lippmann-Schwinger system is singular (rcond {self.rcond:.2e}); "
                    "the scattering problem is not uniquely solvable at this wavenumber",
                    stage="ls_solve",
                )
        else:
            self._lu = None
            self.rcond = 1.0

    def _kernel_matrix(self) -> np.ndarray:
        """``vol·G⁺(z_i - z_j)`` with the self-cell integral on the diagonal."""
        z = self.centers
        M = len(z)
        if M == 0:
            return np.zeros((0, 0), dtype=complex)
        d = z[:, None, :] - z[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        np.fill_diagonal(r, 1.0)
        K = -self.volume * np.exp(1j * self.kappa * r) / (4 * np.pi * r)
        np.fill_diagonal(K, self_cell_integral(self.volume, self.kappa))
        return K

    @property
    def size(self) -> int:
        return len(self.centers)

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is None:
            return np.zeros_like(rhs, dtype=complex)
        return sla.lu_solve(self._lu, rhs)

    def correction_norm(self) -> float:
        """Spectral norm of ``K·diag(v)``; the Born series converges when it is below one."""
        if not self.size:
            return 0.0
        return float(np.linalg.norm(self.kernel * self.values[None, :], 2))

    # -- point sources ---------------------------------------------------------

    def source_field(self, y) -> np.ndarray:
        """``u = R⁺_v(z, y)`` at the active voxel centres for sources ``y`` (shape ``(M, m)``)."""
        Y = np.atleast_2d(np.asarray(y, dtype=float))
        if not self.size:
            return np.zeros((0, len(Y)), dtype=complex)
        g = green_outgoing(self.centers[:, None, :] - Y[None, :, :], self.kappa)
        return self._solve(-g)

    def weights(self, y) -> np.ndarray:
        """``c_z(y) = v(z) R⁺_v(z, y) vol``, shape ``(M, m)`` for ``m`` sources."""
        return self.source_field(y) * (self.values * self.volume)[:, None]

    def scattered(self, x, y) -> np.ndarray:
        """``R⁺_{v,sc}(x, y)`` for points ``x`` (shape ``(..., 3)``) and one source ``y``."""
        pts = np.asarray(x, dtype=float)
        if not self.size:
            out = np.zeros(pts.shape[:-1], dtype=complex)
            return out[()] if out.ndim == 0 else out
        c = self.weights(y)[:, 0]
        G = green_outgoing(pts[..., None, :] - self.centers, self.kappa)
        out = G @ c
        return out[()] if np.ndim(out) == 0 else out

    def scattered_matrix(self, X, Y) -> np.ndarray:
        """``R⁺_{v,sc}(X_i, Y_j)`` for point sets ``X`` and ``Y``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if not self.size:
            return np.zeros((len(X), len(Y)), dtype=complex)
        G = green_outgoing(X[:, None, :] - self.centers[None, :, :], self.kappa)
        return G @ self.weights(Y)

    def total(self, x, y) -> np.ndarray:
        """``R⁺_v(x, y) = -G⁺(x - y) + Σ_z G⁺(x - z) c_z(y)``."""
        pts = np.asarray(x, dtype=float)
        return -green_outgoing(pts - np.asarray(y, dtype=float), self.kappa) + self.scattered(pts, y)

    def scattered_mp(self, x: Sequence, y) -> mp.mpc:
        """``R⁺_{v,sc}(x, y)`` with the final sum in the current mpmath precision.

        The voxel weights come from the double-precision solve; evaluating the
        Green functions in extended precision keeps the samples smooth along
        long rays, which the recovery tower needs.
        """
        if not self.size:
            return mp.mpc(0)
        c = self.weights(y)[:, 0]
        k = mp.mpf(self.kappa)
        total = mp.mpc(0)
        for zc, cz in zip(self.centers, c):
            dx = [x[i] - mp.mpf(zc[i]) for i in range(3)]
            r = mp.sqrt(dx[0] ** 2 + dx[1] ** 2 + dx[2] ** 2)
            total -= mp.mpc(cz) * mp.expj(k * r) / (4 * mp.pi * r)
        return total

    # -- plane waves -----------------------------------------------------------

    def plane_wave_field(self, theta) -> np.ndarray:
        """Total plane-wave field ``ψ⁺(z, θ)`` at the voxel centres, shape ``(M, m)``."""
        T = np.atleast_2d(np.asarray(theta, dtype=float))
        if not self.size:
            return np.zeros((0, len(T)), dtype=complex)
        return self._solve(np.exp(1j * self.kappa * self.centers @ T.T))

    def plane_wave_scattered(self, x, theta) -> np.ndarray:
        """``ψ⁺_sc(x, θ)`` for points ``x`` and one incident direction ``θ``."""
        pts = np.asarray(x, dtype=float)
        if not self.size:
            out = np.zeros(pts.shape[:-1], dtype=complex)
            return out[()] if out.ndim == 0 else out
        c = self.plane_wave_field(theta)[:, 0] * self.values * self.volume
        out = green_outgoing(pts[..., None, :] - self.centers, self.kappa) @ c
        return out[()] if np.ndim(out) == 0 else out

    def amplitude(self, theta, thetap) -> np.ndarray:
        """Scattering amplitude ``A(θ_i, θ'_i)`` from the plane-wave solve (pairs row by row)."""
        T = np.atleast_2d(np.asarray(theta, dtype=float))
        Tp = np.atleast_2d(np.asarray(thetap, dtype=float))
        if not self.size:
            return np.zeros(len(T), dtype=complex)
        psi = self.plane_wave_field(T)
        phase = np.exp(-1j * self.kappa * Tp @ self.centers.T)  # (m, M)
        return -np.sum(phase * (psi.T * self.values * self.volume), axis=1) / (4 * np.pi)

    # -- first Born approximation ---------------------------------------------

    def born_scattered(self, x, y) -> np.ndarray:
        """First Born term ``∫ G⁺(x - z) v(z) R₀⁺(z, y) dz``."""
        pts = np.asarray(x, dtype=float)
        if not self.size:
            out = np.zeros(pts.shape[:-1], dtype=complex)
            return out[()] if out.ndim == 0 else out
        r0 = -green_outgoing(self.centers - np.asarray(y, dtype=float), self.kappa)
        out = green_outgoing(pts[..., None, :] - self.centers, self.kappa) @ (self.values * self.volume * r0)
        return out[()] if np.ndim(out) == 0 else out

    def born_amplitude(self, theta, thetap) -> np.ndarray:
        T = np.atleast_2d(np.asarray(theta, dtype=float))
        Tp = np.atleast_2d(np.asarray(thetap, dtype=float))
        xi = self.kappa * (Tp - T)
        return -potential_fourier_points(self.centers, self.values * self.volume, xi) / (4 * np.pi)


# ---------------------------------------------------------------------------
# Problem / solution wrappers


@dataclass(frozen=True)
class GreenMatrixProblem:
    """Discretised Green-function problem for one source point."""

    potential: PotentialGrid
    kappa: float
    source: tuple[float, float, float]
    self_cell_rule: str = "equal-volume ball"

    @property
    def voxel_volume(self) -> float:
        return self.potential.voxel_volume


@dataclass(frozen=True, eq=False)
class GreenSolution:
    """``R⁺_v(·, y)`` at the voxel centres plus exterior evaluators."""

    operator: LSOperator
    source: np.ndarray
    grid_values: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return self.operator.total(x, self.source)

    def scattered(self, x) -> np.ndarray:
        return self.operator.scattered(x, self.source)


def ls_solve(problem: GreenMatrixProblem, operator: LSOperator | None = None) -> GreenSolution:
    """Solve the Lippmann-Schwinger equation for a point source."""
    op = operator or LSOperator(problem.potential, problem.kappa)
    y = np.asarray(problem.source, dtype=float)
    return GreenSolution(op, y, op.source_field(y)[:, 0])


def r_v_sc(x, y, operator: LSOperator) -> np.ndarray:
    """Scattered Green function ``R⁺_v - R₀⁺``."""
    return operator.scattered(x, y)


# ---------------------------------------------------------------------------
# Far fields


@dataclass(frozen=True, eq=False)
class FarField:
    """Scattering amplitudes on a list of direction pairs."""

    kappa: float
    theta: np.ndarray
    thetap: np.ndarray
    amplitudes: np.ndarray

    def rows(self):
        for t, tp, a in zip(self.theta, self.thetap, self.amplitudes):
            yield [*t.tolist(), *tp.tolist(), float(a.real), float(a.imag)]


def _default_radii(kappa: float, count: int = 6) -> list[float]:
    return [20.0 / kappa * 2.0**i for i in range(count)]


def farfield_series(evaluator: Callable, y, direction, kappa: float, radii=None) -> list[tuple[float, complex]]:
    """``(s, 4π s e^{-iκs} R_sc(s d, y))`` along direction ``d``."""
    k = check_kappa(kappa)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    radii = _default_radii(k) if radii is None else list(radii)
    vals = [complex(evaluator(s * d, y)) for s in radii]
    return [(s, 4 * np.pi * s * np.exp(-1j * k * s) * v) for s, v in zip(radii, vals)]


def farfield_from_green(evaluator: Callable, y, direction, kappa: float, radii=None, order: int | None = None) -> complex:
    """``ψ⁺_sc(y, -d)`` from the scattered Green function along direction ``d``.

    Extrapolates ``4π s e^{-iκs} R_sc(s d, y)`` to ``s → ∞`` in powers of ``1/s``.
    """
    series = farfield_series(evaluator, y, direction, kappa, radii)
    p = len(series) - 2 if order is None else order
    return complex(extrapolate_estimates(series, p).value)


def scattering_amplitude(psi_sc: Callable, theta, thetap, kappa: float, radii=None, order: int | None = None) -> complex:
    """``A(θ, θ')`` by extrapolating ``s e^{-iκs} ψ⁺_sc(s θ', θ)``."""
    k = check_kappa(kappa)
    tp = np.asarray(thetap, dtype=float)
    tp = tp / np.linalg.norm(tp)
    radii = _default_radii(k) if radii is None else list(radii)
    series = [(s, s * np.exp(-1j * k * s) * complex(psi_sc(s * tp, theta))) for s in radii]
    p = len(series) - 2 if order is None else order
    return complex(extrapolate_estimates(series, p).value)


def ball_fourier(q, radius: float, strength: complex = 1.0) -> np.ndarray:
    """Fourier transform of ``strength`` times the indicator of a ball, at ``|ξ| = q``."""
    q = np.asarray(q, dtype=float)
    x = radius * q
    vol = 4.0 / 3.0 * np.pi * radius**3
    with np.errstate(invalid="ignore", divide="ignore"):
        # the closed form cancels badly for small x; the series is exact to rounding below 1e-2
        series = 1.0 - x**2 / 10.0 + x**4 / 280.0
        shape = np.where(x < 1e-2, series, 3.0 * (np.sin(x) - x * np.cos(x)) / np.maximum(x, 1e-300) ** 3)
    return strength * vol * shape


def born_amplitude_ball(theta, thetap, kappa: float, radius: float, strength: complex = 1.0) -> np.ndarray:
    """Born amplitude of a homogeneous ball centred at the origin."""
    q = kappa * np.linalg.norm(np.atleast_2d(thetap) - np.atleast_2d(theta), axis=-1)
    return -ball_fourier(q, radius, strength) / (4 * np.pi)


def potential_fourier_points(centers, masses, xi) -> np.ndarray:
    """``Σ_z m_z e^{-iξ·z}`` for each row of ``xi``."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if len(centers) == 0:
        return np.zeros(len(xi), dtype=complex)
    return np.exp(-1j * xi @ np.asarray(centers).T) @ masses


def potential_fourier(potential: PotentialGrid, xi) -> np.ndarray:
    """Fourier transform of the voxel model, each voxel lumped at its centre."""
    z, v = potential.active()
    return potential_fourier_points(z, v * potential.voxel_volume, xi)


def reciprocity_report(evaluator: Callable, pairs, floor: float = 1e-300) -> float:
    """``max |R(x,y) - R(y,x)| / max(|R|, floor)`` over point pairs."""
    worst = 0.0
    for x, y in pairs:
        a = complex(evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float)))
        b = complex(evaluator(np.asarray(y, dtype=float), np.asarray(x, dtype=float)))
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), floor))
    return worst


@dataclass(frozen=True)
class ConeSet:
    """Directions ``θ`` with ``sign · θ·ν ≥ 0``."""

    normal: tuple[float, float, float]
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValidationError("cone sign must be +1 or -1", module="scattering")

    def contains(self, theta) -> np.ndarray:
        return self.sign * (np.atleast_2d(theta) @ np.asarray(self.normal, dtype=float)) >= 0


# ---------------------------------------------------------------------------
# Fourier quadrature on the half ball reachable from one plane


@dataclass(frozen=True, eq=False)
class FourierQuadrature:
    """Nodes ``ξ`` in the half ball ``|ξ| ≤ q_max, ξ·ν ≤ 0`` with weights and direction pairs.

    Each node satisfies ``κ(θ' - θ) = ξ`` with ``θ·ν ≥ 0`` and ``θ'·ν ≤ 0``.
    """

    kappa: float
    normal: np.ndarray
    q_max: float
    xi: np.ndarray
    weights: np.ndarray
    theta: np.ndarray
    thetap: np.ndarray


def fourier_quadrature(
    kappa: float, normal, *, fraction: float = 0.9, n_q: int = 10, n_mu: int = 8, n_phi: int = 16
) -> FourierQuadrature:
    """Gauss-Legendre in ``|ξ|`` and in ``cos∠(ξ, ν)``, uniform in azimuth."""
    k = check_kappa(kappa)
    if not 0 < fraction < 1:
        raise ValidationError("fraction of the Fourier ball must be in (0, 1)", module="scattering")
    nu = np.asarray(normal, dtype=float)
    nu = nu / np.linalg.norm(nu)
    frame = PlaneFrame((0.0, 0.0, 0.0), nu)
    qmax = fraction * 2 * k
    xq, wq = np.polynomial.legendre.leggauss(n_q)
    q = 0.5 * qmax * (xq + 1)
    wq = 0.5 * qmax * wq * q**2
    xm, wm = np.polynomial.legendre.leggauss(n_mu)
    mu = 0.5 * (xm - 1)  # cos angle to ν in (-1, 0)
    wm = 0.5 * wm
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    wp = 2 * np.pi / n_phi
    Q, MU, PHI = np.meshgrid(q, mu, phi, indexing="ij")
    W = np.einsum("i,j->ij", wq, wm)[:, :, None] * wp * np.ones_like(PHI)
    sin = np.sqrt(1 - MU**2)
    dirs = (
        MU[..., None] * nu
        + (sin * np.cos(PHI))[..., None] * frame.e1
        + (sin * np.sin(PHI))[..., None] * frame.e2
    ).reshape(-1, 3)
    Qf = Q.ravel()
    xi = Qf[:, None] * dirs
    e = np.cross(nu, dirs)
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    c = np.sqrt(1 - (Qf / (2 * k)) ** 2)[:, None]
    theta = -xi / (2 * k) + c * e
    thetap = xi / (2 * k) + c * e
    return FourierQuadrature(k, nu, qmax, xi, W.ravel(), theta, thetap)


def band_limited(quad: FourierQuadrature, vhat, points) -> np.ndarray:
    """``(2π)^{-3} ∫_{|ξ|≤q_max} v̂(ξ) e^{iξ·x} dξ`` assuming a real potential.

    Only the half ball is sampled; the other half follows from
    ``v̂(-ξ) = conj(v̂(ξ))``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    ph = np.exp(1j * pts @ quad.xi.T)
    return 2.0 * np.real(ph @ (quad.weights * np.asarray(vhat))) / (2 * np.pi) ** 3


# ---------------------------------------------------------------------------
# Pipeline


class GreenImData(Protocol):
    """Access to ``Im R⁺_{v,sc}`` on a plane, in factorised form.

    ``Im R_sc(x, b) = Φ(x) · W[:, b]`` where ``Φ(x)`` is a known real row
    vector per point and ``W`` a real matrix per column point. The pipeline
    only ever combines the two factors; it never inspects the potential.
    """

    kappa: float

    def weights(self, columns) -> np.ndarray: ...

    def features(self, points) -> np.ndarray: ...

    def features_mp(self, points_mp) -> mp.matrix: ...


class LSGreenData:
    """``Im R⁺_{v,sc}`` generated by a Lippmann-Schwinger solve.

    ``R_sc(x, b) = Σ_z G⁺(x - z) c_z(b)``, hence
    ``Im R_sc = [Im G⁺, Re G⁺] · [Re c; Im c]``.
    """

    def __init__(self, operator: LSOperator):
        self.operator = operator
        self.kappa = operator.kappa

    def weights(self, columns) -> np.ndarray:
        c = self.operator.weights(columns)
        return np.vstack([c.real, c.imag])

    def features(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.operator.size:
            return np.zeros((len(pts), 0))
        G = green_outgoing(pts[:, None, :] - self.operator.centers[None, :, :], self.kappa)
        return np.hstack([G.imag, G.real])

    def im_matrix(self, points, columns) -> np.ndarray:
        return self.features(points) @ self.weights(columns)

    def features_mp(self, points_mp) -> mp.matrix:
        z = self.operator.centers
        M = len(z)
        out = mp.matrix(len(points_mp), 2 * M)
        k = mp.mpf(self.kappa)
        zm = [[mp.mpf(c) for c in row] for row in z]
        for i, x in enumerate(points_mp):
            for j in range(M):
                dx = [x[a] - zm[j][a] for a in range(3)]
                r = mp.sqrt(dx[0] ** 2 + dx[1] ** 2 + dx[2] ** 2)
                g = -mp.expj(k * r) / (4 * mp.pi * r)
                out[i, j] = g.imag
                out[i, M + j] = g.real
        return out

    def correction_norm(self) -> float:
        return self.operator.correction_norm()


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of the potential-recovery pipeline.

    Parameters
    ----------
    frame : PlaneFrame
        Measurement plane; ``V_X`` lies on the side opposite to ``frame.normal``
        and the scatterer on the side it points to.
    half_extent, spacing : float
        Column grid on the plane.
    center : tuple
        Centre of the ball containing the scatterer; it anchors the in-plane
        rays and the multipole completions.
    n_rays : int
        In-plane rays from the anchor used to reach beyond the grid.
    ray_nodes : int
        Completion nodes per ray.
    ray_span : tuple of float
        Node radii on each ray, as multiples of ``half_extent``.
    depth, digits : int
        Recovery tower depth and working precision.
    L, L_far : int
        Multipole degrees of the completion fits for ``R_sc(·, b)`` and for
        ``ψ_sc(·, θ)``.
    rcond : float
        Relative singular-value cut of the completion fits.
    fraction, n_q, n_mu, n_phi :
        Fourier-ball quadrature.
    """

    frame: PlaneFrame
    half_extent: float = 15.0
    spacing: float = 0.75
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    n_rays: int = 12
    ray_nodes: int = 8
    ray_span: tuple[float, float] = (1.05, 2.0)
    depth: int = 6
    digits: int = 40
    L: int = 6
    L_far: int = 8
    rcond: float = 1e-9
    fraction: float = 0.9
    n_q: int = 10
    n_mu: int = 8
    n_phi: int = 16


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Born-level potential estimate with the intermediate quantities."""

    quadrature: FourierQuadrature
    amplitudes: np.ndarray
    vhat: np.ndarray
    report: dict = field(default_factory=dict)

    def evaluate(self, points) -> np.ndarray:
        return band_limited(self.quadrature, self.vhat, points)


def _stage(name: str):
    def wrap(fn):
        def inner(*a, **kw):
            try:
                return fn(*a, **kw)
            except PipelineStageError:
                raise
            except (RadReconError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
                raise PipelineStageError(f"{type(exc).__name__}: {exc}", stage=name) from exc

        return inner

    return wrap


def born_pipeline(data: GreenImData, config: PipelineConfig) -> PipelineResult:
    """Recover a band-limited Born estimate of the potential from ``Im R⁺_{v,sc}`` on a plane.

    Stages
    ------
    rays
        For each column point ``b`` the field ``R_sc(·, b)`` is recovered from
        its imaginary part along in-plane rays from the anchor. The tower is
        real-linear, so it is tabulated once and applied to all columns.
    completion
        ``R_sc(·, b)`` is written as an outgoing multipole sum fitted to
        ``Im R_sc`` on the grid and to the recovered complex values on the rays.
    farfield
        ``ψ⁺_sc(b, θ) = 4π F_b(-θ)`` for ``θ·ν ≥ 0``, where ``F_b`` is the far-field
        pattern of the completed ``R_sc(·, b)``; this is the large-distance
        limit of the half-space representation applied to the completed field.
    amplitude
        ``ψ⁺_sc(·, θ)`` on the grid is completed in the same way and its far
        pattern gives ``A(θ, θ')`` for ``θ'·ν ≤ 0``.
    born
        ``v̂(ξ) = -4π A`` on the half ball of the Fourier quadrature, then the
        band-limited inverse transform (real potential assumed).
    """
    k = data.kappa
    frame = config.frame
    grid = PlaneGrid(frame, config.half_extent, config.spacing)
    cols = grid.points().reshape(-1, 3)
    center = np.asarray(config.center, dtype=float)
    quad = fourier_quadrature(k, frame.normal, fraction=config.fraction, n_q=config.n_q, n_mu=config.n_mu, n_phi=config.n_phi)
    report: dict = {"kappa": k, "columns": int(len(cols)), "grid_count": grid.count}

    norm = getattr(data, "correction_norm", lambda: float("nan"))()
    report["born_correction_norm"] = norm
    if norm > 0.1:
        warnings.warn(f"Born validity questionable: correction norm {norm:.3f} > 0.1", BornValidityWarning, stacklevel=2)

    W = _stage("data")(data.weights)(cols)  # (r, n_b)
    D = _stage("data")(data.features)(cols) @ W  # Im R_sc on the grid, (n_b, n_b)

    @_stage("rays")
    def ray_values():
        anchor = frame.foot(center)
        s_nodes = np.linspace(config.ray_span[0], config.ray_span[1], config.ray_nodes) * config.half_extent
        params = RecoverParams(depth=config.depth, digits=config.digits, start=float(s_nodes[0]))
        op = recovery_operator(k, params)
        Mop = op.matrix
        pts, vals = [], []
        with mpctx.workprec(op.params.prec):
            for j in range(config.n_rays):
                phi = 2 * np.pi * j / config.n_rays
                theta = math.cos(phi) * frame.e1 + math.sin(phi) * frame.e2
                u = mp_unit(theta)
                samples = [[mp.mpf(anchor[a]) + s * u[a] for a in range(3)] for s in op.radii]
                Phi = data.features_mp(samples)
                if Phi.cols == 0:
                    P = np.zeros((config.depth, 0), dtype=complex)
                else:
                    Pm = Mop * Phi
                    P = np.array([[complex(Pm[i, c]) for c in range(Pm.cols)] for i in range(Pm.rows)])
                F = P @ W if P.shape[1] else np.zeros((config.depth, W.shape[1]), dtype=complex)
                for S in s_nodes:
                    powers = S ** -np.arange(config.depth)
                    vals.append(np.exp(1j * k * S) / S * (powers @ F))
                    pts.append(anchor + S * theta)
        report["ray_digits_lost"] = op.params.digits_lost
        report["ray_precision_digits"] = op.params.digits
        return np.array(pts), np.array(vals)

    ray_pts, ray_vals = ray_values()

    @_stage("completion")
    def complete():
        return fit_outgoing_hybrid(cols, D, ray_pts, ray_vals, kappa=k, center=center, L=config.L, rcond=config.rcond)

    exp_a = complete()
    report["completion"] = exp_a.diagnostics

    @_stage("farfield")
    def psi_sc():
        Fa = farfield_basis(-quad.theta, center, k, config.L)
        return 4 * np.pi * (Fa @ exp_a.coeffs)  # (n_xi, n_b)

    Psi = psi_sc()

    @_stage("amplitude")
    def amplitudes():
        exp_b = fit_outgoing(cols, Psi.T, kappa=k, center=center, L=config.L_far, rcond=config.rcond)
        Fb = farfield_basis(quad.thetap, center, k, config.L_far)
        report["amplitude_fit"] = exp_b.diagnostics
        return np.sum(Fb * exp_b.coeffs.T, axis=1)

    A = amplitudes()
    nu = frame.normal
    report["cone_check"] = bool(np.all(quad.theta @ nu >= 0) and np.all(quad.thetap @ nu <= 0))
    vhat = -4 * np.pi * A
    report["fourier_nodes"] = int(len(vhat))
    report["q_max"] = quad.q_max
    return PipelineResult(quad, A, vhat, report)


theorem3_pipeline = born_pipeline
