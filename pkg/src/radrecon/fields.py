"""Ground-truth radiation fields.

Every field here solves ``-Δψ = κ²ψ`` away from its sources and is outgoing
at infinity. The conventions are

* outgoing Green function ``G⁺(x) = -exp(iκ|x|) / (4π|x|)``;
* free resolvent kernel ``R₀⁺(x, y) = exp(iκ|x-y|) / (4π|x-y|) = -G⁺(x-y)``;
* outgoing multipole ``h_l(κρ) Y_l^m(ρ̂)`` with the spherical Hankel function
  of the first kind written in closed Rayleigh form and complex, orthonormal
  spherical harmonics carrying the Condon-Shortley phase.

Points are arrays whose last axis has length 3, so all evaluators accept a
single point or a stack of points. Evaluating closer than ``1e-9`` wavelengths
to a source raises :class:`~radrecon.errors.SingularityError`.

A :class:`Scene` bundles a wavenumber, a list of sources, an optional
potential on a voxel grid and the radius of a ball (centred at the origin)
that contains all of them. Scenes are immutable and serialise to JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import mpmath as mp
import numpy as np
from scipy.special import sph_harm_y

from . import mpctx
from .errors import SingularityError, ValidationError

__all__ = [
    "SINGULAR_GUARD",
    "wavelength",
    "check_kappa",
    "green_outgoing",
    "green_gradient",
    "r0_plus",
    "hankel_coefficients",
    "spherical_hankel1",
    "spherical_harmonic",
    "multipole_field",
    "PointSource",
    "Multipole",
    "Source",
    "PotentialGrid",
    "Scene",
    "eval_scene",
    "eval_scene_mp",
    "im_diagnostic",
    "radial_derivative",
    "sommerfeld_defect",
    "scene_to_dict",
    "scene_from_dict",
    "load_scene",
    "save_scene",
]

#: Guard radius around source points, in wavelengths.
SINGULAR_GUARD = 1e-9


def wavelength(kappa: float) -> float:
    """Return ``2π/κ``."""
    return 2.0 * math.pi / kappa


def check_kappa(kappa: float) -> float:
    """Validate a wavenumber and return it as a float."""
    k = float(kappa)
    if not (math.isfinite(k) and k > 0.0):
        raise ValidationError(f"wavenumber must be positive and finite, got {kappa!r}", module="fields")
    return k


def _as_points(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValidationError(f"points must have a trailing axis of length 3, got shape {arr.shape}", module="fields")
    return arr


def _guarded_norm(d: np.ndarray, kappa: float) -> np.ndarray:
    r = np.linalg.norm(d, axis=-1)
    if np.any(r < SINGULAR_GUARD * wavelength(kappa)):
        raise SingularityError("evaluation point lies on a source singularity")
    return r


def green_outgoing(x, kappa: float):
    """Outgoing Green function ``G⁺(x) = -exp(iκ|x|)/(4π|x|)``.

    Parameters
    ----------
    x : array_like, shape (..., 3)
        Displacement from the source.
    kappa : float
        Wavenumber.

    Returns
    -------
    complex or ndarray of complex
    """
    k = check_kappa(kappa)
    r = _guarded_norm(_as_points(x), k)
    out = -np.exp(1j * k * r) / (4.0 * np.pi * r)
    return out[()] if out.ndim == 0 else out


def green_gradient(x, kappa: float) -> np.ndarray:
    """Gradient of ``G⁺`` with respect to its argument, shape ``(..., 3)``."""
    k = check_kappa(kappa)
    d = _as_points(x)
    r = _guarded_norm(d, k)
    dgdr = -(1j * k - 1.0 / r) * np.exp(1j * k * r) / (4.0 * np.pi * r)
    return (dgdr / r)[..., None] * d


def r0_plus(x, y, kappa: float):
    """Free outgoing kernel ``R₀⁺(x, y) = exp(iκ|x-y|)/(4π|x-y|)``."""
    return -green_outgoing(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), kappa)


def hankel_coefficients(l: int) -> list[complex]:
    """Coefficients ``c_m`` of ``h_l(z) = (e^{iz}/z) Σ_m c_m z^{-m}``.

    ``c_m = (-i)^{l+1} (i/2)^m (l+m)! / (m! (l-m)!)`` for ``m = 0..l``. The
    integer factor is computed exactly.
    """
    if l < 0:
        raise ValidationError("degree l must be non-negative", module="fields")
    lead = (-1j) ** (l + 1)
    return [
        lead * (0.5j) ** m * (math.factorial(l + m) // (math.factorial(m) * math.factorial(l - m)))
        for m in range(l + 1)
    ]


def spherical_hankel1(l: int, z):
    """Spherical Hankel function of the first kind via the Rayleigh sum."""
    z = np.asarray(z, dtype=complex)
    total = np.zeros_like(z)
    for c in reversed(hankel_coefficients(l)):
        total = total / z + c
    out = np.exp(1j * z) / z * total
    return out[()] if out.ndim == 0 else out


def spherical_harmonic(l: int, m: int, direction):
    """Complex orthonormal ``Y_l^m`` (Condon-Shortley phase) at unit directions."""
    d = _as_points(direction)
    r = np.linalg.norm(d, axis=-1)
    polar = np.arccos(np.clip(d[..., 2] / r, -1.0, 1.0))
    azimuth = np.arctan2(d[..., 1], d[..., 0])
    out = np.asarray(sph_harm_y(l, m, polar, azimuth))
    return out[()] if out.ndim == 0 else out


def _check_lm(l: int, m: int) -> None:
    if int(l) != l or int(m) != m or l < 0 or abs(m) > l:
        raise ValidationError(f"invalid multipole indices l={l}, m={m}", module="fields")


def multipole_field(l: int, m: int, center, kappa: float, x):
    """Outgoing multipole ``h_l(κ|ρ|) Y_l^m(ρ̂)`` with ``ρ = x - center``."""
    _check_lm(l, m)
    k = check_kappa(kappa)
    rho = _as_points(x) - np.asarray(center, dtype=float)
    r = _guarded_norm(rho, k)
    out = np.asarray(spherical_hankel1(l, k * r) * spherical_harmonic(l, m, rho))
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Scene description


@dataclass(frozen=True)
class PointSource:
    """Point source ``amplitude · R₀⁺(x, position)``."""

    position: tuple[float, float, float]
    amplitude: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        object.__setattr__(self, "amplitude", complex(self.amplitude))


@dataclass(frozen=True)
class Multipole:
    """Outgoing multipole ``amplitude · h_l Y_l^m`` about ``center``."""

    l: int
    m: int
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    amplitude: complex = 1.0

    def __post_init__(self):
        _check_lm(self.l, self.m)
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "amplitude", complex(self.amplitude))


Source = Union[PointSource, Multipole]


@dataclass(frozen=True, eq=False)
class PotentialGrid:
    """Piecewise-constant potential on an axis-aligned box split into ``n³`` voxels.

    ``values[i, j, k]`` belongs to the voxel whose centre is
    ``corner + (i+½, j+½, k+½) * size / n``.
    """

    corner: tuple[float, float, float]
    size: tuple[float, float, float]
    n: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        n = int(self.n)
        if n < 1 or vals.shape != (n, n, n):
            raise ValidationError(f"potential values must have shape ({n},{n},{n})", module="fields")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("potential values must be finite", module="fields")
        size = tuple(float(c) for c in self.size)
        if min(size) <= 0:
            raise ValidationError("potential box edges must be positive", module="fields")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "corner", tuple(float(c) for c in self.corner))

    @property
    def spacing(self) -> np.ndarray:
        return np.asarray(self.size) / self.n

    @property
    def voxel_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self) -> np.ndarray:
        """Voxel centres, shape ``(n, n, n, 3)``."""
        idx = (np.arange(self.n) + 0.5)
        axes = [self.corner[a] + idx * self.spacing[a] for a in range(3)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def active(self) -> tuple[np.ndarray, np.ndarray]:
        """Centres and values of the voxels where the potential is nonzero."""
        mask = self.values != 0
        return self.centers()[mask], self.values[mask]

    def max_corner_distance(self) -> float:
        c = np.asarray(self.corner)
        s = np.asarray(self.size)
        corners = [c + s * np.array(b) for b in np.ndindex(2, 2, 2)]
        return max(float(np.linalg.norm(p)) for p in corners)

    def scaled(self, factor: complex) -> "PotentialGrid":
        return PotentialGrid(self.corner, self.size, self.n, self.values * factor)

    @classmethod
    def ball(cls, radius: float, n: int, strength: complex = 1.0, center=(0.0, 0.0, 0.0)) -> "PotentialGrid":
        """Indicator of a ball (voxel centres inside) on its bounding cube."""
        c = np.asarray(center, dtype=float)
        corner = c - radius
        grid = cls(tuple(corner), (2 * radius,) * 3, n, np.zeros((n, n, n)))
        inside = np.linalg.norm(grid.centers() - c, axis=-1) < radius
        return cls(tuple(corner), (2 * radius,) * 3, n, np.where(inside, complex(strength), 0.0))


@dataclass(frozen=True, eq=False)
class Scene:
    """Wavenumber, sources and optional potential confined to a ball of radius ``obstacle_radius``."""

    kappa: float
    sources: tuple[Source, ...] = ()
    potential: PotentialGrid | None = None
    obstacle_radius: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kappa", check_kappa(self.kappa))
        object.__setattr__(self, "sources", tuple(self.sources))
        r = float(self.obstacle_radius)
        if not r > 0:
            raise ValidationError("obstacle_radius must be positive", module="fields")
        object.__setattr__(self, "obstacle_radius", r)
        for src in self.sources:
            pos = src.position if isinstance(src, PointSource) else src.center
            if not np.linalg.norm(pos) < r:
                raise ValidationError(f"source at {pos} is not strictly inside the obstacle ball", module="fields")
        if self.potential is not None and not self.potential.max_corner_distance() < r:
            raise ValidationError("potential box is not strictly inside the obstacle ball", module="fields")

    @property
    def wavelength(self) -> float:
        return wavelength(self.kappa)

    def scaled(self, factor: float) -> "Scene":
        """Scene with every source amplitude multiplied by ``factor``."""
        srcs = []
        for s in self.sources:
            if isinstance(s, PointSource):
                srcs.append(PointSource(s.position, s.amplitude * factor))
            else:
                srcs.append(Multipole(s.l, s.m, s.center, s.amplitude * factor))
        return Scene(self.kappa, tuple(srcs), self.potential, self.obstacle_radius)

    def with_kappa(self, kappa: float) -> "Scene":
        return Scene(kappa, self.sources, self.potential, self.obstacle_radius)

    def scattering_operator(self):
        """Factorised Lippmann-Schwinger operator for the potential (built once)."""
        if self.potential is None:
            return None
        if "ls" not in self._cache:
            from .scattering import LSOperator

            self._cache["ls"] = LSOperator(self.potential, self.kappa)
        return self._cache["ls"]


def eval_scene(scene: Scene, x):
    """Evaluate the scene's field at one or more points.

    Point sources contribute ``amplitude · R₀⁺(x, y₀)``; when the scene carries
    a potential they additionally contribute the scattered part
    ``amplitude · R⁺_{v,sc}(x, y₀)``. Multipoles are not scattered.
    """
    pts = _as_points(x)
    total = np.zeros(pts.shape[:-1], dtype=complex)
    op = scene.scattering_operator()
    for src in scene.sources:
        if isinstance(src, PointSource):
            total = total + src.amplitude * r0_plus(pts, src.position, scene.kappa)
            if op is not None:
                total = total + src.amplitude * op.scattered(pts, src.position)
        else:
            total = total + src.amplitude * multipole_field(src.l, src.m, src.center, scene.kappa, pts)
    return total[()] if total.ndim == 0 else total


def im_diagnostic(scene: Scene, x):
    """``I(x) = |x| · Im ψ(x)``."""
    pts = _as_points(x)
    out = np.linalg.norm(pts, axis=-1) * np.imag(eval_scene(scene, pts))
    return out[()] if np.ndim(out) == 0 else out


def radial_derivative(scene: Scene, x):
    """Analytic ``∂ψ/∂|x|`` for scenes made of point sources only."""
    pts = _as_points(x)
    if scene.potential is not None or any(not isinstance(s, PointSource) for s in scene.sources):
        raise ValidationError("analytic radial derivative is available for point-source scenes only", module="fields")
    rhat = pts / np.linalg.norm(pts, axis=-1)[..., None]
    total = np.zeros(pts.shape[:-1], dtype=complex)
    for s in scene.sources:
        # R₀⁺(x, y) = -G⁺(x - y)
        total = total - s.amplitude * np.sum(green_gradient(pts - np.asarray(s.position), scene.kappa) * rhat, axis=-1)
    return total[()] if total.ndim == 0 else total


def sommerfeld_defect(scene: Scene, x):
    """``|x| · |(∂_r - iκ)ψ(x)|``, which tends to zero for radiation solutions."""
    pts = _as_points(x)
    d = radial_derivative(scene, pts) - 1j * scene.kappa * eval_scene(scene, pts)
    return np.linalg.norm(pts, axis=-1) * np.abs(d)


# ---------------------------------------------------------------------------
# Extended-precision evaluation


def _mp_green_minus(dx, kappa) -> mp.mpc:
    """``R₀⁺`` for a displacement given as three mp numbers."""
    r = mp.sqrt(dx[0] ** 2 + dx[1] ** 2 + dx[2] ** 2)
    if r < SINGULAR_GUARD * wavelength(float(kappa)):
        raise SingularityError("evaluation point lies on a source singularity")
    return mp.expj(kappa * r) / (4 * mp.pi * r)


def _mp_multipole(l, m, center, kappa, x) -> mp.mpc:
    rho = [x[i] - mp.mpf(center[i]) for i in range(3)]
    r = mp.sqrt(rho[0] ** 2 + rho[1] ** 2 + rho[2] ** 2)
    if r < SINGULAR_GUARD * wavelength(float(kappa)):
        raise SingularityError("evaluation point lies on a source singularity")
    z = kappa * r
    lead = (-1j) ** (l + 1)
    poly = mp.fsum(
        mp.mpc(lead * (0.5j) ** j) * (math.factorial(l + j) // (math.factorial(j) * math.factorial(l - j))) / z**j
        for j in range(l + 1)
    )
    polar = mp.acos(rho[2] / r)
    azimuth = mp.atan2(rho[1], rho[0])
    return mp.expj(z) / z * poly * mp.spherharm(l, m, polar, azimuth)


def eval_scene_mp(scene: Scene, x: Sequence, dps: int) -> mp.mpc:
    """Evaluate the scene at one point with ``dps`` significant digits.

    ``x`` may hold floats or mpmath numbers. Used to feed the recovery tower
    with samples that are more accurate than machine precision.
    """
    with mpctx.workdps(dps):
        xm = [mp.mpf(c) for c in x]
        k = mp.mpf(scene.kappa)
        total = mp.mpc(0)
        op = scene.scattering_operator()
        for src in scene.sources:
            if isinstance(src, PointSource):
                dx = [xm[i] - mp.mpf(src.position[i]) for i in range(3)]
                amp = mp.mpc(src.amplitude)
                total += amp * _mp_green_minus(dx, k)
                if op is not None:
                    total += amp * op.scattered_mp(xm, src.position)
            else:
                total += mp.mpc(src.amplitude) * _mp_multipole(src.l, src.m, src.center, k, xm)
        return +total


# ---------------------------------------------------------------------------
# JSON


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def scene_to_dict(scene: Scene) -> dict:
    """Serialise a scene to the documented JSON layout."""
    sources = []
    for s in scene.sources:
        if isinstance(s, PointSource):
            sources.append({"type": "point", "position": list(s.position), "amplitude": _pair(s.amplitude)})
        else:
            sources.append(
                {"type": "multipole", "l": s.l, "m": s.m, "center": list(s.center), "amplitude": _pair(s.amplitude)}
            )
    out = {"kappa": scene.kappa, "obstacle_radius": scene.obstacle_radius, "sources": sources}
    if scene.potential is not None:
        p = scene.potential
        out["potential"] = {
            "corner": list(p.corner),
            "size": list(p.size),
            "n": p.n,
            "values_re": p.values.real.ravel().tolist(),
            "values_im": p.values.imag.ravel().tolist(),
        }
    return out


def scene_from_dict(data: dict) -> Scene:
    """Inverse of :func:`scene_to_dict`; raises ``ValidationError`` on malformed input."""
    try:
        sources: list[Source] = []
        for s in data.get("sources", []):
            amp = complex(*s["amplitude"])
            if s["type"] == "point":
                sources.append(PointSource(tuple(s["position"]), amp))
            elif s["type"] == "multipole":
                sources.append(Multipole(s["l"], s["m"], tuple(s["center"]), amp))
            else:
                raise ValidationError(f"unknown source type {s['type']!r}", module="fields")
        potential = None
        if data.get("potential") is not None:
            p = data["potential"]
            n = int(p["n"])
            vals = np.asarray(p["values_re"], dtype=float) + 1j * np.asarray(p["values_im"], dtype=float)
            potential = PotentialGrid(tuple(p["corner"]), tuple(p["size"]), n, vals.reshape(n, n, n))
        return Scene(float(data["kappa"]), tuple(sources), potential, float(data["obstacle_radius"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed scene description: {exc}", module="fields") from exc


def load_scene(path: str | Path) -> Scene:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"scene file is not valid JSON: {exc}", module="fields") from exc
    return scene_from_dict(data)


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n", encoding="utf-8")
