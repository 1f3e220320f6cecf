"""Fields on a plane: reconstruction from ``Im ψ``, half-space continuation, image Green function.

A plane ``X`` is described by a :class:`PlaneFrame`: a base point, two
orthonormal in-plane axes and a unit normal ``ν``. The normal points *out of*
the half-space ``V_X = {x : (x - base)·ν < 0}``; sources live on the other
side. For a radiation field whose sources lie on the ``+ν`` side,

    ψ(x) = 2 ∫_X ∂_{ν_y} G⁺(x - y) ψ(y) dy,    x ∈ V_X,

which :func:`halfspace_continue` evaluates by trapezoidal quadrature over a
truncated grid.

:func:`recover_plane` fills a grid from ``Im ψ`` alone by running the ray
recovery along in-plane rays that start at a common anchor point. The series
behind that recovery only converges at radii larger than the distance from
the anchor to the farthest source, so the default anchor is the foot of the
obstacle centre on the plane and nodes too close to it are flagged.

:class:`OutgoingExpansion` fits a finite sum of outgoing multipoles to plane
data. It is used to complete plane data where rays cannot reach and to read
off far-field patterns.
"""

from __future__ import annotations

import csv
import json
import math
import threading
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import mpmath as mp
import numpy as np

from . import mpctx
from .awseries import RaySampler, mp_unit
from .errors import ApertureWarning, ValidationError
from .fields import (
    Scene,
    check_kappa,
    eval_scene_mp,
    green_gradient,
    green_outgoing,
    spherical_hankel1,
    spherical_harmonic,
    wavelength,
)
from .rayrecover import RayRecovery, RecoverParams, reconstruct_on_ray, recover_coeffs

__all__ = [
    "PlaneFrame",
    "PlaneGrid",
    "recover_plane",
    "scene_plane_sampler",
    "normal_derivative_green",
    "image_green",
    "image_green_normal_derivative",
    "halfspace_continue",
    "continuation_kernel",
    "sphere_null_probe",
    "fibonacci_directions",
    "OutgoingExpansion",
    "outgoing_basis",
    "farfield_basis",
    "fit_outgoing",
    "fit_outgoing_hybrid",
    "write_grid_csv",
    "read_grid_csv",
]


@dataclass(frozen=True, eq=False)
class PlaneFrame:
    """Plane through ``base`` with unit normal ``normal`` pointing out of ``V_X``.

    If the in-plane axes are omitted they are generated so that
    ``(e1, e2, normal)`` is right-handed.
    """

    base: np.ndarray
    normal: np.ndarray
    e1: np.ndarray | None = None
    e2: np.ndarray | None = None

    def __post_init__(self):
        b = np.asarray(self.base, dtype=float).reshape(3)
        n = np.asarray(self.normal, dtype=float).reshape(3)
        nn = np.linalg.norm(n)
        if not nn > 0:
            raise ValidationError("plane normal must be nonzero", module="planeops")
        n = n / nn
        if self.e1 is None:
            trial = np.eye(3)[int(np.argmin(np.abs(n)))]
            e1 = trial - (trial @ n) * n
            e1 /= np.linalg.norm(e1)
        else:
            e1 = np.asarray(self.e1, dtype=float).reshape(3)
        e2 = np.cross(n, e1) if self.e2 is None else np.asarray(self.e2, dtype=float).reshape(3)
        gram = np.array([e1, e2, n]) @ np.array([e1, e2, n]).T
        if np.max(np.abs(gram - np.eye(3))) > 1e-12:
            raise ValidationError("plane axes and normal must be orthonormal", module="planeops")
        for name, v in (("base", b), ("normal", n), ("e1", e1), ("e2", e2)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    def to_world(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.base + u[..., None] * self.e1 + v[..., None] * self.e2

    def coordinates(self, x) -> np.ndarray:
        """``(u, v, w)`` with ``w = (x - base)·ν``; ``w < 0`` inside ``V_X``."""
        d = np.asarray(x, dtype=float) - self.base
        return np.stack([d @ self.e1, d @ self.e2, d @ self.normal], axis=-1)

    def mirror(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        w = (y - self.base) @ self.normal
        return y - 2.0 * np.asarray(w)[..., None] * self.normal

    def foot(self, point) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        return p - ((p - self.base) @ self.normal) * self.normal

    def distance_from_origin(self) -> float:
        return abs(float(self.base @ self.normal))

    def check_clear_of(self, scene: Scene) -> None:
        """The plane must not touch the obstacle ball."""
        if not self.distance_from_origin() > scene.obstacle_radius:
            raise ValidationError("plane intersects the obstacle ball", module="planeops")

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("base", "normal", "e1", "e2")}

    @classmethod
    def from_dict(cls, d: dict) -> "PlaneFrame":
        return cls(d["base"], d["normal"], d.get("e1"), d.get("e2"))


@dataclass(frozen=True, eq=False)
class PlaneGrid:
    """Square grid ``|u|, |v| ≤ half_extent`` with spacing ``spacing`` on a plane.

    Attributes
    ----------
    values : ndarray of complex, optional
        Field values at the nodes, shape ``(n, n)`` indexed ``[iu, iv]``.
    flags : ndarray of bool, optional
        Nodes whose value is unreliable (for example too close to the
        recovery anchor).
    error_estimates : ndarray of float, optional
        Per-node truncation estimates from the recovery.
    """

    frame: PlaneFrame
    half_extent: float
    spacing: float
    values: np.ndarray | None = None
    kappa: float | None = None
    flags: np.ndarray | None = None
    error_estimates: np.ndarray | None = None

    def __post_init__(self):
        if not (self.spacing > 0 and self.half_extent >= 0):
            raise ValidationError("grid spacing must be positive and the half extent non-negative", module="planeops")
        if self.values is not None:
            vals = np.asarray(self.values, dtype=complex)
            if vals.shape != self.shape:
                raise ValidationError(f"grid values must have shape {self.shape}", module="planeops")
            object.__setattr__(self, "values", vals)

    @property
    def count(self) -> int:
        """Nodes per axis."""
        return 2 * int(round(self.half_extent / self.spacing)) + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.count, self.count)

    def axis(self) -> np.ndarray:
        m = self.count // 2
        return np.arange(-m, m + 1) * self.spacing

    def uv(self) -> tuple[np.ndarray, np.ndarray]:
        a = self.axis()
        return np.meshgrid(a, a, indexing="ij")

    def points(self) -> np.ndarray:
        """World coordinates of the nodes, shape ``(n, n, 3)``."""
        u, v = self.uv()
        return self.frame.to_world(u, v)

    def weights(self) -> np.ndarray:
        """Tensor-product trapezoid weights."""
        w1 = np.full(self.count, self.spacing)
        w1[[0, -1]] *= 0.5
        return np.outer(w1, w1)

    def with_values(self, values, **extra) -> "PlaneGrid":
        return replace(self, values=np.asarray(values, dtype=complex), **extra)

    def check_sampling(self, kappa: float) -> None:
        """Require at least four nodes per wavelength."""
        if self.spacing > wavelength(kappa) / 4 * (1 + 1e-12):
            raise ValidationError(
                f"grid spacing {self.spacing:.4g} exceeds a quarter wavelength ({wavelength(kappa) / 4:.4g})",
                module="planeops",
            )

    def sample(self, field: Callable[[np.ndarray], np.ndarray]) -> "PlaneGrid":
        """Fill the grid by evaluating ``field`` at the nodes."""
        return self.with_values(field(self.points()))


# ---------------------------------------------------------------------------
# Green-function kernels


def normal_derivative_green(x, y, kappa: float, normal) -> np.ndarray:
    """``∂G⁺(x - y)/∂ν_y``, the derivative with respect to ``y`` along ``normal``."""
    return -np.sum(green_gradient(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), kappa) * normal, axis=-1)


def image_green(x, y, kappa: float, frame: PlaneFrame):
    """Dirichlet Green function of the half-space, ``G⁺(x-y) - G⁺(x-y*)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return green_outgoing(x - y, kappa) - green_outgoing(x - frame.mirror(y), kappa)


def image_green_normal_derivative(x, y, kappa: float, frame: PlaneFrame) -> np.ndarray:
    """``∂/∂ν_y`` of :func:`image_green`; equals twice :func:`normal_derivative_green` on the plane."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = frame.normal
    direct = -np.sum(green_gradient(x - y, kappa) * n, axis=-1)
    # y* = y - 2((y-b)·ν)ν moves by -ν when y moves by +ν.
    image = np.sum(green_gradient(x - frame.mirror(y), kappa) * n, axis=-1)
    return direct - image


def continuation_kernel(x, y, kappa: float, frame: PlaneFrame, kind: str = "direct") -> np.ndarray:
    """Integration kernel of the half-space representation."""
    if kind == "direct":
        return 2.0 * normal_derivative_green(x, y, kappa, frame.normal)
    if kind == "image":
        return image_green_normal_derivative(x, y, kappa, frame)
    raise ValidationError(f"unknown kernel {kind!r}", module="planeops")


def halfspace_continue(
    grid: PlaneGrid,
    x,
    *,
    kappa: float | None = None,
    tol: float = 1e-2,
    kernel: str = "direct",
    return_estimate: bool = False,
):
    """Continue plane values into the half-space ``V_X``.

    Parameters
    ----------
    grid : PlaneGrid
        Grid with values.
    x : array_like, shape (3,) or (m, 3)
        Target points, at least one wavelength inside ``V_X``.
    kappa : float, optional
        Wavenumber; defaults to ``grid.kappa``.
    tol : float
        Relative tolerance for the aperture warning. The truncation error is
        estimated by the magnitude of the contribution of the outermost ring
        of nodes.
    kernel : {"direct", "image"}
        Use ``2∂_νG⁺`` or the normal derivative of the image Green function.
        Both coincide on the plane.
    return_estimate : bool
        Also return the per-point truncation estimate.
    """
    k = check_kappa(kappa if kappa is not None else grid.kappa)
    if grid.values is None:
        raise ValidationError("grid has no values to continue", module="planeops")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    w = grid.frame.coordinates(pts)[:, 2]
    if np.any(w >= 0):
        raise ValidationError("continuation targets must lie inside the half-space V_X", module="planeops")
    if np.any(-w < wavelength(k) * (1 - 1e-12)):
        raise ValidationError("continuation targets must be at least one wavelength from the plane", module="planeops")
    if grid.half_extent < 10 * wavelength(k):
        warnings.warn(
            f"aperture {grid.half_extent:.3g} is below ten wavelengths; truncation error may be large",
            ApertureWarning,
            stacklevel=2,
        )
    nodes = grid.points().reshape(-1, 3)
    wts = grid.weights().ravel()
    vals = grid.values.ravel()
    ring = np.zeros(grid.shape, dtype=bool)
    ring[[0, -1], :] = True
    ring[:, [0, -1]] = True
    ring = ring.ravel()
    out = np.empty(len(pts), dtype=complex)
    est = np.empty(len(pts))
    for i, p in enumerate(pts):
        integrand = continuation_kernel(p, nodes, k, grid.frame, kernel) * vals * wts
        out[i] = integrand.sum()
        # The neglected tail oscillates; its size is roughly the outer ring
        # contribution spread over one oscillation length 1/κ.
        est[i] = abs(integrand[ring].sum()) / (k * grid.spacing)
    rel = est / np.maximum(np.abs(out), 1e-300)
    if np.any(rel > tol) and np.any(vals != 0):
        warnings.warn(
            f"estimated aperture truncation {rel.max():.2e} exceeds tolerance {tol:g}", ApertureWarning, stacklevel=2
        )
    if np.ndim(x) == 1:
        return (out[0], est[0]) if return_estimate else out[0]
    return (out, est) if return_estimate else out


# ---------------------------------------------------------------------------
# Reconstruction from Im ψ


def scene_plane_sampler(scene: Scene, digits: int = 30) -> Callable:
    """``point ↦ Im ψ(point)`` for a scene, evaluated with ``digits`` digits.

    The point is a sequence of three floats or mpmath numbers.
    """

    def sampler(point):
        return mp.im(eval_scene_mp(scene, point, digits + 5))

    return sampler


class _RayCache:
    """Insert-or-reuse store of ray recoveries, safe for concurrent use."""

    def __init__(self):
        self._lock = threading.Lock()
        self._data: dict = {}

    def get_or_compute(self, key, compute):
        with self._lock:
            if key in self._data:
                return self._data[key]
        value = compute()
        with self._lock:
            return self._data.setdefault(key, value)

    def __len__(self):
        return len(self._data)


def recover_plane(
    im_sampler: Callable,
    grid: PlaneGrid,
    params: RecoverParams,
    *,
    kappa: float,
    anchor=None,
    source_center=(0.0, 0.0, 0.0),
    source_radius: float | None = None,
    min_ratio: float = 2.0,
) -> PlaneGrid:
    """Reconstruct ψ on the grid nodes from ``Im ψ`` on the plane.

    Each node ``x`` is reached by the in-plane ray from ``anchor`` through
    ``x``; the coefficient tower is recovered on that ray (once per distinct
    ray) and evaluated at ``|x - anchor|``.

    Parameters
    ----------
    im_sampler : callable
        ``point ↦ Im ψ(point)`` for points on the plane, given as three floats
        or mpmath numbers.
    grid : PlaneGrid
    params : RecoverParams
        Tower settings. Unless an explicit ladder is given, each ray uses a
        phase-locked ladder starting at its innermost node.
    kappa : float
    anchor : array_like, optional
        Common ray origin on the plane. Defaults to the foot point of
        ``source_center``.
    source_center, source_radius :
        Ball containing the sources. Nodes closer to the anchor than
        ``min_ratio`` times the anchor's distance to the far side of that
        ball are flagged.

    Returns
    -------
    PlaneGrid
        Copy of ``grid`` with ``values``, ``flags`` and ``error_estimates``.
    """
    k = check_kappa(kappa)
    grid.check_sampling(k)
    frame = grid.frame
    a = frame.foot(source_center) if anchor is None else np.asarray(anchor, dtype=float)
    if abs((a - frame.base) @ frame.normal) > 1e-9 * max(1.0, np.linalg.norm(a)):
        raise ValidationError("anchor must lie on the plane", module="planeops")
    reach = float(np.linalg.norm(a - np.asarray(source_center, dtype=float))) + (source_radius or 0.0)
    nodes = grid.points().reshape(-1, 3)
    d = nodes - a
    S = np.linalg.norm(d, axis=1)
    values = np.full(len(nodes), np.nan + 0j)
    errors = np.full(len(nodes), np.inf)
    flags = S < min_ratio * reach
    flags |= S < 1e-9 * wavelength(k)
    cache = _RayCache()
    groups: dict = {}
    for i in np.flatnonzero(S >= 1e-9 * wavelength(k)):
        theta = d[i] / S[i]
        groups.setdefault(tuple(np.round(theta, 12)), []).append(i)
    for key, idx in groups.items():
        theta = d[idx[0]] / S[idx[0]]
        s_in = max(float(S[idx].min()), min_ratio * reach)
        p = params if params.ladder is not None else replace(params, start=s_in)

        def compute(theta=theta, p=p):
            prec_digits = p.resolve(k).digits

            def im_on_ray(s):
                with mpctx.workdps(prec_digits + 10):
                    u = mp_unit(theta)
                    sm = mp.mpf(s)
                    return im_sampler([mp.mpf(a[j]) + sm * u[j] for j in range(3)])

            sampler = RaySampler(a, theta, im_on_ray, s_min=0.0, kappa=k, digits=prec_digits)
            return recover_coeffs(sampler, p)

        rec: RayRecovery = cache.get_or_compute(key, compute)
        rv = reconstruct_on_ray(rec, S[idx], warn=False)
        values[idx] = rv.value
        errors[idx] = rv.error_estimate
        flags[idx] |= ~np.asarray(rv.in_range)
    return replace(
        grid,
        values=values.reshape(grid.shape),
        kappa=k,
        flags=flags.reshape(grid.shape),
        error_estimates=errors.reshape(grid.shape),
    )


# ---------------------------------------------------------------------------
# Sphere null probe


def fibonacci_directions(n: int) -> np.ndarray:
    """``n`` roughly uniform unit vectors on the sphere (deterministic)."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def sphere_null_probe(kappa: float, n, directions, *, radius: float | None = None) -> float:
    """Largest ``|Im G⁺(r d)|`` over the given directions with ``r = nπ/κ``.

    ``Im G⁺`` vanishes identically on these spheres, so a sphere of that
    radius cannot distinguish the field from zero by its imaginary part.
    ``radius`` overrides ``r`` for off-resonant comparisons.
    """
    k = check_kappa(kappa)
    if radius is None:
        if n < 1:
            raise ValidationError("n must be at least 1", module="planeops")
        radius = n * math.pi / k
    dirs = np.asarray(directions, dtype=float)
    dirs = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
    return float(np.max(np.abs(np.imag(green_outgoing(radius * dirs, k)))))


# ---------------------------------------------------------------------------
# Outgoing multipole expansions


def _lm_pairs(L: int) -> list[tuple[int, int]]:
    return [(l, m) for l in range(L + 1) for m in range(-l, l + 1)]


def outgoing_basis(points, center, kappa: float, L: int) -> np.ndarray:
    """Matrix of ``h_l(κρ) Y_l^m(ρ̂)`` at ``points``, columns ordered by ``(l, m)``."""
    rho = np.asarray(points, dtype=float).reshape(-1, 3) - np.asarray(center, dtype=float)
    r = np.linalg.norm(rho, axis=1)
    cols = []
    for l in range(L + 1):
        h = spherical_hankel1(l, kappa * r)
        for m in range(-l, l + 1):
            cols.append(h * spherical_harmonic(l, m, rho))
    return np.stack(cols, axis=1)


def farfield_basis(directions, center, kappa: float, L: int) -> np.ndarray:
    """Far-field patterns of the basis, referred to the coordinate origin.

    With ``ψ(x) ≈ e^{iκ|x|}/|x| · F(x̂)``, the multipole about ``c`` has
    ``F(d) = e^{-iκ d·c} (-i)^{l+1} Y_l^m(d) / κ``.
    """
    d = np.asarray(directions, dtype=float).reshape(-1, 3)
    shift = np.exp(-1j * kappa * (d @ np.asarray(center, dtype=float)))
    cols = []
    for l, m in _lm_pairs(L):
        cols.append(shift * (-1j) ** (l + 1) * spherical_harmonic(l, m, d) / kappa)
    return np.stack(cols, axis=1)


@dataclass(frozen=True, eq=False)
class OutgoingExpansion:
    """Finite outgoing multipole sum ``Σ a_lm h_l(κρ) Y_l^m(ρ̂)`` about ``center``.

    ``coeffs`` has shape ``((L+1)², m)`` so that ``m`` fields sharing the basis
    are stored together.
    """

    kappa: float
    center: np.ndarray
    L: int
    coeffs: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, points) -> np.ndarray:
        B = outgoing_basis(points, self.center, self.kappa, self.L)
        return B @ self.coeffs

    def far_field(self, directions) -> np.ndarray:
        return farfield_basis(directions, self.center, self.kappa, self.L) @ self.coeffs


def _truncated_pinv_solve(A: np.ndarray, B: np.ndarray, rcond: float) -> tuple[np.ndarray, dict]:
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    U, sv, Vh = np.linalg.svd(A / scale, full_matrices=False)
    keep = sv > rcond * sv[0]
    X = (Vh[keep].conj().T / sv[keep]) @ (U[:, keep].conj().T @ B)
    X = X / scale[:, None]
    info = {"rank": int(keep.sum()), "columns": int(A.shape[1]), "condition": float(sv[0] / sv[keep][-1])}
    return X, info


def fit_outgoing(points, values, *, kappa: float, center=(0.0, 0.0, 0.0), L: int, rcond: float = 1e-10) -> OutgoingExpansion:
    """Least-squares fit of complex field values (columns of ``values``)."""
    k = check_kappa(kappa)
    A = outgoing_basis(points, center, k, L)
    V = np.asarray(values, dtype=complex).reshape(A.shape[0], -1)
    X, info = _truncated_pinv_solve(A, V, rcond)
    info["relative_residual"] = float(np.linalg.norm(A @ X - V) / max(np.linalg.norm(V), 1e-300))
    return OutgoingExpansion(k, np.asarray(center, dtype=float), L, X, info)


def fit_outgoing_hybrid(
    im_points,
    im_values,
    points,
    values,
    *,
    kappa: float,
    center=(0.0, 0.0, 0.0),
    L: int,
    rcond: float = 1e-10,
) -> OutgoingExpansion:
    """Fit to imaginary parts at ``im_points`` plus complex values at ``points``.

    The unknowns are complex, the equations real: ``Im(B a) = im_values`` and
    ``B' a = values``. Columns of the data arrays are independent fields.
    """
    k = check_kappa(kappa)
    Bi = outgoing_basis(im_points, center, k, L)
    Bc = outgoing_basis(points, center, k, L)
    # Real unknowns [Re a, Im a].
    A = np.vstack(
        [
            np.hstack([Bi.imag, Bi.real]),
            np.hstack([Bc.real, -Bc.imag]),
            np.hstack([Bc.imag, Bc.real]),
        ]
    )
    Vi = np.asarray(im_values, dtype=float).reshape(Bi.shape[0], -1)
    Vc = np.asarray(values, dtype=complex).reshape(Bc.shape[0], -1)
    rhs = np.vstack([Vi, Vc.real, Vc.imag])
    X, info = _truncated_pinv_solve(A, rhs, rcond)
    n = Bi.shape[1]
    coeffs = X[:n] + 1j * X[n:]
    info["relative_residual"] = float(np.linalg.norm(A @ X - rhs) / max(np.linalg.norm(rhs), 1e-300))
    return OutgoingExpansion(k, np.asarray(center, dtype=float), L, coeffs, info)


# ---------------------------------------------------------------------------
# Grid exchange


def write_grid_csv(path: str | Path, grid: PlaneGrid) -> tuple[Path, Path]:
    """Write ``u, v, re, im`` rows and a JSON header next to them."""
    path = Path(path)
    if grid.values is None:
        raise ValidationError("grid has no values to write", module="planeops")
    u, v = grid.uv()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "v", "re", "im"])
        for a, b, z in zip(u.ravel(), v.ravel(), grid.values.ravel()):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(z.real)), repr(float(z.imag))])
    header = {
        "frame": grid.frame.to_dict(),
        "half_extent": grid.half_extent,
        "spacing": grid.spacing,
        "kappa": grid.kappa,
        "count": grid.count,
    }
    if grid.flags is not None:
        header["flagged_nodes"] = int(np.count_nonzero(grid.flags))
    hpath = path.with_suffix(".json")
    hpath.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path, hpath


def read_grid_csv(path: str | Path) -> PlaneGrid:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    grid = PlaneGrid(PlaneFrame.from_dict(header["frame"]), header["half_extent"], header["spacing"], kappa=header.get("kappa"))
    vals = np.zeros(grid.shape, dtype=complex)
    axis = grid.axis()
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != grid.count**2:
        raise ValidationError("grid CSV row count does not match its header", module="planeops")
    for row in rows:
        i = int(np.argmin(np.abs(axis - float(row["u"]))))
        j = int(np.argmin(np.abs(axis - float(row["v"]))))
        vals[i, j] = complex(float(row["re"]), float(row["im"]))
    return grid.with_values(vals)
