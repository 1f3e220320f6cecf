"""Expansions of outgoing fields along a single ray.

Outside a ball that contains all sources, an outgoing field is

    ψ(q + sθ) = (e^{iκs}/s) Σ_{j≥1} f_j / s^{j-1},

where the frame origin ``q`` sits on the ray's line and the ``f_j`` are the
values of the coefficient functions at the fixed direction ``θ``. This module
stores such per-ray coefficient lists, evaluates their partial sums, produces
exact coefficients for multipoles and point sources on the ray axis, moves a
list from one frame origin to another along the same line, and provides a
brute-force least-squares oracle for arbitrary point sources.

It also defines :class:`RaySampler`, the contract for "give me Im ψ at radius
``s`` on this ray".
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import mpmath as mp
import numpy as np

from . import mpctx
from .errors import ConditioningError, IntervalDataError, ValidationError
from .fields import (
    Multipole,
    Scene,
    check_kappa,
    eval_scene,
    eval_scene_mp,
    hankel_coefficients,
    spherical_harmonic,
)

__all__ = [
    "AWExpansion",
    "eval_partial",
    "exact_coeffs_multipole",
    "multipole_expansion",
    "coeffs_point_on_axis",
    "oracle_coeffs_point_source",
    "shift_coefficients",
    "RaySampler",
    "ray_exit_radius",
    "mp_unit",
    "expansion_to_dict",
    "expansion_from_dict",
]

ORACLE_MAX_DEPTH = 12


def mp_unit(v) -> list:
    """Normalise a direction in the current mpmath precision.

    Float directions are only unit to about 1e-16; along a long ray that
    error shifts the phase ``κs`` enough to matter in extended precision.
    """
    c = [mp.mpf(float(x)) for x in v]
    n = mp.sqrt(c[0] ** 2 + c[1] ** 2 + c[2] ** 2)
    return [x / n for x in c]


def _unit(v, *, tol: float = 1e-12, what: str = "direction") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValidationError(f"{what} must be a 3-vector", module="awseries")
    if abs(np.linalg.norm(arr) - 1.0) > tol:
        raise ValidationError(f"{what} must be a unit vector (|θ| = {np.linalg.norm(arr)!r})", module="awseries")
    return arr


@dataclass(frozen=True, eq=False)
class AWExpansion:
    """Coefficients ``f_1..f_N`` of the expansion along ``origin + s*theta``."""

    kappa: float
    origin: np.ndarray
    theta: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kappa", check_kappa(self.kappa))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "theta", _unit(self.theta))
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size < 1:
            raise ValidationError("an expansion needs at least one coefficient", module="awseries")
        if not np.all(np.isfinite(c)):
            raise ValidationError("expansion coefficients must be finite", module="awseries")
        for a in (self.origin, self.theta, c):
            a.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def depth(self) -> int:
        return int(self.coeffs.size)

    def point(self, s) -> np.ndarray:
        return self.origin + np.multiply.outer(np.asarray(s, dtype=float), self.theta)

    def __call__(self, s, n: int | None = None):
        return eval_partial(self, s, n)


def eval_partial(aw: AWExpansion, s, n: int | None = None):
    """Partial sum ``(e^{iκs}/s) Σ_{j≤n} f_j s^{1-j}``.

    Parameters
    ----------
    aw : AWExpansion
    s : float or array_like
        Radii measured from ``aw.origin``; must be positive.
    n : int, optional
        Number of terms, ``1 ≤ n ≤ N``. Defaults to all of them.
    """
    n = aw.depth if n is None else int(n)
    if n < 1 or n > aw.depth:
        raise IndexError(f"partial sum depth {n} outside 1..{aw.depth}")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValidationError("radius must be positive", module="awseries")
    acc = np.zeros(s.shape, dtype=complex)
    for f in reversed(aw.coeffs[:n]):
        acc = acc / s + f
    out = np.exp(1j * aw.kappa * s) / s * acc
    return out[()] if out.ndim == 0 else out


def exact_coeffs_multipole(l: int, kappa: float, theta_angular_value: complex) -> list[complex]:
    """Exact coefficients of ``h_l(κs) · Y`` about the multipole centre.

    Returns ``f_{m+1} = Y (-i)^{l+1} (i/2)^m (l+m)!/(m!(l-m)!) κ^{-(m+1)}`` for
    ``m = 0..l``, where ``Y`` is the angular factor at the ray direction.
    """
    k = check_kappa(kappa)
    y = complex(theta_angular_value)
    return [y * c / k ** (m + 1) for m, c in enumerate(hankel_coefficients(l))]


def multipole_expansion(src: Multipole, theta, kappa: float) -> AWExpansion:
    """Exact finite expansion of a multipole source along the ray from its centre."""
    th = _unit(theta)
    ang = src.amplitude * complex(spherical_harmonic(src.l, src.m, th))
    return AWExpansion(kappa, src.center, th, exact_coeffs_multipole(src.l, kappa, ang))


def coeffs_point_on_axis(a: float, kappa: float, n: int) -> list[complex]:
    """Coefficients about ``q`` of a unit point source at ``q + a θ``.

    On the ray ``|x - y₀| = s - a``, and ``1/(s-a) = Σ a^m / s^{m+1}``, so
    ``f_j = e^{-iκa} a^{j-1} / (4π)``.
    """
    k = check_kappa(kappa)
    ph = complex(np.exp(-1j * k * a))
    return [ph * a ** (j - 1) / (4 * math.pi) for j in range(1, n + 1)]


def oracle_coeffs_point_source(
    y0,
    q,
    theta,
    kappa: float,
    N: int,
    *,
    s0: float | None = None,
    ratio: float = 1.3,
    extra_terms: int = 8,
    dps: int = 50,
    tol: float = 1e-25,
    return_mp: bool = False,
):
    """Brute-force coefficients of a unit point source at ``y0`` about frame ``q``.

    The function ``g(s) = s e^{-iκs} R₀⁺(q + sθ, y0)`` is fitted by a
    polynomial in ``1/s`` over a geometric ladder ``s_k = s0 ρ^k`` in extended
    precision. The fit carries ``extra_terms`` more unknowns than requested so
    that series truncation does not bias the returned coefficients, and uses
    three radii per unknown.

    Raises
    ------
    ConditioningError
        If the relative fit residual exceeds ``tol``.
    """
    if not 1 <= N <= ORACLE_MAX_DEPTH:
        raise ValidationError(f"oracle depth must be in 1..{ORACLE_MAX_DEPTH}", module="awseries")
    k = check_kappa(kappa)
    th = _unit(theta)
    y0 = np.asarray(y0, dtype=float)
    q = np.asarray(q, dtype=float)
    s0 = 20.0 / k if s0 is None else float(s0)
    M = N + extra_terms
    with mpctx.workdps(dps):
        km = mp.mpf(k)
        d = [mp.mpf(y0[i]) - mp.mpf(q[i]) for i in range(3)]
        u = mp_unit(th)
        radii = [mp.mpf(s0) * mp.mpf(ratio) ** i for i in range(3 * M)]
        rows, rhs = [], []
        for s in radii:
            dx = [s * u[i] - d[i] for i in range(3)]
            r = mp.sqrt(dx[0] ** 2 + dx[1] ** 2 + dx[2] ** 2)
            g = s * mp.expj(km * (r - s)) / (4 * mp.pi * r)
            rows.append([(mp.mpf(s0) / s) ** j for j in range(M)])
            rhs.append(g)
        A = mp.matrix(rows)
        b = mp.matrix(rhs)
        sol, res = mp.qr_solve(A, b)
        scale = max(abs(v) for v in rhs)
        if res / scale > tol:
            raise ConditioningError(f"oracle fit residual {float(res / scale):.3e} exceeds {tol:g}", module="awseries")
        coeffs = [sol[j] * mp.mpf(s0) ** j for j in range(N)]
        if return_mp:
            return coeffs
        return [complex(c) for c in coeffs]


def shift_coefficients(aw: AWExpansion, c: float) -> AWExpansion:
    """Move the frame origin from ``q`` to ``q + cθ`` along the same line.

    With ``s = s' + c`` the new coefficients are
    ``f'_n = e^{iκc} Σ_{j+k=n} f_j C(n-1, k) (-c)^k``. The first ``N`` new
    coefficients depend only on the first ``N`` old ones, so the map is exact
    for the stored depth. The resulting series converges for ``s' > |c|``
    plus the source radius about the old frame.
    """
    c = float(c)
    f = aw.coeffs
    N = aw.depth
    out = np.zeros(N, dtype=complex)
    for n in range(1, N + 1):
        out[n - 1] = sum(f[j - 1] * math.comb(n - 1, n - j) * (-c) ** (n - j) for j in range(1, n + 1))
    out *= np.exp(1j * aw.kappa * c)
    return AWExpansion(aw.kappa, aw.origin + c * aw.theta, aw.theta, out)


# ---------------------------------------------------------------------------
# Samplers


def ray_exit_radius(origin, theta, radius: float) -> float:
    """Smallest ``s_min ≥ 0`` such that ``origin + sθ`` is outside the ball for ``s > s_min``."""
    o = np.asarray(origin, dtype=float)
    th = np.asarray(theta, dtype=float)
    b = float(o @ th)
    c = float(o @ o) - radius**2
    disc = b * b - c
    if disc <= 0:
        return 0.0
    return max(0.0, -b + math.sqrt(disc))


@dataclass(frozen=True)
class RaySampler:
    """Access to ``Im ψ(origin + sθ)`` for radii ``s > s_min``.

    ``im_psi`` may return floats or mpmath numbers. Samplers are read-only
    and can be shared between threads as long as ``im_psi`` is.

    Attributes
    ----------
    origin, theta : ndarray
        Ray origin and unit direction.
    im_psi : callable
        ``s ↦ Im ψ(origin + sθ)``.
    s_min : float
        Radii at or below this value are not admissible.
    kappa : float, optional
        Wavenumber of the sampled field, when known.
    digits : int
        Number of significant digits the samples carry.
    """

    origin: np.ndarray
    theta: np.ndarray
    im_psi: Callable[[object], object]
    s_min: float = 0.0
    kappa: float | None = None
    digits: int = 15
    coverage: tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "theta", _unit(self.theta))
        if self.s_min < 0:
            raise ValidationError("s_min must be non-negative", module="awseries")

    def __call__(self, s):
        lo, hi = self.coverage
        if not (s > self.s_min and lo <= s <= hi):
            raise IntervalDataError(f"radius {float(s):.6g} is not covered by this sampler")
        return self.im_psi(s)

    def require_full_ray(self) -> None:
        """Reject samplers that only cover a bounded interval of the ray."""
        lo, hi = self.coverage
        if math.isfinite(hi) or lo > self.s_min:
            raise IntervalDataError(
                "samples cover only an interval of the ray; recovery from an interval would need "
                "analytic continuation and is not supported"
            )

    @classmethod
    def from_scene(cls, scene: Scene, origin, theta, *, digits: int = 15) -> "RaySampler":
        """Sample a scene. With ``digits > 15`` samples are computed in mpmath."""
        o = np.asarray(origin, dtype=float)
        th = _unit(theta)
        s_min = ray_exit_radius(o, th, scene.obstacle_radius)
        if digits <= 15:

            def im_psi(s):
                return float(np.imag(eval_scene(scene, o + float(s) * th)))

        else:

            def im_psi(s):
                with mpctx.workdps(digits + 5):
                    sm = mp.mpf(s)
                    u = mp_unit(th)
                    x = [mp.mpf(o[i]) + sm * u[i] for i in range(3)]
                    return mp.im(eval_scene_mp(scene, x, digits + 5))

        return cls(o, th, im_psi, s_min=s_min, kappa=scene.kappa, digits=digits)

    @classmethod
    def from_table(
        cls, table: Mapping, origin, theta, *, kappa: float | None = None, digits: int = 15, rtol: float = 1e-12
    ) -> "RaySampler":
        """Offline sampler backed by a table ``{s: Im ψ}``.

        Lookups match radii to a relative tolerance ``rtol``. The sampler covers
        the whole ray in the sense that any radius that was tabulated can be
        served; radii absent from the table raise ``IntervalDataError``.
        """
        keys = sorted(table)
        fkeys = [float(k) for k in keys]

        def im_psi(s):
            fs = float(s)
            i = bisect.bisect_left(fkeys, fs)
            for j in (i - 1, i):
                if 0 <= j < len(fkeys) and abs(fkeys[j] - fs) <= rtol * max(abs(fs), 1.0):
                    return table[keys[j]]
            raise IntervalDataError(f"no sample at radius {fs:.12g}")

        return cls(origin, theta, im_psi, s_min=0.0, kappa=kappa, digits=digits)

    @classmethod
    def zero(cls, origin=(0.0, 0.0, 0.0), theta=(0.0, 0.0, 1.0)) -> "RaySampler":
        return cls(origin, theta, lambda s: 0.0)


# ---------------------------------------------------------------------------
# JSON


def expansion_to_dict(aw: AWExpansion) -> dict:
    return {
        "kappa": aw.kappa,
        "origin": aw.origin.tolist(),
        "theta": aw.theta.tolist(),
        "coeffs": [[c.real, c.imag] for c in aw.coeffs.tolist()],
    }


def expansion_from_dict(data: dict) -> AWExpansion:
    try:
        coeffs = [complex(re, im) for re, im in data["coeffs"]]
        return AWExpansion(float(data["kappa"]), data["origin"], data["theta"], coeffs)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed expansion description: {exc}", module="awseries") from exc


def load_expansion(path: str | Path) -> AWExpansion:
    return expansion_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
