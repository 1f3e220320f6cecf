"""Recover a field on a ray from samples of its imaginary part.

Write ``I(s) = s · Im ψ(q + sθ)``. If ``ψ`` has the expansion
``(e^{iκs}/s) Σ f_j s^{1-j}`` then ``I(s) = Im(e^{iκs} f₁) + O(1/s)``, and two
samples a distance ``τ`` apart determine ``f₁`` up to ``O(1/s)`` through the
closed form

    F(s) = (-e^{-iκ(s+τ)} I(s) + e^{-iκs} I(s+τ)) / sin(κτ).

Subtracting the part explained by the coefficients found so far and
multiplying by ``s^n`` exposes the next coefficient in the same way, which
gives a tower ``f₁, f₂, …``.

Two details turn this asymptotic statement into a finite-radius algorithm.

* The remainder of ``F`` is not a power series in ``1/s``: it mixes values at
  ``s`` and ``s+τ`` and contains a part proportional to ``e^{-2iκs}``. It is
  removed by a least-squares fit whose basis functions are the two-point
  responses to ``c_j s^{-j}``, so the fit is exact for any field whose
  expansion stops after ``p + 1`` terms (Richardson-type extrapolation with a
  matched remainder model).
* The default ladder is geometric and *phase-locked* (every ``κ s_k`` is a
  multiple of ``π``), which keeps that design well conditioned.

Each level multiplies the data by ``s^n``, so about ``(n-1)·log10(κ s_K)``
digits cancel at depth ``n``. Depths beyond two therefore run in mpmath
extended precision; the precision budget is checked before any sampling.

Everything here is real-linear in the samples, which
:func:`recovery_operator` exploits to tabulate the whole map once per ladder.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import mpmath as mp
import numpy as np

from . import mpctx
from .awseries import AWExpansion, RaySampler, eval_partial, expansion_to_dict
from .errors import (
    ConditioningError,
    NearSingularError,
    PrecisionExhaustedError,
    RangeWarning,
    ValidationError,
)
from .fields import check_kappa

__all__ = [
    "Ray",
    "RecoverParams",
    "ResolvedParams",
    "Extrapolation",
    "RayRecovery",
    "RayValue",
    "RecoveryOperator",
    "phase_locked_ladder",
    "two_point_estimate",
    "extrapolate_estimates",
    "recover_coeffs",
    "recovery_operator",
    "shift_frame",
    "reconstruct_on_ray",
    "report_to_dict",
    "sample_radii",
    "DOUBLE_DIGITS",
]

#: Decimal digits carried by a 53-bit significand.
DOUBLE_DIGITS = 53 * math.log10(2.0)
#: Digits that must survive the tower's cancellation.
SAFETY_DIGITS = 6.0


@dataclass(frozen=True)
class Ray:
    """Half-line ``origin + sθ``, ``s > 0``."""

    origin: tuple[float, float, float]
    theta: tuple[float, float, float]

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        nrm = np.linalg.norm(th)
        if not nrm > 0:
            raise ValidationError("ray direction must be nonzero", module="rayrecover")
        object.__setattr__(self, "theta", tuple((th / nrm).tolist()))
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))


def shift_frame(ray: Ray) -> tuple[np.ndarray, np.ndarray]:
    """Frame origin and direction for recovery along ``ray``.

    The frame origin is the ray origin itself, so that in shifted coordinates
    ``x' = x - q`` the ray starts at zero and radii are measured from ``q``.
    """
    return np.asarray(ray.origin, dtype=float), np.asarray(ray.theta, dtype=float)


def phase_locked_ladder(kappa: float, start: float, count: int) -> list:
    """Radii ``s_k = (π/κ)·m₀·2^k`` with ``m₀ = max(1, ⌊κ·start/π⌋)``.

    Returned as mpmath numbers at the current working precision so that
    ``κ s_k`` is a multiple of ``π`` to that precision.
    """
    k = check_kappa(kappa)
    m0 = max(1, int(math.floor(k * start / math.pi)))
    base = mp.pi / mp.mpf(k) * m0
    return [base * 2**i for i in range(count)]


@dataclass(frozen=True)
class RecoverParams:
    """Settings of the recovery tower.

    Parameters
    ----------
    depth : int
        Number of coefficients ``N`` to recover.
    tau : float, optional
        Two-point separation; defaults to ``π/(2κ)`` so that ``sin κτ = 1``.
    ladder : tuple of float, optional
        Explicit radii ``s_1 < … < s_K``. By default a phase-locked doubling
        ladder starting at ``start`` with ``count`` radii is used.
    order : int, optional
        Number ``p`` of ``1/s`` correction terms in the extrapolation;
        defaults to ``K - 2``.
    digits : int, optional
        Working precision. Values up to 15 mean IEEE double precision. The
        default is doubles for ``depth ≤ 2`` and 30 digits otherwise.
    start : float, optional
        Lower end of the default ladder; defaults to ``20/κ``.
    count : int
        Length ``K`` of the default ladder.
    margin : float
        Smallest admissible ``|sin κτ|``.
    """

    depth: int = 1
    tau: float | None = None
    ladder: tuple[float, ...] | None = None
    order: int | None = None
    digits: int | None = None
    start: float | None = None
    count: int = 10
    margin: float = 0.1

    def resolve(self, kappa: float, s_floor: float = 0.0) -> "ResolvedParams":
        """Fill in defaults for wavenumber ``kappa`` and validate."""
        k = check_kappa(kappa)
        if int(self.depth) != self.depth or self.depth < 1:
            raise ValidationError("depth must be a positive integer", module="rayrecover")
        digits = self.digits if self.digits is not None else (15 if self.depth <= 2 else 30)
        if digits < 1:
            raise ValidationError("precision digits must be positive", module="rayrecover")
        prec = 53 if digits <= 15 else int(math.ceil(digits * math.log2(10))) + 4
        tau = math.pi / (2 * k) if self.tau is None else float(self.tau)
        if not tau > 0:
            raise ValidationError("tau must be positive", module="rayrecover")
        if abs(math.sin(k * tau)) < self.margin:
            raise NearSingularError(
                f"|sin(kappa*tau)| = {abs(math.sin(k * tau)):.3g} is below the margin {self.margin}",
                stage="params",
            )
        with mpctx.workprec(prec):
            if self.ladder is not None:
                ladder = [mp.mpf(s) for s in self.ladder]
            else:
                if self.count < 2:
                    raise ValidationError("ladder needs at least two radii", module="rayrecover")
                start = 20.0 / k if self.start is None else float(self.start)
                ladder = phase_locked_ladder(k, start, self.count)
        K = len(ladder)
        if any(b <= a for a, b in zip(ladder, ladder[1:])) or ladder[0] <= 0:
            raise ValidationError("ladder radii must be positive and strictly increasing", module="rayrecover")
        order = K - 2 if self.order is None else int(self.order)
        if order < 0 or K < order + 2:
            raise ValidationError(f"ladder of {K} radii cannot support extrapolation order {order}", module="rayrecover")
        if not ladder[0] > s_floor:
            raise ValidationError(
                f"smallest ladder radius {float(ladder[0]):.6g} does not clear the obstacle (needs > {s_floor:.6g})",
                module="rayrecover",
            )
        return ResolvedParams(k, int(self.depth), tau, tuple(ladder), order, digits, prec)


@dataclass(frozen=True)
class ResolvedParams:
    """Fully specified tower settings for one wavenumber."""

    kappa: float
    depth: int
    tau: float
    ladder: tuple
    order: int
    digits: int
    prec: int

    @property
    def available_digits(self) -> float:
        return self.prec * math.log10(2.0)

    @property
    def digits_lost(self) -> float:
        """Estimated cancellation at the deepest level, in decimal digits."""
        return (self.depth - 1) * math.log10(max(self.kappa * float(self.ladder[-1]), 10.0))

    def check_precision(self) -> None:
        if self.available_digits - self.digits_lost < SAFETY_DIGITS:
            raise PrecisionExhaustedError(
                f"depth {self.depth} cancels about {self.digits_lost:.1f} digits at s_K = {float(self.ladder[-1]):.4g}, "
                f"but only {self.available_digits:.1f} are available; raise the precision or shorten the ladder",
                stage="tower",
            )

    def radii(self) -> list:
        """Every radius at which samples are needed, ladder points first."""
        with mpctx.workprec(self.prec):
            tau = mp.mpf(self.tau)
            return list(self.ladder) + [s + tau for s in self.ladder]


def sample_radii(kappa: float, params: RecoverParams) -> list:
    """Radii required by :func:`recover_coeffs` for these settings."""
    return params.resolve(kappa).radii()


# ---------------------------------------------------------------------------
# Building blocks


def _is_mp(*vals) -> bool:
    return any(isinstance(v, (mp.mpf, mp.mpc)) for v in vals)


def two_point_estimate(J_at_x, J_at_y, s, tau, kappa, margin: float = 0.1):
    """Closed-form two-point estimate of the leading coefficient.

    Parameters
    ----------
    J_at_x, J_at_y : real
        Values of ``J`` (``I`` at the first level) at radii ``s`` and ``s + τ``.
    s, tau, kappa : real
        Radius, separation and wavenumber.
    margin : float
        Smallest admissible ``|sin κτ|``.

    Returns
    -------
    complex or mpmath.mpc
        ``(-e^{-iκ(s+τ)} J_x + e^{-iκs} J_y) / sin κτ``. The underlying 2×2
        system for ``(f, f̄)`` has determinant ``2i sin κτ``.
    """
    if _is_mp(J_at_x, J_at_y, s, tau):
        st = mp.sin(kappa * tau)
        if abs(st) < margin:
            raise NearSingularError(f"|sin(kappa*tau)| = {float(abs(st)):.3g} below margin {margin}")
        return (-mp.expj(-kappa * (s + tau)) * J_at_x + mp.expj(-kappa * s) * J_at_y) / st
    st = math.sin(kappa * tau)
    if abs(st) < margin:
        raise NearSingularError(f"|sin(kappa*tau)| = {abs(st):.3g} below margin {margin}")
    return (-np.exp(-1j * kappa * (s + tau)) * J_at_x + np.exp(-1j * kappa * s) * J_at_y) / st


@dataclass(frozen=True)
class Extrapolation:
    """Result of fitting ``F(s) ≈ f + c₁/s + … + c_p/s^p``."""

    value: object
    residual: float
    condition: float


def _mp_lstsq(A, b):
    """Least squares ``min |Ax - b|`` via a skinny QR factorisation.

    Returns the solution and the residual norm. Works for complex ``b``.
    """
    Q, R = mp.qr(A, mode="skinny")
    n = A.cols
    y = Q.H * b
    x = mp.matrix(n, 1)
    for i in reversed(range(n)):
        acc = y[i] - mp.fsum(R[i, j] * x[j] for j in range(i + 1, n))
        if R[i, i] == 0:
            raise ConditioningError("least-squares design is rank deficient", module="rayrecover")
        x[i] = acc / R[i, i]
    r = A * x - b
    return x, mp.sqrt(mp.fsum(abs(r[i]) ** 2 for i in range(r.rows)))


class _MatchedFit:
    """QR factorisation of the matched extrapolation design, reused across levels."""

    def __init__(self, radii, p, s_ref, tau, kappa):
        cols = _matched_columns(radii, p, s_ref, tau, kappa, True)
        A = mp.matrix([[mp.re(z) for z in row] for row in cols] + [[mp.im(z) for z in row] for row in cols])
        self.A = A
        self.Q, self.R = mp.qr(A, mode="skinny")
        if any(self.R[i, i] == 0 for i in range(A.cols)):
            raise ConditioningError("least-squares design is rank deficient", module="rayrecover")

    def solve(self, vals):
        b = mp.matrix([mp.re(v) for v in vals] + [mp.im(v) for v in vals])
        n = self.A.cols
        y = self.Q.T * b
        x = [mp.mpf(0)] * n
        for i in reversed(range(n)):
            x[i] = (y[i] - mp.fsum(self.R[i, j] * x[j] for j in range(i + 1, n))) / self.R[i, i]
        r = self.A * mp.matrix(x) - b
        res = mp.sqrt(mp.fsum(r[i] ** 2 for i in range(r.rows)))
        scale = mp.sqrt(mp.fsum(abs(v) ** 2 for v in vals))
        return mp.mpc(x[0], x[1]), (float(res / scale) if scale else 0.0)


def _matched_columns(radii, p, s_ref, tau, kappa, use_mp):
    """Two-point responses to the basis ``(s_ref/s)^j`` and ``i (s_ref/s)^j``.

    Column ``2j`` (``2j+1``) holds the estimate that :func:`two_point_estimate`
    returns when ``s·Im ψ`` is generated by ``h(s) = (s_ref/s)^j`` (times
    ``i``). For ``j = 0`` the responses are exactly ``1`` and ``i``.
    """
    cols = []
    for s in radii:
        row = []
        for j in range(p + 1):
            for unit in (1, 1j):
                if use_mp:
                    g0 = mp.mpc(unit) * (s_ref / s) ** j
                    g1 = mp.mpc(unit) * (s_ref / (s + tau)) ** j
                    jx = mp.im(mp.expj(kappa * s) * g0)
                    jy = mp.im(mp.expj(kappa * (s + tau)) * g1)
                else:
                    g0 = unit * (s_ref / s) ** j
                    g1 = unit * (s_ref / (s + tau)) ** j
                    jx = (np.exp(1j * kappa * s) * g0).imag
                    jy = (np.exp(1j * kappa * (s + tau)) * g1).imag
                row.append(two_point_estimate(jx, jy, s, tau, kappa, margin=0.0))
        cols.append(row)
    return cols


def extrapolate_estimates(
    estimates, p: int, *, s_ref=None, tau=None, kappa=None, rcond_limit: float = 1e14
) -> Extrapolation:
    """Least-squares extrapolation of ``F(s)`` to ``s → ∞``.

    Parameters
    ----------
    estimates : sequence of (s, value)
        At least ``p + 2`` samples at distinct radii.
    p : int
        Number of ``1/s`` correction terms.
    s_ref : real, optional
        Scale for the columns ``(s_ref/s)^j``; defaults to the smallest radius.
    tau, kappa : real, optional
        When both are given the estimates are taken to be two-point estimates
        and the remainder is modelled by passing ``c_j s^{-j}`` (complex
        ``c_j``) through the two-point formula. That model is exact whenever
        ``s·e^{-iκs}ψ`` is a polynomial of degree ``p`` in ``1/s``, including
        the part of the remainder that oscillates like ``e^{-2iκs}``. Without
        them the plain model ``f + c₁/s + … + c_p/s^p`` is used.

    Returns
    -------
    Extrapolation
        Fitted constant term, relative residual and the condition number of
        the scaled design matrix.
    """
    est = list(estimates)
    if p < 0 or len(est) < p + 2:
        raise ValidationError(f"need at least {p + 2} estimates for order {p}", module="rayrecover")
    radii = [s for s, _ in est]
    vals = [v for _, v in est]
    fr = np.array([float(s) for s in radii])
    if len(np.unique(fr)) < len(fr) or np.min(np.diff(np.sort(fr))) < 1e-9 * np.max(fr):
        raise ConditioningError("extrapolation radii nearly coincide", module="rayrecover")
    sr = min(radii) if s_ref is None else s_ref
    use_mp = _is_mp(*vals, *radii)
    matched = tau is not None and kappa is not None
    if matched:
        fcols = _matched_columns(fr, p, float(sr), float(tau), float(kappa), False)
        fz = np.array(fcols, dtype=complex)
        real_design = np.vstack([fz.real, fz.imag])
        cond = float(np.linalg.cond(real_design))
    else:
        real_design = np.array([[(float(sr) / r) ** j for j in range(p + 1)] for r in fr])
        cond = float(np.linalg.cond(real_design))
    if not cond < rcond_limit:
        raise ConditioningError(f"extrapolation design is rank deficient (cond {cond:.3g})", module="rayrecover")

    if use_mp:
        if matched:
            value, rel = _MatchedFit(radii, p, sr, tau, kappa).solve(vals)
            return Extrapolation(value, rel, cond)
        else:
            A = mp.matrix([[(sr / r) ** j for j in range(p + 1)] for r in radii])
            x, res = _mp_lstsq(A, mp.matrix(vals))
            value = x[0]
        scale = mp.sqrt(mp.fsum(abs(v) ** 2 for v in vals))
        rel = float(res / scale) if scale else 0.0
        return Extrapolation(value, rel, cond)

    b = np.asarray(vals, dtype=complex)
    scale = np.linalg.norm(b)
    if matched:
        rb = np.concatenate([b.real, b.imag])
        x, *_ = np.linalg.lstsq(real_design, rb, rcond=None)
        rel = float(np.linalg.norm(real_design @ x - rb) / scale) if scale else 0.0
        return Extrapolation(complex(x[0], x[1]), rel, cond)
    x, *_ = np.linalg.lstsq(real_design.astype(complex), b, rcond=None)
    rel = float(np.linalg.norm(real_design @ x - b) / scale) if scale else 0.0
    return Extrapolation(complex(x[0]), rel, cond)


def _tower(I_lad, I_tau, rp: ResolvedParams, fit: "_MatchedFit | None" = None):
    """Run the recovery tower on ``I = s·Im ψ`` values (mp numbers, current precision)."""
    k = mp.mpf(rp.kappa)
    tau = mp.mpf(rp.tau)
    lad = list(rp.ladder)
    lad_tau = [s + tau for s in lad]
    st = mp.sin(k * tau)
    if fit is None:
        fit = _MatchedFit(lad, rp.order, lad[0], tau, k)
    cond = _design_condition(rp)
    # Phase factors used at every level.
    e_lad = [mp.expj(k * s) for s in lad]
    e_tau = [mp.expj(k * s) for s in lad_tau]
    coeffs, residuals, conds = [], [], []
    for n in range(rp.depth):

        def J(s, e, I, n=n):
            if n:
                part = mp.im(e * mp.fsum(coeffs[j] / s**j for j in range(n)))
            else:
                part = 0
            return s**n * (I - part)

        est = []
        for i, s in enumerate(lad):
            jx = J(s, e_lad[i], I_lad[i])
            jy = J(lad_tau[i], e_tau[i], I_tau[i])
            est.append((-mp.conj(e_tau[i]) * jx + mp.conj(e_lad[i]) * jy) / st)
        value, rel = fit.solve(est)
        coeffs.append(value)
        residuals.append(rel)
        conds.append(cond)
    return coeffs, residuals, conds


def _design_condition(rp: ResolvedParams) -> float:
    fl = [float(s) for s in rp.ladder]
    fz = np.array(_matched_columns(fl, rp.order, fl[0], rp.tau, rp.kappa, False), dtype=complex)
    return float(np.linalg.cond(np.vstack([fz.real, fz.imag])))


# ---------------------------------------------------------------------------
# Recovery


@dataclass(frozen=True)
class RayRecovery:
    """Coefficients recovered on one ray together with diagnostics."""

    origin: np.ndarray
    theta: np.ndarray
    expansion: AWExpansion
    residuals: tuple[float, ...]
    conditions: tuple[float, ...]
    radius_range: tuple[float, float]
    digits: int
    digits_lost: float
    coeffs_hp: tuple = field(default=(), repr=False)

    def error_constant(self) -> float:
        """Heuristic ``C`` in the truncation bound ``|ψ - ψ_N| ≲ C / s^{N+1}``.

        The next coefficient is guessed from the geometric growth of the last
        two recovered ones.
        """
        f = np.abs(self.expansion.coeffs)
        if f.size >= 2 and f[-2] > 0:
            return float(f[-1] * f[-1] / f[-2])
        return float(f[-1] * self.radius_range[0] * 1e-6) if f.size else 0.0


@dataclass(frozen=True)
class RayValue:
    """Reconstructed value with a truncation estimate and a range flag."""

    value: complex
    error_estimate: float
    in_range: bool


def recover_coeffs(sampler: RaySampler, params: RecoverParams, *, kappa: float | None = None) -> RayRecovery:
    """Recover ``f_1..f_N`` on the ray of ``sampler`` from ``Im ψ`` samples.

    The frame origin is the sampler's ray origin. At each level ``n`` the
    function ``J_n(s) = s^n (I(s) - I_n(s))`` is formed, where ``I_n`` is the
    part of ``I`` explained by the coefficients already found; the two-point
    estimate is applied at every ladder radius and extrapolated in ``1/s``.

    Raises
    ------
    PrecisionExhaustedError
        If the predicted cancellation leaves fewer than six digits.
    IntervalDataError
        If the sampler covers only a bounded interval of the ray.
    """
    k = kappa if kappa is not None else sampler.kappa
    if k is None:
        raise ValidationError("wavenumber unknown: pass kappa or use a sampler that carries it", module="rayrecover")
    sampler.require_full_ray()
    rp = params.resolve(k, s_floor=sampler.s_min)
    rp.check_precision()
    K = len(rp.ladder)
    with mpctx.workprec(rp.prec):
        radii = rp.radii()
        data = [+mp.mpf(sampler(s if rp.digits > 15 else float(s))) for s in radii]
        I = [s * v for s, v in zip(radii, data)]
        coeffs, residuals, conds = _tower(I[:K], I[K:], rp)
        hp = tuple(+c for c in coeffs)
        s_lo, s_hi = float(rp.ladder[0]), float(radii[-1])
    exp = AWExpansion(k, sampler.origin, sampler.theta, [complex(c) for c in hp])
    return RayRecovery(
        sampler.origin, sampler.theta, exp, tuple(residuals), tuple(conds), (s_lo, s_hi), rp.digits, rp.digits_lost, hp
    )


def reconstruct_on_ray(rec: RayRecovery, s, *, warn: bool = True) -> RayValue:
    """Evaluate the recovered expansion at radius ``s`` (scalar or array)."""
    s_arr = np.asarray(s, dtype=float)
    val = eval_partial(rec.expansion, s_arr)
    err = rec.error_constant() / s_arr ** (rec.expansion.depth + 1)
    ok = s_arr >= rec.radius_range[0] * (1 - 1e-12)
    if warn and not np.all(ok):
        warnings.warn(
            f"reconstruction below the validated radius {rec.radius_range[0]:.4g}", RangeWarning, stacklevel=2
        )
    if np.ndim(s_arr) == 0:
        return RayValue(complex(val), float(err), bool(ok))
    return RayValue(val, err, ok)


@dataclass(frozen=True)
class RecoveryOperator:
    """The recovery tower tabulated as a linear map.

    ``coefficients = matrix @ samples`` where ``samples[m] = Im ψ`` at
    ``radii[m]`` and ``matrix`` is complex of shape ``(N, 2K)``.
    """

    params: ResolvedParams
    radii: tuple
    matrix: object  # mpmath matrix

    def apply(self, samples):
        with mpctx.workprec(self.params.prec):
            v = mp.matrix([mp.mpf(x) for x in samples])
            out = self.matrix * v
            return [out[i] for i in range(self.params.depth)]

    def as_complex(self) -> np.ndarray:
        M = self.matrix
        return np.array([[complex(M[i, j]) for j in range(M.cols)] for i in range(M.rows)])


def recovery_operator(kappa: float, params: RecoverParams, *, s_floor: float = 0.0) -> RecoveryOperator:
    """Tabulate the real-linear map from ``Im ψ`` samples to coefficients.

    The tower is applied to each unit sample vector, so the columns of the
    result are the responses to single samples.
    """
    rp = params.resolve(kappa, s_floor=s_floor)
    rp.check_precision()
    K = len(rp.ladder)
    with mpctx.workprec(rp.prec):
        radii = rp.radii()
        M = mp.matrix(rp.depth, 2 * K)
        fit = _MatchedFit(list(rp.ladder), rp.order, rp.ladder[0], mp.mpf(rp.tau), mp.mpf(rp.kappa))
        for m in range(2 * K):
            I = [radii[i] if i == m else mp.mpf(0) for i in range(2 * K)]
            coeffs, _, _ = _tower(I[:K], I[K:], rp, fit)
            for i, c in enumerate(coeffs):
                M[i, m] = c
    return RecoveryOperator(rp, tuple(radii), M)


def report_to_dict(rec: RayRecovery, params: RecoverParams | None = None) -> dict:
    """JSON-ready recovery report."""
    out = {
        "expansion": expansion_to_dict(rec.expansion),
        "residuals": list(rec.residuals),
        "conditions": list(rec.conditions),
        "validated_radius_range": list(rec.radius_range),
        "precision_digits": rec.digits,
        "estimated_digits_lost": rec.digits_lost,
    }
    if params is not None:
        p = asdict(params)
        if p["ladder"] is not None:
            p["ladder"] = [float(s) for s in p["ladder"]]
        out["params"] = p
    return out
