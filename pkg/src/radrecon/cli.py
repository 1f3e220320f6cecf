"""Command-line front end.

Every command validates its inputs before computing anything and writes its
artifacts only once the computation has succeeded. Exit status is 0 on
success, 2 for invalid input and 3 for numerical failure. A one-line summary
goes to standard output; machine-readable results go to files only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import mpmath as mp
import numpy as np

from . import __version__, mpctx
from .awseries import RaySampler
from .errors import NearSingularError, NumericalError, RadReconError, ValidationError
from .fields import PointSource, Scene, eval_scene, load_scene, wavelength
from .planeops import (
    PlaneFrame,
    PlaneGrid,
    fibonacci_directions,
    halfspace_continue,
    read_grid_csv,
    recover_plane,
    scene_plane_sampler,
    sphere_null_probe,
    write_grid_csv,
)
from .rayrecover import RecoverParams, recover_coeffs, report_to_dict

log = logging.getLogger("radrecon")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

COMMANDS = ("sample", "recover-ray", "recover-plane", "continue-field", "farfield", "born-invert", "verify")
SUITES = ("sphere-null", "reciprocity", "born-order", "two-point", "farfield-slope")


# ---------------------------------------------------------------------------
# Artifacts


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _fmt(x) -> str:
    """Shortest exact text for a float, enough digits for an mpmath number."""
    if isinstance(x, mp.mpf):
        return mp.nstr(x, int(mp.mp.dps) + 10)
    return repr(float(x))


def emit_plot_data(series: Mapping[str, Sequence[Sequence]], out_dir, *, columns: Mapping[str, Sequence[str]] | None = None) -> list[Path]:
    """Write one CSV per named series.

    Parameters
    ----------
    series : mapping
        ``name -> rows``; each row is ``(x, y)`` or ``(x, y_re, y_im)``.
    out_dir : path
        Directory for the files ``<name>.csv``.
    columns : mapping, optional
        Header per series. Defaults to ``x, y`` or ``x, re, im``.

    Returns
    -------
    list of Path
        Files in sorted name order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(series):
        rows = [list(r) for r in series[name]]
        for r in rows:
            if not all(math.isfinite(float(v)) for v in r):
                raise ValidationError(f"series {name!r} contains non-finite values", module="cli")
        if columns and name in columns:
            header = list(columns[name])
        else:
            width = len(rows[0]) if rows else 2
            header = ["x", "y"] if width == 2 else ["x", "re", "im"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        p = out / f"{name}.csv"
        p.write_text(buf.getvalue(), encoding="utf-8")
        paths.append(p)
    return paths


@dataclass
class Artifacts:
    """Files produced by a command, held in memory until the command succeeds."""

    files: dict[Path, str] = field(default_factory=dict)

    def add(self, path, text: str) -> None:
        self.files[Path(path)] = text

    def add_csv(self, path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in r])
        self.add(path, buf.getvalue())

    def flush(self) -> None:
        for p, text in self.files.items():
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Argument parsing


def _vector(text: str) -> tuple[float, float, float]:
    try:
        parts = [float(t) for t in text.replace(";", ",").split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a vector: {text!r}") from exc
    if len(parts) != 3 or not all(math.isfinite(p) for p in parts):
        raise argparse.ArgumentTypeError(f"expected three finite numbers, got {text!r}")
    return tuple(parts)


def _ladder(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of radii: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radrecon", description="Recover radiating fields from their imaginary parts.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, scene=True):
        if scene:
            sp.add_argument("--scene", type=Path, help="scene JSON file")
            sp.add_argument("--kappa-override", type=float, help="replace the scene wavenumber")
        sp.add_argument("--out", type=Path, required=True, help="output file")
        sp.add_argument("--seed", type=int, default=0)

    def tower(sp):
        sp.add_argument("--tau", type=float)
        sp.add_argument("--depth", type=int)
        sp.add_argument("--ladder", type=_ladder, help="comma-separated radii")
        sp.add_argument("--precision-digits", type=int)

    def ray(sp):
        sp.add_argument("--ray-origin", type=_vector, default=(0.0, 0.0, 0.0))
        sp.add_argument("--ray-dir", type=_vector, default=(0.0, 0.0, 1.0))

    def plane(sp, aperture=2.5, spacing=0.5, required=True):
        sp.add_argument("--plane-base", type=_vector, required=required)
        sp.add_argument("--plane-normal", type=_vector, required=required)
        sp.add_argument("--aperture", type=float, default=aperture, help="half side of the square grid")
        sp.add_argument("--spacing", type=float, default=spacing)

    sp = sub.add_parser("sample", help="tabulate Im psi at the radii a recovery needs")
    common(sp)
    tower(sp)
    ray(sp)

    sp = sub.add_parser("recover-ray", help="recover expansion coefficients on one ray")
    common(sp)
    tower(sp)
    ray(sp)
    sp.add_argument("--input", type=Path, help="samples CSV written by 'sample'")

    sp = sub.add_parser("recover-plane", help="reconstruct psi on a plane grid from Im psi")
    common(sp)
    tower(sp)
    plane(sp)

    sp = sub.add_parser("continue-field", help="continue plane values into the half-space")
    common(sp)
    plane(sp, aperture=None, spacing=None, required=False)
    sp.add_argument("--input", type=Path, help="grid CSV with values")
    sp.add_argument("--points", type=str, help="probe points 'x,y,z;x,y,z;...'")

    sp = sub.add_parser("farfield", help="scattering amplitudes for random direction pairs")
    common(sp)
    sp.add_argument("--count", type=int, default=8)

    sp = sub.add_parser("born-invert", help="Born-level potential from Im R_sc on a plane")
    common(sp)
    tower(sp)
    plane(sp, aperture=15.0, spacing=0.75)
    sp.add_argument("--eval-n", type=int, default=13)

    sp = sub.add_parser("verify", help="run a verification suite")
    common(sp, scene=False)
    sp.add_argument("--suite", choices=SUITES, required=True)
    sp.add_argument("--kappa", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--directions", type=int, default=200)
    return p


# ---------------------------------------------------------------------------
# Helpers shared by the commands


def _scene(args) -> Scene:
    if args.scene is None:
        raise ValidationError("--scene is required for this command", module="cli")
    if not args.scene.exists():
        raise ValidationError(f"scene file {args.scene} does not exist", module="cli")
    scene = load_scene(args.scene)
    if args.kappa_override is not None:
        scene = scene.with_kappa(args.kappa_override)
    return scene


def _params(args, *, depth: int = 1, digits: int | None = None) -> RecoverParams:
    """Tower settings from the flags, with command-specific defaults."""
    return RecoverParams(
        depth=args.depth if args.depth is not None else depth,
        tau=args.tau,
        ladder=args.ladder,
        digits=args.precision_digits if args.precision_digits is not None else digits,
    )


def _frame(args) -> PlaneFrame:
    if args.plane_base is None or args.plane_normal is None:
        raise ValidationError("--plane-base and --plane-normal are required", module="cli")
    return PlaneFrame(args.plane_base, args.plane_normal)


def _sample_header_path(out: Path) -> Path:
    return out.with_suffix(".json")


def _direction(v) -> np.ndarray:
    d = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(d))
    if not n > 0:
        raise ValidationError("ray direction must be nonzero", module="cli")
    return d / n


def _ray_sampler(scene: Scene, args, params: RecoverParams) -> tuple[RaySampler, object]:
    digits = params.resolve(scene.kappa).digits
    sampler = RaySampler.from_scene(scene, args.ray_origin, _direction(args.ray_dir), digits=digits)
    rp = params.resolve(scene.kappa, s_floor=sampler.s_min)
    rp.check_precision()
    return sampler, rp


# ---------------------------------------------------------------------------
# Commands. Each returns (summary line, artifacts).


def cmd_sample(args) -> tuple[str, Artifacts]:
    scene = _scene(args)
    params = _params(args)
    sampler, rp = _ray_sampler(scene, args, params)
    art = Artifacts()
    with mpctx.workprec(rp.prec):
        rows = []
        for s in rp.radii():
            arg = s if rp.digits > 15 else float(s)
            v = +mp.mpf(sampler(arg))
            rows.append((s if rp.digits > 15 else float(s), v if rp.digits > 15 else float(v)))
        art.add_csv(args.out, ["s", "im_psi"], rows)
    header = {
        "kappa": scene.kappa,
        "ray_origin": list(sampler.origin.tolist()),
        "ray_dir": list(sampler.theta.tolist()),
        "precision_digits": rp.digits,
        "s_min": sampler.s_min,
    }
    art.add(_sample_header_path(args.out), _json_text(header))
    return f"sample: {len(rows)} radii written (digits {rp.digits})", art


def _table_sampler(args, params: RecoverParams) -> RaySampler:
    path: Path = args.input
    hpath = _sample_header_path(path)
    if not path.exists() or not hpath.exists():
        raise ValidationError(f"samples {path} or its header {hpath} is missing", module="cli")
    header = json.loads(hpath.read_text(encoding="utf-8"))
    kappa = float(args.kappa_override or header["kappa"])
    digits = params.resolve(kappa).digits
    prec = params.resolve(kappa).prec
    table = {}
    with mpctx.workprec(prec):
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if digits > 15:
                    table[mp.mpf(row["s"])] = mp.mpf(row["im_psi"])
                else:
                    table[float(row["s"])] = float(row["im_psi"])
    sampler = RaySampler.from_table(table, header["ray_origin"], header["ray_dir"], kappa=kappa, digits=digits)
    # The table only serves tabulated radii; the smallest admissible radius is recorded in the header.
    return RaySampler(
        sampler.origin, sampler.theta, sampler.im_psi, s_min=float(header.get("s_min", 0.0)), kappa=kappa, digits=digits
    )


def cmd_recover_ray(args) -> tuple[str, Artifacts]:
    params = _params(args)
    if args.input is not None:
        sampler = _table_sampler(args, params)
    else:
        scene = _scene(args)
        sampler, _ = _ray_sampler(scene, args, params)
    rp = params.resolve(sampler.kappa, s_floor=sampler.s_min)
    rp.check_precision()
    rec = recover_coeffs(sampler, params)
    art = Artifacts()
    art.add(args.out, _json_text(report_to_dict(rec, params)))
    f1 = rec.expansion.coeffs[0]
    return f"recover-ray: f1 = {f1.real:.12g}{f1.imag:+.12g}i, depth {rec.expansion.depth}", art


def cmd_recover_plane(args) -> tuple[str, Artifacts]:
    scene = _scene(args)
    params = _params(args, depth=6, digits=30)
    frame = _frame(args)
    frame.check_clear_of(scene)
    grid = PlaneGrid(frame, args.aperture, args.spacing)
    grid.check_sampling(scene.kappa)
    rp = params.resolve(scene.kappa)
    out = recover_plane(
        scene_plane_sampler(scene, rp.digits),
        grid,
        params,
        kappa=scene.kappa,
        source_radius=scene.obstacle_radius,
    )
    truth = eval_scene(scene, grid.points())
    ok = ~out.flags
    err = float(np.max(np.abs(out.values - truth)[ok]) / np.max(np.abs(truth))) if ok.any() else float("nan")
    art = Artifacts()
    art.files.update(_grid_texts(args.out, out))
    return f"recover-plane: {out.count}x{out.count} nodes, max relative error {err:.3e}, flagged {int((~ok).sum())}", art


def _grid_texts(path: Path, grid: PlaneGrid) -> dict[Path, str]:
    """Render the grid CSV and header without touching the final location."""
    with tempfile.TemporaryDirectory() as tmp:
        p, h = write_grid_csv(Path(tmp) / "grid.csv", grid)
        return {Path(path): p.read_text(encoding="utf-8"), Path(path).with_suffix(".json"): h.read_text(encoding="utf-8")}


def _parse_points(text: str) -> np.ndarray:
    try:
        pts = [_vector(t) for t in text.split(";") if t.strip()]
    except argparse.ArgumentTypeError as exc:
        raise ValidationError(str(exc), module="cli") from exc
    if not pts:
        raise ValidationError("no probe points given", module="cli")
    return np.array(pts)


def cmd_continue_field(args) -> tuple[str, Artifacts]:
    scene = None
    if args.input is not None:
        if not args.input.exists():
            raise ValidationError(f"grid file {args.input} does not exist", module="cli")
        grid = read_grid_csv(args.input)
        kappa = grid.kappa
        if args.scene is not None:
            scene = _scene(args)
    else:
        scene = _scene(args)
        kappa = scene.kappa
        frame = _frame(args)
        frame.check_clear_of(scene)
        lam = wavelength(kappa)
        half = args.aperture if args.aperture is not None else 40 * lam
        h = args.spacing if args.spacing is not None else lam / 6
        grid = PlaneGrid(frame, half, h, kappa=kappa)
        grid = grid.with_values(eval_scene(scene, grid.points()))
    lam = wavelength(kappa)
    fr = grid.frame
    if args.points:
        pts = _parse_points(args.points)
    else:
        pts = np.array([fr.base - 2 * lam * fr.normal, fr.base - 3 * lam * fr.normal + lam * fr.e1])
    vals, est = halfspace_continue(grid, pts, kappa=kappa, return_estimate=True)
    rows = [(*p, v.real, v.imag) for p, v in zip(pts.tolist(), np.atleast_1d(vals))]
    art = Artifacts()
    art.add_csv(args.out, ["x", "y", "z", "re", "im"], rows)
    msg = f"continue-field: {len(pts)} points, truncation estimate {float(np.max(est)):.3e}"
    if scene is not None:
        truth = eval_scene(scene, pts)
        err = float(np.max(np.abs(np.atleast_1d(vals) - truth) / np.abs(truth)))
        msg += f", max relative error {err:.3e}"
    return msg, art


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def cmd_farfield(args) -> tuple[str, Artifacts]:
    from .scattering import FarField, scattering_amplitude

    scene = _scene(args)
    if scene.potential is None:
        raise ValidationError("farfield needs a scene with a potential", module="cli")
    if args.count < 1:
        raise ValidationError("--count must be positive", module="cli")
    op = scene.scattering_operator()
    rng = np.random.default_rng(args.seed)
    th = _random_unit(rng, args.count)
    tp = _random_unit(rng, args.count)
    amps = np.array([scattering_amplitude(op.plane_wave_scattered, a, b, scene.kappa) for a, b in zip(th, tp)])
    direct = op.amplitude(th, tp)
    ff = FarField(scene.kappa, th, tp, amps)
    art = Artifacts()
    art.add_csv(args.out, ["theta_x", "theta_y", "theta_z", "thetap_x", "thetap_y", "thetap_z", "re", "im"], ff.rows())
    scale = max(float(np.max(np.abs(direct))), 1e-300)
    err = float(np.max(np.abs(amps - direct)) / scale)
    return f"farfield: {args.count} pairs (seed {args.seed}), max deviation from direct solve {err:.3e}", art


def cmd_born_invert(args) -> tuple[str, Artifacts]:
    from .scattering import (
        LSGreenData,
        PipelineConfig,
        band_limited,
        born_pipeline,
        potential_fourier,
    )

    scene = _scene(args)
    if scene.potential is None:
        raise ValidationError("born-invert needs a scene with a potential", module="cli")
    frame = _frame(args)
    frame.check_clear_of(scene)
    params = _params(args, depth=6, digits=40)
    depth, digits = params.depth, params.digits
    cfg = PipelineConfig(
        frame=frame,
        half_extent=args.aperture,
        spacing=args.spacing,
        depth=depth,
        digits=digits,
    )
    params.resolve(scene.kappa).check_precision()
    op = scene.scattering_operator()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = born_pipeline(LSGreenData(op), cfg)
    r = scene.obstacle_radius * 1.5
    g = np.linspace(-r, r, args.eval_n)
    X = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    est = res.evaluate(X)
    truth = band_limited(res.quadrature, potential_fourier(scene.potential, res.quadrature.xi), X)
    tn = float(np.linalg.norm(truth))
    err = float(np.linalg.norm(est - truth) / tn) if tn > 0 else float(np.linalg.norm(est))
    report = dict(res.report)
    report["relative_l2_error"] = err
    report["warnings"] = [str(w.message) for w in caught]
    art = Artifacts()
    art.add(args.out, _json_text(report))
    art.add_csv(args.out.with_suffix(".csv"), ["x", "y", "z", "v_estimate", "v_truth"], ((*x, e, t) for x, e, t in zip(X.tolist(), est, truth)))
    return f"born-invert: relative L2 error {err:.3e} against the band-limited truth", art


# -- verification suites --------------------------------------------------


def _suite_sphere_null(args, rng) -> tuple[str, dict, dict]:
    if args.n < 1:
        raise ValidationError("--n must be at least 1", module="cli")
    dirs = fibonacci_directions(args.directions)
    worst = sphere_null_probe(args.kappa, args.n, dirs)
    r_off = (args.n + 0.5) * math.pi / args.kappa
    off = sphere_null_probe(args.kappa, args.n, dirs, radius=r_off)
    report = {"max_abs_im": worst, "off_resonant_radius": r_off, "off_resonant_max": off, "expected_off": 1 / (4 * math.pi * r_off)}
    return f"verify sphere-null: max |Im G+| = {worst:.3e} on r = {args.n}*pi/kappa", report, {}


def _suite_two_point(args, rng) -> tuple[str, dict, dict]:
    k = args.kappa
    scene = Scene(k, (PointSource((0.0, 0.0, 0.0), 1.0),), None, 1.0)
    theta = _random_unit(rng, 1)[0]
    rec = recover_coeffs(RaySampler.from_scene(scene, (0, 0, 0), theta), RecoverParams(depth=1))
    f1 = rec.expansion.coeffs[0]
    err = abs(f1 - 1 / (4 * math.pi)) * 4 * math.pi
    # Remainder of the raw two-point estimate for an off-centre source.
    off = Scene(k, (PointSource((0.3, 0.0, 0.2), 1.0),), None, 1.0)
    from .awseries import oracle_coeffs_point_source
    from .rayrecover import two_point_estimate

    exact = oracle_coeffs_point_source((0.3, 0.0, 0.2), (0.0, 0.0, 0.0), theta, k, 1, tol=1e-14)[0]
    tau = math.pi / (2 * k)
    rows = []
    for i in range(9):
        s = 10.0 / k * 10 ** (i / 4)
        I = [s_ * float(np.imag(eval_scene(off, s_ * theta))) for s_ in (s, s + tau)]
        est = two_point_estimate(I[0], I[1], s, tau, k)
        rows.append((s, abs(est - exact)))
    slope = float(np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0])
    report = {"f1_relative_error": err, "remainder_slope": slope, "theta": theta.tolist()}
    return f"verify two-point: f1 relative error {err:.3e}, remainder slope {slope:.3f}", report, {"two_point_remainder": rows}


def _ball_operator(kappa, eps, n=8):
    from .fields import PotentialGrid
    from .scattering import LSOperator

    return LSOperator(PotentialGrid.ball(1.0, n, eps), kappa)


def _suite_reciprocity(args, rng) -> tuple[str, dict, dict]:
    from .fields import PotentialGrid
    from .scattering import LSOperator, reciprocity_report

    n = 6
    vals = (rng.normal(size=(n, n, n)) - 1j * np.abs(rng.normal(size=(n, n, n)))) * 0.3
    op = LSOperator(PotentialGrid((-1.0, -1.0, -1.0), (2.0, 2.0, 2.0), n, vals), args.kappa)
    pairs = [(3 * _random_unit(rng, 1)[0] * 2, 3 * _random_unit(rng, 1)[0] * 2) for _ in range(10)]
    asym = reciprocity_report(op.scattered, pairs)
    return f"verify reciprocity: max relative asymmetry {asym:.3e}", {"max_asymmetry": asym, "voxels": op.size}, {}


def _suite_born_order(args, rng) -> tuple[str, dict, dict]:
    X = 4 * _random_unit(rng, 4)
    y = 4 * _random_unit(rng, 1)[0]
    rows, ratios = [], []
    for eps in (0.1, 0.05, 0.025):
        op = _ball_operator(args.kappa, eps)
        rows.append((eps, float(np.linalg.norm(op.scattered(X, y) - op.born_scattered(X, y)))))
    ratios = [rows[i][1] / rows[i + 1][1] for i in range(len(rows) - 1)]
    return (
        "verify born-order: mismatch ratios per halving " + ", ".join(f"{r:.3f}" for r in ratios),
        {"ratios": ratios, "mismatch": [r[1] for r in rows]},
        {"born_mismatch": rows},
    )


def _suite_farfield_slope(args, rng) -> tuple[str, dict, dict]:
    from .scattering import farfield_from_green, farfield_series

    op = _ball_operator(args.kappa, 0.1)
    y = 3 * _random_unit(rng, 1)[0]
    d = _random_unit(rng, 1)[0]
    radii = [10.0 / args.kappa * 10 ** (i / 6) for i in range(13)]
    limit = farfield_from_green(op.scattered, y, d, args.kappa, radii=[radii[-1] * 2**i for i in range(6)])
    rows = [(s, abs(v - limit) / abs(limit)) for s, v in farfield_series(op.scattered, y, d, args.kappa, radii)]
    slope = float(np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0])
    return f"verify farfield-slope: relative remainder slope {slope:.3f}", {"slope": slope}, {"farfield_remainder": rows}


SUITE_FUNCS: dict[str, Callable] = {
    "sphere-null": _suite_sphere_null,
    "two-point": _suite_two_point,
    "reciprocity": _suite_reciprocity,
    "born-order": _suite_born_order,
    "farfield-slope": _suite_farfield_slope,
}


def cmd_verify(args) -> tuple[str, Artifacts]:
    if not args.kappa > 0 or not math.isfinite(args.kappa):
        raise ValidationError("--kappa must be positive", module="cli")
    rng = np.random.default_rng(args.seed)
    log.info("verify suite %s with seed %d", args.suite, args.seed)
    summary, report, series = SUITE_FUNCS[args.suite](args, rng)
    report = {"suite": args.suite, "seed": args.seed, "kappa": args.kappa, **report}
    art = Artifacts()
    art.add(args.out, _json_text(report))
    cols = {"two_point_remainder": ["s", "abs_err"], "farfield_remainder": ["s", "abs_err"], "born_mismatch": ["eps", "mismatch"]}
    for name, rows in series.items():
        art.add_csv(args.out.parent / f"{args.out.stem}_{name}.csv", cols.get(name, ["x", "y"]), rows)
    return summary, art


DISPATCH: dict[str, Callable] = {
    "sample": cmd_sample,
    "recover-ray": cmd_recover_ray,
    "recover-plane": cmd_recover_plane,
    "continue-field": cmd_continue_field,
    "farfield": cmd_farfield,
    "born-invert": cmd_born_invert,
    "verify": cmd_verify,
}


def run(argv: Sequence[str] | None = None, *, stdout=None) -> int:
    """Parse ``argv``, execute the command and return the exit status."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INVALID
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        summary, art = DISPATCH[args.command](args)
    except (ValidationError, NearSingularError) as exc:
        # A near-singular two-point system is a parameter choice, caught before any sampling.
        print(f"error: {exc.tagged()}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc.tagged()}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RadReconError as exc:
        print(f"error: {exc.tagged()}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        art.flush()
    except OSError as exc:
        print(f"error: cannot write artifacts: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(summary, file=stdout)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
