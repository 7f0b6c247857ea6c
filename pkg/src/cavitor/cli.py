"""Command-line entry point: ``cavitor <subcommand> ...``."""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import analysis, basis, fdtd, io, phantom, reconstruct, recording, specfun, spectral
from .cutoff import parse_cutoff
from .grids import CartesianGrid, PolarGrid, grid_for


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- shared helpers

def parse_phantom(text: str, geometry) -> phantom.PhantomSpec:
    """``default``, ``eigen:n,l``, ``field:path`` or an INI phantom file."""
    if text == "default":
        return phantom.three_bumps(geometry)
    if text.startswith("eigen:"):
        n, l = (int(v) for v in text[6:].split(","))
        return phantom.eigenmode(geometry, n, l)
    if text.startswith("field:"):
        return phantom.PhantomSpec("file", geometry, path=text[6:])
    spec = io.read_phantom(text)
    if spec.geometry != geometry:
        raise UsageError(f"phantom file is for {spec.geometry.name}, run is on {geometry.name}")
    return spec


def parse_sides(text: str | None):
    if text in (None, "", "full", "all"):
        return None
    sides = tuple(s.strip() for s in text.split(","))
    bad = set(sides) - {"left", "right", "bottom", "top"}
    if bad:
        raise UsageError(f"unknown sides {sorted(bad)}")
    return sides


def make_grid(geometry, resolution: str | None, c=1.0):
    if resolution is None:
        return grid_for(geometry, (128, 256) if isinstance(geometry, basis.Disk) else (256, 256), c)
    a, _, b = resolution.partition(",")
    if isinstance(geometry, basis.Disk):
        return PolarGrid(int(a), int(b) if b else 2 * int(a))
    return CartesianGrid(int(a), int(b or a), geometry.A, geometry.B, c)


def _floats(text: str) -> list[float]:
    return [basis.eval_number(t) for t in text.split(",") if t.strip()]


def _sha(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_images(out: Path, name: str, data: np.ndarray, grid) -> None:
    io.write_field(out / f"{name}.bin", data, grid)
    if isinstance(grid, PolarGrid):
        data = polar_to_image(data, grid)
    io.write_pgm(out / f"{name}.pgm", data)


def polar_to_image(data: np.ndarray, grid: PolarGrid, n: int = 256) -> np.ndarray:
    """Resample a polar field on an ``n x n`` Cartesian raster (zero outside the disk)."""
    x = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    R = np.hypot(X, Y)
    T = np.mod(np.arctan2(Y, X), 2 * math.pi)
    fr = np.clip(R / grid.dr, 0, grid.nr - 1e-9)
    ft = T / grid.dtheta
    i0, j0 = fr.astype(int), ft.astype(int) % grid.ntheta
    j1 = (j0 + 1) % grid.ntheta
    a, b = fr - i0, ft - np.floor(ft)
    v = ((1 - a) * ((1 - b) * data[i0, j0] + b * data[i0, j1])
         + a * ((1 - b) * data[i0 + 1, j0] + b * data[i0 + 1, j1]))
    return np.where(R <= 1.0, v, 0.0)


# ---------------------------------------------------------------- forward

def build_recording(geometry, spec, source: str, T: float, sides=None, n_detectors: int = 0,
                    resolution: str | None = None, dt: float | None = None):
    """Boundary data from the series solution or from an FDTD run on the reconstruction grid."""
    if isinstance(geometry, basis.Disk):
        det = recording.disk_detectors(n_detectors or 1024)
    else:
        det = recording.rectangle_detectors(geometry, sides or ("bottom", "right", "top", "left"), n_detectors or 256)
    info = {"source": source}
    if source == "spectral":
        cap = spectral.choose_cap(spec)
        modes = basis.enumerate_modes(geometry, "neumann", cap)
        state = spectral.project_initial(spec, modes)
        dt = dt or spectral.default_dt(cap, T)
        rec = spectral.record_boundary(state, det, dt, T, sides=sides, geometry=geometry)
        info.update(eigenvalue_cap=cap, n_modes=len(modes), tail=state.tail)
    else:
        grid = make_grid(geometry, resolution)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            f = phantom.render(spec, grid)
        rec = fdtd.forward_run(grid, f, dt, T, det, sides=sides, geometry=geometry)
        info.update(grid=grid.describe())
    rec.meta.update(info)
    return rec


def cmd_forward(a) -> int:
    geometry = basis.parse_geometry(a.geometry)
    sides = parse_sides(a.detectors)
    spec = parse_phantom(a.phantom, geometry)
    t0 = time.perf_counter()
    rec = build_recording(geometry, spec, a.source, a.T, sides, a.n_detectors, a.resolution, a.dt)
    if a.noise > 0:
        rec = rec.add_noise(a.noise, a.seed)
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_recording(out, rec)
    if a.csv:
        io.recording_to_csv(a.csv, rec)
    io.write_provenance(out.with_suffix(out.suffix + ".json"), vars_of(a), {"forward": time.perf_counter() - t0},
                        phantom=spec.describe(), recording_sha256=_sha(out))
    print(f"wrote {out}: {rec.n_detectors} detectors x {rec.n_samples} samples, dt={rec.dt:.6g}")
    return 0


# ---------------------------------------------------------------- reconstruct / sweep

def _reconstruct(a, T_list: list[float]) -> list:
    rec = io.read_recording(a.data)
    geometry = rec.geometry
    grid = make_grid(geometry, a.resolution)
    if a.backend not in (None, "auto", reconstruct.backend_for(grid)):
        raise UsageError(f"backend {a.backend} does not fit geometry {geometry.name}")
    cut = parse_cutoff(a.cutoff)
    ref = None
    if a.phantom:
        spec = parse_phantom(a.phantom, geometry)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ref = phantom.render(spec, grid)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    reports = reconstruct.sweep_T(rec, cut, T_list, grid, ref, workers=a.workers)
    for r in reports:
        tag = f"T{r.T:g}"
        _write_images(out, f"field_{tag}", r.field, grid)
        if r.residual is not None:
            _write_images(out, f"residual_{tag}", r.residual, grid)
    if ref is not None:
        _write_images(out, "phantom", ref, grid)
    rows = reconstruct.metrics_rows(reports)
    io.write_csv(out / "metrics.csv", rows, ["T", "l2w_rel", "h1_rel", "energy_res"])
    io.write_provenance(out / "provenance.json", vars_of(a), {"reconstruct": time.perf_counter() - t0},
                        data_sha256=_sha(a.data), reports=[r.provenance for r in reports], metrics=rows)
    for row in rows:
        print(", ".join(f"{k}={v:.6g}" for k, v in row.items()))
    return 0


def cmd_reconstruct(a) -> int:
    _reconstruct(a, [a.T])
    return 0


def cmd_sweep(a) -> int:
    _reconstruct(a, _floats(a.T))
    return 0


# ---------------------------------------------------------------- modes / predict / bessel / render

def cmd_modes(a) -> int:
    geometry = basis.parse_geometry(a.geometry)
    modes = basis.enumerate_modes(geometry, a.bc, a.cap)
    rows = [{"i": m.index[0], "j": m.index[1], "eigenvalue": m.eigenvalue, "normalization": m.normalization}
            for m in modes]
    io.write_csv(a.out, rows, ["i", "j", "eigenvalue", "normalization"])
    print(f"{len(modes)} {a.bc} modes up to {a.cap} on {geometry.name}")
    if a.coincidences:
        rev_bc = a.reversal_bc or basis.reversal_bc(geometry, parse_sides(a.detectors))
        neu = modes if a.bc == "neumann" else basis.enumerate_modes(geometry, "neumann", a.cap)
        rev = basis.enumerate_modes(geometry, rev_bc, a.cap)
        recs = basis.detect_coincidences(neu, rev)
        io.write_csv(a.coincidences, [
            {"nIdx": r.neumann_index[0], "lIdx": r.neumann_index[1], "kIdx": r.reversal_index[0],
             "mIdx": r.reversal_index[1], "eigenvalue": r.shared_eigenvalue, "coupling": r.coupling} for r in recs],
            ["nIdx", "lIdx", "kIdx", "mIdx", "eigenvalue", "coupling"])
        print(f"{len(recs)} coincidences, {len(basis.nonzero(recs))} with nonzero coupling")
    return 0


def cmd_bessel_verify(a) -> int:
    t0 = time.perf_counter()
    report = specfun.verify_zero_gaps(a.m_max, a.k_max)
    rows = [{"m": r.m, "k": r.k, "l": r.l, "quantity": r.quantity, "bound": r.bound, "value": r.value,
             "pass": int(r.passed)} for r in report.rows()]
    io.write_csv(a.out, rows, ["m", "k", "l", "quantity", "bound", "value", "pass"])
    print(f"{report.n_checks} checks, {len(report.violations)} violations, max root residual "
          f"{report.max_residual:.2e}, m=0 constant {report.m0_constant:.6f}, {time.perf_counter() - t0:.1f}s")
    return 0 if report.ok else 1


def cmd_predict(a) -> int:
    geometry = basis.parse_geometry(a.geometry)
    spec = parse_phantom(a.phantom, geometry)
    caps = _floats(a.caps)
    neu_cap, rev_cap = (caps[0], caps[-1])
    sides = parse_sides(a.detectors)
    neu = basis.enumerate_modes(geometry, "neumann", neu_cap)
    rev = basis.enumerate_modes(geometry, basis.reversal_bc(geometry, sides), rev_cap)
    coeffs = spec.coefficients(neu)
    pred = analysis.predict_residual(coeffs, neu, rev, a.eps, parse_cutoff(a.cutoff))
    rows = [{"k": m.index[0], "m": m.index[1], "eigenvalue": m.eigenvalue, "nu_w0": pred.nu_w0[i],
             "w0": pred.w0[i], "persistent": pred.persistent[i]}
            for i, m in enumerate(rev) if pred.w0[i] != 0 or pred.persistent[i] != 0]
    io.write_csv(a.out, rows, ["k", "m", "eigenvalue", "nu_w0", "w0", "persistent"])
    print(f"predicted residual H1 norm {math.sqrt(pred.h1_sq()):.6g}, persistent part "
          f"{math.sqrt(pred.h1_sq('persistent')):.6g}")
    return 0


def cmd_render(a) -> int:
    geometry = basis.parse_geometry(a.geometry)
    spec = parse_phantom(a.phantom, geometry)
    grid = make_grid(geometry, a.resolution)
    f = phantom.render(spec, grid)
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_field(out, f, grid)
    if a.pgm:
        io.write_pgm(a.pgm, polar_to_image(f, grid) if isinstance(grid, PolarGrid) else f)
    l2, semi, h1 = analysis.norms(f, grid)
    print(f"wrote {out}; ||f||={l2:.6g} |f|_H1={semi:.6g}")
    return 0


_PATH_KEYS = ("data", "config")


def vars_of(a) -> dict:
    """Config echo with input paths made absolute so the run can be replayed from anywhere."""
    d = {k: v for k, v in vars(a).items() if k != "func"}
    for k in _PATH_KEYS:
        if d.get(k):
            d[k] = str(Path(d[k]).resolve())
    ph = d.get("phantom")
    if ph and not ph.startswith(("eigen:", "default")):
        pre = "field:" if ph.startswith("field:") else ""
        d["phantom"] = pre + str(Path(ph[len(pre):]).resolve())
    return d


def cmd_replay(a) -> int:
    """Re-run the command recorded in a provenance file, writing to ``--out``."""
    prov = io.read_provenance(a.provenance)
    cfg = dict(prov["config"])
    cfg.pop("config", None)
    command = cfg.get("command")
    if command not in ("forward", "reconstruct", "sweep"):
        raise UsageError(f"provenance records no replayable command ({command!r})")
    cfg["out"] = a.out
    funcs = {"forward": cmd_forward, "reconstruct": cmd_reconstruct, "sweep": cmd_sweep}
    return funcs[command](argparse.Namespace(**cfg))


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavitor", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=False):
        sp.add_argument("--config", help="INI run configuration; command-line flags override it")
        sp.add_argument("--resolution", help="grid cells: 'n' or 'nx,ny' (Cartesian), 'nr,ntheta' (polar)")
        if data:
            sp.add_argument("--data", required=True, help="recording file")
            sp.add_argument("--cutoff", default="bump:0.5")
            sp.add_argument("--backend", default="auto", choices=["auto", *reconstruct.BACKENDS])
            sp.add_argument("--phantom", help="reference phantom for metrics")
            sp.add_argument("--out", help="report directory")
            sp.add_argument("--workers", type=int, default=None)

    f = sub.add_parser("forward", help="simulate boundary data")
    common(f)
    f.add_argument("--geometry", default="disk")
    f.add_argument("--phantom", default="default")
    f.add_argument("--source", default="spectral", choices=["spectral", "fdtd"])
    f.add_argument("--T", type=basis.eval_number)
    f.add_argument("--dt", type=float, default=None)
    f.add_argument("--detectors", default="full", help="'full' or comma-separated sides")
    f.add_argument("--n-detectors", type=int, default=0, help="disk total or per-side count")
    f.add_argument("--noise", type=float, default=0.0)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--csv", help="also export the recording as CSV")
    f.add_argument("--out")
    f.set_defaults(func=cmd_forward)

    r = sub.add_parser("reconstruct", help="gradual time reversal for one T")
    common(r, data=True)
    r.add_argument("--T", type=basis.eval_number)
    r.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("sweep", help="gradual time reversal over a list of T")
    common(s, data=True)
    s.add_argument("--T", help="comma-separated ascending list")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("modes", help="tabulate eigenpairs and coincidences")
    m.add_argument("--geometry", default="square")
    m.add_argument("--bc", default="neumann", choices=list(basis.BCS))
    m.add_argument("--cap", type=float, required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--coincidences", help="also write the coincidence report here")
    m.add_argument("--reversal-bc", choices=["dirichlet", "mixed"])
    m.add_argument("--detectors", default="full")
    m.set_defaults(func=cmd_modes)

    b = sub.add_parser("bessel-verify", help="check the zero-spacing bounds")
    b.add_argument("--m-max", type=int, default=50)
    b.add_argument("--k-max", type=int, default=100)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bessel_verify)

    pr = sub.add_parser("predict", help="modal prediction of the reconstruction residual")
    pr.add_argument("--geometry", default="square")
    pr.add_argument("--phantom", default="eigen:1,2")
    pr.add_argument("--eps", type=float, required=True)
    pr.add_argument("--caps", default="40", help="'cap' or 'neumann_cap,reversal_cap'")
    pr.add_argument("--cutoff", default="bump:0.5")
    pr.add_argument("--detectors", default="full")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_predict)

    rp = sub.add_parser("render-phantom", help="sample a phantom on a grid")
    rp.add_argument("--geometry", default="disk")
    rp.add_argument("--phantom", default="default")
    rp.add_argument("--resolution")
    rp.add_argument("--out", required=True)
    rp.add_argument("--pgm")
    rp.set_defaults(func=cmd_render)
    rr = sub.add_parser("replay", help="re-run a forward/reconstruct/sweep from its provenance file")
    rr.add_argument("provenance")
    rr.add_argument("--out", required=True)
    rr.set_defaults(func=cmd_replay)
    return p


def _apply_config(args, argv):
    cfg = io.RunConfig.from_ini(args.config)
    given = {tok.split("=")[0].lstrip("-").replace("-", "_") for tok in argv if tok.startswith("--")}
    mapping = {"geometry": cfg.geometry, "resolution": cfg.resolution, "cutoff": cfg.cutoff,
               "phantom": cfg.phantom, "source": cfg.data_source, "detectors": cfg.detectors,
               "seed": cfg.seed, "noise": cfg.noise, "out": cfg.out}
    if args.command == "sweep":
        mapping["T"] = ",".join(repr(t) for t in cfg.T)
    elif args.command in ("forward", "reconstruct"):
        mapping["T"] = cfg.T[-1]
    if cfg.backend != "auto" and args.command in ("reconstruct", "sweep"):
        mapping["backend"] = cfg.backend
    for k, v in mapping.items():
        if hasattr(args, k) and k not in given:
            setattr(args, k, v)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _apply_config(args, argv)
        if args.command in ("forward", "reconstruct", "sweep"):
            missing = [f"--{k}" for k in ("T", "out") if getattr(args, k) is None]
            if missing:
                parser.error(f"{args.command}: {', '.join(missing)} required (on the command line or via --config)")
        return args.func(args)
    except (ValueError, ArithmeticError, OSError, KeyError) as exc:
        print(f"cavitor {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
