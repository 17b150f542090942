"""Command-line entry point.

Exit codes: 0 success, 1 failed verification check, 2 invalid configuration
or inputs, 3 I/O failure, 4 a Gaussian fit did not converge.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import fileio
from .analysis import run_pipeline, witness_line
from .biphoton import (
    MOMENTUM,
    POSITION,
    fourier_pair,
    make_double_gaussian,
    normalize,
    oracle_axis,
)
from .config import RunConfig
from .correlations import (
    chirp,
    check_factorization_condition,
    conditional_distribution,
    conditional_momentum_width,
    conditional_position_width,
    cross_spectral_density,
    double_gaussian_schmidt_number,
    epr_witness,
    schmidt_number,
    standard_deviation,
    uncertainty_product,
)
from .exceptions import ConfigError, EprTwinError, GridMismatchError
from .instrument import FOURIER, IMAGE, simulate_experiment

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_FIT = 4

FRAME_NAMES = {(IMAGE, "c"), (IMAGE, "d"), (FOURIER, "c"), (FOURIER, "d")}
SUMMARY_KEYS = ("delta_x_cond_um", "delta_p_cond_hbar_per_um", "U_hbar", "F_percent", "D")


class IOFailure(Exception):
    pass


def _frame_stem(plane, which):
    return f"{plane}_{which}"


def _load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "seeds", None) is not None:
        changes["seeds"] = args.seeds
    if getattr(args, "noiseless", False):
        changes["noiseless"] = True
    if getattr(args, "out", None):
        changes["output_dir"] = str(args.out)
    config = config.replace(**changes)
    bad, warn = config.validate()
    for line in warn:
        print(f"warning: {line}", file=sys.stderr)
    if bad:
        raise ConfigError(bad)
    return config


def _ensure_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise IOFailure(f"cannot write to {path}: {exc}") from None
    return path


def simulate_frames(config: RunConfig, seed=None):
    """``{(plane, 'c'|'d'): Interferogram}`` for both lens configurations."""
    params = config.params()
    cam = config.camera(seed)
    frames = {}
    for imaging in (config.image_config, config.fourier_config):
        pair = simulate_experiment(
            params, imaging, cam, config.delta_c, config.delta_d,
            k1=config.k1, k2=config.k2, inversion=config.inversion,
            noiseless=config.noiseless,
        )
        frames[(imaging.mode, "c")], frames[(imaging.mode, "d")] = pair
    return frames


def analyze_frames(config: RunConfig, frames):
    return run_pipeline(
        (frames[(IMAGE, "c")], frames[(IMAGE, "d")]),
        (frames[(FOURIER, "c")], frames[(FOURIER, "d")]),
        config.image_config,
        config.fourier_config,
        config.params(),
        config=config.echo(),
        return_planes=True,
    )


def cmd_simulate(args) -> int:
    config = _load_config(args)
    out = _ensure_dir(config.output_dir)
    frames = simulate_frames(config)
    files = {}
    try:
        for (plane, which), frame in sorted(frames.items()):
            stem = _frame_stem(plane, which)
            fileio.write_interferogram(out / f"{stem}.txt", frame)
            fileio.write_pgm(out / f"{stem}.pgm", frame.counts)
            files[f"{stem}_matrix"] = f"{stem}.txt"
            files[f"{stem}_graymap"] = f"{stem}.pgm"
        sections = {"manifest": dict(files, seed=config.seed, noiseless=config.noiseless)}
        sections.update({f"config.{k}": v for k, v in config.echo().items()})
        fileio.write_sections(out / "manifest.ini", sections)
    except OSError as exc:
        raise IOFailure(str(exc)) from None
    print(f"wrote 4 frames and manifest to {out}")
    return EXIT_OK


def _config_from_manifest(frames_dir: Path):
    manifest = frames_dir / "manifest.ini"
    if not manifest.exists():
        return None
    sections = fileio.read_sections(manifest)
    return RunConfig.from_sections(
        {k[len("config."):]: v for k, v in sections.items() if k.startswith("config.")}
    )


def _read_frames(frames_dir: Path):
    frames = {}
    for plane, which in sorted(FRAME_NAMES):
        path = frames_dir / f"{_frame_stem(plane, which)}.txt"
        if not path.exists():
            raise ConfigError([f"missing frame file {path}"])
        frame = fileio.read_interferogram(path)
        if frame.plane != plane:
            raise GridMismatchError(f"{path} holds a {frame.plane}-plane frame")
        frames[(plane, which)] = frame
    return frames


def write_report(out: Path, report, planes=()):
    fileio.write_sections(out / "report.ini", fileio.report_sections(report))
    for plane in planes:
        fileio.write_profile(
            out / f"profile_{plane.plane}.txt", plane.axis, plane.profile,
            header=f"x_camera_um max1_profile plane={plane.plane}",
        )


def cmd_analyze(args) -> int:
    frames_dir = Path(args.frames or args.out or RunConfig().output_dir)
    if args.config:
        config = _load_config(args)
    else:
        config = _config_from_manifest(frames_dir) or RunConfig()
        config = config.replace(output_dir=str(args.out or frames_dir)).checked()
    frames = _read_frames(frames_dir)
    report, image, fourier = analyze_frames(config, frames)
    out = _ensure_dir(args.out or frames_dir)
    try:
        write_report(out, report, (image, fourier))
    except OSError as exc:
        raise IOFailure(str(exc)) from None
    print(_report_line(report))
    print(witness_line(report))
    if report.confidence != "ok":
        print("warning: at least one Gaussian fit did not converge", file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK


def _report_line(report) -> str:
    return (
        f"dx = {report.delta_x_cond:.5g} um, dp = {report.delta_p_cond:.5g} hbar/um, "
        f"U = {report.U:.5g} hbar (theory {report.U_th:.5g}), F = {report.F:.3g} %, D = {report.D:.4g}"
    )


class _Checks:
    def __init__(self):
        self.lines = []
        self.failed = 0

    def add(self, name, ok, detail):
        self.lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        self.failed += not ok

    def note(self, text):
        self.lines.append(f"INFO {text}")


def _chirp_rate(state, strength):
    """Chirp rate giving ``strength`` rad of phase at one conditional width in each photon."""
    width = standard_deviation(conditional_distribution(state, 1))
    return strength / width**2


def run_verification(config: RunConfig, chirp_strength=None, amplitude=None) -> _Checks:
    """Theory-side checks for the configured state (or a loaded amplitude)."""
    checks = _Checks()
    if amplitude is not None:
        state = normalize(amplitude)
        if chirp_strength:
            state = chirp(state, _chirp_rate(state, chirp_strength))
        _state_checks(checks, state, state.basis)
        checks.note(f"Schmidt number K = {schmidt_number(state):.6g} (this axis)")
        return checks

    params = config.params()
    x_axis = oracle_axis(params, config.grid_n, POSITION)
    p_axis = x_axis.conjugate()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        psi_x = make_double_gaussian(params, x_axis, x_axis, min_samples=1.0)
        psi_p = make_double_gaussian(params, p_axis, p_axis, min_samples=1.0)
        transformed = fourier_pair(psi_p)
        back = fourier_pair(transformed)

    checks.note(f"sigma_minus = {params.sigma_minus:.6g} um, sigma_p = {params.sigma_p:.6g} um")
    err = np.abs(transformed.values - psi_x.values).max() / np.abs(psi_x.values).max()
    checks.add("fourier_pair", err < 1e-6, f"momentum->position vs sampled position form, max rel err {err:.2e}")
    err = np.abs(back.values - psi_p.values).max()
    checks.add("round_trip", err < 1e-10, f"max elementwise error {err:.2e}")
    err = abs(transformed.norm() - psi_p.norm()) / psi_p.norm()
    checks.add("parseval", err < 1e-12, f"relative norm change {err:.2e}")

    if chirp_strength:
        psi_x = chirp(psi_x, _chirp_rate(psi_x, chirp_strength))
        psi_p = chirp(psi_p, _chirp_rate(psi_p, chirp_strength))
        checks.note(f"chirp injected with strength {chirp_strength}")
    dx = _state_checks(checks, psi_x, POSITION, conditional_position_width(params))
    dp = _state_checks(checks, psi_p, MOMENTUM, conditional_momentum_width(params))

    K = schmidt_number(psi_x)
    K_th = double_gaussian_schmidt_number(params)
    checks.add(
        "schmidt_number", abs(K - K_th) <= 0.02 * K_th,
        f"SVD K = {K:.6g} per axis (closed form {K_th:.6g}); x-y state K = {K * K:.6g}",
    )
    U = uncertainty_product(dx, dp)
    witness = epr_witness(U)
    if math.isclose(params.sigma_p, params.sigma_minus):
        verdict = "violation" if witness.violates else "no violation"
        checks.note(f"separable, U={U:.4g} hbar, {verdict}")
    else:
        verdict = "violation" if witness.violates else "no violation"
        checks.note(f"U = {U:.6g} hbar, {verdict} (margin {witness.margin:.4g} hbar), D = {(0.5 / U) ** 2:.4g}")
    return checks


def _state_checks(checks, state, basis, analytic_width=None):
    condition = check_factorization_condition(state)
    checks.add(
        f"factorization_condition[{basis}]", condition.satisfied,
        f"ratio dispersion {condition.ratio_dispersion:.2e} over {condition.mask_fraction:.2e} of the grid",
    )
    P = conditional_distribution(state)
    W = cross_spectral_density(state)
    residual = np.abs(W.magnitude().to_max_one().values - P.to_max_one().values).max()
    checks.add(f"W_proportional_to_P[{basis}]", residual < 1e-3, f"max residual {residual:.2e}")
    width = standard_deviation(P)
    if analytic_width is not None:
        err = abs(width - analytic_width) / analytic_width
        checks.add(f"conditional_width[{basis}]", err < 5e-3, f"sampled {width:.6g}, analytic {analytic_width:.6g}")
    return width


def cmd_verify(args) -> int:
    config = _load_config(args)
    amplitude = fileio.load_amplitude(args.amplitude) if args.amplitude else None
    checks = run_verification(config, args.chirp, amplitude)
    text = "\n".join(checks.lines) + "\n"
    print(text, end="")
    if args.out:
        out = _ensure_dir(args.out)
        try:
            (out / "verify.txt").write_text(text)
            if args.save_amplitude:
                params = config.params()
                axis = oracle_axis(params, config.grid_n)
                fileio.save_amplitude(out / "amplitude_position.bin",
                                      make_double_gaussian(params, axis, axis, min_samples=1.0))
        except OSError as exc:
            raise IOFailure(str(exc)) from None
    return EXIT_CHECK_FAILED if checks.failed else EXIT_OK


def summarize(reports):
    """Median and 5th/95th percentiles over a list of report ``[report]`` mappings."""
    summary = {"n_reports": len(reports)}
    summary["n_degraded"] = sum(r.get("confidence") != "ok" for r in reports)
    for key in SUMMARY_KEYS:
        values = np.array([float(r[key]) for r in reports], dtype=float)
        values = values[np.isfinite(values)]
        if values.size:
            summary[f"{key}_median"] = float(np.median(values))
            summary[f"{key}_p05"] = float(np.percentile(values, 5))
            summary[f"{key}_p95"] = float(np.percentile(values, 95))
    U = np.array([float(r["U_hbar"]) for r in reports], dtype=float)
    summary["fraction_violating_bound"] = float(np.mean(U < 0.5))
    if reports:
        summary["U_th_hbar"] = float(reports[0]["U_th_hbar"])
    return summary


def cmd_report(args) -> int:
    if args.reports:
        reports = [fileio.read_sections(p)["report"] for p in args.reports]
        out = _ensure_dir(args.out or ".")
    else:
        config = _load_config(args)
        out = _ensure_dir(config.output_dir)
        reports_dir = _ensure_dir(out / "reports")
        reports = []
        for seed in range(config.seed, config.seed + config.seeds):
            seeded = config.replace(seed=seed)
            report, *_ = analyze_frames(seeded, simulate_frames(seeded))
            try:
                fileio.write_sections(reports_dir / f"report_seed{seed:05d}.ini", fileio.report_sections(report))
            except OSError as exc:
                raise IOFailure(str(exc)) from None
            reports.append(fileio.read_sections(reports_dir / f"report_seed{seed:05d}.ini")["report"])
    summary = summarize(reports)
    try:
        fileio.write_sections(out / "summary.ini", {"summary": summary})
    except OSError as exc:
        raise IOFailure(str(exc)) from None
    for key in ("U_hbar", "F_percent", "D"):
        if f"{key}_median" in summary:
            print(f"{key}: median {summary[key + '_median']:.5g} "
                  f"[{summary[key + '_p05']:.5g}, {summary[key + '_p95']:.5g}]")
    print(f"{summary['n_reports']} reports, {summary['n_degraded']} degraded")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprtwin",
        description="Simulate and analyse coincidence-free EPR-correlation measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seeds=False):
        p.add_argument("--config", help="sectioned key = value configuration file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="noise seed (overrides run.seed)")
        p.add_argument("--noiseless", action="store_true", help="skip the camera noise model")
        if seeds:
            p.add_argument("--seeds", type=int, help="number of consecutive seeds")

    p = sub.add_parser("simulate", help="write the four interferograms for one seed")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="run the analysis pipeline on simulated or measured frames")
    common(p)
    p.add_argument("--frames", help="directory holding the frame text matrices (default: --out)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="run the theory-side consistency checks")
    common(p)
    p.add_argument("--chirp", type=float, default=None, metavar="STRENGTH",
                   help="inject exp(i alpha a b) with STRENGTH rad at one conditional width")
    p.add_argument("--amplitude", help="check a stored amplitude instead of the configured state")
    p.add_argument("--save-amplitude", action="store_true",
                   help="also write the sampled position amplitude to --out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="merge per-seed reports into median/percentile summaries")
    common(p, seeds=True)
    p.add_argument("reports", nargs="*", help="report files to merge (default: run --seeds seeds)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.violations:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INVALID
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EprTwinError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
