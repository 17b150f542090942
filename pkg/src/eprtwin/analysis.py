"""Measurement pipeline: difference images to the EPR report.

For each lens configuration the two interferograms are subtracted, the
difference is averaged along y, scaled to unit maximum and fitted with a
Gaussian.  The fitted camera-plane widths are converted back to the crystal
plane and combined into the conditional uncertainty product ``U``, the
accuracy ``F`` (percent deviation from theory) and the degree of violation
``D = (hbar / 2U)^2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .biphoton import DoubleGaussianParams
from .correlations import (
    HEISENBERG_BOUND,
    epr_witness,
    theoretical_uncertainty_product,
    uncertainty_product,
)
from .exceptions import DegenerateStateError, DomainError, GridMismatchError, ResolutionWarning
from .instrument import FOURIER, IMAGE, ImagingConfig, Interferogram

MAX_ITERATIONS = 200
RELATIVE_STEP_TOL = 1e-10


@dataclass(frozen=True)
class GaussianFit:
    """``amplitude * exp(-(x - center)^2 / 2 sigma^2) + offset``."""

    amplitude: float
    center: float
    sigma: float
    offset: float
    residual_rms: float
    converged: bool
    iterations: int

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-((x - self.center) ** 2) / (2 * self.sigma**2)) + self.offset


@dataclass
class PlaneResult:
    plane: str
    axis: np.ndarray
    profile: np.ndarray
    fit: GaussianFit
    crystal_sigma: float


@dataclass
class EprReport:
    delta_x_cond: float
    delta_p_cond: float
    U: float
    U_th: float
    F: float
    D: float
    fit_image: GaussianFit
    fit_fourier: GaussianFit
    config: dict = field(default_factory=dict)

    @property
    def confidence(self) -> str:
        ok = self.fit_image.converged and self.fit_fourier.converged
        return "ok" if ok else "degraded"

    @property
    def violates_bound(self) -> bool:
        return bool(math.isfinite(self.U) and epr_witness(self.U).violates)

    def summary(self) -> dict:
        """Flat mapping with the stable report keys."""
        out = {
            "delta_x_cond_um": self.delta_x_cond,
            "delta_p_cond_hbar_per_um": self.delta_p_cond,
            "U_hbar": self.U,
            "U_th_hbar": self.U_th,
            "F_percent": self.F,
            "D": self.D,
            "violates_bound": self.violates_bound,
            "confidence": self.confidence,
        }
        for plane, fit in ((IMAGE, self.fit_image), (FOURIER, self.fit_fourier)):
            out[f"fit_{plane}_amplitude"] = fit.amplitude
            out[f"fit_{plane}_center_um"] = fit.center
            out[f"fit_{plane}_sigma_um"] = fit.sigma
            out[f"fit_{plane}_offset"] = fit.offset
            out[f"fit_{plane}_residual_rms"] = fit.residual_rms
            out[f"fit_{plane}_converged"] = fit.converged
            out[f"fit_{plane}_iterations"] = fit.iterations
        return out


def difference_image(a: Interferogram, b: Interferogram) -> np.ndarray:
    """Pixelwise ``a - b``; negative values are kept."""
    if a.counts.shape != b.counts.shape:
        raise GridMismatchError(f"frame shapes differ: {a.counts.shape} vs {b.counts.shape}")
    if a.pixel_pitch != b.pixel_pitch:
        raise GridMismatchError(f"pixel pitches differ: {a.pixel_pitch} vs {b.pixel_pitch}")
    if a.plane != b.plane:
        raise GridMismatchError(f"frames come from different planes: {a.plane} vs {b.plane}")
    return a.counts - b.counts


def marginalize_y(image) -> np.ndarray:
    """Average a ``[y, x]`` map over y."""
    return np.asarray(image, dtype=float).mean(axis=0)


def scale_max_one(profile) -> np.ndarray:
    profile = np.asarray(profile, dtype=float)
    peak = profile.max()
    if not peak > 0:
        raise DegenerateStateError(f"profile maximum must be positive, got {peak}")
    return profile / peak


def _initial_guess(x, y):
    n = len(x)
    edge = max(1, n // 10)
    offset = float(np.median(np.concatenate([y[:edge], y[-edge:]])))
    weights = np.clip(y - offset, 0.0, None)
    mass = weights.sum()
    if not mass > 0:
        return None
    center = float(np.sum(x * weights) / mass)
    sigma = math.sqrt(float(np.sum((x - center) ** 2 * weights) / mass))
    if not sigma > 0:
        return None
    return np.array([float(y.max()) - offset, center, sigma, offset])


def _model_and_jacobian(theta, x):
    amp, center, sigma, offset = theta
    u = (x - center) / sigma
    bump = np.exp(-0.5 * u * u)
    model = amp * bump + offset
    jac = np.empty((len(x), 4))
    jac[:, 0] = bump
    jac[:, 1] = amp * bump * u / sigma
    jac[:, 2] = amp * bump * u * u / sigma
    jac[:, 3] = 1.0
    return model, jac


def fit_gaussian(x, y, pixel_pitch: float | None = None, max_iterations: int = MAX_ITERATIONS) -> GaussianFit:
    """Least-squares fit of ``A exp(-(x - c)^2 / 2 sigma^2) + B``.

    Starts from sample moments (edge-median offset, centroid, moment width,
    peak height) and runs damped Gauss-Newton (Levenberg-Marquardt) steps
    until every parameter moves by less than 1e-10 of its scale or the
    iteration budget runs out.  A profile without a peak returns an
    unconverged fit.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-D arrays of equal length")
    if len(x) < 8:
        raise DomainError(f"need at least 8 samples to fit a Gaussian, got {len(x)}")

    theta = _initial_guess(x, y)
    if theta is None:
        rms = float(np.sqrt(np.mean((y - np.median(y)) ** 2)))
        return GaussianFit(0.0, float(x.mean()), math.nan, float(np.median(y)), rms, False, 0)

    model, jac = _model_and_jacobian(theta, x)
    resid = y - model
    cost = float(resid @ resid)
    damping = 1e-3
    converged = False
    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        jtj = jac.T @ jac
        grad = jac.T @ resid
        lhs = jtj + damping * np.diag(np.diag(jtj))
        try:
            step = np.linalg.solve(lhs, grad)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        scale = np.array([abs(theta[0]), theta[2], theta[2], abs(theta[0])])
        scale = np.where(scale > 0, scale, 1.0)
        small = bool(np.all(np.abs(step) < RELATIVE_STEP_TOL * scale))
        trial = theta + step
        if trial[2] > 0:
            trial_model, trial_jac = _model_and_jacobian(trial, x)
            trial_resid = y - trial_model
            trial_cost = float(trial_resid @ trial_resid)
        else:
            trial_cost = math.inf
        if trial_cost <= cost:
            theta, jac, resid, cost = trial, trial_jac, trial_resid, trial_cost
            damping = max(damping / 10.0, 1e-12)
        else:
            damping *= 10.0
        if small:
            converged = True
            break
        if damping > 1e16:
            break

    theta[2] = abs(theta[2])
    if converged and pixel_pitch is not None and theta[2] < pixel_pitch:
        warnings.warn(
            f"fitted width {theta[2]:.3g} is below one pixel pitch ({pixel_pitch:.3g})",
            ResolutionWarning,
            stacklevel=2,
        )
    rms = math.sqrt(cost / len(x))
    return GaussianFit(
        float(theta[0]), float(theta[1]), float(theta[2]), float(theta[3]),
        rms, converged and math.isfinite(rms), iterations,
    )


def to_crystal_units(fit: GaussianFit, imaging: ImagingConfig) -> float:
    """Camera-plane width back at the crystal: um (image) or hbar/um (Fourier)."""
    return fit.sigma / imaging.scale


def metrics(U_ex: float, U_th: float):
    """Accuracy ``F`` in percent and degree of violation ``D``."""
    if not U_ex > 0 or not U_th > 0:
        raise DomainError(f"uncertainty products must be positive, got {U_ex}, {U_th}")
    F = abs(U_th - U_ex) / U_th * 100.0
    D = (HEISENBERG_BOUND / U_ex) ** 2
    return F, D


def analyze_plane(frame_c: Interferogram, frame_d: Interferogram, imaging: ImagingConfig) -> PlaneResult:
    """Difference, y-average, max-one scaling and Gaussian fit for one plane."""
    if frame_c.plane != imaging.mode:
        raise GridMismatchError(
            f"{imaging.mode}-plane analysis received {frame_c.plane}-plane frames"
        )
    diff = difference_image(frame_c, frame_d)
    profile = scale_max_one(marginalize_y(diff))
    axis = frame_c.axis.coords
    fit = fit_gaussian(axis, profile, pixel_pitch=frame_c.pixel_pitch)
    return PlaneResult(imaging.mode, axis, profile, fit, to_crystal_units(fit, imaging))


def run_pipeline(
    image_frames,
    fourier_frames,
    image_config: ImagingConfig,
    fourier_config: ImagingConfig,
    params: DoubleGaussianParams,
    config: dict | None = None,
    return_planes: bool = False,
):
    """Full analysis of one frame pair per plane.

    ``image_frames`` and ``fourier_frames`` are ``(frame at delta_c, frame at
    delta_d)`` tuples.  Unconverged fits do not raise; they mark the report
    as degraded and may leave ``U``, ``F`` and ``D`` undefined (NaN).
    """
    if image_config.mode != IMAGE or fourier_config.mode != FOURIER:
        raise DomainError("expected one image-plane and one Fourier-plane configuration")
    image = analyze_plane(*image_frames, image_config)
    fourier = analyze_plane(*fourier_frames, fourier_config)
    U_th = theoretical_uncertainty_product(params)
    dx, dp = image.crystal_sigma, fourier.crystal_sigma
    if dx > 0 and dp > 0:
        U = uncertainty_product(dx, dp)
        F, D = metrics(U, U_th)
    else:
        U = F = D = math.nan
    report = EprReport(dx, dp, U, U_th, F, D, image.fit, fourier.fit, dict(config or {}))
    if return_planes:
        return report, image, fourier
    return report


def witness_line(report: EprReport) -> str:
    if not math.isfinite(report.U):
        return "U undefined (fit failed)"
    result = epr_witness(report.U)
    verdict = "violates" if result.violates else "does not violate"
    return f"U = {report.U:.4g} hbar {verdict} the 0.5 hbar bound (margin {result.margin:.4g} hbar)"
