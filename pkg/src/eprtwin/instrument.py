"""Forward model of the inversion interferometer and EMCCD camera.

The crystal plane is either imaged onto the camera with magnification M
(``x_cam = M x``) or Fourier transformed by a lens system of effective focal
length f_e (``x_cam = f_e p / (k0 hbar)``, ``k0 = 2 pi / lambda_0``).  The
interferometer overlays a field with its inverted copy, so each camera frame
is

    k1 I(x, y) + k2 I(-x, -y) + 2 sqrt(k1 k2) W(x, y, -x, -y) cos(delta)

and two frames at different ``delta`` differ only by the cross-spectral
term.  Frames are stored as ``counts[y, x]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .biphoton import (
    HBAR,
    MOMENTUM,
    POSITION,
    UNIT_MOMENTUM,
    UNIT_POSITION,
    DoubleGaussianParams,
    Grid1D,
    make_double_gaussian,
)
from .correlations import cross_spectral_density, marginal_intensity
from .exceptions import DomainError, ModelInconsistencyError

IMAGE = "image"
FOURIER = "fourier"
PLANES = (IMAGE, FOURIER)

FULL_INVERSION = "full"
X_INVERSION = "x"

# Frame identifiers feeding the noise generator key.
FRAME_IDS = {(IMAGE, "c"): 0, (IMAGE, "d"): 1, (FOURIER, "c"): 2, (FOURIER, "d"): 3}


@dataclass(frozen=True)
class ImagingConfig:
    """Lens configuration between crystal and camera.

    ``effective_focal`` is in cm and ``lambda_0`` in nm, as quoted for the
    optical bench; ``focal_um`` and ``k0`` give the internal units.
    """

    mode: str = IMAGE
    magnification: float = 4.0
    effective_focal: float = 15.0
    lambda_0: float = 810.0

    def __post_init__(self):
        if self.mode not in PLANES:
            raise DomainError(f"imaging mode must be one of {PLANES}, got {self.mode!r}")
        if not self.magnification > 0:
            raise DomainError(f"magnification must be positive, got {self.magnification}")
        if not self.effective_focal > 0:
            raise DomainError(f"effective focal length must be positive, got {self.effective_focal}")
        if not self.lambda_0 > 0:
            raise DomainError(f"lambda_0 must be positive, got {self.lambda_0}")

    @property
    def basis(self) -> str:
        return POSITION if self.mode == IMAGE else MOMENTUM

    @property
    def k0(self) -> float:
        """Free-space wavenumber in rad/um."""
        return 2.0 * math.pi / (self.lambda_0 * 1e-3)

    @property
    def focal_um(self) -> float:
        return self.effective_focal * 1e4

    @property
    def scale(self) -> float:
        """Camera micrometres per crystal-plane unit."""
        if self.mode == IMAGE:
            return self.magnification
        return self.focal_um / (self.k0 * HBAR)


@dataclass(frozen=True)
class CameraConfig:
    """Pixelated detector.

    ``exposure_scale`` is the expected photon count at the brightest pixel of
    a frame pair; acquisition time is folded into it.
    """

    n_pixels: int = 512
    pixel_pitch: float = 16.0
    exposure_scale: float = 20000.0
    read_noise_sigma: float = 10.0
    dark_rate: float = 5.0
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.n_pixels) != self.n_pixels or self.n_pixels <= 0 or self.n_pixels % 2:
            raise DomainError(f"n_pixels must be a positive even integer, got {self.n_pixels}")
        if not self.pixel_pitch > 0:
            raise DomainError(f"pixel pitch must be positive, got {self.pixel_pitch}")
        if not self.exposure_scale >= 0:
            raise DomainError(f"exposure_scale must be >= 0, got {self.exposure_scale}")
        if not self.read_noise_sigma >= 0 or not self.dark_rate >= 0:
            raise DomainError("read noise and dark rate must be >= 0")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise DomainError(f"rng_seed must be a non-negative integer, got {self.rng_seed}")

    @property
    def axis(self) -> Grid1D:
        return Grid1D(self.n_pixels, self.pixel_pitch, UNIT_POSITION)


@dataclass(eq=False)
class Interferogram:
    counts: np.ndarray
    delta: float
    k1: float
    k2: float
    plane: str
    pixel_pitch: float
    detected: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise DomainError(f"interferogram must be a square image, got {self.counts.shape}")
        if self.plane not in PLANES:
            raise DomainError(f"unknown plane {self.plane!r}")

    @property
    def axis(self) -> Grid1D:
        return Grid1D(self.counts.shape[1], self.pixel_pitch, UNIT_POSITION)

    def scaled(self, factor: float) -> "Interferogram":
        return Interferogram(
            self.counts * factor, self.delta, self.k1, self.k2, self.plane,
            self.pixel_pitch, self.detected, dict(self.meta),
        )


def map_to_camera(axis: Grid1D, config: ImagingConfig) -> Grid1D:
    """Crystal-plane axis expressed as camera positions in um."""
    if axis.basis != config.basis:
        raise DomainError(
            f"{config.mode}-plane imaging maps {config.basis} axes, got an axis in {axis.unit}"
        )
    return Grid1D(axis.n, axis.spacing * config.scale, UNIT_POSITION)


def camera_to_crystal(axis: Grid1D, config: ImagingConfig) -> Grid1D:
    """Inverse of :func:`map_to_camera`."""
    unit = UNIT_POSITION if config.mode == IMAGE else UNIT_MOMENTUM
    return Grid1D(axis.n, axis.spacing / config.scale, unit)


def interferometer_frame(
    field_intensity,
    cross_spectral,
    delta,
    k1=0.25,
    k2=0.25,
    *,
    plane=IMAGE,
    pixel_pitch=16.0,
    inversion=FULL_INVERSION,
) -> Interferogram:
    """Noiseless output intensity of the inversion interferometer.

    Parameters
    ----------
    field_intensity : (n, n) array
        Single-arm intensity ``I[y, x]`` on an inversion-symmetric camera grid.
    cross_spectral : (n, n) array
        ``W`` between each pixel and its inverted partner, already evaluated
        for the chosen ``inversion``.
    delta : float
        Phase difference between the arms (rad).
    k1, k2 : float
        Arm transmission constants.
    inversion : {"full", "x"}
        Invert both camera axes or only x.
    """
    intensity = np.asarray(field_intensity, dtype=float)
    w = np.asarray(cross_spectral)
    if intensity.shape != w.shape:
        raise DomainError("intensity and cross-spectral maps must share a grid")
    if np.iscomplexobj(w):
        w = w.real
    if inversion == FULL_INVERSION:
        inverted = intensity[::-1, ::-1]
    elif inversion == X_INVERSION:
        inverted = intensity[:, ::-1]
    else:
        raise DomainError(f"unknown inversion {inversion!r}")
    arms = k1 * intensity + k2 * inverted
    frame = arms + 2.0 * math.sqrt(k1 * k2) * w * math.cos(delta)
    if frame.min() < -1e-12 * np.abs(arms).max():
        raise ModelInconsistencyError(
            "negative intensity in interferogram: W exceeds the geometric mean "
            "of the arm intensities"
        )
    return Interferogram(np.clip(frame, 0.0, None), float(delta), k1, k2, plane, pixel_pitch)


def noise_generator(seed: int, frame_id: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by ``(seed, frame_id)``."""
    key = np.array([seed, frame_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def detect(frame: Interferogram, cam: CameraConfig, frame_id: int = 0) -> Interferogram:
    """Turn a noiseless frame into camera counts.

    Each pixel receives ``Poisson(exposure_scale * I + dark_rate)`` photons
    plus Gaussian read noise, clamped at zero.  ``I`` is the frame in units
    of the brightest pixel.  Draws are a pure function of ``cam.rng_seed``
    and ``frame_id``.
    """
    rng = noise_generator(cam.rng_seed, frame_id)
    mean = cam.exposure_scale * frame.counts + cam.dark_rate
    counts = rng.poisson(mean).astype(float)
    if cam.read_noise_sigma > 0:
        counts += cam.read_noise_sigma * rng.standard_normal(counts.shape)
    meta = dict(frame.meta, frame_id=frame_id, seed=cam.rng_seed)
    return Interferogram(
        np.clip(counts, 0.0, None), frame.delta, frame.k1, frame.k2, frame.plane,
        frame.pixel_pitch, True, meta,
    )


def integration_axis(params: DoubleGaussianParams, axis: Grid1D, samples_per_width: float = 6.0,
                     tail_widths: float = 8.0) -> Grid1D:
    """Axis for the unobserved photon that covers every row of ``axis``.

    At fixed ``a`` the double-Gaussian amplitude is a Gaussian in ``b``
    centred within ``|b| <= |a|`` with amplitude width ``width``; the axis
    spans the extreme centres plus ``tail_widths`` widths at
    ``samples_per_width`` samples per width.
    """
    sp, sm = params.sigma_p, params.sigma_minus
    if axis.basis == POSITION:
        width = math.sqrt(2.0) * sp * sm / math.hypot(sp, sm)
    else:
        width = math.sqrt(2.0) * HBAR / math.hypot(sp, sm)
    half = axis.half_extent + tail_widths * width
    spacing = width / samples_per_width
    n = 2 * math.ceil(half / spacing)
    return Grid1D(n, 2.0 * half / n, axis.unit)


def photon_profiles(params: DoubleGaussianParams, axis: Grid1D, photon: int = 1):
    """Marginal intensity and real ``W(a, -a)`` of one photon on ``axis``."""
    other = integration_axis(params, axis)
    if photon == 1:
        state = make_double_gaussian(params, axis, other, min_samples=1.0, min_extent=0.0)
    else:
        state = make_double_gaussian(params, other, axis, min_samples=1.0, min_extent=0.0)
    intensity = marginal_intensity(state, photon).values
    w = cross_spectral_density(state, photon).values.real
    return intensity, w


def _frame_maps(intensity, w, inversion):
    intensity_2d = np.outer(intensity, intensity)
    if inversion == FULL_INVERSION:
        w_2d = np.outer(w, w)
    else:
        # W(x, y, -x, y) = W_x(x, -x) * I_y(y) for an x-y product state.
        w_2d = np.outer(intensity, w)
    return intensity_2d, w_2d


def simulate_experiment(
    params: DoubleGaussianParams,
    imaging: ImagingConfig,
    cam: CameraConfig,
    delta_c: float = 0.0,
    delta_d: float = math.pi,
    *,
    k1: float = 0.25,
    k2: float = 0.25,
    inversion: str = FULL_INVERSION,
    noiseless: bool = False,
):
    """Interferogram pair at ``delta_c`` and ``delta_d`` for one lens configuration.

    Signal and idler are collinear, so each camera frame is the sum of both
    photons' interferograms.  The noiseless pair is scaled so its brightest
    pixel is 1; unless ``noiseless`` is set, both frames then go through
    :func:`detect`.
    """
    camera_axis = cam.axis
    crystal_axis = camera_to_crystal(camera_axis, imaging)
    frames = []
    for delta in (delta_c, delta_d):
        total = None
        for photon in (1, 2):
            intensity, w = photon_profiles(params, crystal_axis, photon)
            i2, w2 = _frame_maps(intensity, w, inversion)
            frame = interferometer_frame(
                i2, w2, delta, k1, k2, plane=imaging.mode,
                pixel_pitch=cam.pixel_pitch, inversion=inversion,
            )
            total = frame if total is None else Interferogram(
                total.counts + frame.counts, delta, k1, k2, imaging.mode, cam.pixel_pitch
            )
        frames.append(total)
    peak = max(f.counts.max() for f in frames)
    if peak <= 0.0:
        raise ModelInconsistencyError("simulated frames carry no light")
    frames = [f.scaled(1.0 / peak) for f in frames]
    if noiseless:
        return frames[0], frames[1]
    ids = (FRAME_IDS[(imaging.mode, "c")], FRAME_IDS[(imaging.mode, "d")])
    return tuple(detect(f, cam, fid) for f, fid in zip(frames, ids))
