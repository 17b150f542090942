"""Pure two-photon transverse states sampled on 1D x 1D grids.

Positions are in micrometres and transverse momenta in units of
hbar * rad / um, so hbar = 1 internally.  Every grid has an even number of
samples placed at half-integer offsets, ``x_i = (i - n/2 + 1/2) * dx``, which
makes the inversion ``x -> -x`` the exact index reversal ``i -> n - 1 - i``.

One transverse dimension is stored per amplitude.  The double-Gaussian SPDC
state factorizes in x and y, so a full transverse state is the tensor
product of two such amplitudes.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import (
    DegenerateStateError,
    DomainError,
    ResolutionError,
    ResolutionWarning,
)

HBAR = 1.0

POSITION = "position"
MOMENTUM = "momentum"
BASES = (POSITION, MOMENTUM)

UNIT_POSITION = "um"
UNIT_MOMENTUM = "hbar/um"
UNITS = {POSITION: UNIT_POSITION, MOMENTUM: UNIT_MOMENTUM}

# Gaussian approximation of the sinc phase-matching function.
PHASE_MATCHING_FACTOR = 0.455


@dataclass(frozen=True)
class Grid1D:
    """Uniform, inversion-symmetric sampling axis.

    Parameters
    ----------
    n : int
        Number of samples, positive and even.
    spacing : float
        Sample spacing in ``unit``.
    unit : str
        ``"um"`` for positions or ``"hbar/um"`` for momenta.
    """

    n: int
    spacing: float
    unit: str = UNIT_POSITION

    def __post_init__(self):
        if int(self.n) != self.n or self.n <= 0 or self.n % 2:
            raise DomainError(f"grid size must be a positive even integer, got {self.n}")
        if not self.spacing > 0 or not math.isfinite(self.spacing):
            raise DomainError(f"grid spacing must be positive, got {self.spacing}")
        if self.unit not in UNITS.values():
            raise DomainError(f"unknown grid unit {self.unit!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def basis(self) -> str:
        return POSITION if self.unit == UNIT_POSITION else MOMENTUM

    @property
    def coords(self) -> np.ndarray:
        return (np.arange(self.n) - (self.n - 1) / 2.0) * self.spacing

    @property
    def half_extent(self) -> float:
        """Distance from the axis centre to the outer sample edge."""
        return 0.5 * self.n * self.spacing

    def conjugate(self) -> "Grid1D":
        """Reciprocal axis with ``dx * dp * n = 2 pi hbar``."""
        other = MOMENTUM if self.basis == POSITION else POSITION
        return Grid1D(self.n, 2.0 * math.pi * HBAR / (self.n * self.spacing), UNITS[other])


@dataclass(frozen=True)
class DoubleGaussianParams:
    """Double-Gaussian SPDC state parameters.

    Parameters
    ----------
    sigma_p : float
        Pump beam waist at the crystal (um).
    sigma_minus : float
        Two-photon correlation width (um).
    lambda_p : float, optional
        Pump wavelength (nm).
    crystal_length : float, optional
        Crystal length (mm).
    lambda_0 : float, optional
        Down-converted wavelength (nm); twice ``lambda_p`` when omitted
        (degenerate collinear down-conversion).
    """

    sigma_p: float
    sigma_minus: float
    lambda_p: Optional[float] = None
    crystal_length: Optional[float] = None
    lambda_0: Optional[float] = None

    def __post_init__(self):
        if not self.sigma_p > 0:
            raise DomainError(f"sigma_p must be positive, got {self.sigma_p}")
        if not self.sigma_minus > 0:
            raise DomainError(f"sigma_minus must be positive, got {self.sigma_minus}")
        for name in ("lambda_p", "crystal_length", "lambda_0"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise DomainError(f"{name} must be positive, got {value}")
        if self.lambda_0 is None and self.lambda_p is not None:
            object.__setattr__(self, "lambda_0", 2.0 * self.lambda_p)

    @classmethod
    def from_crystal(cls, sigma_p, crystal_length, lambda_p, lambda_0=None):
        """Build the state from pump waist (um), crystal length (mm) and pump wavelength (nm)."""
        return cls(
            sigma_p=sigma_p,
            sigma_minus=sigma_minus(crystal_length, lambda_p),
            lambda_p=lambda_p,
            crystal_length=crystal_length,
            lambda_0=lambda_0,
        )

    @classmethod
    def type1_bbo(cls):
        """The type-I BBO experiment: 388 um waist, 2 mm crystal, 405 nm pump, 810 nm filter."""
        return cls.from_crystal(388.0, 2.0, 405.0, 810.0)


@dataclass(eq=False)
class BiphotonAmplitude:
    """Complex joint amplitude ``values[i, j] = psi(a_i, b_j)``.

    ``a`` runs along ``axis1`` (photon 1, the signal) and ``b`` along
    ``axis2`` (photon 2, the idler).
    """

    values: np.ndarray
    axis1: Grid1D
    axis2: Grid1D
    basis: str = field(default=POSITION)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.basis not in BASES:
            raise DomainError(f"unknown basis {self.basis!r}")
        if self.values.shape != (self.axis1.n, self.axis2.n):
            raise DomainError(
                f"amplitude shape {self.values.shape} does not match axes "
                f"({self.axis1.n}, {self.axis2.n})"
            )
        unit = UNITS[self.basis]
        if self.axis1.unit != unit or self.axis2.unit != unit:
            raise DomainError(f"axes of a {self.basis} amplitude must be in {unit}")

    @property
    def cell(self) -> float:
        """Area element of one grid cell."""
        return self.axis1.spacing * self.axis2.spacing

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.cell)

    def transpose(self) -> "BiphotonAmplitude":
        """Exchange the roles of the two photons."""
        return BiphotonAmplitude(self.values.T.copy(), self.axis2, self.axis1, self.basis)

    def with_values(self, values) -> "BiphotonAmplitude":
        return BiphotonAmplitude(values, self.axis1, self.axis2, self.basis)


def sigma_minus(crystal_length, lambda_p):
    """Correlation width sqrt(0.455 L lambda_p / 2 pi) in um.

    Parameters
    ----------
    crystal_length : float
        Crystal length L in mm.
    lambda_p : float
        Pump wavelength in nm.
    """
    if not crystal_length > 0 or not lambda_p > 0:
        raise DomainError(
            f"crystal length and pump wavelength must be positive, got "
            f"L={crystal_length} mm, lambda_p={lambda_p} nm"
        )
    length_um = crystal_length * 1e3
    wavelength_um = lambda_p * 1e-3
    return math.sqrt(PHASE_MATCHING_FACTOR * length_um * wavelength_um / (2.0 * math.pi))


def normalize(state: BiphotonAmplitude) -> BiphotonAmplitude:
    """Rescale to unit L2 norm on the grid."""
    norm = state.norm()
    if norm == 0.0 or not math.isfinite(norm):
        raise DegenerateStateError("cannot normalize an all-zero (or non-finite) amplitude")
    return state.with_values(state.values / norm)


def _length_scales(params: DoubleGaussianParams, basis: str):
    """Finest and widest Gaussian scales of the state in ``basis`` units."""
    sp, sm = params.sigma_p, params.sigma_minus
    if basis == POSITION:
        return min(sp, sm), max(sp, sm)
    return HBAR / max(sp, sm), HBAR / min(sp, sm)


def make_double_gaussian(
    params: DoubleGaussianParams,
    axis1: Grid1D,
    axis2: Grid1D,
    basis: Optional[str] = None,
    *,
    min_samples: float = 4.0,
    min_extent: float = 3.0,
) -> BiphotonAmplitude:
    """Sample the normalized double-Gaussian SPDC amplitude.

    Momentum basis::

        exp(-(p1 + p2)^2 sigma_p^2 / 4) exp(-(p1 - p2)^2 sigma_minus^2 / 4)

    Position basis::

        exp(-(x1 + x2)^2 / 4 sigma_p^2) exp(-(x1 - x2)^2 / 4 sigma_minus^2)

    Parameters
    ----------
    params : DoubleGaussianParams
    axis1, axis2 : Grid1D
        Axes of photon 1 and photon 2, both in the units of ``basis``.
    basis : {"position", "momentum"}, optional
        Inferred from ``axis1`` when omitted.
    min_samples : float
        Required samples per finest Gaussian scale (``min(sigma_p,
        sigma_minus)`` in position, ``hbar / max(sigma_p, sigma_minus)`` in
        momentum) on each axis.  Coarser axes raise ``ResolutionError``.
    min_extent : float
        Half-extent of each axis, in units of the widest scale, below which a
        ``ResolutionWarning`` is issued.
    """
    basis = basis or axis1.basis
    if basis not in BASES:
        raise DomainError(f"unknown basis {basis!r}")
    finest, widest = _length_scales(params, basis)
    for axis in (axis1, axis2):
        if axis.basis != basis:
            raise DomainError(f"axis in {axis.unit} cannot carry a {basis} amplitude")
        samples = finest / axis.spacing
        if samples < min_samples:
            raise ResolutionError(
                f"{basis} grid spacing {axis.spacing:.4g} {axis.unit} gives "
                f"{samples:.2f} samples per finest scale {finest:.4g}; "
                f"need >= {min_samples}"
            )
        if axis.half_extent < min_extent * widest:
            warnings.warn(
                f"{basis} grid half-extent {axis.half_extent:.4g} {axis.unit} is "
                f"below {min_extent} x widest scale {widest:.4g}",
                ResolutionWarning,
                stacklevel=2,
            )

    a = axis1.coords[:, None]
    b = axis2.coords[None, :]
    sp, sm = params.sigma_p, params.sigma_minus
    if basis == MOMENTUM:
        exponent = -((a + b) ** 2) * sp**2 / (4 * HBAR**2) - (a - b) ** 2 * sm**2 / (4 * HBAR**2)
    else:
        exponent = -((a + b) ** 2) / (4 * sp**2) - (a - b) ** 2 / (4 * sm**2)
    return normalize(BiphotonAmplitude(np.exp(exponent), axis1, axis2, basis))


def oracle_axis(params: DoubleGaussianParams, n: int = 2048, basis: str = POSITION) -> Grid1D:
    """Reciprocal grid pair sized for ``params``.

    The position axis spans ``+/- 5 sqrt(sigma_p^2 + sigma_minus^2)``; on
    every edge of the square grid the position amplitude is then below
    ``exp(-25)`` of its peak, and for ``n`` large enough the conjugate
    momentum grid decays at least as fast.  For the 388 um pump on a 2 mm crystal this gives
    1.89 um spacing (4 samples per sigma_minus) on 2048 points.
    """
    spacing = 10.0 * math.hypot(params.sigma_p, params.sigma_minus) / n
    axis = Grid1D(n, spacing, UNIT_POSITION)
    return axis if basis == POSITION else axis.conjugate()


def _fourier_factors(axis: Grid1D, sign: int):
    """Pre- and post-phase vectors for the centred DFT of one axis.

    With ``c = (n - 1) / 2`` the kernel ``exp(sign * 2 pi i (k - c)(j - c) / n)``
    splits into ``exp(sign * 2 pi i (c^2 - c k - c j) / n) exp(sign * 2 pi i k j / n)``.
    Phases are reduced with integer arithmetic so large ``n`` keeps full
    precision.
    """
    n = axis.n
    idx = np.arange(n)
    # c * m / n = (n - 1) m / (2 n)
    ramp = np.exp(sign * 2j * np.pi * (((n - 1) * idx) % (2 * n)) / (2 * n))
    # c^2 / n = (n - 1)^2 / (4 n)
    constant = np.exp(sign * 2j * np.pi * (((n - 1) ** 2) % (4 * n)) / (4 * n))
    return np.conj(ramp), np.conj(ramp) * constant


def _transform_axis(values: np.ndarray, axis: Grid1D, dim: int, sign: int) -> np.ndarray:
    pre, post = _fourier_factors(axis, sign)
    shape = [1, 1]
    shape[dim] = axis.n
    pre = pre.reshape(shape)
    post = post.reshape(shape)
    n = axis.n
    if sign > 0:
        summed = np.fft.ifft(values * pre, axis=dim) * n
    else:
        summed = np.fft.fft(values * pre, axis=dim)
    return axis.spacing / math.sqrt(2.0 * math.pi * HBAR) * post * summed


def fourier_pair(state: BiphotonAmplitude) -> BiphotonAmplitude:
    """Joint amplitude in the conjugate basis.

    Evaluates ``(1 / 2 pi hbar) iint psi(p1, p2) exp(i (p1 x1 + p2 x2) / hbar) dp1 dp2``
    (momentum to position) or its inverse (position to momentum) as a
    Riemann sum onto the reciprocal grids.  The discrete map is unitary, so
    norms are preserved and a round trip returns the input.
    """
    sign = +1 if state.basis == MOMENTUM else -1
    values = _transform_axis(state.values, state.axis1, 0, sign)
    values = _transform_axis(values, state.axis2, 1, sign)
    other = POSITION if state.basis == MOMENTUM else MOMENTUM
    _warn_on_edge_weight(state)
    return BiphotonAmplitude(
        values, state.axis1.conjugate(), state.axis2.conjugate(), other
    )


def _warn_on_edge_weight(state: BiphotonAmplitude, threshold: float = 1e-8):
    """Flag amplitudes that are not negligible at the grid boundary."""
    mag = np.abs(state.values)
    peak = mag.max()
    if peak == 0.0:
        return
    edge = max(mag[0].max(), mag[-1].max(), mag[:, 0].max(), mag[:, -1].max())
    if edge > threshold * peak:
        warnings.warn(
            f"amplitude reaches {edge / peak:.2e} of its peak at the grid edge; "
            "the discrete transform will alias",
            ResolutionWarning,
            stacklevel=3,
        )
