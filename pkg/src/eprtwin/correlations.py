"""Conditional distributions, cross-spectral densities and EPR witnesses.

Everything here works on a sampled ``BiphotonAmplitude``.  Integrals are
plain Riemann sums on the uniform grids; widths are second moments, never
fits, so these results serve as the oracle for the camera pipeline.

Values "at the origin" of the conditioning photon fall between the two
central samples of a half-offset grid.  They are obtained by band-limited
(trigonometric) interpolation of each row, which is exact for any
grid-resolved amplitude up to the truncation of its tails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .biphoton import HBAR, BiphotonAmplitude, DoubleGaussianParams, Grid1D
from .exceptions import DegenerateStateError, DomainError

UNIT_AREA = "unit-area"
MAX_ONE = "max-1"

HEISENBERG_BOUND = 0.5 * HBAR


@dataclass(eq=False)
class Distribution1D:
    """Nonnegative profile over one axis."""

    values: np.ndarray
    axis: Grid1D
    normalization: str = UNIT_AREA

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.axis.n,):
            raise DomainError("distribution length does not match its axis")
        if self.normalization not in (UNIT_AREA, MAX_ONE):
            raise DomainError(f"unknown normalization {self.normalization!r}")

    def area(self) -> float:
        return float(np.sum(self.values)) * self.axis.spacing

    def to_unit_area(self) -> "Distribution1D":
        area = self.area()
        if area <= 0.0:
            raise DegenerateStateError("distribution has no mass")
        return Distribution1D(self.values / area, self.axis, UNIT_AREA)

    def to_max_one(self) -> "Distribution1D":
        peak = self.values.max()
        if peak <= 0.0:
            raise DegenerateStateError("distribution has no positive maximum")
        return Distribution1D(self.values / peak, self.axis, MAX_ONE)


@dataclass(eq=False)
class CrossSpectralSlice:
    """Anti-diagonal ``W(a, -a)`` of one photon's cross-spectral density."""

    values: np.ndarray
    axis: Grid1D
    basis: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)

    def magnitude(self) -> Distribution1D:
        return Distribution1D(np.abs(self.values), self.axis, UNIT_AREA)


@dataclass(frozen=True)
class ConditionReport:
    satisfied: bool
    ratio_dispersion: float
    mask_fraction: float
    tolerance: float

    def to_text(self) -> str:
        return (
            f"satisfied = {str(self.satisfied).lower()}\n"
            f"ratio_dispersion = {self.ratio_dispersion!r}\n"
            f"mask_fraction = {self.mask_fraction!r}\n"
            f"tolerance = {self.tolerance!r}\n"
        )


class WitnessResult(NamedTuple):
    violates: bool
    margin: float


def _check_photon(photon):
    if photon not in (1, 2):
        raise DomainError(f"photon must be 1 or 2, got {photon}")


def origin_weights(axis: Grid1D) -> np.ndarray:
    """Weights ``w`` with ``f(0) = w @ f(axis.coords)`` for band-limited ``f``.

    This is the periodic Dirichlet kernel evaluated half a sample away from
    each node; the Nyquist term drops out because it vanishes at the centre
    of an even half-offset grid.
    """
    n = axis.n
    u = np.arange(n) - (n - 1) / 2.0
    return np.sin(np.pi * (n - 1) * u / n) / (n * np.sin(np.pi * u / n))


def slice_at_origin(state: BiphotonAmplitude, photon: int = 1) -> np.ndarray:
    """``psi(a, b = 0)`` along photon ``photon``'s axis (the other photon at 0)."""
    _check_photon(photon)
    if photon == 1:
        return state.values @ origin_weights(state.axis2)
    return origin_weights(state.axis1) @ state.values


def _photon_view(state: BiphotonAmplitude, photon: int):
    """Values with the requested photon on axis 0, plus both axes."""
    _check_photon(photon)
    if photon == 1:
        return state.values, state.axis1, state.axis2
    return state.values.T, state.axis2, state.axis1


def conditional_distribution(state: BiphotonAmplitude, conditioned_photon: int = 1) -> Distribution1D:
    """``P(a | b = 0) = |psi(a, b = 0)|^2`` for photon ``conditioned_photon``.

    The other photon is the one fixed at the origin.  Returned with unit area.
    """
    _, axis, _ = _photon_view(state, conditioned_photon)
    values = np.abs(slice_at_origin(state, conditioned_photon)) ** 2
    if not np.any(values > 0):
        raise DegenerateStateError("conditional slice is identically zero")
    return Distribution1D(values, axis).to_unit_area()


def marginal_intensity(state: BiphotonAmplitude, photon: int = 1) -> Distribution1D:
    """Single-photon intensity ``I(a) = int |psi(a, b)|^2 db``."""
    values, axis, other = _photon_view(state, photon)
    return Distribution1D(np.sum(np.abs(values) ** 2, axis=1) * other.spacing, axis)


def cross_spectral_density(state: BiphotonAmplitude, photon: int = 1) -> CrossSpectralSlice:
    """``W(a, -a) = int psi*(a, b) psi(-a, b) db`` for photon ``photon``."""
    values, axis, other = _photon_view(state, photon)
    w = np.sum(np.conj(values) * values[::-1, :], axis=1) * other.spacing
    return CrossSpectralSlice(w, axis, state.basis)


def check_factorization_condition(
    state: BiphotonAmplitude, tol: float = 1e-3, mask_eps: float = 1e-4
) -> ConditionReport:
    """Test ``psi*(a, b) psi(-a, b) ∝ |psi(a, 0) psi(0, b)|^2`` over the grid.

    The ratio of the two sides is formed wherever the right-hand side exceeds
    ``mask_eps`` times its maximum.  The condition holds when the complex
    relative dispersion ``std(r) / |mean(r)|`` stays below ``tol``.
    """
    lhs = np.conj(state.values) * state.values[::-1, :]
    rhs = np.abs(np.outer(slice_at_origin(state, 1), slice_at_origin(state, 2))) ** 2
    peak = rhs.max()
    if peak <= 0.0:
        raise DegenerateStateError("right-hand side vanishes everywhere")
    mask = rhs > mask_eps * peak
    if not mask.any():
        raise DegenerateStateError("evaluation mask is empty")
    ratio = lhs[mask] / rhs[mask]
    mean = ratio.mean()
    spread = math.sqrt(float(np.mean(np.abs(ratio - mean) ** 2)))
    dispersion = spread / abs(mean) if abs(mean) > 0 else math.inf
    return ConditionReport(
        satisfied=bool(dispersion < tol),
        ratio_dispersion=dispersion,
        mask_fraction=float(mask.mean()),
        tolerance=tol,
    )


def mean(dist: Distribution1D) -> float:
    mass = float(np.sum(dist.values))
    if mass <= 0.0:
        raise DegenerateStateError("distribution has zero mass")
    return float(np.sum(dist.axis.coords * dist.values)) / mass


def standard_deviation(dist: Distribution1D) -> float:
    """Second-moment width ``sqrt(<a^2> - <a>^2)`` by grid quadrature."""
    mass = float(np.sum(dist.values))
    if mass <= 0.0:
        raise DegenerateStateError("distribution has zero mass")
    a = dist.axis.coords
    first = float(np.sum(a * dist.values)) / mass
    second = float(np.sum((a - first) ** 2 * dist.values)) / mass
    return math.sqrt(second)


def uncertainty_product(dx: float, dp: float) -> float:
    """``U = Delta(x1 | x2 = 0) * Delta(p1 | p2 = 0)`` in units of hbar."""
    if not dx > 0 or not dp > 0:
        raise DomainError(f"uncertainties must be positive, got dx={dx}, dp={dp}")
    return dx * dp


def epr_witness(U: float, rtol: float = 1e-9) -> WitnessResult:
    """Compare ``U`` against the separable-state bound of hbar / 2.

    A violation requires ``U`` below the bound by more than ``rtol`` of
    it, so a separable state whose computed product rounds a few ulp under
    hbar / 2 is not reported as entangled.
    """
    if not U > 0:
        raise DomainError(f"uncertainty product must be positive, got {U}")
    violates = U < HEISENBERG_BOUND * (1.0 - rtol)
    return WitnessResult(violates=bool(violates), margin=HEISENBERG_BOUND - U)


def schmidt_number(state: BiphotonAmplitude) -> float:
    """``K = (sum lambda)^2 / sum lambda^2`` over the Schmidt coefficients.

    The coefficients are the squared singular values of the amplitude
    matrix scaled by ``sqrt(da * db)``, i.e. the eigenvalues of the reduced
    density operator.
    """
    s = np.linalg.svd(state.values * math.sqrt(state.cell), compute_uv=False)
    lam = s**2
    return float(np.sum(lam) ** 2 / np.sum(lam**2))


def transverse_schmidt_number(state_x: BiphotonAmplitude, state_y: BiphotonAmplitude | None = None) -> float:
    """Schmidt number of the full two-axis transverse state ``psi_x * psi_y``.

    Schmidt numbers multiply over tensor factors; ``state_y`` defaults to
    ``state_x`` for the rotationally symmetric double Gaussian.
    """
    k_x = schmidt_number(state_x)
    return k_x * (k_x if state_y is None else schmidt_number(state_y))


def schmidt_spectrum(state: BiphotonAmplitude) -> np.ndarray:
    s = np.linalg.svd(state.values * math.sqrt(state.cell), compute_uv=False)
    lam = s**2
    return lam / lam.sum()


# Closed forms for the double-Gaussian family.

def conditional_position_width(params: DoubleGaussianParams) -> float:
    sp, sm = params.sigma_p, params.sigma_minus
    return sp * sm / math.sqrt(sp**2 + sm**2)


def conditional_momentum_width(params: DoubleGaussianParams) -> float:
    sp, sm = params.sigma_p, params.sigma_minus
    return HBAR / math.sqrt(sp**2 + sm**2)


def theoretical_uncertainty_product(params: DoubleGaussianParams) -> float:
    return uncertainty_product(
        conditional_position_width(params), conditional_momentum_width(params)
    )


def double_gaussian_schmidt_number(params: DoubleGaussianParams, transverse_dims: int = 1) -> float:
    """``(r + 1/r) / 2`` per transverse axis, ``r = sigma_p / sigma_minus``.

    With ``transverse_dims=2`` this is ``(r + 1/r)^2 / 4`` for the x-y state.
    """
    ratio = params.sigma_p / params.sigma_minus
    return ((ratio + 1.0 / ratio) / 2.0) ** transverse_dims


def chirp(state: BiphotonAmplitude, alpha: float) -> BiphotonAmplitude:
    """Multiply by the non-factorizable phase ``exp(i alpha a b)``."""
    phase = np.exp(1j * alpha * np.outer(state.axis1.coords, state.axis2.coords))
    return state.with_values(state.values * phase)
