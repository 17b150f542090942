"""Run configuration: sectioned ``key = value`` text.

Every key is optional; omitted keys take the values of the type-I BBO
experiment (388 um pump waist, 2 mm crystal, 405 nm pump, M = 4,
f_e = 15 cm, 512 x 512 camera).  ``sigma_minus_um``, when given, overrides
the value derived from crystal length and pump wavelength.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

from .biphoton import DoubleGaussianParams, sigma_minus
from .exceptions import ConfigError
from .instrument import FOURIER, FULL_INVERSION, IMAGE, X_INVERSION, CameraConfig, ImagingConfig

# section -> key -> RunConfig field
SCHEMA = {
    "physics": {
        "sigma_p_um": "sigma_p",
        "crystal_length_mm": "crystal_length",
        "lambda_p_nm": "lambda_p",
        "lambda_0_nm": "lambda_0",
        "sigma_minus_um": "sigma_minus",
    },
    "imaging": {
        "magnification": "magnification",
        "effective_focal_cm": "effective_focal",
        "inversion": "inversion",
    },
    "interferometer": {
        "k1": "k1",
        "k2": "k2",
        "delta_c": "delta_c",
        "delta_d": "delta_d",
    },
    "camera": {
        "n_pixels": "n_pixels",
        "pixel_pitch_um": "pixel_pitch",
        "exposure_scale": "exposure_scale",
        "read_noise_sigma": "read_noise_sigma",
        "dark_rate": "dark_rate",
    },
    "run": {
        "seed": "seed",
        "seeds": "seeds",
        "noiseless": "noiseless",
        "output_dir": "output_dir",
    },
    "grid": {
        "n": "grid_n",
    },
}


@dataclass(frozen=True)
class RunConfig:
    sigma_p: float = 388.0
    crystal_length: Optional[float] = 2.0
    lambda_p: Optional[float] = 405.0
    lambda_0: float = 810.0
    sigma_minus: Optional[float] = None
    magnification: float = 4.0
    effective_focal: float = 15.0
    inversion: str = FULL_INVERSION
    k1: float = 0.25
    k2: float = 0.25
    delta_c: float = 0.0
    delta_d: float = math.pi
    n_pixels: int = 512
    pixel_pitch: float = 16.0
    exposure_scale: float = 20000.0
    read_noise_sigma: float = 10.0
    dark_rate: float = 5.0
    seed: int = 0
    seeds: int = 100
    noiseless: bool = False
    output_dir: str = "out"
    grid_n: int = 2048

    def validate(self):
        """Return ``(violations, warnings)`` as lists of text lines."""
        bad, warn = [], []

        def positive(name, value):
            if value is None or not isinstance(value, (int, float)) or not value > 0 or not math.isfinite(value):
                bad.append(f"{name} must be a positive number, got {value!r}")

        positive("physics.sigma_p_um", self.sigma_p)
        positive("physics.lambda_0_nm", self.lambda_0)
        if self.sigma_minus is not None:
            positive("physics.sigma_minus_um", self.sigma_minus)
            if self.crystal_length is not None and self.lambda_p is not None:
                warn.append("physics.sigma_minus_um overrides the crystal-length derived value")
        else:
            if self.crystal_length is None or self.lambda_p is None:
                bad.append("physics needs crystal_length_mm and lambda_p_nm, or sigma_minus_um")
            else:
                positive("physics.crystal_length_mm", self.crystal_length)
                positive("physics.lambda_p_nm", self.lambda_p)
        positive("imaging.magnification", self.magnification)
        positive("imaging.effective_focal_cm", self.effective_focal)
        if self.inversion not in (FULL_INVERSION, X_INVERSION):
            bad.append(f"imaging.inversion must be 'full' or 'x', got {self.inversion!r}")
        positive("interferometer.k1", self.k1)
        positive("interferometer.k2", self.k2)
        for name in ("delta_c", "delta_d"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                bad.append(f"interferometer.{name} must be a finite number, got {value!r}")
        if not bad and math.cos(self.delta_c) == math.cos(self.delta_d):
            warn.append("interferometer.delta_c and delta_d give equal cos(delta); difference images vanish")
        if not isinstance(self.n_pixels, int) or self.n_pixels <= 0 or self.n_pixels % 2:
            bad.append(f"camera.n_pixels must be a positive even integer, got {self.n_pixels!r}")
        positive("camera.pixel_pitch_um", self.pixel_pitch)
        for name in ("exposure_scale", "read_noise_sigma", "dark_rate"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not value >= 0:
                bad.append(f"camera.{name} must be >= 0, got {value!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            bad.append(f"run.seed must be a non-negative integer, got {self.seed!r}")
        if not isinstance(self.seeds, int) or self.seeds < 1:
            bad.append(f"run.seeds must be a positive integer, got {self.seeds!r}")
        if not isinstance(self.noiseless, bool):
            bad.append(f"run.noiseless must be true or false, got {self.noiseless!r}")
        if not isinstance(self.grid_n, int) or self.grid_n < 16 or self.grid_n % 2:
            bad.append(f"grid.n must be an even integer >= 16, got {self.grid_n!r}")
        return bad, warn

    def checked(self) -> "RunConfig":
        bad, _ = self.validate()
        if bad:
            raise ConfigError(bad)
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def params(self) -> DoubleGaussianParams:
        sm = self.sigma_minus
        if sm is None:
            sm = sigma_minus(self.crystal_length, self.lambda_p)
        return DoubleGaussianParams(
            sigma_p=self.sigma_p,
            sigma_minus=sm,
            lambda_p=self.lambda_p,
            crystal_length=self.crystal_length,
            lambda_0=self.lambda_0,
        )

    def imaging(self, mode: str) -> ImagingConfig:
        return ImagingConfig(mode, self.magnification, self.effective_focal, self.lambda_0)

    @property
    def image_config(self) -> ImagingConfig:
        return self.imaging(IMAGE)

    @property
    def fourier_config(self) -> ImagingConfig:
        return self.imaging(FOURIER)

    def camera(self, seed: Optional[int] = None) -> CameraConfig:
        return CameraConfig(
            n_pixels=self.n_pixels,
            pixel_pitch=self.pixel_pitch,
            exposure_scale=self.exposure_scale,
            read_noise_sigma=self.read_noise_sigma,
            dark_rate=self.dark_rate,
            rng_seed=self.seed if seed is None else seed,
        )

    def echo(self) -> dict:
        """All settings as ``{section: {key: value}}``; ``None`` becomes ''."""
        out = {}
        for section, keys in SCHEMA.items():
            out[section] = {}
            for key, name in keys.items():
                value = getattr(self, name)
                out[section][key] = "" if value is None else value
        return out

    @classmethod
    def from_sections(cls, sections: dict) -> "RunConfig":
        """Build from ``{section: {key: text-or-value}}``, rejecting unknown keys."""
        bad = []
        values = {}
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for section, entries in sections.items():
            if section not in SCHEMA:
                bad.append(f"unknown section [{section}]")
                continue
            for key, raw in entries.items():
                name = SCHEMA[section].get(key)
                if name is None:
                    bad.append(f"unknown key {section}.{key}")
                    continue
                try:
                    values[name] = _coerce(raw, types[name])
                except ValueError:
                    bad.append(f"{section}.{key}: cannot parse {raw!r}")
        if bad:
            raise ConfigError(bad)
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError([f"{path}: {exc}"]) from None
        return cls.from_sections({s: dict(parser[s]) for s in parser.sections()})


def _coerce(raw, kind):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if kind.startswith("Optional"):
        if text == "":
            return None
        kind = kind[len("Optional["):-1]
    if kind == "bool":
        lowered = text.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValueError(text)
    if kind == "int":
        return int(text)
    if kind == "float":
        if text.lower() == "pi":
            return math.pi
        return float(text)
    return text
