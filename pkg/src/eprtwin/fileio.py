"""On-disk formats.

* Text matrices: one ``#`` header line of ``key=value`` tokens followed by
  whitespace-separated rows at full (17 significant digit) precision.  These
  are lossless and are what the analysis reads back.
* Binary graymaps (P5, maxval 65535, big-endian): viewing copies only.
* Amplitudes: an ASCII header block ending in ``END`` followed by
  little-endian complex128 values in row-major order.
* Reports and configs: INI-style ``key = value`` text with sections.
* Profiles: two columns, coordinate and value.
"""
from __future__ import annotations

import configparser
import io
from pathlib import Path

import numpy as np

from .biphoton import BiphotonAmplitude, Grid1D
from .exceptions import DomainError
from .instrument import Interferogram

MATRIX_MAGIC = "eprtwin-matrix"
AMPLITUDE_MAGIC = b"EPRTWIN-AMPLITUDE 1\n"


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _parse_value(text: str):
    if text in ("true", "false"):
        return text == "true"
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def write_matrix(path, matrix, header: dict | None = None):
    matrix = np.asarray(matrix, dtype=float)
    tokens = [MATRIX_MAGIC, f"rows={matrix.shape[0]}", f"cols={matrix.shape[1]}"]
    tokens += [f"{k}={_format_value(v)}" for k, v in (header or {}).items()]
    buf = io.StringIO()
    buf.write("# " + " ".join(tokens) + "\n")
    np.savetxt(buf, matrix, fmt="%.17g")
    Path(path).write_text(buf.getvalue())


def read_matrix(path):
    """Return ``(matrix, header)`` from a text matrix file."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#") or MATRIX_MAGIC not in first:
            raise DomainError(f"{path} is not a text matrix file")
        header = {}
        for token in first[1:].split():
            if "=" in token:
                key, value = token.split("=", 1)
                header[key] = _parse_value(value)
        matrix = np.loadtxt(fh, dtype=float, ndmin=2)
    if matrix.shape != (header.get("rows"), header.get("cols")):
        raise DomainError(f"{path}: body shape {matrix.shape} disagrees with header")
    return matrix, header


def write_interferogram(path, frame: Interferogram):
    header = {
        "plane": frame.plane,
        "delta": float(frame.delta),
        "k1": float(frame.k1),
        "k2": float(frame.k2),
        "pixel_pitch_um": float(frame.pixel_pitch),
        "detected": frame.detected,
    }
    write_matrix(path, frame.counts, header)


def read_interferogram(path) -> Interferogram:
    counts, header = read_matrix(path)
    try:
        return Interferogram(
            counts,
            float(header["delta"]),
            float(header["k1"]),
            float(header["k2"]),
            str(header["plane"]),
            float(header["pixel_pitch_um"]),
            bool(header.get("detected", False)),
        )
    except KeyError as exc:
        raise DomainError(f"{path}: header lacks {exc.args[0]!r}") from None


def write_pgm(path, image, scale: float | None = None):
    """Write a 16-bit binary graymap.

    ``scale`` multiplies the image before rounding; by default detected
    counts are written as-is and fractional (noiseless) images are stretched
    so their maximum maps to 65535.  Values are clipped to [0, 65535].
    """
    image = np.asarray(image, dtype=float)
    if scale is None:
        peak = image.max()
        integral = np.array_equal(image, np.round(image))
        scale = 1.0 if (integral and peak <= 65535) or peak <= 0 else 65535.0 / peak
    data = np.clip(np.rint(image * scale), 0, 65535).astype(">u2")
    rows, cols = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        fields.append(raw[pos:end].decode("ascii"))
        pos = end
    if fields[0] != "P5":
        raise DomainError(f"{path} is not a binary graymap")
    cols, rows, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    dtype = ">u2" if maxval > 255 else "u1"
    body = raw[pos + 1:]
    return np.frombuffer(body, dtype=dtype, count=rows * cols).reshape(rows, cols)


def save_amplitude(path, state: BiphotonAmplitude):
    lines = [
        f"basis={state.basis}",
        f"n1={state.axis1.n}",
        f"spacing1={state.axis1.spacing!r}",
        f"unit1={state.axis1.unit}",
        f"n2={state.axis2.n}",
        f"spacing2={state.axis2.spacing!r}",
        f"unit2={state.axis2.unit}",
        "END",
    ]
    with open(path, "wb") as fh:
        fh.write(AMPLITUDE_MAGIC)
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(state.values, dtype="<c16").tobytes())


def load_amplitude(path) -> BiphotonAmplitude:
    with open(path, "rb") as fh:
        if fh.readline() != AMPLITUDE_MAGIC:
            raise DomainError(f"{path} is not an amplitude file")
        header = {}
        while True:
            line = fh.readline()
            if not line:
                raise DomainError(f"{path}: header is not terminated")
            line = line.decode("ascii").strip()
            if line == "END":
                break
            key, value = line.split("=", 1)
            header[key] = value
        body = fh.read()
    axis1 = Grid1D(int(header["n1"]), float(header["spacing1"]), header["unit1"])
    axis2 = Grid1D(int(header["n2"]), float(header["spacing2"]), header["unit2"])
    count = axis1.n * axis2.n
    values = np.frombuffer(body, dtype="<c16")
    if values.size != count:
        raise DomainError(f"{path}: expected {count} values, found {values.size}")
    return BiphotonAmplitude(values.reshape(axis1.n, axis2.n).astype(complex), axis1, axis2, header["basis"])


def write_profile(path, coords, values, header: str | None = None):
    data = np.column_stack([np.asarray(coords, float), np.asarray(values, float)])
    np.savetxt(path, data, fmt="%.17g", header=header or "", comments="# ")


def read_profile(path):
    data = np.loadtxt(path, ndmin=2)
    return data[:, 0], data[:, 1]


def write_sections(path, sections: dict):
    """Write ``{section: {key: value}}`` as INI text."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for name, entries in sections.items():
        parser[name] = {k: _format_value(v) for k, v in entries.items()}
    buf = io.StringIO()
    parser.write(buf)
    Path(path).write_text(buf.getvalue())


def read_sections(path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    return {name: {k: _parse_value(v) for k, v in parser[name].items()} for name in parser.sections()}


def report_sections(report) -> dict:
    """Report as INI sections: the stable keys plus the config echo."""
    sections = {"report": report.summary()}
    for name, entries in report.config.items():
        sections[f"config.{name}"] = entries
    return sections

