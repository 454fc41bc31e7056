"""Core hyperspectral data types and white-reference calibration arithmetic.

Cubes are stored pixel-major with the spectral axis innermost:
``values[i, j, k]`` addresses row ``i``, column ``j``, band ``k``.  All
types are immutable after construction (arrays are exposed as read-only
views) and every operation is a pure function, so instances can be shared
freely across threads.

Calibration is pure elementwise division by the white reference; dark-frame
subtraction is deliberately out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "EPS_WHITE",
    "F32_WHITE_FLOOR",
    "WavelengthGrid",
    "Spectrum",
    "HsiCube",
    "WhiteRefImage",
    "default_full_grid",
    "default_desk_grid",
    "calibrate",
    "simulate_raw",
    "mean_spectrum",
    "l1_normalize",
    "quantize_single",
]

EPS_WHITE = 1e-6
"""Smallest admissible white-reference value, in normalized intensity units.

Values below this are rejected rather than clamped: a white tile reading
this low means the acquisition was over- or under-exposed, and silently
"repairing" it would hide that failure from the user.
"""

# Smallest float32 that is >= EPS_WHITE.  Generators that floor white
# references and then store them in the single-precision file payload must
# floor at this value, otherwise the stored value rounds below EPS_WHITE
# and the file no longer loads as a valid white reference.
F32_WHITE_FLOOR = (
    float(np.float32(EPS_WHITE))
    if float(np.float32(EPS_WHITE)) >= EPS_WHITE
    else float(np.nextafter(np.float32(EPS_WHITE), np.float32(np.inf)))
)


def _as_readonly_f64(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if not arr.flags.c_contiguous:
        arr = np.ascontiguousarray(arr)
    view = arr.view()
    view.setflags(write=False)
    if not np.all(np.isfinite(view)):
        raise DomainError(f"{name} must contain only finite values")
    return view


@dataclass(frozen=True, eq=False)
class WavelengthGrid:
    """Strictly increasing wavelength sampling in nanometers."""

    lambdas: np.ndarray

    def __post_init__(self):
        arr = _as_readonly_f64(self.lambdas, "wavelengths")
        if arr.ndim != 1 or arr.size < 2:
            raise DomainError("wavelength grid must be 1-D with at least 2 bands")
        if np.any(arr <= 0.0):
            raise DomainError("wavelengths must be positive")
        if np.any(np.diff(arr) <= 0.0):
            raise DomainError("wavelengths must be strictly increasing")
        object.__setattr__(self, "lambdas", arr)

    @property
    def bands(self) -> int:
        return int(self.lambdas.size)

    def matches(self, other: "WavelengthGrid") -> bool:
        return np.array_equal(self.lambdas, other.lambdas)


def default_full_grid() -> WavelengthGrid:
    """Full-scale grid: 500-995 nm in 5 nm steps (100 bands)."""
    return WavelengthGrid(np.linspace(500.0, 995.0, 100))


def default_desk_grid() -> WavelengthGrid:
    """Desk-scale grid: 500-950 nm in 30 nm steps (16 bands)."""
    return WavelengthGrid(np.linspace(500.0, 950.0, 16))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """A single spectral vector on a wavelength grid."""

    values: np.ndarray
    grid: WavelengthGrid

    def __post_init__(self):
        arr = _as_readonly_f64(self.values, "spectrum values")
        if arr.ndim != 1:
            raise DimensionError("spectrum values must be 1-D")
        if arr.size != self.grid.bands:
            raise DimensionError(
                f"spectrum has {arr.size} values but grid has {self.grid.bands} bands"
            )
        object.__setattr__(self, "values", arr)

    @property
    def bands(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class HsiCube:
    """An H x W x B cube of finite, nonnegative intensities."""

    values: np.ndarray
    grid: WavelengthGrid

    def __post_init__(self):
        arr = _as_readonly_f64(self.values, "cube values")
        if arr.ndim != 3:
            raise DimensionError("cube values must have shape (H, W, B)")
        if min(arr.shape) < 1:
            raise DimensionError("cube dimensions must be positive")
        if arr.shape[2] != self.grid.bands:
            raise DimensionError(
                f"cube has {arr.shape[2]} bands but grid has {self.grid.bands}"
            )
        if np.any(arr < 0.0):
            raise DomainError("cube values must be nonnegative")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def bands(self) -> int:
        return int(self.values.shape[2])

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(s) for s in self.values.shape)


@dataclass(frozen=True, eq=False)
class WhiteRefImage:
    """A white-tile measurement: an HsiCube that is strictly positive.

    Every value must be at least ``EPS_WHITE`` so the image is always a
    safe calibration divisor.
    """

    cube: HsiCube

    def __post_init__(self):
        if np.any(self.cube.values < EPS_WHITE):
            raise DomainError(
                f"white reference values must be >= {EPS_WHITE:g}; "
                "smaller values indicate a failed acquisition"
            )

    @property
    def values(self) -> np.ndarray:
        return self.cube.values

    @property
    def grid(self) -> WavelengthGrid:
        return self.cube.grid

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.cube.shape


def _require_same_geometry(a: HsiCube, b: HsiCube) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"cube shapes differ: {a.shape} vs {b.shape}")
    if not a.grid.matches(b.grid):
        raise DimensionError("wavelength grids differ")


def calibrate(raw: HsiCube, white: WhiteRefImage) -> HsiCube:
    """Divide a raw cube elementwise by a white reference.

    out(i, j, k) = raw(i, j, k) / white(i, j, k)
    """
    _require_same_geometry(raw, white.cube)
    return HsiCube(raw.values / white.values, raw.grid)


def simulate_raw(calibrated: HsiCube, white: WhiteRefImage) -> HsiCube:
    """Undo calibration: multiply a calibrated cube by a white reference."""
    _require_same_geometry(calibrated, white.cube)
    return HsiCube(calibrated.values * white.values, calibrated.grid)


def mean_spectrum(cube: HsiCube) -> Spectrum:
    """Spatial average of the cube: one value per band."""
    return Spectrum(cube.values.mean(axis=(0, 1)), cube.grid)


def l1_normalize(s: Spectrum) -> Spectrum:
    """Scale a spectrum so its absolute values sum to one."""
    total = float(np.sum(np.abs(s.values)))
    if total == 0.0:
        raise DomainError("cannot L1-normalize an all-zero spectrum")
    return Spectrum(s.values / total, s.grid)


def quantize_single(values: np.ndarray) -> np.ndarray:
    """Round values to the nearest single-precision float, kept as float64.

    Synthesized cubes and white references are quantized this way at
    generation time so that in-memory data is bit-identical to its HSIC
    file round trip (the file payload is float32).
    """
    return np.asarray(values, dtype=np.float64).astype(np.float32).astype(np.float64)
