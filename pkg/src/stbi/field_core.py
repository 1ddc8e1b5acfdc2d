"""Grid containers and the numerical primitives shared by every stage.

Grids are stored as 2-D numpy arrays indexed ``[row, column]`` (``[y, x]``),
i.e. row-major with ``height`` rows and ``width`` columns.  Pixel pitch is
always expressed in micrometres per pixel at the object plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InvalidDimensionError, StbiError

__all__ = [
    "ComplexField",
    "Hologram",
    "PhaseMap",
    "dft2",
    "gradient_forward",
    "check_grid",
]


def check_grid(values: np.ndarray) -> None:
    """Raise if ``values`` is not a 2-D grid with both axes >= 2."""
    if values.ndim != 2:
        raise InvalidDimensionError(f"expected a 2-D grid, got {values.ndim}-D")
    h, w = values.shape
    if h < 2 or w < 2:
        raise InvalidDimensionError(f"grid must be at least 2x2, got {w}x{h}")


def _check_pitch(pitch: float) -> None:
    if not (np.isfinite(pitch) and pitch > 0):
        raise StbiError(f"pixel_pitch must be positive and finite, got {pitch}")


@dataclass(eq=False)
class ComplexField:
    """Complex amplitude on a regular grid (the object wavefront)."""

    values: np.ndarray
    pixel_pitch: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        check_grid(self.values)
        _check_pitch(self.pixel_pitch)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def replace(self, values: np.ndarray) -> "ComplexField":
        return ComplexField(values, self.pixel_pitch)


@dataclass(eq=False)
class Hologram:
    """Recorded non-negative intensity pattern.

    ``defocus`` is the signed distance (micrometres) from best focus at which
    the frame was recorded; 0 when unknown.
    """

    values: np.ndarray
    pixel_pitch: float
    defocus: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        check_grid(self.values)
        _check_pitch(self.pixel_pitch)
        if not np.all(np.isfinite(self.values)):
            raise StbiError("hologram contains non-finite values")
        if np.any(self.values < 0):
            raise StbiError("hologram intensities must be non-negative")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(eq=False)
class PhaseMap:
    """Phase in radians with a per-pixel validity mask.

    When ``wrapped`` is set every valid value lies in (-pi, pi].
    """

    values: np.ndarray
    pixel_pitch: float
    mask: np.ndarray = field(default=None)
    wrapped: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        check_grid(self.values)
        _check_pitch(self.pixel_pitch)
        if self.mask is None:
            self.mask = np.ones(self.values.shape, dtype=bool)
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.values.shape:
            raise StbiError("mask shape does not match phase values")
        if self.wrapped:
            v = self.values[self.mask]
            if np.any(v <= -np.pi) or np.any(v > np.pi):
                raise StbiError("wrapped phase map has values outside (-pi, pi]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def dft2(f: ComplexField, direction: Literal["forward", "inverse"] = "forward") -> ComplexField:
    """Unitary 2-D DFT (both directions scaled by 1/sqrt(width*height)).

    Any grid size is accepted; non-power-of-two lengths go through the
    mixed-radix/Bluestein paths of numpy's pocketfft.
    """
    check_grid(f.values)
    if direction == "forward":
        out = np.fft.fft2(f.values, norm="ortho")
    elif direction == "inverse":
        out = np.fft.ifft2(f.values, norm="ortho")
    else:
        raise StbiError(f"unknown DFT direction {direction!r}")
    return ComplexField(out, f.pixel_pitch)


def gradient_forward(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences with a zero last column (gx) / last row (gy)."""
    image = np.asarray(image, dtype=np.float64)
    check_grid(image)
    gx = np.zeros_like(image)
    gy = np.zeros_like(image)
    gx[:, :-1] = image[:, 1:] - image[:, :-1]
    gy[:-1, :] = image[1:, :] - image[:-1, :]
    return gx, gy
