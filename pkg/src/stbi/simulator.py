"""Forward model: phantom smears, defocus, and shearing-plate hologram recording.

The object beam reflected from the front face of the shear plate carries the
cells (and the fringe carrier); the back-face reflection is the same
wavefront displaced sideways by ``shear_px``.  With the cells confined to the
left half of the field of view, a shear of half the FOV puts clean background
under every cell, which is what makes the recording behave like a two-beam
hologram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import OverlapError, SceneError, ShapeError, ShearRuleError, StbiError
from .field_core import ComplexField, Hologram, check_grid
from .parallel import ordered_map

__all__ = [
    "OpticalConfig",
    "RBCPhantom",
    "SmearScene",
    "FocusStack",
    "render_smear_phase",
    "render_smear_thickness",
    "compute_shear_distance",
    "shear_pixels",
    "propagate_angular_spectrum",
    "stbi_beams",
    "record_stbi_hologram",
    "generate_focus_stack",
    "add_noise",
    "add_stack_noise",
    "frame_seed",
    "parse_scene",
    "read_scene",
    "format_scene",
    "demo_scene",
]


@dataclass(frozen=True)
class OpticalConfig:
    """Optical bench and recording parameters.

    Units: wavelength and camera_pixel in micrometres, plate_thickness in
    millimetres, incidence_angle in degrees, carrier_freq in cycles/pixel at
    the sensor, shear_px in sensor pixels.  ``back_phase`` is the constant
    extra phase (radians) picked up by the back-face reflection.
    """

    wavelength: float = 0.633
    magnification: float = 10.0
    camera_pixel: float = 4.8
    plate_thickness: float = 10.0
    plate_index: float = 1.5
    incidence_angle: float = 45.0
    reflectance_front: float = 0.04
    reflectance_back: float = 0.04
    carrier_freq: tuple[float, float] = (0.3, 0.3)
    shear_px: int = 128
    medium_index_delta: float = 0.06
    back_phase: float = 0.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise StbiError("wavelength must be positive")
        if not self.magnification >= 1:
            raise StbiError("magnification must be >= 1")
        if not self.camera_pixel > 0:
            raise StbiError("camera_pixel must be positive")
        if not self.plate_index > 1:
            raise StbiError("plate_index must exceed 1")
        if not 0 <= self.incidence_angle < 90:
            raise StbiError("incidence_angle must lie in [0, 90)")
        if self.plate_thickness < 0:
            raise StbiError("plate_thickness must be non-negative")
        for r in (self.reflectance_front, self.reflectance_back):
            if not 0 <= r < 1:
                raise StbiError("reflectances must lie in [0, 1)")
        fx, fy = self.carrier_freq
        if abs(fx) > 0.5 or abs(fy) > 0.5:
            raise StbiError("carrier frequency beyond Nyquist")
        if self.shear_px < 0:
            raise StbiError("shear_px must be non-negative")
        if self.medium_index_delta == 0:
            raise StbiError("medium_index_delta must be non-zero")
        object.__setattr__(self, "carrier_freq", (float(fx), float(fy)))
        object.__setattr__(self, "shear_px", int(self.shear_px))

    @property
    def object_pitch(self) -> float:
        """Pixel pitch at the object plane, micrometres."""
        return self.camera_pixel / self.magnification


@dataclass(frozen=True)
class RBCPhantom:
    """Axisymmetric, optionally biconcave cell (micrometres)."""

    center: tuple[float, float]
    radius: float
    max_thickness: float
    dimple_depth: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise SceneError("phantom radius must be positive")
        if not self.max_thickness > 0:
            raise SceneError("phantom max_thickness must be positive")
        if not 0 <= self.dimple_depth < 1:
            raise SceneError("dimple_depth must lie in [0, 1)")

    def thickness(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        rho = r / self.radius
        dimple = 1.0 - self.dimple_depth * np.exp(-((r / (self.radius / 2)) ** 2))
        return np.clip(self.max_thickness * (1.0 - rho**2) * dimple, 0.0, None)

    def volume(self) -> float:
        """Closed-form integral of the thickness profile over the disc."""
        # int_0^R (1 - r^2/R^2) (1 - d exp(-4 r^2/R^2)) 2 pi r dr
        R, H, d = self.radius, self.max_thickness, self.dimple_depth
        base = math.pi * R**2 / 2
        # int_0^1 (1 - t) exp(-4t) dt = (3 + exp(-4)) / 16, with t = (r/R)^2
        dimple = math.pi * R**2 * d * (3 + math.exp(-4)) / 16
        return H * (base - dimple)


@dataclass
class SmearScene:
    phantoms: list[RBCPhantom]
    fov_width: int
    fov_height: int

    def __post_init__(self):
        if self.fov_width < 2 or self.fov_height < 2:
            raise SceneError("field of view must be at least 2x2 pixels")
        self.phantoms = list(self.phantoms)

    def validate(self, pitch: float) -> None:
        """Check every phantom sits inside the FOV and left of the midline."""
        half = self.fov_width / 2 * pitch
        for i, p in enumerate(self.phantoms):
            cx, cy = p.center
            if cx + p.radius > half:
                raise SceneError(
                    f"phantom {i} crosses the FOV midline "
                    f"({cx + p.radius:.3f} um > {half:.3f} um)"
                )
            if cx - p.radius < 0 or cy - p.radius < 0 or cy + p.radius > self.fov_height * pitch:
                raise SceneError(f"phantom {i} leaves the field of view")


@dataclass
class FocusStack:
    """Frames ordered by defocus; defocus_of(k) = z_start + k * defocus_step."""

    frames: list[Hologram]
    defocus_step: float
    z_start: float = 0.0

    def __post_init__(self):
        self.frames = list(self.frames)
        if self.defocus_step == 0 and len(self.frames) > 1:
            raise StbiError("defocus_step must be non-zero")
        if self.frames:
            first = self.frames[0]
            for f in self.frames[1:]:
                if f.shape != first.shape or f.pixel_pitch != first.pixel_pitch:
                    raise ShapeError("stack frames differ in shape or pitch")

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, k: int) -> Hologram:
        return self.frames[k]

    def defocus_of(self, index: int) -> float:
        return self.z_start + index * self.defocus_step


def _grid_coords(shape: tuple[int, int], pitch: float) -> tuple[np.ndarray, np.ndarray]:
    h, w = shape
    y = np.arange(h) * pitch
    x = np.arange(w) * pitch
    return np.meshgrid(x, y)


def render_smear_thickness(scene: SmearScene, pitch: float) -> np.ndarray:
    """Summed phantom thickness (micrometres) on the scene grid."""
    scene.validate(pitch)
    xx, yy = _grid_coords((scene.fov_height, scene.fov_width), pitch)
    h = np.zeros((scene.fov_height, scene.fov_width))
    for p in scene.phantoms:
        r = np.hypot(xx - p.center[0], yy - p.center[1])
        inside = r < p.radius
        h[inside] += p.thickness(r[inside])
    return h


def render_smear_phase(scene: SmearScene, config: OpticalConfig) -> ComplexField:
    """Unit-amplitude object wavefront with phase 2*pi*dn*h/lambda."""
    h = render_smear_thickness(scene, config.object_pitch)
    phase = 2 * np.pi * config.medium_index_delta * h / config.wavelength
    return ComplexField(np.exp(1j * phase), config.object_pitch)


def compute_shear_distance(config: OpticalConfig) -> float:
    """Lateral offset (mm) between front- and back-face reflections of the plate."""
    theta = math.radians(config.incidence_angle)
    n = config.plate_index
    return config.plate_thickness * math.sin(2 * theta) / math.sqrt(n**2 - math.sin(theta) ** 2)


def shear_pixels(config: OpticalConfig) -> int:
    """Shear distance expressed in whole sensor pixels."""
    return int(round(compute_shear_distance(config) * 1000.0 / config.camera_pixel))


def _transfer_function(shape, pitch, wavelength, distance):
    h, w = shape
    fx = np.fft.fftfreq(w, d=pitch)
    fy = np.fft.fftfreq(h, d=pitch)
    FX, FY = np.meshgrid(fx, fy)
    arg = 1.0 - (wavelength * FX) ** 2 - (wavelength * FY) ** 2
    prop = arg > 0
    kz = np.sqrt(np.where(prop, arg, 0.0))
    H = np.where(prop, np.exp(1j * (2 * np.pi / wavelength) * distance * kz), 0.0)
    return H


def propagate_angular_spectrum(
    f: ComplexField, distance: float, config: OpticalConfig
) -> ComplexField:
    """Free-space propagation by ``distance`` micrometres (evanescent waves dropped)."""
    if not np.isfinite(distance):
        raise StbiError("propagation distance must be finite")
    if distance == 0:
        return ComplexField(f.values.copy(), f.pixel_pitch)
    H = _transfer_function(f.shape, f.pixel_pitch, config.wavelength, distance)
    out = np.fft.ifft2(np.fft.fft2(f.values) * H)
    return ComplexField(out, f.pixel_pitch)


def _background_value(values: np.ndarray) -> complex:
    return complex(np.median(values.real), np.median(values.imag))


def _shift_x(values: np.ndarray, shift: int, fill) -> np.ndarray:
    out = np.empty_like(values)
    if shift == 0:
        out[...] = values
        return out
    out[:, :shift] = fill
    out[:, shift:] = values[:, :-shift]
    return out


def stbi_beams(
    f: ComplexField,
    config: OpticalConfig,
    background: Optional[complex] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Front-face (object + carrier) and back-face (sheared) beams at the sensor."""
    if background is None:
        background = _background_value(f.values)
    h, w = f.shape
    fx, fy = config.carrier_freq
    yy, xx = np.mgrid[0:h, 0:w]
    tilt = np.exp(2j * np.pi * (fx * xx + fy * yy))
    o1 = math.sqrt(config.reflectance_front) * f.values * tilt
    o2 = (
        math.sqrt(config.reflectance_back)
        * np.exp(1j * config.back_phase)
        * _shift_x(f.values, config.shear_px, background)
    )
    return o1, o2


def object_support(f: ComplexField, background: complex, tol: float = 1e-3) -> np.ndarray:
    """Pixels where the field departs from the background value."""
    scale = abs(background) if background != 0 else 1.0
    return np.abs(f.values - background) > tol * scale


def record_stbi_hologram(
    f: ComplexField,
    config: OpticalConfig,
    background: Optional[complex] = None,
    support: Optional[np.ndarray] = None,
    defocus: float = 0.0,
) -> Hologram:
    """Record |O1 + O2|^2 for a field and its laterally sheared copy.

    ``background`` is the complex value of the object-free wavefront used to
    fill the region uncovered by the shift; by default it is estimated as the
    component-wise median of the field.  ``support`` marks pixels carrying
    object information; it defaults to pixels that differ from the
    background.  The sheared copy of the support must not land on the
    support itself.
    """
    check_grid(f.values)
    s = config.shear_px
    if s > f.width / 2:
        raise ShearRuleError(
            f"shear of {s} px exceeds half the field of view ({f.width / 2:g} px)"
        )
    if background is None:
        background = _background_value(f.values)
    if support is None:
        support = object_support(f, background)
    support = np.asarray(support, dtype=bool)
    if support.shape != f.shape:
        raise ShapeError("support mask does not match the field")
    if support.any():
        shifted = _shift_x(support, s, False)
        if np.any(support & shifted):
            raise OverlapError(
                f"object support and its {s} px sheared copy overlap (duplicate image)"
            )
    o1, o2 = stbi_beams(f, config, background)
    intensity = np.abs(o1 + o2) ** 2
    return Hologram(intensity, f.pixel_pitch, defocus=defocus)


def generate_focus_stack(
    scene: SmearScene,
    config: OpticalConfig,
    z_min: float,
    z_max: float,
    n_frames: int,
) -> tuple[FocusStack, int]:
    """Through-focus stack and the index of the frame nearest zero defocus."""
    if n_frames < 3:
        raise StbiError("a focus stack needs at least 3 frames")
    if not z_min < 0 < z_max:
        raise StbiError("defocus range must straddle zero (z_min < 0 < z_max)")
    in_focus = render_smear_phase(scene, config)
    support = np.abs(np.angle(in_focus.values)) > 0
    zs = np.linspace(z_min, z_max, n_frames)

    def frame(z):
        field_z = propagate_angular_spectrum(in_focus, z, config)
        # the empty wavefront only picks up the on-axis plane-wave phase
        bg = np.exp(2j * np.pi * z / config.wavelength)
        return record_stbi_hologram(field_z, config, bg, support, defocus=float(z))

    frames = ordered_map(frame, zs)
    truth = int(np.argmin(np.abs(zs)))
    step = (z_max - z_min) / (n_frames - 1)
    return FocusStack(frames, step, float(z_min)), truth


def add_noise(h: Hologram, snr_db: float, seed: int) -> Hologram:
    """Additive white Gaussian noise at the requested SNR, clamped at zero.

    Signal power is the mean squared intensity.  ``snr_db = inf`` returns an
    unchanged copy.
    """
    if np.isnan(snr_db) or snr_db == -np.inf:
        raise StbiError("snr_db must be finite or +inf")
    if snr_db == np.inf:
        return Hologram(h.values.copy(), h.pixel_pitch, h.defocus)
    power = np.mean(h.values**2)
    sigma = math.sqrt(power / 10 ** (snr_db / 10))
    rng = np.random.default_rng(seed)
    noisy = h.values + rng.normal(0.0, sigma, h.shape)
    return Hologram(np.clip(noisy, 0.0, None), h.pixel_pitch, h.defocus)


def frame_seed(seed: int, index: int) -> int:
    """Independent per-frame noise seed derived from a run seed."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def add_stack_noise(stack: FocusStack, snr_db: float, seed: int) -> FocusStack:
    """Independent noise on every frame (camera noise is temporal)."""
    frames = [add_noise(f, snr_db, frame_seed(seed, k)) for k, f in enumerate(stack.frames)]
    return FocusStack(frames, stack.defocus_step, stack.z_start)


def parse_scene(lines: Iterable[str]) -> SmearScene:
    """Parse the line-oriented scene format.

    ``fov W H`` sets the field of view; each ``rbc cx cy radius thickness
    dimple`` line adds a phantom.  ``#`` starts a comment.
    """
    fov = None
    phantoms = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0].lower()
        try:
            if key == "fov":
                if len(tok) != 3:
                    raise SceneError(f"line {lineno}: 'fov' takes 2 values")
                if fov is not None:
                    raise SceneError(f"line {lineno}: duplicate 'fov' header")
                fov = (int(tok[1]), int(tok[2]))
            elif key == "rbc":
                if len(tok) != 6:
                    raise SceneError(f"line {lineno}: 'rbc' takes 5 values")
                cx, cy, r, t, d = map(float, tok[1:])
                phantoms.append(RBCPhantom((cx, cy), r, t, d))
            else:
                raise SceneError(f"line {lineno}: unknown record {tok[0]!r}")
        except ValueError as exc:
            if isinstance(exc, SceneError):
                raise
            raise SceneError(f"line {lineno}: {exc}") from exc
    if fov is None:
        raise SceneError("scene has no 'fov W H' header")
    return SmearScene(phantoms, fov[0], fov[1])


def read_scene(path) -> SmearScene:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene(fh)


def format_scene(scene: SmearScene) -> str:
    out = [f"fov {scene.fov_width} {scene.fov_height}"]
    for p in scene.phantoms:
        out.append(
            f"rbc {p.center[0]!r} {p.center[1]!r} {p.radius!r} "
            f"{p.max_thickness!r} {p.dimple_depth!r}"
        )
    return "\n".join(out) + "\n"


def demo_scene() -> SmearScene:
    """Fifty cells on the left half of a 256x256 field (0.48 um pitch)."""
    path = Path(__file__).with_name("data") / "demo.scn"
    return read_scene(path)
