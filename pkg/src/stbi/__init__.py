"""Simulation and reconstruction for lateral-shearing digital holographic microscopy.

Cells confined to one half of the field of view interfere with the empty,
laterally sheared half of the same wavefront (subdivided two-beam
interference).  The package synthesises such holograms through focus, picks
the sharpest frame by total variation, recovers quantitative phase by
off-axis Fourier demodulation, and measures per-cell phase and optical volume.
"""

from .autofocus import mean_phase, select_focus, total_variation
from .errors import StbiError
from .field_core import ComplexField, Hologram, PhaseMap, dft2, gradient_forward
from .morphometry import CellStats, cell_statistics, segment_cells
from .reconstruct import (
    CarrierEstimate,
    extract_order,
    locate_carrier,
    reconstruct_phase,
    remove_carrier,
    subtract_background,
    unwrap_phase,
    wrapped_phase,
)
from .simulator import (
    FocusStack,
    OpticalConfig,
    RBCPhantom,
    SmearScene,
    add_noise,
    compute_shear_distance,
    demo_scene,
    generate_focus_stack,
    propagate_angular_spectrum,
    record_stbi_hologram,
    render_smear_phase,
)

__version__ = "0.1.0"
