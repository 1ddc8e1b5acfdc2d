"""Total-variation focus metric and best-frame selection over a focus stack."""

from __future__ import annotations

import csv
from typing import Optional

import numpy as np

from .errors import EmptyInputError, StbiError
from .field_core import Hologram, PhaseMap, gradient_forward
from .parallel import ordered_map
from .simulator import FocusStack

__all__ = ["total_variation", "select_focus", "mean_phase", "write_tv_csv"]


def total_variation(h: Hologram | np.ndarray, isotropic: bool = True) -> float:
    """Sum over pixels of the forward-difference gradient magnitude.

    ``isotropic=False`` switches to the anisotropic |gx| + |gy| form.
    """
    values = h.values if isinstance(h, Hologram) else np.asarray(h, dtype=np.float64)
    gx, gy = gradient_forward(values)
    if isotropic:
        return float(np.sum(np.hypot(gx, gy)))
    return float(np.sum(np.abs(gx)) + np.sum(np.abs(gy)))


def select_focus(
    stack: FocusStack,
    stride: int = 30,
    refine: bool = False,
    isotropic: bool = True,
) -> tuple[int, list[tuple[int, float]]]:
    """Pick the frame with the highest TV.

    TV is evaluated on frames 0, stride, 2*stride, ...; with ``refine`` every
    frame within +-stride of the coarse winner is evaluated as well.  Ties go
    to the lowest index.  Returns the chosen index and the (index, TV) pairs
    of all evaluated frames in index order.
    """
    n = len(stack)
    if n == 0:
        raise EmptyInputError("focus stack is empty")
    if stride < 1:
        raise StbiError("stride must be >= 1")

    scores: dict[int, float] = {}

    def evaluate(indices):
        todo = [k for k in indices if k not in scores]
        tvs = ordered_map(lambda k: total_variation(stack.frames[k], isotropic), todo)
        scores.update(zip(todo, tvs))

    def best(indices):
        # max TV, then lowest index
        return max(indices, key=lambda k: (scores[k], -k))

    coarse = list(range(0, n, stride))
    evaluate(coarse)
    winner = best(coarse)
    if refine and stride > 1:
        fine = list(range(max(0, winner - stride), min(n, winner + stride + 1)))
        evaluate(fine)
        winner = best(sorted(scores))
    curve = sorted(scores.items())
    return winner, curve


def mean_phase(p: PhaseMap, mask: Optional[np.ndarray] = None) -> float:
    """Average phase over ``mask`` (default: all valid pixels)."""
    region = p.mask if mask is None else (np.asarray(mask, dtype=bool) & p.mask)
    if not region.any():
        raise EmptyInputError("mean_phase over an empty region")
    return float(np.mean(p.values[region]))


def write_tv_csv(path, curve, stack: FocusStack | None = None) -> None:
    """Write ``index,defocus_um,tv`` rows; defocus is blank without a stack."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "defocus_um", "tv"])
        for k, tv in curve:
            z = "" if stack is None else repr(stack.defocus_of(k))
            w.writerow([k, z, repr(tv)])
