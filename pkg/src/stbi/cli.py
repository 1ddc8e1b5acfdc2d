"""Command-line front end.

Subcommands: simulate, focus, reconstruct, analyze, pipeline, dump.
Exit status is 0 on success, 1 on invalid input or usage, 2 on I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import autofocus, fileio, morphometry, reconstruct, simulator
from .errors import StbiError
from .field_core import ComplexField, Hologram, PhaseMap
from .simulator import FocusStack, OpticalConfig

log = logging.getLogger("stbi")

BACKGROUND_SEED_INDEX = 2**31 - 1


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _optics_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("optics")
    g.add_argument("--wavelength-um", type=float, default=0.633)
    g.add_argument("--mag", type=float, default=10.0)
    g.add_argument("--pixel-um", type=float, default=4.8, help="camera pixel pitch")
    g.add_argument("--plate-mm", type=float, default=10.0, help="shear plate thickness")
    g.add_argument("--plate-index", type=float, default=1.5)
    g.add_argument("--angle-deg", type=float, default=45.0, help="incidence on the plate")
    g.add_argument("--r-front", type=float, default=0.04)
    g.add_argument("--r-back", type=float, default=0.04)
    g.add_argument("--carrier", type=float, nargs=2, default=(0.3, 0.3), metavar=("FX", "FY"))
    g.add_argument("--shear-px", type=int, default=128)
    g.add_argument("--dn", type=float, default=0.06, help="cell/medium index contrast")
    g.add_argument("--back-phase", type=float, default=0.0)
    return p


def config_from_args(a) -> OpticalConfig:
    return OpticalConfig(
        wavelength=a.wavelength_um,
        magnification=a.mag,
        camera_pixel=a.pixel_um,
        plate_thickness=a.plate_mm,
        plate_index=a.plate_index,
        incidence_angle=a.angle_deg,
        reflectance_front=a.r_front,
        reflectance_back=a.r_back,
        carrier_freq=tuple(a.carrier),
        shear_px=a.shear_px,
        medium_index_delta=a.dn,
        back_phase=a.back_phase,
    )


def _load_scene(path):
    return simulator.demo_scene() if path is None else simulator.read_scene(path)


def _noisy(h, snr_db, seed, index):
    if math.isinf(snr_db) and snr_db > 0:
        return h
    return simulator.add_noise(h, snr_db, simulator.frame_seed(seed, index))


# -- stages ---------------------------------------------------------------


def do_simulate(a, config: OpticalConfig) -> Path:
    """Write holograms for a scene; returns the manifest (stack) or hologram path."""
    scene = _load_scene(a.scene)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    empty = ComplexField(np.ones((scene.fov_height, scene.fov_width)), config.object_pitch)
    bg = simulator.record_stbi_hologram(empty, config, background=1.0)
    fileio.write_field_file(out / "background.fld", _noisy(bg, a.snr_db, a.seed, BACKGROUND_SEED_INDEX))

    truth = render_truth(scene, config)
    fileio.write_field_file(out / "truth_phase.fld", truth)

    if a.stack:
        stack, truth_index = simulator.generate_focus_stack(
            scene, config, -a.zrange, a.zrange, a.stack
        )
        names = [f"frame_{k:03d}.fld" for k in range(len(stack))]
        for k, (name, frame) in enumerate(zip(names, stack.frames)):
            fileio.write_field_file(out / name, _noisy(frame, a.snr_db, a.seed, k))
        manifest = out / "manifest.csv"
        fileio.write_manifest(
            manifest,
            names,
            [stack.defocus_of(k) for k in range(len(stack))],
            truth_index,
            stack.defocus_step,
        )
        log.info("wrote %d frames, ground-truth focus index %d", len(stack), truth_index)
        return manifest
    field = simulator.render_smear_phase(scene, config)
    h = simulator.record_stbi_hologram(field, config, background=1.0)
    path = out / "hologram.fld"
    fileio.write_field_file(path, _noisy(h, a.snr_db, a.seed, 0))
    return path


def render_truth(scene, config) -> PhaseMap:
    phase = np.angle(simulator.render_smear_phase(scene, config).values)
    return PhaseMap(phase, config.object_pitch)


def load_stack(manifest) -> FocusStack:
    rows, meta = fileio.read_manifest(manifest)
    if not rows:
        raise StbiError("manifest lists no frames")
    frames = [fileio.read_field_file(p) for _, p, _ in rows]
    step = rows[1][2] - rows[0][2] if len(rows) > 1 else 0.0
    return FocusStack(frames, step, rows[0][2])


def do_focus(a) -> tuple[int, Path]:
    stack = load_stack(a.manifest)
    index, curve = autofocus.select_focus(stack, a.stride, a.refine, not a.anisotropic)
    if a.csv:
        autofocus.write_tv_csv(a.csv, curve, stack)
    rows, _ = fileio.read_manifest(a.manifest)
    print(f"focus_index {index} defocus_um {stack.defocus_of(index)!r} evaluated {len(curve)}")
    return index, rows[index][1]


def do_reconstruct(a) -> PhaseMap:
    holo = fileio.read_field_file(a.hologram)
    bg = fileio.read_field_file(a.background)
    for obj, name in ((holo, "hologram"), (bg, "background")):
        if not isinstance(obj, Hologram):
            raise StbiError(f"{name} file does not hold a hologram")
    carrier = reconstruct.locate_carrier(bg)
    log.info("carrier fx=%.6f fy=%.6f", carrier.fx, carrier.fy)
    obj_phase = reconstruct.reconstruct_phase(holo, carrier, a.radius)
    bg_phase = reconstruct.reconstruct_phase(bg, carrier, a.radius)
    phase = reconstruct.subtract_background(obj_phase, bg_phase)
    fileio.write_field_file(a.out, phase)
    if a.pgm:
        valid = phase.values[phase.mask]
        lo = a.pgm_lo if a.pgm_lo is not None else float(valid.min())
        hi = a.pgm_hi if a.pgm_hi is not None else float(valid.max())
        if hi <= lo:
            hi = lo + 1.0
        fileio.export_pgm16(phase.values, a.pgm, lo, hi)
    return phase


def do_analyze(a, config: OpticalConfig) -> list:
    phase = fileio.read_field_file(a.phase)
    if not isinstance(phase, PhaseMap):
        raise StbiError("analyze needs a phase-map file")
    labels = morphometry.segment_cells(phase, a.threshold, a.min_area, a.connectivity)
    stats = morphometry.cell_statistics(phase, labels, config)
    morphometry.write_stats_csv(a.csv if a.csv else sys.stdout, stats)
    log.info("%d cells", len(stats))
    return stats


def do_pipeline(a, config: OpticalConfig) -> None:
    out = Path(a.out)
    simulated = do_simulate(a, config)
    if a.stack:
        fa = argparse.Namespace(
            manifest=simulated, stride=a.stride, refine=a.refine,
            anisotropic=a.anisotropic, csv=out / "tv.csv",
        )
        _, hologram = do_focus(fa)
    else:
        hologram = simulated
    ra = argparse.Namespace(
        hologram=hologram, background=out / "background.fld", out=out / "phase.fld",
        pgm=out / "phase.pgm", pgm_lo=a.pgm_lo, pgm_hi=a.pgm_hi, radius=a.radius,
    )
    do_reconstruct(ra)
    aa = argparse.Namespace(
        phase=out / "phase.fld", threshold=a.threshold, min_area=a.min_area,
        connectivity=a.connectivity, csv=out / "stats.csv",
    )
    do_analyze(aa, config)


def do_dump(a) -> None:
    hdr = fileio.read_field_header(a.path)
    obj = fileio.read_field_file(a.path)
    kind = {0: "complex field", 1: "hologram", 2: "phase map"}[hdr.kind]
    print(f"{a.path}: {kind} {hdr.width}x{hdr.height} pitch={hdr.pixel_pitch!r} um defocus={hdr.defocus!r} um")
    if hdr.kind == 0:
        amp = np.abs(obj.values)
        print(f"  |amplitude| min={amp.min():.6g} max={amp.max():.6g} mean={amp.mean():.6g}")
    else:
        v = obj.values if hdr.kind == 1 else obj.values[obj.mask]
        print(f"  min={v.min():.6g} max={v.max():.6g} mean={v.mean():.6g}")
        if hdr.kind == 2:
            print(f"  valid pixels {int(obj.mask.sum())}/{obj.mask.size}")


# -- argument parsing -----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    optics = _optics_parent()
    parser = _Parser(prog="stbi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def sim_args(p):
        p.add_argument("--scene", default=None, help="scene file (default: shipped demo)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--stack", type=int, default=0, help="number of frames (0: single hologram)")
        p.add_argument("--zrange", type=float, default=30.0, help="defocus half-range, um")
        p.add_argument("--snr-db", type=float, default=math.inf)
        p.add_argument("--seed", type=int, default=0)

    def focus_args(p):
        p.add_argument("--stride", type=int, default=30)
        p.add_argument("--refine", action="store_true")
        p.add_argument("--anisotropic", action="store_true", help="|gx|+|gy| instead of the gradient norm")

    def recon_args(p):
        p.add_argument("--radius", type=float, default=None, help="order window radius, cycles/px")
        p.add_argument("--pgm-lo", type=float, default=None)
        p.add_argument("--pgm-hi", type=float, default=None)

    def analyze_args(p):
        p.add_argument("--threshold", type=float, default=0.3, help="rad")
        p.add_argument("--min-area", type=int, default=20, help="pixels")
        p.add_argument("--connectivity", type=int, choices=(4, 8), default=4)

    p = sub.add_parser("simulate", parents=[optics], help="scene -> hologram or focus stack")
    sim_args(p)

    p = sub.add_parser("focus", help="pick the best-focused frame of a stack by TV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--csv", default=None, help="write index,defocus_um,tv")
    focus_args(p)

    p = sub.add_parser("reconstruct", help="hologram + background -> phase map")
    p.add_argument("--hologram", required=True)
    p.add_argument("--background", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pgm", default=None)
    recon_args(p)

    p = sub.add_parser("analyze", parents=[optics], help="phase map -> per-cell statistics")
    p.add_argument("--phase", required=True)
    p.add_argument("--csv", default=None)
    analyze_args(p)

    p = sub.add_parser("pipeline", parents=[optics], help="simulate, focus, reconstruct, analyze")
    sim_args(p)
    focus_args(p)
    recon_args(p)
    analyze_args(p)
    p.set_defaults(stack=61)

    p = sub.add_parser("dump", help="print a summary of a field file")
    p.add_argument("path")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except _UsageError:
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if a.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if a.command == "simulate":
            do_simulate(a, config_from_args(a))
        elif a.command == "focus":
            do_focus(a)
        elif a.command == "reconstruct":
            do_reconstruct(a)
        elif a.command == "analyze":
            do_analyze(a, config_from_args(a))
        elif a.command == "pipeline":
            do_pipeline(a, config_from_args(a))
        elif a.command == "dump":
            do_dump(a)
    except StbiError as exc:
        print(f"stbi: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"stbi: I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
