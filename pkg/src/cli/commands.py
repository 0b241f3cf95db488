"""
Command Handlers

One handler per subcommand. Each takes the parsed arguments and the
validated RunConfig, writes its files, prints its report to stdout and
returns the exit code.
"""

import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..config import RunConfig
from ..core import analysis, filterbank, synth, tensor
from ..core.linalg import char_poly_eigenvalues, eig_sym, is_psd, packed_pairs
from ..core.tessellation import DirectionSet, direction_set_from_name, icosa6, write_directions_csv
from ..formats.pgm import read_pgm, unit_range, write_pgm
from ..formats.ppm import write_orientation_ppm
from ..formats.raster import MIN_EIG_PREFIX, ORIENTATION_TAG, read_raw, write_raw
from ..utils.errors import CheckFailed, UsageError
from ..utils.tables import to_csv, to_markdown, write_csv

logger = logging.getLogger(__name__)

PSD_TOL = 1e-12


def _emit(rows: list[dict], fmt: str = 'csv') -> None:
    sys.stdout.write(to_markdown(rows) if fmt == 'markdown' else to_csv(rows))


def _read_field(path: str) -> synth.ScalarField:
    if Path(path).suffix.lower() == '.pgm':
        return read_pgm(path)
    return read_raw(path).as_scalar_field()


def _default_directions(run: RunConfig, dim: int, count: int = None) -> DirectionSet:
    if run.directions:
        dirs = direction_set_from_name(run.directions)
    elif dim == 3:
        dirs = icosa6()
    elif dim == 2:
        dirs = direction_set_from_name(f"half_circle:{count or 6}")
    else:
        raise UsageError(f"no default direction set for {dim}-D data; pass --directions")
    if dirs.dim != dim:
        raise UsageError(f"direction set {dirs.name} is {dirs.dim}-D but the data is {dim}-D")
    return dirs


def _coefficients(run: RunConfig, dirs: DirectionSet):
    if run.coeff is not None:
        return tensor.FrameCoefficients(*run.coeff)
    if dirs.name != 'icosa6':
        raise UsageError(f"the gk construction needs --coeff alpha,beta for direction set {dirs.name}")
    return None


def _bank(run: RunConfig, dirs: DirectionSet) -> list:
    return filterbank.make_bank(dirs, kind=run.kind, center_frequency=run.rho0,
                                bandwidth=run.bandwidth, exponent=run.exponent)


# ---------------------------------------------------------------------------
# repro-example
# ---------------------------------------------------------------------------

def repro_example_rows(coef: tensor.FrameCoefficients = tensor.ICOSA6_COEFFICIENTS) -> tuple[list[dict], bool]:
    """
    Build T_GK and T_BG for the counterexample responses on icosa6.

    Returns the report rows and whether the expected outcome holds
    (T_GK has at least two negative eigenvalues and T_BG is PSD).
    """
    dirs = icosa6()
    q = filterbank.uniform_responses(tensor.COUNTEREXAMPLE_Q, (1,), labels=dirs.labels)
    gk = tensor.tensor_gk(q, dirs, coef).at((0,))
    bg = tensor.tensor_bg(q, dirs).at((0,))

    gk_eigs = char_poly_eigenvalues(gk)
    bg_eigs = char_poly_eigenvalues(bg)
    gk_negative = int(np.sum(gk_eigs < -PSD_TOL * abs(gk.trace())))
    bg_psd = bool(bg_eigs[-1] >= -PSD_TOL * abs(bg.trace()))

    rows = [{'quantity': 'q', 'value': ' '.join(repr(x) for x in tensor.COUNTEREXAMPLE_Q)}]
    for (i, j), v in zip(packed_pairs(3), gk.entries):
        rows.append({'quantity': f"T_GK[{i + 1},{j + 1}]", 'value': float(v)})
    for k, v in enumerate(gk_eigs, start=1):
        rows.append({'quantity': f"T_GK eigenvalue {k}", 'value': float(v)})
    rows.append({'quantity': 'trace(T_GK)', 'value': gk.trace()})
    rows.append({'quantity': 'T_GK negative eigenvalue count', 'value': gk_negative})
    rows.append({'quantity': 'T_GK PSD', 'value': gk_negative == 0})
    for k, v in enumerate(bg_eigs, start=1):
        rows.append({'quantity': f"T_BG eigenvalue {k}", 'value': float(v)})
    rows.append({'quantity': 'trace(T_BG)', 'value': bg.trace()})
    rows.append({'quantity': 'T_BG PSD', 'value': bg_psd})

    # Jacobi and the bisection oracle must agree
    jacobi = eig_sym(gk).eigenvalues
    rows.append({'quantity': 'max |jacobi - oracle| (T_GK)', 'value': float(np.max(np.abs(jacobi - gk_eigs)))})
    if is_psd(bg, PSD_TOL * abs(bg.trace())) != bg_psd:
        logger.warning("Jacobi and the oracle disagree on whether T_BG is PSD")
    return rows, gk_negative >= 2 and bg_psd


def cmd_repro_example(args, run: RunConfig) -> int:
    coef = tensor.FrameCoefficients(*run.coeff) if run.coeff else tensor.ICOSA6_COEFFICIENTS
    rows, holds = repro_example_rows(coef)
    _emit(rows, args.format)
    if not holds:
        raise CheckFailed("T_GK did not show two negative eigenvalues or T_BG was not PSD")
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def synthesize(run: RunConfig) -> synth.ScalarField:
    """Superpose the configured waves on the grid and add seeded noise."""
    dims = tuple(run.dims)
    waves = list(run.waves)
    if run.periodic and run.snap:
        snapped = [synth.snap_to_grid(dims, w) for w in waves]
        for before, after in zip(waves, snapped):
            if len(dims) == 2 and abs(before.angle_deg() - after.angle_deg()) > 1e-9:
                logger.info(f"Snapped wave angle {before.angle_deg():.4f} deg to {after.angle_deg():.4f} deg; "
                            f"use --truth-angle {after.angle_deg():.4f} to score against the sampled wave")
        waves = snapped
    if waves:
        field = synth.superpose([synth.linear_symmetric(dims, w, periodic=run.periodic) for w in waves])
    else:
        logger.warning(f"No waves configured; synthesizing a zero field of dims {dims}")
        field = synth.ScalarField(np.zeros(dims), periodic=run.periodic)
    for w in waves:
        logger.info(f"Wave along {np.round(w.direction, 6).tolist()} at frequency {w.frequency:.6f} ({w.profile.value})")
    return synth.add_noise(field, run.noise, run.seed)


def cmd_synth(args, run: RunConfig) -> int:
    field = synthesize(run)
    if Path(args.output).suffix.lower() == '.pgm':
        mapped = unit_range(field)
        if mapped is not field:
            logger.warning(f"PGM output {args.output} holds the field mapped affinely onto [0, 1]; "
                           "write a raster to keep the original values")
        write_pgm(mapped, args.output)
    else:
        write_raw(field, args.output)
    return 0


# ---------------------------------------------------------------------------
# bank
# ---------------------------------------------------------------------------

def cmd_bank(args, run: RunConfig) -> int:
    field = _read_field(args.input)
    dirs = _default_directions(run, field.ndim)
    bank = _bank(run, dirs)

    if args.dump_directions:
        write_directions_csv(dirs, args.dump_directions)
    if args.dump_transfer:
        transfers = np.stack([filterbank.synth_transfer(spec, field.dims) for spec in bank])
        write_raw(transfers, args.dump_transfer, tag='transfer:' + run.kind)

    responses = filterbank.apply_bank(field, bank, mode=run.response_mode,
                                      threads=run.threads, upsample=run.upsample)
    write_raw(responses, args.output)
    return 0


# ---------------------------------------------------------------------------
# tensor
# ---------------------------------------------------------------------------

def build_tensor(run: RunConfig, path: str) -> tensor.TensorField:
    construction = tensor.Construction(run.construction)

    if construction in (tensor.Construction.GK, tensor.Construction.BG):
        raster = read_raw(path)
        responses = raster.as_responses()
        dirs = _default_directions(run, len(raster.header.dims), count=len(responses))
        if len(dirs) != len(responses):
            raise UsageError(f"{len(responses)} response planes for {len(dirs)} directions in {dirs.name}")
        responses = [filterbank.ResponseField(r.values, label=label, mode=r.mode)
                     for r, label in zip(responses, dirs.labels)]
        if construction is tensor.Construction.BG:
            return tensor.tensor_bg(responses, dirs)
        return tensor.tensor_gk(responses, dirs, _coefficients(run, dirs))

    field = _read_field(path)
    if construction is tensor.Construction.GRADIENT:
        return tensor.gradient_tensor(field, run.inner_scale, run.outer_scale, boundary=run.boundary,
                                      derivative=run.derivative, upsample=run.upsample)
    source = tensor.upsample2x(field) if run.upsample else field
    return tensor.global_field(tensor.spectral_moment_tensor(source), field.ndim)


def cmd_tensor(args, run: RunConfig) -> int:
    tf = build_tensor(run, args.input)
    write_raw(tf, args.output)
    return 0


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def analyze_rows(tf: tensor.TensorField, run: RunConfig):
    """Summary rows for a tensor field, plus error statistics when the truth is known."""
    of = analysis.orientation_field(tf)
    mean_tensor = tf.mean()
    mean_orientation = analysis.orientation(mean_tensor)
    rank = analysis.rank_profile(mean_tensor, run.rel_tol)
    report = analysis.indefiniteness_report(tf)

    rows = [
        {'metric': 'construction', 'value': tf.tag.value},
        {'metric': 'pixels', 'value': report.pixels},
        {'metric': 'mean_certainty', 'value': float(np.mean(of.certainty))},
        {'metric': 'mean_tls_error', 'value': float(np.mean(of.tls_error))},
        {'metric': 'mean_tensor_direction', 'value': ' '.join(repr(float(x)) for x in mean_orientation.direction)},
        {'metric': 'mean_tensor_certainty', 'value': mean_orientation.certainty},
        {'metric': 'mean_tensor_near_zero_count', 'value': rank.near_zero_count},
        {'metric': 'mean_tensor_degenerate', 'value': rank.degenerate},
        {'metric': 'fraction_negative', 'value': report.fraction_negative},
        {'metric': 'min_eigenvalue', 'value': report.min_eigenvalue},
    ]
    if tf.dim == 2:
        rows.insert(5, {'metric': 'mean_tensor_angle_deg', 'value': mean_orientation.angle_deg})

    stats = None
    if run.truth_angle is not None:
        if tf.dim != 2:
            raise UsageError("--truth-angle applies to 2-D tensor fields only")
        t = math.radians(run.truth_angle)
        stats = analysis.orientation_error_stats(of, np.array([math.cos(t), math.sin(t)]), margin=run.margin)
        rows.extend([
            {'metric': 'interior_pixels', 'value': stats.count},
            {'metric': 'mean_error_deg', 'value': stats.mean_deg},
            {'metric': 'rms_error_deg', 'value': stats.rms_deg},
            {'metric': 'max_error_deg', 'value': stats.max_deg},
        ])
    return rows, of, stats


def cmd_analyze(args, run: RunConfig) -> int:
    if args.check and run.truth_angle is None:
        raise UsageError("--check needs --truth-angle")
    tf = read_raw(args.input).as_tensor_field()
    rows, of, stats = analyze_rows(tf, run)

    if args.output or args.ppm:
        if tf.dim != 2 or len(tf.grid) != 2:
            raise UsageError("orientation rasters need a 2-D tensor field on a 2-D grid")
        angles = analysis.angle_field(of)
        if args.output:
            write_raw(np.stack([angles, of.certainty]), args.output, tag=ORIENTATION_TAG)
        if args.ppm:
            write_orientation_ppm(angles, of.certainty, args.ppm)

    _emit(rows, args.format)
    if args.check and stats.mean_deg >= run.max_error:
        raise CheckFailed(f"mean angular error {stats.mean_deg:.4f} deg is not below {run.max_error} deg")
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def compare_fields(gk: tensor.TensorField, bg: tensor.TensorField) -> tuple[list[dict], list[dict]]:
    """Summary rows for stdout and full report rows (histograms included)."""
    summary, detail = [], []
    for tf in (gk, bg):
        report = analysis.indefiniteness_report(tf)
        name = tf.tag.value
        for row in report.to_rows():
            detail.append({'construction': name, **row})
            if not row['metric'].startswith('ratio['):
                summary.append({'metric': f"{name}.{row['metric']}", 'value': row['value']})

    delta = analysis.orientation_delta_stats(analysis.orientation_field(gk), analysis.orientation_field(bg))
    for key, value in delta.to_dict().items():
        summary.append({'metric': f"delta.{key}", 'value': value})
    return summary, detail


def cmd_compare(args, run: RunConfig) -> int:
    if args.counterexample:
        dirs = icosa6()
        responses = filterbank.uniform_responses(tensor.COUNTEREXAMPLE_Q, tuple(args.counterexample),
                                                 labels=dirs.labels, mode=run.response_mode)
    elif args.input:
        field = _read_field(args.input)
        dirs = _default_directions(run, field.ndim)
        responses = filterbank.apply_bank(field, _bank(run, dirs), mode=run.response_mode,
                                          threads=run.threads, upsample=run.upsample)
    else:
        raise UsageError("compare needs an input image or --counterexample DIMS")

    gk = tensor.tensor_gk(responses, dirs, _coefficients(run, dirs))
    bg = tensor.tensor_bg(responses, dirs)
    summary, detail = compare_fields(gk, bg)

    if args.min_eig_prefix:
        for tf in (gk, bg):
            path = f"{args.min_eig_prefix}-{tf.tag.value}.stf"
            write_raw(tf.min_eigenvalues()[None, ...], path, tag=MIN_EIG_PREFIX + tf.tag.value)
    if args.report:
        write_csv(detail, args.report)

    _emit(summary, args.format)
    return 0


COMMANDS = {
    'repro-example': cmd_repro_example,
    'synth': cmd_synth,
    'bank': cmd_bank,
    'tensor': cmd_tensor,
    'analyze': cmd_analyze,
    'compare': cmd_compare,
}
