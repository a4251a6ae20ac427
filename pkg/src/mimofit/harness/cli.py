"""Command line front end.

Subcommands::

    mimofit simulate      --scenario example1 --snr 0 --seed 7 --out snaps.bin
    mimofit estimate S.bin --scenario example1 --seed 0 [--out est.json]
    mimofit crb           --scenario example1 --snr 0 --out bound.csv
    mimofit sweep         --scenario example1 --snr -10,-5,0,5,10 \
                          --trials 100 --seed 0 --out rmse.csv
    mimofit contour       --scenario example1 --snr 0 --out surface.csv
    mimofit check-doppler --scenario example1

``--scenario`` takes a preset name (example1, example2) or a YAML config
path.  ``--snr`` accepts ``inf`` for noiseless data, and a comma list for
``sweep``.  Exit status is 0 on success, 2 on any error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from ..crb import compute_crb, write_crb_csv
from ..estimator import OptimizerConfig, SearchBox, coarse_init, estimate
from ..likelihood import ConcentratedObjective
from ..signal import draw_reflection_vector, load_snapshots, noise_variance_for_snr, synthesize, save_snapshots
from .campaign import (
    CampaignSpec,
    check_doppler_cit,
    emit_contour,
    emit_rmse_csv,
    make_contour,
    run_campaign,
    simulate_range_estimates,
)
from .scenario import load_scenario, preset_names

__all__ = ["main"]


def _parse_snr_list(text: str) -> list:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"bad --snr value {text!r}: {exc}") from exc


def _parse_axis_spec(text: str):
    """``name:start:stop:count`` -> (name, values)."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(f"bad axis spec {text!r}, expected name:start:stop:count")
    name, start, stop, count = parts
    return name, np.linspace(float(start), float(stop), int(count))


def _sigma2_for(scenario, snr: float) -> float:
    if math.isinf(snr):
        return 0.0
    b = draw_reflection_vector(scenario.geometry.n_paths, scenario.reflection_seed)
    return noise_variance_for_snr(scenario.radar, b, snr)


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    b = draw_reflection_vector(scenario.geometry.n_paths, scenario.reflection_seed)
    sigma2 = _sigma2_for(scenario, args.snr)
    snaps = synthesize(scenario.geometry, scenario.motion, scenario.radar,
                       b, sigma2, args.seed)
    save_snapshots(snaps, args.out)
    print(f"wrote {snaps.n_snapshots} snapshots x {snaps.n_paths} paths "
          f"at {args.snr} dB (noise variance {sigma2:.6g}) to {args.out}")
    return 0


def _fallback_box(center: np.ndarray) -> SearchBox:
    # noiseless input: any modest box around the (exact) coarse fix works
    halfwidths = np.maximum(1e-3 * np.abs(center), 1.0)
    return SearchBox.centered(center, halfwidths)


def _cmd_estimate(args) -> int:
    scenario = load_scenario(args.scenario)
    geometry, motion, radar = scenario.geometry, scenario.motion, scenario.radar
    snaps = load_snapshots(args.snapshots)
    if (snaps.n_tx, snaps.n_rx) != (geometry.n_tx, geometry.n_rx):
        raise ValueError(
            f"snapshot file holds a {snaps.n_tx}x{snaps.n_rx} antenna layout, "
            f"scenario {scenario.name!r} is {geometry.n_tx}x{geometry.n_rx}")
    if snaps.n_snapshots != radar.snapshot_count:
        raise ValueError(
            f"snapshot file holds {snaps.n_snapshots} snapshots, scenario "
            f"expects {radar.snapshot_count}")

    b = draw_reflection_vector(geometry.n_paths, scenario.reflection_seed)
    if snaps.noise_variance > 0:
        bound = compute_crb(geometry, motion, radar, b, snaps.noise_variance)
        box = SearchBox.centered(motion.to_vector(), 10.0 * bound.psi_std)
    else:
        ranges = simulate_range_estimates(geometry, motion, radar)
        coarse = coarse_init(geometry, radar, ranges, motion.order,
                             planar=motion.planar)
        box = _fallback_box(coarse.to_vector())

    ctx = ConcentratedObjective(geometry, radar, motion.order, snaps,
                                planar=motion.planar)
    est = estimate(ctx, box, OptimizerConfig(seed=args.seed))
    record = {
        "scenario": scenario.name,
        "snapshots": args.snapshots,
        "noise_variance": snaps.noise_variance,
        "objective": est.objective,
        "parameters": [
            {"name": n, "value": float(v), "unit": u}
            for n, v, u in zip(motion.parameter_names(),
                               est.motion.to_vector(),
                               motion.parameter_units())
        ],
        "gains": [[float(g.real), float(g.imag)] for g in est.gains],
        "diagnostics": {k: (int(v) if isinstance(v, (int, np.integer)) else float(v))
                        for k, v in est.diagnostics.items()},
    }
    text = json.dumps(record, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote estimate to {args.out}")
    else:
        print(text)
    return 0


def _cmd_crb(args) -> int:
    scenario = load_scenario(args.scenario)
    sigma2 = _sigma2_for(scenario, args.snr)
    if sigma2 == 0.0:
        raise ValueError("the bound needs a finite SNR")
    b = draw_reflection_vector(scenario.geometry.n_paths, scenario.reflection_seed)
    bound = compute_crb(scenario.geometry, scenario.motion, scenario.radar,
                        b, sigma2)
    write_crb_csv(bound, args.out)
    print(f"wrote {len(bound.parameter_names)} parameter bounds at "
          f"{args.snr} dB to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    scenario = load_scenario(args.scenario)
    spec = CampaignSpec(snr_grid_db=tuple(_parse_snr_list(args.snr)),
                        n_trials=args.trials, base_seed=args.seed)
    table = run_campaign(scenario, spec)
    emit_rmse_csv(table, args.out)
    lost = sum(n for _, n in table.excluded)
    print(f"wrote {len(table.rows)} rows ({args.trials} trials per point, "
          f"{lost} excluded) to {args.out}")
    return 0


def _cmd_contour(args) -> int:
    scenario = load_scenario(args.scenario)
    motion = scenario.motion
    names = motion.parameter_names()
    if args.axis1 and args.axis2:
        name1, values1 = _parse_axis_spec(args.axis1)
        name2, values2 = _parse_axis_spec(args.axis2)
    elif args.axis1 or args.axis2:
        raise ValueError("give both --axis1 and --axis2, or neither")
    else:
        # default: the two highest-order x coefficients, spanning the
        # truth +- 10 bound standard deviations
        sigma2 = _sigma2_for(scenario, args.snr)
        if sigma2 == 0.0:
            raise ValueError("default contour axes need a finite SNR; "
                             "pass --axis1/--axis2 explicitly")
        b = draw_reflection_vector(scenario.geometry.n_paths,
                                   scenario.reflection_seed)
        bound = compute_crb(scenario.geometry, motion, scenario.radar, b, sigma2)
        order = motion.order
        if order < 1:
            raise ValueError("default contour axes need motion order >= 1; "
                             "pass --axis1/--axis2 explicitly")
        i1, i2 = (order - 1, order) if order >= 2 else (0, 1)
        truth = motion.to_vector()
        name1, name2 = names[i1], names[i2]
        values1 = np.linspace(truth[i1] - 10 * bound.psi_std[i1],
                              truth[i1] + 10 * bound.psi_std[i1], 41)
        values2 = np.linspace(truth[i2] - 10 * bound.psi_std[i2],
                              truth[i2] + 10 * bound.psi_std[i2], 41)
    grid = make_contour(scenario, args.snr, name1, values1, name2, values2,
                        seed=args.seed)
    emit_contour(grid, args.out)
    peak1, peak2 = grid.peak()
    print(f"wrote {grid.values.shape[0]}x{grid.values.shape[1]} surface over "
          f"({grid.axis1_name}, {grid.axis2_name}) to {args.out}; "
          f"peak at ({peak1:.6g}, {peak2:.6g})")
    return 0


def _cmd_check_doppler(args) -> int:
    scenario = load_scenario(args.scenario)
    drift = check_doppler_cit(scenario)
    line = f"max per-interval doppler drift: {drift:.6g} Hz"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(line + "\n")
    print(line)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimofit",
        description="Simulate, estimate and bound polynomial target motion "
                    "for a widely spaced multistatic radar.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario(p):
        p.add_argument("--scenario", required=True,
                       help=f"preset ({', '.join(preset_names())}) or YAML path")

    p = sub.add_parser("simulate", help="synthesize a snapshot file")
    add_scenario(p)
    p.add_argument("--snr", type=float, default=0.0,
                   help="per-sample SNR in dB (inf = noiseless)")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--out", required=True, help="snapshot file to write")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="fit motion parameters to a snapshot file")
    p.add_argument("snapshots", help="snapshot file from `simulate`")
    add_scenario(p)
    p.add_argument("--seed", type=int, default=0, help="optimizer seed")
    p.add_argument("--out", default=None, help="write the record here instead of stdout")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("crb", help="write per-parameter bound standard deviations")
    add_scenario(p)
    p.add_argument("--snr", type=float, default=0.0, help="per-sample SNR in dB")
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=_cmd_crb)

    p = sub.add_parser("sweep", help="Monte-Carlo RMSE vs SNR campaign")
    add_scenario(p)
    p.add_argument("--snr", default="-10,-5,0,5,10",
                   help="comma-separated SNR grid in dB; write --snr=-10,-5,0 "
                        "so the leading dash is not read as a flag")
    p.add_argument("--trials", type=int, default=100, help="trials per SNR point")
    p.add_argument("--seed", type=int, default=0, help="campaign base seed")
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("contour", help="objective surface over two parameters")
    add_scenario(p)
    p.add_argument("--snr", type=float, default=0.0, help="per-sample SNR in dB")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--axis1", default=None, help="axis spec name:start:stop:count")
    p.add_argument("--axis2", default=None, help="axis spec name:start:stop:count")
    p.add_argument("--out", required=True, help="grid file path")
    p.set_defaults(func=_cmd_contour)

    p = sub.add_parser("check-doppler",
                       help="largest Doppler drift across one integration interval")
    add_scenario(p)
    p.add_argument("--out", default=None, help="also write the result here")
    p.set_defaults(func=_cmd_check_doppler)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # one line on stderr, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
