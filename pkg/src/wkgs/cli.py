"""Command-line orchestration: a thin argparse surface over the library.

Subcommands: check-identities, evolve, verify-balance, fit-decay,
convergence.  Exit codes: 0 success / all checks pass; 1 a verification
check failed; 2 usage or configuration error (bad flags, missing files,
schema violations, run preconditions); 3 numerical abort (non-finite
values during evolution).

Artifacts are JSON lines on stdout plus the files named by the config;
every one embeds the config sha256 and the artifact version.  The env var
WKGS_THREADS caps worker threads; all reductions are fixed-order, so
outputs are bit-identical for any thread count.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import ARTIFACT_VERSION
from .balance import fit_decay, verify_balance
from .config import ConfigError, load_config
from .energies import (
    SliceSampler,
    norm_value,
    read_energy_csv,
    slice_records,
    support_cut_radius,
    write_energy_csv,
)
from .identity_lab import CHECK_IDS, IdentityReport, run_all_checks
from .multipliers import MultiplierSpec
from .solver.band import BandCoverageError, write_snapshot
from .solver.manufactured import manufactured_case
from .solver.radial import NumericalAbort, SupportEscapeError, evolve as start_run

USAGE_ERROR = 2
NUMERICAL_ABORT = 3


def _meta_line(artifact, sha):
    return json.dumps(
        {"artifact": artifact, "wkgs_version": ARTIFACT_VERSION, "config_sha256": sha}
    )


def _flags_sha(args, names):
    """Config hash stand-in for commands driven by flags alone."""
    resolved = {name: getattr(args, name.replace("-", "_")) for name in names}
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# --- check-identities ----------------------------------------------------------


def _cmd_check_identities(args):
    sha = _flags_sha(args, ("samples", "seed", "tol", "precision"))
    print(_meta_line("identity-report", sha))
    if args.samples == 0:
        print("warning: --samples 0, nothing checked (vacuous pass)", file=sys.stderr)
        for cid in CHECK_IDS:
            rep = IdentityReport(
                identity_id=cid,
                samples=0,
                max_abs_residual=0.0,
                max_rel_residual=0.0,
                tolerance=args.tol if args.tol is not None else 0.0,
                verdict="pass",
                seed=args.seed,
            )
            print(rep.to_json_line())
        return 0
    reports = run_all_checks(
        samples=args.samples, seed=args.seed, tol=args.tol, precision=args.precision
    )
    for rep in reports:
        print(rep.to_json_line())
    return 0 if all(r.verdict == "pass" for r in reports) else 1


# --- evolve ----------------------------------------------------------------------


def _support_cut(grid, support_radius, r_cut=None):
    """r_cut(s): light-cone radius of the data support plus a stencil margin.

    An explicit r_cut (the config's asserted all-time solution support,
    e.g. for forced manufactured runs) caps the estimate.
    """
    margin = 8.0 * grid.h

    def cut(s):
        lc = support_cut_radius(s, grid.t0, support_radius) + margin
        return lc if r_cut is None else min(lc, float(r_cut))

    return cut


def _grid_id(grid, field):
    return f"{grid.mode}-n{grid.n_cells}:{field}"


def _run_sampled(cfg, grid=None):
    """Evolve the configured model while streaming the configured slices."""
    grid = grid if grid is not None else cfg.grid
    sampler = SliceSampler(
        grid,
        cfg.s_values,
        cfg.model.fields,
        k_max=cfg.k_max,
        r_cut=_support_cut(grid, cfg.data.support_radius, cfg.r_cut),
        source=cfg.model.source_fn(),
    )
    run = start_run(cfg.model, grid, cfg.data)
    run.band.meta["config_sha256"] = cfg.sha256
    run.band.meta["artifact_version"] = ARTIFACT_VERSION
    run.run_to_end(on_slice=sampler.on_slice)
    slices = sorted(sampler.results(), key=lambda sd: sd.s)
    return run, slices


def _energy_records(cfg, grid, slices):
    """CSV rows for every (slice, field, word, a), with running NWa integrals."""
    records = []
    c = cfg.model.c_mass
    s_arr = [sd.s for sd in slices]
    for field in cfg.model.fields:
        gid = _grid_id(grid, field)
        for a in cfg.a_list:
            inc = [norm_value("NWa_increment", sd, field, a=a) for sd in slices]
            cum = 0.0
            for k, sd in enumerate(slices):
                if k > 0:
                    cum += 0.5 * (inc[k - 1] + inc[k]) * (s_arr[k] - s_arr[k - 1])
                records.extend(
                    slice_records(sd, field, a, c, gid, nwa_cum=cum)
                )
    return records


def _cmd_evolve(args):
    cfg = load_config(args.config)
    run, slices = _run_sampled(cfg)
    records = _energy_records(cfg, cfg.grid, slices)
    os.makedirs(cfg.out_dir, exist_ok=True)
    csv_path = os.path.join(cfg.out_dir, cfg.energies_csv)
    write_energy_csv(csv_path, records, config_sha256=cfg.sha256)
    print(_meta_line("evolve", cfg.sha256))
    print(json.dumps({"file": csv_path, "kind": "energies-csv", "rows": len(records)}))
    if cfg.snapshot_path:
        snap_path = os.path.join(cfg.out_dir, cfg.snapshot_path)
        write_snapshot(run.band, snap_path)
        print(json.dumps({"file": snap_path, "kind": "snapshot", "t": run.t}))
    return 0


# --- verify-balance ---------------------------------------------------------------


def _cmd_verify_balance(args):
    cfg = load_config(args.config)
    if cfg.grid.mode != "radial":
        raise ConfigError("verify-balance needs a radial-mode config")
    # the slab quadrature reads wide t-ranges: keep the full history
    cfg = cfg.with_grid(band_depth=0)
    try:
        spec = MultiplierSpec(args.multiplier, args.a)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    field = cfg.model.fields[0]
    c_mass = cfg.model.c_mass if (
        spec.kind == "T" and cfg.model.kind == "klein_gordon"
    ) else 0.0
    run = start_run(cfg.model, cfg.grid, cfg.data)
    run.run_to_end()
    report = verify_balance(
        run.band,
        spec,
        args.s0,
        args.s1,
        field=field,
        source=cfg.model.source_fn(),
        c_mass=c_mass,
        r_cut=_support_cut(cfg.grid, cfg.data.support_radius, cfg.r_cut),
        grid=cfg.grid,
        grid_id=_grid_id(cfg.grid, field),
    )
    print(_meta_line("balance-report", cfg.sha256))
    print(report.to_json())
    return 0


# --- fit-decay ----------------------------------------------------------------------


A_DEPENDENT = ("EWa", "E1a", "E2a", "NWa_cum")
FIT_COLUMNS = ("EW", "EKG") + A_DEPENDENT


def _cmd_fit_decay(args):
    try:
        meta, rows = read_energy_csv(args.input)
    except FileNotFoundError:
        raise ConfigError(f"input not found: {args.input}")
    except ValueError as exc:
        raise ConfigError(str(exc))
    sha = ""
    for tok in meta.lstrip("# ").split():
        if tok.startswith("config-sha256="):
            sha = tok.split("=", 1)[1]
    rows = [r for r in rows if r["I"] == "00" and r["J"] == "0"]
    if not rows:
        raise ConfigError("no k=0 rows in the CSV")
    groups = {}
    for r in rows:
        if args.column in A_DEPENDENT:
            key = (r["grid_id"], r["a"])
        else:
            key = (r["grid_id"], None)  # a-independent: collapse duplicates
        groups.setdefault(key, {})[r["s"]] = r[args.column]
    print(_meta_line("decay-fit", sha))
    for (gid, a), series in sorted(groups.items()):
        sid = f"{args.column}:{gid}" + (f":a={a:g}" if a is not None else "")
        try:
            fit = fit_decay(
                sorted(series.items()), series_id=sid,
                s_min=args.smin, s_max=args.smax,
            )
        except ValueError as exc:
            raise ConfigError(f"{sid}: {exc}")
        print(fit.to_json())
    return 0


# --- convergence ---------------------------------------------------------------------


def _final_error(cfg, grid):
    """Max-over-fields L2(dx) error of the final slice vs the exact traces."""
    run = start_run(cfg.model, grid, cfg.data)
    run.run_to_end()
    worst = 0.0
    from .energies import simpson_coefficients

    # stay two nodes clear of the outer edge (4th-order stencil width);
    # the support-escape precondition keeps the field zero there anyway
    n_eval = run.r.size - 2
    r = run.r[:n_eval]
    coef = simpson_coefficients(n_eval, grid.h)
    for field in cfg.model.fields:
        case = manufactured_case(cfg.raw["data"]["profiles"][field]["case"])
        num = run.band.sample_many(field, run.t, np.arange(n_eval))
        diff = num - case.phi(run.t, r)
        err = math.sqrt(4.0 * math.pi * float(np.sum(coef * (r * diff) ** 2)))
        worst = max(worst, err)
    return worst


def _cmd_convergence(args):
    cfg = load_config(args.config)
    if cfg.convergence_n is None:
        raise ConfigError("config lacks a 'convergence' section")
    if cfg.grid.mode != "radial":
        raise ConfigError("convergence sweeps run on the radial lane")
    if cfg.model.kind == "coupled":
        raise ConfigError(
            "the coupled system has no exact manufactured solution; "
            "run convergence on linear_wave or klein_gordon"
        )
    for field in cfg.model.fields:
        prof = cfg.raw["data"]["profiles"][field]
        if prof["kind"] != "manufactured":
            raise ConfigError(
                "convergence needs manufactured profiles with exact "
                f"solutions; field {field!r} has kind {prof['kind']!r}"
            )
        case = manufactured_case(prof["case"])
        want_eq = "kg" if cfg.model.kind == "klein_gordon" else "wave"
        if case.eq != want_eq:
            raise ConfigError(
                f"case {case.name!r} solves a {case.eq} equation, but the "
                f"model is {cfg.model.kind}"
            )
        if case.eq == "kg" and cfg.model.c_mass != case.c:
            raise ConfigError(
                f"case {case.name!r} assumes mass c={case.c}; the model "
                f"has c_mass={cfg.model.c_mass}"
            )
        if (case.forcing is None) != (cfg.model.source is None):
            raise ConfigError(
                f"case {case.name!r} and model.source disagree about the "
                "forcing; a forced case needs model.source set to it"
            )
        if case.forcing is not None and cfg.model.source != prof["case"]:
            raise ConfigError(
                f"forced convergence runs need model.source == {prof['case']!r}"
            )
    print(_meta_line("convergence-table", cfg.sha256))
    prev = None
    orders = []
    for n in cfg.convergence_n:
        sub = cfg.with_grid(n_cells=int(n))
        err = _final_error(sub, sub.grid)
        order = math.log2(prev / err) if (prev and err > 0) else None
        if order is not None:
            orders.append(order)
        print(json.dumps({
            "n_cells": int(n),
            "h": sub.grid.h,
            "error_l2": err,
            "observed_order": order,
        }))
        prev = err
    if orders:
        print(f"# mean observed order: {sum(orders) / len(orders):.3f}")
    return 0


# --- entry point -----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="wkgs",
        description="hyperboloidal energy laboratory for wave/Klein-Gordon fields",
    )
    sub = p.add_subparsers(dest="command", required=True)

    ci = sub.add_parser("check-identities", help="run the pointwise identity suite")
    ci.add_argument("--samples", type=int, default=10000)
    ci.add_argument("--seed", type=int, default=2026)
    ci.add_argument("--tol", type=float, default=None)
    ci.add_argument("--precision", choices=("f64", "extended"), default="f64")
    ci.set_defaults(fn=_cmd_check_identities)

    ev = sub.add_parser("evolve", help="run a configured evolution, write energies CSV")
    ev.add_argument("--config", required=True)
    ev.set_defaults(fn=_cmd_evolve)

    vb = sub.add_parser("verify-balance", help="assemble a slab balance report")
    vb.add_argument("--config", required=True)
    vb.add_argument("--multiplier", required=True, choices=("T", "Ka", "Ya", "Kconf"))
    vb.add_argument("--a", type=float, required=True)
    vb.add_argument("--s0", type=float, required=True)
    vb.add_argument("--s1", type=float, required=True)
    vb.set_defaults(fn=_cmd_verify_balance)

    fd = sub.add_parser("fit-decay", help="fit s-power laws to energies CSV columns")
    fd.add_argument("--input", required=True)
    fd.add_argument("--column", required=True, choices=FIT_COLUMNS)
    fd.add_argument("--smin", type=float, default=None)
    fd.add_argument("--smax", type=float, default=None)
    fd.set_defaults(fn=_cmd_fit_decay)

    cv = sub.add_parser("convergence", help="observed-order sweep on manufactured runs")
    cv.add_argument("--config", required=True)
    cv.set_defaults(fn=_cmd_convergence)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return USAGE_ERROR if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (SupportEscapeError, BandCoverageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return NUMERICAL_ABORT


if __name__ == "__main__":
    sys.exit(main())
