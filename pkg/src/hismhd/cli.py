"""Command-line front end.

Subcommands:
    gen-data   build the initial data, write checkpoint + provenance CSV
    run        integrate from a checkpoint, write series CSV + checkpoints
    verify     run verification suites (lemmas | identities | multipliers |
               residual | all)
    decay-fit  fit free-flow decay rates, write the report CSV

Exit codes: 0 success, 1 verification failure, 2 usage error,
3 construction infeasibility, 4 integration failure.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__, analysis, checkpoint, diagnostics, dynamics, integrator
from . import quadrature, spectral
from .config import ConfigError, RunConfig, load_config
from .initdata import AnnulusError, CutoffError, assemble_initial_data

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_CONSTRUCTION = 3
EXIT_INTEGRATION = 4


def _build_parser():
    parser = argparse.ArgumentParser(prog="hismhd", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="key = value config file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--threads", type=int, metavar="N",
                       help="FFT worker threads (default: HISMHD_THREADS or 1)")
        p.add_argument("--seed", type=int, metavar="N", help="override the RNG seed")

    p = sub.add_parser("gen-data", help="construct initial data")
    common(p)

    p = sub.add_parser("run", help="integrate from a checkpoint")
    common(p)
    p.add_argument("--restart", metavar="CHK",
                   help="checkpoint to start from (default: OUT/initial.chk)")

    p = sub.add_parser("verify", help="run verification suites")
    common(p)
    p.add_argument("--which", default="all",
                   choices=["lemmas", "identities", "multipliers", "residual", "all"])

    p = sub.add_parser("decay-fit", help="fit free-flow decay rates")
    common(p)
    return parser


def _load(args) -> RunConfig:
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.threads is not None:
        overrides["threads"] = args.threads
    elif os.environ.get("HISMHD_THREADS"):
        overrides["threads"] = os.environ["HISMHD_THREADS"]
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = RunConfig()
        for key, value in overrides.items():
            setattr(cfg, key, value if key == "out_dir" else type(getattr(cfg, key))(value))
        cfg.validate()
    spectral.set_fft_workers(cfg.threads)
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handler = {
        "gen-data": cmd_gen_data,
        "run": cmd_run,
        "verify": cmd_verify,
        "decay-fit": cmd_decay_fit,
    }[args.command]
    return handler(cfg, args)


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------

def cmd_gen_data(cfg: RunConfig, args) -> int:
    params = cfg.sim_params()
    grid = spectral.make_grid(cfg.n, cfg.box_length)
    try:
        u0, b0, record = assemble_initial_data(params, grid)
    except AnnulusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except CutoffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION

    state = dynamics.State(u=u0, b=b0, t=0.0)
    chk_path = os.path.join(cfg.out_dir, "initial.chk")
    checkpoint.write_checkpoint(chk_path, grid, state, params, dt_next=cfg.dt_init)

    items = [
        ("delta_eff", record.delta_eff),
        ("delta_target", record.delta_target),
        ("mode_count", record.mode_count),
        ("norm_u0_h3", record.norm_u0_h3),
        ("norm_b0_h3", record.norm_b0_h3),
        ("norm_u0_linf", record.norm_u0_linf),
        ("norm_b0_linf", record.norm_b0_linf),
        ("projection_defect_u", record.projection_defect_u),
        ("projection_defect_b", record.projection_defect_b),
        ("divergence_defect_u", record.divergence_defect_u),
        ("divergence_defect_b", record.divergence_defect_b),
    ]
    for k in range(6):
        items.append((f"cutoff_radial_derivative_sup_{k}", record.cutoff.radial_derivative_sup[k]))
    comments = diagnostics.standard_comments(grid, params, extra=record.notes)
    diagnostics.write_keyvalue_csv(os.path.join(cfg.out_dir, "provenance.csv"), comments, items)
    print(f"wrote {chk_path} and provenance.csv (delta_eff={record.delta_eff:.6g}, "
          f"modes={record.mode_count})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def cmd_run(cfg: RunConfig, args) -> int:
    restart = args.restart or os.path.join(cfg.out_dir, "initial.chk")
    if not os.path.exists(restart):
        print(f"error: no checkpoint at {restart}; run gen-data first", file=sys.stderr)
        return EXIT_USAGE
    grid, state, params, header = checkpoint.read_checkpoint(restart)
    icfg = cfg.integrator_config()
    if header.get("dt_next", 0.0) > 0.0:
        icfg.dt_init = min(max(header["dt_next"], icfg.dt_min), icfg.dt_max)

    flows = analysis.ReferenceFlows(grid, params)
    rows = []
    counter = {"chk": 0}

    def diag_sink(st, dt_next):
        budget = dynamics.energy_budget(grid, st, params)
        norm_u = spectral.sobolev_norm(grid, st.u, 3.0)
        norm_b = spectral.sobolev_norm(grid, st.b, 3.0)
        pert_u, pert_b = analysis.perturbation_norms(grid, st, flows)
        rows.append([
            st.t, dt_next, norm_u, norm_b, pert_u, pert_b,
            dynamics.total_energy(grid, st),
            budget.terms["dissipation_u"], budget.terms["advection_u"], budget.terms["lorentz"],
            budget.terms["dissipation_b"], budget.terms["advection_b"],
            budget.terms["stretching"], budget.terms["hall"], budget.terms["ionslip"],
            budget.total,
        ])

    def chk_sink(st, dt_next, reason):
        if reason == "periodic":
            name = f"checkpoint_{counter['chk']:04d}.chk"
            counter["chk"] += 1
        else:
            name = "final.chk"
        checkpoint.write_checkpoint(os.path.join(cfg.out_dir, name), grid, st, params, dt_next)

    record = integrator.run(grid, state, params, icfg,
                            diagnostics_sink=diag_sink, checkpoint_sink=chk_sink)

    annulus_note = (
        f"annulus delta_eff={diagnostics.fmt(flows.annulus.delta_eff)} "
        f"mode_count={flows.annulus.mode_count}"
        if flows.annulus is not None else "annulus empty (zero amplitudes)"
    )
    comments = diagnostics.standard_comments(grid, params, extra=[
        annulus_note,
        f"scheme_order={icfg.scheme_order} tolerance={diagnostics.fmt(icfg.tolerance)}",
        f"termination={record.termination}",
    ])
    diagnostics.write_csv(os.path.join(cfg.out_dir, "series.csv"), comments,
                          diagnostics.SERIES_COLUMNS, rows)

    verdict = analysis.theorem_monitor(
        [(r[0], r[4], r[5]) for r in rows], params.m0
    )
    diagnostics.write_keyvalue_csv(
        os.path.join(cfg.out_dir, "verdict.csv"), comments, [
            ("sup_perturbation_h3", verdict.sup_perturbation),
            ("t_at_sup", verdict.t_at_sup),
            ("stated_threshold", verdict.stated_threshold),
            ("configured_threshold", verdict.configured_threshold),
            ("within_stated", verdict.within_stated),
            ("passed", verdict.passed),
            ("t_end", verdict.t_end),
            ("termination", record.termination),
            ("accepted_steps", record.accepted),
            ("rejected_steps", record.rejected),
        ])
    print(f"run: {record.termination} after {record.accepted} steps "
          f"(t={record.t_final:.6g}, wall {record.wall_time:.1f}s); "
          f"sup(|U|+|B|)_H3={verdict.sup_perturbation:.6g} "
          f"vs threshold {verdict.configured_threshold:.6g}")
    if record.termination != "finished":
        return EXIT_INTEGRATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_identities(cfg, grid, params, failures):
    results = []
    for trial in range(20):
        state = dynamics.random_state(grid, seed=1000 + trial, amplitude=1.0 + 0.1 * trial)
        budget = dynamics.energy_budget(grid, state, params)
        rel = abs(budget.total - budget.functional_total) / max(abs(budget.functional_total), 1e-300)
        norm_b = spectral.l2_norm(grid, state.b)
        grad_b = spectral.l2_norm(grid, np.stack(
            [spectral.gradient(grid, state.b[i]) for i in range(3)]))
        hall_scale = max(abs(params.sigma) * grad_b * norm_b, 1e-300)
        hall_ok = abs(budget.terms["hall"]) <= 1e-11 * hall_scale
        ion_rel = abs(budget.terms["ionslip"] - budget.ionslip_functional) / max(
            abs(budget.ionslip_functional), 1e-300)
        if rel > 1e-10:
            failures.append(f"energy law residual {rel:.3e} at trial {trial}")
        if not hall_ok:
            failures.append(f"hall null-work {budget.terms['hall']:.3e} at trial {trial}")
        if ion_rel > 1e-10:
            failures.append(f"ion-slip identity residual {ion_rel:.3e} at trial {trial}")
        results.append((trial, rel, budget.terms["hall"], ion_rel))
    return ["trial", "energy_law_rel", "hall_work", "ionslip_rel"], results


def cmd_verify(cfg: RunConfig, args) -> int:
    params = cfg.sim_params()
    grid = spectral.make_grid(cfg.n, cfg.box_length)
    which = args.which
    failures = []
    summary = []

    if which in ("identities", "all"):
        header, rows = _verify_identities(cfg, grid, params, failures)
        diagnostics.write_csv(os.path.join(cfg.out_dir, "verify_identities.csv"),
                              diagnostics.standard_comments(grid, params), header, rows)
        summary.append(f"identities: {len(rows)} random states checked")

    if which in ("lemmas", "all"):
        flows = analysis.ReferenceFlows(grid, params)
        t_grid = np.linspace(0.0, max(cfg.t_end, 1.0), 9)
        for flow_name in ("f", "g"):
            amp = params.alpha1 if flow_name == "f" else params.alpha2
            if amp == 0.0:
                continue
            rep = analysis.decay_rate_check(flows, flow_name, t_grid)
            diagnostics.write_report_csv(
                os.path.join(cfg.out_dir, f"verify_decay_{flow_name}.csv"), rep, grid, params)
            for name, ok in rep.checks.items():
                if not ok:
                    failures.append(f"decay_{flow_name}: {name}")
        rep = analysis.interaction_bounds_eval(flows, t_grid)
        diagnostics.write_report_csv(
            os.path.join(cfg.out_dir, "verify_interactions.csv"), rep, grid, params)
        for name, ok in rep.checks.items():
            if not ok:
                failures.append(f"interactions: {name}")
        summary.append(
            f"lemmas: decay + interactions, cross integral "
            f"{rep.metadata['cross_integral']:.6g} (delta_eff={rep.metadata['delta_eff']:.6g})")

    if which in ("multipliers", "all"):
        rows = []
        for alpha in (0.0, 1.0, 2.0):
            zero = quadrature.multiplier_bounds_check(0.0, alpha)
            if zero.sup_quadratic_over_frac != 0.0 or zero.sup_frac_over_quadratic != 0.0:
                failures.append(f"multipliers: nonzero supremum at delta=0, alpha={alpha}")
            for delta in (0.25, 0.125):
                rep = quadrature.multiplier_bounds_check(delta, alpha)
                rows.append([
                    alpha, delta, rep.sup_quadratic_over_frac, rep.sup_frac_over_quadratic,
                    rep.stated_bounds[0], rep.stated_bounds[1],
                    rep.violates_stated[0], rep.violates_stated[1],
                ])
        diagnostics.write_csv(
            os.path.join(cfg.out_dir, "verify_multipliers.csv"),
            diagnostics.standard_comments(grid, params),
            ["alpha", "delta", "sup1", "sup2", "stated1", "stated2",
             "violates1", "violates2"], rows)
        summary.append("multipliers: suprema reported; stated constants flagged, not asserted")

    if which in ("residual", "all"):
        flows = analysis.ReferenceFlows(grid, params)
        rows = []
        for trial in range(3):
            u = dynamics.random_divfree_field(grid, 2000 + trial, 0.5) + flows.cutoff_flow("f", 0.2)
            b = dynamics.random_divfree_field(grid, 3000 + trial, 0.5) + flows.cutoff_flow("g", 0.2)
            state = dynamics.State(
                u=spectral.leray_project(grid, u), b=spectral.leray_project(grid, b), t=0.2)
            res = analysis.perturbation_residual(grid, state, flows, params)
            rows.append([trial, res["relative_u"], res["relative_b"]])
            if res["relative_u"] > 1e-9 or res["relative_b"] > 1e-9:
                failures.append(
                    f"residual: trial {trial} relative ({res['relative_u']:.3e}, "
                    f"{res['relative_b']:.3e}) exceeds 1e-9")
        diagnostics.write_csv(os.path.join(cfg.out_dir, "verify_residual.csv"),
                              diagnostics.standard_comments(grid, params),
                              ["trial", "relative_u", "relative_b"], rows)
        summary.append(f"residual: {len(rows)} decomposed states checked")

    report_path = os.path.join(cfg.out_dir, "verify_summary.txt")
    with open(report_path, "w") as fh:
        fh.write(f"hismhd verify --which {which}\n")
        for line in summary:
            fh.write(line + "\n")
        if failures:
            fh.write("FAILURES:\n")
            for line in failures:
                fh.write(f"  {line}\n")
        else:
            fh.write("all checks passed\n")
    if failures:
        for line in failures:
            print(f"FAIL: {line}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"verify --which {which}: all checks passed ({report_path})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# decay-fit
# ---------------------------------------------------------------------------

def cmd_decay_fit(cfg: RunConfig, args) -> int:
    params = cfg.sim_params()
    grid = spectral.make_grid(cfg.n, cfg.box_length)
    try:
        flows = analysis.ReferenceFlows(grid, params)
    except AnnulusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    t_grid = np.linspace(0.0, max(cfg.t_end, 1.0), 9)
    failures = []
    for flow_name in ("f", "g"):
        amp = params.alpha1 if flow_name == "f" else params.alpha2
        if amp == 0.0:
            continue
        rep = analysis.decay_rate_check(flows, flow_name, t_grid)
        path = os.path.join(cfg.out_dir, f"decay_{flow_name}.csv")
        diagnostics.write_report_csv(path, rep, grid, params)
        fit = rep.fits[f"sup_norm_{flow_name}"]
        print(f"{flow_name}: fitted rate {fit.rate:.6g}, lattice rate "
              f"{rep.expected_rates['lattice']:.6g}, floor {rep.expected_rates['floor']:.6g}")
        failures.extend(name for name, ok in rep.checks.items() if not ok)
    if failures:
        for line in failures:
            print(f"FAIL: {line}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
