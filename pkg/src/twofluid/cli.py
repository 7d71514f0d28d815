"""Command-line entry point for the two-fluid verification toolkit.

Subcommands: equilibrium, spectrum, greens, convolve, simulate, certify-all.
Exit codes: 0 all checks pass, 1 a verification failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import greens, sim, spectral, waveconv
from .model import (ModelParams, ParameterError, equilibrium_report,
                    load_params, solve_equilibrium, solve_fraction_map,
                    validate_params)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twofluid",
        allow_abbrev=False,
        description="Verification toolkit and desk-scale simulator for the "
                    "compressible two-fluid model.")
    parser.add_argument("--params", metavar="PATH",
                        help="key = value parameter file")
    parser.add_argument("--out", metavar="DIR", default=".",
                        help="output directory (default: current)")
    parser.add_argument("--threads", type=int, default=0, metavar="N",
                        help="worker threads, 0 = auto")
    parser.add_argument("--tol-scale", type=float, default=1.0,
                        metavar="FLOAT",
                        help="multiply all pass/fail tolerances")
    sub = parser.add_subparsers(dest="command")

    sub.add_parser("equilibrium", help="solve and report the background state")

    p = sub.add_parser("spectrum", help="eigenvalue sweep CSV")
    p.add_argument("--k-min", type=float, default=1e-3)
    p.add_argument("--k-max", type=float, default=100.0)
    p.add_argument("--n-k", type=int, default=400)

    p = sub.add_parser("greens", help="kernel values and envelope report")
    p.add_argument("--entry", default="1,2", metavar="I,J")
    p.add_argument("--t-list", default="2,10,50", metavar="T1,T2,...")
    p.add_argument("--r-max-factor", type=float, default=4.0)

    p = sub.add_parser("convolve", help="certify one convolution case")
    p.add_argument("--case", default="K4",
                   help="case name from the registry, e.g. K4")
    p.add_argument("--t", default="4,16,64", metavar="T1,T2,...")

    p = sub.add_parser("simulate", help="evolve the system on a periodic box")
    p.add_argument("--mode", choices=("linear", "nonlinear"),
                   default="nonlinear")
    p.add_argument("--grid", type=int, default=48)
    p.add_argument("--box", type=float, default=64.0)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--t-final", type=float, default=None)

    sub.add_parser("certify-all", help="run the reduced certification suite")
    return parser


def _load(args) -> ModelParams:
    if args.params:
        return load_params(args.params)
    return validate_params(ModelParams())


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(rows: list[dict], header: list[str], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_equilibrium(args) -> int:
    eq = solve_equilibrium(_load(args))
    report = equilibrium_report(eq)
    report["schema"] = 1
    _write_json(report, os.path.join(args.out, "equilibrium.json"))
    return 0


def _cmd_spectrum(args) -> int:
    eq = solve_equilibrium(_load(args))
    ks = np.logspace(math.log10(args.k_min), math.log10(args.k_max),
                     args.n_k)
    rows = spectral.spectrum_rows(eq, ks)
    header = (["k"] + [f"re_lambda{i}" for i in range(1, 5)]
              + [f"im_lambda{i}" for i in range(1, 5)]
              + ["band", "degenerate"]
              + [f"expansion_err{i}" for i in range(1, 5)])
    _write_csv(rows, header, os.path.join(args.out, "spectrum.csv"))
    return 0


def _default_envelopes(i: int, j: int, eq) -> list[greens.Envelope]:
    """Riesz-IV entries get the slow R4 term; the rest the generic pair."""
    slow = {(1, 2), (3, 2), (1, 4), (3, 4)}
    env_h = greens.Envelope("H", 2.0, 2.0, speed=eq.c)
    if (i, j) in slow:
        return [greens.riesz_iv_envelope(), env_h]
    return [greens.Envelope("D", 1.5, 1.5), env_h]


def _cmd_greens(args) -> int:
    eq = solve_equilibrium(_load(args))
    try:
        i, j = (int(s) for s in args.entry.split(","))
        t_list = [float(s) for s in args.t_list.split(",")]
    except ValueError:
        print("error: --entry expects I,J and --t-list floats",
              file=sys.stderr)
        return 2
    recon = greens.GreenReconstructor(eq)
    rows = greens.kernel_csv_rows(recon, i, j, t_list,
                                  r_max_factor=args.r_max_factor)
    _write_csv(rows, ["r", "t", "value"],
               os.path.join(args.out, "kernel.csv"))
    report = greens.verify_entry_envelope(
        recon, i, j, _default_envelopes(i, j, eq), n_t=8, nr=128)
    payload = report.to_json()
    payload["pass"] = bool(report.trend_ratio <= 2.0 * args.tol_scale)
    _write_json(payload, os.path.join(args.out, "envelope.json"))
    return 0 if payload["pass"] else 1


def _cmd_convolve(args) -> int:
    eq = solve_equilibrium(_load(args))
    cases = waveconv.make_cases(eq.c)
    if args.case not in cases:
        print(f"error: unknown case {args.case!r}; choose from "
              f"{sorted(cases)}", file=sys.stderr)
        return 2
    try:
        t_list = tuple(float(s) for s in args.t.split(","))
    except ValueError:
        print("error: --t expects comma-separated floats", file=sys.stderr)
        return 2
    threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    report = waveconv.verify_case(cases[args.case], t_list=t_list,
                                  threads=threads)
    payload = report.to_json()
    payload["pass"] = bool(report.trend_ratio <= 2.0 * args.tol_scale)
    _write_json(payload, os.path.join(args.out, "convolve.json"))
    return 0 if payload["pass"] else 1


def _cmd_simulate(args) -> int:
    eq = solve_equilibrium(_load(args))
    try:
        rows, final = sim.run_simulation(
            eq, mode=args.mode, n=args.grid, L=args.box, eps=args.eps,
            t_final=args.t_final)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_rows = [{
        "t": d.t, "mass_p": d.mass_p, "mass_m": d.mass_m,
        "momentum": d.momentum_norm,
        "l2_np": d.l2["n_p"], "l2_nm": d.l2["n_m"],
        "l2_mp": d.l2["m_p"], "l2_mm": d.l2["m_m"],
        "l2_combo": d.l2["combo"], "ring_r": d.ring_r,
    } for d in rows]
    header = ["t", "mass_p", "mass_m", "momentum", "l2_np", "l2_nm",
              "l2_mp", "l2_mm", "l2_combo", "ring_r"]
    _write_csv(out_rows, header, os.path.join(args.out, "diagnostics.csv"))
    sim.dump_state(final, os.path.join(args.out, "state.bin"))
    return 0


# ---------------------------------------------------------------------------
# reduced certification suite

def _certification_checks(params: ModelParams, threads: int,
                          tol_scale: float = 1.0):
    """Build the list of {name, pass, metric, tolerance} check records."""
    eq = solve_equilibrium(params)
    checks = []

    def add(name: str, metric: float, tol: float, invert: bool = False):
        tol = tol * tol_scale
        ok = (metric > tol) if invert else (metric <= tol)
        checks.append({"name": name, "pass": bool(ok),
                       "metric": float(metric), "tolerance": float(tol)})

    # background state
    add("equilibrium_density", abs(eq.rho_bar_plus - 2.0), 1e-10)
    add("equilibrium_sound_speed", abs(eq.c - 2.0), 1e-10)
    eq_asym = solve_equilibrium(
        validate_params(ModelParams(A_minus=2.0)))
    add("equilibrium_asymmetric",
        abs(eq_asym.rho_bar_plus - (1.0 + math.sqrt(2.0))), 1e-10)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        p = validate_params(ModelParams(
            A_plus=float(rng.uniform(0.5, 2.0)),
            A_minus=float(rng.uniform(0.5, 2.0)),
            gamma_plus=float(rng.uniform(1.2, 3.0)),
            gamma_minus=float(rng.uniform(1.2, 3.0))))
        e = solve_equilibrium(p)
        worst = max(worst, abs(e.beta1 * e.beta4 - e.beta2 ** 2))
    add("beta_product_identity", worst, 1e-13)
    rp, rm, _, _ = solve_fraction_map(1.0, 1.0, params, eq=eq)
    add("fraction_map_roundtrip",
        abs(rp - eq.rho_bar_plus) + abs(rm - eq.rho_bar_minus), 1e-10)

    # spectrum
    lam = spectral.eigen_branches(1e-3, eq).lambdas
    ref = spectral.low_freq_expansion(1e-3, eq)
    add("low_freq_expansion", float(np.abs(lam - ref).max()), 1e-8)
    gap = spectral.mid_band_gap(eq)
    add("mid_band_gap_positive", gap, 0.0, invert=True)
    add("high_freq_roots",
        float(max(spectral.high_freq_rel_err(50.0, eq).max(),
                  spectral.high_freq_rel_err(100.0, eq).max())), 0.05)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(10):
        k = float(rng.uniform(1e-3, 20.0))
        t = float(rng.uniform(0.1, 10.0))
        a = spectral.semigroup(k, t, eq)
        b = spectral.semigroup(k, t / 2, eq) @ spectral.semigroup(k, t / 2,
                                                                  eq)
        worst = max(worst, float(np.abs(a - b).max()))
    add("semigroup_dual_path", worst, 1e-8)
    add("singular_combination_cancels",
        spectral.singular_combination_residual(eq, 1e-4), 1e-6)

    # Green's function
    MP, _, M3r, _, M4r, _ = greens.coefficient_matrices(eq)
    add("leading_matrices_sum_to_identity",
        float(np.abs(MP + M3r + M4r - np.eye(4)).max()), 1e-12)
    recon = greens.GreenReconstructor(eq)
    env_kwargs = dict(n_t=8, nr=128)
    rep = greens.verify_entry_envelope(
        recon, 1, 2, [greens.riesz_iv_envelope(),
                      greens.Envelope("H", 2.0, 2.0, speed=eq.c)],
        **env_kwargs)
    add("envelope_G12_riesz", rep.trend_ratio, 2.0)
    rep = greens.verify_entry_envelope(
        recon, 2, 2, [greens.Envelope("D", 1.5, 1.5),
                      greens.Envelope("H", 2.0, 2.0, speed=eq.c)],
        **env_kwargs)
    add("envelope_G22", rep.trend_ratio, 2.0)
    asym = solve_equilibrium(validate_params(
        ModelParams(A_minus=2.0, mu_minus=0.7, sigma_plus=0.02)))
    recon_a = greens.GreenReconstructor(asym)
    rep = greens.verify_cancellation(recon_a)
    add("cancellation_combo", rep.trend_ratio, 2.0)
    rep = greens.verify_cancellation(recon_a, swap_weights=True)
    add("cancellation_swapped_fails", rep.trend_ratio, 2.0, invert=True)

    # convolution suite (fast members)
    cases = waveconv.make_cases(eq.c)
    for name in ("I1", "I2", "K1", "K4"):
        rep = waveconv.verify_case(cases[name], threads=threads)
        add(f"convolution_{name}", rep.trend_ratio, 2.0)
    rep = waveconv.verify_case(waveconv.false_case(eq.c), threads=threads)
    add("convolution_false_case_fails", rep.trend_ratio, 2.0, invert=True)
    rs = np.linspace(1e-4, 8.0, 120)
    from scipy.special import erf
    got = waveconv.riesz_gradient(lambda s: np.exp(-s * s), rs)
    exact = (math.sqrt(math.pi) / 4.0 * erf(rs)
             - 0.5 * rs * np.exp(-rs ** 2)) / rs ** 2
    add("riesz_gradient_gaussian", float(np.abs(got - exact).max()), 1e-8)
    dr = waveconv.double_riesz_check([1.0, 10.0, 100.0])
    add("double_riesz_stable",
        float(np.max(dr["C_by_t"]) / np.min(dr["C_by_t"])), 2.0)

    # simulator
    slopes = sim.decay_slope_table(eq)
    add("decay_slope_density", abs(slopes["n_p"] + 0.25), 0.05)
    add("decay_slope_momentum", abs(slopes["m_p"] + 0.75), 0.05)
    add("decay_slope_combination", abs(slopes["combo"] + 0.75), 0.05)
    rows, _ = sim.run_simulation(eq, mode="nonlinear", n=24, L=24.0,
                                 eps=1e-3, t_final=6.0)
    scale = 1e-3 * (2 * 24.0) ** 3
    drift = max(abs(r.mass_p - rows[0].mass_p)
                + abs(r.mass_m - rows[0].mass_m) for r in rows)
    add("mass_conservation", drift / scale, 1e-12)
    mscale = max(rows[0].l2["m_p"] * (2 * 24.0) ** 1.5, 1e-30)
    drift = max(np.abs(r.momentum - rows[0].momentum).max() for r in rows)
    add("momentum_conservation", drift / mscale, 1e-10)
    lrows, lfinal = sim.run_simulation(eq, mode="linear", n=32, L=64.0,
                                       eps=1e-3, t_final=8.0)
    add("huygens_ring_radius",
        abs(lrows[-1].ring_r - eq.c * lfinal.t),
        math.sqrt(1.0 + lfinal.t))
    return checks


def _cmd_certify_all(args) -> int:
    threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    checks = _certification_checks(_load(args), threads,
                                   tol_scale=args.tol_scale)
    payload = {
        "schema": 1,
        "checks": checks,
        "pass_count": sum(c["pass"] for c in checks),
        "fail_count": sum(not c["pass"] for c in checks),
    }
    _write_json(payload, os.path.join(args.out, "certify.json"))
    return 0 if payload["fail_count"] == 0 else 1


_COMMANDS = {
    "equilibrium": _cmd_equilibrium,
    "spectrum": _cmd_spectrum,
    "greens": _cmd_greens,
    "convolve": _cmd_convolve,
    "simulate": _cmd_simulate,
    "certify-all": _cmd_certify_all,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    if args.tol_scale <= 0.0:
        print("error: --tol-scale must be positive", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    try:
        return _COMMANDS[args.command](args)
    except (ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
