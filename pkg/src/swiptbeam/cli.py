"""Command-line front end.

Subcommands
-----------
``design``            solve one channel realization and save the design as JSON
``verify``            audit a saved design file with the exact worst-case oracles
``cdf``               robust vs perfect-CSI objective distribution experiment
``rmin-sweep``        harvested energy vs secrecy-rate target
``k-sweep``           harvested energy / feasibility vs number of idle receivers
``solver-selftest``   conic engine checks against known closed-form answers

Exit codes: 0 success; 1 a verification or self-test check failed; 2
configuration error; 3 the run produced no feasible design at all.  The
``SWIPT_THREADS`` environment variable caps experiment worker processes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigError, baseline_params, load_params
from .design import design
from .experiments import ExperimentConfig, run_cdf, run_k_sweep, run_rmin_sweep
from .model import ChannelSet, SystemParams, TransmitDesign, generate_channels
from .selftest import run_selftest
from .worstcase import verify_robust_design

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3

_MARGIN_TOL = -1e-6  # audits treat anything above this as satisfied


def _complex_out(arr) -> list:
    a = np.asarray(arr, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _complex_in(data) -> np.ndarray:
    a = np.asarray(data, dtype=np.float64)
    return a[..., 0] + 1j * a[..., 1]


def _params_out(p: SystemParams) -> dict:
    return {
        "nt": p.nt, "num_ehr": p.num_ehr, "num_pu": p.num_pu,
        "sigma_s2": p.sigma_s2, "sigma_e2": p.sigma_e2, "sigma_sp2": p.sigma_sp2,
        "eta": p.eta, "p_th_w": p.p_th, "p_in_w": list(p.p_in),
        "psi_s_w": p.psi_s, "r_min": p.r_min,
        "xi_e": list(p.xi_e), "xi_p": list(p.xi_p),
    }


def _params_in(d: dict) -> SystemParams:
    return SystemParams(
        nt=d["nt"], num_ehr=d["num_ehr"], num_pu=d["num_pu"],
        sigma_s2=d["sigma_s2"], sigma_e2=d["sigma_e2"], sigma_sp2=d["sigma_sp2"],
        eta=d["eta"], p_th=d["p_th_w"], p_in=tuple(d["p_in_w"]),
        psi_s=d["psi_s_w"], r_min=d["r_min"],
        xi_e=tuple(d["xi_e"]), xi_p=tuple(d["xi_p"]),
    )


def _base_params(args) -> SystemParams:
    if getattr(args, "config", None):
        return load_params(args.config)
    return baseline_params()


def _cmd_design(args) -> int:
    params = _base_params(args)
    channels = generate_channels(params, args.seed, realization=0)
    out = design(params, channels, grid_step=args.grid_step, refine=args.refine)
    doc = {
        "params": _params_out(params),
        "seed": args.seed,
        "realization": 0,
        "channels": {
            "h": _complex_out(channels.h),
            "g_bar": _complex_out(channels.g_bar),
            "q_bar": _complex_out(channels.q_bar),
        },
        "outcome": {
            "feasible": out.feasible,
            "beta_opt": out.beta_opt,
            "tau_opt_W": out.tau_opt,
            "rank_ratios": list(out.rank_ratios),
            "trace": [[b, s, t] for b, s, t in out.trace],
        },
    }
    if out.feasible:
        doc["outcome"].update(
            rho=out.design.rho,
            W=_complex_out(out.design.W),
            Sigma=_complex_out(out.design.Sigma),
            w_extracted=_complex_out(out.w_extracted),
        )
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
    if not out.feasible:
        print(f"infeasible at every grid point; trace written to {args.out}")
        return EXIT_INFEASIBLE
    print(
        f"tau_opt={out.tau_opt:.6g} W at beta={out.beta_opt:.6g} "
        f"(rank ratio {out.rank_ratios[0]:.2e}); design written to {args.out}"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    with open(args.design_file) as fh:
        doc = json.load(fh)
    params = _params_in(doc["params"])
    channels = ChannelSet(
        h=_complex_in(doc["channels"]["h"]),
        g_bar=_complex_in(doc["channels"]["g_bar"]),
        q_bar=_complex_in(doc["channels"]["q_bar"]),
    )
    outcome = doc["outcome"]
    if not outcome.get("feasible", False):
        print("design file records an infeasible run; nothing to verify")
        return EXIT_INFEASIBLE
    tdesign = TransmitDesign(
        W=_complex_in(outcome["W"]),
        Sigma=_complex_in(outcome["Sigma"]),
        rho=outcome["rho"],
    )
    report = verify_robust_design(tdesign, channels, params, outcome["beta_opt"])
    margins = dict(report.margins)
    # the optimizer's objective must be covered by the worst-case energy
    margins["tau_floor"] = report.min_ehr_energy_wc - outcome["tau_opt_W"]
    width = max(len(k) for k in margins)
    for key, val in margins.items():
        print(f"{key:<{width}}  {val:+.6e}")
    worst = min(margins.values())
    ok = worst >= _MARGIN_TOL
    print(f"min margin {worst:+.6e} -> {'OK' if ok else 'VIOLATED'}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(
                {
                    "margins": margins,
                    "worst_margin": worst,
                    "secrecy_rate_wc": report.secrecy_rate_wc,
                    "min_ehr_energy_wc": report.min_ehr_energy_wc,
                    "eav_sinr_wc": list(report.eav_sinr_wc),
                    "pu_interference_wc": list(report.pu_interference_wc),
                    "su_energy": report.su_energy,
                },
                fh,
                indent=1,
            )
    return EXIT_OK if ok else EXIT_FAIL


def _preset(args, desk: dict) -> dict:
    """Desk-scale defaults, overridden by the faithful preset and CLI flags."""
    chosen = dict(desk)
    if args.paper_preset:
        chosen.update(num_realizations=1000, nt_list=(10, 15, 20))
        print(
            "warning: faithful preset (1000 realizations, up to 20 antennas) "
            "can run for hours",
            file=sys.stderr,
        )
    if args.realizations is not None:
        chosen["num_realizations"] = args.realizations
    if args.grid_step is not None:
        chosen["grid_step"] = args.grid_step
    return chosen


def _cmd_cdf(args) -> int:
    base = _base_params(args)
    cfg = ExperimentConfig(
        base=base,
        seed=args.seed,
        output_path=args.out,
        **_preset(args, {"num_realizations": 100, "nt_list": (base.nt,)}),
    )
    result = run_cdf(cfg)
    n_rows = len(result["rows"])
    print(f"{n_rows} designs, {result['n_feasible']} feasible; rows in {args.out}")
    return EXIT_OK if result["n_feasible"] else EXIT_INFEASIBLE


def _cmd_rmin_sweep(args) -> int:
    base = _base_params(args)
    cfg = ExperimentConfig(
        base=base,
        seed=args.seed,
        output_path=args.out,
        rmin_list=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5),
        **_preset(args, {"num_realizations": 100, "nt_list": (4, 6, 8)}),
    )
    result = run_rmin_sweep(cfg)
    bad = [key for key, ok in result["monotone"].items() if not ok]
    print(
        f"{len(result['rows'])} designs, {result['n_feasible']} feasible, "
        f"{len(bad)} monotonicity violations; rows in {args.out}"
    )
    return EXIT_OK if result["n_feasible"] else EXIT_INFEASIBLE


def _cmd_k_sweep(args) -> int:
    base = _base_params(args)
    k_list = (3, 5, 7)
    if base.num_ehr < k_list[-1]:
        # the base scenario must carry channels for the largest receiver set
        pad = base.xi_e[-1] if base.num_ehr else 0.0
        base = replace(
            base,
            num_ehr=k_list[-1],
            xi_e=base.xi_e + (pad,) * (k_list[-1] - base.num_ehr),
        )
    if not getattr(args, "config", None):
        base = replace(base, nt=10, r_min=2.0)  # receiver-count stress scenario
    cfg = ExperimentConfig(
        base=base,
        seed=args.seed,
        output_path=args.out,
        k_list=k_list,
        grid_points=150,
        **_preset(args, {"num_realizations": 50, "nt_list": (base.nt,)}),
    )
    result = run_k_sweep(cfg)
    print(
        f"{len(result['rows'])} designs, {result['n_feasible']} feasible; "
        f"rows in {args.out}"
    )
    for s in result["summary"]:
        print(
            f"  k={s['k']}: feasible {s['n_feasible']}/{cfg.num_realizations} "
            f"mean tau {s['mean_tau_W']:.4g} W"
        )
    return EXIT_OK if result["n_feasible"] else EXIT_INFEASIBLE


def _cmd_selftest(args) -> int:
    failures = 0
    for name, ok, detail in run_selftest():
        print(f"{'PASS' if ok else 'FAIL'}  {name:<16s} {detail}")
        failures += not ok
    return EXIT_OK if failures == 0 else EXIT_FAIL


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swiptbeam",
        description="Robust secure SWIPT beamforming designs and experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", help="JSON scenario file (defaults built in)")
        p.add_argument("--seed", type=int, default=2024, help="base RNG seed")
        p.add_argument("--out", default=out_default, help="output path")

    p = sub.add_parser("design", help="solve a single channel realization")
    common(p, "design.json")
    p.add_argument("--grid-step", type=float, default=None,
                   help="absolute spacing of the leakage-cap grid")
    p.add_argument("--refine", action="store_true",
                   help="golden-section polish around the best grid point")
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("verify", help="audit a saved design with exact worst cases")
    p.add_argument("design_file", help="JSON file written by the design command")
    p.add_argument("--out", default=None, help="optional JSON report path")
    p.set_defaults(func=_cmd_verify)

    for name, fn, out_default in (
        ("cdf", _cmd_cdf, "cdf.csv"),
        ("rmin-sweep", _cmd_rmin_sweep, "rmin_sweep.csv"),
        ("k-sweep", _cmd_k_sweep, "k_sweep.csv"),
    ):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        common(p, out_default)
        p.add_argument("--realizations", type=int, default=None,
                       help="number of channel realizations")
        p.add_argument("--grid-step", type=float, default=None,
                       help="absolute spacing of the leakage-cap grid")
        p.add_argument("--paper-preset", action="store_true",
                       help="faithful large-scale settings (slow)")
        p.set_defaults(func=fn)

    p = sub.add_parser("solver-selftest", help="conic engine sanity suite")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
