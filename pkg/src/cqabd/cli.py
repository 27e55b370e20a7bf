"""Command-line entry point: ``cqabd <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import costmodel, harness, poweralloc, precoder
from .channel import generate_iid, make_rng, read_matrix, write_matrix
from .errors import ConfigError, CqaError
from .quantizer import build_quantizer, verify_bussgang
from .rates import snr_max_db

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FAILED_CELL_LIMIT = 0.10


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _bits_range(s: str) -> list[int]:
    if ".." in s:
        lo, hi = s.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(b) for b in s.split(",")]


def cmd_simulate(args) -> int:
    cfg = harness.ScenarioConfig.from_json(args.config)
    if args.seed is not None:
        cfg = harness.ScenarioConfig.from_dict({**_cfg_dict(cfg), "seed": args.seed})
    channels = None
    if args.load_channels:
        files = sorted(Path(args.load_channels).glob("trial_*.txt"))
        channels = [read_matrix(f) for f in files]
    if args.dump_channels:
        d = Path(args.dump_channels)
        d.mkdir(parents=True, exist_ok=True)
        for t, H in enumerate(channels or harness.trial_channels(cfg)):
            write_matrix(d / f"trial_{t:05d}.txt", H)
    results = harness.run_scenario(cfg, threads=args.threads, channels=channels)
    _emit(harness.results_to_csv(results), args.out)
    frac = harness.failed_fraction(results)
    if frac > FAILED_CELL_LIMIT:
        logging.error("%.1f%% of cells had numerical failures", 100 * frac)
        return EXIT_NUMERIC
    return EXIT_OK


def _cfg_dict(cfg: harness.ScenarioConfig) -> dict:
    d = {name: getattr(cfg, name) for name in cfg.__dataclass_fields__}
    d["bits"] = ["FR" if b is None else b for b in cfg.bits]
    if cfg.csi is not None:
        d["csi"] = {"r": [cfg.csi.r.real, cfg.csi.r.imag] if isinstance(cfg.csi.r, complex)
                    else cfg.csi.r, "sigma_e2": cfg.csi.sigma_e2}
    return d


def cmd_delta_table(args) -> int:
    rows = [("b", "gamma", "alpha", "delta", f"snr_max_db_nu{args.nu}")]
    for b in _bits_range(args.bits):
        q = build_quantizer(b, args.nb, float(args.p_total or args.nu))
        rows.append((str(b), f"{q.gamma:.6g}", f"{q.alpha:.6g}", f"{q.delta:.5f}",
                     f"{snr_max_db(args.nu, q.delta):.4f}"))
    _emit(_table(rows), args.out)
    return EXIT_OK


def cmd_alloc(args) -> int:
    phi2 = np.array([float(v) for v in args.phi2.split(",") if v.strip()])
    nu = args.nu or phi2.size
    delta = 1.0 if args.bits is None else build_quantizer(args.bits, args.nb, float(nu)).delta
    snr = 10.0 ** (args.snr_db / 10.0)
    prob = poweralloc.AllocationProblem(phi2, nu, snr, delta)
    res = poweralloc.maas(prob, printed=args.printed)
    lines = [f"delta {delta:.6g}", f"mu_opt {res.mu:.6g}", f"active {res.active}",
             f"fallback {res.fallback_used}"]
    for step in res.trace:
        w = " ".join(f"{x:.6g}" for x in step["omega"])
        lines.append(f"iter p={step['p']} mu={step['mu']:.6g} active={step['active']} omega=[{w}]")
    lines.append("omega " + " ".join(f"{x:.6g}" for x in res.omega))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_cost(args) -> int:
    header = ["kind", "bits", "flops", "dac_mw", "adc_mw", "total_dac_mw"]
    rows = []
    for kind in costmodel.KINDS:
        for b in range(2, 13):
            r = costmodel.cost_report(kind, args.nb, args.nu, args.nj, b)
            rows.append([kind, str(b), str(r.flops), f"{r.dac_power_mw:.6g}",
                         f"{costmodel.adc_power_mw(b):.6g}", f"{r.total_dac_power_mw:.6g}"])
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = _table([header] + rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify_bussgang(args) -> int:
    seed = 0 if args.seed is None else args.seed
    ch = generate_iid(args.nb, [args.nj] * args.users, make_rng(seed, 0, 0))
    p_total = float(ch.nu)
    pre = precoder.build(args.precoder, ch, p_total, n0=1.0)
    q = build_quantizer(args.bits, args.nb, p_total)
    st = verify_bussgang(q, pre.p_matrix, args.samples, make_rng(seed, 0, 2))
    rel = st.cross_corr_norm / st.reference_norm
    text = (f"bits {args.bits}\ndelta {q.delta:.6g}\nsamples {st.samples}\n"
            f"cross_corr_rel {rel:.4g}\nrff_error {st.rff_error:.4g}\n"
            f"rff_diag_error {st.rff_diag_error:.4g}\n")
    _emit(text, args.out)
    return EXIT_OK


def _table(rows) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n" for r in rows)


def _global_flags(p, default, threads_default) -> None:
    p.add_argument("--seed", type=int, default=default)
    p.add_argument("--threads", type=int, default=threads_default)
    p.add_argument("--out", default=default, help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cqabd",
                                 description="Quantization-aware BD precoding toolkit")
    _global_flags(ap, None, 1)
    # accepted after the subcommand too; SUPPRESS keeps the top-level values
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a scenario config")
    p.add_argument("--config", required=True)
    p.add_argument("--dump-channels", metavar="DIR")
    p.add_argument("--load-channels", metavar="DIR")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("delta-table", parents=[common], help="quantizer gain table")
    p.add_argument("--bits", default="2..6")
    p.add_argument("--nu", type=int, default=16)
    p.add_argument("--nb", type=int, default=64)
    p.add_argument("--p-total", type=float, default=None)
    p.set_defaults(func=cmd_delta_table)

    p = sub.add_parser("alloc", parents=[common], help="quantization-aware power allocation")
    p.add_argument("--phi2", required=True, help="comma-separated squared stream gains")
    p.add_argument("--bits", type=int, default=None, help="omit for full resolution")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--nu", type=int, default=None)
    p.add_argument("--nb", type=int, default=64)
    p.add_argument("--printed", action="store_true",
                   help="use the iterative water-level form with the p-dependent factor")
    p.set_defaults(func=cmd_alloc)

    p = sub.add_parser("cost", parents=[common], help="FLOP and DAC power table")
    p.add_argument("--nb", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--nj", type=int, default=1)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("verify-bussgang", parents=[common], help="Monte Carlo Bussgang check")
    p.add_argument("--bits", type=int, default=5)
    p.add_argument("--nb", type=int, default=64)
    p.add_argument("--users", type=int, default=8)
    p.add_argument("--nj", type=int, default=2)
    p.add_argument("--precoder", default="BD", choices=[k.value for k in precoder.Kind])
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_verify_bussgang)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CqaError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
