"""Command-line entry point: ``sweep``, ``power`` and ``oracle`` subcommands.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import power_model
from .channel import ScenarioDims
from .errors import ConfigError, DomainError, NumericalError
from .harness import Mode, SweepConfig, emit_csv, emit_plot_data, parse_snr_grid, run_sweeps
from .precoding import PrecoderKind
from .quantization import QuantizerSpec, bussgang_delta, empirical_bussgang_gain

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def read_config_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys use flag names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def _gamma(text: str) -> float | None:
    if str(text).lower() == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"--gamma must be a number or 'auto', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqabd",
        description="Quantization-aware BD/RBD/ZF precoding sum-rate simulator.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="Monte Carlo sum-rate sweep over SNR")
    sw.add_argument("--config", help="key=value file mirroring these flags")
    sw.add_argument("--nb", type=int, default=32, help="transmit antennas")
    sw.add_argument("--nu-per-user", default="2",
                    help="receive antennas per user, one value or a comma list")
    sw.add_argument("--users", type=int, default=None,
                    help="user count (repeats a single --nu-per-user value)")
    sw.add_argument("--precoder", default="rbd", help="bd, rbd, zf or a comma list")
    sw.add_argument("--mode", default="cqa", help="cqa, fr, rq or a comma list")
    sw.add_argument("--bits", default="2", help="bit depth or comma list (ignored for fr)")
    sw.add_argument("--snr", default="0:1:20", help="start:step:stop in dB, or a comma list")
    sw.add_argument("--trials", type=int, default=200)
    sw.add_argument("--packet-len", type=int, default=100)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--gamma", default="auto",
                    help="normalized quantizer step, or 'auto' for the MSE-optimal one")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out", default="sweep.csv")
    sw.add_argument("--plot", default=None, help="also write an SVG and series CSV")

    pw = sub.add_parser("power", help="converter power arithmetic")
    pw.add_argument("--table1", action="store_true", help="print the calibrated converter figures")
    pw.add_argument("--saving", nargs=2, type=int, metavar=("FROM_BITS", "TO_BITS"))

    orc = sub.add_parser("oracle", help="analytic vs Monte Carlo Bussgang gain")
    orc.add_argument("--bussgang", action="store_true", required=True)
    orc.add_argument("--bits", type=int, required=True)
    orc.add_argument("--samples", type=int, default=1_000_000)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--gamma", default="auto")
    return parser


def _dims(args) -> ScenarioDims:
    per_user = _int_list(args.nu_per_user)
    users = args.users
    if users is not None:
        users = int(users)
        if len(per_user) == 1:
            per_user = per_user * users
        elif len(per_user) != users:
            raise ConfigError(f"--users {users} does not match --nu-per-user {args.nu_per_user}")
    return ScenarioDims(int(args.nb), tuple(per_user))


def sweep_configs(args) -> list[SweepConfig]:
    dims = _dims(args)
    grid = parse_snr_grid(args.snr)
    step = _gamma(args.gamma)
    precoders = [PrecoderKind.parse(p) for p in str(args.precoder).split(",")]
    modes = [Mode.parse(m) for m in str(args.mode).split(",")]
    bits = _int_list(args.bits)
    cfgs, seen = [], set()
    for pre, mode, b in itertools.product(precoders, modes, bits):
        key = (pre, mode, None if mode is Mode.FR else b)
        if key in seen:
            continue
        seen.add(key)
        cfgs.append(SweepConfig(
            dims=dims, precoder=pre, mode=mode, bits=key[2], step=step,
            snr_grid=grid, trials=int(args.trials), packet_len=int(args.packet_len),
            seed=int(args.seed), output_path=args.out,
        ))
    return cfgs


def _cmd_sweep(args) -> int:
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    res = run_sweeps(sweep_configs(args), workers=args.workers)
    emit_csv(res, args.out)
    print(f"wrote {len(res.rows)} rows to {args.out}")
    if args.plot:
        data = emit_plot_data(res, args.plot)
        print(f"wrote {args.plot} and {data}")
    return EXIT_OK


def _cmd_power(args) -> int:
    if not args.table1 and args.saving is None:
        raise ConfigError("power needs --table1 and/or --saving FROM TO")
    if args.table1:
        s = power_model.reference_summary()
        adc, dac = power_model.REFERENCE_ADC, power_model.REFERENCE_DAC
        print(f"ADC reference: {adc.bits} bits, {adc.rate_ghz:g} GHz, {adc.power_mw:g} mW")
        print(f"DAC reference: {dac.bits} bits, {dac.rate_ghz:g} GHz, {dac.power_mw:g} mW")
        print(f"c*tau = {s['c_tau_mw']:g} mW")
        print(f"P_ADC(4) = {s['adc_4bit_mw']:g} mW")
        print(f"P_ADC(5) = {s['adc_5bit_mw']:g} mW")
        print(f"P_DAC(5) / P_ADC(5) = {s['dac_to_adc_ratio']:.4f}")
        print(f"DAC saving 4 -> 2 bits (estimate, 2^b law) = {s['saving_4_to_2']:.2f}")
    if args.saving is not None:
        b1, b2 = args.saving
        print(f"DAC saving {b1} -> {b2} bits (estimate, 2^b law) = "
              f"{power_model.bit_reduction_saving(b1, b2):.6g}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    spec = QuantizerSpec(args.bits, _gamma(args.gamma))
    factors = bussgang_delta(spec)
    est = empirical_bussgang_gain(spec, args.samples, np.random.default_rng(args.seed))
    z = (est.gain - factors.delta) / est.stderr
    print(f"bits={args.bits} levels={spec.levels} step={spec.step:.10g}")
    print(f"alpha (analytic)      = {factors.alpha:.10f}")
    print(f"delta (analytic)      = {factors.delta:.10f}")
    print(f"gain  (Monte Carlo)   = {est.gain:.10f} +/- {est.stderr:.2e} "
          f"({est.samples} samples, seed {args.seed})")
    print(f"difference            = {z:+.2f} standard errors")
    return EXIT_OK


def _apply_config_file(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        values = read_config_file(args.config)
        sweep_parser = parser._subparsers._group_actions[0].choices["sweep"]
        known = {a.dest for a in sweep_parser._actions}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"{args.config}: unknown keys {sorted(unknown)}")
        sweep_parser.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        handler = {"sweep": _cmd_sweep, "power": _cmd_power, "oracle": _cmd_oracle}
        return handler[args.command](args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
