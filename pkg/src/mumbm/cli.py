"""Command line entry point: ``mumbm {simulate,sweep-snr,sweep-nr,bound}``.

Every flag can also come from a flat ``key = value`` config file passed with
``--config``; keys are the flag names without dashes (``snr-grid`` or
``snr_grid``). Flags given on the command line win over the file.

Grids are comma lists (``0,2,4``) or ``start:step:stop`` ranges with the stop
included. Exit codes: 0 success, 2 configuration error, 3 budget refusal.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys

import numpy as np

from .analysis import union_bound_ber
from .channel import SNR_CONVENTIONS, sigma_from_snr
from .detectors import DETECTORS
from .errors import BudgetError, ConfigError
from .harness import ExperimentSpec, run_sweep, write_csv
from .signalsets import SCHEMES, SchemeConfig

__all__ = ["main", "build_parser", "parse_grid", "load_config"]

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3

DEFAULTS = {
    "scheme": "MBM",
    "detector": "ml",
    "k": 2,
    "nr": 8,
    "mrf": 3,
    "nt": 2,
    "nrf": 1,
    "alphabet": "bpsk",
    "snr_db": None,
    "snr_grid": None,
    "nr_grid": None,
    "seed": 0,
    "min_errors": 200,
    "max_uses": 10**7,
    "snr_convention": "aggregate",
    "workers": 1,
    "out": None,
}

_INT_KEYS = {"k", "nr", "mrf", "nt", "nrf", "seed", "min_errors", "max_uses", "workers"}


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # raise instead of exiting so main() owns the exit code
    def error(self, message):
        raise _ArgError(message)


def parse_grid(text, cast=float) -> tuple:
    """``"0,2,4"`` or ``"0:2:4"`` (stop included) to a tuple."""
    if isinstance(text, (list, tuple)):
        return tuple(cast(v) for v in text)
    text = str(text).strip()
    try:
        if ":" in text:
            start, step, stop = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ConfigError(f"grid step must be positive in {text!r}")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(max(n, 0))]
            return tuple(cast(round(v, 10)) for v in values)
        return tuple(cast(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from None


def load_config(path) -> dict:
    """Flat ``key = value`` (or ``key: value``) file to a dict of raw strings."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_string("[run]\n" + fh.read(), source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config {path} is not flat key-value text: {exc}") from None
    out = {}
    for key, value in parser["run"].items():
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r} in {path}")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--scheme", type=str.upper, choices=SCHEMES)
    common.add_argument("--detector", choices=DETECTORS)
    common.add_argument("--k", type=int, help="number of users K")
    common.add_argument("--nr", type=int, help="receive antennas n_r")
    common.add_argument("--mrf", type=int, help="RF mirrors per user (MBM)")
    common.add_argument("--nt", type=int, help="transmit antennas (SM/GSM)")
    common.add_argument("--nrf", type=int, help="active RF chains (GSM)")
    common.add_argument("--alphabet", help="bpsk, 4qam, 16qam, 8psk, ...")
    common.add_argument("--snr-db", type=float)
    common.add_argument("--snr-grid")
    common.add_argument("--nr-grid")
    common.add_argument("--seed", type=int)
    common.add_argument("--min-errors", type=int)
    common.add_argument("--max-uses", type=int)
    common.add_argument("--snr-convention", choices=SNR_CONVENTIONS)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="CSV path; stdout if omitted")

    parser = _Parser(prog="mumbm", description="Multiuser MBM uplink BER simulation.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="one SNR point")
    sub.add_parser("sweep-snr", parents=[common], help="BER over an SNR grid")
    sub.add_parser("sweep-nr", parents=[common], help="BER over an n_r grid at fixed SNR")
    sub.add_parser("bound", parents=[common], help="union bound over an SNR grid")
    return parser


def _settings(args) -> dict:
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(load_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    try:
        for key in _INT_KEYS:
            settings[key] = int(settings[key])
        if settings["snr_db"] is not None:
            settings["snr_db"] = float(settings["snr_db"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return settings


def _scheme_config(s: dict) -> SchemeConfig:
    scheme = str(s["scheme"]).upper()
    common = dict(alphabet=s["alphabet"], K=s["k"], n_r=s["nr"])
    if scheme == "MBM":
        return SchemeConfig.mbm(s["mrf"], **common)
    if scheme == "CM":
        return SchemeConfig.cm(**common)
    if scheme == "SM":
        return SchemeConfig.sm(s["nt"], **common)
    if scheme == "GSM":
        return SchemeConfig.gsm(s["nt"], s["nrf"], **common)
    raise ConfigError(f"unknown scheme {s['scheme']!r}; choose from {SCHEMES}")


def _experiment(command: str, s: dict) -> ExperimentSpec:
    config = _scheme_config(s)
    kw = dict(
        config=config,
        detector=s["detector"],
        min_bit_errors=s["min_errors"],
        max_channel_uses=s["max_uses"],
        master_seed=s["seed"],
        snr_convention=s["snr_convention"],
        workers=s["workers"],
    )
    if command == "simulate":
        if s["snr_db"] is None:
            raise ConfigError("simulate needs --snr-db")
        return ExperimentSpec(snr_db=s["snr_db"], **kw)
    if command == "sweep-snr":
        if s["snr_grid"] is None:
            raise ConfigError("sweep-snr needs --snr-grid")
        grid = parse_grid(s["snr_grid"])
        if not grid:
            raise ConfigError("empty SNR grid")
        return ExperimentSpec(snr_grid=grid, **kw)
    if s["nr_grid"] is None or s["snr_db"] is None:
        raise ConfigError("sweep-nr needs --nr-grid and --snr-db")
    grid = parse_grid(s["nr_grid"], cast=int)
    if not grid:
        raise ConfigError("empty n_r grid")
    return ExperimentSpec(nr_grid=grid, snr_db=s["snr_db"], **kw)


def _open_out(path):
    if path is None:
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None


def _run_bound(s: dict, out) -> None:
    if s["snr_grid"] is None and s["snr_db"] is None:
        raise ConfigError("bound needs --snr-grid or --snr-db")
    grid = parse_grid(s["snr_grid"]) if s["snr_grid"] is not None else (s["snr_db"],)
    config = _scheme_config(s)
    if s["snr_convention"] not in SNR_CONVENTIONS:
        raise ConfigError(f"unknown SNR convention {s['snr_convention']!r}")
    sig = np.array([sigma_from_snr(v, config, s["snr_convention"]).sigma2 for v in grid])
    values = union_bound_ber(config, sig)
    writer = csv.writer(out)
    writer.writerow(["snr_db", "bound"])
    for snr, b in zip(grid, values):
        writer.writerow([snr, repr(float(b))])


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        s = _settings(args)
        if args.command == "bound":
            out, close = _open_out(s["out"])
            try:
                _run_bound(s, out)
            finally:
                if close:
                    out.close()
            return EXIT_OK
        spec = _experiment(args.command, s)
        out, close = _open_out(s["out"])
        try:
            write_csv([], out)

            def emit(rec):
                write_csv([rec], out, header=False)
                out.flush()

            run_sweep(spec, on_record=emit)
        finally:
            if close:
                out.close()
        return EXIT_OK
    except (_ArgError, ConfigError) as exc:
        print(f"mumbm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"mumbm: budget refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
