"""Command-line entry point ``hrcalc``.

Every subcommand reads an optional ``key = value`` configuration file, runs a
seeded scenario and writes a CSV whose ``#`` header records the scenario,
seed, library version and every parameter. Exit status: 0 success, 1 check
failure, 2 configuration error, 3 numerical failure.
"""

import argparse
from dataclasses import dataclass, replace
import sys

import numpy as np

from . import io as hio
from .errors import NumericError
from .experiments import bearings, flight, motion, network, qubit, selfcheck, three_phase, toys
from .experiments.common import ConfigError, apply_config, params_header, parse_config, write_csv

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class CheckParams:
    suites: str = "all"


def _suites(params, default):
    if params.suites == "all":
        return default
    names = params.suites.replace(",", " ").split()
    unknown = [n for n in names if n not in selfcheck.SUITES]
    if unknown:
        raise ConfigError(f"unknown suites {unknown}")
    return names


def _check_rows(results):
    for r in results:
        if r.error:
            print(f"{r.suite},{r.name}: {r.error}", file=sys.stderr)
    status = EXIT_OK if all(r.passed for r in results) else EXIT_CHECK
    return ["suite", "name", "residual", "limit"], [
        (r.suite, r.name, r.residual, r.limit) for r in results], status


def cmd_selfcheck(params, seed, args):
    return _check_rows(selfcheck.run(seed, _suites(params, None)))


def cmd_gradcheck(params, seed, args):
    return _check_rows(selfcheck.run(seed, ["hr"]))


def cmd_three_phase(params, seed, args):
    return three_phase.COLUMNS, list(three_phase.rows(three_phase.run(params, seed))), EXIT_OK


def cmd_bearings(params, seed, args):
    res = bearings.run(params, seed, diffusion=params.diffusion)
    return bearings.COLUMNS, list(bearings.rows(res)), EXIT_OK


def cmd_flight(params, seed, args):
    return flight.COLUMNS, list(flight.rows(flight.run(params, seed))), EXIT_OK


def cmd_motion(params, seed, args):
    return motion.COLUMNS, list(motion.rows(motion.run(params, seed), params.taps)), EXIT_OK


def cmd_qubit(params, seed, args):
    best, results = qubit.compile_circuit(params, seed)
    return qubit.COLUMNS, list(qubit.rows(best, results)), EXIT_OK


def cmd_qlms(params, seed, args):
    return toys.QLMS_COLUMNS, list(toys.qlms_identification(params, seed)), EXIT_OK


def cmd_kalman(params, seed, args):
    rows = list(toys.kalman_tracking(params, seed))
    n = toys.kalman_matrices(params)[0].shape[0]
    return toys.kalman_columns(n), rows, EXIT_OK


def cmd_diffusion(params, seed, args):
    return toys.NETWORK_COLUMNS, list(toys.diffusion_trace(params, seed)), EXIT_OK


def cmd_federated(params, seed, args):
    return toys.NETWORK_COLUMNS, list(toys.federated_trace(params, seed)), EXIT_OK


def cmd_qnn_train(params, seed, args):
    log = []
    net = toys.qnn_training(params, seed, log)
    path = params.checkpoint or (args.out + ".ckpt" if args.out else "")
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(hio.dump_checkpoint(net))
    return toys.QNN_COLUMNS, log, EXIT_OK


def cmd_lqr(params, seed, args):
    return toys.lqr_columns(params), list(toys.lqr_trajectory(params, seed)), EXIT_OK


# name -> (default parameters, parameter receiving --steps, runner)
COMMANDS = {
    "selfcheck": (CheckParams(), None, cmd_selfcheck),
    "gradcheck": (CheckParams(), None, cmd_gradcheck),
    "three-phase": (three_phase.ThreePhaseParams(), "steps", cmd_three_phase),
    "bearings": (bearings.BearingsParams(), "steps", cmd_bearings),
    "flight": (flight.FlightParams(), "duration_s", cmd_flight),
    "motion": (motion.MotionParams(), "steps", cmd_motion),
    "qubit-compile": (qubit.QubitParams(), "steps", cmd_qubit),
    "qlms": (toys.QlmsParams(), "steps", cmd_qlms),
    "kalman": (toys.KalmanParams(), "steps", cmd_kalman),
    "diffusion": (network.RingParams(), "steps", cmd_diffusion),
    "federated": (network.FederatedParams(), "rounds", cmd_federated),
    "qnn-train": (toys.QnnParams(), "steps", cmd_qnn_train),
    "lqr": (toys.LqrParams(), "horizon", cmd_lqr),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="hrcalc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value parameter file")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--steps", type=int, help="override the run length")
        p.add_argument("--out", help="output CSV path (default stdout)")
    return parser


def resolve_params(command, config_text=None, steps=None):
    """Default parameters of ``command`` with the configuration and ``--steps`` applied."""
    params, steps_key, _ = COMMANDS[command]
    if config_text is not None:
        params = apply_config(params, parse_config(config_text))
    if steps is not None:
        if steps_key is None:
            raise ConfigError(f"--steps does not apply to {command}")
        if steps < 1:
            raise ConfigError("--steps must be positive")
        if steps_key == "duration_s":
            params = replace(params, duration_s=steps * params.dt)
        else:
            params = replace(params, **{steps_key: steps})
    return params


def run(argv=None):
    """Parse arguments, run the command and write its output; returns the exit status."""
    args = build_parser().parse_args(argv)
    try:
        text = None
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read configuration: {exc}") from exc
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        params = resolve_params(args.command, text, args.steps)
        with np.errstate(over="ignore", invalid="ignore"):
            columns, rows, status = COMMANDS[args.command][2](params, args.seed, args)
        header = params_header(args.command, args.seed, params)
        write_csv(args.out if args.out else sys.stdout, header, columns, rows)
    except NumericError as exc:
        print(f"hrcalc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        # configuration errors and parameter values rejected by the library
        print(f"hrcalc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
