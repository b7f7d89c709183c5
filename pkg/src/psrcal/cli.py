"""Command-line interface: ``psrcal {synth,train,apply,eval,pav,weights}``.

Exit status is 0 on success, 1 on usage errors and 2 on data or numeric
errors.
"""

import argparse
import logging
import math
import sys

from . import __version__
from .calibration import AffineModel, TrainConfig, apply, train
from .errors import TrialFileError
from .io import TrialRecord, read_records, records_to_trialset, write_records
from .metrics import evaluate
from .objective import ObjectiveParams
from .pav import KNOTS_FORMAT, DEFAULT_LLR_MAX, LabeledScores, PavCalibrator, make_calibrator
from .synth import SynthConfig, synth_generate
from .weighting import WeightParams, omega_grid

log = logging.getLogger("psrcal")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n\n{self.format_help()}")


def _probability(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return v


def _add_prior(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--tau", type=float, help="prior log-odds (default 0)")
    g.add_argument("--ptar", type=_probability, help="target prior; converted to tau = logit(ptar)")


def _tau(args):
    if getattr(args, "ptar", None) is not None:
        return math.log(args.ptar) - math.log1p(-args.ptar)
    return args.tau if args.tau is not None else 0.0


def _write_text(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def build_parser():
    parser = _Parser(prog="psrcal", description="Proper-scoring-rule calibration of detection scores.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate synthetic scores with known calibration")
    p.add_argument("--mu", type=float, default=2.0)
    p.add_argument("--n-tar", type=int, default=1000)
    p.add_argument("--n-non", type=int, default=1000)
    p.add_argument("--warp-a", type=float, default=1.0, help="A0 of the true calibration l = A0 s + B0")
    p.add_argument("--warp-b", type=float, default=0.0, help="B0 of the true calibration")
    p.add_argument("--cubic", type=float, default=0.0, help="add cubic * s^3 to the true calibration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="trials file to write")
    p.add_argument("--truth", help="also write the true affine model here")

    p = sub.add_parser("train", help="train an affine calibration")
    p.add_argument("--trials", required=True, help="labeled score file")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    _add_prior(p)
    p.add_argument("--grad-tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--init-a", type=float)
    p.add_argument("--init-b", type=float, default=0.0)
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("apply", help="map scores to LLRs through a model")
    p.add_argument("--model", required=True, help="affine model or PAV calibrator file")
    p.add_argument("--trials", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="report detection metrics of labeled LLRs")
    p.add_argument("--trials", required=True, help="labeled LLR file")
    p.add_argument("--csv", action="store_true", help="machine-readable metric,value output")
    p.add_argument("--equal-weights", action="store_true", help="weight both Cprimary thresholds by exactly 1/2")
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("pav", help="fit an interpolating PAV calibrator")
    p.add_argument("--trials", required=True)
    p.add_argument("--llr-max", type=float, default=DEFAULT_LLR_MAX)
    _add_prior(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("weights", help="sample the threshold weighting Omega(t) to CSV")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    _add_prior(p)
    p.add_argument("--t-min", type=float, default=-15.0)
    p.add_argument("--t-max", type=float, default=15.0)
    p.add_argument("--n", type=int, default=3001)
    p.add_argument("--out", help="CSV path (default stdout)")
    return parser


def cmd_synth(args):
    result = synth_generate(
        SynthConfig(
            mu=args.mu,
            n_tar=args.n_tar,
            n_non=args.n_non,
            warp=(args.warp_a, args.warp_b),
            seed=args.seed,
            cubic=args.cubic,
        )
    )
    write_records(args.out, result.records)
    if args.truth:
        _write_text(args.truth, result.truth.to_json())


def cmd_train(args):
    scores = records_to_trialset(read_records(args.trials), args.trials)
    objective = ObjectiveParams.of(args.alpha, args.beta, _tau(args))
    init = AffineModel(args.init_a, args.init_b) if args.init_a is not None else None
    report = train(scores, TrainConfig(objective, init, args.grad_tol, args.max_iters))
    _write_text(args.out, report.model.to_json(objective))
    print(report.summary())
    if not report.converged:
        log.warning("optimizer stopped before reaching grad_tol=%g", args.grad_tol)


def _load_calibrator(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.startswith(KNOTS_FORMAT):
        return PavCalibrator.from_text(text, path)
    model, _ = AffineModel.from_json(text, path)
    return model


def cmd_apply(args):
    calibrate = _load_calibrator(args.model)
    records = read_records(args.trials)
    llrs = calibrate([r.score for r in records]) if records else []
    write_records(args.out, [TrialRecord(r.trial_id, float(l), r.label) for r, l in zip(records, llrs)])


def cmd_eval(args):
    llrs = records_to_trialset(read_records(args.trials), args.trials)
    report = evaluate(llrs, equal_weights=args.equal_weights)
    _write_text(args.out, report.to_csv() if args.csv else report.to_text())


def cmd_pav(args):
    trials = records_to_trialset(read_records(args.trials), args.trials)
    pi = 1.0 / (1.0 + math.exp(-_tau(args)))
    cal = make_calibrator(LabeledScores.from_trials(trials), pi, args.llr_max)
    _write_text(args.out, cal.to_text())


def cmd_weights(args):
    grid = omega_grid(WeightParams(args.alpha, args.beta, _tau(args)), args.t_min, args.t_max, args.n)
    _write_text(args.out, grid.to_csv())


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "apply": cmd_apply,
    "eval": cmd_eval,
    "pav": cmd_pav,
    "weights": cmd_weights,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    if args.command is None:
        sys.stderr.write(parser.format_help())
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (TrialFileError, ValueError, ArithmeticError, OSError) as exc:
        sys.stderr.write(f"psrcal {args.command}: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
