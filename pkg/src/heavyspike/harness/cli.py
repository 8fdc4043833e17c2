"""Command line front end: gen | estimate | sweep | detect | oracle.

Exit codes: 0 success, 1 check failure or I/O error, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys

from .. import rng as _rng
from ..colorcode import dump_per_coloring, sample_colorings
from ..detection import DetectionConfig, calibrate, detect
from ..errors import CapExceededError, HeavySpikeError, InvalidParameterError
from ..model import (NoiseModel, generate_spiked_matrix, generate_spiked_tensor, load_instance,
                     save_instance)
from . import csvio, oracle
from .pipeline import METHODS, MethodSpec, run_method
from .sweep import SweepConfig, make_noise, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

PLANTED = {"gaussian": "gaussian-normalized", "gaussian-normalized": "gaussian-normalized",
           "rademacher": "rademacher"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _noise_from_args(args) -> NoiseModel:
    if args.noise in ("none", "zero"):
        return NoiseModel.zero()
    if args.d is not None and args.d <= 0:
        raise InvalidParameterError(f"d must be > 0, got {args.d}", "d")
    return make_noise(args.noise, args.d)


def _instance(kind, n, snr, planted, noise, seed):
    if planted not in PLANTED:
        raise InvalidParameterError(f"unknown planted kind {planted!r}", "planted")
    if kind == "tensor":
        return generate_spiked_tensor(n, snr, PLANTED[planted], noise, seed)
    return generate_spiked_matrix(n, snr, PLANTED[planted], noise, seed)


def _append(path, rows) -> None:
    appender = csvio.Appender(path)
    for r in rows:
        appender.append(r)


# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    inst = _instance(args.kind, args.n, args.snr, args.planted, _noise_from_args(args), args.seed)
    data = save_instance(inst, args.out)
    print(f"{hashlib.sha256(data).hexdigest()}  {args.out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    inst = load_instance(args.instance)
    kind = "tensor" if inst.Y.ndim == 3 else "matrix"
    spec = MethodSpec(args.method, ell=args.ell, k=args.k, colorings=args.colorings, tau=args.tau,
                      span_t=args.t, repeats=args.repeats, mode=args.mode)
    spec.validate(kind, inst.n)
    seed = _rng.mix64(args.seed, inst.seed)
    rep = run_method(inst, spec, seed)
    if args.dump_colorings:
        if spec.name not in ("saw", "nbw"):
            raise InvalidParameterError("--dump-colorings applies to saw and nbw only",
                                        "dump_colorings")
        cols = sample_colorings(inst.n, spec.ell + 1, spec.num_colorings,
                                _rng.mix64(seed, _rng.STREAM_COLORING))
        dump_per_coloring(inst.Y, cols, spec.ell, spec.name, args.dump_colorings, spec.k)
    p = spec.params()
    row = csvio.make_row(kind=kind, method=spec.name, n=inst.n, snr_prime=float(inst.snr_prime
                         if kind == "matrix" else inst.snr_scaled), noise=inst.noise.tag,
                         d=inst.noise.d, trial=args.trial, seed=seed, sq_corr=rep.sq_corr,
                         status="ok", runtime_ms=round(rep.runtime_ms, 3), **p)
    _append(args.csv, [row])
    print(f"{spec.name} sq_corr={rep.sq_corr:.6f} runtime_ms={rep.runtime_ms:.1f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = SweepConfig.load(args.config)
    if args.trials is not None:
        config.trials = args.trials
    out = args.out or config.output or "sweep.csv"
    progress = None
    if args.verbose:
        def progress(row):
            print(f"{row['method']} n={row['n']} snr={row['snr_prime']} d={row['d']} "
                  f"trial={row['trial']} sq_corr={row['sq_corr']} {row['status']}", flush=True)
    rows = run_sweep(config, out, progress)
    bad = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} rows written to {out}; {bad} with errors")
    return EXIT_OK


def _detect_batch(args):
    """Yield (label, instance) pairs for the requested batch."""
    if args.inputs:
        for path in args.inputs:
            inst = load_instance(path)
            if inst.Y.ndim != 2:
                raise InvalidParameterError(f"{path} is not a matrix instance", "input")
            yield ("planted" if inst.snr_prime > 0 else "null"), inst
        return
    noise = _noise_from_args(args)
    labels = {"null": ["null"], "planted": ["planted"], "mixed": ["planted", "null"]}[args.batch]
    for t in range(args.count):
        for label in labels:
            snr = args.snr if label == "planted" else 0.0
            s = _rng.mix64(args.seed, _rng.STREAM_TRIAL, t, 0 if label == "planted" else 1)
            yield label, generate_spiked_matrix(args.n, snr, PLANTED[args.planted], noise, s)


def cmd_detect(args) -> int:
    if not args.inputs and args.n is None:
        raise InvalidParameterError("give instance files or --n for a generated batch", "n")
    mode = "fixed" if args.threshold is not None else "calibrated"
    cfg = DetectionConfig(ell=args.ell, num_colorings=args.colorings, threshold_mode=mode,
                          null_trials=args.null_trials, threshold=args.threshold,
                          seed=args.seed)
    calibrations = {}
    rows, confusion = [], {}
    for index, (label, inst) in enumerate(_detect_batch(args)):
        cal = None
        if mode == "calibrated":
            key = (inst.n, inst.noise)
            if key not in calibrations:
                calibrations[key] = calibrate(inst.n, inst.noise, cfg)
            cal = calibrations[key]
        seed = _rng.mix64(args.seed, inst.seed)
        res = detect(inst.Y, cfg, calibration=cal, seed=seed)
        confusion[(label, res.decision)] = confusion.get((label, res.decision), 0) + 1
        rows.append(csvio.make_row(kind="matrix", method="cycle", n=inst.n,
                                   snr_prime=float(inst.snr_prime), noise=inst.noise.tag,
                                   d=inst.noise.d, ell=cfg.ell, colorings=cfg.num_colorings,
                                   trial=index, seed=seed, statistic=res.statistic,
                                   decision=res.decision, status="ok"))
    if args.out:
        _append(args.out, rows)
    total = len(rows)
    n_null = sum(r["decision"] == "null" for r in rows)
    print(f"{total} instances: {total - n_null} planted, {n_null} null")
    if len({label for label, _ in confusion}) > 1 or args.inputs:
        tp, fn = confusion.get(("planted", "planted"), 0), confusion.get(("planted", "null"), 0)
        fp, tn = confusion.get(("null", "planted"), 0), confusion.get(("null", "null"), 0)
        acc = (tp + tn) / total if total else float("nan")
        print(f"confusion: planted->planted={tp} planted->null={fn} "
              f"null->planted={fp} null->null={tn} accuracy={acc:.3f}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        results = oracle.run_checks(args.checks, n=args.n, ell=args.ell, seed=args.seed,
                                    tol=args.tol)
    except KeyError as exc:
        raise InvalidParameterError(str(exc.args[0]), "check") from exc
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        print(f"{flag} {r.name}: max error {r.max_error:.3e} (tol {r.tolerance:.0e}, "
              f"{r.seconds:.2f}s)")
    failed = [r for r in results if not r.passed]
    if failed:
        worst = max(failed, key=lambda r: r.max_error)
        print(f"FAIL worst offender {worst.name}: max error {worst.max_error:.3e}")
        return EXIT_FAIL
    print("PASS")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _noise_args(p, required: bool = True):
    p.add_argument("--noise", required=required,
                   help="gaussian | rademacher | sparse-two-point | alternating-sparse | hybrid")
    p.add_argument("--d", type=float, help="sparsity parameter of the sparse noise families")
    p.add_argument("--planted", default="gaussian", choices=sorted(PLANTED))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heavyspike", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--kind", choices=("matrix", "tensor"), default="matrix")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--snr", type=float, required=True)
    _noise_args(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("estimate", help="run one estimator on an instance file")
    p.add_argument("instance")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--ell", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--colorings", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--t", type=int, default=1, help="span dimension for rounding")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--mode", default="auto", choices=("auto", "materialize", "implicit"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--csv", default="results.csv")
    p.add_argument("--dump-colorings", metavar="PATH",
                   help="debug: write the per-coloring matrices to PATH")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="run a JSON sweep config")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--trials", type=int, help="override the config's trial count")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("detect", help="planted vs null decisions for a batch")
    p.add_argument("inputs", nargs="*", help="matrix instance files (labels from their snr)")
    p.add_argument("--batch", choices=("null", "planted", "mixed"), default="mixed")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--n", type=int)
    p.add_argument("--snr", type=float, default=1.5)
    _noise_args(p, required=False)
    p.add_argument("--ell", type=int, default=7)
    p.add_argument("--colorings", type=int, default=256)
    p.add_argument("--null-trials", type=int, default=20)
    p.add_argument("--threshold", type=float, help="fixed threshold (skips calibration)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV to append decisions to")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("oracle", help="exhaustive cross-checks at tiny scale")
    p.add_argument("checks", nargs="*", help=f"subset of {', '.join(oracle.CHECKS)}")
    p.add_argument("--n", type=int)
    p.add_argument("--ell", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=oracle.TOL)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "detect" and not args.inputs and args.noise is None:
            args.noise = "gaussian"
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidParameterError, CapExceededError) as exc:
        name = getattr(exc, "parameter", None)
        prefix = f"invalid parameter {name}: " if name else "error: "
        print(f"{prefix}{exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, HeavySpikeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
