"""Command-line entry point: ``distlayer {gen,verify,experiment,translate}``.

Exit codes: 0 success, 1 verification or translation failure, 2 usage or
I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from distlayer import io, suites
from distlayer.errors import DivergenceError, DistLayerError, UnderdeterminedGroup
from distlayer.gaussian import Gaussian, GaussianMixture, random_covariance, sample_gmm
from distlayer.init import Strategy, initialize_layer
from distlayer.layer import DistanceLayer
from distlayer.rng import Stream
from distlayer.train import Loss, MLPModel, TrainConfig, train
from distlayer.translate import gmm_to_network, translate_network


class UsageError(Exception):
    pass


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _groups(text: str):
    """``"0,1;2,3"`` -> ``[[0, 1], [2, 3]]``."""
    return [_int_list(part) for part in text.split(";")]


def _truth_path(out: Path) -> Path:
    return out.with_name(out.stem + ".truth.json")


def random_mixture(k: int, dim: int, separation: float, seed: int) -> GaussianMixture:
    """Uniform-weight mixture with means on a sphere of radius ``separation``
    and covariances whose variances lie in [0.25, 1]."""
    stream = Stream(seed, 1)
    comps = []
    for _ in range(k):
        direction = stream.normal(dim)
        mean = separation * direction / np.linalg.norm(direction)
        comps.append(Gaussian(mean, random_covariance(dim, stream, 0.25, 1.0)))
    return GaussianMixture(np.full(k, 1.0 / k), comps)


def cmd_gen(args) -> int:
    if args.k < 1 or args.dim < 1 or args.n < 1:
        raise UsageError("--k, --dim and --n must be positive")
    if args.separation < 0:
        raise UsageError("--separation must be >= 0")
    mixture = random_mixture(args.k, args.dim, args.separation, args.seed)
    data = sample_gmm(mixture, args.n, args.seed)
    out = io.ensure_parent(args.out)
    io.save_dataset(data, out)
    truth = Path(args.truth) if args.truth else _truth_path(out)
    io.save_mixture(mixture, io.ensure_parent(truth))
    print(f"wrote {data.n} samples to {out} and the mixture to {truth}")
    return 0


def cmd_verify(args) -> int:
    dims = _int_list(args.dims)
    if not dims or any(d < 1 for d in dims) or args.trials < 1:
        raise UsageError("--dims needs positive integers and --trials must be >= 1")
    checks = suites.run(args.suite, dims, args.trials, args.seed)
    for c in checks:
        print(c.line())
    if args.out:
        io.write_json(
            {"suite": args.suite, "dims": dims, "trials": args.trials, "seed": args.seed,
             "checks": [{"name": c.name, "value": c.value, "tolerance": c.tolerance,
                         "sense": c.sense, "passed": c.passed} for c in checks]},
            io.ensure_parent(args.out),
        )
    failed = [c for c in checks if not c.passed]
    if failed:
        print(f"first failing check: {failed[0].name}", file=sys.stderr)
        return 1
    print(f"all {len(checks)} checks passed")
    return 0


def _epochs_to(history, threshold):
    for rec in history:
        if rec.loss <= threshold:
            return rec.epoch
    return None


def cmd_experiment(args) -> int:
    data = io.load_dataset(args.data)
    strategies = [Strategy(s.strip()) for s in args.strategies.split(",") if s.strip()]
    if not strategies:
        raise UsageError("need at least one strategy")
    classes = int(data.labels.max()) + 1
    cfg = TrainConfig(args.lr, args.epochs, args.batch_size, args.ortho, args.seed, Loss(args.loss))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    # one head shared by all strategies so only the first layer differs
    head_w = Stream(args.seed, 2).normal((classes, args.rows)) * np.sqrt(1.0 / args.rows)
    head = DistanceLayer(head_w, np.zeros(classes), "identity")
    summary = {"data": Path(args.data).name, "k": args.k, "rows": args.rows, "epochs": args.epochs,
               "seed": args.seed, "learning_rate": args.lr, "batch_size": args.batch_size,
               "ortho_coef": args.ortho, "loss": cfg.loss.value, "threshold": args.threshold,
               "strategies": {}}
    for strategy in strategies:
        layer = initialize_layer(data, args.k, args.rows, strategy, args.seed)
        model = MLPModel((layer,), head)
        try:
            result = train(model, data, cfg)
        except DivergenceError as exc:
            summary["strategies"][strategy.value] = {"status": "diverged", "epoch": exc.epoch}
            continue
        io.save_history(result.history, out_dir / f"history_{strategy.value}.csv")
        io.save_model(result.model, out_dir / f"model_{strategy.value}.json",
                      {"seed": args.seed, "strategy": strategy.value, "k": args.k, "rows": args.rows})
        summary["strategies"][strategy.value] = {
            "status": "ok",
            "initial_loss": result.history[0].loss,
            "final_loss": result.history[-1].loss,
            "epochs_to_threshold": _epochs_to(result.history, args.threshold),
        }
    io.write_json(summary, out_dir / "summary.json")
    for name, row in summary["strategies"].items():
        print(f"{name}: {json.dumps(row)}")
    return 0


def _report_dict(direction, report):
    return {
        "direction": direction,
        "groups": [{"rows": list(g.rows), "path": g.path, "partial": g.partial} for g in report.groups],
        "mean_errors": None if report.mean_errors is None else list(report.mean_errors),
        "covariance_errors": None if report.covariance_errors is None else list(report.covariance_errors),
    }


def cmd_translate(args) -> int:
    out = io.ensure_parent(args.out)
    if args.direction == "gmm2net":
        mixture = io.load_mixture(args.input)
        subsets = _groups(args.subsets) if args.subsets else None
        layer = gmm_to_network(mixture, subsets)
        io.save_model([layer], out, {"seed": args.seed, "source": Path(args.input).name, "direction": "gmm2net"})
        full = subsets is None or all(len(s) == mixture.dim for s in subsets)
        if full:
            report = _report_dict(args.direction, translate_network(layer, truth=mixture))
        else:
            report = {"direction": args.direction, "groups": None, "mean_errors": None, "covariance_errors": None}
    else:
        layers, _ = io.load_model(args.input)
        if not 0 <= args.layer < len(layers):
            raise UsageError(f"--layer {args.layer} out of range for {len(layers)} layers")
        layer = layers[args.layer]
        grouping = _groups(args.grouping) if args.grouping else None
        truth = io.load_mixture(args.truth) if args.truth else None
        try:
            result = translate_network(layer, grouping, truth, allow_partial=args.allow_partial)
        except UnderdeterminedGroup as exc:
            print(f"UnderdeterminedGroup: {exc}", file=sys.stderr)
            return 1
        io.save_mixture(result.mixture, out)
        report = _report_dict(args.direction, result)
    text = json.dumps(report, indent=2) + "\n"
    if args.report:
        io.write_json(report, io.ensure_parent(args.report))
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distlayer", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a dataset from a random Gaussian mixture")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.add_argument("--truth", help="mixture JSON path (default: <out>.truth.json)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--suite", required=True, choices=suites.SUITES + ("all",))
    p.add_argument("--dims", default="2,4,8")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="compare initialization strategies")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--strategies", default="cluster-pca,random-normal")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--ortho", type=float, default=0.0)
    p.add_argument("--loss", default="softmax-ce", choices=[l.value for l in Loss])
    p.add_argument("--threshold", type=float, default=0.1)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("translate", help="convert between mixtures and Abs layers")
    p.add_argument("--input", required=True, help="mixture JSON (gmm2net) or ModelFile (net2gmm)")
    p.add_argument("--direction", required=True, choices=["gmm2net", "net2gmm"])
    p.add_argument("--subsets", help='gmm2net: principal components per component, e.g. "0,1;0"')
    p.add_argument("--grouping", help='net2gmm: row groups, e.g. "0,1;2,3" (default: from provenance)')
    p.add_argument("--layer", type=int, default=0, help="net2gmm: index of the layer to translate")
    p.add_argument("--truth", help="net2gmm: mixture JSON to score the recovery against")
    p.add_argument("--allow-partial", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="also write the report JSON here")
    p.set_defaults(func=cmd_translate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"IoError: {exc}", file=sys.stderr)
        return 2
    except (DistLayerError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
