"""Command-line interface: synth, train, binarize, eval, sweep-pdr, tune."""

import argparse
import os
import sys

import numpy as np

from . import io
from .evaluation import (SWEEP_METHODS, EvalProtocol, classify_f1, cluster_accuracy,
                         cross_validate, pdr_sweep)
from .graph_model import SynthConfig, normalize_features, synth_generate
from .proximity import ProximityConfig
from .quantizer import binarize_sign, itq
from .trainer import Hyperparams, train


def _floats(text):
    return [float(tok) for tok in text.split(",") if tok]


def _ints(text):
    return [int(tok) for tok in text.split(",") if tok]


def _scalar_or_list(values):
    return values[0] if len(values) == 1 else values


def _build_parser():
    parser = argparse.ArgumentParser(prog="dpmne",
                                     description="Partial multiplex network embedding")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted-partition dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--communities", type=int, required=True)
    p.add_argument("--views", type=int, default=2)
    p.add_argument("--intra", type=_floats, default=[0.05])
    p.add_argument("--inter", type=_floats, default=[0.005])
    p.add_argument("--noise", type=_floats, default=[0.1])
    p.add_argument("--pdr", type=_floats, default=[0.0])
    p.add_argument("--feature-dim", type=_ints, default=[32])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset directory")

    p = sub.add_parser("train", help="learn embeddings from a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--max-iters", type=int, default=60)
    p.add_argument("--layers", type=_ints, default=[200],
                   help="comma-separated encoder widths, last one is the code size")
    p.add_argument("--y-steps", type=int, default=5)
    p.add_argument("--h-steps", type=int, default=5)
    p.add_argument("--y-lr", type=float, default=1.0)
    p.add_argument("--h-lr", type=float, default=0.1)
    p.add_argument("--order", type=int, default=5, help="proximity order")
    p.add_argument("--normalize-features", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("binarize", help="binary codes from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--itq", action="store_true", help="optimize a rotation first")
    p.add_argument("--iters", type=int, default=None, help="rotation iterations")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="score embeddings against dataset labels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--task", choices=("classify", "cluster"), required=True)
    p.add_argument("--train-frac", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sweep-pdr", help="metrics across missing-data ratios")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratios", type=_floats, required=True)
    p.add_argument("--methods", default=",".join(SWEEP_METHODS))
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--max-iters", type=int, default=60)
    p.add_argument("--layers", type=_ints, default=[200])
    p.add_argument("--train-frac", type=float, default=0.5)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="directory for table + long-format files")

    p = sub.add_parser("tune", help="grid search by k-fold cross validation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid", required=True,
                   help="semicolon-separated alpha,beta,lambda triples, e.g. '1,0.1,0.01;1,1,0.01'")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--max-iters", type=int, default=60)
    p.add_argument("--layers", type=_ints, default=[200])
    p.add_argument("--seed", type=int, default=0)
    return parser


def _hyper_from_args(args):
    return Hyperparams(alpha=args.alpha, beta=args.beta, lam=args.lam, dim=args.dim,
                       max_iters=args.max_iters, hidden_dims=tuple(args.layers),
                       y_steps=getattr(args, "y_steps", 5),
                       h_steps=getattr(args, "h_steps", 5),
                       y_lr=getattr(args, "y_lr", 1.0),
                       h_lr=getattr(args, "h_lr", 0.1),
                       proximity=ProximityConfig(order=getattr(args, "order", 5)),
                       seed=args.seed)


def _cmd_synth(args):
    config = SynthConfig(n=args.n, communities=args.communities, t=args.views,
                         intra=_scalar_or_list(args.intra),
                         inter=_scalar_or_list(args.inter),
                         noise=_scalar_or_list(args.noise),
                         pdr=_scalar_or_list(args.pdr),
                         feature_dim=_scalar_or_list(args.feature_dim),
                         seed=args.seed)
    manifest = io.save_network(synth_generate(config), args.out)
    print(manifest)
    return 0


def _cmd_train(args):
    hyper = _hyper_from_args(args)
    if args.dim < 1 or args.max_iters < 0:
        raise ValueError("--dim must be >= 1 and --max-iters >= 0")
    network = io.load_network(args.manifest)
    if args.normalize_features:
        network = normalize_features(network)
    state = train(network, hyper)
    os.makedirs(args.out, exist_ok=True)
    io.checkpoint(state, os.path.join(args.out, "checkpoint.npz"))
    io.save_embeddings(state.Y, os.path.join(args.out, "embeddings.tsv"))
    print(f"{os.path.join(args.out, 'checkpoint.npz')}\t"
          f"objective={state.objective_trace[-1]:.17g}\t"
          f"iterations={len(state.objective_trace) - 1}")
    return 0


def _cmd_binarize(args):
    if args.iters is not None and not args.itq:
        raise ValueError("--iters only applies together with --itq")
    if args.iters is not None and args.iters < 1:
        raise ValueError("--iters must be >= 1")
    state = io.restore(args.checkpoint)
    codes = itq(state.Y, iterations=args.iters or 50) if args.itq else binarize_sign(state.Y)
    os.makedirs(args.out, exist_ok=True)
    io.save_embeddings(codes.codes, os.path.join(args.out, "codes.tsv"))
    io.save_embeddings(codes.codes, os.path.join(args.out, "codes.bin"), fmt="packed")
    print(f"{os.path.join(args.out, 'codes.tsv')}\tquant_loss={codes.quant_loss:.17g}")
    return 0


def _cmd_eval(args):
    protocol = EvalProtocol(train_fraction=args.train_frac, repeats=args.repeats,
                            seed=args.seed)
    network = io.load_network(args.manifest)
    if network.labels is None:
        raise ValueError("eval needs a dataset with labels")
    state = io.restore(args.checkpoint)
    if state.Y.shape[0] != network.n:
        raise ValueError(f"checkpoint has {state.Y.shape[0]} nodes, dataset has {network.n}")
    if args.task == "classify":
        rep = classify_f1(state.Y, network.labels, protocol)
        print("metric\tmean\tstd")
        print(f"micro_f1\t{rep.micro_f1:.6f}\t{rep.micro_f1_std:.6f}")
        print(f"macro_f1\t{rep.macro_f1:.6f}\t{rep.macro_f1_std:.6f}")
    else:
        acc = cluster_accuracy(state.Y, network.labels,
                               int(np.unique(network.labels).size), seed=args.seed)
        print("metric\tvalue")
        print(f"clustering_accuracy\t{acc:.6f}")
    return 0


def _cmd_sweep(args):
    methods = tuple(tok for tok in args.methods.split(",") if tok)
    ratios = args.ratios
    if sorted(ratios) != ratios:
        raise ValueError("--ratios must be sorted ascending")
    unknown = [m for m in methods if m not in SWEEP_METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; choose from {SWEEP_METHODS}")
    protocol = EvalProtocol(train_fraction=args.train_frac, repeats=args.repeats,
                            seed=args.seed)
    network = io.load_network(args.manifest)
    rows = pdr_sweep(network, ratios, methods, protocol, _hyper_from_args(args))
    header = "ratio\tmethod\tmicro_f1\tmicro_f1_std\tmacro_f1\tmacro_f1_std"
    wide = [header] + [
        f"{r.ratio:g}\t{r.method}\t{r.report.micro_f1:.6f}\t{r.report.micro_f1_std:.6f}"
        f"\t{r.report.macro_f1:.6f}\t{r.report.macro_f1_std:.6f}" for r in rows]
    long_rows = ["ratio\tmethod\tmetric\tmean\tstd"]
    for r in rows:
        long_rows.append(f"{r.ratio:g}\t{r.method}\tmicro_f1\t"
                         f"{r.report.micro_f1:.6f}\t{r.report.micro_f1_std:.6f}")
        long_rows.append(f"{r.ratio:g}\t{r.method}\tmacro_f1\t"
                         f"{r.report.macro_f1:.6f}\t{r.report.macro_f1_std:.6f}")
    print("\n".join(wide))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sweep.tsv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(wide) + "\n")
        with open(os.path.join(args.out, "sweep_long.tsv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(long_rows) + "\n")
    return 0


def _cmd_tune(args):
    points = []
    for chunk in args.grid.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        values = _floats(chunk)
        if len(values) != 3:
            raise ValueError(f"grid point {chunk!r} must be alpha,beta,lambda")
        points.append(tuple(values))
    if not points:
        raise ValueError("--grid is empty")
    network = io.load_network(args.manifest)
    base = Hyperparams(dim=args.dim, max_iters=args.max_iters,
                       hidden_dims=tuple(args.layers), seed=args.seed)
    protocol = EvalProtocol(seed=args.seed)
    best = cross_validate(network, points, folds=args.folds, protocol=protocol,
                          base_hyper=base)
    print(f"alpha={best.alpha:g}\tbeta={best.beta:g}\tlambda={best.lam:g}")
    return 0


_HANDLERS = {"synth": _cmd_synth, "train": _cmd_train, "binarize": _cmd_binarize,
             "eval": _cmd_eval, "sweep-pdr": _cmd_sweep, "tune": _cmd_tune}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # one parsable line, nonzero exit
        print(f"dpmne-error\t{type(exc).__name__}\t{exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
