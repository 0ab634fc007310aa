"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage or data error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from . import io as sio
from .classify import classify_batch, fit_templates, scattering_features
from .errors import (DimensionError, EmptyInputError, InvalidNetworkError,
                     InvalidPartitionError, NumericalFailure)
from .frame import contiguous_pairing, random_tight_frame
from .learn import OptimizerConfig, build_network_greedy
from .partition import partitions_from_spec
from .scatter import ScatteringNetwork, averaged_scatter_layers, layer_offsets
from .synthetic import load_distribution_spec
from .verify import run_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _dims(text: str) -> list[int]:
    try:
        dims = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--dims must be comma-separated integers, got {text!r}") from None
    if len(dims) < 2 or min(dims) <= 0:
        raise UsageError(f"--dims needs at least two positive widths, got {text!r}")
    return dims


def _check_chain(dims: list[int], pairing: bool = False) -> None:
    for m in range(len(dims) - 1):
        if 2 * dims[m + 1] < dims[m]:
            raise DimensionError(
                f"layer {m + 1}: 2*{dims[m + 1]} < {dims[m]}, no tight frame exists")
        if pairing and 2 * dims[m + 1] != dims[m]:
            raise DimensionError(f"layer {m + 1}: pairing scheme needs width {dims[m]}/2, "
                                 f"got {dims[m + 1]}")


def cmd_init(args) -> int:
    dims = _dims(args.dims)
    _check_chain(dims, pairing=args.scheme == "pairing")
    parts = partitions_from_spec(args.blocks, dims)
    seeds = np.random.SeedSequence(args.seed).generate_state(len(dims) - 1)
    if args.scheme == "pairing":
        ops = [contiguous_pairing(dims[m]) for m in range(len(dims) - 1)]
    else:
        ops = [random_tight_frame(dims[m], dims[m + 1], int(seeds[m]))
               for m in range(len(dims) - 1)]
    net = ScatteringNetwork(tuple(ops), tuple(parts[:-1]), parts[-1])
    sio.save_model(net, args.out)
    print(f"wrote {args.out}: dims {net.dims}")
    return EXIT_OK


def cmd_train_unsup(args) -> int:
    X, _ = sio.read_dataset(args.data, args.label_col)
    dims = _dims(args.dims)
    if dims[0] != X.shape[1]:
        raise DimensionError(f"--dims starts with {dims[0]} but data has {X.shape[1]} columns")
    _check_chain(dims)
    parts = partitions_from_spec(args.blocks, dims)
    config = OptimizerConfig(max_iters=args.max_iters, init=args.init)
    net, traces = build_network_greedy(X, dims, parts, config, seed=args.seed)
    for m, tr in enumerate(traces, 1):
        shown = " ".join(f"{v:.6g}" for v in tr)
        print(f"layer {m}: steps={len(tr) - 1} initial={tr[0]:.6g} final={tr[-1]:.6g}")
        if args.verbose:
            print(f"  trace: {shown}")
    sio.save_model(net, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_transform(args) -> int:
    net = sio.load_model(args.model)
    X, _ = sio.read_dataset(args.data, args.label_col)
    sio.check_dim(X, net.dims[0])
    tilde, out = averaged_scatter_layers(net, X)
    chosen = out if args.emit == "autilde" else tilde
    sio.write_dataset(args.out, np.concatenate(chosen, axis=-1))
    rows = ["m,offset,length"] + [f"{m},{o},{n}" for m, o, n in layer_offsets(net.dims)]
    sio.atomic_write(args.out + ".layers.csv", "\n".join(rows) + "\n")
    print(f"wrote {args.out} ({X.shape[0]} rows, {sum(net.dims)} columns)")
    return EXIT_OK


def cmd_fit_classes(args) -> int:
    net = sio.load_model(args.model)
    X, labels = sio.read_dataset(args.data, args.label_col)
    sio.check_dim(X, net.dims[0])
    templates = fit_templates(net, X, labels)
    sio.save_templates(templates, args.out)
    for lab, p, c in zip(templates.labels, templates.priors, templates.counts):
        print(f"class {lab}: samples={c} prior={p:.6g}")
    return EXIT_OK


def cmd_classify(args) -> int:
    net = sio.load_model(args.model)
    templates = sio.load_templates(args.templates)
    X, labels = sio.read_dataset(args.data, args.label_col)
    sio.check_dim(X, net.dims[0])
    if labels is not None:
        unknown = sorted({str(l) for l in labels} - {str(l) for l in templates.labels})
        if unknown:
            raise UsageError(f"labels missing from templates: {', '.join(unknown)}")
    pred = classify_batch(net, templates, X)
    text = "".join(f"{p}\n" for p in pred)
    if args.out:
        sio.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if labels is not None:
        acc = np.mean([str(p) == str(l) for p, l in zip(pred, labels)])
        print(f"accuracy={acc:.6f} n={len(labels)}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    try:
        dist, n_spec = load_distribution_spec(args.spec)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad distribution spec: {exc!r}") from None
    n = args.n if args.n is not None else n_spec
    if n is None or n <= 0:
        raise UsageError("sample count missing: pass --n or set \"n\" in the spec")
    rng = np.random.default_rng(args.seed)
    if dist.labels is not None:
        X, labels = dist.sample(rng, n, return_labels=True)
    else:
        X, labels = dist.sample(rng, n), None
    sio.write_dataset(args.out, X, labels)
    print(f"wrote {args.out}: {n} rows")
    return EXIT_OK


def cmd_verify(args) -> int:
    net = sio.load_model(args.model, check=False) if args.model else None
    t0 = time.perf_counter()
    results = run_suite(args.seed, args.level, net, echo=print)
    failed = [r.name for r in results if not r.passed]
    print(f"SUMMARY {len(results) - len(failed)}/{len(results)} passed "
          f"in {time.perf_counter() - t0:.1f}s")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="l2scatter", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="write a model with pairing or random tight frames")
    p.add_argument("--dims", required=True)
    p.add_argument("--scheme", choices=["pairing", "random"], default="random")
    p.add_argument("--blocks", default=None,
                   help="comma list of singleton|full|size:k (one, or one per layer)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("train-unsup", help="greedy layerwise unsupervised training")
    p.add_argument("--data", required=True)
    p.add_argument("--dims", required=True)
    p.add_argument("--blocks", default=None)
    p.add_argument("--max-iters", "--epochs", dest="max_iters", type=int, default=500)
    p.add_argument("--init", choices=["random", "pairing"], default="random")
    p.add_argument("--label-col", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_unsup)

    p = sub.add_parser("transform", help="averaged scattering of every row")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--emit", choices=["autilde", "utilde"], default="autilde")
    p.add_argument("--label-col", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("fit-classes", help="per-class scattering templates")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit_classes)

    p = sub.add_parser("classify", help="nearest-template classification")
    p.add_argument("--model", required=True)
    p.add_argument("--templates", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("gen-synthetic", help="sample a finite-support distribution")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", choices=["quick", "full"], default="quick")
    p.add_argument("--model", default=None, help="stress this model instead of random ones")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, sio.DataError, DimensionError, InvalidNetworkError,
            InvalidPartitionError, EmptyInputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
