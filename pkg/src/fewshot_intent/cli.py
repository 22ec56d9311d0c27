"""Command-line entry point.

Subcommands: ingest, sample, train, eval, sweep, bench, compare,
export-split. Exit codes: 0 success, 1 usage error, 2 data/validation
error, 3 divergence or benchmark failure.

Flag defaults can be overridden by environment variables named
``FSI_<FLAG>`` (dashes become underscores, e.g. ``FSI_ITERATIONS``);
an explicit flag always wins over the environment. Every run prints
its fully resolved configuration, so there are no hidden defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import bench as bench_mod
from . import dataset as ds
from . import experiments as ex
from . import mlp
from ._kernels import active_backend_name
from .errors import FsiError, UsageError
from .stores import read_store

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

SUBCOMMANDS = ("ingest", "sample", "train", "eval", "sweep", "bench", "compare", "export-split")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the contract here is exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _env(flag: str, default):
    """FSI_<FLAG> environment override for a flag default."""
    value = os.environ.get("FSI_" + flag.upper().replace("-", "_"))
    return default if value is None else value


def _env_flag(flag: str) -> bool:
    value = os.environ.get("FSI_" + flag.upper().replace("-", "_"), "")
    return value.lower() not in ("", "0", "false", "no")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in str(text).split(",") if part != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}")


def _paths(text: str) -> list[str]:
    return [p for p in str(text).split(",") if p]


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--hidden-layers", type=int, default=int(_env("hidden-layers", 1)),
        help="number of ReLU hidden layers, 0-2 (default 1)",
    )
    parser.add_argument(
        "--hidden-dim", type=int, default=int(_env("hidden-dim", 512)),
        help="hidden layer width (default 512)",
    )
    parser.add_argument(
        "--dropout", type=float, default=float(_env("dropout", 0.75)),
        help="inverted-dropout rate on the pre-output representation (default 0.75)",
    )
    parser.add_argument(
        "--optimizer", choices=mlp.OPTIMIZERS, default=str(_env("optimizer", "sgd")),
        help="sgd (lr 0.7) or adam (lr 4e-4), both with linear decay",
    )
    parser.add_argument(
        "--lr", type=float, default=_env("lr", None),
        help="initial learning rate (default: 0.7 for sgd, 4e-4 for adam)",
    )
    parser.add_argument(
        "--iterations", type=int, default=int(_env("iterations", 500)),
        help="full-batch training steps (default 500)",
    )
    parser.add_argument(
        "--normalize", action="store_true", default=_env_flag("normalize"),
        help="L2-normalize feature rows (off by default; encoders are consumed raw)",
    )
    parser.add_argument(
        "--backend", choices=("auto", "python", "compiled"),
        default=str(_env("backend", "auto")),
        help="kernel backend (default: compiled when built, else python)",
    )


def _config_from_args(args, seed: int) -> mlp.MlpConfig:
    return mlp.MlpConfig(
        hidden_layers=args.hidden_layers,
        hidden_dim=args.hidden_dim,
        dropout_rate=args.dropout,
        optimizer=args.optimizer,
        initial_lr=None if args.lr is None else float(args.lr),
        iterations=args.iterations,
        seed=seed,
    )


def _apply_backend(args) -> None:
    if getattr(args, "backend", "auto") != "auto":
        os.environ["FSI_BACKEND"] = args.backend


def _resolve_regime(args) -> str:
    if getattr(args, "k", None) is not None:
        if args.regime is not None:
            raise UsageError("--k and --regime are mutually exclusive")
        if args.k not in (10, 30):
            raise UsageError(f"--k must be 10 or 30, got {args.k}")
        return f"k{args.k}"
    if args.regime is None:
        raise UsageError("one of --regime or --k is required")
    return args.regime


def _seeds_from_args(args) -> list[int]:
    if getattr(args, "seeds", None) is not None:
        return _int_list(args.seeds)
    if args.seed is None:
        raise UsageError("--seed is required (determinism is not optional)")
    return [int(args.seed)]


def _print_resolved(label: str, payload: dict) -> None:
    print(f"{label}: {json.dumps(payload, sort_keys=True)}")


# --- subcommand handlers ----------------------------------------------------

def _cmd_ingest(args) -> int:
    dataset = ds.ingest_pack(
        args.train, args.test, args.out, format=args.format, name=args.name
    )
    labels = ds.build_label_index(dataset)
    print(
        f"ingested {dataset.name}: {len(dataset.rows)} rows "
        f"({dataset.train_count} train, {len(dataset.test_rows)} test), "
        f"{labels.num_classes} intents, digest {dataset.digest_hex[:12]}..."
    )
    print(f"pack written to {args.out}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required (determinism is not optional)")
    dataset = ds.load_pack(args.dataset)
    labels = ds.build_label_index(dataset)
    split = ds.few_shot_sample(dataset, labels, k=args.k, seed=args.seed)
    _print_resolved(
        "resolved", {"dataset": dataset.name, "k": args.k, "seed": args.seed}
    )
    if args.out:
        Path(args.out).write_text(split.to_json() + "\n")
        print(f"split with {len(split.row_indices)} rows written to {args.out}")
    else:
        print(split.to_json())
    return EXIT_OK


def _cmd_export_split(args) -> int:
    dataset = ds.load_pack(args.dataset)
    labels = ds.build_label_index(dataset)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for k in _int_list(args.ks):
        for seed in _int_list(args.seeds):
            split = ds.few_shot_sample(dataset, labels, k=k, seed=seed)
            path = out_dir / f"split-{dataset.name}-k{k}-seed{seed}.json"
            path.write_text(split.to_json() + "\n")
            written.append(path.name)
    print(f"wrote {len(written)} split files to {out_dir}")
    return EXIT_OK


def _cmd_train(args) -> int:
    _apply_backend(args)
    regime = _resolve_regime(args)
    seeds = _seeds_from_args(args)
    spec = ex.ExperimentSpec(
        dataset_dir=args.dataset,
        store_paths=tuple(_paths(args.stores)),
        regime=regime,
        config=_config_from_args(args, seeds[0]),
        seeds=tuple(seeds),
        normalize=args.normalize,
    )
    _print_resolved("resolved", {**spec.to_dict(), "backend": active_backend_name()})
    result = ex.run_experiment(spec, out_dir=args.out, save_model_path=args.save_model)
    print(
        f"{result.model_tag} on {result.dataset_name} [{regime}]: "
        f"accuracy {result.mean_accuracy:.4f} +/- {result.std_accuracy:.4f} "
        f"over {len(seeds)} seed(s), {result.train_seconds:.1f}s"
    )
    if args.out:
        print(f"result JSON: {ex.result_path(args.out, spec)}")
    if args.save_model:
        print(f"model checkpoint: {args.save_model}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    _apply_backend(args)
    import numpy as np

    model = mlp.load_model(args.model)
    dataset = ds.load_pack(args.dataset)
    labels = ds.build_label_index(dataset)
    spec = ex.ExperimentSpec(
        dataset_dir=args.dataset,
        store_paths=tuple(_paths(args.stores)),
        regime="full",
        config=model.config,
        seeds=(model.config.seed,),
        normalize=args.normalize,
    )
    features, tag = ex.load_features(spec, dataset)
    y_all = np.array([labels.id_of(r.label) for r in dataset.rows], dtype=np.int64)
    x_test = features[dataset.train_count :]
    y_test = y_all[dataset.train_count :]
    if x_test.shape[0] == 0:
        raise UsageError("dataset pack has no test region to evaluate on")
    accuracy = mlp.evaluate(model, x_test, y_test)
    print(
        json.dumps(
            {"model": tag, "dataset": dataset.name, "test_rows": int(len(y_test)),
             "accuracy": accuracy}
        )
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    _apply_backend(args)
    regime = _resolve_regime(args)
    if args.seed is None:
        raise UsageError("--seed is required (determinism is not optional)")
    seeds = [int(args.seed) + i for i in range(args.runs)]  # per-run seeds: seed+run_index
    pivot = mlp.pivot_config(seed=seeds[0], iterations=args.iterations)
    _print_resolved(
        "resolved",
        {
            "dataset": args.dataset, "stores": _paths(args.stores), "regime": regime,
            "seeds": seeds, "iterations": args.iterations, "jobs": args.jobs,
            "normalize": args.normalize, "backend": active_backend_name(),
        },
    )
    report = ex.run_sweep(
        dataset_dir=args.dataset,
        store_paths=_paths(args.stores),
        regime=regime,
        seeds=seeds,
        pivot=pivot,
        out_dir=args.out,
        jobs=args.jobs,
        normalize=args.normalize,
    )
    for label, accuracy in report.entries:
        print(f"  {label:<16s} {100 * accuracy:6.2f}%")
    for label, error in report.failures:
        print(f"  {label:<16s} FAILED: {error}")
    print(f"{regime}: {report.formatted()}")
    if args.out:
        print(f"sweep report: {Path(args.out) / 'sweep-report.json'}")
    if report.failures:
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_bench(args) -> int:
    _apply_backend(args)
    hardware = args.hardware or bench_mod.detect_hardware()
    results: list[bench_mod.BenchResult] = []
    if args.what == "encoding":
        if args.endpoint:
            provider = bench_mod.HttpEncodeProvider(args.endpoint)
            items = ["benchmark sentence %d" % i for i in range(args.limit)]
        elif args.stores:
            store = read_store(_paths(args.stores)[0])
            provider = bench_mod.StoreLookupProvider(store)
            items = provider.items(limit=args.limit)
        else:
            raise UsageError("bench encoding needs --stores or --endpoint")
        results.append(
            bench_mod.bench_encoding(
                provider, items, batch_size=args.batch_size,
                repetitions=args.repetitions, hardware=hardware,
            )
        )
    elif args.what == "training":
        regime = _resolve_regime(args)
        seeds = _seeds_from_args(args)
        spec = ex.ExperimentSpec(
            dataset_dir=args.dataset,
            store_paths=tuple(_paths(args.stores)),
            regime=regime,
            config=_config_from_args(args, seeds[0]),
            seeds=tuple(seeds),
            normalize=args.normalize,
        )
        results.append(
            bench_mod.bench_training(
                spec, repetitions=args.repetitions, hardware=hardware
            )
        )
    else:  # kernels
        results.extend(
            bench_mod.bench_kernels(
                iterations=args.kernel_iterations, repetitions=args.repetitions,
                hardware=hardware,
            )
        )
        if len(results) < 2:
            print("note: compiled backend not built; showing python backend only")

    for result in results:
        value = (
            f"{result.median:.1f} sentences/s"
            if result.unit == "sentences_per_second"
            else f"{result.median:.3f} s"
        )
        print(f"{result.name}: median {value} over {result.repetitions} reps [{result.hardware}]")
    context = bench_mod.reference_context()
    print(f"published context (different hardware): {json.dumps(context['encoding_sentences_per_second']['cpu'])} sentences/s; "
          f"train+eval banking77 k10: {json.dumps(context['train_and_evaluate_seconds']['cpu'])} s")
    if args.out:
        payload = [r.to_dict() for r in results]
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"bench report: {args.out}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    result_paths: list[Path] = []
    for entry in args.results:
        p = Path(entry)
        if p.is_dir():
            result_paths.extend(sorted(p.glob("result-*.json")))
        elif p.is_file():
            result_paths.append(p)
        else:
            raise FsiError(f"no such results file or directory: {p}")
    documents = [json.loads(p.read_text()) for p in result_paths]
    reference = args.reference or str(
        Path(__file__).parent / "data" / "table2_reference.csv"
    )
    report = ex.compare_to_reference(documents, reference, tolerance=args.tolerance)
    if report.empty:
        print("no results to compare")
        return EXIT_DATA
    for cell in report.cells:
        status = "pass" if cell.passed else "FAIL"
        print(
            f"{status}  {cell.model} / {cell.dataset} / {cell.regime}: "
            f"measured {cell.measured:.4f} vs reference {cell.reference:.4f} "
            f"(delta {cell.delta:+.4f}, tol {cell.tolerance:.4f})"
        )
    for flag in ex.monotone_trend_flags(documents):
        print(f"note: {flag}")  # soft data-trend check, informational only
    if not report.all_passed:
        return EXIT_RUNTIME
    return EXIT_OK


# --- parser wiring ----------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(
        prog="fsi",
        description="Few-shot intent detection on fixed sentence embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="|".join(SUBCOMMANDS))

    p = sub.add_parser("ingest", help="merge train/test files into a canonical pack")
    p.add_argument("--train", required=True, help="released training file")
    p.add_argument("--test", required=True, help="released test file")
    p.add_argument("--format", choices=ds.FORMATS, default=str(_env("format", "csv")))
    p.add_argument("--name", default=None, help="dataset name (default: parent dir of --train)")
    p.add_argument("--out", required=True, help="pack output directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("sample", help="draw one balanced k-shot split")
    p.add_argument("--dataset", required=True, help="pack directory")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=_env("seed", None))
    p.add_argument("--out", default=None, help="split JSON path (default: print)")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("export-split", help="emit split files for a k/seed grid")
    p.add_argument("--dataset", required=True)
    p.add_argument("--ks", default="10,30", help="comma-separated k values")
    p.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated seeds")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_export_split)

    for name, helptext in (
        ("train", "train and evaluate one configuration"),
        ("eval", "evaluate a saved checkpoint on a pack's test rows"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--dataset", required=True, help="pack directory")
        p.add_argument("--stores", required=True,
                       help="comma-separated store files, concatenation order")
        _add_config_flags(p)
        if name == "train":
            p.add_argument("--regime", choices=ex.REGIMES, default=None)
            p.add_argument("--k", type=int, default=None, help="shorthand: 10 or 30")
            p.add_argument("--seed", type=int, default=_env("seed", None))
            p.add_argument("--seeds", default=None, help="comma-separated seed list")
            p.add_argument("--out", default=str(_env("out", "results")),
                           help="results directory (default: results)")
            p.add_argument("--save-model", default=None, help="write a model checkpoint")
            p.set_defaults(func=_cmd_train)
        else:
            p.add_argument("--model", required=True, help="checkpoint path")
            p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="run the 16-config robustness grid")
    p.add_argument("--dataset", required=True)
    p.add_argument("--stores", required=True)
    p.add_argument("--regime", choices=ex.REGIMES, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=_env("seed", None))
    p.add_argument("--runs", type=int, default=int(_env("runs", 5)),
                   help="seeds per config, derived as seed+run_index (default 5)")
    p.add_argument("--iterations", type=int, default=int(_env("iterations", 500)))
    p.add_argument("--normalize", action="store_true", default=bool(_env("normalize", False)))
    p.add_argument("--backend", choices=("auto", "python", "compiled"),
                   default=str(_env("backend", "auto")))
    p.add_argument("--jobs", type=int, default=int(_env("jobs", 1)),
                   help="parallel workers (default 1)")
    p.add_argument("--out", default=str(_env("out", "results/sweep")))
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bench", help="encoding/training/kernel benchmarks")
    p.add_argument("--what", choices=("encoding", "training", "kernels"), required=True)
    p.add_argument("--stores", default=None)
    p.add_argument("--endpoint", default=None, help="HTTP /encode service base URL")
    p.add_argument("--dataset", default=None)
    p.add_argument("--regime", choices=ex.REGIMES, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=_env("seed", 0))
    p.add_argument("--limit", type=int, default=int(_env("limit", 1000)),
                   help="items to encode (encoding bench)")
    p.add_argument("--batch-size", type=int, default=int(_env("batch-size", 15)))
    p.add_argument("--repetitions", type=int, default=int(_env("repetitions", 5)))
    p.add_argument("--kernel-iterations", type=int, default=int(_env("kernel-iterations", 50)),
                   help="training steps per repetition for the kernels bench (default 50)")
    p.add_argument("--hardware", default=_env("hardware", None),
                   help="hardware note recorded with results (default: detected)")
    p.add_argument("--out", default=None, help="bench report JSON path")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("compare", help="compare persisted results to a reference table")
    p.add_argument("--results", nargs="+", required=True,
                   help="result JSON files or directories containing them")
    p.add_argument("--reference", default=None,
                   help="reference CSV (default: shipped published-accuracy table)")
    p.add_argument("--tolerance", type=float, default=float(_env("tolerance", ex.DEFAULT_TOLERANCE)))
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FsiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
