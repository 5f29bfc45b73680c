"""Operator command line: ingest -> stats -> train/search -> evaluate ->
export -> predict -> serve, plus the synthetic-corpus generator.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model/training
error. Every failure prints one line starting with ``kospred: error:`` to
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from . import __version__
from .bundle import (
    DEFAULT_FACILITY_CATALOG,
    FIXED_TIMESTAMP,
    BundleMetadata,
    ModelBundle,
    areas_by_city_from,
    export_lite,
    load_checkpoint,
    load_lite,
    predict,
    save_checkpoint,
    utc_timestamp,
)
from .dataset import (
    CleanDataset,
    SplitSpec,
    cleanse,
    describe,
    read_raw_csv,
    split,
    write_clean_csv,
)
from .encoding import encode_matrix, fit_encoder
from .errors import BundleError, DataError, KospredError, ModelError
from .nas import SearchBudget, SearchSpace, search
from .neuralnet import ArchSpec, TrainConfig, evaluate, train
from .service import make_server
from .synth import generate_corpus, write_raw_csv

ERROR_PREFIX = "kospred: error:"


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{ERROR_PREFIX} {message}", file=sys.stderr)
        raise SystemExit(1)


def _arch_widths(text: str) -> tuple[int, ...]:
    try:
        widths = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of widths: {text!r}")
    if not widths or any(w < 1 for w in widths):
        raise argparse.ArgumentTypeError(f"widths must be positive: {text!r}")
    return widths


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _facility_list(text: str) -> list[str]:
    return [part for part in text.split(",") if part]


def _load_dataset(path: str) -> CleanDataset:
    return cleanse(read_raw_csv(path), source=str(path))


def _load_bundle(path: str) -> ModelBundle:
    try:
        return load_lite(path)
    except OSError as exc:
        raise BundleError(f"cannot read model file {path}: {exc}") from exc


def _rupiah(value: int) -> str:
    return "Rp " + f"{value:,}".replace(",", ".")


def _timestamp(args) -> str:
    return FIXED_TIMESTAMP if args.fixed_timestamp else utc_timestamp()


def _train_bundle(data: CleanDataset, args) -> tuple[ModelBundle, dict]:
    """Shared train path: split, encode, train, assemble the bundle."""
    train_ds, test_ds = split(data, SplitSpec(args.test_fraction, args.seed))
    encoder = fit_encoder(train_ds)
    X_train, y_train = encode_matrix(encoder, train_ds)
    X_test, y_test = encode_matrix(encoder, test_ds)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        target_scaling=not args.no_target_scaling,
    )
    model, history = train(ArchSpec(hidden=args.arch), X_train, y_train, X_test, y_test, cfg)
    metadata = BundleMetadata(
        created_at=_timestamp(args),
        training_seed=args.seed,
        arch_summary=model.arch.summary,
        train_mae=history.train_mae[-1],
        val_mae=history.val_mae[-1],
    )
    bundle = ModelBundle(
        encoder=encoder,
        model=model,
        metadata=metadata,
        facility_catalog=DEFAULT_FACILITY_CATALOG,
        areas_by_city=areas_by_city_from(train_ds),
    )
    config_doc = {
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "learning_rate": cfg.learning_rate,
        "seed": cfg.seed,
        "target_scaling": cfg.target_scaling,
        "test_fraction": args.test_fraction,
    }
    return bundle, config_doc


def cmd_ingest(args) -> int:
    data = _load_dataset(args.input)
    write_clean_csv(data, args.output)
    p = data.provenance
    print(f"rows read: {p.rows_read}")
    print(f"kept: {p.kept}")
    print(f"duplicates dropped: {p.duplicates_dropped}")
    print(f"nulls dropped: {p.nulls_dropped}")
    print(f"wrote {p.kept} records to {args.output}")
    return 0


def cmd_stats(args) -> int:
    report = describe(_load_dataset(args.input), top_k=args.top_k)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    if args.json:
        print(report.to_json())
    else:
        print(f"total_records: {report.total_records}")
        print(f"cities: {len(report.city_counts)}")
        print(f"distinct areas: {sum(report.areas_per_city.values())}")
        print(f"types: {len(report.type_counts)}")
        if report.price_ranking:
            price, count = report.price_ranking[0]
            print(f"most common price: {_rupiah(price)} ({count} listings)")
    return 0


def cmd_train(args) -> int:
    data = _load_dataset(args.data)
    bundle, config_doc = _train_bundle(data, args)
    if args.checkpoint:
        save_checkpoint(bundle, args.checkpoint, config=config_doc)
    export_lite(bundle, args.out)
    print(f"trained {bundle.metadata.arch_summary} for {args.epochs} epochs")
    print("validation MAE: %.3f" % bundle.metadata.val_mae)
    print(f"wrote model to {args.out}")
    return 0


def cmd_search(args) -> int:
    data = _load_dataset(args.data)
    train_ds, test_ds = split(data, SplitSpec(args.test_fraction, args.seed))
    encoder = fit_encoder(train_ds)
    X_train, y_train = encode_matrix(encoder, train_ds)
    X_test, y_test = encode_matrix(encoder, test_ds)
    budget = SearchBudget(
        n_random=args.random,
        n_morph=args.morph,
        epochs_per_trial=args.epochs_per_trial,
        seed=args.seed,
    )
    base_cfg = TrainConfig(batch_size=args.batch_size, learning_rate=args.learning_rate,
                           seed=args.seed)
    best, trials = search(X_train, y_train, X_test, y_test, SearchSpace(), budget, base_cfg)

    if args.ledger:
        with open(args.ledger, "w", encoding="utf-8") as fh:
            for trial in trials:
                fh.write(json.dumps(trial.as_dict()))
                fh.write("\n")

    best_trial = min(
        (t for t in trials if t.val_mae is not None), key=lambda t: t.val_mae
    )
    metadata = BundleMetadata(
        created_at=_timestamp(args),
        training_seed=args.seed,
        arch_summary=best.arch.summary,
        train_mae=float("nan"),
        val_mae=best_trial.val_mae,
    )
    bundle = ModelBundle(
        encoder=encoder,
        model=best,
        metadata=metadata,
        facility_catalog=DEFAULT_FACILITY_CATALOG,
        areas_by_city=areas_by_city_from(train_ds),
    )
    export_lite(bundle, args.out)
    print(f"ran {len(trials)} trials")
    print(f"best architecture: {best.arch.summary}")
    print("best validation MAE: %.3f" % best_trial.val_mae)
    print(f"wrote model to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    bundle = _load_bundle(args.model)
    data = _load_dataset(args.data)
    mae = evaluate(bundle.model, bundle.encoder, data)
    if args.json:
        print(json.dumps({"mae_idr": mae, "records": len(data.records)}))
    else:
        print("MAE: %.3f" % mae)
    return 0


def cmd_export(args) -> int:
    bundle = load_checkpoint(args.checkpoint)
    if args.fixed_timestamp:
        bundle.metadata = replace(bundle.metadata, created_at=FIXED_TIMESTAMP)
    n = export_lite(bundle, args.out)
    print(f"wrote {n} bytes to {args.out}")
    return 0


def cmd_predict(args) -> int:
    bundle = _load_bundle(args.model)
    result = predict(
        bundle,
        kota=args.kota,
        area=args.area,
        type_kos=args.type_kos,
        facilities=args.facilities,
    )
    if args.json:
        print(json.dumps(result.as_dict()))
        return 0
    print(f"predicted monthly rent: {_rupiah(result.display_price)}")
    print(f"raw prediction: {result.price_idr:.2f} IDR")
    print(f"facility score used: {result.facility_score_used}")
    if result.unknown_facilities:
        print("unknown facilities: " + ", ".join(result.unknown_facilities))
    if result.oov_fields:
        print("out-of-vocabulary fields: " + ", ".join(result.oov_fields))
    return 0


def cmd_serve(args) -> int:
    bundle = _load_bundle(args.model)
    server = make_server(bundle, bind=args.bind, port=args.port, verbose=True)
    host, port = server.server_address[:2]
    # flush so wrappers watching a pipe see the bound port immediately
    print(f"serving {args.model} on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_synth(args) -> int:
    records = generate_corpus(args.seed, args.rows)
    write_raw_csv(records, args.out)
    print(f"wrote {len(records)} synthetic records to {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="kospred", description=__doc__)
    parser.add_argument("--version", action="version", version=f"kospred {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse and cleanse a raw CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="descriptive statistics of a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--top-k", type=_positive_int, default=25)
    p.add_argument("--output", help="write the JSON report to this path")
    p.add_argument("--json", action="store_true", help="print the JSON report")
    p.set_defaults(func=cmd_stats)

    def add_train_flags(p):
        p.add_argument("--epochs", type=_positive_int, default=200)
        p.add_argument("--batch-size", type=_positive_int, default=32)
        p.add_argument("--learning-rate", type=float, default=1e-3)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--test-fraction", type=float, default=0.2)
        p.add_argument("--fixed-timestamp", action="store_true",
                       help="write a constant timestamp for reproducible files")

    p = sub.add_parser("train", help="train one architecture and export a .kosm")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", type=_arch_widths, default=(256, 512, 128),
                   help="comma list of hidden widths")
    add_train_flags(p)
    p.add_argument("--no-target-scaling", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", help="also write a full-precision JSON checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="architecture search, export the best .kosm")
    p.add_argument("--data", required=True)
    p.add_argument("--random", type=_positive_int, default=8)
    p.add_argument("--morph", type=int, default=8)
    p.add_argument("--epochs-per-trial", type=_positive_int, default=30)
    p.add_argument("--batch-size", type=_positive_int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--fixed-timestamp", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--ledger", help="write the trial ledger as JSON lines")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="MAE of a model over a CSV corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export", help="convert a JSON checkpoint into a .kosm")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fixed-timestamp", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("predict", help="price one hypothetical listing")
    p.add_argument("--model", required=True)
    p.add_argument("--kota", required=True)
    p.add_argument("--area", required=True)
    p.add_argument("--type", dest="type_kos", required=True)
    p.add_argument("--facilities", type=_facility_list, default=[])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="HTTP inference service over a .kosm")
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--bind", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate the synthetic mirror corpus")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--rows", type=_positive_int, default=1205)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DataError, ValueError) as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 2
    except (ModelError, BundleError) as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 3
    except KospredError as exc:
        print(f"{ERROR_PREFIX} {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
