"""Command-line entry point tying the modules into user workflows."""

from __future__ import annotations

import argparse
import os
import signal
import sys
import threading

from .bench.presets import UnknownPreset
from .bundle import Bundle, bundle_to_dict, load_bundle, save_bundle
from .dataset import (
    ArityMismatch,
    BadK,
    BadRatios,
    DatasetError,
    FeatureMask,
    MalformedRow,
    UnknownColumn,
    apply_scaler,
    drop_missing,
    fit_scaler,
    load_csv,
    parse_feature_block,
    rfe,
    split,
    write_csv,
)
from .ensemble import (
    UnknownAlgorithm,
    VotingMode,
    ensemble_predict_batch,
    parse_combo,
    train_sharded,
    train_whole_data,
)
from .models import Hyperparams, evaluate
from .node import ConfigError, Gateway, NodeConfig, Role, config_from_dict, run_master, run_worker

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_USAGE_ERRORS = (
    ArityMismatch,
    BadK,
    BadRatios,
    ConfigError,
    MalformedRow,
    UnknownAlgorithm,
    UnknownColumn,
    UnknownPreset,
)


class UsageError(Exception):
    """Bad invocation detected before any side effect."""


# ----------------------------------------------------------------------
# shared helpers
# ----------------------------------------------------------------------


def _format_report(rep) -> str:
    return (
        f"accuracy={rep.accuracy:.4f} precision={rep.precision:.4f} "
        f"recall={rep.recall:.4f} f_measure={rep.f_measure:.4f} auc={rep.auc:.4f}"
    )


def _node_config(args, role: Role) -> NodeConfig:
    """Merge config sources: flag beats env var beats config file beats default."""
    doc: dict = {}
    if args.config:
        import json

        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ConfigError("config root must be an object")
    doc["role"] = role.value

    env_port = os.environ.get("EDGEVOTE_PORT")
    if env_port is not None:
        host = (doc.get("listen_address") or "127.0.0.1:0").rsplit(":", 1)[0]
        doc["listen_address"] = f"{host}:{env_port}"
    env_secret = os.environ.get("EDGEVOTE_SECRET")
    if env_secret is not None:
        doc["shared_secret"] = env_secret

    if getattr(args, "listen", None):
        doc["listen_address"] = args.listen
    if getattr(args, "master", None):
        doc["master_address"] = args.master
    if getattr(args, "secret", None):
        doc["shared_secret"] = args.secret
    if getattr(args, "node_id", None):
        doc["node_id"] = args.node_id
    if getattr(args, "model", None):
        doc["model_path"] = args.model
    doc.setdefault("node_id", role.value.lower())
    return config_from_dict(doc)


def _serve_until_signal(server) -> int:
    stop = threading.Event()

    def _stop(signum, frame):
        stop.set()

    signal.signal(signal.SIGTERM, _stop)
    signal.signal(signal.SIGINT, _stop)
    try:
        stop.wait()
    finally:
        server.stop()
    return EXIT_OK


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_preprocess(args) -> int:
    if os.path.realpath(args.infile) == os.path.realpath(args.out):
        raise UsageError("refusing to overwrite the input file; pick a different --out")
    ds = load_csv(args.infile)
    columns = args.drop_cols.split(",") if args.drop_cols else None
    kept = drop_missing(ds, columns=columns)
    write_csv(kept, args.out)
    print(f"loaded {len(ds)} records, kept {len(kept)} complete records -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    combo = parse_combo(args.combo)
    mode = VotingMode(args.mode)
    if args.rfe_k is not None and args.rfe_k < 1:
        raise BadK(f"--rfe-k must be >= 1, got {args.rfe_k}")

    ds = load_csv(args.data)
    kept = drop_missing(ds)
    sd = split(kept, seed=args.seed)
    scaler = fit_scaler(kept, sd.train_idx)
    if args.rfe_k is not None:
        mask = rfe(kept, sd.train_idx, args.rfe_k, seed=args.seed)
    else:
        mask = FeatureMask(tuple(range(len(kept.feature_names))))
    X, y = kept.feature_matrix(), kept.labels()

    def part(idx):
        rows = list(idx)
        return mask.apply(apply_scaler(scaler, X[rows])), y[rows]

    X_train, y_train = part(sd.train_idx)
    X_val, y_val = part(sd.val_idx)
    X_test, y_test = part(sd.test_idx)

    hp = Hyperparams(seed=args.seed)
    trainer = train_whole_data if args.whole_data else train_sharded
    ens = trainer(combo, X_train, y_train, hp, args.seed, X_val, y_val, mode=mode)

    reports = {}
    for split_name, Xp, yp in (
        ("train", X_train, y_train),
        ("validation", X_val, y_val),
        ("test", X_test, y_test),
    ):
        rep = evaluate(ensemble_predict_batch(ens, Xp), yp)
        reports[split_name] = rep.to_dict()
        print(f"{split_name}: {_format_report(rep)}")

    bundle = Bundle(
        ensemble=ens,
        scaler=scaler,
        mask=mask,
        seed=args.seed,
        reports=reports,
        hyperparams=hp.to_dict(),
    )
    save_bundle(bundle, args.out)
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    bundle = load_bundle(args.model)
    with open(args.infile, encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        X = None  # empty file counts as zero rows
        preds = []
    else:
        X, _ = parse_feature_block(text)
        preds = bundle.predict_rows(X)
    lines = ["label,prob_1"]
    lines += [f"{p.label},{p.probs[1]!r}" for p in preds]
    out_text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out_text)
        print(f"{len(preds)} predictions -> {args.out}")
    else:
        sys.stdout.write(out_text)
    return EXIT_OK


def cmd_master(args) -> int:
    cfg = _node_config(args, Role.MASTER)
    server = run_master(cfg)
    print(f"READY {cfg.node_id} {server.address}", flush=True)
    return _serve_until_signal(server)


def cmd_worker(args) -> int:
    cfg = _node_config(args, Role.WORKER)
    server = run_worker(cfg)
    print(f"READY {cfg.node_id} {server.address}", flush=True)
    return _serve_until_signal(server)


def cmd_gateway(args) -> int:
    from .bench.records import report as write_report

    cfg = _node_config(args, Role.GATEWAY)
    gw = Gateway(cfg, scenario=args.scenario)
    with open(args.infile, encoding="utf-8") as fh:
        rows_text = fh.read()

    ensemble_doc = None
    model_ref = args.model_ref
    if args.model_file:
        ensemble_doc = bundle_to_dict(load_bundle(args.model_file))
        model_ref = None
    elif model_ref is None:
        model_ref = "default"

    for _ in range(args.warmup):
        gw.submit_job(rows_text, model_ref=model_ref, ensemble_doc=ensemble_doc)

    records = []
    preds = []
    for _ in range(args.reps):
        preds, record = gw.submit_job(rows_text, model_ref=model_ref, ensemble_doc=ensemble_doc)
        records.append(record)
        print(
            f"job {record.job_id}: arbitration={record.arbitration_ms:.3f}ms "
            f"latency={record.latency_ms:.3f}ms execution={record.execution_ms:.3f}ms "
            f"response={record.response_ms:.3f}ms "
            f"bytes={record.bytes_sent}/{record.bytes_received}",
            flush=True,
        )

    pred_lines = ["label,prob_1"] + [f"{p.label},{p.probs[1]!r}" for p in preds]
    if args.pred_out:
        with open(args.pred_out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(pred_lines) + "\n")
    else:
        sys.stdout.write("\n".join(pred_lines) + "\n")
    if args.timing_out:
        write_report(records, args.timing_out)
    return EXIT_OK


def cmd_bench(args) -> int:
    from dataclasses import replace as dc_replace

    from .bench.presets import preset
    from .bench.records import format_summary, report as write_report
    from .bench.runner import run_scenario

    cfg = preset(args.preset)
    if args.reps is not None:
        cfg = dc_replace(cfg, repetitions=args.reps)
    os.makedirs(args.out, exist_ok=True)
    records, eval_report = run_scenario(cfg, data_path=args.data, out_dir=args.out)
    write_report(records, os.path.join(args.out, "records.csv"))
    print(format_summary(records))
    print(f"prediction quality: {_format_report(eval_report)}")
    print(f"records -> {os.path.join(args.out, 'records.csv')}")
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def _add_node_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring the node settings")
    p.add_argument("--listen", help="host:port to listen on")
    p.add_argument("--master", help="master host:port")
    p.add_argument("--secret", help="shared message secret")
    p.add_argument("--node-id", dest="node_id", help="node identifier")
    p.add_argument("--model", help="model bundle served by this node")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgevote",
        description="Edge-cloud diabetes-prediction orchestration.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("preprocess", help="drop records with missing measurements")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--drop-cols", dest="drop_cols", help="comma-separated column names")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a voting ensemble end to end")
    p.add_argument("--data", required=True)
    p.add_argument("--combo", default="svm-dt-lr")
    p.add_argument("--mode", choices=["hard", "soft"], default="hard")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--whole-data", action="store_true", help="train every member on all rows")
    p.add_argument("--rfe-k", dest="rfe_k", type=int, help="keep k features by recursive elimination")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict with a trained bundle")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("master", help="run a broker node")
    _add_node_flags(p)
    p.set_defaults(func=cmd_master)

    p = sub.add_parser("worker", help="run a worker node")
    _add_node_flags(p)
    p.set_defaults(func=cmd_worker)

    p = sub.add_parser("gateway", help="submit prediction jobs through a master")
    _add_node_flags(p)
    p.add_argument("--in", dest="infile", required=True, help="patient rows CSV block")
    p.add_argument("--model-ref", dest="model_ref", help="use the target node's configured bundle")
    p.add_argument("--model-file", dest="model_file", help="ship this bundle inline with each job")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--warmup", type=int, default=0)
    p.add_argument("--scenario", default="adhoc")
    p.add_argument("--timing-out", dest="timing_out", help="write timing CSV here")
    p.add_argument("--pred-out", dest="pred_out", help="write predictions here instead of stdout")
    p.set_defaults(func=cmd_gateway)

    p = sub.add_parser("bench", help="run a deployment scenario benchmark")
    p.add_argument("--preset", required=True)
    p.add_argument("--reps", type=int)
    p.add_argument("--out", default="bench-out")
    p.add_argument("--data", default="data/pima_diabetes.csv")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _USAGE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # runtime failures map to a documented code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
