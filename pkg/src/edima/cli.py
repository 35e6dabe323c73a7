"""edima command line: synthesize, ingest, train, evaluate, classify, act.

Every workflow stage is its own subcommand so each module stays
independently drivable. All randomness flows from --seed; when the flag
is absent a random seed is chosen and logged to stderr. classify writes
its deterministic outputs (verdicts, actions, report) separately from
the timing metadata, so reruns with identical inputs are byte-identical
where it matters.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from .constructor import ModelRegistry, SplitSpec, build, split
from .errors import CategoryMismatch, EdimaError
from .featuredb import FeatureStore, SampleRecord, record_to_row
from .features import Label, extract_features
from .ml import (
    Algorithm,
    Dataset,
    compute_metrics,
    deserialize_model,
    model_digest,
    predict_many,
    serialize_model,
)
from .pcap import parse_pcap
from .policy import ActionKind, Verdict, action_to_row, evaluate, load_rules
from .sessions import (
    MalwareCategory,
    TargetPortList,
    filter_session,
    slice_sessions,
    subsample,
)
from .synth import BenignProfile, ScanProfile, build_corpus

CATEGORY_CHOICES = [m.value for m in MalwareCategory]
ALGO_CHOICES = [m.value for m in Algorithm]


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _iso_from_micros(us: int) -> str:
    return datetime.fromtimestamp(us / 1e6, tz=timezone.utc).isoformat()


def _resolve_seed(seed):
    if seed is not None:
        return seed
    chosen = int.from_bytes(os.urandom(4), "big")
    print(f"no --seed given, using {chosen}", file=sys.stderr)
    return chosen


def _expand_inputs(paths) -> list:
    """Positional inputs may be pcap files or directories to scan."""
    out = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            out.extend(sorted(path.glob("*.pcap")))
        else:
            out.append(path)
    return out


def _load_label_map(path) -> dict:
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                table[row["file"]] = Label.from_wire(row["label"])
    return table


def _sessions_of_file(path: Path, window_micros: int, sample_p, sample_seed):
    blob = Path(path).read_bytes()
    result = parse_pcap(blob)
    sessions = slice_sessions(result.packets, Path(path).stem, window_micros)
    if sample_p is not None:
        sessions = [subsample(s, sample_p, seed=sample_seed) for s in sessions]
    return sessions, result.skipped


# subcommands


def cmd_synth(args) -> int:
    seed = _resolve_seed(args.seed)
    category = MalwareCategory.from_wire(args.category)
    benign_kwargs = {}
    scan_kwargs = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        benign_kwargs = dict(doc.get("benign") or {})
        scan_kwargs = dict(doc.get("scan") or {})
    if args.scan_rate is not None:
        scan_kwargs["scan_rate_pps"] = args.scan_rate
    benign_profile = BenignProfile(**benign_kwargs)
    scan_profile = ScanProfile(category, **scan_kwargs)

    paths, labels_path = build_corpus(
        args.benign, args.malicious, category,
        benign_profile=benign_profile, scan_profile=scan_profile,
        duration_s=args.duration_secs, seed=seed, outdir=args.out)
    print(f"wrote {len(paths)} sessions to {args.out} (labels: {labels_path})")
    return 0


def cmd_ingest(args) -> int:
    category = MalwareCategory.from_wire(args.category)
    ports = TargetPortList.default(category)
    window_micros = int(round(args.window_secs * 1e6))
    if args.labels:
        label_map = _load_label_map(args.labels)
        fixed_label = None
    elif args.label:
        label_map = None
        fixed_label = Label.from_wire(args.label)
    else:
        print("error: ingest needs --labels or --label", file=sys.stderr)
        return 2

    added_at = args.added_at or _now_iso()
    files = _expand_inputs(args.inputs)
    records = []
    skipped_total = 0
    for path in files:
        name = Path(path).name
        if label_map is not None:
            if name not in label_map:
                print(f"error: {name} missing from labels file", file=sys.stderr)
                return 1
            label = label_map[name]
        else:
            label = fixed_label
        sessions, skipped = _sessions_of_file(path, window_micros, args.sample_p, args.sample_seed)
        skipped_total += skipped
        for session in sessions:
            fv = extract_features(filter_session(session, ports), category)
            fv.label = label
            records.append(SampleRecord(
                id=f"{fv.gateway}/{fv.window_start_us}/{category.value}",
                fv=fv, source=args.source or name, added_at=added_at))

    store = FeatureStore(args.db)
    count = store.insert(records)
    note = f", {skipped_total} undecodable frames skipped" if skipped_total else ""
    print(f"ingested {count} sessions from {len(files)} files into {args.db}{note}")
    return 0


def _hyperparams(args, algorithm: Algorithm):
    hp = {}
    if args.k is not None:
        hp["k"] = args.k
    if args.trees is not None:
        hp["trees"] = args.trees
    if algorithm is Algorithm.GNB and hp:
        # train() rejects these; fail with the flag names instead
        bad = " ".join(f"--{key}" for key in sorted(hp))
        raise EdimaError(f"gnb takes no hyperparameters ({bad})")
    return hp or None


def _print_metrics(metrics) -> None:
    print(f"tp={metrics.tp} fp={metrics.fp} fn={metrics.fn} tn={metrics.tn}")
    print(f"accuracy={metrics.accuracy:.4f} precision={metrics.precision:.4f} "
          f"recall={metrics.recall:.4f} f1={metrics.f1:.4f}")


def cmd_train(args) -> int:
    seed = _resolve_seed(args.seed)
    category = MalwareCategory.from_wire(args.category)
    algorithm = Algorithm.from_wire(args.algo)
    store = FeatureStore(args.db)
    rows = [rec.fv for rec in store.query(category=category)]
    data = Dataset(rows)
    spec = SplitSpec(train_fraction=args.split, seed=seed)
    model, metrics = build(algorithm, data, spec, _hyperparams(args, algorithm),
                           seed=seed, trained_at=args.trained_at)

    n_test = metrics.tp + metrics.fp + metrics.fn + metrics.tn
    print(f"algo={algorithm.value} category={category.value} "
          f"rows={len(data)} train={len(data) - n_test} test={n_test}")
    _print_metrics(metrics)

    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(serialize_model(model), encoding="utf-8")
        print(f"model written to {args.out}")
    if args.registry:
        decision = ModelRegistry(args.registry).compare_and_promote(
            category, model, metrics, min_gain=args.min_gain, decided_at=_now_iso())
        print(f"registry decision: {decision.value}")
    return 0


def cmd_evaluate(args) -> int:
    model = deserialize_model(Path(args.model).read_text(encoding="utf-8"))
    if args.category and MalwareCategory.from_wire(args.category) is not model.category:
        raise CategoryMismatch(
            f"model is for {model.category.value}, --category says {args.category}")
    store = FeatureStore(args.db)
    rows = [rec.fv for rec in store.query(category=model.category)]
    data = Dataset(rows)
    if args.all:
        test_ds = data
    else:
        _, test_ds = split(data, SplitSpec(train_fraction=args.split, seed=_resolve_seed(args.seed)))
    predicted, _ = predict_many(model, test_ds.rows)
    metrics = compute_metrics(predicted, [fv.label for fv in test_ds.rows])

    print(f"algo={model.algorithm.value} category={model.category.value} test={len(test_ds)}")
    _print_metrics(metrics)
    if args.out:
        Path(args.out).write_text(
            json.dumps(metrics.as_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_classify(args) -> int:
    t_start = time.perf_counter()
    category = MalwareCategory.from_wire(args.category)
    model = deserialize_model(Path(args.model).read_text(encoding="utf-8"))
    if model.category is not category:
        raise CategoryMismatch(
            f"model is for {model.category.value}, --category says {category.value}")
    ports = TargetPortList.default(category)
    window_micros = int(round(args.window_secs * 1e6))
    rules = load_rules(args.rules) if args.rules else []
    label_map = _load_label_map(args.labels) if args.labels else None
    files = _expand_inputs(args.inputs)

    def work(path):
        sessions, skipped = _sessions_of_file(path, window_micros, args.sample_p, args.sample_seed)
        out = []
        for session in sessions:
            fv = extract_features(filter_session(session, ports), category)
            labels, scores = predict_many(model, [fv])
            out.append((session, labels[0], float(scores[0])))
        return Path(path).name, out, skipped

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(work, files))
    else:
        results = [work(path) for path in files]

    verdict_rows = []
    action_rows = []
    predicted = []
    truth = []
    skipped_total = 0
    by_label: dict = {}
    by_action: dict = {}
    for name, sessions, skipped in results:
        skipped_total += skipped
        for session, label, score in sessions:
            verdict = Verdict(gateway_id=session.gateway_id,
                              window_start_micros=session.window_start_micros,
                              category=category, label=label, score=score)
            verdict_rows.append({
                "gateway": verdict.gateway_id,
                "window_start_us": verdict.window_start_micros,
                "category": category.value,
                "label": label.value,
                "score": score,
            })
            by_label[label.value] = by_label.get(label.value, 0) + 1
            window_end = session.window_start_micros + session.window_len_micros
            for act in evaluate(rules, verdict, issued_at=_iso_from_micros(window_end)):
                action_rows.append(action_to_row(act))
                by_action[act.action.value] = by_action.get(act.action.value, 0) + 1
            if label_map is not None and name in label_map:
                predicted.append(label)
                truth.append(label_map[name])

    metrics = compute_metrics(predicted, truth) if predicted else None

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "verdicts.jsonl", "w", encoding="utf-8") as fh:
        for row in verdict_rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")
    with open(outdir / "actions.jsonl", "w", encoding="utf-8") as fh:
        for row in action_rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")

    report = {
        "category": category.value,
        "window_secs": args.window_secs,
        "model_digest": model_digest(model),
        "n_files": len(files),
        "n_sessions": len(verdict_rows),
        "skipped_frames": skipped_total,
        "verdicts_by_label": by_label,
        "actions_by_kind": by_action,
        "metrics": metrics.as_dict() if metrics else None,
    }
    (outdir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    elapsed = time.perf_counter() - t_start
    meta = {
        "elapsed_s": elapsed,
        "sessions_per_s": len(verdict_rows) / elapsed if elapsed > 0 else 0.0,
        "generated_at": _now_iso(),
    }
    (outdir / "meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    print(f"{len(files)} files, {len(verdict_rows)} sessions -> {outdir}")
    if metrics:
        _print_metrics(metrics)
    return 0


def cmd_db_import(args) -> int:
    count = FeatureStore(args.db).import_file(args.file)
    print(f"imported {count} records into {args.db}")
    return 0


def cmd_db_export(args) -> int:
    count = FeatureStore(args.db).export_file(args.file)
    print(f"exported {count} records to {args.file}")
    return 0


def cmd_db_query(args) -> int:
    category = MalwareCategory.from_wire(args.category) if args.category else None
    label = Label.from_wire(args.label) if args.label else None
    for rec in FeatureStore(args.db).query(category=category, label=label, limit=args.limit):
        print(json.dumps(record_to_row(rec), sort_keys=True, separators=(",", ":")))
    return 0


def cmd_policy_check(args) -> int:
    rules = load_rules(args.rules)
    print(f"{len(rules)} rules OK")
    if args.label:
        verdict = Verdict(gateway_id=args.gateway, window_start_micros=0,
                          category=MalwareCategory.from_wire(args.category),
                          label=Label.from_wire(args.label), score=args.score)
        for act in evaluate(rules, verdict):
            print(json.dumps(action_to_row(act), sort_keys=True, separators=(",", ":")))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edima",
        description="Scan-detection toolkit: synthesize, ingest, train, classify, act.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled pcap corpus")
    p.add_argument("--category", required=True, choices=CATEGORY_CHOICES)
    p.add_argument("--benign", type=int, default=30, help="benign session count")
    p.add_argument("--malicious", type=int, default=30, help="malicious session count")
    p.add_argument("--duration-secs", type=float, default=900.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="JSON file with benign/scan profile overrides")
    p.add_argument("--scan-rate", type=float, default=None, help="scan probes per second")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="extract features from pcaps into the store")
    p.add_argument("--category", required=True, choices=CATEGORY_CHOICES)
    p.add_argument("--db", required=True)
    p.add_argument("--window-secs", type=float, default=900.0)
    p.add_argument("--labels", help="labels.jsonl mapping file to label")
    p.add_argument("--label", choices=[m.value for m in Label], help="one label for all inputs")
    p.add_argument("--source", default=None, help="provenance note, defaults to the file name")
    p.add_argument("--added-at", default=None)
    p.add_argument("--sample-p", type=float, default=None)
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("inputs", nargs="+", help="pcap files or directories")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="split, fit, and score one classifier")
    p.add_argument("--db", required=True)
    p.add_argument("--category", required=True, choices=CATEGORY_CHOICES)
    p.add_argument("--algo", required=True, choices=ALGO_CHOICES)
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="knn neighbour count (odd)")
    p.add_argument("--trees", type=int, default=None, help="rf tree count")
    p.add_argument("--min-gain", type=float, default=0.01)
    p.add_argument("--registry", help="registry root; compare and maybe promote")
    p.add_argument("--trained-at", default=None)
    p.add_argument("--out", help="write the serialized model here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on stored rows")
    p.add_argument("--model", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--category", choices=CATEGORY_CHOICES)
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--all", action="store_true", help="score every row, not the held-out part")
    p.add_argument("--out", help="write metrics JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("classify", help="slice, filter, and classify pcaps")
    p.add_argument("--model", required=True)
    p.add_argument("--category", required=True, choices=CATEGORY_CHOICES)
    p.add_argument("--window-secs", type=float, default=900.0)
    p.add_argument("--rules", help="policy rules JSON")
    p.add_argument("--labels", help="ground-truth labels.jsonl for scoring")
    p.add_argument("--sample-p", type=float, default=None)
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("inputs", nargs="*", help="pcap files or directories")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("db", help="feature store maintenance")
    dsub = p.add_subparsers(dest="db_command", required=True)
    d = dsub.add_parser("import")
    d.add_argument("--db", required=True)
    d.add_argument("file")
    d.set_defaults(func=cmd_db_import)
    d = dsub.add_parser("export")
    d.add_argument("--db", required=True)
    d.add_argument("file")
    d.set_defaults(func=cmd_db_export)
    d = dsub.add_parser("query")
    d.add_argument("--db", required=True)
    d.add_argument("--category", choices=CATEGORY_CHOICES)
    d.add_argument("--label", choices=[m.value for m in Label])
    d.add_argument("--limit", type=int, default=None)
    d.set_defaults(func=cmd_db_query)

    p = sub.add_parser("policy", help="policy rules tooling")
    psub = p.add_subparsers(dest="policy_command", required=True)
    c = psub.add_parser("check")
    c.add_argument("--rules", required=True)
    c.add_argument("--label", choices=[m.value for m in Label],
                   help="also evaluate a trial verdict with this label")
    c.add_argument("--score", type=float, default=1.0)
    c.add_argument("--category", choices=CATEGORY_CHOICES, default="telnet")
    c.add_argument("--gateway", default="gw-test")
    c.set_defaults(func=cmd_policy_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EdimaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
