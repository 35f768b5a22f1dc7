"""Command-line interface wiring ingestion, retrieval, training,
evaluation and plot-data export into reproducible runs.

Exit codes: 0 ok, 2 usage, 3 I/O, 4 validation, 5 numerical failure.
Every training run writes a manifest (resolved config, dataset
checksums, per-seed output paths); re-running from the manifest
reproduces the run's report.csv bit-identically.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import K_GRID, TRAIN_MODES, TrainConfig
from .data import (
    Dataset,
    load_dataset,
    make_uniform_measure,
    normalize_embeddings,
    save_dataset,
    synth_generate,
)
from .errors import (
    ConfigError,
    IntegrityError,
    NumericalError,
    OtnnError,
    ValidationError,
)
from .metrics import aggregate_runs, f1_hate, mcnemar, representation_knn_analysis
from .neighbors import build_index, compute_neighbor_sets, neighborhood_mask
from .solver import sinkhorn_unbalanced
from .trainer import (
    BatchPair,
    batch_joint_cost,
    load_model,
    predict_labels,
    save_model,
    train,
    write_history,
    _ot_params,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5


@dataclass
class RunManifest:
    """Resolved configuration and provenance of one training invocation."""

    version: str
    variant: str
    config: dict
    seeds: list
    datasets: dict
    outputs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def verify_checksums(self) -> None:
        for name, entry in self.datasets.items():
            actual = _sha256(entry["path"])
            if actual != entry["sha256"]:
                raise IntegrityError(
                    f"checksum mismatch for {name} dataset {entry['path']}"
                )


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _infer_format(path) -> str:
    return "jsonl" if str(path).endswith(".jsonl") else "binary"


def _load_normalized(path, role=None) -> Dataset:
    d = load_dataset(path, _infer_format(path))
    d = normalize_embeddings(d)
    return d.with_role(role) if role else d


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    source, tr, va, te = synth_generate(
        args.n_source,
        args.n_target_train,
        args.n_target_val,
        args.n_target_test,
        args.dim,
        args.shift,
        args.seed,
    )
    for name, ds in (
        ("source", source),
        ("target_train", tr),
        ("target_val", va),
        ("target_test", te),
    ):
        save_dataset(ds, out / f"{name}.bin", "binary")
    print(f"wrote 4 datasets under {out}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    d = load_dataset(args.infile, _infer_format(args.infile))
    if not args.no_normalize:
        d = normalize_embeddings(d)
    save_dataset(d, args.out, _infer_format(args.out))
    print(f"wrote {d.n} instances (dim {d.dim}) to {args.out}")
    return EXIT_OK


def cmd_neighbors(args) -> int:
    source = _load_normalized(args.source, "source")
    target = _load_normalized(args.target, "target-train")
    index = build_index(source)
    nbrs = compute_neighbor_sets(index, target, args.k)
    with open(args.out, "w", encoding="utf-8") as fh:
        for row, tid in enumerate(nbrs.target_ids):
            fh.write(
                json.dumps(
                    {
                        "target_id": int(tid),
                        "neighbors": [
                            {"id": int(i), "similarity": float(s)}
                            for i, s in zip(
                                nbrs.neighbor_ids[row], nbrs.similarities[row]
                            )
                        ],
                    }
                )
            )
            fh.write("\n")
    print(f"wrote neighbor sets for {target.n} targets to {args.out}")
    return EXIT_OK


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(
        alpha=args.alpha,
        beta=args.beta,
        epsilon=args.epsilon,
        lam=getattr(args, "lambda"),
        theta_s=args.theta_s,
        theta_t=args.theta_t,
        k=args.k,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
        variant=args.variant,
        learning_rate=args.learning_rate,
        hidden_dim=args.hidden_dim,
        use_ed=not args.no_ed,
        use_lc=not args.no_lc,
    )


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--beta", type=float, default=10.0)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--lambda", type=float, default=0.5, dest="lambda")
    p.add_argument("--theta-s", type=float, default=None)
    p.add_argument("--theta-t", type=float, default=10.0)
    p.add_argument(
        "--k",
        type=int,
        default=100,
        help=f"neighborhood size; documented grid {K_GRID}",
    )
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--no-ed", action="store_true", help="drop the embedding-distance loss")
    p.add_argument("--no-lc", action="store_true", help="drop the label-consistency loss")
    p.add_argument("--seed", type=int, default=0)


def cmd_train(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.manifest:
        manifest = RunManifest.from_json(Path(args.manifest).read_text())
        manifest.verify_checksums()
        cfg = TrainConfig.from_dict(manifest.config)
        variant = manifest.variant
        seeds = list(manifest.seeds)
        paths = {name: entry["path"] for name, entry in manifest.datasets.items()}
    else:
        cfg = _config_from_args(args)
        variant = args.variant
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        seeds = [args.seed + i for i in range(args.seeds)]
        paths = {
            "source": args.source,
            "target_train": args.target_train,
            "target_val": args.target_val,
            "target_test": args.target_test,
        }
        for name in ("target_train", "target_val", "target_test"):
            if not paths[name]:
                raise ConfigError(f"--{name.replace('_', '-')} is required")
        if variant != "target_ft" and not paths["source"]:
            raise ConfigError(f"variant {variant!r} requires --source")

    datasets = {}
    for name, p in paths.items():
        if p:
            datasets[name] = {"path": str(p), "sha256": _sha256(p)}
    source = _load_normalized(paths["source"], "source") if paths.get("source") else None
    target_train = _load_normalized(paths["target_train"], "target-train")
    target_val = _load_normalized(paths["target_val"], "target-val")
    target_test = _load_normalized(paths["target_test"], "target-test")

    report_rows = []
    outputs = {}
    scores = []
    for seed in seeds:
        run_cfg = TrainConfig.from_dict({**cfg.to_dict(), "seed": seed})
        result = train(run_cfg, source, target_train, target_val)
        model_path = out / f"model_seed{seed}.bin"
        history_path = out / f"history_seed{seed}.csv"
        preds_path = out / f"preds_seed{seed}.csv"
        save_model(result.params, model_path)
        write_history(history_path, result.history)
        preds = predict_labels(result.params, target_test.embeddings)
        _write_csv(
            preds_path,
            ("id", "pred", "gold"),
            zip(
                target_test.ids.tolist(),
                preds.tolist(),
                target_test.labels.tolist(),
            ),
        )
        score = f1_hate(preds, target_test.labels).f1_hate
        scores.append(score)
        report_rows.append((variant, seed, _fmt(score)))
        outputs[str(seed)] = {
            "model": str(model_path),
            "history": str(history_path),
            "predictions": str(preds_path),
            "best_epoch": result.best_epoch,
            "val_f1": result.best_val_f1,
            "masked_column_warnings": result.masked_column_warnings,
        }
        print(f"seed {seed}: test hate-F1 {score:.4f} (best epoch {result.best_epoch})")

    mean, std = aggregate_runs(scores)
    report_rows.append((variant, "mean", _fmt(mean)))
    report_rows.append((variant, "std", _fmt(std)))
    _write_csv(out / "report.csv", ("variant", "seed", "f1_hate"), report_rows)

    manifest = RunManifest(
        version=__version__,
        variant=variant,
        config=cfg.to_dict(),
        seeds=seeds,
        datasets=datasets,
        outputs=outputs,
    )
    (out / "manifest.json").write_text(manifest.to_json())
    print(f"hate-F1 over {len(seeds)} seed(s): {mean:.4f} +/- {std:.4f}")
    return EXIT_OK


def _read_preds(run_dir: Path, seed) -> tuple:
    path = run_dir / f"preds_seed{seed}.csv"
    ids, preds, golds = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ids.append(int(row["id"]))
            preds.append(int(row["pred"]))
            golds.append(int(row["gold"]))
    return np.array(ids), np.array(preds), np.array(golds)


def _run_seeds(run_dir: Path) -> list:
    manifest = RunManifest.from_json((run_dir / "manifest.json").read_text())
    return list(manifest.seeds), manifest


def cmd_eval(args) -> int:
    run_dir = Path(args.run)
    against_dir = Path(args.against)
    seeds_a, manifest_a = _run_seeds(run_dir)
    seeds_b, manifest_b = _run_seeds(against_dir)
    if len(seeds_a) != len(seeds_b):
        raise ValidationError("runs have different seed counts")

    rows = []
    sig_votes = 0
    f1s_a, f1s_b = [], []
    for sa, sb in zip(seeds_a, seeds_b):
        ids_a, preds_a, golds_a = _read_preds(run_dir, sa)
        ids_b, preds_b, golds_b = _read_preds(against_dir, sb)
        if not (np.array_equal(ids_a, ids_b) and np.array_equal(golds_a, golds_b)):
            raise ValidationError("runs were evaluated on different test sets")
        fa = f1_hate(preds_a, golds_a).f1_hate
        fb = f1_hate(preds_b, golds_b).f1_hate
        stat, p, sig = mcnemar(preds_a, preds_b, golds_a)
        sig_votes += int(sig)
        f1s_a.append(fa)
        f1s_b.append(fb)
        rows.append(
            (sa, _fmt(fa), _fmt(fb), _fmt(stat), _fmt(p), "*" if sig else "")
        )
    mean_a, std_a = aggregate_runs(f1s_a)
    mean_b, std_b = aggregate_runs(f1s_b)
    overall_sig = sig_votes * 2 > len(seeds_a)  # majority of matched runs
    rows.append(
        ("mean", _fmt(mean_a), _fmt(mean_b), "", "", "*" if overall_sig else "")
    )
    out = Path(args.out) if args.out else run_dir / "eval.csv"
    _write_csv(
        out,
        ("seed", f"f1_{manifest_a.variant}", f"f1_{manifest_b.variant}",
         "statistic", "p_value", "significant"),
        rows,
    )
    marker = "*" if overall_sig else "n.s."
    print(
        f"{manifest_a.variant}: {mean_a:.4f} +/- {std_a:.4f} vs "
        f"{manifest_b.variant}: {mean_b:.4f} +/- {std_b:.4f} [{marker}]"
    )
    return EXIT_OK


def cmd_transport(args) -> int:
    cfg = _config_from_args(args)
    source = _load_normalized(args.source, "source")
    target_train = _load_normalized(args.target_train, "target-train")
    index = build_index(source)
    nbrs = compute_neighbor_sets(index, target_train, cfg.k)

    rng = np.random.default_rng(cfg.seed)
    m = min(cfg.batch_size, source.n)
    src_rows = rng.permutation(source.n)[:m]
    tgt_rows = rng.choice(target_train.n, size=m, replace=True)
    batch = BatchPair(
        source.embeddings[src_rows],
        source.labels[src_rows],
        source.ids[src_rows],
        target_train.embeddings[tgt_rows],
        target_train.labels[tgt_rows],
        target_train.ids[tgt_rows],
    )
    C = batch_joint_cost(batch, cfg)
    C = neighborhood_mask(C, nbrs, batch.src_ids, batch.tgt_ids)
    plan = sinkhorn_unbalanced(
        C, make_uniform_measure(m), make_uniform_measure(m), _ot_params(cfg)
    )
    header = ["src_id"] + [str(t) for t in batch.tgt_ids.tolist()]
    rows = [
        [str(sid)] + [_fmt(x) for x in plan.matrix[i]]
        for i, sid in enumerate(batch.src_ids.tolist())
    ]
    _write_csv(args.out, header, rows)
    print(
        f"wrote {m}x{m} transport plan to {args.out} "
        f"(converged={plan.converged}, iterations={plan.iterations})"
    )
    return EXIT_OK


def cmd_analyze(args) -> int:
    params = load_model(args.model)
    source = _load_normalized(args.source, "source")
    target_test = _load_normalized(args.target_test, "target-test")
    k_values = [int(k) for k in args.k_grid.split(",")]
    curves = representation_knn_analysis(params, source, target_test, k_values)
    rows = [
        (k, _fmt(curves["sbert"][k]), _fmt(curves["otnn"][k])) for k in k_values
    ]
    _write_csv(args.out, ("k", "f1_sbert", "f1_otnn"), rows)
    for k, s, o in rows:
        print(f"k={k}: raw-space F1 {float(s):.4f}, learned-space F1 {float(o):.4f}")
    return EXIT_OK


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for run in args.runs:
        run_dir = Path(run)
        seeds, manifest = _run_seeds(run_dir)
        scores = []
        for seed in seeds:
            _, preds, golds = _read_preds(run_dir, seed)
            scores.append(f1_hate(preds, golds).f1_hate)
        mean, std = aggregate_runs(scores)
        entries.append({"dir": run_dir, "variant": manifest.variant,
                        "seeds": seeds, "mean": mean, "std": std})

    order = sorted(range(len(entries)), key=lambda i: -entries[i]["mean"])
    marks = {}
    if order:
        marks[order[0]] = "*"  # best score in the column
    if len(order) > 1:
        marks[order[1]] = "_"  # second best

    against = None
    if args.against:
        against = Path(args.against)

    rows = []
    for i, entry in enumerate(entries):
        sig = ""
        if against and entry["dir"] != against:
            sig_votes = 0
            b_seeds, _ = _run_seeds(against)
            for sa, sb in zip(entry["seeds"], b_seeds):
                _, preds_a, golds = _read_preds(entry["dir"], sa)
                _, preds_b, _ = _read_preds(against, sb)
                _, _, s = mcnemar(preds_a, preds_b, golds)
                sig_votes += int(s)
            sig = "*" if sig_votes * 2 > len(entry["seeds"]) else ""
        rows.append(
            (
                entry["variant"],
                f"{100 * entry['mean']:.1f}",
                f"{100 * entry['std']:.1f}",
                marks.get(i, ""),
                sig,
            )
        )
    _write_csv(
        out / "report.csv",
        ("variant", "mean_f1_pct", "std_f1_pct", "rank", "significant"),
        rows,
    )
    for r in rows:
        print(f"{r[0]:<24} {r[1]}+-{r[2]} {r[3]}{r[4]}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otnn",
        description="Neighborhood-aware optimal-transport transfer learning "
        "over precomputed sentence embeddings.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic domain-shift datasets")
    p.add_argument("--out", required=True)
    p.add_argument("--n-source", type=int, default=8000)
    p.add_argument("--n-target-train", type=int, default=400)
    p.add_argument("--n-target-val", type=int, default=100)
    p.add_argument("--n-target-test", type=int, default=1000)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--shift", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="convert between binary and jsonl, normalizing")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("neighbors", help="dump per-target neighbor sets to jsonl")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_neighbors)

    p = sub.add_parser("train", help="train one variant or baseline over N seeds")
    p.add_argument("--variant", choices=TRAIN_MODES, default="otnn")
    p.add_argument("--source")
    p.add_argument("--target-train")
    p.add_argument("--target-val")
    p.add_argument("--target-test")
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=1, help="number of seeds to run")
    p.add_argument("--manifest", help="rerun a recorded manifest")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a run and test significance vs another")
    p.add_argument("--run", required=True)
    p.add_argument("--against", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("transport", help="dump one batch transport plan to csv")
    p.add_argument("--source", required=True)
    p.add_argument("--target-train", required=True)
    p.add_argument("--variant", choices=TRAIN_MODES, default="otnn")
    p.add_argument("--out", required=True)
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("analyze", help="neighbor-voting F1 in raw vs learned space")
    p.add_argument("--model", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--target-test", required=True)
    p.add_argument("--k-grid", default="10,30,50,70,100")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="aggregate runs into a ranked summary table")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--against", help="baseline run dir for significance stars")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FileNotFoundError, IsADirectoryError, PermissionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OtnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
