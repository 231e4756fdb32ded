"""Command-line entry point: train / eval / ood / attack / verify / compare.

Every command writes all artifacts into one run directory together with the
resolved config, the root seed and a content hash of the inputs, so a run is
reproducible from the directory alone.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import data, evaluation, network, training, verify
from .config import ConfigError, ExperimentConfig

log = logging.getLogger("iad.cli")


def _setup_logging():
    level = os.environ.get("IAD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s %(message)s")


def _load_config(args) -> ExperimentConfig:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            overrides[key.strip()] = json.loads(raw.strip())
        except json.JSONDecodeError:
            overrides[key.strip()] = raw.strip()
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    return ExperimentConfig(overrides)


def _prepare_out_dir(args) -> Path:
    out = Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        raise SystemExit(f"error: output directory {out} is not empty (use --force)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input_hash(cfg: ExperimentConfig) -> str:
    h = hashlib.sha256(cfg.resolved_text().encode())
    for key in ("data.csv", "data.idx_images", "data.idx_labels"):
        path = cfg[key]
        if path:
            h.update(Path(path).read_bytes())
    return h.hexdigest()


def _write_run_metadata(out: Path, cfg: ExperimentConfig) -> None:
    (out / "config_resolved.txt").write_text(cfg.resolved_text(), encoding="utf-8")
    meta = {"seed": cfg["seed"], "inputs_sha256": _input_hash(cfg)}
    (out / "run_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _rng_streams(cfg: ExperimentConfig) -> dict[str, np.random.Generator]:
    names = ["blobs", "split", "ood"]
    seeds = np.random.SeedSequence(cfg["seed"]).spawn(len(names))
    return {n: np.random.default_rng(s) for n, s in zip(names, seeds)}


def build_datasets(cfg: ExperimentConfig) -> tuple[data.Dataset, data.Dataset]:
    """Deterministic (train, test) pair from the config and root seed."""
    rngs = _rng_streams(cfg)
    kind = cfg["data.kind"]
    if kind == "blobs":
        centers = data.triangle_centers(cfg["data.side"])
        k = cfg["data.classes"]
        if k != 3:
            # equally spaced directions on the unit circle, scaled to the side
            ang = 2.0 * np.pi * np.arange(k) / k
            r = cfg["data.side"] / (2.0 * np.sin(np.pi / k))
            centers = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
        ds = data.make_blobs(k, cfg["data.per_class"], centers,
                             cfg["data.spread"], rngs["blobs"])
    elif kind == "csv":
        ds = data.load_csv(cfg["data.csv"])
    else:
        ds = data.load_idx(cfg["data.idx_images"], cfg["data.idx_labels"])
    if cfg["data.scale_unit"]:
        ds = data.scale_unit(ds)
    frac = cfg["data.test_fraction"]
    train_ds, test_ds = data.split(ds, [1.0 - frac, frac], rngs["split"])
    return train_ds, test_ds


def _load_net(args) -> network.NetworkParams:
    if not args.checkpoint:
        raise SystemExit("error: this command needs --checkpoint")
    if not Path(args.checkpoint).exists():
        raise SystemExit(f"error: checkpoint {args.checkpoint} does not exist")
    return network.load_checkpoint(args.checkpoint)


def cmd_train(cfg: ExperimentConfig, out: Path, args) -> int:
    train_ds, _ = build_datasets(cfg)
    net, record = training.train(train_ds, cfg["arch"], cfg.train_config(),
                                 loss=cfg["loss"])
    network.save_checkpoint(net, out / "checkpoint.json")
    record.to_csv(out / "train_record.csv")
    log.info("best epoch %d", record.best_epoch)
    return 0


def cmd_eval(cfg: ExperimentConfig, out: Path, args) -> int:
    net = _load_net(args)
    _, test_ds = build_datasets(cfg)
    if net.weights[0].shape[0] != test_ds.d or net.output_dim != test_ds.k:
        raise SystemExit("error: checkpoint architecture does not match the dataset")
    reports = evaluation.evaluate(net, test_ds)
    evaluation.reports_to_csv(reports, out / "reports.csv")
    threshold = cfg["eval.threshold_fraction"] * np.log(test_ds.k)
    for name, keep in (("successes", True), ("errors", False)):
        vals = [r.entropy for r in reports if r.correct is keep]
        if vals:
            evaluation.summary_to_json(evaluation.summarize(vals, threshold),
                                       out / f"summary_{name}.json")
    return 0


def cmd_ood(cfg: ExperimentConfig, out: Path, args) -> int:
    net = _load_net(args)
    rngs = _rng_streams(cfg)
    train_ds, _ = build_datasets(cfg)
    ood_ds = data.make_ood_ring(train_ds, cfg["ood.radius_factor"], cfg["ood.n"],
                                rngs["ood"])
    ent, mi = evaluation.ood_evaluate(net, ood_ds, cfg["eval.threshold_fraction"])
    evaluation.summary_to_json(ent, out / "ood_entropy.json")
    evaluation.summary_to_json(mi, out / "ood_mutual_info.json")
    return 0


def cmd_attack(cfg: ExperimentConfig, out: Path, args) -> int:
    net = _load_net(args)
    _, test_ds = build_datasets(cfg)
    loss_cfg = cfg.loss_config()
    rows = evaluation.epsilon_sweep(net, test_ds, cfg["attack.epsilons"], loss_cfg)
    evaluation.sweep_to_csv(rows, out / "attack_sweep.csv")
    threshold = cfg["eval.threshold_fraction"] * np.log(test_ds.k)
    summaries = {}
    labels = test_ds.label_indices
    for eps in cfg["attack.epsilons"]:
        x = test_ds.features if eps == 0.0 else evaluation.fgsm_attack(
            net, test_ds.features, labels, eps, loss_cfg, test_ds.feature_range)
        reports = evaluation.evaluate(
            net, data.Dataset(x, test_ds.labels, feature_range=test_ds.feature_range))
        from dataclasses import asdict
        summaries[repr(float(eps))] = {
            "entropy": asdict(evaluation.summarize([r.entropy for r in reports], threshold)),
            "mutual_info": asdict(evaluation.summarize([r.mutual_info for r in reports], threshold)),
        }
    (out / "attack_summaries.json").write_text(
        json.dumps(summaries, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return 0


def cmd_verify(cfg: ExperimentConfig, out: Path, args) -> int:
    verdicts = verify.run_all(seed=cfg["seed"], trials=cfg["verify.trials"],
                              n_triples=cfg["verify.n_triples"])
    verify.verdicts_to_json(verdicts, out / "verify_evidence.json")
    rng = np.random.default_rng(cfg["seed"])
    alpha = rng.uniform(5.0, 50.0, size=10)
    alpha[0] = 1.5  # correct class kept small, as in the dip illustration
    sweep = verify.theorem2_figure_sweep(alpha, 0, 2.0, verify.default_grid())
    verify.figure_sweep_to_csv(sweep, out / "theorem2_figure.csv")
    (out / "theorem2_figure.json").write_text(
        json.dumps(sweep, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    failed = [v.name for v in verdicts if not v.passed]
    for v in verdicts:
        print(f"{v.name}: {'PASS' if v.passed else 'FAIL'}")
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def cmd_compare(cfg: ExperimentConfig, out: Path, args) -> int:
    train_ds, test_ds = build_datasets(cfg)
    rows = []
    for sel in cfg["compare.losses"]:
        net, _ = training.train(train_ds, cfg["arch"], cfg.train_config(), loss=sel)
        network.save_checkpoint(net, out / f"checkpoint_{sel}.json")
        reports = evaluation.evaluate(net, test_ds)
        succ = [r.entropy for r in reports if r.correct]
        errs = [r.entropy for r in reports if r.correct is False]
        rows.append({
            "loss": sel,
            "accuracy": float(np.mean([r.correct for r in reports])),
            "median_entropy_successes": float(np.median(succ)) if succ else float("nan"),
            "median_entropy_errors": float(np.median(errs)) if errs else float("nan"),
        })
    with open(out / "compare.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["loss", "accuracy", "median_entropy_successes",
                         "median_entropy_errors"])
        for r in rows:
            writer.writerow([r["loss"], repr(r["accuracy"]),
                             repr(r["median_entropy_successes"]),
                             repr(r["median_entropy_errors"])])
    return 0


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "ood": cmd_ood,
    "attack": cmd_attack,
    "verify": cmd_verify,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iad",
                                     description="Information-aware Dirichlet networks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="experiment config file (key = value lines)")
        p.add_argument("--seed", type=int, help="root seed override")
        p.add_argument("--out", default=f"runs/{name}", help="run output directory")
        p.add_argument("--threads", type=int, help="worker cap")
        p.add_argument("--force", action="store_true",
                       help="allow writing into a non-empty output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a single config key")
        if name in ("eval", "ood", "attack"):
            p.add_argument("--checkpoint", help="model checkpoint path")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = _prepare_out_dir(args)
    _write_run_metadata(out, cfg)
    return _COMMANDS[args.command](cfg, out, args)


if __name__ == "__main__":
    raise SystemExit(main())
