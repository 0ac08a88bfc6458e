"""Command-line entry point: prepare, train, generate, evaluate, theorycheck.

Exit codes: 0 success, 1 runtime failure (non-finite loss, divergence,
failed property suite), 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
from contextlib import nullcontext
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .data import Dataset, Normalizer, clip_interior, dataset_stats, fit_normalizer, generate_sines, load_csv, normalize, write_csv
from .energy import quality_scores
from .evaluation import evaluate, format_table, write_reports_csv
from .trainer import Trainer, TrainConfig, TrainingDiverged, load_policy, read_flat_config, split_train_val


class UsageError(Exception):
    """Bad flags, paths or inputs; maps to exit code 2."""


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="timegci", description="Time-series generation by contrastive imitation.")
    ap.add_argument("--threads", type=int, default=None, help="cap BLAS/OpenMP worker threads")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="generate or load a dataset, normalize it, write stats")
    p.add_argument("--dataset", choices=["sines", "csv"], required=True)
    p.add_argument("--csv", type=Path, help="input CSV (series_id,t,features...) for --dataset csv")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--T", type=int, default=24)
    p.add_argument("--D", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--overlap", action="store_true", help="overlapping windows when slicing CSV series")

    p = sub.add_parser("train", help="train TimeGCI or the teacher-forcing baseline")
    p.add_argument("--config", type=Path, help="flat 'key = value' file with TrainConfig names")
    p.add_argument("--data", type=Path, help="directory written by 'prepare'")
    p.add_argument("--out", type=Path, help="parent directory for the run directory")
    p.add_argument("--method", choices=["timegci", "tforcing"], default="timegci")
    p.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    for f in fields(TrainConfig):
        p.add_argument(_flag(f.name), dest=f"cfg_{f.name}", default=None, metavar=f.name.upper())

    p = sub.add_parser("generate", help="sample synthetic trajectories from a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("evaluate", help="TSTR and x-corr scores, optional energy scores")
    p.add_argument("--real", type=Path, required=True, help="directory written by 'prepare'")
    p.add_argument("--synthetic", type=Path, required=True, help="CSV written by 'generate'")
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--energy-scores", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=5000, help="predictor training steps")
    p.add_argument("--method", default="synthetic")

    p = sub.add_parser("theorycheck", help="run a self-contained property suite")
    p.add_argument("--suite", choices=["nce", "gradeq", "eqd", "perturb", "all"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="optional JSON report path")
    return ap


# ---------------------------------------------------------------- helpers

def _git_rev() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _require(path: Path | None, flag: str, kind: str = "file") -> Path:
    if path is None:
        raise UsageError(f"{flag} is required")
    if kind == "file" and not path.is_file():
        raise UsageError(f"{flag}: no such file: {path}")
    if kind == "dir" and not path.is_dir():
        raise UsageError(f"{flag}: no such directory: {path}")
    return path


def load_prepared(d: Path) -> tuple[Dataset, Normalizer, dict]:
    """Normalized dataset, its normalizer and metadata from a 'prepare' directory."""
    meta_path = d / "dataset.json"
    if not meta_path.is_file():
        raise UsageError(f"{d} is not a prepared dataset directory (missing dataset.json)")
    meta = json.loads(meta_path.read_text())
    ds = load_csv(d / "dataset.csv", meta["T"], name=meta["name"])
    return ds, Normalizer.load(d / "normalizer.json"), meta


def _config_from_args(args) -> TrainConfig:
    values = {}
    if args.config is not None:
        values.update(read_flat_config(_require(args.config, "--config").read_text()))
    for f in fields(TrainConfig):
        v = getattr(args, f"cfg_{f.name}")
        if v is not None:
            values[f.name] = v
    return TrainConfig.from_mapping(values)


# ---------------------------------------------------------------- commands

def cmd_prepare(args) -> int:
    if args.dataset == "sines":
        raw = generate_sines(args.n, args.T, args.D, seed=args.seed)
    else:
        path = _require(args.csv, "--csv")
        raw = load_csv(path, args.T, overlap=args.overlap)
    norm = fit_normalizer(raw)
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(normalize(raw, norm), args.out / "dataset.csv")
    norm.save(args.out / "normalizer.json")
    stats = dataset_stats(raw)
    (args.out / "stats.txt").write_text(stats.report())
    meta = {"name": raw.name, "n": raw.n, "T": raw.T, "D": raw.D, "seed": args.seed, "source": args.dataset,
            "stats": stats.as_dict()}
    (args.out / "dataset.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    print(stats.report(), end="")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    if args.print_config:
        print(cfg.to_text(), end="")
        return 0
    data_dir = _require(args.data, "--data", "dir")
    out = args.out if args.out is not None else Path("runs")
    ds, norm, meta = load_prepared(data_dir)
    train, val = split_train_val(ds.values, cfg.val_fraction, cfg.seed)
    start = time.time()
    run_dir = out / f"{time.strftime('%Y%m%d-%H%M%S', time.localtime(start))}-seed{cfg.seed}"
    run_dir.mkdir(parents=True, exist_ok=False)
    (run_dir / "config.txt").write_text(cfg.to_text())
    manifest = {
        "command": "train", "method": args.method, "config": asdict(cfg), "seed": cfg.seed,
        "version": __version__, "git": _git_rev(), "data": str(data_dir.resolve()),
        "start": start, "end": None, "status": "running", "artifacts": {},
    }
    _write_manifest(run_dir, manifest)
    tr = Trainer(cfg, train, val, norm, args.method, metrics_path=run_dir / "metrics.csv",
                 best_path=run_dir / "best.ckpt", last_path=run_dir / "last.ckpt",
                 log=lambda m: print(m, flush=True))
    manifest["constructed_energy_critic"] = tr.energy is not None or tr.critic is not None
    try:
        tr.run()
    except TrainingDiverged as exc:
        manifest.update(status="failed", error=str(exc), end=time.time())
        _write_manifest(run_dir, manifest)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if tr.best_state is None:  # budget ended before the first evaluation
        tr.save(run_dir / "best.ckpt")
    tr.save(run_dir / "last.ckpt")
    manifest.update(status="done", end=time.time(), best_step=tr.best_step,
                    best_val_predictive_score=None if tr.best_step < 0 else tr.best_score,
                    artifacts={k: str(run_dir / v) for k, v in
                               [("best_checkpoint", "best.ckpt"), ("last_checkpoint", "last.ckpt"),
                                ("metrics", "metrics.csv"), ("config", "config.txt")]})
    _write_manifest(run_dir, manifest)
    print(run_dir)
    return 0


def _write_manifest(run_dir: Path, manifest: dict) -> None:
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _load_model(path: Path):
    _require(path, "--checkpoint")
    try:
        return load_policy(path)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_generate(args) -> int:
    policy, meta, _ = _load_model(args.checkpoint)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    x, _ = policy.sample(args.n, meta["T"], np.random.default_rng(args.seed))
    if meta.get("normalizer"):
        x = Normalizer.from_dict(meta["normalizer"]).invert(x)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(Dataset(x, "synthetic"), args.out)
    return 0


def cmd_evaluate(args) -> int:
    if args.energy_scores and args.checkpoint is None:
        raise UsageError("--energy-scores needs --checkpoint")
    ds, norm, meta = load_prepared(_require(args.real, "--real", "dir"))
    real = norm.invert(ds.values)
    syn = load_csv(_require(args.synthetic, "--synthetic"), meta["T"]).values
    if syn.shape[1:] != real.shape[1:]:
        raise UsageError(f"shape mismatch: synthetic (T, D) = {syn.shape[1:]}, real {real.shape[1:]}")
    args.out.mkdir(parents=True, exist_ok=True)
    report = evaluate(syn, real, method=args.method, dataset=meta["name"], seed=args.seed, steps=args.steps)
    write_reports_csv([report], args.out / "report.csv")
    (args.out / "report.txt").write_text(format_table([report]) + "\n")
    print(format_table([report]))
    if args.energy_scores:
        _, cmeta, energy = _load_model(args.checkpoint)
        if energy is None:
            raise UsageError(f"{args.checkpoint} holds no energy model (teacher-forcing run?)")
        cnorm = Normalizer.from_dict(cmeta["normalizer"]) if cmeta.get("normalizer") else None
        z = syn if cnorm is None else cnorm.apply(syn)
        scores = quality_scores(energy, clip_interior(z))
        with open(args.out / "energy_scores.csv", "w", encoding="utf-8") as fh:
            fh.write("index,score\n")
            fh.writelines(f"{i},{s!r}\n" for i, s in enumerate(scores.tolist()))
    return 0


def cmd_theorycheck(args) -> int:
    from .theory import SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = []
    for name in names:
        res = run_suite(name, seed=args.seed)
        print(res.report(), flush=True)
        results.append(res)
    if args.out is not None:
        args.out.write_text(json.dumps([{"suite": r.suite, "passed": r.passed, "details": r.details,
                                         "seconds": r.seconds} for r in results], indent=1, default=float))
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"prepare": cmd_prepare, "train": cmd_train, "generate": cmd_generate,
            "evaluate": cmd_evaluate, "theorycheck": cmd_theorycheck}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    limits = nullcontext()
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be >= 1")
        from threadpoolctl import threadpool_limits
        limits = threadpool_limits(args.threads)
    try:
        with limits:
            return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # config parse errors and malformed inputs
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
