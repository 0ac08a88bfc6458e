"""Sines benchmark driver: TimeGCI and teacher forcing over several seeds,
followed by TSTR / x-corr evaluation and the perturbation-forecast ablation.

Each (method, seed) job writes ``result.json`` under its own directory and
resumes from ``last.ckpt`` if interrupted, so the driver can simply be rerun.

    python3 -m timegci.experiments --out results/reduced --max-joint-steps 10000
"""
from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .data import fit_normalizer, generate_sines, normalize
from .evaluation import DataScaleModel, evaluate, perturbation_forecast_mse
from .toy import SineSimulator
from .trainer import Trainer, TrainConfig, split_train_val

DATA_SEED = 0


def sines_split(cfg: TrainConfig, n: int = 10000, T: int = 24, D: int = 5):
    ds = generate_sines(n, T=T, D=D, seed=DATA_SEED)
    norm = fit_normalizer(ds)
    train, val = split_train_val(normalize(ds, norm).values, cfg.val_fraction, DATA_SEED)
    return train, val, norm


def run_job(method: str, seed: int, out: Path, cfg: TrainConfig, n_synthetic: int = 10000,
            eval_steps: int = 5000, episodes: int = 1000, log=print) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    done = out / "result.json"
    if done.exists():
        return json.loads(done.read_text())
    cfg = cfg.replace(seed=seed)
    train, val, norm = sines_split(cfg)
    t0 = time.time()
    kw = dict(metrics_path=out / "metrics.csv", best_path=out / "best.ckpt", last_path=out / "last.ckpt",
              log=lambda m: log(f"[{method} s{seed}] {m}"))
    if (out / "last.ckpt").exists():
        tr = Trainer.resume(out / "last.ckpt", train, val, **kw)
        log(f"[{method} s{seed}] resumed at {tr.stage} step {tr.stage_step}")
    else:
        (out / "metrics.csv").unlink(missing_ok=True)
        tr = Trainer(cfg, train, val, norm, method, **kw)
    tr.run().use_best()
    train_s = time.time() - t0

    model = DataScaleModel(tr.policy, norm)
    syn, _ = model.sample(n_synthetic, tr.T, np.random.default_rng([seed, 11]))
    real = norm.invert(val)
    report = evaluate(syn, real, method=method, dataset="sines", seed=seed, steps=eval_steps)
    cells = perturbation_forecast_mse(model, SineSimulator(tr.T, tr.D), episodes=episodes, seed=seed)
    result = {
        "method": method, "seed": seed, "config": asdict(cfg), "best_step": tr.best_step,
        "best_val": tr.best_score, "stopped_early": tr.stopped_early, "joint_steps_run": tr.joint_step,
        "train_seconds": train_s, "report": report.row(), "report_extra": report.extra,
        "perturbation": {f"{c},{t}": asdict(v) for (c, t), v in cells.items()},
    }
    done.write_text(json.dumps(result, indent=1))
    log(f"[{method} s{seed}] done: {report.row()}")
    return result


def load_results(root) -> list[dict]:
    return [json.loads(p.read_text()) for p in sorted(Path(root).glob("*/result.json"))]


def summarize(results: list[dict]) -> dict:
    """Per-method means over seeds; perturbation cells combine per-seed SEs."""
    out = {}
    for method in dict.fromkeys(r["method"] for r in results):
        rs = [r for r in results if r["method"] == method]
        m = {"seeds": sorted(r["seed"] for r in rs)}
        for key in ("predictive_score_1", "predictive_score_3", "predictive_score_5", "xcorr_score"):
            vals = np.array([r["report"][key] for r in rs])
            m[key] = float(vals.mean())
            m[key + "_sd"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        cells = {}
        for k in rs[0]["perturbation"]:
            mse = np.array([r["perturbation"][k]["mse"] for r in rs])
            se = np.array([r["perturbation"][k]["se"] for r in rs])
            cells[k] = {"mse": float(mse.mean()), "se": float(np.sqrt((se ** 2).sum()) / len(rs))}
        m["perturbation"] = cells
        out[method] = m
    return out


def write_summary(root) -> str:
    from .evaluation import EvalReport, format_table

    results = load_results(root)
    reports = [EvalReport(**r["report"]) for r in results]
    text = format_table(reports)
    summ = summarize(results)
    lines = [text, "", "perturbation MSE at sigma (c = 1), mean over seeds:"]
    for method, m in summ.items():
        row = " ".join(f"t={t}: {m['perturbation'][f'1,{t}']['mse']:.4f}" for t in range(1, 6))
        lines.append(f"{method:<10} {row}")
    out = "\n".join(lines) + "\n"
    Path(root, "table.txt").write_text(out)
    Path(root, "summary.json").write_text(json.dumps(summ, indent=1))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--methods", nargs="+", default=["tforcing", "timegci"])
    ap.add_argument("--max-joint-steps", type=int, default=None)
    args = ap.parse_args(argv)
    cfg = TrainConfig()
    if args.max_joint_steps is not None:
        cfg = cfg.replace(max_joint_steps=args.max_joint_steps)
    for method in args.methods:
        for seed in args.seeds:
            run_job(method, seed, args.out / f"{method}_seed{seed}", cfg, log=lambda m: print(m, flush=True))
    print(write_summary(args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
