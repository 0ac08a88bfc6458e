"""Small end-to-end run on Sines: train, sample, score.

Budgets are cut to a few minutes on one CPU, so the numbers are far from
converged; the point is the pipeline. For the real benchmark use
``python3 -m timegci.experiments``.

    python3 demos/02_sines_end_to_end.py
"""
import numpy as np

from timegci.data import fit_normalizer, generate_sines, normalize
from timegci.evaluation import DataScaleModel, evaluate, format_table
from timegci.trainer import Trainer, TrainConfig, split_train_val

ds = generate_sines(2000, seed=0)
norm = fit_normalizer(ds)
train, val = split_train_val(normalize(ds, norm).values, 0.2, seed=0)

cfg = TrainConfig(pretrain_policy_steps=300, pretrain_energy_steps=200, pretrain_critic_steps=300,
                  initial_buffer_rollouts=200, max_joint_steps=200, early_stop_interval=100,
                  val_rollouts=300, val_predictor_steps=300)

reports = []
for method in ("tforcing", "timegci"):
    tr = Trainer(cfg, train, val, norm, method, log=print)
    tr.run().use_best()
    model = DataScaleModel(tr.policy, norm)
    syn, _ = model.sample(2000, ds.T, np.random.default_rng(11))
    reports.append(evaluate(syn, norm.invert(val), method=method, dataset="sines", steps=1000))

print()
print(format_table(reports))
