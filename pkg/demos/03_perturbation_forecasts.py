"""Forecasting after a kick: how errors grow with horizon.

The simulator draws a clean sinusoid, adds one perturbation of size c*sigma
at a random step, and asks the model to continue from the perturbed prefix.
Errors are measured against the clean continuation. A persistence forecast
shows the shape of the table before any training.

    python3 demos/03_perturbation_forecasts.py [checkpoint]
"""
import sys

from timegci.evaluation import DataScaleModel, perturbation_forecast_mse
from timegci.theory import PersistenceModel
from timegci.toy import SineSimulator
from timegci.trainer import load_policy

sim = SineSimulator()
model = PersistenceModel()
if len(sys.argv) > 1:
    from timegci.data import Normalizer

    policy, meta, _ = load_policy(sys.argv[1])
    model = DataScaleModel(policy, Normalizer.from_dict(meta["normalizer"]))

cells = perturbation_forecast_mse(model, sim, episodes=500)
print("c \\ t " + "".join(f"{t:>10d}" for t in range(1, 6)))
for c in range(1, 6):
    print(f"{c:5d} " + "".join(f"{cells[(c, t)].mse:10.4f}" for t in range(1, 6)))
