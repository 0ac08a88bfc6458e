"""The real-vs-synthetic classifier is built from two densities.

A fixed noise policy plays the generator. The energy network is fitted by
logistic discrimination against it; afterwards F - log_Z should track the
true log density of a small analytic source, which we can evaluate exactly.

    python3 demos/01_structured_classifier.py
"""
import numpy as np

from timegci import nd
from timegci.energy import EnergyNet, classifier_prob, energy_loss, quality_scores
from timegci.theory import constant_policy, innovation_grid, _fit_line
from timegci.toy import ToySource

src = ToySource(T=2, D=1)
noise = constant_policy(1, 0.15, float(np.log(0.9)))
energy = EnergyNet(1, np.random.default_rng(2), hidden=16, head_hidden=(32, 32))
opt = nd.Adam(energy.parameters(), lr=3e-3)
rng = np.random.default_rng(1)

for i in range(2001):
    real, _ = src.sample(512, rng=rng)
    fake, _ = noise.sample(512, 2, rng)
    loss = opt.minimize(lambda: energy_loss(energy, noise, real, fake))
    if i % 500 == 0:
        acc = 0.5 * ((classifier_prob(energy, noise, real) > 0.5).mean()
                     + (classifier_prob(energy, noise, fake) < 0.5).mean())
        print(f"step {i:5d}  loss {loss:.4f}  accuracy {acc:.3f}")

# the classifier never sees log p_s, yet its energy recovers it up to a constant
grid = innovation_grid(src)
r2, slope, icpt = _fit_line(src.log_prob(grid), quality_scores(energy, grid))
print(f"F - log_Z vs log p_s on a 30x30 grid: r2 {r2:.3f}, slope {slope:.3f}")
print("(the theory check runs the same fit four times longer: timegci theorycheck --suite nce)")
