"""Train on a simulated bivariate trend model and forecast with bands.

The first 90% of the data trains the sampler; the forecast covers the
held-out tail so the credible bands can be checked against the truth.

Run:  python demos/forecasting.py
"""

import numpy as np

from mbsts import (TrainConfig, elicit_priors, generate_model, predict,
                   summarize, train)

N, HORIZON = 220, 20
ds = generate_model(2, N, seed=5)
Y_train = ds.Y[:N - HORIZON]
X_train = [x[:N - HORIZON] for x in ds.X_blocks]
X_future = [x[N - HORIZON:] for x in ds.X_blocks]

sigma_y = np.cov(np.diff(Y_train, axis=0), rowvar=False)
priors = elicit_priors([2.0, 2.0], ds.spec.predictor_counts,
                       expected_r2=0.9, v0=4.0, Sigma_y=sigma_y, kappa=0.1)
draws = train(Y_train, X_train, ds.spec, priors,
              TrainConfig(total_draws=800, burn_in=200, seed=3))

rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(99)))
result = summarize(predict(draws, X_future, HORIZON, rng), levels=[0.9])
band = result.quantiles[0.9]

print("step  series-1 truth / mean / 90% band        covered")
inside = 0
for h in range(HORIZON):
    t = ds.Y[N - HORIZON + h, 0]
    ok = band["lower"][h, 0] <= t <= band["upper"][h, 0]
    inside += ok
    print(f"{h + 1:4d}  {t:8.2f} / {result.mean[h, 0]:8.2f} / "
          f"[{band['lower'][h, 0]:8.2f}, {band['upper'][h, 0]:8.2f}]   "
          f"{'yes' if ok else 'no'}")
print(f"\nseries-1 coverage over the horizon: {inside}/{HORIZON}")
