"""Greedy linear-surrogate search over the dataset pool, seed by seed.

Run:  python3 demos/sbo_baseline.py
"""
import numpy as np

from genforge import SboConfig, fit_standardizer, make_standin_dataset, run_sbo

ds = make_standin_dataset()
std = fit_standardizer(ds)
print(f"dataset minimum {ds.y.min():.2f} dB at row {int(np.argmin(ds.y))}")

for seed in range(5):
    res = run_sbo(ds, SboConfig(initial_sample_count=20, evaluation_budget=70, seed=seed), std)
    inc = res.incumbent_trace()
    # evaluation count at which the incumbent reached its final value
    hit = int(np.argmax(inc == inc[-1])) + 1
    print(f"seed {seed}: best {res.best_true_value:.2f} dB (row {res.best_index}), "
          f"initial-sample best {inc[19]:.2f} dB, final value reached at evaluation {hit}")
