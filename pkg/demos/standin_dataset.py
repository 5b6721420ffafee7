"""Build the synthetic self-noise table and look at what it contains.

Run:  python3 demos/standin_dataset.py
"""
import numpy as np

from genforge import compute_bounds, fit_standardizer, make_standin_dataset, percentile
from genforge.standin import displacement_thickness

ds = make_standin_dataset()
print(f"{len(ds)} records from {ds.source}")

# Columns are frequency, angle of attack, chord, free-stream speed and the
# suction-side displacement thickness; the target is the scaled level in dB.
for name, col in zip(ds.feature_names, ds.X.T):
    print(f"  {name:<38s} {col.min():>12.6g} .. {col.max():<12.6g}")
print(f"  target (dB)                            {ds.y.min():>12.2f} .. {ds.y.max():.2f}")

# Zero-incidence thickness on the largest chord at top speed.
print("delta* (0.3048 m, 0 deg, 71.3 m/s):", displacement_thickness(0.3048, 0.0, 71.3)[1])

std = fit_standardizer(ds)
z = std.transform(ds.table)
print("standardized column means:", np.round(z.mean(axis=0), 12))
print("standardized column stds: ", np.round(z.std(axis=0), 12))

bounds = compute_bounds(ds)
print("validity box lower:", bounds.lower)
print("validity box upper:", bounds.upper)
print(f"10th percentile of the target: {percentile(ds.y, 10):.2f} dB")
