"""Compare the hand-derived CVAE gradients against central differences.

Run:  python3 demos/gradient_check.py
"""
import numpy as np

from genforge import cvae
from genforge.cvae import CvaeConfig

rng = np.random.default_rng(0)
model = cvae.build_model(CvaeConfig(latent_dim=3, hidden=(10, 10), beta=0.5, seed=1))
x = rng.normal(size=(6, 5))
c = rng.normal(size=6)
eps = rng.normal(size=(6, 3))  # frozen noise makes the loss deterministic


def loss():
    return cvae.elbo_loss(model, x, c, epsilon=eps)[0].total


parts, grads = cvae.elbo_loss(model, x, c, epsilon=eps)
print(f"reconstruction {parts.reconstruction_loss:.5f}  KL {parts.kl_divergence:.5f}  total {parts.total:.5f}")

h = 1e-6
names = ["enc W0", "enc b0", "enc W1", "enc b1", "enc W2", "enc b2",
         "dec W0", "dec b0", "dec W1", "dec b1", "dec W2", "dec b2"]
for name, p, g in zip(names, model.params(), grads.as_list()):
    num = np.zeros_like(p)
    for i in np.ndindex(p.shape):
        old = p[i]
        p[i] = old + h
        up = loss()
        p[i] = old - h
        num[i] = (up - loss()) / (2 * h)
        p[i] = old
    rel = np.abs(g - num) / np.maximum(np.maximum(np.abs(g), np.abs(num)), 1e-6)
    print(f"{name:7s} {p.size:4d} params  max relative error {rel.max():.2e}")
