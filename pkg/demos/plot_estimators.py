"""
Ridge and softmax regression under 5-fold CV
============================================

Train on regions in counties starting with A-C, predict everywhere else,
and compare against the simulated ground truth.
"""

import numpy as np

from carcensus import constants as C
from carcensus.analytics import pearson
from carcensus.catalog import county_side
from carcensus.estimator import cv_train
from carcensus.synth import SynthSpec, generate_dataset

ds = generate_dataset(SynthSpec(seed=2))
ids = [g["region_id"] for g in ds.regions]
side = np.array([county_side(g["county"]) for g in ds.regions])
X = np.array([ds.features[i] for i in ids])
train, test = side == "train", side == "test"
print(f"{train.sum()} training regions, {test.sum()} test regions")

y = np.array([ds.targets["income"][i] for i in ids])
res = cv_train(X[train], y[train], "ridge", C.LAMBDA_GRID, seed=0)
for lam, loss in res.cv_loss.items():
    mark = "  <- selected" if lam == res.lam else ""
    print(f"  lambda {lam:g}: held-out MSE {loss:.4g}{mark}")
r, p = pearson(res.model.predict(X[test]), y[test])
print(f"income: r = {r:.3f} (p = {p:.1e}); predictions clipped to "
      f"[{res.model.clip_lo:,.0f}, {res.model.clip_hi:,.0f}]")

Y = np.array([ds.targets["race"][i] for i in ids])
res = cv_train(X[train], Y[train], "softmax", C.LAMBDA_GRID, seed=0, class_labels=C.RACE_CLASSES)
P = res.model.predict(X[test])
print(f"race model: lambda {res.lam:g}, rows sum to 1 within {np.max(np.abs(P.sum(1) - 1)):.1e}")
for k, name in enumerate(C.RACE_CLASSES):
    print(f"  {name:6s} r = {pearson(P[:, k], Y[test, k])[0]:.3f}")
