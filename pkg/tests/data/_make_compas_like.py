"""Regenerate compas_like.csv, the tiny synthetic fixture for real-data CI runs.

Nine numeric features, a binary sensitive attribute, a binary outcome; the
last feature is correlated with the outcome so an MNAR recipe that reads both
actually distorts the complete-case domain.  Run from this directory:

    python _make_compas_like.py
"""

import csv
from pathlib import Path

import numpy as np

N = 600
SEED = 20240811


def main() -> None:
    gen = np.random.default_rng(SEED)
    sex = (gen.random(N) < 0.45).astype(int)
    X = gen.normal(0.0, 1.0, size=(N, 9))
    X[:, 0] += 0.6 * sex            # group-shifted features
    X[:, 1] -= 0.4 * sex
    X[:, 3] += 0.2 * sex
    logit = -0.3 + 0.9 * X[:, 0] - 0.7 * X[:, 1] + 0.5 * X[:, 2] + 0.4 * sex
    y = (gen.random(N) < 1.0 / (1.0 + np.exp(-logit))).astype(int)
    X[:, 8] = 0.8 * (2 * y - 1) + gen.normal(0.0, 0.8, size=N)  # outcome-linked feature
    out = Path(__file__).with_name("compas_like.csv")
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sex", "two_year_recid"] + [f"f{j}" for j in range(1, 10)])
        for i in range(N):
            w.writerow([sex[i], y[i]] + [f"{v:.6f}" for v in X[i]])
    print(f"wrote {out} ({N} rows)")


if __name__ == "__main__":
    main()
