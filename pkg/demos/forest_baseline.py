#!/usr/bin/env python3
"""The no-neural-net control: hand-built features plus a voting forest.

Each composition becomes a 256-vector of weighted statistics (average,
variance, extremes, mode, median, spread) over 32 per-element properties,
and a bagged forest of depth-grown trees votes superconductor / not. On a
toy world where the rule is "enough niobium", the forest gets most of the
way there without any gradient in sight.

Run: python3 demos/forest_baseline.py
"""

import numpy as np

from scscreen.baseline import (
    FEATURE_NAMES,
    aggregate_features_batch,
    predict_forest,
    train_forest,
)
from scscreen.formula import normalize

PARTNERS = ["Al", "Si", "Ge", "Sn", "Pb", "Ga", "In", "Zn"]


def element_table(seed=5):
    """A stand-in property table; real runs load one from CSV."""
    rng = np.random.default_rng(seed)
    table = {}
    for i, s in enumerate(["Nb", *PARTNERS]):
        table[s] = rng.normal(float(i), 1.0, len(FEATURE_NAMES))
    return table


def build_world(n, seed):
    rng = np.random.default_rng(seed)
    comps, labels = [], []
    for _ in range(n):
        partner = str(rng.choice(PARTNERS))
        nb = float(rng.uniform(0.0, 1.0))
        comps.append(normalize({"Nb": nb, partner: 1.0 - nb}) if nb > 0
                     else normalize({partner: 1.0}))
        labels.append(int(nb > 0.5))
    return comps, np.array(labels, dtype=np.int8)


def main():
    table = element_table()
    comps, labels = build_world(240, seed=2)
    x = aggregate_features_batch(comps, table)
    print(f"featurized {x.shape[0]} compositions into {x.shape[1]} columns")

    n_train = 180
    model = train_forest(x[:n_train], labels[:n_train], n_trees=60, seed=9)
    classes, votes = predict_forest(model, x[n_train:])
    truth = labels[n_train:]
    accuracy = float((classes == truth).mean())
    base = max(float(truth.mean()), 1.0 - float(truth.mean()))

    print(f"forest of {model.n_trees} trees: accuracy {accuracy:.3f} "
          f"on {len(truth)} held-out rows (always-majority would give {base:.3f})")
    print("\nfive held-out calls:")
    for comp, c, v, t in list(zip(comps[n_train:], classes, votes, truth))[:5]:
        name = "".join(f"{s}{f:.2f}" for s, f in comp.items())
        print(f"  {name:<22} votes {v:.2f} -> class {c} (truth {t})")


if __name__ == "__main__":
    main()
