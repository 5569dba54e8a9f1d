"""
Graded response basics
======================

An item with four ordered categories has three boundary curves. The
probability of landing in a category is the gap between neighbouring
boundaries.
"""

import numpy as np

from grmsim.grm import ItemParams, boundary_prob, category_probs

# one item measuring the second of three dimensions
item = ItemParams(
    slopes=np.array([0.0, 1.1, 0.0]),
    intercepts=np.array([1.2, 0.1, -1.0]),
    loading_dim=1,
)

theta = np.array([0.0, 0.5, 0.0])

print("boundary probabilities P(X >= k):")
for k in range(item.n_categories + 1):
    print(f"  k={k}: {boundary_prob(item, theta, k):.4f}")

probs = category_probs(item, theta)
print("category probabilities:", np.round(probs, 4), "sum", probs.sum())

# the model is compensatory: only the loading dimension matters here,
# but with a general slope vector a high trait on one dimension can
# offset a low trait on another through a . theta
for t2 in (-2.0, 0.0, 2.0):
    p = category_probs(item, np.array([0.0, t2, 0.0]))
    print(f"theta_2={t2:+.0f}  ->  P(top category) = {p[-1]:.4f}")
