"""
Combining methods, then removing negative values
================================================

Fit several methods and combine them with non-negative weights that sum to
one. Then take a series with a few negative periods and push it back to
non-negative values without breaking the low-frequency totals.
"""

import numpy as np

from tdisagg import adjust, build_C, ensemble_fit, run_ensemble, simplex_project
from tdisagg.synth import generate

f = generate(n_low=24, m=4, rho=0.5, seed=11, const=3.0)
Cm = build_C(f, "sum")

# With the default members, denton reproduces the targets exactly and takes all the weight
er = run_ensemble(f, "sum")
print(er.summary())

# Regression members enter through their fitted low-frequency values C X b.
# Those all live in the span of the aggregated regressors, so OLS (the least
# squares point of that span) wins whenever it is present, and otherwise a
# single vertex usually does. The high-frequency error tells a different story.
er = ensemble_fit(f.y_low, f.X, Cm, ["ols", ("chow-lin", {"rho": 0.3}), ("chow-lin", {"rho": 0.8}),
                                     "fernandez", ("litterman", {"rho": 0.5})])
print(er.summary())
truth = f.extras["y_true"]
for label, (_, r) in zip(er.labels, er.members):
    print(f"{label:>16}: high-frequency rmse {np.sqrt(np.mean((r.y_hat - truth) ** 2)):.3f}")
print(f"{'ensemble':>16}: high-frequency rmse {np.sqrt(np.mean((er.y_hat - truth) ** 2)):.3f}")

# A series that dips below zero inside a few groups
rng = np.random.default_rng(0)
y_hat = rng.normal(2.0, 3.0, 12)
Cm3 = build_C(generate(n_low=3, m=4, seed=0), "sum")
fixed, report = adjust(y_hat, None, Cm3)
print()
print(report.summary())
print("before:", np.round(y_hat, 2))
print("after: ", np.round(fixed, 2))
print("group sums before:", np.round(Cm3.C @ y_hat, 6))
print("group sums after: ", np.round(Cm3.C @ fixed, 6))

# The projection used for average groups, on its own
print("\nproject [-1, 3] onto sum 2:", simplex_project([-1.0, 3.0], 2.0))
