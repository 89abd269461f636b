"""
Quarterly figures from annual totals
====================================

Four years of annual sales and a quarterly indicator. We spread each annual
total across its quarters so that the quarters add back up exactly.
"""

import numpy as np

from tdisagg import build_C, fit, parse_csv, write_csv

# A small input file: one row per quarter, the annual total repeated on each row
rows = ["index,grain,y,X"]
indicator = [80.2, 91.1, 85.4, 92.3, 83.0, 93.9, 88.1, 95.0,
             86.3, 96.2, 91.0, 97.9, 88.5, 99.4, 93.3, 100.1]
totals = [1000.0, 1100.0, 1050.0, 1200.0]
for k, x in enumerate(indicator):
    year, quarter = divmod(k, 4)
    rows.append(f"{2020 + year},{quarter + 1},{totals[year]},{x}")
frame = parse_csv("\n".join(rows).encode())

# Each annual figure is the sum of its quarters
Cm = build_C(frame, "sum")
y_l = frame.y_low

res = fit("chow-lin-opt", y_l, frame.X, Cm)
print(res.summary())

# The quarters sum back to the annual totals
print("annual totals:   ", y_l)
print("quarterly sums:  ", Cm.C @ res.y_hat)

# Denton keeps the quarterly movement of the indicator, with no regression
den = fit("denton-cholette", y_l, frame.X, Cm)
print("\nquarter  chow-lin-opt  denton-cholette")
for q, (a, b) in enumerate(zip(res.y_hat, den.y_hat)):
    print(f"{frame.index[q]}Q{frame.grain[q]}  {a:12.2f}  {b:15.2f}")

# Attach the estimate and write it back out as CSV
out = frame.with_columns(extras={"y_hat": res.y_hat})
print()
print(write_csv(out).decode()[:200], "...")

# Pretend the annual figures were averages instead: same call, another rule
avg = fit("chow-lin-opt", y_l / 4, frame.X, build_C(frame, "average"))
print("\naverage rule, first year:", np.round(avg.y_hat[:4], 2))
