"""How the fuzzy scheduler maps an RMSE improvement to update parameters.

Run with ``python demos/01_fuzzy_schedule.py``.
"""
import numpy as np

from fpslfa import default_table, fuzzify, schedule

table = default_table()
print("breakpoints A1..A5:", table.a_points)

# An improvement that falls between two breakpoints gets split between them.
m = fuzzify(0.00012, table)
print(f"a_t = 0.00012 -> interval {m.lower_index}, degrees ({m.d_lower:.2f}, {m.d_upper:.2f})")

# Big improvements push phi and the proportional gain up, and the integral and
# derivative gains down. Anything outside [A1, A5] saturates at the ends.
print(f"{'a_t':>10} {'phi':>10} {'kp':>10} {'ki':>10} {'kd':>10}")
for a_t in np.linspace(-0.0001, 0.0006, 8):
    p = schedule(a_t, table)
    print(f"{a_t:10.5f} {p.phi:10.2e} {p.gains.kp:10.2e} {p.gains.ki:10.2e} {p.gains.kd:10.2e}")
