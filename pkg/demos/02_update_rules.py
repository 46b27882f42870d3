"""The three update rules on a single rating, and how they reduce to each other.

Run with ``python demos/02_update_rules.py``.
"""
from fpslfa import (AdaptedParams, ControllerState, FactorModel, Hyperparams, PidGains,
                    fps_update, psl_update, sgd_update)

entry = (0, 0, 1.0)  # row 0, column 0, rating 1.0
h = Hyperparams(eta=0.1, lam=0.1)

m = FactorModel([[0.5]], [[0.5]])
sgd_update(m, entry, h)
print("plain SGD:            x =", m.x[0, 0])  # 0.5 + 0.1 * (0.75 * 0.5 - 0.05)

# PID with gains (1, 0, 0) is the same step.
m = FactorModel([[0.5]], [[0.5]])
psl_update(m, entry, ControllerState(), h, PidGains(1, 0, 0))
print("PID with (1, 0, 0):   x =", m.x[0, 0])

# The folded form multiplies the gains by eta and uses phi = eta * lambda.
raw = PidGains(1.0, 0.5, 0.2)
a, b = FactorModel([[0.5]], [[0.5]]), FactorModel([[0.5]], [[0.5]])
sa = sb = ControllerState()
for _ in range(3):
    sa = psl_update(a, entry, sa, h, raw)
    sb = fps_update(b, entry, sb, AdaptedParams(h.phi, raw.folded(h.eta)))
print("PID raw gains:        x =", a.x[0, 0])
print("folded (FPS) form:    x =", b.x[0, 0])
print("controller after 3 visits:", sb)
