"""Moments, tail index and Lyapunov exponent of a few specs, with a
simulation cross-check of each number."""

from rminar import Bernoulli, ModelSpec, PointMass, Poisson, TwoPoint, simulate
from rminar.theory import hill_tail_estimate, lyapunov_mc, stationarity_report, tail_index

# finite second moment: compare the implied mean/variance with a long path
spec = ModelSpec("additive", [Poisson(0.3)], Poisson(2.0))
rep = stationarity_report(spec)
y = simulate(spec, 200_000, seed=0).values
print(f"rho(E A) = {rep.rho_mean:.3f}, rho(E A x A) = {rep.rho_m2:.3f}")
print(f"mean     theory {rep.uncond_mean:.4f}  sample {y.mean():.4f}")
print(f"variance theory {rep.uncond_variance:.4f}  sample {y.var():.4f}")

# E(Phi) > 1 but P(Phi = 0) > 0: stationary with a Pareto-like tail
spec = ModelSpec("additive", [Poisson(1.2)], Poisson(0.1))
tau = tail_index(spec).tau1
y = simulate(spec, 1_000_000, seed=1).values
print()
print(f"Poisson(1.2) coefficient: tau1 = {tau:.4f}, Hill (top 1%) = {hill_tail_estimate(y, 0.01):.4f}")
print(f"Lyapunov exponent: {lyapunov_mc(spec).gamma}")  # -inf, the coefficient hits zero

# E(Phi) = 1 with half the mass at zero: still -inf
spec = ModelSpec("additive", [TwoPoint(0.5, 2)], Poisson(1.0))
print(f"TwoPoint(0.5, 2): tau1 = {tail_index(spec).tau1:.4f}, gamma = {lyapunov_mc(spec).gamma}")

# companion matrices that never vanish need simulation; sum(phi) = 1.3
# here, and the positive exponent says the recursion has no stationary solution
spec = ModelSpec("additive", [Bernoulli(0.3), PointMass(1)], Poisson(1.0))
ly = lyapunov_mc(spec, horizon=2000, reps=50, seed=2)
print(f"Bernoulli(0.3), PointMass(1): gamma = {ly.gamma:.4f} +/- {ly.std_error:.4f}")
