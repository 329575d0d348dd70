"""Numerical check that the exponential reference minimizes the quadratic cost.

Twenty smooth bumps that keep both endpoints fixed all cost more, and the
closed-form cost (k/2)(R0^2 - Rf^2) matches trapezoidal quadrature.
"""

from salvoguide.verification import optimality_certificate

c = optimality_certificate(n_comparisons=20)
print(f"J optimal      = {c.J_optimal:.9f}")
print(f"J closed form  = {c.J_closed_form:.9f}  (relative error {c.relative_quadrature_error:.1e})")
print(f"cheapest bump  = {c.J_comparison.min():.9f}")
print("optimal is best:", c.optimal_is_best)
