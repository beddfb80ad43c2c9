"""Distribution function primitives used by the action models.

The standard normal CDF is evaluated through the complementary error
function, which keeps full relative accuracy deep in the tails. The
Student t CDF goes through the regularized incomplete beta identity.
"""

from __future__ import annotations

import math

from scipy.special import betainc

_SQRT2 = math.sqrt(2.0)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF. Accepts +-inf; rejects NaN.

    Absolute error stays below 1e-10 everywhere on the real line.
    """
    if math.isnan(x):
        raise ValueError("std_normal_cdf: x must not be NaN")
    return 0.5 * math.erfc(-x / _SQRT2)


def student_t_cdf(x: float, dof: float) -> float:
    """CDF of the Student t distribution with dof degrees of freedom.

    Uses the identity linking the t CDF to the regularized incomplete
    beta function I_z(dof/2, 1/2) with z = dof / (dof + x^2). Absolute
    error stays below 1e-8 for the degrees of freedom the models produce.
    """
    if math.isnan(x):
        raise ValueError("student_t_cdf: x must not be NaN")
    if not (dof > 0.0 and math.isfinite(dof)):
        raise ValueError(f"student_t_cdf: dof must be positive and finite, got {dof}")
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    z = dof / (dof + x * x)
    tail = 0.5 * float(betainc(0.5 * dof, 0.5, z))
    return 1.0 - tail if x > 0 else tail
