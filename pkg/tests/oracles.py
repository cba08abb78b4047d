"""Shared independent oracles for the test suite.

Finite-difference delta-derivatives of the log-density along the
reparametrized paths, used to cross-check the closed-form skewness scores.
"""

import numpy as np

from skewinfo.families import ThetaOriginal, log_density
from skewinfo.fisher import family_analysis
from skewinfo.reparam import (Theta1, Theta2, Theta3, from_reparam1,
                              from_reparam2, from_reparam3)

# 1/k! factors linking the parametrization-k skewness score to the k+1-st
# delta-derivative of the log-density.
SCORE_FACTORS = {0: 1.0, 1: 0.5, 2: 1.0 / 6.0, 3: 1.0 / 24.0}
# The third-derivative step is small because arctan-type skewing functions
# have factorially growing delta-derivatives at |z| ~ 4.
FD_STEPS = {1: 1e-3, 2: 1e-2, 3: 5e-3, 4: 0.025}


def admissible_parametrizations(fam):
    report = family_analysis(fam)
    out = [0]
    if report.order >= 1:
        out.append(1)
    if report.order >= 2 and fam.skewing.upsilon is not None:
        out.append(2)
    if report.order == 3:
        out.append(3)
    return out


def log_density_path(fam, k, a, alpha1, m, s, delta, x):
    """log-density at x as a function of delta, holding the k-th
    reparametrization's location/scale coordinates fixed at (m, s)."""
    if k == 0:
        theta = ThetaOriginal(m, s, delta)
    elif k == 1:
        theta = from_reparam1(Theta1(m, s, np.sign(delta) * delta ** 2), a)
    elif k == 2:
        theta = from_reparam2(Theta2(m, s, delta ** 3), a)
    else:
        theta = from_reparam3(Theta3(m, s, np.sign(delta) * delta ** 4),
                              a, alpha1)
    return log_density(fam, theta, x)


def central_derivative(fun, order, h):
    """Central stencil of the given order with one Richardson step."""
    if order == 1:
        stencil = lambda hh: (fun(hh) - fun(-hh)) / (2 * hh)
    elif order == 2:
        stencil = lambda hh: (fun(hh) - 2 * fun(0.0) + fun(-hh)) / hh ** 2
    elif order == 3:
        stencil = lambda hh: (fun(2 * hh) - 2 * fun(hh) + 2 * fun(-hh)
                              - fun(-2 * hh)) / (2 * hh ** 3)
    elif order == 4:
        stencil = lambda hh: (fun(-2 * hh) - 4 * fun(-hh) + 6 * fun(0.0)
                              - 4 * fun(hh) + fun(2 * hh)) / hh ** 4
    else:
        raise ValueError(order)
    return (4 * stencil(h / 2) - stencil(h)) / 3


def fd_skewness_score(fam, k, a, alpha1, x, m=0.0, s=1.0):
    """Finite-difference value of the parametrization-k skewness score."""
    fd = central_derivative(
        lambda d: log_density_path(fam, k, a, alpha1, m, s, d, x),
        k + 1, FD_STEPS[k + 1])
    return SCORE_FACTORS[k] * fd
