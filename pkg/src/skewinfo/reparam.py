"""Parameter maps between the original coordinates and the singularity-
resolving reparametrizations, the centred parametrization for the
skew-normal, and the closed-form skewness scores away from symmetry.

The three reparametrizations keep sigma-like and mu-like coordinates
algebraic and re-express skewness as sign(d)d^2, d^3, and sign(d)d^4; each
map has an exact inverse.  The centred parametrization (mean, standard
deviation, third standardized cumulant) is skew-normal specific.
"""

from dataclasses import dataclass

import numpy as np

from . import families, special
from .errors import DomainError, NotSkewNormal, SkewnessOutOfRange
from .families import ThetaOriginal

SQRT2PI = special.SQRT2PI
_C = 1.0 - 2.0 / np.pi
# Supremum of the third standardized cumulant over the skew-normal family.
GAMMA1_SUP = (4.0 - np.pi) / 2.0 * (2.0 / np.pi) ** 1.5 * _C ** -1.5


@dataclass(frozen=True)
class Theta1:
    mu1: float
    sigma1: float
    delta1: float  # sign(delta) * delta^2

    def __post_init__(self):
        if not self.sigma1 > 0:
            raise ValueError("sigma1 must be positive")


@dataclass(frozen=True)
class Theta2:
    mu2: float
    sigma2: float  # sigma*(1 - 2 delta^2/a^2); may be <= 0
    delta2: float  # delta^3


@dataclass(frozen=True)
class Theta3:
    mu3: float
    sigma3: float
    delta3: float  # sign(delta) * delta^4


@dataclass(frozen=True)
class ThetaCP:
    theta1: float  # mean
    theta2: float  # standard deviation
    gamma1: float  # third standardized cumulant

    def __post_init__(self):
        if not self.theta2 > 0:
            raise ValueError("theta2 must be positive")


def _sign(x):
    return float(np.sign(x))


def to_reparam1(theta, a):
    if a == 0:
        raise ValueError("a must be nonzero")
    d = theta.delta
    return Theta1(theta.mu + 2.0 * d * theta.sigma / a, theta.sigma,
                  _sign(d) * d * d)


def from_reparam1(t1, a):
    if a == 0:
        raise ValueError("a must be nonzero")
    d = _sign(t1.delta1) * np.sqrt(abs(t1.delta1))
    return ThetaOriginal(t1.mu1 - 2.0 * d * t1.sigma1 / a, t1.sigma1, d)


def to_reparam2(theta, a):
    if a == 0:
        raise ValueError("a must be nonzero")
    d = theta.delta
    return Theta2(theta.mu + 2.0 * d * theta.sigma / a,
                  theta.sigma * (1.0 - 2.0 * d * d / (a * a)),
                  d ** 3)


def from_reparam2(t2, a):
    if a == 0:
        raise ValueError("a must be nonzero")
    d = np.cbrt(t2.delta2)
    shrink = 1.0 - 2.0 * d * d / (a * a)
    if shrink == 0:
        raise DomainError("sigma2 map is singular at 2 delta^2 = a^2")
    sigma = t2.sigma2 / shrink
    if sigma <= 0:
        raise DomainError("reparam-2 point maps to a non-positive scale")
    return ThetaOriginal(t2.mu2 - 2.0 * d * sigma / a, sigma, float(d))


def to_reparam3(theta, a, alpha1):
    if a == 0:
        raise ValueError("a must be nonzero")
    d = theta.delta
    mu3 = (theta.mu + 2.0 / a * theta.sigma * d
           + (-8.0 / a ** 3 + alpha1 / 3.0) * theta.sigma * d ** 3)
    return Theta3(mu3, theta.sigma * (1.0 - 2.0 * d * d / (a * a)),
                  _sign(d) * d ** 4)


def from_reparam3(t3, a, alpha1):
    if a == 0:
        raise ValueError("a must be nonzero")
    d = _sign(t3.delta3) * abs(t3.delta3) ** 0.25
    shrink = 1.0 - 2.0 * d * d / (a * a)
    if shrink == 0:
        raise DomainError("sigma3 map is singular at 2 delta^2 = a^2")
    sigma = t3.sigma3 / shrink
    if sigma <= 0:
        raise DomainError("reparam-3 point maps to a non-positive scale")
    mu = (t3.mu3 - 2.0 / a * sigma * d
          - (-8.0 / a ** 3 + alpha1 / 3.0) * sigma * d ** 3)
    return ThetaOriginal(mu, sigma, float(d))


# --- centred parametrization --------------------------------------------------

def _is_skew_normal(fam):
    return (fam.kernel.name == "normal" and fam.skewing.name == "normal-cdf")


def gamma1_of_delta(d):
    return ((4.0 - np.pi) / 2.0 * (2.0 / np.pi) ** 1.5 * d ** 3
            * (1.0 + d * d * _C) ** -1.5)


def cp_forward(theta, fam=None):
    """Centred parameters (mean, sd, third standardized cumulant); skew-normal only."""
    if fam is not None and not _is_skew_normal(fam):
        raise NotSkewNormal(f"centred parametrization undefined for {fam.name!r}")
    d = theta.delta
    opd = 1.0 + d * d
    theta1 = theta.mu + theta.sigma * np.sqrt(2.0 / np.pi) * d / np.sqrt(opd)
    theta2 = theta.sigma * np.sqrt((1.0 + d * d * _C) / opd)
    return ThetaCP(float(theta1), float(theta2), float(gamma1_of_delta(d)))


def cp_inverse(cp):
    """Invert the centred parametrization by bisection on the monotone
    delta -> gamma1 map, then back-substitute sigma and mu."""
    if abs(cp.gamma1) >= GAMMA1_SUP:
        raise SkewnessOutOfRange(
            f"|gamma1| must be below {GAMMA1_SUP:.5f}, got {cp.gamma1}")
    if cp.gamma1 == 0.0:
        return ThetaOriginal(cp.theta1, cp.theta2, 0.0)
    target = cp.gamma1
    lo, hi = -1e6, 1e6
    for _ in range(220):
        mid = 0.5 * (lo + hi)
        if gamma1_of_delta(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= abs(mid) * 1e-16 + 1e-300:
            break
    d = 0.5 * (lo + hi)
    sigma = cp.theta2 * np.sqrt((1.0 + d * d) / (1.0 + d * d * _C))
    mu = cp.theta1 - sigma * np.sqrt(2.0 / np.pi) * d / np.sqrt(1.0 + d * d)
    return ThetaOriginal(float(mu), float(sigma), float(d))


# --- closed-form skewness scores away from symmetry ----------------------------

def appendix_score_ours(mu2, sigma2, delta2, x):
    """Skewness score d/d(delta2) of the skew-normal log-density in the
    second reparametrization, transcribed term by term as a ratio h1/h2."""
    if delta2 == 0:
        raise DomainError("delta2 must be nonzero; use the closed form at 0")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    d13 = np.cbrt(delta2)
    d23 = d13 * d13
    dm = x - mu2
    phi_arg = (SQRT2PI * d23 * sigma2 - delta2 * dm + np.pi * d13 * dm) / (np.pi * sigma2)
    big_phi = float(special.norm_cdf(phi_arg))
    h1 = (
        np.exp(-d23 * (SQRT2PI * d13 * sigma2 - d23 * dm + np.pi * dm) ** 2
               / (2.0 * np.pi ** 2 * sigma2 ** 2))
        / sigma2
        * (np.pi - d23)
        * (4.0 * np.pi * d13 * sigma2 + np.sqrt(2.0) * np.pi ** 1.5 * dm
           - 3.0 * SQRT2PI * d23 * dm)
        - 4.0 * np.pi ** 2 * d13 * big_phi
        + 2.0 / sigma2 ** 2 * (np.pi - d23) * big_phi
        * (-np.sqrt(2.0) * np.pi ** 1.5 * sigma2 * dm - 2.0 * delta2 * dm ** 2
           + 3.0 * SQRT2PI * d23 * sigma2 * dm
           + 2.0 * np.pi * d13 * (dm ** 2 - sigma2 ** 2))
    )
    h2 = 6.0 * np.pi ** 2 * (np.pi - d23) * d23 * big_phi
    if h2 == 0:
        raise DomainError("h2 vanished; score undefined at this point")
    return float(h1 / h2)


def appendix_score_cp(theta1, theta2, gamma1, x):
    """Skewness score d/d(gamma1) of the skew-normal log-density in the
    centred parametrization: h1_cp + h2_cp / h3_cp, as displayed."""
    if gamma1 == 0:
        raise DomainError("gamma1 must be nonzero (0/0 indeterminacy at 0)")
    if not 0 < abs(gamma1) < GAMMA1_SUP:
        raise SkewnessOutOfRange(f"|gamma1| must lie in (0, {GAMMA1_SUP:.5f})")
    fourpi = 4.0 - np.pi
    u = np.cbrt(gamma1)           # gamma1^(1/3)
    u2 = u * u                    # gamma1^(2/3)
    u4 = u2 * u2                  # gamma1^(4/3)
    r = (2.0 / fourpi) ** (1.0 / 3.0)
    r2 = r * r
    t = x - theta1 + r * u * theta2
    h1 = (
        -1.0 / (3.0 * u * (u2 + (fourpi / 2.0) ** (2.0 / 3.0)))
        + (1.0 / 3.0) * r2 * t ** 2 / (u * theta2 ** 2 * (1.0 + u2 * r2) ** 2)
        - (1.0 / 3.0) * r * t / (u2 * theta2 * (1.0 + u2 * r2))
    )
    h2 = (
        2.0 ** (1.0 / 6.0)
        * np.exp(np.pi * fourpi ** (-2.0 / 3.0) * u2 * t ** 2
                 / (2.0 ** (4.0 / 3.0) * (1.0 + r2 * u2)
                    * (-1.0 + 2.0 ** (-1.0 / 3.0) * (np.pi - 2.0)
                       * fourpi ** (-2.0 / 3.0) * u2)
                    * theta2 ** 2))
        * ((x - theta1) * (2.0 * fourpi ** (2.0 / 3.0) * (np.pi - 2.0) * u4
                           + 2.0 ** (2.0 / 3.0) * (np.pi - 4.0) ** 2)
           + theta2 * (2.0 ** (2.0 / 3.0) * fourpi ** 2 * gamma1
                       + 4.0 * fourpi ** (5.0 / 3.0) * u))
    )
    shrink = 2.0 - 2.0 ** (2.0 / 3.0) * (np.pi - 2.0) * fourpi ** (-2.0 / 3.0) * u2
    h3 = (
        3.0 * fourpi ** (7.0 / 3.0) * theta2 * u2
        * (1.0 + u2 * r2) ** 1.5 * shrink ** 1.5
        * special.norm_cdf(2.0 ** (1.0 / 3.0) * np.sqrt(np.pi)
                           * fourpi ** (-1.0 / 3.0) * u * t
                           / (theta2 * (1.0 + 2.0 ** (2.0 / 3.0)
                                        * fourpi ** (-2.0 / 3.0) * u2) ** 0.5
                              * shrink ** 0.5))
    )
    if h3 == 0:
        raise DomainError("h3 vanished; score undefined at this point")
    return float(h1 + h2 / h3)


# --- numeric-derivative oracles -------------------------------------------------

_SN_A = SQRT2PI


def sn_log_density_reparam2(mu2, sigma2, delta2, x):
    """Skew-normal log-density holding (mu2, sigma2) fixed, as a function of delta2."""
    fam = families.make_family("skew-normal")
    theta = from_reparam2(Theta2(mu2, sigma2, delta2), _SN_A)
    return float(families.log_density(fam, theta, x))


def sn_log_density_cp(theta1, theta2, gamma1, x):
    """Skew-normal log-density in centred coordinates."""
    fam = families.make_family("skew-normal")
    theta = cp_inverse(ThetaCP(theta1, theta2, gamma1))
    return float(families.log_density(fam, theta, x))


def _central_diff(fun, t, h):
    d1 = (fun(t + h) - fun(t - h)) / (2.0 * h)
    d2 = (fun(t + h / 2.0) - fun(t - h / 2.0)) / h
    return (4.0 * d2 - d1) / 3.0


def appendix_check(n_points=40, seed=1234):
    """Compare both transcribed appendix scores with numeric differentiation.

    Draws n_points random (skewness parameter, x) pairs for each variant and
    returns a dict with the max relative deviations.
    """
    rng = np.random.default_rng(seed)
    worst_ours = 0.0
    for _ in range(n_points):
        delta2 = rng.uniform(0.05, 1.0) * rng.choice([-1.0, 1.0])
        x = rng.uniform(-3.0, 3.0)
        h = min(abs(delta2) / 8.0, 2e-3)
        numeric = _central_diff(
            lambda t: sn_log_density_reparam2(0.0, 1.0, t, x), delta2, h)
        closed = appendix_score_ours(0.0, 1.0, delta2, x)
        worst_ours = max(worst_ours,
                         abs(closed - numeric) / (1.0 + abs(numeric)))
    worst_cp = 0.0
    for _ in range(n_points):
        gamma1 = rng.uniform(0.02, 0.8) * rng.choice([-1.0, 1.0])
        x = rng.uniform(-3.0, 3.0)
        h = min(abs(gamma1) / 8.0, 2e-3)
        numeric = _central_diff(
            lambda t: sn_log_density_cp(0.0, 1.0, t, x), gamma1, h)
        closed = appendix_score_cp(0.0, 1.0, gamma1, x)
        worst_cp = max(worst_cp, abs(closed - numeric) / (1.0 + abs(numeric)))
    return {"ours_max_rel_dev": worst_ours, "cp_max_rel_dev": worst_cp,
            "n_points": n_points, "seed": seed}
