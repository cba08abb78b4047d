"""Scores, information matrices, and singularity-order classification.

At the symmetry point theta0 = (mu, sigma, 0) the 3x3 information matrix of
a skew-symmetric family can lose rank.  The loss is graded: order 1 when the
kernel's location score is proportional to psi, order 2 when additionally
the kernel is Gaussian and psi is linear, order 3 when moreover the third
delta-derivative of the skewing function is alpha1*z - (8/a^3) z^3.  Order 4
is impossible.  Each order comes with a reparametrization whose skewness
score is the matching higher-order derivative of the log-likelihood, and a
full-rank information matrix once the correct order is used.
"""

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import (DegenerateSkewing, InconsistentDiagnostics,
                     NotGaussianKernel, OrderMismatch)
from .families import quadrature_for
from .numerics import (DEFAULT_QUADRATURE, QuadratureSpec, RankReport, Sym3,
                       diff_delta, integrate, rank3)

_SIGNS = {"+": 1.0, "-": -1.0}


def _sign_value(sign_branch):
    if sign_branch not in _SIGNS:
        raise ValueError("sign_branch must be '+' or '-'")
    return _SIGNS[sign_branch]


@dataclass(frozen=True)
class ScoreVector3:
    """Location, scale, and skewness scores at one point x."""

    l1: float
    l2: float
    l3: float
    parametrization: int
    sign_branch: str = "+"


@dataclass(frozen=True)
class GsnConstants:
    """Constants of a generalized-skew-normal family at the symmetry point."""

    a: float
    alpha1: float
    upsilon_cubic_coeff: float

    def __post_init__(self):
        if self.a == 0:
            raise ValueError("a must be nonzero")


@dataclass(frozen=True)
class ClassifyConfig:
    residual_tol: float = 1e-6
    rank_tol: float = 1e-7
    grid_halfwidth: float = 6.0
    grid_points: int = 121
    upsilon_fd_step: float = 5e-3
    quadrature: QuadratureSpec = DEFAULT_QUADRATURE
    cross_check_ranks: bool = True


DEFAULT_CLASSIFY = ClassifyConfig()


@dataclass(frozen=True)
class SingularityReport:
    order: int
    a: Optional[float]
    alpha1: Optional[float]
    residuals: tuple  # of (stage_name, value); value None when unavailable
    fisher_ranks: tuple  # of (parametrization, RankReport)
    constants: Optional[GsnConstants] = None

    def residual(self, name):
        for key, value in self.residuals:
            if key == name:
                return value
        raise KeyError(name)

    def rank_of(self, parametrization):
        for k, report in self.fisher_ranks:
            if k == parametrization:
                return report
        raise KeyError(parametrization)

    def to_dict(self):
        return {
            "order": self.order,
            "a": self.a,
            "alpha1": self.alpha1,
            "residuals": {k: v for k, v in self.residuals},
            "fisher_ranks": {
                str(k): {
                    "eigenvalues": list(r.eigenvalues),
                    "numeric_rank": r.numeric_rank,
                    "rank_tol": r.rank_tol,
                } for k, r in self.fisher_ranks
            },
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2,
                          allow_nan=False)


# --- information quantities --------------------------------------------------

def location_scale_info(kernel, sigma=1.0, spec=None):
    """Standardized information quantities (I_f, J_f) of the kernel.

    The location/scale informations at scale sigma are I_f/sigma^2 and
    J_f/sigma^2.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if spec is None:
        spec = DEFAULT_QUADRATURE
    if kernel.tail_cutoff > spec.tail_cutoff:
        spec = QuadratureSpec(spec.abs_tol, spec.rel_tol,
                              spec.max_subdivisions, kernel.tail_cutoff)
    i_f = integrate(lambda z: kernel.phi_f(z) ** 2 * kernel.f(z), spec)
    j_f = integrate(lambda z: (z * kernel.phi_f(z) - 1.0) ** 2 * kernel.f(z), spec)
    return i_f, j_f


def info_original(fam, mu=0.0, sigma=1.0, spec=None):
    """Information matrix at (mu, sigma, 0) in the original parametrization.

    The (1,2) and (2,3) entries vanish by parity and are set to exact zero.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    spec = quadrature_for(fam, spec or DEFAULT_QUADRATURE)
    f, phi_f, psi = fam.kernel.f, fam.kernel.phi_f, fam.skewing.psi
    i_f, j_f = location_scale_info(fam.kernel, 1.0, spec)
    g33 = 4.0 * integrate(lambda z: psi(z) ** 2 * f(z), spec)
    g13 = (2.0 / sigma) * integrate(lambda z: phi_f(z) * psi(z) * f(z), spec)
    return Sym3(i_f / sigma ** 2, 0.0, g13, j_f / sigma ** 2, 0.0, g33)


def estimate_a(fam, spec=None, grid=None):
    """Least-squares proportionality constant a in phi_f = a*psi.

    a = int(phi_f psi f) / int(psi^2 f); the residual is the largest
    relative pointwise deviation of phi_f from a*psi over the grid.
    """
    spec = quadrature_for(fam, spec or DEFAULT_QUADRATURE)
    if grid is None:
        grid = np.linspace(-6.0, 6.0, 121)
    f, phi_f, psi = fam.kernel.f, fam.kernel.phi_f, fam.skewing.psi
    denom = integrate(lambda z: psi(z) ** 2 * f(z), spec)
    if denom < 1e-12:
        raise DegenerateSkewing("int psi^2 f is numerically zero")
    a = integrate(lambda z: phi_f(z) * psi(z) * f(z), spec) / denom
    resid = float(np.max(np.abs(phi_f(grid) - a * psi(grid))
                         / (1.0 + np.abs(phi_f(grid)))))
    return a, resid


def info_reparam1(fam, mu=0.0, sigma=1.0, a=None, sign_branch="+", spec=None):
    """Information matrix after the first (location-shift) reparametrization.

    Valid once order >= 1, i.e. phi_f = a*psi.  The (1,2) and (1,3) entries
    vanish; the (2,3) entry carries the sign branch.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if a is None:
        a, _ = estimate_a(fam, spec)
    s = _sign_value(sign_branch)
    spec = quadrature_for(fam, spec or DEFAULT_QUADRATURE)
    f, psi, psidot = fam.kernel.f, fam.skewing.psi, fam.skewing.psidot

    def resid3(z):
        return psidot(z) / a - psi(z) ** 2

    g11 = a ** 2 / sigma ** 2 * integrate(lambda z: psi(z) ** 2 * f(z), spec)
    g22 = integrate(lambda z: (a * psi(z) * z - 1.0) ** 2 * f(z), spec) / sigma ** 2
    g33 = 4.0 * integrate(lambda z: resid3(z) ** 2 * f(z), spec)
    g23 = s * 2.0 / sigma * integrate(
        lambda z: (a * psi(z) * z - 1.0) * resid3(z) * f(z), spec)
    return Sym3(g11, 0.0, 0.0, g22, g23, g33)


def _require_gaussian_kernel(fam, tol=1e-6):
    grid = np.linspace(-6.0, 6.0, 121)
    gap = np.max(np.abs(fam.kernel.phi_f(grid) - grid) / (1.0 + np.abs(grid)))
    if gap > tol:
        raise NotGaussianKernel(
            f"kernel {fam.kernel.name!r} has location score != z (gap {gap:.2e})")


def _upsilon_values(fam, z, fd_step):
    ups = fam.skewing.upsilon
    if ups is not None:
        return np.asarray(ups(z), dtype=float)
    return np.asarray(diff_delta(fam.skewing.pi, z, 3, step=fd_step), dtype=float)


def third_order_skew_score(fam, a, z, fd_step=5e-3):
    """Skewness score of the second reparametrization, (8/3a^3)z^3 - (8/a^3)z + Upsilon/3."""
    z = np.asarray(z, dtype=float)
    ups = _upsilon_values(fam, z, fd_step)
    return 8.0 / (3.0 * a ** 3) * z ** 3 - 8.0 / a ** 3 * z + ups / 3.0


def info_reparam2(fam, mu=0.0, sigma=1.0, a=None, spec=None, fd_step=5e-3):
    """Information matrix after the second reparametrization (Gaussian kernel only)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    _require_gaussian_kernel(fam)
    if a is None:
        a, _ = estimate_a(fam, spec)
    spec = quadrature_for(fam, spec or DEFAULT_QUADRATURE)
    f = fam.kernel.f
    g13 = integrate(lambda z: z * _upsilon_values(fam, z, fd_step) * f(z), spec) / (3.0 * sigma)
    g33 = integrate(lambda z: third_order_skew_score(fam, a, z, fd_step) ** 2 * f(z), spec)
    return Sym3(1.0 / sigma ** 2, 0.0, g13, 2.0 / sigma ** 2, 0.0, g33)


def info_reparam3(a, alpha1, sigma=1.0, sign_branch="+"):
    """Closed-form information matrix after the third reparametrization.

    Positive definite for every (a != 0, alpha1): the scale-skewness block
    determinant equals 256/(3 a^8).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    s = _sign_value(sign_branch)
    g23 = s * (28.0 / a ** 4 - 4.0 * alpha1 / (3.0 * a)) / sigma
    g33 = (1304.0 / (3.0 * a ** 8) - 112.0 * alpha1 / (3.0 * a ** 5)
           + 8.0 * alpha1 ** 2 / (9.0 * a ** 2))
    return Sym3(1.0 / sigma ** 2, 0.0, 0.0, 2.0 / sigma ** 2, g23, g33)


# --- classification -----------------------------------------------------------

def _fit_upsilon_cubic(z, ups):
    """Least-squares fit ups ~ alpha1*z + alpha2*z^3; returns (a1, a2, rel resid)."""
    basis = np.stack([z, z ** 3], axis=1)
    coef, *_ = np.linalg.lstsq(basis, ups, rcond=None)
    fit = basis @ coef
    resid = float(np.max(np.abs(ups - fit) / (1.0 + np.abs(ups))))
    return float(coef[0]), float(coef[1]), resid


def classify(fam, config=DEFAULT_CLASSIFY):
    """Stage the family through the singularity hierarchy.

    Stage 1 tests phi_f = a*psi, stage 2 tests Gaussian kernel plus linear
    psi, stage 3 fits Upsilon(z) = alpha1*z + alpha2*z^3 and requires
    alpha2 = -8/a^3.  Orders cap at 3.  Each analytic decision is
    cross-checked against the numeric rank of the matching information
    matrix; disagreement raises InconsistentDiagnostics.
    """
    tol = config.residual_tol
    grid = np.linspace(-config.grid_halfwidth, config.grid_halfwidth,
                       config.grid_points)
    spec = config.quadrature
    residuals = []
    ranks = []

    a, resid1 = estimate_a(fam, spec, grid)
    residuals.append(("proportionality", resid1))
    order = 0
    alpha1 = None
    constants = None

    if resid1 < tol:
        order = 1
        phi_f, psi = fam.kernel.phi_f, fam.skewing.psi
        resid_kernel = float(np.max(np.abs(phi_f(grid) - grid) / (1.0 + np.abs(grid))))
        resid_psilin = float(np.max(np.abs(psi(grid) - grid / a)
                                    / (1.0 + np.abs(grid / a))))
        residuals.append(("kernel_normal", resid_kernel))
        residuals.append(("psi_linear", resid_psilin))
        if max(resid_kernel, resid_psilin) < tol:
            order = 2
            if fam.skewing.upsilon is None:
                residuals.append(("upsilon_fit", None))
                residuals.append(("upsilon_cubic_gap", None))
            else:
                ups = np.asarray(fam.skewing.upsilon(grid), dtype=float)
                if fam.skewing.derivative_source == "analytic":
                    fd = diff_delta(fam.skewing.pi, grid, 3,
                                    step=config.upsilon_fd_step)
                    gap = float(np.max(np.abs(ups - fd) / (1.0 + np.abs(ups))))
                    if gap > 1e-4:
                        raise InconsistentDiagnostics(
                            f"analytic and finite-difference Upsilon disagree ({gap:.2e})")
                a1, a2, fit_resid = _fit_upsilon_cubic(grid, ups)
                cubic_gap = abs(a2 + 8.0 / a ** 3)
                residuals.append(("upsilon_fit", fit_resid))
                residuals.append(("upsilon_cubic_gap", cubic_gap))
                constants = GsnConstants(a, a1, a2)
                if fit_resid < tol and cubic_gap < tol:
                    order = 3
                    alpha1 = a1

    ranks.append((0, rank3(info_original(fam, 0.0, 1.0, spec), config.rank_tol)))
    if order >= 1:
        ranks.append((1, rank3(info_reparam1(fam, 0.0, 1.0, a, spec=spec),
                               config.rank_tol)))
    if order >= 2 and fam.skewing.upsilon is not None:
        ranks.append((2, rank3(info_reparam2(fam, 0.0, 1.0, a, spec=spec,
                                             fd_step=config.upsilon_fd_step),
                               config.rank_tol)))
    if order == 3:
        ranks.append((3, rank3(info_reparam3(a, alpha1, 1.0), config.rank_tol)))

    if config.cross_check_ranks:
        for k, report in ranks:
            expected = 3 if k >= order else 2
            if report.numeric_rank != expected:
                raise InconsistentDiagnostics(
                    f"order {order} but parametrization-{k} information matrix "
                    f"has numeric rank {report.numeric_rank} (expected {expected})")

    return SingularityReport(
        order=order,
        a=a if order >= 1 else None,
        alpha1=alpha1,
        residuals=tuple(residuals),
        fisher_ranks=tuple(ranks),
        constants=constants,
    )


@lru_cache(maxsize=128)
def _classify_cached(fam):
    return classify(fam)


def family_analysis(fam):
    """Cached classification (default config) used by score/test machinery."""
    return _classify_cached(fam)


# --- scores -------------------------------------------------------------------

def score_at(fam, theta0, x, parametrization=0, sign_branch="+"):
    """Score vector at x under the requested parametrization, at theta0.

    theta0 must sit on the symmetry axis (delta = 0).  Raises OrderMismatch
    when the parametrization exceeds the family's singularity order or the
    derivatives it requires do not exist.
    """
    if theta0.delta != 0.0:
        raise ValueError("scores are defined at the symmetry point delta=0")
    if parametrization not in (0, 1, 2, 3):
        raise ValueError("parametrization must be 0..3")
    s = _sign_value(sign_branch)
    mu, sigma = theta0.mu, theta0.sigma
    z = (float(x) - mu) / sigma

    if parametrization == 0:
        l1 = fam.kernel.phi_f(z) / sigma
        l2 = (z * fam.kernel.phi_f(z) - 1.0) / sigma
        l3 = 2.0 * fam.skewing.psi(z)
        return ScoreVector3(float(l1), float(l2), float(l3), 0, sign_branch)

    report = family_analysis(fam)
    if parametrization > report.order:
        raise OrderMismatch(
            f"parametrization {parametrization} needs order >= {parametrization}, "
            f"family has order {report.order}")
    a = report.a

    if parametrization == 1:
        psi_z = fam.skewing.psi(z)
        l1 = a * psi_z / sigma
        l2 = (z * a * psi_z - 1.0) / sigma
        l3 = s * 2.0 * (fam.skewing.psidot(z) / a - psi_z ** 2)
        return ScoreVector3(float(l1), float(l2), float(l3), 1, sign_branch)

    if parametrization == 2:
        if fam.skewing.upsilon is None:
            raise OrderMismatch(
                "third delta-derivative of the skewing function is unavailable")
        l3 = third_order_skew_score(fam, a, z)
        return ScoreVector3(z / sigma, (z * z - 1.0) / sigma, float(l3), 2,
                            sign_branch)

    if report.order < 3 or report.alpha1 is None:
        raise OrderMismatch("parametrization 3 requires a triple singularity")
    alpha1 = report.alpha1
    l3 = (-10.0 / a ** 4 + 2.0 * alpha1 / (3.0 * a)
          + (6.0 / a ** 4 - 2.0 * alpha1 / (3.0 * a)) * z * z
          + 4.0 / (3.0 * a ** 4) * z ** 4)
    return ScoreVector3(z / sigma, (z * z - 1.0) / sigma, float(s * l3), 3,
                        sign_branch)
