"""Symmetric kernels, skewing functions, and their skew-symmetric combinations.

A family is a pair (kernel f, skewing Pi) producing the density

    x -> 2/sigma * f((x-mu)/sigma) * Pi((x-mu)/sigma, delta).

Kernels are nonvanishing even densities; skewing functions map into [0,1],
satisfy Pi(-z,d) + Pi(z,d) = 1 and Pi(z,0) = 1/2, and have vanishing even
delta-derivatives at delta = 0.  All callables are vectorized over numpy
arrays; every skewing function carries its first delta-derivative psi, the
z-derivative psidot, and (when it exists) the third delta-derivative upsilon,
either in closed form or via finite differences.
"""

import json
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from . import exprdsl, special
from .errors import DomainError
from .numerics import (DEFAULT_QUADRATURE, QuadratureSpec, diff_delta,
                       integrate, make_rng)

LOG2 = np.log(2.0)
SQRT2PI = special.SQRT2PI


@dataclass(frozen=True)
class SymmetricKernel:
    """Even, nonvanishing density with its location score and a sampler.

    phi_f is -f'/f.  logf exists for tail-stable likelihoods.  tail_cutoff
    widens the quadrature window for kernels with power tails.
    """

    name: str
    logf: Callable
    phi_f: Callable
    sampler: Callable  # (rng, n) -> draws from f
    standardization_note: str
    tail_cutoff: float = 50.0

    def f(self, z):
        return np.exp(self.logf(np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class SkewingFunction:
    """Pi(z, delta) with its delta-derivatives at delta = 0.

    upsilon is None when the third delta-derivative does not exist
    (e.g. G(delta*z) with a kinked G).
    """

    name: str
    pi: Callable
    log_pi: Callable
    psi: Callable
    psidot: Callable
    upsilon: Optional[Callable]
    derivative_source: str = "analytic"


@dataclass(frozen=True)
class SkewSymmetricFamily:
    kernel: SymmetricKernel
    skewing: SkewingFunction
    name: str


@dataclass(frozen=True)
class ThetaOriginal:
    mu: float
    sigma: float
    delta: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def quadrature_for(fam, spec=DEFAULT_QUADRATURE):
    """Quadrature spec whose window covers the family kernel's tails."""
    if fam.kernel.tail_cutoff > spec.tail_cutoff:
        return QuadratureSpec(spec.abs_tol, spec.rel_tol,
                              spec.max_subdivisions, fam.kernel.tail_cutoff)
    return spec


# --- density, log-density, sampling ---------------------------------------

def density(fam, theta, x):
    z = (np.asarray(x, dtype=float) - theta.mu) / theta.sigma
    return (2.0 / theta.sigma) * fam.kernel.f(z) * fam.skewing.pi(z, theta.delta)


def log_density(fam, theta, x):
    z = (np.asarray(x, dtype=float) - theta.mu) / theta.sigma
    return (LOG2 - np.log(theta.sigma) + fam.kernel.logf(z)
            + fam.skewing.log_pi(z, theta.delta))


def sample(fam, theta, n, seed):
    """n i.i.d. draws via the sign-flip representation.

    Z ~ f and U ~ Uniform(0,1) are drawn in that order from the stream;
    the draw is mu + sigma*Z when U <= Pi(Z, delta), else mu - sigma*Z.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    z = fam.kernel.sampler(rng, n)
    u = rng.uniform(size=n)
    keep = u <= fam.skewing.pi(z, theta.delta)
    return theta.mu + theta.sigma * np.where(keep, z, -z)


# --- builtin kernels --------------------------------------------------------

def normal_kernel():
    return SymmetricKernel(
        name="normal",
        logf=lambda z: -0.5 * z * z - special.LOG_SQRT2PI,
        phi_f=lambda z: np.asarray(z, dtype=float),
        sampler=lambda rng, n: rng.standard_normal(n),
        standardization_note="unit variance",
    )


def logistic_kernel():
    def logf(z):
        az = np.abs(np.asarray(z, dtype=float))
        return -az - 2.0 * np.log1p(np.exp(-az))

    return SymmetricKernel(
        name="logistic",
        logf=logf,
        phi_f=lambda z: np.tanh(np.asarray(z, dtype=float) / 2.0),
        sampler=lambda rng, n: rng.logistic(size=n),
        standardization_note="unit rate (scale 1, variance pi^2/3)",
    )


def student_t_kernel(nu):
    if not nu > 2:
        raise ValueError("student-t kernel requires nu > 2")
    c = np.exp(gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0)) / np.sqrt(nu * np.pi)
    # Window wide enough that the truncated tail mass is below 1e-13.
    tail = max(50.0, (c * nu ** ((nu - 1.0) / 2.0) / 1e-13) ** (1.0 / nu))
    return SymmetricKernel(
        name=f"student-t({nu:g})",
        logf=lambda z: special.student_t_logpdf(z, nu),
        phi_f=lambda z: (nu + 1.0) * z / (nu + np.asarray(z, dtype=float) ** 2),
        sampler=lambda rng, n: rng.standard_t(nu, size=n),
        standardization_note="unit scale (variance nu/(nu-2))",
        tail_cutoff=float(tail),
    )


def exponential_power_kernel(alpha):
    if not alpha > 1:
        raise ValueError("exponential-power kernel requires alpha > 1")
    logc = LOG2 + (1.0 / alpha - 1.0) * np.log(alpha) + gammaln(1.0 / alpha)

    def sampler(rng, n):
        w = rng.gamma(1.0 / alpha, 1.0, size=n)
        mag = (alpha * w) ** (1.0 / alpha)
        return np.where(rng.uniform(size=n) < 0.5, -mag, mag)

    return SymmetricKernel(
        name=f"exponential-power({alpha:g})",
        logf=lambda z: -np.abs(np.asarray(z, dtype=float)) ** alpha / alpha - logc,
        phi_f=lambda z: np.sign(z) * np.abs(np.asarray(z, dtype=float)) ** (alpha - 1.0),
        sampler=sampler,
        standardization_note="exp(-|z|^alpha/alpha) shape, unit scale",
    )


# --- builtin skewing functions ----------------------------------------------

def normal_cdf_skewing():
    """Phi(delta*z), the classical skewing mechanism."""
    return SkewingFunction(
        name="normal-cdf",
        pi=lambda z, d: special.norm_cdf(d * np.asarray(z, dtype=float)),
        log_pi=lambda z, d: special.norm_logcdf(d * np.asarray(z, dtype=float)),
        psi=lambda z: np.asarray(z, dtype=float) / SQRT2PI,
        psidot=lambda z: np.full_like(np.asarray(z, dtype=float), 1.0 / SQRT2PI),
        upsilon=lambda z: -np.asarray(z, dtype=float) ** 3 / SQRT2PI,
    )


def logistic_cdf_skewing():
    return SkewingFunction(
        name="logistic-cdf",
        pi=lambda z, d: special.logistic_cdf(d * np.asarray(z, dtype=float)),
        log_pi=lambda z, d: special.logistic_logcdf(d * np.asarray(z, dtype=float)),
        psi=lambda z: np.asarray(z, dtype=float) / 4.0,
        psidot=lambda z: np.full_like(np.asarray(z, dtype=float), 0.25),
        upsilon=lambda z: -np.asarray(z, dtype=float) ** 3 / 8.0,
    )


def student_t_cdf_skewing(nu):
    g0 = special.student_t_pdf_at_zero(nu)
    gdd0 = -g0 * (nu + 1.0) / nu
    return SkewingFunction(
        name=f"student-t-cdf({nu:g})",
        pi=lambda z, d: special.student_t_cdf(d * np.asarray(z, dtype=float), nu),
        log_pi=lambda z, d: special.student_t_logcdf(d * np.asarray(z, dtype=float), nu),
        psi=lambda z: g0 * np.asarray(z, dtype=float),
        psidot=lambda z: np.full_like(np.asarray(z, dtype=float), g0),
        upsilon=lambda z: gdd0 * np.asarray(z, dtype=float) ** 3,
    )


def cauchy_cdf_skewing():
    return SkewingFunction(
        name="cauchy-cdf",
        pi=lambda z, d: special.cauchy_cdf(d * np.asarray(z, dtype=float)),
        log_pi=lambda z, d: np.log(special.cauchy_cdf(d * np.asarray(z, dtype=float))),
        psi=lambda z: np.asarray(z, dtype=float) / np.pi,
        psidot=lambda z: np.full_like(np.asarray(z, dtype=float), 1.0 / np.pi),
        upsilon=lambda z: -2.0 * np.asarray(z, dtype=float) ** 3 / np.pi,
    )


def laplace_cdf_skewing():
    # G(delta*z) with Laplace G is only twice differentiable in delta at 0,
    # so the third derivative is declared unavailable.
    return SkewingFunction(
        name="laplace-cdf",
        pi=lambda z, d: special.laplace_cdf(d * np.asarray(z, dtype=float)),
        log_pi=lambda z, d: np.log(special.laplace_cdf(d * np.asarray(z, dtype=float))),
        psi=lambda z: np.asarray(z, dtype=float) / 2.0,
        psidot=lambda z: np.full_like(np.asarray(z, dtype=float), 0.5),
        upsilon=None,
    )


def score_matched_skewing(kernel, phi_f_prime=None):
    """Phi(delta * phi_f(z)): the canonical mismatch for a given kernel."""
    score = kernel.phi_f
    if phi_f_prime is None:
        h = 1e-5

        def phi_f_prime(z):
            z = np.asarray(z, dtype=float)
            return (score(z + h) - score(z - h)) / (2.0 * h)

    return SkewingFunction(
        name=f"normal-cdf-of-score[{kernel.name}]",
        pi=lambda z, d: special.norm_cdf(d * score(np.asarray(z, dtype=float))),
        log_pi=lambda z, d: special.norm_logcdf(d * score(np.asarray(z, dtype=float))),
        psi=lambda z: score(np.asarray(z, dtype=float)) / SQRT2PI,
        psidot=lambda z: phi_f_prime(np.asarray(z, dtype=float)) / SQRT2PI,
        upsilon=lambda z: -score(np.asarray(z, dtype=float)) ** 3 / SQRT2PI,
    )


def sin_skewing():
    """Phi(delta * sin z): a skewing function no kernel can match."""
    return SkewingFunction(
        name="normal-cdf-of-sin",
        pi=lambda z, d: special.norm_cdf(d * np.sin(np.asarray(z, dtype=float))),
        log_pi=lambda z, d: special.norm_logcdf(d * np.sin(np.asarray(z, dtype=float))),
        psi=lambda z: np.sin(np.asarray(z, dtype=float)) / SQRT2PI,
        psidot=lambda z: np.cos(np.asarray(z, dtype=float)) / SQRT2PI,
        upsilon=lambda z: -np.sin(np.asarray(z, dtype=float)) ** 3 / SQRT2PI,
    )


def odd_poly_skewing(coeffs):
    """Phi(H(delta*z)) for an odd polynomial H(y) = sum_k coeffs[k] y^(2k+1)."""
    coeffs = tuple(float(c) for c in coeffs)
    if not coeffs:
        raise ValueError("need at least the linear coefficient")
    c1 = coeffs[0]
    c3 = coeffs[1] if len(coeffs) > 1 else 0.0

    def h(y):
        acc = np.zeros_like(y)
        y2 = y * y
        p = y
        for c in coeffs:
            acc = acc + c * p
            p = p * y2
        return acc

    return SkewingFunction(
        name=f"normal-cdf-of-odd-poly{coeffs}",
        pi=lambda z, d: special.norm_cdf(h(d * np.asarray(z, dtype=float))),
        log_pi=lambda z, d: special.norm_logcdf(h(d * np.asarray(z, dtype=float))),
        psi=lambda z: c1 * np.asarray(z, dtype=float) / SQRT2PI,
        psidot=lambda z: np.full_like(np.asarray(z, dtype=float), c1 / SQRT2PI),
        upsilon=lambda z: (6.0 * c3 - c1 ** 3) * np.asarray(z, dtype=float) ** 3 / SQRT2PI,
    )


def lifted_skewing():
    """Phi(delta*z - (4-pi)/(6 pi) delta^3 z^3)."""
    return odd_poly_skewing([1.0, -(4.0 - np.pi) / (6.0 * np.pi)])


def sep_skewing(alpha):
    """The exponential-power family's own skewing: Phi(delta*sign(z)|z|^(a/2)*sqrt(2/a))."""
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    root = np.sqrt(2.0 / alpha)

    def w(z):
        z = np.asarray(z, dtype=float)
        return root * np.sign(z) * np.abs(z) ** (alpha / 2.0)

    def wprime(z):
        z = np.asarray(z, dtype=float)
        return root * (alpha / 2.0) * np.abs(z) ** (alpha / 2.0 - 1.0)

    return SkewingFunction(
        name=f"sep({alpha:g})",
        pi=lambda z, d: special.norm_cdf(d * w(z)),
        log_pi=lambda z, d: special.norm_logcdf(d * w(z)),
        psi=lambda z: w(z) / SQRT2PI,
        psidot=lambda z: wprime(z) / SQRT2PI,
        upsilon=lambda z: -w(z) ** 3 / SQRT2PI,
    )


# --- expression-backed components -------------------------------------------

def _numeric_inverse_cdf_sampler(logf, cutoff):
    grid = np.linspace(-cutoff, cutoff, 20001)
    pdf = np.exp(logf(grid))
    cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(grid))])
    cdf /= cdf[-1]
    # Drop flat tail segments so interpolation stays monotone.
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    cdf_k, grid_k = cdf[keep], grid[keep]

    def sampler(rng, n):
        return np.interp(rng.uniform(size=n), cdf_k, grid_k)

    return sampler


def kernel_from_exprs(f_src, score_src, name="custom-kernel", cutoff=50.0):
    """Kernel from expression strings for f(z) and phi_f(z).

    Sampling uses numeric inverse-cdf inversion on a dense grid; fine for
    simulation, not for ulp-level tail accuracy.
    """
    f_ast = f_src if not isinstance(f_src, str) else exprdsl.parse(f_src)
    s_ast = score_src if not isinstance(score_src, str) else exprdsl.parse(score_src)
    for ast, what in ((f_ast, "kernel"), (s_ast, "score")):
        extra = exprdsl.free_variables(ast) - {"z"}
        if extra:
            raise DomainError(f"{what} expression depends on {sorted(extra)}")

    def logf(z):
        val = exprdsl.eval_expr(f_ast, {"z": np.asarray(z, dtype=float)})
        val = np.asarray(val, dtype=float)
        if np.any(val < 0):
            raise DomainError("kernel must be strictly positive")
        # Far-tail underflow to exactly 0.0 is representable, not a domain
        # violation; floor it so logf stays finite-or-(-inf)-free.
        return np.log(np.maximum(val, 1e-320))

    def phi_f(z):
        return np.asarray(exprdsl.eval_expr(s_ast, {"z": np.asarray(z, dtype=float)}),
                          dtype=float)

    return SymmetricKernel(
        name=name, logf=logf, phi_f=phi_f,
        sampler=_numeric_inverse_cdf_sampler(logf, cutoff),
        standardization_note="user expression; standardization not verified",
        tail_cutoff=cutoff,
    )


def skewing_from_exprs(pi_src, psi_src=None, upsilon_src=None,
                       name="custom-skewing"):
    """Skewing function from an expression in (z, delta).

    psi/upsilon fall back to finite differences of Pi when expressions are
    not supplied; psidot is a numeric z-derivative of psi in that case.
    """
    pi_ast = pi_src if not isinstance(pi_src, str) else exprdsl.parse(pi_src)
    extra = exprdsl.free_variables(pi_ast) - {"z", "delta"}
    if extra:
        raise DomainError(f"skewing expression depends on {sorted(extra)}")

    def pi(z, d):
        return np.asarray(
            exprdsl.eval_expr(pi_ast, {"z": np.asarray(z, dtype=float), "delta": d}),
            dtype=float)

    def log_pi(z, d):
        return np.log(np.maximum(pi(z, d), 1e-320))

    analytic = psi_src is not None
    if psi_src is not None:
        psi_ast = psi_src if not isinstance(psi_src, str) else exprdsl.parse(psi_src)

        def psi(z):
            return np.asarray(exprdsl.eval_expr(psi_ast, {"z": np.asarray(z, dtype=float)}),
                              dtype=float)
    else:
        def psi(z):
            return diff_delta(pi, z, 1)

    def psidot(z, _h=1e-5):
        z = np.asarray(z, dtype=float)
        return (psi(z + _h) - psi(z - _h)) / (2.0 * _h)

    if upsilon_src is not None:
        ups_ast = upsilon_src if not isinstance(upsilon_src, str) else exprdsl.parse(upsilon_src)

        def upsilon(z):
            return np.asarray(exprdsl.eval_expr(ups_ast, {"z": np.asarray(z, dtype=float)}),
                              dtype=float)
    else:
        def upsilon(z):
            return diff_delta(pi, z, 3)

    return SkewingFunction(
        name=name, pi=pi, log_pi=log_pi, psi=psi, psidot=psidot,
        upsilon=upsilon,
        derivative_source="analytic" if analytic and upsilon_src else "finite-difference",
    )


# --- registry ---------------------------------------------------------------

def make_family(name, **params):
    """Construct a named builtin family.

    Known names: skew-normal, skew-t (nu), skew-exponential-power (alpha),
    normal-sin, logistic-tanh, skew-normal-logistic, skew-normal-t (nu),
    skew-normal-cauchy, skew-normal-laplace, lifted-skew-normal,
    flexible-gsn (coeffs).
    """
    if name == "skew-normal":
        return SkewSymmetricFamily(normal_kernel(), normal_cdf_skewing(), name)
    if name == "skew-t":
        nu = params.get("nu", 5.0)
        kern = student_t_kernel(nu)
        root = np.sqrt(nu + 1.0)

        def arg(z):
            z = np.asarray(z, dtype=float)
            return z * root / np.sqrt(z * z + nu)

        g0 = special.student_t_pdf_at_zero(nu + 1.0)
        gdd0 = -g0 * (nu + 2.0) / (nu + 1.0)
        skew = SkewingFunction(
            name=f"student-t-cdf({nu + 1:g})-of-edge",
            pi=lambda z, d: special.student_t_cdf(d * arg(z), nu + 1.0),
            log_pi=lambda z, d: special.student_t_logcdf(d * arg(z), nu + 1.0),
            psi=lambda z: g0 * arg(z),
            psidot=lambda z: g0 * root * nu / (np.asarray(z, dtype=float) ** 2 + nu) ** 1.5,
            upsilon=lambda z: gdd0 * arg(z) ** 3,
        )
        return SkewSymmetricFamily(kern, skew, f"{name}({nu:g})")
    if name == "skew-exponential-power":
        alpha = params.get("alpha", 1.5)
        return SkewSymmetricFamily(exponential_power_kernel(alpha),
                                   sep_skewing(alpha), f"{name}({alpha:g})")
    if name == "normal-sin":
        return SkewSymmetricFamily(normal_kernel(), sin_skewing(), name)
    if name == "logistic-tanh":
        kern = logistic_kernel()
        skew = score_matched_skewing(
            kern, phi_f_prime=lambda z: (1.0 - np.tanh(np.asarray(z, dtype=float) / 2.0) ** 2) / 2.0)
        return SkewSymmetricFamily(kern, skew, name)
    if name == "skew-normal-logistic":
        return SkewSymmetricFamily(normal_kernel(), logistic_cdf_skewing(), name)
    if name == "skew-normal-t":
        nu = params.get("nu", 3.0)
        return SkewSymmetricFamily(normal_kernel(), student_t_cdf_skewing(nu),
                                   f"{name}({nu:g})")
    if name == "skew-normal-cauchy":
        return SkewSymmetricFamily(normal_kernel(), cauchy_cdf_skewing(), name)
    if name == "skew-normal-laplace":
        return SkewSymmetricFamily(normal_kernel(), laplace_cdf_skewing(), name)
    if name == "lifted-skew-normal":
        return SkewSymmetricFamily(normal_kernel(), lifted_skewing(), name)
    if name == "flexible-gsn":
        coeffs = params.get("coeffs", [1.0, -(4.0 - np.pi) / (6.0 * np.pi), 0.05])
        return SkewSymmetricFamily(normal_kernel(), odd_poly_skewing(coeffs), name)
    raise KeyError(f"unknown builtin family {name!r}")


FAMILY_NAMES = (
    "skew-normal", "skew-t", "skew-exponential-power", "normal-sin",
    "logistic-tanh", "skew-normal-logistic", "skew-normal-t",
    "skew-normal-cauchy", "skew-normal-laplace", "lifted-skew-normal",
    "flexible-gsn",
)

_KERNEL_BUILTINS = {
    "normal": normal_kernel,
    "logistic": logistic_kernel,
    "student-t": student_t_kernel,
    "exponential-power": exponential_power_kernel,
}

_SKEWING_BUILTINS = {
    "normal-cdf": normal_cdf_skewing,
    "logistic-cdf": logistic_cdf_skewing,
    "student-t-cdf": student_t_cdf_skewing,
    "cauchy-cdf": cauchy_cdf_skewing,
    "laplace-cdf": laplace_cdf_skewing,
    "sin": sin_skewing,
    "lifted": lifted_skewing,
    "odd-poly": odd_poly_skewing,
    "sep": sep_skewing,
}


def registry_families():
    """The classification fixtures exercised by the regression suite."""
    return [
        make_family("skew-exponential-power", alpha=1.5),
        make_family("skew-t", nu=5.0),
        make_family("normal-sin"),
        make_family("logistic-tanh"),
        make_family("skew-normal"),
        make_family("skew-normal-t", nu=3.0),
        make_family("skew-normal-cauchy"),
        make_family("skew-normal-logistic"),
        make_family("lifted-skew-normal"),
    ]


# --- validation --------------------------------------------------------------

DEFAULT_GRID = np.linspace(-8.0, 8.0, 201)
_DELTA_GRID = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])


@dataclass(frozen=True)
class ValidationReport:
    name: str
    violations: tuple  # of (check, max_violation)
    passed: bool

    def worst(self):
        return max(v for _, v in self.violations)


def validate_skewing(skewing, grid=None, tol=1e-6):
    """Check the skewing-function axioms on a grid x delta-grid.

    Reports the max violation of antisymmetry, Pi(.,0)=1/2, the vanishing
    second delta-derivative, oddness of psi, and the [0,1] range.
    """
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    anti = half = rng = 0.0
    for d in _DELTA_GRID:
        p_pos = skewing.pi(grid, d)
        p_neg = skewing.pi(-grid, d)
        anti = max(anti, float(np.max(np.abs(p_pos + p_neg - 1.0))))
        rng = max(rng, float(np.max(np.maximum(p_pos - 1.0, -p_pos))))
    half = float(np.max(np.abs(skewing.pi(grid, 0.0) - 0.5)))
    second = float(np.max(np.abs(diff_delta(skewing.pi, grid, 2))))
    psi_vals = skewing.psi(grid)
    psi_odd = float(np.max(np.abs(psi_vals + skewing.psi(-grid))))
    checks = (
        ("antisymmetry", anti),
        ("half_at_zero", half),
        ("second_delta_derivative", second),
        ("psi_odd", psi_odd),
        ("range", rng),
    )
    return ValidationReport(skewing.name, checks, all(v < tol for _, v in checks))


def validate_kernel(kernel, grid=None, tol=1e-6, spec=DEFAULT_QUADRATURE):
    """Check kernel axioms: positivity, symmetry, normalization, odd score."""
    grid = DEFAULT_GRID if grid is None else np.asarray(grid, dtype=float)
    f_pos = kernel.f(grid)
    positivity = float(np.max(np.maximum(-f_pos, 0.0)))
    if np.any(f_pos <= 0):
        positivity = np.inf
    symmetry = float(np.max(np.abs(f_pos - kernel.f(-grid))))
    if kernel.tail_cutoff > spec.tail_cutoff:
        spec = QuadratureSpec(spec.abs_tol, spec.rel_tol, spec.max_subdivisions,
                              kernel.tail_cutoff)
    normalization = abs(integrate(kernel.f, spec) - 1.0)
    score_odd = float(np.max(np.abs(kernel.phi_f(grid) + kernel.phi_f(-grid))))
    checks = (
        ("positivity", positivity),
        ("symmetry", symmetry),
        ("normalization", normalization),
        ("score_odd", score_odd),
    )
    return ValidationReport(kernel.name, checks, all(v < tol for _, v in checks))


# --- family-spec files -------------------------------------------------------

def load_family_spec(doc):
    """Build a family from a spec document (dict, JSON text, or file path).

    Schema: {"name", "kernel": {"builtin", "params"} | {"expr", "score_expr"},
    "skewing": {"builtin", "params"} | {"expr"}, optional "psi_expr",
    "upsilon_expr", optional "constants": {"a", "alpha1"}}.
    Returns (family, constants_override_dict).
    """
    if isinstance(doc, (str, bytes)) and "{" not in str(doc):
        with open(doc, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    elif isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if not isinstance(doc, dict):
        raise ValueError("family spec must be a JSON object")

    name = doc.get("name", "custom")
    kdoc = doc.get("kernel")
    sdoc = doc.get("skewing")
    if kdoc is None or sdoc is None:
        raise ValueError("family spec needs 'kernel' and 'skewing'")

    if "builtin" in kdoc:
        key = kdoc["builtin"]
        if key not in _KERNEL_BUILTINS:
            raise KeyError(f"unknown builtin kernel {key!r}")
        kernel = _KERNEL_BUILTINS[key](**kdoc.get("params", {}))
    else:
        kernel = kernel_from_exprs(kdoc["expr"], kdoc["score_expr"],
                                   name=f"{name}-kernel")

    if "builtin" in sdoc:
        key = sdoc["builtin"]
        if key == "kernel-score":
            skewing = score_matched_skewing(kernel)
        elif key in _SKEWING_BUILTINS:
            skewing = _SKEWING_BUILTINS[key](**sdoc.get("params", {}))
        else:
            raise KeyError(f"unknown builtin skewing {key!r}")
    elif "builtin" not in sdoc and sdoc.get("expr") is None:
        raise ValueError("skewing spec needs 'builtin' or 'expr'")
    else:
        skewing = skewing_from_exprs(sdoc["expr"], doc.get("psi_expr"),
                                     doc.get("upsilon_expr"),
                                     name=f"{name}-skewing")

    constants = doc.get("constants", {})
    return SkewSymmetricFamily(kernel, skewing, name), constants
