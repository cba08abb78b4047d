"""Shared numerical kernels.

Adaptive Gauss-Kronrod quadrature over the (truncated) real line, central
finite differences in the skewness direction, closed-form symmetric 3x3
eigenanalysis, a box-constrained Nelder-Mead minimizer that can run many
independent problems in lockstep, and reproducible RNG streams.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MaxIterations, NonFinite, ToleranceNotMet

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK values).
_GK_NODES = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000,
])
_GK_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_GK_WG = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277,
    0.0, 0.381830050505119, 0.0, 0.417959183673469,
])

_NODES = np.concatenate([-_GK_NODES[:-1], _GK_NODES[::-1]])
_WK = np.concatenate([_GK_WK[:-1], _GK_WK[::-1]])
_WG = np.concatenate([_GK_WG[:-1], _GK_WG[::-1]])


@dataclass(frozen=True)
class QuadratureSpec:
    """Targets for integrate(); tail_cutoff truncates the real line to [-T, T]."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 512
    tail_cutoff: float = 50.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.tail_cutoff > 0):
            raise ValueError("tolerances and tail_cutoff must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def _gk_panel(g, a, b):
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _NODES
    y = np.asarray(g(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    if not np.all(np.isfinite(y)):
        raise NonFinite(f"integrand not finite on [{a}, {b}]")
    k = half * float(np.dot(_WK, y))
    gq = half * float(np.dot(_WG, y))
    return k, abs(k - gq)


def integrate(g, spec=DEFAULT_QUADRATURE):
    """Integrate a vectorized callable g over [-T, T] adaptively.

    Returns the Kronrod estimate once the summed panel error drops below
    max(abs_tol, rel_tol * |result|).  Raises NonFinite if g produces
    NaN/inf, ToleranceNotMet if the subdivision budget is exhausted.
    """
    t = spec.tail_cutoff
    panels = []
    # Seed with a handful of panels so a peaked center cannot fool the
    # first error estimate on one huge interval.
    edges = np.array([-t, -t / 4, -1.0, 0.0, 1.0, t / 4, t])
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = _gk_panel(g, a, b)
        panels.append((err, a, b, val))
    while True:
        total = sum(p[3] for p in panels)
        err = sum(p[0] for p in panels)
        if err <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            return total
        if len(panels) >= spec.max_subdivisions:
            raise ToleranceNotMet(
                f"error {err:.3e} above tolerance after {len(panels)} panels")
        worst = max(range(len(panels)), key=lambda i: panels[i][0])
        _, a, b, _ = panels.pop(worst)
        m = 0.5 * (a + b)
        for lo, hi in ((a, m), (m, b)):
            val, perr = _gk_panel(g, lo, hi)
            panels.append((perr, lo, hi, val))


_DIFF_DEFAULT_STEP = {1: 1e-5, 2: 1e-3, 3: 1e-2}


def diff_delta(pi, z, order, step=None):
    """Central finite-difference d^order/d delta^order of Pi(z, delta) at delta=0.

    One Richardson extrapolation step is applied on top of the base stencil;
    the third-order stencil uses five points and exploits the fact that
    Pi(z, .) - 1/2 is odd through second order in delta.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    h = _DIFF_DEFAULT_STEP[order] if step is None else float(step)
    if h <= 0:
        raise ValueError("step must be positive")
    z = np.asarray(z, dtype=float)

    def stencil(hh):
        if order == 1:
            return (pi(z, hh) - pi(z, -hh)) / (2.0 * hh)
        if order == 2:
            return (pi(z, hh) - 2.0 * pi(z, 0.0) + pi(z, -hh)) / (hh * hh)
        return (pi(z, 2 * hh) - 2.0 * pi(z, hh) + 2.0 * pi(z, -hh)
                - pi(z, -2 * hh)) / (2.0 * hh ** 3)

    d1 = np.asarray(stencil(h), dtype=float)
    d2 = np.asarray(stencil(h / 2.0), dtype=float)
    if not (np.all(np.isfinite(d1)) and np.all(np.isfinite(d2))):
        raise NonFinite("finite-difference stencil produced NaN/inf")
    # Every base stencil above has an O(h^2) leading error term.
    return (4.0 * d2 - d1) / 3.0


@dataclass(frozen=True)
class Sym3:
    """Upper triangle of a symmetric 3x3 matrix."""

    a11: float
    a12: float
    a13: float
    a22: float
    a23: float
    a33: float

    def __post_init__(self):
        for name in ("a11", "a12", "a13", "a22", "a23", "a33"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"entry {name} is not finite")

    def to_matrix(self):
        return np.array([
            [self.a11, self.a12, self.a13],
            [self.a12, self.a22, self.a23],
            [self.a13, self.a23, self.a33],
        ])

    @staticmethod
    def from_matrix(m):
        m = np.asarray(m, dtype=float)
        return Sym3(m[0, 0], m[0, 1], m[0, 2], m[1, 1], m[1, 2], m[2, 2])


@dataclass(frozen=True)
class RankReport:
    eigenvalues: tuple
    numeric_rank: int
    rank_tol: float


def _charpoly_eigvals(m):
    # Trigonometric solution of the characteristic cubic; exact for the
    # diagonal case, stable because the matrix is symmetric.
    p1 = m[0, 1] ** 2 + m[0, 2] ** 2 + m[1, 2] ** 2
    q = np.trace(m) / 3.0
    if p1 == 0.0:
        return np.sort(np.diag(m).copy())
    p2 = ((m[0, 0] - q) ** 2 + (m[1, 1] - q) ** 2 + (m[2, 2] - q) ** 2
          + 2.0 * p1)
    p = np.sqrt(p2 / 6.0)
    b = (m - q * np.eye(3)) / p
    r = np.linalg.det(b) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = np.arccos(r) / 3.0
    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return np.sort([e1, e2, e3])


def _refine_eigvals(m, lams):
    # One guarded Newton step on det(m - lam I) per root.
    c2 = -np.trace(m)
    c1 = (m[0, 0] * m[1, 1] + m[0, 0] * m[2, 2] + m[1, 1] * m[2, 2]
          - m[0, 1] ** 2 - m[0, 2] ** 2 - m[1, 2] ** 2)
    c0 = -np.linalg.det(m)
    out = []
    for lam in lams:
        p = ((lam + c2) * lam + c1) * lam + c0
        dp = (3.0 * lam + 2.0 * c2) * lam + c1
        if abs(dp) > 1e3 * abs(p):
            lam = lam - p / dp
        out.append(lam)
    return np.sort(out)


def sym3_eigvals(s):
    """Eigenvalues (ascending) of a Sym3, closed form plus one refinement."""
    m = s.to_matrix() if isinstance(s, Sym3) else np.asarray(s, dtype=float)
    return _refine_eigvals(m, _charpoly_eigvals(m))


def rank3(m, rank_tol=1e-7):
    """Numeric rank of a symmetric 3x3 matrix, relative eigenvalue threshold."""
    lams = sym3_eigvals(m)
    scale = np.max(np.abs(lams))
    rank = int(np.sum(np.abs(lams) > rank_tol * scale)) if scale > 0 else 0
    return RankReport(tuple(float(v) for v in lams), rank, rank_tol)


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic, splittable RNG address: (master_seed, stream_index)."""

    master_seed: int
    stream_index: int = 0


def make_rng(seed):
    """Generator for a SeedSpec; distinct stream_index gives independent streams."""
    ss = np.random.SeedSequence(seed.master_seed, spawn_key=(seed.stream_index,))
    return np.random.Generator(np.random.PCG64(ss))


# --- Nelder-Mead with box projection -------------------------------------

_NM_RHO, _NM_CHI, _NM_PSI, _NM_SIGMA = 1.0, 2.0, 0.5, 0.5


def _clip_box(x, lo, hi):
    return np.clip(x, lo, hi)


def nelder_mead_batch(fn, x0, lo=None, hi=None, *, xatol=1e-7, fatol=1e-12,
                      frtol=1e-12, max_iter=None):
    """Run one Nelder-Mead search per row of x0, in lockstep.

    fn(points, rows) must return one objective value per row of `points`;
    `rows` maps each point to its problem index so data-dependent objectives
    can select the right dataset.  Candidate points are projected onto the
    box [lo, hi] before evaluation.

    Returns (x_best, f_best, converged, iterations).
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    n_prob, dim = x0.shape
    lo = np.full(dim, -np.inf) if lo is None else np.asarray(lo, dtype=float)
    hi = np.full(dim, np.inf) if hi is None else np.asarray(hi, dtype=float)
    if max_iter is None:
        max_iter = 250 * dim

    base = _clip_box(x0, lo, hi)
    sim = np.repeat(base[:, None, :], dim + 1, axis=1)
    for i in range(dim):
        step = np.where(np.abs(base[:, i]) > 1e-12,
                        0.05 * np.abs(base[:, i]), 2.5e-4)
        bumped = _clip_box(base[:, i] + step, lo[i], hi[i])
        # If the bump dies on the upper boundary, step inward instead.
        stuck = np.abs(bumped - base[:, i]) < 1e-15
        bumped = np.where(stuck, _clip_box(base[:, i] - step, lo[i], hi[i]), bumped)
        sim[:, i + 1, i] = bumped

    rows0 = np.repeat(np.arange(n_prob), dim + 1)
    fsim = fn(sim.reshape(-1, dim), rows0).reshape(n_prob, dim + 1)
    fsim = np.where(np.isnan(fsim), np.inf, fsim)

    active = np.ones(n_prob, dtype=bool)
    iters = 0

    def evaluate(points, rows):
        vals = np.asarray(fn(points, rows), dtype=float)
        return np.where(np.isnan(vals), np.inf, vals)

    while iters < max_iter and np.any(active):
        iters += 1
        idx = np.nonzero(active)[0]
        order = np.argsort(fsim[idx], axis=1)
        sim[idx] = np.take_along_axis(sim[idx], order[:, :, None], axis=1)
        fsim[idx] = np.take_along_axis(fsim[idx], order, axis=1)

        spread_x = np.max(np.abs(sim[idx, 1:, :] - sim[idx, :1, :]), axis=(1, 2))
        spread_f = fsim[idx, -1] - fsim[idx, 0]
        tol_f = np.maximum(fatol, frtol * np.abs(fsim[idx, 0]))
        done = (spread_x <= xatol) & (spread_f <= tol_f)
        active[idx[done]] = False
        idx = idx[~done]
        if idx.size == 0:
            break

        centroid = np.mean(sim[idx, :dim, :], axis=1)
        worst = sim[idx, dim, :]
        xr = _clip_box(centroid + _NM_RHO * (centroid - worst), lo, hi)
        fr = evaluate(xr, idx)

        f0 = fsim[idx, 0]
        fsw = fsim[idx, dim - 1]
        fw = fsim[idx, dim]

        expand = fr < f0
        if np.any(expand):
            sub = np.nonzero(expand)[0]
            xe = _clip_box(centroid[sub] + _NM_RHO * _NM_CHI
                           * (centroid[sub] - worst[sub]), lo, hi)
            fe = evaluate(xe, idx[sub])
            better = fe < fr[sub]
            xr[sub[better]] = xe[better]
            fr[sub[better]] = fe[better]
        accept = fr < fsw
        sim[idx[accept], dim, :] = xr[accept]
        fsim[idx[accept], dim] = fr[accept]

        rest = np.nonzero(~accept)[0]
        if rest.size:
            shrink = np.zeros(rest.size, dtype=bool)
            outside = fr[rest] < fw[rest]
            sub_o = rest[outside]
            if sub_o.size:
                xc = _clip_box(centroid[sub_o] + _NM_PSI * _NM_RHO
                               * (centroid[sub_o] - worst[sub_o]), lo, hi)
                fc = evaluate(xc, idx[sub_o])
                good = fc <= fr[sub_o]
                sim[idx[sub_o[good]], dim, :] = xc[good]
                fsim[idx[sub_o[good]], dim] = fc[good]
                shrink[outside] = ~good
            sub_i = rest[~outside]
            if sub_i.size:
                xcc = _clip_box((1.0 - _NM_PSI) * centroid[sub_i]
                                + _NM_PSI * worst[sub_i], lo, hi)
                fcc = evaluate(xcc, idx[sub_i])
                good = fcc < fw[sub_i]
                sim[idx[sub_i[good]], dim, :] = xcc[good]
                fsim[idx[sub_i[good]], dim] = fcc[good]
                shrink[~outside] = ~good
            sub_s = rest[shrink]
            if sub_s.size:
                rows = idx[sub_s]
                best = sim[rows, :1, :]
                sim[rows, 1:, :] = _clip_box(
                    best + _NM_SIGMA * (sim[rows, 1:, :] - best), lo, hi)
                pts = sim[rows, 1:, :].reshape(-1, dim)
                rep = np.repeat(rows, dim)
                fsim[rows, 1:] = evaluate(pts, rep).reshape(-1, dim)

    order = np.argsort(fsim, axis=1)
    sim = np.take_along_axis(sim, order[:, :, None], axis=1)
    fsim = np.take_along_axis(fsim, order, axis=1)
    return sim[:, 0, :], fsim[:, 0], ~active, iters


def minimize(objective, init, bounds=None, restarts=1, seed=None, *,
             xatol=1e-7, max_iter=None):
    """Derivative-free local minimization with box projection.

    `bounds` is a sequence of (lo, hi) pairs (None for unbounded);
    `restarts` counts total starts — the first is `init`, later ones are
    deterministic perturbations drawn from `seed` (a SeedSpec).
    Returns (argmin, value); raises MaxIterations if no start converged.
    """
    init = np.asarray(init, dtype=float)
    dim = init.size
    if bounds is None:
        lo = np.full(dim, -np.inf)
        hi = np.full(dim, np.inf)
    else:
        lo = np.array([-np.inf if b[0] is None else float(b[0]) for b in bounds])
        hi = np.array([np.inf if b[1] is None else float(b[1]) for b in bounds])
    f0 = float(objective(init))
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at init")

    n_starts = max(1, int(restarts))
    starts = np.repeat(init[None, :], n_starts, axis=0)
    if n_starts > 1:
        rng = make_rng(seed if seed is not None else SeedSpec(0, 0))
        scale = np.maximum(1.0, np.abs(init)) * 0.5
        starts[1:] += rng.uniform(-1.0, 1.0, size=(n_starts - 1, dim)) * scale
        starts = np.clip(starts, lo, hi)

    def fn(points, rows):
        return np.array([objective(p) for p in points], dtype=float)

    x, f, conv, _ = nelder_mead_batch(fn, starts, lo, hi, xatol=xatol,
                                      max_iter=max_iter)
    if not np.any(conv):
        raise MaxIterations("no Nelder-Mead start converged")
    f = np.where(conv, f, np.inf)
    best = int(np.argmin(f))
    return x[best], float(f[best])
