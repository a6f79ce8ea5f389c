"""Empirical measurement of the quantitative estimates.

Each diagnostic samples a solution source (closed-form family or computed
trajectory), measures the two sides of an estimate, reports the implied
constant and a verdict:

    "bounded"      the implied constants stay uniformly bounded over probes
    "diverging"    a monotone exceedance sequence over >= 4 probe scales
    "inconclusive" neither (or the probe set is degenerate)

The paper-side constants (gamma, eta, alpha_o, ...) are non-explicit, so all
checks are stability/boundedness checks, never comparisons to printed numbers.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .core import ExponentTriple
from .exact import ClosedFormSolution
from .solver import Trajectory, slice_functionals, gradient_p_norm


class RegimeError(ValueError):
    """Exponents outside the regime required by an estimate."""


def thread_count():
    """Parallelism cap for probe sweeps (env var DNL_LAB_THREADS, default 1)."""
    try:
        return max(1, int(os.environ.get("DNL_LAB_THREADS", "1")))
    except ValueError:
        return 1


def map_probes(fn, items):
    """Deterministic map over independent probes, optionally threaded."""
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


@dataclass
class DiagnosticReport:
    estimate_id: str
    probes: list = dc_field(default_factory=list)  # one dict per probe
    lhs: list = dc_field(default_factory=list)
    rhs: list = dc_field(default_factory=list)
    implied_constant: float = 0.0
    verdict: str = "inconclusive"
    notes: str = ""

    def summary_line(self):
        return f"{self.estimate_id},{self.verdict},{self.implied_constant!r}"

    def csv_rows(self):
        """One row per probe: probe params, lhs, rhs, implied constant."""
        rows = []
        for pr, l, r in zip(self.probes, self.lhs, self.rhs):
            entry = dict(pr)
            entry["lhs"] = l
            entry["rhs"] = r
            entry["implied"] = l / r if r not in (0.0, None) else math.inf
            rows.append(entry)
        return rows


class SolutionSource:
    """Uniform eval/grad/validity view over a closed-form family or a
    trajectory (with bilinear interpolation in space-time; trajectory-backed
    gradients are one-sided at the boundary and O(h) accurate)."""

    def __init__(self, backing, exponents=None):
        self.backing = backing
        if isinstance(backing, ClosedFormSolution):
            self.kind = "closed_form"
            self.exponents = backing.exponents
        elif isinstance(backing, Trajectory):
            self.kind = "trajectory"
            self.exponents = backing.problem.exponents
            self._xs = backing.problem.grid.centers()
            self._ts = np.asarray(backing.times)
            self._U = np.vstack(backing.fields)  # (n_times, n_cells)
            self._dU = np.gradient(self._U, backing.problem.grid.h, axis=1)
        else:
            raise TypeError("source must be a ClosedFormSolution or Trajectory")
        if exponents is not None:
            self.exponents = exponents

    def _coord(self, x):
        """Scalar grid coordinate: signed on cartesian grids, |x| on radial."""
        x = np.atleast_1d(x)
        if self.backing.problem.grid.geometry == "radial":
            return float(np.linalg.norm(x))
        return float(x[0])

    # -- trajectory interpolation ------------------------------------------
    def _interp(self, table, x, t):
        xs, ts = self._xs, self._ts
        x = self._coord(x)
        i = np.searchsorted(ts, t)
        i = min(max(i, 1), ts.size - 1)
        wt = (t - ts[i - 1]) / (ts[i] - ts[i - 1])
        wt = min(max(wt, 0.0), 1.0)
        row = (1 - wt) * table[i - 1] + wt * table[i]
        return float(np.interp(x, xs, row))

    def eval(self, x, t):
        if self.kind == "closed_form":
            return self.backing.eval(np.atleast_1d(x), t)
        return self._interp(self._U, x, t)

    def grad_norm(self, x, t):
        if self.kind == "closed_form":
            return float(np.linalg.norm(self.backing.grad(np.atleast_1d(x), t)))
        return abs(self._interp(self._dU, x, t))

    def valid(self, x, t):
        if self.kind == "closed_form":
            r = float(np.linalg.norm(np.atleast_1d(x)))
            return bool(np.all(self.backing.valid_rt(np.asarray(r), np.asarray(t))))
        g = self.backing.problem.grid
        ts = self._ts
        r = self._coord(x)
        # domain bounds, not cell-center bounds: interpolation clamps to the
        # edge cell over the half-cell collar, an O(h) extension
        lo = 0.0 if g.geometry == "radial" else g.x_lo
        return lo <= r <= g.x_hi and ts[0] <= t <= ts[-1]


def _monotone_exceedance(values, factor=2.0, scales=4):
    """True iff the last `scales` values form a strictly increasing run and
    the overall spread exceeds `factor` (guards against noise-triggered
    divergence verdicts)."""
    v = np.asarray(values, dtype=float)
    if v.size < scales:
        return False
    runs = 1
    best = 1
    for i in range(1, v.size):
        runs = runs + 1 if v[i] > v[i - 1] else 1
        best = max(best, runs)
    return best >= scales and v.max() / max(v.min(), 1e-300) > factor


def _cyl_lattice(src, x_o, t_o, rho, half_time, n=32):
    """Sup/inf of u over the symmetric cylinder lattice (n x n points)."""
    e = src.exponents
    xs = np.linspace(x_o - rho, x_o + rho, n)
    ts = np.linspace(t_o - half_time, t_o + half_time, n) if half_time > 0 else [t_o]
    vals = []
    for t in ts:
        for x in xs:
            if src.valid([x], t):
                vals.append(src.eval([x], t))
    if not vals:
        raise RegimeError("cylinder lattice has no valid points")
    return max(vals), min(vals)


def harnack_scan(src, base_points, radii, sigma=0.25, lattice=32):
    """Backward-forward Harnack scan: per probe (z_o, rho), measure
    gamma_emp = max(sup u / u_o, u_o / inf u) over the symmetric intrinsic
    cylinder K_rho(x_o) x (t_o +- sigma u_o^{q+1-p} rho^p).

    sigma = 0 collapses the cylinder to the single time slice t_o (used for
    the Trudinger closed-form ratio probes).  Verdict: bounded iff gamma_emp
    varies by less than a factor 2 across all probes/radii; diverging on a
    monotone exceedance sequence over >= 4 scales."""
    if not 0 <= sigma < 1:
        raise ValueError("sigma must be in [0, 1)")
    e = src.exponents
    probes = [(x_o, t_o, rho) for (x_o, t_o) in base_points for rho in radii]

    def one(probe):
        x_o, t_o, rho = probe
        u_o = src.eval([x_o], t_o)
        if u_o <= 0:
            raise RegimeError(f"u(x_o,t_o) <= 0 at probe {probe}")
        half = sigma * u_o ** (e.q + 1 - e.p) * rho**e.p
        sup_u, inf_u = _cyl_lattice(src, x_o, t_o, rho, half, lattice)
        if inf_u <= 0:
            return math.inf, u_o
        return max(sup_u / u_o, u_o / inf_u), u_o

    results = map_probes(one, probes)
    gammas = [g for g, _ in results]
    rep = DiagnosticReport(estimate_id="harnack")
    for (x_o, t_o, rho), (g, u_o) in zip(probes, results):
        rep.probes.append(
            {"x_o": x_o, "t_o": t_o, "rho": rho, "sigma": sigma, "u_o": u_o}
        )
        rep.lhs.append(g)
        rep.rhs.append(1.0)
    finite = [g for g in gammas if math.isfinite(g)]
    rep.implied_constant = max(finite) if finite else math.inf
    if finite and max(finite) / min(finite) < 2.0 and len(finite) == len(gammas):
        rep.verdict = "bounded"
    elif _monotone_exceedance(gammas):
        rep.verdict = "diverging"
    else:
        rep.verdict = "inconclusive"
    rep.notes = f"gamma_emp spread {max(gammas) / min(gammas):.6g}" if gammas else ""
    return rep


def integral_harnack(src, x_o, t_o, rho, s, lattice=32):
    """Integral Harnack measurement on Q_{rho,s} = K_rho(x_o) x (t_o-s, t_o]:

        sup_{Q_{rho/2,s/2}} u  vs
        (rho^p/s)^{N/lam_q} [inf_t avg_{K_rho} u^q dx]^{p/lam_q}
        + (s/rho^p)^{1/(q+1-p)}

    Requires lam_q > 0 (supercritical regime).  Returns the report with the
    implied gamma solving the inequality with equality."""
    e = src.exponents
    lam_q = e.lam_q
    if e.q + 1 - e.p <= 0:
        raise RegimeError("integral Harnack requires fast diffusion q > p - 1")
    if lam_q <= 0:
        raise RegimeError(
            f"integral Harnack requires lambda_q > 0, got {lam_q}"
        )
    N, p, q = e.n_dim, e.p, e.q
    sup_u, _ = _cyl_lattice(src, x_o, t_o, rho / 2, 0.0, lattice)
    for t in np.linspace(t_o - s / 2, t_o, lattice):
        m, _ = _cyl_lattice(src, x_o, t, rho / 2, 0.0, lattice)
        sup_u = max(sup_u, m)
    # slice means of u^q over K_rho
    xs = np.linspace(x_o - rho, x_o + rho, lattice)
    slice_means = []
    for t in np.linspace(t_o - s, t_o, lattice):
        vals = [src.eval([x], t) ** q for x in xs if src.valid([x], t)]
        if vals:
            slice_means.append(float(np.mean(vals)))
    if not slice_means:
        raise RegimeError("no valid slices in the cylinder")
    inf_mean = min(slice_means)
    core = (rho**p / s) ** (N / lam_q) * inf_mean ** (p / lam_q)
    tail = (s / rho**p) ** (1 / (q + 1 - p))
    rhs = core + tail
    rep = DiagnosticReport(estimate_id="integral_harnack")
    rep.probes.append({"x_o": x_o, "t_o": t_o, "rho": rho, "s": s})
    rep.lhs.append(sup_u)
    rep.rhs.append(rhs)
    rep.implied_constant = sup_u / rhs
    rep.verdict = "bounded" if math.isfinite(rep.implied_constant) else "diverging"
    return rep


def sup_bound(src, x_o, t_o, rho, s, r, lattice=32):
    """Quantitative L^inf bound measurement with integrability exponent r:

        sup_{Q_{rho/2,s/2}} u  vs
        (rho^p/s)^{N/lam_r} [avg_{Q_{rho,s}} u^r]^{p/lam_r}
        + (s/rho^p)^{1/(q+1-p)}

    Requires lam_r > 0."""
    e = src.exponents
    lam_r = e.lambda_r(r)
    if e.q + 1 - e.p <= 0:
        raise RegimeError("sup bound requires fast diffusion q > p - 1")
    if lam_r <= 0:
        raise RegimeError(f"sup bound requires lambda_r > 0, got {lam_r}")
    N, p, q = e.n_dim, e.p, e.q
    sup_u = -math.inf
    for t in np.linspace(t_o - s / 2, t_o, lattice):
        m, _ = _cyl_lattice(src, x_o, t, rho / 2, 0.0, lattice)
        sup_u = max(sup_u, m)
    xs = np.linspace(x_o - rho, x_o + rho, lattice)
    vals = []
    for t in np.linspace(t_o - s, t_o, lattice):
        for x in xs:
            if src.valid([x], t):
                vals.append(src.eval([x], t) ** r)
    mean_ur = float(np.mean(vals))
    core = (rho**p / s) ** (N / lam_r) * mean_ur ** (p / lam_r)
    tail = (s / rho**p) ** (1 / (q + 1 - p))
    rhs = core + tail
    rep = DiagnosticReport(estimate_id="sup_bound")
    rep.probes.append({"x_o": x_o, "t_o": t_o, "rho": rho, "s": s, "r": r})
    rep.lhs.append(sup_u)
    rep.rhs.append(rhs)
    rep.implied_constant = sup_u / rhs
    rep.verdict = "bounded" if math.isfinite(rep.implied_constant) else "diverging"
    return rep


def expansion_of_positivity(src, x_o, t_o, rho, M, alpha, delta_scan=10, lattice=64):
    """Expansion of positivity: given measure-theoretic positivity
    |{u(.,t_o) >= M} cap K_rho| >= alpha |K_rho|, scan delta in {2^-k} and
    report the largest measured eta(delta) = inf u / M over
    K_{2 rho}(x_o) x (t_o + delta/2 theta, t_o + delta theta],
    theta = M^{q+1-p} rho^p."""
    e = src.exponents
    xs = np.linspace(x_o - rho, x_o + rho, lattice)
    vals0 = np.array([src.eval([x], t_o) for x in xs if src.valid([x], t_o)])
    if vals0.size == 0:
        raise RegimeError("initial slice outside the domain")
    frac = float(np.mean(vals0 >= M))
    if frac < alpha:
        raise RegimeError(
            f"measure hypothesis fails: |u >= M| fraction {frac:.3f} < alpha={alpha}"
        )
    theta = M ** (e.q + 1 - e.p) * rho**e.p
    rep = DiagnosticReport(estimate_id="expansion_of_positivity")
    best_eta, best_delta = 0.0, None
    for k in range(delta_scan):
        delta = 2.0**-k
        t_lo, t_hi = t_o + delta / 2 * theta, t_o + delta * theta
        xs2 = np.linspace(x_o - 2 * rho, x_o + 2 * rho, lattice)
        inf_u = math.inf
        usable = True
        for t in np.linspace(t_lo, t_hi, 8):
            for x in xs2:
                if not src.valid([x], t):
                    usable = False
                    break
                inf_u = min(inf_u, src.eval([x], t))
            if not usable:
                break
        if not usable:
            continue
        eta = inf_u / M
        rep.probes.append({"delta": delta, "t_lo": t_lo, "t_hi": t_hi})
        rep.lhs.append(eta)
        rep.rhs.append(1.0)
        if eta > best_eta:
            best_eta, best_delta = eta, delta
    rep.implied_constant = best_eta
    rep.verdict = "bounded" if best_eta > 0 else "inconclusive"
    rep.notes = f"best eta={best_eta:.6g} at delta={best_delta}"
    return rep


def extinction_analysis(traj, x_probes=(), extinct_tol=1e-8, skip_fraction=1e-3):
    """Extinction diagnostics on a zero-boundary fast-diffusion run:

    (i)   numerical extinction time T_num (first time max u < extinct_tol);
    (ii)  energy comparison v(t) = ||u||_{q+1}^{q+1} <= w(t), with w the
          explicit ODE solution built from the discrete Rayleigh-quotient
          constant mu = (q+1)/q min_t ||Du||_p^p / ||u||_{q+1}^p;
    (iii) implied constants of the decay estimates
          u(x_o,t_o) <= gamma [(T-t_o)/d^p]^{1/(q+1-p)} (and its gradient
          form) at the probe points, for t_o in (T/2, T)."""
    e = traj.problem.exponents
    p, q = e.p, e.q
    if q + 1 - p <= 0:
        raise RegimeError("extinction analysis requires q + 1 > p")
    if traj.problem.boundary != "zero_dirichlet":
        raise RegimeError("extinction analysis requires zero Dirichlet boundary")
    fn = slice_functionals(traj)
    times, v = fn["t"], fn["int_uq1"]
    sup_u = fn["sup_u"]
    rep = DiagnosticReport(estimate_id="extinction")
    # (i) numerical extinction time
    extinct = np.nonzero(sup_u < extinct_tol)[0]
    if extinct.size == 0:
        rep.verdict = "inconclusive"
        rep.notes = "no extinction before t_end"
        return rep
    T_num = float(times[extinct[0]])
    # (ii) Rayleigh-quotient constant from slices with non-trivial mass
    v0 = v[0]
    ratios = []
    for i in range(len(times)):
        if v[i] > skip_fraction * v0:
            norm_u = v[i] ** (1.0 / (q + 1))
            ratios.append(gradient_p_norm(traj, i) / norm_u**p)
    mu = (q + 1) / q * float(np.min(ratios))
    kexp = q + 1 - p
    T_bound = (q + 1) * v0 ** (kexp / (q + 1)) / (mu * kexp)
    w = v0 * np.clip(
        1.0 - mu * kexp * times / ((q + 1) * v0 ** (kexp / (q + 1))), 0.0, None
    ) ** ((q + 1) / kexp)
    max_excess = float(np.max((v - w)) / v0)
    # (iii) decay constants at probes
    src = SolutionSource(traj)
    g = traj.problem.grid
    d_bound = lambda x: min(abs(x - g.x_lo), abs(g.x_hi - x)) if (
        g.geometry == "cartesian"
    ) else (g.x_hi - abs(x))
    probe_consts = []
    for x_o in x_probes:
        d = d_bound(x_o)
        for t_o in np.linspace(0.55 * T_num, 0.9 * T_num, 4):
            rate = ((T_num - t_o) / d**p) ** (1 / kexp)
            uval = src.eval([x_o], t_o)
            gval = src.grad_norm([x_o], t_o)
            probe_consts.append(
                {
                    "x_o": x_o,
                    "t_o": float(t_o),
                    "gamma_u": uval / rate,
                    "gamma_du": gval / (rate / d),
                }
            )
    rep.probes = probe_consts
    rep.lhs = [float(np.max((v - w))) if len(v) else 0.0]
    rep.rhs = [float(v0)]
    rep.implied_constant = max(
        [pc["gamma_u"] for pc in probe_consts], default=0.0
    )
    rep.verdict = "bounded" if max_excess <= 0.05 else "diverging"
    rep.notes = (
        f"T_num={T_num!r} mu={mu!r} T_bound={T_bound!r} "
        f"max_excess={max_excess!r}"
    )
    rep.extras = {
        "T_num": T_num,
        "mu": mu,
        "T_bound": T_bound,
        "max_excess": max_excess,
        "within_bound": T_num <= T_bound * (1 + 1e-12),
    }
    return rep


def decay_exponent_fit(sol, x_o, t_lo_frac=0.9, t_hi_frac=0.999, n=24):
    """Log-log fit of u(x_o, t) against (T - t) near the extinction time of a
    closed-form family with a T parameter.  Returns (slope, r_squared)."""
    T = sol.T
    ts = T - (T * (1 - t_lo_frac)) * np.logspace(
        0, math.log10((1 - t_hi_frac) / (1 - t_lo_frac)), n
    )
    vals = np.array([sol.eval([x_o] if np.isscalar(x_o) else x_o, t) for t in ts])
    X = np.log(T - ts)
    Y = np.log(vals)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    r2 = 1.0 - float(np.sum(resid**2)) / float(np.sum((Y - Y.mean()) ** 2))
    return float(slope), r2


def gradient_bound(src, probes, lattice=32, enlargement=8.0):
    """Intrinsic gradient bound sup_{Q_o} |Du| <= gamma u_o / rho.

    probes: iterable of (x_o, t_o, rho).  K_emp = sup_{Q_o}|Du| rho / u_o per
    probe, with Q_o the symmetric intrinsic cylinder.  lattice=1 degenerates
    the cylinder to its center point (used by the closed-form ratio presets).
    Verdict bounded iff K_emp spread < factor 2; diverging on a monotone
    exceedance run over >= 4 probes."""
    e = src.exponents

    def one(probe):
        x_o, t_o, rho = probe
        u_o = src.eval([x_o], t_o)
        if u_o <= 0:
            raise RegimeError(f"u(x_o,t_o) <= 0 at probe {probe}")
        if lattice == 1:
            sup_du = src.grad_norm([x_o], t_o)
        else:
            half = u_o ** (e.q + 1 - e.p) * rho**e.p
            xs = np.linspace(x_o - rho, x_o + rho, lattice)
            ts = np.linspace(t_o - half, t_o + half, lattice)
            grads = [
                src.grad_norm([x], t)
                for t in ts
                for x in xs
                if src.valid([x], t)
            ]
            if not grads:
                raise RegimeError(f"cylinder leaves the domain at probe {probe}")
            sup_du = max(grads)
        return sup_du * rho / u_o, u_o

    results = map_probes(one, list(probes))
    ks = [k for k, _ in results]
    rep = DiagnosticReport(estimate_id="gradient_bound")
    for (x_o, t_o, rho), (k, u_o) in zip(probes, results):
        rep.probes.append({"x_o": x_o, "t_o": t_o, "rho": rho, "u_o": u_o})
        rep.lhs.append(k)
        rep.rhs.append(1.0)
    rep.implied_constant = max(ks)
    if max(ks) / max(min(ks), 1e-300) < 2.0:
        rep.verdict = "bounded"
    elif _monotone_exceedance(ks):
        rep.verdict = "diverging"
    else:
        rep.verdict = "inconclusive"
    return rep


def holder_fit(src, x_o, t_o, radii, lattice=16):
    """Gradient Hoelder exponent fit: oscillation of Du over nested intrinsic
    cylinders Q_r vs r, slope of the log-log fit (capped at 1; a fit above 1
    means the profile is smoother than any Hoelder class detects).

    Returns dict with alpha_fit, alpha_raw, lipschitz_const, r_squared and a
    DiagnosticReport."""
    radii = list(radii)
    if len(radii) < 4:
        raise ValueError("need at least 4 radii for the fit")
    e = src.exponents
    u_o = src.eval([x_o], t_o)
    if u_o <= 0:
        raise RegimeError("u(x_o, t_o) must be positive")
    oscs, lips = [], []
    for rho in radii:
        half = u_o ** (e.q + 1 - e.p) * rho**e.p
        xs = np.linspace(x_o - rho, x_o + rho, lattice)
        ts = np.linspace(t_o - half, t_o + half, lattice)
        grads, us = [], []
        for t in ts:
            for x in xs:
                if src.valid([x], t):
                    grads.append(src.grad_norm([x], t))
                    us.append(src.eval([x], t))
        if not grads:
            raise RegimeError(f"cylinder of radius {rho} leaves the domain")
        oscs.append(max(grads) - min(grads))
        lips.append((max(us) - min(us)) / rho)
    oscs = np.asarray(oscs)
    rep = DiagnosticReport(estimate_id="holder_fit")
    for rho, osc in zip(radii, oscs):
        rep.probes.append({"rho": rho})
        rep.lhs.append(float(osc))
        rep.rhs.append(1.0)
    if np.all(oscs < 1e-12):
        rep.verdict = "inconclusive"
        rep.notes = "oscillations below 1e-12: alpha effectively infinite"
        return {
            "alpha_fit": math.inf,
            "alpha_raw": math.inf,
            "lipschitz_const": float(max(lips)),
            "r_squared": 1.0,
            "report": rep,
        }
    X, Y = np.log(radii), np.log(np.maximum(oscs, 1e-300))
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    r2 = 1.0 - float(np.sum(resid**2)) / max(float(np.sum((Y - Y.mean()) ** 2)), 1e-300)
    alpha = float(min(slope, 1.0))
    rep.implied_constant = float(np.max(oscs / np.asarray(radii) ** alpha))
    rep.verdict = "bounded" if 0 < alpha <= 1 else "inconclusive"
    rep.notes = f"alpha_raw={slope!r} r2={r2!r}"
    return {
        "alpha_fit": alpha,
        "alpha_raw": float(slope),
        "lipschitz_const": float(max(lips)),
        "r_squared": r2,
        "report": rep,
    }
