"""Equipartition residual and the annealed multistart solver over SO(d) x R^d.

The residual packs the 2d cone masses (a_g, b_g) into the (2d-1)-vector

    (a_g - b_g for each g;  consecutive differences of a_g + b_g)

which vanishes exactly when every cone carries mass 1/(2d). The solver
minimizes a softmax-smoothed version of this residual by damped least
squares while sharpening the smoothing, then polishes the hard (piecewise
constant) objective with derivative-free descent. Certification is a
fresh-sample Monte Carlo estimate, never the solve cloud.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import _kernels
from .errors import InvalidFanError, InvalidParameterError
from .fan import ConeOracle, Fan, split_label, validate_fan
from .leastsq import levenberg_marquardt
from .measure import (MassVector, Measure, PointCloud, cone_masses, mc_oracle,
                      support_bound)
from .motion import (RigidMotion, n_rotation_params, orthogonality_defect,
                     project_to_rotation, random_rotation, skew_matrix)


def residual(mv: MassVector) -> np.ndarray:
    """(2d-1)-vector whose zero set is exactly the equipartitions."""
    return _residual_from_flat(mv.flat, mv.d)


def _residual_from_flat(flat: np.ndarray, d: int) -> np.ndarray:
    a = flat[:d]
    b = flat[d:]
    t = a - b
    s = a + b
    return np.concatenate([t, s[:-1] - s[1:]])


def objective(c: PointCloud, f, rho: RigidMotion, mode: str = "hard",
              beta: Optional[float] = None) -> float:
    """Squared residual norm of the cone masses under the motion."""
    return float(np.sum(residual(cone_masses(c, f, rho, mode=mode, beta=beta)) ** 2))


@dataclass
class SolveOptions:
    """Knobs for the multistart annealed solve."""

    multistarts: int = 16
    beta0: float = 20.0
    beta_max: float = 500.0
    beta_growth: float = 2.5
    max_iter: int = 60            # LM iterations per annealing stage
    tol: float = 1e-6             # hard residual norm declaring convergence
    translation_bound_factor: float = 2.0
    seed: int = 0
    threads: Optional[int] = None
    polish_rounds: int = 2        # Nelder-Mead restarts on the hard objective
    polish_max_iter: Optional[int] = None
    final_descent: bool = True    # exact event descent after the simplex polish
    final_kicks: int = 12         # rotation nudges retrying a stalled descent
    early_stop: bool = True       # stop launching starts once one reaches tol
    validate: bool = True         # run validate_fan before searching

    def __post_init__(self):
        if not (self.beta0 < self.beta_max):
            raise InvalidParameterError("need beta0 < beta_max")
        if self.beta_growth <= 1.0:
            raise InvalidParameterError("beta growth factor must exceed 1")
        if self.tol <= 0:
            raise InvalidParameterError("tolerance must be positive")
        if self.multistarts < 1:
            raise InvalidParameterError("need at least one start")

    def beta_schedule(self) -> list:
        betas = []
        b = self.beta0
        while b < self.beta_max:
            betas.append(b)
            b *= self.beta_growth
        betas.append(self.beta_max)
        return betas


@dataclass
class Certificate:
    """Fresh-sample check that every cone mass is 1/(2d) within tolerance."""

    passed: bool
    masses: MassVector
    stderr: np.ndarray
    tol: float
    n: int
    seed: int
    violations: list  # (label string, estimate, allowed deviation)


@dataclass
class SolveResult:
    motion: RigidMotion
    masses_hard: MassVector
    residual_norm: float
    converged: bool
    trace: list
    start_index: int
    certificate: Optional[Certificate] = None
    timings: dict = field(default_factory=dict)


def _moved_dirs(fan: Fan, rotation: np.ndarray) -> np.ndarray:
    return fan.directions @ rotation.T


def _hard_residual_norm(cloud: PointCloud, fan: Fan, rotation: np.ndarray,
                        translation: np.ndarray) -> float:
    flat = _kernels.hard_masses(cloud.points, cloud.weights,
                                _moved_dirs(fan, rotation), translation)
    r = _residual_from_flat(flat, fan.d)
    return float(np.linalg.norm(r))


class _Chart:
    """Mutable rotation chart baked into residual closures."""

    def __init__(self, base: np.ndarray):
        self.base = base
        self.d = base.shape[0]

    def rotation(self, theta: np.ndarray) -> np.ndarray:
        w = self.base @ expm(skew_matrix(theta, self.d))
        if orthogonality_defect(w) > 1e-10:
            w = project_to_rotation(w)
        return w

    def recenter(self, theta: np.ndarray) -> None:
        self.base = self.rotation(theta)


def _project_ball(t: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    dv = t - center
    r = float(np.linalg.norm(dv))
    if r <= radius or radius <= 0:
        return t
    return center + dv * (radius / r)


def _run_start(cloud: PointCloud, fan, opts: SolveOptions, index: int, seed_seq,
               center: np.ndarray, bound_radius: float, t_scale: float) -> dict:
    d = fan.d if isinstance(fan, Fan) else fan.table.d
    nth = n_rotation_params(d)
    t0 = time.perf_counter()
    chart = _Chart(random_rotation(d, seed_seq))
    x = np.concatenate([np.zeros(nth), cloud.mean])
    scale = np.concatenate([np.ones(nth), np.full(d, t_scale)])
    stages = []

    def hard_norm(xv: np.ndarray) -> float:
        if isinstance(fan, Fan):
            return _hard_residual_norm(cloud, fan, chart.rotation(xv[:nth]), xv[nth:])
        rho = RigidMotion(chart.rotation(xv[:nth]), xv[nth:])
        return float(np.linalg.norm(residual(cone_masses(cloud, fan, rho))))

    initial_hard_norm = hard_norm(x)

    if isinstance(fan, Fan):
        def make_soft(beta: float):
            def fn(xv: np.ndarray) -> np.ndarray:
                moved = _moved_dirs(fan, chart.rotation(xv[:nth]))
                flat = _kernels.soft_masses(cloud.points, cloud.weights, moved,
                                            xv[nth:], beta)
                return _residual_from_flat(flat, d)
            return fn

        def step_filter(x_old: np.ndarray, x_try: np.ndarray) -> np.ndarray:
            out = x_try.copy()
            out[nth:] = _project_ball(out[nth:], center, bound_radius)
            return out

        def on_accept(xv: np.ndarray) -> np.ndarray:
            chart.recenter(xv[:nth])
            out = xv.copy()
            out[:nth] = 0.0
            return out

        for beta in opts.beta_schedule():
            lm = levenberg_marquardt(make_soft(beta), x, scale,
                                     max_iter=opts.max_iter,
                                     step_filter=step_filter,
                                     on_accept=on_accept)
            x = lm.x
            stages.append({"beta": beta, "iters": lm.n_iter, "evals": lm.n_eval,
                           "soft_cost": lm.cost, "reason": lm.reason,
                           "hard_norm": hard_norm(x)})
        polish_sizes = [min(20.0 / opts.beta_max, 0.05) * 0.1**i
                        for i in range(opts.polish_rounds)]
    else:
        # oracle fan: no smooth surrogate, go straight to derivative-free
        polish_sizes = [0.05 * 0.1**i for i in range(max(opts.polish_rounds, 2))]

    # hard polish: restarted Nelder-Mead, then an optional compass sweep;
    # the hard objective is piecewise constant so this is plateau descent
    def hard_cost(xv: np.ndarray) -> float:
        xv = xv.copy()
        xv[nth:] = _project_ball(xv[nth:], center, bound_radius)
        if isinstance(fan, Fan):
            flat = _kernels.hard_masses(cloud.points, cloud.weights,
                                        _moved_dirs(fan, chart.rotation(xv[:nth])),
                                        xv[nth:])
            r = _residual_from_flat(flat, d)
            return float(r @ r)
        rho = RigidMotion(chart.rotation(xv[:nth]), xv[nth:])
        return float(np.sum(residual(cone_masses(cloud, fan, rho)) ** 2))

    best_x = x.copy()
    best_cost = hard_cost(best_x)
    polish_info = []
    for size in polish_sizes:
        if best_cost == 0.0:
            break
        sim = np.tile(best_x, (best_x.size + 1, 1))
        for j in range(best_x.size):
            sim[j + 1, j] += size * scale[j]
        res = minimize(hard_cost, best_x, method="Nelder-Mead",
                       options={"initial_simplex": sim,
                                "maxiter": opts.polish_max_iter or 200 * best_x.size,
                                "xatol": 1e-12, "fatol": 1e-18})
        if res.fun < best_cost:
            best_cost = float(res.fun)
            best_x = np.asarray(res.x)
        polish_info.append({"size": size, "nm_iters": int(res.nit), "cost": best_cost})

    best_x[nth:] = _project_ball(best_x[nth:], center, bound_radius)
    rotation = chart.rotation(best_x[:nth])
    translation = best_x[nth:]

    if opts.final_descent and best_cost > opts.tol**2:
        if isinstance(fan, Fan):
            rotation, translation, best_cost, info = _finish_exact(
                cloud, fan, rotation, translation, center, bound_radius,
                seed_seq, opts, best_cost)
            polish_info.extend(info)
        else:
            best_x, best_cost, sweeps = _compass_descent(hard_cost, best_x, scale,
                                                         best_cost)
            polish_info.append({"compass_sweeps": sweeps, "cost": best_cost})
            best_x[nth:] = _project_ball(best_x[nth:], center, bound_radius)
            rotation = chart.rotation(best_x[:nth])
            translation = best_x[nth:]

    return {
        "start": index,
        "rotation": rotation,
        "translation": translation,
        "initial_hard_norm": initial_hard_norm,
        "residual_norm": float(np.sqrt(best_cost)),
        "stages": stages,
        "polish": polish_info,
        "time": time.perf_counter() - t0,
    }


def _finish_exact(cloud: PointCloud, fan: Fan, rotation: np.ndarray,
                  translation: np.ndarray, center: np.ndarray, radius: float,
                  seed_seq, opts: SolveOptions, cost0: float):
    """Exact event descent, retried under small seeded rotation kicks.

    The descent can stall on a plateau where no single-ray step improves;
    each retry nudges the best rotation found so far along a random
    geodesic (angle sized to re-shuffle a handful of boundary crossings)
    to open a different set of cells. The best visited state is kept.
    """
    d = fan.d
    rng = np.random.default_rng(seed_seq.spawn(1)[0])
    kick_angle = min(1e-3, max(1e-6, 16.0 / cloud.n))
    best = (cost0, rotation, translation)
    info = []
    for kick in range(opts.final_kicks + 1):
        cost, rot, t_vec = best
        if kick > 0:
            scale_mult = (0.5, 1.0, 2.0, 4.0)[kick % 4]
            theta = kick_angle * scale_mult * rng.standard_normal(n_rotation_params(d))
            rot = rot @ expm(skew_matrix(theta, d))
            if orthogonality_defect(rot) > 1e-10:
                rot = project_to_rotation(rot)
        rot, t_vec, cost, rounds = _exact_descent(cloud, fan, rot, t_vec.copy(),
                                                  center, radius, rng)
        info.append({"kick": kick, "rounds": rounds, "cost": cost})
        if cost < best[0]:
            best = (cost, rot, t_vec)
        if cost <= opts.tol**2:
            break
    cost, rot, t_vec = best
    return rot, t_vec, cost, info


def _compass_descent(cost_fn, x0: np.ndarray, scale: np.ndarray, cost0: float,
                     h0: float = 1e-4, h_min: float = 1e-8, max_sweeps: int = 200):
    """Deterministic coordinate descent over plateaus of the hard objective."""
    x = x0.copy()
    cost = cost0
    h = h0
    sweeps = 0
    while h >= h_min and cost > 0.0 and sweeps < max_sweeps:
        improved = False
        for j in range(x.size):
            for sgn in (1.0, -1.0):
                trial = x.copy()
                trial[j] += sgn * h * scale[j]
                c = cost_fn(trial)
                if c < cost:
                    x, cost = trial, c
                    improved = True
                    break
        sweeps += 1
        if not improved:
            h *= 0.5
    return x, cost, sweeps


def _antipode(j: int, d: int) -> int:
    return j + d if j < d else j - d


def _translation_rays(moved: np.ndarray, d: int, rng) -> list:
    """Translation search directions: all non-antipodal direction
    differences (both signs), coordinate axes, a few seeded random ones."""
    rays = []
    m = 2 * d
    for i in range(m):
        for j in range(i + 1, m):
            if j == _antipode(i, d):
                continue
            delta = moved[i] - moved[j]
            delta = delta / np.linalg.norm(delta)
            rays.append(delta)
            rays.append(-delta)
    dim = moved.shape[1]
    eye = np.eye(dim)
    for k in range(dim):
        rays.append(eye[k])
        rays.append(-eye[k])
    extra = rng.standard_normal((m, dim))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    rays.extend(extra)
    return rays


def _rotation_rays(d: int, rng) -> list:
    """Unit skew generators: coordinate planes (both signs, a seeded subset
    when there are many) plus a few seeded random skews."""
    nth = n_rotation_params(d)
    rays = []
    eye = np.eye(nth)
    planes = range(nth) if nth <= 12 else rng.choice(nth, size=12, replace=False)
    for k in planes:
        rays.append(eye[k])
        rays.append(-eye[k])
    extra = rng.standard_normal((min(nth, 6), nth))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    rays.extend(extra)
    return rays


_ROT_RAY_CAP = 0.02  # rad; keeps the affine score model accurate enough


def _exact_descent(cloud: PointCloud, fan: Fan, rot: np.ndarray, t: np.ndarray,
                   center: np.ndarray, radius: float, rng,
                   max_rounds: int = 40, max_events: int = 128):
    """Event-walk descent of the hard residual over all of SO(d) x R^d.

    Along a translation ray the point scores are exactly affine in the
    step; along a rotation generator they are affine to first order. In
    both cases every point's first cone crossing is a closed-form event,
    so walking the sorted events predicts the piecewise-constant cost at
    event resolution. Each proposed step is verified against the true
    objective (catching double crossings and rotation curvature), which
    lets the descent thread critically packed boundary configurations
    that stall blind pattern search. This is the terminal descent for an
    objective quantized at the point-weight scale.
    """
    pts, wts = cloud.points, cloud.weights
    d = fan.d
    nth = n_rotation_params(d)
    n = pts.shape[0]
    idx_n = np.arange(n)

    def cost_at(rv: np.ndarray, tv: np.ndarray) -> float:
        flat = _kernels.hard_masses(pts, wts, _moved_dirs(fan, rv), tv)
        r = _residual_from_flat(flat, d)
        return float(r @ r)

    cost = cost_at(rot, t)
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        if cost <= 0.0:
            break
        moved = _moved_dirs(fan, rot)
        y = pts - t
        scores = y @ moved.T
        labels = np.argmax(scores, axis=1)
        flat0 = np.array([np.sum(wts[labels == j]) for j in range(2 * d)])
        top = scores[idx_n, labels]
        gaps = top[:, None] - scores  # (n, 2d), >= 0
        gaps[idx_n, labels] = np.inf  # a cone never overtakes itself
        inv_gaps = 1.0 / np.maximum(gaps, 1e-300)

        def walk(drop, cap, make_step, candidates):
            """Accumulate (predicted cost, step) pairs along one ray.

            The first crossing of point x is min_l gap/drop over drop > 0,
            computed as a reciprocal max so the per-ray work is a single
            multiply pass over the precomputed 1/gap matrix.
            """
            speed = np.maximum(drop, 0.0) * inv_gaps
            smax = speed.max(axis=1)
            sel = np.flatnonzero(smax * cap > 1.0)
            if sel.size == 0:
                return
            if sel.size > max_events:
                sel = sel[np.argpartition(-smax[sel], max_events)[:max_events]]
            first = 1.0 / smax[sel]
            inner = np.argsort(first, kind="stable")
            order = sel[inner]
            to = speed[order].argmax(axis=1)
            fl = flat0.copy()
            etas = first[inner]
            for i, (x, dst) in enumerate(zip(order, to)):
                fl[labels[x]] -= wts[x]
                fl[dst] += wts[x]
                nxt = etas[i + 1] if i + 1 < etas.size else min(cap, etas[i] * 1.5 + 1e-12)
                if nxt <= etas[i]:
                    continue  # simultaneous batch, evaluate once it is done
                r = _residual_from_flat(fl, d)
                pred = float(r @ r)
                if pred < cost:
                    candidates.append((pred, make_step(0.5 * (etas[i] + nxt))))

        candidates = []
        for e in _translation_rays(moved, d, rng):
            rel = t - center
            b = float(rel @ e)
            disc = b * b - (float(rel @ rel) - radius * radius)
            cap = -b + np.sqrt(disc) if disc > 0 else 0.0
            if cap <= 0:
                continue
            denom = moved @ e
            drop = denom[labels][:, None] - denom[None, :]
            walk(drop, cap, lambda s, e=e: (rot, t + s * e), candidates)

        for theta in _rotation_rays(d, rng):
            gen = skew_matrix(theta, d)
            # d(score)/d(angle) per point and cone under md_l -> rot e^{sA} u_l;
            # label k is overtaken by l once s exceeds gap / (vel_l - vel_k)
            vel = y @ (fan.directions @ (rot @ gen).T).T
            drop = vel - vel[idx_n, labels][:, None]

            def rot_step(s, gen=gen):
                w = rot @ expm(s * gen)
                if orthogonality_defect(w) > 1e-10:
                    w = project_to_rotation(w)
                return (w, t)

            walk(drop, _ROT_RAY_CAP, rot_step, candidates)

        if not candidates:
            break
        candidates.sort(key=lambda cnd: cnd[0])
        stepped = False
        for pred, (rv, tv) in candidates[:12]:
            c_true = cost_at(rv, tv)
            if c_true < cost:
                rot, t, cost = rv, tv, c_true
                stepped = True
                break
        if not stepped:
            break
    return rot, t, cost, rounds


def solve(c: PointCloud, f, o: SolveOptions) -> SolveResult:
    """Search for a rigid motion whose 2d cone masses on the cloud all equal 1/(2d).

    Multistart: Haar rotation draws, translation from the weighted mean,
    annealed soft least squares, hard polish, lowest-index start reaching
    the tolerance wins (else the best residual). Non-convergence is a
    flagged result, not an exception.
    """
    if not isinstance(f, (Fan, ConeOracle)):
        raise InvalidParameterError("solve expects a Fan or ConeOracle")
    d = f.d if isinstance(f, Fan) else f.table.d
    if c.d != d:
        raise InvalidParameterError("cloud and fan dimensions differ")
    if n_rotation_params(d) + d < 2 * d - 1:
        raise InvalidParameterError(
            f"parameter space dimension {n_rotation_params(d) + d} is below the "
            f"residual dimension {2 * d - 1}; need d >= 2")
    if o.validate:
        report = validate_fan(f, n=10_000, seed=0)
        if not report.valid:
            raise InvalidFanError(f"fan failed validation: {report.failures}")

    wall0 = time.perf_counter()
    bound = support_bound(c)
    center = c.mean
    radius = o.translation_bound_factor * bound.radius
    t_scale = max(bound.radius, 1e-9)
    seeds = np.random.SeedSequence(o.seed).spawn(o.multistarts)
    threads = o.threads or os.cpu_count() or 1

    traces = []
    if threads == 1 or o.multistarts == 1:
        for i in range(o.multistarts):
            tr = _run_start(c, f, o, i, seeds[i], center, radius, t_scale)
            traces.append(tr)
            if o.early_stop and tr["residual_norm"] <= o.tol:
                break
    else:
        # starts are submitted in index order and never cancelled once
        # launched, so the lowest-index success is independent of the
        # thread count
        with ThreadPoolExecutor(max_workers=threads) as ex:
            pending = {}
            next_i = 0
            stop = False
            while pending or (next_i < o.multistarts and not stop):
                while not stop and next_i < o.multistarts and len(pending) < threads:
                    fut = ex.submit(_run_start, c, f, o, next_i, seeds[next_i],
                                    center, radius, t_scale)
                    pending[fut] = next_i
                    next_i += 1
                if not pending:
                    break
                done, _ = wait(list(pending), return_when=FIRST_COMPLETED)
                for fut in done:
                    pending.pop(fut)
                    tr = fut.result()
                    traces.append(tr)
                    if o.early_stop and tr["residual_norm"] <= o.tol:
                        stop = True
        traces.sort(key=lambda t: t["start"])

    successes = [t for t in traces if t["residual_norm"] <= o.tol]
    if o.early_stop and successes:
        # lowest-index success: the only choice that is invariant to how
        # many extra starts happened to be in flight when the stop fired
        chosen = min(successes, key=lambda t: t["start"])
    else:
        chosen = min(traces, key=lambda t: (t["residual_norm"], t["start"]))

    motion = RigidMotion(chosen["rotation"], chosen["translation"])
    masses = cone_masses(c, f, motion, mode="hard")
    res_norm = float(np.linalg.norm(residual(masses)))
    return SolveResult(
        motion=motion,
        masses_hard=masses,
        residual_norm=res_norm,
        converged=res_norm <= o.tol,
        trace=traces,
        start_index=chosen["start"],
        timings={"total": time.perf_counter() - wall0,
                 "starts_run": len(traces)},
    )


def certify(res: SolveResult, m: Measure, f, n: int, seed, tol: float) -> Certificate:
    """Accept the motion iff every fresh-sample mass is 1/(2d) within
    max(tol, 4 standard errors)."""
    if n < 100_000:
        raise InvalidParameterError("certification needs n >= 10^5 samples")
    mv, stderr = mc_oracle(m, f, res.motion, n, seed)
    d = mv.d
    target = 1.0 / (2 * d)
    violations = []
    flat = mv.flat
    for j in range(2 * d):
        allowed = max(tol, 4.0 * stderr[j])
        if abs(flat[j] - target) > allowed:
            g, s = split_label(j, d)
            violations.append((f"{'+' if s > 0 else '-'}g{g}", float(flat[j]), allowed))
    cert = Certificate(passed=not violations, masses=mv, stderr=stderr,
                       tol=tol, n=n, seed=seed, violations=violations)
    res.certificate = cert
    return cert
