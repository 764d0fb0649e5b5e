"""Batch front door: configure, run, and report solves.

Subcommands: equipartition, inscribe, validate-fan, masses, sample.
Options come from an optional flat `key = value` config file plus
same-named flags; flags win. Exit codes: 0 certified/valid, 2 completed
but not certified/converged, 1 usage or input error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import report as rep
from .equipartition import SolveOptions, certify, solve
from .errors import ConepartError, ConfigError
from .fan import validate_fan, voronoi_fan
from .group import make_group
from .inscription import (Ball, Ellipsoid, InscriptionOptions, LqBall,
                          solve_inscription, verify_inscription)
from .measure import (GaussianMixture, PointCloudFile, UniformBall,
                      cone_masses, sample)
from .motion import RigidMotion, orthogonality_defect, project_to_rotation


class _Parser(argparse.ArgumentParser):
    # spec reserves exit code 2 for "ran but not certified"; argparse's
    # default usage-error code collides with it
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _floats(s: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in s.split(",") if x.strip() != ""])
    except ValueError:
        raise ConfigError(f"expected a comma-separated numeric list, got {s!r}")


def load_config(path: str) -> dict:
    cfg = {}
    try:
        lines = open(path).read().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    for i, ln in enumerate(lines, start=1):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if "=" not in ln:
            raise ConfigError(f"{path}:{i}: expected 'key = value', got {ln!r}")
        k, v = ln.split("=", 1)
        cfg[k.strip()] = v.strip()
    return cfg


def parse_measure(spec: str, d: int):
    """Compact measure grammar:

    ball:<center>:<radius>
    gmm:<weights>:<means row-major>:<covs row-major, m*d diagonal or m*d*d full>
    cloud:<path>
    """
    parts = spec.split(":")
    kind = parts[0]
    if kind == "ball":
        if len(parts) != 3:
            raise ConfigError("ball measure needs ball:<center>:<radius>")
        center = _floats(parts[1])
        if center.size != d:
            raise ConfigError(f"ball center must have {d} coordinates")
        return UniformBall(center=center, radius=float(parts[2]))
    if kind in ("gmm", "mixture"):
        if len(parts) != 4:
            raise ConfigError("mixture needs gmm:<weights>:<means>:<covs>")
        w = _floats(parts[1])
        m = w.size
        means = _floats(parts[2])
        if means.size != m * d:
            raise ConfigError(f"mixture means must have {m * d} numbers")
        means = means.reshape(m, d)
        covs = _floats(parts[3])
        if covs.size == m * d:
            covs = np.stack([np.diag(row) for row in covs.reshape(m, d)])
        elif covs.size == m * d * d:
            covs = covs.reshape(m, d, d)
        else:
            raise ConfigError(f"mixture covs must have {m * d} (diagonal) or "
                              f"{m * d * d} (full) numbers")
        return GaussianMixture(weights=w, means=means, covs=covs)
    if kind == "cloud":
        return PointCloudFile(path=":".join(parts[1:]), d=d)
    raise ConfigError(f"unknown measure kind {kind!r}")


def parse_body(spec: str, d: int):
    """Compact body grammar:

    ball:<center>:<radius>
    ellipsoid:<center>:<semi-axes (d values) or full shape matrix (d*d values)>
    lq:<center>:<scales>:<even exponent>
    """
    parts = spec.split(":")
    kind = parts[0]
    if kind == "ball":
        if len(parts) != 3:
            raise ConfigError("ball body needs ball:<center>:<radius>")
        return Ball(center=_require_vec(parts[1], d), radius=float(parts[2]))
    if kind == "ellipsoid":
        if len(parts) != 3:
            raise ConfigError("ellipsoid needs ellipsoid:<center>:<semi-axes|Q>")
        center = _require_vec(parts[1], d)
        vals = _floats(parts[2])
        if vals.size == d:
            return Ellipsoid.from_semi_axes(center, vals)
        if vals.size == d * d:
            return Ellipsoid(center=center, q=vals.reshape(d, d))
        raise ConfigError(f"ellipsoid parameters must have {d} or {d * d} numbers")
    if kind == "lq":
        if len(parts) != 4:
            raise ConfigError("lq body needs lq:<center>:<scales>:<exponent>")
        return LqBall(center=_require_vec(parts[1], d),
                      scales=_require_vec(parts[2], d),
                      exponent=int(parts[3]))
    raise ConfigError(f"unknown body kind {kind!r}")


def _require_vec(s: str, d: int) -> np.ndarray:
    v = _floats(s)
    if v.size != d:
        raise ConfigError(f"expected {d} numbers, got {v.size}")
    return v


class Settings:
    """Config-file values overridden by flags, with typed access."""

    def __init__(self, config: dict, overrides: dict):
        self.values = dict(config)
        for k, v in overrides.items():
            if v is not None:
                self.values[k] = v

    def get(self, key, default=None):
        return self.values.get(key, default)

    def get_int(self, key, default=None):
        v = self.values.get(key)
        if v is None:
            return default
        try:
            return int(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer, got {v!r}")

    def get_float(self, key, default=None):
        v = self.values.get(key)
        if v is None:
            return default
        try:
            return float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {v!r}")

    def get_str(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else str(v)

    def require(self, key):
        if key not in self.values or self.values[key] is None:
            raise ConfigError(f"missing required setting {key!r}")
        return self.values[key]

    def record(self, key, value):
        """Pin a derived default so the report embeds the full effective run."""
        self.values.setdefault(key, value)

    # excluded from report embedding: neither affects the computed values,
    # and reports must be byte-identical across output paths and thread counts
    _NON_SEMANTIC = ("out", "solve.threads")

    def effective(self) -> dict:
        return {k: v for k, v in self.values.items()
                if v is not None and k not in self._NON_SEMANTIC}


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _group_dim(st: Settings):
    p = st.get_int("group.p")
    k = st.get_int("group.k")
    if p is None or k is None:
        raise ConfigError("group.p and group.k are required (--p, --k)")
    table = make_group(p, k)
    return table, table.d


def _solve_options(st: Settings) -> SolveOptions:
    return SolveOptions(
        multistarts=st.get_int("solve.multistarts", 16),
        beta0=st.get_float("solve.beta0", 20.0),
        beta_max=st.get_float("solve.beta-max", 500.0),
        beta_growth=st.get_float("solve.beta-growth", 2.5),
        max_iter=st.get_int("solve.max-iter", 60),
        tol=st.get_float("solve.tol", 1e-6),
        translation_bound_factor=st.get_float("solve.translation-bound", 2.0),
        seed=st.get_int("solve.seed", 0),
        threads=st.get_int("solve.threads"),
    )


def run_equipartition(st: Settings) -> int:
    table, d = _group_dim(st)
    fan = voronoi_fan(table, _require_vec(str(st.require("fan.v")), d))
    measure = parse_measure(str(st.require("measure.spec")), d)
    n = st.get_int("solve.n", 100_000)
    opts = _solve_options(st)
    cloud = sample(measure, n, seed=opts.seed)
    result = solve(cloud, fan, opts)
    cert_tol = st.get_float("certify.tol", 0.005)
    cert_n = st.get_int("certify.n", 1_000_000)
    cert_seed = st.get_int("certify.seed", opts.seed)
    for key, val in (("solve.n", n), ("solve.seed", opts.seed),
                     ("solve.multistarts", opts.multistarts),
                     ("solve.tol", opts.tol), ("certify.n", cert_n),
                     ("certify.seed", cert_seed), ("certify.tol", cert_tol)):
        st.record(key, val)
    certify(result, measure, fan, n=cert_n, seed=cert_seed, tol=cert_tol)
    text = rep.equipartition_report(result, st.effective())
    _emit(text, st.get_str("out"))
    return 0 if result.certificate.passed else 2


def run_validate_fan(st: Settings) -> int:
    table, d = _group_dim(st)
    fan = voronoi_fan(table, _require_vec(str(st.require("fan.v")), d))
    n = st.get_int("validate.n", 10_000)
    seed = st.get_int("solve.seed", 0)
    report = validate_fan(fan, n=n, seed=seed)
    text = rep.validate_fan_report(report, st.effective())
    _emit(text, st.get_str("out"))
    return 0 if report.valid else 2


def run_masses(st: Settings) -> int:
    table, d = _group_dim(st)
    fan = voronoi_fan(table, _require_vec(str(st.require("fan.v")), d))
    measure = parse_measure(str(st.require("measure.spec")), d)
    if st.get("motion.identity"):
        motion = RigidMotion.identity(d)
    else:
        rot = st.get("motion.rotation")
        if rot is None:
            raise ConfigError("masses needs --identity or --rotation/--translation")
        w = _floats(str(rot))
        if w.size != d * d:
            raise ConfigError(f"rotation must have {d * d} numbers (row-major)")
        w = w.reshape(d, d)
        defect = orthogonality_defect(w)
        if defect > 1e-8 or np.linalg.det(w) < 0:
            raise ConfigError(
                f"supplied matrix is not a rotation (orthogonality defect {defect:.2e})")
        if defect > 1e-10:
            w = project_to_rotation(w)
        tvec = st.get("motion.translation")
        t = _require_vec(str(tvec), d) if tvec is not None else np.zeros(d)
        motion = RigidMotion(w, t)
    n = st.get_int("solve.n", 100_000)
    seed = st.get_int("solve.seed", 0)
    st.record("solve.n", n)
    st.record("solve.seed", seed)
    cloud = sample(measure, n, seed=seed)
    mv = cone_masses(cloud, fan, motion, mode="hard")
    n_eff = 1.0 / float(np.sum(cloud.weights**2))
    p = np.clip(mv.flat, 0.0, 1.0)
    stderr = np.sqrt(p * (1.0 - p) / n_eff)
    text = rep.masses_report(mv, stderr, st.effective())
    _emit(text, st.get_str("out"))
    return 0


def run_inscribe(st: Settings) -> int:
    table, d = _group_dim(st)
    body = parse_body(str(st.require("body.spec")), d)
    opts = InscriptionOptions(
        multistarts=st.get_int("solve.multistarts", 8),
        max_iter=st.get_int("solve.max-iter", 200),
        tol=st.get_float("solve.tol", 1e-8),
        seed=st.get_int("solve.seed", 0),
    )
    result = solve_inscription(body, table, opts)
    ver = verify_inscription(body, result, tol=st.get_float("verify.tol", 1e-6))
    text = rep.inscription_report(result, ver, st.effective())
    _emit(text, st.get_str("out"))
    return 0 if (result.converged and ver.passed) else 2


def run_sample(st: Settings) -> int:
    d = st.get_int("group.p", 0) ** st.get_int("group.k", 1) if st.get("group.p") \
        else st.get_int("dim")
    if not d:
        raise ConfigError("sample needs --dim (or --p/--k) to size the measure")
    measure = parse_measure(str(st.require("measure.spec")), d)
    n = st.get_int("solve.n", 100_000)
    seed = st.get_int("solve.seed", 0)
    cloud = sample(measure, n, seed=seed)
    out = st.get_str("out")
    if not out:
        raise ConfigError("sample needs --out for the CSV path")
    with open(out, "w") as fh:
        for i in range(cloud.n):
            coords = ",".join(f"{x:.17g}" for x in cloud.points[i])
            fh.write(f"{coords},{cloud.weights[i]:.17g}\n")
    print(f"wrote {cloud.n} points to {out}")
    return 0


# flag name -> config key, per subcommand group
_COMMON_KEYS = {
    "p": "group.p", "k": "group.k", "seed": "solve.seed", "out": "out",
    "threads": "solve.threads",
}


def _add_common(sp, with_fan=False, with_measure=False):
    sp.add_argument("--config", help="flat key = value config file")
    sp.add_argument("--p", type=int, help="odd prime p")
    sp.add_argument("--k", type=int, help="exponent k; ambient dimension is p^k")
    sp.add_argument("--seed", type=int, help="base random seed")
    sp.add_argument("--out", help="report output path")
    sp.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    if with_fan:
        sp.add_argument("--fan-v", dest="fan_v",
                        help="fan generator vector, comma separated")
    if with_measure:
        sp.add_argument("--measure", help="measure spec, e.g. ball:0,0,0:1")
        sp.add_argument("--n", type=int, help="solve cloud size")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="conepart",
                 description="equipartition and crosspolytope inscription solvers")
    sub = ap.add_subparsers(dest="task", required=True)

    eq = sub.add_parser("equipartition", help="find a certified equipartition motion")
    _add_common(eq, with_fan=True, with_measure=True)
    eq.add_argument("--multistarts", type=int)
    eq.add_argument("--beta-max", dest="beta_max", type=float)
    eq.add_argument("--tol", type=float, help="certification tolerance on each mass")
    eq.add_argument("--solver-tol", dest="solver_tol", type=float,
                    help="hard residual norm declaring solver convergence")
    eq.add_argument("--oracle-n", dest="oracle_n", type=int,
                    help="fresh certification sample count")

    vf = sub.add_parser("validate-fan", help="sampling validation of a fan")
    _add_common(vf, with_fan=True)
    vf.add_argument("--samples", type=int, help="validation sample count")

    ms = sub.add_parser("masses", help="cone masses under an explicit motion")
    _add_common(ms, with_fan=True, with_measure=True)
    ms.add_argument("--identity", action="store_true", help="use the identity motion")
    ms.add_argument("--rotation", help="row-major rotation entries, comma separated")
    ms.add_argument("--translation", help="translation vector, comma separated")

    ins = sub.add_parser("inscribe", help="inscribe a crosspolytope in a body")
    _add_common(ins)
    ins.add_argument("--body", help="body spec, e.g. ellipsoid:0,0,0:1,1.3,0.7")
    ins.add_argument("--multistarts", type=int)
    ins.add_argument("--tol", type=float, help="residual norm tolerance")

    sm = sub.add_parser("sample", help="emit a point cloud CSV")
    _add_common(sm, with_measure=True)
    sm.add_argument("--dim", type=int, help="ambient dimension if no group given")
    return ap


def _overrides(args: argparse.Namespace) -> dict:
    ov = {}
    for flag, key in _COMMON_KEYS.items():
        ov[key] = getattr(args, flag, None)
    ov["fan.v"] = getattr(args, "fan_v", None)
    ov["measure.spec"] = getattr(args, "measure", None)
    ov["body.spec"] = getattr(args, "body", None)
    ov["solve.n"] = getattr(args, "n", None)
    ov["solve.multistarts"] = getattr(args, "multistarts", None)
    ov["solve.beta-max"] = getattr(args, "beta_max", None)
    ov["solve.tol"] = getattr(args, "solver_tol", None)
    ov["certify.n"] = getattr(args, "oracle_n", None)
    ov["validate.n"] = getattr(args, "samples", None)
    ov["dim"] = getattr(args, "dim", None)
    if getattr(args, "identity", False):
        ov["motion.identity"] = "true"
    ov["motion.rotation"] = getattr(args, "rotation", None)
    ov["motion.translation"] = getattr(args, "translation", None)
    tol = getattr(args, "tol", None)
    if tol is not None:
        if args.task == "inscribe":
            ov["solve.tol"] = tol
        else:
            ov["certify.tol"] = tol
    return ov


_RUNNERS = {
    "equipartition": run_equipartition,
    "validate-fan": run_validate_fan,
    "masses": run_masses,
    "inscribe": run_inscribe,
    "sample": run_sample,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if getattr(args, "config", None) else {}
        st = Settings(config, _overrides(args))
        return _RUNNERS[args.task](st)
    except ConepartError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
