"""Command-line driver: tabulate coefficients, generators, kernels and trajectories.

Example::

    python3 -m jcmaster --g 1 --delta 0.5 --env thermal --nbar 1 coeffs tcl
    python3 -m jcmaster --config run.ini verify
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .algebra import EXCITED_PROJECTOR, IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, check_density
from .damped_model import DiscreteModes, Lorentzian, SingleMode, correlations, kernel_k1, solve_G
from .dynamics import (
    damped_exact_trajectory,
    exact_trajectory,
    integrate_nz,
    integrate_tcl,
)
from .errors import ConfigError, JCMasterError, SingularityApproach, UnsupportedEnv
from .generators import (
    NZKernel,
    nz_damped_kernel,
    nz_kernel_from_laplace,
    nz_vacuum_kernel,
    tcl_damped,
    tcl_generator,
)
from .jc_exact import Fock, ModelParams, Thermal, Vacuum, det_F, map_coefficients
from .perturbation import fourth_order, second_order
from .verification import run_checks

TASKS = ("coeffs", "tcl", "nz", "solve-g", "perturb", "simulate", "verify")
MODELS = ("single", "discrete", "lorentzian")
ENVS = ("vacuum", "fock", "thermal")
RATES = ("lamb_shift", "gain", "loss", "dephasing")

COLUMN_DOCS = """\
output tables (one file per task; times in units of 1/g, rates in units of g,
kernel densities in units of g^2, where g is the single-mode coupling, the
root-sum-square of the discrete couplings, or the Lorentzian coupling_rate):

  coeffs    t [1/g], alpha, beta, gamma_re, gamma_im, det_F  (dimensionless)
  tcl       t [1/g], lamb_shift, gain, loss, dephasing [g], singular (0/1);
            undefined rates near det F = 0 are written as nan
  nz        tau [1/g], lamb_shift, gain, loss, dephasing [g^2]
  solve-g   t [1/g], G_re, G_im, z (dimensionless), k1 [g^2]
  perturb   t [1/g], order2_<rate>, order4_<rate>, combined_<rate> [g]
            for rate in lamb_shift, gain, loss, dephasing
  simulate  t [1/g], rho11_<m>, rho10_re_<m>, rho10_im_<m>  (dimensionless)
            for m in exact, tcl, nz; dist_tcl, dist_nz = trace distance to exact
            (nan where a method does not apply)
  verify    check, value, tolerance, passed (1/0)

a meta.json sidecar records parameters, tolerances and library versions.
exit status: 0 success, 1 computation or verification failure, 2 configuration error.
"""


@dataclass(frozen=True)
class RunConfig:
    model: str = "single"
    g: float = 1.0
    delta: float = 0.0
    couplings: tuple = ()
    detunings: tuple = ()
    coupling_rate: float = 1.0
    width: float = 1.0
    center_detuning: float = 0.0
    env: str = "vacuum"
    n: int = 0
    nbar: float = 0.0
    t_max: float = 6.0
    points: int = 121
    tasks: tuple = ("coeffs",)
    output: str = "out"
    fmt: str = "csv"
    state: tuple = (0.0, 0.0, 1.0)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}")
        if self.env not in ENVS:
            raise ConfigError(f"env must be one of {ENVS}")
        if not self.tasks or any(t not in TASKS for t in self.tasks):
            raise ConfigError(f"tasks must be a nonempty subset of {TASKS}")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ConfigError("t_max must be positive")
        if self.points < 2:
            raise ConfigError("points must be at least 2")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if len(self.state) != 3 or sum(x * x for x in self.state) > 1 + 1e-12:
            raise ConfigError("state must be a Bloch vector x,y,z of length <= 1")
        if self.model == "discrete" and (not self.couplings or len(self.couplings) != len(self.detunings)):
            raise ConfigError("discrete model needs equally many couplings and detunings")
        if self.env == "fock" and (int(self.n) != self.n or self.n < 0):
            raise ConfigError("Fock level n must be a nonnegative integer")
        if self.env == "thermal" and not self.nbar >= 0:
            raise ConfigError("nbar must be nonnegative")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")

    # -- normalisation -------------------------------------------------------------

    @property
    def unit(self) -> float:
        if self.model == "single":
            return self.g
        if self.model == "discrete":
            return float(np.sqrt(np.sum(np.abs(np.asarray(self.couplings, dtype=complex)) ** 2)))
        return self.coupling_rate

    def normalized_model(self):
        u = self.unit
        if not u > 0:
            raise ConfigError("coupling scale must be positive")
        if self.model == "single":
            return SingleMode(ModelParams(1.0, self.delta / u))
        if self.model == "discrete":
            return DiscreteModes(
                tuple(complex(c) / u for c in self.couplings), tuple(float(d) / u for d in self.detunings)
            )
        return Lorentzian(1.0, self.width / u, self.center_detuning / u)

    def environment(self):
        if self.env == "vacuum":
            return Vacuum()
        if self.env == "fock":
            return Fock(self.n)
        return Thermal(self.nbar)

    @property
    def t_norm(self) -> float:
        return self.t_max * self.unit

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_norm, self.points)

    def initial_state(self) -> np.ndarray:
        x, y, z = self.state
        return check_density(0.5 * (IDENTITY + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z))

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))


DEFAULT_TOLERANCES = {
    "solve_g": 1e-8,
    "talbot": 1e-6,
    "tcl_step": 1e-8,
    "nz_step": 1e-7,
    "quadrature": 1e-6,
    "quadrature_nodes": 16,
    "tcl_margin": 1e-2,
}


# -- config parsing ----------------------------------------------------------------


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _complexes(text: str) -> tuple:
    return tuple(complex(x.replace(" ", "")) for x in text.split(","))


def _tasks(text: str) -> tuple:
    return tuple(t for t in text.replace(",", " ").split())


_FIELDS = {
    # config key: (section, converter)
    "model": ("model", str),
    "g": ("model", float),
    "delta": ("model", float),
    "couplings": ("model", _complexes),
    "detunings": ("model", _floats),
    "coupling_rate": ("model", float),
    "width": ("model", float),
    "center_detuning": ("model", float),
    "env": ("env", str),
    "n": ("env", int),
    "nbar": ("env", float),
    "t_max": ("times", float),
    "points": ("times", int),
    "tasks": ("run", _tasks),
    "state": ("run", _floats),
    "output": ("output", str),
    "fmt": ("output", str),
}
_SECTION_KEYS = {"model": "kind", "env": "kind", "fmt": "format", "output": "path"}


def read_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for name, (section, conv) in _FIELDS.items():
        key = _SECTION_KEYS.get(name, name)
        if parser.has_option(section, key):
            try:
                values[name] = conv(parser.get(section, key))
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
    if parser.has_section("tolerances"):
        try:
            values["tolerances"] = {k: float(v) for k, v in parser.items("tolerances")}
        except ValueError as exc:
            raise ConfigError(f"bad tolerance value: {exc}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="jcmaster",
        description="Exact and perturbative master equations of a two-level system coupled to bosonic modes.",
        epilog=COLUMN_DOCS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("tasks", nargs="*", help=f"tasks to run: {', '.join(TASKS)}")
    ap.add_argument("--config", help="INI file with [model] [env] [times] [run] [output] [tolerances] sections")
    ap.add_argument("--model", choices=MODELS)
    ap.add_argument("--g", type=float, help="single-mode coupling (angular frequency)")
    ap.add_argument("--delta", type=float, help="single-mode detuning omega_0 - omega")
    ap.add_argument("--couplings", type=_complexes, help="comma-separated complex couplings g_k")
    ap.add_argument("--detunings", type=_floats, help="comma-separated detunings delta_k")
    ap.add_argument("--coupling-rate", type=float, dest="coupling_rate")
    ap.add_argument("--width", type=float, help="Lorentzian width")
    ap.add_argument("--center-detuning", type=float, dest="center_detuning")
    ap.add_argument("--env", choices=ENVS)
    ap.add_argument("--n", type=int, help="Fock occupation")
    ap.add_argument("--nbar", type=float, help="thermal mean occupation")
    ap.add_argument("--t-max", type=float, dest="t_max", help="final time (same units as 1/g)")
    ap.add_argument("--points", type=int, help="number of grid points")
    ap.add_argument("--state", type=_floats, help="initial Bloch vector x,y,z (default 0,0,1 = excited)")
    ap.add_argument("--output", help="output directory")
    ap.add_argument("--format", dest="fmt", choices=("csv", "json"))
    ap.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE", help="tolerance override")
    return ap


def config_from_args(argv=None) -> RunConfig:
    ap = build_parser()
    args = ap.parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None and name != "tasks":
            values[name] = v
    if args.tasks:
        values["tasks"] = tuple(args.tasks)
    tols = dict(values.get("tolerances", {}))
    for item in args.tol:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects KEY=VALUE, got {item!r}")
        try:
            tols[key.strip()] = float(val)
        except ValueError as exc:
            raise ConfigError(f"bad tolerance value {item!r}") from exc
    values["tolerances"] = tols
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


# -- tasks -------------------------------------------------------------------------


def _single(cfg: RunConfig) -> ModelParams:
    if cfg.model != "single":
        raise UnsupportedEnv("this task needs the single-mode model for non-vacuum states")
    return cfg.normalized_model().params


def _require_vacuum(cfg: RunConfig, task: str):
    if cfg.env != "vacuum":
        raise UnsupportedEnv(f"task {task} for the {cfg.model} model is defined for the vacuum only")


def _amplitude(cfg: RunConfig, min_steps: int = 2048, multiple: int = 1):
    """Volterra-solved ``G`` on a grid refining the output grid; returns ``(traj, stride)``."""
    intervals = cfg.points - 1
    stride = max(1, math.ceil(min_steps / intervals))
    stride = multiple * math.ceil(stride / multiple)
    traj = solve_G(cfg.normalized_model(), cfg.t_norm, intervals * stride, tol=cfg.tol("solve_g"))
    return traj, stride


def task_coeffs(cfg: RunConfig) -> dict:
    t = cfg.grid()
    if cfg.model == "single":
        mc = map_coefficients(cfg.environment(), t, _single(cfg))
        alpha, beta, gamma = mc.alpha, mc.beta, mc.gamma
        det = det_F(mc)
    else:
        _require_vacuum(cfg, "coeffs")
        traj, stride = _amplitude(cfg)
        gamma = traj.G[::stride]
        alpha, beta = np.ones_like(t), np.abs(gamma) ** 2
        det = np.abs(gamma) ** 2 * beta
    return {"t": t, "alpha": alpha, "beta": beta, "gamma_re": gamma.real, "gamma_im": gamma.imag, "det_F": det}


def _tcl(cfg: RunConfig):
    t = cfg.grid()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if cfg.model == "single":
            return tcl_generator(cfg.environment(), _single(cfg), t)
        _require_vacuum(cfg, "tcl")
        traj, stride = _amplitude(cfg)
        gen = tcl_damped(traj)
    return replace(
        gen,
        grid=gen.grid[::stride],
        coeffs=gen.coeffs[::stride],
        matrices=gen.matrices[::stride],
        singular_mask=gen.singular_mask[::stride],
    )


def task_tcl(cfg: RunConfig) -> dict:
    gen = _tcl(cfg)
    cols = {"t": gen.grid}
    cols.update({k: getattr(gen.coeffs, k) for k in RATES})
    cols["singular"] = gen.singular_mask.astype(int)
    return cols


def _nz_kernel(cfg: RunConfig, lags) -> NZKernel:
    if cfg.model == "single":
        p = _single(cfg)
        if cfg.env == "vacuum":
            return NZKernel.from_coeffs(lags, nz_vacuum_kernel(p, lags))
        return nz_kernel_from_laplace(cfg.environment(), p, lags, tol=cfg.tol("talbot"))
    raise AssertionError("damped kernels are built from the amplitude trajectory")


def task_nz(cfg: RunConfig) -> dict:
    t = cfg.grid()
    if cfg.model == "single":
        kern = _nz_kernel(cfg, t)
        coeffs = kern.coeffs
    else:
        _require_vacuum(cfg, "nz")
        traj, stride = _amplitude(cfg)
        k1 = kernel_k1(traj)
        coeffs = nz_damped_kernel(correlations(cfg.normalized_model()), k1[::stride], t)
    cols = {"tau": t}
    cols.update({k: getattr(coeffs, k) for k in RATES})
    return cols


def task_solve_g(cfg: RunConfig) -> dict:
    _require_vacuum(cfg, "solve-g")
    traj, stride = _amplitude(cfg)
    k1 = kernel_k1(traj)
    G = traj.G[::stride]
    return {"t": traj.grid[::stride], "G_re": G.real, "G_im": G.imag, "z": traj.z[::stride], "k1": k1[::stride]}


def task_perturb(cfg: RunConfig) -> dict:
    t = cfg.grid()
    corr = correlations(cfg.normalized_model(), cfg.environment())
    o2 = second_order(corr, t)
    o4 = fourth_order(corr, t, n_quad=int(cfg.tol("quadrature_nodes")), tol=cfg.tol("quadrature"))
    cols = {"t": t}
    for name, c in (("order2", o2), ("order4", o4), ("combined", o2 + o4)):
        cols.update({f"{name}_{k}": getattr(c, k) for k in RATES})
    return cols


def task_simulate(cfg: RunConfig) -> dict:
    t = cfg.grid()
    rho0 = cfg.initial_state()
    nan_states = np.full((len(t), 2, 2), np.nan, dtype=complex)
    if cfg.model == "single":
        ex = exact_trajectory(cfg.environment(), _single(cfg), rho0, t).states
    else:
        _require_vacuum(cfg, "simulate")
        traj, stride = _amplitude(cfg, multiple=4)
        ex = damped_exact_trajectory(traj, rho0).states[::stride]
    states = {"exact": ex}

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if cfg.model == "single":
            fine = np.linspace(0, cfg.t_norm, 8 * (cfg.points - 1) + 1)
            gen = tcl_generator(cfg.environment(), _single(cfg), fine)
        else:
            gen = tcl_damped(traj)
    stop = len(t)
    if gen.singular_times:
        stop = int(np.searchsorted(t, 0.9 * gen.singular_times[0], side="right"))
    tcl = nan_states.copy()
    if stop >= 2:
        try:
            tcl[:stop] = integrate_tcl(
                gen, rho0, t[:stop], margin=cfg.tol("tcl_margin"), tol=cfg.tol("tcl_step")
            ).states
        except SingularityApproach:
            pass
    states["tcl"] = tcl

    nz = nan_states.copy()
    if cfg.env == "vacuum":
        if cfg.model == "single":
            sub = max(1, math.ceil(2048 / (cfg.points - 1)))
            lags = np.linspace(0, cfg.t_norm, 4 * sub * (cfg.points - 1) + 1)
            res = integrate_nz(_nz_kernel(cfg, lags), rho0, tol=cfg.tol("nz_step"))
            nz = res.states[::sub]
        else:
            k1 = kernel_k1(traj)
            kern = NZKernel.from_coeffs(traj.grid, nz_damped_kernel(correlations(cfg.normalized_model()), k1, traj.grid))
            res = integrate_nz(kern, rho0, tol=cfg.tol("nz_step"))
            nz = res.states[:: stride // 4]
    states["nz"] = nz

    cols = {"t": t}
    for m, s in states.items():
        cols[f"rho11_{m}"] = s[:, 0, 0].real
        cols[f"rho10_re_{m}"] = s[:, 0, 1].real
        cols[f"rho10_im_{m}"] = s[:, 0, 1].imag
    for m in ("tcl", "nz"):
        diff = states[m] - ex
        with np.errstate(invalid="ignore"):
            # trace distance of a traceless hermitian 2x2 difference
            cols[f"dist_{m}"] = np.sqrt(np.abs(diff[:, 0, 0]) ** 2 + np.abs(diff[:, 0, 1]) ** 2).real
    return cols


def task_verify(cfg: RunConfig) -> dict:
    rows = run_checks(cfg)
    return {
        "check": [r.name for r in rows],
        "value": np.array([r.value for r in rows]),
        "tolerance": np.array([r.tolerance for r in rows]),
        "passed": np.array([int(r.passed) for r in rows]),
    }


RUNNERS = {
    "coeffs": task_coeffs,
    "tcl": task_tcl,
    "nz": task_nz,
    "solve-g": task_solve_g,
    "perturb": task_perturb,
    "simulate": task_simulate,
    "verify": task_verify,
}


# -- output ------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x + 0.0, ".17g")  # + 0.0 folds -0 into 0


def write_csv(path: Path, cols: dict):
    names = list(cols)
    n = len(cols[names[0]])
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(_fmt(cols[k][i]) for k in names))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    return v


def meta(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    del d["output"]  # keeps the sidecar independent of where it is written
    d["couplings"] = [[c.real, c.imag] for c in (complex(x) for x in cfg.couplings)]
    return {
        "config": _jsonable(d),
        "units": {"coupling_scale": cfg.unit, "normalized_t_max": cfg.t_norm},
        "tolerances": {k: cfg.tol(k) for k in DEFAULT_TOLERANCES},
        "versions": {"jcmaster": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }


def write_task(out: Path, task: str, cols: dict, cfg: RunConfig):
    name = task.replace("-", "_")
    if cfg.fmt == "csv":
        write_csv(out / f"{name}.csv", cols)
    else:
        obj = {"task": task, "columns": {k: _jsonable(np.asarray(v)) for k, v in cols.items()}, "meta": meta(cfg)}
        (out / f"{name}.json").write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def run(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for task in cfg.tasks:
        try:
            cols = RUNNERS[task](cfg)
        except (JCMasterError, ArithmeticError, np.linalg.LinAlgError) as exc:
            if isinstance(exc, ConfigError):
                raise
            print(
                f"error in task {task} (model={cfg.model}, env={cfg.env}, t_max={cfg.t_max}, "
                f"points={cfg.points}): {type(exc).__name__}: {exc}",
                file=sys.stderr,
            )
            status = 1
            continue
        write_task(out, task, cols, cfg)
        if task == "verify" and not np.all(cols["passed"]):
            failed = [c for c, ok in zip(cols["check"], cols["passed"]) if not ok]
            print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
            status = 1
    (out / "meta.json").write_text(json.dumps(meta(cfg), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return status


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
