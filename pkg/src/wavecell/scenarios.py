"""Scenario construction, error metrics and the run pipeline.

Random numbers come from numpy's PCG64 generator. A scenario seed feeds a
``SeedSequence`` that is split into two independent streams: stream 0 draws
the plate holes, stream 1 draws the error sample points.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .assembly import Material, PartitionedSystem, assemble, cut_element_data
from .cutcell import EMPTY_THRESHOLD, CellKind
from .geometry import (AxisBox, Ball, Difference, HalfSpace, ImplicitDomain, IndicatorConfig,
                       Union, parse_csg, to_csg)
from .mesh import build_mesh, interpolation_matrix
from .signals import TemporalSignal, gaussian_bell, harmonic_reference, reference_state
from .spectra import cellwise_critical_dt, critical_dt
from .timeint import (InstabilityError, elastic_energy, run_cdm, run_leapfrog,
                      run_newmark_imex, run_trapezoidal)

log = logging.getLogger(__name__)

INTEGRATOR_KINDS = ("cdm", "cdm-hrz", "trapezoidal", "imex", "leapfrog")
N_ERROR_POINTS = 8572


class ConfigError(ValueError):
    pass


def streams(seed):
    """Independent generators ``(geometry, sampling)`` derived from one seed."""
    geo, samp = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.Generator(np.random.PCG64(geo)), np.random.Generator(np.random.PCG64(samp))


# --- spring chain ------------------------------------------------------------

def build_spring_chain(n_heavy=8, n_light=2, m1=1.0, m2=1e-3, k=1.0):
    """Masses on springs, anchored to a wall at the first mass and free at the last.

    Returns the diagonal of ``M``, ``K`` (sparse) and the unit load vector
    on the third-last mass.
    """
    n = n_heavy + n_light
    if n_heavy < 1 or n_light < 0 or n < 3:
        raise ValueError("need at least one heavy mass and three masses in total")
    main = np.full(n, 2.0 * k)
    main[-1] = k
    K = sp.diags([main, np.full(n - 1, -k), np.full(n - 1, -k)], [0, 1, -1], format="csr")
    m = np.concatenate([np.full(n_heavy, m1), np.full(n_light, m2)])
    f_x = np.zeros(n)
    f_x[n - 3] = 1.0
    return m, K, f_x


def spring_chain_system(n_heavy=8, n_light=2, m1=1.0, m2=1e-3, k=1.0):
    """Partitioned chain: heavy masses explicit, light masses implicit."""
    m, K, f_x = build_spring_chain(n_heavy, n_light, m1, m2, k)
    return PartitionedSystem.from_matrices(sp.diags(m, format="csr"), K, f_x, range(n_heavy))


# --- configuration -----------------------------------------------------------

@dataclass
class ScenarioConfig:
    name: str = "custom"
    geometry: str = "csg"  # "csg" or "spring-chain"
    domain: ImplicitDomain | None = None
    extent: AxisBox | None = None
    cells: tuple = ()
    p: int = 1
    tree_depth: int = 0
    eps: float = EMPTY_THRESHOLD
    n_samples: int = 2
    rho: float = 1.0
    c: float = 1.0
    beta: float = 6
    signal: TemporalSignal = field(default_factory=lambda: TemporalSignal("gaussian_derivative", 2.0))
    source_center: tuple = ()
    source_sigma: float = 0.06
    source_amplitude: float = 1.0
    receivers: list = field(default_factory=list)
    integrator: str = "imex"
    dt: float | None = None
    m: int = 5
    coupling: str = "interpolated"
    T: float = 1.0
    seed: int = 0
    out_dir: str | None = None
    chain: dict = field(default_factory=dict)
    error_points: int = N_ERROR_POINTS
    reference: str = "none"
    reference_refine: int = 2
    reference_dt_ratio: float = 20.0
    holes: np.ndarray | None = field(default=None, repr=False)

    def validate(self):
        if not self.T > 0:
            raise ConfigError("run duration T must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("time step must be positive")
        if self.integrator not in INTEGRATOR_KINDS:
            raise ConfigError(f"unknown integrator {self.integrator!r}; choose from {INTEGRATOR_KINDS}")
        if self.m < 1:
            raise ConfigError("leap-frog substep ratio must be >= 1")
        if self.reference not in ("none", "refined"):
            raise ConfigError("error.reference must be 'none' or 'refined'")
        if self.geometry == "spring-chain":
            return self
        if self.extent is None or self.domain is None:
            raise ConfigError("a CSG scenario needs an extent and a domain")
        if len(self.cells) != self.extent.dim:
            raise ConfigError("mesh.cells must give one count per axis")
        if self.p < 1 or self.tree_depth < 0:
            raise ConfigError("need p >= 1 and tree_depth >= 0")
        if not 0 < self.eps < 1:
            raise ConfigError("mesh.eps must lie in (0, 1)")
        if not self.beta > 0:
            raise ConfigError("material.beta must be positive")
        for r in self.receivers:
            if len(r) != self.extent.dim or not self.extent.member(np.asarray(r, dtype=float)[None]).all():
                raise ConfigError(f"receiver {r} lies outside the extent")
        return self

    @property
    def material(self):
        return Material(self.rho, self.c)

    @property
    def indicator(self):
        return IndicatorConfig(self.beta)

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    def spatial_source(self):
        center, sigma, amp = self.source_center, self.source_sigma, self.source_amplitude
        return lambda x: gaussian_bell(x, center, sigma, amp)


def plate_holes(seed, n_holes=10):
    """Hole centers and radii ``(n, 3)`` drawn from the geometry stream."""
    rng, _ = streams(seed)
    xs = rng.uniform(2.0, 10.0, n_holes)
    ys = rng.uniform(0.0, 4.0, n_holes)
    rs = rng.uniform(0.2, 0.6, n_holes)
    return np.stack([xs, ys, rs], axis=1)


def plate_domain(holes, size=(10.0, 4.0)):
    plate = AxisBox((0.0, 0.0), tuple(size))
    disks = tuple(Ball((x, y), r) for x, y, r in holes)
    return ImplicitDomain(Difference(plate, Union(disks)) if disks else plate)


def build_plate(seed=0, n_holes=10, **overrides):
    """Perforated 10 m x 4 m plate with randomly placed circular holes."""
    holes = plate_holes(seed, n_holes)
    cfg = ScenarioConfig(
        name="plate", domain=plate_domain(holes), extent=AxisBox((0.0, 0.0), (10.0, 4.0)),
        cells=(40, 16), p=5, tree_depth=6, rho=1.0, c=1.0, beta=6,
        signal=TemporalSignal("gaussian_derivative", 2.0),
        source_center=(1.0, 2.0), source_sigma=0.06, source_amplitude=10.0,
        receivers=[(3.0, 2.0), (9.5, 2.0)], integrator="imex", T=10.0, seed=seed, holes=holes)
    return replace(cfg, **overrides).validate()


BLOCK3D_SOURCE = (1.04066, 0.542926, 1.0)
BLOCK3D_RECEIVERS = [(0.27966, 0.39788, 0.57757), (0.34066, 0.18043, 1.0),
                     (0.78096, 0.47348, 1.4967)]


def block3d_domain():
    """Concrete column with a chamfer, a notch and spherical voids.

    Stands in for the triangulated pillar; it contains the source and all
    receivers and is cut by the grid on every side.
    """
    column = AxisBox((0.15, 0.1, 0.05), (1.15, 0.7, 1.95))
    chamfer = HalfSpace((-1.0, -1.0, 0.0), -1.65)  # x + y >= 1.65
    notch = AxisBox((0.5, 0.0, 0.8), (0.7, 0.3, 1.2))
    voids = (Ball((0.65, 0.4, 0.3), 0.15), Ball((0.6, 0.35, 1.75), 0.12),
             Ball((0.95, 0.3, 0.55), 0.1))
    return ImplicitDomain(Difference(column, Union((chamfer, notch) + voids)))


def build_block3d(**overrides):
    cfg = ScenarioConfig(
        name="block3d", domain=block3d_domain(), extent=AxisBox((0.0, 0.0, 0.0), (1.25, 1.25, 2.0)),
        cells=(20, 20, 32), p=4, tree_depth=5, rho=2400.0, c=3000.0, beta=5,
        signal=TemporalSignal("sine_burst", 20e3, 2), source_center=BLOCK3D_SOURCE,
        source_sigma=0.06, source_amplitude=1.0, receivers=list(BLOCK3D_RECEIVERS),
        integrator="imex", dt=1e-6, T=1e-3)
    return replace(cfg, **overrides).validate()


def build_chain_config(**overrides):
    cfg = ScenarioConfig(name="spring-chain", geometry="spring-chain",
                         signal=TemporalSignal("harmonic", 0.1), integrator="imex",
                         dt=5e-3, T=50.0, receivers=[],
                         chain=dict(n_heavy=8, n_light=2, m1=1.0, m2=1e-3, k=1.0))
    return replace(cfg, **overrides).validate()


PRESETS = {"plate": build_plate, "block3d": build_block3d, "spring-chain": build_chain_config}


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def parse_config_text(text):
    """Parse ``key = value`` lines into a flat dict with dotted keys.

    ``[section]`` headers prefix the following keys; ``#`` starts a comment.
    """
    out, prefix = {}, ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            prefix = line[1:-1].strip() + "."
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[prefix + key] = val
    return out


def config_from_mapping(values, kind=None):
    """Build a :class:`ScenarioConfig` from dotted keys, starting from a preset."""
    v = dict(values)
    kind = v.pop("geometry.kind", kind or "plate")
    seed = int(v.pop("seed", v.pop("run.seed", v.pop("geometry.seed", 0))))
    try:
        if kind == "plate":
            base = build_plate(seed, int(v.pop("geometry.holes", 10)))
        elif kind in PRESETS:
            base = PRESETS[kind]()
        elif kind == "csg":
            base = ScenarioConfig(name="csg")
        else:
            raise ConfigError(f"unknown geometry.kind {kind!r}")
        upd = {"seed": seed}
        sig = dict(kind=base.signal.kind, fs=base.signal.fs, cycles=base.signal.cycles)
        chain = dict(base.chain)
        for key, val in v.items():
            if key == "geometry.domain":
                upd["domain"] = parse_csg(val)
            elif key == "geometry.extent":
                c = _floats(val)
                upd["extent"] = AxisBox(c[: len(c) // 2], c[len(c) // 2:])
            elif key == "mesh.cells":
                upd["cells"] = tuple(int(x) for x in _floats(val))
            elif key in ("mesh.p", "mesh.tree_depth", "mesh.samples"):
                upd[{"mesh.samples": "n_samples"}.get(key, key[5:])] = int(val)
            elif key == "mesh.eps":
                upd["eps"] = float(val)
            elif key in ("material.rho", "material.c", "material.beta"):
                upd[key.split(".")[1]] = float(val)
            elif key == "source.kind":
                sig["kind"] = val
            elif key == "source.fs":
                sig["fs"] = float(val)
            elif key == "source.cycles":
                sig["cycles"] = int(val)
            elif key == "source.sigma":
                upd["source_sigma"] = float(val)
            elif key == "source.center":
                upd["source_center"] = _floats(val)
            elif key == "source.amplitude":
                upd["source_amplitude"] = float(val)
            elif key.startswith("receivers."):
                upd.setdefault("receivers", [])
                upd["receivers"].append(_floats(val))
            elif key == "integrator.kind":
                upd["integrator"] = val
            elif key == "integrator.dt":
                upd["dt"] = float(val)
            elif key == "integrator.m":
                upd["m"] = int(val)
            elif key == "integrator.coupling":
                upd["coupling"] = val
            elif key in ("run.T", "T"):
                upd["T"] = float(val)
            elif key in ("run.out", "out"):
                upd["out_dir"] = val
            elif key == "error.points":
                upd["error_points"] = int(val)
            elif key == "error.reference":
                upd["reference"] = val
            elif key == "error.refine":
                upd["reference_refine"] = int(val)
            elif key == "error.dt_ratio":
                upd["reference_dt_ratio"] = float(val)
            elif key.startswith("chain."):
                name = key[6:]
                chain[name] = int(val) if name.startswith("n_") else float(val)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        upd["signal"] = TemporalSignal(sig["kind"], sig["fs"], sig["cycles"])
        if chain:
            upd["chain"] = chain
        return replace(base, **upd).validate()
    except ConfigError:
        raise
    except (ValueError, TypeError, SyntaxError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, kind=None):
    return config_from_mapping(parse_config_text(Path(path).read_text(encoding="utf-8")), kind)


def dump_config(cfg):
    """Serialise a CSG scenario config to the ``key = value`` format."""
    lines = ["geometry.kind = csg", f"seed = {cfg.seed}",
             f"geometry.domain = {to_csg(cfg.domain)}",
             "geometry.extent = " + ", ".join(repr(v) for v in cfg.extent.lo + cfg.extent.hi),
             "mesh.cells = " + ", ".join(str(n) for n in cfg.cells),
             f"mesh.p = {cfg.p}", f"mesh.tree_depth = {cfg.tree_depth}", f"mesh.eps = {cfg.eps!r}",
             f"mesh.samples = {cfg.n_samples}",
             f"material.rho = {cfg.rho!r}", f"material.c = {cfg.c!r}", f"material.beta = {cfg.beta!r}",
             f"source.kind = {cfg.signal.kind}", f"source.fs = {cfg.signal.fs!r}",
             f"source.cycles = {cfg.signal.cycles}", f"source.sigma = {cfg.source_sigma!r}",
             "source.center = " + ", ".join(repr(v) for v in cfg.source_center),
             f"source.amplitude = {cfg.source_amplitude!r}"]
    lines += [f"receivers.r{i} = " + ", ".join(repr(v) for v in r) for i, r in enumerate(cfg.receivers)]
    lines += [f"integrator.kind = {cfg.integrator}", f"integrator.m = {cfg.m}",
              f"integrator.coupling = {cfg.coupling}", f"run.T = {cfg.T!r}"]
    if cfg.dt is not None:
        lines.append(f"integrator.dt = {cfg.dt!r}")
    return "\n".join(lines) + "\n"


# --- discretization & errors -------------------------------------------------

@dataclass
class Discretization:
    mesh: object
    system: PartitionedSystem
    cut_data: dict
    config: ScenarioConfig
    _hrz: PartitionedSystem | None = None

    @property
    def hrz_system(self):
        if self._hrz is None:
            cfg = self.config
            self._hrz = assemble(self.mesh, cfg.material, cfg.indicator, "hrz",
                                 cfg.spatial_source(), self.cut_data)
        return self._hrz


def discretize(cfg):
    mesh = build_mesh(cfg.extent, cfg.cells, cfg.p, cfg.domain, cfg.tree_depth, cfg.eps,
                      cfg.n_samples)
    cut = cut_element_data(mesh, cfg.material, cfg.indicator)
    system = assemble(mesh, cfg.material, cfg.indicator, "consistent", cfg.spatial_source(), cut)
    return Discretization(mesh, system, cut, cfg)


def l2_error(u, u_ref):
    """Relative discrete L2 error over sample values."""
    u, u_ref = np.asarray(u, dtype=float), np.asarray(u_ref, dtype=float)
    den = float(np.sum(u_ref**2))
    if den == 0.0:
        raise ValueError("reference field has zero norm")
    return float(np.sqrt(np.sum((u - u_ref) ** 2) / den))


def sample_physical_points(domain, extent, n_target, seed, batch=4096):
    """Uniform points in ``extent`` kept only if inside ``domain``; reproducible per seed."""
    if n_target < 1:
        raise ValueError("need at least one sample point")
    _, rng = streams(seed)
    lo, hi = np.asarray(extent.lo), np.asarray(extent.hi)
    kept, count = [], 0
    while count < n_target:
        pts = lo + rng.random((batch, len(lo))) * (hi - lo)
        pts = pts[domain.contains(pts)]
        kept.append(pts)
        count += len(pts)
    return np.vstack(kept)[:n_target]


# --- running -------------------------------------------------------------

def integrate(kind, system, f_t, dt, n_steps, observers=(), m=5, coupling="interpolated",
              hrz_system=None, **kw):
    """Dispatch one of the named integrators."""
    if kind == "cdm":
        return run_cdm(system, f_t, dt, n_steps, observers=observers, **kw)
    if kind == "cdm-hrz":
        return run_cdm(hrz_system if hrz_system is not None else system, f_t, dt, n_steps,
                       observers=observers, **kw)
    if kind == "trapezoidal":
        return run_trapezoidal(system, f_t, dt, n_steps, observers=observers, **kw)
    if kind == "imex":
        return run_newmark_imex(system, f_t, dt, n_steps, observers=observers, **kw)
    if kind == "leapfrog":
        return run_leapfrog(system, f_t, dt, m, n_steps, observers=observers, coupling=coupling, **kw)
    raise ConfigError(f"unknown integrator {kind!r}")


class Recorder:
    """Observer collecting receiver values and elastic energy every ``every`` steps."""

    def __init__(self, K, probe=None, every=1):
        self.K = K
        self.probe = probe
        self.every = every
        self.t, self.traces, self.energy = [], [], []

    def __call__(self, step, t, u):
        if step % self.every:
            return
        self.t.append(t)
        self.energy.append(elastic_energy(self.K, u))
        if self.probe is not None:
            self.traces.append(self.probe @ u)

    def write(self, out_dir):
        out_dir = Path(out_dir)
        files = []
        path = out_dir / "energy.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "E"])
            w.writerows(zip(self.t, self.energy))
        files.append(path.name)
        if self.probe is not None:
            path = out_dir / "receivers.csv"
            n = self.probe.shape[0]
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t"] + [f"r{i}" for i in range(n)])
                for t, row in zip(self.t, self.traces):
                    w.writerow([t] + list(row))
            files.append(path.name)
        return files


@dataclass
class RunReport:
    scenario: str
    integrator: str
    dt: float
    n_steps: int
    n_dof: int
    n_d: int
    n_c: int
    histogram: list = field(default_factory=list)
    critical: dict = field(default_factory=dict)
    wall_time: float = 0.0
    errors: dict = field(default_factory=dict)
    stable: bool = True
    files: list = field(default_factory=list)

    def as_items(self):
        items = [("scenario", self.scenario), ("integrator", self.integrator), ("dt", self.dt),
                 ("n_steps", self.n_steps), ("n_dof", self.n_dof), ("n_d", self.n_d),
                 ("n_c", self.n_c), ("stable", self.stable), ("runtime_s", self.wall_time)]
        labels = ["empty"] + [f"[{k / 10:.1f},{(k + 1) / 10:.1f})" for k in range(10)] + ["full"]
        labels[1] = "[eps,0.1)"
        items += [(f"fill_ratio.{lab}", c) for lab, c in zip(labels, self.histogram)]
        items += [(f"dt_crit.{k}", v) for k, v in self.critical.items()]
        items += [(f"error.{k}", v) for k, v in self.errors.items()]
        items += [("files", ",".join(self.files))]
        return items

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.as_items())


def critical_report(disc, include_hrz=True):
    """Critical steps per scope of a discretized scenario (seconds)."""
    sysm = disc.system
    out = {"global": critical_dt(sysm, "global").dt_crit}
    if sysm.partition.n_d:
        out["explicit_subsystem"] = critical_dt(sysm, "explicit_subsystem").dt_crit
    cfg = disc.config
    cw = cellwise_critical_dt(disc.mesh, cfg.material, cfg.indicator, cut_data=disc.cut_data)
    kinds = disc.mesh.kinds
    uncut = [dt for c, dt in cw.items() if kinds[c] == CellKind.UNCUT]
    cut = [dt for c, dt in cw.items() if kinds[c] == CellKind.CUT]
    if uncut:
        out["cellwise_uncut"] = uncut[0]
    if cut:
        out["cellwise_cut_min"] = min(cut)
    if include_hrz:
        out["global_hrz"] = critical_dt(disc.hrz_system, "global").dt_crit
        cwh = cellwise_critical_dt(disc.mesh, cfg.material, cfg.indicator, "hrz", disc.cut_data)
        cut_h = [dt for c, dt in cwh.items() if kinds[c] == CellKind.CUT]
        if cut_h:
            out["cellwise_cut_min_hrz"] = min(cut_h)
    return out


def default_dt(kind, critical, m=5, safety=0.9):
    if kind == "cdm":
        return safety * critical["global"]
    if kind == "cdm-hrz":
        return safety * critical["global_hrz"]
    if kind == "leapfrog":
        lim = critical.get("explicit_subsystem", critical["global"])
        cut = critical.get("cellwise_cut_min")
        return safety * (min(lim, m * cut) if cut else lim)
    return safety * critical.get("explicit_subsystem", critical["global"])


def refined_config(cfg, refine=2):
    return replace(cfg, cells=tuple(refine * n for n in cfg.cells))


def reference_solution(cfg, points, dt, refine=2):
    """Field values at ``points`` at ``T`` from an IMEX run on a refined grid."""
    ref = discretize(refined_config(cfg, refine))
    n = int(round(cfg.T / dt))
    traj = run_newmark_imex(ref.system, cfg.signal, cfg.T / n, n, abort_factor=None)
    return interpolation_matrix(ref.mesh, points) @ traj.u


def run(cfg, write=True):
    """Discretize, analyse, integrate and report one scenario."""
    cfg.validate()
    if cfg.geometry == "spring-chain":
        return _run_chain(cfg, write)
    t0 = time.perf_counter()
    disc = discretize(cfg)
    log.info("discretized %s in %.2f s: %d dofs", cfg.name, time.perf_counter() - t0,
             disc.system.n_dof)
    critical = critical_report(disc, include_hrz=cfg.integrator == "cdm-hrz")
    dt = cfg.dt if cfg.dt is not None else default_dt(cfg.integrator, critical, cfg.m)
    n_steps = max(1, int(round(cfg.T / dt)))
    probe = interpolation_matrix(disc.mesh, np.asarray(cfg.receivers)) if cfg.receivers else None
    every = max(1, n_steps // 2000)
    rec = Recorder(disc.system.K, probe, every)
    report = RunReport(cfg.name, cfg.integrator, dt, n_steps, disc.system.n_dof,
                       disc.system.partition.n_d, disc.system.partition.n_c,
                       disc.mesh.fill_ratio_histogram(cfg.eps).tolist(), critical)
    hrz = disc.hrz_system if cfg.integrator == "cdm-hrz" else None
    try:
        traj = integrate(cfg.integrator, disc.system, cfg.signal, dt, n_steps, [rec], cfg.m,
                         cfg.coupling, hrz_system=hrz)
        report.wall_time = traj.wall_time
    except InstabilityError:
        report.stable = False
        traj = None
    if traj is not None and cfg.reference == "refined":
        pts = sample_physical_points(cfg.domain, cfg.extent, cfg.error_points, cfg.seed)
        dt_ref = dt / cfg.reference_dt_ratio
        u_ref = reference_solution(cfg, pts, dt_ref, cfg.reference_refine)
        u = interpolation_matrix(disc.mesh, pts) @ traj.u
        report.errors["e_l2"] = l2_error(u, u_ref)
    if write and cfg.out_dir:
        _write_outputs(cfg, report, rec)
    return report


def chain_reference(cfg):
    m, K, f_x = build_spring_chain(**cfg.chain)
    return harmonic_reference(K, sp.diags(m), f_x, cfg.signal.fs)


def chain_error(traj, amplitude, fs):
    """Final-time l2 error against the harmonic reference."""
    u_ref, _ = reference_state(amplitude, fs, traj.t[-1])
    return float(np.linalg.norm(traj.u - u_ref))


def _run_chain(cfg, write):
    system = spring_chain_system(**cfg.chain)
    if cfg.signal.kind != "harmonic":
        raise ConfigError("the spring chain is driven harmonically (source.kind = harmonic)")
    critical = {"global": critical_dt(system, "global").dt_crit}
    if system.partition.n_d:
        critical["explicit_subsystem"] = critical_dt(system, "explicit_subsystem").dt_crit
    dt = cfg.dt if cfg.dt is not None else default_dt(cfg.integrator, critical, cfg.m)
    # keep dt exact (stability brackets depend on it); end at or just past T
    n_steps = max(1, int(np.ceil(cfg.T / dt - 1e-9)))
    a = chain_reference(cfg)
    u0, v0 = reference_state(a, cfg.signal.fs, 0.0)
    rec = Recorder(system.K, sp.identity(system.n_dof, format="csr"))
    report = RunReport(cfg.name, cfg.integrator, dt, n_steps, system.n_dof,
                       system.partition.n_d, system.partition.n_c, [], critical)
    runner = {"cdm": run_cdm, "cdm-hrz": run_cdm, "trapezoidal": run_trapezoidal,
              "imex": run_newmark_imex}
    try:
        if cfg.integrator == "leapfrog":
            traj = run_leapfrog(system, cfg.signal, dt, cfg.m, n_steps, u0, v0, [rec],
                                coupling=cfg.coupling)
        else:
            traj = runner[cfg.integrator](system, cfg.signal, dt, n_steps, u0, v0, [rec])
        report.wall_time = traj.wall_time
        report.errors["e_l2"] = chain_error(traj, a, cfg.signal.fs)
        e_ref = 0.5 * float(a @ (system.K @ a))
        report.stable = not energy_diverged(rec.energy, e_ref)
    except InstabilityError:
        report.stable = False
    if write and cfg.out_dir:
        _write_outputs(cfg, report, rec)
    return report


def energy_diverged(energy, reference, factor=100.0):
    """True when the elastic energy exceeds ``factor`` times a reference bound."""
    energy = np.asarray(energy, dtype=float)
    return bool(not np.all(np.isfinite(energy)) or energy.max() > factor * reference)


def _write_outputs(cfg, report, rec):
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = rec.write(out)
    if report.errors:
        path = out / "error.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["dt", "integrator", "e_l2", "runtime_s"])
            w.writerow([report.dt, report.integrator, report.errors.get("e_l2", ""), report.wall_time])
        files.append(path.name)
    report.files = files + ["report.txt"]
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")


def write_error_csv(rows, path):
    """Rows of ``(dt, integrator, e_l2, runtime_s)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dt", "integrator", "e_l2", "runtime_s"])
        w.writerows(rows)


@dataclass
class StudyRow:
    dt: float
    integrator: str
    e_l2: float
    runtime_s: float
    stable: bool = True

    def as_csv(self):
        return (self.dt, self.integrator, self.e_l2, self.runtime_s)


def accuracy_study(cfg, sweep, m=5, n_points=None, refine=None, dt_ratio=None, progress=None):
    """Run every ``(integrator, dt)`` of ``sweep`` and measure final-time L2 errors.

    Parameters
    ----------
    cfg : ScenarioConfig
    sweep : dict
        ``{integrator: [dt, ...]}``.
    m : int
        Leap-frog substep ratio.
    n_points, refine, dt_ratio
        Error sampling and reference settings; default to the values in ``cfg``.
    progress : callable, optional
        Called with each finished :class:`StudyRow`.

    Returns
    -------
    rows : list of StudyRow
    info : dict
        Discretization sizes, critical steps, reference step and its runtime.
    """
    n_points = n_points or cfg.error_points
    refine = refine or cfg.reference_refine
    dt_ratio = dt_ratio or cfg.reference_dt_ratio
    disc = discretize(cfg)
    pts = sample_physical_points(cfg.domain, cfg.extent, n_points, cfg.seed)
    P = interpolation_matrix(disc.mesh, pts)
    need_hrz = "cdm-hrz" in sweep
    finals = []
    for kind, dts in sweep.items():
        for dt in dts:
            n = max(1, int(round(cfg.T / dt)))
            try:
                tr = integrate(kind, disc.system, cfg.signal, cfg.T / n, n, m=m,
                               hrz_system=disc.hrz_system if kind == "cdm-hrz" else None)
                finals.append((cfg.T / n, kind, P @ tr.u, tr.wall_time, True))
            except InstabilityError:
                finals.append((cfg.T / n, kind, None, float("nan"), False))
    dt_ref = min(f[0] for f in finals) / dt_ratio
    t0 = time.perf_counter()
    u_ref = reference_solution(cfg, pts, dt_ref, refine)
    ref_time = time.perf_counter() - t0
    rows = []
    for dt, kind, u, wall, ok in finals:
        row = StudyRow(dt, kind, l2_error(u, u_ref) if ok else float("nan"), wall, ok)
        rows.append(row)
        if progress:
            progress(row)
    info = dict(n_dof=disc.system.n_dof, n_d=disc.system.partition.n_d,
                n_c=disc.system.partition.n_c, dt_ref=dt_ref, reference_runtime_s=ref_time,
                critical=critical_report(disc, include_hrz=need_hrz))
    return rows, info
