"""Free-field reproduction experiments: scenarios, sweeps and SDR scoring."""
import csv
import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sphfunc
from ._metrics import sdr, sdr_ratio
from .capture import DEFAULT_XI_FACTOR, MicArray, idha_estimate
from .field import (PlaneWaveField, PointSourceField, WaveContext, plane_wave_coeffs,
                    plane_wave_pressure, point_source_coeffs, point_source_pressure,
                    transfer_coeffs, transfer_matrix)
from .reproduce import (DEFAULT_REG_FACTOR, Rectangle, mm_truncation_order, prune_wmm_weights,
                        region_quadrature, shape_from_dict, solve_mm, solve_pm, solve_wmm,
                        solve_wpm, weight_mm, weight_pm)

__all__ = [
    "METHODS",
    "COEFF_MODES",
    "Scenario",
    "SdrResult",
    "RunResult",
    "square_perimeter_sources",
    "build_standard_scenario",
    "load_scenario",
    "save_scenario",
    "sdr",
    "sdr_ratio",
    "run_scenario",
    "sweep_frequencies",
    "sweep_control_points",
    "sweep_order",
    "write_table",
    "max_workers",
]

METHODS = ("pm", "wpm", "mm", "wmm")
# idha: estimated source coefficients, analytic desired coefficients.
# idha_full: both estimated from control-point pressures.
# analytic: both analytic.
COEFF_MODES = ("idha", "idha_full", "analytic")
WORKERS_ENV = "SFREPRO_MAX_WORKERS"


def square_perimeter_sources(side=2.0, num=48, z=0.0):
    """Equally spaced points on a square's border, starting at a corner.

    Points run counter-clockwise from ``(-side/2, -side/2)``.
    """
    if num % 4:
        raise ValueError("source count must be divisible by four")
    per_side = num // 4
    s = np.linspace(-side / 2, side / 2, per_side + 1)[:-1]
    h = side / 2
    xy = np.concatenate([
        np.column_stack([s, np.full(per_side, -h)]),
        np.column_stack([np.full(per_side, h), s]),
        np.column_stack([-s, np.full(per_side, h)]),
        np.column_stack([np.full(per_side, -h), -s]),
    ])
    return np.column_stack([xy, np.full(num, z)])


@dataclass
class Scenario:
    """Complete description of a free-field reproduction experiment.

    Control points form a regular ``n x n`` grid over the rectangular target
    region unless ``control_points`` lists them explicitly. ``control_layout`` is
    ``"inclusive"`` (grid touches the region edges) or ``"inset"``
    (cell-centered).
    """

    sources: np.ndarray = field(default_factory=square_perimeter_sources)
    region: object = field(default_factory=Rectangle)
    control_count: int = 36
    control_layout: str = "inclusive"
    control_points: np.ndarray = None
    eval_spacing: float = 0.02
    weight_rule: str = "uniform"
    desired: dict = field(default_factory=lambda: {
        "type": "plane_wave",
        "direction": [float(np.sqrt(0.5)), float(np.sqrt(0.5)), 0.0],
        "amplitude": 1.0,
    })
    frequencies: list = field(default_factory=lambda: [1100.0])
    methods: list = field(default_factory=lambda: list(METHODS))
    mm_order: int = None
    mm_radius: float = None
    mm_sectorial: bool = True
    wmm_order: int = 30
    prune: bool = False
    prune_factor: float = 1e-3
    prune_rule: str = "sum"
    reg_factor: float = DEFAULT_REG_FACTOR
    xi_factor: float = DEFAULT_XI_FACTOR
    coeff_mode: str = "idha"
    estimation_order: int = None
    center: tuple = (0.0, 0.0, 0.0)
    sound_speed: float = 343.0
    dump_fields: bool = False

    def __post_init__(self):
        self.sources = np.asarray(self.sources, dtype=float)
        if isinstance(self.region, dict):
            self.region = shape_from_dict(self.region)
        if self.control_points is not None:
            self.control_points = np.asarray(self.control_points, dtype=float)
        self.frequencies = [float(f) for f in self.frequencies]
        self.methods = [m.lower() for m in self.methods]
        self.center = tuple(float(v) for v in self.center)
        self.validate()

    def validate(self):
        if self.sources.ndim != 2 or self.sources.shape[1] != 3 or not len(self.sources):
            raise ValueError("sources must have shape (L, 3)")
        if not np.all(np.isfinite(self.sources)):
            raise ValueError("source positions must be finite")
        if not self.frequencies or min(self.frequencies) <= 0:
            raise ValueError("frequencies must be a non-empty list of positive values")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.coeff_mode not in COEFF_MODES:
            raise ValueError(f"coeff_mode must be one of {COEFF_MODES}")
        if self.weight_rule not in ("uniform", "trapezoid", "simpson"):
            raise ValueError("weight_rule must be 'uniform', 'trapezoid' or 'simpson'")
        if self.control_layout not in ("inclusive", "inset"):
            raise ValueError("control_layout must be 'inclusive' or 'inset'")
        if self.desired.get("type") not in ("plane_wave", "point_source"):
            raise ValueError("desired field type must be 'plane_wave' or 'point_source'")
        if not self.region.contains(self.control()).all():
            raise ValueError("control points must lie inside the target region")

    def control(self):
        if self.control_points is not None:
            return self.control_points
        n = int(round(np.sqrt(self.control_count)))
        if n * n != self.control_count or n < 1:
            raise ValueError("control_count must be a positive perfect square")
        if not isinstance(self.region, Rectangle):
            raise ValueError("grid control points need a rectangular region")
        return self.region.grid((n, n), inclusive=self.control_layout == "inclusive")

    def desired_field(self):
        desc = dict(self.desired)
        kind = desc.pop("type")
        if kind == "plane_wave":
            return PlaneWaveField(np.asarray(desc["direction"], dtype=float),
                                  complex(desc.get("amplitude", 1.0)))
        return PointSourceField(np.asarray(desc["position"], dtype=float),
                                complex(desc.get("amplitude", 1.0)))

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, np.ndarray):
                value = value.tolist()
            elif f.name == "region":
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown scenario keys {sorted(unknown)}")
        return cls(**data)


def build_standard_scenario(frequencies=(1100.0,)):
    """48 sources on a 2 m square, 1 m square target, 6 x 6 control grid,
    0.02 m evaluation grid and a plane wave along (1, 1, 0)/sqrt(2)."""
    return Scenario(frequencies=list(frequencies))


def load_scenario(path):
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))


def save_scenario(scenario, path):
    with open(path, "w") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class SdrResult:
    method: str
    frequency: float
    sdr_db: float
    ratio: float
    squared_error: np.ndarray = field(default=None, repr=False)


@dataclass
class RunResult:
    results: list
    failures: list
    fields: dict = field(default_factory=dict, repr=False)

    @property
    def ok(self):
        return not self.failures

    def table(self):
        return {(r.method, r.frequency): r.sdr_db for r in self.results}


def max_workers():
    """Worker cap from ``SFREPRO_MAX_WORKERS`` (default: up to 4 CPUs)."""
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        value = int(raw)
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer")
        return value
    return max(1, min(4, os.cpu_count() or 1))


# ------------------------------------------------------------ evaluation

def _fit_order(coeffs, order):
    """Truncate or zero-pad coefficient rows to ``order``."""
    rows = sphfunc.num_coeffs(order)
    if coeffs.shape[0] >= rows:
        return coeffs[:rows]
    pad = np.zeros((rows - coeffs.shape[0],) + coeffs.shape[1:], dtype=complex)
    return np.concatenate([coeffs, pad])


def _desired_coeffs(target, ctx, center, order):
    if isinstance(target, PlaneWaveField):
        return plane_wave_coeffs(target, ctx, center, order)
    return point_source_coeffs(target, ctx, center, order)


def _desired_pressure(target, ctx, points):
    if isinstance(target, PlaneWaveField):
        return plane_wave_pressure(target, ctx, points)
    return point_source_pressure(target, ctx, points)


class _Frequency:
    """Per-frequency state shared by the four methods."""

    def __init__(self, scenario, frequency, control, region, weight_region):
        self.sc = scenario
        self.weight_region = weight_region
        self.frequency = frequency
        self.ctx = WaveContext.from_frequency(frequency, scenario.sound_speed)
        self.control = control
        self.region = region
        self.target = scenario.desired_field()
        self.center = np.asarray(scenario.center)
        self.G = transfer_matrix(scenario.sources, control, self.ctx)
        self.u_cp = _desired_pressure(self.target, self.ctx, control)

    def coefficients(self, order):
        sc = self.sc
        if sc.coeff_mode == "analytic":
            gc = transfer_coeffs(sc.sources, self.ctx, self.center, order)
            return gc, _desired_coeffs(self.target, self.ctx, self.center, order)
        est_order = order if sc.estimation_order is None else sc.estimation_order
        mics = MicArray(self.control)
        rhs = self.G if sc.coeff_mode == "idha" else np.column_stack([self.G, self.u_cp])
        est = _fit_order(idha_estimate(rhs, mics, self.center, self.ctx, est_order,
                                       xi_factor=sc.xi_factor, warn=False), order)
        if sc.coeff_mode == "idha":
            return est, _desired_coeffs(self.target, self.ctx, self.center, order)
        return est[:, :-1], est[:, -1]

    def solve(self, method):
        sc = self.sc
        if method == "pm":
            return solve_pm(self.G, self.u_cp, reg_factor=sc.reg_factor)
        if method == "wpm":
            weight = weight_pm(self.control, self.weight_region, self.ctx, xi_factor=sc.xi_factor)
            return solve_wpm(self.G, self.u_cp, weight, reg_factor=sc.reg_factor)
        if method == "mm":
            order = sc.mm_order
            if order is None:
                radius = sc.mm_radius if sc.mm_radius is not None else self.region.shape.circumradius
                order = mm_truncation_order(self.ctx, radius)
            gc, uc = self.coefficients(order)
            return solve_mm(gc, uc, order, sc.mm_sectorial, reg_factor=sc.reg_factor)
        gc, uc = self.coefficients(sc.wmm_order)
        weight = weight_mm(self.weight_region, self.ctx, sc.wmm_order, self.center)
        active = None
        if sc.prune:
            active = prune_wmm_weights(weight, sc.prune_factor, sc.prune_rule)
        return solve_wmm(gc, uc, weight, reg_factor=sc.reg_factor, active=active)


def _evaluate(scenario, frequency, control, region, weight_region):
    results, failures, fields = [], [], {}
    try:
        state = _Frequency(scenario, frequency, control, region, weight_region)
        g_eval = transfer_matrix(scenario.sources, region.nodes, state.ctx)
        u_des = _desired_pressure(state.target, state.ctx, region.nodes)
    except Exception as exc:  # noqa: BLE001  recorded per frequency
        return results, [(frequency, "*", f"{type(exc).__name__}: {exc}")], fields
    if scenario.dump_fields:
        fields[("desired", frequency)] = u_des
    for method in METHODS:
        if method not in scenario.methods:
            continue
        try:
            signal = state.solve(method)
            u_syn = g_eval @ signal.d
        except Exception as exc:  # noqa: BLE001
            failures.append((frequency, method, f"{type(exc).__name__}: {exc}"))
            continue
        err = np.abs(u_syn - u_des) ** 2
        results.append(SdrResult(method, frequency, sdr(u_syn, u_des, region.weights),
                                 sdr_ratio(u_syn, u_des, region.weights), err))
        if scenario.dump_fields:
            fields[(method, frequency)] = u_syn
    return results, failures, fields


def run_scenario(scenario, out_dir=None, workers=None):
    """Run every (frequency, method) pair of a scenario.

    Frequencies are processed concurrently; results are returned and
    written in frequency order, then in the fixed method order
    ``pm, wpm, mm, wmm``. A failing pair is recorded in ``failures`` and the
    run continues.

    Parameters
    ----------
    scenario : Scenario
    out_dir : path-like, optional
        Receives ``results.csv``, ``failures.csv``, ``scenario.json`` and, if
        ``scenario.dump_fields`` is set, one ``x, y, z, re, im`` CSV per
        field.
    workers : int, optional
        Thread count; defaults to :func:`max_workers`.

    Returns
    -------
    RunResult
    """
    control = scenario.control()
    region = region_quadrature(scenario.region, scenario.eval_spacing)
    weight_region = region
    if scenario.weight_rule != "uniform":
        weight_region = region_quadrature(scenario.region, scenario.eval_spacing, scenario.weight_rule)
    freqs = sorted(set(scenario.frequencies))
    results, failures, fields = [], [], {}
    if scenario.methods:
        workers = workers or max_workers()
        with ThreadPoolExecutor(max_workers=min(workers, len(freqs))) as pool:
            outcomes = list(pool.map(lambda f: _evaluate(scenario, f, control, region, weight_region), freqs))
        for res, fail, flds in outcomes:
            results.extend(res)
            failures.extend(fail)
            fields.update(flds)
    run = RunResult(results, failures, fields)
    if out_dir is not None:
        _write_run(run, scenario, region, Path(out_dir))
    return run


def _fmt(value):
    if np.isposinf(value):
        return "inf"
    if np.isneginf(value):
        return "-inf"
    return repr(float(value))


def write_table(rows, path, header):
    """CSV with a header row; floats written with full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _write_run(run, scenario, region, out):
    out.mkdir(parents=True, exist_ok=True)
    save_scenario(scenario, out / "scenario.json")
    write_table(((r.method, r.frequency, r.sdr_db, r.ratio) for r in run.results),
                out / "results.csv", ["method", "frequency_hz", "sdr_db", "sdr_ratio"])
    write_table(run.failures, out / "failures.csv", ["frequency_hz", "method", "error"])
    for (name, freq), values in sorted(run.fields.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        rows = ((*map(float, p), float(v.real), float(v.imag)) for p, v in zip(region.nodes, values))
        write_table(rows, out / "fields" / f"{name}_{freq:g}Hz.csv", ["x", "y", "z", "re", "im"])


# ---------------------------------------------------------------- sweeps

def sweep_frequencies(base, frequencies, out_dir=None, workers=None):
    return run_scenario(dataclasses.replace(base, frequencies=list(frequencies)), out_dir, workers)


def sweep_control_points(base, counts, frequency, methods=("pm", "wpm"), workers=None):
    """SDR of pressure-domain methods against the control-grid size.

    Returns
    -------
    rows : list of (count, method, sdr_db)
    failures : list
    """
    rows, failures = [], []
    for count in counts:
        sc = dataclasses.replace(base, control_count=int(count), control_points=None,
                                 frequencies=[frequency], methods=list(methods))
        run = run_scenario(sc, workers=workers)
        rows.extend((int(count), r.method, r.sdr_db) for r in run.results)
        failures.extend((int(count),) + f for f in run.failures)
    return rows, failures


def sweep_order(base, orders, frequency, methods=("mm", "wmm"), workers=None):
    """SDR of mode-domain methods against truncation order, with analytic
    coefficients.

    Returns
    -------
    rows : list of (order, method, sdr_db)
    failures : list
    """
    orders = [int(n) for n in orders]

    def one(order):
        sc = dataclasses.replace(base, coeff_mode="analytic", mm_order=order, wmm_order=order,
                                 frequencies=[frequency], methods=list(methods), prune=False)
        return order, run_scenario(sc, workers=1)

    with ThreadPoolExecutor(max_workers=min(workers or max_workers(), len(orders))) as pool:
        outcomes = list(pool.map(one, orders))
    rows, failures = [], []
    for order, run in outcomes:
        rows.extend((order, r.method, r.sdr_db) for r in run.results)
        failures.extend((order,) + f for f in run.failures)
    return rows, failures
