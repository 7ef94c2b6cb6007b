"""Experiment harness: configuration tree, engine drivers, result emission.

A single JSON-serializable configuration describes the physical setup, the
measurement plan, per-engine numerics, and the output layout. Three engines
produce the same record shape: A (closed-form Gaussian packets), B (grid
Crank-Nicolson with explicit gates), C (eigenbasis filter-matrix chains).
Emission is deterministic: fixed column order, fixed float formatting, a
content hash of the settings in every JSON document, and no wall-clock
fields in any artifact.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .collapse import OutcomeDistribution
from .gaussian_analytic import stroboscopic_widths
from .oscillator import OscillatorBasis, basis_quadrature, project_gaussian
from .pde import Lattice, run_stroboscopic
from .stroboscopic import (
    StroboscopicPlan,
    asymptotic_uncertainty,
    nth_outcome_distribution,
    uncertainty_evolution,
)
from .weights import FILTER_KINDS


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


class TruncationError(RuntimeError):
    """The eigenbasis is too small to represent the initial state."""


ENGINES = ("A", "B", "C")
FORMATS = ("csv", "json", "svg")
GENERATOR = "qmeasure 0.1.0"


@dataclass(frozen=True)
class UnitsConfig:
    mass: float = 0.5
    frequency: float = 1.0
    hbar: float = 1.0


@dataclass(frozen=True)
class StateConfig:
    width: float = 5.0
    center: float = 0.0


@dataclass(frozen=True)
class FilterConfig:
    kind: str = "gaussian"
    error: float = 1.0


@dataclass(frozen=True)
class PlanConfig:
    interval_over_period: float = 0.5
    measurements: int = 16
    results: object = "constant"
    result_value: float = 0.0


@dataclass(frozen=True)
class LatticeConfig:
    x_min: float = -60.0
    x_max: float = 60.0
    points: int = 4801
    time_step: float = 0.000625


@dataclass(frozen=True)
class NumericsConfig:
    levels: int = 64
    quadrature_points: int = 800
    outcome_points: int = 801
    pde_outcome_points: int = 129
    gate_fraction: float = 1e-5
    gate_steps: int = 200
    density_power: int = 2
    lattice: LatticeConfig = field(default_factory=LatticeConfig)


@dataclass(frozen=True)
class SweepConfig:
    start_over_period: float = 0.025
    stop_over_period: float = 1.5
    points: int = 60


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    units: UnitsConfig = field(default_factory=UnitsConfig)
    state: StateConfig = field(default_factory=StateConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    plan: PlanConfig = field(default_factory=PlanConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    engines: tuple = ("A", "C")
    deterministic: bool = True


_NESTED = {
    "units": UnitsConfig,
    "state": StateConfig,
    "filter": FilterConfig,
    "plan": PlanConfig,
    "numerics": NumericsConfig,
    "sweep": SweepConfig,
    "output": OutputConfig,
    "lattice": LatticeConfig,
}


def _coerce_scalar(raw, default, where: str):
    if isinstance(default, bool):
        if not isinstance(raw, bool):
            raise ConfigError(f"{where}: expected true or false")
        return raw
    if isinstance(default, int):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw:
            raise ConfigError(f"{where}: expected an integer")
        return int(raw)
    if isinstance(default, float):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(raw)
    if isinstance(default, str):
        if not isinstance(raw, str):
            raise ConfigError(f"{where}: expected a string")
        return raw
    raise ConfigError(f"{where}: unsupported value")


def _string_tuple(raw, where: str) -> tuple:
    if not isinstance(raw, (list, tuple)) or not all(isinstance(v, str) for v in raw):
        raise ConfigError(f"{where}: expected a list of strings")
    return tuple(raw)


def _build(cls, data, path: str = ""):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'configuration'}: expected an object")
    allowed = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, raw in data.items():
        where = f"{path}{key}"
        if key not in allowed:
            raise ConfigError(f"unknown configuration key '{where}'")
        if key in _NESTED:
            kwargs[key] = _build(_NESTED[key], raw, where + ".")
        elif key == "results":
            if isinstance(raw, str):
                kwargs[key] = raw
            elif isinstance(raw, (list, tuple)):
                try:
                    kwargs[key] = tuple(float(v) for v in raw)
                except (TypeError, ValueError):
                    raise ConfigError(f"{where}: expected numbers") from None
            else:
                raise ConfigError(f"{where}: expected a policy name or a list of outcomes")
        elif key in ("engines", "formats"):
            kwargs[key] = _string_tuple(raw, where)
        else:
            f = allowed[key]
            default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
            kwargs[key] = _coerce_scalar(raw, default, where)
    return cls(**kwargs)


def config_from_mapping(data: dict) -> "ExperimentConfig":
    """Build and validate a configuration from a plain mapping."""
    return validate_config(_build(ExperimentConfig, data))


def load_config(path=None) -> "ExperimentConfig":
    """Read a JSON configuration file; None gives the validated defaults."""
    if path is None:
        return validate_config(ExperimentConfig())
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_mapping(data)


def validate_config(cfg: "ExperimentConfig") -> "ExperimentConfig":
    """Cross-field validation; returns the config with engines and formats
    deduplicated into canonical order."""
    u, s, flt, plan, num, sweep, out = (cfg.units, cfg.state, cfg.filter, cfg.plan,
                                        cfg.numerics, cfg.sweep, cfg.output)
    if u.mass <= 0 or u.frequency <= 0 or u.hbar <= 0:
        raise ConfigError("units: mass, frequency, and hbar must be positive")
    if s.width <= 0:
        raise ConfigError("state.width must be positive")
    if flt.kind not in FILTER_KINDS:
        raise ConfigError(f"filter.kind must be one of {FILTER_KINDS}")
    if flt.error <= 0:
        raise ConfigError("filter.error must be positive")
    if plan.interval_over_period <= 0:
        raise ConfigError("plan.interval_over_period must be positive")
    if plan.measurements < 1:
        raise ConfigError("plan.measurements must be at least 1")
    if isinstance(plan.results, str):
        if plan.results not in ("constant", "alternating"):
            raise ConfigError(f"plan.results: unknown policy {plan.results!r}")
    elif len(plan.results) < plan.measurements - 1:
        raise ConfigError(
            f"plan.results: need at least {plan.measurements - 1} outcomes"
        )
    if num.levels < 2:
        raise ConfigError("numerics.levels must be at least 2")
    if num.quadrature_points < 32:
        raise ConfigError("numerics.quadrature_points must be at least 32")
    if num.outcome_points < 9 or num.pde_outcome_points < 9:
        raise ConfigError("outcome grids need at least 9 points")
    if not 0 < num.gate_fraction < 0.1:
        raise ConfigError("numerics.gate_fraction must lie in (0, 0.1)")
    if num.gate_steps < 10:
        raise ConfigError("numerics.gate_steps must be at least 10")
    if num.density_power not in (2, 4):
        raise ConfigError("numerics.density_power must be 2 or 4")
    lat = num.lattice
    if lat.x_max <= lat.x_min or lat.points < 8 or lat.time_step <= 0:
        raise ConfigError("numerics.lattice: bad grid or time step")
    if sweep.start_over_period <= 0 or sweep.stop_over_period < sweep.start_over_period:
        raise ConfigError("sweep: need 0 < start_over_period <= stop_over_period")
    if sweep.points < 2:
        raise ConfigError("sweep.points must be at least 2")
    if not out.directory:
        raise ConfigError("output.directory must be nonempty")
    bad = [f for f in out.formats if f not in FORMATS]
    if bad or not out.formats:
        raise ConfigError(f"output.formats must be a nonempty subset of {FORMATS}")
    engines = tuple(e for e in ENGINES if e in cfg.engines)
    unknown = [e for e in cfg.engines if e not in ENGINES]
    if unknown:
        raise ConfigError(f"unknown engines {unknown}; choose from {ENGINES}")
    if not engines:
        raise ConfigError("engines must name at least one of A, B, C")
    if flt.kind == "step" and ("A" in engines or "B" in engines):
        raise ConfigError("step filters run only on engine C")
    if cfg.deterministic is not True:
        raise ConfigError("deterministic must stay true; outputs are reproducible by contract")
    formats = tuple(f for f in FORMATS if f in out.formats)
    return dataclasses.replace(cfg, engines=engines,
                               output=dataclasses.replace(out, formats=formats))


def as_dict(cfg: "ExperimentConfig") -> dict:
    return dataclasses.asdict(cfg)


def config_hash(cfg: "ExperimentConfig") -> str:
    """SHA-256 of the canonical JSON form of the settings."""
    blob = json.dumps(as_dict(cfg), sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class ResultRecord:
    """One emitted row; identical shape across engines and run modes."""

    engine: str
    filter: str
    dt_over_T: float
    n: int
    delta_a_eff: float
    a_tilde: float
    norm: float


def _period(cfg) -> float:
    return 2.0 * np.pi / cfg.units.frequency


def _basis_and_state(cfg):
    u, num = cfg.units, cfg.numerics
    basis = OscillatorBasis(u.mass, u.frequency, num.levels, u.hbar)
    reach = abs(cfg.state.center) + 8.0 * cfg.state.width
    quad = basis_quadrature(basis, reach=reach, points=num.quadrature_points)
    state, captured = project_gaussian(basis, cfg.state.width, cfg.state.center, quad=quad)
    if captured < 0.999:
        raise TruncationError(
            f"levels={num.levels} captures only {captured:.6f} of the initial packet; "
            "raise numerics.levels"
        )
    return basis, state


def _plan(cfg, interval: float) -> StroboscopicPlan:
    p = cfg.plan
    return StroboscopicPlan(interval, p.measurements, cfg.filter.kind,
                            cfg.filter.error, p.results, p.result_value)


def _engine_a_records(cfg, interval: float, dt_over_T: float) -> list:
    u, p = cfg.units, cfg.plan
    tau = cfg.numerics.gate_fraction * _period(cfg)
    recs = stroboscopic_widths(cfg.state.width, interval, p.measurements,
                               cfg.filter.error, tau, u.mass, u.frequency, u.hbar,
                               center=cfg.state.center, results=p.results,
                               result_value=p.result_value)
    return [ResultRecord("A", cfg.filter.kind, dt_over_T, r.n, r.delta_a_eff,
                         r.center, r.norm_squared) for r in recs]


def _engine_b_records(cfg, interval: float, dt_over_T: float, scan_at=None) -> list:
    u, num = cfg.units, cfg.numerics
    lat = Lattice(num.lattice.x_min, num.lattice.x_max, num.lattice.points)
    recs = run_stroboscopic(lat, _plan(cfg, interval), cfg.state.width,
                            num.gate_fraction * _period(cfg), u.mass, u.frequency,
                            u.hbar, center=cfg.state.center,
                            gate_steps=num.gate_steps,
                            time_step=num.lattice.time_step,
                            outcome_points=num.pde_outcome_points,
                            density_power=num.density_power, scan_at=scan_at)
    return [ResultRecord("B", cfg.filter.kind, dt_over_T, r.n, r.delta_a_eff,
                         r.a_tilde, r.norm_squared) for r in recs]


def _engine_c_records(cfg, interval: float, dt_over_T: float) -> list:
    _, state = _basis_and_state(cfg)
    recs = uncertainty_evolution(_plan(cfg, interval), state,
                                 points=cfg.numerics.outcome_points,
                                 density_power=cfg.numerics.density_power)
    return [ResultRecord("C", cfg.filter.kind, dt_over_T, r.n, r.delta_a_eff,
                         r.a_tilde, r.norm_squared) for r in recs]


def run(cfg: "ExperimentConfig") -> list:
    """Per-measurement uncertainty records for every configured engine."""
    dt_over_T = cfg.plan.interval_over_period
    interval = dt_over_T * _period(cfg)
    records = []
    for engine in cfg.engines:
        if engine == "A":
            records.extend(_engine_a_records(cfg, interval, dt_over_T))
        elif engine == "B":
            records.extend(_engine_b_records(cfg, interval, dt_over_T))
        else:
            records.extend(_engine_c_records(cfg, interval, dt_over_T))
    return records


def sweep(cfg: "ExperimentConfig") -> list:
    """Asymptotic uncertainty against the quiescent interval, one row per
    grid point per engine (n is the plan's measurement count)."""
    T = _period(cfg)
    grid = np.linspace(cfg.sweep.start_over_period, cfg.sweep.stop_over_period,
                       cfg.sweep.points)
    N = cfg.plan.measurements
    records = []
    for engine in cfg.engines:
        if engine == "A":
            for r in grid:
                rec = _engine_a_records(cfg, float(r) * T, float(r))[-1]
                records.append(rec)
        elif engine == "B":
            for r in grid:
                rows = _engine_b_records(cfg, float(r) * T, float(r), scan_at={N})
                records.append(rows[-1])
        else:
            _, state = _basis_and_state(cfg)
            for r in grid:
                res = asymptotic_uncertainty(_plan(cfg, float(r) * T), state,
                                             points=cfg.numerics.outcome_points,
                                             density_power=cfg.numerics.density_power)
                records.append(ResultRecord("C", cfg.filter.kind, float(r), N,
                                            res.delta_a_eff, res.a_tilde,
                                            res.norm_squared))
    return records


@dataclass(frozen=True)
class PairReport:
    """Agreement between two engines across the chain."""

    engines: str
    max_rel_early: float
    max_rel_late: float
    tol_early: float
    tol_late: float

    @property
    def passed(self) -> bool:
        return self.max_rel_early <= self.tol_early and self.max_rel_late <= self.tol_late


@dataclass(frozen=True)
class ValidationReport:
    pairs: tuple
    records: tuple

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.pairs)


def cross_validate(cfg: "ExperimentConfig", tol_early: float = 0.10,
                   tol_late: float = 0.01) -> ValidationReport:
    """Pairwise engine agreement on delta_a_eff.

    Measurements n <= 7 are transient (the packet is still narrowing) and
    held to `tol_early`; n >= 8 must agree to `tol_late`. Needs at least two
    engines and at least eight measurements.
    """
    if len(cfg.engines) < 2:
        raise ConfigError("cross validation needs at least two engines")
    if cfg.plan.measurements < 8:
        raise ConfigError("cross validation needs plan.measurements >= 8")
    records = run(cfg)
    by_engine = {}
    for rec in records:
        by_engine.setdefault(rec.engine, {})[rec.n] = rec.delta_a_eff
    pairs = []
    names = sorted(by_engine)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = by_engine[names[i]], by_engine[names[j]]
            early, late = 0.0, 0.0
            for n in sorted(set(a) & set(b)):
                rel = abs(a[n] - b[n]) / (0.5 * (a[n] + b[n]))
                if n >= 8:
                    late = max(late, rel)
                else:
                    early = max(early, rel)
            pairs.append(PairReport(f"{names[i]}/{names[j]}", early, late,
                                    tol_early, tol_late))
    return ValidationReport(tuple(pairs), tuple(records))


def distribution(cfg: "ExperimentConfig") -> OutcomeDistribution:
    """Outcome density of the plan's final measurement (eigenbasis engine)."""
    _, state = _basis_and_state(cfg)
    interval = cfg.plan.interval_over_period * _period(cfg)
    return nth_outcome_distribution(_plan(cfg, interval), state,
                                    points=cfg.numerics.outcome_points,
                                    density_power=cfg.numerics.density_power)


CSV_HEADER = "engine,filter,dt_over_T,n,delta_a_eff,a_tilde,norm"


def _fmt(value: float) -> str:
    # + 0.0 turns negative zero into plain 0
    return f"{value + 0.0:.12g}"


def _records_csv(records) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(",".join([r.engine, r.filter, _fmt(r.dt_over_T), str(r.n),
                               _fmt(r.delta_a_eff), _fmt(r.a_tilde), _fmt(r.norm)]))
    return "\n".join(lines) + "\n"


def _records_json(cfg, records, extra: dict | None = None) -> str:
    doc = {
        "config_hash": config_hash(cfg),
        "generated_by": GENERATOR,
        "settings": as_dict(cfg),
        "records": [dataclasses.asdict(r) for r in records],
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, sort_keys=True, indent=2, default=list) + "\n"


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, count)
    return [float(v) for v in raw]


def render_line_chart(series, x_label: str, y_label: str, title: str) -> str:
    """Hand-rolled SVG line chart; `series` is a list of (label, xs, ys)."""
    w, h, ml, mr, mt, mb = 720, 480, 80, 24, 44, 56
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    pad = 0.05 * (y_hi - y_lo) or max(abs(y_hi), 1.0) * 0.05
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * (w - ml - mr)

    def sy(v):
        return h - mb - (v - y_lo) / (y_hi - y_lo) * (h - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" '
        f'font-family="sans-serif" font-size="13">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.0f}" y="24" text-anchor="middle" font-size="16">{title}</text>',
    ]
    for tv in _ticks(x_lo, x_hi):
        px = sx(tv)
        parts.append(f'<line x1="{px:.1f}" y1="{h - mb}" x2="{px:.1f}" y2="{h - mb + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{h - mb + 20}" text-anchor="middle">{tv:.3g}</text>')
    for tv in _ticks(y_lo, y_hi):
        py = sy(tv)
        parts.append(f'<line x1="{ml - 5}" y1="{py:.1f}" x2="{ml}" y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 9}" y="{py + 4:.1f}" text-anchor="end">{tv:.3g}</text>')
        parts.append(f'<line x1="{ml}" y1="{py:.1f}" x2="{w - mr}" y2="{py:.1f}" '
                     f'stroke="#dddddd" stroke-width="0.5"/>')
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{h - mb}" stroke="black"/>')
    parts.append(f'<line x1="{ml}" y1="{h - mb}" x2="{w - mr}" y2="{h - mb}" stroke="black"/>')
    parts.append(f'<text x="{(ml + w - mr) / 2:.0f}" y="{h - 12}" text-anchor="middle">{x_label}</text>')
    parts.append(f'<text x="20" y="{(mt + h - mb) / 2:.0f}" text-anchor="middle" '
                 f'transform="rotate(-90 20 {(mt + h - mb) / 2:.0f})">{y_label}</text>')
    for idx, (label, xs, ys) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = mt + 16 + 18 * idx
        parts.append(f'<rect x="{w - mr - 150}" y="{ly - 10}" width="12" height="12" fill="{color}"/>')
        parts.append(f'<text x="{w - mr - 132}" y="{ly}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _chart_for(records, mode: str) -> str:
    series = []
    keys = []
    for r in records:
        key = f"{r.engine} ({r.filter})"
        if key not in keys:
            keys.append(key)
    for key in keys:
        rows = [r for r in records if f"{r.engine} ({r.filter})" == key]
        if mode == "sweep":
            xs = [r.dt_over_T for r in rows]
        else:
            xs = [r.n for r in rows]
        series.append((key, xs, [r.delta_a_eff for r in rows]))
    x_label = "interval / period" if mode == "sweep" else "measurement index n"
    return render_line_chart(series, x_label, "effective uncertainty",
                             "Stroboscopic measurement uncertainty")


def emit(cfg: "ExperimentConfig", records, stem: str, extra: dict | None = None) -> list:
    """Write the configured formats under output.directory; returns paths."""
    out_dir = Path(cfg.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in cfg.output.formats:
        path = out_dir / f"{stem}.{fmt}"
        if fmt == "csv":
            path.write_text(_records_csv(records))
        elif fmt == "json":
            path.write_text(_records_json(cfg, records, extra))
        else:
            mode = "sweep" if stem == "sweep" else "run"
            path.write_text(_chart_for(records, mode))
        written.append(path)
    return written


DISTRIBUTION_HEADER = "engine,filter,dt_over_T,a,density"


def emit_distribution(cfg: "ExperimentConfig", dist: OutcomeDistribution) -> list:
    """Write the final-measurement outcome density in the configured formats."""
    out_dir = Path(cfg.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    dt_over_T = cfg.plan.interval_over_period
    written = []
    for fmt in cfg.output.formats:
        path = out_dir / f"distribution.{fmt}"
        if fmt == "csv":
            lines = [DISTRIBUTION_HEADER]
            for a, p in zip(dist.outcomes, dist.density):
                lines.append(",".join(["C", cfg.filter.kind, _fmt(dt_over_T),
                                       _fmt(float(a)), _fmt(float(p))]))
            path.write_text("\n".join(lines) + "\n")
        elif fmt == "json":
            doc = {
                "config_hash": config_hash(cfg),
                "generated_by": GENERATOR,
                "settings": as_dict(cfg),
                "distribution": {
                    "engine": "C",
                    "filter": cfg.filter.kind,
                    "dt_over_T": dt_over_T,
                    "a_tilde": dist.a_tilde,
                    "delta_a_eff": dist.delta_a_eff,
                    "outcomes": [float(v) for v in dist.outcomes],
                    "density": [float(v) for v in dist.density],
                },
            }
            path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=list) + "\n")
        else:
            chart = render_line_chart(
                [(f"C ({cfg.filter.kind})", dist.outcomes, dist.density)],
                "outcome a", "probability density", "Final measurement outcome density")
            path.write_text(chart)
        written.append(path)
    return written
