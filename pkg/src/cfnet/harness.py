"""Sweep experiments: rate vs K, error and timing, stabilized vs original
iteration over SNR, and ZF accuracy.  Each run writes one CSV and one SVG.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import svgplot
from .config import ConfigError, NetworkConfig, RegPolicy
from .linkops import mc_ergodic_rate
from .sere import sere_rate
from .topology import generate_network

__all__ = [
    "KINDS",
    "FIGURES",
    "CSV_HEADER",
    "ExperimentSpec",
    "ResultRow",
    "load_experiment",
    "run_experiment",
    "rows_to_csv",
    "read_csv",
    "render_svg",
]

log = logging.getLogger(__name__)

KINDS = ("rate_vs_k", "error_and_timing", "svt_vs_snr", "zf_error")
FIGURES = {"fig2": "rate_vs_k", "fig3": "error_and_timing",
           "fig4": "svt_vs_snr", "fig5": "zf_error"}
_FIG_OF = {v: k for k, v in FIGURES.items()}

CSV_HEADER = ["kind", "K", "beta", "M", "rho_dB", "precoder", "solver", "mean_rate",
              "rel_error", "time_s", "unstable_flag", "seed"]

_DEFAULTS = {
    "rate_vs_k": dict(K_list=[128, 256, 512], beta_list=[2, 4, 8]),
    "error_and_timing": dict(K_list=[128, 256, 512], beta_list=[2, 4, 8]),
    "svt_vs_snr": dict(K_list=[256], beta_list=[4], rho_list=[0, 10, 20, 30, 40]),
    "zf_error": dict(K_list=[128, 256], beta_list=[2, 4, 8]),
}


@dataclass
class ExperimentSpec:
    """One figure family's sweep.

    ``realizations`` networks are drawn per sweep point and ``mc_draws``
    fading realizations per network.  Empty lists take the family defaults;
    ``M_list`` defaults to the base config's M.
    """

    kind: str
    K_list: list[int] = field(default_factory=list)
    beta_list: list[float] = field(default_factory=list)
    M_list: list[int] = field(default_factory=list)
    rho_list: list[float] = field(default_factory=list)
    realizations: int = 10
    mc_draws: int = 50
    seed: int = 0
    output: str = "results"

    def __post_init__(self):
        if self.kind in FIGURES:
            self.kind = FIGURES[self.kind]
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for name, default in _DEFAULTS[self.kind].items():
            if not getattr(self, name):
                setattr(self, name, list(default))

    def validate(self) -> None:
        for name in ("K_list", "beta_list", "M_list"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        if min(self.K_list) < 1 or min(self.M_list) < 1 or min(self.beta_list) <= 0:
            raise ConfigError("K and M must be >= 1 and beta > 0")
        if self.kind == "svt_vs_snr" and not self.rho_list:
            raise ConfigError("svt_vs_snr needs rho_list")
        if self.kind == "zf_error":
            bad = [b for b in self.beta_list if not b > 1]
            if bad:
                raise ConfigError(f"zf_error needs beta > 1, got {bad}")
        if self.realizations < 1 or self.mc_draws < 1:
            raise ConfigError("realizations and mc_draws must be >= 1")

    @property
    def figure(self) -> str:
        return _FIG_OF[self.kind]


@dataclass
class ResultRow:
    kind: str
    K: int
    beta: float
    M: int
    rho_dB: float | None
    precoder: str
    solver: str
    mean_rate: float
    rel_error: float | None
    time_s: float | None
    unstable_flag: bool
    seed: int


_SPEC_FIELDS = {f.name for f in fields(ExperimentSpec)} - {"kind"}


def load_experiment(source, kind: str | None = None, *, seed: int | None = None):
    """Read a flat JSON config holding NetworkConfig and ExperimentSpec keys.

    ``source`` is a path or an already-parsed dict.  ``seed`` overrides the
    file's seed.  Returns ``(NetworkConfig, ExperimentSpec)``.
    """
    if isinstance(source, dict):
        data = dict(source)
    else:
        try:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {source}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    net_names = {f.name for f in fields(NetworkConfig)}
    unknown = set(data) - net_names - _SPEC_FIELDS - {"kind"}
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if seed is not None:
        data["seed"] = seed
    cfg = NetworkConfig.from_dict({k: v for k, v in data.items() if k in net_names})
    kind = kind or data.get("kind")
    if kind is None:
        raise ConfigError("experiment kind not given")
    spec_kwargs = {k: v for k, v in data.items() if k in _SPEC_FIELDS}
    spec_kwargs.setdefault("realizations", cfg.network_realizations)
    spec_kwargs.setdefault("mc_draws", cfg.mc_realizations)
    spec_kwargs["seed"] = cfg.seed
    spec = ExperimentSpec(kind=kind, **spec_kwargs)
    if not spec.M_list:
        spec.M_list = [cfg.num_subnetworks_M]
    spec.validate()
    return cfg, spec


# -- evaluation -------------------------------------------------------------

def _network_eval(cfg: NetworkConfig, index: int, mc_draws: int, solvers):
    topo, profile = generate_network(cfg, index)
    out = {}
    mc = mc_ergodic_rate(topo, profile, cfg, mc_draws, network_index=index)
    out["mc"] = (mc.central_rate, mc.time_s, False)
    for solver in solvers:
        de = sere_rate(topo, profile, cfg, method=solver)
        rate = de.central_rate
        out[solver] = (rate, de.time_s, not (de.stable and math.isfinite(rate)))
    return out


def _point(cfg, spec, solvers, pool):
    def job(i):
        return _network_eval(cfg, i, spec.mc_draws, solvers)

    if pool is None:
        per_net = [job(i) for i in range(spec.realizations)]
    else:
        per_net = list(pool.map(job, range(spec.realizations)))
    agg = {}
    for name in ["mc", *solvers]:
        vals = [r[name] for r in per_net]
        rates = [v[0] for v in vals]
        unstable = any(v[2] for v in vals)
        with np.errstate(all="ignore"):
            mean = float(np.mean(rates)) if all(math.isfinite(x) for x in rates) else math.nan
        agg[name] = (mean, float(np.mean([v[1] for v in vals])), unstable or not math.isfinite(mean))
    # mean over networks of the per-network relative error against MC
    rel = {}
    for name in solvers:
        with np.errstate(all="ignore"):
            errs = [abs(r[name][0] - r["mc"][0]) / r["mc"][0] for r in per_net]
        rel[name] = float(np.mean(errs)) if all(math.isfinite(e) for e in errs) else math.nan
    return agg, rel


def _sweep_points(spec: ExperimentSpec):
    rhos = spec.rho_list if spec.kind == "svt_vs_snr" else [None]
    for M in spec.M_list:
        for beta in spec.beta_list:
            for K in spec.K_list:
                for rho in rhos:
                    yield int(M), float(beta), int(K), (None if rho is None else float(rho))


def run_experiment(spec: ExperimentSpec, base: NetworkConfig | None = None, *,
                   threads: int = 1, timing: bool = True,
                   write: bool = True) -> list[ResultRow]:
    """Run every sweep point of ``spec`` and optionally write CSV and SVG.

    Networks of a sweep point are evaluated in parallel when ``threads > 1``;
    aggregation always follows network index order.  With ``timing=False``
    the ``time_s`` column is left empty so the CSV is byte-reproducible.
    """
    base = (base or NetworkConfig()).replace(seed=spec.seed)
    if not spec.M_list:
        spec.M_list = [base.num_subnetworks_M]
    spec.validate()
    precoder = "zf" if spec.kind == "zf_error" else "rzf"
    solvers = ["svt", "original"] if spec.kind == "svt_vs_snr" else ["svt"]
    rows: list[ResultRow] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for M, beta, K, rho in _sweep_points(spec):
            if spec.kind == "zf_error":
                policy = RegPolicy("zf")
            elif rho is not None:
                policy = RegPolicy("snr", float(rho))
            else:
                policy = base.reg_policy
            cfg = base.replace(num_subnetworks_M=M, antenna_ratio_beta=beta,
                               total_users_K=K, reg_policy=policy,
                               mc_realizations=spec.mc_draws,
                               network_realizations=spec.realizations)
            log.info("%s: M=%d beta=%g K=%d rho=%s", spec.kind, M, beta, K, rho)
            agg, errors = _point(cfg, spec, solvers, pool)
            for name in ["mc", *solvers]:
                rate, t, unstable = agg[name]
                rel = errors.get(name)
                rows.append(ResultRow(spec.kind, K, beta, M, rho, precoder, name, rate,
                                      rel, t if timing else None, unstable, spec.seed))
    finally:
        if pool is not None:
            pool.shutdown()
    if write:
        out = Path(spec.output)
        out.mkdir(parents=True, exist_ok=True)
        text = rows_to_csv(rows)
        (out / f"{spec.figure}.csv").write_text(text, encoding="utf-8")
        (out / f"{spec.figure}.svg").write_text(render_svg(spec.kind, read_csv(text)),
                                                encoding="utf-8")
    return rows


# -- CSV --------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in CSV_HEADER])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Parse CSV text written by :func:`rows_to_csv` back into typed dicts."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append({
            "kind": rec["kind"], "K": int(rec["K"]), "beta": float(rec["beta"]),
            "M": int(rec["M"]),
            "rho_dB": float(rec["rho_dB"]) if rec["rho_dB"] else None,
            "precoder": rec["precoder"], "solver": rec["solver"],
            "mean_rate": float(rec["mean_rate"]),
            "rel_error": float(rec["rel_error"]) if rec["rel_error"] else None,
            "time_s": float(rec["time_s"]) if rec["time_s"] else None,
            "unstable_flag": rec["unstable_flag"] == "1",
            "seed": int(rec["seed"]),
        })
    return out


# -- SVG --------------------------------------------------------------------

def _group(rows, key, x, y, where=lambda r: True):
    series = {}
    for r in rows:
        if not where(r) or r[y] is None:
            continue
        s = series.setdefault(key(r), svgplot.Series(key(r), [], []))
        s.x.append(r[x])
        s.y.append(r[y])
    return list(series.values())


def render_svg(kind: str, rows: list[dict]) -> str:
    """Chart for one figure family, built only from parsed CSV rows."""
    def lab(r):
        return f"beta={r['beta']:g} M={r['M']} {r['solver']}"

    def lab_beta(r):
        return f"beta={r['beta']:g} M={r['M']}"

    if kind == "rate_vs_k":
        panels = [svgplot.Panel("Central-subnetwork rate vs users", "K",
                                "mean rate [bit/s/Hz]", _group(rows, lab, "K", "mean_rate"))]
    elif kind == "error_and_timing":
        panels = [
            svgplot.Panel("Relative error of SERE", "K", "relative error",
                          _group(rows, lab_beta, "K", "rel_error",
                                 lambda r: r["solver"] != "mc")),
            svgplot.Panel("Computation time per network", "K", "time [s]",
                          _group(rows, lab, "K", "time_s"), logx=True, logy=True),
        ]
    elif kind == "svt_vs_snr":
        def lab_rho(r):
            return f"K={r['K']} M={r['M']} {r['solver']}"
        panels = [svgplot.Panel("Stabilized vs original iteration", "rho [dB]",
                                "relative error",
                                _group(rows, lab_rho, "rho_dB", "rel_error",
                                       lambda r: r["solver"] != "mc"))]
    elif kind == "zf_error":
        panels = [svgplot.Panel("Relative error under ZF", "K", "relative error",
                                _group(rows, lab_beta, "K", "rel_error",
                                       lambda r: r["solver"] != "mc"))]
    else:
        raise ValueError(kind)
    return svgplot.render(panels)
