"""Named experiments driven by YAML configuration files.

``deltaloop run CONFIG``, ``deltaloop list`` and ``deltaloop validate CONFIG``.
Exit status: 0 when every declared claim passes, 1 when a measured claim
fails, 2 for configuration errors and infeasible regimes.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np
import yaml

from .bracketing import asymptotic_fit, enclosure, enclosure_csv, fit_enclosures
from .coefficients import ModelParams
from .errors import ConfigError, CurveError, DomainError, MeshError, MRangeError
from .geometry import LoopCurve, curve_from_mapping, load_curve_spec
from .oracle2d.currents import persistent_current
from .oracle2d.fem import gauge_shift_check, general_solve
from .oracle2d.mesh import MeshControl
from .oracle2d.radial import radial_solve
from .spectral1d import effective_spectrum, est1_check
from .transverse import est2_check

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
PASS, FAIL, FLAGGED, INFO = "pass", "fail", "flagged", "info"

log = logging.getLogger("deltaloop")


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``raw`` keeps the parsed mapping for the digest."""

    experiment: str
    raw: dict
    base_dir: Path
    claims: tuple[str, ...]
    output: Path | None = None
    workers: int = 1

    def get(self, key: str, default: Any = None) -> Any:
        return self.raw.get(key, default)

    def as_list(self, key: str, default=None) -> list:
        value = self.raw.get(key, default)
        if value is None:
            return []
        return list(value) if isinstance(value, (list, tuple)) else [value]

    def digest(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def curve(self) -> LoopCurve:
        spec = self.raw["curve"]
        if isinstance(spec, str):
            path = (self.base_dir / spec).resolve()
            if not path.is_file():
                raise ConfigError(f"curve file {spec!r} does not exist")
            return load_curve_spec(path)
        return curve_from_mapping(dict(spec))

    def params(self, beta: float | None = None) -> ModelParams:
        p = self.raw["params"]
        return ModelParams(float(p["c0"]), float(p["B"]), beta)

    def circle_radius(self) -> float:
        """Radius of a circle centred on the flux line (radial oracle prerequisite)."""
        spec = self.raw.get("curve")
        if not isinstance(spec, dict) or spec.get("kind") != "circle":
            raise DomainError("this experiment needs an inline circle centred at the origin")
        if any(abs(float(c)) > 0 for c in spec.get("center", (0.0, 0.0))):
            raise DomainError("the radial oracle needs the circle centred on the flux line")
        return float(spec.get("radius", 1.0))


def _schema() -> dict:
    text = resources.files("deltaloop").joinpath("experiment_schema.json").read_text()
    return json.loads(text)


def parse_config(text: str, base_dir: Path | str = ".") -> ExperimentConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from exc
    name = raw["experiment"]
    entry = CATALOG[name]
    missing = [k for k in entry.required if k not in raw]
    if missing:
        raise ConfigError(f"experiment {name!r} requires keys {missing}")
    claims = tuple(raw.get("claims", entry.default_claims))
    unknown = [c for c in claims if c not in entry.claims]
    if unknown:
        raise ConfigError(f"unknown claims for {name!r}: {unknown}; available: {sorted(entry.claims)}")
    cfg = ExperimentConfig(name, raw, Path(base_dir), claims,
                           Path(raw["output"]) if "output" in raw else None,
                           int(raw.get("workers", 1)))
    _check_admissible(cfg)
    return cfg


def _check_admissible(cfg: ExperimentConfig) -> None:
    try:
        if "params" in cfg.raw:
            cfg.params()
        if "curve" in cfg.raw and isinstance(cfg.raw["curve"], str):
            if not (cfg.base_dir / cfg.raw["curve"]).is_file():
                raise ConfigError(f"curve file {cfg.raw['curve']!r} does not exist")
        for b in cfg.as_list("beta"):
            if not b > 0:
                raise DomainError("beta values must be positive")
        for c in cfg.as_list("c0_grid"):
            if not 0 < c < 1:
                raise DomainError("c0_grid values must lie in (0, 1)")
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(path.read_text(), path.parent)


# ---------------------------------------------------------------- reports

@dataclass
class Claim:
    name: str
    status: str
    measured: Any = None
    threshold: Any = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"claim": self.name, "status": self.status, "measured": _jsonable(self.measured),
                "threshold": _jsonable(self.threshold), "detail": self.detail}


@dataclass
class RunReport:
    """Outcome of one run; ``wall_clock`` is logged but kept out of ``report.json``."""

    experiment: str
    input_digest: str
    claims: list[Claim] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    wall_clock: float = 0.0
    status: str = "complete"
    error: str = ""

    @property
    def exit_code(self) -> int:
        if self.status != "complete":
            return EXIT_ERROR
        return EXIT_FAIL if any(c.status == FAIL for c in self.claims) else EXIT_PASS

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment, "input_digest": self.input_digest,
               "status": self.status, "claims": [c.to_dict() for c in self.claims],
               "artifacts": sorted(self.artifacts)}
        if self.error:
            out["error"] = self.error
        return out


def _jsonable(x):
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _dump_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    buf = io.StringIO()
    columns = columns or (list(rows[0]) if rows else [])
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for k, v in row.items()})
    return buf.getvalue()


@dataclass
class Outcome:
    claims: dict[str, Claim]
    artifacts: dict[str, str]


def _map(fn: Callable, items: list, workers: int) -> list:
    """Ordered map; a process pool when ``workers > 1`` (results do not depend on it)."""
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _flag_status(ok: bool, strict: bool) -> str:
    if ok:
        return PASS
    return FAIL if strict else FLAGGED


# ---------------------------------------------------------------- experiments

def _exp_effective_spectrum(cfg: ExperimentConfig, strict: bool) -> Outcome:
    curve = cfg.curve()
    n = int(cfg.get("n", 5))
    spec = effective_spectrum(curve, n, int(cfg.get("grid", 128)))
    claims = {}
    err = float(spec.error_estimates.max())
    claims["converged"] = Claim("converged", PASS if err <= 1e-8 else FAIL, err, 1e-8,
                                "grid-doubling error estimate")
    spec_curve = cfg.raw.get("curve")
    if isinstance(spec_curve, dict) and spec_curve.get("kind") == "circle":
        R = float(spec_curve.get("radius", 1.0))
        k = np.array([0] + [m for m in range(1, n) for _ in (0, 1)])[:n]
        exact = (k / R) ** 2 - 0.25 / R ** 2
        dev = float(np.max(np.abs(spec.eigenvalues - exact)))
        claims["closed_form"] = Claim("closed_form", PASS if dev <= 1e-10 else FAIL, dev, 1e-10,
                                      "max |computed - (2 pi k / L)^2 + 1/(4 R^2)|")
    else:
        claims["closed_form"] = Claim("closed_form", INFO, None, None, "closed form only for circles")
    return Outcome(claims, {"spectrum.json": spec.to_json() + "\n"})


def _exp_est1(cfg: ExperimentConfig, strict: bool) -> Outcome:
    curve = cfg.curve()
    params = cfg.params()
    a_seq = cfg.as_list("a_sequence", [0.2, 0.1, 0.05, 0.025])
    rows, ratios, ok = [], {}, True
    for j in cfg.as_list("j", [1, 2]):
        rep = est1_check(curve, params, int(j), a_seq, int(cfg.get("grid", 128)))
        rows += rep.rows()
        ratios[f"j={j}"] = {"plus": rep.ratios_plus, "minus": rep.ratios_minus,
                            "slope_plus": rep.slope_plus, "slope_minus": rep.slope_minus}
        ok = ok and rep.passed()
    claim = Claim("linear_scaling", PASS if ok else FAIL, ratios, [0.4, 0.6],
                  "gap ratio per halving of the width")
    return Outcome({"linear_scaling": claim},
                   {"est1.csv": _dump_csv(rows), "est1.json": _dump_json(ratios)})


def _exp_est2(cfg: ExperimentConfig, strict: bool) -> Outcome:
    if "gamma_plus" in cfg.raw:
        gp = float(cfg.raw["gamma_plus"])
    elif "curve" in cfg.raw:
        gp = cfg.curve().gamma_plus
    else:
        gp = 1.0
    records, reports = [], []
    for beta, a in itertools.product(cfg.as_list("beta"), cfg.as_list("a")):
        rep = est2_check(float(a), float(beta), gp)
        reports.append(rep)
        records += rep.records()
    lower = all(r.lower_bounds_hold for r in reports)
    lit = all(rec["bound_literal_pass"] for rec in records)
    scaled = all(rec["bound_scaled_pass"] for rec in records)
    claims = {
        "lower_bounds": Claim("lower_bounds", PASS if lower else FAIL, lower, True,
                              "-beta^2/4 < zeta_plus and zeta_minus < -beta^2/4"),
        "literal_envelope": Claim("literal_envelope", PASS if lit else FAIL, lit, True,
                                  "excess below the exp(-beta/2) envelope"),
        "scaled_envelope": Claim("scaled_envelope", PASS if scaled else FAIL, scaled, True,
                                 "excess below the exp(-beta a/2) envelope"),
    }
    return Outcome(claims, {"est2.csv": _dump_csv(records, list(_EST2_COLUMNS)),
                            "est2.json": _dump_json(records)})


_EST2_COLUMNS = ("a", "beta", "gamma_plus", "side", "zeta", "excess", "log_excess",
                 "strict_bound_pass", "bound_literal_pass", "bound_scaled_pass", "regime",
                 "negative_count")


def _enclosure_job(args):
    curve, params, beta, n, grid = args
    return enclosure(curve, params, beta, n, grid)


def _enclosures(cfg: ExperimentConfig, curve: LoopCurve, params: ModelParams, n: int) -> list:
    jobs = [(curve, params, float(b), n, int(cfg.get("grid", 128))) for b in cfg.as_list("beta")]
    return _map(_enclosure_job, jobs, cfg.workers)


def _exp_enclosure_sweep(cfg: ExperimentConfig, strict: bool) -> Outcome:
    curve = cfg.curve()
    params = cfg.params()
    n = int(cfg.get("n", 2))
    encs = _enclosures(cfg, curve, params, n)
    ordered = all(bool(np.all(e.tau_minus <= e.tau_plus)) for e in encs)
    flags = {repr(e.beta): e.flag_text() for e in encs}
    verified = all(e.verified for e in encs)
    claims = {
        "ordered": Claim("ordered", PASS if ordered else FAIL, ordered, True, "tau_minus <= tau_plus"),
        "flags_verified": Claim("flags_verified", _flag_status(verified, strict), flags, "ok",
                                "regime and ordering flags per beta"),
    }
    summary = [{"beta": e.beta, "a": e.a, "a_clamped": e.width.clamped, "flags": e.flags,
                "tau_minus_shifted": e.tau_minus_shifted, "tau_plus_shifted": e.tau_plus_shifted,
                "sup_norms": e.norms.to_record()} for e in encs]
    return Outcome(claims, {"enclosures.csv": enclosure_csv(encs),
                            "enclosures.json": _dump_json(summary)})


def _radial_job(args):
    R, params, n = args
    return radial_solve(R, params, n)


def _exp_theorem1_fit(cfg: ExperimentConfig, strict: bool) -> Outcome:
    curve = cfg.curve()
    params = cfg.params()
    n = int(cfg.get("n", 2))
    betas = sorted(float(b) for b in cfg.as_list("beta"))
    mu = effective_spectrum(curve, n, int(cfg.get("grid", 128))).eigenvalues
    if cfg.get("source", "oracle") == "oracle":
        R = cfg.circle_radius()
        spectra = _map(_radial_job, [(R, params.with_beta(b), n) for b in betas], cfg.workers)
        shifted = [[s.eigenvalues[j] + 0.25 * b * b for s, b in zip(spectra, betas)] for j in range(n)]
        fits = [asymptotic_fit(betas, shifted[j], float(mu[j]), shifted=True) for j in range(n)]
    else:
        encs = _enclosures(cfg, curve, params, n)
        fits = [fit_enclosures(encs, j + 1) for j in range(n)]
    rows = []
    for j, fit in enumerate(fits):
        for b, y, x, e in zip(fit.betas, fit.shifted, fit.x, fit.e):
            rows.append({"j": j + 1, "beta": b, "shifted": y, "x": x, "e": e})
    decreasing = all(f.decreasing for f in fits)
    worst = max(f.residual for f in fits)
    gaps = [f.limit_gap for f in fits]
    claims = {
        "decreasing": Claim("decreasing", PASS if decreasing else FAIL, decreasing, True,
                            "|e_j(beta)| strictly decreasing"),
        "fit_residual": Claim("fit_residual", PASS if worst < 0.3 else FAIL, worst, 0.3,
                              "relative residual of e_j against C ln(beta)/beta"),
        "limit_gap": Claim("limit_gap", INFO, gaps, None,
                           "extrapolated limit minus the flux-free effective eigenvalue"),
    }
    return Outcome(claims, {"fit.csv": _dump_csv(rows),
                            "fit.json": _dump_json([f.to_dict() for f in fits])})


def _exp_sandwich(cfg: ExperimentConfig, strict: bool) -> Outcome:
    curve = cfg.curve()
    params = cfg.params()
    R = cfg.circle_radius()
    n = int(cfg.get("n", 2))
    betas = [float(b) for b in cfg.as_list("beta")]
    encs = _enclosures(cfg, curve, params, n)
    spectra = _map(_radial_job, [(R, params.with_beta(b), n) for b in betas], cfg.workers)
    rows, inside, verified = [], True, True
    for enc, spec in zip(encs, spectra):
        verified = verified and enc.verified
        for j in range(n):
            lam = float(spec.eigenvalues[j])
            eps = float(spec.error_estimates[j] + enc.error_plus[j] + enc.error_minus[j])
            ok = enc.contains(lam, j + 1, eps)
            inside = inside and ok
            rows.append({"beta": enc.beta, "j": j + 1, "lambda": lam,
                         "tau_minus": float(enc.tau_minus[j]), "tau_plus": float(enc.tau_plus[j]),
                         "eps": eps, "inside": ok, "flags": enc.flag_text()})
    claims = {
        "sandwich": Claim("sandwich", PASS if inside else FAIL, inside, True,
                          "tau_minus - eps <= lambda_j <= tau_plus + eps"),
        "flags_verified": Claim("flags_verified", _flag_status(verified, strict),
                                {repr(e.beta): e.flag_text() for e in encs}, "ok",
                                "enclosure regime flags"),
    }
    return Outcome(claims, {"sandwich.csv": _dump_csv(rows)})


def _exp_persistent_current(cfg: ExperimentConfig, strict: bool) -> Outcome:
    R = cfg.circle_radius()
    params = cfg.params()
    betas = cfg.as_list("beta")
    if len(betas) != 1:
        raise ConfigError("persistent-current takes a single beta")
    report = persistent_current(R, params.B, float(betas[0]), cfg.as_list("c0_grid"),
                                int(cfg.get("n", 1)), workers=cfg.workers)
    claim = Claim("detected", PASS if report.detected else FAIL,
                  {"variation": report.variation, "error": report.error}, "variation > 10 x error",
                  report.verdict)
    rows = report.rows()
    return Outcome({"detected": claim}, {"currents.csv": _dump_csv(rows),
                                         "currents.json": report.to_json() + "\n"})


def _exp_gauge_check(cfg: ExperimentConfig, strict: bool) -> Outcome:
    curve = cfg.curve()
    betas = cfg.as_list("beta")
    if len(betas) != 1:
        raise ConfigError("gauge-check takes a single beta")
    params = cfg.params(float(betas[0]))
    n = int(cfg.get("n", 1))
    control = MeshControl(**cfg.get("mesh", {}))
    gauge = gauge_shift_check(curve, params, n, control)
    claims = {"gauge_invariant": Claim("gauge_invariant", PASS if gauge["invariant"] else FAIL,
                                       gauge["difference"], gauge["tolerance"],
                                       "|lambda(A + grad chi) - lambda(A)| within mesh error")}
    payload = {"gauge": gauge}
    if "radial_agreement" in cfg.claims:
        R = cfg.circle_radius()
        ref = radial_solve(R, params, n)
        mesh = general_solve(curve, params, n, control)
        shift = 0.25 * params.beta ** 2
        rel = float(abs(mesh.eigenvalues[0] - ref.eigenvalues[0]) / abs(ref.eigenvalues[0] + shift))
        claims["radial_agreement"] = Claim("radial_agreement", PASS if rel <= 0.01 else FAIL, rel, 0.01,
                                           "relative gap of lambda_1 + beta^2/4")
        payload["radial"] = ref.to_dict()
        payload["mesh"] = mesh.to_dict()
    return Outcome(claims, {"gauge.json": _dump_json(payload)})


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    required: tuple[str, ...]
    claims: tuple[str, ...]
    default_claims: tuple[str, ...]
    runner: Callable[[ExperimentConfig, bool], Outcome]


CATALOG: dict[str, CatalogEntry] = {e.name: e for e in (
    CatalogEntry("effective-spectrum", "Lowest eigenvalues of -d^2/ds^2 - gamma^2/4 on the loop.",
                 ("curve", "n"), ("closed_form", "converged"), ("converged",),
                 _exp_effective_spectrum),
    CatalogEntry("est1", "Gap of the bracket eigenvalues to the effective ones as the width halves.",
                 ("curve", "params"), ("linear_scaling",), ("linear_scaling",), _exp_est1),
    CatalogEntry("est2", "Transverse ground-state bounds on a grid of widths and couplings.",
                 ("a", "beta"), ("lower_bounds", "literal_envelope", "scaled_envelope"),
                 ("lower_bounds",), _exp_est2),
    CatalogEntry("enclosure-sweep", "Two-sided eigenvalue enclosures over a coupling schedule.",
                 ("curve", "params", "beta"), ("ordered", "flags_verified"),
                 ("ordered", "flags_verified"), _exp_enclosure_sweep),
    CatalogEntry("theorem1-fit", "Large-coupling trend of lambda_j + beta^2/4 against ln(beta)/beta.",
                 ("curve", "params", "beta"), ("decreasing", "fit_residual", "limit_gap"),
                 ("decreasing", "fit_residual", "limit_gap"), _exp_theorem1_fit),
    CatalogEntry("sandwich", "Radial oracle eigenvalues checked against the enclosures.",
                 ("curve", "params", "beta"), ("sandwich", "flags_verified"),
                 ("sandwich", "flags_verified"), _exp_sandwich),
    CatalogEntry("persistent-current", "Ground level of a circular loop across a flux grid.",
                 ("curve", "params", "beta", "c0_grid"), ("detected",), ("detected",),
                 _exp_persistent_current),
    CatalogEntry("gauge-check", "Mesh spectra under a smooth gauge shift, optionally against the radial oracle.",
                 ("curve", "params", "beta"), ("gauge_invariant", "radial_agreement"),
                 ("gauge_invariant",), _exp_gauge_check),
)}


def list_experiments() -> list[dict]:
    return [{"name": e.name, "description": e.description, "required": list(e.required),
             "claims": list(e.claims)} for e in CATALOG.values()]


# ---------------------------------------------------------------- runner

def run(cfg: ExperimentConfig, out_dir: Path | str | None = None, strict: bool = False,
        workers: int | None = None) -> RunReport:
    """Execute ``cfg`` and write artifacts, ``report.json`` and ``run.log`` to ``out_dir``."""
    out = Path(out_dir or cfg.output or f"runs/{cfg.experiment}")
    if not out.is_absolute() and out_dir is None and cfg.output is not None:
        out = cfg.base_dir / out
    out.mkdir(parents=True, exist_ok=True)
    if workers is not None:
        cfg = ExperimentConfig(cfg.experiment, cfg.raw, cfg.base_dir, cfg.claims, cfg.output, workers)
    report = RunReport(cfg.experiment, cfg.digest())
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    start = time.perf_counter()
    try:
        log.info("# started %s", time.strftime("%Y-%m-%dT%H:%M:%S"))
        log.info("experiment %s digest %s workers %d strict %s",
                 cfg.experiment, report.input_digest, cfg.workers, strict)
        try:
            outcome = CATALOG[cfg.experiment].runner(cfg, strict)
        except (DomainError, CurveError, MeshError, MRangeError, ConfigError) as exc:
            report.status = "infeasible"
            report.error = f"{type(exc).__name__}: {exc}"
            report.claims = [Claim(c, FAIL, None, None, "not evaluated: infeasible regime")
                             for c in cfg.claims]
            log.info("infeasible: %s", report.error)
        else:
            report.claims = [outcome.claims[c] for c in cfg.claims]
            for name, content in sorted(outcome.artifacts.items()):
                (out / name).write_text(content)
                report.artifacts.append(name)
        for c in report.claims:
            log.info("claim %s: %s (measured %s)", c.name, c.status, _jsonable(c.measured))
        report.wall_clock = time.perf_counter() - start
        log.info("wall clock %.3f s", report.wall_clock)
        report.artifacts.append("report.json")
        (out / "report.json").write_text(_dump_json(report.to_dict()))
    finally:
        log.removeHandler(handler)
        handler.close()
    return report


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="deltaloop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--workers", type=int, help="worker processes for sweep points")
    p_run.add_argument("--strict", action="store_true",
                       help="treat unverified enclosure flags as failures")
    sub.add_parser("list", help="list experiments")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    if args.command == "list":
        for entry in list_experiments():
            print(f"{entry['name']}: {entry['description']}")
            print(f"    required: {', '.join(entry['required'])}; claims: {', '.join(entry['claims'])}")
        return EXIT_PASS
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.command == "validate":
        print(f"{args.config}: valid {cfg.experiment} config; claims {', '.join(cfg.claims)}")
        return EXIT_PASS
    if args.workers is not None and args.workers < 1:
        print("config error: --workers must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    report = run(cfg, args.out, args.strict, args.workers)
    for c in report.claims:
        print(f"{c.status.upper():8s} {c.name}: {c.detail}")
    if report.error:
        print(report.error, file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
