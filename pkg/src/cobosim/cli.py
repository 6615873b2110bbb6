"""Command-line experiment runner.

Every scenario writes one record per parameter point. CSV columns, in order:

  ladder          d, spectrum, lambdas, n, chi, alpha, chi_ratio, lower_bound, upper_bound,
                  eps_norm_formula, eps_norm_constructed, chi_closed_form, alpha_closed_form,
                  max_error, passed
  rdm             d, spectrum, lambdas, purity, rho_a_purity, rho_b_purity, spectrum_gap,
                  raw_trace_a, max_error, passed
  bs-independent  d, spectrum, lambdas, fidelity, split_port_probability, purity_before,
                  purity_after, unitarity_defect, max_error, passed
  bs-interacting  d, spectrum, lambdas, gamma, best_time, collective_fidelity, target_fidelity,
                  relative_phase, purity_at_best, predicted_purity, max_error, passed
  bunch-ideal     d, spectrum, lambdas, p1_initial, p1_final, p2_initial, p2_final,
                  p1_initial_predicted, p1_final_predicted, p2_initial_predicted,
                  p2_final_predicted, rdm_difference, max_error, passed
  bunch-nonlocal  d, spectrum, lambdas, success, predicted, abs_error, residual,
                  completeness_defect, amplitude_psi_f_re, amplitude_psi_f_im,
                  amplitude_gamma_re, amplitude_gamma_im, passed
  verify          d, check, value, threshold, passed

Exit status: 0 all checks pass, 1 a check failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .coboson import (DegenerateSpectrumError, SchmidtSpectrum, chi_ratio_bounds, chi_table,
                      coboson_creation, elementary_symmetric, purity)
from .fock import Site, Species, StateVector
from .operators import apply
from .protocols import (ScenarioConfig, ideal_bunching_analysis, independent_bs, interacting_bs,
                        nonlocal_bunching, nonlocal_invariants, verify_mode_maps)
from .rdm import one_particle_rdm, purity_of

SCHEMA_VERSION = 1
SCENARIOS = ("ladder", "rdm", "bs-independent", "bs-interacting", "bunch-ideal",
             "bunch-nonlocal", "verify")
NONLOCAL_MAX_D = 6
INTERACTING_FIDELITY_FLOOR = 0.99
INTERACTING_PURITY_TOLERANCE = 0.02

COLUMNS = {
    "ladder": ["d", "spectrum", "lambdas", "n", "chi", "alpha", "chi_ratio", "lower_bound",
               "upper_bound", "eps_norm_formula", "eps_norm_constructed", "chi_closed_form",
               "alpha_closed_form", "max_error", "passed"],
    "rdm": ["d", "spectrum", "lambdas", "purity", "rho_a_purity", "rho_b_purity", "spectrum_gap",
            "raw_trace_a", "max_error", "passed"],
    "bs-independent": ["d", "spectrum", "lambdas", "fidelity", "split_port_probability",
                       "purity_before", "purity_after", "unitarity_defect", "max_error", "passed"],
    "bs-interacting": ["d", "spectrum", "lambdas", "gamma", "best_time", "collective_fidelity",
                       "target_fidelity", "relative_phase", "purity_at_best", "predicted_purity",
                       "max_error", "passed"],
    "bunch-ideal": ["d", "spectrum", "lambdas", "p1_initial", "p1_final", "p2_initial", "p2_final",
                    "p1_initial_predicted", "p1_final_predicted", "p2_initial_predicted",
                    "p2_final_predicted", "rdm_difference", "max_error", "passed"],
    "bunch-nonlocal": ["d", "spectrum", "lambdas", "success", "predicted", "abs_error", "residual",
                       "completeness_defect", "amplitude_psi_f", "amplitude_gamma", "passed"],
    "verify": ["d", "check", "value", "threshold", "passed"],
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str
    d: str | int = 2
    spectrum: str | list = "uniform"
    gamma: str | float = 20.0
    times: str | list | None = None
    output: str | None = None
    format: str = "json"
    tolerance: float = 1e-9
    workers: int = 1
    allow_large_d: bool = False


def parse_int_range(value) -> list[int]:
    """``4``, ``"2..6"`` or ``"2,3,5"``."""
    if isinstance(value, int):
        return [value]
    text = str(value).strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            out = list(range(lo, hi + 1))
        else:
            out = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer range {value!r}") from exc
    if not out:
        raise ConfigError(f"empty range {value!r}")
    return out


def parse_real_list(value) -> list[float]:
    """A number, a comma list, ``"a..b"`` (endpoints) or ``"linspace:a:b:n"``."""
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, list):
        return [float(x) for x in value]
    text = str(value).strip()
    try:
        if text.startswith("linspace:"):
            _, a, b, n = text.split(":")
            out = np.linspace(float(a), float(b), int(n)).tolist()
        elif ".." in text:
            out = [float(x) for x in text.split("..")]
        else:
            out = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse real values {value!r}") from exc
    if not out:
        raise ConfigError(f"empty value list {value!r}")
    return out


def resolve_spectra(spec, d: int) -> list[tuple[str, SchmidtSpectrum]]:
    """Spectra for one ``d``.

    ``random:<seed>:<count>`` draws spectrum ``k`` from
    ``numpy.random.default_rng([seed, d, k])`` as normalized squared
    standard-normal samples, so each point is reproducible on its own.
    """
    if isinstance(spec, list) or (isinstance(spec, str) and spec[:1].isdigit()):
        values = spec if isinstance(spec, list) else spec.split(",")
        try:
            s = SchmidtSpectrum(tuple(float(x) for x in values))
        except ValueError as exc:
            raise ConfigError(f"invalid spectrum: {exc}") from exc
        if s.d != d:
            raise ConfigError(f"explicit spectrum has {s.d} entries but d={d}")
        return [("explicit", s)]
    if spec == "uniform":
        return [("uniform", SchmidtSpectrum.uniform(d))]
    if isinstance(spec, str) and spec.startswith("random:"):
        try:
            _, seed, count = spec.split(":")
            seed, count = int(seed), int(count)
        except ValueError as exc:
            raise ConfigError(f"random spectrum must be random:<seed>:<count>, got {spec!r}") from exc
        return [(f"random:{seed}:{k}", SchmidtSpectrum.random(d, np.random.default_rng([seed, d, k])))
                for k in range(count)]
    raise ConfigError(f"unknown spectrum {spec!r}")


def _lambdas(s: SchmidtSpectrum) -> str:
    return ";".join(repr(x) for x in s.lambdas)


def _base(d, label, s):
    return {"d": d, "spectrum": label, "lambdas": _lambdas(s)}


def _ladder(d, label, s, gamma, times, tol):
    out = []
    uniform = label == "uniform"
    for n in range(1, d + 1):
        try:
            rep = chi_ratio_bounds(s, n, construct=True)
        except DegenerateSpectrumError:
            continue
        errors = [abs(rep.eps_norm_formula - rep.eps_norm_constructed)]
        chi_cf = alpha_cf = None
        if uniform:
            chi_cf = math.factorial(d) / (d ** n * math.factorial(d - n))
            alpha_cf = math.sqrt((d - n + 1) / d)
            errors += [abs(rep.chi_n - chi_cf), abs(rep.alpha_n - alpha_cf),
                       abs(rep.eps_norm_constructed)]
        ok = rep.lower_ok and rep.upper_ok and max(errors) <= tol
        out.append({**_base(d, label, s), "n": n, "chi": rep.chi_n, "alpha": rep.alpha_n,
                    "chi_ratio": rep.chi_ratio, "lower_bound": rep.bounds[0],
                    "upper_bound": rep.bounds[1], "eps_norm_formula": rep.eps_norm_formula,
                    "eps_norm_constructed": rep.eps_norm_constructed, "chi_closed_form": chi_cf,
                    "alpha_closed_form": alpha_cf, "max_error": max(errors), "passed": ok})
    return out


def _rdm(d, label, s, gamma, times, tol):
    psi = apply(coboson_creation(s, Site.L), StateVector.vacuum(d))
    rho_a, rho_b = one_particle_rdm(psi, Species.A), one_particle_rdm(psi, Species.B)
    p = purity(s)
    gap = float(np.abs(np.sort(rho_a.eigenvalues()) - np.sort(rho_b.eigenvalues())).max())
    pa, pb = purity_of(rho_a), purity_of(rho_b)
    err = max(abs(pa - p), abs(pb - p), gap, abs(rho_a.raw_trace - 1.0))
    return [{**_base(d, label, s), "purity": p, "rho_a_purity": pa, "rho_b_purity": pb,
             "spectrum_gap": gap, "raw_trace_a": rho_a.raw_trace, "max_error": err,
             "passed": err <= tol}]


def _bs_independent(d, label, s, gamma, times, tol):
    rep = independent_bs(ScenarioConfig(d, s))
    err = max(abs(1 - rep.fidelity), abs(rep.split_port_probability - 0.5),
              abs(rep.purity_after - rep.purity_before))
    return [{**_base(d, label, s), "fidelity": rep.fidelity,
             "split_port_probability": rep.split_port_probability,
             "purity_before": rep.purity_before, "purity_after": rep.purity_after,
             "unitarity_defect": rep.unitarity_defect, "max_error": err, "passed": err <= tol}]


def _bs_interacting(d, label, s, gamma, times, tol):
    rep = interacting_bs(ScenarioConfig(d, s, gamma=gamma, time_grid=times))
    predicted = purity(s) / 2
    err = abs(rep.purity_at_best - predicted)
    ok = err <= INTERACTING_PURITY_TOLERANCE and rep.collective_fidelity >= INTERACTING_FIDELITY_FLOOR
    return [{**_base(d, label, s), "gamma": gamma, "best_time": rep.best_time,
             "collective_fidelity": rep.collective_fidelity, "target_fidelity": rep.target_fidelity,
             "relative_phase": rep.relative_phase, "purity_at_best": rep.purity_at_best,
             "predicted_purity": predicted, "max_error": err, "passed": ok}]


def bunching_predictions(s: SchmidtSpectrum) -> dict[str, float]:
    """Closed-form purities of the initial and bunched two-coboson states.

    The bunched state holds a-pair ``{i, j}`` on each site with weight
    ``lam_i lam_j / chi_2``, so its one-particle marginal is proportional to
    ``lam_i (1 - lam_i)``; it equals the initial marginal only for uniform ``lam``.
    """
    lam = np.asarray(s.lambdas)
    p = purity(s)
    chi2 = float(chi_table(s, 2)[2])
    e2_sq = float(elementary_symmetric(lam ** 2, 2)[2])
    return {
        "p1_initial": p / 2,
        "p1_final": float(np.sum((lam * (1 - lam)) ** 2)) / (2 * chi2 ** 2),
        "p2_initial": p * p,
        "p2_final": 2 * e2_sq / chi2 ** 2,
    }


def _bunch_ideal(d, label, s, gamma, times, tol):
    rep = ideal_bunching_analysis(ScenarioConfig(d, s))
    pred = bunching_predictions(s)
    measured = {"p1_initial": rep.one_particle_purity_initial,
                "p1_final": rep.one_particle_purity_final,
                "p2_initial": rep.two_particle_purity_initial,
                "p2_final": rep.two_particle_purity_final}
    errors = [abs(measured[k] - pred[k]) for k in pred] + [abs(rep.norm_final - 1)]
    if label == "uniform":
        errors.append(rep.one_particle_rdm_difference)
    err = max(errors)
    return [{**_base(d, label, s), **measured,
             **{f"{k}_predicted": v for k, v in pred.items()},
             "rdm_difference": rep.one_particle_rdm_difference, "max_error": err,
             "passed": err <= tol}]


def _bunch_nonlocal(d, label, s, gamma, times, tol):
    out = nonlocal_bunching(ScenarioConfig(d, s, tolerance=max(tol, 1e-10)))
    err = abs(out.success_probability - out.predicted_success)
    return [{**_base(d, label, s), "success": out.success_probability,
             "predicted": out.predicted_success, "abs_error": err,
             "residual": out.residual_probability, "completeness_defect": out.completeness_defect,
             "amplitude_psi_f": out.amplitude_psi_f, "amplitude_gamma": out.amplitude_gamma,
             "passed": err <= tol and out.completeness_defect <= 1e-10}]


def _verify(d, label, s, gamma, times, tol):
    maps = verify_mode_maps(d, tol)
    inv = nonlocal_invariants(d)
    rows = [("mode_maps", max(maps.deviations.values()), tol),
            ("hermiticity", inv.hermiticity_defect, 1e-12),
            ("commutator", inv.commutator_norm, 1e-12),
            ("unitarity", inv.unitarity_defect, 1e-10),
            ("sequential_evolution", inv.sequential_defect, tol)]
    return [{"d": d, "check": name, "value": v, "threshold": thr, "passed": v <= thr}
            for name, v, thr in rows]


RUNNERS = {"ladder": _ladder, "rdm": _rdm, "bs-independent": _bs_independent,
           "bs-interacting": _bs_interacting, "bunch-ideal": _bunch_ideal,
           "bunch-nonlocal": _bunch_nonlocal, "verify": _verify}


def _run_point(args):
    scenario, d, label, lambdas, gamma, times, tol = args
    s = SchmidtSpectrum(lambdas)
    return RUNNERS[scenario](d, label, s, gamma, times, tol)


def build_points(cfg: RunConfig) -> list[tuple]:
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}")
    if cfg.format not in ("json", "csv"):
        raise ConfigError(f"unknown format {cfg.format!r}")
    ds = parse_int_range(cfg.d)
    if any(d < 1 for d in ds):
        raise ConfigError("d must be >= 1")
    if cfg.scenario == "bunch-nonlocal" and max(ds) > NONLOCAL_MAX_D and not cfg.allow_large_d:
        raise ConfigError(f"bunch-nonlocal is capped at d={NONLOCAL_MAX_D}; pass --allow-large-d")
    if cfg.scenario == "verify" and min(ds) < 2:
        raise ConfigError("verify needs d >= 2")
    gammas = parse_real_list(cfg.gamma) if cfg.scenario == "bs-interacting" else [0.0]
    if any(g < 0 for g in gammas):
        raise ConfigError("gamma must be >= 0")
    times = tuple(parse_real_list(cfg.times)) if cfg.times is not None else None
    if times is not None and (any(b <= a for a, b in zip(times, times[1:]))):
        raise ConfigError("times must be increasing")
    points = []
    for d in ds:
        spectra = [("uniform", SchmidtSpectrum.uniform(d))] if cfg.scenario == "verify" \
            else resolve_spectra(cfg.spectrum, d)
        for label, s in spectra:
            if cfg.scenario in ("bunch-ideal", "bunch-nonlocal") and s.rank < 2:
                raise ConfigError(f"{cfg.scenario} needs Schmidt rank >= 2 (d={d}, {label})")
            for g in gammas:
                points.append((cfg.scenario, d, label, s.lambdas, g, times, cfg.tolerance))
    return points


def run(cfg: RunConfig) -> dict:
    """Execute every point of ``cfg`` and return the report document."""
    points = build_points(cfg)
    if cfg.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_point, points))
    else:
        results = [_run_point(p) for p in points]
    records = [r for batch in results for r in batch]
    failures = [r for r in records if not r["passed"]]
    resolved = asdict(cfg)
    resolved.pop("output")
    resolved.pop("workers")
    return {"schema_version": SCHEMA_VERSION, "scenario": cfg.scenario, "config": resolved,
            "records": records, "passed": not failures, "failures": len(failures)}


def _jsonable(value):
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(report), indent=2, sort_keys=False) + "\n"
    header = []
    for col in COLUMNS[report["scenario"]]:
        if col.startswith("amplitude_"):
            header += [f"{col}_re", f"{col}_im"]
        else:
            header.append(col)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for rec in report["records"]:
        row = []
        for col in COLUMNS[report["scenario"]]:
            v = rec[col]
            if isinstance(v, complex):
                row += [repr(v.real), repr(v.imag)]
            elif v is None:
                row.append("")
            elif isinstance(v, (float, np.floating)):
                row.append(repr(float(v)))
            else:
                row.append(str(v))
        writer.writerow(row)
    return buf.getvalue()


def _color(text: str, code: str) -> str:
    if os.environ.get("NO_COLOR") or not sys.stderr.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cobosim", description="Run coboson beam-splitter and bunching scenarios.",
        epilog=__doc__.split("\n", 2)[2], formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("scenario", nargs="?", choices=SCENARIOS)
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--d", help="integer, 'a..b' or comma list")
    p.add_argument("--spectrum", help="'uniform', comma-separated lambdas, or 'random:<seed>:<count>'")
    p.add_argument("--gamma", help="interaction strength: number, comma list or 'linspace:a:b:n'")
    p.add_argument("--times", help="time grid: comma list or 'linspace:a:b:n'")
    p.add_argument("--output", help="report path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--tolerance", type=float)
    p.add_argument("--workers", type=int, help="process pool size (default 1)")
    p.add_argument("--allow-large-d", action="store_true", default=None,
                   help=f"lift the d <= {NONLOCAL_MAX_D} cap for bunch-nonlocal")
    return p


def config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    for name in ("scenario", "d", "spectrum", "gamma", "times", "output", "format",
                 "tolerance", "workers", "allow_large_d"):
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    if "scenario" not in data:
        raise ConfigError("no scenario given")
    return RunConfig(**data)


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run(cfg)
    except (ConfigError, DegenerateSpectrumError) as exc:
        print(f"cobosim: error: {exc}", file=sys.stderr)
        return 2
    text = render(report, cfg.format)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    n = len(report["records"])
    if report["passed"]:
        print(_color(f"PASS {cfg.scenario}: {n} records", "32"), file=sys.stderr)
        return 0
    print(_color(f"FAIL {cfg.scenario}: {report['failures']} of {n} records failed", "31"),
          file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
