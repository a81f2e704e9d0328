"""Command-line front end.

Exit codes: 0 success, 1 configuration or parse error, 2 model build failure,
3 verification failure (or an Inconclusive verdict under --strict).
"""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import forms, suites
from .catalog import ModelSpec, build_model, parse_model
from .errors import (CertificateWeak, InvalidWindow, ModelSpecError, NoConvergence, NotAShrinker,
                     ShrinkerLabError)
from .geometry import (ImmersionField, frame_orthonormality_defect, h_symmetry_defect, lagrangian_defect,
                       shrinker_residual)
from .grid import BACKENDS
from .report import SCHEMA_ID, dumps, spectrum_csv, to_plain
from .stability import (INCONCLUSIVE, TOL_EIG, TOL_SUB, Certificate, StabilityVerdict, analyze_spectrum,
                        hamiltonian_model, hamiltonian_verdict, lagrangian_model, lagrangian_verdict,
                        optimize_translation_dilation)
from .variations import VariationParseError, VariationSpec, parse_variation
from .weighted import SHRINKER_GATE, EntropySearch, entropy, f_functional

EXIT_OK, EXIT_CONFIG, EXIT_BUILD, EXIT_VERIFY = 0, 1, 2, 3

# verification gates applied at the finest resolution
GATES = {
    "shrinker_residual": SHRINKER_GATE,
    "lagrangian_defect": 1e-8,
    "frame_defect": 1e-8,
    "identities": 1e-7,
    "integration_by_parts": 1e-7,
    "first_variation": 1e-8,
    "eigenfields": 5e-5,
    "twisted_harmonic": 1e-6,
}
ROUNDOFF = 1e-12


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str
    resolutions: list[tuple[int, ...] | None] = field(default_factory=lambda: [None])
    eigs: int = 10
    tol_eig: float = TOL_EIG
    tol_sub: float = TOL_SUB
    fmt: str = "json"
    out: str | None = None
    seed: int = 0
    strict: bool = False
    backend: str = "spectral"
    eigensolver: str = "dense"
    variation: str | None = None
    samples: int = 10

    def validate(self) -> None:
        if not self.resolutions:
            raise ConfigError("at least one resolution is required")
        if self.eigs < 2:
            raise ConfigError(f"--eigs must be >= 2, got {self.eigs}")
        if self.tol_eig <= 0 or self.tol_sub <= 0:
            raise ConfigError("tolerances must be positive")
        if self.fmt not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.fmt!r}")
        if self.fmt == "csv" and self.command != "spectrum":
            raise ConfigError("csv output is only available for spectrum tables")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.command == "second-variation" and not self.variation:
            raise ConfigError("second-variation needs --variation")


def parse_resolutions(text: str | None) -> list[tuple[int, ...] | None]:
    """'64' -> [(64,)], '8,16,32' -> three runs, '128x64' -> one run with per-axis sizes."""
    if text is None:
        return [None]
    out = []
    for item in text.split(","):
        item = item.strip()
        try:
            out.append(tuple(int(p) for p in item.lower().split("x")))
        except ValueError as exc:
            raise ConfigError(f"bad resolution {item!r}") from exc
    return out


def _resolve(spec: ModelSpec, res: tuple[int, ...] | None) -> tuple[int, ...]:
    leaves = len(spec.leaves)
    if res is None:
        return spec.default_resolution()
    if len(res) == 1:
        return res * leaves
    if len(res) != leaves:
        raise ModelSpecError(f"{spec} needs {leaves} resolutions, got {len(res)}")
    return res


def _tag(x: float, gate: float) -> bool:
    return bool(np.isfinite(x) and x <= gate)


# ---------------------------------------------------------------------------
# commands

def _verify_level(imm: ImmersionField) -> dict:
    return {"grid": list(imm.grid.dims),
            "shrinker_residual": shrinker_residual(imm),
            "lagrangian_defect": lagrangian_defect(imm),
            **suites.eigenfield_residuals(imm)}


def cmd_verify(cfg: RunConfig, spec: ModelSpec, models: list[ImmersionField]) -> tuple[dict, list[str]]:
    imm = models[-1]
    rng = np.random.default_rng(cfg.seed)
    ws = suites.random_unit_vectors(rng, cfg.samples, imm.N)
    ident = suites.identity_suite(imm, ws)
    ibp = suites.integration_by_parts_suite(imm, rng)
    fv = suites.first_variation_suite(imm, rng, cfg.samples)
    top = _verify_level(imm)
    geom = {"frame_defect": frame_orthonormality_defect(imm), "h_symmetry_defect": h_symmetry_defect(imm),
            "lagrangian_defect": top["lagrangian_defect"], "min_area_density": float(imm.area_density.min())}
    ent = entropy(imm, EntropySearch(seed=cfg.seed))
    tw = suites.twisted_harmonicity(imm)
    sections = {
        "geometry": geom,
        "shrinker": {"residual": top["shrinker_residual"], "gate": SHRINKER_GATE},
        "f_functional": {"x0": imm.x0, "t0": imm.t0, "value": f_functional(imm)},
        "entropy": _entropy_section(ent),
        "identities": {"w": ws, "residuals": {str(k): v for k, v in ident.items()},
                       "max": max(max(v) for v in ident.values())},
        "integration_by_parts": {"pairs": len(ibp), "residuals": ibp, "max": max(ibp)},
        "first_variation": {"samples": len(fv), "values": fv, "max": max(fv)},
        "eigenfields": {"LH_minus_H": top["LH_minus_H"], "Lw_minus_half_w": top["Lw_minus_half_w"]},
        "twisted_harmonic": tw,
    }
    info = getattr(imm, "info", {}) or {}
    sections["model_info"] = {k: v for k, v in info.items() if np.ndim(v) == 0 and not isinstance(v, dict)}

    checks = {
        "shrinker_residual": top["shrinker_residual"],
        "lagrangian_defect": top["lagrangian_defect"],
        "frame_defect": geom["frame_defect"],
        "identities": sections["identities"]["max"],
        "integration_by_parts": max(ibp),
        "first_variation": max(fv),
        "eigenfields": max(top["LH_minus_H"], top["Lw_minus_half_w"]),
        "twisted_harmonic": tw["d_f_star_sup"],
    }
    failures = [f"{k} = {v:.3e} > {GATES[k]:.1e}" for k, v in checks.items() if not _tag(v, GATES[k])]
    if not np.any(np.abs(tw["maslov"]) > 1e-6):
        failures.append("Maslov coordinates of the mean curvature form vanish")
    sections["checks"] = {k: {"value": v, "gate": GATES[k], "pass": _tag(v, GATES[k])} for k, v in checks.items()}
    return sections, failures


def _resolution_table(models: list[ImmersionField]) -> list[dict]:
    rows = [_verify_level(m) for m in models[:-1]]
    rows.append(_verify_level(models[-1]))
    ns = [m.grid.dims[0] for m in models]
    for key in ("shrinker_residual", "LH_minus_H"):
        errs = [r[key] for r in rows]
        for r, o in zip(rows, suites.observed_orders(ns, errs)):
            r[f"{key}_order"] = o
            r[f"{key}_at_roundoff"] = bool(r[key] < ROUNDOFF)
    return rows


def _entropy_section(ent) -> dict:
    return {"value": ent.value, "x0": ent.x0, "t0": ent.t0, "heuristic": ent.heuristic,
            "local_maxima": [{"value": v, "x0": x0, "t0": t0} for v, x0, t0 in ent.local_maxima]}


def _spectrum_rows(report) -> list[dict]:
    return [{"index": i + 1, "value": float(v), "residual": float(r), "cluster_id": report.cluster_of(i)}
            for i, (v, r) in enumerate(zip(report.eigenvalues, report.residuals))]


def _spectrum_section(analysis) -> dict:
    rep = analysis.report
    sec = {"grid": list(rep.grid), "modes": list(rep.modes), "cluster_tol": rep.cluster_tol,
           "rows": _spectrum_rows(rep),
           "clusters": [{"id": j, "mean": float(np.mean(rep.eigenvalues[c])), "size": len(c)}
                        for j, c in enumerate(rep.clusters)],
           "eigenspace_match": [dict(m) for _, m in sorted(rep.match.items())]}
    if rep.richardson is not None:
        sec["richardson"] = {"values": rep.richardson, "error": rep.richardson_error}
    else:
        sec["richardson"] = {"skipped": "coarse grid below the minimum size"}
    return sec


def cmd_spectrum(cfg: RunConfig, spec: ModelSpec, models: list[ImmersionField]) -> tuple[dict, list[str]]:
    analysis = analyze_spectrum(models[-1], cfg.eigs, backend=cfg.eigensolver)
    sec = _spectrum_section(analysis)
    failures = [f"eigenpair {r['index']} residual {r['residual']:.3e}" for r in sec["rows"] if r["residual"] > 1e-8]
    return {"spectrum": sec}, failures


def _optimum_section(opt) -> dict:
    return {"value": opt.value, "y": opt.y, "h": opt.h, "terms": opt.result.terms,
            "hessian_eigenvalues": opt.hessian_eigenvalues}


def _certificate_section(cert: Certificate, imm: ImmersionField) -> dict:
    stride = tuple(max(1, d // 16) for d in imm.grid.dims)
    u0 = cert.u0[tuple(slice(None, None, s) for s in stride)]
    return {"coefficients": cert.coefficients, "maslov": cert.maslov,
            "u0_samples": {"stride": list(stride), "shape": list(u0.shape), "values": u0.ravel(),
                           "sup": float(np.max(np.abs(cert.u0)))},
            "F2_max": cert.value, "y_star": cert.optimum.y, "h_star": cert.optimum.h,
            "terms": cert.optimum.result.terms, "twisted_residual": cert.twisted_residual,
            "norm_form_value": cert.eq34_value}


def _verdict_section(v: StabilityVerdict, imm: ImmersionField) -> dict:
    ev = {}
    for k, val in v.evidence.items():
        if isinstance(val, Certificate):
            ev[k] = _certificate_section(val, imm)
        elif isinstance(val, StabilityVerdict):
            ev[k] = _verdict_section(val, imm)
        else:
            ev[k] = val
    return {"tag": v.tag, "reason": v.reason, "b1": v.b1, "tolerances": v.tolerances,
            "evidence": ev, "metadata": v.metadata}


def cmd_stability(cfg: RunConfig, spec: ModelSpec, models: list[ImmersionField]) -> tuple[dict, list[str]]:
    imm = models[-1]
    analysis = analyze_spectrum(imm, cfg.eigs, backend=cfg.eigensolver)
    ham = hamiltonian_verdict(imm, analysis, cfg.tol_eig, cfg.tol_sub)
    try:
        lag = lagrangian_verdict(imm, analysis, cfg.tol_eig, cfg.tol_sub)
    except CertificateWeak as exc:
        lag = StabilityVerdict(INCONCLUSIVE, {}, {}, spec.b1, str(exc), {"route": "certificate"})
    sections = {"spectrum": _spectrum_section(analysis),
                "hamiltonian": _verdict_section(ham, imm),
                "lagrangian": _verdict_section(lag, imm)}
    if "certificate" in lag.evidence:
        sections["certificate"] = sections["lagrangian"]["evidence"]["certificate"]
    else:
        sections["certificate"] = {"skipped": f"b1 = {spec.b1}: no class independent of the Maslov class"
                                   if spec.b1 < 2 else lag.reason}
    failures = []
    if cfg.strict:
        failures = [f"{name} verdict Inconclusive: {v.reason}"
                    for name, v in (("hamiltonian", ham), ("lagrangian", lag)) if v.tag == INCONCLUSIVE]
    return sections, failures


def _variation_model(imm: ImmersionField, var: VariationSpec):
    if var.kind == "meanCurvature":
        return lagrangian_model(imm, forms.mean_curvature_form(imm))
    if var.kind == "form":
        if len(var.coeffs) != imm.k:
            raise ConfigError(f"form needs {imm.k} coefficients, got {len(var.coeffs)}")
        return lagrangian_model(imm, forms.coordinate_form(imm, var.coeffs))
    if var.terms and max(len(t.freqs) for t in var.terms) > imm.k:
        raise ConfigError(f"expression uses parameters beyond t{imm.k}")
    mesh = [(2 * np.pi / P) * t for P, t in zip(imm.grid.periods, imm.grid.mesh())]
    return hamiltonian_model(imm, var.potential(mesh))


def cmd_second_variation(cfg: RunConfig, spec: ModelSpec, models: list[ImmersionField],
                         var: VariationSpec) -> tuple[dict, list[str]]:
    imm = models[-1]
    model = _variation_model(imm, var)
    raw = model.evaluate()
    opt = optimize_translation_dilation(model)
    sec = {"variation": cfg.variation, "kind": var.kind, "source": model.source,
           "at_zero": {"value": raw.value, "terms": raw.terms},
           "optimized": _optimum_section(opt)}
    return {"second_variation": sec}, []


def cmd_entropy(cfg: RunConfig, spec: ModelSpec, models: list[ImmersionField]) -> tuple[dict, list[str]]:
    imm = models[-1]
    ent = entropy(imm, EntropySearch(seed=cfg.seed))
    return {"f_functional": {"x0": imm.x0, "t0": imm.t0, "value": f_functional(imm)},
            "entropy": _entropy_section(ent)}, []


COMMANDS = {"verify": cmd_verify, "spectrum": cmd_spectrum, "stability": cmd_stability,
            "second-variation": cmd_second_variation, "entropy": cmd_entropy}


# ---------------------------------------------------------------------------
# driver

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shrinker-lab", description="Numerical verification of Lagrangian self-shrinker stability.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--model", required=True, help="circle | clifford:n=2 | al:p=2,q=3 | product(a;b)")
        s.add_argument("--res", default=None, help="64, a list 8,16,32, or per-axis 128x64")
        s.add_argument("--eigs", type=int, default=10)
        s.add_argument("--tol-eig", type=float, default=TOL_EIG)
        s.add_argument("--tol-sub", type=float, default=TOL_SUB)
        s.add_argument("--out", default=None)
        s.add_argument("--format", dest="fmt", default="json", choices=["json", "csv"])
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--strict", action="store_true")
        s.add_argument("--backend", default="spectral", help="differentiation: spectral, fd2, fd4, fd6, fd8")
        s.add_argument("--eigensolver", default="dense", choices=["dense", "lanczos"])
        s.add_argument("--samples", type=int, default=10, help="random vectors / variations per suite")
        if name == "second-variation":
            s.add_argument("--variation", required=True,
                           help='"form:1,-1" | "function:cos(t1)" | meanCurvature')
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: list[str] | None = None) -> tuple[int, dict | None]:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    try:
        cfg = RunConfig(command=args.command, model=args.model, resolutions=parse_resolutions(args.res),
                        eigs=args.eigs, tol_eig=args.tol_eig, tol_sub=args.tol_sub, fmt=args.fmt,
                        out=args.out, seed=args.seed, strict=args.strict, backend=args.backend,
                        eigensolver=args.eigensolver, variation=getattr(args, "variation", None),
                        samples=args.samples)
        cfg.validate()
        var = parse_variation(cfg.variation) if cfg.variation else None
    except (ConfigError, VariationParseError) as exc:
        print(f"shrinker-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None

    try:
        spec = parse_model(cfg.model)
        resolved = [_resolve(spec, r) for r in cfg.resolutions]
        models = [build_model(spec, r, cfg.backend) for r in resolved]
    except (InvalidWindow, NoConvergence, ModelSpecError, ShrinkerLabError) as exc:
        print(f"shrinker-lab: model build failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUILD, None

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if cfg.command == "second-variation":
                sections, failures = cmd_second_variation(cfg, spec, models, var)
            else:
                sections, failures = COMMANDS[cfg.command](cfg, spec, models)
    except ConfigError as exc:
        print(f"shrinker-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except NotAShrinker as exc:
        sections, failures = {"error": {"type": "NotAShrinker", "message": str(exc)}}, [str(exc)]
    except ShrinkerLabError as exc:
        sections, failures = {"error": {"type": type(exc).__name__, "message": str(exc)}}, [str(exc)]

    inconclusive = any(isinstance(s, dict) and s.get("tag") == INCONCLUSIVE for s in sections.values())
    code = EXIT_VERIFY if failures else EXIT_OK
    report = {
        "schema": SCHEMA_ID,
        "command": cfg.command,
        "model": spec.metadata(),
        "config": {"resolutions": [list(r) for r in resolved], "eigs": cfg.eigs, "tol_eig": cfg.tol_eig,
                   "tol_sub": cfg.tol_sub, "seed": cfg.seed, "backend": cfg.backend,
                   "eigensolver": cfg.eigensolver, "strict": cfg.strict, "samples": cfg.samples},
        "status": "fail" if failures else ("inconclusive" if inconclusive else "ok"),
        "exit_code": code,
        "failures": failures,
        "warnings": sorted({str(w.message) for w in caught}),
        "sections": sections,
    }
    if len(models) > 1:
        report["resolution_table"] = _resolution_table(models)

    report = to_plain(report)
    if cfg.fmt == "csv":
        text = spectrum_csv(sections["spectrum"]["rows"]) if "spectrum" in sections else ""
    else:
        text = dumps(report)
    _emit(text, cfg.out)
    for f in failures:
        print(f"shrinker-lab: {f}", file=sys.stderr)
    return code, report


def main(argv: list[str] | None = None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
