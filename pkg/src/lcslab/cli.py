"""Command-line driver: ``lcslab verify|moment-image|cone-check|toric-check|monodromy``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import convexity as cv
from . import lcs, models, moment, toric
from .errors import LcsLabError, UsageError

CHECKS = ("lcs", "special", "moment", "poisson", "leetype", "convexity", "cone", "fibers",
          "toric", "monodromy")
EXPECTATIONS = {
    "convex": ("convexity", "convex"),
    "nonconvex": ("convexity", "nonconvex"),
    "inconclusive": ("convexity", "inconclusive"),
    "lee": ("leetype", True),
    "no-lee": ("leetype", False),
    "cone": ("cone", True),
    "no-cone": ("cone", False),
    "connected": ("fibers", True),
    "disconnected": ("fibers", False),
}

DEFAULTS = {
    "model": "istrati",
    "weights": None,
    "f": None,
    "c": 1.0,
    "checks": "lcs,special,moment",
    "samples": 10000,
    "sampler": "prng",
    "seed": 0,
    "fd_tol": 1e-6,
    "delta": 1e-2,
    "eps": None,
    "lee_tol": 1e-6,
    "lambda_range": 3.0,
    "out_dir": ".",
    "expect": "",
    "space": "twisted",
    "potential": "flat",
    "grid_file": None,
    "gens": None,
    "struct_points": 1000,
    "fiber_samples": 50000,
    "slab_width": 0.05,
}


@dataclass
class SuiteConfig:
    model: str
    weights: Optional[List[float]]
    f: Optional[str]
    c: float
    checks: List[str]
    samples: int
    sampler: str
    seed: int
    fd_tol: float
    delta: float
    eps: Optional[float]
    lee_tol: float
    lambda_range: float
    out_dir: str
    expect: Dict[str, object] = field(default_factory=dict)
    struct_points: int = 1000
    fiber_samples: int = 50000
    slab_width: float = 0.05

    def tolerances(self) -> dict:
        return {"fd_tol": self.fd_tol, "delta": self.delta,
                "eps": 0.5 * self.delta if self.eps is None else self.eps,
                "lee_tol": self.lee_tol}

    def build_model(self) -> models.LcsModel:
        return models.build_model(self.model, self.weights, self.f, self.c)


# --------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config(path: str) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    out = {}
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{no}: expected key=value")
        key = key.strip().replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        out[key] = val.strip()
    return out


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config")
    p.add_argument("--model")
    p.add_argument("--weights", help="comma-separated positive weights")
    p.add_argument("--f", help="profile preset const:c | poly:c2 | cos:amp")
    p.add_argument("--c", type=float, help="length of the circle factor")
    p.add_argument("--samples", type=int)
    p.add_argument("--sampler", choices=models.SAMPLERS)
    p.add_argument("--seed", type=int)
    p.add_argument("--fd-tol", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--lee-tol", type=float)
    p.add_argument("--lambda-range", type=float)
    p.add_argument("--out-dir")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lcslab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", help="run a verification suite on a model")
    _add_common(v)
    v.add_argument("--checks", help=f"comma-separated subset of {','.join(CHECKS)}")
    v.add_argument("--expect", help=f"expected verdicts: {','.join(EXPECTATIONS)}")
    v.add_argument("--struct-points", type=int)
    v.add_argument("--fiber-samples", type=int)
    v.add_argument("--slab-width", type=float)
    m = sub.add_parser("moment-image", help="sample the moment image to points.csv")
    _add_common(m)
    m.add_argument("--space", choices=("twisted", "symplectic"))
    c = sub.add_parser("cone-check", help="check the symplectic image against the cone")
    _add_common(c)
    t = sub.add_parser("toric-check", help="action-angle checks on a potential")
    t.add_argument("--config")
    t.add_argument("--potential", choices=("flat", "user-grid"))
    t.add_argument("--grid-file")
    t.add_argument("--seed", type=int)
    t.add_argument("--out-dir")
    mo = sub.add_parser("monodromy", help="classify Aff+(R) generators a:b,a:b,...")
    mo.add_argument("--config")
    mo.add_argument("--gens")
    mo.add_argument("--out-dir")
    return parser


def merged_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for key, val in vars(args).items():
        if key in ("config", "command") or val is None:
            continue
        settings[key] = val
    return settings


def _floats(text) -> Optional[List[float]]:
    if text is None or text == "":
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _num(settings, key, kind):
    val = settings[key]
    if val is None or val == "":
        return None
    try:
        return kind(val)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {val!r}") from exc


def make_config(settings: dict) -> SuiteConfig:
    checks = [c.strip() for c in str(settings["checks"]).split(",") if c.strip()]
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise UsageError(f"unknown checks: {', '.join(unknown)}")
    expect = {}
    for e in [e.strip() for e in str(settings.get("expect") or "").split(",") if e.strip()]:
        if e not in EXPECTATIONS:
            raise UsageError(f"unknown expectation {e!r}")
        k, v = EXPECTATIONS[e]
        expect[k] = v
    cfg = SuiteConfig(
        model=str(settings["model"]), weights=_floats(settings["weights"]),
        f=settings["f"], c=_num(settings, "c", float), checks=checks,
        samples=_num(settings, "samples", int), sampler=str(settings["sampler"]),
        seed=_num(settings, "seed", int), fd_tol=_num(settings, "fd_tol", float),
        delta=_num(settings, "delta", float), eps=_num(settings, "eps", float),
        lee_tol=_num(settings, "lee_tol", float),
        lambda_range=_num(settings, "lambda_range", float), out_dir=str(settings["out_dir"]),
        expect=expect, struct_points=_num(settings, "struct_points", int),
        fiber_samples=_num(settings, "fiber_samples", int),
        slab_width=_num(settings, "slab_width", float),
    )
    if cfg.samples is None or cfg.samples < 1:
        raise UsageError("--samples must be at least 1")
    if cfg.sampler not in models.SAMPLERS:
        raise UsageError(f"unknown sampler {cfg.sampler!r}")
    if cfg.model not in models.MODEL_NAMES:
        raise UsageError(f"unknown model {cfg.model!r}")
    return cfg


# --------------------------------------------------------------------------
# suite


def _finite(obj):
    """Replace non-finite floats by None and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _entry(passed: bool, tol, **data) -> dict:
    return {"passed": bool(passed), "tol": tol, **data}


def run_suite(cfg: SuiteConfig) -> tuple:
    """Run the configured checks; returns ``(exit_code, report)`` and writes files."""
    model = cfg.build_model()
    tol = cfg.tolerances()
    S = model.structure
    ns = min(cfg.samples, cfg.struct_points)
    x = models.sample_coords(model, ns, cfg.sampler, cfg.seed)
    report = {"config": {"model": model.describe(), "checks": cfg.checks,
                         "samples": cfg.samples, "sampler": cfg.sampler, "seed": cfg.seed,
                         "lambda_range": cfg.lambda_range, "expect": cfg.expect},
              "tolerances": tol, "checks": {}}
    results = report["checks"]
    samples = None
    hull_report = None

    def image():
        nonlocal samples
        if samples is None:
            samples = moment.sample_moment_image(model, cfg.samples, cfg.sampler, cfg.seed)
        return samples

    for check in cfg.checks:
        if check == "lcs":
            a = lcs.check_lcs(S, x)
            b = lcs.closedness_residual(S, x)
            results["lcs"] = _entry(max(a.max_residual, b.max_residual) <= cfg.fd_tol,
                                    cfg.fd_tol, lcs_residual=a.to_dict(),
                                    dtheta_residual=b.to_dict())
        elif check == "special":
            out, ok = {}, True
            fields = list(enumerate(model.action.basis_fields()))
            for j, X in fields:
                r = lcs.special_residual(X, S, x)
                t = lcs.theta_of(X, S, x)
                out[f"X{j}"] = {"residual": r.report.to_dict(),
                                "homothety_estimate": r.homothety_estimate,
                                "homothety_variance": r.homothety_variance,
                                "theta_of_X": t.max_residual}
                ok &= r.report.max_residual <= cfg.fd_tol and t.max_residual <= cfg.fd_tol
            rv = lcs.special_residual(lcs.s_lee_vector_field(S), S, x)
            out["V"] = {"residual": rv.report.to_dict()}
            ok &= rv.report.max_residual <= cfg.fd_tol
            results["special"] = _entry(ok, cfg.fd_tol, fields=out)
        elif check == "moment":
            reps = moment.moment_residuals(model, x)
            mu = moment.twisted_moment(model, x, validate=False)
            rng = np.random.default_rng([cfg.seed, 3])
            t = rng.uniform(0, 2 * np.pi, (x.shape[0], model.rank))
            orbit = float(np.max(np.abs(
                moment.twisted_moment(model, model.action.act(t, x), validate=False) - mu)))
            worst = max(r.max_residual for r in reps)
            entry = _entry(worst <= cfg.fd_tol and orbit <= 1e-8, cfg.fd_tol,
                           components=[r.to_dict() for r in reps], orbit_invariance=orbit,
                           orbit_tol=1e-8)
            if model.is_lee_type:
                pair = float(np.max(np.abs(mu @ model.lee_element - 1.0)))
                entry["lee_slice_residual"] = pair
                entry["passed"] = entry["passed"] and pair <= 1e-10
            results["moment"] = entry
        elif check == "poisson":
            comps = moment.moment_components(model)
            worst = 0.0
            for i in range(len(comps)):
                for j in range(i + 1, len(comps)):
                    worst = max(worst, float(np.max(np.abs(
                        lcs.twisted_poisson(comps[i], comps[j], S, x)))))
            results["poisson"] = _entry(worst <= cfg.fd_tol, cfg.fd_tol, max_bracket=worst)
        elif check == "leetype":
            w = moment.lee_type_witness(model, x, tol=cfg.lee_tol, seed=cfg.seed + 1)
            fit = moment.fit_lee_element(model, x)
            hw = cv.hyperplane_witness(image())
            found = w is not None
            expected = cfg.expect.get("leetype", True)
            agree = True
            if found and hw.status == "accepted":
                agree = float(np.max(np.abs(w.Y - hw.Y))) <= 1e-6
            results["leetype"] = _entry(
                found == expected and agree, cfg.lee_tol, found=found, expected=expected,
                Y=None if w is None else w.Y, fit_residual=fit.residual,
                hyperplane={"status": hw.status, "Y": hw.Y, "residual": hw.residual,
                            "tol": 1e-8},
                witnesses_agree=agree)
        elif check == "convexity":
            refined = cv.refine_support(model, image())
            hull_report = cv.convexity_verdict(refined, cfg.eps, cfg.delta)
            expected = cfg.expect.get("convexity", "convex")
            entry = _entry(hull_report.verdict == expected, cfg.delta,
                           expected=expected, report=hull_report.to_dict())
            if model.is_lee_type:
                ex = cv.extremal_set_C(model, image().sources)
                entry["extremal_set"] = ex.to_dict()
                if expected == "convex":
                    entry["passed"] = entry["passed"] and ex.match
            results["convexity"] = entry
        elif check == "cone":
            base = hull_report if hull_report is not None else cv.convexity_verdict(
                cv.refine_support(model, image()), cfg.eps, cfg.delta)
            hat = moment.sample_moment_image(model, cfg.samples, cfg.sampler, cfg.seed + 1,
                                             "symplectic", cfg.lambda_range)
            rep = cv.cone_check(hat, base, model.lee_element)
            expected = cfg.expect.get("cone", True)
            results["cone"] = _entry(rep.is_cone == expected, rep.tol, expected=expected,
                                     report=rep.to_dict())
        elif check == "fibers":
            alpha = image().values[0]
            fr = cv.fiber_connectivity(model, alpha, cfg.slab_width, cfg.fiber_samples,
                                       seed=cfg.seed)
            expected = cfg.expect.get("fibers", True)
            results["fibers"] = _entry(fr.connected == expected, None, alpha=alpha,
                                       slab_width=cfg.slab_width, components=fr.components,
                                       n_points=fr.n_points, eps=fr.eps, expected=expected)
        elif check == "toric":
            results["toric"] = _toric_entry(toric.flat_cone(2), cfg.seed)
        elif check == "monodromy":
            xhat = models.sample_covering(model, ns, cfg.lambda_range, cfg.sampler, cfg.seed)
            out, ok = [], True
            for j, Y in enumerate(np.eye(model.rank)):
                fits = moment.hamiltonian_monodromy(model, xhat, Y)
                gens = [g for g, _ in fits]
                fit_res = max((r for _, r in fits), default=0.0)
                try:
                    verdict = lcs.monodromy_classify(gens)
                    entry = {"twisted_hamiltonian": verdict.twisted_hamiltonian,
                             "conjugating_offset": verdict.conjugating_offset}
                    ok &= verdict.twisted_hamiltonian
                except LcsLabError as exc:
                    entry = {"error": str(exc)}
                    ok = False
                entry.update(generators=[[g.a, g.b] for g in gens], fit_residual=fit_res)
                ok &= fit_res <= 1e-10
                out.append(entry)
            results["monodromy"] = _entry(ok, 1e-12, basis=out, fit_tol=1e-10)

    passed = all(r["passed"] for r in results.values())
    report["passed"] = passed
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_report(report, os.path.join(cfg.out_dir, "report.json"))
    if samples is not None:
        samples.to_csv(os.path.join(cfg.out_dir, "points.csv"))
        hull = hull_report.hull if hull_report is not None else _safe_hull(samples.values)
        if hull is not None:
            hull.to_json(os.path.join(cfg.out_dir, "hull.json"))
    return (0 if passed else 2), report


def _safe_hull(values):
    try:
        return cv.convex_hull(values)
    except UsageError:
        return None


def _toric_entry(m: toric.ActionAngleModel, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    n = m.rank
    xs = rng.uniform(0.5, 2.0, (20, n))
    homog = max(toric.hessian_homogeneity(m, x, [-1.0, 0.5, 1.0]).max_residual for x in xs)
    holo0 = max(toric.holomorphy_residual(m, rng.uniform(-0.5, 0.5), rng.uniform(0, 6, n),
                                          np.zeros((n, n)), xs[:5]) for _ in range(20))
    A = rng.standard_normal((n, n))
    A *= 0.1 / np.linalg.norm(A)
    holoA = toric.holomorphy_residual(m, 0.3, np.zeros(n), A, xs[:5])
    resc = toric.omega_rescaling(0.3, rank=n)
    ok = (homog <= 1e-8 and holo0 <= 1e-8 and holoA >= 1e-3
          and abs(resc.factor - np.exp(-0.6)) <= 1e-10)
    return _entry(ok, 1e-8, potential=m.name, homogeneity_residual=homog,
                  holomorphy_A0=holo0, holomorphy_A=holoA, separation_tol=1e-3,
                  rescaling_factor=resc.factor, expected_factor=float(np.exp(-0.6)))


def write_report(report: dict, path: str) -> None:
    text = json.dumps(_finite(report), sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


# --------------------------------------------------------------------------
# other subcommands


def _cmd_moment_image(settings: dict) -> int:
    cfg = make_config({**settings, "checks": ""})
    model = cfg.build_model()
    space = settings.get("space") or "twisted"
    lr = cfg.lambda_range if space == "symplectic" else None
    samples = moment.sample_moment_image(model, cfg.samples, cfg.sampler, cfg.seed, space, lr)
    os.makedirs(cfg.out_dir, exist_ok=True)
    samples.to_csv(os.path.join(cfg.out_dir, "points.csv"))
    hull = _safe_hull(samples.values)
    if hull is not None:
        hull.to_json(os.path.join(cfg.out_dir, "hull.json"))
    return 0


def _cmd_cone(settings: dict) -> int:
    cfg = make_config({**settings, "checks": "cone"})
    code, _ = run_suite(cfg)
    return code


def _cmd_toric(settings: dict) -> int:
    if settings.get("potential", "flat") == "user-grid":
        if not settings.get("grid_file"):
            raise UsageError("user-grid potential needs --grid-file")
        m = toric.load_user_grid(settings["grid_file"])
    else:
        m = toric.flat_cone(2)
    entry = _toric_entry(m, int(settings.get("seed") or 0))
    out_dir = str(settings.get("out_dir") or ".")
    os.makedirs(out_dir, exist_ok=True)
    write_report({"checks": {"toric": entry}, "passed": entry["passed"]},
                 os.path.join(out_dir, "report.json"))
    return 0 if entry["passed"] else 2


def parse_gens(text) -> List[lcs.AffinePlus]:
    if not text:
        raise UsageError("--gens is required, e.g. 0.5:0,0.25:0.75")
    gens = []
    for item in str(text).split(","):
        a, sep, b = item.partition(":")
        if not sep:
            raise UsageError(f"generator {item!r} must look like a:b")
        try:
            gens.append(lcs.AffinePlus(float(a), float(b)))
        except ValueError as exc:
            raise UsageError(f"bad generator {item!r}") from exc
    return gens


def _cmd_monodromy(settings: dict) -> int:
    gens = parse_gens(settings.get("gens"))
    verdict = lcs.monodromy_classify(gens)
    out = {"generators": [[g.a, g.b] for g in gens],
           "twisted_hamiltonian": verdict.twisted_hamiltonian,
           "conjugating_offset": verdict.conjugating_offset, "tol": 1e-12}
    print(json.dumps(_finite(out), sort_keys=True))
    out_dir = settings.get("out_dir")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_report(out, os.path.join(out_dir, "report.json"))
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        settings = merged_settings(args)
        if args.command == "verify":
            code, report = run_suite(make_config(settings))
            for name, entry in report["checks"].items():
                print(f"{name}: {'pass' if entry['passed'] else 'FAIL'}")
            return code
        if args.command == "moment-image":
            return _cmd_moment_image(settings)
        if args.command == "cone-check":
            return _cmd_cone(settings)
        if args.command == "toric-check":
            return _cmd_toric(settings)
        return _cmd_monodromy(settings)
    except UsageError as exc:
        print(f"lcslab: error: {exc}", file=sys.stderr)
        return 1
    except LcsLabError as exc:
        print(f"lcslab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
