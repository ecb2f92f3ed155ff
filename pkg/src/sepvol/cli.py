"""Command-line entry point: estimates, scenario tables, fits and verification.

Every command emits a run manifest (argv, seeds, sample counts, tolerances,
constant-table version, wall time, payload); ``replay`` re-runs it and
compares payloads.  Exit codes: 0 success, 1 acceptance failure, 2 usage
error, 3 numerical budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

from . import measures, scenarios, verify, weightfit
from .integrate import QuadratureError, QuadratureSpec, quad_simplex

SCHEMA = "sepvol.run/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers

def round_sig(obj):
    """Round every float to 15 significant digits, recursively."""
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else float(f"{obj:.15g}")
    if isinstance(obj, dict):
        return {k: round_sig(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return round_sig(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(round_sig(obj), indent=2, sort_keys=False)


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".sepvol-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    cols = list(rows[0])
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else (f"{v:.15g}" if isinstance(v, float) else v)) for k, v in r.items()})
    return buf.getvalue()


def parse_samples(text: str) -> int:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(x) or x < 0 or x != int(x):
        raise argparse.ArgumentTypeError(f"sample count must be a nonnegative integer, got {text!r}")
    return int(x)


@dataclass
class RunManifest:
    argv: list
    seeds: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    constants_version: str = measures.CONSTANTS_VERSION
    wall_time: float = 0.0
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "argv": self.argv, "seeds": self.seeds, "samples": self.samples,
                "tolerances": self.tolerances, "constants_version": self.constants_version,
                "wall_time": self.wall_time, "payload": self.payload}

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        if d.get("schema") != SCHEMA:
            raise UsageError(f"unsupported manifest schema {d.get('schema')!r}")
        return cls(d["argv"], d.get("seeds", []), d.get("samples", []), d.get("tolerances", {}),
                   d.get("constants_version", ""), d.get("wall_time", 0.0), d.get("payload", {}))


# ---------------------------------------------------------------------------
# commands

SYSTEM_DIM = {"2x2": 4, "2x3": 6}


def _conjecture(metric: str, system: str, quantity: str):
    entry = measures.constant_table().get((metric, system, quantity))
    if entry is None:
        return None
    return {"decimal": entry.decimal, "symbolic": None if entry.symbolic is None else str(entry.symbolic),
            "source": entry.source}


def _total_volume(metric: str, n: int) -> float:
    m = measures.MetricKind.parse(metric)
    alpha = 0.5 if m.monotone else 1.0
    spec = QuadratureSpec(n - 1, rtol=1e-10 if n <= 4 else 1e-2)
    return measures.unitary_volume(n) * quad_simplex(lambda L: measures.density_values(m, L), n, spec, alpha=alpha)


def cmd_estimate(args) -> tuple[dict, int]:
    metric = measures.MetricKind.parse(args.metric).value
    n = SYSTEM_DIM[args.system]
    q = args.quantity
    result: dict = {"metric": metric, "system": args.system, "quantity": q}
    if q == "total-volume":
        value = _total_volume(metric, n)
        result.update(route="quadrature", value=value, stderr=0.0)
        target = _conjecture(metric, args.system, "total-volume")
    else:
        if metric not in ("hs", "bures"):
            raise UsageError(f"no state sampler for the {metric} measure; use fit-predict for predictions")
        if args.samples < 1000:
            raise UsageError("sampling routes need --samples >= 1000")
        est = measures.separability_mc(metric, n, args.samples, args.seed, args.threads)
        if q == "sep-volume":
            total = measures.constant_table().get((metric, args.system, "total-volume"))
            est = est.scaled(total.decimal)
        if args.target_stderr is not None and est.stderr > args.target_stderr:
            raise scenarios.BudgetExceeded(f"stderr {est.stderr:.3g} above {args.target_stderr:.3g}")
        result.update(route="direct sampling", **est.to_dict())
        target = _conjecture(metric, args.system, q)
    result["conjecture"] = target
    if target and target["decimal"]:
        result["ratio"] = result["value"] / target["decimal"]
        if result["stderr"]:
            result["zscore"] = (result["value"] - target["decimal"]) / result["stderr"]
    return result, EXIT_OK


def _scenario_row(res: scenarios.ScenarioResult, classification: str) -> dict:
    row = {"label": res.spec.label(), "zeroed": " ".join(sorted(res.spec.zeroed)), "dimension": res.spec.dimension,
           "constraint": res.spec.constraint, "classification": classification}
    for key in ("total", "separable", "probability"):
        e = getattr(res, key)
        row[key] = e.value
        row[f"{key}_stderr"] = e.stderr
        row[f"{key}_expected"] = res.expected.get(key)
        row[f"{key}_z"] = res.zscores().get(key)
    return row


def cmd_scenarios(args) -> tuple[dict, int]:
    rows = []
    for spec, label, _ in scenarios.enumerate_scenarios(args.dim, args.constraint):
        res = scenarios.evaluate_scenario(spec, args.samples, args.seed, method=args.method,
                                          threads=args.threads, target_stderr=args.target_stderr)
        rows.append(_scenario_row(res, label))
    return {"rows": rows}, EXIT_OK


def _form_from_args(args):
    if args.form == "eq11":
        return weightfit.single_power_e3(), {"coeff": weightfit.EQ11_COEFF, "power": str(weightfit.EQ11_EXPONENT)}
    if args.form == "two-term":
        a, b = weightfit.fit_two_term(args.m1, args.m2)
        return weightfit.two_term(a, b, args.m1, args.m2), {"m1": args.m1, "m2": args.m2, "a": a, "b": b,
                                                             "b_over_a": b / a}
    if args.form == "blend":
        f1, f2 = weightfit.fit_two_term_form(3, 3), weightfit.fit_two_term_form(4, 3)
        w = weightfit.BLEND_WEIGHT
        return weightfit.blend([(f1, w), (f2, 1 - w)]), {"weights": [w, 1 - w]}
    c = weightfit.fit_qutrit()
    return weightfit.single_power_e5(c), {"coeff": c, "power": str(weightfit.QUTRIT_EXPONENT)}


INDICATOR_TOL = {"eq11": 0.005, "two-term": 0.05 + verify.QUAD_TOL, "blend": 0.0361 + 0.005}


def cmd_fit_predict(args) -> tuple[dict, int]:
    form, params = _form_from_args(args)
    if args.form == "qutrit":
        reports = [weightfit.predict(form, "hs", "hyperarea"), weightfit.predict(form, "bures", "volume"),
                   weightfit.predict(form, "bures", "hyperarea")]
        targets = {("hs", "hyperarea"): (1.0, 0.015), ("bures", "volume"): (1.82587, 0.02),
                   ("bures", "hyperarea"): (1.91223, 0.02)}
    else:
        reports = weightfit.indicator_reports(form)
        tol = INDICATOR_TOL[args.form]
        targets = {(r.metric, r.quantity): (verify.EQ11_TARGETS[(r.metric, r.quantity)] if args.form == "eq11"
                                            else 1.0, tol) for r in reports}
    rows, ok = [], True
    for r in reports:
        t, tol = targets[(r.metric, r.quantity)]
        passed = abs(r.ratio / t - 1.0) <= tol
        ok &= passed
        rows.append({**r.to_dict(), "expected_ratio": t, "tolerance": tol, "passed": passed})
    extra = {}
    if args.form == "eq11":
        extra = {"kubo-mori_hyperarea": weightfit.integrate_form(form, "kubo-mori", "hyperarea"),
                 "kubo-mori_boundary_probability": weightfit.boundary_probability(form, "kubo-mori")}
    return {"form": form.label or form.kind, "params": params, "reports": rows, "reported": extra,
            "verdict": "pass" if ok else "fail"}, EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> tuple[dict, int]:
    checks = verify.run(args.suite, args.budget)
    for c in checks:
        print(c.line(), file=sys.stderr)
    ok = verify.all_passed(checks)
    return {"suite": args.suite, "passed": ok, "checks": [c.to_dict() for c in checks],
            "failures": [c.to_dict() for c in checks if not c.passed and c.gating]}, EXIT_OK if ok else EXIT_FAIL


def cmd_catalog(args) -> tuple[dict, int]:
    return {"scenarios": json.loads(scenarios.export_catalog())["scenarios"],
            "constants": json.loads(measures.export_constants())}, EXIT_OK


def cmd_replay(args) -> tuple[dict, int]:
    with open(args.manifest) as fh:
        manifest = RunManifest.from_dict(json.load(fh))
    fresh, code = execute(manifest.argv)
    same = round_sig(fresh.payload) == round_sig(manifest.payload)
    return {"manifest": args.manifest, "reproduced": same, "exit_code": code}, EXIT_OK if same else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sepvol", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp_, samples_default="1e6"):
        sp_.add_argument("--samples", type=parse_samples, default=parse_samples(samples_default))
        sp_.add_argument("--seed", type=int, default=0)
        sp_.add_argument("--threads", type=int, default=None)
        sp_.add_argument("--target-stderr", type=float, default=None)

    def output(sp_, formats=("json",)):
        sp_.add_argument("--out", default=None, help="write the manifest here (atomic); stdout otherwise")
        sp_.add_argument("--format", choices=formats, default="json")

    e = sub.add_parser("estimate", help="direct estimate of a volume or probability")
    e.add_argument("--metric", required=True)
    e.add_argument("--system", choices=sorted(SYSTEM_DIM), default="2x2")
    e.add_argument("--quantity", choices=("sep-volume", "sep-probability", "total-volume"), required=True)
    common(e)
    output(e)
    e.set_defaults(fn=cmd_estimate)

    s = sub.add_parser("scenarios", help="restricted real scenario table")
    s.add_argument("--dim", type=int, required=True, choices=(3, 4, 5, 7, 9))
    s.add_argument("--constraint", choices=scenarios.CONSTRAINTS, default="fully-separable")
    s.add_argument("--method", choices=("implicit", "cad"), default="implicit")
    common(s)
    output(s, ("json", "csv"))
    s.set_defaults(fn=cmd_scenarios)

    f = sub.add_parser("fit-predict", help="fit a weighting function and predict other metrics")
    f.add_argument("--form", choices=("eq11", "two-term", "blend", "qutrit"), required=True)
    f.add_argument("--m1", type=int, default=3)
    f.add_argument("--m2", type=int, default=3)
    output(f, ("json", "csv"))
    f.set_defaults(fn=cmd_fit_predict)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--suite", choices=verify.SUITES, default="all")
    v.add_argument("--budget", type=parse_samples, default=parse_samples("1e7"))
    output(v)
    v.set_defaults(fn=cmd_verify)

    c = sub.add_parser("catalog", help="export the scenario catalog and constant table")
    output(c)
    c.set_defaults(fn=cmd_catalog)

    r = sub.add_parser("replay", help="re-run a manifest and compare payloads")
    r.add_argument("manifest")
    output(r)
    r.set_defaults(fn=cmd_replay)
    return p


def execute(argv: list[str]) -> tuple[RunManifest, int]:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    payload, code = args.fn(args)
    manifest = RunManifest(list(argv))
    for key in ("seed", "samples", "budget"):
        if hasattr(args, key):
            (manifest.seeds if key == "seed" else manifest.samples).append(getattr(args, key))
    if getattr(args, "target_stderr", None) is not None:
        manifest.tolerances["target_stderr"] = args.target_stderr
    manifest.wall_time = time.perf_counter() - t0
    manifest.payload = payload
    return manifest, code


def _render(manifest: RunManifest, fmt: str) -> str:
    if fmt == "csv":
        p = manifest.payload
        return to_csv(p.get("rows") or p.get("reports") or [])
    return dumps(manifest.to_dict()) + "\n"


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        manifest, code = execute(argv)
    except SystemExit as exc:  # argparse
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    except (UsageError, measures.DomainError, ValueError, NotImplementedError) as exc:
        print(f"sepvol: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, scenarios.BudgetExceeded) as exc:
        print(f"sepvol: numerical budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except weightfit.SingularFitError as exc:
        print(f"sepvol: singular fit: {exc}", file=sys.stderr)
        return EXIT_FAIL
    args = build_parser().parse_args(argv)
    text = _render(manifest, getattr(args, "format", "json"))
    if getattr(args, "out", None):
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
