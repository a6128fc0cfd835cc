"""Command-line interface.

Subcommands: ``check`` (hypothesis verdicts as JSON lines), ``diag``
(kernel-norm diagnostics to CSV), ``relax`` (stochastic relaxation run),
``fit`` (parameter fits from a data manifest), and ``table1`` (reference
gas table from the bundled synthetic datasets).

Exit codes: 0 success, 2 argument or schema error, 3 I/O error,
4 numerical abort.  Output files are written atomically (temp file plus
rename), and commands with random state echo their seed as a `# seed=`
header line.  The environment variable POLYKIN_THREADS caps worker counts
in the Monte Carlo estimators.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import fitlab, relax
from .equilib import EquilibriumParams, Maxwellian
from .hypotheses import HypothesisId, check
from .model import ContinuousEnergy, PowerLawE, single_species, spec_from_json
from .operator import GridSpec, assemble_k1, k2_integrability_diagnostic

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _load_schema(name: str) -> dict:
    text = resources.files("polykin.schemas").joinpath(name).read_text(encoding="utf-8")
    return json.loads(text)


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=str(parent), prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _require_finite(**flags) -> None:
    for name, value in flags.items():
        if value is not None and not math.isfinite(value):
            raise ValueError(f"--{name} must be finite")


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


# which flags each hypothesis id consumes
_NEEDS_DELTA = {
    HypothesisId.H2_single_BL, HypothesisId.H3_single_Psi,
    HypothesisId.H4_resonant, HypothesisId.H6_mixture_BL,
    HypothesisId.H7_mixture_Psi,
}
_NEEDS_ZETA = _NEEDS_DELTA | {HypothesisId.H5_discrete}


def _cmd_check(args) -> int:
    _require_finite(delta=args.delta, zeta=args.zeta,
                    zeta1=args.zeta1, zeta2=args.zeta2)
    tokens = [tok.strip() for tok in args.hyp.split(",") if tok.strip()]
    if not tokens:
        raise ValueError("--hyp needs at least one hypothesis id")
    ids = [HypothesisId.parse(tok) for tok in tokens]
    for hid in ids:
        if hid in _NEEDS_DELTA and args.delta is None:
            raise ValueError(f"--delta is required for {hid.value}")
        if hid in _NEEDS_ZETA and args.zeta is None:
            raise ValueError(f"--zeta is required for {hid.value}")
    for hid in ids:
        verdict = check(hid, delta=args.delta, zeta=args.zeta,
                        zeta1=args.zeta1, zeta2=args.zeta2,
                        extended=args.extended)
        if isinstance(verdict, dict):
            # scalar inputs collapse the mixture check to its only pair
            verdict = verdict[(0, 0)]
        print(verdict.to_json())
    return EXIT_OK


def _cmd_diag(args) -> int:
    _require_finite(delta=args.delta, zeta=args.zeta)
    out = args.out or f"diag_{args.kind}.csv"
    if args.kind == "k2":
        diag = k2_integrability_diagnostic(args.delta, args.zeta)
        lines = [f"# seed={args.seed}", "epsilon,partial_integral"]
        lines += [f"{eps:.17g},{val:.17g}" for eps, val in diag.rows()]
        _atomic_write(out, "\n".join(lines) + "\n")
        summary = {
            "kind": "k2",
            "delta": args.delta,
            "zeta": args.zeta,
            "seed": args.seed,
            "out": str(out),
            "verdict": diag.verdict,
            "final_partial": diag.partials[-1],
            "cauchy_change": diag.cauchy_change,
            "inconsistent": diag.inconsistent,
        }
    else:
        spec = single_species(ContinuousEnergy(delta=args.delta),
                              PowerLawE(C=1.0, zeta=args.zeta))
        M = Maxwellian(spec, EquilibriumParams(
            n=(1.0,), u=np.zeros(3), T_kin=1.0, T_int=1.0))
        grid = GridSpec() if args.grid is None else GridSpec(
            n_velocity=args.grid, n_internal=args.grid)
        k1 = assemble_k1(grid, M)
        speeds = np.sqrt(np.sum(k1.nodes_v**2, axis=1))
        norms = k1.row_norms()
        lines = [f"# seed={args.seed}", "node_index,v,I,k1_row_norm"]
        lines += [
            f"{idx},{speeds[idx]:.17g},{k1.nodes_i[idx]:.17g},{norms[idx]:.17g}"
            for idx in range(k1.n_nodes)
        ]
        _atomic_write(out, "\n".join(lines) + "\n")
        summary = {
            "kind": "k1norm",
            "delta": args.delta,
            "zeta": args.zeta,
            "seed": args.seed,
            "out": str(out),
            "hs_norm": k1.hs_norm(),
            "symmetry_defect": k1.symmetry_defect(),
            "n_nodes": k1.n_nodes,
        }
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_relax(args) -> int:
    doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    jsonschema.validate(doc, _load_schema("relax_config.schema.json"))
    spec = spec_from_json(json.dumps(doc))
    rc = doc["relax"]
    config = relax.RelaxConfig(
        dt=rc["dt"],
        n_particles=rc["n_particles"],
        seed=rc.get("seed", 0),
        cadence=rc.get("cadence", 10),
        b_maj=rc.get("b_maj"),
        violation_tol=rc.get("violation_tol", 1e-3),
    )
    series = relax.run(spec, config, rc["T_kin0"], rc["T_int0"], rc["t_end"],
                       u0=rc.get("u0"))
    out = args.out or "relax_series.csv"
    out_path = Path(out)
    parent = out_path.parent if str(out_path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=str(parent), prefix=out_path.name + ".",
                               suffix=".tmp")
    os.close(fd)
    try:
        series.to_csv(tmp)
        os.replace(tmp, out_path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    summary = relax.relax_summary(series)
    summary["out"] = str(out)
    summary = {k: _json_safe(v) for k, v in summary.items()}
    if summary["equipartition_gap"] is None:
        summary["equipartition_within_2pct"] = None
    print(json.dumps(summary))
    return EXIT_OK


def _write_report(rows, out) -> dict:
    header = ",".join(fitlab.REPORT_COLUMNS)
    body = []
    for r in rows:
        body.append(
            f"{r.gas},{r.pressure_bar:g},{r.t_low:g},{r.t_high:g},"
            f"{r.delta_fit:.12g},{r.zeta_fit:.12g},"
            f"{r.delta_ref:g},{r.zeta_ref:g},{r.zeta_chapman_cowling:g},"
            f"{r.delta_gap:.12g},{r.zeta_gap:.12g},{r.zeta_chapman_gap:.12g}"
        )
    _atomic_write(out, "\n".join([header] + body) + "\n")
    return {
        "rows": len(rows),
        "out": str(out),
        "max_abs_delta_gap": max(abs(r.delta_gap) for r in rows),
        "max_abs_zeta_gap": max(abs(r.zeta_gap) for r in rows),
    }


def _cmd_fit(args) -> int:
    doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    jsonschema.validate(doc, _load_schema("fit_manifest.schema.json"))
    datasets = fitlab.load_manifest(args.manifest)
    rows = fitlab.reproduce_table1(datasets)
    print(json.dumps(_write_report(rows, args.out or "fit_report.csv")))
    return EXIT_OK


def _cmd_table1(args) -> int:
    rows = fitlab.reproduce_table1()
    print(json.dumps(_write_report(rows, args.out or "table1_report.csv")))
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polykin",
        description="Collision-kernel toolkit for polyatomic gas models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="evaluate hypothesis windows for (delta, zeta)")
    p.add_argument("--delta", type=float, help="internal-degree count")
    p.add_argument("--zeta", type=float, help="kernel growth exponent")
    p.add_argument("--zeta1", type=float, default=0.0,
                   help="first partial exponent (resonant window)")
    p.add_argument("--zeta2", type=float, default=0.0,
                   help="second partial exponent (resonant window)")
    p.add_argument("--extended", action="store_true",
                   help="use the widened upper zeta bound")
    p.add_argument("--hyp", required=True,
                   help="comma-separated hypothesis ids, e.g. H2,H3")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("diag", help="kernel-norm diagnostics to CSV")
    p.add_argument("--kind", required=True, choices=("k2", "k1norm"))
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--zeta", type=float, required=True)
    p.add_argument("--grid", type=int, help="nodes per axis for k1norm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=_cmd_diag)

    p = sub.add_parser("relax", help="run a stochastic relaxation simulation")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="time-series CSV path")
    p.set_defaults(func=_cmd_relax)

    p = sub.add_parser("fit", help="fit delta and zeta from a data manifest")
    p.add_argument("--manifest", required=True, help="JSON dataset manifest")
    p.add_argument("--out", help="report CSV path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("table1", help="reproduce the reference gas table")
    p.add_argument("--out", help="report CSV path")
    p.set_defaults(func=_cmd_table1)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except relax.MajorantViolation as exc:
        print(json.dumps({"error": str(exc), **exc.diagnostics}),
              file=sys.stderr)
        return EXIT_NUMERIC
    except jsonschema.ValidationError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
