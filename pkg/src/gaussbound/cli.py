"""Command-line front end: bound, curve, gen, reproduce.

Exit codes: 0 success, 2 input/config error, 3 I/O error, 4 numerical
failure.  The ``GB_SEED`` environment variable supplies the default seed; a
``--config`` file of ``key = value`` lines fills in unset flags (explicit
flags win).  All reports are deterministic for a fixed config and seed,
except the separately kept "timing" section.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import reproduce as repro
from .agce import agce_fit_1d, naive_lower_1d, offshelf_lower_1d
from .biterminal import biterminal_gaussianize, joint_objective, separate_gaussianize
from .cca_ace import ace_fit, ace_upper_bound, kcca_fit
from .errors import GaussboundError
from .gib import default_beta_grid, gib_curve, gib_spectrum
from .ib_discrete import quadrature_discretize, reverse_anneal
from .models import ModelSpec, discretizable_from_spec, sample_from_spec
from .smoother import SmootherConfig
from .stats_core import (
    NATS_PER_BIT,
    CovarianceBlocks,
    PairedSamples,
    gaussian_mi_bound,
    mi_from_correlations,
    w2_to_normal,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

METHODS = ("ace", "agce", "offshelf", "biterminal", "kcca", "naive")
MODEL_FAMILIES = ("gm1d", "mv_gaussian_scramble", "exp_gamma", "gm_mv")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# I/O helpers
# ---------------------------------------------------------------------------


def _expected_header(d_x: int, d_y: int) -> str:
    return ",".join([f"x{i}" for i in range(d_x)] + [f"y{i}" for i in range(d_y)])


def read_samples_csv(path: str) -> PairedSamples:
    """Read the `x0..,y0..` sample layout, reporting the offending line on error."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    lines = text.splitlines()
    if not lines:
        raise CliError(f"{path}: empty file (line 1)", EXIT_CONFIG)
    header = lines[0].split(",")
    d_x = sum(1 for h in header if h.startswith("x"))
    d_y = sum(1 for h in header if h.startswith("y"))
    if d_x == 0 or d_y == 0 or header != _expected_header(d_x, d_y).split(","):
        raise CliError(
            f"{path}: line 1: header must be x0..x{{dx-1}},y0..y{{dy-1}}, got {lines[0]!r}",
            EXIT_CONFIG,
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != d_x + d_y:
            raise CliError(
                f"{path}: line {lineno}: expected {d_x + d_y} columns, got {len(parts)}",
                EXIT_CONFIG,
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise CliError(f"{path}: line {lineno}: {exc}", EXIT_CONFIG) from exc
    if len(rows) < 2:
        raise CliError(f"{path}: need at least 2 data rows", EXIT_CONFIG)
    arr = np.asarray(rows)
    return PairedSamples(arr[:, :d_x], arr[:, d_x:])


def write_samples_csv(path: Path, samples: PairedSamples) -> None:
    header = _expected_header(samples.d_x, samples.d_y)
    data = np.hstack([samples.x, samples.y])
    lines = [header]
    lines.extend(",".join(repr(float(v)) for v in row) for row in data)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _dump_report(report: dict, out: str | None) -> None:
    text = json.dumps(_jsonify(report), indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc


def write_curve_csv(path: Path, curve, units: str) -> None:
    c = curve.in_units(units)
    lines = [f"beta,i_tx_{units},i_ty_{units}"]
    lines.extend(
        f"{repr(float(b))},{repr(float(tx))},{repr(float(ty))}"
        for b, tx, ty in zip(c.beta, c.i_tx, c.i_ty)
    )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_IO) from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}: line {lineno}: expected key = value", EXIT_CONFIG)
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_DEFAULTS = {
    "n": 10_000,
    "mu_z": 10.0,
    "eps": 0.1,
    "d": 1,
    "method": "agce",
    "smoother": "knn",
    "k": None,
    "bandwidth": None,
    "restarts": 8,
    "tol": 1e-4,
    "units": "bits",
    "quad_m": 32,
    "beta_points": 200,
    "kcca_ridge": 1e-3,
    "kcca_width": None,
    "reference": True,
}

_CASTS = {
    "n": int,
    "mu_z": float,
    "eps": float,
    "d": int,
    "k": int,
    "bandwidth": float,
    "restarts": int,
    "tol": float,
    "seed": int,
    "quad_m": int,
    "beta_points": int,
    "kcca_ridge": float,
    "kcca_width": float,
    "reference": lambda s: s.lower() in ("1", "true", "yes"),
}


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from hard defaults."""
    file_cfg = _load_config_file(args.config) if getattr(args, "config", None) else {}
    for key, raw in file_cfg.items():
        if getattr(args, key, None) is None and (key in _DEFAULTS or key == "seed"):
            cast = _CASTS.get(key, str)
            try:
                setattr(args, key, cast(raw))
            except ValueError as exc:
                raise CliError(f"config {key}: {exc}", EXIT_CONFIG) from exc
    for key, value in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if getattr(args, "seed", None) is None:
        env = os.environ.get("GB_SEED")
        args.seed = int(env) if env else 0
    return args


def _get_samples(args) -> tuple[PairedSamples, object, dict]:
    """Samples plus (optional) analytic model and provenance from the args."""
    if getattr(args, "input", None) and getattr(args, "model", None):
        raise CliError("give either --input or --model, not both", EXIT_CONFIG)
    if getattr(args, "input", None):
        samples = read_samples_csv(args.input)
        return samples, None, {"input": args.input, "true_mi_nats": None}
    if not getattr(args, "model", None):
        raise CliError("one of --input or --model is required", EXIT_CONFIG)
    spec = ModelSpec(
        family=args.model,
        params={"mu_z": args.mu_z, "eps": args.eps},
        d=args.d,
        seed=args.seed,
    )
    ms = sample_from_spec(spec, args.n)
    prov = {
        "model": args.model,
        "params": {"mu_z": args.mu_z, "eps": args.eps} if args.model in ("gm1d", "gm_mv") else {},
        "d": args.d,
        "n": args.n,
        "true_mi_nats": ms.true_mi_nats,
    }
    return ms.samples, discretizable_from_spec(spec), prov


def _smoother_config(args, samples) -> SmootherConfig:
    if args.smoother == "kernel":
        if args.bandwidth is None:
            raise CliError("--bandwidth is required with --smoother kernel", EXIT_CONFIG)
        return SmootherConfig(kind="kernel", bandwidth=args.bandwidth)
    k = args.k
    if k is None and max(samples.d_x, samples.d_y) > 1:
        k = repro.experiment_knn_k(samples.n, max(samples.d_x, samples.d_y))
    return SmootherConfig(kind="knn", k=k)


# ---------------------------------------------------------------------------
# Method pipelines
# ---------------------------------------------------------------------------


def run_method(method: str, samples: PairedSamples, cfg: SmootherConfig, args):
    """Fit the chosen embedding; returns (u, v, rho array, extras dict)."""
    seed = args.seed
    univariate = samples.d_x == 1 and samples.d_y == 1
    if method == "naive":
        if univariate:
            pair = naive_lower_1d(samples, seed=seed)
            return pair.u[:, None], pair.v[:, None], np.asarray([pair.rho]), {}
        su, _ = separate_gaussianize(samples.x, seed=seed)
        sv, _ = separate_gaussianize(samples.y, seed=seed + 1)
        return su, sv, None, {}
    if method == "ace":
        model = ace_fit(samples, smoother=cfg, seed=seed)
        return model.u, model.v, model.rho, {"converged": model.converged, "model": model}
    if method == "offshelf":
        if univariate:
            pair = offshelf_lower_1d(samples, smoother=cfg, seed=seed)
            return pair.u[:, None], pair.v[:, None], np.asarray([pair.rho]), {}
        model = ace_fit(samples, smoother=cfg, seed=seed)
        su, _ = separate_gaussianize(model.u, seed=seed + 1)
        sv, _ = separate_gaussianize(model.v, seed=seed + 2)
        return su, sv, None, {"ace_rho": model.rho}
    if method == "agce":
        if not univariate:
            raise CliError(
                "sample-based multivariate AGCE is not supported; "
                "use biterminal for multivariate data",
                EXIT_CONFIG,
            )
        pair = agce_fit_1d(
            samples, tol=args.tol, n_restarts=args.restarts, smoother=cfg, seed=seed
        )
        extras = {"trace": pair.trace, "converged": pair.converged}
        return pair.u[:, None], pair.v[:, None], np.asarray([pair.rho]), extras
    if method == "biterminal":
        model = ace_fit(samples, smoother=cfg, seed=seed)
        bu, bv, _, trace = biterminal_gaussianize(model.u, model.v, seed=seed + 1)
        return bu, bv, None, {"ace_rho": model.rho, "accepted_moves": len(trace)}
    if method == "kcca":
        model = kcca_fit(
            samples, kernel_width=args.kcca_width, ridge=args.kcca_ridge, seed=seed
        )
        su, _ = separate_gaussianize(model.u, seed=seed + 1)
        sv, _ = separate_gaussianize(model.v, seed=seed + 2)
        return su, sv, model.rho, {}
    raise CliError(f"unknown method {method!r}", EXIT_CONFIG)


def _bound_report(args) -> dict:
    samples, _, prov = _get_samples(args)
    cfg = _smoother_config(args, samples)
    t0 = time.perf_counter()
    u, v, rho, extras = run_method(args.method, samples, cfg, args)
    lower = joint_objective(u, v) if args.method != "ace" else None

    ace_model = extras.pop("model", None)
    if ace_model is None:
        ace_model = ace_fit(samples, smoother=cfg, seed=args.seed + 17)
    upper = ace_upper_bound(ace_model)
    elapsed = time.perf_counter() - t0

    true_mi = prov.get("true_mi_nats")
    report = {
        "schema": 1,
        "command": "bound",
        "method": args.method,
        "provenance": prov,
        "seed": args.seed,
        "units": args.units,
        "rho": None if rho is None else list(np.round(np.asarray(rho), 12)),
        "ace_rho": list(np.round(ace_model.rho, 12)),
        "lower_bound_nats": lower,
        "lower_bound_bits": None if lower is None else lower / NATS_PER_BIT,
        "ace_upper_bound_nats": upper,
        "ace_upper_bound_bits": upper / NATS_PER_BIT,
        "true_mi_nats": true_mi,
        "no_lossless_gaussian_embedding": (
            None if true_mi is None else bool(true_mi > upper + 1e-12)
        ),
        "w2_diagnostics": {
            "u_first_coord": w2_to_normal(u[:, 0]),
            "v_first_coord": w2_to_normal(v[:, 0]),
        },
        "extras": {k: _jsonify(v) for k, v in extras.items()},
        "timing": {"wall_s": elapsed},
    }
    return report


def _curve_outputs(args) -> dict:
    samples, analytic, prov = _get_samples(args)
    cfg = _smoother_config(args, samples)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out_dir}: {exc}", EXIT_IO) from exc

    t0 = time.perf_counter()
    u, v, rho, _ = run_method(args.method, samples, cfg, args)
    blocks = CovarianceBlocks.from_blocks(u, v)
    spec = gib_spectrum(blocks.c_u, blocks.c_v, blocks.c_uv)
    grid = default_beta_grid(spec, num=args.beta_points)
    method_curve = gib_curve(spec, beta_grid=grid)

    raw_blocks = CovarianceBlocks.from_blocks(samples.x, samples.y)
    raw_spec = gib_spectrum(raw_blocks.c_u, raw_blocks.c_v, raw_blocks.c_uv)
    raw_curve = gib_curve(raw_spec, beta_grid=grid)

    files = {}
    write_curve_csv(out_dir / "method_curve.csv", method_curve, args.units)
    files["method_curve"] = "method_curve.csv"
    write_curve_csv(out_dir / "raw_gib_curve.csv", raw_curve, args.units)
    files["raw_gib_curve"] = "raw_gib_curve.csv"

    reference_mi = None
    if args.reference and analytic is not None:
        pmf, _ = quadrature_discretize(analytic, m=args.quad_m)
        ref_curve, _ = reverse_anneal(pmf)
        write_curve_csv(out_dir / "reference_curve.csv", ref_curve, args.units)
        files["reference_curve"] = "reference_curve.csv"
        reference_mi = pmf.mutual_information()
    elapsed = time.perf_counter() - t0

    manifest = {
        "schema": 1,
        "command": "curve",
        "method": args.method,
        "provenance": prov,
        "seed": args.seed,
        "units": args.units,
        "rho": None if rho is None else list(np.round(np.asarray(rho), 12)),
        "embedding_bound_nats": gaussian_mi_bound(blocks),
        "reference_pmf_mi_nats": reference_mi,
        "files": files,
        "timing": {"wall_s": elapsed},
    }
    text = json.dumps(_jsonify(manifest), indent=2, sort_keys=True) + "\n"
    (out_dir / "manifest.json").write_text(text, encoding="utf-8")
    return manifest


def _gen_outputs(args) -> None:
    if not args.model:
        raise CliError("--model is required for gen", EXIT_CONFIG)
    spec = ModelSpec(
        family=args.model,
        params={"mu_z": args.mu_z, "eps": args.eps},
        d=args.d,
        seed=args.seed,
    )
    ms = sample_from_spec(spec, args.n)
    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_samples_csv(out, ms.samples)
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from exc
    scramble = {}
    for key in ("mirror", "rotation_x", "rotation_y"):
        if key in ms.meta:
            scramble[key] = _jsonify(ms.meta[key])
    sidecar = {
        "schema": 1,
        "model": args.model,
        "params": {"mu_z": args.mu_z, "eps": args.eps}
        if args.model in ("gm1d", "gm_mv")
        else {},
        "d": args.d,
        "n": args.n,
        "seed": args.seed,
        "true_mi_nats": ms.true_mi_nats,
        "true_mi_bits": ms.true_mi_bits,
        "scramble": scramble,
    }
    sidecar_path = out.with_suffix(out.suffix + ".meta.json")
    try:
        sidecar_path.write_text(
            json.dumps(_jsonify(sidecar), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    except OSError as exc:
        raise CliError(f"cannot write {sidecar_path}: {exc}", EXIT_IO) from exc
    print(f"wrote {out} and {sidecar_path}")


def _reproduce_outputs(args) -> int:
    if args.experiment not in repro.EXPERIMENT_IDS:
        valid = ", ".join(repro.EXPERIMENT_IDS)
        raise CliError(
            f"unknown experiment {args.experiment!r}; valid ids: {valid}", EXIT_CONFIG
        )
    kwargs = {}
    if args.n is not None:
        kwargs["n"] = args.n
    if args.seed is not None:
        kwargs["seed"] = args.seed
    rows = repro.run_experiment(args.experiment, **kwargs)
    print(repro.format_table(rows))
    failures = [r for r in rows if r.binding and not r.passed]
    if failures:
        print(f"\n{len(failures)} binding check(s) failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, with_input: bool = True) -> None:
    if with_input:
        p.add_argument("--input", help="CSV of paired samples (header x0..,y0..)")
    p.add_argument("--model", choices=MODEL_FAMILIES, help="synthetic model family")
    p.add_argument("--mu-z", dest="mu_z", type=float, help="mixture offset (gm models)")
    p.add_argument("--eps", type=float, help="correlated-branch noise scale (gm models)")
    p.add_argument("--d", type=int, help="model dimension")
    p.add_argument("--n", type=int, help="sample count")
    p.add_argument("--seed", type=int, help="RNG seed (default: GB_SEED or 0)")
    p.add_argument("--config", help="key = value file supplying unset flags")
    p.add_argument("--units", choices=("bits", "nats"), help="output units")


def _add_method(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS, help="embedding method")
    p.add_argument("--smoother", choices=("knn", "kernel"), help="conditional-expectation estimator")
    p.add_argument("--k", type=int, help="neighbor count for the knn smoother")
    p.add_argument("--bandwidth", type=float, help="bandwidth for the kernel smoother")
    p.add_argument("--restarts", type=int, help="AGCE restart count")
    p.add_argument("--tol", type=float, help="correlation-change tolerance")
    p.add_argument("--kcca-ridge", dest="kcca_ridge", type=float, help="kernel CCA ridge")
    p.add_argument("--kcca-width", dest="kcca_width", type=float, help="kernel CCA width")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaussbound",
        description="Gaussian lower bounds on mutual information and the IB curve",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser("bound", help="compute MI bounds for one pair")
    _add_common(p_bound)
    _add_method(p_bound)
    p_bound.add_argument("--out", help="write the JSON report here instead of stdout")

    p_curve = sub.add_parser("curve", help="emit trade-off curves as CSV")
    _add_common(p_curve)
    _add_method(p_curve)
    p_curve.add_argument("--out-dir", dest="out_dir", required=True, help="output directory")
    p_curve.add_argument("--quad-m", dest="quad_m", type=int, help="quadrature nodes per component")
    p_curve.add_argument("--beta-points", dest="beta_points", type=int, help="curve grid size")
    p_curve.add_argument(
        "--no-reference",
        dest="reference",
        action="store_false",
        default=None,
        help="skip the discrete reference curve",
    )

    p_gen = sub.add_parser("gen", help="generate model samples as CSV")
    _add_common(p_gen, with_input=False)
    p_gen.add_argument("--out", required=True, help="CSV output path")

    p_rep = sub.add_parser("reproduce", help="rerun a documented experiment bundle")
    p_rep.add_argument("experiment", help="|".join(repro.EXPERIMENT_IDS))
    p_rep.add_argument("--n", type=int, help="override the documented sample count")
    p_rep.add_argument("--seed", type=int, help="override the documented seed")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "reproduce":
            return _reproduce_outputs(args)
        args = _resolve(args)
        if args.command == "bound":
            _dump_report(_bound_report(args), args.out)
            return EXIT_OK
        if args.command == "curve":
            _curve_outputs(args)
            return EXIT_OK
        if args.command == "gen":
            _gen_outputs(args)
            return EXIT_OK
        raise CliError(f"unknown command {args.command!r}", EXIT_CONFIG)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except GaussboundError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
