"""Command-line surface: generate, train, predict, tune, benchmark, verify.

Exit codes: 0 success, 1 requested check failed or benchmark cell
flagged, 2 I/O or data-format error, 3 generation budget exceeded,
4 hard-margin infeasible (or required separability missing), 5 solver
failure, 64 usage error.  Every run prints its resolved configuration
first.  Commands that write a delimited report also render a companion
PNG figure next to it (suppress with --no-figure).
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import datagen, diagnostics, experiment, models, report
from .experiment import EmptyDataset, NotTwoClasses, ParseError
from .halfvec import hvec, hvec_size
from .models import (
    HardMarginInfeasible,
    NotLinearlySeparable,
    NotQuadraticallySeparable,
    SolverFailure,
    TrainConfig,
    Variant,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_IO = 2
EXIT_GENERATION = 3
EXIT_INFEASIBLE = 4
EXIT_SOLVER = 5
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_VARIANT_ALIASES = {
    "svm": Variant.SVM,
    "ssvm": Variant.SSVM,
    "qssvm": Variant.QSSVM,
    "sqssvm": Variant.SQSSVM,
    "l1qssvm": Variant.L1QSSVM,
    "l1sqssvm": Variant.L1SQSSVM,
    "rqssvm": Variant.RQSSVM,
}


def _parse_variant(text: str) -> Variant:
    key = text.lower().replace("-", "").replace("_", "")
    if key not in _VARIANT_ALIASES:
        raise UsageError(f"unknown variant {text!r}; choose from {sorted(_VARIANT_ALIASES)}")
    return _VARIANT_ALIASES[key]


def _parse_exponent_range(text: str) -> tuple[float, ...]:
    try:
        lo, hi = (int(part) for part in text.split(":"))
    except ValueError:
        raise UsageError(f"expected an exponent range like -3:20, got {text!r}") from None
    if hi < lo:
        raise UsageError(f"empty exponent range {text!r}")
    return tuple(2.0 ** e for e in range(lo, hi + 1))


def _print_config(command: str, args):
    skip = {"func", "command"}
    parts = [f"{k}={v}" for k, v in sorted(vars(args).items()) if k not in skip]
    print(f"config: command={command} " + " ".join(parts))


def _figure_path(out_path: str) -> str:
    stem, _ = os.path.splitext(out_path)
    return stem + ".png"


def _load_dataset(args) -> "experiment.Dataset":
    return experiment.load_csv(args.data, label_column=args.label_column,
                               positive_label=args.positive_label)


def _add_data_flags(parser):
    parser.add_argument("--data", "-d", required=True, help="dataset CSV path")
    parser.add_argument("--label-column", default="label")
    parser.add_argument("--positive-label", default=None,
                        help="label value mapped to +1 (others map to -1)")


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    _print_config("generate", args)
    if args.spec is None and args.surface_file is None:
        raise UsageError("one of --spec or --surface-file is required")
    seed = args.seed
    fixed_size = args.spec is not None and args.spec.startswith("artificial-")
    if fixed_size:
        if args.clean is not None or args.noise is not None:
            raise UsageError("artificial datasets have fixed sizes; drop --clean/--noise")
        which = args.spec.split("-", 1)[1]
        which = {"3d": "ThreeD", "threed": "ThreeD"}.get(which.lower(), which)
        data = datagen.gen_artificial_benchmark(which, seed)
        meta_spec = {"name": args.spec}
    else:
        clean = 200 if args.clean is None else args.clean
        noise = 0 if args.noise is None else args.noise
        if clean < 1:
            raise UsageError("--clean must be at least 1 per class")
        if noise < 0:
            raise UsageError("--noise must be nonnegative")
        if args.surface_file is not None:
            with open(args.surface_file, "r", encoding="utf-8") as fh:
                spec = datagen.surface_from_dict(json.load(fh))
            data_seed = seed
        elif args.spec == "sparse10":
            spec = datagen.builtin_sparse_surface()
            data_seed = seed
        elif args.spec == "linear":
            spec = datagen.random_hyperplane_surface(args.dim, seed, args.box)
            data_seed = seed + 1
        elif args.spec == "quadratic":
            spec = datagen.random_quadratic_surface(args.dim, seed, args.box)
            data_seed = seed + 1
        else:
            raise UsageError(f"unknown --spec {args.spec!r}")
        cfg = datagen.GenConfig(seed=data_seed, m_pos=clean, m_neg=clean,
                                margin=args.margin, box=args.box,
                                noise_count=noise, noise_band=args.noise_band)
        data = datagen.gen_from_surface(spec, cfg)
        meta_spec = {"name": args.spec or os.path.basename(args.surface_file),
                     "surface": datagen.surface_to_dict(spec)}
    datagen.save_dataset_csv(data, args.out)
    meta = {
        "generator": datagen.GENERATOR_ID,
        "seed": seed,
        "spec": meta_spec,
        "samples": data.m,
        "features": data.n,
        "positives": int((data.y == 1).sum()),
        "negatives": int((data.y == -1).sum()),
    }
    with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    print(f"wrote {data.m} samples ({data.n} features) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _resolve_penalties(args, data) -> tuple[float, float | None]:
    variant = _parse_variant(args.variant)
    lam = 0.0
    if args.lam is not None:
        if args.lam == "auto":
            lam = models.lambda_equivalence_bound(data)
            print(f"lambda auto (flattening bound): {lam:.6g}")
        else:
            lam = float(args.lam)
    mu = None
    if variant.is_soft:
        if args.mu is None:
            raise UsageError(f"{variant.value} needs --mu")
        if args.mu == "auto":
            # the vanishing-slack threshold must be exceeded strictly
            mu = 2.0 * models.mu_vanishing_bound(data, lam)
            print(f"mu auto (2x vanishing-slack bound): {mu:.6g}")
        else:
            mu = float(args.mu)
    elif args.mu is not None:
        raise UsageError(f"{variant.value} is hard-margin; drop --mu")
    return lam, mu


def cmd_train(args) -> int:
    _print_config("train", args)
    data = _load_dataset(args)
    variant = _parse_variant(args.variant)
    lam, mu = _resolve_penalties(args, data)
    zero_set = None
    if args.zero_set is not None:
        if variant is not Variant.RQSSVM:
            raise UsageError("--zero-set is only valid for rqssvm")
        zero_set = tuple(int(tok) for tok in args.zero_set.split(",") if tok.strip())
    elif variant is Variant.RQSSVM:
        raise UsageError("rqssvm needs --zero-set with half-vector indices")
    config = TrainConfig(variant=variant, lambda_=lam, mu=mu, zero_set=zero_set)
    result = models.train(data, config)
    model = result.model
    sparse = models.sparsity_pattern(model, 1e-6)
    print(f"variant: {variant.value}  lambda={lam:g}  mu={'-' if mu is None else f'{mu:g}'}")
    print(f"objective: {result.objective:.10g}")
    print(f"xi_l1: {float(result.xi.sum()):.6g}")
    print(
        "kkt: primal={:.3e} stationarity={:.3e} complementarity={:.3e}".format(
            result.kkt.primal_infeasibility,
            result.kkt.dual_infeasibility,
            result.kkt.complementarity_gap,
        )
    )
    print(f"curvature: {diagnostics.curvature(model):.6g}")
    print(f"sparsity: {sparse.size} of {hvec_size(data.n)} coefficients zero at tol 1e-6")
    print(f"solver: iterations={result.solver_stats.iterations} "
          f"time={result.solver_stats.wall_time:.3f}s")
    if args.out_model:
        models.save_model(model, args.out_model)
        print(f"model written to {args.out_model}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


def cmd_predict(args) -> int:
    _print_config("predict", args)
    model = models.load_model(args.model)
    with open(args.data, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyDataset("file is empty")
        header = [h.strip() for h in header]
        label_idx = header.index(args.label_column) if args.label_column in header else None
        feature_idx = [j for j in range(len(header)) if j != label_idx]
        rows, labels = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            try:
                rows.append([float(record[j]) for j in feature_idx])
            except (ValueError, IndexError):
                raise ParseError(line_no, "-", "malformed feature row") from None
            if label_idx is not None:
                labels.append(record[label_idx].strip())
    if not rows:
        raise EmptyDataset("no data rows after the header")
    X = np.asarray(rows)
    if X.shape[1] != model.n:
        raise UsageError(f"model expects {model.n} features, file has {X.shape[1]}")
    preds = models.predict(model, X)
    lines = ["prediction"] + [str(int(p)) for p in preds]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(preds)} predictions to {args.out}")
    else:
        sys.stdout.write(text)
    try:
        truth = np.asarray([int(float(v)) for v in labels]) if labels else None
    except ValueError:
        truth = None
    if truth is not None and set(np.unique(truth)) <= {-1, 1}:
        acc = 100.0 * float(np.mean(preds == truth))
        print(f"accuracy vs file labels: {acc:.2f}%")
    return EXIT_OK


# ---------------------------------------------------------------------------
# tune
# ---------------------------------------------------------------------------


def cmd_tune(args) -> int:
    _print_config("tune", args)
    data = _load_dataset(args)
    variant = _parse_variant(args.variant)
    if variant not in (Variant.SQSSVM, Variant.L1SQSSVM):
        raise UsageError("tune supports sqssvm (mu) and l1sqssvm (mu then lambda)")
    plan = experiment.ExperimentPlan(
        variants=(variant,),
        mu_grid=_parse_exponent_range(args.mu_exponents),
        lambda_grid=_parse_exponent_range(args.lambda_exponents),
    )
    mu_scores = experiment.mu_grid_scores(data, plan)
    mu_hat = experiment._grid_best([m for m, _ in mu_scores], [s for _, s in mu_scores])
    print(f"mu_hat: {mu_hat:g}")
    lam_scores = []
    if variant is Variant.L1SQSSVM:
        lam_scores = experiment.lambda_grid_scores(data, plan, variant, mu=mu_hat)
        lam_hat = experiment._grid_best([l for l, _ in lam_scores], [s for _, s in lam_scores])
        print(f"lambda_hat: {lam_hat:g}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["parameter", "value", "accuracy"])
            for mu, score in mu_scores:
                writer.writerow(["mu", f"{mu:g}", f"{score:.4f}"])
            for lam, score in lam_scores:
                writer.writerow(["lambda", f"{lam:g}", f"{score:.4f}"])
        print(f"grid scores written to {args.out}")
        if not args.no_figure:
            series = {"accuracy vs mu": [s for _, s in mu_scores]}
            xs = [m for m, _ in mu_scores]
            if lam_scores:
                report.sweep_figure(
                    [l for l, _ in lam_scores],
                    {"accuracy vs lambda": [s for _, s in lam_scores]},
                    _figure_path(args.out).replace(".png", "_lambda.png"),
                    xlabel="lambda", ylabel="accuracy (%)",
                )
            report.sweep_figure(xs, series, _figure_path(args.out),
                                xlabel="mu", ylabel="accuracy (%)")
            print(f"figure written to {_figure_path(args.out)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


def cmd_benchmark(args) -> int:
    _print_config("benchmark", args)
    data = _load_dataset(args)
    variants = tuple(_parse_variant(tok) for tok in args.variants.split(","))
    try:
        rates = tuple(float(tok) for tok in args.rates.split(","))
    except ValueError:
        raise UsageError(f"bad --rates {args.rates!r}") from None
    try:
        plan = experiment.ExperimentPlan(
            variants=variants,
            training_rates=rates,
            repetitions=args.repetitions,
            mu_grid=_parse_exponent_range(args.mu_exponents),
            lambda_grid=_parse_exponent_range(args.lambda_exponents),
            seed=args.seed,
            held_out=args.held_out,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table = experiment.run_benchmark(data, plan)
    sys.stdout.write(table.to_text())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table.to_csv())
        stem, _ = os.path.splitext(args.out)
        with open(stem + ".txt", "w", encoding="utf-8") as fh:
            fh.write(table.to_text())
        print(f"results written to {args.out} and {stem}.txt")
        if not args.no_figure:
            report.benchmark_figure(table, _figure_path(args.out))
            print(f"figure written to {_figure_path(args.out)}")
    if args.dump_scores:
        with open(args.dump_scores, "w", encoding="utf-8") as fh:
            fh.write(table.per_repetition_csv())
        print(f"per-repetition scores written to {args.dump_scores}")
    if table.any_flagged:
        print("warning: at least one cell had more than 10% failed repetitions")
        return EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _check_assumptions(data, args) -> tuple[bool, str]:
    result = diagnostics.check_assumptions(data)
    ok = result["a1"] and result["a2"]
    return ok, f"full column rank: {result['a1']}, ones outside column space: {result['a2']}"


def _check_gpd(data, args) -> tuple[bool, str]:
    from .halfvec import assemble_design

    cache = assemble_design(data)
    direct = diagnostics.is_G_pd(cache)
    schur = diagnostics.schur_complement_pd(cache)
    eigmin = float(np.linalg.eigvalsh(cache.G)[0])
    detail = f"direct: {direct}, schur: {schur}, min eigenvalue: {eigmin:.3e}"
    if direct != schur:
        return False, detail + " (tests disagree)"
    return direct, detail


def _check_separability(data, args) -> tuple[bool, str]:
    linear = diagnostics.check_separability(data, diagnostics.SeparabilityKind.LINEAR)
    quad = diagnostics.check_separability(data, diagnostics.SeparabilityKind.QUADRATIC)
    lin_ok = linear.kind is not diagnostics.SeparabilityKind.NONE
    quad_ok = quad.kind is not diagnostics.SeparabilityKind.NONE
    return quad_ok, f"linear: {lin_ok}, quadratic: {quad_ok}"


def _check_kkt(data, args) -> tuple[bool, str]:
    if not args.model:
        raise UsageError("--check kkt needs --model")
    model = models.load_model(args.model)
    kkt = diagnostics.verify_model_kkt(data, model)
    worst = max(kkt.stationarity, kkt.primal_feasibility, kkt.complementarity,
                max(0.0, -kkt.dual_feasibility))
    scale = 1.0 + float(np.abs(data.X).max()) ** 2
    ok = worst <= args.kkt_tol * scale
    return ok, (f"stationarity={kkt.stationarity:.3e} primal={kkt.primal_feasibility:.3e} "
                f"complementarity={kkt.complementarity:.3e} dual_min={kkt.dual_feasibility:.3e}")


def _check_svm_equiv(data, args) -> tuple[bool, str]:
    if args.lambda_sweep:
        grid = _parse_exponent_range(args.lambda_sweep)
        curvatures, w_norms = [], []
        for lam in grid:
            result = models.train(data, TrainConfig(variant=Variant.L1QSSVM, lambda_=lam))
            curvatures.append(diagnostics.curvature(result.model))
            w_norms.append(float(np.abs(hvec(result.model.W)).max()))
        print("  lambda        curvature     w_infnorm")
        for lam, curv, wn in zip(grid, curvatures, w_norms):
            print(f"  {lam:<12g}  {curv:<12.6g}  {wn:.6g}")
        # small upward wiggles occur on real data before the collapse, so the
        # trend check tolerates 10% relative increases; whether the sweep
        # range reaches the flat regime is reported but not judged
        flattens = curvatures[-1] <= 1e-6
        trend = all(curvatures[i + 1] <= 1.10 * curvatures[i] + 1e-8
                    for i in range(len(grid) - 1))
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["lambda", "curvature", "w_infnorm"])
                for lam, curv, wn in zip(grid, curvatures, w_norms):
                    writer.writerow([f"{lam:g}", f"{curv:.10g}", f"{wn:.10g}"])
            if not args.no_figure:
                report.sweep_figure(list(grid), {"curvature": curvatures},
                                    _figure_path(args.out), xlabel="lambda",
                                    ylabel="curvature")
        return trend, (
            f"downward trend over {len(grid)} points: {trend}; "
            f"flat at the top of the range: {flattens}"
        )
    if args.lam == "auto" or args.lam is None:
        lam = models.lambda_equivalence_bound(data)
    else:
        lam = float(args.lam)
    gaps = diagnostics.compare_with_svm(data, lam)
    ok = gaps["w_infnorm"] <= 1e-6 and gaps["b_gap"] <= 1e-4 and gaps["c_gap"] <= 1e-4
    return ok, (f"lambda={lam:.6g} w_infnorm={gaps['w_infnorm']:.3e} "
                f"b_gap={gaps['b_gap']:.3e} c_gap={gaps['c_gap']:.3e}")


_CHECKS = {
    "assumptions": _check_assumptions,
    "gpd": _check_gpd,
    "separability": _check_separability,
    "kkt": _check_kkt,
    "svm-equiv": _check_svm_equiv,
}


def cmd_verify(args) -> int:
    _print_config("verify", args)
    data = _load_dataset(args)
    names = [tok.strip() for tok in args.check.split(",") if tok.strip()]
    unknown = [nm for nm in names if nm not in _CHECKS]
    if unknown:
        raise UsageError(f"unknown checks {unknown}; choose from {sorted(_CHECKS)}")
    all_ok = True
    for name in names:
        ok, detail = _CHECKS[name](data, args)
        all_ok &= ok
        print(f"check {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qssvm", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic dataset CSV plus metadata sidecar")
    g.add_argument("--spec", default=None,
                   help="sparse10 | linear | quadratic | artificial-{I,II,III,IV,3D}")
    g.add_argument("--surface-file", default=None, help="JSON surface {n, W, b, c}")
    g.add_argument("--dim", type=int, default=2, help="dimension for linear/quadratic specs")
    g.add_argument("--clean", type=int, default=None, help="clean samples per class")
    g.add_argument("--noise", type=int, default=None, help="near-surface coin-flip points")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--margin", type=float, default=0.5)
    g.add_argument("--box", type=float, default=5.0)
    g.add_argument("--noise-band", type=float, default=0.25)
    g.add_argument("--out", "-o", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="fit one variant and report its certificates")
    _add_data_flags(t)
    t.add_argument("--variant", required=True)
    t.add_argument("--lambda", dest="lam", default=None,
                   help="L1 weight, or 'auto' for the flattening bound")
    t.add_argument("--mu", default=None,
                   help="slack weight, or 'auto' for twice the vanishing-slack bound")
    t.add_argument("--zero-set", default=None, help="comma-separated pinned half-vector indices")
    t.add_argument("--out-model", "-o", default=None)
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label samples with a saved model")
    p.add_argument("--model", "-m", required=True)
    p.add_argument("--data", "-d", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_predict)

    u = sub.add_parser("tune", help="grid-search penalty weights")
    _add_data_flags(u)
    u.add_argument("--variant", default="sqssvm")
    u.add_argument("--mu-exponents", default="-3:20")
    u.add_argument("--lambda-exponents", default="-10:25")
    u.add_argument("--out", "-o", default=None)
    u.add_argument("--no-figure", action="store_true")
    u.set_defaults(func=cmd_tune)

    b = sub.add_parser("benchmark", help="repeated-split accuracy tables")
    _add_data_flags(b)
    b.add_argument("--variants", default="l1sqssvm,sqssvm,ssvm,svm")
    b.add_argument("--rates", default="10,20,40")
    b.add_argument("--repetitions", type=int, default=50)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--held-out", action="store_true",
                   help="score on the complement of the training subset")
    b.add_argument("--mu-exponents", default="-3:20")
    b.add_argument("--lambda-exponents", default="-10:25")
    b.add_argument("--out", "-o", default=None)
    b.add_argument("--dump-scores", default=None)
    b.add_argument("--no-figure", action="store_true")
    b.set_defaults(func=cmd_benchmark)

    v = sub.add_parser("verify", help="run dataset/model diagnostics")
    _add_data_flags(v)
    v.add_argument("--check", default="assumptions,gpd,separability")
    v.add_argument("--model", default=None, help="model file for --check kkt")
    v.add_argument("--kkt-tol", type=float, default=1e-6)
    v.add_argument("--lambda", dest="lam", default=None, help="weight for --check svm-equiv")
    v.add_argument("--lambda-sweep", default=None,
                   help="exponent range lo:hi to sweep instead of a single weight")
    v.add_argument("--out", "-o", default=None)
    v.add_argument("--no-figure", action="store_true")
    v.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NotTwoClasses, EmptyDataset) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except datagen.RejectionBudgetExceeded as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (HardMarginInfeasible, NotLinearlySeparable, NotQuadraticallySeparable) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
