"""Command-line interface: ``tspnet {inspect,spectra,filter,train,bench,synth}``.

Exit codes: 0 success, 1 usage, 2 parse error, 3 dimension mismatch,
4 training or runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .complex import hodge_laplacians, verify_chain_property
from .data import (
    FeatureFile,
    load_complex,
    load_features,
    load_trajectories,
    save_complex,
    save_features,
    save_trajectories,
    synth_citation_like,
    synth_trajectories,
)
from .errors import DimensionMismatch, OrderOutOfRange, ParseError, RateOutOfRange, TSPError
from .training import ARCHITECTURES, Metrics, TrainConfig, summarize_runs, train_classification, train_imputation
from .tsp import ideal_highpass, ideal_lowpass, sft_basis, spatial_filter, spectral_filter

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_DIM, EXIT_TRAIN = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# manifests


def _blob_hash(data: bytes) -> str:
    """Git-style object id of a file's contents."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _canonical_json(obj: Any) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def write_manifest(out_dir: Path, command: str, config: dict, inputs: Sequence[Path], outputs: Sequence[Path]) -> dict:
    files = {str(p): _blob_hash(Path(p).read_bytes()) for p in sorted(set(map(str, inputs)))}
    content = hashlib.sha1(_canonical_json({"config": config, "inputs": sorted(files.values())}).encode()).hexdigest()
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "seed": config.get("seed"),
        "inputs": files,
        "content_hash": content,
        "outputs": [str(p) for p in outputs],
    }
    (out_dir / "manifest.json").write_text(_canonical_json(manifest))
    return manifest


# ---------------------------------------------------------------------------
# inspect / spectra / filter


def cmd_inspect(args) -> int:
    K = load_complex(args.complex)
    counts = " ".join(f"N_{k}={n}" for k, n in enumerate(K.counts))
    chain = verify_chain_property(K)
    worst = max(chain.values(), default=0)
    print(f"{counts}, chain max |entry| = {worst}")
    if K.inserted_faces:
        print(f"inserted {K.inserted_faces} missing faces")
    for k in range(K.order + 1):
        L = hodge_laplacians(K, k).full
        n = L.shape[0]
        density = L.nnz / (n * n) if n else 0.0
        print(f"L_{k}: {n}x{n}, nnz={L.nnz}, density={density:.4f}")
    for k, v in chain.items():
        print(f"max |B_{k} B_{k + 1}| = {v}")
    return EXIT_OK


def cmd_spectra(args) -> int:
    K = load_complex(args.complex)
    orders = [args.k] if args.k is not None else list(range(K.order + 1))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "index", "eigenvalue"])
    for k in orders:
        basis = sft_basis(hodge_laplacians(K, k))
        for i, lam in enumerate(basis.eigenvalues):
            writer.writerow([k, i, repr(float(lam))])
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(buf.getvalue())
        write_manifest(out.parent, "spectra", {"k": args.k}, [Path(args.complex)], [out])
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _parse_coeffs(text: str) -> list[float]:
    try:
        return [float(c) for c in text.split(",") if c.strip()]
    except ValueError:
        raise UsageError(f"--coeffs must be comma-separated numbers, got {text!r}") from None


def cmd_filter(args) -> int:
    K = load_complex(args.complex)
    F = load_features(args.features)
    if not 0 <= F.order <= K.order:
        raise DimensionMismatch(f"features are for order {F.order}, complex has orders 0..{K.order}")
    F.bind(K)
    triple = hodge_laplacians(K, F.order)
    if args.coeffs is not None:
        out = spatial_filter(triple, _parse_coeffs(args.coeffs), F.values)
    elif args.preset == "identity":
        out = F.values.copy()
    else:
        if args.cutoff is None:
            raise UsageError(f"--preset {args.preset} needs --cutoff")
        h = ideal_lowpass(args.cutoff) if args.preset == "lowpass" else ideal_highpass(args.cutoff)
        out = spectral_filter(triple, h, F.values)
    dest = Path(args.out)
    dest.parent.mkdir(parents=True, exist_ok=True)
    save_features(FeatureFile(F.order, out), dest)
    spec = {"preset": args.preset, "cutoff": args.cutoff, "coeffs": args.coeffs}
    write_manifest(dest.parent, "filter", spec, [Path(args.complex), Path(args.features)], [dest])
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / bench


_EXTRA_KEYS = ("data", "archs", "orders")


def _load_config(path: str) -> tuple[dict, Path]:
    p = Path(path)
    try:
        raw = json.loads(p.read_text())
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror or exc})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    return raw, p.parent


_FLAG_KEYS = {
    "arch": "arch", "layers": "layers", "filters": "filters", "activation": "activation",
    "missing_rate": "missing_rate", "seed": "seed", "repeats": "repeats", "iterations": "iterations",
    "lr": "lr", "task": "task", "eval_mode": "eval_mode",
}


def _resolve_config(args, raw: dict) -> tuple[dict, TrainConfig]:
    merged = dict(raw)
    for attr, key in _FLAG_KEYS.items():
        val = getattr(args, attr, None)
        if val is not None:
            merged[key] = val
    extras = {k: merged.pop(k) for k in _EXTRA_KEYS if k in merged}
    try:
        config = TrainConfig.from_dict(merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    resolved = config.to_dict()
    resolved.update(extras)
    return resolved, config


def _load_data(resolved: dict, config: TrainConfig, base: Path):
    """Returns ``(complex, payload, input paths)``; payload is features per order or a dataset."""
    spec = resolved.get("data")
    if not isinstance(spec, dict):
        raise ParseError("config: field 'data' must be an object")
    synthetic = spec.get("synthetic")
    if synthetic is not None:
        seed = int(spec.get("seed", 0))
        if synthetic == "citation_like":
            K, feats = synth_citation_like(seed, spec.get("scale", "small"))
            payload: Any = feats
        elif synthetic == "trajectories":
            ds = synth_trajectories(seed, int(spec.get("n_train", 160)), int(spec.get("n_test", 40)))
            K, payload = ds.complex, ds
        else:
            raise ParseError(f"config: unknown synthetic dataset {synthetic!r}")
        inputs: list[Path] = []
    else:
        if "complex" not in spec:
            raise ParseError("config: field 'data.complex' is required")
        cpath = base / spec["complex"]
        K = load_complex(cpath)
        inputs = [cpath]
        if config.task == "classify":
            if "trajectories" not in spec:
                raise ParseError("config: field 'data.trajectories' is required for classification")
            tpath = base / spec["trajectories"]
            payload = load_trajectories(tpath, K)
            inputs.append(tpath)
        else:
            files = spec.get("features")
            if not isinstance(files, dict) or not files:
                raise ParseError("config: field 'data.features' must map orders to files")
            payload = {}
            for key, rel in files.items():
                fpath = base / rel
                F = load_features(fpath)
                if str(F.order) != str(key):
                    raise ParseError(f"{fpath}: holds order {F.order} but is listed under '{key}'")
                if F.d != 1:
                    raise DimensionMismatch(f"{fpath}: imputation expects one feature column, got {F.d}")
                payload[F.order] = F.bind(K).values[:, 0]
                inputs.append(fpath)
    if config.task == "classify" and not hasattr(payload, "flows"):
        raise ParseError("config: classification needs a trajectory dataset")
    if config.task == "impute":
        if not isinstance(payload, dict):
            raise ParseError("config: imputation needs per-order features")
        orders = resolved.get("orders")
        if orders is not None:
            missing = [k for k in orders if k not in payload]
            if missing:
                raise DimensionMismatch(f"no features for orders {missing}")
            payload = {k: payload[k] for k in orders}
    return K, payload, inputs


def _run(config: TrainConfig, K, payload) -> dict[str, list[Metrics]]:
    runs: dict[str, list[Metrics]] = {}
    for r in range(config.repeats):
        if config.task == "impute":
            for k, m in train_imputation(K, payload, config, repeat=r).items():
                runs.setdefault(str(k), []).append(m)
        else:
            runs.setdefault("1", []).append(train_classification(payload, config, repeat=r))
    return runs


def _round(obj):
    """Stable float formatting for JSON summaries."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round(v) for v in obj]
    return obj


def cmd_train(args) -> int:
    raw, base = _load_config(args.config)
    resolved, config = _resolve_config(args, raw)
    K, payload, inputs = _load_data(resolved, config, base)
    runs = _run(config, K, payload)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    loss_path = out_dir / "loss.csv"
    with loss_path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "repeat", "iteration", "loss"])
        for k, ms in runs.items():
            for r, m in enumerate(ms):
                for i, loss in enumerate(m.losses):
                    writer.writerow([k, r, i, repr(loss)])
    per_order = {k: summarize_runs(ms) for k, ms in runs.items()}
    summary = {
        "task": config.task,
        "arch": config.arch,
        "per_order": per_order,
        "n_params_total": sum(s["n_params"] for s in per_order.values()),
    }
    summary_path = out_dir / "summary.json"
    summary_path.write_text(_canonical_json(_round(summary)))
    timing = {k: {"seconds_mean": float(np.mean([m.seconds for m in ms])),
                  "seconds_std": float(np.std([m.seconds for m in ms]))} for k, ms in runs.items()}
    timing_path = out_dir / "timing.json"
    timing_path.write_text(_canonical_json(timing))
    write_manifest(out_dir, "train", resolved, [Path(args.config), *inputs], [loss_path, summary_path, timing_path])

    for k, s in per_order.items():
        line = f"k={k} accuracy {s['accuracy_mean']:.2f} +/- {s['accuracy_std']:.2f}"
        if "baseline_accuracy_mean" in s:
            line += f" (median fill {s['baseline_accuracy_mean']:.2f})"
        line += f", params {s['n_params']}, forward+backward {timing[k]['seconds_mean']:.3f} s"
        print(line)
    return EXIT_OK


def cmd_bench(args) -> int:
    raw, base = _load_config(args.config)
    archs = args.archs.split(",") if args.archs else raw.get("archs")
    if not isinstance(archs, list) or len(archs) < 2:
        raise UsageError("bench needs at least two architectures (config 'archs' or --archs)")
    bad = [a for a in archs if a not in ARCHITECTURES]
    if bad:
        raise UsageError(f"unknown architectures {bad}; choose from {list(ARCHITECTURES)}")
    raw = dict(raw)
    raw.pop("archs", None)
    rows = []
    resolved_all = {}
    inputs: list[Path] = []
    for arch in archs:
        raw["arch"] = arch
        args.arch = None
        resolved, config = _resolve_config(args, raw)
        resolved["arch"] = arch
        resolved_all[arch] = resolved
        K, payload, inputs = _load_data(resolved, config, base)
        runs = _run(config, K, payload)
        seconds = sum(np.mean([m.seconds for m in ms]) for ms in runs.values())
        params = sum(ms[0].n_params for ms in runs.values())
        fractions = {k: ms[0].binary_fraction for k, ms in runs.items() if ms[0].binary_fraction is not None}
        accuracy = {k: float(np.mean([m.accuracy for m in ms])) for k, ms in runs.items()}
        rows.append({"arch": arch, "seconds": float(seconds), "n_params": int(params),
                     "binary_fraction": fractions, "accuracy": accuracy})

    by_arch = {r["arch"]: r for r in rows}
    report: dict[str, Any] = {"rows": rows}
    if "biscnn" in by_arch and "scnn" in by_arch:
        b, s = by_arch["biscnn"], by_arch["scnn"]
        report["time_ratio_biscnn_over_scnn"] = b["seconds"] / s["seconds"] if s["seconds"] > 0 else None
        report["param_ratio_biscnn_over_scnn"] = b["n_params"] / s["n_params"] if s["n_params"] else None

    print(f"{'arch':<8} {'seconds':>10} {'params':>8}  r_k (share of +/-1 inputs per layer)")
    for r in rows:
        frac = "; ".join(f"k={k}: " + ",".join(f"{v:.3f}" for v in vals) for k, vals in r["binary_fraction"].items())
        print(f"{r['arch']:<8} {r['seconds']:>10.4f} {r['n_params']:>8}  {frac or '-'}")
    if report.get("time_ratio_biscnn_over_scnn") is not None:
        print(f"biscnn/scnn time ratio {report['time_ratio_biscnn_over_scnn']:.3f}, "
              f"parameter ratio {report['param_ratio_biscnn_over_scnn']:.3f}")

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        bench_path = out_dir / "bench.json"
        bench_path.write_text(_canonical_json(report))
        write_manifest(out_dir, "bench", {"archs": archs, "runs": resolved_all, "seed": resolved.get("seed")},
                       [Path(args.config), *inputs], [bench_path])
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = [out_dir / "complex.json"]
    if args.kind == "citation":
        K, feats = synth_citation_like(args.seed, args.scale)
        save_complex(K, outputs[0])
        for k, v in feats.items():
            path = out_dir / f"features.{k}.json"
            save_features(FeatureFile(k, v), path)
            outputs.append(path)
        spec = {"kind": "citation", "scale": args.scale, "seed": args.seed}
    else:
        ds = synth_trajectories(args.seed, args.n_train, args.n_test)
        K = ds.complex
        save_complex(K, outputs[0])
        outputs.append(out_dir / "trajectories.json")
        save_trajectories(ds, outputs[1])
        spec = {"kind": "trajectories", "seed": args.seed, "n_train": args.n_train, "n_test": args.n_test}
    write_manifest(out_dir, "synth", spec, [], outputs)
    print(" ".join(f"N_{k}={n}" for k, n in enumerate(K.counts)) + f" -> {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--arch", choices=ARCHITECTURES)
    p.add_argument("--layers", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--activation", choices=("id", "lr", "tanh"))
    p.add_argument("--missing-rate", dest="missing_rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--task", choices=("impute", "classify"))
    p.add_argument("--eval-mode", dest="eval_mode", choices=("train", "infer"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tspnet", description="Signal processing and neural networks on simplicial complexes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("inspect", help="print simplex counts, Laplacian sparsity and the chain check")
    p.add_argument("complex")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("spectra", help="write Hodge Laplacian eigenvalues as CSV")
    p.add_argument("complex")
    p.add_argument("--k", type=int, help="order (default: all)")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("filter", help="filter one order's features")
    p.add_argument("complex")
    p.add_argument("features")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--preset", choices=("identity", "lowpass", "highpass"), default="identity")
    group.add_argument("--coeffs", help="polynomial taps w_0,w_1,... of sum_j w_j L^j")
    p.add_argument("--cutoff", type=float, help="eigenvalue cutoff for lowpass/highpass")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("train", help="run an imputation or classification experiment")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="time forward+backward across architectures")
    p.add_argument("config")
    p.add_argument("--archs", help="comma-separated list overriding the config")
    p.add_argument("--out", help="output directory for bench.json")
    _add_train_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    p.add_argument("kind", choices=("citation", "trajectories"))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", choices=("tiny", "small", "paper"), default="small")
    p.add_argument("--n-train", dest="n_train", type=int, default=160)
    p.add_argument("--n-test", dest="n_test", type=int, default=40)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, OrderOutOfRange, RateOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionMismatch as exc:
        print(f"dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIM
    except (TSPError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAIN


if __name__ == "__main__":
    sys.exit(main())
