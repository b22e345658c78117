"""Command-line experiment harness.

Subcommands:

* ``accuracy-exp`` — perturbation sweep: per-trial diagnostics CSV, the
  shared-range batch CSV, and a report with log-log correlations and the
  square-root bound fraction.
* ``privacy-exp`` — defense sweep: trade-off CSV (one row per epsilon plus
  centralized/individual baseline rows) and a report.
* ``demo`` — one small end-to-end run with printed diagnostics.

Every output file embeds the fully resolved configuration as ``# key =
value`` comment lines, so identical config + seed reproduce identical
bytes. Trials can fan out over a thread pool (``--workers``); the hot
kernels release the GIL, and per-trial seeds make serial and parallel runs
identical.
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, bundle, data, learner, privacy, protocol, seeding
from .config import ExperimentConfig, parse_file
from .mappings import fit_pca

THEOREM_TOLERANCE = 1e-10
BOUND_CONSTANT = float(np.exp(0.5))


def _echo_lines(cfg: ExperimentConfig, command: str) -> str:
    body = "".join(f"# {line}\n" for line in cfg.to_text().splitlines())
    return f"# datacollab {command}\n{body}"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _resolve_mnist_paths(cfg: ExperimentConfig):
    missing = [
        flag
        for flag, value in (
            ("--mnist-images", cfg.mnist_images),
            ("--mnist-labels", cfg.mnist_labels),
            ("--mnist-test-images", cfg.mnist_test_images),
            ("--mnist-test-labels", cfg.mnist_test_labels),
        )
        if not value
    ]
    if missing:
        raise SystemExit(
            f"error: dataset is mnist but {', '.join(missing)} "
            "(or the matching config keys) were not provided"
        )


def load_dataset(cfg: ExperimentConfig):
    """Resolve the configured dataset into (x_pool, labels, x_test, labels_test)."""
    if cfg.dataset == "mnist":
        _resolve_mnist_paths(cfg)
        x_pool, labels = data.load_mnist(cfg.mnist_images, cfg.mnist_labels)
        x_test, labels_test = data.load_mnist(cfg.mnist_test_images, cfg.mnist_test_labels)
    else:
        x_pool, labels = data.generate_synthetic(
            cfg.synthetic_classes,
            cfg.synthetic_per_class,
            cfg.synthetic_dim,
            cfg.synthetic_separation,
            seeding.spawn_rng(cfg.master_seed, seeding.DATA_STREAM),
        )
        x_test, labels_test = data.generate_synthetic(
            cfg.synthetic_classes,
            cfg.synthetic_test_per_class,
            cfg.synthetic_dim,
            cfg.synthetic_separation,
            seeding.spawn_rng(cfg.master_seed, seeding.TEST_STREAM),
        )
    x_test = x_test[: cfg.test_size]
    labels_test = labels_test[: cfg.test_size]
    return x_pool, labels, x_test, labels_test


def _anchor_range(cfg: ExperimentConfig, x_pool):
    if cfg.anchor_auto:
        return float(x_pool.min()), float(x_pool.max())
    return cfg.anchor_lo, cfg.anchor_hi


def _executor(cfg: ExperimentConfig):
    if cfg.workers > 1:
        pool = ThreadPoolExecutor(max_workers=cfg.workers)
        return pool, pool.map
    return None, map


def _write_records_csv(path, cfg, command, records):
    rows = [
        ",".join(
            _fmt(v)
            for v in (r.epsilon, r.tau1, r.tau2, r.tau3, r.tau4, r.seed)
        )
        for r in records
    ]
    text = (
        _echo_lines(cfg, command)
        + "epsilon,tau1,tau2,tau3,tau4,seed\n"
        + "".join(row + "\n" for row in rows)
    )
    Path(path).write_text(text)


def run_accuracy(cfg: ExperimentConfig, out_dir) -> int:
    """Run the perturbation experiment; write records, batch, report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x_pool, labels, x_test, _ = load_dataset(cfg)
    n_needed = cfg.parties * cfg.n_per_party
    if x_pool.shape[0] < n_needed:
        raise SystemExit(
            f"error: dataset provides {x_pool.shape[0]} rows, "
            f"need parties*n_per_party = {n_needed}"
        )
    pick = seeding.spawn_rng(cfg.master_seed, seeding.SAMPLE_STREAM).choice(
        x_pool.shape[0], size=n_needed, replace=False
    )
    x_train = x_pool[pick]
    labels_train = np.asarray(labels)[pick]

    pool, map_executor = _executor(cfg)
    try:
        records, zero_records = analysis.accuracy_experiment(
            x_train,
            labels_train,
            x_test,
            parties=cfg.parties,
            intermediate_dim=cfg.intermediate_dim,
            anchor_rows=cfg.anchor_rows,
            ridge_lambda=cfg.ridge_lambda,
            knn_k=cfg.knn_k,
            trials=cfg.trials,
            eps_low=cfg.epsilon_min,
            eps_high=cfg.epsilon_max,
            zero_eps_trials=cfg.zero_eps_trials,
            master_seed=cfg.master_seed,
            anchor_range=_anchor_range(cfg, x_pool),
            map_executor=map_executor,
        )
    finally:
        if pool is not None:
            pool.shutdown()

    _write_records_csv(out / "records.csv", cfg, "accuracy-exp", records)
    _write_records_csv(out / "zero_records.csv", cfg, "accuracy-exp", zero_records)

    usable = analysis.positive_records(records)
    report = [
        "accuracy experiment report",
        "=" * 40,
        f"trials: {cfg.trials} (epsilon log-uniform on "
        f"[{_fmt(cfg.epsilon_min)}, {_fmt(cfg.epsilon_max)}])",
        f"records with all diagnostics positive: {len(usable)} of {len(records)}",
    ]
    if len(usable) >= 2:
        try:
            corr = analysis.correlations(usable)
            names = ["tau1", "tau2", "tau3", "tau4"]
            report.append("log-log Pearson correlations:")
            report.append("        " + "  ".join(f"{n:>7}" for n in names))
            for name, row in zip(names, corr):
                report.append(
                    f"  {name:>5} " + "  ".join(f"{v:7.4f}" for v in row)
                )
            report.append(
                f"corr(log tau4, log tau1) = {corr[3, 0]:.4f}"
            )
        except ValueError as exc:
            report.append(f"correlations unavailable: {exc}")
    else:
        report.append("correlations unavailable: fewer than 2 usable records")
    fraction = analysis.bound_check(records, BOUND_CONSTANT)
    report.append(
        f"bound check tau4 <= exp(0.5)*sqrt(tau1): fraction {fraction:.4f}"
    )

    report.append("")
    report.append(f"shared-range batch ({cfg.zero_eps_trials} runs):")
    worst = {
        "tau1": max(r.tau1 for r in zero_records),
        "tau2": max(r.tau2 for r in zero_records),
        "tau3": max(r.tau3 for r in zero_records),
        "tau4": max(r.tau4 for r in zero_records),
    }
    all_pass = (
        worst["tau1"] <= THEOREM_TOLERANCE
        and worst["tau2"] <= THEOREM_TOLERANCE
        and worst["tau3"] <= THEOREM_TOLERANCE
        and worst["tau4"] == 0.0
    )
    for name, value in worst.items():
        report.append(f"  max {name}: {_fmt(value)}")
    report.append(
        "  equivalence summary: "
        + ("all-pass" if all_pass else "FAIL (collaboration != centralized)")
    )
    (out / "report.txt").write_text(
        _echo_lines(cfg, "accuracy-exp") + "\n".join(report) + "\n"
    )
    print("\n".join(report))
    return 0


def run_privacy(cfg: ExperimentConfig, out_dir) -> int:
    """Run the defense trade-off sweep; write table and report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x_pool, labels, x_test, labels_test = load_dataset(cfg)
    pool, map_executor = _executor(cfg)
    try:
        table = privacy.tradeoff_experiment(
            x_pool,
            labels,
            x_test,
            labels_test,
            parties=cfg.parties,
            per_party=cfg.n_per_party,
            target_dim=cfg.intermediate_dim,
            anchor_rows=cfg.anchor_rows,
            ridge_lambda=cfg.ridge_lambda,
            knn_k=cfg.knn_k,
            epsilon_grid=cfg.epsilon_grid_values(),
            trials=cfg.trials,
            master_seed=cfg.master_seed,
            anchor_range=_anchor_range(cfg, x_pool),
            map_executor=map_executor,
        )
    finally:
        if pool is not None:
            pool.shutdown()

    lines = ["epsilon,min_edr,avg_samples,avg_acc,trials"]
    for row in table.rows:
        lines.append(
            f"{_fmt(row.epsilon)},{_fmt(row.min_edr)},{_fmt(row.avg_samples)},"
            f"{_fmt(row.avg_acc)},{row.trials}"
        )
    lines.append(
        f"centralized,,{_fmt(table.centralized_samples)},"
        f"{_fmt(table.centralized_acc)},{table.trials}"
    )
    lines.append(
        f"individual,,{_fmt(table.individual_samples)},"
        f"{_fmt(table.individual_acc)},{table.trials}"
    )
    (out / "tradeoff.csv").write_text(
        _echo_lines(cfg, "privacy-exp") + "".join(line + "\n" for line in lines)
    )

    report = [
        "privacy/accuracy trade-off report",
        "=" * 40,
        f"{'epsilon':>10} {'min_edr':>12} {'avg_samples':>12} {'avg_acc':>8} {'trials':>6}",
    ]
    for row in table.rows:
        report.append(
            f"{row.epsilon:>10.4g} {row.min_edr:>12.4g} {row.avg_samples:>12.2f} "
            f"{row.avg_acc:>8.4f} {row.trials:>6d}"
            + (f"  ({row.failures} failed)" if row.failures else "")
        )
    report.append(
        f"{'centralized':>10} {'':>12} {table.centralized_samples:>12.2f} "
        f"{table.centralized_acc:>8.4f} {table.trials:>6d}"
    )
    report.append(
        f"{'individual':>10} {'':>12} {table.individual_samples:>12.2f} "
        f"{table.individual_acc:>8.4f} {table.trials:>6d}"
    )
    (out / "report.txt").write_text(
        _echo_lines(cfg, "privacy-exp") + "\n".join(report) + "\n"
    )
    print("\n".join(report))
    return 0


def run_demo(cfg: ExperimentConfig, out_dir) -> int:
    """One end-to-end collaboration run with printed diagnostics."""
    x_pool, labels, x_test, labels_test = load_dataset(cfg)
    n_needed = cfg.parties * cfg.n_per_party
    if x_pool.shape[0] < n_needed:
        raise SystemExit(
            f"error: dataset provides {x_pool.shape[0]} rows, need {n_needed}"
        )
    x_train = x_pool[:n_needed]
    labels_train = np.asarray(labels)[:n_needed]
    y_onehot = protocol.one_hot(labels_train)
    lo, hi = _anchor_range(cfg, x_pool)

    record = analysis.run_perturbation_trial(
        x_train,
        y_onehot,
        x_test,
        fit_pca(x_train, cfg.intermediate_dim).matrix,
        0.0,
        parties=cfg.parties,
        anchor_rows=cfg.anchor_rows,
        anchor_range=(lo, hi),
        ridge_lambda=cfg.ridge_lambda,
        knn_k=cfg.knn_k,
        master_seed=cfg.master_seed,
        trial=0,
    )

    # a plain collaboration pipeline with per-party PCA maps, for accuracy
    per = cfg.n_per_party
    parties = [
        protocol.PartyDataset(
            x=x_train[i * per : (i + 1) * per],
            y=y_onehot[i * per : (i + 1) * per],
            party_id=i,
        )
        for i in range(cfg.parties)
    ]
    maps = [fit_pca(p.x, cfg.intermediate_dim) for p in parties]
    anchor = protocol.generate_anchor(
        x_train.shape[1],
        cfg.anchor_rows,
        lo,
        hi,
        seeding.spawn_rng(cfg.master_seed, seeding.ANCHOR_STREAM),
    )
    pipeline = protocol.train_pipeline(
        parties, maps, anchor, cfg.effective_collab_dim, cfg.ridge_lambda, cfg.knn_k
    )
    accs = [
        learner.accuracy(
            learner.classify(protocol.predict(pipeline, i, x_test)), labels_test
        )
        for i in range(cfg.parties)
    ]
    print("single-run diagnostics (shared-range maps):")
    print(f"  tau1 = {_fmt(record.tau1)}")
    print(f"  tau2 = {_fmt(record.tau2)}")
    print(f"  tau3 = {_fmt(record.tau3)}")
    print(f"  tau4 = {_fmt(record.tau4)}")
    print("collaboration with per-party PCA maps:")
    print(f"  test accuracy per party: {[round(a, 4) for a in accs]}")
    print(f"  mean: {np.mean(accs):.4f}")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        bundle.save_pipeline(pipeline, out / "pipeline.bin")
        print(f"pipeline state written to {out / 'pipeline.bin'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="datacollab",
        description="Collaborative data analysis experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("accuracy-exp", "perturbation sweep with alignment diagnostics"),
        ("privacy-exp", "down-sampling defense trade-off sweep"),
        ("demo", "single end-to-end run with printed diagnostics"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="config file (key = value lines)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, help="parallel trial workers")
        p.add_argument("--mnist-images")
        p.add_argument("--mnist-labels")
        p.add_argument("--mnist-test-images")
        p.add_argument("--mnist-test-labels")
    return parser


def _load_config(args) -> ExperimentConfig:
    try:
        cfg = parse_file(args.config) if args.config else ExperimentConfig()
    except (OSError, ValueError) as exc:
        raise SystemExit(f"error: config: {exc}") from None
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    for attr in ("mnist_images", "mnist_labels", "mnist_test_images", "mnist_test_labels"):
        value = getattr(args, attr)
        if value:
            overrides[attr] = value
            overrides["dataset"] = "mnist"
    if overrides:
        merged = {**cfg.__dict__, **overrides}
        try:
            cfg = ExperimentConfig(**merged)
        except ValueError as exc:
            raise SystemExit(f"error: config: {exc}") from None
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _load_config(args)
    try:
        if args.command == "accuracy-exp":
            return run_accuracy(cfg, args.out)
        if args.command == "privacy-exp":
            return run_privacy(cfg, args.out)
        return run_demo(cfg, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
