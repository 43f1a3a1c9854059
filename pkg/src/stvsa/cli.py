"""``stvsa`` command line: one subcommand per pipeline stage.

Stages exchange files through the output directory::

    datagen  -> data/trajectories.jsonl
    label    -> data/labeled.jsonl, data/labels.csv
    augment  -> data/train_windows.csv, data/test_windows.csv, data/synthetic_windows.csv, data/mmd.csv
    train    -> models/<variant>.npz, metrics/train_<variant>.csv, metrics/loss_<variant>.csv
    attack   -> metrics/attack.csv
    defend   -> models/<variant>_defended.npz, metrics/defense.csv
    sweep    -> metrics/sweep_<kind>.csv
    ablate   -> metrics/ablation.csv, metrics/ablation_means.csv
    report   -> report/ (CSVs, figures, summary JSON)

Exit status: 0 success, 1 usage or configuration error, 2 runtime error.
The output directory is taken from ``--output``, then ``$STVSA_OUTPUT_DIR``,
then the config's ``output_dir``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, build_sections, config_hash, dump_config, load_config

log = logging.getLogger("stvsa")

ENV_OUTPUT = "STVSA_OUTPUT_DIR"
SUBCOMMANDS = {
    "datagen": "simulate the scenario grid and write trajectories",
    "label": "heuristic + SFCM labeling of generated trajectories",
    "augment": "window, split and LSGAN-augment the labeled set",
    "train": "train one model variant on the prepared windows",
    "attack": "robustness grid on an undefended checkpoint",
    "defend": "adversarial training followed by the robustness grid",
    "sweep": "model comparison, qubit x layer or sampling-window sweep",
    "ablate": "four-row ablation ladder with robustness",
    "report": "collect metric CSVs into a report with figures",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stvsa", description="Hybrid quantum-classical voltage stability toolkit.",
                epilog=f"Exit status: 0 ok, 1 usage/config error, 2 runtime error. "
                       f"${ENV_OUTPUT} overrides the output directory.")
    p.add_argument("--version", action="version", version=f"stvsa {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    for name, help_text in SUBCOMMANDS.items():
        s = sub.add_parser(name, help=help_text, description=help_text)
        s.add_argument("--config", "-c", help="YAML config file (defaults apply when omitted)")
        s.add_argument("--set", "-s", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted-key override, repeatable")
        s.add_argument("--seed", type=int, help="master seed (overrides the config)")
        s.add_argument("--output", "-o", help=f"output directory (else ${ENV_OUTPUT}, else config)")
        s.add_argument("-v", "--verbose", action="count", default=0)
        s.add_argument("-q", "--quiet", action="store_true")
        if name == "train":
            s.add_argument("--variant", choices=("qstaformer", "transformer", "lstm"))
        if name in ("attack", "defend"):
            s.add_argument("--variant", default="qstaformer", choices=("qstaformer", "transformer", "lstm"))
        if name == "sweep":
            s.add_argument("--kind", default="quantum", choices=("quantum", "window", "compare"))
        if name == "report":
            s.add_argument("--no-figures", action="store_true")
    return p


# ---------------------------------------------------------------- helpers


def _paths(out: Path) -> dict:
    return {
        "trajectories": out / "data" / "trajectories.jsonl",
        "labeled": out / "data" / "labeled.jsonl",
        "labels": out / "data" / "labels.csv",
        "train": out / "data" / "train_windows.csv",
        "test": out / "data" / "test_windows.csv",
        "synthetic": out / "data" / "synthetic_windows.csv",
        "mmd": out / "data" / "mmd.csv",
        "adversarial": out / "data" / "adversarial",
        "models": out / "models",
        "metrics": out / "metrics",
        "report": out / "report",
    }


def _need(path: Path, stage: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run `stvsa {stage}` first")
    return path


def _write_csv(rows, path: Path) -> Path:
    from .harness.report import csv_text
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(rows), encoding="utf-8", newline="")
    return path


def _read_rows(path: Path) -> list[dict]:
    import csv
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _load_windows(paths, cfg, which: str):
    from .data.io import read_windows_csv
    from .harness.training import Dataset
    length = build_sections(cfg)["data"].window_length
    x, y, _ = read_windows_csv(_need(paths[which], "augment"), length)
    return Dataset(x, y)


def _pool(paths, cfg):
    from .data.io import read_trajectories
    from .harness.experiments import label_pool
    trajs = read_trajectories(_need(paths["trajectories"], "datagen"))
    return label_pool(trajs, build_sections(cfg)["data"], cfg["seed"])


# ---------------------------------------------------------------- stages


def cmd_datagen(cfg, paths, args):
    from .data.io import write_trajectories
    from .data.simulate import simulate_trajectories
    d = build_sections(cfg)["data"]
    trajs = simulate_trajectories(d.grid, d.n_per_cell, cfg["seed"], d.generator)
    write_trajectories(trajs, paths["trajectories"])
    log.info("wrote %d trajectories to %s", len(trajs), paths["trajectories"])


def cmd_label(cfg, paths, args):
    from .data.io import write_trajectories
    pool = _pool(paths, cfg)
    for t, lab in zip(pool.trajectories, pool.sfcm):
        t.label = int(lab)
    write_trajectories(pool.trajectories, paths["labeled"])
    u = pool.sfcm_result.u
    rows = [{"id": t.id, "truth": int(pool.truth[i]), "heuristic": int(pool.heuristic[i]),
             "sfcm": int(pool.sfcm[i]), "u_stable": float(u[i, 0]), "u_unstable": float(u[i, 1])}
            for i, t in enumerate(pool.trajectories)]
    _write_csv(rows, paths["labels"])
    _write_csv([pool.summary()], paths["metrics"] / "labeling.csv")
    log.info("labeling summary: %s", pool.summary())


def cmd_augment(cfg, paths, args):
    from .data.io import write_windows_csv
    from .harness.experiments import build_dataset, generation_mmd
    pool = _pool(paths, cfg)
    bundle = build_dataset(pool, build_sections(cfg)["data"], cfg["seed"])
    real = bundle.real_train
    write_windows_csv(bundle.train.x, bundle.train.y, paths["train"],
                      [f"r{i:05d}" for i in range(len(real))]
                      + [f"s{i:05d}" for i in range(len(bundle.train) - len(real))])
    write_windows_csv(bundle.test.x, bundle.test.y, paths["test"])
    if bundle.synthetic is not None:
        write_windows_csv(bundle.synthetic.x, bundle.synthetic.y, paths["synthetic"],
                          [f"s{i:05d}" for i in range(len(bundle.synthetic))])
        mmd = generation_mmd(bundle, cfg["seed"])
        _write_csv([{"label": k, "mmd": v} for k, v in mmd.items()], paths["mmd"])
        log.info("per-class MMD: %s", mmd)
    log.info("dataset: %s", {k: v for k, v in bundle.info.items() if k != "gan_seconds"})


def _train_one(cfg, paths, variant):
    from dataclasses import replace

    from .harness.experiments import run_training
    from .models.checkpoint import save_checkpoint
    sec = build_sections(cfg)
    train_ds, test_ds = _load_windows(paths, cfg, "train"), _load_windows(paths, cfg, "test")
    from .harness.experiments import Bundle
    bundle = Bundle(train_ds, test_ds, sec["data"], len(train_ds))
    mc = replace(sec["model"], variant=variant, seq_len=train_ds.x.shape[1], feature_dim=train_ds.x.shape[2])
    res = run_training(bundle, mc, sec["training"], cfg["seed"])
    save_checkpoint(res.model, paths["models"] / f"{variant}.npz", {"seed": cfg["seed"]})
    rows = [{"epoch": i + 1, "train_loss": l, **m} for i, (l, m) in
            enumerate(zip(res.loss_trace, res.test_trace))]
    _write_csv(rows, paths["metrics"] / f"train_{variant}.csv")
    _write_csv([{"epoch": i + 1, "loss": l} for i, l in enumerate(res.loss_trace)],
               paths["metrics"] / f"loss_{variant}.csv")
    log.info("%s test metrics: %s", variant, res.metrics.to_dict() if res.metrics else None)
    return res


def cmd_train(cfg, paths, args):
    _train_one(cfg, paths, args.variant or cfg["model"]["variant"])


def _robustness(cfg, model, test_ds, train_ds, epsilons):
    from .adversarial.defense import robustness_eval, train_surrogate
    a = cfg["attack"]
    pick = np.random.default_rng(cfg["seed"]).permutation(len(test_ds))[:a["samples"]]
    sub = test_ds.subset(np.sort(pick))
    surrogate = None
    if "gray_box" in a["threats"]:
        surrogate = train_surrogate(model, train_ds.x, a["surrogate_epochs"], a["surrogate_queries"],
                                    seed=cfg["seed"])
    rep = robustness_eval(model, sub.x, sub.y, tuple(m for m in a["methods"] if m != "cw"),
                          tuple(a["threats"]), tuple(epsilons), surrogate, seed=cfg["seed"],
                          keep=a["export"])
    if "cw" in a["methods"]:
        cw_eps = epsilons if len(epsilons) == 1 and a["cw_epsilon"] is None else (a["cw_epsilon"],)
        cw = robustness_eval(model, sub.x, sub.y, ("cw",), tuple(a["threats"]), tuple(cw_eps),
                             surrogate, seed=cfg["seed"], keep=a["export"])
        rep.rows += cw.rows
        rep.batches.update(cw.batches)
    return rep


def _export_adversarial(cfg, rep, directory: Path) -> None:
    from .data.io import window_to_trajectory, write_trajectories
    rate = cfg["data"]["generator"]["rate_hz"]
    for (method, threat, eps), batch in sorted(rep.batches.items(), key=lambda kv: repr(kv[0])):
        tag = f"{method}_{threat}_eps{'inf' if eps is None else eps}"
        prov = {"source": "attack", "method": method, "threat": threat, "epsilon": eps,
                "seed": cfg["seed"]}
        trajs = [window_to_trajectory(batch.x_adv[i], f"{tag}-{i:04d}", batch.y[i], rate,
                                      {**prov, "success": bool(batch.success[i])})
                 for i in range(len(batch.y))]
        write_trajectories(trajs, directory / f"{tag}.jsonl")


def cmd_attack(cfg, paths, args):
    from .models.checkpoint import load_checkpoint
    model = load_checkpoint(_need(paths["models"] / f"{args.variant}.npz", "train"))
    test_ds, train_ds = _load_windows(paths, cfg, "test"), _load_windows(paths, cfg, "train")
    rep = _robustness(cfg, model, test_ds, train_ds, cfg["attack"]["epsilons"])
    rows = [{"epsilon": 0.0, "method": "clean", "threat": "none", "accuracy": rep.clean_accuracy}] + rep.rows
    _write_csv(rows, paths["metrics"] / "attack.csv")
    if cfg["attack"]["export"]:
        _export_adversarial(cfg, rep, paths["adversarial"])
    log.info("clean %.4f; %d attack cells", rep.clean_accuracy, len(rep.rows))


def cmd_defend(cfg, paths, args):
    from .adversarial.attacks import AttackConfig
    from .adversarial.defense import adversarial_training
    from .models.checkpoint import load_checkpoint, save_checkpoint
    sec = build_sections(cfg)
    dcfg = cfg["defense"]
    model = load_checkpoint(_need(paths["models"] / f"{args.variant}.npz", "train"))
    test_ds, train_ds = _load_windows(paths, cfg, "test"), _load_windows(paths, cfg, "train")
    attacks = [AttackConfig(m, dcfg["epsilon"]) for m in dcfg["attacks"]]
    res = adversarial_training(model, train_ds, attacks, dcfg["mix_ratio"], dcfg["epochs"],
                               sec["training"], seed=cfg["seed"])
    save_checkpoint(model, paths["models"] / f"{args.variant}_defended.npz", {"seed": cfg["seed"]})
    _write_csv([{"epoch": i + 1, "loss": l} for i, l in enumerate(res.loss_trace)],
               paths["metrics"] / f"loss_{args.variant}_defended.csv")
    rep = _robustness(cfg, model, test_ds, train_ds, [dcfg["epsilon"]])
    rows = [{"epsilon": 0.0, "method": "clean", "threat": "none", "accuracy": rep.clean_accuracy}] + rep.rows
    _write_csv(rows, paths["metrics"] / "defense.csv")
    log.info("defended clean %.4f, mean robust %.4f", rep.clean_accuracy, rep.mean_robust_accuracy)


def cmd_sweep(cfg, paths, args):
    from .harness import experiments as ex
    from .harness.training import TrainConfig
    sec = build_sections(cfg)
    sw = cfg["sweep"]
    tc = TrainConfig(**{**sec["training"].to_dict(), "epochs": sw["epochs"]})
    if args.kind == "window":
        pool = _pool(paths, cfg)
        table = ex.sweep_sampling_window(pool, tuple(sw["windows_s"]), tuple(sw["seeds"]), sec["data"],
                                         sec["model"], tc, sw["workers"], cfg["seed"])
    else:
        bundle = ex.Bundle(_load_windows(paths, cfg, "train"), _load_windows(paths, cfg, "test"),
                           sec["data"])
        if args.kind == "quantum":
            table = ex.sweep_quantum(bundle, tuple(sw["qubits"]), tuple(sw["layers"]), tuple(sw["seeds"]),
                                     sec["model"], tc, sw["workers"])
        else:
            table = ex.compare_models(bundle, tuple(cfg["compare"]["variants"]),
                                      tuple(cfg["compare"]["seeds"]), sec["model"], sec["training"],
                                      sw["workers"])
    rows = [{k: v for k, v in r.items() if k != "seconds"} for r in table.rows]
    _write_csv(rows, paths["metrics"] / f"sweep_{args.kind}.csv")
    for key, trace in sorted(table.traces.items()):
        _write_csv([{"epoch": i + 1, "loss": l} for i, l in enumerate(trace)],
                   paths["metrics"] / f"loss_sweep_{args.kind}_{key}.csv")


def cmd_ablate(cfg, paths, args):
    from .harness import experiments as ex
    sec = build_sections(cfg)
    pool = _pool(paths, cfg)
    table = ex.ablation_suite(pool, tuple(cfg["ablation"]["seeds"]), sec["data"], sec["model"],
                              sec["ablation"], 1, cfg["seed"])
    _write_csv(table.rows, paths["metrics"] / "ablation.csv")
    _write_csv(ex.ablation_means(table), paths["metrics"] / "ablation_means.csv")


def cmd_report(cfg, paths, args):
    from .harness.report import Report, emit_report
    metrics = paths["metrics"]
    if not metrics.is_dir():
        raise FileNotFoundError(f"{metrics} not found; run a training or evaluation stage first")
    rep = Report("stvsa", cfg["seed"], cfg, config_hash(cfg))
    for path in sorted(metrics.glob("*.csv")):
        rows = [{k: _num(v) for k, v in r.items()} for r in _read_rows(path)]
        if path.stem.startswith("loss_"):
            rep.traces[path.stem[5:]] = [r["loss"] for r in rows]
        else:
            rep.add_table(path.stem, rows)
    if paths["mmd"].exists():
        rep.add_table("mmd", [{k: _num(v) for k, v in r.items()} for r in _read_rows(paths["mmd"])])
    summary = emit_report(rep, paths["report"], figures=not args.no_figures)
    log.info("report with %d tables in %s", len(summary["tables"]), paths["report"])


def _num(v: str):
    if v == "":
        return None
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


COMMANDS = {
    "datagen": cmd_datagen, "label": cmd_label, "augment": cmd_augment, "train": cmd_train,
    "attack": cmd_attack, "defend": cmd_defend, "sweep": cmd_sweep, "ablate": cmd_ablate,
    "report": cmd_report,
}


def _resolve_output(args, cfg) -> Path:
    return Path(args.output or os.environ.get(ENV_OUTPUT) or cfg["output_dir"])


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return 1
        cfg = load_config(args.config, args.overrides, args.seed)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose else logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr,
                        force=True)
    out = _resolve_output(args, cfg)
    cfg["output_dir"] = str(out)
    paths = _paths(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        snapshot = out / f"{args.command}_effective_config.yaml"
        snapshot.write_text(dump_config(cfg), encoding="utf-8")
        log.info("effective config (hash %s):\n%s", config_hash(cfg), dump_config(cfg))
        t0 = time.perf_counter()
        COMMANDS[args.command](cfg, paths, args)
        log.info("%s finished in %.1fs", args.command, time.perf_counter() - t0)
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 2
        log.debug("traceback", exc_info=True)
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
