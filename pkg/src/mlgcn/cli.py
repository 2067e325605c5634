"""Command line: ``mlgcn {train,eval,gen,gradcheck,sweep} --config FILE [--out DIR]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .config import GEN_KEYS, TRAIN_KEYS, read_config
from .errors import ConfigError, MLGCNError
from .graph import Graph, SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .metrics import micro_f1
from .modelio import load_model, save_model
from .protocols import DEFAULT_FRACTIONS, format_table, run_ablation, run_size_sweep
from .trainer import TrainConfig, gradcheck, predict, train

log = logging.getLogger("mlgcn")

BUILTIN_DATASET = "tiny"
GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_FIXTURE = SyntheticSpec(
    n=30, c=4, corr_pairs=((0, 1, 0.8), (2, 3, 0.8)), p_in=0.3, p_out=0.05,
    noise_dims=4, train_fraction=0.5, seed=7,
)
GRADCHECK_DEFAULTS = dict(hidden_dim=6, negatives=2, seed=7)
# keys consumed by the CLI rather than TrainConfig
_RUN_KEYS = ("dataset", "fractions", "seeds", "step")


def builtin_dataset_path() -> Path:
    return Path(str(resources.files("mlgcn") / "data" / BUILTIN_DATASET))


def method_name(cfg: TrainConfig) -> str:
    if cfg.lambda1 == 0.0 and cfg.lambda2 == 0.0:
        return "MLP" if cfg.propagation == "identity" else "GCN"
    if cfg.lambda1 == 0.0:
        return "Partly ML-GCN"
    return "ML-GCN"


class Run:
    """A resolved command invocation: config values, dataset source and output dir."""

    def __init__(self, command: str, values: dict, out: Path, config_dir: Path):
        self.command = command
        self.values = values
        self.out = out
        self.config_dir = config_dir

    @classmethod
    def from_args(cls, command, args, defaults=None):
        path = Path(args.config)
        if path.suffix == ".json":
            # a manifest from an earlier run
            try:
                manifest = json.loads(path.read_text(encoding="utf-8"))
                values = dict(manifest["config"])
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"{path}: not a readable manifest ({exc})") from None
            for key in values:
                if key not in TRAIN_KEYS and key not in TrainConfig.field_names():
                    raise ConfigError(f"{path}: unknown key {key!r}")
            if isinstance(values.get("fractions"), list):
                values["fractions"] = tuple(values["fractions"])
        else:
            values = read_config(path, TRAIN_KEYS)
        if defaults:
            values = {**defaults, **values}
        out = Path(args.out) if args.out else Path("runs") / command
        return cls(command, values, out, path.resolve().parent)

    def train_config(self) -> TrainConfig:
        kwargs = {k: v for k, v in self.values.items() if k not in _RUN_KEYS}
        cfg = TrainConfig(**kwargs)
        for name in ("lambda1", "lambda2"):
            if getattr(cfg, name) < 0:
                log.warning("%s = %g is negative; the term will be maximized", name, getattr(cfg, name))
        return cfg

    def dataset_source(self):
        ds = self.values.get("dataset")
        if ds is None or ds == BUILTIN_DATASET:
            return {"path": str(builtin_dataset_path())}
        p = Path(ds)
        if not p.is_absolute():
            p = self.config_dir / p
        return {"path": str(p.resolve())}

    def load_graph(self) -> Graph:
        return load_dataset(self.dataset_source()["path"])

    def write_manifest(self, cfg: TrainConfig, dataset: dict):
        config = cfg.as_dict()
        config["dataset"] = dataset.get("path")
        for key in ("fractions", "seeds", "step"):
            if key in self.values:
                value = self.values[key]
                config[key] = list(value) if isinstance(value, tuple) else value
        if config["dataset"] is None:
            del config["dataset"]
        manifest = {
            "command": self.command,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "seed": cfg.seed,
            "dataset": dataset,
            "config": config,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest


class MetricSink:
    """Writes records to stdout and ``<out>/metrics.jsonl``."""

    def __init__(self, out: Path, echo=True):
        out.mkdir(parents=True, exist_ok=True)
        self.fh = open(out / "metrics.jsonl", "w", encoding="utf-8", newline="\n")
        self.echo = echo

    def emit(self, record: dict):
        line = json.dumps(record, sort_keys=False)
        self.fh.write(line + "\n")
        if self.echo:
            print(line)

    def close(self):
        self.fh.close()


def _metric_record(method, cfg, report, split):
    return {
        "method": method, "fraction": 1.0, "seed": cfg.seed, "micro_f1": report.micro_f1,
        "tp": report.tp, "fp": report.fp, "fn": report.fn,
        "split": split, "percent": report.percent,
    }


def cmd_train(args) -> int:
    run = Run.from_args("train", args)
    cfg = run.train_config()
    g = run.load_graph()
    run.write_manifest(cfg, run.dataset_source())
    result = train(g, cfg)
    sink = MetricSink(run.out)
    try:
        for rec in result.report.epochs:
            sink.emit(rec.as_dict())
        method = method_name(cfg)
        sink.emit(_metric_record(method, cfg, result.report.train_metrics, "train"))
        if result.report.test_metrics is not None:
            sink.emit(_metric_record(method, cfg, result.report.test_metrics, "test"))
    finally:
        sink.close()
    save_model(run.out / "model.bin", result.params, result.Z)
    return 0


def cmd_eval(args) -> int:
    run = Run.from_args("eval", args)
    if args.dataset:
        run.values["dataset"] = str(Path(args.dataset).resolve())
    cfg = run.train_config()
    g = run.load_graph()
    params, Z = load_model(args.model)
    d, h = params.W0.shape
    c = params.W1.shape[1]
    if (d, c) != (g.d, g.c):
        raise ConfigError(f"model expects d={d}, c={c} but dataset has d={g.d}, c={g.c}")
    if not g.test_mask.any():
        raise ConfigError("dataset has no test nodes")
    pred = predict(g, params, cfg)
    report = micro_f1(pred, g.labels, g.test_mask)
    record = _metric_record(method_name(cfg), cfg, report, "test")
    print(json.dumps(record))
    print(f"micro-F1 {report.micro_f1:.6f} ({report.percent}%)")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        with open(Path(args.out) / "metrics.jsonl", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")
    return 0


def gen_spec(values: dict) -> SyntheticSpec:
    missing = [k for k in ("n", "classes") if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    kwargs = dict(values)
    kwargs["c"] = kwargs.pop("classes")
    return SyntheticSpec(**kwargs)


def cmd_gen(args) -> int:
    spec = gen_spec(read_config(args.config, GEN_KEYS))
    out = Path(args.out) if args.out else Path("runs") / "gen"
    save_dataset(generate_synthetic(spec), out)
    print(json.dumps({"dataset": str(out), **asdict(spec)}))
    return 0


def cmd_gradcheck(args) -> int:
    run = Run.from_args("gradcheck", args, defaults=GRADCHECK_DEFAULTS)
    cfg = run.train_config()
    if "dataset" in run.values:
        source = run.dataset_source()
        g = run.load_graph()
    else:
        source = {"synthetic": asdict(GRADCHECK_FIXTURE)}
        g = generate_synthetic(GRADCHECK_FIXTURE)
    run.write_manifest(cfg, source)
    result = gradcheck(g, cfg, step=run.values.get("step", 1e-5))
    sink = MetricSink(run.out)
    try:
        for name, err in result.max_rel_error.items():
            sink.emit({"tensor": name, "max_rel_error": err, "ok": err < GRADCHECK_TOLERANCE})
    finally:
        sink.close()
    return 0 if result.worst < GRADCHECK_TOLERANCE else 1


def cmd_sweep(args) -> int:
    run = Run.from_args("sweep", args)
    cfg = run.train_config()
    g = run.load_graph()
    run.write_manifest(cfg, run.dataset_source())
    seeds = [cfg.seed + k for k in range(run.values.get("seeds", 1))]
    fractions = run.values.get("fractions", DEFAULT_FRACTIONS)
    ablation, sweep = [], []
    sink = MetricSink(run.out)
    try:
        for seed in seeds:
            for row in run_ablation(g, replace(cfg, seed=seed)):
                sink.emit(row)
                ablation.append(row)
        if fractions:
            for seed in seeds:
                for row in run_size_sweep(g, replace(cfg, seed=seed), fractions):
                    sink.emit(row)
                    sweep.append(row)
    finally:
        sink.close()
    tables = "Micro-F1 (%) by method\n" + format_table(ablation) + "\n"
    if sweep:
        tables += "\nMicro-F1 (%) by training-set fraction\n" + format_table(sweep) + "\n"
    (run.out / "tables.txt").write_text(tables)
    print(tables, end="")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "gen": cmd_gen,
    "gradcheck": cmd_gradcheck,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlgcn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value file, or a run manifest")
        p.add_argument("--out", help="output directory")
        if name == "eval":
            p.add_argument("--model", required=True, help="model.bin written by train")
            p.add_argument("--dataset", help="override the config's dataset")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (MLGCNError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
