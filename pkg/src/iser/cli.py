"""Command line: ``iser {train,eval,predict,attn,stats} [-c FILE] [--set KEY=VALUE ...]``.

Failures print one line ``error code=<CODE> message=<text>`` on stderr and
exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as C
from .data import DataError, dataset_stats, load_dataset
from .encoder import Vocab
from .evaluation import evaluate_model
from .interpret import attention_dumps
from .model import JointModel
from .training import CheckpointError, TrainingError, load_checkpoint, save_checkpoint, train

EXIT_CODES = {"CONFIG": 2, "DATA": 3, "CHECKPOINT": 4, "TRAINING": 5}
COMMANDS = ("train", "eval", "predict", "attn", "stats")


class CommandError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _load(cfg, key):
    path = cfg[key]
    if not path:
        raise CommandError("CONFIG", f"{key} is not set")
    if not Path(path).is_file():
        raise CommandError("DATA", f"dataset not found: {path}")
    try:
        return load_dataset(path, cfg["dialect"])
    except (DataError, ValueError, OSError) as exc:
        raise CommandError("DATA", f"{path}: {exc}") from None


def _out_dir(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _checkpoint(cfg):
    path = Path(cfg["checkpoint"] or Path(cfg["output_dir"]) / "checkpoint.npz")
    if not path.is_file():
        raise CommandError("CHECKPOINT", f"checkpoint not found: {path}")
    try:
        return load_checkpoint(path)
    except CheckpointError as exc:
        raise CommandError("CHECKPOINT", str(exc)) from None


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")


def cmd_train(cfg):
    sentences, catalog = _load(cfg, "train_path")
    mcfg, tcfg = C.model_config(cfg), C.train_config(cfg)
    vocab = Vocab.build(sentences)
    out = _out_dir(cfg)
    model = JointModel(mcfg, catalog, vocab, seed=tcfg.seed)
    if cfg["pretrained_embeddings"]:
        try:
            model.encoder.load_pretrained(cfg["pretrained_embeddings"])
        except (OSError, ValueError) as exc:
            raise CommandError("DATA", f"pretrained embeddings: {exc}") from None

    def on_epoch(epoch, loss, m):
        if cfg["save_every_epoch"]:
            save_checkpoint(out / f"checkpoint_epoch{epoch + 1:03d}.npz", m, tcfg, {"run_config": cfg})

    try:
        model, trace = train(tcfg, sentences, catalog, model=model, on_epoch=on_epoch)
    except TrainingError as exc:
        raise CommandError("TRAINING", str(exc)) from None
    save_checkpoint(out / "checkpoint.npz", model, tcfg, {"run_config": cfg})
    lines = ["".join(f"# {line}\n" for line in C.format_config(cfg).splitlines()), "epoch\tloss\n"]
    lines += [f"{i + 1}\t{loss:.10f}\n" for i, loss in enumerate(trace)]
    (out / "loss_trace.tsv").write_text("".join(lines), encoding="utf-8")
    print(f"trained {tcfg.epochs} epochs; final loss {trace[-1]:.6f}; wrote {out / 'checkpoint.npz'}")


def cmd_eval(cfg):
    model, _ = _checkpoint(cfg)
    sentences, _ = _load(cfg, "eval_path")
    report, _ = evaluate_model(model, sentences, cfg["threshold"], cfg["relation_mode"])
    out = _out_dir(cfg)
    _write_json(out / "eval_report.json", {"config": cfg, "report": report.to_dict()})
    table = report.format_table()
    (out / "eval_report.txt").write_text(table, encoding="utf-8")
    print(table, end="")


def cmd_predict(cfg):
    model, _ = _checkpoint(cfg)
    key = "predict_path" if cfg["predict_path"] else "eval_path"
    sentences, _ = _load(cfg, key)
    records = [model.predict(s.tokens, cfg["threshold"]).to_record(s.tokens) for s in sentences]
    out = _out_dir(cfg)
    _write_json(out / "predictions.json", records)
    _write_json(out / "predictions.config.json", cfg)
    print(f"wrote {len(records)} predictions to {out / 'predictions.json'}")


def cmd_attn(cfg):
    model, _ = _checkpoint(cfg)
    key = "predict_path" if cfg["predict_path"] else "eval_path"
    sentences, _ = _load(cfg, key)
    out = _out_dir(cfg) / "attention"
    out.mkdir(exist_ok=True)
    for i, s in enumerate(sentences):
        for direction, dump in attention_dumps(model, s.tokens).items():
            dump.write_csv(out / f"{i:05d}_{direction.replace('=', '-')}.csv")
    _write_json(out / "config.json", cfg)
    print(f"wrote attention dumps for {len(sentences)} sentences to {out}")


def cmd_stats(cfg):
    keys = [k for k in ("train_path", "eval_path") if cfg[k]]
    if not keys:
        raise CommandError("CONFIG", "set train_path and/or eval_path")
    result = {}
    for key in keys:
        sentences, _ = _load(cfg, key)
        report = dataset_stats(sentences)
        result[key] = report.to_dict()
        print(f"[{key}] {cfg[key]}")
        print(report.format_table())
        print()
    _write_json(_out_dir(cfg) / "stats.json", {"config": cfg, "stats": result})


HANDLERS = {"train": cmd_train, "eval": cmd_eval, "predict": cmd_predict, "attn": cmd_attn, "stats": cmd_stats}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iser", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("-c", "--config", help="flat key = value config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable; wins over the file)")
    parser.add_argument("--show-keys", action="store_true", help="list every config key and exit")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.show_keys:
        for key, (default, doc) in C.RUN_KEYS.items():
            print(f"{key:<22}{default!s:<16}{doc}")
        return 0
    try:
        cfg = C.load_config(args.config, args.overrides)
        C.model_config(cfg)
        C.train_config(cfg)
        logging.basicConfig(level=getattr(logging, str(cfg["log_level"]).upper(), logging.WARNING))
        HANDLERS[args.command](cfg)
    except C.ConfigError as exc:
        return _fail("CONFIG", str(exc))
    except CommandError as exc:
        return _fail(exc.code, str(exc))
    return 0


def _fail(code: str, message: str) -> int:
    print(f"error code={code} message={json.dumps(message, ensure_ascii=False)}", file=sys.stderr)
    return EXIT_CODES[code]


if __name__ == "__main__":
    sys.exit(main())
