"""Command-line pipeline: gen, extract, train, eval, cv, saliency, gradcheck.

Every artifact-writing command drops a JSON manifest next to its outputs
(command, version, seed, resolved config, input and output digests) so a run
can be audited and reproduced bitwise. Exit codes: 0 success, 1 runtime or
data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .chain import representation_record
from .corpus import (
    SynthConfig,
    generate_synthetic,
    index_sentences,
    load_events,
    parse_conllu,
    serialize_conllu,
    serialize_events,
    synthetic_vocabulary,
)
from .errors import DepchainError
from .harness import (
    TrainConfig,
    cross_validate,
    encode_input,
    evaluate,
    format_metrics_table,
    load_trained,
    save_trained,
    train,
)
from .models import MODEL_TYPES, gradcheck_model
from .nncore import random_embeddings, write_embeddings
from .saliency import compute_saliency, emit_heatmap, heatmap_filename

__all__ = ["main", "build_parser"]

GRADCHECK_TOLERANCE = 1e-4
DATA_DIR_VAR = "DEPCHAIN_DATA_DIR"


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(
    manifest_path: str,
    command: str,
    seed: int | None,
    config: dict,
    inputs: list[str],
    outputs: list[str],
) -> None:
    doc = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config,
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": {p: _sha256(p) for p in outputs},
    }
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(doc, f, sort_keys=True, indent=2)
        f.write("\n")


def _read_corpus(conllu_path: str, events_path: str):
    corpus = parse_conllu(Path(conllu_path).read_text(encoding="utf-8"))
    mentions = load_events(Path(events_path).read_text(encoding="utf-8"), corpus)
    return corpus, mentions


def _parse_weights(parser: argparse.ArgumentParser, text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    try:
        w = tuple(float(p) for p in parts)
    except ValueError:
        w = ()
    if len(w) != 3 or any(x < 0 for x in w):
        parser.error("--weights must be three comma-separated nonnegative reals")
    if abs(sum(w) - 1.0) > 1e-9:
        parser.error(f"--weights must sum to 1, got {sum(w)!r}")
    return w


def _add_hyper_flags(sp: argparse.ArgumentParser):
    sp.add_argument("--epochs", type=int, default=50)
    sp.add_argument("--lr", type=float, default=0.001, help="learning rate")
    sp.add_argument("--dropout", type=float, default=0.5)
    sp.add_argument("--hidden", type=int, default=300,
                    help="hidden units (doubles as CNN filter count)")
    sp.add_argument("--half-width", type=int, default=7)
    sp.add_argument("--batch-size", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--embeddings", default=None,
                    help="embedding text file; omit for a seeded random table")
    sp.add_argument("--emb-dim", type=int, default=300,
                    help="dimension of the random table when --embeddings is omitted")
    sp.add_argument("--tree-readout", choices=("root", "target"), default="root")
    sp.add_argument("--finetune-embeddings", action="store_true")


def _config_from_args(parser: argparse.ArgumentParser, args) -> TrainConfig:
    try:
        return TrainConfig(
            model_type=args.model,
            representation=args.repr,
            learning_rate=args.lr,
            epochs=args.epochs,
            dropout=args.dropout,
            hidden=args.hidden,
            half_width=args.half_width,
            batch_size=args.batch_size,
            seed=args.seed,
            embeddings=args.embeddings,
            embedding_dim=args.emb_dim,
            tree_readout=args.tree_readout,
            finetune_embeddings=args.finetune_embeddings,
        )
    except ValueError as e:
        parser.error(str(e))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depchain",
        description="Dependency-chain extraction and event temporal status models.",
    )
    parser.add_argument("--version", action="version", version=f"depchain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    default_dir = os.environ.get(DATA_DIR_VAR)

    sp = sub.add_parser("gen", help="generate a synthetic labeled corpus")
    sp.add_argument("--out", default=default_dir,
                    help=f"output directory (default: ${DATA_DIR_VAR})")
    sp.add_argument("--n", type=int, required=True, help="number of sentences")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--weights", default=None, help="PA,OG,FU label weights, e.g. 0.67,0.21,0.12")
    sp.add_argument("--distractor-len", type=int, default=9)
    sp.add_argument("--emb-dim", type=int, default=None,
                    help="also write embeddings.txt with this dimension")

    sp = sub.add_parser("extract", help="dump chain or window representations")
    sp.add_argument("--conllu", required=True)
    sp.add_argument("--events", required=True)
    sp.add_argument("--mode", choices=("chain", "window"), required=True)
    sp.add_argument("--half-width", type=int, default=7)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("train", help="train one classifier, write a checkpoint")
    sp.add_argument("--model", choices=MODEL_TYPES, required=True)
    sp.add_argument("--repr", choices=("chain", "window", "tree"), required=True)
    sp.add_argument("--conllu", required=True)
    sp.add_argument("--events", required=True)
    sp.add_argument("--out", required=True, help="checkpoint path")
    _add_hyper_flags(sp)

    sp = sub.add_parser("eval", help="evaluate a checkpoint on labeled events")
    sp.add_argument("--model", required=True, help="checkpoint path")
    sp.add_argument("--conllu", required=True)
    sp.add_argument("--events", required=True)
    sp.add_argument("--out", default=None, help="optional JSON metrics report")

    sp = sub.add_parser("cv", help="k-fold cross-validation")
    sp.add_argument("--model", choices=MODEL_TYPES, required=True)
    sp.add_argument("--repr", choices=("chain", "window", "tree"), required=True)
    sp.add_argument("--conllu", required=True)
    sp.add_argument("--events", required=True)
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default=None, help="optional JSON metrics report")
    sp.add_argument("--save-models", default=None,
                    help="directory for per-fold checkpoints")
    _add_hyper_flags(sp)

    sp = sub.add_parser("saliency", help="write per-mention saliency heatmaps")
    sp.add_argument("--model", required=True, help="checkpoint path")
    sp.add_argument("--conllu", required=True)
    sp.add_argument("--events", required=True)
    sp.add_argument("--out", default=default_dir,
                    help=f"output directory (default: ${DATA_DIR_VAR})")
    sp.add_argument("--format", choices=("csv", "html"), default="html")
    sp.add_argument("--at-predicted", action="store_true",
                    help="take gradients at the predicted label even when gold exists")

    sp = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    sp.add_argument("--model", choices=MODEL_TYPES, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-seeds", type=int, default=1, help="check seeds seed..seed+n-1")
    sp.add_argument("--dim", type=int, default=6)
    sp.add_argument("--hidden", type=int, default=8)
    sp.add_argument("--length", type=int, default=None,
                    help="input length (default: 9 for cnn, 5 otherwise)")

    return parser


def _cmd_gen(parser, args) -> int:
    if args.out is None:
        parser.error(f"--out is required (or set ${DATA_DIR_VAR})")
    if args.n <= 0:
        parser.error("--n must be positive")
    weights = _parse_weights(parser, args.weights) if args.weights else None
    kwargs = {"n_sentences": args.n, "seed": args.seed, "distractor_len": args.distractor_len}
    if weights is not None:
        kwargs["label_weights"] = weights
    cfg = SynthConfig(**kwargs)
    sentences, mentions = generate_synthetic(cfg)
    os.makedirs(args.out, exist_ok=True)
    conllu_path = os.path.join(args.out, "corpus.conllu")
    events_path = os.path.join(args.out, "events.jsonl")
    outputs = [conllu_path, events_path]
    with open(conllu_path, "w", encoding="utf-8") as f:
        f.write(serialize_conllu(sentences))
    with open(events_path, "w", encoding="utf-8") as f:
        f.write(serialize_events(mentions))
    if args.emb_dim is not None:
        emb_path = os.path.join(args.out, "embeddings.txt")
        table = random_embeddings(synthetic_vocabulary(), args.emb_dim, args.seed)
        with open(emb_path, "w", encoding="utf-8") as f:
            f.write(write_embeddings(table))
        outputs.append(emb_path)
    config = {
        "n": args.n,
        "label_weights": list(cfg.label_weights),
        "distractor_len": cfg.distractor_len,
        "emb_dim": args.emb_dim,
    }
    _write_manifest(os.path.join(args.out, "manifest.json"),
                    "gen", args.seed, config, [], outputs)
    print(f"wrote {len(sentences)} sentences, {len(mentions)} mentions to {args.out}")
    return 0


def _cmd_extract(parser, args) -> int:
    corpus, mentions = _read_corpus(args.conllu, args.events)
    if args.half_width < 0:
        parser.error("--half-width must be >= 0")
    by_key = index_sentences(corpus)
    lines = []
    for m in mentions:
        sent = by_key[(m.doc_id, m.sent_id)]
        lines.append(representation_record(sent, m, args.mode, args.half_width))
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + ("\n" if lines else ""))
    config = {"mode": args.mode, "half_width": args.half_width}
    _write_manifest(args.out + ".manifest.json", "extract", None, config,
                    [args.conllu, args.events], [args.out])
    print(f"wrote {len(lines)} {args.mode} records to {args.out}")
    return 0


def _cmd_train(parser, args) -> int:
    config = _config_from_args(parser, args)
    corpus, mentions = _read_corpus(args.conllu, args.events)
    trained = train(config, corpus, mentions)
    save_trained(trained, args.out)
    inputs = [args.conllu, args.events]
    if args.embeddings:
        inputs.append(args.embeddings)
    _write_manifest(args.out + ".manifest.json", "train", config.seed,
                    config.to_dict(), inputs, [args.out])
    last = f", final mean loss {trained.history[-1]:.4f}" if trained.history else ""
    print(f"trained {config.model_type} on {len(mentions)} mentions, "
          f"{config.epochs} epochs{last}")
    print(f"checkpoint: {args.out}")
    return 0


def _cmd_eval(parser, args) -> int:
    trained = load_trained(args.model)
    corpus, mentions = _read_corpus(args.conllu, args.events)
    metrics = evaluate(trained, corpus, mentions)
    print(format_metrics_table([("test", metrics)]))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(metrics.to_dict(), f, sort_keys=True, indent=2)
            f.write("\n")
        _write_manifest(args.out + ".manifest.json", "eval", trained.config.seed,
                        trained.config.to_dict(),
                        [args.model, args.conllu, args.events], [args.out])
    return 0


def _cmd_cv(parser, args) -> int:
    config = _config_from_args(parser, args)
    if args.folds < 2:
        parser.error("--folds must be >= 2")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    corpus, mentions = _read_corpus(args.conllu, args.events)
    result = cross_validate(config, corpus, mentions, k=args.folds,
                            jobs=args.jobs, keep_models=bool(args.save_models))
    print(result.report_text())
    outputs = []
    if args.save_models:
        os.makedirs(args.save_models, exist_ok=True)
        for i, trained in enumerate(result.models):
            path = os.path.join(args.save_models, f"fold_{i}.ckpt")
            save_trained(trained, path)
            outputs.append(path)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(result.report_dict(), f, sort_keys=True, indent=2)
            f.write("\n")
        outputs.append(args.out)
        cv_config = dict(config.to_dict(), folds=args.folds)
        _write_manifest(args.out + ".manifest.json", "cv", config.seed, cv_config,
                        [args.conllu, args.events], outputs)
    return 0


def _cmd_saliency(parser, args) -> int:
    if args.out is None:
        parser.error(f"--out is required (or set ${DATA_DIR_VAR})")
    trained = load_trained(args.model)
    corpus, mentions = _read_corpus(args.conllu, args.events)
    by_key = index_sentences(corpus)
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    for m in mentions:
        sent = by_key[(m.doc_id, m.sent_id)]
        inst = encode_input(sent, m, trained.config.representation,
                            trained.table, trained.config.half_width)
        label = None if args.at_predicted else m.label
        smap = compute_saliency(trained.model, inst, label)
        path = os.path.join(args.out, heatmap_filename(m.doc_id, m.sent_id,
                                                       m.token_id, args.format))
        with open(path, "w", encoding="utf-8") as f:
            f.write(emit_heatmap(smap, args.format))
        outputs.append(path)
    config = dict(trained.config.to_dict(), format=args.format,
                  at_predicted=args.at_predicted)
    _write_manifest(os.path.join(args.out, "manifest.json"), "saliency",
                    trained.config.seed, config,
                    [args.model, args.conllu, args.events], outputs)
    print(f"wrote {len(outputs)} heatmaps to {args.out}")
    return 0


def _cmd_gradcheck(parser, args) -> int:
    if args.n_seeds < 1:
        parser.error("--n-seeds must be >= 1")
    worst = 0.0
    for s in range(args.seed, args.seed + args.n_seeds):
        err = gradcheck_model(args.model, s, dim=args.dim,
                              hidden=args.hidden, length=args.length)
        worst = max(worst, err)
        print(f"seed {s}: max relative error {err:.3e}")
    ok = worst < GRADCHECK_TOLERANCE
    print(f"worst: {worst:.3e} ({'PASS' if ok else 'FAIL'} at {GRADCHECK_TOLERANCE:.0e})")
    return 0 if ok else 1


_COMMANDS = {
    "gen": _cmd_gen,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "cv": _cmd_cv,
    "saliency": _cmd_saliency,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](parser, args)
    except DepchainError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
