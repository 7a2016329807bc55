"""Command-line pipeline: train embeddings over a bulletin corpus, query
neighbours, extract line lists, evaluate against gold annotations, and emit
inference histograms.

Settings resolve in order: config file < LINELISTER_OUTPUT_DIR (output dir
only) < command-line flags. Exit status is 0 on success, 2 for user input or
validation problems, 1 for internal errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluation, extract, infer
from .embeddings import EmbeddingModel, TrainingParams, grow_seed, train

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "LINELISTER_OUTPUT_DIR"

_CONFIG_PATH_KEYS = (
    "parse_dir", "text_dir", "model", "gold", "auto", "linelist",
    "output_dir", "feature_specs", "negation_lexicon",
)
_CONFIG_INT_KEYS = ("k", "min_count", "workers")
_PARAM_FIELDS = {f.name for f in fields(TrainingParams)}


class UserInputError(ValueError):
    """Bad paths, malformed inputs, or invalid settings; exits with status 2."""


def _load_config(path) -> dict:
    values: dict = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UserInputError(f"{path}: line {line_no}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key in _PARAM_FIELDS:
            hint = TrainingParams.__dataclass_fields__[key].type
            values[key] = float(raw) if "float" in hint else int(raw)
        elif key in _CONFIG_INT_KEYS:
            values[key] = int(raw)
        elif key in _CONFIG_PATH_KEYS or key == "variant":
            values[key] = raw
        elif key == "deterministic":
            values[key] = raw.lower() in ("1", "true", "yes")
        else:
            raise UserInputError(f"{path}: line {line_no}: unknown key {key!r}")
    return values


def _setting(args, config: dict, key: str, default=None):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key == "output_dir" and os.environ.get(OUTPUT_DIR_ENV):
        return os.environ[OUTPUT_DIR_ENV]
    return config.get(key, default)


def _require_dir(path, what: str) -> Path:
    if path is None:
        raise UserInputError(f"missing {what}")
    path = Path(path)
    if not path.is_dir():
        raise UserInputError(f"{what} does not exist: {path}")
    return path


def _require_file(path, what: str) -> Path:
    if path is None:
        raise UserInputError(f"missing {what}")
    path = Path(path)
    if not path.is_file():
        raise UserInputError(f"{what} does not exist: {path}")
    return path


def _output_dir(args, config) -> Path:
    out = Path(_setting(args, config, "output_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_bulletins(args, config) -> list:
    parse_dir = _require_dir(_setting(args, config, "parse_dir"), "parse directory")
    text_dir = _setting(args, config, "text_dir")
    if text_dir is not None:
        text_dir = _require_dir(text_dir, "text directory")
    try:
        return corpus_mod.load_corpus_dir(parse_dir, text_dir)
    except (corpus_mod.ConlluParseError, corpus_mod.BulletinStructureError) as exc:
        raise UserInputError(str(exc)) from exc


def _training_params(args, config) -> TrainingParams:
    values = {k: v for k, v in config.items() if k in _PARAM_FIELDS}
    for name in _PARAM_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    variant = _setting(args, config, "variant", "sgns")
    try:
        if variant == "sghs":
            return TrainingParams.sghs_defaults(**values)
        return TrainingParams.sgns_defaults(**values)
    except ValueError as exc:
        raise UserInputError(str(exc)) from exc


def _corpus_digest(parse_dir: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(parse_dir.glob("*.conllu")):
        digest.update(path.name.encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


def cmd_train(args) -> int:
    config = _load_config(args.config) if args.config else {}
    variant = _setting(args, config, "variant", "sgns")
    if variant not in ("sgns", "sghs"):
        raise UserInputError(f"unknown variant {variant!r} (want sgns or sghs)")
    bulletins = _load_bulletins(args, config)
    min_count = _setting(args, config, "min_count", 5)
    params = _training_params(args, config)
    workers = _setting(args, config, "workers", 1)
    if _setting(args, config, "deterministic", False):
        workers = 1
    try:
        vocabulary = corpus_mod.build_vocabulary(bulletins, min_count=min_count)
    except corpus_mod.EmptyVocabularyError as exc:
        raise UserInputError(str(exc)) from exc
    sentences = list(corpus_mod.corpus_sentences(bulletins))
    model = train(sentences, vocabulary, params, variant=variant, workers=workers)

    out_dir = _output_dir(args, config)
    model_path = Path(_setting(args, config, "model", out_dir / "embeddings.txt"))
    model_path.parent.mkdir(parents=True, exist_ok=True)
    model.save(model_path)
    manifest = {
        "command": "train-embeddings",
        "variant": variant,
        "params": {name: getattr(params, name) for name in sorted(_PARAM_FIELDS)},
        "min_count": min_count,
        "workers": workers,
        "corpus_hash": _corpus_digest(Path(_setting(args, config, "parse_dir"))),
        "bulletins": len(bulletins),
        "sentences": len(sentences),
        "vocabulary_size": len(vocabulary),
        "model_file": model_path.name,
    }
    manifest_path = model_path.with_suffix(model_path.suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"trained {variant} model over {len(vocabulary)} words -> {model_path}")
    return 0


def cmd_neighbors(args) -> int:
    config = _load_config(args.config) if args.config else {}
    model_path = _require_file(_setting(args, config, "model"), "model file")
    model = EmbeddingModel.load(model_path)
    try:
        indicator_set = grow_seed(model, args.word, args.k)
    except Exception as exc:
        raise UserInputError(str(exc)) from exc
    from .embeddings import cosine  # local import keeps the CLI surface small

    seed_vec = model.vector(indicator_set.seed)
    print(indicator_set.seed)
    for word in indicator_set.indicators[1:]:
        print(f"  {word}\t{cosine(seed_vec, model.vector(word)):.4f}")
    return 0


def _feature_specs(args, config):
    path = _setting(args, config, "feature_specs")
    if path is None:
        return extract.DEFAULT_FEATURE_SPECS
    try:
        return extract.load_feature_specs(_require_file(path, "feature-spec file"))
    except ValueError as exc:
        raise UserInputError(str(exc)) from exc


def _negation_cues(args, config):
    path = _setting(args, config, "negation_lexicon")
    if path is None:
        return extract.load_negation_cues()
    return extract.load_negation_cues(_require_file(path, "negation lexicon"))


def cmd_extract(args) -> int:
    config = _load_config(args.config) if args.config else {}
    bulletins = _load_bulletins(args, config)
    model_path = _require_file(_setting(args, config, "model"), "model file")
    model = EmbeddingModel.load(model_path)
    k = _setting(args, config, "k", 5)
    if k < 0:
        raise UserInputError("K must be >= 0")
    extractor = extract.LineListExtractor.from_model(
        model,
        feature_specs=_feature_specs(args, config),
        k=k,
        negation_cues=_negation_cues(args, config),
        use_indirect_negation=not args.no_indirect_negation,
    )
    cases = []
    for bulletin in sorted(bulletins, key=lambda b: b.id):
        cases.extend(extractor.extract(bulletin))
    out_dir = _output_dir(args, config)
    extract.write_linelist_csv(cases, out_dir / "linelist.csv")
    extract.write_linelist_json(cases, out_dir / "linelist.json")
    print(f"extracted {len(cases)} cases from {len(bulletins)} bulletins -> {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args.config) if args.config else {}
    auto_path = _require_file(_setting(args, config, "auto"), "automated line-list CSV")
    gold_path = _require_file(_setting(args, config, "gold"), "gold line-list CSV")
    try:
        auto_cases = extract.read_linelist_csv(auto_path)
        gold_cases = evaluation.read_gold_csv(gold_path)
    except (extract.LineListSchemaError, ValueError) as exc:
        raise UserInputError(str(exc)) from exc
    report = evaluation.evaluate_corpus(auto_cases, gold_cases)
    out_dir = _output_dir(args, config)
    evaluation.write_report(report, out_dir)
    print(report.render_text(), end="")
    return 0


def cmd_infer(args) -> int:
    config = _load_config(args.config) if args.config else {}
    linelist_path = _require_file(_setting(args, config, "linelist"), "line-list CSV")
    try:
        cases = extract.read_linelist_csv(linelist_path)
    except extract.LineListSchemaError as exc:
        raise UserInputError(str(exc)) from exc
    out_dir = _output_dir(args, config)
    if (args.from_feature is None) != (args.to_feature is None):
        raise UserInputError("--from and --to must be given together")
    if args.from_feature is not None:
        try:
            histogram = infer.interval_distribution(cases, args.from_feature, args.to_feature)
        except ValueError as exc:
            raise UserInputError(str(exc)) from exc
        name = f"{args.from_feature}_to_{args.to_feature}.csv"
        infer.write_histogram_csv(histogram, out_dir / name)
        print(f"wrote {out_dir / name}")
        return 0
    ages, genders = infer.demographic_distribution(cases)
    infer.write_histogram_csv(ages, out_dir / "age_histogram.csv")
    gender_rows = ["gender,count"] + [
        f"{'null' if key is None else key},{genders[key]}" for key in ("male", "female", None)
    ]
    (out_dir / "gender_counts.csv").write_text("\n".join(gender_rows) + "\n")
    for from_feature, to_feature in (
        ("onset_date", "hospitalization_date"),
        ("hospitalization_date", "outcome_date"),
    ):
        histogram = infer.interval_distribution(cases, from_feature, to_feature)
        infer.write_histogram_csv(histogram, out_dir / f"{from_feature}_to_{to_feature}.csv")
    print(f"wrote inference histograms -> {out_dir}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value settings file; flags win")
    parser.add_argument("--output-dir", dest="output_dir",
                        help=f"output directory (env {OUTPUT_DIR_ENV} overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linelister",
        description="Extract epidemiological line lists from parsed outbreak bulletins.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train-embeddings", help="train skip-gram embeddings")
    p_train.add_argument("--parse-dir", dest="parse_dir", help="directory of CoNLL-U bulletins")
    p_train.add_argument("--text-dir", dest="text_dir", help="optional raw-text directory")
    p_train.add_argument("--model", help="output model file (word2vec text format)")
    p_train.add_argument("--variant", choices=("sgns", "sghs"))
    p_train.add_argument("--dim", dest="dimensionality", type=int, help="embedding dimensionality")
    p_train.add_argument("--window", type=int, help="context window radius")
    p_train.add_argument("--neg", dest="negative_samples", type=int,
                         help="negative samples per pair (sgns)")
    p_train.add_argument("--iter", dest="iterations", type=int, help="training iterations")
    p_train.add_argument("--lr", dest="learning_rate", type=float, help="initial learning rate")
    p_train.add_argument("--subsample", type=float, help="frequent-word subsampling threshold")
    p_train.add_argument("--seed", dest="rng_seed", type=int, help="random seed")
    p_train.add_argument("--min-count", dest="min_count", type=int,
                         help="vocabulary count threshold (default 5)")
    p_train.add_argument("--workers", type=int, help="training threads (>1 is non-deterministic)")
    p_train.add_argument("--deterministic", action="store_const", const=True, default=None,
                         help="force single-threaded, reproducible training")
    _add_common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_nb = sub.add_parser("neighbors", help="print nearest neighbours of a word")
    p_nb.add_argument("word")
    p_nb.add_argument("--model", help="model file")
    p_nb.add_argument("--k", type=int, default=5)
    _add_common(p_nb)
    p_nb.set_defaults(func=cmd_neighbors)

    p_ex = sub.add_parser("extract", help="extract a line list from bulletins")
    p_ex.add_argument("--parse-dir", dest="parse_dir", help="directory of CoNLL-U bulletins")
    p_ex.add_argument("--text-dir", dest="text_dir", help="optional raw-text directory")
    p_ex.add_argument("--model", help="embedding model file")
    p_ex.add_argument("--K", dest="k", type=int,
                      help="neighbours per seed; 0 = seed-only baseline")
    p_ex.add_argument("--feature-specs", dest="feature_specs",
                      help="feature=seed_word override file")
    p_ex.add_argument("--negation-lexicon", dest="negation_lexicon",
                      help="negation cue file (one cue per line)")
    p_ex.add_argument("--no-indirect-negation", action="store_true",
                      help="direct negation only for clinical features")
    _add_common(p_ex)
    p_ex.set_defaults(func=cmd_extract)

    p_ev = sub.add_parser("evaluate", help="score a line list against gold annotations")
    p_ev.add_argument("--auto", help="automated line-list CSV")
    p_ev.add_argument("--gold", help="gold line-list CSV")
    _add_common(p_ev)
    p_ev.set_defaults(func=cmd_evaluate)

    p_in = sub.add_parser("infer", help="emit demographic and interval histograms")
    p_in.add_argument("--linelist", help="line-list CSV")
    p_in.add_argument("--from", dest="from_feature", help="interval start date feature")
    p_in.add_argument("--to", dest="to_feature", help="interval end date feature")
    _add_common(p_in)
    p_in.set_defaults(func=cmd_infer)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UserInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive catch-all
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
