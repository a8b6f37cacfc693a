"""Command-line interface: prior construction, training, evaluation, export, synthesis.

Every command takes an explicit --seed where randomness is involved and writes
its outputs (plus a run_config.json echo) into --out, so a run is reproducible
byte-for-byte from its flags alone. A JSON file passed via --config supplies
defaults that individual flags override.

Exit codes: 0 success, 2 configuration or validation error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import eval as eval_mod
from . import priors as priors_mod
from . import sampler as sampler_mod
from .errors import ConfigError, FormatError, MutoError


def _require(args: argparse.Namespace, *fields: str) -> None:
    missing = [f for f in fields if getattr(args, f, None) is None]
    if missing:
        flags = ", ".join("--" + f.replace("_", "-") for f in missing)
        raise ConfigError(f"missing required option(s): {flags}")


def _write_config_echo(out_dir: Path, command: str, args: argparse.Namespace) -> None:
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    echo["command"] = command
    (out_dir / "run_config.json").write_text(
        json.dumps(echo, sort_keys=True, indent=2, default=str) + "\n", encoding="utf-8"
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus(args) -> corpus_mod.Corpus:
    stopwords = None
    if getattr(args, "stopwords", None):
        stopwords = set(Path(args.stopwords).read_text(encoding="utf-8").split())
    return corpus_mod.load_corpus(
        args.corpus, fmt=args.format, max_terms=args.max_terms, stopwords=stopwords
    )


def _build_prior(args, corpus: corpus_mod.Corpus) -> priors_mod.PriorMatrix:
    source = args.prior_source
    vs, vt = corpus.vocab_s, corpus.vocab_t
    if source == "edit":
        return priors_mod.edit_distance_prior(vs, vt, max_distance=args.max_distance)
    if source == "lexicon":
        if not args.lexicon:
            raise ConfigError("prior source 'lexicon' requires --lexicon")
        return priors_mod.dictionary_prior(priors_mod.load_lexicon(args.lexicon), vs, vt)
    if source == "pmi":
        if not args.aligned:
            raise ConfigError("prior source 'pmi' requires --aligned")
        pairs = priors_mod.load_aligned_pairs(args.aligned)
        return priors_mod.pmi_prior(pairs, vs, vt, epsilon=args.epsilon, transform=args.pmi_transform)
    if source == "file":
        if not args.prior_file:
            raise ConfigError("prior source 'file' requires --prior-file")
        return priors_mod.load_prior(args.prior_file, vs, vt)
    if source == "none":
        return priors_mod.uniform_prior()
    raise ConfigError(f"unknown prior source {source!r}")


def cmd_prior(args) -> int:
    _require(args, "corpus", "prior_source", "out")
    out = _out_dir(args)
    corpus = _load_corpus(args)
    prior = _build_prior(args, corpus)
    path = out / "prior.tsv"
    priors_mod.save_prior(prior, path, corpus.vocab_s, corpus.vocab_t)
    _write_config_echo(out, "prior", args)
    weights = np.array(list(prior.entries.values())) if prior.entries else np.zeros(0)
    print(f"wrote {path} ({len(prior)} edges, default_weight={prior.default_weight})")
    if weights.size:
        print(
            f"stored weights: min={weights.min():.6g} mean={weights.mean():.6g} max={weights.max():.6g}"
        )
    return 0


def _em_config(args) -> sampler_mod.EMConfig:
    fractions = None
    if args.schedule:
        try:
            fractions = tuple(float(x) for x in args.schedule.split(","))
        except ValueError:
            raise ConfigError(f"bad --schedule {args.schedule!r}: expected comma-separated floats")
    return sampler_mod.EMConfig(
        seed=args.seed,
        m_steps=args.m_steps,
        gibbs_iters=args.gibbs_iters,
        schedule_fractions=fractions,
        cap=args.cap,
        prior_only=args.prior_only,
        init_min_length=args.init_min_length,
        per_source_cap=args.per_source_cap,
        audit=args.audit,
        average_final_estimates=args.average_final_estimates,
    )


def cmd_train(args) -> int:
    _require(args, "corpus", "topics", "seed", "out")
    out = _out_dir(args)
    corpus = _load_corpus(args)
    hyper = sampler_mod.Hyperparams(k=args.topics, alpha=args.alpha, lam=args.lam, gamma=args.gamma)
    config = _em_config(args)
    if args.baseline:
        model = sampler_mod.run_lda(corpus, args.baseline, hyper, config)
    else:
        prior = _build_prior(args, corpus)
        model = sampler_mod.run_muto(corpus, prior, hyper, config, artifacts_dir=out)
    model_path = out / "model.json"
    sampler_mod.save_model(model, model_path)
    with open(out / "trace.csv", "w", encoding="utf-8") as fh:
        fh.write("m_step,target_size,matching_size,objective\n")
        for row in model.em_trace:
            fh.write(
                f"{row['m_step']},{row['target_size']},{row['matching_size']},{row['objective']!r}\n"
            )
    _write_config_echo(out, "train", args)
    print(f"wrote {model_path}")
    if model.final_matching is not None:
        print(f"final matching: {len(model.final_matching)} pairs")
    return 0


def cmd_eval(args) -> int:
    _require(args, "model", "out")
    out = _out_dir(args)
    if not args.lexicon and not args.gold:
        raise ConfigError("eval needs --lexicon and/or --gold")
    model = sampler_mod.load_model(args.model)
    lexicon = priors_mod.load_lexicon(args.lexicon) if args.lexicon else None
    gold = corpus_mod.load_gold_pairs(args.gold) if args.gold else None
    echo = {
        "model": str(args.model),
        "lexicon": str(args.lexicon) if args.lexicon else None,
        "gold": str(args.gold) if args.gold else None,
        "model_config": model.config,
    }
    report = eval_mod.evaluate(model, lexicon=lexicon, gold_pairs=gold, config=echo)
    report.save(out / "report.json")
    if report.doc_match_per_doc is not None:
        with open(out / "doc_match.csv", "w", encoding="utf-8") as fh:
            fh.write("doc_id,proportion\n")
            for doc_id in sorted(report.doc_match_per_doc):
                fh.write(f"{doc_id},{report.doc_match_per_doc[doc_id]!r}\n")
    _write_config_echo(out, "eval", args)
    if report.translation_accuracy_all is not None:
        print(
            "translation accuracy: "
            f"all={report.translation_accuracy_all:.4f} covered={report.translation_accuracy_covered:.4f}"
        )
    if report.doc_match_mean is not None:
        print(f"document match mean proportion: {report.doc_match_mean:.4f}")
    return 0


def cmd_topics(args) -> int:
    _require(args, "model", "out")
    out = _out_dir(args)
    model = sampler_mod.load_model(args.model)
    table = eval_mod.export_topics(model, top_n=args.top_n)
    (out / "topics.tsv").write_text(table.to_tsv(), encoding="utf-8")
    (out / "topics.txt").write_text(table.to_text(), encoding="utf-8")
    _write_config_echo(out, "topics", args)
    print(table.to_text(), end="")
    return 0


def cmd_synth(args) -> int:
    _require(args, "topics", "seed", "out")
    out = _out_dir(args)
    hyper = sampler_mod.Hyperparams(k=args.topics, alpha=args.alpha, lam=args.lam, gamma=args.gamma)
    matching = corpus_mod.planted_matching(args.pairs)
    corpus, truth = corpus_mod.generate_synthetic_corpus(
        k=args.topics,
        true_matching=matching,
        vocab_sizes=(args.vocab_size_s, args.vocab_size_t),
        n_docs_per_lang=args.docs_per_lang,
        doc_len=args.doc_len,
        hyper=hyper,
        seed=args.seed,
        n_identical_terms=args.identical,
    )
    corpus_mod.save_corpus(corpus, out / "corpus.jsonl")
    corpus_mod.save_gold_pairs(corpus.gold_pairs, out / "gold_pairs.tsv")
    truth.save(out / "ground_truth.json", corpus)
    lexicon = priors_mod.Lexicon({s: {t} for s, t in truth.matching_term_pairs(corpus)})
    priors_mod.save_lexicon(lexicon, out / "lexicon.tsv")
    _write_config_echo(out, "synth", args)
    print(
        f"wrote {out / 'corpus.jsonl'} ({len(corpus.documents)} docs, "
        f"|V_s|={len(corpus.vocab_s)}, |V_t|={len(corpus.vocab_t)}, {len(matching)} planted pairs)"
    )
    return 0


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", default=None, help="corpus file (jsonl or tsv)")
    p.add_argument("--format", choices=["jsonl", "tsv"], default=None, help="corpus format (default: by suffix)")
    p.add_argument("--max-terms", type=int, default=2500, help="vocabulary size cap per language")
    p.add_argument("--stopwords", default=None, help="optional whitespace-separated stopword file")


def _add_prior_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument(
        "--prior-source",
        choices=["edit", "lexicon", "pmi", "file", "none"],
        default=None if required else "none",
        help="how to build the matching prior",
    )
    p.add_argument("--lexicon", default=None, help="lexicon TSV (source<TAB>target)")
    p.add_argument("--aligned", default=None, help="aligned sentence pairs TSV for the PMI prior")
    p.add_argument("--prior-file", default=None, help="precomputed prior TSV (e.g. external latent-space weights)")
    p.add_argument("--max-distance", type=int, default=None, help="edit-distance cutoff")
    p.add_argument("--epsilon", type=float, default=1e-4, help="PMI weight floor")
    p.add_argument("--pmi-transform", choices=["ratio", "positive"], default="ratio")


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topics", type=int, default=None, help="number of topics K")
    p.add_argument("--alpha", type=float, default=50.0, help="total document-topic concentration")
    p.add_argument("--lam", type=float, default=1.0, help="total topic-pair concentration")
    p.add_argument("--gamma", type=float, default=1.0, help="total background concentration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="muto",
        description="Multilingual topic modelling with a learned vocabulary matching.",
    )
    parser.add_argument("--config", default=None, help="JSON file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prior", help="build and save a matching prior")
    _add_corpus_flags(p)
    _add_prior_flags(p, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_prior)

    p = sub.add_parser("train", help="train the full model or an LDA baseline")
    _add_corpus_flags(p)
    _add_prior_flags(p, required=False)
    _add_hyper_flags(p)
    p.add_argument("--baseline", choices=["union", "intersection"], default=None, help="train an LDA baseline instead")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--m-steps", type=int, default=3)
    p.add_argument("--gibbs-iters", type=int, default=250)
    p.add_argument("--schedule", default=None, help="comma-separated matching size fractions, one per M-step")
    p.add_argument("--cap", type=int, default=None, help="matching size cap (default: candidate pool size)")
    p.add_argument("--per-source-cap", type=int, default=None, help="keep only this many candidate edges per source term")
    p.add_argument("--init-min-length", type=int, default=6, help="identical-string seed matching length threshold")
    p.add_argument("--prior-only", action="store_true", help="select matchings from the prior weights alone")
    p.add_argument("--audit", action="store_true", help="verify count consistency after every sweep")
    p.add_argument("--average-final-estimates", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a trained model")
    p.add_argument("--model", default=None, help="model.json from train")
    p.add_argument("--lexicon", default=None, help="reference lexicon for translation accuracy")
    p.add_argument("--gold", default=None, help="gold document pairs for retrieval scoring")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("topics", help="export top topic pairs")
    p.add_argument("--model", default=None)
    p.add_argument("--top-n", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("synth", help="generate a synthetic bilingual corpus with ground truth")
    _add_hyper_flags(p)
    p.add_argument("--pairs", type=int, default=50, help="planted matching size")
    p.add_argument("--identical", type=int, default=5, help="planted pairs sharing an identical string")
    # keep the vocabulary much larger than the planted structure: the EM
    # dynamics degenerate when the matching can absorb most of the corpus
    p.add_argument("--vocab-size-s", type=int, default=500)
    p.add_argument("--vocab-size-t", type=int, default=500)
    p.add_argument("--docs-per-lang", type=int, default=200)
    p.add_argument("--doc-len", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Pull --config out of argv and install its contents as parser defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise ConfigError("--config needs a file path")
    path = argv[idx + 1]
    try:
        defaults = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    if not isinstance(defaults, dict):
        raise ConfigError("config file must hold a JSON object of flag defaults")
    known_anywhere: set[str] = set()
    for sub_parser in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        known = {a.dest for a in sub_parser._actions}
        known_anywhere |= known
        sub_parser.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    unknown = set(defaults) - known_anywhere
    if unknown:
        raise ConfigError(f"config file has unknown keys: {sorted(unknown)}")
    return argv[:idx] + argv[idx + 2 :]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, FormatError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except MutoError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
