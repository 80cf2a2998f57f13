"""Command-line pipeline: preprocess, featurize, train/predict both
subtasks, vote, merge, score and ablation reports.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import corpus, embio, features, scorer, si_model, si_post, tc_ensemble
from .errors import ConfigError, FormatError, NumericalError, PropdetError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _split_csv(value: str) -> list[str]:
    return [v for v in (part.strip() for part in value.split(",")) if v]


def _si_feature_config(spec: str) -> features.SIFeatureConfig:
    parts = set(_split_csv(spec)) if spec and spec != "none" else set()
    unknown = parts - {"swn", "al", "pos"}
    if unknown:
        raise UsageError(f"unknown SI features: {', '.join(sorted(unknown))}")
    return features.SIFeatureConfig(
        use_swn="swn" in parts, use_al="al" in parts, use_pos="pos" in parts
    )


_TC_FEATURE_KEYS = {
    "al": "use_al", "ne2": "use_ne2", "q": "use_q", "rep": "use_rep_count",
    "len": "use_seq_len", "america": "use_america", "reductio": "use_reductio",
    "emotion": "use_emotion",
}


def _tc_feature_config(spec: str) -> features.TCFeatureConfig:
    parts = _split_csv(spec) if spec and spec != "none" else []
    cfg = features.TCFeatureConfig(
        use_al=False, use_ne2=False, use_q=False, use_rep_count=False,
        use_seq_len=False, use_america=False, use_reductio=False, use_emotion=False,
    )
    for part in parts:
        if part not in _TC_FEATURE_KEYS:
            raise UsageError(f"unknown TC feature: {part}")
        setattr(cfg, _TC_FEATURE_KEYS[part], True)
    return cfg


def _load_lexicons(args, cfg):
    swn = features.load_sentiwordnet(args.swn) if cfg.use_swn else None
    arglex = features.load_arguing_lexicon(args.arglex) if cfg.use_al else None
    pos_ann = (
        features.load_pos_annotations(args.pos_annotations)
        if cfg.use_pos and getattr(args, "pos_annotations", None)
        else None
    )
    if cfg.use_swn and args.swn is None:
        raise UsageError("--features swn requires --swn")
    if cfg.use_al and args.arglex is None:
        raise UsageError("--features al requires --arglex")
    return swn, arglex, pos_ann


def _fragment_vectors(fragments, args, feat_cfg, lexicons, base_dim):
    """Per-fragment input matrices: base embedding rows plus feature blocks."""
    swn, arglex, pos_ann = lexicons
    table = None
    if args.embeddings:
        table = embio.read_token_embeddings(args.embeddings)
        if base_dim and table.dim != base_dim:
            raise ConfigError(f"sidecar dim {table.dim} != expected {base_dim}")
        base_dim = table.dim
    elif not args.hash_dim:
        raise UsageError("need --embeddings or --hash-dim")
    else:
        base_dim = args.hash_dim
    seqs = []
    for frag in fragments:
        rows = np.zeros((len(frag.tokens), base_dim))
        for k, tok in enumerate(frag.tokens):
            if table is not None:
                vec = table.rows.get((frag.article_id, frag.index, k))
                if vec is None:
                    if not args.allow_missing:
                        raise FormatError(
                            f"no embedding row for article {frag.article_id} "
                            f"fragment {frag.index} token {k}"
                        )
                    vec = embio.hash_embedding(tok.text, base_dim, args.hash_seed)
            else:
                vec = embio.hash_embedding(tok.text, base_dim, args.hash_seed)
            rows[k] = vec
        if feat_cfg.dim:
            feats = features.si_token_features(frag, feat_cfg, swn, arglex, pos_ann)
            rows = np.concatenate([rows, feats], axis=1)
        seqs.append(rows)
    return seqs, base_dim


def _article_fragments(articles, max_len):
    frags = {}
    for article in articles:
        frags[article.id] = corpus.split_fragments(article, max_len)
    return frags


def cmd_preprocess(args):
    articles = corpus.load_articles(args.articles)
    all_fragments = []
    for article in articles:
        all_fragments.extend(corpus.split_fragments(article, args.max_len))
    corpus.write_fragment_dump(args.out, all_fragments)
    print(f"wrote {len(all_fragments)} fragments to {args.out}")
    return 0


def cmd_featurize(args):
    articles = corpus.load_articles(args.articles)
    if args.mode == "si":
        cfg = _si_feature_config(args.features)
        if cfg.dim == 0:
            raise UsageError("no features enabled, nothing to write")
        lexicons = _load_lexicons(args, cfg)
        rows = {}
        for article in articles:
            for frag in corpus.split_fragments(article, args.max_len):
                mat = features.si_token_features(frag, cfg, *lexicons)
                for k in range(mat.shape[0]):
                    rows[(frag.article_id, frag.index, k)] = mat[k]
        embio.write_token_embeddings(args.out, embio.TokenEmbeddingTable(cfg.dim, rows))
        print(f"wrote {len(rows)} token feature rows to {args.out}")
    else:
        cfg = _tc_feature_config(args.features)
        if cfg.dim == 0:
            raise UsageError("no features enabled, nothing to write")
        arglex = features.load_arguing_lexicon(args.arglex) if cfg.use_al else None
        ne_ann = (
            features.load_ne_annotations(args.ne_annotations)
            if args.ne_annotations
            else None
        )
        emotion = features.load_emotion_file(args.emotion_file) if args.emotion_file else None
        instances = corpus.load_tc_instances(args.instances, labeled=args.labeled)
        by_id = {a.id: a for a in articles}
        rows = {}
        for inst in instances:
            vec = features.fragment_features(
                inst, by_id[inst.article_id], cfg, arglex, ne_ann, emotion
            )
            rows[inst.instance_id] = vec
        embio.write_seq_embeddings(args.out, embio.SeqEmbeddingTable(cfg.dim, rows))
        print(f"wrote {len(rows)} instance feature rows to {args.out}")
    return 0


def cmd_train_si(args):
    articles = corpus.load_articles(args.articles)
    gold = corpus.load_si_spans(args.spans)
    feat_cfg = _si_feature_config(args.features)
    lexicons = _load_lexicons(args, feat_cfg)
    fragments = []
    for article in articles:
        fragments.extend(corpus.split_fragments(article, args.max_len))
    seqs, base_dim = _fragment_vectors(fragments, args, feat_cfg, lexicons, 0)
    labels = [
        corpus.project_labels(frag, gold.get(frag.article_id, [])).labels
        for frag in fragments
    ]
    config = si_model.SIConfig(
        input_dim=base_dim + feat_cfg.dim,
        hidden=args.hidden,
        dropout=args.dropout,
        class_weight_o=args.weight_o,
        class_weight_i=args.weight_i,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    params = si_model.train(config, list(zip(seqs, labels)))
    extra = {
        "features": args.features, "max_len": str(args.max_len),
        "base_dim": str(base_dim), "hash_seed": str(args.hash_seed),
    }
    si_model.save_checkpoint(args.out, params, extra)
    print(f"saved checkpoint to {args.out}")
    return 0


def cmd_predict_si(args):
    params, extra = si_model.load_checkpoint(args.model)
    feature_spec = args.features if args.features is not None else extra.get("features", "none")
    if args.features is not None and args.features != extra.get("features", args.features):
        raise ConfigError(
            f"checkpoint was trained with --features {extra.get('features')}, "
            f"got --features {args.features}"
        )
    feat_cfg = _si_feature_config(feature_spec)
    lexicons = _load_lexicons(args, feat_cfg)
    max_len = args.max_len or int(extra.get("max_len", corpus.MAX_FRAGMENT_LEN))
    base_dim = int(extra.get("base_dim", 0)) or None
    if not args.embeddings and not args.hash_dim and base_dim:
        args.hash_dim = base_dim
        if args.hash_seed == 0:
            args.hash_seed = int(extra.get("hash_seed", 0))
    articles = corpus.load_articles(args.articles)
    fragments = []
    for article in articles:
        fragments.extend(corpus.split_fragments(article, max_len))
    seqs, base_dim = _fragment_vectors(fragments, args, feat_cfg, lexicons, base_dim or 0)
    if base_dim + feat_cfg.dim != params.config.input_dim:
        raise ConfigError(
            f"input dim {base_dim + feat_cfg.dim} != model dim {params.config.input_dim}"
        )
    predictions = si_model.predict(params, seqs)
    spans_by_article: dict[str, list[corpus.CharSpan]] = {a.id: [] for a in articles}
    for frag, labels in zip(fragments, predictions):
        seq = corpus.SILabelSequence(frag, tuple(labels))
        spans_by_article[frag.article_id].extend(corpus.labels_to_spans(seq))
    corpus.write_si_spans(args.out, spans_by_article)
    total = sum(len(v) for v in spans_by_article.values())
    print(f"wrote {total} spans to {args.out}")
    return 0


def cmd_vote(args):
    run_paths = _split_csv(args.runs)
    if not run_paths:
        raise UsageError("--runs needs at least one prediction file")
    articles = corpus.load_articles(args.articles)
    fragments = []
    for article in articles:
        fragments.extend(corpus.split_fragments(article, args.max_len))
    runs = []
    for path in run_paths:
        spans = corpus.load_si_spans(path)
        runs.append(
            [corpus.project_labels(f, spans.get(f.article_id, [])) for f in fragments]
        )
    voted = si_post.majority_vote(runs)
    spans_by_article: dict[str, list[corpus.CharSpan]] = {a.id: [] for a in articles}
    for seq in voted:
        spans_by_article[seq.fragment.article_id].extend(corpus.labels_to_spans(seq))
    corpus.write_si_spans(args.out, spans_by_article)
    print(f"voted {len(run_paths)} runs into {args.out}")
    return 0


def cmd_merge(args):
    spans = corpus.load_si_spans(args.pred)
    merged = si_post.merge_article_spans(spans, args.min_gap)
    corpus.write_si_spans(args.out, merged)
    total = sum(len(v) for v in merged.values())
    print(f"wrote {total} merged spans to {args.out}")
    return 0


def cmd_score_si(args):
    pred = corpus.load_si_spans(args.pred)
    gold = corpus.load_si_spans(args.gold)
    score = scorer.score_si(pred, gold)
    print(f"{score.precision}\t{score.recall}\t{score.f1}")
    return 0


def _tc_lexicons(args, cfg):
    arglex = None
    if cfg.use_al:
        if not args.arglex:
            raise UsageError("--features al requires --arglex")
        arglex = features.load_arguing_lexicon(args.arglex)
    ne_ann = features.load_ne_annotations(args.ne_annotations) if args.ne_annotations else None
    emotion = features.load_emotion_file(args.emotion_file) if args.emotion_file else None
    if cfg.use_emotion and emotion is None:
        raise UsageError("--features emotion requires --emotion-file")
    return arglex, ne_ann, emotion


def _tc_embeddings(args, instances, by_article, phase):
    if args.embeddings:
        table = embio.read_seq_embeddings(args.embeddings)
        rows = np.zeros((len(instances), table.dim))
        for i, inst in enumerate(instances):
            vec = table.rows.get(inst.instance_id)
            if vec is None:
                raise FormatError(f"no embedding row for instance {inst.instance_id}")
            rows[i] = vec
        return rows
    if not args.hash_dim:
        raise UsageError("need --embeddings or --hash-dim")
    rows = np.zeros((len(instances), args.hash_dim))
    for i, inst in enumerate(instances):
        text = tc_ensemble.rep_preprocess(inst, by_article[inst.article_id], phase)
        token_texts = [t.text for t in corpus.tokenize(text)]
        rows[i] = embio.seq_hash_embedding(token_texts, args.hash_dim, args.hash_seed)
    return rows


def _tc_features(instances, by_article, cfg, lexicons):
    arglex, ne_ann, emotion = lexicons
    rows = np.zeros((len(instances), cfg.dim))
    for i, inst in enumerate(instances):
        rows[i] = features.fragment_features(
            inst, by_article[inst.article_id], cfg, arglex, ne_ann, emotion
        )
    return rows


def cmd_train_tc(args):
    instances = corpus.load_tc_instances(args.instances, labeled=True)
    articles = corpus.load_articles(args.articles)
    by_article = {a.id: a for a in articles}
    cfg = _tc_feature_config(args.features)
    lexicons = _tc_lexicons(args, cfg)
    emb = _tc_embeddings(args, instances, by_article, phase="train")
    feats = _tc_features(instances, by_article, cfg, lexicons)
    labels = [inst.technique for inst in instances]
    config = tc_ensemble.TCConfig(
        embed_dim=emb.shape[1],
        feature_dim=cfg.dim,
        linear_lr=args.linear_lr,
        linear_epochs=args.linear_epochs,
        mlp_hidden=args.mlp_hidden,
        mlp_dropout=args.mlp_dropout,
        mlp_lr=args.mlp_lr,
        mlp_epochs=args.mlp_epochs,
        no_hidden=args.no_hidden,
        seed=args.seed,
    )
    base = tc_ensemble.train_base(emb, feats, labels, config)
    alt = tc_ensemble.train_alt(emb, labels, config)
    extra = {
        "features": args.features,
        "hash_dim": str(args.hash_dim),
        "hash_seed": str(args.hash_seed),
    }
    tc_ensemble.save_models(args.out, base, alt, extra)
    print(f"saved technique models to {args.out}")
    return 0


def cmd_predict_tc(args):
    base, alt, extra = tc_ensemble.load_models(args.model)
    feature_spec = args.features if args.features is not None else extra.get("features", "none")
    if args.features is not None and args.features != extra.get("features", args.features):
        raise ConfigError(
            f"models were trained with --features {extra.get('features')}, "
            f"got --features {args.features}"
        )
    cfg = _tc_feature_config(feature_spec)
    lexicons = _tc_lexicons(args, cfg)
    if not args.embeddings and not args.hash_dim:
        args.hash_dim = int(extra.get("hash_dim", 0))
        if args.hash_seed == 0:
            args.hash_seed = int(extra.get("hash_seed", 0))
    instances = corpus.load_tc_instances(args.instances, labeled=args.labeled)
    articles = corpus.load_articles(args.articles)
    by_article = {a.id: a for a in articles}
    emb = _tc_embeddings(args, instances, by_article, phase="infer")
    feats = _tc_features(instances, by_article, cfg, lexicons)
    ids = [inst.instance_id for inst in instances]
    base_preds = tc_ensemble.rank_predictions(
        base.predict_probs(emb, feats), corpus.TECHNIQUE_NAMES, ids, "base"
    )
    alt_preds = tc_ensemble.rank_predictions(
        alt.predict_probs(emb), tc_ensemble.ALT_CLASSES, ids, "alternative"
    )
    final = tc_ensemble.classify(instances, by_article, base_preds, alt_preds)
    corpus.write_tc_predictions(args.out, instances, final)
    print(f"wrote {len(final)} predictions to {args.out}")
    return 0


def cmd_score_tc(args):
    pred = corpus.load_tc_instances(args.pred, labeled=True)
    gold = corpus.load_tc_instances(args.gold, labeled=True)
    if len(pred) != len(gold):
        raise FormatError(f"{len(pred)} predictions vs {len(gold)} gold instances")
    for p, g in zip(pred, gold):
        if p.article_id != g.article_id or p.span != g.span:
            raise FormatError(
                f"instance {p.instance_id}: prediction and gold rows disagree "
                f"on article/span"
            )
    score = scorer.score_tc([p.technique for p in pred], [g.technique for g in gold])
    print(f"micro_f1\t{score.micro_f1}")
    for name in corpus.TECHNIQUE_NAMES:
        print(f"{name}\t{score.per_class[name]:.4f}")
    scorer.write_confusion(args.confusion, score)
    if args.report:
        scorer.write_per_class_report(args.report, score)
    return 0


_SI_ABLATION_ROWS = (
    ("embeddings", "none"),
    ("embeddings + swn", "swn"),
    ("embeddings + al", "al"),
    ("embeddings + swn + al", "swn,al"),
    ("embeddings + pos", "pos"),
    ("full (swn + al + pos)", "swn,al,pos"),
)

_TC_ABLATION_ROWS = (
    ("base (no features)", "none"),
    ("base + ne2", "ne2"),
    ("base + al", "al"),
    ("base + q", "q"),
    ("base + ne2 + al + q", "ne2,al,q"),
)


def cmd_ablate(args):
    if args.task == "si":
        return _ablate_si(args)
    return _ablate_tc(args)


def _ablate_si(args):
    import tempfile

    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        def run_config(label, feature_spec, vote, merge):
            pred_paths = []
            n_runs = args.vote_runs if vote else 1
            for r in range(n_runs):
                ckpt = tmp / f"model_{len(rows)}_{r}.ckpt"
                train_args = [
                    "train-si", "--articles", args.articles, "--spans", args.spans,
                    "--features", feature_spec, "--hidden", str(args.hidden),
                    "--epochs", str(args.epochs), "--lr", str(args.lr),
                    "--batch-size", str(args.batch_size),
                    "--max-len", str(args.max_len),
                    "--seed", str(args.seed + r), "--out", str(ckpt),
                ] + _passthrough(args)
                _invoke(train_args)
                pred = tmp / f"pred_{len(rows)}_{r}.tsv"
                _invoke([
                    "predict-si", "--model", str(ckpt), "--articles", args.dev_articles,
                    "--out", str(pred),
                ] + _passthrough(args))
                pred_paths.append(str(pred))
            if vote:
                voted = tmp / f"voted_{len(rows)}.tsv"
                _invoke([
                    "vote", "--articles", args.dev_articles,
                    "--runs", ",".join(pred_paths), "--max-len", str(args.max_len),
                    "--out", str(voted),
                ])
                final = voted
            else:
                final = Path(pred_paths[0])
            if merge:
                merged = tmp / f"merged_{len(rows)}.tsv"
                _invoke([
                    "merge", "--pred", str(final), "--min-gap", str(args.min_gap),
                    "--out", str(merged),
                ])
                final = merged
            score = scorer.score_si(
                corpus.load_si_spans(final), corpus.load_si_spans(args.dev_spans)
            )
            rows.append((label, score.f1, score.precision, score.recall))

        for label, spec in _SI_ABLATION_ROWS:
            run_config(label, spec, vote=False, merge=False)
        run_config("full + majority voting", "swn,al,pos", vote=True, merge=False)
        run_config("full + majority voting + span merging", "swn,al,pos", vote=True, merge=True)

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("configuration\tf1\tprecision\trecall\n")
        for label, f1, p, r in rows:
            fh.write(f"{label}\t{f1:.4f}\t{p:.4f}\t{r:.4f}\n")
    print(f"wrote ablation table to {args.out}")
    return 0


def _passthrough(args):
    extra = []
    if args.embeddings:
        extra += ["--embeddings", args.embeddings]
    if args.hash_dim:
        extra += ["--hash-dim", str(args.hash_dim)]
    if args.swn:
        extra += ["--swn", args.swn]
    if args.arglex:
        extra += ["--arglex", args.arglex]
    if args.pos_annotations:
        extra += ["--pos-annotations", args.pos_annotations]
    return extra


def _ablate_tc(args):
    import tempfile

    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        for i, (label, spec) in enumerate(_TC_ABLATION_ROWS):
            model = tmp / f"tc_{i}.ckpt"
            train = [
                "train-tc", "--instances", args.instances, "--articles", args.articles,
                "--features", spec, "--seed", str(args.seed), "--out", str(model),
                "--linear-epochs", str(args.linear_epochs),
                "--mlp-epochs", str(args.mlp_epochs),
            ]
            if args.hash_dim:
                train += ["--hash-dim", str(args.hash_dim)]
            if args.embeddings:
                train += ["--embeddings", args.embeddings]
            if args.arglex:
                train += ["--arglex", args.arglex]
            if args.ne_annotations:
                train += ["--ne-annotations", args.ne_annotations]
            _invoke(train)
            pred = tmp / f"tc_pred_{i}.tsv"
            predict = [
                "predict-tc", "--model", str(model), "--instances", args.dev_instances,
                "--articles", args.dev_articles, "--labeled", "--out", str(pred),
            ]
            if args.hash_dim:
                predict += ["--hash-dim", str(args.hash_dim)]
            if args.dev_embeddings:
                predict += ["--embeddings", args.dev_embeddings]
            if args.arglex:
                predict += ["--arglex", args.arglex]
            if args.ne_annotations:
                predict += ["--ne-annotations", args.ne_annotations]
            _invoke(predict)
            gold = corpus.load_tc_instances(args.dev_instances, labeled=True)
            got = corpus.load_tc_instances(pred, labeled=True)
            score = scorer.score_tc(
                [p.technique for p in got], [g.technique for g in gold]
            )
            rows.append((label, score.micro_f1))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("configuration\tmicro_f1\n")
        for label, f1 in rows:
            fh.write(f"{label}\t{f1:.4f}\n")
    print(f"wrote ablation table to {args.out}")
    return 0


def _invoke(argv):
    code = main(argv)
    if code != 0:
        raise PropdetError(f"subcommand failed with exit code {code}: {argv[0]}")


def _add_si_input_flags(p):
    p.add_argument("--embeddings", help="token embedding sidecar file")
    p.add_argument("--hash-dim", type=int, default=0,
                   help="use deterministic hash embeddings of this dimension")
    p.add_argument("--hash-seed", type=int, default=0)
    p.add_argument("--allow-missing", action="store_true",
                   help="substitute hash embeddings for missing sidecar rows")
    p.add_argument("--swn", help="SentiWordNet TSV path")
    p.add_argument("--arglex", help="arguing lexicon directory")
    p.add_argument("--pos-annotations", help="POS annotation TSV")


def build_parser() -> _Parser:
    parser = _Parser(prog="propdet", description=__doc__)
    parser.add_argument("--config", help="key=value defaults file (flags win)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("preprocess", help="dump fragment/token offsets")
    p.add_argument("--articles", required=True)
    p.add_argument("--max-len", type=int, default=corpus.MAX_FRAGMENT_LEN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("featurize", help="write feature sidecar files")
    p.add_argument("--mode", choices=("si", "tc"), required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--instances", help="TC instance TSV")
    p.add_argument("--labeled", action="store_true")
    p.add_argument("--features", default="swn,al,pos")
    p.add_argument("--max-len", type=int, default=corpus.MAX_FRAGMENT_LEN)
    p.add_argument("--swn")
    p.add_argument("--arglex")
    p.add_argument("--pos-annotations")
    p.add_argument("--ne-annotations")
    p.add_argument("--emotion-file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train-si", help="train the span tagger")
    p.add_argument("--articles", required=True)
    p.add_argument("--spans", required=True, help="gold span TSV")
    p.add_argument("--features", default="swn,al,pos",
                   help="comma list of swn,al,pos or 'none'")
    _add_si_input_flags(p)
    p.add_argument("--max-len", type=int, default=corpus.MAX_FRAGMENT_LEN)
    p.add_argument("--hidden", type=int, default=512)
    p.add_argument("--dropout", type=float, default=0.25)
    p.add_argument("--weight-o", type=float, default=1.0)
    p.add_argument("--weight-i", type=float, default=6.5)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_si)

    p = sub.add_parser("predict-si", help="predict spans with a trained tagger")
    p.add_argument("--model", required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--features", default=None)
    _add_si_input_flags(p)
    p.add_argument("--max-len", type=int, default=0,
                   help="0 = use the value recorded in the checkpoint")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict_si)

    p = sub.add_parser("vote", help="majority-vote prediction files")
    p.add_argument("--articles", required=True)
    p.add_argument("--runs", required=True, help="comma list of prediction TSVs")
    p.add_argument("--max-len", type=int, default=corpus.MAX_FRAGMENT_LEN)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("merge", help="merge nearby spans")
    p.add_argument("--pred", required=True)
    p.add_argument("--min-gap", type=int, default=25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("score-si", help="character-overlap P/R/F1")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.set_defaults(func=cmd_score_si)

    p = sub.add_parser("train-tc", help="train the technique classifier ensemble")
    p.add_argument("--instances", required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--features", default="ne2,al,q",
                   help="comma list of ne2,al,q,rep,len,america,reductio,emotion or 'none'")
    p.add_argument("--embeddings", help="sequence embedding sidecar file")
    p.add_argument("--hash-dim", type=int, default=0)
    p.add_argument("--hash-seed", type=int, default=0)
    p.add_argument("--arglex")
    p.add_argument("--ne-annotations")
    p.add_argument("--emotion-file")
    p.add_argument("--linear-lr", type=float, default=0.01)
    p.add_argument("--linear-epochs", type=int, default=50)
    p.add_argument("--mlp-hidden", type=int, default=128)
    p.add_argument("--mlp-dropout", type=float, default=0.25)
    p.add_argument("--mlp-lr", type=float, default=0.001)
    p.add_argument("--mlp-epochs", type=int, default=15)
    p.add_argument("--no-hidden", action="store_true",
                   help="single-layer perceptron variant (no hidden layer)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_tc)

    p = sub.add_parser("predict-tc", help="predict technique labels")
    p.add_argument("--model", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--articles", required=True)
    p.add_argument("--labeled", action="store_true",
                   help="instance file carries gold labels")
    p.add_argument("--features", default=None)
    p.add_argument("--embeddings")
    p.add_argument("--hash-dim", type=int, default=0)
    p.add_argument("--hash-seed", type=int, default=0)
    p.add_argument("--arglex")
    p.add_argument("--ne-annotations")
    p.add_argument("--emotion-file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict_tc)

    p = sub.add_parser("score-tc", help="micro F1 with per-class breakdown")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--confusion", default="confusion.tsv")
    p.add_argument("--report", help="optional per-class TSV path")
    p.set_defaults(func=cmd_score_tc)

    p = sub.add_parser("ablate", help="feature-toggle grid report")
    p.add_argument("--task", choices=("si", "tc"), required=True)
    p.add_argument("--articles")
    p.add_argument("--spans")
    p.add_argument("--dev-articles")
    p.add_argument("--dev-spans")
    p.add_argument("--instances")
    p.add_argument("--dev-instances")
    p.add_argument("--embeddings")
    p.add_argument("--dev-embeddings")
    p.add_argument("--hash-dim", type=int, default=0)
    p.add_argument("--swn")
    p.add_argument("--arglex")
    p.add_argument("--pos-annotations")
    p.add_argument("--ne-annotations")
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--max-len", type=int, default=corpus.MAX_FRAGMENT_LEN)
    p.add_argument("--min-gap", type=int, default=25)
    p.add_argument("--vote-runs", type=int, default=5)
    p.add_argument("--linear-epochs", type=int, default=50)
    p.add_argument("--mlp-epochs", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    return parser


def _apply_config_defaults(parser: _Parser, argv) -> None:
    if argv is None:
        argv = sys.argv[1:]
    path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if not path:
        return
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise FormatError(f"{path}: expected key=value, got {line!r}")
            values[key.strip().replace("-", "_")] = val.strip()
    subparsers = []
    actions = {}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                subparsers.append(sp)
                for sub_action in sp._actions:
                    actions.setdefault(sub_action.dest, sub_action)
        else:
            actions.setdefault(action.dest, action)
    coerced = {}
    for key, val in values.items():
        action = actions.get(key)
        if action is None:
            raise FormatError(f"{path}: unknown option {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            coerced[key] = val.lower() in ("1", "true", "yes")
        elif action.type is not None:
            coerced[key] = action.type(val)
        else:
            coerced[key] = val
    # subcommands parse into a fresh namespace, so defaults must be set on
    # every subparser that knows the option, not just the root parser
    parser.set_defaults(**{k: v for k, v in coerced.items() if k in {
        a.dest for a in parser._actions
    }})
    for sp in subparsers:
        known = {a.dest for a in sp._actions}
        relevant = {k: v for k, v in coerced.items() if k in known}
        if relevant:
            sp.set_defaults(**relevant)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args) or 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (PropdetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
