"""Command-line interface for the full toolkit."""

import json
import logging
from pathlib import Path

import click

from . import embeddings, export, features, graph, ingest, lstm, metrics
from . import pipeline as pipeline_mod
from . import svm as svm_mod
from . import textprep
from .util import read_jsonl, write_json, write_jsonl


def _parse_ratios(text):
    parts = tuple(float(x) for x in text.split(","))
    if len(parts) != 3:
        raise click.BadParameter("expected three comma-separated ratios")
    return parts


@click.group()
@click.option("--verbose", is_flag=True, help="Enable INFO logging.")
def main(verbose):
    """Build question-relatedness datasets and train the two classifiers."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command("ingest")
@click.option("--posts", required=True, type=click.Path(exists=True))
@click.option("--links", required=True, type=click.Path(exists=True))
@click.option("--tag", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--duplicate-code", default=3, show_default=True,
              help="Link kind code treated as duplicate.")
@click.option("--direct-code", default=1, show_default=True,
              help="Link kind code treated as direct.")
def ingest_cmd(posts, links, tag, out_dir, duplicate_code, direct_code):
    """Parse a dump into kus.jsonl / links.jsonl / manifest.json."""
    kind_map = {duplicate_code: "duplicate", direct_code: "direct"}
    units, link_records, manifest = ingest.run_ingest(
        posts, links, tag, out_dir, kind_map
    )
    click.echo(f"{len(units)} knowledge units, {len(link_records)} links "
               f"({manifest['rows_skipped']} rows skipped)")


@main.command("pairs")
@click.option("--net", "net_dir", required=True, type=click.Path(exists=True),
              help="Ingest output directory (kus.jsonl + links.jsonl).")
@click.option("--distance-min", default=2, show_default=True)
@click.option("--distance-max", default=5, show_default=True)
@click.option("--isolated-count", default=None, type=int,
              help="Default: one per indirect pair.")
@click.option("--seed", default=0, show_default=True)
@click.option("--ratios", default="0.6,0.1,0.3", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def pairs_cmd(net_dir, distance_min, distance_max, isolated_count, seed, ratios,
              out_dir):
    """Extract four-class pairs and write balanced train/dev/test splits."""
    split, manifest = pipeline_mod.stage_pairs(
        net_dir, out_dir, (distance_min, distance_max), isolated_count,
        _parse_ratios(ratios), seed,
    )
    click.echo(json.dumps(manifest["counts"], indent=2))


@main.command("clean")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--keep-stopwords", is_flag=True)
@click.option("--stopword-list", type=click.Path(exists=True))
def clean_cmd(in_path, out_path, keep_stopwords, stopword_list):
    """Clean ingested units into token lists plus code/text fields."""
    if keep_stopwords:
        stopwords = frozenset()
    elif stopword_list:
        stopwords = textprep.load_stopwords(stopword_list)
    else:
        stopwords = None
    manifest = pipeline_mod.stage_clean(
        in_path, out_path, stopwords,
        manifest_path=str(Path(out_path).with_suffix(".manifest.json")),
    )
    click.echo(f"cleaned {manifest['units']} units")


@main.group("embed")
def embed_group():
    """Word vector training and relation matrices."""


@embed_group.command("train")
@click.option("--corpus", required=True, type=click.Path(exists=True),
              help="clean.jsonl; each unit's parts form one document.")
@click.option("--dim", default=200, show_default=True)
@click.option("--min-count", default=20, show_default=True)
@click.option("--window", default=5, show_default=True)
@click.option("--negatives", default=5, show_default=True)
@click.option("--epochs", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def embed_train_cmd(corpus, dim, min_count, window, negatives, epochs, seed,
                    out_path):
    """Train corpus-specific skip-gram vectors (deterministic, single worker)."""
    clean_by_id = pipeline_mod.load_clean(corpus)
    docs = [
        ku.title_tokens + ku.body_tokens + ku.answers_tokens
        for _, ku in sorted(clean_by_id.items())
    ]
    table = embeddings.train_skipgram(
        docs, dim=dim, min_count=min_count, window=window,
        negatives=negatives, epochs=epochs, seed=seed,
    )
    embeddings.save_vectors(table, out_path)
    write_json(Path(out_path).with_suffix(".manifest.json"), {
        "dim": dim, "min_count": min_count, "window": window,
        "negatives": negatives, "epochs": epochs, "seed": seed,
        "terms": len(table.vocabulary),
    })
    click.echo(f"{len(table.vocabulary)} vectors of dim {dim} -> {out_path}")


@embed_group.command("relmat")
@click.option("--vectors", type=click.Path(exists=True),
              help="Vector file for an embedding-based matrix.")
@click.option("--levenshtein", "use_lev", is_flag=True,
              help="Build the edit-distance matrix instead.")
@click.option("--threshold", default=0.2, show_default=True)
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True),
              help="Text file, one term per line.")
@click.option("--out", "out_path", required=True, type=click.Path())
def embed_relmat_cmd(vectors, use_lev, threshold, vocab_path, out_path):
    """Build and persist a sparse term relation matrix."""
    if bool(vectors) == use_lev:
        raise click.UsageError("choose exactly one of --vectors / --levenshtein")
    vocab = [line.strip() for line in Path(vocab_path).read_text(
        encoding="utf-8").splitlines() if line.strip()]
    if use_lev:
        matrix = embeddings.build_relation_matrix_levenshtein(vocab, threshold)
        kind = "levenshtein"
    else:
        table = embeddings.load_vectors(vectors)
        matrix = embeddings.build_relation_matrix_embedding(table, vocab, threshold)
        kind = "embedding"
    embeddings.save_relation_matrix(matrix, out_path, vocab, threshold, kind)
    click.echo(f"{len(matrix)} off-diagonal entries -> {out_path}")


@main.command("vocab")
@click.option("--clean", "clean_path", required=True, type=click.Path(exists=True))
@click.option("--pairs", "pairs_paths", required=True,
              help="Comma-separated pair files whose KUs define the vocabulary.")
@click.option("--out", "out_path", required=True, type=click.Path())
def vocab_cmd(clean_path, pairs_paths, out_path):
    """Union vocabulary of the units referenced by the given pair files."""
    clean_by_id = pipeline_mod.load_clean(clean_path)
    pair_lists = [pipeline_mod.load_pairs(p) for p in pairs_paths.split(",")]
    terms = features.union_vocabulary(clean_by_id, pair_lists)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text("\n".join(terms) + "\n", encoding="utf-8")
    click.echo(f"{len(terms)} terms -> {out_path}")


@main.command("tfidf")
@click.option("--clean", "clean_path", required=True, type=click.Path(exists=True))
@click.option("--pairs", "pairs_paths", required=True,
              help="Comma-separated pair files (train and dev only).")
@click.option("--out", "out_path", required=True, type=click.Path())
def tfidf_cmd(clean_path, pairs_paths, out_path):
    """Fit per-part TF-IDF document frequencies on train+dev units."""
    clean_by_id = pipeline_mod.load_clean(clean_path)
    pair_lists = [pipeline_mod.load_pairs(p) for p in pairs_paths.split(",")]
    models = features.fit_tfidf_models(clean_by_id, pair_lists)
    features.save_tfidf_models(models, out_path)
    click.echo(f"TF-IDF models for {list(models)} -> {out_path}")


@main.command("features")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--clean", "clean_path", required=True, type=click.Path(exists=True))
@click.option("--tfidf", "tfidf_path", required=True, type=click.Path(exists=True))
@click.option("--relmat-corpus", type=click.Path(exists=True))
@click.option("--relmat-ext", type=click.Path(exists=True))
@click.option("--relmat-lev", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def features_cmd(pairs_path, clean_path, tfidf_path, relmat_corpus, relmat_ext,
                 relmat_lev, out_path):
    """Compute the per-pair feature records (named dimensions, JSONL).

    A missing relation matrix degrades that soft-cosine to the plain cosine.
    """
    clean_by_id = pipeline_mod.load_clean(clean_path)
    pairs = pipeline_mod.load_pairs(pairs_path)
    tfidf = features.load_tfidf_models(tfidf_path)

    def load_matrix(path):
        if not path:
            return embeddings.RelationMatrix()
        return embeddings.load_relation_matrix(path)[0]

    models = features.FeatureModels(
        tfidf=tfidf,
        rel_corpus=load_matrix(relmat_corpus),
        rel_external=load_matrix(relmat_ext),
        rel_levenshtein=load_matrix(relmat_lev),
    )
    vectors = pipeline_mod.extract_split_features(pairs, clean_by_id, models)
    write_jsonl(out_path, pipeline_mod.feature_rows(vectors))
    click.echo(f"{len(vectors)} feature records -> {out_path}")


@main.group("svm")
def svm_group():
    """Linear SVM training, prediction and ablations."""


def _load_feature_dataset(path, selected):
    rows = list(read_jsonl(path))
    names = None
    if selected:
        names = features.feature_names(features.PARTS, features.SELECTED_FAMILIES)
    return pipeline_mod.dataset_from_rows(rows, names)


@svm_group.command("train")
@click.option("--features", "feat_path", required=True, type=click.Path(exists=True))
@click.option("--reg", default=1e-4, show_default=True)
@click.option("--epochs", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--selected/--full", default=True, show_default=True,
              help="Train on the selected similarity features or all of them.")
@click.option("--out", "out_path", required=True, type=click.Path())
def svm_train_cmd(feat_path, reg, epochs, seed, selected, out_path):
    dataset = _load_feature_dataset(feat_path, selected)
    model = svm_mod.train_linear_svm(
        dataset.matrix, dataset.labels, reg, epochs, seed, dataset.names
    )
    svm_mod.save_model(model, out_path)
    click.echo(f"trained on {dataset.matrix.shape[0]} pairs -> {out_path}")


@svm_group.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--features", "feat_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def svm_predict_cmd(model_path, feat_path, out_path):
    model = svm_mod.load_model(model_path)
    rows = list(read_jsonl(feat_path))
    dataset = pipeline_mod.dataset_from_rows(rows, model.feature_names)
    preds = svm_mod.predict(model, dataset.matrix)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text("\n".join(preds) + "\n", encoding="utf-8")
    click.echo(f"{len(preds)} predictions -> {out_path}")


@svm_group.command("ablate-features")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--dev", "dev_path", required=True, type=click.Path(exists=True))
@click.option("--reg", default=1e-4, show_default=True)
@click.option("--epochs", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
def svm_ablate_features_cmd(train_path, dev_path, reg, epochs, seed):
    """Dev micro-F per single feature family."""
    train = _load_feature_dataset(train_path, selected=False)
    dev = _load_feature_dataset(dev_path, selected=False)
    table = svm_mod.feature_ablation(train, dev, reg, epochs, seed)
    for family, score in table.items():
        click.echo(f"{family}\t{score:.4f}")


@svm_group.command("ablate-parts")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--dev", "dev_path", required=True, type=click.Path(exists=True))
@click.option("--reg", default=1e-4, show_default=True)
@click.option("--epochs", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
def svm_ablate_parts_cmd(train_path, dev_path, reg, epochs, seed):
    """Micro metrics per text part (and the union of all parts)."""
    train = _load_feature_dataset(train_path, selected=False)
    dev = _load_feature_dataset(dev_path, selected=False)
    table = svm_mod.text_part_ablation(train, dev, reg=reg, epochs=epochs, seed=seed)
    for part, row in table.items():
        click.echo(f"{part}\tF={row['micro_f']:.4f}\tP={row['precision']:.4f}"
                   f"\tR={row['recall']:.4f}")


@main.group("bilstm")
def bilstm_group():
    """Shared-encoder BiLSTM training, prediction, gradient checking."""


def _load_examples(data_dir, split, clean_by_id, vocab, lengths):
    pairs = pipeline_mod.load_pairs(Path(data_dir) / f"{split}.pairs.jsonl")
    return pairs, lstm.make_examples(pairs, clean_by_id, vocab, lengths)


@bilstm_group.command("train")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True),
              help="Directory with {train,dev,test}.pairs.jsonl and clean.jsonl.")
@click.option("--vectors", type=click.Path(exists=True),
              help="Optional pretrained vectors for embedding init.")
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=25, show_default=True)
@click.option("--lr", default=0.001, show_default=True)
@click.option("--batch", default=64, show_default=True)
@click.option("--emb-dim", default=300, show_default=True)
@click.option("--hidden", default=128, show_default=True)
@click.option("--lengths", default="10,60,180", show_default=True)
@click.option("--min-freq", default=2, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def bilstm_train_cmd(data_dir, vectors, seed, epochs, lr, batch, emb_dim, hidden,
                     lengths, min_freq, out_path):
    clean_by_id = pipeline_mod.load_clean(Path(data_dir) / "clean.jsonl")
    lengths = tuple(int(x) for x in lengths.split(","))
    train_pairs, _ = _load_examples(data_dir, "train", clean_by_id, None, lengths)
    docs = []
    for p in train_pairs:
        for ku in (p.ku1, p.ku2):
            docs.append(clean_by_id[ku].title_tokens
                        + clean_by_id[ku].body_tokens
                        + clean_by_id[ku].answers_tokens)
    vocab = lstm.build_vocab(docs, min_freq)
    pretrained = embeddings.load_vectors(vectors) if vectors else None
    if pretrained is not None:
        emb_dim = pretrained.dim
    config = lstm.NetworkConfig(
        vocab_size=vocab.size, emb_dim=emb_dim, hidden=hidden,
        n_classes=4, n_parts=3, lengths=lengths,
    )
    train_examples = lstm.make_examples(train_pairs, clean_by_id, vocab, lengths)
    dev_pairs = pipeline_mod.load_pairs(Path(data_dir) / "dev.pairs.jsonl")
    dev_examples = lstm.make_examples(dev_pairs, clean_by_id, vocab, lengths)
    result = lstm.train(
        train_examples, dev_examples, config,
        lstm.TrainConfig(lr=lr, epochs=epochs, batch_size=batch, seed=seed),
        vocab=vocab, pretrained=pretrained,
    )
    lstm.save_model(out_path, result.params, config, result.classes, vocab,
                    hyper={"lr": lr, "epochs": epochs, "batch_size": batch,
                           "seed": seed})
    click.echo(f"best dev accuracy {result.best_dev_accuracy:.4f} "
               f"at epoch {result.best_epoch} -> {out_path}")


@bilstm_group.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--split", default="test", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def bilstm_predict_cmd(model_path, data_dir, split, out_path):
    params, config, classes, vocab, _ = lstm.load_model(model_path)
    clean_by_id = pipeline_mod.load_clean(Path(data_dir) / "clean.jsonl")
    pairs, examples = _load_examples(data_dir, split, clean_by_id, vocab,
                                     config.lengths)
    preds = lstm.predict(params, config, examples, classes)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text("\n".join(preds) + "\n", encoding="utf-8")
    click.echo(f"{len(preds)} predictions -> {out_path}")


@bilstm_group.command("gradcheck")
@click.option("--emb-dim", default=8, show_default=True)
@click.option("--hidden", default=8, show_default=True)
@click.option("--epsilon", default=1e-5, show_default=True)
@click.option("--samples", default=200, show_default=True)
@click.option("--seed", default=0, show_default=True)
def bilstm_gradcheck_cmd(emb_dim, hidden, epsilon, samples, seed):
    """Compare manual gradients against central finite differences."""
    import numpy as np

    rng = np.random.default_rng(seed)
    config = lstm.NetworkConfig(
        vocab_size=30, emb_dim=emb_dim, hidden=hidden, dense_units=10,
        n_classes=4, n_parts=3, lengths=(4, 5, 6), dropout=0.0,
    )
    sequences = tuple(
        np.concatenate([
            rng.integers(2, 30, size=length - 1), [lstm.PAD_ID]
        ]).astype(np.int64)
        for length in (4, 5, 6, 4, 5, 6)
    )
    example = lstm.PairExample(sequences, "duplicate")
    params = lstm.init_params(config, seed)
    err = lstm.gradient_check(
        params, config, example, ["duplicate", "direct", "indirect", "isolated"],
        epsilon=epsilon, samples=samples, seed=seed,
    )
    click.echo(f"max relative gradient error: {err:.3e}")
    if err >= 1e-4:
        raise click.ClickException("gradient check failed (>= 1e-4)")


@main.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True),
              help="One predicted label per line.")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True),
              help="One gold label per line, or a pairs JSONL file.")
def eval_cmd(pred_path, gold_path):
    """Micro-averaged metrics plus per-class F."""
    preds = [l.strip() for l in Path(pred_path).read_text(
        encoding="utf-8").splitlines() if l.strip()]
    gold_text = Path(gold_path).read_text(encoding="utf-8")
    if gold_text.lstrip().startswith("{"):
        gold = [row["label"] for row in read_jsonl(gold_path)]
    else:
        gold = [l.strip() for l in gold_text.splitlines() if l.strip()]
    report = metrics.evaluate(preds, gold)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command("dqd")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True),
              help="Directory with {train,dev,test}.pairs.jsonl.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def dqd_cmd(in_dir, seed, out_dir):
    """Binary duplicate-detection reformulation, balanced per split."""
    out_dir = Path(out_dir)
    counts = {}
    for split in ("train", "dev", "test"):
        pairs = pipeline_mod.load_pairs(Path(in_dir) / f"{split}.pairs.jsonl")
        binary = metrics.reformulate_dqd(pairs, seed)
        write_jsonl(out_dir / f"{split}.pairs.jsonl",
                    (graph.pair_to_row(p) for p in binary))
        counts[split] = len(binary)
    write_json(out_dir / "dqd.manifest.json", {"seed": seed, "pairs": counts})
    click.echo(json.dumps(counts))


@main.command("export")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--clean", "clean_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--fmt", type=click.Choice(["csv", "jsonl"]), default=None,
              help="Default: inferred from the extension.")
def export_cmd(pairs_path, clean_path, out_path, fmt):
    """Write the 24-attribute dataset rows for the given pairs."""
    pairs = pipeline_mod.load_pairs(pairs_path)
    clean_by_id = pipeline_mod.load_clean(clean_path)
    n = export.export_dataset(pairs, clean_by_id, out_path, fmt)
    click.echo(f"{n} rows -> {out_path}")


@main.command("pipeline")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def pipeline_cmd(config_path):
    """Run ingest -> pairs -> clean -> embed -> features -> train -> eval."""
    config = pipeline_mod.PipelineConfig.from_json(config_path)
    report = pipeline_mod.run_pipeline(config)
    click.echo(json.dumps({
        "svm_test_micro_f": report["svm"]["test"]["micro_f"],
        "bilstm_test_micro_f": report["bilstm"]["reports"]["test"]["micro_f"],
    }, indent=2))


if __name__ == "__main__":
    main()
