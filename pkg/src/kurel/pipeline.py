"""End-to-end orchestration: ingest -> pairs -> clean -> embed -> features
-> train -> eval, driven by one seed-bearing config file."""

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import embeddings, features, graph, ingest, lstm, metrics, svm, textprep
from .util import read_jsonl, write_json, write_jsonl

log = logging.getLogger(__name__)


@dataclass
class EmbedSettings:
    dim: int = 200
    min_count: int = 20
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025


@dataclass
class RelmatSettings:
    threshold: float = 0.2
    external_vectors: str = None  # path to pretrained text vectors, optional


@dataclass
class SvmSettings:
    reg: float = 1e-4
    epochs: int = 50
    selected_only: bool = True


@dataclass
class BilstmSettings:
    emb_dim: int = 300
    hidden: int = 128
    dense_units: int = 50
    dropout: float = 0.2
    lengths: tuple = (10, 60, 180)
    lr: float = 0.001
    epochs: int = 25
    batch_size: int = 64
    min_freq: int = 2
    vectors: str = None  # optional pretrained init


@dataclass
class PipelineConfig:
    posts: str
    links: str
    tag: str
    workdir: str
    seed: int = 0
    distance: tuple = (2, 5)
    isolated_count: int = None
    ratios: tuple = (0.6, 0.1, 0.3)
    embed: EmbedSettings = field(default_factory=EmbedSettings)
    relmat: RelmatSettings = field(default_factory=RelmatSettings)
    svm: SvmSettings = field(default_factory=SvmSettings)
    bilstm: BilstmSettings = field(default_factory=BilstmSettings)
    version: int = 1

    @classmethod
    def from_json(cls, path):
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        for key, sub in (("embed", EmbedSettings), ("relmat", RelmatSettings),
                         ("svm", SvmSettings), ("bilstm", BilstmSettings)):
            if key in raw:
                raw[key] = sub(**raw[key])
        for key in ("distance", "ratios"):
            if key in raw:
                raw[key] = tuple(raw[key])
        if "bilstm" in raw and isinstance(raw["bilstm"].lengths, list):
            raw["bilstm"].lengths = tuple(raw["bilstm"].lengths)
        return cls(**raw)

    def to_dict(self):
        return dataclasses.asdict(self)


def load_clean(path):
    return {row["id"]: textprep.CleanKU.from_row(row) for row in read_jsonl(path)}


def load_pairs(path):
    return [graph.pair_from_row(row) for row in read_jsonl(path)]


def stage_clean(kus_path, out_path, stopwords=None, manifest_path=None):
    """Clean every ingested unit; records the stopword list hash."""
    rows = []
    for raw in read_jsonl(kus_path):
        ku = ingest.KnowledgeUnit.from_row(raw)
        rows.append(textprep.clean_knowledge_unit(ku, stopwords).to_row())
    write_jsonl(out_path, rows)
    manifest = {
        "units": len(rows),
        "stopword_list_sha256": textprep.stopword_list_hash(stopwords),
    }
    if manifest_path:
        write_json(manifest_path, manifest)
    return manifest


def stage_pairs(net_dir, out_dir, distance=(2, 5), isolated_count=None,
                ratios=(0.6, 0.1, 0.3), seed=0):
    """Network construction through balanced splits; writes split files."""
    net_dir = Path(net_dir)
    out_dir = Path(out_dir)
    kus = [row["id"] for row in read_jsonl(net_dir / "kus.jsonl")]
    links = [
        ingest.LinkRecord(row["source"], row["target"], row["kind"])
        for row in read_jsonl(net_dir / "links.jsonl")
    ]
    net = graph.build_network(links, set(kus))
    net = graph.resolve_overlaps(net)
    net = graph.close_duplicates(net)
    pairs = graph.extract_pairs(net, distance, isolated_count, seed)
    split = graph.balance_and_split(pairs, ratios, seed, nodes=set(kus))

    for name, bucket in split.splits().items():
        write_jsonl(out_dir / f"{name}.pairs.jsonl",
                    (graph.pair_to_row(p) for p in bucket))
    manifest = {
        "seed": seed,
        "ratios": list(ratios),
        "distance_range": list(distance),
        "isolated_count": isolated_count,
        "extracted_pairs": len(pairs),
        "dropped_cross_partition": split.dropped_cross_partition,
        "pre_balance_counts": split.pre_balance_counts,
        "counts": split.counts(),
    }
    write_json(out_dir / "pairs.manifest.json", manifest)
    return split, manifest


def _pair_documents(clean_by_id, pair_lists, parts=features.PARTS):
    """One concatenated token document per KU referenced by the pairs."""
    ku_ids = sorted({
        ku for pairs in pair_lists for p in pairs for ku in (p.ku1, p.ku2)
    })
    docs = []
    for i in ku_ids:
        ku = clean_by_id[i]
        doc = []
        for part in parts:
            doc.extend(ku.part_tokens(part))
        docs.append(doc)
    return ku_ids, docs


def build_feature_models(clean_by_id, splits, table, settings, external=None):
    """Fit TF-IDF per part and the three relation matrices."""
    tfidf = features.fit_tfidf_models(clean_by_id, [splits["train"], splits["dev"]])
    vocab = features.union_vocabulary(clean_by_id, list(splits.values()))
    rel_corpus = embeddings.build_relation_matrix_embedding(
        table, vocab, settings.threshold
    )
    if external is not None:
        rel_external = embeddings.build_relation_matrix_embedding(
            external, vocab, settings.threshold
        )
    else:
        # No external vectors configured: identity matrix, the soft score
        # degenerates to the plain cosine.
        rel_external = embeddings.RelationMatrix()
    rel_lev = embeddings.build_relation_matrix_levenshtein(vocab, settings.threshold)
    return features.FeatureModels(
        tfidf=tfidf,
        rel_corpus=rel_corpus,
        rel_external=rel_external,
        rel_levenshtein=rel_lev,
    )


def extract_split_features(pairs, clean_by_id, models, selected=False):
    vectors = []
    for pair in pairs:
        fv = features.pair_features(
            clean_by_id[pair.ku1], clean_by_id[pair.ku2], models, selected
        )
        fv.label = pair.label
        vectors.append(fv)
    return vectors


def feature_rows(vectors):
    for fv in vectors:
        yield {
            "ku1": fv.ku1,
            "ku2": fv.ku2,
            "label": fv.label,
            "features": fv.as_dict(),
        }


def dataset_from_rows(rows, names=None):
    rows = list(rows)
    if not rows:
        raise ValueError("no feature rows")
    names = tuple(names or rows[0]["features"].keys())
    matrix = np.asarray(
        [[row["features"][n] for n in names] for row in rows], dtype=np.float64
    )
    labels = [row["label"] for row in rows]
    pairs = [(row["ku1"], row["ku2"]) for row in rows]
    return features.FeatureDataset(names, matrix, labels, pairs)


def run_pipeline(config):
    """Run every stage under ``config.workdir``; returns the summary report."""
    work = Path(config.workdir)
    work.mkdir(parents=True, exist_ok=True)
    write_json(work / "config.json", config.to_dict())

    log.info("stage 1/7: ingest")
    ingest.run_ingest(config.posts, config.links, config.tag, work / "ingest")

    log.info("stage 2/7: pairs")
    split, pairs_manifest = stage_pairs(
        work / "ingest", work / "pairs", config.distance,
        config.isolated_count, config.ratios, config.seed,
    )
    splits = split.splits()

    log.info("stage 3/7: clean")
    stage_clean(work / "ingest" / "kus.jsonl", work / "clean.jsonl",
                manifest_path=work / "clean.manifest.json")
    clean_by_id = load_clean(work / "clean.jsonl")

    log.info("stage 4/7: embeddings")
    _, docs = _pair_documents(clean_by_id, [splits["train"], splits["dev"]])
    table = embeddings.train_skipgram(
        docs,
        dim=config.embed.dim,
        min_count=config.embed.min_count,
        window=config.embed.window,
        negatives=config.embed.negatives,
        epochs=config.embed.epochs,
        seed=config.seed,
        lr=config.embed.lr,
    )
    embeddings.save_vectors(table, work / "vecs.txt")
    write_json(work / "vecs.manifest.json", {
        "dim": config.embed.dim, "min_count": config.embed.min_count,
        "window": config.embed.window, "negatives": config.embed.negatives,
        "epochs": config.embed.epochs, "lr": config.embed.lr,
        "seed": config.seed, "terms": len(table.vocabulary),
    })

    log.info("stage 5/7: feature models + features")
    external = None
    if config.relmat.external_vectors:
        external = embeddings.load_vectors(config.relmat.external_vectors)
    models = build_feature_models(clean_by_id, splits, table, config.relmat, external)
    features.save_tfidf_models(models.tfidf, work / "tfidf.bin")
    vocab_terms = features.union_vocabulary(clean_by_id, list(splits.values()))
    embeddings.save_relation_matrix(
        models.rel_corpus, work / "relmat.corpus.bin", vocab_terms,
        config.relmat.threshold, "corpus-embedding",
    )
    embeddings.save_relation_matrix(
        models.rel_levenshtein, work / "relmat.lev.bin", vocab_terms,
        config.relmat.threshold, "levenshtein",
    )
    datasets = {}
    for name, bucket in splits.items():
        vectors = extract_split_features(bucket, clean_by_id, models)
        write_jsonl(work / f"{name}.feat.jsonl", feature_rows(vectors))
        datasets[name] = features.FeatureDataset.from_vectors(
            vectors, [p.label for p in bucket]
        )

    log.info("stage 6/7: SVM")
    if config.svm.selected_only:
        selected = features.feature_names(features.PARTS, features.SELECTED_FAMILIES)
        train_ds = datasets["train"].select(selected)
        dev_ds = datasets["dev"].select(selected)
        test_ds = datasets["test"].select(selected)
    else:
        train_ds, dev_ds, test_ds = (
            datasets["train"], datasets["dev"], datasets["test"]
        )
    svm_model = svm.train_linear_svm(
        train_ds.matrix, train_ds.labels, config.svm.reg, config.svm.epochs,
        config.seed, train_ds.names,
    )
    svm.save_model(svm_model, work / "svm.model.json")
    svm_reports = {
        name: metrics.evaluate(svm.predict(svm_model, ds.matrix), ds.labels).to_dict()
        for name, ds in (("dev", dev_ds), ("test", test_ds))
    }

    log.info("stage 7/7: BiLSTM")
    train_ids, train_docs = _pair_documents(clean_by_id, [splits["train"]])
    del train_ids
    vocab = lstm.build_vocab(train_docs, config.bilstm.min_freq)
    net_config = lstm.NetworkConfig(
        vocab_size=vocab.size,
        emb_dim=config.bilstm.emb_dim,
        hidden=config.bilstm.hidden,
        dense_units=config.bilstm.dense_units,
        n_classes=4,
        n_parts=3,
        lengths=config.bilstm.lengths,
        dropout=config.bilstm.dropout,
    )
    examples = {
        name: lstm.make_examples(bucket, clean_by_id, vocab, config.bilstm.lengths)
        for name, bucket in splits.items()
    }
    pretrained = None
    if config.bilstm.vectors:
        pretrained = embeddings.load_vectors(config.bilstm.vectors)
    result = lstm.train(
        examples["train"], examples["dev"], net_config,
        lstm.TrainConfig(lr=config.bilstm.lr, epochs=config.bilstm.epochs,
                         batch_size=config.bilstm.batch_size, seed=config.seed),
        vocab=vocab, pretrained=pretrained,
    )
    lstm.save_model(work / "bilstm.model.bin", result.params, net_config,
                    result.classes, vocab,
                    hyper={"lr": config.bilstm.lr, "epochs": config.bilstm.epochs,
                           "batch_size": config.bilstm.batch_size,
                           "seed": config.seed})
    bilstm_reports = {}
    for name in ("dev", "test"):
        preds = lstm.predict(result.params, net_config, examples[name], result.classes)
        gold = [p.label for p in splits[name]]
        bilstm_reports[name] = metrics.evaluate(preds, gold).to_dict()

    report = {
        "pairs": pairs_manifest,
        "svm": svm_reports,
        "bilstm": {
            "best_epoch": result.best_epoch,
            "best_dev_accuracy": result.best_dev_accuracy,
            "reports": bilstm_reports,
        },
    }
    write_json(work / "report.json", report)
    log.info("pipeline complete: %s", work / "report.json")
    return report
