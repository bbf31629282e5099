"""Command-line entry point.

Every subcommand reads one resolved configuration (built-in defaults, then
an optional JSON ``--config`` file, then explicit flags) and appends a run
manifest to ``<out-dir>/manifests.jsonl``. Usage errors exit with status 2,
failures inside a stage exit with status 1 and print a JSON error record on
stderr.

The ``pipeline`` subcommand chains stages named in the config's
``pipeline.stages`` list. Each stage records a key over its configuration
and input hashes; on a re-run a stage whose key, outputs and verified side
files are unchanged (and whose upstream stages were skipped too) is not
executed again.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import shutil
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import FIXTURE_CORPUS

logger = logging.getLogger("medos")

FIXTURE_ALIAS = "@fixture"

DEFAULTS: dict = {
    "corpus": {"split": "train"},
    "embed": {
        "provider_kind": "fallback",
        "checkpoint_name": "all-MiniLM-L12-v2",
        "dimension": 256,
        "precomputed_path": None,
        "max_retries": 2,
    },
    "sdc": {"k": 8, "percentile": 85.0, "lambda1": 0.5, "lambda2": 0.5, "m_cap": 10, "mode": "full"},
    "tokenizer": {"min_count": 1, "max_size": None},
    "model": {
        "arch": "medos",
        "d_model": 32,
        "num_layers": 2,
        "num_heads": 4,
        "ffn_dim": 0,
        "max_review_len": 256,
        "max_desc_len": 64,
        "max_qa_len": 128,
        "max_tgt_len": 64,
        "dropout": 0.0,
    },
    "train": {},
    "generate": {},
    "eval": {"metrics": ["R1", "R2", "RL"], "multi_ref": "max", "references": "gold"},
    "annotate": {"kind": "GPT-RDQ"},
    "pipeline": {"stages": [], "input": None},
}

SUBCOMMANDS = ("ingest", "embed", "sdc", "train", "summarize", "eval", "ablate", "annotate", "pipeline")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# config and manifests


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        user = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    unknown = set(user) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config sections: {sorted(unknown)}")
    return _merge(DEFAULTS, user)


def resolve_path(p) -> Path:
    return FIXTURE_CORPUS if str(p) == FIXTURE_ALIAS else Path(p)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _hashes(paths) -> dict[str, str]:
    return {str(p): file_sha256(p) for p in paths if p is not None and Path(p).is_file()}


@dataclass
class RunManifest:
    subcommand: str
    argv: list[str]
    config: dict
    seed: int
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    hashes: dict[str, str] = field(default_factory=dict)
    started: float = 0.0
    finished: float = 0.0
    exit_code: int = 0
    error: dict | None = None
    stages: list[dict] = field(default_factory=list)

    def append_to(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with (out_dir / "manifests.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(asdict(self), sort_keys=True, default=str) + "\n")


# ---------------------------------------------------------------------------
# stages, shared by the subcommands and the pipeline


def _embed_cfg(cfg):
    from .embed import EmbeddingProviderConfig

    return EmbeddingProviderConfig(**cfg["embed"])


def _sdc_hp(cfg):
    from .sdc import SdcHyperparams

    return SdcHyperparams(**{k: v for k, v in cfg["sdc"].items() if k != "mode"})


def run_ingest(cfg, src: Path, out: Path) -> dict:
    from .corpus import load_corpus, write_corpus

    corpus, report = load_corpus(src, cfg["corpus"]["split"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, out)
    report_path = out.with_name(out.name + ".load_report.json")
    report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"corpus": out, "load_report": report_path}


def run_embed(cfg, corpus_path: Path, out: Path, cache_dir: Path | None) -> tuple[dict, list[Path]]:
    """Embed every product; returns outputs and the cache entries that were read."""
    from .corpus import load_corpus
    from .embed import EmbeddingCache, embed_texts
    from .sdc import embed_product

    ecfg = _embed_cfg(cfg)
    corpus, _ = load_corpus(corpus_path, cfg["corpus"]["split"])
    used: list[Path] = []
    if cache_dir is not None and ecfg.provider_kind != "precomputed":
        cache = EmbeddingCache(cache_dir, ecfg)

        def fn(texts, keys):
            used.extend(cache.path_for(t) for t in texts)
            return cache.embed(texts, keys)
    else:

        def fn(texts, keys):
            return embed_texts(ecfg, texts, keys)

    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for p in corpus.products:
            rec = {"product_id": p.product_id, **embed_product(fn, p).to_record()}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return {"embeddings": out}, sorted(set(used))


def read_embeddings(path) -> dict:
    from .sdc import ProductEmbeddings

    out = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out[rec["product_id"]] = ProductEmbeddings.from_record(rec)
    return out


def run_sdc(cfg, corpus_path: Path, emb_path: Path | None, out: Path, seed: int) -> dict:
    from .corpus import load_corpus
    from .embed import embed_texts
    from .sdc import build_corpus_quadruplets, embed_product, write_quadruplets

    corpus, _ = load_corpus(corpus_path, cfg["corpus"]["split"])
    if emb_path is not None:
        embeddings = read_embeddings(emb_path)
    else:
        ecfg = _embed_cfg(cfg)
        embeddings = {p.product_id: embed_product(lambda t, k: embed_texts(ecfg, t, k), p) for p in corpus.products}
    quads, report = build_corpus_quadruplets(corpus.products, embeddings, _sdc_hp(cfg), cfg["sdc"]["mode"], seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_quadruplets(quads, out)
    report_path = out.with_name(out.name + ".report.json")
    report_path.write_text(json.dumps(asdict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"quadruplets": out, "sdc_report": report_path}


def run_train(cfg, quads_path: Path, out: Path, seed: int) -> dict:
    import torch

    from .model import ModelConfig, build_model, save_checkpoint
    from .sdc import read_quadruplets
    from .tokenizer import Tokenizer
    from .train import TrainConfig, split_dev, train

    quads = read_quadruplets(quads_path)
    if not quads:
        raise ValueError(f"no quadruplets in {quads_path}")
    tcfg = TrainConfig.from_dict({**cfg["train"], "seed": seed})
    texts = [t for q in quads for t in (*q.input_reviews, q.description or "", *q.qa, q.pseudo_summary)]
    tok = Tokenizer.build(texts, **cfg["tokenizer"])
    mcfg = ModelConfig(vocab_size=len(tok), **cfg["model"])
    model = build_model(mcfg, seed=seed, dtype=torch.float32)
    dev = []
    if tcfg.eval_every:
        quads, dev = split_dev(quads, seed=seed)
    work = out.parent / (out.stem + "-runs")
    if work.exists():
        shutil.rmtree(work)
    model, report = train(model, tok, quads, tcfg, dev=dev, out_dir=work)
    save_checkpoint(out, model, tok, {"seed": seed, "steps": report.total_steps})
    summary = {k: v for k, v in report.to_dict().items() if k != "wall_clock"}
    # paths relative to the checkpoint's directory keep the report location-independent
    for k in ("final_checkpoint", "best_checkpoint"):
        if summary[k]:
            summary[k] = str(Path(summary[k]).relative_to(out.parent))
    report_path = out.with_name(out.name + ".train.json")
    report_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("trained %d steps in %.1fs", report.total_steps, report.wall_clock)
    return {"checkpoint": out, "train_report": report_path}


def _gen_cfg(cfg):
    from .generate import GenerationConfig

    return GenerationConfig(**cfg["generate"])


def run_summarize(cfg, ckpt: Path, corpus_path: Path, out: Path) -> dict:
    from .corpus import load_corpus
    from .generate import summarize_product
    from .model import load_checkpoint

    model, tok, _ = load_checkpoint(ckpt)
    corpus, _ = load_corpus(corpus_path, "test")
    gcfg = _gen_cfg(cfg)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for p in corpus.products:
            text, hyp = summarize_product(model, tok, p, gcfg)
            rec = {"product_id": p.product_id, "summary": text, "logprob": hyp.logprob}
            if hyp.truncated:
                rec["truncated"] = True
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    return {"predictions": out}


def _references(cfg, corpus):
    from .annotate import as_reference_corpus

    refs = cfg["eval"]["references"]
    return corpus if refs == "gold" else as_reference_corpus(corpus, refs)


def run_eval(cfg, pred: Path, gold: Path, out_dir: Path) -> dict:
    from .corpus import load_corpus
    from .evaluation import corpus_rouge, read_predictions

    for path, what in ((pred, "prediction"), (gold, "gold")):
        if not Path(path).is_file():
            raise FileNotFoundError(f"{what} file not found: {path}")
    corpus = _references(cfg, load_corpus(gold, "test")[0])
    report = corpus_rouge(read_predictions(pred), corpus.products, cfg["eval"]["metrics"], cfg["eval"]["multi_ref"])
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "eval_report": out_dir / "eval_report.json",
        "eval_table": out_dir / "eval_table.txt",
        "eval_records": out_dir / "eval_records.jsonl",
    }
    paths["eval_report"].write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    paths["eval_table"].write_text(report.table() + "\n", encoding="utf-8")
    with paths["eval_records"].open("w", encoding="utf-8") as fh:
        for rec in report.records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print(report.table())
    return paths


def run_ablate(cfg, ckpt: Path, corpus_path: Path, out_dir: Path) -> dict:
    from .corpus import load_corpus
    from .evaluation import run_ablation
    from .model import load_checkpoint

    model, tok, _ = load_checkpoint(ckpt)
    corpus = _references(cfg, load_corpus(corpus_path, "test")[0])
    table = run_ablation(model, tok, corpus.products, _gen_cfg(cfg), cfg["eval"]["multi_ref"])
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"ablation": out_dir / "ablation.json", "ablation_table": out_dir / "ablation_table.txt"}
    paths["ablation"].write_text(json.dumps(table.to_dict(), indent=2) + "\n", encoding="utf-8")
    paths["ablation_table"].write_text(table.render() + "\n", encoding="utf-8")
    print(table.render())
    return paths


def run_annotate(cfg, corpus_path: Path, out: Path) -> dict:
    from .annotate import AnnotationClientConfig, annotate_testset
    from .corpus import load_corpus, write_corpus

    acfg = dict(cfg["annotate"])
    kind = acfg.pop("kind")
    corpus, _ = load_corpus(corpus_path, "test")
    out.parent.mkdir(parents=True, exist_ok=True)
    log = out.with_name(out.name + ".provenance.jsonl")
    annotated, report = annotate_testset(corpus, AnnotationClientConfig(**acfg), kind, provenance_log=log)
    write_corpus(annotated, out)
    report_path = out.with_name(out.name + ".annotate.json")
    report_path.write_text(json.dumps(asdict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if report.failures:
        logger.warning("%d product(s) failed annotation", len(report.failures))
    return {"corpus": out, "annotate_report": report_path, "provenance": log}


# ---------------------------------------------------------------------------
# pipeline

# stage -> (artifacts needed, artifacts produced)
STAGE_IO = {
    "ingest": (("corpus_file",), ("corpus",)),
    "embed": (("corpus",), ("embeddings",)),
    "sdc": (("corpus", "embeddings"), ("quadruplets",)),
    "train": (("quadruplets",), ("checkpoint",)),
    "summarize": (("checkpoint", "corpus"), ("predictions",)),
    "eval": (("predictions", "corpus"), ("eval_report",)),
    "ablate": (("checkpoint", "corpus"), ("ablation",)),
    "annotate": (("corpus",), ("corpus",)),
}
# config sections each stage depends on
STAGE_SECTIONS = {
    "ingest": ("corpus",),
    "embed": ("corpus", "embed"),
    "sdc": ("corpus", "sdc"),
    "train": ("train", "tokenizer", "model"),
    "summarize": ("generate",),
    "eval": ("eval",),
    "ablate": ("generate", "eval"),
    "annotate": ("annotate",),
}


def check_stages(stages, available) -> None:
    if len(stages) < 2:
        raise UsageError("pipeline needs at least two stages")
    have = set(available)
    for s in stages:
        if s not in STAGE_IO:
            raise UsageError(f"unknown pipeline stage {s!r}")
        needs, gives = STAGE_IO[s]
        missing = [a for a in needs if a not in have]
        if missing:
            raise UsageError(f"stage {s!r} needs {', '.join(missing)} which no earlier stage produces")
        have.update(gives)


def _run_stage(name, cfg, art: dict, d: Path, seed: int) -> tuple[dict, list[Path]]:
    if name == "ingest":
        return run_ingest(cfg, art["corpus_file"], d / "corpus.jsonl"), []
    if name == "embed":
        return run_embed(cfg, art["corpus"], d / "embeddings.jsonl", d.parent / "cache" / "embeddings")
    if name == "sdc":
        return run_sdc(cfg, art["corpus"], art["embeddings"], d / "quadruplets.jsonl", seed), []
    if name == "train":
        return run_train(cfg, art["quadruplets"], d / "model.pt", seed), []
    if name == "summarize":
        return run_summarize(cfg, art["checkpoint"], art["corpus"], d / "predictions.jsonl"), []
    if name == "eval":
        return run_eval(cfg, art["predictions"], art["corpus"], d), []
    if name == "ablate":
        return run_ablate(cfg, art["checkpoint"], art["corpus"], d), []
    if name == "annotate":
        return run_annotate(cfg, art["corpus"], d / "corpus.annotated.jsonl"), []
    raise UsageError(f"unknown pipeline stage {name!r}")


def run_pipeline(cfg, out_dir: Path, seed: int, manifest: RunManifest) -> dict:
    pcfg = cfg["pipeline"]
    stages = list(pcfg["stages"])
    art: dict[str, Path] = {}
    if pcfg.get("input"):
        art["corpus_file"] = resolve_path(pcfg["input"])
    for name, path in (pcfg.get("artifacts") or {}).items():
        art[name] = resolve_path(path)
    check_stages(stages, art)
    for name, path in art.items():
        if not Path(path).is_file():
            raise FileNotFoundError(f"pipeline input {name} not found: {path}")

    root = out_dir / "pipeline"
    upstream_ran = False
    for name in stages:
        needs, _ = STAGE_IO[name]
        key_src = {
            "stage": name,
            "seed": seed,
            "config": {s: cfg[s] for s in STAGE_SECTIONS[name]},
            "inputs": {a: file_sha256(art[a]) for a in needs},
        }
        key = hashlib.sha256(json.dumps(key_src, sort_keys=True, default=str).encode()).hexdigest()
        d = root / name
        record_path = root / f"{name}.stage.json"
        record = json.loads(record_path.read_text(encoding="utf-8")) if record_path.is_file() else None
        fresh = (
            not upstream_ran
            and record is not None
            and record["key"] == key
            and all(Path(p).is_file() and file_sha256(p) == h for p, h in record["outputs"].values())
            and all(Path(p).is_file() and file_sha256(p) == h for p, h in record["verify"].items())
        )
        if fresh:
            outputs = {a: Path(p) for a, (p, _) in record["outputs"].items()}
            status = "skipped"
        else:
            if record is not None:
                # drop side files that no longer match, so caches recompute them
                for p, h in record.get("verify", {}).items():
                    if Path(p).is_file() and file_sha256(p) != h:
                        Path(p).unlink()
            d.mkdir(parents=True, exist_ok=True)
            outputs, verify = _run_stage(name, cfg, art, d, seed)
            record = {
                "key": key,
                "outputs": {a: [str(p), file_sha256(p)] for a, p in outputs.items()},
                "verify": _hashes(verify),
            }
            record_path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
            status = "ran"
            upstream_ran = True
        logger.info("stage %s: %s", name, status)
        manifest.stages.append({"stage": name, "status": status, "key": key})
        art.update({a: Path(p) for a, p in outputs.items()})
        if name == "annotate":
            art["corpus"] = Path(outputs["corpus"])
    return {a: p for a, p in art.items() if a != "corpus_file"}


# ---------------------------------------------------------------------------
# argument parsing


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON config file")
    p.add_argument("--seed", type=int, default=d, help="seed for every random choice (default 0)")
    p.add_argument("--out-dir", default=d, help="output directory (default ./medos-out)")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="medos", description="Multi-source opinion summarisation toolkit.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def add(name, help):
        sp = sub.add_parser(name, help=help)
        _global_flags(sp, suppress=True)
        return sp

    def corpus_flags(sp, required=True):
        sp.add_argument("--input", required=required, help=f"product corpus (.jsonl) or {FIXTURE_ALIAS}")
        sp.add_argument("--split", choices=("train", "dev", "test"))

    def embed_flags(sp):
        sp.add_argument("--embedder", choices=("external", "precomputed", "fallback"))
        sp.add_argument("--checkpoint", dest="embed_checkpoint", help="sentence-embedding checkpoint name")
        sp.add_argument("--precomputed", help="precomputed vectors (.jsonl with key, vector)")
        sp.add_argument("--dimension", type=int)

    sp = add("ingest", "load, validate and normalise a product corpus")
    corpus_flags(sp)
    sp.add_argument("--out")

    sp = add("embed", "embed reviews, descriptions and QA")
    corpus_flags(sp)
    embed_flags(sp)
    sp.add_argument("--cache", help="embedding cache directory")
    sp.add_argument("--out")

    sp = add("sdc", "build synthetic training quadruplets")
    corpus_flags(sp)
    embed_flags(sp)
    sp.add_argument("--embeddings", help="output of the embed subcommand; embedded on the fly if omitted")
    sp.add_argument("--k", type=int)
    sp.add_argument("--percentile", type=float)
    sp.add_argument("--lambda1", type=float)
    sp.add_argument("--lambda2", type=float)
    sp.add_argument("--m-cap", type=int)
    sp.add_argument("--mode", choices=("full", "reviews-only", "random"))
    sp.add_argument("--out")

    sp = add("train", "train a summariser on quadruplets")
    sp.add_argument("--quads", required=True)
    sp.add_argument("--arch", choices=("medos", "concat"))
    sp.add_argument("--lr", type=float)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--max-steps", type=int)
    sp.add_argument("--grad-clip", type=float)
    sp.add_argument("--out")

    def gen_flags(sp):
        sp.add_argument("--beam-size", type=int)
        sp.add_argument("--no-repeat-ngram", type=int)
        sp.add_argument("--max-length", type=int)
        sp.add_argument("--min-length", type=int)
        sp.add_argument("--length-penalty", type=float)

    sp = add("summarize", "summarise every product of a corpus")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--out")
    gen_flags(sp)

    def eval_flags(sp):
        sp.add_argument("--multi-ref", choices=("max", "mean"))
        sp.add_argument("--references", help="gold, GPT-R or GPT-RDQ")

    sp = add("eval", "ROUGE of predictions against references")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gold", required=True)
    sp.add_argument("--metrics", help="comma-separated subset of r1,r2,rl")
    eval_flags(sp)

    sp = add("ablate", "score the four source configurations with one checkpoint")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--input", required=True)
    eval_flags(sp)
    gen_flags(sp)

    sp = add("annotate", "add reference summaries from a text-generation endpoint")
    sp.add_argument("--input", required=True)
    sp.add_argument("--kind", choices=("gpt-r", "gpt-rdq"))
    sp.add_argument("--transport", choices=("live", "stub"))
    sp.add_argument("--fixture-dir")
    sp.add_argument("--endpoint")
    sp.add_argument("--model")
    sp.add_argument("--out")

    sp = add("pipeline", "run the stages listed in the config")
    sp.add_argument("--stages", help="comma-separated stage list, overrides the config")
    sp.add_argument("--input", help=f"corpus for the first stage, or {FIXTURE_ALIAS}")
    return parser


def _metrics(text: str) -> list[str]:
    names = {"r1": "R1", "r2": "R2", "rl": "RL"}
    out = []
    for m in text.split(","):
        m = m.strip().lower()
        if m not in names:
            raise UsageError(f"unknown metric {m!r}; expected r1, r2 or rl")
        out.append(names[m])
    return out


def apply_flags(cfg: dict, args) -> dict:
    """Overlay explicitly given flags onto the config."""
    a = vars(args)

    def put(section, key, flag, conv=lambda v: v):
        if a.get(flag) is not None:
            cfg[section][key] = conv(a[flag])

    put("corpus", "split", "split")
    put("embed", "provider_kind", "embedder")
    put("embed", "checkpoint_name", "embed_checkpoint")
    put("embed", "precomputed_path", "precomputed")
    put("embed", "dimension", "dimension")
    for key in ("k", "percentile", "lambda1", "lambda2", "m_cap", "mode"):
        put("sdc", key, key)
    put("model", "arch", "arch")
    put("train", "learning_rate", "lr")
    for key in ("batch_size", "epochs", "max_steps", "grad_clip"):
        put("train", key, key)
    for key in ("beam_size", "no_repeat_ngram", "max_length", "min_length", "length_penalty"):
        put("generate", key, key)
    put("eval", "metrics", "metrics", _metrics)
    put("eval", "multi_ref", "multi_ref")
    put("eval", "references", "references")
    put("annotate", "kind", "kind", str.upper)
    put("annotate", "transport", "transport")
    put("annotate", "fixture_dir", "fixture_dir")
    put("annotate", "endpoint", "endpoint")
    put("annotate", "model", "model")
    put("pipeline", "stages", "stages", lambda s: [x.strip() for x in s.split(",") if x.strip()])
    put("pipeline", "input", "input")
    if isinstance(cfg["eval"]["metrics"], str):
        cfg["eval"]["metrics"] = _metrics(cfg["eval"]["metrics"])
    return cfg


def _execute(args, cfg: dict, out_dir: Path, seed: int, m: RunManifest) -> dict:
    cmd = args.command
    out = Path(args.out) if getattr(args, "out", None) else None
    if cmd == "ingest":
        src = resolve_path(args.input)
        m.inputs["input"] = str(src)
        return run_ingest(cfg, src, out or out_dir / "corpus.jsonl")
    if cmd == "embed":
        src = resolve_path(args.input)
        m.inputs["input"] = str(src)
        cache = Path(args.cache) if args.cache else None
        outputs, _ = run_embed(cfg, src, out or out_dir / "embeddings.jsonl", cache)
        return outputs
    if cmd == "sdc":
        src = resolve_path(args.input)
        emb = Path(args.embeddings) if args.embeddings else None
        m.inputs.update({"input": str(src), "embeddings": str(emb) if emb else None})
        return run_sdc(cfg, src, emb, out or out_dir / "quadruplets.jsonl", seed)
    if cmd == "train":
        m.inputs["quads"] = args.quads
        return run_train(cfg, Path(args.quads), out or out_dir / "model.pt", seed)
    if cmd == "summarize":
        src = resolve_path(args.input)
        m.inputs.update({"checkpoint": args.checkpoint, "input": str(src)})
        return run_summarize(cfg, Path(args.checkpoint), src, out or out_dir / "predictions.jsonl")
    if cmd == "eval":
        gold = resolve_path(args.gold)
        m.inputs.update({"pred": args.pred, "gold": str(gold)})
        return run_eval(cfg, Path(args.pred), gold, out_dir)
    if cmd == "ablate":
        src = resolve_path(args.input)
        m.inputs.update({"checkpoint": args.checkpoint, "input": str(src)})
        return run_ablate(cfg, Path(args.checkpoint), src, out_dir)
    if cmd == "annotate":
        src = resolve_path(args.input)
        m.inputs["input"] = str(src)
        return run_annotate(cfg, src, out or out_dir / "corpus.annotated.jsonl")
    if cmd == "pipeline":
        return run_pipeline(cfg, out_dir, seed, m)
    raise UsageError(f"unknown command {cmd!r}")


def _error_record(kind: str, exc: BaseException, command) -> dict:
    return {"error": {"type": kind, "exception": type(exc).__name__, "message": str(exc), "command": command}}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        print(json.dumps(_error_record("usage", exc, None)), file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out_dir = Path(args.out_dir or "medos-out")
    seed = 0 if args.seed is None else args.seed
    manifest = RunManifest(args.command, argv, {}, seed, started=time.time())
    code = 0
    try:
        cfg = apply_flags(load_config(args.config), args)
        manifest.config = cfg
        outputs = _execute(args, cfg, out_dir, seed, manifest)
        manifest.outputs = {k: str(v) for k, v in outputs.items()}
        manifest.hashes = _hashes(list(outputs.values()))
        manifest.hashes.update(_hashes(Path(p) for p in manifest.inputs.values() if p))
    except UsageError as exc:
        code = 2
        parser.print_usage(sys.stderr)
        manifest.error = _error_record("usage", exc, args.command)["error"]
    except Exception as exc:  # surfaced verbatim, exit 1
        code = 1
        manifest.error = _error_record("failure", exc, args.command)["error"]
    if manifest.error is not None:
        print(f"medos {args.command}: {manifest.error['message']}", file=sys.stderr)
        print(json.dumps({"error": manifest.error}), file=sys.stderr)
    manifest.exit_code = code
    manifest.finished = time.time()
    manifest.append_to(out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
