"""CLI for melmine.

Commands:
    stats          - Dataset and image-availability statistics
    build-index    - MinHash signatures and LSH buckets for a KB
    mine           - Jaccard hard-negative table (exact or MinHash)
    transform      - Apply the controllable patch transform to mention visuals
    score          - Matcher scores of mentions against every entity
    eval           - Full-KB ranking evaluation (H@1/3/5, MRR)
    pooled-sim     - Individual vs pooled synthetic-view similarity
    toy            - Synthetic toy lab (generate, train, ablate, views)
"""

import importlib
import json
from functools import wraps
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from ..config.logger import get_logger, log_stage_execution, set_run_context
from ..config.settings import get_settings, validate_configuration
from ..cvacpt.models import CvacptError, CvacptParams, ViewSet
from ..cvacpt.params_io import init_params, load_params, save_params
from ..evaluation.models import EvaluationError, TiePolicy
from ..evaluation.pooled import pooled_similarity
from ..evaluation.ranking import evaluate, render_report_table, report_to_document
from ..kb.models import KBError
from ..matching.features import FeatureStore
from ..matching.models import MatcherConfig, MatcherVariant, MatchingError
from ..matching.scorer import score_all
from ..mining.jaccard import build_exact_table
from ..mining.minhash import build_approx_table, build_minhash_index, check_band_config, lsh_threshold
from ..mining.models import MiningError
from ..mining.table_io import index_to_document, load_index, load_table, save_index, save_table, table_to_document
from ..storage.embeddings import load_embeddings, save_embeddings, store_from_array
from ..storage.models import StorageError
from ..storage.records import load_kb, load_mentions
from ..storage.stats import dataset_stats
from ..toy_lab.ablation import ablate, render_ablation_table, sweep_views
from ..toy_lab.generator import generate, write_fixtures
from ..toy_lab.models import (
    DEFAULT_K_VALUES, DEFAULT_SEEDS, DEFAULT_VIEW_COUNTS, NegativeStrategy, SyntheticSpec, ToyLabError
)
from ..toy_lab.trainer import evaluate_model, format_loss_curve, init_model, train

settings = get_settings()
logger = get_logger()

app = typer.Typer(
    name="melmine",
    help="melmine - Jaccard hard-negative mining, patch transform and ranking for multimodal entity linking",
)
toy_app = typer.Typer(help="Synthetic toy lab")
app.add_typer(toy_app, name="toy")

console = Console()
err_console = Console(stderr=True)

# typer may ship its own click; raise and catch the classes it uses
click_exceptions = importlib.import_module(typer.BadParameter.__module__)

PACKAGE_ERRORS = (KBError, StorageError, MiningError, MatchingError, CvacptError, EvaluationError, ToyLabError)

# Shared option declarations
KbOption = Annotated[Optional[Path], typer.Option("--kb", help="Entities JSONL")]
MentionsOption = Annotated[Optional[Path], typer.Option("--mentions", help="Mentions JSONL")]
EmbOption = Annotated[Optional[Path], typer.Option("--emb", help="EMB1 embedding store")]
OutOption = Annotated[Optional[Path], typer.Option("--out", help="Write the artifact here instead of stdout")]
SeedOption = Annotated[int, typer.Option("--seed", help="Seed of every randomized step")]
ThreadsOption = Annotated[int, typer.Option("--threads", min=1, envvar="MELMINE_THREADS", help="Worker threads")]
LowercaseOption = Annotated[bool, typer.Option("--lowercase-attributes", help="Case-fold attribute tokens")]
FormatOption = Annotated[str, typer.Option("--format", help="json or table")]


def exit_on_error(func):
    """Map package errors to their exit codes, I/O failures to 2"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except PACKAGE_ERRORS as e:
            err_console.print(f"[red]error[/red] {e.code}: {e.message}")
            raise typer.Exit(code=e.exit_code) from None
        except ValidationError as e:
            err_console.print(f"[red]error[/red] VALIDATION: {e.errors()[0].get('msg', 'invalid value')}")
            raise typer.Exit(code=1) from None
        except OSError as e:
            err_console.print(f"[red]error[/red] IO: {e}")
            raise typer.Exit(code=2) from None
    return wrapper


def require(value: Optional[Path], flag: str) -> Path:
    if value is None:
        raise click_exceptions.UsageError(f"Missing option '{flag}'.")
    return value


def check_format(output_format: str) -> str:
    if output_format not in ("json", "table"):
        raise click_exceptions.UsageError(f"Invalid value for '--format': {output_format!r} is not one of 'json', 'table'.")
    return output_format


def dump(document: Any) -> str:
    return json.dumps(document, sort_keys=True, indent=2)


def emit(document: Dict[str, Any], out: Optional[Path]) -> None:
    """Print the document, or write it and print a summary"""
    if out is None:
        typer.echo(dump(document))
        return
    out.write_text(dump(document) + "\n", encoding="utf-8")
    typer.echo(dump({"out": str(out)}))


def load_features(kb_path: Path, mentions_path: Path, emb_path: Path,
                  lowercase: bool = False) -> FeatureStore:
    kb = load_kb(kb_path, lowercase_attributes=lowercase)
    mentions = load_mentions(mentions_path, kb)
    return FeatureStore.from_store(kb, mentions, load_embeddings(emb_path))


def resolve_params(dim: int, params_dir: Optional[Path], init_dir: Optional[Path],
                   seed: int, blend: Optional[float]) -> CvacptParams:
    """Load params, or initialize them from the seed (saving when asked)"""
    if params_dir is not None:
        params = load_params(params_dir)
    else:
        params = init_params(dim, seed, blend if blend is not None else settings.cvacpt_blend)
        if init_dir is not None:
            save_params(params, init_dir)
    if blend is not None:
        params = params.model_copy(update={"blend": blend})
    return params


def matcher_config(variant: MatcherVariant, tau: Optional[float]) -> MatcherConfig:
    return MatcherConfig(variant=variant, temperature=tau if tau is not None else settings.temperature)


@app.command()
@exit_on_error
@log_stage_execution("stats")
def stats(
    kb: KbOption = None,
    mentions: MentionsOption = None,
    lowercase_attributes: LowercaseOption = False,
    output_format: FormatOption = "json",
    out: OutOption = None,
) -> None:
    """Entity, vocabulary and image-availability counts."""
    check_format(output_format)
    knowledge_base = load_kb(require(kb, "--kb"), lowercase_attributes=lowercase_attributes)
    loaded = load_mentions(mentions, knowledge_base) if mentions is not None else []
    counts = dataset_stats(knowledge_base, loaded)
    document = {
        "kb_fingerprint": knowledge_base.fingerprint,
        "entities": knowledge_base.size,
        "attribute_vocabulary": knowledge_base.vocab_size,
        "entities_with_image": sum(1 for entity in knowledge_base.entities if entity.has_image),
        "mentions": len(loaded),
        "image_availability": counts.model_dump(),
    }
    if output_format == "table" and out is None:
        table = Table(title="Dataset statistics")
        table.add_column("Quantity")
        table.add_column("Count", justify="right")
        for key in ("entities", "attribute_vocabulary", "entities_with_image", "mentions"):
            table.add_row(key, str(document[key]))
        for key, value in document["image_availability"].items():
            table.add_row(key, str(value))
        console.print(table)
        return
    emit(document, out)


@app.command("build-index")
@exit_on_error
@log_stage_execution("build_index")
def build_index(
    kb: KbOption = None,
    sig: Annotated[int, typer.Option("--sig", help="Signature length L")] = settings.minhash_signature_length,
    bands: Annotated[int, typer.Option("--bands", help="LSH bands b")] = settings.minhash_bands,
    rows: Annotated[int, typer.Option("--rows", help="Rows per band r")] = settings.minhash_rows,
    seed: SeedOption = settings.seed,
    lowercase_attributes: LowercaseOption = False,
    out: OutOption = None,
) -> None:
    """Build a MinHash/LSH index over entity attribute sets."""
    check_band_config(sig, bands, rows)
    knowledge_base = load_kb(require(kb, "--kb"), lowercase_attributes=lowercase_attributes)
    set_run_context(seed=seed)
    index = build_minhash_index(knowledge_base, sig, bands, rows, seed)
    logger.info("MinHash index built", entities=index.size, bands=bands, rows=rows,
                similarity_threshold=round(lsh_threshold(bands, rows), 4))
    if out is None:
        typer.echo(dump(index_to_document(index)))
        return
    save_index(index, out)
    typer.echo(dump({"out": str(out), "entities": index.size, "signature_length": sig,
                     "bands": bands, "rows": rows, "seed": seed}))


@app.command()
@exit_on_error
@log_stage_execution("mine")
def mine(
    kb: KbOption = None,
    k: Annotated[int, typer.Option("--k", min=1, help="Negatives per entity")] = settings.negatives_k,
    exact: Annotated[bool, typer.Option("--exact/--minhash", help="Exhaustive or LSH mining")] = True,
    index: Annotated[Optional[Path], typer.Option("--index", help="Prebuilt MinHash index")] = None,
    sig: Annotated[int, typer.Option("--sig", help="Signature length L")] = settings.minhash_signature_length,
    bands: Annotated[int, typer.Option("--bands", help="LSH bands b")] = settings.minhash_bands,
    rows: Annotated[int, typer.Option("--rows", help="Rows per band r")] = settings.minhash_rows,
    seed: SeedOption = settings.seed,
    threads: ThreadsOption = settings.threads,
    lowercase_attributes: LowercaseOption = False,
    out: OutOption = None,
) -> None:
    """Mine the top-k Jaccard hard negatives of every entity."""
    if not exact and index is None:
        check_band_config(sig, bands, rows)
    knowledge_base = load_kb(require(kb, "--kb"), lowercase_attributes=lowercase_attributes)

    if exact:
        table = build_exact_table(knowledge_base, k, threads=threads)
    else:
        set_run_context(seed=seed)
        minhash = load_index(index, knowledge_base) if index is not None \
            else build_minhash_index(knowledge_base, sig, bands, rows, seed)
        logger.log_seed("mine", minhash.seed, method="minhash")
        table = build_approx_table(knowledge_base, k, minhash, threads=threads)

    if out is None:
        typer.echo(dump(table_to_document(table, knowledge_base)))
        return
    save_table(table, knowledge_base, out)
    typer.echo(dump({"out": str(out), "k": table.k, "method": table.method.value,
                     "seed": table.seed, "entities": table.size}))


@app.command()
@exit_on_error
@log_stage_execution("transform")
def transform(
    kb: KbOption = None,
    mentions: MentionsOption = None,
    emb: EmbOption = None,
    params: Annotated[Optional[Path], typer.Option("--params", help="Parameter directory to load")] = None,
    init_params_dir: Annotated[Optional[Path], typer.Option(
        "--init-params", help="Initialize from --seed and save parameters here")] = None,
    w: Annotated[Optional[float], typer.Option("--w", min=0.0, max=1.0, help="Blend coefficient")] = None,
    seed: SeedOption = settings.seed,
    out: OutOption = None,
) -> None:
    """Transform mention visual bundles with their pooled synthetic views."""
    features = load_features(require(kb, "--kb"), require(mentions, "--mentions"), require(emb, "--emb"))
    if params is None:
        set_run_context(seed=seed)
    cvacpt = resolve_params(features.dim, params, init_params_dir, seed, w)

    matrix = features.matrix.copy()
    transformed: Dict[str, List[float]] = {}
    skipped = 0
    for ordinal, mention in enumerate(features.mentions):
        if not mention.has_image or not mention.synthetic_rows:
            skipped += 1
            continue
        visual = features.transform_mention(ordinal, cvacpt).visual
        matrix[mention.image_row] = visual.global_features
        for patch, row in enumerate(mention.patch_rows):
            matrix[row] = visual.local_features[patch]
        transformed[mention.id] = visual.global_features.tolist()

    summary = {
        "transformed": len(transformed),
        "skipped": skipped,
        "blend": cvacpt.blend,
        "seed": seed if params is None else None,
    }
    if out is None:
        typer.echo(dump({**summary, "global_features": transformed}))
        return
    save_embeddings(store_from_array(matrix, str(out)), out)
    typer.echo(dump({**summary, "out": str(out)}))


@app.command()
@exit_on_error
@log_stage_execution("score")
def score(
    kb: KbOption = None,
    mentions: MentionsOption = None,
    emb: EmbOption = None,
    mention: Annotated[Optional[str], typer.Option("--mention", help="Only this mention id")] = None,
    variant: Annotated[MatcherVariant, typer.Option("--variant")] = MatcherVariant.COSINE_TEXT,
    tau: Annotated[Optional[float], typer.Option("--tau", help="Temperature")] = None,
    params: Annotated[Optional[Path], typer.Option("--params", help="Transform mention visuals first")] = None,
    threads: ThreadsOption = settings.threads,
    out: OutOption = None,
) -> None:
    """Matcher scores of mentions against every entity, in KB order."""
    features = load_features(require(kb, "--kb"), require(mentions, "--mentions"), require(emb, "--emb"))
    cfg = matcher_config(variant, tau)
    cvacpt = load_params(params) if params is not None else None
    entities = features.all_entity_features()

    results = []
    for ordinal, item in enumerate(features.mentions):
        if mention is not None and item.id != mention:
            continue
        scores = score_all(features.mention_features(ordinal, cvacpt), entities, cfg, threads=threads)
        results.append({"mention_id": item.id, "gold_entity": item.gold_entity, "scores": scores.tolist()})
    if mention is not None and not results:
        raise click_exceptions.UsageError(f"Invalid value for '--mention': unknown mention {mention!r}.")

    emit({
        "config": {"variant": cfg.variant.value, "temperature": cfg.temperature},
        "entity_ids": features.kb.entity_ids,
        "mentions": results,
    }, out)


@app.command("eval")
@exit_on_error
@log_stage_execution("eval")
def eval_command(
    kb: KbOption = None,
    mentions: MentionsOption = None,
    emb: EmbOption = None,
    variant: Annotated[MatcherVariant, typer.Option("--variant")] = MatcherVariant.COSINE_TEXT,
    tau: Annotated[Optional[float], typer.Option("--tau", help="Temperature")] = None,
    tie: Annotated[TiePolicy, typer.Option("--tie", help="Tie policy")] = TiePolicy(settings.tie_policy),
    params: Annotated[Optional[Path], typer.Option("--params", help="Transform mention visuals first")] = None,
    w: Annotated[Optional[float], typer.Option("--w", min=0.0, max=1.0, help="Blend override")] = None,
    seed: SeedOption = settings.seed,
    threads: ThreadsOption = settings.threads,
    lowercase_attributes: LowercaseOption = False,
    output_format: FormatOption = "json",
    out: OutOption = None,
) -> None:
    """Rank every mention's gold entity against the full KB."""
    check_format(output_format)
    features = load_features(require(kb, "--kb"), require(mentions, "--mentions"), require(emb, "--emb"),
                             lowercase=lowercase_attributes)
    cfg = matcher_config(variant, tau)
    cvacpt = None
    if params is not None:
        cvacpt = load_params(params)
        if w is not None:
            cvacpt = cvacpt.model_copy(update={"blend": w})
    if tie == TiePolicy.RANDOM:
        set_run_context(seed=seed)

    report = evaluate(features, cfg, tie, cvacpt_params=cvacpt, threads=threads, seed=seed)
    if output_format == "table" and out is None:
        console.print(render_report_table(report))
        return
    config = {
        "variant": cfg.variant.value,
        "temperature": cfg.temperature,
        "tie_policy": tie.value,
        "cvacpt": cvacpt is not None,
        "blend": cvacpt.blend if cvacpt is not None else None,
        "seed": seed if tie == TiePolicy.RANDOM else None,
    }
    emit(report_to_document(report, config), out)


@app.command("pooled-sim")
@exit_on_error
@log_stage_execution("pooled_sim")
def pooled_sim(
    kb: KbOption = None,
    mentions: MentionsOption = None,
    emb: EmbOption = None,
    ns: Annotated[Optional[int], typer.Option("--ns", min=1, help="Use the first n_s views")] = None,
    out: OutOption = None,
) -> None:
    """Individual vs max-pooled cosine of synthetic views to the mention image."""
    features = load_features(require(kb, "--kb"), require(mentions, "--mentions"), require(emb, "--emb"))
    view_sets: List[ViewSet] = []
    references: List[np.ndarray] = []
    for item in features.mentions:
        if not item.has_image or not item.synthetic_rows:
            continue
        rows = item.synthetic_rows[:ns] if ns is not None else item.synthetic_rows
        view_sets.append(ViewSet(views=features.rows(rows, f"mention {item.id}")))
        references.append(features.row(item.image_row, f"mention {item.id}"))

    result = pooled_similarity(view_sets, references)
    emit({**result.model_dump(), "gain": result.gain, "n_views": ns}, out)


@toy_app.command("generate")
@exit_on_error
@log_stage_execution("toy_generate")
def toy_generate(
    out: Annotated[Path, typer.Option("--out", help="Fixture directory")],
    groups: Annotated[int, typer.Option("--groups", min=1)] = 20,
    per_group: Annotated[int, typer.Option("--per-group", min=1)] = 5,
    views: Annotated[int, typer.Option("--ns", min=0, help="Synthetic views per held-out mention")] = 0,
    seed: SeedOption = settings.seed,
) -> None:
    """Write kb.jsonl, mentions.jsonl and embeddings.emb for end-to-end runs."""
    set_run_context(seed=seed)
    spec = SyntheticSpec(groups=groups, entities_per_group=per_group, synthetic_views=views, seed=seed)
    paths = write_fixtures(generate(spec), out)
    typer.echo(dump({"seed": seed, "entities": spec.n_entities, **paths}))


@toy_app.command("train")
@exit_on_error
@log_stage_execution("toy_train")
def toy_train(
    strategy: Annotated[NegativeStrategy, typer.Option("--strategy")] = NegativeStrategy.CONDITIONAL,
    k: Annotated[int, typer.Option("--k", min=1)] = settings.negatives_k,
    epochs: Annotated[int, typer.Option("--epochs", min=0)] = 200,
    lr: Annotated[float, typer.Option("--lr", min=0.0)] = 0.1,
    tau: Annotated[Optional[float], typer.Option("--tau", help="Temperature")] = None,
    table_path: Annotated[Optional[Path], typer.Option("--table", help="Negative table mined on the toy KB")] = None,
    seed: SeedOption = settings.seed,
    output_format: Annotated[str, typer.Option("--format", help="json or curve")] = "json",
    out: OutOption = None,
) -> None:
    """Train the projection matcher and evaluate it on held-out mentions."""
    if output_format not in ("json", "curve"):
        raise click_exceptions.UsageError(f"Invalid value for '--format': {output_format!r} is not one of 'json', 'curve'.")
    set_run_context(seed=seed)
    data = generate(SyntheticSpec(seed=seed))
    model = init_model(data.spec.input_dim, 16, seed=seed, matcher=matcher_config(MatcherVariant.COSINE_TEXT, tau),
                       learning_rate=lr, epochs=epochs, k=k)
    table = load_table(table_path, data.kb) if table_path is not None else None
    result = train(model, data, strategy, seed, table)
    if output_format == "curve":
        text = format_loss_curve(result.loss_curve)
        if out is None:
            typer.echo(text, nl=False)
        else:
            out.write_text(text, encoding="utf-8")
            typer.echo(dump({"out": str(out), "seed": seed}))
        return
    report = evaluate_model(result.model, data)
    emit({
        "seed": seed,
        "strategy": strategy.value,
        "k": k,
        "epochs": epochs,
        "initial_loss": result.loss_curve[0] if result.loss_curve else None,
        "final_loss": result.loss_curve[-1] if result.loss_curve else None,
        "held_out": report.aggregates(),
    }, out)


@toy_app.command("ablate")
@exit_on_error
@log_stage_execution("toy_ablate")
def toy_ablate(
    k: Annotated[Optional[List[int]], typer.Option("--k", help="Negative counts (repeatable)")] = None,
    seeds: Annotated[Optional[List[int]], typer.Option("--seed", help="Seeds (repeatable)")] = None,
    epochs: Annotated[int, typer.Option("--epochs", min=0)] = 200,
    threads: ThreadsOption = settings.threads,
    output_format: FormatOption = "json",
    out: OutOption = None,
) -> None:
    """Conditional vs random negatives per k, averaged over seeds."""
    check_format(output_format)
    seed_list = list(seeds) if seeds else list(DEFAULT_SEEDS)
    set_run_context(seeds=seed_list)
    report = ablate(SyntheticSpec(), list(k) if k else list(DEFAULT_K_VALUES), seed_list,
                    epochs=epochs, threads=threads)
    if output_format == "table" and out is None:
        console.print(render_ablation_table(report))
        return
    emit(report.to_document(), out)


@toy_app.command("views")
@exit_on_error
@log_stage_execution("toy_views")
def toy_views(
    ns: Annotated[Optional[List[int]], typer.Option("--ns", help="View counts (repeatable)")] = None,
    seeds: Annotated[Optional[List[int]], typer.Option("--seed", help="Seeds (repeatable)")] = None,
    mentions: Annotated[int, typer.Option("--mentions", min=1)] = 50,
    noise: Annotated[float, typer.Option("--noise", min=0.0)] = 0.5,
    out: OutOption = None,
) -> None:
    """Pooled vs individual view similarity as n_s grows."""
    seed_list = list(seeds) if seeds else list(DEFAULT_SEEDS)
    rows = sweep_views(list(ns) if ns else list(DEFAULT_VIEW_COUNTS), seed_list,
                       mentions=mentions, dim=settings.feature_dim, noise=noise)
    emit({"seeds": seed_list, "dim": settings.feature_dim, "noise": noise,
          "rows": [row.model_dump() for row in rows]}, out)


def main(args: Optional[List[str]] = None) -> int:
    """Entry point returning the process exit code; usage errors exit 1"""
    try:
        validate_configuration()
    except MiningError as e:
        err_console.print(f"[red]error[/red] {e.code}: {e.message} (check MELMINE_MINHASH_*)")
        return e.exit_code
    try:
        result = app(args=args, prog_name="melmine", standalone_mode=False)
    except click_exceptions.UsageError as e:
        e.show()
        return 1
    except typer.Abort:
        err_console.print("Aborted")
        return 1
    except click_exceptions.ClickException as e:
        e.show()
        return 1
    return result if isinstance(result, int) else 0
