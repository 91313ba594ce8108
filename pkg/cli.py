#!/usr/bin/env python3
"""
🎯 dgalab CLI - CharBot, classificadores léxicos de DGA e defesas

Comandos:
- generate / featurize / train / score
- evaluate (manifesto YAML com a grade baseline × retreinos)
- defend build | check (filtro de Bloom de variantes)
- analyze kde | lengths
- weak-label (log de consultas → lista benigna)

Uso: python cli.py [OPÇÕES GLOBAIS] COMANDO [OPÇÕES]
Códigos de saída documentados no CLI-GUIDE.md.
"""

import functools
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import typer
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

# Adicionar o projeto ao path
sys.path.insert(0, str(Path(__file__).parent))

from app.core.config import Settings  # noqa: E402
from app.core.exceptions import (  # noqa: E402
    DatasetIoError,
    DgalabError,
    EmptyDataset,
    InfeasiblePlan,
    InvalidParameters,
    NoSuccessfulCells,
)
from app.core.logging import setup_logging  # noqa: E402
from app.crud import corpus as crud_corpus  # noqa: E402
from app.crud import matrix as crud_matrix  # noqa: E402
from app.crud import filter_store, report as crud_report, table as crud_table  # noqa: E402
from app.schemas.analysis import CompareFeatureEnum  # noqa: E402
from app.schemas.charbot import CharbotConfig  # noqa: E402
from app.schemas.domain import Dataset, LabelEnum  # noqa: E402
from app.schemas.evaluation import ExperimentManifest  # noqa: E402
from app.schemas.features import SCHEMAS, FeatureSchema, FeatureSchemaEnum, NgramTables  # noqa: E402
from app.schemas.forest import ForestKindEnum  # noqa: E402
from app.services import (  # noqa: E402
    analysis_service,
    charbot_service,
    defense_service,
    domain_service,
    evaluation_service,
    feature_service,
    forest_service,
)
from app.services.charbot_service import FileRegistrationOracle  # noqa: E402
from app.services.defense_service import CheckResultEnum  # noqa: E402
from app.models.bloom import TyposquatFilter  # noqa: E402

# Diagnósticos em stderr; stdout só carrega dados
console = Console(stderr=True)
app = typer.Typer(
    name="dgalab",
    help="🎯 CharBot, florestas FANCI/B-RF, avaliação em FPR fixo e defesas",
    add_completion=False,
    rich_markup_mode="rich",
)

defend_app = typer.Typer(name="defend", help="🛡️  Filtro de Bloom de variantes dos domínios protegidos")
analyze_app = typer.Typer(name="analyze", help="📊 KDE das features e estatísticas de comprimento")

app.add_typer(defend_app)
app.add_typer(analyze_app)

BIGRAM_FILE = "bigram.tsv"
TRIGRAM_FILE = "trigram.tsv"


class State:
    """Opções globais resolvidas no callback."""
    settings: Settings
    seed: Optional[str] = None
    out: Path


state = State()


def handle_errors(func):
    """Converter DgalabError no código de saída documentado."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except InfeasiblePlan as e:
            console.print(f"❌ [red]{e.message}[/red]")
            console.print(f"   inserções previstas: [bold]{e.predicted_insertions:,}[/bold]")
            raise typer.Exit(e.exit_code)
        except DgalabError as e:
            console.print(f"❌ [red]{e.message}[/red]")
            raise typer.Exit(e.exit_code)
        except (ValidationError, yaml.YAMLError) as e:
            console.print(f"❌ [red]Entrada inválida: {e}[/red]")
            raise typer.Exit(2)
        except typer.Exit:
            raise
        except Exception as e:
            console.print(f"❌ [red]Erro inesperado: {e}[/red]")
            raise typer.Exit(1)

    return wrapper


def resolve_seed(default: int) -> int:
    """--seed aceita um inteiro de 64 bits ou uma data YYYY-MM-DD."""
    if state.seed is None:
        return default
    if state.seed.isdigit():
        return int(state.seed)
    return charbot_service.seed_from_date(state.seed)


def require(path: Optional[Path], what: str) -> Path:
    if path is None:
        raise InvalidParameters(f"caminho de {what} não informado (opção ou configuração)")
    return path


def load_tables(
    bigram: Optional[Path],
    trigram: Optional[Path],
    required: Optional[FeatureSchema] = None,
) -> NgramTables:
    """
    Carregar as tabelas existentes. Com `required`, a ausência de uma
    tabela que o esquema usa é erro de entrada.
    """
    s = state.settings
    paths = {
        2: bigram or s.bigram_table_path or state.out / BIGRAM_FILE,
        3: trigram or s.trigram_table_path or state.out / TRIGRAM_FILE,
    }
    if required is not None:
        missing = [str(paths[n]) for n in (2, 3) if required.needs_ngram(n) and not paths[n].exists()]
        if missing:
            raise DatasetIoError(
                f"tabelas de n-gramas exigidas pelo esquema {required.name.value} ausentes: {', '.join(missing)}"
            )
    return NgramTables(
        bigram=crud_table.load_ngram_table(paths[2]) if paths[2].exists() else None,
        trigram=crud_table.load_ngram_table(paths[3]) if paths[3].exists() else None,
    )


def load_named(entries: List[str]) -> Dict[str, Dataset]:
    """Lê entradas `nome=caminho` (CSV rank,domain ou lista simples)."""
    datasets = {}
    for entry in entries:
        name, sep, raw = entry.partition("=")
        if not sep:
            name, raw = Path(entry).stem, entry
        datasets[name] = domain_service.load_alexa(Path(raw), min_sld_len=1, limit=0)
    return datasets


@app.callback()
def main(
    config: Optional[Path] = typer.Option(None, "--config", help="Arquivo chave = valor"),
    seed: Optional[str] = typer.Option(None, "--seed", help="Semente: inteiro u64 ou data YYYY-MM-DD"),
    out: Optional[Path] = typer.Option(None, "--out", help="Diretório de saída"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Apenas avisos e erros"),
):
    """🎯 dgalab"""
    try:
        state.settings = Settings.from_file(config)
    except ValidationError as e:
        console.print(f"❌ [red]Configuração inválida: {e}[/red]")
        raise typer.Exit(2)
    setup_logging(debug=state.settings.debug, quiet=quiet)
    state.seed = seed
    state.out = out or Path(os.environ.get("DGALAB_OUT") or state.settings.output_dir)


# =================== GERAÇÃO ===================

@app.command("generate")
@handle_errors
def generate(
    date: Optional[str] = typer.Option(None, "--date", help="Data usada como semente (YYYY-MM-DD)"),
    n: int = typer.Option(100_000, "-n", "--count", help="Domínios a gerar"),
    k: int = typer.Option(2, "--k", help="Substituições por domínio"),
    sources: Optional[Path] = typer.Option(None, "--sources", help="CSV rank,domain de origem"),
    source_limit: Optional[int] = typer.Option(None, "--source-limit"),
    min_sld_len: Optional[int] = typer.Option(None, "--min-sld-len"),
    output: Optional[str] = typer.Option(None, "--output", help="Nome do arquivo de saída"),
    sidecar: bool = typer.Option(True, "--sidecar/--no-sidecar", help="Gravar CSV de proveniência"),
    registered: Optional[Path] = typer.Option(None, "--registered", help="Lista ordenada de domínios registrados"),
):
    """🤖 Gerar domínios CharBot a partir de uma data"""
    s = state.settings
    date = date or s.train_seed_date
    seed = resolve_seed(charbot_service.seed_from_date(date))
    source_set = domain_service.load_alexa(
        require(sources or s.alexa_path, "origens"),
        min_sld_len or s.min_sld_len,
        source_limit or s.source_limit,
    )
    oracle_path = registered or s.registered_path
    oracle = FileRegistrationOracle(oracle_path) if oracle_path else None

    records = charbot_service.generate_batch(CharbotConfig(replacement_count=k), source_set.domains(), seed, n, oracle)
    name = output or f"charbot_{date}.txt"
    path = state.out / name
    charbot_service.write_batch(path, records, path.with_suffix(".provenance.csv") if sidecar else None)
    console.print(f"✅ [green]{len(records):,} domínios em {path}[/green] (semente {seed})")


# =================== FEATURES / TREINO / SCORE ===================

@app.command("featurize")
@handle_errors
def featurize(
    schema: FeatureSchemaEnum = typer.Option(FeatureSchemaEnum.BRF, "--schema", case_sensitive=False),
    benign: Optional[Path] = typer.Option(None, "--benign", help="CSV rank,domain benigno"),
    malicious: Optional[Path] = typer.Option(None, "--malicious", help="Lista de domínios maliciosos"),
    limit: Optional[int] = typer.Option(None, "--limit", help="Máximo de benignos"),
    output: str = typer.Option("matrix.csv", "--output"),
    strict: bool = typer.Option(False, "--strict/--lenient", help="Falhar em qualquer linha inválida"),
):
    """🧮 Extrair a matriz de features de corpora rotulados"""
    s = state.settings
    benign = benign or s.alexa_path or s.benign_path
    malicious = malicious or s.malicious_path
    if benign is None and malicious is None:
        raise InvalidParameters("informe --benign e/ou --malicious")

    parts = []
    benign_set = None
    if benign is not None:
        benign_set = domain_service.load_alexa(benign, min_sld_len=1, limit=limit or 0)
        parts.append(benign_set)
    if malicious is not None:
        parts.append(domain_service.load_domain_list(malicious, LabelEnum.MALICIOUS, "malicious"))
    dataset = domain_service.merge("featurize", *parts)

    feature_schema = SCHEMAS[schema]
    tables = load_tables(None, None)
    missing = [n for n in (2, 3) if feature_schema.needs_ngram(n) and tables.get(n) is None]
    if missing:
        if benign_set is None:
            raise InvalidParameters("tabelas de n-gramas ausentes e nenhum corpus benigno para construí-las")
        tables = feature_service.build_tables(benign_set, feature_schema)
        crud_table.save_ngram_table(state.out / BIGRAM_FILE, tables.bigram)
        crud_table.save_ngram_table(state.out / TRIGRAM_FILE, tables.trigram)

    ctx = crud_table.load_tld_context(s.valid_tlds_path, s.malicious_tlds_path)
    path = state.out / output
    rows = feature_service.featurize_dataset(dataset, feature_schema, tables, ctx, strict=strict, out=path)
    console.print(f"✅ [green]{rows.rows:,} linhas × {feature_schema.width} colunas em {path}[/green]")


@app.command("train")
@handle_errors
def train(
    kind: ForestKindEnum = typer.Argument(..., case_sensitive=False, help="fanci ou brf"),
    matrix: Path = typer.Argument(..., help="CSV de features"),
    trees: Optional[int] = typer.Option(None, "--trees", help="Número de árvores (apenas brf)"),
    output: Optional[str] = typer.Option(None, "--output"),
):
    """🌲 Treinar uma floresta a partir da matriz de features"""
    rows = crud_matrix.load(matrix, expected=kind.schema_name)
    seed = resolve_seed(state.settings.forest_seed)
    model = forest_service.train(kind, rows, seed, trees)
    path = state.settings.model_dir / (output or f"{kind.value}.model")
    forest_service.save_model(path, model)
    console.print(f"✅ [green]Modelo {kind.value} com {model.tree_count} árvores em {path}[/green]")


@app.command("score")
@handle_errors
def score(
    model_path: Path = typer.Argument(..., help="Arquivo de modelo"),
    domains: Optional[Path] = typer.Option(None, "--domains", help="Lista de domínios"),
    matrix: Optional[Path] = typer.Option(None, "--matrix", help="Matriz de features já extraída"),
    bigram: Optional[Path] = typer.Option(None, "--bigram"),
    trigram: Optional[Path] = typer.Option(None, "--trigram"),
    output: str = typer.Option("scores.csv", "--output"),
):
    """🎯 Pontuar domínios: CSV domain,score"""
    model = forest_service.load_model(model_path)
    if matrix is not None:
        rows = crud_matrix.load(matrix, expected=model.schema_name)
    elif domains is not None:
        dataset = domain_service.load_domain_list(domains, LabelEnum.MALICIOUS, "score")
        feature_schema = SCHEMAS[model.schema_name]
        tables = load_tables(bigram, trigram, required=feature_schema)
        ctx = crud_table.load_tld_context(state.settings.valid_tlds_path, state.settings.malicious_tlds_path)
        rows = feature_service.featurize_dataset(dataset, feature_schema, tables, ctx, strict=False)
        if rows.rows == 0:
            raise EmptyDataset(f"nenhum dos {len(dataset.examples)} domínios pôde ser pontuado")
    else:
        raise InvalidParameters("informe --domains ou --matrix")

    scores = forest_service.score_matrix(model, rows)
    path = state.out / output
    crud_report.save_scores(path, rows.domains, scores)
    console.print(f"✅ [green]{len(scores):,} scores em {path}[/green]")


# =================== AVALIAÇÃO ===================

@app.command("evaluate")
@handle_errors
def evaluate(
    manifest_path: Path = typer.Argument(..., help="Manifesto YAML do experimento"),
):
    """📈 Rodar a grade baseline × retreinos e emitir JSON/CSV/ROC"""
    try:
        raw = yaml.safe_load(manifest_path.read_text(encoding="utf-8")) or {}
    except OSError as e:
        raise InvalidParameters(f"Erro ao ler manifesto '{manifest_path}': {e}")
    base_dir = manifest_path.parent
    for key in ("benign_path", "malicious_path"):
        if raw.get(key):
            raw[key] = str(base_dir / raw[key])
    for group in ("augmentations", "adversarial_tests"):
        for entry in raw.get(group) or []:
            if entry.get("path"):
                entry["path"] = str(base_dir / entry["path"])
    raw.setdefault("target_fprs", state.settings.target_fprs)
    manifest = ExperimentManifest(**raw)

    ctx = crud_table.load_tld_context(state.settings.valid_tlds_path, state.settings.malicious_tlds_path)
    result = evaluation_service.run_manifest(manifest, tld_ctx=ctx)
    out_dir = state.out / manifest.name
    written = evaluation_service.emit_bundle(result, out_dir)

    table = Table(title=f"📊 {manifest.name} ({manifest.model_kind.value})")
    table.add_column("Célula", style="cyan")
    table.add_column("FPR alvo")
    table.add_column("TPR", style="green")
    table.add_column("pAUC")
    for name in result.matrix.adversarial_sets:
        table.add_column(f"det {name}", style="magenta")
    for cell in result.matrix.cells:
        if cell.report is None:
            table.add_row(cell.name, "-", f"[red]{cell.error}[/red]", "-", *["-"] * len(result.matrix.adversarial_sets))
            continue
        for entry in cell.report.entries:
            tpr = "[yellow]inatingível[/yellow]" if entry.unachievable else f"{entry.tpr:.4f}"
            rates = [
                f"{entry.detection_rates[n]:.4f}" if n in entry.detection_rates else "-"
                for n in result.matrix.adversarial_sets
            ]
            table.add_row(cell.name, f"{entry.target_fpr:g}", tpr, f"{entry.normalized_partial_auc:.4f}", *rates)
    console.print(table)
    console.print(f"📁 {len(written)} arquivos em {out_dir}")

    if result.matrix.succeeded == 0:
        raise NoSuccessfulCells("nenhuma célula da grade foi concluída")


# =================== DEFESA ===================

@defend_app.command("build")
@handle_errors
def defend_build(
    sources: Optional[Path] = typer.Option(None, "--sources", help="CSV rank,domain protegido"),
    limit: Optional[int] = typer.Option(None, "--limit", help="Máximo de origens"),
    min_sld_len: Optional[int] = typer.Option(None, "--min-sld-len"),
    k: int = typer.Option(2, "--k", help="Substituições enumeradas"),
    fpr: Optional[float] = typer.Option(None, "--fpr", help="FPR alvo do filtro"),
    budget: Optional[int] = typer.Option(None, "--budget", help="Limite de memória em bytes"),
    include_original: bool = typer.Option(False, "--include-original"),
    indels: bool = typer.Option(False, "--indels", help="Incluir uma inserção/remoção"),
    exact: bool = typer.Option(False, "--exact-k", help="Só variantes a exatamente k substituições"),
    shards: int = typer.Option(1, "--shards", min=1),
    output: str = typer.Option("typosquat.bloom", "--output"),
):
    """🛡️ Construir o filtro com todas as variantes a até k substituições"""
    s = state.settings
    source_set = domain_service.load_alexa(
        require(sources or s.alexa_path, "origens"),
        min_sld_len or s.min_sld_len,
        limit or s.source_limit,
    )
    alphabet = CharbotConfig().alphabet
    plan = defense_service.plan_filter(
        source_set.domains(),
        k,
        alphabet,
        fpr or s.filter_fpr,
        budget or s.memory_budget_bytes,
        include_original=include_original,
        include_indels=indels,
        cumulative=not exact,
    )
    console.print(f"📐 {plan.predicted_insertions:,} inserções previstas, {plan.size_bytes:,} bytes")
    bloom = defense_service.build_filter(source_set.domains(), k, alphabet, plan, include_original, shards)
    path = state.out / output
    filter_store.save(path, bloom.header, bloom.bits)
    console.print(f"✅ [green]Filtro com {bloom.inserted:,} inserções em {path}[/green]")


@defend_app.command("check")
@handle_errors
def defend_check(
    filter_path: Path = typer.Argument(..., help="Arquivo do filtro"),
    domains: List[str] = typer.Argument(None, help="Domínios a verificar"),
    input_file: Optional[Path] = typer.Option(None, "--input", help="Lista de domínios"),
):
    """🔎 Verificar domínios contra o filtro (stdout: domain,HIT|MISS)"""
    header, bits = filter_store.load(filter_path)
    bloom = TyposquatFilter(header, bits)
    raw = list(domains or [])
    if input_file is not None:
        raw.extend(line for _, line in crud_corpus.read_list(input_file))
    if not raw:
        raise InvalidParameters("nenhum domínio para verificar")
    parsed = [domain_service.parse_domain(r) for r in raw]
    hits = 0
    for domain, result in zip(parsed, defense_service.check_many(bloom, parsed)):
        hits += result == CheckResultEnum.HIT
        typer.echo(f"{domain.render()},{result.value}")
    console.print(f"🔎 {hits} de {len(parsed)} marcados")


# =================== ANÁLISE ===================

@analyze_app.command("kde")
@handle_errors
def analyze_kde(
    datasets: List[str] = typer.Option(..., "--dataset", help="nome=caminho (repetível)"),
    features: List[CompareFeatureEnum] = typer.Option(list(CompareFeatureEnum), "--feature"),
    grid_points: Optional[int] = typer.Option(
        None, "--grid-points", min=16, help="Pontos da grade (padrão: refinada até b/4)"
    ),
):
    """📊 Curvas KDE por (dataset, feature): kde_<dataset>_<feature>.csv"""
    named = load_named(datasets)
    reference_name = next(iter(named))
    tables = load_tables(None, None)
    if tables.bigram is None or tables.trigram is None:
        reference = SCHEMAS[FeatureSchemaEnum.FULL]
        tables = feature_service.build_tables(named[reference_name], reference)

    comparison = analysis_service.compare_features(named, features, tables, grid_points)
    for curve in comparison.curves:
        crud_report.save_density(state.out / f"kde_{curve.dataset}_{curve.feature}.csv", curve)

    table = Table(title=f"Distância L1 até '{reference_name}'")
    table.add_column("Feature", style="cyan")
    others = [n for n in named if n != reference_name]
    for name in others:
        table.add_column(name)
    for feature in features:
        row = []
        for name in others:
            distance = analysis_service.reference_distance(comparison, reference_name, name, feature.value)
            row.append("-" if distance is None else f"{distance:.4f}")
        table.add_row(feature.value, *row)
    console.print(table)
    console.print(f"✅ [green]{len(comparison.curves)} curvas em {state.out}[/green]")


@analyze_app.command("lengths")
@handle_errors
def analyze_lengths(
    datasets: List[str] = typer.Option(..., "--dataset", help="nome=caminho (repetível)"),
    output: str = typer.Option("lengths.csv", "--output"),
):
    """📏 Média e desvio do comprimento dos domínios"""
    stats = [
        analysis_service.length_stats(ds.model_copy(update={"name": name}))
        for name, ds in load_named(datasets).items()
    ]
    path = state.out / output
    crud_report.save_length_stats(path, stats)
    for s in stats:
        console.print(f"  {s.dataset}: média {s.mean:.2f}, desvio {s.std:.2f} ({s.count:,})")
    console.print(f"✅ [green]{path}[/green]")


# =================== ROTULAGEM FRACA ===================

@app.command("weak-label")
@handle_errors
def weak_label(
    log: Path = typer.Argument(..., help="CSV domain,timestamp,response"),
    output: str = typer.Option("weak_benign.txt", "--output"),
):
    """🏷️ Extrair domínios benignos de um log de consultas DNS"""
    dataset = domain_service.weak_label(domain_service.load_query_log(log))
    path = state.out / output
    domain_service.write_dataset(path, dataset)
    console.print(f"✅ [green]{len(dataset):,} domínios benignos em {path}[/green]")


if __name__ == "__main__":
    app()
