# credex/cli.py
import json
from pathlib import Path
from typing import Callable, List, Optional

import typer
from pydantic import ValidationError

from credex import config
from credex.ecm import FOCAL_ALIASES, fit_ecm, synth_generate
from credex.errors import CredexError, InputError, SchemaViolation, UnsupportedDimension
from credex.explain import DnfTable, representativeness_matrix
from credex.files import atomic_write_text
from credex.iemm import iemm_fit
from credex.log import configure_logging, get_logger
from credex.models import EcmConfig, IemmConfig, RunConfig
from credex.partition import ingest_external, load_dataset_csv, save_dataset_csv, save_partition
from credex.presets import get_preset
from credex.render import ScatterScene, render_report
from credex.utility import format_lambda, lambda_tag, parse_lambda_list

log = get_logger("cli")

app = typer.Typer(
    help="Evidential clustering and cautious decision-tree explanations.",
    no_args_is_help=True,
    add_completion=False,
)

EMIT_CHOICES = ("md", "csv", "json", "dot", "svg")


@app.callback()
def _main() -> None:
    configure_logging()


def _run(fn: Callable[[], None]) -> None:
    try:
        fn()
    except CredexError as e:
        typer.echo(f"error: {e.detail}", err=True)
        raise typer.Exit(e.exit_code)
    except FileNotFoundError as e:
        typer.echo(f"error: file not found: {e.filename or e}", err=True)
        raise typer.Exit(2)
    except ValidationError as e:
        typer.echo(f"error: invalid configuration: {e.errors()[0]['msg']}", err=True)
        raise typer.Exit(2)


def _load_config(path: Optional[Path]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path}: not valid JSON ({e.msg})") from None
    return RunConfig.model_validate(raw)


def _emit_list(raw: Optional[str], fallback: List[str]) -> List[str]:
    if raw is None:
        return list(fallback)
    out = [p.strip().lower() for p in raw.split(",") if p.strip()]
    bad = [p for p in out if p not in EMIT_CHOICES]
    if bad:
        raise InputError(f"unknown --emit format(s) {bad}; choose from {','.join(EMIT_CHOICES)}")
    return out


def _out_dir(flag: Optional[Path], cfg: RunConfig) -> Path:
    return Path(flag or cfg.out or config.CREDEX_OUT_DIR)


def _write(path: Path, text: str) -> None:
    atomic_write_text(path, text)
    log.info("Wrote %s", path)


# ---------- synth ----------
@app.command("synth")
def synth(
    preset: Optional[str] = typer.Option(None, help="fig1 | easy | full3"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="JSON RunConfig with a `synth` block."),
    seed: Optional[int] = typer.Option(None, min=0, help="Overrides the preset/config seed."),
    out: Optional[Path] = typer.Option(None, help="Output directory."),
) -> None:
    """Generate a synthetic Gaussian dataset as CSV."""

    def body() -> None:
        cfg = _load_config(config_path)
        name = preset or cfg.preset
        if name:
            p = get_preset(name)
            synth_cfg = p.with_seed(seed if seed is not None else cfg.seed)
        elif cfg.synth is not None:
            synth_cfg = cfg.synth
            if seed is not None or cfg.seed is not None:
                synth_cfg = synth_cfg.model_copy(update={"seed": seed if seed is not None else cfg.seed})
        else:
            raise InputError("synth needs --preset or a config file with a `synth` block")
        data = synth_generate(synth_cfg)
        target = _out_dir(out, cfg) / f"{name or 'synth'}.csv"
        save_dataset_csv(target, data)
        typer.echo(str(target))

    _run(body)


# ---------- cluster ----------
@app.command("cluster")
def cluster(
    data_path: Optional[Path] = typer.Option(None, "--data", help="Dataset CSV to cluster."),
    input_path: Optional[Path] = typer.Option(None, "--input", help="External partition JSON to ingest instead."),
    preset: Optional[str] = typer.Option(None, help="Generate the preset dataset and cluster it."),
    clusters: Optional[int] = typer.Option(None, min=2, max=16, help="Number of clusters C."),
    focal: Optional[str] = typer.Option(None, help="all | qb"),
    config_path: Optional[Path] = typer.Option(None, "--config"),
    seed: Optional[int] = typer.Option(None, min=0),
    out: Optional[Path] = typer.Option(None, help="Output directory."),
) -> None:
    """Fit an evidential c-means partition (or ingest one) and write partition JSON."""

    def body() -> None:
        cfg = _load_config(config_path)
        target = _out_dir(out, cfg) / "partition.json"
        inp = input_path or (Path(cfg.input) if cfg.input else None)
        if inp is not None:
            data, p, centroids = ingest_external(inp, data_path or cfg.data)
            save_partition(target, data, p, centroids)
            typer.echo(str(target))
            return

        ecm_cfg = cfg.ecm
        name = preset or cfg.preset
        if name:
            pre = get_preset(name)
            data = synth_generate(pre.with_seed(seed if seed is not None else cfg.seed))
            if ecm_cfg is None:
                ecm_cfg = EcmConfig(n_clusters=pre.n_clusters, focal_policy=pre.focal_policy)
        else:
            src = data_path or (Path(cfg.data) if cfg.data else None)
            if src is None:
                raise InputError("cluster needs --data, --preset or --input")
            data = load_dataset_csv(src)

        update = {}
        if clusters is not None:
            update["n_clusters"] = clusters
        if focal is not None:
            if focal not in FOCAL_ALIASES:
                raise InputError(f"--focal must be 'all' or 'qb', got {focal!r}")
            update["focal_policy"] = FOCAL_ALIASES[focal]
        if seed is not None or cfg.seed is not None:
            update["seed"] = seed if seed is not None else cfg.seed
        if ecm_cfg is None:
            if clusters is None:
                raise InputError("--clusters is required when no preset or ecm config is given")
            ecm_cfg = EcmConfig(n_clusters=clusters)
        ecm_cfg = EcmConfig.model_validate({**ecm_cfg.model_dump(), **update})

        res = fit_ecm(data, ecm_cfg)
        save_partition(target, data, res.partition, res.centroids)
        typer.echo(str(target))

    _run(body)


def _lambdas(flag: Optional[str], from_cfg: Optional[List[float]], fallback: str = "0") -> List[float]:
    if flag is not None:
        return list(parse_lambda_list(flag))
    if from_cfg:
        return list(from_cfg)
    return list(parse_lambda_list(fallback))


# ---------- explain ----------
@app.command("explain")
def explain(
    input_path: Optional[Path] = typer.Option(None, "--input", help="Partition JSON."),
    data_path: Optional[Path] = typer.Option(None, "--data", help="Dataset CSV when rows are not embedded."),
    lambdas: Optional[str] = typer.Option(None, "--lambda", help="Comma-separated list, e.g. -inf,-1,0,1,inf"),
    emit: Optional[str] = typer.Option(None, help="Comma-separated subset of md,csv,json,dot,svg"),
    config_path: Optional[Path] = typer.Option(None, "--config"),
    out: Optional[Path] = typer.Option(None, help="Output directory."),
) -> None:
    """Fit one explanation tree per lambda and write trees and DNF tables."""

    def body() -> None:
        cfg = _load_config(config_path)
        inp = input_path or (Path(cfg.input) if cfg.input else None)
        if inp is None:
            raise InputError("explain needs --input <partition.json>")
        formats = _emit_list(emit, cfg.emit)
        data, p, centroids = ingest_external(inp, data_path or cfg.data)
        if "svg" in formats and data.dim != 2:
            raise UnsupportedDimension(f"--emit svg needs 2-D data, got {data.dim} dimensions")

        lams = _lambdas(lambdas, cfg.lambdas, cfg.iemm.label() if cfg.iemm else "0")
        mode = cfg.iemm.mode if cfg.iemm else None
        folder = _out_dir(out, cfg)
        trees = {}
        for lam in lams:
            tree = iemm_fit(data, p, centroids, IemmConfig(lam=lam, mode=mode))
            trees[format_lambda(lam)] = tree
            tag = lambda_tag(lam)
            if "json" in formats:
                _write(folder / f"tree_{tag}.json", render_report(tree, "json"))
            if "dot" in formats:
                _write(folder / f"tree_{tag}.dot", render_report(tree, "dot"))
            if "svg" in formats:
                _write(folder / f"scatter_{tag}.svg", render_report(ScatterScene(tree, data, p), "svg"))

        table = DnfTable.from_trees(trees)
        if "md" in formats:
            _write(folder / "dnf.md", render_report(table, "md"))
        if "csv" in formats:
            _write(folder / "dnf.csv", render_report(table, "csv"))
        typer.echo(str(folder))

    _run(body)


# ---------- evaluate ----------
@app.command("evaluate")
def evaluate(
    input_path: Optional[Path] = typer.Option(None, "--input", help="Partition JSON."),
    data_path: Optional[Path] = typer.Option(None, "--data"),
    lambdas: Optional[str] = typer.Option(None, "--lambda", help="Training lambdas (tree rows)."),
    eval_lambdas: Optional[str] = typer.Option(None, "--eval-lambda", help="Evaluation lambdas (columns); defaults to --lambda."),
    emit: Optional[str] = typer.Option(None, help="Comma-separated subset of md,csv,json"),
    config_path: Optional[Path] = typer.Option(None, "--config"),
    out: Optional[Path] = typer.Option(None, help="Output directory."),
) -> None:
    """Representativeness matrix: trees trained per lambda, scored under every utility."""

    def body() -> None:
        cfg = _load_config(config_path)
        inp = input_path or (Path(cfg.input) if cfg.input else None)
        if inp is None:
            raise InputError("evaluate needs --input <partition.json>")
        formats = _emit_list(emit, ["md", "csv"])
        data, p, centroids = ingest_external(inp, data_path or cfg.data)
        train = _lambdas(lambdas, cfg.lambdas)
        evals = _lambdas(eval_lambdas, cfg.eval_lambdas, ",".join(format_lambda(t) for t in train))
        report = representativeness_matrix(data, p, centroids, train, evals)
        folder = _out_dir(out, cfg)
        for fmt, name in (("md", "matrix.md"), ("csv", "matrix.csv"), ("json", "matrix.json")):
            if fmt in formats:
                _write(folder / name, render_report(report, fmt))
        typer.echo(str(folder))

    _run(body)


def main() -> int:
    app()
    return 0
