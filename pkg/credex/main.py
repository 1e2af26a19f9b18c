# credex/main.py
from typing import Any, Dict, List, Tuple

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.routing import APIRoute
from starlette.concurrency import run_in_threadpool

from credex import __version__, config
from credex.errors import CredexError
from credex.explain import representativeness_matrix, tree_to_dnf
from credex.iemm import iemm_fit, tree_total_mistakeness
from credex.log import configure_logging, get_logger
from credex.models import (
    EvaluateRequest,
    EvaluateResponse,
    ExplainRequest,
    ExplainResponse,
    PartitionDocument,
)
from credex.partition import CentroidSet, CredalPartition, Dataset, parse_partition_document
from credex.utility import format_lambda, parse_lambda

configure_logging()
log = get_logger("service")

app = FastAPI(title="credex", version=__version__)

app.add_middleware(
    CORSMiddleware,
    allow_origins=config.CORS_ORIGINS,
    allow_credentials=False,
    allow_methods=["*"],
    allow_headers=["*"],
)


# ---------------------- Basics ----------------------
@app.get("/")
async def root():
    return {
        "name": "credex",
        "version": getattr(app, "version", None),
        "docs": "/docs",
        "endpoints_hint": ["/health", "/healthz", "/routes", "/v1/explain", "/v1/evaluate"],
    }


@app.get("/health")
async def health():
    return {"status": "ok"}


@app.get("/healthz")
async def healthz():
    return {"status": "ok"}


@app.get("/routes")
async def routes():
    return [r.path for r in app.routes if isinstance(r, APIRoute)]


# ---------------------- helpers ----------------------
def _parse(doc: PartitionDocument) -> Tuple[Dataset, CredalPartition, CentroidSet]:
    rows = len(doc.masses)
    if rows > config.CREDEX_MAX_ROWS:
        raise HTTPException(status_code=413, detail=f"{rows} observations exceed the limit of {config.CREDEX_MAX_ROWS}")
    try:
        return parse_partition_document(doc)
    except CredexError as e:
        raise HTTPException(status_code=e.status_code, detail=e.detail) from e


def _lambdas(raw: List[Any]) -> List[float]:
    try:
        return [parse_lambda(x) for x in raw]
    except CredexError as e:
        raise HTTPException(status_code=e.status_code, detail=e.detail) from e


def _explain(doc: PartitionDocument, lams: List[float]) -> Dict[str, Any]:
    data, p, centroids = _parse(doc)
    out: Dict[str, Any] = {"trees": {}, "dnf": {}, "total_mistakeness": {}}
    for lam in lams:
        label = format_lambda(lam)
        tree = iemm_fit(data, p, centroids, lam)
        out["trees"][label] = tree.to_json()
        out["dnf"][label] = tree_to_dnf(tree).as_strings()
        out["total_mistakeness"][label] = tree_total_mistakeness(tree, data, p)
    return out


def _evaluate(doc: PartitionDocument, train: List[float], evals: List[float]) -> Dict[str, Any]:
    data, p, centroids = _parse(doc)
    report = representativeness_matrix(data, p, centroids, train, evals)
    return {
        "train_lambdas": list(report.train_labels),
        "eval_lambdas": list(report.eval_labels),
        "values": report.values.tolist(),
        "bold": report.bold.tolist(),
    }


# ---------------------- v1 ----------------------
@app.post("/v1/explain", response_model=ExplainResponse, tags=["explain"])
async def explain(req: ExplainRequest):
    lams = _lambdas(req.lambdas)
    try:
        result = await run_in_threadpool(_explain, req.partition, lams)
    except CredexError as e:
        log.warning("explain failed: %s", e.detail)
        raise HTTPException(status_code=e.status_code, detail=e.detail) from e
    return {"ok": True, **result}


@app.post("/v1/evaluate", response_model=EvaluateResponse, tags=["explain"])
async def evaluate(req: EvaluateRequest):
    train = _lambdas(req.train_lambdas)
    evals = _lambdas(req.eval_lambdas) if req.eval_lambdas else train
    try:
        result = await run_in_threadpool(_evaluate, req.partition, train, evals)
    except CredexError as e:
        log.warning("evaluate failed: %s", e.detail)
        raise HTTPException(status_code=e.status_code, detail=e.detail) from e
    return {"ok": True, **result}
