"""
FastAPI backend service for InstaLab.
Upload an encoded dataset, run the reconstruction attack, browse past runs.
"""

import math
import shutil
import threading
from pathlib import Path
from typing import Dict, List, Literal, Optional

from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from attack_orchestrator import run_attack
from core.dataset_io import read_dataset, truth_path_for
from core.errors import ConfigError, InstaLabError
from stages.attack_config import AttackConfig, GdConfig
from tools.parsing_tools import RunManifest, parse_all_manifests, parse_manifest
from tools.reporting import flatten, read_rows
from utils import (
    CODE_VERSION,
    INPUT_DIR,
    MANIFEST_NAME,
    OUTPUT_DIR,
    RESULTS_DIR,
    archive_run,
    ensure_dirs,
    get_logger,
    write_manifest,
)

log = get_logger(__name__)

app = FastAPI(
    title="InstaLab API",
    description="Reconstruction attacks on instance-encoded datasets",
    version=CODE_VERSION
)

# Enable CORS for browser clients of the API
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

RUN_DIR = RESULTS_DIR / "current"
ensure_dirs(INPUT_DIR, OUTPUT_DIR)

REPORTS = {
    "summary": "summary.csv",
    "metrics": "metrics.csv",
    "assignment": "assignment.csv",
}


# Pydantic models
class AttackRequest(BaseModel):
    dataset: str
    M: Optional[int] = Field(None, ge=0)
    baseline_only: bool = False
    l1: bool = False
    box: Literal["unit", "signed"] = "unit"
    set_scorer: Literal["template", "mean_weight"] = "template"
    reps: int = Field(4, ge=1)
    seed: int = Field(0, ge=0)


class AttackStatus(BaseModel):
    status: str
    dataset: Optional[str] = None
    encodings: int = 0
    metrics: Dict[str, object] = {}
    archive: Optional[str] = None
    error: Optional[str] = None


class HealthResponse(BaseModel):
    status: str
    device: str
    dtype: str
    version: str


class RunInfo(BaseModel):
    run_folder: str
    subcommand: str
    generated_timestamp: str
    seed: Optional[int]
    code_version: str
    device_used: str
    data_type: str
    command: List[str]
    inputs: Dict[str, str]
    outputs: Dict[str, str]
    params: Dict[str, str]


# Global state
attack_state = {
    "is_running": False,
    "dataset": None,
    "encodings": 0,
    "metrics": {},
    "archive": None,
    "error": None,
}
# sync handlers run in the threadpool; guards the is_running flag
start_lock = threading.Lock()


def _clean(value):
    """JSON-safe scalars: numpy to python, non-finite floats to strings."""
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _run_info(m: RunManifest) -> RunInfo:
    return RunInfo(
        run_folder=m.run_folder,
        subcommand=m.subcommand,
        generated_timestamp=m.generated_timestamp,
        seed=m.seed,
        code_version=m.code_version,
        device_used=m.device_used,
        data_type=m.data_type,
        command=m.argv,
        inputs=m.inputs,
        outputs=m.outputs,
        params=m.params,
    )


@app.get("/health", response_model=HealthResponse)
async def health():
    """Device health check endpoint."""
    from utils import get_device, get_dtype

    return HealthResponse(
        status="healthy",
        device=str(get_device()),
        dtype=str(get_dtype()),
        version=CODE_VERSION
    )


@app.post("/upload")
async def upload_files(files: List[UploadFile] = File(...)):
    """Upload encoded datasets (and optionally their .truth sidecars)."""
    log.info(f"Received {len(files)} file(s) for upload")
    INPUT_DIR.mkdir(parents=True, exist_ok=True)

    uploaded = []
    for file in files:
        name = Path(file.filename or "").name
        if not name:
            uploaded.append({"filename": file.filename, "status": "error", "error": "empty filename"})
            continue
        content = await file.read()
        (INPUT_DIR / name).write_bytes(content)
        log.info(f"Uploaded: {name}")
        uploaded.append({"filename": name, "size": len(content), "status": "uploaded"})

    return {
        "total_uploaded": len(uploaded),
        "files": uploaded
    }


@app.post("/attack", response_model=AttackStatus)
def start_attack(request: AttackRequest):
    """Run the reconstruction pipeline on an uploaded dataset and archive the run."""
    dataset_path = INPUT_DIR / Path(request.dataset).name
    with start_lock:
        if attack_state["is_running"]:
            raise HTTPException(status_code=409, detail="An attack is already running")
        if not dataset_path.exists():
            raise HTTPException(status_code=404, detail=f"Dataset '{request.dataset}' has not been uploaded")
        attack_state.update(is_running=True, dataset=dataset_path.name, metrics={}, archive=None, error=None)

    log.info(f"Starting attack on {dataset_path}")
    try:
        config = AttackConfig.create(
            clique_extra=request.M,
            baseline_only=request.baseline_only,
            box=request.box,
            set_scorer=request.set_scorer,
            reps_per_set=request.reps,
            seed=request.seed,
            gd=GdConfig.create(l1=request.l1),
        )
        ds = read_dataset(dataset_path)
        truth = truth_path_for(dataset_path)

        if RUN_DIR.exists():
            shutil.rmtree(RUN_DIR)
        final_state = run_attack(ds, config, out_dir=RUN_DIR, truth_path=truth if truth.exists() else None)

        outputs = {key: name for key, name in REPORTS.items() if (RUN_DIR / name).exists()}
        write_manifest(RUN_DIR, "attack", ["attack", "--in", str(dataset_path), "--out", str(RUN_DIR)],
                       request.seed, flatten(config.model_dump()),
                       inputs={"dataset": str(dataset_path)}, outputs=outputs)
        archive = archive_run(RUN_DIR, OUTPUT_DIR)

        attack_state.update(
            encodings=len(ds),
            metrics={k: _clean(v) for k, v in final_state.get("metrics", {}).items()},
            archive=archive.name,
        )
        log.info("Attack completed successfully")
        return AttackStatus(status="completed", dataset=dataset_path.name, encodings=len(ds),
                            metrics=attack_state["metrics"], archive=archive.name)

    except ConfigError as e:
        attack_state["error"] = str(e)
        raise HTTPException(status_code=400, detail=str(e))
    except InstaLabError as e:
        log.error(f"Attack error: {str(e)}")
        attack_state["error"] = str(e)
        raise HTTPException(status_code=500, detail=str(e))
    finally:
        attack_state["is_running"] = False


@app.get("/status", response_model=AttackStatus)
async def get_status():
    """Get current attack status."""
    if attack_state["is_running"]:
        status = "running"
    elif attack_state["error"]:
        status = "failed"
    elif attack_state["archive"]:
        status = "completed"
    else:
        status = "idle"
    return AttackStatus(
        status=status,
        dataset=attack_state["dataset"],
        encodings=attack_state["encodings"],
        metrics=attack_state["metrics"],
        archive=attack_state["archive"],
        error=attack_state["error"],
    )


def _report_file(name: str) -> Path:
    if name not in REPORTS:
        raise HTTPException(status_code=404, detail=f"Unknown report '{name}'")
    path = RUN_DIR / REPORTS[name]
    if not path.exists():
        raise HTTPException(status_code=404, detail="Report not available yet")
    return path


@app.get("/reports/{name}")
async def get_report(name: str):
    """Download a CSV report of the latest attack."""
    path = _report_file(name)
    return FileResponse(path, media_type="text/csv", filename=path.name)


@app.get("/reports/{name}/content")
async def get_report_content(name: str):
    """Get a CSV report of the latest attack as JSON rows."""
    path = _report_file(name)
    rows = read_rows(path)
    log.info(f"Retrieved {name} report ({len(rows)} rows)")
    return {
        "status": "success",
        "filename": path.name,
        "rows": rows,
        "length": len(rows)
    }


@app.get("/runs")
async def list_runs():
    """List the manifests of all archived runs."""
    manifests = parse_all_manifests(OUTPUT_DIR)
    runs = sorted((_run_info(m) for m in manifests.values()), key=lambda r: r.run_folder, reverse=True)
    log.info(f"Retrieved {len(runs)} archived run manifests")
    return {
        "status": "success",
        "total_runs": len(runs),
        "runs": runs
    }


@app.get("/runs/{run_name}", response_model=RunInfo)
async def get_run(run_name: str):
    """Get the manifest of one archived run."""
    manifest = parse_manifest(OUTPUT_DIR / Path(run_name).name / MANIFEST_NAME)
    if not manifest:
        raise HTTPException(status_code=404, detail=f"Run '{run_name}' not found or invalid")
    log.info(f"Retrieved manifest for run: {run_name}")
    return _run_info(manifest)


@app.delete("/reset")
async def reset():
    """Reset attack state and clear uploaded files."""
    log.info("Resetting system state...")

    for file in INPUT_DIR.glob("*"):
        if file.is_file():
            file.unlink()
    if RUN_DIR.exists():
        shutil.rmtree(RUN_DIR)

    attack_state.update(is_running=False, dataset=None, encodings=0, metrics={}, archive=None, error=None)
    log.info("System reset completed")
    return {"status": "reset"}


@app.get("/")
async def root():
    """Root endpoint."""
    return {
        "name": "InstaLab API",
        "version": CODE_VERSION,
        "docs": "/docs",
        "health": "/health"
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
