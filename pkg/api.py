from fastapi import FastAPI, HTTPException, BackgroundTasks
from pydantic import BaseModel
import logging
import threading
import uuid
from dataclasses import asdict
from datetime import datetime
from typing import Any, Dict

from utils.config_utils import ParamsError, configure_logging, get_threads, load_environment
from utils.formulation_utils import save_solution
from utils.instance_utils import Instance, InstanceFormatError, InstanceValidationError, load_instance
from utils.pipeline_utils import MODES, SOLVE_DEFAULTS, bounds_frame, compute_bounds, resolve_settings, solve_instance
from utils.report_utils import RunReport
from utils.solver_utils import LpConfig

load_environment()
configure_logging()
logger = logging.getLogger(__name__)

app = FastAPI(title="SPCAP Solver API")

JOBS: Dict[str, Dict[str, Any]] = {}
_jobs_lock = threading.Lock()


class BoundsRequest(BaseModel):
    instance: str
    name: str = "api"
    max_rounds: int = 50
    lp_backend: str = "auto"


class SolveRequest(BaseModel):
    instance: str
    name: str = "api"
    params: Dict[str, Any] = {}
    use_supabase: bool = False


def parse_instance(text: str, name: str) -> Instance:
    try:
        return load_instance(text, name=name)
    except (InstanceFormatError, InstanceValidationError) as e:
        raise HTTPException(status_code=400, detail=f"Invalid instance: {e}")


def create_job(kind: str) -> str:
    job_id = uuid.uuid4().hex
    with _jobs_lock:
        JOBS[job_id] = {
            "job_id": job_id,
            "kind": kind,
            "status": "pending",
            "submitted_at": datetime.now().isoformat(),
            "finished_at": None,
            "result": None,
            "message": None,
        }
    return job_id


def update_job(job_id: str, **changes: Any) -> None:
    with _jobs_lock:
        JOBS[job_id].update(changes)


def _native(value: Any) -> Any:
    """numpy scalar -> Python scalar for JSON responses."""
    return value.item() if hasattr(value, "item") else value


# Background task to compute bounds
def run_bounds_task(job_id: str, inst: Instance, max_rounds: int, lp_backend: str):
    update_job(job_id, status="running")
    try:
        pi, bm = compute_bounds(inst, max_rounds=max_rounds, lp_config=LpConfig(backend=lp_backend))
        record = {key: _native(value) for key, value in bounds_frame(inst, pi, bm).iloc[0].items()}
        update_job(job_id, status="success", result=record, finished_at=datetime.now().isoformat())
    except Exception as e:
        logger.error(f"Bounds job {job_id} failed: {e}")
        update_job(job_id, status="error", message=str(e), finished_at=datetime.now().isoformat())


# Background task to solve an instance
def run_solve_task(job_id: str, inst: Instance, settings: Dict[str, Any], use_supabase: bool):
    update_job(job_id, status="running")
    try:
        outcome = solve_instance(inst, settings, threads=get_threads())
        row = asdict(outcome.row)
        row["coverage"] = outcome.row.coverage
        result = {"mode": outcome.mode, "row": row, "solution": save_solution(inst, outcome.solution)}
        if use_supabase:
            from utils.supabase_utils import save_run_report

            meta = {"mode": outcome.mode, "seed": settings["seed"], "params": dict(settings),
                    "timestamp": datetime.now().isoformat()}
            result["saved"] = save_run_report(RunReport([outcome.row]), meta)
        update_job(job_id, status="success", result=result, finished_at=datetime.now().isoformat())
    except Exception as e:
        logger.error(f"Solve job {job_id} failed: {e}")
        update_job(job_id, status="error", message=str(e), finished_at=datetime.now().isoformat())


@app.get("/")
async def root():
    return {"message": "SPCAP Solver API is running"}


@app.post("/bounds")
async def run_bounds(request: BoundsRequest, background_tasks: BackgroundTasks):
    inst = parse_instance(request.instance, request.name)
    if request.lp_backend not in ("auto", "simplex", "highs"):
        raise HTTPException(status_code=400, detail=f"Invalid lp_backend: {request.lp_backend}")

    job_id = create_job("bounds")
    background_tasks.add_task(run_bounds_task, job_id, inst, request.max_rounds, request.lp_backend)

    return {
        "status": "accepted",
        "job_id": job_id,
        "message": f"Computing bounds for {inst.name} in the background",
        "timestamp": datetime.now().isoformat()
    }


@app.post("/solve/{mode}")
async def run_solve(mode: str, request: SolveRequest, background_tasks: BackgroundTasks):
    if mode not in MODES:
        raise HTTPException(status_code=400, detail=f"Invalid mode. Must be one of: {', '.join(MODES)}")

    unknown = sorted(set(request.params) - set(SOLVE_DEFAULTS))
    if unknown:
        raise HTTPException(status_code=400, detail=f"Unknown parameters: {', '.join(unknown)}")

    inst = parse_instance(request.instance, request.name)
    try:
        settings = resolve_settings({}, {**request.params, "mode": mode})
    except ParamsError as e:
        raise HTTPException(status_code=400, detail=str(e))

    job_id = create_job(f"solve/{mode}")
    background_tasks.add_task(run_solve_task, job_id, inst, settings, request.use_supabase)

    return {
        "status": "accepted",
        "job_id": job_id,
        "message": f"Solving {inst.name} in {mode} mode in the background",
        "timestamp": datetime.now().isoformat()
    }


@app.get("/jobs/{job_id}")
async def get_job(job_id: str):
    with _jobs_lock:
        job = JOBS.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"Unknown job: {job_id}")
        return dict(job)


@app.get("/health")
async def health_check():
    return {"status": "healthy", "timestamp": datetime.now().isoformat()}
