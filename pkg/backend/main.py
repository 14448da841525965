from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field
from typing import Optional, List, Dict
import logging
import uvicorn

from modules.config import ExperimentConfig, PlanRequest
from modules.decoding_graph import CodeFamily
from modules.errors import DecodingError
from modules.harness import cmd_fidelity, cmd_plan
from modules.resources import TimingModel
from modules.scheduler import check_backlog, simulate_pipeline
from modules.tiling import assign_boundaries, color_hex_2d, extrude, validate_coloring
from modules.windowing import WindowConfig, layout_manifest, sliding_layout, window_layout

logger = logging.getLogger(__name__)

app = FastAPI(title="Parallel Window Decoding API", version="1.0.0")

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["http://localhost:3000", "http://localhost:5173"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

MAX_FIDELITY_SHOTS = 2000

# Request/Response Models
class LayoutRequest(BaseModel):
    total_rounds: int = Field(ge=1)
    w: int = Field(ge=1)
    sliding: bool = False
    n_buf: Optional[int] = Field(default=None, ge=0)

class FidelityRequest(BaseModel):
    family: CodeFamily = CodeFamily.ROTATED_PLANAR
    d: int = 3
    p: float = 0.02
    rounds: Optional[int] = None
    shots: int = Field(default=200, ge=1, le=MAX_FIDELITY_SHOTS)
    seed: int = Field(default=12345, ge=0)
    decoder: str = "uf"
    modes: List[str] = ["global", "sliding", "parallel"]

class SimulationRequest(BaseModel):
    total_rounds: int = Field(ge=1)
    w: int = Field(ge=1)
    n: int = Field(ge=1)
    tau_rd: float
    tau_W: float
    tau_0: float = 1e-9

class BacklogRequest(BaseModel):
    r_gen: float
    r_proc: float
    k: int = 1

class HexTilingRequest(BaseModel):
    width: int = 12
    height: int = 12
    cell_size: float = 2.0
    rounds: int = 0


def _bad_request(e: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(e))

@app.get("/")
async def root():
    return {"message": "Parallel Window Decoding API", "version": "1.0.0"}

@app.post("/api/plan")
async def plan(request: PlanRequest):
    """Minimum workers, response time and auxiliary-qubit overhead"""
    try:
        return cmd_plan(request).model_dump()
    except (DecodingError, ValueError) as e:
        raise _bad_request(e)
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))

@app.post("/api/window-layout")
async def window_layout_endpoint(request: LayoutRequest):
    """Windows covering a stream, with commit regions and boundary kinds"""
    try:
        if request.sliding:
            windows = sliding_layout(request.total_rounds, WindowConfig.sliding(request.w, request.n_buf))
        else:
            windows = window_layout(request.total_rounds, request.w)
        return {
            "windows": [
                {
                    "id": win.window_id,
                    "layer": win.layer.value,
                    "start": win.start,
                    "end": win.end,
                    "commit_start": win.commit_start,
                    "commit_end": win.commit_end,
                    "bottom": win.bottom.value,
                    "top": win.top.value,
                }
                for win in windows
            ],
            "manifest": layout_manifest(windows),
        }
    except (DecodingError, ValueError) as e:
        raise _bad_request(e)
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))

@app.post("/api/fidelity")
def fidelity(request: FidelityRequest):
    """Logical error rates per decoding mode on shared shots (shot count capped)"""
    try:
        cfg = ExperimentConfig(
            family=request.family, distances=[request.d], p=request.p, rounds=request.rounds,
            shots=request.shots, seed=request.seed, decoder=request.decoder, modes=request.modes,
        )
        return {"records": [record.model_dump() for record in cmd_fidelity(cfg)]}
    except (DecodingError, ValueError) as e:
        raise _bad_request(e)
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))

@app.post("/api/pipeline-simulation")
async def pipeline_simulation(request: SimulationRequest):
    """Synthetic-clock run of the DA/DB block pipeline"""
    try:
        timing = TimingModel(tau_rd=request.tau_rd, tau_W=request.tau_W, tau_0=request.tau_0)
        return simulate_pipeline(request.total_rounds, request.w, request.n, timing).model_dump()
    except (DecodingError, ValueError) as e:
        raise _bad_request(e)
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))

@app.post("/api/backlog")
async def backlog(request: BacklogRequest):
    try:
        return check_backlog(request.r_gen, request.r_proc, request.k).model_dump()
    except (DecodingError, ValueError) as e:
        raise _bad_request(e)
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))

@app.post("/api/tiling/hex")
async def hex_tiling(request: HexTilingRequest):
    """Three-colour hexagonal tiling with per-colour rough face counts"""
    try:
        partition = color_hex_2d((request.width, request.height), request.cell_size)
        if request.rounds:
            partition = extrude(partition, request.rounds)
        order = [color for color in ("A", "B", "C") if color in partition.colors]
        boundaries = assign_boundaries(partition, order)
        rough: Dict[str, int] = {color: 0 for color in partition.colors}
        for region in boundaries.values():
            rough[region.color] += region.rough_faces
        return {
            "regions": len(partition.regions),
            "colors": partition.colors,
            "valid": validate_coloring(partition),
            "rough_faces_by_color": rough,
        }
    except (DecodingError, ValueError) as e:
        raise _bad_request(e)
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))

if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=8000)
