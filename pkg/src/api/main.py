#!/usr/bin/env python
import logging
from contextlib import asynccontextmanager
from typing import Dict, List

from fastapi import FastAPI, HTTPException
from pydantic import ValidationError

from ..shared.config import Config
from ..shared.errors import BellError
from ..shared.schemas import (BoxFile, EvaluateRequest, EvaluationResponse,
                              ICEvaluationResponse, InequalityFile,
                              OracleRequest)
from .service import inequality_service

# Configure logging
logging.basicConfig(
    level=getattr(logging, Config.LOG_LEVEL.upper()),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[
        logging.StreamHandler(),
    ],
)

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """FastAPI lifespan context manager for startup/shutdown logic"""
    logger.info("Starting inequality API service")

    health = inequality_service.health_check()
    if health["status"] != "healthy":
        logger.error(f"Box catalog failed to build: {health.get('error')}")
        raise RuntimeError("Could not build the box catalog")

    yield

    logger.info("Shutting down inequality API service")


app = FastAPI(
    title="IC Bounds API",
    description="Quadratic Bell inequalities derived from information causality",
    version="1.0.0",
    lifespan=lifespan,
)


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return inequality_service.health_check()


@app.post("/boxes/validate")
async def validate_box(box: BoxFile) -> Dict:
    try:
        return inequality_service.validate_box(box)
    except BellError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error validating box: {e}")
        raise HTTPException(status_code=500, detail="Internal server error")


@app.get("/inequalities", response_model=List[str])
async def list_families():
    return inequality_service.list_families()


@app.get("/inequalities/{family}", response_model=InequalityFile)
async def get_inequality(family: str, n: int = 2, d: int = 2, t: int = 1, eps: float = 0.0):
    """Coefficients of a named inequality family member"""
    try:
        return inequality_service.get_inequality(family, n=n, d=d, t=t, eps=eps)
    except BellError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error deriving {family}: {e}")
        raise HTTPException(status_code=500, detail="Internal server error")


@app.post("/inequalities/evaluate", response_model=EvaluationResponse)
async def evaluate_inequality(request: EvaluateRequest):
    try:
        return inequality_service.evaluate(request)
    except (BellError, ValidationError) as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error evaluating {request.family}: {e}")
        raise HTTPException(status_code=500, detail="Internal server error")


@app.post("/oracle/ic", response_model=ICEvaluationResponse)
async def information_causality(request: OracleRequest):
    """Exact IC sum for a box, a protocol and a noisy channel"""
    try:
        return inequality_service.information_causality(request)
    except BellError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error(f"Error in IC oracle: {e}")
        raise HTTPException(status_code=500, detail="Internal server error")


@app.get("/")
async def index():
    return {"message": "Welcome to the IC Bounds API"}


def main():
    """Entry point for the API service"""
    import uvicorn

    logger.info(f"Starting IC Bounds API on {Config.API_HOST}:{Config.API_PORT}")
    uvicorn.run(app, host=Config.API_HOST, port=Config.API_PORT)


if __name__ == "__main__":
    main()
