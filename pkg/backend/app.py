from __future__ import annotations
from fastapi import FastAPI
from typing import Optional
import logging

from config import settings

from .config import MODULES_ORDER, MODULES_META
from .modules import get_router_for, list_modules
from .src.nhqc import __version__

logger = logging.getLogger(__name__)

app = FastAPI(title="nhqc API", version=__version__)


@app.get("/health")
def health():
    return {"ok": True}


@app.get("/modules")
def list_available_modules():
    return {"modules": list_modules(MODULES_ORDER, MODULES_META)}


# Include routers for each module under /modules/<slug>
for slug in MODULES_ORDER:
    app.include_router(get_router_for(slug), prefix=f"/modules/{slug}", tags=[slug])


def run(host: Optional[str] = None, port: Optional[int] = None) -> None:
    """Serve the API with uvicorn (``start-backend`` / ``nhqc serve``)."""
    import uvicorn

    logging.basicConfig(level=settings.LOG_LEVEL)
    host = host or settings.API_HOST
    port = port or settings.API_PORT
    logger.info("serving nhqc API on %s:%d", host, port)
    uvicorn.run(app, host=host, port=port, log_level=settings.LOG_LEVEL.lower())
