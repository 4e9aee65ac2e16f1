from __future__ import annotations
from contextlib import contextmanager
from importlib import import_module
from typing import Any, Dict, List

from fastapi import HTTPException
from numpy.linalg import LinAlgError

from ..src.nhqc.errors import NumericalError, ParameterError

from ..config import MODULES_ORDER


def get_router_for(slug: str):
    """Return the APIRouter of module ``slug`` (``backend/modules/<slug>/router.py``)."""
    if slug not in MODULES_ORDER:
        raise ValueError(f"Unknown module slug: {slug}")
    # Local import keeps scipy-heavy modules out of package import time
    return import_module(f".{slug}.router", __name__).router


def list_modules(order: List[str], meta: Dict[str, Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Return ordered list of module metadata."""
    items: List[Dict[str, Any]] = []
    for slug in order:
        m = dict(meta.get(slug, {}))
        m.setdefault("slug", slug)
        items.append(m)
    return items


@contextmanager
def http_errors():
    """Translate library errors: invalid input -> 400, numerical failure -> 422."""
    try:
        yield
    except ParameterError as exc:
        raise HTTPException(400, str(exc)) from exc
    except (NumericalError, LinAlgError) as exc:
        raise HTTPException(422, f"Numerical failure: {exc}") from exc
