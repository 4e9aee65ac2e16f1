from __future__ import annotations
from typing import Dict, Any, List

# Ordered list of module slugs exposed by the API
MODULES_ORDER: List[str] = [
    "spectral",
    "topology",
    "doublon",
    "dynamics",
]

# Metadata per module
MODULES_META: Dict[str, Dict[str, Any]] = {
    "spectral": {
        "title": "Spectrum",
        "description": "Eigenvalues, epsilon = max|Im E| and IPR extrema; h scans",
    },
    "topology": {
        "title": "Winding",
        "description": "Point-gap winding number around a base energy",
    },
    "doublon": {
        "title": "Doublon",
        "description": "Strong-coupling thresholds and the effective doublon model",
    },
    "dynamics": {
        "title": "Bunching",
        "description": "Post-selected evolution of a particle pair and its bunching time",
    },
}
