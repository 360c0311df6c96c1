"""Remote state preparation of single-particle field states by superoscillating windows."""
from __future__ import annotations

import json
from pathlib import Path

MANIFEST = json.loads((Path(__file__).parent / "manifest.json").read_text(encoding="utf-8"))

__version__ = MANIFEST["version"]
