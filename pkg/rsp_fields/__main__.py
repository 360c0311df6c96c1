"""Allow running the package with ``python -m rsp_fields``."""
import sys

from .cli import main

sys.exit(main())
