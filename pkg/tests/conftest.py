import sys
from pathlib import Path

import voxpose  # noqa: F401  (pins BLAS threads before numpy loads)

sys.path.insert(0, str(Path(__file__).parent))
