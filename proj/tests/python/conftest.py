import os
import sys

# Test the module from the build tree even when an editable install exists.
_build = os.environ.get("GRIDTHREAT_PYTHON_DIR")
if _build:
    sys.meta_path[:] = [f for f in sys.meta_path if "ScikitBuild" not in type(f).__name__]
    sys.path.insert(0, _build)
