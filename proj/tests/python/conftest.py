import pathlib
import sys

HERE = pathlib.Path(__file__).resolve()
ROOT = HERE.parents[2]

# in-tree runs: pick up the package sources and the built extension
sys.path.insert(0, str(ROOT / "python"))
build = ROOT / "build" / "python"
if build.is_dir():
    sys.path.insert(0, str(build))
