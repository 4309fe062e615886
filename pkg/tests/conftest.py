import sys
from datetime import timedelta
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=50, deadline=timedelta(seconds=2))
settings.load_profile("default")

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"
DATA_DIR = REPO_ROOT / "data"
