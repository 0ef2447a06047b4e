import sys
from pathlib import Path

from hypothesis import settings

# The oracles module lives next to the tests.
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")
