import pathlib
import sys

# The repo root holds the primary package's test helpers (tests.ttt_source);
# the host suite reuses the same candidate source text.
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[2]))
