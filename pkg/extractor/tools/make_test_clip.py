"""Regenerate the bundled test clip at tests/data/clip_10s.avi.

The committed file is the canonical artifact: encoder builds differ, so
regenerating on another OpenCV version can change the bytes while the
decoded content stays equivalent. Tests depend only on decoded content.
"""

import hashlib
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vrsick_extractor.clipgen import write_test_clip  # noqa: E402

CLIP = Path(__file__).resolve().parents[1] / "tests" / "data" / "clip_10s.avi"
PARAMS = dict(seconds=10.0, fps=8.0, size=(96, 96), seed=7)


def main() -> int:
    CLIP.parent.mkdir(parents=True, exist_ok=True)
    frames = write_test_clip(CLIP, **PARAMS)
    digest = hashlib.sha256(CLIP.read_bytes()).hexdigest()
    print(f"wrote {CLIP} ({frames} frames, {CLIP.stat().st_size} bytes)")
    print(f"sha256 {digest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
