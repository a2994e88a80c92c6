from __future__ import annotations

import json
import sys
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))  # canny_reference importable as a top-level module


def make_synthetic_images() -> list[np.ndarray]:
    """Twenty deterministic RGB test images mixing flat regions, hard
    edges, curves, gradients, and noise."""
    rng = np.random.default_rng(20240501)
    images: list[np.ndarray] = []

    def gray(img2d):
        return np.repeat(img2d[:, :, None], 3, axis=2).astype(np.uint8)

    images.append(gray(np.full((64, 64), 128)))  # constant

    step_v = np.zeros((100, 100)); step_v[:, 50:] = 255
    images.append(gray(step_v))

    step_h = np.zeros((64, 64)); step_h[32:, :] = 255
    images.append(gray(step_h))

    yy, xx = np.mgrid[0:80, 0:80]
    images.append(gray(np.where(xx > yy, 230, 20)))  # diagonal split

    square = np.zeros((60, 60)); square[20:40, 20:40] = 255
    images.append(gray(square))

    yy, xx = np.mgrid[0:72, 0:72]
    circle = ((xx - 36) ** 2 + (yy - 36) ** 2 <= 20**2) * 255
    images.append(gray(circle))

    ring = (((xx - 36) ** 2 + (yy - 36) ** 2 <= 25**2)
            & ((xx - 36) ** 2 + (yy - 36) ** 2 >= 15**2)) * 255
    images.append(gray(ring))

    ramp_v = np.tile(np.linspace(0, 255, 64), (64, 1)).T
    images.append(gray(ramp_v))

    ramp_h = np.tile(np.linspace(0, 255, 64), (64, 1))
    images.append(gray(ramp_h))

    yy, xx = np.mgrid[0:64, 0:64]
    images.append(gray(((xx // 8 + yy // 8) % 2) * 255))  # 8px checkerboard
    images.append(gray(((xx // 4 + yy // 4) % 2) * 255))  # 4px checkerboard

    images.append(rng.integers(0, 256, (48, 48, 3)).astype(np.uint8))  # rgb noise

    sine = 127.5 + 127.5 * np.sin(xx / 5.0) * np.cos(yy / 7.0)
    images.append(gray(sine))

    noisy_circle = circle + rng.normal(0, 12, circle.shape)
    images.append(gray(np.clip(noisy_circle, 0, 255)))

    tri = np.where(xx + yy > 64, 200, 40)
    images.append(gray(tri))

    lines = np.zeros((64, 64)); lines[::8, :] = 255; lines[:, ::8] = 255
    images.append(gray(lines))

    blocks = rng.integers(0, 256, (8, 8))
    images.append(gray(np.kron(blocks, np.ones((8, 8)))))

    halves = np.zeros((48, 48, 3), dtype=np.uint8)
    halves[:, :24, 0] = 220; halves[:, 24:, 1] = 220  # red/green halves
    images.append(halves)

    images.append(rng.integers(0, 4, (40, 40, 3)).astype(np.uint8) * 80)  # coarse color noise

    combo = np.tile(np.linspace(20, 180, 64), (64, 1))
    combo[16:48, 16:48] = 250
    images.append(gray(combo))

    assert len(images) == 20
    return images


@pytest.fixture(scope="session")
def synthetic_images():
    return make_synthetic_images()


@dataclass
class DemoPipeline:
    root: Path
    dataset: Path
    heldout: Path
    scripts: Path


def build_demo_pipeline(root: Path) -> DemoPipeline:
    """A ten-record seed corpus plus five held-out questions and mock
    scripts under which nine of the ten seeds are solvable.

    q01 is only solvable through the SA RR OA context scripts and q07 is
    unsolvable, so library builds exercise multi-step discovery and the
    discard path.
    """
    rng = np.random.default_rng(99)
    root.mkdir(parents=True, exist_ok=True)

    Image.fromarray(rng.integers(0, 256, (32, 32, 3)).astype(np.uint8)).save(root / "noise.png")
    arr = np.zeros((32, 32, 3), dtype=np.uint8); arr[:, 16:] = 255
    Image.fromarray(arr).save(root / "step.png")

    questions = [
        ("q00", "Which option names the smallest prime number of the listed values here?", "mcqa", "B", ["nine", "two", "eight", "six"], "noise.png"),
        ("q01", "Which option gives the number of sides a hexagon has when counted once?", "mcqa", "C", ["four", "five", "six", "seven"], "step.png"),
        ("q02", "Which option equals the result of doubling the value four exactly once?", "mcqa", "A", ["eight", "three", "five", "ten"], None),
        ("q03", "Which option is the color of a stop sign under ordinary daylight?", "mcqa", "D", ["green", "blue", "white", "red"], "noise.png"),
        ("q04", "Is a square always a rectangle under the usual definition?", "yesno", "yes", None, "step.png"),
        ("q05", "Is the sum of two odd numbers ever an odd number itself?", "yesno", "no", None, None),
        ("q06", "How many minutes are there in one full hour on a clock?", "numeric", "60", None, "noise.png"),
        ("q07", "How many days are there in a common calendar year, not a leap year?", "numeric", "365", None, None),
        ("q08", "Name the largest planet orbiting our sun by volume and mass.", "open", "Jupiter", None, "step.png"),
        ("q09", "Name the ocean lying between the Americas and Europe plus Africa.", "open", "Atlantic", None, None),
    ]
    with open(root / "seed_corpus.jsonl", "w", encoding="utf-8") as fh:
        for qid, text, fmt, answer, choices, image in questions:
            row = {"id": qid, "question": text, "format": fmt, "answer": answer}
            if choices:
                row["choices"] = choices
            if image:
                row["image"] = image
            fh.write(json.dumps(row) + "\n")

    heldout = [
        ("h00", "Which option names the planet known for its prominent ring system?", "mcqa", "B", ["Mars", "Saturn", "Venus", "Mercury"]),
        ("h01", "Is the freezing point of water at sea level zero degrees Celsius?", "yesno", "yes", None),
        ("h02", "How many sides does a triangle have in plane geometry?", "numeric", "3", None),
        ("h03", "Name the gas plants absorb from the air for photosynthesis.", "open", "carbon dioxide", None),
        ("h04", "Which option equals one dozen items counted exactly?", "mcqa", "A", ["twelve", "ten", "twenty", "six"]),
    ]
    with open(root / "heldout.jsonl", "w", encoding="utf-8") as fh:
        for qid, text, fmt, answer, choices in heldout:
            row = {"id": qid, "question": text, "format": fmt, "answer": answer}
            if choices:
                row["choices"] = choices
            fh.write(json.dumps(row) + "\n")

    scripts: dict[str, str] = {}
    for qid, _, fmt, answer, _, _ in questions:
        if qid == "q01":
            scripts["q01/SA"] = "the question counts the sides of a regular hexagon shape"
            scripts["q01/SA RR"] = "a hexagon by definition carries exactly six sides so option three fits"
            scripts["q01/SA RR OA"] = "Answer: C"
            scripts["q01/OA"] = "Answer: A"  # wrong everywhere else
        elif qid == "q07":
            scripts["q07/OA"] = "Answer: 900"  # never correct
        else:
            scripts[f"{qid}/OA"] = f"Answer: {answer}"
    for qid, _, fmt, answer, _ in heldout:
        scripts[f"{qid}/OA"] = f"Answer: {answer}"
        scripts[f"{qid}/direct"] = f"Answer: {answer}"
    with open(root / "scripts.json", "w", encoding="utf-8") as fh:
        json.dump(scripts, fh, sort_keys=True)

    return DemoPipeline(
        root=root,
        dataset=root / "seed_corpus.jsonl",
        heldout=root / "heldout.jsonl",
        scripts=root / "scripts.json",
    )


@pytest.fixture()
def demo_pipeline(tmp_path):
    return build_demo_pipeline(tmp_path / "demo")


def run_cli_pipeline(demo: DemoPipeline, out: Path, k: int = 5) -> dict[str, Path]:
    """Feature extraction through eval against the demo corpus; returns output paths."""
    from reasonpath.cli import main

    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "features": out / "features.jsonl",
        "stats": out / "stats.json",
        "seeds": out / "seeds.json",
        "pca": out / "seeds_pca.csv",
        "figure": out / "seeds_pca.png",
        "library": out / "library.jsonl",
        "report": out / "library_report.json",
        "transcripts": out / "transcripts.jsonl",
        "metrics": out / "metrics.json",
    }
    scripts = str(demo.scripts)
    assert main(["--scripts", scripts, "extract-features", str(demo.dataset),
                 "-o", str(paths["features"]), "--stats", str(paths["stats"])]) == 0
    assert main(["--scripts", scripts, "--k", str(k), "sample-seeds", str(paths["features"]),
                 "-o", str(paths["seeds"]), "--pca-csv", str(paths["pca"]),
                 "--figure-path", str(paths["figure"])]) == 0
    assert main(["--scripts", scripts, "build-library", str(demo.dataset),
                 "--seeds", str(paths["seeds"]), "--stats", str(paths["stats"]),
                 "-o", str(paths["library"]), "--report", str(paths["report"])]) == 0
    assert main(["--scripts", scripts, "infer", str(demo.heldout),
                 "--library", str(paths["library"]), "-o", str(paths["transcripts"])]) == 0
    assert main(["--scripts", scripts, "eval", str(paths["transcripts"]), str(demo.heldout),
                 "-o", str(paths["metrics"])]) == 0
    return paths


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests.append({"path": self.path, "body": body,
                                     "headers": dict(self.headers)})
        script = self.server.script
        status, payload = script(self.path, body, len(self.server.requests))
        data = json.dumps(payload).encode("utf-8") if not isinstance(payload, bytes) else payload
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class StubServer:
    """Local chat-completions stub that records every request body."""

    def __init__(self, script=None):
        def default_script(path, body, count):
            if path.endswith("/embeddings"):
                return 200, {"data": [{"embedding": [0.25, 0.5, 0.25, 0.75]}]}
            return 200, {"choices": [{"message": {"content": "stub reply text"}}]}

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self._server.requests = []
        self._server.script = script or default_script
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def requests(self):
        return self._server.requests

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
        return False


@pytest.fixture()
def stub_server():
    with StubServer() as server:
        yield server
