import numpy as np
import pytest

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


def tuple_text(name: str, box, t) -> str:
    x1, y1, x2, y2 = box
    return f"<obj>{name}</obj><box>[{x1}, {y1}, {x2}, {y2}]</box>at<t>{t}</t>s"


def trace_text(think: str = "", answer: str = "A") -> str:
    return f"<think>{think}</think><answer>{answer}</answer>"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture
def flat_frame() -> np.ndarray:
    return np.full((60, 80, 3), 200, dtype=np.uint8)
