import numpy as np
import pytest

from confsphere.errors import ParseError
from confsphere.expr import LinearPhi, parse_phi


@pytest.mark.parametrize(
    "text, const, coef",
    [
        ("0", 0, (0, 0, 0)),
        ("0.3*z", 0, (0, 0, 0.3)),
        ("0.2*x + 0.1*z", 0, (0.2, 0, 0.1)),
        ("-x", 0, (-1, 0, 0)),
        ("1 - 2*(x - y)", 1, (-2, 2, 0)),
        ("z*0.5", 0, (0, 0, 0.5)),
        ("2*3*y", 0, (0, 6, 0)),
        (".5e-1 + 1e1*x", 0.05, (10, 0, 0)),
    ],
)
def test_parse(text, const, coef):
    phi = parse_phi(text)
    assert phi.const == pytest.approx(const)
    np.testing.assert_allclose(phi.coef, coef)


@pytest.mark.parametrize("text", ["", "x*y", "x +", "(x", "sin(x)", "2 ^ x", "x y"])
def test_rejects(text):
    with pytest.raises(ParseError):
        parse_phi(text)


def test_evaluate_and_amplitude():
    phi = LinearPhi(0.1, (0.0, 0.3, 0.4))
    np.testing.assert_allclose(phi(np.array([[0, 1, 0], [0, 0, -1]])), [0.4, -0.3])
    assert phi.amplitude == pytest.approx(0.6)
    assert parse_phi(str(parse_phi("0.2*x + 0.1*z"))) == parse_phi("0.2*x + 0.1*z")
