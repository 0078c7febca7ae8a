"""Expression parser: values, precedence, and error positions."""

import numpy as np
import pytest

from translator_forge.exprlang import ExpressionError, parse_expression

U = np.linspace(-1.1, 0.9, 7)
V = np.linspace(-0.8, 0.8, 7)


def evaluate(src):
    return parse_expression(src)(U, V)


class TestValues:
    cases = [
        ("tanh(u)", lambda u, v: np.tanh(u)),
        ("i*tanh(u)", lambda u, v: 1j * np.tanh(u)),
        ("exp(i*v)", lambda u, v: np.exp(1j * v)),
        ("(u+1)/(u-1) * exp(i*v)", lambda u, v: (u + 1) / (u - 1) * np.exp(1j * v)),
        ("0.5*sin(u*v) - cos(v)^2", lambda u, v: 0.5 * np.sin(u * v) - np.cos(v) ** 2),
        ("ln(cosh(2*u))", lambda u, v: np.log(np.cosh(2 * u))),
        ("atan(tan(0.3*u))", lambda u, v: np.arctan(np.tan(0.3 * u))),
        ("sinh(u) + 2", lambda u, v: np.sinh(u) + 2),
        ("-u^2", lambda u, v: -(u ** 2)),
        ("2^-3 + u*0", lambda u, v: 0.125 + 0 * u),
        ("u**2**3", lambda u, v: u ** 8.0),
        ("1e2*u + 2.5e-1", lambda u, v: 100 * u + 0.25),
    ]

    @pytest.mark.parametrize("src,ref", cases, ids=[c[0] for c in cases])
    def test_matches_reference(self, src, ref):
        # evaluation happens on complex arrays, so transcendentals may
        # differ from the real-axis reference in the last ulp
        want = np.asarray(ref(U, V), dtype=complex)
        scale = np.maximum(1.0, np.abs(want))
        assert (np.abs(evaluate(src) - want) / scale).max() < 1e-14

    def test_power_is_right_associative(self):
        assert evaluate("2^3^2")[0] == 512.0

    def test_scalar_source_broadcasts(self):
        vals = parse_expression("0.3")(U, V)
        assert vals.shape == U.shape
        assert np.all(vals == 0.3)

    def test_grid_shapes_pass_through(self):
        uu, vv = np.meshgrid(U, V, indexing="ij")
        assert parse_expression("u - i*v")(uu, vv).shape == uu.shape


class TestErrors:
    positions = [
        ("u +", 3),
        ("sin u", 4),
        ("2 $ 3", 2),
        ("(u+v", 4),
        ("foo(u)", 0),
        ("", 0),
        ("u v", 2),
    ]

    @pytest.mark.parametrize("src,pos", positions, ids=[repr(c[0]) for c in positions])
    def test_position_reported(self, src, pos):
        with pytest.raises(ExpressionError) as err:
            parse_expression(src)
        assert err.value.position == pos

    def test_message_names_unknown_function(self):
        with pytest.raises(ExpressionError, match="foo"):
            parse_expression("foo(u)")
