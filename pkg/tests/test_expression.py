import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vekua import Expression, parse_expression, print_expression
from vekua.errors import ExpressionError
from vekua.expression import evaluate

Z = np.array([0.3 + 0.4j, -0.7 + 0.1j, 0.2 - 0.5j])

REFERENCE = [
    ("1 + 2", lambda z: 3 + 0 * z),
    ("2i", lambda z: 2j + 0 * z),
    ("z", lambda z: z),
    ("zbar", np.conj),
    ("z * zbar", lambda z: np.abs(z) ** 2),
    ("-z^2", lambda z: -(z ** 2)),
    ("2^3^2", lambda z: 512 + 0 * z),
    ("(2^3)^2", lambda z: 64 + 0 * z),
    ("1 - 2 - 3", lambda z: -4 + 0 * z),
    ("8 / 4 / 2", lambda z: 1 + 0 * z),
    ("exp(i*pi)", lambda z: -1 + 0 * z),
    ("log(z)", np.log),
    ("sin(z) + cos(z)", lambda z: np.sin(z) + np.cos(z)),
    ("conj(z^2)", lambda z: np.conj(z) ** 2),
    ("abs(z)", np.abs),
    ("r_1", lambda z: np.abs(z - 0.1)),
    ("theta_1", lambda z: np.mod(np.angle(z - 0.1), 2 * np.pi)),
    ("r_2^0.5 * exp(i*theta_2)", lambda z: np.sqrt(np.abs(z + 0.2)) * np.exp(1j * np.angle(z + 0.2))),
    ("1.5e-1 * z", lambda z: 0.15 * z),
    ("-(-z)", lambda z: z),
]


@pytest.mark.parametrize("source, fn", REFERENCE)
def test_reference_table(source, fn):
    got = Expression(source, points=[0.1, -0.2])(Z)
    assert np.allclose(got, fn(Z), rtol=1e-13, atol=1e-14)


def test_unary_minus_binds_looser_than_power():
    assert print_expression(parse_expression("-2^2")) == "(-(2.0^2.0))"


@pytest.mark.parametrize("source, col", [("z +", 4), ("z $ 1", 3), ("foo(z)", 1), ("(z", 3),
                                         ("z z", 3)])
def test_syntax_errors_carry_position(source, col):
    with pytest.raises(ExpressionError) as exc:
        parse_expression(source)
    assert exc.value.line == 1 and exc.value.column == col


def test_errors_on_later_lines():
    with pytest.raises(ExpressionError) as exc:
        parse_expression("z +\n  * 2")
    assert exc.value.line == 2 and exc.value.column == 3


@pytest.mark.parametrize("source", ["1 / (z - z)", "log(z - z)", "(z - z)^(-1)"])
def test_evaluation_errors(source):
    with pytest.raises(ExpressionError):
        Expression(source)(Z)


def test_theta_only_in_profiles():
    assert np.allclose(Expression("cos(theta)").profile(np.array([0.0, np.pi])), [1, -1])
    with pytest.raises(ExpressionError):
        Expression("theta")(Z)


def test_point_index_out_of_range():
    with pytest.raises(ExpressionError):
        Expression("r_3", points=[0.0])(Z)


_leaf = st.one_of(
    st.sampled_from(["z", "zbar", "i", "pi", "r_1", "theta_1"]),
    st.floats(0.01, 100, allow_nan=False).map(repr),
    st.floats(0.01, 100, allow_nan=False).map(lambda x: repr(x) + "i"),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*/^"), children).map(lambda t: f"({t[0]}{t[1]}{t[2]})"),
        st.tuples(st.sampled_from(["exp", "sin", "cos", "conj", "abs"]), children).map(
            lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda c: f"-{c}"),
    )


@settings(max_examples=200, deadline=None)
@given(st.recursive(_leaf, _extend, max_leaves=12))
def test_print_parse_round_trip(source):
    ast = parse_expression(source)
    text = print_expression(ast)
    assert parse_expression(text) == ast
    assert print_expression(parse_expression(text)) == text


def test_documented_examples():
    assert Expression("conj(z)*z")(np.array([1 + 1j]))[0] == pytest.approx(2)
    z1 = 0.25 - 0.5j
    got = Expression("exp(2i*theta_1)", points=[z1])(np.array([z1 + 0.3j]))[0]
    assert got == pytest.approx(-1, abs=1e-15)
    expr = Expression("1/(z-0.5)")
    with pytest.raises(ExpressionError):
        expr(np.array([0.5 + 0j]))
