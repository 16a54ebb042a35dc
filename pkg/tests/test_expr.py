"""Expression grammar, evaluation, and analytic gradients."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akkt.expr import DomainError, Expr, ParseError, parse_expr, unparse
from akkt.tape import eval_grad, eval_value

from _oracles import central_fd_gradient
from _synthetic import random_expr_text, random_point


class TestParsing:
    def test_power_production(self):
        e = parse_expr("x0^2", 1)
        assert e.op == "pow" and e.exponent == 2
        assert e.args[0].op == "var" and e.args[0].index == 0

    def test_sum_of_var_and_scaled_var(self):
        e = parse_expr("x0 + 2*x1", 2)
        assert e.op == "add"
        assert e.args[0] == Expr("var", index=0)
        prod = e.args[1]
        assert prod.op == "mul"
        assert prod.args[0].op == "const" and prod.args[0].value == 2.0
        assert prod.args[1] == Expr("var", index=1)

    def test_variable_index_out_of_range(self):
        with pytest.raises(ParseError):
            parse_expr("x2", 2)

    def test_unknown_function(self):
        with pytest.raises(ParseError):
            parse_expr("tan(x0)", 1)

    def test_syntax_error_carries_position(self):
        with pytest.raises(ParseError) as exc_info:
            parse_expr("x0 + ", 1)
        assert exc_info.value.position >= 0
        assert "position" in str(exc_info.value)

    def test_power_binds_tighter_than_unary_minus(self):
        e = parse_expr("-x0^2", 1)
        assert eval_value(e, [2.0]) == -4.0

    def test_left_associative_subtraction(self):
        assert eval_value(parse_expr("1 - 2 - 3", 1), [0.0]) == -4.0

    def test_parentheses_override_precedence(self):
        assert eval_value(parse_expr("(1 + 2)*3", 1), [0.0]) == 9.0

    def test_roundtrip_catalog_style_expressions(self):
        for text, n in [("x0^2", 1), ("x0 - 1", 1), ("1 - x0", 1),
                        ("-2*x0", 1), ("x0 + x1 - 1", 2),
                        ("exp(x0)*sin(x1)", 2), ("sqrt(x0^2 + 1)", 1)]:
            e = parse_expr(text, n)
            assert parse_expr(unparse(e), n) == e

    @settings(deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_random_expressions(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        e = parse_expr(random_expr_text(rng, n), n)
        assert parse_expr(unparse(e), n) == e


class TestEvaluation:
    def test_square_value_and_gradient(self):
        v, g = eval_grad(parse_expr("x0^2", 1), [3.0])
        assert v == 9.0
        assert np.array_equal(g, [6.0])

    def test_linear_value_and_gradient(self):
        v, g = eval_grad(parse_expr("x0 + 2*x1", 2), [1.0, 1.0])
        assert v == 3.0
        assert np.array_equal(g, [1.0, 2.0])

    def test_product_rule_with_exp(self):
        v, g = eval_grad(parse_expr("exp(x0)*x1", 2), [0.0, 5.0])
        assert v == pytest.approx(5.0, abs=1e-12)
        assert g == pytest.approx([5.0, 1.0], abs=1e-12)

    def test_constant_gradient_exactly_zero(self):
        v, g = eval_grad(parse_expr("3.25", 2), [0.7, -0.3])
        assert v == 3.25
        assert np.all(g == 0.0)

    def test_log_guard(self):
        with pytest.raises(DomainError):
            eval_value(parse_expr("log(x0)", 1), [-1.0])

    def test_sqrt_guard(self):
        with pytest.raises(DomainError):
            eval_value(parse_expr("sqrt(x0)", 1), [-2.0])

    def test_division_by_zero_guard(self):
        with pytest.raises(DomainError):
            eval_value(parse_expr("1/x0", 1), [0.0])

    def test_overflow_is_an_error_not_inf(self):
        with pytest.raises(DomainError):
            eval_value(parse_expr("exp(x0)", 1), [1000.0])

    def test_domain_error_names_the_subexpression(self):
        with pytest.raises(DomainError) as exc_info:
            eval_value(parse_expr("x0 + log(x0 - 2)", 1), [1.0])
        assert "log" in str(exc_info.value)


class TestGradientExactness:
    def test_matches_central_differences_on_100_random_pairs(self):
        rng = np.random.default_rng(20260801)
        for _ in range(100):
            n = int(rng.integers(1, 4))
            e = parse_expr(random_expr_text(rng, n), n)
            x = random_point(rng, n)
            _, grad = eval_grad(e, x)
            fd = central_fd_gradient(e, x)
            scale = max(1.0, float(np.max(np.abs(grad))), float(np.max(np.abs(fd))))
            assert np.max(np.abs(grad - fd)) / scale <= 1e-5
