import pickle
from collections import Counter

import numpy as np
import pytest

from conftest import CUMMAX_PROGRAM, DETOUR_PROGRAM
from core import DslTypeError, ExecFailure, ParseError, RangeViolation
from list_dsl import (LAMBDAS, OPERATIONS, ListExpr, Statement, eval_list_expr, eval_list_program,
	parse_list_program, parse_list_statement, update_list_task)


def run(token, *args):
	env, names = {}, []
	for j, a in enumerate(args):
		if isinstance(a, str):
			names.append(LAMBDAS[a])
		else:
			env['v%d' % j] = tuple(a) if isinstance(a, list) else a
			names.append('v%d' % j)
	return eval_list_expr(ListExpr(OPERATIONS[token], tuple(names)), env)


def test_higher_order_steps():
	assert run('Scanl1', '(max)', [-2, -25, 1]) == (-2, -2, 1)
	assert run('Scanl1', '(-)', [-25, -2, 1]) == (-25, -23, -24)
	assert run('Zip', '(min)', [-2, -25, 1], [-25, -2, 22]) == (-25, -25, 1)
	assert run('Sort', [-2, -25, 1]) == (-25, -2, 1)
	assert run('Map', '(/2)', [-3, 3]) == (-1, 1)
	assert run('Filter', '(%2==1)', [-3, 2, 5]) == (-3, 5)
	assert run('Count', '(<0)', [-3, 2, -5]) == 2


def test_first_order_steps():
	assert run('Head', [4, 5]) == 4
	assert run('Last', [4, 5]) == 5
	assert run('Access', 1, [4, 5]) == 5
	assert run('Take', 9, [4, 5]) == (4, 5)
	assert run('Drop', 1, [4, 5]) == (5,)
	assert run('Sum', []) == 0
	assert run('Reverse', [1, 2, 3]) == (3, 2, 1)
	assert run('Zip', '(+)', [1, 2, 3], [10, 20]) == (11, 22)


def test_step_failures():
	with pytest.raises(ExecFailure):
		run('Head', [])
	with pytest.raises(ExecFailure):
		run('Access', 5, [1, 2])
	with pytest.raises(RangeViolation):
		run('Map', '(**2)', [30])
	with pytest.raises(DslTypeError):
		run('Sort', 3)


def test_cumulative_maximum(cummax_program):
	output, env = eval_list_program(cummax_program, {'x0': 1, 'x1': (-2, -25, 1)})
	assert output == (-2, -2, 1)
	assert env['x2'] == (-2, -2, 1)
	assert str(cummax_program) == CUMMAX_PROGRAM


def test_detour_replays():
	program = parse_list_program(DETOUR_PROGRAM)
	_, env = eval_list_program(program, {'x0': 1, 'x1': (-2, -25, 1)})
	assert env['x2'] == (-25, -2, 1)
	assert env['x3'] == (-25, -23, -24)
	assert env['x4'] == (-25, -2, 22)
	assert env['x5'] == (-25, -25, 1)
	assert env['x6'] == (-2, -25, 1)
	assert env['x7'] == (-2, -2, 1)
	output, _ = eval_list_program(program, {'x0': 2, 'x1': (-28, -15)})
	assert output == (-28, -15)


def test_program_errors_carry_statement():
	program = parse_list_program('x0 = INPUT | x1 = Sort x0 | x2 = Head x1')
	with pytest.raises(ExecFailure) as e:
		eval_list_program(program, {'x0': ()})
	assert 'statement 1' in e.value.detail


def test_update_binds_next_variable(cummax_spec):
	updated = update_list_task(cummax_spec, [(-25, -2, 1), (-28, -15)])
	assert list(updated.examples[0].inputs) == ['x0', 'x1', 'x2']
	assert updated.examples[0].inputs['x2'] == (-25, -2, 1)
	assert updated.outputs == cummax_spec.outputs
	with pytest.raises(DslTypeError):
		update_list_task(cummax_spec, [(1,)])


def test_parse_forms():
	st = parse_list_statement('x2 = Zip (min) x1 x1', ['x0', 'x1'])
	assert st == Statement('x2', ListExpr(OPERATIONS['Zip'], (LAMBDAS['(min)'], 'x1', 'x1')))
	assert parse_list_statement('x2 = Zip((min), x1, x1)', ['x0', 'x1']) == st
	assert parse_list_statement('x2 = Map (* ( -1 )) x1', ['x0', 'x1']).expr.args[0] is LAMBDAS['(*(-1))']


@pytest.mark.parametrize('text', [
	'x0 = INPUT | x2 = Sort x0',
	'x0 = INPUT | x1 = Sort x5',
	'x0 = INPUT | x1 = Map (max) x0',
	'x0 = INPUT | x1 = Zip (+) x0',
	'x0 = INPUT | x1 = Sort x0 | x2 = INPUT',
	'x0 = INPUT',
	'x0 = INPUT | x1 = Frobnicate x0',
])
def test_parse_errors(text):
	with pytest.raises(ParseError):
		parse_list_program(text)


def test_statement_target_must_be_next():
	with pytest.raises(ParseError):
		parse_list_statement('x3 = Sort x1', ['x0', 'x1'])


def test_lambdas_pickle_by_token():
	expr = parse_list_statement('x1 = Scanl1 (max) x0', ['x0'])
	assert pickle.loads(pickle.dumps(expr)) == expr


def random_lists(count, seed, longest=12):
	# elements and lengths keep every sum and difference inside the value bounds
	rng = np.random.default_rng(seed)
	for _ in range(count):
		yield [int(x) for x in rng.integers(-20, 21, size=int(rng.integers(1, longest + 1)))]


COMBINERS = ('(+)', '(-)', '(min)', '(max)')
PREDICATES = ('(>0)', '(<0)', '(%2==0)', '(%2==1)')


def test_scanl1_properties():
	for l in random_lists(200, 1):
		for combiner in COMBINERS:
			f = LAMBDAS[combiner].func
			out = run('Scanl1', combiner, l)
			assert len(out) == len(l)
			assert out[0] == l[0]
			assert all(out[i] == f(out[i - 1], l[i]) for i in range(1, len(l)))
		running_max = run('Scanl1', '(max)', l)
		assert list(running_max) == sorted(running_max)
		assert running_max[-1] == max(l)
		running_min = run('Scanl1', '(min)', l)
		assert list(running_min) == sorted(running_min, reverse=True)


def test_zip_properties():
	lists = list(random_lists(200, 2))
	for a, b in zip(lists, lists[1:]):
		for combiner in COMBINERS:
			out = run('Zip', combiner, a, b)
			assert len(out) == min(len(a), len(b))
			assert all(z == LAMBDAS[combiner].func(x, y) for z, x, y in zip(out, a, b))
		assert run('Zip', '(min)', a, b) == run('Zip', '(min)', b, a)
		assert run('Zip', '(max)', a, b) == run('Zip', '(max)', b, a)


def test_filter_properties():
	for l in random_lists(200, 3):
		for predicate in PREDICATES:
			keep = LAMBDAS[predicate].func
			out = run('Filter', predicate, l)
			assert all(keep(x) for x in out)
			assert len(out) == run('Count', predicate, l)
			# an order-preserving subsequence
			rest = iter(l)
			assert all(any(x == y for y in rest) for x in out)
			assert run('Filter', predicate, out) == out


def test_sort_properties():
	for l in random_lists(200, 4):
		out = run('Sort', l)
		assert len(out) == len(l)
		assert all(x <= y for x, y in zip(out, out[1:]))
		assert Counter(out) == Counter(l)
		assert run('Sort', out) == out
		assert run('Sort', run('Reverse', l)) == out
