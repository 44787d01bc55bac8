"""
List-manipulation DSL: typed operations over integers and integer lists,
programs as assignment statements over consecutively numbered variables.
"""
import functools
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Tuple, Union

import pyparsing as pp

from core import (Domain, DslTypeError, ExecFailure, ParseError, SynthError,
	check_value, variant)

logger = logging.getLogger(__name__)


def _div(x, d):
	# truncates toward zero
	q = abs(x) // d
	return q if x >= 0 else -q


@dataclass(frozen=True)
class Lambda:
	token: str
	kind: str
	func: Callable = field(compare=False, repr=False)

	def __reduce__(self):
		return (_lambda, (self.token,))


LAMBDAS = {lam.token: lam for lam in (
	Lambda('(+1)', 'map', lambda x: x + 1),
	Lambda('(-1)', 'map', lambda x: x - 1),
	Lambda('(*2)', 'map', lambda x: x * 2),
	Lambda('(/2)', 'map', lambda x: _div(x, 2)),
	Lambda('(*(-1))', 'map', lambda x: -x),
	Lambda('(**2)', 'map', lambda x: x * x),
	Lambda('(*3)', 'map', lambda x: x * 3),
	Lambda('(/3)', 'map', lambda x: _div(x, 3)),
	Lambda('(*4)', 'map', lambda x: x * 4),
	Lambda('(/4)', 'map', lambda x: _div(x, 4)),
	Lambda('(>0)', 'predicate', lambda x: x > 0),
	Lambda('(<0)', 'predicate', lambda x: x < 0),
	Lambda('(%2==0)', 'predicate', lambda x: x % 2 == 0),
	Lambda('(%2==1)', 'predicate', lambda x: x % 2 == 1),
	Lambda('(+)', 'combine', lambda x, y: x + y),
	Lambda('(-)', 'combine', lambda x, y: x - y),
	Lambda('(*)', 'combine', lambda x, y: x * y),
	Lambda('(min)', 'combine', min),
	Lambda('(max)', 'combine', max),
)}


def _nonempty(name, l):
	if not l:
		raise ExecFailure('%s of an empty list' % name)
	return l


def _access(n, l):
	if not 0 <= n < len(l):
		raise ExecFailure('Access %d out of bounds for length %d' % (n, len(l)))
	return l[n]


def _clamp(n, l):
	return max(0, min(n, len(l)))


def _scanl1(f, l):
	return tuple(itertools.accumulate(_nonempty('Scanl1', l), f))


@dataclass(frozen=True)
class Operation:
	token: str
	signature: Tuple[str, ...]
	func: Callable = field(compare=False, repr=False)

	def __reduce__(self):
		return (_operation, (self.token,))

	@property
	def higher_order(self):
		return self.signature[0] in ('map', 'predicate', 'combine')


OPERATIONS = {op.token: op for op in (
	Operation('Head', ('list',), lambda l: _nonempty('Head', l)[0]),
	Operation('Last', ('list',), lambda l: _nonempty('Last', l)[-1]),
	Operation('Access', ('int', 'list'), _access),
	Operation('Minimum', ('list',), lambda l: min(_nonempty('Minimum', l))),
	Operation('Maximum', ('list',), lambda l: max(_nonempty('Maximum', l))),
	Operation('Sum', ('list',), sum),
	Operation('Take', ('int', 'list'), lambda n, l: l[:_clamp(n, l)]),
	Operation('Drop', ('int', 'list'), lambda n, l: l[_clamp(n, l):]),
	Operation('Reverse', ('list',), lambda l: l[::-1]),
	Operation('Sort', ('list',), lambda l: tuple(sorted(l))),
	Operation('Map', ('map', 'list'), lambda f, l: tuple(f(x) for x in l)),
	Operation('Filter', ('predicate', 'list'), lambda p, l: tuple(x for x in l if p(x))),
	Operation('Count', ('predicate', 'list'), lambda p, l: sum(1 for x in l if p(x))),
	Operation('Zip', ('combine', 'list', 'list'), lambda f, a, b: tuple(f(x, y) for x, y in zip(a, b))),
	Operation('Scanl1', ('combine', 'list'), _scanl1),
)}


# workers rebuild lambdas and operations by token
def _lambda(token):
	return LAMBDAS[token]


def _operation(token):
	return OPERATIONS[token]


FIRST_ORDER = tuple(tok for tok, op in OPERATIONS.items() if not op.higher_order)
HIGHER_ORDER = tuple(tok for tok, op in OPERATIONS.items() if op.higher_order)

_KIND = {'int': 'Int', 'list': 'IntList'}


def var_name(j):
	return 'x%d' % j


@dataclass(frozen=True)
class ListExpr:
	op: Operation
	args: Tuple[Union[Lambda, str], ...]

	@property
	def size(self):
		return 1 + len(self.args)

	@property
	def variables(self):
		return tuple(a for a in self.args if isinstance(a, str))

	def render(self):
		return ' '.join([self.op.token] + [a.token if isinstance(a, Lambda) else a for a in self.args])


@dataclass(frozen=True)
class Statement:
	target: str
	expr: ListExpr

	@property
	def size(self):
		return self.expr.size

	def render(self):
		return '%s = %s' % (self.target, self.expr.render())

	def __str__(self):
		return self.render()


@dataclass(frozen=True)
class ListProgram:
	inputs: Tuple[str, ...]
	statements: Tuple[Statement, ...]

	def __post_init__(self):
		object.__setattr__(self, 'inputs', tuple(self.inputs))
		object.__setattr__(self, 'statements', tuple(self.statements))
		_check_names(self.inputs, self.statements)

	def __len__(self):
		return len(self.statements)

	def __str__(self):
		return render_list_program(self)


def _check_expr(expr, bound, where):
	op = expr.op
	if len(expr.args) != len(op.signature):
		raise ParseError('%s: %s takes %d arguments, got %d' % (where, op.token, len(op.signature), len(expr.args)))
	for kind, arg in zip(op.signature, expr.args):
		if kind in _KIND:
			if not isinstance(arg, str):
				raise ParseError('%s: %s expects a variable, got %s' % (where, op.token, arg.token))
			if arg not in bound:
				raise ParseError('%s: unbound variable %s' % (where, arg))
		elif not isinstance(arg, Lambda) or arg.kind != kind:
			raise ParseError('%s: %s expects a %s lambda' % (where, op.token, kind))


def _check_names(inputs, statements):
	if not statements:
		raise ParseError('a program needs at least one statement')
	if list(inputs) != [var_name(j) for j in range(len(inputs))]:
		raise ParseError('inputs must be x0, x1, ... in order, got %s' % list(inputs))
	bound = set(inputs)
	for j, st in enumerate(statements):
		expected = var_name(len(inputs) + j)
		if st.target != expected:
			raise ParseError('statement %d: target must be %s, got %s' % (j, expected, st.target))
		_check_expr(st.expr, bound, 'statement %d' % j)
		bound.add(st.target)


def eval_list_expr(expr, env):
	values = []
	for kind, arg in zip(expr.op.signature, expr.args):
		if kind in _KIND:
			if arg not in env:
				raise DslTypeError('unbound variable %s' % arg)
			value = env[arg]
			if variant(value) != _KIND[kind]:
				raise DslTypeError('%s expects %s for %s, got %r' % (expr.op.token, _KIND[kind], arg, value))
			values.append(value)
		else:
			values.append(arg.func)
	return check_value(expr.op.func(*values))


def eval_list_program(p, inputs):
	"""
	Runs every statement in order. Returns (output, env) where env holds
	all bindings, inputs included
	"""
	if sorted(inputs) != sorted(p.inputs):
		raise DslTypeError('program declares %s, got inputs %s' % (list(p.inputs), sorted(inputs)))
	env = dict(inputs)
	for j, st in enumerate(p.statements):
		try:
			env[st.target] = eval_list_expr(st.expr, env)
		except SynthError as e:
			raise type(e)('statement %d (%s): %s' % (j, st.render(), e.detail)) from None
	return env[p.statements[-1].target], env


def update_list_task(spec, executed, step_index=None):
	"""
	Binds the executed values to the next fresh variable; targets are unchanged
	"""
	if spec.domain is not Domain.LIST:
		raise DslTypeError('update_list_task needs a list spec')
	if len(executed) != len(spec.examples):
		raise DslTypeError('expected %d outputs, got %d' % (len(spec.examples), len(executed)))
	name = var_name(len(spec.examples[0].inputs))
	examples = []
	for ex, value in zip(spec.examples, executed):
		inputs = dict(ex.inputs)
		inputs[name] = check_value(value)
		examples.append(type(ex)(inputs, ex.output))
	if step_index is not None:
		logger.debug('step %d binds %s', step_index, name)
	return type(spec)(spec.domain, tuple(examples))


def render_list_program(p):
	lines = ['%s = INPUT' % name for name in p.inputs]
	lines.extend(st.render() for st in p.statements)
	return ' | '.join(lines)


@functools.lru_cache(maxsize=None)
def _grammar():
	lpar, rpar, comma = map(pp.Suppress, '(),')
	var = pp.Regex(r'x\d+\b')
	lam = pp.Regex(r'\((?:[^()]|\([^()]*\))*\)').set_parse_action(lambda t: ''.join(t[0].split()))
	lam.add_condition(lambda t: t[0] in LAMBDAS, message='unknown lambda', fatal=True)
	lam.add_parse_action(lambda t: LAMBDAS[t[0]])
	op = pp.MatchFirst([pp.Keyword(tok) for tok in OPERATIONS])
	arg = lam | var
	paren_args = lpar + pp.Optional(arg + pp.ZeroOrMore(comma + arg)) + rpar
	call = pp.Group(op + (paren_args | pp.ZeroOrMore(arg)))
	line = pp.Group(var + pp.Suppress('=') + (pp.Keyword('INPUT') | call))
	return line, line + pp.ZeroOrMore(pp.Suppress('|') + line)


def _parse(element, text):
	try:
		return element.parse_string(text, parse_all=True)
	except pp.ParseBaseException as e:
		raise ParseError('%s (at column %d)' % (e.msg, e.col), position=e.loc, expected=e.msg) from None


def _expr(call):
	return ListExpr(OPERATIONS[call[0]], tuple(call[1:]))


def parse_list_program(text):
	_, program = _grammar()
	inputs, statements = [], []
	for line in _parse(program, text):
		target, rhs = line[0], line[1]
		if isinstance(rhs, str):
			if statements:
				raise ParseError('input %s declared after a statement' % target)
			inputs.append(target)
		else:
			statements.append(Statement(target, _expr(rhs)))
	return ListProgram(tuple(inputs), tuple(statements))


def parse_list_statement(text, bound):
	"""
	Parses one statement in the context of the bound variable names;
	the target must be the next fresh variable
	"""
	line, _ = _grammar()
	parsed = _parse(line, text)[0]
	if isinstance(parsed[1], str):
		raise ParseError('expected a statement, got an input declaration')
	st = Statement(parsed[0], _expr(parsed[1]))
	if st.target != var_name(len(bound)):
		raise ParseError('target must be %s, got %s' % (var_name(len(bound)), st.target))
	_check_expr(st.expr, set(bound), 'statement')
	return st
