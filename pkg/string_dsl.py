"""
String-manipulation DSL: AST, interpreter, canonical text and the
prefix-removal task update.

A program is a concatenation of expressions; each expression is one step.
"""
import enum
import functools
import logging
import re
from dataclasses import dataclass
from typing import Tuple, Union

import pyparsing as pp

import constants as const
from core import Domain, DslTypeError, ExecFailure, NotAPrefix, ParseError, check_value, variant

logger = logging.getLogger(__name__)


class Regex(enum.Enum):
	NUMBER = '[0-9]+'
	WORD = '[A-Za-z]+'
	ALPHANUM = '[A-Za-z0-9]+'
	ALL_CAPS = '[A-Z]+'
	PROPER_CASE = '[A-Z][a-z]+'
	LOWER = '[a-z]+'
	DIGIT = '[0-9]'
	CHAR = '[A-Za-z0-9]'


class Case(enum.Enum):
	ALL_CAPS = 'upper'
	PROPER = 'proper'
	LOWER = 'lower'


class Boundary(enum.Enum):
	START = 0
	END = 1


# a regex argument is a token class or a single delimiter character
RegexArg = Union[Regex, str]
REGEXES = tuple(Regex) + tuple(const.DELIMITERS)

_COMPILED = {r: re.compile(r.value if isinstance(r, Regex) else re.escape(r)) for r in REGEXES}
_WORD_RUN = re.compile('[A-Za-z]+')
_UPPER = str.maketrans('abcdefghijklmnopqrstuvwxyz', 'ABCDEFGHIJKLMNOPQRSTUVWXYZ')
_LOWER = str.maketrans('ABCDEFGHIJKLMNOPQRSTUVWXYZ', 'abcdefghijklmnopqrstuvwxyz')


@functools.lru_cache(maxsize=1 << 16)
def find_matches(r, text):
	"""
	Returns the (start, end) spans of all non-overlapping matches of r in text
	"""
	return tuple(m.span() for m in _COMPILED[r].finditer(text))


def render_regex(r):
	return r.name if isinstance(r, Regex) else quote(r)


def quote(c):
	return "'%s'" % c


def _match(r, i, text):
	spans = find_matches(r, text)
	if 0 < i <= len(spans):
		return spans[i - 1]
	if 0 < -i <= len(spans):
		return spans[i]
	raise ExecFailure('%s has no match %d in %r' % (render_regex(r), i, text))


def _splice(text, spans, c):
	pieces, last = [], 0
	for start, end in spans:
		pieces.append(text[last:start])
		pieces.append(c)
		last = end
	pieces.append(text[last:])
	return ''.join(pieces)


def normalize_position(k, n):
	if k > 0:
		return k - 1
	if k < 0:
		return n + k
	return 0


class StringExpr:
	size = 1

	def run(self, text):
		raise NotImplementedError

	def render(self):
		raise NotImplementedError

	def __str__(self):
		return self.render()


class Substring(StringExpr):
	pass


class Modification(StringExpr):
	pass


@dataclass(frozen=True)
class ConstStr(StringExpr):
	c: str

	def run(self, text):
		return self.c

	def render(self):
		return 'Const(%s)' % quote(self.c)


@dataclass(frozen=True)
class SubStr(Substring):
	k1: int
	k2: int

	def run(self, text):
		n = len(text)
		a, b = normalize_position(self.k1, n), normalize_position(self.k2, n)
		if not 0 <= a <= b < n:
			raise ExecFailure('SubStr(%d, %d) is empty on %r' % (self.k1, self.k2, text))
		return text[a:b + 1]

	def render(self):
		return 'SubStr(%d, %d)' % (self.k1, self.k2)


@dataclass(frozen=True)
class GetSpan(Substring):
	r1: RegexArg
	i1: int
	b1: Boundary
	r2: RegexArg
	i2: int
	b2: Boundary

	def run(self, text):
		p1 = _match(self.r1, self.i1, text)[self.b1.value]
		p2 = _match(self.r2, self.i2, text)[self.b2.value]
		if p1 > p2:
			raise ExecFailure('%s endpoints cross on %r' % (self.render(), text))
		return text[p1:p2]

	def render(self):
		return 'GetSpan(%s, %d, %s, %s, %d, %s)' % (
			render_regex(self.r1), self.i1, self.b1.name,
			render_regex(self.r2), self.i2, self.b2.name)


@dataclass(frozen=True)
class GetUpto(Substring):
	r: RegexArg
	i: int

	def run(self, text):
		return text[:_match(self.r, self.i, text)[1]]

	def render(self):
		return 'GetUpto(%s, %d)' % (render_regex(self.r), self.i)


@dataclass(frozen=True)
class GetFrom(Substring):
	r: RegexArg
	i: int

	def run(self, text):
		return text[_match(self.r, self.i, text)[1]:]

	def render(self):
		return 'GetFrom(%s, %d)' % (render_regex(self.r), self.i)


@dataclass(frozen=True)
class GetToken(Substring):
	r: RegexArg
	i: int

	def run(self, text):
		start, end = _match(self.r, self.i, text)
		return text[start:end]

	def render(self):
		return 'GetToken(%s, %d)' % (render_regex(self.r), self.i)


@dataclass(frozen=True)
class ToCase(Modification):
	case: Case

	def run(self, text):
		if self.case is Case.ALL_CAPS:
			return text.translate(_UPPER)
		if self.case is Case.LOWER:
			return text.translate(_LOWER)
		return _WORD_RUN.sub(lambda m: m.group().capitalize(), text)

	def render(self):
		return 'ToCase(%s)' % self.case.name


@dataclass(frozen=True)
class Replace(Modification):
	c1: str
	c2: str

	def run(self, text):
		return text.replace(self.c1, self.c2)

	def render(self):
		return 'Replace(%s, %s)' % (quote(self.c1), quote(self.c2))


@dataclass(frozen=True)
class Trim(Modification):

	def run(self, text):
		return text.strip(' ')

	def render(self):
		return 'Trim()'


@dataclass(frozen=True)
class GetFirst(Modification):
	r: RegexArg
	i: int

	def run(self, text):
		spans = find_matches(self.r, text)
		if abs(self.i) > len(spans):
			raise ExecFailure('%s has fewer than %d matches in %r' % (render_regex(self.r), abs(self.i), text))
		chosen = spans[:self.i] if self.i > 0 else spans[self.i:]
		return ''.join(text[s:e] for s, e in chosen)

	def render(self):
		return 'GetFirst(%s, %d)' % (render_regex(self.r), self.i)


@dataclass(frozen=True)
class GetAll(Modification):
	r: RegexArg

	def run(self, text):
		return ' '.join(text[s:e] for s, e in find_matches(self.r, text))

	def render(self):
		return 'GetAll(%s)' % render_regex(self.r)


@dataclass(frozen=True)
class Substitute(Modification):
	r: RegexArg
	i: int
	c: str

	def run(self, text):
		start, end = _match(self.r, self.i, text)
		return text[:start] + self.c + text[end:]

	def render(self):
		return 'Substitute(%s, %d, %s)' % (render_regex(self.r), self.i, quote(self.c))


@dataclass(frozen=True)
class SubstituteAll(Modification):
	r: RegexArg
	c: str

	def run(self, text):
		return _splice(text, find_matches(self.r, text), self.c)

	def render(self):
		return 'SubstituteAll(%s, %s)' % (render_regex(self.r), quote(self.c))


@dataclass(frozen=True)
class Remove(Modification):
	r: RegexArg
	i: int

	def run(self, text):
		start, end = _match(self.r, self.i, text)
		return text[:start] + text[end:]

	def render(self):
		return 'Remove(%s, %d)' % (render_regex(self.r), self.i)


@dataclass(frozen=True)
class RemoveAll(Modification):
	r: RegexArg

	def run(self, text):
		return _splice(text, find_matches(self.r, text), '')

	def render(self):
		return 'RemoveAll(%s)' % render_regex(self.r)


@dataclass(frozen=True)
class Compose(StringExpr):
	outer: Modification
	inner: StringExpr

	def __post_init__(self):
		if not isinstance(self.outer, Modification):
			raise DslTypeError('Compose needs a modification outside, got %s' % self.outer.render())
		if not isinstance(self.inner, (Modification, Substring)):
			raise DslTypeError('Compose needs a modification or substring inside, got %s' % self.inner.render())

	@property
	def size(self):
		return 1 + self.outer.size + self.inner.size

	def run(self, text):
		return self.outer.run(self.inner.run(text))

	def render(self):
		return 'Compose(%s, %s)' % (self.outer.render(), self.inner.render())


@dataclass(frozen=True)
class StringProgram:
	exprs: Tuple[StringExpr, ...]

	def __post_init__(self):
		object.__setattr__(self, 'exprs', tuple(self.exprs))
		if not self.exprs:
			raise ParseError('a program needs at least one expression')

	def __len__(self):
		return len(self.exprs)

	def __str__(self):
		return render_string_program(self)


def eval_string_expr(expr, text):
	return expr.run(text)


def eval_string_program(p, text):
	parts = []
	for j, expr in enumerate(p.exprs):
		try:
			parts.append(expr.run(text))
		except ExecFailure as e:
			raise ExecFailure('expression %d (%s): %s' % (j, expr.render(), e.detail)) from None
	return check_value(''.join(parts))


def update_string_task(spec, executed):
	"""
	Removes each executed text from the front of its remaining target
	"""
	if spec.domain is not Domain.STRING:
		raise DslTypeError('update_string_task needs a string spec')
	if len(executed) != len(spec.examples):
		raise DslTypeError('expected %d outputs, got %d' % (len(spec.examples), len(executed)))
	remaining = []
	for j, (ex, done) in enumerate(zip(spec.examples, executed)):
		if variant(done) != 'Text':
			raise DslTypeError('example %d: executed %r is not text' % (j, done))
		if not ex.output.startswith(done):
			raise NotAPrefix('example %d: %r is not a prefix of %r' % (j, done, ex.output))
		remaining.append(ex.output[len(done):])
	return spec.with_outputs(remaining)


def render_string_program(p):
	return ' | '.join(expr.render() for expr in p.exprs)


def render_string_expr(expr):
	return expr.render()


LPAR, RPAR, COMMA = map(pp.Suppress, '(),')


def _call(name, *args):
	expr = pp.Suppress(pp.Keyword(name)) + LPAR
	for j, arg in enumerate(args):
		if j:
			expr = expr + COMMA
		expr = expr + arg
	return expr + RPAR


def _build(node):
	return lambda t: node(*t)


@functools.lru_cache(maxsize=None)
def _grammar():
	char = pp.QuotedString("'").add_condition(
		lambda t: len(t[0]) == 1 and t[0] in const.CHARACTERS,
		message='expected a single DSL character', fatal=True)
	delimiter = pp.QuotedString("'").add_condition(
		lambda t: len(t[0]) == 1 and t[0] in const.DELIMITERS,
		message='expected a delimiter', fatal=True)
	integer = pp.Regex(r'[+-]?\d+').set_parse_action(lambda t: int(t[0]))
	position = integer.copy().add_condition(
		lambda t: abs(t[0]) <= const.MAX_POSITION,
		message='position must be in -100..100', fatal=True)
	index = integer.copy().add_condition(
		lambda t: t[0] in const.INDICES,
		message='index must be in -5..-1 or 1..5', fatal=True)
	token_class = pp.MatchFirst([pp.Keyword(r.name) for r in Regex]).set_parse_action(lambda t: Regex[t[0]])
	regex = token_class | delimiter
	case_names = {'ALL_CAPS': Case.ALL_CAPS, 'PROPER_CASE': Case.PROPER, 'PROPER': Case.PROPER, 'LOWER': Case.LOWER}
	case = pp.MatchFirst([pp.Keyword(name) for name in case_names]).set_parse_action(lambda t: case_names[t[0]])
	boundary = (pp.Keyword('START') | pp.Keyword('END')).set_parse_action(lambda t: Boundary[t[0]])

	substring = pp.MatchFirst([
		_call('SubStr', position, position).set_parse_action(_build(SubStr)),
		_call('GetSpan', regex, index, boundary, regex, index, boundary).set_parse_action(_build(GetSpan)),
		_call('GetUpto', regex, index).set_parse_action(_build(GetUpto)),
		_call('GetFrom', regex, index).set_parse_action(_build(GetFrom)),
		_call('GetToken', regex, index).set_parse_action(_build(GetToken)),
	])
	modification = pp.MatchFirst([
		_call('ToCase', case).set_parse_action(_build(ToCase)),
		_call('Replace', char, char).set_parse_action(_build(Replace)),
		_call('Trim').set_parse_action(lambda t: Trim()),
		_call('GetFirst', regex, index).set_parse_action(_build(GetFirst)),
		_call('GetAll', regex).set_parse_action(_build(GetAll)),
		_call('Substitute', regex, index, char).set_parse_action(_build(Substitute)),
		_call('SubstituteAll', regex, char).set_parse_action(_build(SubstituteAll)),
		_call('Remove', regex, index).set_parse_action(_build(Remove)),
		_call('RemoveAll', regex).set_parse_action(_build(RemoveAll)),
	])
	compose = _call('Compose', modification, modification | substring).set_parse_action(_build(Compose))
	const_str = _call('Const', char).set_parse_action(_build(ConstStr))
	expr = compose | const_str | substring | modification
	return expr + pp.ZeroOrMore(pp.Suppress('|') + expr)


def parse_string_program(text):
	try:
		result = _grammar().parse_string(text, parse_all=True)
	except pp.ParseBaseException as e:
		raise ParseError('%s (at column %d)' % (e.msg, e.col), position=e.loc, expected=e.msg) from None
	return StringProgram(tuple(result))


def parse_string_expr(text):
	"""
	Parses exactly one expression
	"""
	program = parse_string_program(text)
	if len(program) != 1:
		raise ParseError('expected one expression, got %d' % len(program))
	return program.exprs[0]
