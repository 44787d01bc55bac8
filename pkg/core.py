"""
Shared vocabulary of both DSLs: values, examples, specifications and errors.

A value is a plain Python object: str (Text), int (Int) or a tuple of ints
(IntList). Everything here is immutable once built.
"""
import enum
import logging
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Tuple, Union

import constants as const

logger = logging.getLogger(__name__)

Value = Union[str, int, Tuple[int, ...]]


class ErrorKind(enum.Enum):
	EXEC_FAILURE = 'ExecFailure'
	TYPE_ERROR = 'TypeError'
	RANGE_VIOLATION = 'RangeViolation'
	NOT_A_PREFIX = 'NotAPrefix'
	BUDGET_EXHAUSTED = 'BudgetExhausted'
	PARSE_ERROR = 'ParseError'
	PROTOCOL_ERROR = 'ProtocolError'


class SynthError(Exception):
	kind = None

	def __init__(self, detail):
		super().__init__(detail)
		self.detail = detail

	def __str__(self):
		return '%s: %s' % (self.kind.value, self.detail)


class ExecFailure(SynthError):
	kind = ErrorKind.EXEC_FAILURE


class DslTypeError(SynthError):
	kind = ErrorKind.TYPE_ERROR


class RangeViolation(SynthError):
	kind = ErrorKind.RANGE_VIOLATION


class NotAPrefix(SynthError):
	kind = ErrorKind.NOT_A_PREFIX


class BudgetExhausted(SynthError):
	kind = ErrorKind.BUDGET_EXHAUSTED


class ProtocolError(SynthError):
	kind = ErrorKind.PROTOCOL_ERROR


class ParseError(SynthError):
	kind = ErrorKind.PARSE_ERROR

	def __init__(self, detail, position=None, expected=None, line=None):
		super().__init__(detail)
		self.position = position
		self.expected = expected
		self.line = line


class Domain(enum.Enum):
	STRING = 'string'
	LIST = 'list'


def variant(value):
	"""
	Returns 'Text', 'Int' or 'IntList'
	"""
	if isinstance(value, str):
		return 'Text'
	if isinstance(value, int) and not isinstance(value, bool):
		return 'Int'
	if isinstance(value, tuple):
		return 'IntList'
	raise DslTypeError('not a value: %r' % (value,))


def check_value(value):
	"""
	Returns value unchanged if it is within bounds, raises RangeViolation otherwise
	"""
	kind = variant(value)
	if kind == 'Text':
		if len(value) > const.MAX_TEXT_LENGTH:
			raise RangeViolation('text of length %d exceeds %d' % (len(value), const.MAX_TEXT_LENGTH))
	elif kind == 'Int':
		if not const.INT_MIN <= value <= const.INT_MAX:
			raise RangeViolation('integer %d outside [%d, %d]' % (value, const.INT_MIN, const.INT_MAX))
	else:
		if len(value) > const.MAX_LIST_LENGTH:
			raise RangeViolation('list of length %d exceeds %d' % (len(value), const.MAX_LIST_LENGTH))
		for x in value:
			if isinstance(x, bool) or not isinstance(x, int):
				raise DslTypeError('integer list holds %r' % (x,))
			if not const.INT_MIN <= x <= const.INT_MAX:
				raise RangeViolation('list element %d outside [%d, %d]' % (x, const.INT_MIN, const.INT_MAX))
	return value


def values_equal(a, b):
	return variant(a) == variant(b) and a == b


@dataclass(frozen=True)
class Example:
	inputs: Mapping[str, Value]
	output: Value

	def __post_init__(self):
		object.__setattr__(self, 'inputs', MappingProxyType(dict(self.inputs)))

	def __hash__(self):
		return hash((frozenset(self.inputs.items()), self.output))

	def __reduce__(self):
		# mappingproxy does not pickle
		return (Example, (dict(self.inputs), self.output))


@dataclass(frozen=True)
class IOSpec:
	domain: Domain
	examples: Tuple[Example, ...]

	def __post_init__(self):
		examples = tuple(self.examples)
		object.__setattr__(self, 'examples', examples)
		if not 1 <= len(examples) <= const.MAX_EXAMPLES:
			raise DslTypeError('a spec holds 1..%d examples, got %d' % (const.MAX_EXAMPLES, len(examples)))
		names = list(examples[0].inputs)
		signature = [variant(examples[0].inputs[n]) for n in names]
		out_kind = variant(examples[0].output)
		for ex in examples:
			if list(ex.inputs) != names:
				raise DslTypeError('examples bind different variables: %s vs %s' % (list(ex.inputs), names))
			if [variant(ex.inputs[n]) for n in names] != signature:
				raise DslTypeError('examples bind different value variants')
			if variant(ex.output) != out_kind:
				raise DslTypeError('examples have outputs of different variants')
			for value in ex.inputs.values():
				check_value(value)
			check_value(ex.output)
		if self.domain is Domain.STRING:
			if names != [const.STRING_INPUT] or signature != ['Text'] or out_kind != 'Text':
				raise DslTypeError('string specs map one text input to a text output')
		else:
			if not names or names != ['x%d' % j for j in range(len(names))]:
				raise DslTypeError('list inputs must be named x0, x1, ... in order, got %s' % names)
			if out_kind == 'Text' or 'Text' in signature:
				raise DslTypeError('list specs hold integers and integer lists only')

	@property
	def outputs(self):
		return tuple(ex.output for ex in self.examples)

	def with_outputs(self, outputs):
		if len(outputs) != len(self.examples):
			raise DslTypeError('expected %d outputs, got %d' % (len(self.examples), len(outputs)))
		return IOSpec(self.domain, tuple(Example(ex.inputs, out) for ex, out in zip(self.examples, outputs)))


def string_spec(pairs):
	"""
	Builds a string-domain spec from (input, output) pairs
	"""
	return IOSpec(Domain.STRING, tuple(Example({const.STRING_INPUT: i}, o) for i, o in pairs))


def list_spec(pairs):
	"""
	Builds a list-domain spec from (inputs, output) pairs; inputs is a sequence
	bound to x0, x1, ... in order. Lists are converted to tuples.
	"""
	def norm(v):
		return tuple(v) if isinstance(v, list) else v
	examples = []
	for inputs, output in pairs:
		bound = {'x%d' % j: norm(v) for j, v in enumerate(inputs)}
		examples.append(Example(bound, norm(output)))
	return IOSpec(Domain.LIST, tuple(examples))
